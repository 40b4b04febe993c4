use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use lame_spectra::cli::{self, BoundConfig, Command, EpsilonConfig, Failure, RunConfig, WeylConfig};
use lame_spectra::enclosure::AuxConstants;
use lame_spectra::verify::Suite;
use lame_spectra::{Grid, LameParams};

#[derive(Parser, Debug)]
#[command(name = "lame-spectra", version, about = "Eigenvalue enclosures and spectral checks for perturbed Lamé operators")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV series (report goes to stdout otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel assembly and verify suites.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record a wall-clock timestamp in the report metadata (excluded from the hash).
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Grid as `d=3,n=16,L=6.283` (L defaults to 2π).
    #[arg(long)]
    grid: Option<String>,
    /// Potential as JSON or `family:key=value,...`, e.g. `gaussian_scalar:amplitude=1,width=0.5`.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct BoundArgs {
    /// lebesgue, morrey_campanato or kerman_sawyer
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Morrey–Campanato exponent.
    #[arg(long)]
    p: Option<f64>,
    /// explicit_d3 or configured
    #[arg(long)]
    constant_mode: Option<String>,
    /// Disk constant for configured mode.
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    c_f: Option<f64>,
    #[arg(long)]
    c_ks: Option<f64>,
    #[arg(long)]
    riesz_c: Option<f64>,
    /// Use this norm of V instead of computing it.
    #[arg(long)]
    norm_value: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Norms of a potential.
    Norms {
        #[command(flatten)]
        common: Common,
        /// lp, morrey_campanato, kerman_sawyer, a_p or hardy (repeatable)
        #[arg(long = "norm")]
        norms: Vec<String>,
        #[arg(long)]
        norm_p: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        max_level: Option<u32>,
        #[arg(long)]
        a_p: Option<f64>,
    },
    /// Enclosure disk or absence condition.
    Enclose {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bound: BoundArgs,
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Birman–Schwinger operator norms.
    Bsnorm {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bound: BoundArgs,
        /// Spectral parameter `re,im` (repeatable).
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Embedded point `re,im` for the ε-sequence.
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        #[arg(long, default_value_t = 6)]
        halvings: usize,
    },
    /// Dense spectrum with optional containment check.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bound: BoundArgs,
        #[arg(long)]
        dense_cap: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        inflation: Option<f64>,
    },
    /// Self-check suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suite name or `all` (repeatable, comma-separated allowed).
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Plane-wave eigenfunctions and Weyl-sequence residuals.
    Planewave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        z: Option<f64>,
        /// s or p
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        axis: Option<usize>,
        #[arg(long)]
        polarization: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        /// Largest Weyl scale (1, 2, 4, ...).
        #[arg(long)]
        weyl_n: Option<usize>,
        #[arg(long, default_value_t = 3.5)]
        bump_radius: f64,
    },
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::usage("cli::arguments", msg)
}

fn parse_enum<T: DeserializeOwned>(s: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_value(Value::String(s.to_lowercase())).map_err(|_| usage(format!("unknown {what} '{s}'")))
}

fn parse_number(key: &str, v: &str) -> Result<f64, Failure> {
    v.trim().parse::<f64>().map_err(|_| usage(format!("{key}: '{v}' is not a number")))
}

fn parse_grid(s: &str) -> Result<Grid, Failure> {
    let (mut d, mut n, mut l) = (None, None, 2.0 * PI);
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| usage(format!("grid entry '{part}' is not key=value")))?;
        match k.trim() {
            "d" => d = Some(parse_number("d", v)? as usize),
            "n" => n = Some(parse_number("n", v)? as usize),
            "L" | "l" => l = parse_number("L", v)?,
            other => return Err(usage(format!("unknown grid key '{other}'"))),
        }
    }
    let (d, n) = (d.ok_or_else(|| usage("grid needs d"))?, n.ok_or_else(|| usage("grid needs n"))?);
    Grid::new(d, n, l).map_err(|e| Failure::from_error("field_core::make_grid", e))
}

fn parse_potential(s: &str) -> Result<Value, Failure> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| usage(format!("potential JSON: {e}")));
    }
    let (family, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut map = Map::new();
    map.insert("family".into(), Value::String(family.trim().into()));
    for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| usage(format!("potential entry '{part}' is not key=value")))?;
        let value = match k.trim() {
            "path" => Value::String(v.trim().into()),
            "seed" => Value::from(parse_number(k, v)? as u64),
            _ => Value::from(parse_number(k, v)?),
        };
        map.insert(k.trim().into(), value);
    }
    Ok(Value::Object(map))
}

fn parse_complex(s: &str) -> Result<[f64; 2], Failure> {
    match s.split_once(',') {
        Some((re, im)) => Ok([parse_number("re", re)?, parse_number("im", im)?]),
        None => Ok([parse_number("z", s)?, 0.0]),
    }
}

fn apply_common(cfg: &mut RunConfig, c: &Common) -> Result<(), Failure> {
    if let Some(g) = &c.grid {
        cfg.grid = Some(parse_grid(g)?);
    }
    if let Some(p) = &c.potential {
        cfg.potential = Some(serde_json::from_value(parse_potential(p)?).map_err(|e| usage(format!("potential: {e}")))?);
    }
    if c.lambda.is_some() || c.mu.is_some() {
        let lambda = c.lambda.unwrap_or(cfg.params.lambda());
        let mu = c.mu.unwrap_or(cfg.params.mu());
        cfg.params = LameParams::new(lambda, mu).map_err(|e| Failure::from_error("field_core::LameParams", e))?;
    }
    Ok(())
}

fn apply_bound(cfg: &mut RunConfig, b: &BoundArgs) -> Result<(), Failure> {
    let touched = b.kind.is_some()
        || b.gamma.is_some()
        || b.d.is_some()
        || b.p.is_some()
        || b.constant_mode.is_some()
        || b.constant.is_some()
        || b.c_f.is_some()
        || b.c_ks.is_some()
        || b.riesz_c.is_some()
        || b.norm_value.is_some();
    if !touched {
        return Ok(());
    }
    let mut bound = match (cfg.bound.take(), &b.kind) {
        (Some(existing), _) => existing,
        (None, Some(kind)) => BoundConfig {
            kind: parse_enum(kind, "bound kind")?,
            gamma: b.gamma.ok_or_else(|| usage("--gamma is required with --kind"))?,
            d: None,
            p: None,
            constant_mode: None,
            configured_constant: None,
            aux: AuxConstants::default(),
            norm_value: None,
        },
        (None, None) => return Err(usage("bound flags need --kind (or a bound in the config)")),
    };
    if let Some(k) = &b.kind {
        bound.kind = parse_enum(k, "bound kind")?;
    }
    if let Some(g) = b.gamma {
        bound.gamma = g;
    }
    bound.d = b.d.or(bound.d);
    bound.p = b.p.or(bound.p);
    if let Some(m) = &b.constant_mode {
        bound.constant_mode = Some(parse_enum(m, "constant mode")?);
    }
    bound.configured_constant = b.constant.or(bound.configured_constant);
    bound.aux.c_f = b.c_f.or(bound.aux.c_f);
    bound.aux.c_ks = b.c_ks.or(bound.aux.c_ks);
    bound.aux.riesz_c = b.riesz_c.or(bound.aux.riesz_c);
    bound.norm_value = b.norm_value.or(bound.norm_value);
    cfg.bound = Some(bound);
    Ok(())
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let command = match &cli.command {
        Sub::Norms { .. } => Command::Norms,
        Sub::Enclose { .. } => Command::Enclose,
        Sub::Bsnorm { .. } => Command::Bsnorm,
        Sub::Spectrum { .. } => Command::Spectrum,
        Sub::Verify { .. } => Command::Verify,
        Sub::Planewave { .. } => Command::Planewave,
    };
    let mut cfg = match &cli.config {
        Some(path) => cli::load_config(path)?,
        None => RunConfig::new(command),
    };
    match cfg.command {
        Some(c) if c != command => {
            return Err(usage(format!("config is for '{}' but the '{}' command was given", c.name(), command.name())))
        }
        _ => cfg.command = Some(command),
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.output.timestamp |= cli.timestamp;

    match &cli.command {
        Sub::Norms { common, norms, norm_p, alpha, p1, max_level, a_p } => {
            apply_common(&mut cfg, common)?;
            if !norms.is_empty() {
                cfg.norms.kinds = norms.iter().map(|n| parse_enum(n, "norm")).collect::<Result<_, _>>()?;
            }
            cfg.norms.p = norm_p.or(cfg.norms.p);
            cfg.norms.alpha = alpha.or(cfg.norms.alpha);
            cfg.norms.p1 = p1.or(cfg.norms.p1);
            cfg.norms.max_level = max_level.unwrap_or(cfg.norms.max_level);
            cfg.norms.a_p = a_p.unwrap_or(cfg.norms.a_p);
        }
        Sub::Enclose { common, bound, p1, max_level } => {
            apply_common(&mut cfg, common)?;
            apply_bound(&mut cfg, bound)?;
            cfg.norms.p1 = p1.or(cfg.norms.p1);
            cfg.norms.max_level = max_level.unwrap_or(cfg.norms.max_level);
        }
        Sub::Bsnorm { common, bound, z, tol, max_iter, zeta, eps0, halvings } => {
            apply_common(&mut cfg, common)?;
            apply_bound(&mut cfg, bound)?;
            if !z.is_empty() {
                cfg.bsnorm.z = z.iter().map(|s| parse_complex(s)).collect::<Result<_, _>>()?;
            }
            cfg.bsnorm.tolerance = tol.unwrap_or(cfg.bsnorm.tolerance);
            cfg.bsnorm.max_iter = max_iter.unwrap_or(cfg.bsnorm.max_iter);
            if let Some(zeta) = zeta {
                cfg.bsnorm.epsilon = Some(EpsilonConfig { zeta: parse_complex(zeta)?, epsilon0: *eps0, halvings: *halvings });
            }
        }
        Sub::Spectrum { common, bound, dense_cap, margin, inflation } => {
            apply_common(&mut cfg, common)?;
            apply_bound(&mut cfg, bound)?;
            cfg.spectrum.dense_cap = dense_cap.unwrap_or(cfg.spectrum.dense_cap);
            cfg.spectrum.essential_margin = margin.or(cfg.spectrum.essential_margin);
            cfg.spectrum.inflation = inflation.unwrap_or(cfg.spectrum.inflation);
        }
        Sub::Verify { common, suites } => {
            apply_common(&mut cfg, common)?;
            if !suites.is_empty() {
                let mut all = Vec::new();
                for s in suites.iter().flat_map(|s| s.split(',')) {
                    all.extend(Suite::parse(s.trim()).map_err(|e| usage(e.to_string()))?);
                }
                cfg.verify.suites = all;
            }
        }
        Sub::Planewave { common, z, mode, axis, polarization, count, weyl_n, bump_radius } => {
            apply_common(&mut cfg, common)?;
            cfg.planewave.z = z.or(cfg.planewave.z);
            if let Some(m) = mode {
                cfg.planewave.mode = parse_enum(m, "wave mode")?;
            }
            cfg.planewave.axis = axis.unwrap_or(cfg.planewave.axis);
            cfg.planewave.polarization = polarization.or(cfg.planewave.polarization);
            cfg.planewave.count = count.unwrap_or(cfg.planewave.count);
            if let Some(n) = weyl_n {
                cfg.planewave.weyl = Some(WeylConfig { n_scale: *n, bump_radius: *bump_radius });
            }
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| cli::execute(&cfg));
    match result {
        Ok(outcome) => {
            if outcome.files.is_empty() {
                println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report serializes"));
            } else {
                for m in outcome.report["messages"].as_array().into_iter().flatten() {
                    println!("{}", m.as_str().unwrap_or_default());
                }
                let status = outcome.report["status"].as_str().unwrap_or("failed");
                println!("status: {status}; report hash {}", outcome.report_hash);
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code as u8)
        }
    }
}
