use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rilab::atomic::AtomicMeasure;
use rilab::flinn::{is_flinn_pair, FlinnCandidate, FlinnVerdict};
use rilab::grid::{parse_rational, StepFunction};
use rilab::norms::{dual_norm, dual_norm_bounds, eval_norm, NormSpec};
use rilab::operators::{ElementaryOperator, IsometryOptions};
use rilab::scalar::Scalar;
use rilab_cli::suite::{balance_outcome, flinn_outcome, pvar_outcome, replay_witness};
use rilab_cli::{classify_isometry, run_suite, ExperimentConfig, IsometryStatus};

#[derive(Parser)]
#[command(
    name = "rilab",
    version,
    about = "Experiments on rearrangement-invariant norms over dyadic step functions"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Norm spec, e.g. "lp 3", "lp inf", "lorentz 2 0.4 0.3 0.2 0.1".
    #[arg(long, global = true, default_value = "lorentz 2 0.4 0.3 0.2 0.1")]
    norm: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "level-cap", global = true, default_value_t = rilab::grid::DEFAULT_LEVEL_CAP)]
    level_cap: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of a step function given by its cell values.
    Norm {
        #[arg(long)]
        f: String,
    },
    /// Köthe dual norm of a step function.
    Dual {
        #[arg(long)]
        g: String,
    },
    #[command(subcommand)]
    Flinn(FlinnCommand),
    /// Block-balancing permutation of a nonincreasing sequence.
    Balance {
        #[arg(long)]
        d: String,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: usize,
    },
    /// p-variation of an atomic measure given as "t:a,t:a,...".
    Pvar {
        #[arg(long)]
        atoms: String,
        #[arg(long)]
        p: f64,
    },
    /// Boyd index estimates from dilation norms.
    Boyd {
        #[arg(long, default_value_t = 10)]
        level: u32,
    },
    /// Kernel functionals along `T V_τ T` for an isometry read from a file.
    Kp {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value = "0.25,0.5,0.75,1")]
        p: String,
    },
    /// Isometry classification of an elementary operator read from a file.
    Classify {
        #[arg(long)]
        op: PathBuf,
    },
    /// Run the experiments named in a flat key = value config.
    Suite { config: PathBuf },
}

#[derive(Subcommand)]
enum FlinnCommand {
    /// Flinn defect of an element.
    Defect {
        #[arg(long)]
        u: String,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Whether `(u, f)` is a Flinn pair; `f` is rescaled so that `∫ f u = 1`.
    Pair {
        #[arg(long)]
        u: String,
        #[arg(long)]
        f: String,
    },
}

enum Failure {
    Usage(String),
    Assertion,
}

impl From<rilab::Error> for Failure {
    fn from(e: rilab::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn step_function(text: &str) -> Result<StepFunction<f64>, Failure> {
    let values = text
        .split(',')
        .map(|t| f64::parse_scalar(t.trim()))
        .collect::<rilab::Result<Vec<_>>>()?;
    Ok(StepFunction::from_values(values)?)
}

fn numbers(text: &str) -> Result<Vec<f64>, Failure> {
    Ok(text
        .split(',')
        .map(|t| f64::parse_scalar(t.trim()))
        .collect::<rilab::Result<Vec<_>>>()?)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn record(out: &Option<PathBuf>, v: Value, pass: bool) -> Result<(), Failure> {
    emit(out, &format!("{v}\n"))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = cli.common;
    let spec: NormSpec = c.norm.parse()?;
    let tol = c.tol;
    match cli.command {
        Command::Norm { f } => {
            let f = step_function(&f)?;
            record(
                &c.out,
                json!({ "norm": spec.to_string(), "f": f.values(), "value": eval_norm(&spec, &f)? }),
                true,
            )
        }
        Command::Dual { g } => {
            let g = step_function(&g)?;
            let b = dual_norm_bounds(&spec, &g, tol)?;
            let value = dual_norm(&spec, &g)?;
            record(
                &c.out,
                json!({ "norm": spec.to_string(), "g": g.values(), "value": value, "bounds": [b.lower, b.upper] }),
                true,
            )
        }
        Command::Flinn(FlinnCommand::Defect { u, level }) => {
            let u = step_function(&u)?;
            let level = level.unwrap_or(u.level().max(spec.base_level()));
            let o = flinn_outcome(&spec, &u, level, c.seed)?;
            let v = json!({
                "defect": o.details["defect"], "lower_bound": o.details["lower_bound"],
                "certified": o.verdict != "inconclusive", "verdict": o.verdict,
                "f": o.witness["f"], "details": o.details,
            });
            record(&c.out, v, o.pass)
        }
        Command::Flinn(FlinnCommand::Pair { u, f }) => {
            let cand =
                FlinnCandidate::normalized(spec.clone(), step_function(&u)?, step_function(&f)?)?;
            let v = match is_flinn_pair(&cand, tol, c.seed)? {
                FlinnVerdict::Flinn { norm } => json!({ "verdict": "flinn", "norm": norm }),
                FlinnVerdict::NotFlinn { lower, witness } => {
                    json!({ "verdict": "not_flinn", "lower": lower, "witness": witness.values() })
                }
                FlinnVerdict::Inconclusive { lower, upper } => {
                    json!({ "verdict": "inconclusive", "lower": lower, "upper": upper })
                }
            };
            record(&c.out, v, true)
        }
        Command::Balance { d, l, m } => {
            let d = numbers(&d)?;
            if d.len() != l * m {
                return Err(Failure::Usage(format!(
                    "{} terms, expected l·m = {}",
                    d.len(),
                    l * m
                )));
            }
            let o = balance_outcome(&d, l)?;
            let v = json!({
                "sigma": o.details["sigma"], "blocks": o.details["blocks"],
                "spread": o.details["spread"], "bound_ok": o.pass,
            });
            record(&c.out, v, o.pass)
        }
        Command::Pvar { atoms, p } => {
            let atoms = atoms
                .split(',')
                .map(|a| {
                    let (t, w) = a
                        .split_once(':')
                        .ok_or_else(|| Failure::Usage(format!("atom {a:?} is not t:a")))?;
                    Ok((parse_rational(t.trim())?, f64::parse_scalar(w.trim())?))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let o = pvar_outcome(&AtomicMeasure::new(atoms)?, p)?;
            record(&c.out, o.details, o.pass)
        }
        Command::Boyd { level } => {
            let cfg = ExperimentConfig {
                experiments: vec!["boyd".into()],
                norm: spec,
                seed: c.seed,
                tol,
                level: Some(level),
                ..ExperimentConfig::default()
            };
            suite_output(&c.out, &cfg, false)
        }
        Command::Kp { op, samples, p } => {
            let cfg = ExperimentConfig {
                experiments: vec!["kp".into()],
                norm: spec,
                seed: c.seed,
                tol,
                samples,
                op: Some(op),
                p: numbers(&p)?,
                level_cap: c.level_cap,
                ..ExperimentConfig::default()
            };
            suite_output(&c.out, &cfg, false)
        }
        Command::Classify { op } => {
            let text = read(&op)?;
            let t = ElementaryOperator::<f64>::from_text(&text)?;
            let opts = IsometryOptions {
                tol,
                cap: c.level_cap,
                seed: c.seed,
                ..IsometryOptions::default()
            };
            let v = classify_isometry(&spec, &t, &opts);
            let replay = match (&v.is_isometry, &v.witness) {
                (IsometryStatus::CertifiedNo, Some(w)) => {
                    Some(replay_witness(&spec, &t.to_text(), w)?)
                }
                _ => None,
            };
            let pass = v.branch != rilab_cli::Branch::Inconsistent;
            let mut out = serde_json::to_value(&v).expect("plain data");
            out["replayed_discrepancy"] = json!(replay);
            record(&c.out, out, pass)
        }
        Command::Suite { config } => {
            let text = read(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let mut cfg = ExperimentConfig::parse(&text, base)?;
            if c.out.is_some() {
                cfg.out = c.out.clone();
            }
            let out = cfg.out.clone();
            suite_output(&out, &cfg, true)
        }
    }
}

fn suite_output(
    out: &Option<PathBuf>,
    cfg: &ExperimentConfig,
    with_header: bool,
) -> Result<(), Failure> {
    let report = run_suite(cfg)?;
    let mut buf = Vec::new();
    if with_header {
        report
            .write_jsonl(&mut buf)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    } else {
        for r in &report.records {
            buf.extend(serde_json::to_string(r).expect("plain data").bytes());
            buf.push(b'\n');
        }
    }
    emit(out, &String::from_utf8(buf).expect("json is utf-8"))?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion) => ExitCode::from(2),
    }
}
