//! Experiment suites: each expands into independent cases that run
//! concurrently and report one record apiece, in case order.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use rilab::atomic::{dyadic_p_variation, kp_experiment, p_variation, AtomicMeasure, KP_TOL};
use rilab::balance::balance_permutation;
use rilab::flinn::{
    estimate_a_p, flinn_defect, min_sign_product, verify_lemma_5_3, DefectOptions, FlinnCandidate,
};
use rilab::grid::{random_dyadic_map, StepFunction};
use rilab::norms::{
    check_property_p, check_property_p_prime, default_t_grid, eval_norm, NormSpec,
    DEFAULT_MARGIN_TOL,
};
use rilab::operators::{
    boyd_indices_estimate, image_norm, lamperti_isometry, random_elementary, symmetric_scales,
    ElementaryOperator, IsometryOptions, IsometryWitness,
};
use rilab::scalar::rational;
use rilab::{Error, Result};

use crate::classify::{classify_isometry, Branch, ClassificationVerdict, IsometryStatus};
use crate::config::ExperimentConfig;
use crate::examples::{lamperti_example, signed_permutation, threefold};

/// What a case reports besides its identity and timing.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: String,
    pub pass: bool,
    pub margin: Option<f64>,
    pub witness: Value,
    pub inputs: Value,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub experiment: String,
    pub case_id: String,
    pub seed: u64,
    pub verdict: String,
    pub pass: bool,
    pub margin: Option<f64>,
    pub witness: Value,
    pub inputs: Value,
    pub details: Value,
}

type CaseFn = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

struct Case {
    experiment: &'static str,
    case_id: String,
    seed: u64,
    run: CaseFn,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub header: Value,
    pub records: Vec<CaseRecord>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn count(&self, experiment: &str, verdict: &str) -> usize {
        self.records
            .iter()
            .filter(|r| r.experiment == experiment && r.verdict == verdict)
            .count()
    }

    /// One JSON object per line, header first.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.header)?;
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r).expect("plain data"))?;
        }
        Ok(())
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Runs every listed experiment. Wall times and clock readings go into the
/// header's `timestamps` field only, so reruns differ nowhere else.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut cases = Vec::new();
    for e in &cfg.experiments {
        cases.extend(match e.as_str() {
            "boyd" => boyd_cases(cfg),
            "classify" => classify_cases(cfg),
            "kp" => kp_cases(cfg)?,
            "flinn_scan" => flinn_cases(cfg),
            "balance" => balance_cases(cfg)?,
            "pvar" => pvar_cases(cfg),
            "lemma53" => lemma53_cases(cfg),
            "ap_estimate" => ap_cases(cfg),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown experiment {other:?}"
                )))
            }
        });
    }
    let started = unix_ms();
    let results: Vec<(CaseRecord, u128)> = cases
        .par_iter()
        .map(|c| {
            let t = Instant::now();
            let outcome = (c.run)().unwrap_or_else(|e| Outcome {
                verdict: "error".into(),
                pass: false,
                margin: None,
                witness: Value::Null,
                inputs: Value::Null,
                details: json!({ "error": e.to_string() }),
            });
            let record = CaseRecord {
                experiment: c.experiment.to_string(),
                case_id: c.case_id.clone(),
                seed: c.seed,
                verdict: outcome.verdict,
                pass: outcome.pass,
                margin: outcome.margin.filter(|m| m.is_finite()),
                witness: outcome.witness,
                inputs: outcome.inputs,
                details: outcome.details,
            };
            (record, t.elapsed().as_millis())
        })
        .collect();
    let elapsed: BTreeMap<&str, u128> = results
        .iter()
        .map(|(r, ms)| (r.case_id.as_str(), *ms))
        .collect();
    let header = json!({
        "report": "rilab suite",
        "config": cfg.to_text(),
        "cases": results.len(),
        "failures": results.iter().filter(|r| !r.0.pass).count(),
        "timestamps": { "started_unix_ms": started, "finished_unix_ms": unix_ms(), "elapsed_ms": elapsed },
    });
    Ok(SuiteReport {
        header,
        records: results.into_iter().map(|r| r.0).collect(),
    })
}

fn case(
    experiment: &'static str,
    id: impl Into<String>,
    seed: u64,
    run: impl Fn() -> Result<Outcome> + Send + Sync + 'static,
) -> Case {
    Case {
        experiment,
        case_id: format!("{experiment}/{}", id.into()),
        seed,
        run: Box::new(run),
    }
}

fn boyd_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let spec = cfg.norm.clone();
    let level = cfg.level.unwrap_or(10);
    let tol = cfg.tol;
    vec![case("boyd", spec.to_string(), cfg.seed, move || {
        let est = boyd_indices_estimate(&spec, &symmetric_scales(4), level, tol)?;
        let details = json!({
            "lower_index": est.lower_index, "upper_index": est.upper_index,
            "slope_large": est.slope_large, "slope_small": est.slope_small, "norms": est.norms,
        });
        let inputs = json!({ "norm": spec.to_string(), "level": level, "scales": "2^±1..4" });
        let Some(p) = spec.lp_exponent() else {
            return Ok(Outcome {
                verdict: "measured".into(),
                pass: true,
                margin: None,
                witness: Value::Null,
                inputs,
                details,
            });
        };
        let err = if p.is_infinite() {
            est.slope_large.abs().max(est.slope_small.abs())
        } else {
            ((est.lower_index - p) / p)
                .abs()
                .max(((est.upper_index - p) / p).abs())
        };
        let pass = err <= 0.02;
        Ok(Outcome {
            verdict: if pass { "match" } else { "mismatch" }.into(),
            pass,
            margin: Some(0.02 - err),
            witness: Value::Null,
            inputs,
            details,
        })
    })]
}

/// Re-evaluates a refuting witness from the operator text alone.
pub fn replay_witness(spec: &NormSpec, op_text: &str, witness: &IsometryWitness) -> Result<f64> {
    let op = ElementaryOperator::<f64>::from_text(op_text)?;
    let f = witness.function()?;
    Ok((image_norm(spec, &op, &f)? - eval_norm(spec, &f)?).abs())
}

fn classification_outcome(
    spec: &NormSpec,
    op_text: String,
    v: ClassificationVerdict,
    tol: f64,
    kind: &str,
) -> Result<Outcome> {
    let mut pass = v.branch != Branch::Inconsistent;
    let mut margin = None;
    let mut replayed = Value::Null;
    if v.is_isometry == IsometryStatus::CertifiedNo {
        match &v.witness {
            Some(w) => {
                let d = replay_witness(spec, &op_text, w)?;
                replayed = json!(d);
                margin = Some(d - tol);
                pass &= d > tol;
            }
            None => replayed = json!("unrepresentable"),
        }
    }
    let verdict = serde_json::to_value(v.branch)
        .expect("enum")
        .as_str()
        .unwrap_or("")
        .to_string();
    Ok(Outcome {
        verdict,
        pass,
        margin,
        witness: serde_json::to_value(&v.witness).expect("plain data"),
        inputs: json!({ "norm": spec.to_string(), "generator": kind, "op": op_text }),
        details: json!({
            "is_isometry": v.is_isometry, "modulus_one": v.modulus_one,
            "measure_preserving": v.measure_preserving, "exact": v.exact,
            "reason": v.reason, "replayed_discrepancy": replayed,
        }),
    })
}

fn classify_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let mut out = Vec::new();
    let spec = cfg.norm.clone();
    let tol = cfg.tol;
    let cap = cfg.level_cap;
    let opts = IsometryOptions {
        tol,
        cap,
        seed: cfg.seed,
        ..IsometryOptions::default()
    };
    // Lamperti generators use the space's own exponent when it has one
    let lp = spec.lp_exponent().filter(|p| p.is_finite()).unwrap_or(2.0);
    if let Some(path) = &cfg.op {
        let (spec, opts, path) = (spec.clone(), opts.clone(), path.clone());
        out.push(case("classify", "op_file", cfg.seed, move || {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let op = ElementaryOperator::<f64>::from_text(&text)?;
            classification_outcome(
                &spec,
                op.to_text(),
                classify_isometry(&spec, &op, &opts),
                tol,
                "file",
            )
        }));
    }
    {
        let (spec, opts) = (spec.clone(), opts.clone());
        out.push(case("classify", "lamperti_example", cfg.seed, move || {
            let op = lamperti_example(2.0);
            classification_outcome(
                &spec,
                op.to_text(),
                classify_isometry(&spec, &op, &opts),
                tol,
                "lamperti_example",
            )
        }));
    }
    for i in 0..cfg.samples as u64 {
        let seed = cfg.seed.wrapping_add(i);
        let (spec, opts) = (
            spec.clone(),
            IsometryOptions {
                seed,
                ..opts.clone()
            },
        );
        out.push(case("classify", format!("{i}"), seed, move || {
            let (kind, op_text, v) = match i % 4 {
                0 => {
                    let op = random_elementary(3, 5, seed)?;
                    (
                        "random_elementary",
                        op.to_text(),
                        classify_isometry(&spec, &op, &opts),
                    )
                }
                1 => {
                    let op = signed_permutation(3, seed);
                    (
                        "signed_permutation",
                        op.to_text(),
                        classify_isometry(&spec, &op, &opts),
                    )
                }
                2 => {
                    let sigma = random_dyadic_map(3, 4, seed)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let signs: Vec<i8> = (0..sigma.pieces().len())
                        .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                        .collect();
                    let op: ElementaryOperator<f64> = lamperti_isometry(lp, &sigma, &signs)?;
                    (
                        "lamperti",
                        op.to_text(),
                        classify_isometry(&spec, &op, &opts),
                    )
                }
                _ => {
                    let op = threefold(&lamperti_example(lp), 2, seed, cap)?;
                    (
                        "threefold",
                        op.to_text(),
                        classify_isometry(&spec, &op, &opts),
                    )
                }
            };
            classification_outcome(&spec, op_text, v, tol, kind)
        }));
    }
    out
}

fn kp_cases(cfg: &ExperimentConfig) -> Result<Vec<Case>> {
    let spec = cfg.norm.clone();
    let (samples, seed, p_list) = (cfg.samples, cfg.seed, cfg.p.clone());
    let mut ops: Vec<(String, ElementaryOperator<f64>)> = Vec::new();
    if let Some(path) = &cfg.op {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        ops.push(("op_file".into(), ElementaryOperator::from_text(&text)?));
    } else {
        ops.push((
            "signed_permutation".into(),
            signed_permutation(2, seed).to_f64(),
        ));
        if let Some(p) = spec.lp_exponent().filter(|p| p.is_finite()) {
            ops.push(("lamperti".into(), lamperti_example(p)));
        }
    }
    Ok(ops
        .into_iter()
        .map(|(name, op)| {
            let (spec, p_list) = (spec.clone(), p_list.clone());
            case("kp", name, seed, move || {
                let r = kp_experiment(&spec, &op, samples, seed, &p_list)?;
                let pass = r.violations == 0;
                Ok(Outcome {
                    verdict: if pass { "bounded" } else { "violated" }.into(),
                    pass,
                    margin: Some(1.0 + KP_TOL - r.max),
                    witness: Value::Null,
                    inputs: json!({ "norm": spec.to_string(), "op": op.to_text(), "samples": samples, "p": p_list }),
                    details: json!({
                        "min": r.min, "max": r.max, "mean": r.mean, "violations": r.violations,
                        "base": r.base, "certified_samples": r.samples.iter().filter(|s| s.certified).count(),
                        "square_function": r.square_function, "modulus_norm": r.modulus_norm,
                    }),
                })
            })
        })
        .collect())
}

fn flinn_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let mut out = Vec::new();
    let seed = cfg.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let elements = [
        ("e11", StepFunction::basis(1, 1).expect("cell")),
        ("one", StepFunction::one()),
        ("random", StepFunction::new(2, random).expect("four cells")),
    ];
    let levels = match cfg.level {
        Some(l) => vec![l],
        None => vec![2, 3],
    };
    for (name, u) in elements {
        for &level in &levels {
            let (spec, u) = (cfg.norm.clone(), u.clone());
            out.push(case(
                "flinn_scan",
                format!("{name}@{level}"),
                seed,
                move || flinn_outcome(&spec, &u, level, seed),
            ));
        }
    }
    out
}

/// The defect record for one element; asserts only what is proven on `L_2`
/// and sign compatibility of certified pairs.
pub fn flinn_outcome(
    spec: &NormSpec,
    u: &StepFunction<f64>,
    level: u32,
    seed: u64,
) -> Result<Outcome> {
    let d = flinn_defect(
        spec,
        u,
        level,
        &DefectOptions {
            seed,
            ..DefectOptions::default()
        },
    )?;
    let verdict = match d.is_flinn(1e-8) {
        Some(true) => "flinn",
        Some(false) => "not_flinn",
        None => "inconclusive",
    };
    let mut pass = true;
    let mut sign = Value::Null;
    if verdict == "flinn" {
        let c = FlinnCandidate::normalized(
            spec.clone(),
            u.refine(level.max(u.level()))?,
            d.best_f.clone(),
        )?;
        let m = min_sign_product(&c);
        sign = json!(m);
        pass &= m >= -1e-10;
    }
    if spec.is_lp(2.0) {
        pass &= d.defect <= 1e-8;
    }
    Ok(Outcome {
        verdict: verdict.into(),
        pass,
        margin: Some(d.defect),
        witness: json!({ "f": d.best_f.values() }),
        inputs: json!({ "norm": spec.to_string(), "u": u.values(), "u_level": u.level(), "level": level }),
        details: json!({
            "defect": d.defect, "lower_bound": d.lower_bound, "exact_value": d.exact_value,
            "iterations": d.iterations, "converged": d.converged, "min_sign_product": sign,
        }),
    })
}

pub fn balance_outcome(d: &[f64], l: usize) -> Result<Outcome> {
    if l == 0 || d.len() % l != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} terms do not split into {l} blocks",
            d.len()
        )));
    }
    let b = balance_permutation(d, l, d.len() / l)?;
    Ok(Outcome {
        verdict: if b.bound_ok { "bounded" } else { "violated" }.into(),
        pass: b.bound_ok,
        margin: Some(d[0] - b.spread),
        witness: Value::Null,
        inputs: json!({ "d": d, "l": l, "m": d.len() / l }),
        details: json!({ "sigma": b.sigma, "blocks": b.blocks, "spread": b.spread, "round_spreads": b.round_spreads }),
    })
}

fn balance_cases(cfg: &ExperimentConfig) -> Result<Vec<Case>> {
    if let Some(d) = &cfg.d {
        let l = cfg
            .blocks
            .ok_or_else(|| Error::InvalidArgument("d needs blocks".into()))?;
        let d = d.clone();
        return Ok(vec![case("balance", "given", cfg.seed, move || {
            balance_outcome(&d, l)
        })]);
    }
    Ok((0..cfg.samples as u64)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            case("balance", format!("{i}"), seed, move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (l, m) = (rng.gen_range(1..=4usize), rng.gen_range(1..=4usize));
                let mut d: Vec<f64> = (0..l * m).map(|_| rng.gen_range(0..100) as f64).collect();
                d.sort_by(|a, b| b.total_cmp(a));
                balance_outcome(&d, l)
            })
        })
        .collect())
}

fn pvar_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let p_list = cfg.p.clone();
    (0..cfg.samples as u64)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let p = p_list[i as usize % p_list.len().max(1)];
            case("pvar", format!("{i}"), seed, move || {
                let mu = random_atomic(seed)?;
                pvar_outcome(&mu, p)
            })
        })
        .collect()
}

/// Up to 8 atoms at distinct points `k/2^10` with weights in `±[0.1, 4)`.
pub fn random_atomic(seed: u64) -> Result<AtomicMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let mut pos: Vec<i64> = Vec::new();
    while pos.len() < n {
        let k = rng.gen_range(0..=1024);
        if !pos.contains(&k) {
            pos.push(k);
        }
    }
    let atoms = pos
        .into_iter()
        .map(|k| {
            let a = rng.gen_range(0.1..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (rational(k, 1024), a)
        })
        .collect();
    AtomicMeasure::new(atoms)
}

pub fn pvar_outcome(mu: &AtomicMeasure, p: f64) -> Result<Outcome> {
    let full = p_variation(mu, p)?;
    let sep = mu
        .separation_level()
        .ok_or_else(|| Error::Degenerate("atoms never separate".into()))?;
    let seq = dyadic_p_variation(mu, p, sep.max(10))?;
    let monotone = seq.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let gap = (seq[sep as usize] - full).abs() / full;
    let pass = monotone && gap <= 1e-12 && seq.iter().all(|v| *v <= full * (1.0 + 1e-12));
    Ok(Outcome {
        verdict: if pass { "equal" } else { "mismatch" }.into(),
        pass,
        margin: Some(-gap),
        witness: Value::Null,
        inputs: json!({ "p": p, "atoms": mu.atoms().iter().map(|(t, a)| (t.to_string(), *a)).collect::<Vec<_>>() }),
        details: json!({ "p_variation": full, "separation_level": sep, "dyadic": seq, "monotone": monotone }),
    })
}

fn lemma53_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let level = cfg.level.unwrap_or(1);
    (1..=1usize << level)
        .map(|j| {
            let (spec, tol) = (cfg.norm.clone(), cfg.tol);
            case("lemma53", format!("N{level}j{j}"), cfg.seed, move || {
                let inputs = json!({ "norm": spec.to_string(), "level": level, "j": j });
                let check = check_property_p(&spec, &default_t_grid(), DEFAULT_MARGIN_TOL)?;
                if !check.holds {
                    return Ok(Outcome {
                        verdict: "no_property_p".into(),
                        pass: true,
                        margin: None,
                        witness: Value::Null,
                        inputs,
                        details: json!({ "worst_t": check.worst_t, "worst_margin": check.worst_margin }),
                    });
                }
                let r = verify_lemma_5_3(&spec, level, j, tol.min(1e-12), 1e-5)?;
                Ok(Outcome {
                    verdict: if !r.pair_exists { "no_pair" } else if r.holds { "unique" } else { "other_pair" }.into(),
                    pass: r.holds,
                    margin: Some(1e-5 - r.max_deviation),
                    witness: json!({ "f": r.best_f.values() }),
                    inputs,
                    details: json!({ "max_deviation": r.max_deviation, "certified": r.certified }),
                })
            })
        })
        .collect()
}

fn ap_cases(cfg: &ExperimentConfig) -> Vec<Case> {
    let n_max = cfg.level.unwrap_or(3);
    let seeds = vec![cfg.seed, cfg.seed.wrapping_add(1)];
    cfg.p
        .iter()
        .map(|&p| {
            let (spec, seeds, tol) = (cfg.norm.clone(), seeds.clone(), cfg.tol);
            case("ap_estimate", format!("p{p}"), cfg.seed, move || {
                let inputs = json!({ "norm": spec.to_string(), "p": p, "n_max": n_max, "seeds": seeds });
                let dual = check_property_p_prime(&spec, &default_t_grid(), DEFAULT_MARGIN_TOL)?;
                if spec.is_lp(2.0) || !dual.holds {
                    return Ok(Outcome {
                        verdict: "precondition_unmet".into(),
                        pass: true,
                        margin: None,
                        witness: Value::Null,
                        inputs,
                        details: json!({ "property_p_prime": dual.holds }),
                    });
                }
                let est = estimate_a_p(&spec, p, n_max, &seeds, tol.max(1e-9))?;
                let levels: Vec<Value> = est
                    .levels
                    .iter()
                    .map(|l| json!({ "level": l.level, "candidates": l.candidates, "flinn": l.flinn_found, "max_ratio": l.max_ratio }))
                    .collect();
                Ok(Outcome {
                    verdict: if est.flat { "flat" } else { "growing" }.into(),
                    pass: est.flat,
                    margin: Some(est.constant),
                    witness: Value::Null,
                    inputs,
                    details: json!({ "constant": est.constant, "levels": levels }),
                })
            })
        })
        .collect()
}
