//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rilab::norms::NormSpec;
use rilab::{Error, Result};

pub const EXPERIMENTS: [&str; 8] = [
    "flinn_scan",
    "kp",
    "boyd",
    "classify",
    "balance",
    "pvar",
    "lemma53",
    "ap_estimate",
];

const KEYS: [&str; 12] = [
    "experiments",
    "norm",
    "seed",
    "tol",
    "samples",
    "level",
    "level_cap",
    "op",
    "out",
    "p",
    "d",
    "blocks",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiments: Vec<String>,
    pub norm: NormSpec,
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    /// Working level; each experiment documents its own default.
    pub level: Option<u32>,
    pub level_cap: u32,
    /// Elementary operator in text form, for `kp` and `classify`.
    pub op: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub p: Vec<f64>,
    /// A balancing instance, as `d` and `blocks`.
    pub d: Option<Vec<f64>>,
    pub blocks: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiments: Vec::new(),
            norm: NormSpec::reference_lorentz(),
            seed: 0,
            tol: 1e-9,
            samples: 100,
            level: None,
            level_cap: rilab::grid::DEFAULT_LEVEL_CAP,
            op: None,
            out: None,
            p: vec![0.25, 0.5, 0.75, 1.0],
            d: None,
            blocks: None,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad entry {t:?} for {key}")))
        })
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Relative paths are
    /// taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut raw = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim().to_string();
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Parse(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if raw.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: {k} given twice", n + 1)));
            }
        }
        if !raw.contains_key("seed") {
            return Err(Error::Parse("the seed must be given explicitly".into()));
        }
        let mut c = Self::default();
        for (k, v) in &raw {
            match k.as_str() {
                "experiments" => c.experiments = list(k, v)?,
                "norm" => c.norm = v.parse()?,
                "seed" => c.seed = one(k, v)?,
                "tol" => c.tol = one(k, v)?,
                "samples" => c.samples = one(k, v)?,
                "level" => c.level = Some(one(k, v)?),
                "level_cap" => c.level_cap = one(k, v)?,
                "op" => c.op = Some(base.join(v)),
                "out" => c.out = Some(base.join(v)),
                "p" => c.p = list(k, v)?,
                "d" => c.d = Some(list(k, v)?),
                "blocks" => c.blocks = Some(one(k, v)?),
                _ => unreachable!("checked against KEYS"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(Error::InvalidArgument("no experiments listed".into()));
        }
        if let Some(e) = self
            .experiments
            .iter()
            .find(|e| !EXPERIMENTS.contains(&e.as_str()))
        {
            return Err(Error::InvalidArgument(format!("unknown experiment {e:?}")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        Ok(())
    }

    /// The configuration as written, for report headers.
    pub fn to_text(&self) -> String {
        let mut out = format!("experiments = {}\n", self.experiments.join(", "));
        out += &format!(
            "norm = {}\nseed = {}\ntol = {:e}\nsamples = {}\n",
            self.norm, self.seed, self.tol, self.samples
        );
        if let Some(l) = self.level {
            out += &format!("level = {l}\n");
        }
        out += &format!("level_cap = {}\n", self.level_cap);
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        out += &format!("p = {}\n", join(&self.p));
        if let Some(d) = &self.d {
            out += &format!("d = {}\n", join(d));
        }
        if let Some(b) = self.blocks {
            out += &format!("blocks = {b}\n");
        }
        if let Some(op) = &self.op {
            out += &format!("op = {}\n", op.display());
        }
        out
    }
}
