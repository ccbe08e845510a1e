//! Run configuration: a `key = value` text file with `[domain]`,
//! `[source]`, `[network]`, `[training]` and `[paths]` sections. `#` starts
//! a comment. Unknown sections or keys are rejected with their line number.
//!
//! ```text
//! [domain]
//! a = 1
//! b = 1
//! t_max = 6.283185307179586
//! nx = 41
//! nz = 41
//! nt = 41
//! eta = 1.5
//! beta = 2
//! mass_balance = consistent
//! n_max = 200
//! q_max = 200
//!
//! [source]
//! x0 = 0.25
//! z0 = 0.25
//! omega = 1
//! mode = gaussian
//! epsilon = 0.025
//!
//! [network]
//! hidden_layers = 5
//! hidden_units = 40
//! activation = tanh
//!
//! [training]
//! sample_size = 20000
//! batch_size = 5000
//! learning_rate = 0.001
//! epochs = 5000
//! seed = 0
//! adam_beta1 = 0.9
//! adam_beta2 = 0.999
//! adam_eps = 1e-8
//! deterministic = true
//! threads = 0
//! log_every = 100
//!
//! [paths]
//! out_dir = out
//! dataset = out/dataset.csv
//! checkpoint = out/model.ckpt
//! history = out/history.csv
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::GridSize;
use crate::error::{Error, Result};
use crate::oracle::{DomainSpec, SeriesTruncation, SourceSpec};
use crate::residual::NondimParams;
use crate::trainer::TrainingConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            out_dir: PathBuf::from("out"),
            dataset: None,
            checkpoint: None,
            history: None,
        }
    }
}

impl Paths {
    pub fn dataset(&self) -> PathBuf {
        self.dataset
            .clone()
            .unwrap_or_else(|| self.out_dir.join("dataset.csv"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join("model.ckpt"))
    }

    pub fn history(&self) -> PathBuf {
        self.history
            .clone()
            .unwrap_or_else(|| self.out_dir.join("history.csv"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub grid: GridSize,
    pub truncation: SeriesTruncation,
    /// Problem constants; `x0`, `z0`, `omega`, `a`, `b` mirror `source` and
    /// `domain`.
    pub params: NondimParams,
    pub source: SourceSpec,
    pub training: TrainingConfig,
    /// Worker threads for grid evaluation; 0 lets the runtime decide.
    pub threads: usize,
    /// Progress line every this many epochs; 0 disables it.
    pub log_every: usize,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::default(),
            grid: GridSize::cube(41),
            truncation: SeriesTruncation::DATASET,
            params: NondimParams::default(),
            source: SourceSpec::default(),
            training: TrainingConfig::default(),
            threads: 0,
            log_every: 100,
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |msg: String| Error::Config {
                line: Some(lineno),
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["domain", "source", "network", "training", "paths"].contains(&name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("`{key}` appears before any section")))?;
            if !seen.insert(format!("{sec}.{key}")) {
                return Err(err(format!("duplicate key `{key}` in [{sec}]")));
            }
            cfg.set(sec, key, value).map_err(err)?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value `{value}` for `{key}`"))
        }
        fn named<T: FromStr<Err = Error>>(value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|e: Error| e.to_string())
        }
        let t = &mut self.training;
        match (section, key) {
            ("domain", "a") => self.domain.a = num(key, value)?,
            ("domain", "b") => self.domain.b = num(key, value)?,
            ("domain", "t_max") => self.domain.t_max = num(key, value)?,
            ("domain", "nx") => self.grid.nx = num(key, value)?,
            ("domain", "nz") => self.grid.nz = num(key, value)?,
            ("domain", "nt") => self.grid.nt = num(key, value)?,
            ("domain", "eta") => self.params.eta = num(key, value)?,
            ("domain", "beta") => self.params.beta = num(key, value)?,
            ("domain", "mass_balance") => self.params.mass_balance = named(value)?,
            ("domain", "n_max") => self.truncation.n_max = num(key, value)?,
            ("domain", "q_max") => self.truncation.q_max = num(key, value)?,
            ("source", "x0") => self.source.x0 = num(key, value)?,
            ("source", "z0") => self.source.z0 = num(key, value)?,
            ("source", "omega") => self.source.omega = num(key, value)?,
            ("source", "mode") => self.source.mode = named(value)?,
            ("source", "epsilon") => self.source.epsilon = num(key, value)?,
            ("network", "hidden_layers") => t.spec.hidden_layers = num(key, value)?,
            ("network", "hidden_units") => t.spec.hidden_units = num(key, value)?,
            ("network", "activation") => t.spec.activation = named(value)?,
            ("training", "sample_size") => t.sample_size = num(key, value)?,
            ("training", "batch_size") => t.batch_size = num(key, value)?,
            ("training", "learning_rate") => t.learning_rate = num(key, value)?,
            ("training", "epochs") => t.epochs = num(key, value)?,
            ("training", "seed") => t.seed = num(key, value)?,
            ("training", "adam_beta1") => t.adam_beta1 = num(key, value)?,
            ("training", "adam_beta2") => t.adam_beta2 = num(key, value)?,
            ("training", "adam_eps") => t.adam_eps = num(key, value)?,
            ("training", "deterministic") => t.deterministic = num(key, value)?,
            ("training", "threads") => self.threads = num(key, value)?,
            ("training", "log_every") => self.log_every = num(key, value)?,
            ("paths", "out_dir") => self.paths.out_dir = value.into(),
            ("paths", "dataset") => self.paths.dataset = Some(value.into()),
            ("paths", "checkpoint") => self.paths.checkpoint = Some(value.into()),
            ("paths", "history") => self.paths.history = Some(value.into()),
            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    /// Copies the shared constants into the nested structures. Call after
    /// changing `domain`, `source` or `params` by hand.
    pub fn sync(&mut self) {
        self.params.a = self.domain.a;
        self.params.b = self.domain.b;
        self.params.x0 = self.source.x0;
        self.params.z0 = self.source.z0;
        self.params.omega = self.source.omega;
        self.training.params = self.params;
        self.training.source = self.source;
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config {
            line: None,
            msg: e.to_string(),
        };
        self.domain.validate().map_err(cfg)?;
        self.source.validate(&self.domain).map_err(cfg)?;
        self.truncation.validate().map_err(cfg)?;
        self.training.validate().map_err(cfg)?;
        let g = self.grid;
        if g.nx < 2 || g.nz < 2 || g.nt < 2 {
            return Err(Error::Config {
                line: None,
                msg: "grid needs at least 2 nodes per axis".into(),
            });
        }
        Ok(())
    }
}
