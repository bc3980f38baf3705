//! Flat `key = value` configuration.
//!
//! Values are layered: built-in defaults, then a config file, then command
//! line flags. Every key has a `--kebab-case` flag of the same name. Unknown
//! keys are rejected by name.

use crate::error::{LabError, Result};
use cptlab_core::curriculum::{Curriculum, RunMode, BASE_QF, MASTER_CURRICULUM};
use cptlab_core::jpeg::{EncoderOptions, Subsampling};
use cptlab_core::net::TrainConfig;
use cptlab_core::scene::DatasetSpec;
use cptlab_core::QualityFactor;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Every recognised key, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "scenes",
    "width",
    "height",
    "min_heads",
    "max_heads",
    "min_radius",
    "max_radius",
    "texture_scale",
    "splits",
    "dataset_seed",
    "sigma",
    "qfs",
    "standard_chroma_table",
    "subsampling",
    "dataset_manifest",
    "mode",
    "curriculum",
    "base_qf",
    "target_qf",
    "target_qfs",
    "methods",
    "seeds",
    "learning_rate",
    "lr_decay",
    "weight_decay",
    "epochs",
    "batch_size",
    "equal_budget",
    "jobs",
];

/// Which subcommand the defaults are for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Gen,
    Train,
    Sweep,
    Ablate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dataset: DatasetSpec,
    /// Relative split weights as given (normalized into `dataset`).
    pub splits: [u32; 3],
    pub qfs: Vec<QualityFactor>,
    pub encoder: EncoderOptions,
    pub dataset_manifest: Option<PathBuf>,
    pub mode: RunMode,
    pub curriculum: Option<Curriculum>,
    pub base_qf: QualityFactor,
    pub target_qf: QualityFactor,
    pub target_qfs: Vec<QualityFactor>,
    pub methods: Vec<RunMode>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub equal_budget: bool,
    pub jobs: usize,
}

fn qf(v: u8) -> QualityFactor {
    QualityFactor::try_from(v).expect("valid constant")
}

impl Settings {
    pub fn defaults(profile: Profile) -> Settings {
        let seeds = match profile {
            Profile::Gen | Profile::Train => vec![0],
            Profile::Ablate => vec![0, 1],
            Profile::Sweep => vec![0, 1, 2, 3, 4],
        };
        Settings {
            dataset: DatasetSpec::default(),
            splits: [200, 30, 50],
            qfs: MASTER_CURRICULUM.iter().map(|&q| qf(q)).collect(),
            encoder: EncoderOptions::default(),
            dataset_manifest: None,
            mode: RunMode::Cpt,
            curriculum: None,
            base_qf: qf(BASE_QF),
            target_qf: qf(1),
            target_qfs: vec![qf(1)],
            methods: vec![RunMode::Npt, RunMode::Cpt],
            seeds,
            train: TrainConfig::default(),
            equal_budget: false,
            jobs: 1,
        }
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(LabError::Config(format!("unknown key `{key}`")));
        }
        let v = value.trim();
        let bad = |why: &str| LabError::Config(format!("invalid value {v:?} for key `{key}`: {why}"));
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|_| "not a number of the expected kind".to_string())
        }
        fn quality(v: &str) -> std::result::Result<QualityFactor, String> {
            let n: i64 = num(v)?;
            QualityFactor::new(n).map_err(|e| e.to_string())
        }
        fn list<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
            let out = v.split(',').map(|p| f(p.trim())).collect::<std::result::Result<Vec<T>, String>>()?;
            if out.is_empty() {
                return Err("empty list".into());
            }
            Ok(out)
        }
        fn boolean(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err("expected true or false".into()),
            }
        }
        let r: std::result::Result<(), String> = (|| {
            let d = &mut self.dataset;
            match key {
                "scenes" => d.scene_count = num(v)?,
                "width" => d.width = num(v)?,
                "height" => d.height = num(v)?,
                "min_heads" => d.count_range.0 = num(v)?,
                "max_heads" => d.count_range.1 = num(v)?,
                "min_radius" => d.head_radius_range.0 = num(v)?,
                "max_radius" => d.head_radius_range.1 = num(v)?,
                "texture_scale" => d.background_texture_scale = num(v)?,
                "splits" => {
                    let w = list(v, num::<u32>)?;
                    let w: [u32; 3] = w.try_into().map_err(|_| "expected three weights train,val,test".to_string())?;
                    let total: u32 = w.iter().sum();
                    if total == 0 {
                        return Err("weights sum to zero".into());
                    }
                    self.splits = w;
                    d.split_fractions = w.map(|x| x as f64 / total as f64);
                }
                "dataset_seed" => d.master_seed = num(v)?,
                "sigma" => d.density_sigma = num(v)?,
                "qfs" => self.qfs = list(v, quality)?,
                "standard_chroma_table" => self.encoder.standard_chroma_table = boolean(v)?,
                "subsampling" => {
                    self.encoder.subsampling = match v {
                        "420" | "4:2:0" => Subsampling::S420,
                        "444" | "4:4:4" => Subsampling::S444,
                        _ => return Err("expected 420 or 444".into()),
                    }
                }
                "dataset_manifest" => self.dataset_manifest = (!v.is_empty()).then(|| PathBuf::from(v)),
                "mode" => self.mode = v.parse().map_err(|e: cptlab_core::curriculum::CurriculumError| e.to_string())?,
                "curriculum" => {
                    self.curriculum = if v.is_empty() {
                        None
                    } else {
                        Some(v.parse().map_err(|e: cptlab_core::curriculum::CurriculumError| e.to_string())?)
                    }
                }
                "base_qf" => self.base_qf = quality(v)?,
                "target_qf" => self.target_qf = quality(v)?,
                "target_qfs" => self.target_qfs = list(v, quality)?,
                "methods" => {
                    self.methods = list(v, |m| m.parse().map_err(|e: cptlab_core::curriculum::CurriculumError| e.to_string()))?
                }
                "seeds" => self.seeds = list(v, num::<u64>)?,
                "learning_rate" => self.train.learning_rate = num(v)?,
                "lr_decay" => self.train.lr_decay = num(v)?,
                "weight_decay" => self.train.weight_decay = num(v)?,
                "epochs" => self.train.epochs = num(v)?,
                "batch_size" => self.train.batch_size = num(v)?,
                "equal_budget" => self.equal_budget = boolean(v)?,
                "jobs" => {
                    self.jobs = num(v)?;
                    if self.jobs == 0 {
                        return Err("must be at least 1".into());
                    }
                }
                _ => unreachable!("checked against KEYS"),
            }
            Ok(())
        })();
        r.map_err(|e| bad(&e))
    }

    /// Applies a config file; a relative `dataset_manifest` is resolved
    /// against the invocation directory like every other path.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        for (key, value, line) in parse_pairs(&text).map_err(|(line, m)| LabError::format(path, line, m))? {
            self.apply(&key, &value).map_err(|e| LabError::format(path, line, e.to_string()))?;
        }
        Ok(())
    }

    /// Checks cross-field invariants not covered by single keys.
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(LabError::Config("`seeds` is empty".into()));
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let d = &self.dataset;
        let join = |qs: &[QualityFactor]| qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",");
        match key {
            "scenes" => d.scene_count.to_string(),
            "width" => d.width.to_string(),
            "height" => d.height.to_string(),
            "min_heads" => d.count_range.0.to_string(),
            "max_heads" => d.count_range.1.to_string(),
            "min_radius" => d.head_radius_range.0.to_string(),
            "max_radius" => d.head_radius_range.1.to_string(),
            "texture_scale" => d.background_texture_scale.to_string(),
            "splits" => self.splits.map(|w| w.to_string()).join(","),
            "dataset_seed" => d.master_seed.to_string(),
            "sigma" => d.density_sigma.to_string(),
            "qfs" => join(&self.qfs),
            "standard_chroma_table" => self.encoder.standard_chroma_table.to_string(),
            "subsampling" => match self.encoder.subsampling {
                Subsampling::S420 => "420".into(),
                Subsampling::S444 => "444".into(),
            },
            "dataset_manifest" => self
                .dataset_manifest
                .as_ref()
                .map_or(String::new(), |p| p.to_string_lossy().into_owned()),
            "mode" => self.mode.to_string(),
            "curriculum" => self.curriculum.as_ref().map_or(String::new(), |c| c.to_string()),
            "base_qf" => self.base_qf.to_string(),
            "target_qf" => self.target_qf.to_string(),
            "target_qfs" => join(&self.target_qfs),
            "methods" => self.methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
            "seeds" => self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
            "learning_rate" => self.train.learning_rate.to_string(),
            "lr_decay" => self.train.lr_decay.to_string(),
            "weight_decay" => self.train.weight_decay.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "equal_budget" => self.equal_budget.to_string(),
            "jobs" => self.jobs.to_string(),
            _ => unreachable!(),
        }
    }

    /// `key = value` lines for `keys`, in the given order. `jobs` is left out
    /// so that outputs do not depend on the worker count.
    pub fn render(&self, keys: &[&str]) -> String {
        let mut s = String::new();
        for k in keys.iter().filter(|k| **k != "jobs") {
            writeln!(s, "{k} = {}", self.value_of(k)).unwrap();
        }
        s
    }
}

/// Keys that shape a generated dataset.
pub const DATASET_KEYS: &[&str] = &[
    "scenes",
    "width",
    "height",
    "min_heads",
    "max_heads",
    "min_radius",
    "max_radius",
    "texture_scale",
    "splits",
    "dataset_seed",
    "sigma",
    "standard_chroma_table",
    "subsampling",
];

pub const TRAIN_KEYS: &[&str] = &[
    "learning_rate",
    "lr_decay",
    "weight_decay",
    "epochs",
    "batch_size",
    "equal_budget",
];

/// Splits text into `(key, value, line)` triples. `#` starts a comment.
pub fn parse_pairs(text: &str) -> std::result::Result<Vec<(String, String, usize)>, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| (i + 1, format!("expected `key = value`, got {line:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_echo_and_reparse() {
        let s = Settings::defaults(Profile::Sweep);
        let text = s.render(KEYS);
        let mut t = Settings::defaults(Profile::Gen);
        for (k, v, _) in parse_pairs(&text).unwrap() {
            t.apply(&k, &v).unwrap();
        }
        assert_eq!(t, s);
        assert!(!text.contains("jobs"));
    }

    #[test]
    fn unknown_key_is_named() {
        let mut s = Settings::defaults(Profile::Train);
        let e = s.apply("learning_rat", "1").unwrap_err().to_string();
        assert!(e.contains("learning_rat"), "{e}");
        let e = s.apply("epochs", "many").unwrap_err().to_string();
        assert!(e.contains("epochs"), "{e}");
    }

    #[test]
    fn splits_normalize() {
        let mut s = Settings::defaults(Profile::Gen);
        s.apply("splits", "2,1,1").unwrap();
        assert_eq!(s.dataset.split_fractions, [0.5, 0.25, 0.25]);
        assert!(s.apply("splits", "1,1").is_err());
    }

    #[test]
    fn file_parsing() {
        let pairs = parse_pairs("# plan\nmode = NPT\n\n epochs=3 # short\n").unwrap();
        assert_eq!(pairs[0], ("mode".into(), "NPT".into(), 2));
        assert_eq!(pairs[1], ("epochs".into(), "3".into(), 4));
        assert_eq!(parse_pairs("oops").unwrap_err().0, 1);
    }
}
