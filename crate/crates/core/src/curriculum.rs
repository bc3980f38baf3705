//! Quality curricula and the run plans built on them.
//!
//! Every run mode reduces to a *lineage*: a strictly decreasing list of
//! qualities trained in order, the first stage from a fresh seeded init and
//! every later stage from the previous stage's weights. Optimizer moments,
//! the step counter and the learning-rate schedule restart at each stage.
//! The run is then evaluated on the test split at its target quality.

use crate::corpus::{Corpus, CorpusError};
use crate::jpeg::QualityFactor;
use crate::metrics;
use crate::net::{backward_batch, init_model, optimizer_step, predict_count, Architecture, ModelState, NetError, Tensor, TrainConfig};
use crate::scene::Split;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default curriculum for training down to QF 1.
pub const MASTER_CURRICULUM: [u8; 10] = [75, 60, 40, 30, 25, 20, 15, 10, 5, 1];
/// Quality of the first (pre-training) stage.
pub const BASE_QF: u8 = 75;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurriculumError {
    #[error("curriculum is empty")]
    Empty,
    #[error("quality {value} at position {position} is outside 1..=100")]
    OutOfRange { position: usize, value: i64 },
    #[error("curriculum must be strictly decreasing, but position {position} has {first} followed by {second}")]
    NotDecreasing { position: usize, first: i64, second: i64 },
    #[error("invalid run plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Metric(#[from] metrics::MetricError),
}

/// A strictly decreasing, non-empty sequence of quality factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Curriculum(Vec<QualityFactor>);

impl Curriculum {
    pub fn new(stages: &[i64]) -> Result<Self, CurriculumError> {
        if stages.is_empty() {
            return Err(CurriculumError::Empty);
        }
        for (position, pair) in stages.windows(2).enumerate() {
            if pair[0] <= pair[1] {
                return Err(CurriculumError::NotDecreasing {
                    position,
                    first: pair[0],
                    second: pair[1],
                });
            }
        }
        let qs = stages
            .iter()
            .enumerate()
            .map(|(position, &value)| QualityFactor::new(value).map_err(|_| CurriculumError::OutOfRange { position, value }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Curriculum(qs))
    }

    pub fn from_qualities(stages: &[QualityFactor]) -> Result<Self, CurriculumError> {
        Self::new(&stages.iter().map(|q| q.get() as i64).collect::<Vec<_>>())
    }

    pub fn master() -> Self {
        Self::new(&MASTER_CURRICULUM.map(i64::from)).expect("master curriculum is valid")
    }

    pub fn stages(&self) -> &[QualityFactor] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> QualityFactor {
        self.0[0]
    }

    pub fn last(&self) -> QualityFactor {
        self.0[self.0.len() - 1]
    }

    /// Stages strictly above `target`, followed by `target`. For a target
    /// that is itself a stage this is the prefix ending at it.
    pub fn prefix_to(&self, target: QualityFactor) -> Curriculum {
        let mut out: Vec<QualityFactor> = self.0.iter().copied().filter(|q| *q > target).collect();
        out.push(target);
        Curriculum(out)
    }
}

impl fmt::Display for Curriculum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

impl FromStr for Curriculum {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|p| p.trim().parse::<i64>().map_err(|_| CurriculumError::InvalidPlan(alloc::format!("bad quality {p:?} in curriculum"))))
            .collect::<Result<Vec<_>, _>>()?;
        Curriculum::new(&values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunMode {
    Cpt,
    Npt,
    Scratch,
    NoFinetune,
    /// Pre-train at the base quality, fine-tune at this quality, then at the
    /// target.
    FixedPretrain(QualityFactor),
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunMode::Cpt => f.write_str("CPT"),
            RunMode::Npt => f.write_str("NPT"),
            RunMode::Scratch => f.write_str("SCRATCH"),
            RunMode::NoFinetune => f.write_str("NO_FINETUNE"),
            RunMode::FixedPretrain(q) => write!(f, "FIXED_PRETRAIN({q})"),
        }
    }
}

impl FromStr for RunMode {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CurriculumError::InvalidPlan(alloc::format!("unknown mode {s:?}"));
        Ok(match s.trim() {
            "CPT" => RunMode::Cpt,
            "NPT" => RunMode::Npt,
            "SCRATCH" => RunMode::Scratch,
            "NO_FINETUNE" => RunMode::NoFinetune,
            other => {
                let q = other
                    .strip_prefix("FIXED_PRETRAIN(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.parse::<i64>().ok())
                    .ok_or_else(bad)?;
                RunMode::FixedPretrain(QualityFactor::new(q).map_err(|_| bad())?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub mode: RunMode,
    /// Required for CPT, rejected otherwise.
    pub curriculum: Option<Curriculum>,
    pub base_qf: QualityFactor,
    pub target_qf: QualityFactor,
    /// Applied to every stage; its `seed` is replaced by each entry of `seeds`.
    pub config: TrainConfig,
    /// Divide `config.epochs` across stages instead of giving each stage the
    /// full count.
    pub equal_budget: bool,
    pub seeds: Vec<u64>,
}

impl RunPlan {
    pub fn new(mode: RunMode, target_qf: QualityFactor, config: TrainConfig, seeds: Vec<u64>) -> Self {
        let curriculum = (mode == RunMode::Cpt).then(|| Curriculum::master().prefix_to(target_qf));
        RunPlan {
            mode,
            curriculum,
            base_qf: QualityFactor::try_from(BASE_QF).unwrap(),
            target_qf,
            config,
            equal_budget: false,
            seeds,
        }
    }

    pub fn validate(&self) -> Result<(), CurriculumError> {
        let bad = |m: &str| Err(CurriculumError::InvalidPlan(m.into()));
        self.config.validate()?;
        if self.seeds.is_empty() {
            return bad("seed list is empty");
        }
        match (&self.mode, &self.curriculum) {
            (RunMode::Cpt, None) => return bad("CPT needs a curriculum"),
            (RunMode::Cpt, Some(c)) if c.last() != self.target_qf => {
                return Err(CurriculumError::InvalidPlan(alloc::format!(
                    "curriculum ends at {} but target is {}",
                    c.last(),
                    self.target_qf
                )))
            }
            (RunMode::Cpt, Some(_)) => {}
            (_, Some(_)) => return bad("a curriculum only applies to CPT"),
            (_, None) => {}
        }
        match self.mode {
            RunMode::Npt if self.target_qf > self.base_qf => bad("NPT target must not exceed the base quality"),
            RunMode::FixedPretrain(q) if !(self.base_qf > q && q > self.target_qf) => {
                bad("FIXED_PRETRAIN quality must lie strictly between target and base")
            }
            _ => Ok(()),
        }
    }

    /// Qualities trained, in order.
    pub fn lineage(&self) -> Curriculum {
        let qs = match self.mode {
            RunMode::Cpt => return self.curriculum.clone().expect("validated CPT plan"),
            RunMode::Npt if self.target_qf == self.base_qf => alloc::vec![self.base_qf],
            RunMode::Npt => alloc::vec![self.base_qf, self.target_qf],
            RunMode::Scratch => alloc::vec![self.target_qf],
            RunMode::NoFinetune => alloc::vec![self.base_qf],
            RunMode::FixedPretrain(q) => alloc::vec![self.base_qf, q, self.target_qf],
        };
        Curriculum(qs)
    }

    /// Qualities the corpus must provide: every trained stage plus the target.
    pub fn required_qualities(&self) -> Vec<QualityFactor> {
        let mut qs: Vec<QualityFactor> = self.lineage().stages().to_vec();
        if !qs.contains(&self.target_qf) {
            qs.push(self.target_qf);
        }
        qs
    }

    pub fn stage_epochs(&self) -> u32 {
        if self.equal_budget {
            (self.config.epochs / self.lineage().len() as u32).max(1)
        } else {
            self.config.epochs
        }
    }
}

/// The seven ablation regimes for `target`, labelled for reporting.
pub fn ablation_plans(target: QualityFactor, config: TrainConfig, seeds: &[u64]) -> Vec<(String, RunPlan)> {
    let q = |v: u8| QualityFactor::try_from(v).unwrap();
    let cpt = |stages: &[u8]| {
        let base = Curriculum(stages.iter().map(|&v| q(v)).collect());
        let mut p = RunPlan::new(RunMode::Cpt, target, config, seeds.to_vec());
        p.curriculum = Some(base.prefix_to(target));
        p
    };
    let mut out = Vec::new();
    for mode in [RunMode::NoFinetune, RunMode::Scratch, RunMode::Npt, RunMode::FixedPretrain(q(5))] {
        out.push((alloc::format!("{mode}"), RunPlan::new(mode, target, config, seeds.to_vec())));
    }
    for stages in [&MASTER_CURRICULUM[..], &[75, 40, 25, 15, 5], &[75, 45, 28, 17, 6]] {
        let p = cpt(stages);
        let label = alloc::format!("CPT({})", p.curriculum.as_ref().unwrap()).replace(',', "-");
        out.push((label, p));
    }
    out
}

/// One epoch of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub stage: usize,
    pub qf: QualityFactor,
    pub epoch: u32,
    pub train_loss: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub index: usize,
    pub qf: QualityFactor,
    /// Quality of the stage whose weights initialized this one.
    pub parent_qf: Option<QualityFactor>,
    pub epochs: u32,
    pub logs: Vec<EpochLog>,
    /// Epoch (0-based) whose weights were kept.
    pub best_epoch: u32,
    pub best_val_mae: f64,
    pub optimizer_steps: u64,
    /// Weights after `best_epoch`, tagged with `source_qf = qf`.
    pub model: ModelState,
}

impl StageRecord {
    pub fn final_train_loss(&self) -> f64 {
        self.logs.last().map_or(f64::NAN, |l| l.train_loss)
    }

    pub fn final_val_mae(&self) -> f64 {
        self.logs.last().map_or(f64::NAN, |l| l.val_mae)
    }
}

/// Count predictions on one split at one quality.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub qf: QualityFactor,
    pub scene_ids: Vec<usize>,
    pub pred_counts: Vec<f64>,
    pub gt_counts: Vec<f64>,
    pub mae: f64,
    pub mse: f64,
    pub avg_size_bytes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub mode: RunMode,
    pub seed: u64,
    pub target_qf: QualityFactor,
    pub stages: Vec<StageRecord>,
    pub evaluation: Option<Evaluation>,
}

impl RunRecord {
    pub fn lineage(&self) -> Vec<QualityFactor> {
        self.stages.iter().map(|s| s.qf).collect()
    }

    pub fn final_model(&self) -> Option<&ModelState> {
        self.stages.last().map(|s| &s.model)
    }

    /// Optimizer steps taken on images at the target quality.
    pub fn target_steps(&self) -> u64 {
        self.stages.iter().filter(|s| s.qf == self.target_qf).map(|s| s.optimizer_steps).sum()
    }
}

/// A run that stopped early, with the stages that completed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} (after {} completed stage(s))", record.stages.len())]
pub struct RunFailure {
    pub record: RunRecord,
    pub error: CurriculumError,
}

/// Identifies a trained stage: the same key always yields the same weights.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageKey {
    pub seed: u64,
    pub lineage: Vec<u8>,
    pub epochs: u32,
    /// Bit patterns of learning rate, decay, weight decay, and the batch size.
    pub config: [u64; 4],
}

impl StageKey {
    fn new(seed: u64, lineage: &[QualityFactor], config: &TrainConfig) -> Self {
        StageKey {
            seed,
            lineage: lineage.iter().map(|q| q.get()).collect(),
            epochs: config.epochs,
            config: [
                config.learning_rate.to_bits(),
                config.lr_decay.to_bits(),
                config.weight_decay.to_bits(),
                config.batch_size as u64,
            ],
        }
    }
}

/// Memo of trained stages shared by runs whose lineages have a common
/// prefix. A cache must only be used with one architecture and one corpus.
pub trait StageCache {
    fn lookup(&mut self, key: &StageKey) -> Option<StageRecord>;
    fn store(&mut self, key: StageKey, record: &StageRecord);
}

impl StageCache for BTreeMap<StageKey, StageRecord> {
    fn lookup(&mut self, key: &StageKey) -> Option<StageRecord> {
        self.get(key).cloned()
    }

    fn store(&mut self, key: StageKey, record: &StageRecord) {
        self.insert(key, record.clone());
    }
}

pub struct NoCache;

impl StageCache for NoCache {
    fn lookup(&mut self, _: &StageKey) -> Option<StageRecord> {
        None
    }

    fn store(&mut self, _: StageKey, _: &StageRecord) {}
}

fn input_tensor(corpus: &Corpus, luma: &[u8]) -> Tensor {
    Tensor::from_luma(corpus.width(), corpus.height(), luma)
}

/// Predicted and true counts on `split` at `qf`.
pub fn evaluate(model: &ModelState, corpus: &Corpus, qf: QualityFactor, split: Split) -> Result<Evaluation, CurriculumError> {
    let variant = corpus.variant(qf)?;
    let idx = corpus.split_indices(split);
    if idx.is_empty() {
        return Err(CorpusError::EmptySplit(split.as_str()).into());
    }
    let mut pred = Vec::with_capacity(idx.len());
    let mut gt = Vec::with_capacity(idx.len());
    for &i in &idx {
        pred.push(predict_count(model, &input_tensor(corpus, &variant.luma[i]))?);
        gt.push(corpus.truths()[i].head_count as f64);
    }
    Ok(Evaluation {
        qf,
        scene_ids: idx.iter().map(|&i| corpus.truths()[i].id).collect(),
        mae: metrics::mae(&pred, &gt)?,
        mse: metrics::mse(&pred, &gt)?,
        avg_size_bytes: corpus.avg_encoded_size(qf, split)?,
        pred_counts: pred,
        gt_counts: gt,
    })
}

fn shuffle_rng(seed: u64, qf: QualityFactor, epoch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(qf.get()) << 32) | u64::from(epoch));
    rng
}

/// Trains one stage at `qf` for `config.epochs` epochs starting from the
/// weights of `init`, and keeps the epoch with the lowest validation MAE.
///
/// Optimizer moments and the step counter of `init` are discarded, and the
/// learning-rate schedule starts again at epoch 0. Batches are drawn from a
/// permutation of the training split seeded by `(config.seed, qf, epoch)`.
pub fn train_stage(
    init: &ModelState,
    index: usize,
    qf: QualityFactor,
    config: &TrainConfig,
    corpus: &Corpus,
    observer: &mut dyn FnMut(&EpochLog),
) -> Result<StageRecord, CurriculumError> {
    config.validate()?;
    let variant = corpus.variant(qf)?;
    let train = corpus.split_indices(Split::Train);
    let val = corpus.split_indices(Split::Val);
    if train.is_empty() {
        return Err(CorpusError::EmptySplit("train").into());
    }
    if val.is_empty() {
        return Err(CorpusError::EmptySplit("val").into());
    }
    let parent_qf = init.source_qf;
    let mut model = init.with_reset_optimizer();
    let mut logs = Vec::new();
    let mut best: Option<(u32, f64, ModelState)> = None;

    for epoch in 0..config.epochs {
        let mut order = train.clone();
        order.shuffle(&mut shuffle_rng(config.seed, qf, epoch));
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<Tensor> = batch.iter().map(|&i| input_tensor(corpus, &variant.luma[i])).collect();
            let input_refs: Vec<&Tensor> = inputs.iter().collect();
            let targets: Vec<&[f32]> = batch.iter().map(|&i| corpus.truths()[i].target.as_slice()).collect();
            let (loss, grads) = backward_batch(&model, &input_refs, &targets)?;
            loss_sum += loss * batch.len() as f64;
            optimizer_step(&mut model, &grads, config, epoch)?;
        }
        let val_eval = evaluate(&model, corpus, qf, Split::Val)?;
        let log = EpochLog {
            stage: index,
            qf,
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_mae: val_eval.mae,
        };
        observer(&log);
        if best.as_ref().is_none_or(|b| log.val_mae < b.1) {
            best = Some((epoch, log.val_mae, model.clone()));
        }
        logs.push(log);
    }
    let (best_epoch, best_val_mae, mut kept) = best.expect("at least one epoch");
    kept.source_qf = Some(qf);
    Ok(StageRecord {
        index,
        qf,
        parent_qf,
        epochs: config.epochs,
        logs,
        best_epoch,
        best_val_mae,
        optimizer_steps: model.step,
        model: kept,
    })
}

/// Runs `plan` for one seed: trains its lineage, then evaluates the last
/// stage on the test split at the target quality.
pub fn execute(
    plan: &RunPlan,
    seed: u64,
    arch: &Architecture,
    corpus: &Corpus,
    cache: &mut dyn StageCache,
    observer: &mut dyn FnMut(&EpochLog),
) -> Result<RunRecord, RunFailure> {
    let mut record = RunRecord {
        mode: plan.mode,
        seed,
        target_qf: plan.target_qf,
        stages: Vec::new(),
        evaluation: None,
    };
    let fail = |record: RunRecord, error: CurriculumError| RunFailure { record, error };
    if let Err(e) = plan.validate() {
        return Err(fail(record, e));
    }
    let lineage = plan.lineage();
    let config = TrainConfig {
        seed,
        epochs: plan.stage_epochs(),
        ..plan.config
    };
    let mut model = init_model(arch, seed);
    for (i, &qf) in lineage.stages().iter().enumerate() {
        let key = StageKey::new(seed, &lineage.stages()[..=i], &config);
        let stage = match cache.lookup(&key) {
            Some(s) => s,
            None => match train_stage(&model, i, qf, &config, corpus, observer) {
                Ok(s) => {
                    cache.store(key, &s);
                    s
                }
                Err(e) => return Err(fail(record, e)),
            },
        };
        model = stage.model.clone();
        record.stages.push(stage);
    }
    match evaluate(&model, corpus, plan.target_qf, Split::Test) {
        Ok(ev) => record.evaluation = Some(ev),
        Err(e) => return Err(fail(record, e)),
    }
    Ok(record)
}

/// [`execute`] restricted to CPT plans.
pub fn run_cpt(
    plan: &RunPlan,
    seed: u64,
    arch: &Architecture,
    corpus: &Corpus,
    cache: &mut dyn StageCache,
    observer: &mut dyn FnMut(&EpochLog),
) -> Result<RunRecord, RunFailure> {
    if plan.mode != RunMode::Cpt {
        return Err(RunFailure {
            record: RunRecord {
                mode: plan.mode,
                seed,
                target_qf: plan.target_qf,
                stages: Vec::new(),
                evaluation: None,
            },
            error: CurriculumError::InvalidPlan(alloc::format!("run_cpt given a {} plan", plan.mode)),
        });
    }
    execute(plan, seed, arch, corpus, cache, observer)
}

/// [`execute`] restricted to the non-curriculum modes.
pub fn run_baseline(
    plan: &RunPlan,
    seed: u64,
    arch: &Architecture,
    corpus: &Corpus,
    cache: &mut dyn StageCache,
    observer: &mut dyn FnMut(&EpochLog),
) -> Result<RunRecord, RunFailure> {
    if plan.mode == RunMode::Cpt {
        return Err(RunFailure {
            record: RunRecord {
                mode: plan.mode,
                seed,
                target_qf: plan.target_qf,
                stages: Vec::new(),
                evaluation: None,
            },
            error: CurriculumError::InvalidPlan("run_baseline given a CPT plan".into()),
        });
    }
    execute(plan, seed, arch, corpus, cache, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn q(v: u8) -> QualityFactor {
        QualityFactor::try_from(v).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Curriculum::new(&[75, 60, 40, 30, 25, 20, 15, 10, 5, 1]).is_ok());
        assert!(Curriculum::new(&[75]).is_ok());
        assert_eq!(
            Curriculum::new(&[75, 75, 50]),
            Err(CurriculumError::NotDecreasing {
                position: 0,
                first: 75,
                second: 75
            })
        );
        assert_eq!(Curriculum::new(&[]), Err(CurriculumError::Empty));
        assert!(matches!(Curriculum::new(&[101, 50]), Err(CurriculumError::OutOfRange { position: 0, value: 101 })));
        assert!(matches!(Curriculum::new(&[50, 0]), Err(CurriculumError::OutOfRange { position: 1, .. })));
    }

    #[test]
    fn master_prefixes() {
        let m = Curriculum::master();
        assert_eq!(m.prefix_to(q(25)).to_string(), "75,60,40,30,25");
        assert_eq!(m.prefix_to(q(1)), m);
        assert_eq!(m.prefix_to(q(75)).to_string(), "75");
        assert_eq!(m.prefix_to(q(45)).to_string(), "75,60,45");
    }

    #[test]
    fn parse_round_trip() {
        let c: Curriculum = "75, 40,5".parse().unwrap();
        assert_eq!(c.to_string(), "75,40,5");
        for m in [RunMode::Cpt, RunMode::Npt, RunMode::Scratch, RunMode::NoFinetune, RunMode::FixedPretrain(q(5))] {
            assert_eq!(m.to_string().parse::<RunMode>().unwrap(), m);
        }
        assert!("FIXED_PRETRAIN(0)".parse::<RunMode>().is_err());
    }

    #[test]
    fn lineages() {
        let c = TrainConfig::default();
        let l = |mode, t| RunPlan::new(mode, q(t), c, vec![0]).lineage().to_string();
        assert_eq!(l(RunMode::Npt, 1), "75,1");
        assert_eq!(l(RunMode::Npt, 75), "75");
        assert_eq!(l(RunMode::Scratch, 1), "1");
        assert_eq!(l(RunMode::NoFinetune, 1), "75");
        assert_eq!(l(RunMode::FixedPretrain(q(5)), 1), "75,5,1");
        assert_eq!(l(RunMode::Cpt, 10), "75,60,40,30,25,20,15,10");
    }

    #[test]
    fn plan_rules() {
        let c = TrainConfig::default();
        let mut p = RunPlan::new(RunMode::Cpt, q(1), c, vec![0]);
        assert!(p.validate().is_ok());
        p.curriculum = Some(Curriculum::new(&[75, 5]).unwrap());
        assert!(p.validate().is_err());
        let mut n = RunPlan::new(RunMode::Npt, q(1), c, vec![0]);
        n.curriculum = Some(Curriculum::master());
        assert!(n.validate().is_err());
        assert!(RunPlan::new(RunMode::FixedPretrain(q(1)), q(1), c, vec![0]).validate().is_err());
        assert!(RunPlan::new(RunMode::Scratch, q(1), c, vec![]).validate().is_err());
        let e = RunPlan::new(RunMode::Npt, q(1), TrainConfig { epochs: 0, ..c }, vec![0]).validate();
        assert!(matches!(e, Err(CurriculumError::Net(NetError::InvalidConfig(_)))));
    }

    #[test]
    fn equal_budget_divides_epochs() {
        let mut p = RunPlan::new(RunMode::Cpt, q(1), TrainConfig { epochs: 25, ..TrainConfig::default() }, vec![0]);
        assert_eq!(p.stage_epochs(), 25);
        p.equal_budget = true;
        assert_eq!(p.stage_epochs(), 2);
        p.config.epochs = 3;
        assert_eq!(p.stage_epochs(), 1);
    }

    #[test]
    fn seven_ablation_regimes() {
        let plans = ablation_plans(q(1), TrainConfig::default(), &[0, 1]);
        let labels: Vec<&str> = plans.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(
            labels,
            [
                "NO_FINETUNE",
                "SCRATCH",
                "NPT",
                "FIXED_PRETRAIN(5)",
                "CPT(75-60-40-30-25-20-15-10-5-1)",
                "CPT(75-40-25-15-5-1)",
                "CPT(75-45-28-17-6-1)"
            ]
        );
        assert!(plans.iter().all(|(_, p)| p.validate().is_ok()));
    }
}
