//! Multi-run experiments: sweeps, ablations and the report writer.

use crate::config::Settings;
use crate::dataset::{build_corpus, load_corpus, manifest_sigma, scene_id};
use crate::error::{LabError, Result};
use crate::formats::{read_file, write_file};
use crate::pool::parallel_map;
use crate::records::{write_csv, write_run_record};
use cptlab_core::corpus::Corpus;
use cptlab_core::curriculum::{
    ablation_plans, execute, Curriculum, EpochLog, RunMode, RunPlan, RunRecord, StageCache, StageKey, StageRecord,
};
use cptlab_core::metrics::{self, aggregate, tradeoff_series, AggregateRow, EvalRow};
use cptlab_core::net::Architecture;
use cptlab_core::QualityFactor;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

pub const BASE_HEADER: [&str; 6] = ["method", "qf", "seed", "avg_size_bytes", "mae", "mse"];
pub const AGGREGATE_HEADER: [&str; 7] = ["method", "qf", "mean_mae", "std_mae", "mean_mse", "std_mse", "improvement_pct"];
pub const COUNTS_HEADER: [&str; 6] = ["method", "qf", "seed", "scene_id", "pred_count", "gt_count"];
pub const ABLATION_HEADER: [&str; 7] = ["row", "regime", "qf", "seed", "avg_size_bytes", "mae", "mse"];
pub const ABLATION_SUMMARY_HEADER: [&str; 7] = ["row", "regime", "qf", "mean_mae", "std_mae", "mean_mse", "std_mse"];

/// One training run: a plan, one of its seeds, and a report label.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub plan: RunPlan,
    pub seed: u64,
}

impl Job {
    /// Directory name under `runs/`.
    pub fn slug(&self) -> String {
        let label: String = self
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        format!("{}_q{:03}_seed{}", label.trim_end_matches('_'), self.plan.target_qf.get(), self.seed)
    }
}

struct SharedCache<'a>(&'a Mutex<BTreeMap<StageKey, StageRecord>>);

impl StageCache for SharedCache<'_> {
    fn lookup(&mut self, key: &StageKey) -> Option<StageRecord> {
        self.0.lock().unwrap().get(key).cloned()
    }

    fn store(&mut self, key: StageKey, record: &StageRecord) {
        self.0.lock().unwrap().insert(key, record.clone());
    }
}

/// Progress goes to stderr only, so it never affects written artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Quiet,
    Stderr,
}

/// Runs every job on up to `workers` threads with a shared stage cache and
/// returns the records in job order.
pub fn run_jobs(jobs: &[Job], arch: &Architecture, corpus: &Corpus, workers: usize, progress: Progress) -> Result<Vec<RunRecord>> {
    let cache = Mutex::new(BTreeMap::new());
    let results = parallel_map(jobs, workers, |_, job| {
        let started = Instant::now();
        let mut observer = |l: &EpochLog| {
            if progress == Progress::Stderr {
                eprintln!(
                    "[{} seed {}] stage {} q{} epoch {} train_loss {:.4e} val_mae {:.3}",
                    job.label, job.seed, l.stage, l.qf, l.epoch, l.train_loss, l.val_mae
                );
            }
        };
        let r = execute(&job.plan, job.seed, arch, corpus, &mut SharedCache(&cache), &mut observer);
        if progress == Progress::Stderr {
            if let Ok(rec) = &r {
                let ev = rec.evaluation.as_ref().expect("completed runs are evaluated");
                eprintln!(
                    "[{} seed {}] target q{} test mae {:.3} ({:.1}s)",
                    job.label,
                    job.seed,
                    job.plan.target_qf,
                    ev.mae,
                    started.elapsed().as_secs_f64()
                );
            }
        }
        r
    });
    results.into_iter().map(|r| r.map_err(|e| LabError::from(Box::new(e)))).collect()
}

/// Qualities a set of plans needs decoded.
pub fn required_qualities<'a>(plans: impl IntoIterator<Item = &'a RunPlan>) -> Vec<QualityFactor> {
    let mut qs: Vec<QualityFactor> = plans.into_iter().flat_map(|p| p.required_qualities()).collect();
    qs.sort_by(|a, b| b.cmp(a));
    qs.dedup();
    qs
}

/// The corpus described by `settings`: loaded from `dataset_manifest` when
/// set, otherwise generated in memory.
pub fn corpus_for(settings: &Settings, arch: &Architecture, qfs: &[QualityFactor]) -> Result<Corpus> {
    let factor = arch.downsample_factor();
    match &settings.dataset_manifest {
        Some(m) => {
            let sigma = manifest_sigma(m)?.unwrap_or(settings.dataset.density_sigma);
            load_corpus(m, factor, qfs, sigma, settings.jobs)
        }
        None => build_corpus(&settings.dataset, factor, qfs, &settings.encoder, settings.jobs),
    }
}

/// Plan of `mode` for `target` following the settings.
pub fn plan_for(settings: &Settings, mode: RunMode, target: QualityFactor) -> RunPlan {
    let mut plan = RunPlan::new(mode, target, settings.train, settings.seeds.clone());
    plan.base_qf = settings.base_qf;
    plan.equal_budget = settings.equal_budget;
    if mode == RunMode::Cpt {
        let master = settings.curriculum.clone().unwrap_or_else(Curriculum::master);
        plan.curriculum = Some(master.prefix_to(target));
    }
    plan
}

pub fn eval_row(label: &str, record: &RunRecord) -> EvalRow {
    let ev = record.evaluation.as_ref().expect("completed runs are evaluated");
    EvalRow {
        method: label.to_string(),
        qf: record.target_qf.get(),
        seed: record.seed,
        avg_size_bytes: ev.avg_size_bytes,
        mae: ev.mae,
        mse: ev.mse,
    }
}

fn base_fields(r: &EvalRow) -> Vec<String> {
    vec![
        r.qf.to_string(),
        r.seed.to_string(),
        r.avg_size_bytes.to_string(),
        r.mae.to_string(),
        r.mse.to_string(),
    ]
}

fn counts_rows<'a>(jobs: &'a [Job], records: &'a [RunRecord]) -> impl Iterator<Item = Vec<String>> + 'a {
    jobs.iter().zip(records).flat_map(|(job, rec)| {
        let ev = rec.evaluation.as_ref().expect("completed runs are evaluated");
        ev.scene_ids.iter().enumerate().map(move |(k, id)| {
            vec![
                job.label.clone(),
                rec.target_qf.to_string(),
                rec.seed.to_string(),
                scene_id(*id),
                ev.pred_counts[k].to_string(),
                ev.gt_counts[k].to_string(),
            ]
        })
    })
}

fn write_runs(out: &Path, jobs: &[Job], records: &[RunRecord]) -> Result<()> {
    for (job, rec) in jobs.iter().zip(records) {
        write_run_record(rec, &out.join("runs").join(job.slug()))?;
    }
    Ok(())
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_csv(
        path,
        &AGGREGATE_HEADER,
        rows.iter().map(|a| {
            vec![
                a.method.clone(),
                a.qf.to_string(),
                a.mean_mae.to_string(),
                a.std_mae.to_string(),
                a.mean_mse.to_string(),
                a.std_mse.to_string(),
                a.improvement_pct.map_or(String::new(), |v| v.to_string()),
            ]
        }),
    )
}

/// Writes one `tradeoff_<method>.dat` per method and returns their paths.
pub fn emit_tradeoff_data(dir: &Path, rows: &[AggregateRow]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (method, points) in tradeoff_series(rows) {
        let mut s = format!("# method={method}\n# size_bytes mean_mae std_mae\n");
        for p in points {
            writeln!(s, "{} {} {}", p.size_bytes, p.mean_mae, p.std_mae).unwrap();
        }
        let name: String = method
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let path = dir.join(format!("tradeoff_{}.dat", name.trim_end_matches('_')));
        write_file(&path, s.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub jobs: Vec<Job>,
    pub records: Vec<RunRecord>,
    pub base: Vec<EvalRow>,
    pub aggregate: Vec<AggregateRow>,
}

/// Every method at every target quality for every seed. Rows are ordered by
/// method, then target, then seed, as listed in the settings.
pub fn sweep_jobs(settings: &Settings) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &mode in &settings.methods {
        for &target in &settings.target_qfs {
            let plan = plan_for(settings, mode, target);
            for &seed in &settings.seeds {
                jobs.push(Job {
                    label: mode.to_string(),
                    plan: plan.clone(),
                    seed,
                });
            }
        }
    }
    jobs
}

/// Runs the sweep and writes `base.csv`, `aggregate.csv`, `counts.csv`, the
/// trade-off series and every run record under `out`.
pub fn sweep(settings: &Settings, out: &Path, progress: Progress) -> Result<SweepOutput> {
    settings.validate()?;
    let arch = Architecture::toy();
    let jobs = sweep_jobs(settings);
    for j in &jobs {
        j.plan.validate()?;
    }
    let corpus = corpus_for(settings, &arch, &required_qualities(jobs.iter().map(|j| &j.plan)))?;
    let records = run_jobs(&jobs, &arch, &corpus, settings.jobs, progress)?;
    let base: Vec<EvalRow> = jobs.iter().zip(&records).map(|(j, r)| eval_row(&j.label, r)).collect();
    let agg = aggregate(&base, "NPT", "CPT");

    write_file(&out.join("config.txt"), settings.render(crate::config::KEYS).as_bytes())?;
    write_csv(
        &out.join("base.csv"),
        &BASE_HEADER,
        base.iter().map(|r| {
            let mut f = vec![r.method.clone()];
            f.extend(base_fields(r));
            f
        }),
    )?;
    write_aggregate(&out.join("aggregate.csv"), &agg)?;
    write_csv(&out.join("counts.csv"), &COUNTS_HEADER, counts_rows(&jobs, &records))?;
    emit_tradeoff_data(out, &agg)?;
    write_runs(out, &jobs, &records)?;
    Ok(SweepOutput {
        jobs,
        records,
        base,
        aggregate: agg,
    })
}

#[derive(Debug, Clone)]
pub struct AblationOutput {
    pub jobs: Vec<Job>,
    pub records: Vec<RunRecord>,
    /// Row number (1-based), regime label, seed-level rows.
    pub rows: Vec<(usize, EvalRow)>,
    pub summary: Vec<(usize, AggregateRow)>,
}

/// The seven ablation regimes at `target_qf` for every seed.
pub fn ablate(settings: &Settings, out: &Path, progress: Progress) -> Result<AblationOutput> {
    settings.validate()?;
    let arch = Architecture::toy();
    let mut jobs = Vec::new();
    let mut row_of = Vec::new();
    for (row, (label, mut plan)) in ablation_plans(settings.target_qf, settings.train, &settings.seeds)
        .into_iter()
        .enumerate()
    {
        plan.base_qf = settings.base_qf;
        plan.equal_budget = settings.equal_budget;
        plan.validate()?;
        for &seed in &settings.seeds {
            jobs.push(Job {
                label: label.clone(),
                plan: plan.clone(),
                seed,
            });
            row_of.push(row + 1);
        }
    }
    let corpus = corpus_for(settings, &arch, &required_qualities(jobs.iter().map(|j| &j.plan)))?;
    let records = run_jobs(&jobs, &arch, &corpus, settings.jobs, progress)?;
    let rows: Vec<(usize, EvalRow)> = jobs
        .iter()
        .zip(&records)
        .zip(&row_of)
        .map(|((j, r), &n)| (n, eval_row(&j.label, r)))
        .collect();
    let plain: Vec<EvalRow> = rows.iter().map(|(_, r)| r.clone()).collect();
    let summary: Vec<(usize, AggregateRow)> = aggregate(&plain, "", "")
        .into_iter()
        .map(|a| {
            let n = rows.iter().find(|(_, r)| r.method == a.method).unwrap().0;
            (n, a)
        })
        .collect();

    write_file(&out.join("config.txt"), settings.render(crate::config::KEYS).as_bytes())?;
    write_csv(
        &out.join("ablation.csv"),
        &ABLATION_HEADER,
        rows.iter().map(|(n, r)| {
            let mut f = vec![n.to_string(), r.method.clone()];
            f.extend(base_fields(r));
            f
        }),
    )?;
    write_csv(
        &out.join("ablation_summary.csv"),
        &ABLATION_SUMMARY_HEADER,
        summary.iter().map(|(n, a)| {
            vec![
                n.to_string(),
                a.method.clone(),
                a.qf.to_string(),
                a.mean_mae.to_string(),
                a.std_mae.to_string(),
                a.mean_mse.to_string(),
                a.std_mse.to_string(),
            ]
        }),
    )?;
    write_csv(&out.join("counts.csv"), &COUNTS_HEADER, counts_rows(&jobs, &records))?;
    write_runs(out, &jobs, &records)?;
    Ok(AblationOutput {
        jobs,
        records,
        rows,
        summary,
    })
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let bytes = read_file(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    if r.headers().map_err(LabError::csv(path))?.iter().ne(header.iter().copied()) {
        return Err(LabError::format(path, 1, format!("expected header {}", header.join(","))));
    }
    r.records()
        .map(|rec| rec.map_err(LabError::csv(path)))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec[i]
        .parse()
        .map_err(|_| LabError::format(path, line, format!("bad value {:?} in column {}", &rec[i], i + 1)))
}

pub fn read_base_rows(path: &Path) -> Result<Vec<EvalRow>> {
    read_csv(path, &BASE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            Ok(EvalRow {
                method: rec[0].to_string(),
                qf: field(path, line, rec, 1)?,
                seed: field(path, line, rec, 2)?,
                avg_size_bytes: field(path, line, rec, 3)?,
                mae: field(path, line, rec, 4)?,
                mse: field(path, line, rec, 5)?,
            })
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub base_rows: usize,
    pub audited_runs: usize,
    pub aggregate: Vec<AggregateRow>,
    pub plot_files: Vec<PathBuf>,
}

/// Recomputes aggregates from `base.csv` in `input`, audits them against
/// `counts.csv` and any existing `aggregate.csv`, and writes
/// `aggregate.csv` plus the trade-off series into `out`.
pub fn report(input: &Path, out: &Path) -> Result<ReportSummary> {
    let base_path = input.join("base.csv");
    let base = read_base_rows(&base_path)?;
    if base.is_empty() {
        return Err(LabError::format(&base_path, 1, "no rows to report"));
    }
    let mut audited = 0;
    let counts_path = input.join("counts.csv");
    if counts_path.exists() {
        let mut groups: BTreeMap<(String, u8, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (i, rec) in read_csv(&counts_path, &COUNTS_HEADER)?.iter().enumerate() {
            let line = i + 2;
            let g = groups
                .entry((rec[0].to_string(), field(&counts_path, line, rec, 1)?, field(&counts_path, line, rec, 2)?))
                .or_default();
            g.0.push(field(&counts_path, line, rec, 4)?);
            g.1.push(field(&counts_path, line, rec, 5)?);
        }
        for r in &base {
            let (pred, gt) = groups
                .get(&(r.method.clone(), r.qf, r.seed))
                .ok_or_else(|| LabError::Audit(format!("no raw counts for {} q{} seed {}", r.method, r.qf, r.seed)))?;
            let (mae, mse) = (metrics::mae(pred, gt)?, metrics::mse(pred, gt)?);
            if !close(mae, r.mae) || !close(mse, r.mse) {
                return Err(LabError::Audit(format!(
                    "{} q{} seed {}: table says mae {} mse {}, raw counts give {mae} {mse}",
                    r.method, r.qf, r.seed, r.mae, r.mse
                )));
            }
            audited += 1;
        }
    }
    let agg = aggregate(&base, "NPT", "CPT");
    let agg_path = input.join("aggregate.csv");
    if agg_path.exists() {
        let stored = read_csv(&agg_path, &AGGREGATE_HEADER)?;
        if stored.len() != agg.len() {
            return Err(LabError::Audit(format!("aggregate.csv has {} rows, base rows give {}", stored.len(), agg.len())));
        }
        for (i, (rec, a)) in stored.iter().zip(&agg).enumerate() {
            let line = i + 2;
            let nums: Vec<f64> = (2..6).map(|k| field(&agg_path, line, rec, k)).collect::<Result<_>>()?;
            let ok = rec[0] == a.method
                && field::<u8>(&agg_path, line, rec, 1)? == a.qf
                && close(nums[0], a.mean_mae)
                && close(nums[1], a.std_mae)
                && close(nums[2], a.mean_mse)
                && close(nums[3], a.std_mse);
            if !ok {
                return Err(LabError::Audit(format!("aggregate.csv line {line} does not match the base rows")));
            }
        }
    }
    write_aggregate(&out.join("aggregate.csv"), &agg)?;
    let plot_files = emit_tradeoff_data(out, &agg)?;
    Ok(ReportSummary {
        base_rows: base.len(),
        audited_runs: audited,
        aggregate: agg,
        plot_files,
    })
}

/// The single plan described by `settings`. An explicit curriculum is used
/// verbatim; otherwise CPT follows the master curriculum down to the target.
pub fn train_plan(settings: &Settings) -> RunPlan {
    let mut plan = plan_for(settings, settings.mode, settings.target_qf);
    if settings.mode == RunMode::Cpt {
        if let Some(c) = &settings.curriculum {
            plan.curriculum = Some(c.clone());
        }
    }
    plan
}

/// Trains one plan for every seed, writing `config.txt`, `eval.csv`,
/// `counts.csv` and `runs/`.
pub fn train(settings: &Settings, out: &Path, progress: Progress) -> Result<(Vec<Job>, Vec<RunRecord>)> {
    settings.validate()?;
    let arch = Architecture::toy();
    let plan = train_plan(settings);
    plan.validate()?;
    let jobs: Vec<Job> = settings
        .seeds
        .iter()
        .map(|&seed| Job {
            label: settings.mode.to_string(),
            plan: plan.clone(),
            seed,
        })
        .collect();
    let corpus = corpus_for(settings, &arch, &required_qualities([&plan]))?;
    let records = run_jobs(&jobs, &arch, &corpus, settings.jobs, progress)?;
    write_file(&out.join("config.txt"), settings.render(crate::config::KEYS).as_bytes())?;
    write_csv(
        &out.join("eval.csv"),
        &BASE_HEADER,
        jobs.iter().zip(&records).map(|(j, r)| {
            let row = eval_row(&j.label, r);
            let mut f = vec![row.method.clone()];
            f.extend(base_fields(&row));
            f
        }),
    )?;
    write_csv(&out.join("counts.csv"), &COUNTS_HEADER, counts_rows(&jobs, &records))?;
    write_runs(out, &jobs, &records)?;
    Ok((jobs, records))
}
