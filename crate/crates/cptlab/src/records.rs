//! Run records on disk: one checkpoint per stage plus CSV logs.

use crate::error::{LabError, Result};
use crate::formats::{save_checkpoint, write_file};
use cptlab_core::curriculum::RunRecord;
use std::path::Path;

pub const LOG_HEADER: [&str; 5] = ["stage", "qf", "epoch", "train_loss", "val_mae"];
pub const STAGES_HEADER: [&str; 7] = ["stage", "qf", "parent_qf", "epochs", "best_epoch", "best_val_mae", "optimizer_steps"];

fn csv_bytes<I, R>(path: &Path, header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(LabError::csv(path))?;
    for r in rows {
        w.write_record(r).map_err(LabError::csv(path))?;
    }
    w.into_inner().map_err(|e| LabError::io(path)(e.into_error()))
}

/// Writes `record` into `dir`:
///
/// * `stage_<i>_q<qf>.cptm`, the kept weights of each stage;
/// * `log.csv`, one row per epoch;
/// * `stages.csv`, lineage and selection per stage;
/// * `predictions.csv`, per-scene test counts when the run was evaluated.
pub fn write_run_record(record: &RunRecord, dir: &Path) -> Result<()> {
    for s in &record.stages {
        save_checkpoint(&s.model, &dir.join(format!("stage_{:02}_q{:03}.cptm", s.index, s.qf.get())))?;
    }
    let log = dir.join("log.csv");
    let rows = record.stages.iter().flat_map(|s| {
        s.logs.iter().map(|l| {
            vec![
                l.stage.to_string(),
                l.qf.to_string(),
                l.epoch.to_string(),
                l.train_loss.to_string(),
                l.val_mae.to_string(),
            ]
        })
    });
    write_file(&log, &csv_bytes(&log, &LOG_HEADER, rows)?)?;

    let stages = dir.join("stages.csv");
    let rows = record.stages.iter().map(|s| {
        vec![
            s.index.to_string(),
            s.qf.to_string(),
            s.parent_qf.map_or(String::new(), |q| q.to_string()),
            s.epochs.to_string(),
            s.best_epoch.to_string(),
            s.best_val_mae.to_string(),
            s.optimizer_steps.to_string(),
        ]
    });
    write_file(&stages, &csv_bytes(&stages, &STAGES_HEADER, rows)?)?;

    if let Some(ev) = &record.evaluation {
        let p = dir.join("predictions.csv");
        let rows = ev
            .scene_ids
            .iter()
            .zip(ev.pred_counts.iter().zip(&ev.gt_counts))
            .map(|(id, (p, g))| vec![crate::dataset::scene_id(*id), p.to_string(), g.to_string()]);
        write_file(&p, &csv_bytes(&p, &["scene_id", "pred_count", "gt_count"], rows)?)?;
    }
    Ok(())
}

pub(crate) fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    write_file(path, &csv_bytes(path, header, rows)?)
}
