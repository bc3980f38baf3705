//! Count metrics, evaluation rows and their aggregation.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric needs at least one value")]
    Empty,
    #[error("prediction and ground truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

fn check(pred: &[f64], gt: &[f64]) -> Result<(), MetricError> {
    if pred.len() != gt.len() {
        return Err(MetricError::LengthMismatch(pred.len(), gt.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Mean absolute count error.
pub fn mae(pred: &[f64], gt: &[f64]) -> Result<f64, MetricError> {
    check(pred, gt)?;
    Ok(pred.iter().zip(gt).map(|(p, g)| (p - g).abs()).sum::<f64>() / pred.len() as f64)
}

/// Mean squared count error.
pub fn mse(pred: &[f64], gt: &[f64]) -> Result<f64, MetricError> {
    check(pred, gt)?;
    Ok(pred.iter().zip(gt).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pred.len() as f64)
}

pub fn mean(xs: &[f64]) -> Result<f64, MetricError> {
    if xs.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population standard deviation (divides by `n`).
pub fn population_std(xs: &[f64]) -> Result<f64, MetricError> {
    let m = mean(xs)?;
    Ok(libm::sqrt(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64))
}

/// Relative MAE reduction of `candidate` against `reference`, in percent.
pub fn improvement_pct(reference_mae: f64, candidate_mae: f64) -> f64 {
    if reference_mae == 0.0 {
        return 0.0;
    }
    (reference_mae - candidate_mae) / reference_mae * 100.0
}

/// One evaluated `(method, qf, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub qf: u8,
    pub seed: u64,
    pub avg_size_bytes: f64,
    pub mae: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub qf: u8,
    pub avg_size_bytes: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub seeds: usize,
    /// Set on rows of `improvement_method` when the reference method has a
    /// row at the same qf.
    pub improvement_pct: Option<f64>,
}

/// Groups rows by `(method, qf)` in order of first appearance and computes
/// mean and population std over seeds. Rows of `improvement_method` get an
/// improvement against the mean MAE of `reference_method` at the same qf.
pub fn aggregate(rows: &[EvalRow], reference_method: &str, improvement_method: &str) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, u8)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method.as_str(), r.qf)) {
            keys.push((r.method.as_str(), r.qf));
        }
    }
    let mut out: Vec<AggregateRow> = keys
        .iter()
        .map(|&(method, qf)| {
            let group: Vec<&EvalRow> = rows.iter().filter(|r| r.method == method && r.qf == qf).collect();
            let maes: Vec<f64> = group.iter().map(|r| r.mae).collect();
            let mses: Vec<f64> = group.iter().map(|r| r.mse).collect();
            AggregateRow {
                method: method.into(),
                qf,
                avg_size_bytes: group[0].avg_size_bytes,
                mean_mae: mean(&maes).unwrap(),
                std_mae: population_std(&maes).unwrap(),
                mean_mse: mean(&mses).unwrap(),
                std_mse: population_std(&mses).unwrap(),
                seeds: group.len(),
                improvement_pct: None,
            }
        })
        .collect();
    let reference: Vec<(u8, f64)> = out
        .iter()
        .filter(|a| a.method == reference_method)
        .map(|a| (a.qf, a.mean_mae))
        .collect();
    for a in out.iter_mut().filter(|a| a.method == improvement_method) {
        if let Some(&(_, r)) = reference.iter().find(|(q, _)| *q == a.qf) {
            a.improvement_pct = Some(improvement_pct(r, a.mean_mae));
        }
    }
    out
}

/// One point of an accuracy-vs-size curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub size_bytes: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
}

/// Per-method series sorted by ascending size, methods in first-appearance
/// order.
pub fn tradeoff_series(rows: &[AggregateRow]) -> Vec<(String, Vec<TradeoffPoint>)> {
    let mut out: Vec<(String, Vec<TradeoffPoint>)> = Vec::new();
    for r in rows {
        let p = TradeoffPoint {
            size_bytes: r.avg_size_bytes,
            mean_mae: r.mean_mae,
            std_mae: r.std_mae,
        };
        match out.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, pts)) => pts.push(p),
            None => out.push((r.method.clone(), alloc::vec![p])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.size_bytes.total_cmp(&b.size_bytes));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn row(method: &str, qf: u8, seed: u64, mae: f64) -> EvalRow {
        EvalRow {
            method: method.into(),
            qf,
            seed,
            avg_size_bytes: 1000.0 / qf as f64,
            mae,
            mse: mae * mae,
        }
    }

    #[test]
    fn count_metrics() {
        assert_eq!(mae(&[3.0, 5.0], &[4.0, 4.0]), Ok(1.0));
        assert_eq!(mae(&[10.0], &[0.0]), Ok(10.0));
        assert_eq!(mse(&[3.0, 5.0], &[4.0, 4.0]), Ok(1.0));
        assert_eq!(mse(&[4.0, 0.0], &[0.0, 0.0]), Ok(8.0));
        assert_eq!(mae(&[], &[]), Err(MetricError::Empty));
        assert_eq!(mse(&[1.0], &[]), Err(MetricError::LengthMismatch(1, 0)));
    }

    #[test]
    fn population_std_divides_by_n() {
        assert_eq!(population_std(&[1.0, 3.0]), Ok(1.0));
        assert_eq!(population_std(&[5.0]), Ok(0.0));
    }

    #[test]
    fn aggregate_counts_and_improvement() {
        let mut rows = Vec::new();
        for m in ["NPT", "CPT"] {
            for qf in [1, 5, 10] {
                for seed in [0, 1] {
                    rows.push(row(m, qf, seed, 2.0 + seed as f64));
                }
            }
        }
        let agg = aggregate(&rows, "NPT", "CPT");
        assert_eq!(rows.len(), 12);
        assert_eq!(agg.len(), 6);
        for a in &agg {
            assert_eq!(a.mean_mae, 2.5);
            assert_eq!(a.std_mae, 0.5);
            match a.method.as_str() {
                "CPT" => assert_eq!(a.improvement_pct, Some(0.0)),
                _ => assert_eq!(a.improvement_pct, None),
            }
        }
    }

    #[test]
    fn series_sorted_by_size() {
        let rows = vec![row("NPT", 1, 0, 3.0), row("NPT", 50, 0, 1.0), row("NPT", 10, 0, 2.0)];
        let s = tradeoff_series(&aggregate(&rows, "NPT", "CPT"));
        assert_eq!(s.len(), 1);
        let sizes: Vec<f64> = s[0].1.iter().map(|p| p.size_bytes).collect();
        assert_eq!(sizes, vec![20.0, 100.0, 1000.0]);
        assert!(s[0].1.iter().all(|p| p.std_mae == 0.0));
    }
}
