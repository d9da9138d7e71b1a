use std::fmt::Write;

use crate::learners::PredictedBatch;
use crate::{Error, Loss, Result};

/// Quantile levels reported per row by [`diagnostics`].
pub const DIAGNOSTIC_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn check_len(batch: &PredictedBatch, y: &[f64]) -> Result<()> {
    if batch.len() != y.len() {
        return Err(Error::Shape { expected: batch.len(), got: y.len() });
    }
    Ok(())
}

/// `F_i(y_i)`, the predicted cdf of each row at its label.
pub fn probability_residuals(batch: &PredictedBatch, y: &[f64]) -> Result<Vec<f64>> {
    check_len(batch, y)?;
    Ok(batch.dists.iter().zip(y).map(|(d, y)| d.cdf(*y)).collect())
}

/// `L(p_i, y_i)` for each row.
pub fn loss_residuals(batch: &PredictedBatch, y: &[f64], loss: &Loss) -> Result<Vec<f64>> {
    check_len(batch, y)?;
    loss.eval_batch(&batch.dists, y)
}

/// One row of the diagnostic table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub y: f64,
    /// Predictive mean, or the median when the mean does not exist.
    pub point: f64,
    pub loss: f64,
    /// Loss minus the paired baseline loss, when a baseline is supplied.
    pub zeroed_loss: Option<f64>,
    pub probability_residual: f64,
    pub quantiles: [f64; 5],
}

/// Per-row point estimate, loss, probability residual and predicted quantiles.
pub fn diagnostics(
    batch: &PredictedBatch,
    y: &[f64],
    loss: &Loss,
    baseline: Option<&PredictedBatch>,
) -> Result<Vec<DiagnosticRow>> {
    let losses = loss_residuals(batch, y, loss)?;
    let base = baseline.map(|b| loss_residuals(b, y, loss)).transpose()?;
    let prob = probability_residuals(batch, y)?;
    batch
        .dists
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut quantiles = [0.0; 5];
            for (q, a) in quantiles.iter_mut().zip(DIAGNOSTIC_QUANTILES) {
                *q = d.quantile(a)?;
            }
            let point = d.mean().unwrap_or(quantiles[2]);
            Ok(DiagnosticRow {
                y: y[i],
                point,
                loss: losses[i],
                zeroed_loss: base.as_ref().map(|b| losses[i] - b[i]),
                probability_residual: prob[i],
                quantiles,
            })
        })
        .collect()
}

/// Renders diagnostic rows as CSV with a header.
pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from("row,y,point,loss,zeroed_loss,prob_residual,q05,q25,q50,q75,q95\n");
    for (i, r) in rows.iter().enumerate() {
        let zeroed = r.zeroed_loss.map(|z| format!("{z:.10e}")).unwrap_or_default();
        let _ = write!(out, "{i},{:.10e},{:.10e},{:.10e},{zeroed},{:.10e}", r.y, r.point, r.loss, r.probability_residual);
        for q in r.quantiles {
            let _ = write!(out, ",{q:.10e}");
        }
        out.push('\n');
    }
    out
}
