//! Offline probes of a trained model: angle statistics from a metrics file,
//! curvature of the training loss around a checkpoint, and the inexactness
//! bound of one inner loop started there.

use std::fmt::Write;
use std::path::Path;

use fwrnn_core::data::Dataset;
use fwrnn_core::diagnostics::{
    estimate_curvature, lambda_bound, summarize_angles, AngleRecord, AngleSummary, CurvatureEstimate,
};
use fwrnn_core::models::{ModelSpec, ParamSet, SequenceBatch};
use fwrnn_core::numerics::{derive_seed, Rng};
use fwrnn_core::optim::{fw_inner_loop, BatchMode, FwConfig};

use crate::metrics::read_metrics;
use crate::HarnessError;

/// Angle statistics over the `angle_deg` column; empty cells count as undefined.
pub fn angle_summary(metrics: &Path) -> Result<AngleSummary, HarnessError> {
    let m = read_metrics(metrics)?;
    let records: Vec<AngleRecord> = m
        .column("angle_deg")
        .into_iter()
        .enumerate()
        .map(|(i, d)| AngleRecord { step: i + 1, degrees: d })
        .collect();
    Ok(summarize_angles(&records))
}

#[derive(Clone, Debug)]
pub struct LocalProbe {
    pub curvature: CurvatureEstimate,
    /// Gradient norms met by one inner loop from the checkpoint.
    pub grad_norms: Vec<f64>,
    pub lambda: Option<f64>,
    pub subsample: usize,
}

/// Curvature of the loss on a fixed training subsample inside the `fw.p`
/// ball of `radius` around `params`, then one fixed-batch inner loop of
/// `fw.inner_steps` iterations with that radius for the lambda bound.
pub fn local_probe(
    model: &ModelSpec,
    params: &ParamSet,
    data: &Dataset,
    fw: &FwConfig,
    radius: f64,
    samples: usize,
    subsample: usize,
    seed: u64,
) -> Result<LocalProbe, HarnessError> {
    let n = data.train.len().min(subsample.max(1));
    let mut idx = Rng::new(derive_seed(seed, 0)).permutation(data.train.len());
    idx.truncate(n);
    idx.sort_unstable();
    let batch: SequenceBatch = data.train.select(&idx);
    let mut scratch = params.clone();
    let center = params.flatten();
    let mut eval = |w: &[f64]| -> fwrnn_core::Result<(f64, Vec<f64>)> {
        scratch.assign_flat(w)?;
        let (l, g) = model.loss_and_grad(&scratch, &batch)?;
        Ok((l, g.flatten()))
    };
    let curvature = estimate_curvature(
        |w| eval(w).unwrap_or_else(|_| (f64::NAN, vec![f64::NAN; w.len()])),
        &center,
        radius,
        fw.p,
        samples,
        &mut Rng::new(derive_seed(seed, 1)),
    )?;
    let cfg = FwConfig {
        batch_mode: BatchMode::Fixed,
        ..fw.clone()
    };
    let mut oracle = |w: &[f64], _k: usize| eval(w);
    let (_, report) = fw_inner_loop(&center, &mut oracle, &cfg, 1, radius)?;
    let lambda = if curvature.estimate > 0.0 {
        Some(lambda_bound(radius, curvature.estimate, &report.grad_norms)?)
    } else {
        None
    };
    Ok(LocalProbe {
        curvature,
        grad_norms: report.grad_norms,
        lambda,
        subsample: n,
    })
}

fn num(v: f64) -> String {
    // TOML spells these in lower case
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:?}")
    }
}

/// `key = value` lines (valid TOML) for the CLI.
pub fn format_report(angles: Option<&AngleSummary>, probe: Option<&LocalProbe>) -> String {
    let mut s = String::new();
    if let Some(a) = angles {
        let _ = writeln!(s, "[angles]");
        let _ = writeln!(s, "count = {}", a.count);
        let _ = writeln!(s, "undefined = {}", a.undefined);
        let _ = writeln!(s, "mean_deg = {}", num(a.mean));
        let _ = writeln!(s, "std_deg = {}", num(a.std));
        let _ = writeln!(s, "within_45 = {}", num(a.within_45));
    }
    if let Some(p) = probe {
        let _ = writeln!(s, "[curvature]");
        let _ = writeln!(s, "estimate = {}", num(p.curvature.estimate));
        let _ = writeln!(s, "samples = {}", p.curvature.samples);
        let _ = writeln!(s, "skipped = {}", p.curvature.skipped);
        let _ = writeln!(s, "radius = {}", num(p.curvature.radius));
        let _ = writeln!(s, "p = {}", num(p.curvature.p.value()));
        let _ = writeln!(s, "subsample = {}", p.subsample);
        let _ = writeln!(s, "[lambda]");
        let norms: Vec<String> = p.grad_norms.iter().map(|g| num(*g)).collect();
        let _ = writeln!(s, "grad_norms = [{}]", norms.join(", "));
        if let Some(l) = p.lambda {
            let _ = writeln!(s, "lambda = {}", num(l));
        }
    }
    s
}
