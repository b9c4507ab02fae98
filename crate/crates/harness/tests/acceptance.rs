//! Acceptance criteria. Prints one line per criterion:
//!
//! ```text
//! criterion N <name>: PASS|FAIL (<seconds>s) <detail>
//! ```
//!
//! Runs without the libtest harness so the lines are never captured. Numeric
//! arguments select criteria (`cargo test --test acceptance -- 5 10`); other
//! arguments select by name substring. Datasets are read from
//! `FWRNN_DATASET_ROOT`, else `data/` at the workspace root.
//!
//! A criterion that needs an external dataset which is not on disk reports
//! FAIL with the missing path but does not fail the process; every criterion
//! that could be evaluated must pass.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fwrnn_core::data::Dataset;
use fwrnn_core::diagnostics::estimate_curvature;
use fwrnn_core::lmo::lmo_lp_ball;
use fwrnn_core::models::{CellKind, InitSpec, LossKind, ModelSpec, ParamSet, SequenceBatch, Targets};
use fwrnn_core::numerics::{Matrix, PNorm, Rng};
use fwrnn_core::optim::{
    fw_inner_loop, fw_outer_step, BatchMode, DeltaSchedule, FwConfig, OuterMode, StepRule,
    TrainRecord,
};
use fwrnn_harness::metrics::without_timing;
use fwrnn_harness::runner::{METRICS_FILE, RESOLVED_FILE};
use fwrnn_harness::{parse_config, run_experiment, ExperimentConfig, HarnessError};

const ADDING: &str = include_str!("../../../configs/adding.toml");
const HAR2: &str = include_str!("../../../configs/har2.toml");
const NOISY_HAR2: &str = include_str!("../../../configs/noisy-har2.toml");
const MNIST14: &str = include_str!("../../../configs/mnist14.toml");

enum Verdict {
    Pass(String),
    Fail(String),
    /// The criterion's dataset is not available here.
    NoData(String),
}

use Verdict::{Fail, NoData, Pass};

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

struct Ctx {
    root: PathBuf,
    scratch: tempfile::TempDir,
    /// FW run on HAR-2, shared by the accuracy and angle criteria.
    har_fw: Option<Result<Vec<TrainRecord>, String>>,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.scratch.path().join(name)
    }
}

fn config(text: &str, overrides: &[&str]) -> ExperimentConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    parse_config(text, &o).expect("bundled config is valid")
}

enum RunError {
    NoData(String),
    Other(String),
}

fn run(ctx: &Ctx, name: &str, cfg: &ExperimentConfig) -> Result<Vec<TrainRecord>, RunError> {
    match run_experiment(cfg, Some(&ctx.out(name)), Some(&ctx.root)) {
        Ok(r) => Ok(r.records),
        Err(HarnessError::Data(fwrnn_core::Error::MissingFile(p))) => {
            Err(RunError::NoData(format!("dataset file not found: {}", p.display())))
        }
        Err(e) => Err(RunError::Other(format!("{name}: {e}"))),
    }
}

macro_rules! run_or_return {
    ($ctx:expr, $name:expr, $cfg:expr) => {
        match run($ctx, $name, $cfg) {
            Ok(r) => r,
            Err(RunError::NoData(d)) => return NoData(d),
            Err(RunError::Other(d)) => return Fail(d),
        }
    };
}

// ---- 1: LMO against the dual norm and random feasible points ----

fn dual_norm(g: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        g.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if p.is_infinite() {
        g.iter().map(|x| x.abs()).sum()
    } else {
        let q = p / (p - 1.0);
        g.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn p_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn criterion_1(_: &mut Ctx) -> Verdict {
    let mut rng = Rng::new(1);
    let mut worst_rel = 0.0f64;
    let mut worst_gap = f64::NEG_INFINITY;
    for &p in &[1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let pn = if p.is_infinite() { PNorm::INFINITY } else { PNorm::new(p).unwrap() };
        for case in 0..1000 {
            let dim = 1 + rng.below(5) as usize;
            let g: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let delta = rng.uniform_range(0.1, 2.0);
            let r = match lmo_lp_ball(&g, pn, delta) {
                Ok(r) => r,
                Err(e) => return Fail(format!("p={p} case {case}: {e}")),
            };
            let want = -delta * dual_norm(&g, p);
            worst_rel = worst_rel.max((r.attained_value - want).abs() / want.abs());
            if p_norm(&r.direction, p) > delta * (1.0 + 1e-12) {
                return Fail(format!("p={p} case {case}: minimizer outside the ball"));
            }
            // Random boundary points; the linear objective is minimized on the boundary.
            let mut best = f64::INFINITY;
            let mut x = vec![0.0; dim];
            for _ in 0..100_000 {
                for v in x.iter_mut() {
                    *v = rng.normal();
                }
                let scale = delta / p_norm(&x, p);
                let val: f64 = x.iter().zip(&g).map(|(a, b)| a * scale * b).sum();
                best = best.min(val);
            }
            worst_gap = worst_gap.max(r.attained_value - best);
        }
    }
    verdict(
        worst_rel <= 1e-9 && worst_gap <= 1e-12,
        format!(
            "5000 gradients; worst relative error vs -delta*||g||_q {worst_rel:.1e}; \
             max(LMO - best of 1e5 feasible) {worst_gap:.2e}"
        ),
    )
}

// ---- 2: BPTT against central finite differences ----

const FD_STEP: f64 = 1e-5;
/// Relative-error denominator floor; the difference quotient carries about
/// 1e-11 of absolute rounding noise at this step.
const FD_FLOOR: f64 = 1e-4;

struct Instance {
    spec: ModelSpec,
    params: ParamSet,
    batch: SequenceBatch,
}

fn instance(cell: CellKind, seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let steps = 1 + rng.below(20) as usize;
    let hidden = 1 + rng.below(8) as usize;
    let input = 1 + rng.below(3) as usize;
    let output = 1 + rng.below(3) as usize;
    let layers = 1 + rng.below(2) as usize;
    let batch = 1 + rng.below(3) as usize;
    let loss = if rng.below(2) == 0 { LossKind::Mse } else { LossKind::CrossEntropy };
    let spec = ModelSpec {
        cell,
        input_dim: input,
        hidden_dim: hidden,
        output_dim: output,
        layers,
        loss,
        init: InitSpec::default(),
    };
    let mut params = spec.init_params(&mut rng).unwrap();
    for v in params.flat_mut() {
        *v += 0.3 * rng.normal();
    }
    if cell == CellKind::Indrnn {
        for l in 0..layers {
            for u in params.view_mut(&format!("l{l}.u")).unwrap() {
                *u = rng.uniform_range(-1.0, 1.0);
            }
        }
    }
    let inputs = (0..batch * steps * input).map(|_| rng.normal()).collect();
    let targets = match loss {
        LossKind::Mse => Targets::Values(
            Matrix::from_vec(batch, output, (0..batch * output).map(|_| rng.normal()).collect())
                .unwrap(),
        ),
        LossKind::CrossEntropy => {
            Targets::Classes((0..batch).map(|_| rng.below(output as u64) as usize).collect())
        }
    };
    let batch = SequenceBatch::new(inputs, batch, steps, input, targets).unwrap();
    Instance { spec, params, batch }
}

/// Pre-activation signs; a flip inside the stencil means a ReLU kink was crossed.
fn pattern(inst: &Instance, params: &ParamSet) -> Vec<bool> {
    let tr = inst.spec.forward(params, &inst.batch).unwrap();
    let mut out = Vec::new();
    for l in 0..tr.layers() {
        for m in 1..=tr.steps() {
            out.extend(tr.preact(l, m).iter().map(|&a| a > 0.0));
        }
    }
    out
}

fn criterion_2(_: &mut Ctx) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for cell in [CellKind::Vanilla, CellKind::Indrnn] {
        let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
        for seed in 0..100 {
            let inst = instance(cell, seed);
            let (_, grad) = inst.spec.loss_and_grad(&inst.params, &inst.batch).unwrap();
            let base = (cell == CellKind::Indrnn).then(|| pattern(&inst, &inst.params));
            for i in 0..inst.params.len() {
                let mut plus = inst.params.clone();
                plus.flat_mut()[i] += FD_STEP;
                let mut minus = inst.params.clone();
                minus.flat_mut()[i] -= FD_STEP;
                if let Some(b) = &base {
                    if pattern(&inst, &plus) != *b || pattern(&inst, &minus) != *b {
                        skipped += 1;
                        continue;
                    }
                }
                let fp = inst.spec.forward(&plus, &inst.batch).unwrap().loss;
                let fm = inst.spec.forward(&minus, &inst.batch).unwrap().loss;
                let numeric = (fp - fm) / (2.0 * FD_STEP);
                let analytic = grad.flat()[i];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR);
                worst = worst.max(rel);
                checked += 1;
            }
        }
        ok &= worst < 1e-5;
        parts.push(format!("{cell:?} worst {worst:.1e} over {checked} coords ({skipped} at kinks)"));
    }
    verdict(ok, format!("100 instances per cell; {}", parts.join("; ")))
}

// ---- 3: one inner step is normalized SGD, on HAR-2 minibatches ----

fn load(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<Dataset, RunError> {
    cfg.data.load(Some(&ctx.root)).map_err(|e| match e {
        fwrnn_core::Error::MissingFile(p) => {
            RunError::NoData(format!("dataset file not found: {}", p.display()))
        }
        e => RunError::Other(e.to_string()),
    })
}

fn criterion_3(ctx: &mut Ctx) -> Verdict {
    let cfg = config(HAR2, &[]);
    let ds = match load(ctx, &cfg) {
        Ok(d) => d,
        Err(RunError::NoData(d)) => return NoData(d),
        Err(RunError::Other(d)) => return Fail(d),
    };
    let spec = cfg.model.resolve(&ds);
    let start = spec.init_params(&mut Rng::new(5)).unwrap();
    let mut order = Rng::new(6).permutation(ds.train.len());
    order.truncate(100 * 32);
    let batches: Vec<SequenceBatch> = order.chunks(32).map(|c| ds.train.select(c)).collect();
    let (eta, delta) = (0.5, 0.1);

    let mut direct = start.clone();
    for b in &batches {
        let (_, g) = spec.loss_and_grad(&direct, b).unwrap();
        let g = g.flatten();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (w, gi) in direct.flat_mut().iter_mut().zip(&g) {
            *w -= eta * (delta * gi / norm);
        }
    }

    let fw = FwConfig {
        p: PNorm::TWO,
        delta0: delta,
        delta_schedule: DeltaSchedule::Constant,
        inner_steps: 1,
        eta,
        outer_mode: OuterMode::Plain,
        batch_mode: BatchMode::Fixed,
        step_rule: StepRule::Harmonic,
    };
    let mut params = start.clone();
    let mut scratch = start.clone();
    for (t, b) in batches.iter().enumerate() {
        let omega = params.flatten();
        let mut oracle = |w: &[f64], _: usize| -> fwrnn_core::Result<(f64, Vec<f64>)> {
            scratch.assign_flat(w)?;
            let (l, g) = spec.loss_and_grad(&scratch, b)?;
            Ok((l, g.flatten()))
        };
        let (d, _) = match fw_inner_loop(&omega, &mut oracle, &fw, t + 1, delta) {
            Ok(x) => x,
            Err(e) => return Fail(format!("step {}: {e}", t + 1)),
        };
        fw_outer_step(params.flat_mut(), &d, &fw, None).unwrap();
    }
    let differing = params
        .flat()
        .iter()
        .zip(direct.flat())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    verdict(
        differing == 0 && params.flat() != start.flat(),
        format!("{} steps of 32 sequences; {differing} of {} weights differ bitwise", batches.len(), params.len()),
    )
}

// ---- 4: convex quadratic ----

fn criterion_4(_: &mut Ctx) -> Verdict {
    let dim = 10;
    let mut rng = Rng::new(0);
    let target: Vec<f64> = (0..dim).map(|_| 2.0 * rng.normal()).collect();
    let target_norm = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f = |w: &[f64]| 0.5 * w.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let eta = 1.0;
    let cfg = FwConfig {
        p: PNorm::TWO,
        delta0: 10.0,
        delta_schedule: DeltaSchedule::Harmonic { tau: 1.0 },
        inner_steps: 10,
        eta,
        outer_mode: OuterMode::Plain,
        batch_mode: BatchMode::Fixed,
        step_rule: StepRule::Harmonic,
    };
    let mut w = vec![0.0; dim];
    let bound = f(&w) / eta;
    let mut prev = f(&w);
    let mut worst_ratio = 0.0f64;
    for t in 1..=1000 {
        let mut oracle = |x: &[f64], _: usize| -> fwrnn_core::Result<(f64, Vec<f64>)> {
            let g: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
            Ok((0.5 * g.iter().map(|v| v * v).sum::<f64>(), g))
        };
        let (d, _) = fw_inner_loop(&w, &mut oracle, &cfg, t, cfg.delta_at(t, 1.0)).unwrap();
        fw_outer_step(&mut w, &d, &cfg, None).unwrap();
        let cur = f(&w);
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        // rounding of w alone moves F by about eps * |w| * |w - w*| per coordinate
        let slack = 4.0
            * f64::EPSILON
            * ((wn + target_norm) * (2.0 * cur).sqrt() * (dim as f64).sqrt() + dim as f64 * cur);
        if cur > prev + slack {
            return Fail(format!("loss rose at t={t}: {prev:e} -> {cur:e}"));
        }
        worst_ratio = worst_ratio.max(t as f64 * cur / bound);
        prev = cur;
    }
    verdict(
        worst_ratio <= 1.0,
        format!(
            "nonincreasing over 1000 steps; max t*(F-F*) = {:.3e} vs bound F(w0)/eta = {bound:.3e}",
            worst_ratio * bound
        ),
    )
}

// ---- 5: adding task ----

fn losses(r: &[TrainRecord]) -> Vec<f64> {
    r.iter().map(|x| x.test_loss).collect()
}

/// FW runs stop after this many epochs: reaching the target here reaches it
/// within the 100-epoch budget. The baseline runs the whole budget.
const ADDING_FW_EPOCHS: usize = 20;

fn criterion_5(ctx: &mut Ctx) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [1, 5] {
        let cfg = config(
            ADDING,
            &[&format!("train.fw.inner_steps={k}"), &format!("train.epochs={ADDING_FW_EPOCHS}")],
        );
        let rec = run_or_return!(ctx, &format!("adding-fw{k}"), &cfg);
        let l = losses(&rec);
        let hit = l.iter().position(|&v| v < 0.05).map(|i| i + 1);
        ok &= hit.is_some();
        parts.push(format!(
            "FW K={k}: test MSE < 0.05 at epoch {}, final {:.4}",
            hit.map_or("never".into(), |e| e.to_string()),
            l.last().unwrap()
        ));
    }
    let cfg = config(ADDING, &["train.optimizer=sgd"]);
    let rec = run_or_return!(ctx, "adding-sgd", &cfg);
    let l = losses(&rec);
    let (lo, hi) = l.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // At the end of the budget it sits at the constant predictor and at no
    // epoch did it get below the band; early epochs are still fitting the mean.
    let last = *l.last().unwrap();
    let stuck = rec.len() == 100 && (last - 1.0 / 6.0).abs() <= 0.03 && lo >= 1.0 / 6.0 - 0.03;
    ok &= stuck;
    parts.push(format!(
        "SGD {} epochs: final test MSE {last:.4}, range over epochs [{lo:.4}, {hi:.4}]",
        rec.len()
    ));
    verdict(ok, parts.join("; "))
}

// ---- 6, 7, 8: HAR-2 ----

fn best_accuracy(r: &[TrainRecord]) -> f64 {
    r.iter().filter_map(|x| x.test_accuracy).fold(f64::NAN, f64::max)
}

fn har_fw(ctx: &mut Ctx) -> Result<Vec<TrainRecord>, String> {
    if ctx.har_fw.is_none() {
        let cfg = config(HAR2, &[]);
        let r = run(ctx, "har2-fw", &cfg).map_err(|e| match e {
            RunError::NoData(d) => format!("nodata:{d}"),
            RunError::Other(d) => d,
        });
        ctx.har_fw = Some(r);
    }
    ctx.har_fw.clone().unwrap()
}

fn unwrap_har(r: Result<Vec<TrainRecord>, String>) -> Result<Vec<TrainRecord>, Verdict> {
    r.map_err(|e| match e.strip_prefix("nodata:") {
        Some(d) => NoData(d.to_string()),
        None => Fail(e),
    })
}

fn criterion_6(ctx: &mut Ctx) -> Verdict {
    let fw = match unwrap_har(har_fw(ctx)) {
        Ok(r) => r,
        Err(v) => return v,
    };
    let sgd = run_or_return!(ctx, "har2-sgd", &config(HAR2, &["train.optimizer=sgd"]));
    let (a, b) = (100.0 * best_accuracy(&fw), 100.0 * best_accuracy(&sgd));
    verdict(
        a >= 91.5 && a - b >= 3.0,
        format!("best test accuracy FW K=5 {a:.2}%, SGD {b:.2}% (gap {:.2})", a - b),
    )
}

fn criterion_7(ctx: &mut Ctx) -> Verdict {
    let fw = run_or_return!(ctx, "noisy-fw", &config(NOISY_HAR2, &[]));
    let sgd = run_or_return!(ctx, "noisy-sgd", &config(NOISY_HAR2, &["train.optimizer=sgd"]));
    let (a, b) = (100.0 * best_accuracy(&fw), 100.0 * best_accuracy(&sgd));
    verdict(a - b >= 8.0, format!("best test accuracy FW K=5 {a:.2}%, SGD {b:.2}% (gap {:.2})", a - b))
}

fn criterion_8(ctx: &mut Ctx) -> Verdict {
    let fw = match unwrap_har(har_fw(ctx)) {
        Ok(r) => r,
        Err(v) => return v,
    };
    let angles: Vec<f64> = fw.iter().filter_map(|r| r.angle_deg).collect();
    if angles.is_empty() {
        return Fail("no angles recorded".into());
    }
    let within = angles.iter().filter(|a| a.abs() <= 45.0).count();
    let frac = within as f64 / angles.len() as f64;
    verdict(frac >= 0.95, format!("{within} of {} epoch angles within 45 degrees", angles.len()))
}

// ---- 9: 14x14 pixel MNIST ----

fn criterion_9(ctx: &mut Ctx) -> Verdict {
    let fw = run_or_return!(ctx, "mnist-fw", &config(MNIST14, &[]));
    let sgd = run_or_return!(ctx, "mnist-sgd", &config(MNIST14, &["train.optimizer=sgd"]));
    let (lf, ls) = (fw.last().unwrap().train_loss, sgd.last().unwrap().train_loss);
    let (af, as_) = (
        100.0 * fw.last().unwrap().test_accuracy.unwrap(),
        100.0 * sgd.last().unwrap().test_accuracy.unwrap(),
    );
    // The applied direction must stay inside its ball every epoch.
    let excess = fw.iter().filter_map(|r| r.ball_excess).fold(f64::NEG_INFINITY, f64::max);
    let contained = excess <= 1e-12 && fw.len() == 20;
    verdict(
        lf < ls && af - as_ >= 5.0 && contained,
        format!(
            "final train loss FW {lf:.4} vs SGD {ls:.4}; test accuracy FW {af:.2}% vs SGD {as_:.2}%; \
             max ball excess {excess:.1e}"
        ),
    )
}

// ---- 10: curvature estimate of x^2/2 on [-1, 1] ----

fn criterion_10(_: &mut Ctx) -> Verdict {
    let mut rng = Rng::new(10);
    let est = estimate_curvature(|x| (0.5 * x[0] * x[0], vec![x[0]]), &[0.0], 1.0, PNorm::TWO, 100_000, &mut rng);
    match est {
        Ok(e) => verdict(
            (3.8..=4.0).contains(&e.estimate),
            format!("estimate {:.5} from {} samples", e.estimate, e.samples),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

// ---- 11: determinism ----

fn criterion_11(ctx: &mut Ctx) -> Verdict {
    let optimizers = ["sgd", "sgd-clip", "tbptt", "adam", "fw", "fw+tbptt", "normalized-sgd"];
    for opt in optimizers {
        let cfg = config(
            ADDING,
            &[
                &format!("train.optimizer=\"{opt}\""),
                "train.epochs=2",
                "train.clip_threshold=1.0",
                "train.tbptt_len=8",
                "train.probe.angle=true",
                "train.probe.samples=64",
                "data.adding.train_size=256",
                "data.adding.test_size=64",
                "data.adding.steps=24",
                "data.validation_fraction=0.25",
                "model.hidden_dim=16",
            ],
        );
        let a = ctx.out(&format!("det-{opt}-a"));
        let b = ctx.out(&format!("det-{opt}-b"));
        if let Err(e) = run_experiment(&cfg, Some(&a), None) {
            return Fail(format!("{opt}: {e}"));
        }
        // second run from the resolved config the first one wrote
        let resolved = std::fs::read_to_string(a.join(RESOLVED_FILE)).unwrap();
        let again = match parse_config(&resolved, &[]) {
            Ok(c) => c,
            Err(e) => return Fail(format!("{opt}: resolved config does not parse: {e}")),
        };
        if let Err(e) = run_experiment(&again, Some(&b), None) {
            return Fail(format!("{opt}: {e}"));
        }
        let ma = std::fs::read_to_string(a.join(METRICS_FILE)).unwrap();
        let mb = std::fs::read_to_string(b.join(METRICS_FILE)).unwrap();
        if without_timing(&ma) != without_timing(&mb) {
            return Fail(format!("{opt}: metrics differ between reruns"));
        }
    }
    Pass(format!(
        "{} optimizers rerun from their resolved configs; metrics identical excluding wall_seconds",
        optimizers.len()
    ))
}

type Criterion = fn(&mut Ctx) -> Verdict;

const CRITERIA: [(u32, &str, Criterion); 11] = [
    (1, "lmo-oracle", criterion_1),
    (2, "bptt-gradient", criterion_2),
    (3, "single-step-equivalence", criterion_3),
    (4, "convex-quadratic", criterion_4),
    (5, "adding-task", criterion_5),
    (6, "har2-accuracy", criterion_6),
    (7, "noisy-har2-robustness", criterion_7),
    (8, "har2-angles", criterion_8),
    (9, "mnist14", criterion_9),
    (10, "curvature-estimate", criterion_10),
    (11, "determinism", criterion_11),
];

fn dataset_root() -> PathBuf {
    match std::env::var_os("FWRNN_DATASET_ROOT") {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: u32, name: &str| {
        filters.is_empty()
            || filters.iter().any(|f| match f.parse::<u32>() {
                Ok(k) => k == n,
                Err(_) => name.contains(f.as_str()),
            })
    };
    let mut ctx = Ctx {
        root: dataset_root(),
        scratch: tempfile::tempdir().expect("scratch directory"),
        har_fw: None,
    };
    let mut failed = Vec::new();
    for (n, name, f) in CRITERIA {
        if !selected(n, name) {
            continue;
        }
        let t = Instant::now();
        let v = f(&mut ctx);
        let secs = t.elapsed().as_secs_f64();
        let (status, detail) = match &v {
            Pass(d) => ("PASS", d.clone()),
            Fail(d) => ("FAIL", d.clone()),
            NoData(d) => ("FAIL", format!("not evaluated, {d}")),
        };
        println!("criterion {n} {name}: {status} ({secs:.1}s) {detail}");
        if matches!(v, Fail(_)) {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
