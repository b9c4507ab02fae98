//! Central finite differences against the analytic BPTT gradient.

use fwrnn_core::models::{CellKind, InitSpec, LossKind, ModelSpec, ParamSet, SequenceBatch, Targets};
use fwrnn_core::numerics::{Matrix, Rng};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-5;
/// Denominator floor for the relative error. Central differences carry about
/// 1e-11 of absolute rounding noise at this step, which would dominate the
/// ratio for gradient entries far below this size.
const FLOOR: f64 = 1e-4;

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
        // keep the elementwise recurrence in a stable range
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

/// Signs of every pre-activation; a change means a ReLU kink lies inside the
/// difference stencil and the central difference is not a derivative estimate.
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

struct Report {
    worst: f64,
    checked: usize,
    skipped: usize,
}

fn check(inst: &Instance) -> Report {
    let (_, grad) = inst.spec.loss_and_grad(&inst.params, &inst.batch).unwrap();
    let relu = inst.spec.cell == CellKind::Indrnn;
    let base = relu.then(|| pattern(inst, &inst.params));
    let mut rep = Report { worst: 0.0, checked: 0, skipped: 0 };
    for i in 0..inst.params.len() {
        let mut plus = inst.params.clone();
        plus.flat_mut()[i] += STEP;
        let mut minus = inst.params.clone();
        minus.flat_mut()[i] -= STEP;
        if let Some(base) = &base {
            if pattern(inst, &plus) != *base || pattern(inst, &minus) != *base {
                rep.skipped += 1;
                continue;
            }
        }
        let fp = inst.spec.forward(&plus, &inst.batch).unwrap().loss;
        let fm = inst.spec.forward(&minus, &inst.batch).unwrap().loss;
        let numeric = (fp - fm) / (2.0 * STEP);
        let analytic = grad.flat()[i];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
        rep.worst = rep.worst.max(rel);
        rep.checked += 1;
    }
    rep
}

fn run(cell: CellKind) {
    let mut worst = 0.0f64;
    let (mut checked, mut skipped) = (0, 0);
    for seed in 0..100 {
        let inst = instance(cell, seed);
        let r = check(&inst);
        worst = worst.max(r.worst);
        assert!(r.checked > 0, "seed {seed}: every coordinate straddles a kink");
        checked += r.checked;
        skipped += r.skipped;
    }
    eprintln!("{cell:?}: worst relative error {worst:e}, {checked} coordinates, {skipped} skipped at kinks");
    assert!(worst < TOL, "{cell:?}: worst relative error {worst:e}");
}

#[test]
fn vanilla_matches_finite_differences() {
    run(CellKind::Vanilla);
}

#[test]
fn indrnn_matches_finite_differences() {
    run(CellKind::Indrnn);
}
