//! Self-check suite behind `hwcnn verify`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisIndexer;
use crate::error::Result;
use crate::layers::{Connectivity, ConvLayerSpec, DenseLayerSpec, PoolLayerSpec, TensorBasis};
use crate::model::{LayerSpec, Model};
use crate::oracle::{self, FullState, Subspace};
use crate::sim::{AnsatzCircuit, AnsatzKind, Basis, PoolingChannel, QuantumState, RbsGate, SubspaceState};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }
}

/// Runs every invariant check; `quick` uses fewer random trials.
pub fn run_suite(quick: bool) -> Vec<CheckOutcome> {
    let trials = if quick { 10 } else { 60 };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    vec![
        CheckOutcome::from("hw_preservation", hw_preservation(&mut rng, trials)),
        CheckOutcome::from("orthogonality", orthogonality(&mut rng)),
        CheckOutcome::from("norm_trace_conservation", norm_trace(&mut rng, trials)),
        CheckOutcome::from("pooling_vs_oracle", pooling_oracle(&mut rng, trials)),
        CheckOutcome::from("readout_simplex", readout_simplex(&mut rng, trials)),
        CheckOutcome::from("scaling_invariance", scaling_invariance(&mut rng, trials)),
        CheckOutcome::from("gradient_vs_finite_difference", gradient_fd(&mut rng, trials.min(20))),
    ]
}

fn random_circuit<R: Rng>(rng: &mut R, n: usize, n_gates: usize) -> Result<(AnsatzCircuit, Vec<f64>)> {
    let gates = (0..n_gates)
        .map(|slot| {
            let p = rng.gen_range(0..n);
            let mut q = rng.gen_range(0..n - 1);
            if q >= p {
                q += 1;
            }
            RbsGate { p, q, slot }
        })
        .collect();
    let params = (0..n_gates).map(|_| rng.gen_range(-3.2..3.2)).collect();
    Ok((AnsatzCircuit::new(n, n_gates, gates)?, params))
}

fn random_unit<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn hw_preservation(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut leaked = 0.0f64;
    let mut block_ok = true;
    for _ in 0..trials {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=3.min(n - 1));
        let n_gates = rng.gen_range(1..=30);
        let (circ, params) = random_circuit(rng, n, n_gates)?;
        let gates = oracle::bind_circuit(&circ, &params);
        block_ok &= oracle::block_diagonality_check(&gates, n)?;
        let basis = Basis::Hamming(BasisIndexer::new(n, k)?);
        let mut sub = SubspaceState::new(basis.clone(), random_unit(rng, basis.dim()))?;
        let target = Subspace::Hamming { n, k };
        let mut full = FullState::embed(&sub, &target)?;
        for g in gates {
            oracle::apply_gate_full(&mut full, g)?;
        }
        sub.apply_circuit(&circ, &params)?;
        leaked = leaked.max(oracle::leakage(&full, &target)?);
        let proj = oracle::project_to_subspace(&full, &target)?;
        worst = worst.max(max_diff(sub.amplitudes(), proj.amplitudes()));
    }
    Ok((
        block_ok && worst <= 1e-10 && leaked == 0.0,
        format!(
            "{trials} circuits, max amplitude error {worst:.2e}, leaked mass {leaked:.1e}, block diagonal {block_ok}"
        ),
    ))
}

fn orthogonality(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (n, k) in [(4usize, 1usize), (4, 2), (6, 2), (8, 2), (8, 3)] {
        for kind in [AnsatzKind::Pyramid, AnsatzKind::Butterfly, AnsatzKind::X] {
            if kind == AnsatzKind::Butterfly && !n.is_power_of_two() {
                continue;
            }
            let c = kind.build(n)?;
            let params: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
            let basis = Basis::Hamming(BasisIndexer::new(n, k)?);
            let d = basis.dim();
            let u = DMatrix::from_row_slice(d, d, &c.realized_matrix(&basis, &params)?);
            let err = (u.transpose() * &u - DMatrix::identity(d, d)).amax();
            worst = worst.max(err);
            cases += 1;
        }
    }
    Ok((worst <= 1e-10, format!("{cases} circuits, max |UᵀU - I| {worst:.2e}")))
}

fn random_pipeline<R: Rng>(rng: &mut R) -> Result<Model> {
    let side = [4usize, 8][rng.gen_range(0..2)];
    let kinds = [AnsatzKind::Pyramid, AnsatzKind::Butterfly, AnsatzKind::X];
    let mut kind = || kinds[rng.gen_range(0..3)];
    let (k1, k2) = (kind(), kind());
    let kd = kind();
    let layers = vec![
        LayerSpec::Conv(ConvLayerSpec::uniform(2, 2, k1)),
        LayerSpec::Pool(PoolLayerSpec::default()),
        LayerSpec::Conv(ConvLayerSpec::uniform(if side == 8 { 4 } else { 2 }, 2, k2)),
        LayerSpec::Merge,
        LayerSpec::Dense(DenseLayerSpec {
            connectivity: Connectivity::Ansatz(kd),
        }),
    ];
    Model::new(&[side, side], layers, None, 4)
}

fn density_check(m: &[f64], dim: usize) -> (f64, f64, f64) {
    let rho = DMatrix::from_row_slice(dim, dim, m);
    let asym = (&rho - rho.transpose()).amax();
    let min_eig = rho.symmetric_eigenvalues().min();
    (rho.trace(), asym, min_eig)
}

fn norm_trace(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut drift = 0.0f64;
    let mut asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for _ in 0..trials {
        let model = random_pipeline(rng)?;
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        let x: Vec<f64> = (0..model.input_basis().dim())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let mut state: QuantumState = model.encode(&x)?.into();
        let mut offset = 0;
        for layer in model.layers() {
            state = match layer {
                LayerSpec::Conv(c) => {
                    let np = c.n_params()?;
                    let s = crate::layers::conv_forward(state, c, &params[offset..offset + np])?;
                    offset += np;
                    s
                }
                LayerSpec::Pool(p) => crate::layers::pool_forward(&state, p)?.into(),
                LayerSpec::Merge => crate::layers::merge_registers(state)?,
                LayerSpec::Dense(d) => {
                    let np = d.circuit(state.basis().n_qubits())?.n_params();
                    let s = crate::layers::dense_forward(state, d, &params[offset..offset + np])?;
                    offset += np;
                    s
                }
            };
            match &state {
                QuantumState::Pure(s) => drift = drift.max((s.norm() - 1.0).abs()),
                QuantumState::Mixed(r) => {
                    let (tr, a, e) = density_check(r.matrix(), r.dim());
                    drift = drift.max((tr - 1.0).abs());
                    asym = asym.max(a);
                    min_eig = min_eig.min(e);
                }
            }
        }
        let end = model.forward_state(&x, &params)?;
        drift = drift.max((end.total_probability() - 1.0).abs());
    }
    Ok((
        drift <= 1e-9 && asym <= 1e-12 && min_eig >= -1e-9,
        format!(
            "{trials} pipelines, max norm/trace drift {drift:.2e}, asymmetry {asym:.1e}, min eigenvalue {min_eig:.2e}"
        ),
    ))
}

fn pooling_oracle(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut window = 0.0f64;
    for _ in 0..trials {
        let x: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..1.0)).collect();
        let dims = vec![4, 4];
        let tb = TensorBasis::from_dims(&dims)?;
        let psi = SubspaceState::normalized(Basis::Tensor(tb.clone()), x.clone())?;
        let ours = PoolingChannel::new(&tb, &[0, 1])?.apply_pure(&psi)?;
        let full = FullState::embed(&psi, &Subspace::Tensor(dims.clone()))?;
        let reference = oracle::pool_reference(&full, &dims, &[0, 1])?;
        worst = worst.max(max_diff(ours.matrix(), reference.matrix()));
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        for l in 0..2 {
            for k in 0..2 {
                let w: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)]
                    .iter()
                    .map(|&(a, b)| x[(2 * l + a) * 4 + 2 * k + b].powi(2))
                    .sum::<f64>()
                    / norm2;
                window = window.max((ours.get(2 * l + k, 2 * l + k) - w).abs());
            }
        }
    }
    Ok((
        worst <= 1e-10 && window <= 1e-12,
        format!("{trials} images, max entry error {worst:.2e}, window-sum error {window:.2e}"),
    ))
}

fn readout_simplex(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut negative = false;
    for _ in 0..trials {
        let model = random_pipeline(rng)?;
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        let x: Vec<f64> = (0..model.input_basis().dim())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let r = model.predict(&x, &params)?;
        negative |= r.probs.iter().any(|&p| p < 0.0);
        worst = worst.max((r.probs.iter().sum::<f64>() - 1.0).abs());
    }
    Ok((
        !negative && worst <= 1e-12,
        format!("{trials} readouts, max |Σp - 1| {worst:.2e}, negative entries {negative}"),
    ))
}

fn scaling_invariance(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut exact = true;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let model = random_pipeline(rng)?;
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        let x: Vec<f64> = (0..model.input_basis().dim())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let base = model.predict(&x, &params)?.probs;
        for c in [2.0, 0.25, 1024.0] {
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            exact &= model.predict(&xs, &params)?.probs == base;
        }
        for c in [3.7, 1e-3, 12345.6] {
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            worst = worst.max(max_diff(&model.predict(&xs, &params)?.probs, &base));
        }
    }
    Ok((
        exact && worst <= 1e-12,
        format!("{trials} inputs, power-of-two scales identical {exact}, other scales max diff {worst:.2e}"),
    ))
}

fn gradient_fd(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let model = random_pipeline(rng)?;
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..model.input_basis().dim())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let label = rng.gen_range(0..model.n_classes());
        let (_, _, grad) = model.loss_and_grad(&x, label, &params)?;
        let loss = |p: &[f64]| -> Result<f64> { Ok(crate::train::cross_entropy(&model.predict(&x, p)?.probs, label)) };
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            let up = loss(&p)?;
            p[i] -= 2.0 * h;
            let down = loss(&p)?;
            let fd = (up - down) / (2.0 * h);
            let err = (grad[i] - fd).abs();
            let rel = if err <= 1e-8 {
                0.0
            } else {
                err / fd.abs().max(grad[i].abs())
            };
            worst = worst.max(rel);
        }
    }
    Ok((
        worst <= 1e-4,
        format!("{trials} models, max relative error {worst:.2e}"),
    ))
}
