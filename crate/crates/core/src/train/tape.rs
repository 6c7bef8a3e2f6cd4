//! Forward record and adjoint pass.

use crate::error::{Error, Result};
use crate::layers::Readout;
use crate::model::{Model, Stage, Work};
use crate::sim::{conjugate, rotate_vec};

/// One recorded layer application.
#[derive(Debug, Clone)]
pub struct TapeOp {
    pub layer: usize,
    pub kind: &'static str,
    /// Angle used by each gate occurrence, in forward order.
    pub angles: Vec<f64>,
    pub(crate) input: Work,
}

/// Everything one forward pass leaves behind for [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    n_params: usize,
    ops: Vec<TapeOp>,
    output: Work,
    gathered: Vec<f64>,
    readout: Readout,
}

impl Tape {
    pub(crate) fn new(n_params: usize, ops: Vec<TapeOp>, output: Work, gathered: Vec<f64>, readout: Readout) -> Self {
        Tape {
            n_params,
            ops,
            output,
            gathered,
            readout,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[TapeOp] {
        &self.ops
    }

    pub fn readout(&self) -> &Readout {
        &self.readout
    }

    /// Unnormalized outcome mass per class.
    pub fn class_mass(&self) -> &[f64] {
        &self.gathered
    }
}

/// Exact gradient of a loss with respect to every parameter slot, given
/// `grad_probs = ∂loss/∂(class probabilities)`.
pub fn backward(model: &Model, tape: &Tape, grad_probs: &[f64]) -> Result<Vec<f64>> {
    if tape.n_params != model.n_params() {
        return Err(Error::TapeMismatch {
            expected: model.n_params(),
            got: tape.n_params,
        });
    }
    if tape.ops.len() != model.stages().len() {
        return Err(Error::TapeMismatch {
            expected: model.stages().len(),
            got: tape.ops.len(),
        });
    }
    if grad_probs.len() != model.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_classes(),
            got: grad_probs.len(),
        });
    }
    let mut grad = vec![0.0; model.n_params()];
    if tape.readout.degenerate {
        return Ok(grad);
    }

    // Through p = g / S.
    let total: f64 = tape.gathered.iter().sum();
    let mean: f64 = grad_probs.iter().zip(&tape.readout.probs).map(|(a, b)| a * b).sum();
    let out_dim = model.output_basis().dim();
    let mut dprob = vec![0.0; out_dim];
    for (c, support) in model.supports().iter().enumerate() {
        let dg = (grad_probs[c] - mean) / total;
        for &i in support {
            dprob[i] += dg;
        }
    }
    let mut adj = match &tape.output {
        Work::Pure(v) => Work::Pure(v.iter().zip(&dprob).map(|(a, d)| 2.0 * a * d).collect()),
        Work::Mixed(_) => {
            let mut g = vec![0.0; out_dim * out_dim];
            for (i, d) in dprob.iter().enumerate() {
                g[i * out_dim + i] = *d;
            }
            Work::Mixed(g)
        }
    };

    let mut state = tape.output.clone();
    for (si, (stage, op)) in model.stages().iter().zip(&tape.ops).enumerate().rev() {
        let dim = model.stage_basis(si).dim();
        match stage {
            Stage::Gates(gates) => {
                if op.angles.len() != gates.len() {
                    return Err(Error::TapeMismatch {
                        expected: gates.len(),
                        got: op.angles.len(),
                    });
                }
                for (g, &theta) in gates.iter().zip(&op.angles).rev() {
                    let (s, c) = theta.sin_cos();
                    match (&mut state, &mut adj) {
                        (Work::Pure(psi), Work::Pure(gv)) => {
                            let mut d = 0.0;
                            for &(i, j) in &g.pairs {
                                d += gv[i] * psi[j] - gv[j] * psi[i];
                            }
                            grad[g.slot] += d;
                            rotate_vec(psi, &g.pairs, c, -s);
                            rotate_vec(gv, &g.pairs, c, -s);
                        }
                        (Work::Mixed(rho), Work::Mixed(gm)) => {
                            grad[g.slot] += density_derivative(rho, gm, dim, &g.pairs);
                            conjugate(rho, dim, &g.pairs, c, -s);
                            conjugate(gm, dim, &g.pairs, c, -s);
                        }
                        _ => unreachable!("state and adjoint share a representation"),
                    }
                }
            }
            Stage::Pool(ch) => {
                let Work::Mixed(gm) = &adj else {
                    unreachable!("pooling always outputs a density matrix")
                };
                adj = match &op.input {
                    Work::Pure(psi) => Work::Pure(ch.adjoint_pure_raw(psi, gm)),
                    Work::Mixed(_) => Work::Mixed(ch.adjoint_density_raw(gm)),
                };
                state = op.input.clone();
            }
            Stage::Merge { map, dim: out } => {
                adj = match &adj {
                    Work::Pure(g) => Work::Pure(map.iter().map(|&m| g[m]).collect()),
                    Work::Mixed(g) => {
                        let mut back = Vec::with_capacity(map.len() * map.len());
                        for &mi in map {
                            for &mj in map {
                                back.push(g[mi * out + mj]);
                            }
                        }
                        Work::Mixed(back)
                    }
                };
                state = op.input.clone();
            }
        }
    }
    for (slot, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { slot });
        }
    }
    Ok(grad)
}

/// `<G, Aρ> + <G, ρAᵀ>` with `A` the rotation generator on `pairs`.
fn density_derivative(rho: &[f64], g: &[f64], dim: usize, pairs: &[(usize, usize)]) -> f64 {
    let mut d = 0.0;
    for &(i, j) in pairs {
        let (gi, gj) = (&g[i * dim..(i + 1) * dim], &g[j * dim..(j + 1) * dim]);
        let (ri, rj) = (&rho[i * dim..(i + 1) * dim], &rho[j * dim..(j + 1) * dim]);
        for col in 0..dim {
            d += gi[col] * rj[col] - gj[col] * ri[col];
        }
        for row in 0..dim {
            let r = row * dim;
            d += g[r + i] * rho[r + j] - g[r + j] * rho[r + i];
        }
    }
    d
}
