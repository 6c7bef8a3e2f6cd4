//! CNOT-and-discard pooling on tensor-encoded states.
//!
//! In a pooled register of size `d` qubits pair up as `(2t, 2t+1)` with the
//! even qubit as control. After the CNOTs the controls are traced out,
//! which is the channel `ρ ↦ Σ_m K_m ρ K_mᵀ` with one Kraus operator per
//! control measurement outcome:
//!
//! * all controls `0`: `K_none` maps unary position `2t+1 → t`;
//! * control `t` is `1`: `K_t` maps position `2t → t`.
//!
//! Multi-register operators are tensor products of the per-register ones.
//! Every operator is a partial injection of basis indices, so a Kraus term
//! is stored as its list of `(input, output)` index pairs.

use super::{Basis, DensityState, QuantumState, SubspaceState};
use crate::error::{Error, Result};
use crate::layers::{RegisterLayout, TensorBasis};

/// A compiled pooling channel between two tensor bases.
#[derive(Debug, Clone)]
pub struct PoolingChannel {
    input: TensorBasis,
    output: TensorBasis,
    pooled: Vec<bool>,
    /// One entry per Kraus operator: `(input index, output index)` pairs.
    terms: Vec<Vec<(usize, usize)>>,
}

impl PoolingChannel {
    pub fn new(input: &TensorBasis, pooled_registers: &[usize]) -> Result<Self> {
        let k = input.n_registers();
        let mut pooled = vec![false; k];
        for &r in pooled_registers {
            if r >= k {
                return Err(Error::IndexOutOfRange { index: r, dim: k });
            }
            let size = input.dims()[r];
            if !size.is_multiple_of(2) {
                return Err(Error::OddRegister { register: r, size });
            }
            pooled[r] = true;
        }
        let out_dims: Vec<usize> = input
            .dims()
            .iter()
            .zip(&pooled)
            .map(|(&d, &p)| if p { d / 2 } else { d })
            .collect();
        let output = TensorBasis::new(RegisterLayout::new(out_dims)?);

        // Per register: list of local maps (input position → output position).
        let local: Vec<Vec<Vec<(usize, usize)>>> = input
            .dims()
            .iter()
            .zip(&pooled)
            .map(|(&d, &p)| {
                if p {
                    let mut ops = vec![(0..d / 2).map(|t| (2 * t + 1, t)).collect::<Vec<_>>()];
                    ops.extend((0..d / 2).map(|t| vec![(2 * t, t)]));
                    ops
                } else {
                    vec![(0..d).map(|i| (i, i)).collect()]
                }
            })
            .collect();

        let mut terms = Vec::new();
        let mut choice = vec![0usize; k];
        loop {
            // Cartesian product of the chosen local maps, flattened.
            let mut entries = vec![(0usize, 0usize)];
            for r in 0..k {
                let map = &local[r][choice[r]];
                let (si, so) = (input.stride(r), output.stride(r));
                let mut next = Vec::with_capacity(entries.len() * map.len());
                for &(fi, fo) in &entries {
                    for &(li, lo) in map {
                        next.push((fi + li * si, fo + lo * so));
                    }
                }
                entries = next;
            }
            terms.push(entries);

            let mut r = k;
            loop {
                if r == 0 {
                    return Ok(PoolingChannel {
                        input: input.clone(),
                        output,
                        pooled,
                        terms,
                    });
                }
                r -= 1;
                choice[r] += 1;
                if choice[r] < local[r].len() {
                    break;
                }
                choice[r] = 0;
            }
        }
    }

    pub fn input_basis(&self) -> &TensorBasis {
        &self.input
    }

    pub fn output_basis(&self) -> &TensorBasis {
        &self.output
    }

    pub fn pooled_registers(&self) -> Vec<usize> {
        (0..self.pooled.len()).filter(|&r| self.pooled[r]).collect()
    }

    pub(crate) fn terms(&self) -> &[Vec<(usize, usize)>] {
        &self.terms
    }

    pub fn n_kraus(&self) -> usize {
        self.terms.len()
    }

    /// Explicit Kraus operators as row-major `out_dim × in_dim` 0/1 matrices.
    pub fn kraus_matrices(&self) -> Vec<Vec<f64>> {
        let (din, dout) = (self.input.dim(), self.output.dim());
        self.terms
            .iter()
            .map(|t| {
                let mut k = vec![0.0; dout * din];
                for &(i, o) in t {
                    k[o * din + i] = 1.0;
                }
                k
            })
            .collect()
    }

    fn check_input(&self, basis: &Basis) -> Result<()> {
        match basis {
            Basis::Tensor(t) if *t == self.input => Ok(()),
            _ => Err(Error::BasisMismatch {
                expected: "pooling input tensor",
            }),
        }
    }

    pub fn apply_density(&self, rho: &DensityState) -> Result<DensityState> {
        self.check_input(rho.basis())?;
        let out = self.apply_density_raw(rho.matrix());
        Ok(DensityState::from_parts(Basis::Tensor(self.output.clone()), out))
    }

    /// `Σ_m (K_m ψ)(K_m ψ)ᵀ` without forming `|ψ><ψ|`.
    pub fn apply_pure(&self, psi: &SubspaceState) -> Result<DensityState> {
        self.check_input(psi.basis())?;
        let out = self.apply_pure_raw(psi.amplitudes());
        Ok(DensityState::from_parts(Basis::Tensor(self.output.clone()), out))
    }

    pub fn apply(&self, state: &QuantumState) -> Result<DensityState> {
        match state {
            QuantumState::Pure(s) => self.apply_pure(s),
            QuantumState::Mixed(r) => self.apply_density(r),
        }
    }

    pub(crate) fn apply_density_raw(&self, rho: &[f64]) -> Vec<f64> {
        let (din, dout) = (self.input.dim(), self.output.dim());
        let mut out = vec![0.0; dout * dout];
        for term in &self.terms {
            for &(i, oi) in term {
                let row_in = &rho[i * din..(i + 1) * din];
                let row_out = &mut out[oi * dout..(oi + 1) * dout];
                for &(j, oj) in term {
                    row_out[oj] += row_in[j];
                }
            }
        }
        out
    }

    pub(crate) fn apply_pure_raw(&self, psi: &[f64]) -> Vec<f64> {
        let dout = self.output.dim();
        let mut out = vec![0.0; dout * dout];
        for term in &self.terms {
            for &(i, oi) in term {
                let a = psi[i];
                if a == 0.0 {
                    continue;
                }
                let row_out = &mut out[oi * dout..(oi + 1) * dout];
                for &(j, oj) in term {
                    row_out[oj] += a * psi[j];
                }
            }
        }
        out
    }

    /// Adjoint of the channel: `G ↦ Σ_m K_mᵀ G K_m`.
    pub(crate) fn adjoint_density_raw(&self, grad_out: &[f64]) -> Vec<f64> {
        let (din, dout) = (self.input.dim(), self.output.dim());
        let mut g = vec![0.0; din * din];
        for term in &self.terms {
            for &(i, oi) in term {
                let row_out = &grad_out[oi * dout..(oi + 1) * dout];
                let row_in = &mut g[i * din..(i + 1) * din];
                for &(j, oj) in term {
                    row_in[j] += row_out[oj];
                }
            }
        }
        g
    }

    /// Gradient with respect to `ψ` of `<G, Σ_m (K_m ψ)(K_m ψ)ᵀ>`.
    pub(crate) fn adjoint_pure_raw(&self, psi: &[f64], grad_out: &[f64]) -> Vec<f64> {
        let dout = self.output.dim();
        let mut g = vec![0.0; psi.len()];
        for term in &self.terms {
            for &(i, oi) in term {
                let mut acc = 0.0;
                for &(j, oj) in term {
                    acc += (grad_out[oi * dout + oj] + grad_out[oj * dout + oi]) * psi[j];
                }
                g[i] += acc;
            }
        }
        g
    }
}

/// Applies the pooling channel on `pooled_registers` to a tensor-basis density state.
pub fn pooling_channel(rho: &DensityState, pooled_registers: &[usize]) -> Result<DensityState> {
    let tb = rho
        .basis()
        .as_tensor()
        .ok_or(Error::BasisMismatch { expected: "tensor" })?;
    PoolingChannel::new(tb, pooled_registers)?.apply_density(rho)
}
