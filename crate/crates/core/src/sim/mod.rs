//! Subspace-restricted simulation of RBS circuits and the pooling channel.
//!
//! All amplitudes are real: RBS gates are real rotations and the pooling
//! channel's Kraus operators are 0/1 matrices.

mod circuit;
mod pooling;
mod state;

pub use circuit::{build_butterfly, build_pyramid, build_x, AnsatzCircuit, AnsatzKind, RbsGate};
pub use pooling::{pooling_channel, PoolingChannel};
pub use state::{measure_probabilities, DensityState, QuantumState, SubspaceState};

use crate::basis::{BasisIndexer, BitString};
use crate::error::Result;
use crate::layers::TensorBasis;

/// Drift tolerance for norms, traces and eigenvalues.
pub const INVARIANT_TOL: f64 = 1e-9;

/// The basis a state is expressed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Basis {
    /// Unary registers, one excitation each.
    Tensor(TensorBasis),
    /// Every `n`-bit string of weight `k`.
    Hamming(BasisIndexer),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Tensor(t) => t.dim(),
            Basis::Hamming(h) => h.dim(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Basis::Tensor(t) => t.n_qubits(),
            Basis::Hamming(h) => h.n_qubits(),
        }
    }

    pub fn weight(&self) -> usize {
        match self {
            Basis::Tensor(t) => t.n_registers(),
            Basis::Hamming(h) => h.weight(),
        }
    }

    pub fn bitstring(&self, index: usize) -> Result<BitString> {
        match self {
            Basis::Tensor(t) => {
                if index >= t.dim() {
                    return Err(crate::Error::IndexOutOfRange { index, dim: t.dim() });
                }
                Ok(t.bitstring(index))
            }
            Basis::Hamming(h) => h.unrank(index),
        }
    }

    pub fn index_of(&self, b: BitString) -> Option<usize> {
        match self {
            Basis::Tensor(t) => t.index_of(b),
            Basis::Hamming(h) => h.rank(b).ok(),
        }
    }

    /// Index pairs `(i, j)` rotated by an RBS on `(p, q)`: `i` carries the
    /// `(0, 1)` pattern, `j` the `(1, 0)` pattern.
    pub fn rbs_pairs(&self, p: usize, q: usize) -> Result<Vec<(usize, usize)>> {
        match self {
            Basis::Tensor(t) => t.rbs_pairs(p, q),
            Basis::Hamming(h) => Ok(h.rbs_partner_pairs(p, q)?.pairs),
        }
    }

    pub fn as_tensor(&self) -> Option<&TensorBasis> {
        match self {
            Basis::Tensor(t) => Some(t),
            Basis::Hamming(_) => None,
        }
    }
}

// Planar rotation kernels. For a pair (i, j):
//   a_i' =  c a_i + s a_j
//   a_j' = -s a_i + c a_j

#[inline]
pub(crate) fn rotate_vec(v: &mut [f64], pairs: &[(usize, usize)], c: f64, s: f64) {
    for &(i, j) in pairs {
        let a = v[i];
        let b = v[j];
        v[i] = c * a + s * b;
        v[j] = -s * a + c * b;
    }
}

/// Rotates rows `i`, `j` of a row-major `dim × dim` matrix.
#[inline]
pub(crate) fn rotate_rows(m: &mut [f64], dim: usize, pairs: &[(usize, usize)], c: f64, s: f64) {
    for &(i, j) in pairs {
        let (ri, rj) = two_rows(m, dim, i, j);
        for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
            let x = *a;
            let y = *b;
            *a = c * x + s * y;
            *b = -s * x + c * y;
        }
    }
}

/// Rotates columns `i`, `j` of a row-major `dim × dim` matrix.
#[inline]
pub(crate) fn rotate_cols(m: &mut [f64], dim: usize, pairs: &[(usize, usize)], c: f64, s: f64) {
    for row in m.chunks_exact_mut(dim) {
        rotate_vec(row, pairs, c, s);
    }
}

/// `U ρ Uᵀ` for the planar rotation on `pairs`.
#[inline]
pub(crate) fn conjugate(m: &mut [f64], dim: usize, pairs: &[(usize, usize)], c: f64, s: f64) {
    rotate_rows(m, dim, pairs, c, s);
    rotate_cols(m, dim, pairs, c, s);
}

fn two_rows(m: &mut [f64], dim: usize, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_ne!(i, j);
    if i < j {
        let (lo, hi) = m.split_at_mut(j * dim);
        (&mut lo[i * dim..(i + 1) * dim], &mut hi[..dim])
    } else {
        let (lo, hi) = m.split_at_mut(i * dim);
        let (rj, ri) = (&mut lo[j * dim..(j + 1) * dim], &mut hi[..dim]);
        (ri, rj)
    }
}
