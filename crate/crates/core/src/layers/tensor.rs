//! Tensor bases: `k` unary registers of sizes `(d_1, ..., d_k)`.

use serde::{Deserialize, Serialize};

use crate::basis::BitString;
use crate::error::{Error, Result};

/// Ordered register sizes of a tensor-encoded state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterLayout(Vec<usize>);

impl RegisterLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Config(vec![format!(
                "register layout {dims:?} must be non-empty with positive sizes"
            )]));
        }
        let n: usize = dims.iter().sum();
        if n > crate::basis::MAX_QUBITS {
            return Err(Error::UnsupportedScale { n, k: dims.len() });
        }
        Ok(RegisterLayout(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn n_registers(&self) -> usize {
        self.0.len()
    }
}

/// Basis `|e_{i_1}> ⊗ ... ⊗ |e_{i_k}>` indexed row-major by `(i_1, ..., i_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorBasis {
    layout: RegisterLayout,
    offsets: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl TensorBasis {
    pub fn new(layout: RegisterLayout) -> Self {
        let dims = layout.dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &d in dims {
            offsets.push(acc);
            acc += d;
        }
        let mut strides = vec![1; dims.len()];
        for r in (0..dims.len().saturating_sub(1)).rev() {
            strides[r] = strides[r + 1] * dims[r + 1];
        }
        let dim = dims.iter().product();
        TensorBasis {
            layout,
            offsets,
            strides,
            dim,
        }
    }

    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Ok(TensorBasis::new(RegisterLayout::new(dims.to_vec())?))
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits()
    }

    pub fn n_registers(&self) -> usize {
        self.layout.n_registers()
    }

    /// First qubit of register `r`.
    pub fn offset(&self, r: usize) -> usize {
        self.offsets[r]
    }

    pub fn stride(&self, r: usize) -> usize {
        self.strides[r]
    }

    /// Register and local position of a global qubit index.
    pub fn locate(&self, qubit: usize) -> Result<(usize, usize)> {
        let n = self.n_qubits();
        if qubit >= n {
            return Err(Error::QubitOutOfRange { qubit, n });
        }
        let r = self.offsets.partition_point(|&o| o <= qubit) - 1;
        Ok((r, qubit - self.offsets[r]))
    }

    pub fn flat_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.n_registers() {
            return Err(Error::DimensionMismatch {
                expected: self.n_registers(),
                got: multi.len(),
            });
        }
        let mut flat = 0;
        for (r, (&i, &d)) in multi.iter().zip(self.dims()).enumerate() {
            if i >= d {
                return Err(Error::IndexOutOfRange { index: i, dim: d });
            }
            flat += i * self.strides[r];
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        self.dims()
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (flat / s) % d)
            .collect()
    }

    /// The `n`-qubit string of basis element `flat`.
    pub fn bitstring(&self, flat: usize) -> BitString {
        let n = self.n_qubits();
        let mut bits = 0u64;
        for (r, i) in self.multi_index(flat).into_iter().enumerate() {
            bits |= 1u64 << (n - 1 - (self.offsets[r] + i));
        }
        BitString::from_raw(bits, n)
    }

    /// Inverse of [`TensorBasis::bitstring`]; `None` if `b` is not a tensor basis element.
    pub fn index_of(&self, b: BitString) -> Option<usize> {
        if b.len() != self.n_qubits() {
            return None;
        }
        let mut flat = 0;
        for (r, &d) in self.dims().iter().enumerate() {
            let mut hit = None;
            for i in 0..d {
                if b.qubit(self.offsets[r] + i) {
                    if hit.is_some() {
                        return None;
                    }
                    hit = Some(i);
                }
            }
            flat += hit? * self.strides[r];
        }
        Some(flat)
    }

    /// RBS partner pairs for `(p, q)`; both qubits must belong to one register.
    pub fn rbs_pairs(&self, p: usize, q: usize) -> Result<Vec<(usize, usize)>> {
        if p == q {
            return Err(Error::SameQubit(p));
        }
        let (rp, lp) = self.locate(p)?;
        let (rq, lq) = self.locate(q)?;
        if rp != rq {
            return Err(Error::CrossRegister { p, q });
        }
        Ok(self.register_pairs(rp, lp, lq))
    }

    /// Pairs `(i, j)` where `i` has register `r` at `lq` and `j` at `lp`.
    pub(crate) fn register_pairs(&self, r: usize, lp: usize, lq: usize) -> Vec<(usize, usize)> {
        let d = self.dims()[r];
        let s = self.strides[r];
        let outer = self.dim / (d * s);
        let mut pairs = Vec::with_capacity(self.dim / d);
        for o in 0..outer {
            let base = o * d * s;
            for inner in 0..s {
                let i = base + lq * s + inner;
                let j = base + lp * s + inner;
                pairs.push((i, j));
            }
        }
        pairs
    }
}
