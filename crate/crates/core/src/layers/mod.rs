//! Network layers acting on tensor-encoded states.
//!
//! The pipeline is `encode → (conv | pool)* → merge → dense → readout`.
//! Convolution and pooling keep the state in a [`TensorBasis`]; merging
//! re-expresses it in the full weight-`k` basis `B_k^n` where the dense
//! layer may couple qubits of different registers.

mod tensor;

pub use tensor::{RegisterLayout, TensorBasis};

use serde::{Deserialize, Serialize};

use crate::basis::BasisIndexer;
use crate::error::{Error, Result};
use crate::sim::{
    AnsatzCircuit, AnsatzKind, Basis, DensityState, PoolingChannel, QuantumState, RbsGate, SubspaceState,
};

/// Below this total gathered mass the readout falls back to uniform.
pub const READOUT_MASS_FLOOR: f64 = 1e-12;

/// Amplitude-encodes a row-major tensor of shape `dims`.
pub fn encode_tensor(x: &[f64], dims: &[usize]) -> Result<SubspaceState> {
    let tb = TensorBasis::from_dims(dims)?;
    if x.len() != tb.dim() {
        return Err(Error::DimensionMismatch {
            expected: tb.dim(),
            got: x.len(),
        });
    }
    SubspaceState::normalized(Basis::Tensor(tb), x.to_vec())
}

/// Stacks `copies` column-shifted versions of a `rows × cols` image into a
/// `(rows, cols, copies)` tensor; copy `t` is shifted right by `t` pixels
/// with zero fill.
pub fn translated_copies(image: &[f64], rows: usize, cols: usize, copies: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols * copies];
    for r in 0..rows {
        for c in 0..cols {
            for t in 0..copies.min(c + 1) {
                out[(r * cols + c) * copies + t] = image[r * cols + c - t];
            }
        }
    }
    out
}

/// Block convolution: the same ansatz on every `K_r` consecutive qubits of register `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    /// Filter size per register; `1` leaves a register untouched.
    pub filter: Vec<usize>,
    /// Ansatz per register.
    pub ansatz: Vec<AnsatzKind>,
}

impl ConvLayerSpec {
    pub fn uniform(k: usize, n_registers: usize, ansatz: AnsatzKind) -> Self {
        ConvLayerSpec {
            filter: vec![k; n_registers],
            ansatz: vec![ansatz; n_registers],
        }
    }

    fn register_circuit(&self, r: usize) -> Result<Option<AnsatzCircuit>> {
        match self.filter[r] {
            1 => Ok(None),
            k => self.ansatz[r].build(k).map(Some),
        }
    }

    /// Independent parameters per register.
    pub fn register_params(&self) -> Result<Vec<usize>> {
        (0..self.filter.len())
            .map(|r| Ok(self.register_circuit(r)?.map_or(0, |c| c.n_params())))
            .collect()
    }

    pub fn n_params(&self) -> Result<usize> {
        Ok(self.register_params()?.iter().sum())
    }

    /// The layer as one circuit over all qubits of `basis`, with slots
    /// shared across the blocks of a register.
    pub fn circuit(&self, basis: &TensorBasis) -> Result<AnsatzCircuit> {
        let k = basis.n_registers();
        if self.filter.len() != k || self.ansatz.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.filter.len(),
            });
        }
        let mut gates = Vec::new();
        let mut slot_offset = 0;
        for r in 0..k {
            let size = basis.dims()[r];
            let kr = self.filter[r];
            if kr == 0 || !size.is_multiple_of(kr) {
                return Err(Error::Divisibility {
                    register: r,
                    size,
                    k: kr,
                });
            }
            let Some(local) = self.register_circuit(r)? else {
                continue;
            };
            for block in 0..size / kr {
                let base = basis.offset(r) + block * kr;
                gates.extend(local.gates().iter().map(|g| RbsGate {
                    p: base + g.p,
                    q: base + g.q,
                    slot: slot_offset + g.slot,
                }));
            }
            slot_offset += local.n_params();
        }
        AnsatzCircuit::new(basis.n_qubits(), slot_offset, gates)
    }

    /// Circuit depth: blocks and registers run in parallel.
    pub fn depth(&self) -> Result<usize> {
        Ok((0..self.filter.len())
            .map(|r| Ok(self.register_circuit(r)?.map_or(0, |c| c.depth())))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0))
    }
}

/// Pooling on a subset of registers; `None` pools all of them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLayerSpec {
    pub registers: Option<Vec<usize>>,
}

impl PoolLayerSpec {
    pub fn resolve(&self, basis: &TensorBasis) -> Vec<usize> {
        self.registers
            .clone()
            .unwrap_or_else(|| (0..basis.n_registers()).collect())
    }
}

/// Dense-layer connectivity over the merged qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Ansatz(AnsatzKind),
    Gates(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayerSpec {
    pub connectivity: Connectivity,
}

impl DenseLayerSpec {
    pub fn circuit(&self, n_qubits: usize) -> Result<AnsatzCircuit> {
        match &self.connectivity {
            Connectivity::Ansatz(kind) => kind.build(n_qubits),
            Connectivity::Gates(pairs) => AnsatzCircuit::from_pairs(n_qubits, pairs),
        }
    }
}

/// Which measurement outcomes stand for the classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutSpec {
    /// One basis index of the final basis per class.
    Outcomes(Vec<usize>),
    /// Class `c` is the probability that qubit `qubits[c]` reads 1.
    QubitMarginal(Vec<usize>),
}

impl ReadoutSpec {
    pub fn n_classes(&self) -> usize {
        match self {
            ReadoutSpec::Outcomes(v) | ReadoutSpec::QubitMarginal(v) => v.len(),
        }
    }

    /// For each class, the basis indices whose probabilities it sums.
    pub fn class_supports(&self, basis: &Basis) -> Result<Vec<Vec<usize>>> {
        let dim = basis.dim();
        let mut seen = std::collections::HashSet::new();
        match self {
            ReadoutSpec::Outcomes(v) => v
                .iter()
                .map(|&i| {
                    if i >= dim {
                        return Err(Error::IndexOutOfRange { index: i, dim });
                    }
                    if !seen.insert(i) {
                        return Err(Error::Config(vec![format!("readout outcome {i} repeated")]));
                    }
                    Ok(vec![i])
                })
                .collect(),
            ReadoutSpec::QubitMarginal(qs) => qs
                .iter()
                .map(|&q| {
                    let n = basis.n_qubits();
                    if q >= n {
                        return Err(Error::QubitOutOfRange { qubit: q, n });
                    }
                    if !seen.insert(q) {
                        return Err(Error::Config(vec![format!("readout qubit {q} repeated")]));
                    }
                    (0..dim)
                        .filter_map(|i| match basis.bitstring(i) {
                            Ok(b) if b.qubit(q) => Some(Ok(i)),
                            Ok(_) => None,
                            Err(e) => Some(Err(e)),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Class distribution plus a flag for the all-mass-missing fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub probs: Vec<f64>,
    pub degenerate: bool,
}

pub(crate) fn readout_from_supports(probabilities: &[f64], supports: &[Vec<usize>]) -> (Vec<f64>, Readout) {
    let gathered: Vec<f64> = supports
        .iter()
        .map(|s| s.iter().map(|&i| probabilities[i]).sum())
        .collect();
    let total: f64 = gathered.iter().sum();
    let n = supports.len();
    let readout = if total < READOUT_MASS_FLOOR {
        Readout {
            probs: vec![1.0 / n as f64; n],
            degenerate: true,
        }
    } else {
        Readout {
            probs: gathered.iter().map(|g| g / total).collect(),
            degenerate: false,
        }
    };
    (gathered, readout)
}

pub fn conv_forward(mut state: QuantumState, spec: &ConvLayerSpec, params: &[f64]) -> Result<QuantumState> {
    let tb = state
        .basis()
        .as_tensor()
        .ok_or(Error::BasisMismatch { expected: "tensor" })?;
    let circuit = spec.circuit(tb)?;
    state.apply_circuit(&circuit, params)?;
    Ok(state)
}

pub fn pool_forward(state: &QuantumState, spec: &PoolLayerSpec) -> Result<DensityState> {
    let tb = state
        .basis()
        .as_tensor()
        .ok_or(Error::BasisMismatch { expected: "tensor" })?;
    PoolingChannel::new(tb, &spec.resolve(tb))?.apply(state)
}

/// Index map from a tensor basis into `B_k^n` with the same qubits.
pub fn merge_map(tb: &TensorBasis) -> Result<(BasisIndexer, Vec<usize>)> {
    let indexer = BasisIndexer::new(tb.n_qubits(), tb.n_registers())?;
    let map = (0..tb.dim())
        .map(|i| indexer.rank(tb.bitstring(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok((indexer, map))
}

pub(crate) fn scatter_vec(v: &[f64], map: &[usize], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (i, &m) in map.iter().enumerate() {
        out[m] = v[i];
    }
    out
}

pub(crate) fn scatter_mat(rho: &[f64], map: &[usize], dim: usize) -> Vec<f64> {
    let din = map.len();
    let mut out = vec![0.0; dim * dim];
    for (i, &mi) in map.iter().enumerate() {
        for (j, &mj) in map.iter().enumerate() {
            out[mi * dim + mj] = rho[i * din + j];
        }
    }
    out
}

/// Re-expresses a tensor-basis state in `B_k^n`.
pub fn merge_registers(state: QuantumState) -> Result<QuantumState> {
    let tb = state
        .basis()
        .as_tensor()
        .ok_or(Error::BasisMismatch { expected: "tensor" })?;
    let (indexer, map) = merge_map(tb)?;
    let basis = Basis::Hamming(indexer);
    let dim = indexer.dim();
    Ok(match state {
        QuantumState::Pure(s) => {
            QuantumState::Pure(SubspaceState::from_parts(basis, scatter_vec(s.amplitudes(), &map, dim)))
        }
        QuantumState::Mixed(r) => {
            QuantumState::Mixed(DensityState::from_parts(basis, scatter_mat(r.matrix(), &map, dim)))
        }
    })
}

/// Restricts a merged state back onto a tensor basis (inverse of merge on its support).
pub fn project_to_tensor(state: &QuantumState, tb: &TensorBasis) -> Result<QuantumState> {
    let (indexer, map) = merge_map(tb)?;
    if *state.basis() != Basis::Hamming(indexer) {
        return Err(Error::BasisMismatch {
            expected: "merged Hamming",
        });
    }
    let basis = Basis::Tensor(tb.clone());
    let dim = indexer.dim();
    Ok(match state {
        QuantumState::Pure(s) => QuantumState::Pure(SubspaceState::from_parts(
            basis,
            map.iter().map(|&m| s.amplitudes()[m]).collect(),
        )),
        QuantumState::Mixed(r) => {
            let m = r.matrix();
            let mut out = Vec::with_capacity(map.len() * map.len());
            for &mi in &map {
                for &mj in &map {
                    out.push(m[mi * dim + mj]);
                }
            }
            QuantumState::Mixed(DensityState::from_parts(basis, out))
        }
    })
}

pub fn dense_forward(mut state: QuantumState, spec: &DenseLayerSpec, params: &[f64]) -> Result<QuantumState> {
    if !matches!(state.basis(), Basis::Hamming(_)) {
        return Err(Error::BasisMismatch {
            expected: "merged Hamming",
        });
    }
    let circuit = spec.circuit(state.basis().n_qubits())?;
    state.apply_circuit(&circuit, params)?;
    Ok(state)
}

pub fn readout(state: &QuantumState, spec: &ReadoutSpec) -> Result<Readout> {
    let supports = spec.class_supports(state.basis())?;
    let probs = crate::sim::measure_probabilities(state);
    Ok(readout_from_supports(&probs, &supports).1)
}
