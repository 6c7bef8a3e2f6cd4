//! Brute-force simulation in the full `2^n` Hilbert space.
//!
//! This module is a reference for tests and `verify`. It shares no index
//! arithmetic with the subspace simulator: qubit `q` of an `n`-qubit
//! register is bit `n - 1 - q` of the full index, and subspaces are found
//! by scanning all `2^n` indices.

use crate::error::{Error, Result};
use crate::sim::{AnsatzCircuit, Basis, DensityState, SubspaceState};

/// Largest register for a dense `2^n × 2^n` density matrix.
pub const MAX_DENSITY_QUBITS: usize = 12;
/// Largest register for a `2^n` state vector.
pub const MAX_STATE_QUBITS: usize = 20;
/// Mass allowed outside a subspace before projection fails.
pub const LEAKAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FullGate {
    Rbs { p: usize, q: usize, theta: f64 },
    Cnot { control: usize, target: usize },
}

impl FullGate {
    /// The 4×4 matrix on `(first, second)` qubits in the order `|00>, |01>, |10>, |11>`.
    fn matrix(&self) -> [[f64; 4]; 4] {
        match *self {
            FullGate::Rbs { theta, .. } => {
                let (s, c) = theta.sin_cos();
                [
                    [1.0, 0.0, 0.0, 0.0],
                    [0.0, c, s, 0.0],
                    [0.0, -s, c, 0.0],
                    [0.0, 0.0, 0.0, 1.0],
                ]
            }
            FullGate::Cnot { .. } => [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
        }
    }

    fn qubits(&self) -> (usize, usize) {
        match *self {
            FullGate::Rbs { p, q, .. } => (p, q),
            FullGate::Cnot { control, target } => (control, target),
        }
    }
}

/// Gates of `circuit` with angles bound from `params`.
pub fn bind_circuit(circuit: &AnsatzCircuit, params: &[f64]) -> Vec<FullGate> {
    circuit
        .gates()
        .iter()
        .map(|g| FullGate::Rbs {
            p: g.p,
            q: g.q,
            theta: params[g.slot],
        })
        .collect()
}

fn bit(x: usize, n: usize, q: usize) -> usize {
    (x >> (n - 1 - q)) & 1
}

fn check_gate(n: usize, gate: &FullGate) -> Result<()> {
    let (a, b) = gate.qubits();
    for x in [a, b] {
        if x >= n {
            return Err(Error::QubitOutOfRange { qubit: x, n });
        }
    }
    if a == b {
        return Err(Error::SameQubit(a));
    }
    Ok(())
}

/// Applies a two-qubit gate to a strided vector view (`get(x)` / `set(x)` over full indices).
fn apply_to_vector(v: &mut [f64], n: usize, gate: &FullGate) {
    let (a, b) = gate.qubits();
    let m = gate.matrix();
    let (ma, mb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    for x in 0..v.len() {
        if bit(x, n, a) == 0 && bit(x, n, b) == 0 {
            let idx = [x, x | mb, x | ma, x | ma | mb];
            let old = idx.map(|i| v[i]);
            for (r, &i) in idx.iter().enumerate() {
                v[i] = (0..4).map(|c| m[r][c] * old[c]).sum();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub n: usize,
    pub amps: Vec<f64>,
}

impl FullState {
    pub fn new(n: usize, amps: Vec<f64>) -> Result<Self> {
        if n > MAX_STATE_QUBITS {
            return Err(Error::OracleTooLarge {
                n,
                max: MAX_STATE_QUBITS,
            });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(FullState { n, amps })
    }

    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        if n > MAX_STATE_QUBITS {
            return Err(Error::OracleTooLarge {
                n,
                max: MAX_STATE_QUBITS,
            });
        }
        let mut amps = vec![0.0; 1 << n];
        if index >= amps.len() {
            return Err(Error::IndexOutOfRange { index, dim: amps.len() });
        }
        amps[index] = 1.0;
        FullState::new(n, amps)
    }

    /// Places subspace amplitudes at their bitstrings.
    pub fn embed(state: &SubspaceState, target: &Subspace) -> Result<Self> {
        let idx = target.indices()?;
        let mut amps = vec![0.0; 1 << target.n_qubits()];
        for (a, &x) in state.amplitudes().iter().zip(&idx) {
            amps[x] = *a;
        }
        FullState::new(target.n_qubits(), amps)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn to_density(&self) -> Result<FullDensity> {
        let d = self.amps.len();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.amps[i] * self.amps[j];
            }
        }
        FullDensity::new(self.n, m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullDensity {
    pub n: usize,
    pub matrix: Vec<f64>,
}

impl FullDensity {
    pub fn new(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::OracleTooLarge {
                n,
                max: MAX_DENSITY_QUBITS,
            });
        }
        let d = 1usize << n;
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: matrix.len(),
            });
        }
        Ok(FullDensity { n, matrix })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim() + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}

pub fn apply_gate_full(state: &mut FullState, gate: FullGate) -> Result<()> {
    check_gate(state.n, &gate)?;
    apply_to_vector(&mut state.amps, state.n, &gate);
    Ok(())
}

/// `U ρ Uᵀ` for a single gate.
pub fn apply_gate_density(rho: &mut FullDensity, gate: FullGate) -> Result<()> {
    check_gate(rho.n, &gate)?;
    let d = rho.dim();
    for row in rho.matrix.chunks_exact_mut(d) {
        apply_to_vector(row, rho.n, &gate);
    }
    let mut col = vec![0.0; d];
    for j in 0..d {
        for (i, c) in col.iter_mut().enumerate() {
            *c = rho.matrix[i * d + j];
        }
        apply_to_vector(&mut col, rho.n, &gate);
        for (i, c) in col.iter().enumerate() {
            rho.matrix[i * d + j] = *c;
        }
    }
    Ok(())
}

/// Splits a full index into (kept bits, discarded bits), each in qubit order.
fn split_index(x: usize, n: usize, keep: &[usize], discard: &[usize]) -> (usize, usize) {
    let pack = |qs: &[usize]| qs.iter().fold(0usize, |acc, &q| (acc << 1) | bit(x, n, q));
    (pack(keep), pack(discard))
}

fn keep_list(n: usize, discard: &[usize]) -> Result<Vec<usize>> {
    for &q in discard {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n });
        }
    }
    Ok((0..n).filter(|q| !discard.contains(q)).collect())
}

/// Traces out `discard`; the remaining qubits keep their relative order.
pub fn partial_trace(rho: &FullDensity, discard: &[usize]) -> Result<FullDensity> {
    let n = rho.n;
    let keep = keep_list(n, discard)?;
    let dk = 1usize << keep.len();
    let mut out = vec![0.0; dk * dk];
    let d = rho.dim();
    let parts: Vec<(usize, usize)> = (0..d).map(|x| split_index(x, n, &keep, discard)).collect();
    for x in 0..d {
        for y in 0..d {
            let ((kx, ex), (ky, ey)) = (parts[x], parts[y]);
            if ex == ey {
                out[kx * dk + ky] += rho.matrix[x * d + y];
            }
        }
    }
    FullDensity::new(keep.len(), out)
}

/// Reduced density matrix of a pure state on the complement of `discard`.
pub fn partial_trace_pure(state: &FullState, discard: &[usize]) -> Result<FullDensity> {
    let n = state.n;
    let keep = keep_list(n, discard)?;
    let (dk, de) = (1usize << keep.len(), 1usize << discard.len());
    let mut psi = vec![0.0; dk * de];
    for (x, &a) in state.amps.iter().enumerate() {
        let (k, e) = split_index(x, n, &keep, discard);
        psi[k * de + e] = a;
    }
    let mut out = vec![0.0; dk * dk];
    for a in 0..dk {
        for b in 0..dk {
            out[a * dk + b] = (0..de).map(|e| psi[a * de + e] * psi[b * de + e]).sum();
        }
    }
    FullDensity::new(keep.len(), out)
}

/// Target subspace described without reference to the simulator's indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subspace {
    /// All `n`-bit strings of weight `k`, in ascending binary order.
    Hamming { n: usize, k: usize },
    /// Unary registers of the given sizes; row-major over register positions.
    Tensor(Vec<usize>),
}

impl Subspace {
    pub fn n_qubits(&self) -> usize {
        match self {
            Subspace::Hamming { n, .. } => *n,
            Subspace::Tensor(d) => d.iter().sum(),
        }
    }

    /// Full-space index of every subspace basis vector, in subspace order.
    pub fn indices(&self) -> Result<Vec<usize>> {
        let n = self.n_qubits();
        if n > MAX_STATE_QUBITS {
            return Err(Error::OracleTooLarge {
                n,
                max: MAX_STATE_QUBITS,
            });
        }
        Ok(match self {
            Subspace::Hamming { k, .. } => (0..1usize << n).filter(|x| x.count_ones() as usize == *k).collect(),
            Subspace::Tensor(dims) => {
                let mut out = vec![0usize];
                let mut offset = 0;
                for &d in dims {
                    let mut next = Vec::with_capacity(out.len() * d);
                    for &x in &out {
                        for i in 0..d {
                            next.push(x | 1 << (n - 1 - (offset + i)));
                        }
                    }
                    out = next;
                    offset += d;
                }
                out
            }
        })
    }

    fn basis(&self) -> Result<Basis> {
        Ok(match self {
            Subspace::Hamming { n, k } => Basis::Hamming(crate::basis::BasisIndexer::new(*n, *k)?),
            Subspace::Tensor(d) => Basis::Tensor(crate::layers::TensorBasis::from_dims(d)?),
        })
    }
}

/// Probability mass outside `target`.
pub fn leakage(state: &FullState, target: &Subspace) -> Result<f64> {
    let inside: f64 = target.indices()?.iter().map(|&x| state.amps[x].powi(2)).sum();
    Ok((state.norm().powi(2) - inside).max(0.0))
}

pub fn leakage_density(rho: &FullDensity, target: &Subspace) -> Result<f64> {
    let inside: f64 = target.indices()?.iter().map(|&x| rho.get(x, x)).sum();
    Ok((rho.trace() - inside).max(0.0))
}

/// Gathers the amplitudes on `target`; fails when more than [`LEAKAGE_TOL`] mass lies outside.
pub fn project_to_subspace(state: &FullState, target: &Subspace) -> Result<SubspaceState> {
    let leaked = leakage(state, target)?;
    if leaked > LEAKAGE_TOL {
        return Err(Error::Leakage { mass: leaked });
    }
    let amps = target.indices()?.iter().map(|&x| state.amps[x]).collect();
    SubspaceState::new(target.basis()?, amps)
}

pub fn project_density(rho: &FullDensity, target: &Subspace) -> Result<DensityState> {
    let leaked = leakage_density(rho, target)?;
    if leaked > LEAKAGE_TOL {
        return Err(Error::Leakage { mass: leaked });
    }
    let idx = target.indices()?;
    let mut m = Vec::with_capacity(idx.len() * idx.len());
    for &x in &idx {
        for &y in &idx {
            m.push(rho.get(x, y));
        }
    }
    DensityState::new(target.basis()?, m)
}

/// Full `2^n × 2^n` matrix of a gate sequence, row-major.
pub fn full_unitary(gates: &[FullGate], n: usize) -> Result<Vec<f64>> {
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_DENSITY_QUBITS,
        });
    }
    let d = 1usize << n;
    let mut u = vec![0.0; d * d];
    for c in 0..d {
        let mut col = vec![0.0; d];
        col[c] = 1.0;
        for g in gates {
            check_gate(n, g)?;
            apply_to_vector(&mut col, n, g);
        }
        for r in 0..d {
            u[r * d + c] = col[r];
        }
    }
    Ok(u)
}

/// True when the circuit's full matrix has no entry between different Hamming weights.
pub fn block_diagonality_check(gates: &[FullGate], n: usize) -> Result<bool> {
    let u = full_unitary(gates, n)?;
    let d = 1usize << n;
    Ok((0..d).all(|r| (0..d).all(|c| r.count_ones() == c.count_ones() || u[r * d + c] == 0.0)))
}

/// Reference pooling: CNOT each `(2t, 2t+1)` pair of the pooled registers,
/// trace out the controls, and restrict to the halved tensor basis.
pub fn pool_reference(state: &FullState, dims: &[usize], pooled: &[usize]) -> Result<DensityState> {
    let mut s = state.clone();
    let mut controls = Vec::new();
    let mut out_dims = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for (r, &d) in dims.iter().enumerate() {
        if pooled.contains(&r) {
            for t in 0..d / 2 {
                let c = offset + 2 * t;
                apply_gate_full(
                    &mut s,
                    FullGate::Cnot {
                        control: c,
                        target: c + 1,
                    },
                )?;
                controls.push(c);
            }
            out_dims.push(d / 2);
        } else {
            out_dims.push(d);
        }
        offset += d;
    }
    let reduced = partial_trace_pure(&s, &controls)?;
    project_density(&reduced, &Subspace::Tensor(out_dims))
}
