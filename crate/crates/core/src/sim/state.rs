use super::{conjugate, rotate_vec, AnsatzCircuit, Basis, INVARIANT_TOL};
use crate::error::{Error, Result};

/// A normalized real pure state over a subspace basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceState {
    basis: Basis,
    amplitudes: Vec<f64>,
}

impl SubspaceState {
    /// Wraps `amplitudes`; they must match the basis and have unit 2-norm.
    pub fn new(basis: Basis, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::Config(vec![format!("amplitudes have norm {norm}, expected 1")]));
        }
        Ok(SubspaceState { basis, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(basis: Basis, mut amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(SubspaceState { basis, amplitudes })
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![0.0; dim];
        amplitudes[index] = 1.0;
        Ok(SubspaceState { basis, amplitudes })
    }

    pub(crate) fn from_parts(basis: Basis, amplitudes: Vec<f64>) -> Self {
        debug_assert_eq!(basis.dim(), amplitudes.len());
        SubspaceState { basis, amplitudes }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn apply_rbs(&mut self, p: usize, q: usize, theta: f64) -> Result<()> {
        let pairs = self.basis.rbs_pairs(p, q)?;
        let (s, c) = theta.sin_cos();
        rotate_vec(&mut self.amplitudes, &pairs, c, s);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &AnsatzCircuit, params: &[f64]) -> Result<()> {
        circuit.check_params(params)?;
        circuit.check_fits(self.basis.n_qubits())?;
        for g in circuit.gates() {
            self.apply_rbs(g.p, g.q, params[g.slot])?;
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }
}

/// A real symmetric, unit-trace, positive semidefinite matrix over a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    basis: Basis,
    /// Row-major `dim × dim`.
    matrix: Vec<f64>,
}

impl DensityState {
    /// Wraps a row-major matrix after checking shape, symmetry and trace.
    pub fn new(basis: Basis, matrix: Vec<f64>) -> Result<Self> {
        let dim = basis.dim();
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > INVARIANT_TOL {
                    return Err(Error::Config(vec![format!(
                        "density matrix not symmetric at ({i}, {j})"
                    )]));
                }
            }
        }
        let rho = DensityState { basis, matrix };
        let tr = rho.trace();
        if (tr - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::Config(vec![format!(
                "density matrix has trace {tr}, expected 1"
            )]));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &SubspaceState) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut matrix = vec![0.0; dim * dim];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &mut matrix[i * dim..(i + 1) * dim];
            for (m, &aj) in row.iter_mut().zip(a) {
                *m = ai * aj;
            }
        }
        DensityState {
            basis: state.basis().clone(),
            matrix,
        }
    }

    pub(crate) fn from_parts(basis: Basis, matrix: Vec<f64>) -> Self {
        debug_assert_eq!(basis.dim() * basis.dim(), matrix.len());
        DensityState { basis, matrix }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn into_matrix(self) -> Vec<f64> {
        self.matrix
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim() + j]
    }

    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        (0..dim).map(|i| self.matrix[i * dim + i]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.matrix[i * dim + i]).collect()
    }

    /// `ρ ← U ρ Uᵀ`, rotating rows then columns.
    pub fn apply_rbs(&mut self, p: usize, q: usize, theta: f64) -> Result<()> {
        let pairs = self.basis.rbs_pairs(p, q)?;
        let (s, c) = theta.sin_cos();
        let dim = self.dim();
        conjugate(&mut self.matrix, dim, &pairs, c, s);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &AnsatzCircuit, params: &[f64]) -> Result<()> {
        circuit.check_params(params)?;
        circuit.check_fits(self.basis.n_qubits())?;
        for g in circuit.gates() {
            self.apply_rbs(g.p, g.q, params[g.slot])?;
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.diagonal()
    }
}

/// Either kind of state; layers accept both.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(SubspaceState),
    Mixed(DensityState),
}

impl QuantumState {
    pub fn basis(&self) -> &Basis {
        match self {
            QuantumState::Pure(s) => s.basis(),
            QuantumState::Mixed(r) => r.basis(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn apply_rbs(&mut self, p: usize, q: usize, theta: f64) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.apply_rbs(p, q, theta),
            QuantumState::Mixed(r) => r.apply_rbs(p, q, theta),
        }
    }

    pub fn apply_circuit(&mut self, circuit: &AnsatzCircuit, params: &[f64]) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.apply_circuit(circuit, params),
            QuantumState::Mixed(r) => r.apply_circuit(circuit, params),
        }
    }

    /// Norm² of a pure state or trace of a mixed one.
    pub fn total_probability(&self) -> f64 {
        match self {
            QuantumState::Pure(s) => s.norm().powi(2),
            QuantumState::Mixed(r) => r.trace(),
        }
    }

    pub fn into_density(self) -> DensityState {
        match self {
            QuantumState::Pure(s) => DensityState::from_pure(&s),
            QuantumState::Mixed(r) => r,
        }
    }
}

impl From<SubspaceState> for QuantumState {
    fn from(s: SubspaceState) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityState> for QuantumState {
    fn from(r: DensityState) -> Self {
        QuantumState::Mixed(r)
    }
}

/// Outcome probabilities over the state's basis.
pub fn measure_probabilities(state: &QuantumState) -> Vec<f64> {
    match state {
        QuantumState::Pure(s) => s.probabilities(),
        QuantumState::Mixed(r) => r.probabilities(),
    }
}
