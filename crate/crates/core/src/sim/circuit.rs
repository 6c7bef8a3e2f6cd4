use serde::{Deserialize, Serialize};

use super::{rotate_vec, Basis};
use crate::error::{Error, Result};

/// RBS gate on qubits `(p, q)` whose angle is `params[slot]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbsGate {
    pub p: usize,
    pub q: usize,
    pub slot: usize,
}

/// Standard RBS ansätze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Pyramid,
    Butterfly,
    X,
}

impl AnsatzKind {
    pub fn build(self, n: usize) -> Result<AnsatzCircuit> {
        match self {
            AnsatzKind::Pyramid => build_pyramid(n),
            AnsatzKind::Butterfly => build_butterfly(n),
            AnsatzKind::X => build_x(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Pyramid => "pyramid",
            AnsatzKind::Butterfly => "butterfly",
            AnsatzKind::X => "x",
        }
    }
}

/// Ordered RBS gates over `n_qubits`, reading angles from `n_params` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzCircuit {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<RbsGate>,
}

impl AnsatzCircuit {
    pub fn new(n_qubits: usize, n_params: usize, gates: Vec<RbsGate>) -> Result<Self> {
        for g in &gates {
            if g.p == g.q {
                return Err(Error::SameQubit(g.p));
            }
            for x in [g.p, g.q] {
                if x >= n_qubits {
                    return Err(Error::QubitOutOfRange { qubit: x, n: n_qubits });
                }
            }
            if g.slot >= n_params {
                return Err(Error::ArityMismatch {
                    expected: n_params,
                    got: g.slot + 1,
                });
            }
        }
        Ok(AnsatzCircuit {
            n_qubits,
            n_params,
            gates,
        })
    }

    /// One fresh slot per gate, in order.
    pub fn from_pairs(n_qubits: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let gates = pairs
            .iter()
            .enumerate()
            .map(|(slot, &(p, q))| RbsGate { p, q, slot })
            .collect();
        AnsatzCircuit::new(n_qubits, pairs.len(), gates)
    }

    pub fn empty(n_qubits: usize) -> Self {
        AnsatzCircuit {
            n_qubits,
            n_params: 0,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[RbsGate] {
        &self.gates
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.gates.iter().map(|g| (g.p, g.q)).collect()
    }

    /// Circuit depth under as-soon-as-possible scheduling.
    pub fn depth(&self) -> usize {
        let mut busy = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let t = busy[g.p].max(busy[g.q]) + 1;
            busy[g.p] = t;
            busy[g.q] = t;
            depth = depth.max(t);
        }
        depth
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ArityMismatch {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_fits(&self, n: usize) -> Result<()> {
        if self.n_qubits > n {
            return Err(Error::QubitOutOfRange {
                qubit: self.n_qubits - 1,
                n,
            });
        }
        Ok(())
    }

    /// The `dim × dim` orthogonal matrix this circuit realizes on `basis`,
    /// row-major, column `c` being the image of basis vector `c`.
    pub fn realized_matrix(&self, basis: &Basis, params: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_fits(basis.n_qubits())?;
        let dim = basis.dim();
        let mut compiled = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let (s, c) = params[g.slot].sin_cos();
            compiled.push((basis.rbs_pairs(g.p, g.q)?, c, s));
        }
        let mut u = vec![0.0; dim * dim];
        let mut col = vec![0.0; dim];
        for c0 in 0..dim {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[c0] = 1.0;
            for (pairs, c, s) in &compiled {
                rotate_vec(&mut col, pairs, *c, *s);
            }
            for r in 0..dim {
                u[r * dim + c0] = col[r];
            }
        }
        Ok(u)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewQubits(n));
    }
    Ok(())
}

/// Nearest-neighbour triangle of `n(n-1)/2` gates, depth `2n - 3`.
///
/// At time step `t` the gates sit on `(i, i+1)` for every `i ≡ t (mod 2)`
/// inside the triangle `i ≤ t` and `i ≤ 2(n-2) - t`.
pub fn build_pyramid(n: usize) -> Result<AnsatzCircuit> {
    check_size(n)?;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for t in 0..=2 * (n - 2) {
        let hi = t.min(2 * (n - 2) - t);
        let mut i = t % 2;
        while i <= hi {
            pairs.push((i, i + 1));
            i += 2;
        }
    }
    AnsatzCircuit::from_pairs(n, &pairs)
}

/// FFT-style circuit: `log2(n)` stages at strides `n/2, n/4, ..., 1`.
pub fn build_butterfly(n: usize) -> Result<AnsatzCircuit> {
    check_size(n)?;
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut pairs = Vec::with_capacity(n / 2 * n.trailing_zeros() as usize);
    let mut stride = n / 2;
    while stride >= 1 {
        for i in (0..n).filter(|i| i % (2 * stride) < stride) {
            pairs.push((i, i + stride));
        }
        stride /= 2;
    }
    AnsatzCircuit::from_pairs(n, &pairs)
}

/// Two crossing nearest-neighbour diagonals, `2n - 3` gates.
///
/// Step `t` places `(t, t+1)` then `(n-2-t, n-1-t)`; where the diagonals
/// cross, consecutive gates on the same pair are merged into one.
pub fn build_x(n: usize) -> Result<AnsatzCircuit> {
    check_size(n)?;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(2 * n - 3);
    for t in 0..n - 1 {
        for pair in [(t, t + 1), (n - 2 - t, n - 1 - t)] {
            if pairs.last() != Some(&pair) {
                pairs.push(pair);
            }
        }
    }
    AnsatzCircuit::from_pairs(n, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pyramid_counts() {
        for n in 2..12 {
            let c = build_pyramid(n).unwrap();
            assert_eq!(c.n_params(), n * (n - 1) / 2);
            assert_eq!(c.gates().len(), n * (n - 1) / 2);
            assert!(c.gates().iter().all(|g| g.q == g.p + 1));
            if n > 2 {
                assert_eq!(c.depth(), 2 * n - 3);
            }
        }
        assert_eq!(build_pyramid(4).unwrap().n_params(), 6);
    }

    #[test]
    fn butterfly_layout() {
        let c = build_butterfly(4).unwrap();
        assert_eq!(c.pairs(), vec![(0, 2), (1, 3), (0, 1), (2, 3)]);
        assert_eq!(c.depth(), 2);
        for n in [2usize, 8, 16, 32] {
            let c = build_butterfly(n).unwrap();
            let log = n.trailing_zeros() as usize;
            assert_eq!(c.gates().len(), n / 2 * log);
            assert_eq!(c.depth(), log);
        }
        assert!(matches!(build_butterfly(6), Err(Error::NotPowerOfTwo(6))));
    }

    #[test]
    fn x_counts() {
        for n in 2..12 {
            let c = build_x(n).unwrap();
            assert_eq!(c.gates().len(), 2 * n - 3, "n = {n}");
            // no two consecutive gates on the same pair
            assert!(c.pairs().windows(2).all(|w| w[0] != w[1]));
        }
        assert_eq!(
            build_x(4).unwrap().pairs(),
            vec![(0, 1), (2, 3), (1, 2), (2, 3), (0, 1)]
        );
    }

    #[test]
    fn two_qubit_ansatze_coincide() {
        let p = build_pyramid(2).unwrap();
        assert_eq!(p, build_butterfly(2).unwrap());
        assert_eq!(p, build_x(2).unwrap());
        assert_eq!(p.pairs(), vec![(0, 1)]);
    }

    #[test]
    fn validation() {
        assert!(matches!(build_pyramid(1), Err(Error::TooFewQubits(1))));
        assert!(AnsatzCircuit::new(3, 1, vec![RbsGate { p: 0, q: 1, slot: 1 }]).is_err());
        assert!(AnsatzCircuit::new(3, 1, vec![RbsGate { p: 0, q: 3, slot: 0 }]).is_err());
        assert!(AnsatzCircuit::new(3, 1, vec![RbsGate { p: 2, q: 2, slot: 0 }]).is_err());
    }
}
