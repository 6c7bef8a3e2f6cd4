//! A compiled layer pipeline with a flat parameter vector.
//!
//! Every gate is lowered to the list of basis-index pairs it rotates in the
//! basis where it acts, so the forward and reverse passes work on raw
//! vectors and matrices without re-deriving the combinatorics.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{
    self, merge_map, readout_from_supports, ConvLayerSpec, DenseLayerSpec, PoolLayerSpec, Readout, ReadoutSpec,
    TensorBasis,
};
use crate::sim::{conjugate, rotate_vec, Basis, DensityState, PoolingChannel, QuantumState, SubspaceState};
use crate::train::{Tape, TapeOp};

/// One layer of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerSpec {
    Conv(ConvLayerSpec),
    Pool(PoolLayerSpec),
    Merge,
    Dense(DenseLayerSpec),
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::Pool(_) => "pool",
            LayerSpec::Merge => "merge",
            LayerSpec::Dense(_) => "dense",
        }
    }
}

/// Raw state storage: an amplitude vector or a row-major density matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Work {
    Pure(Vec<f64>),
    Mixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub(crate) struct GateOp {
    pub slot: usize,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub(crate) enum Stage {
    Gates(Vec<GateOp>),
    Pool(PoolingChannel),
    Merge { map: Vec<usize>, dim: usize },
}

/// Per-layer shape and cost report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub index: usize,
    pub kind: &'static str,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    pub state_dim: usize,
    pub params: usize,
    pub depth: usize,
    pub gates: usize,
}

#[derive(Debug, Clone)]
pub struct Model {
    input: TensorBasis,
    specs: Vec<LayerSpec>,
    stages: Vec<Stage>,
    /// `bases[i]` is the input basis of stage `i`; the last entry is the output basis.
    bases: Vec<Basis>,
    readout: ReadoutSpec,
    supports: Vec<Vec<usize>>,
    slot_names: Vec<String>,
    slot_blocks: Vec<usize>,
    layer_params: Vec<Range<usize>>,
    summaries: Vec<LayerSummary>,
}

fn shape_of(basis: &Basis) -> Vec<usize> {
    match basis {
        Basis::Tensor(t) => t.dims().to_vec(),
        Basis::Hamming(h) => vec![h.n_qubits(), h.weight()],
    }
}

fn lower(basis: &Basis, circuit: &crate::sim::AnsatzCircuit, offset: usize) -> Result<Vec<GateOp>> {
    circuit
        .gates()
        .iter()
        .map(|g| {
            Ok(GateOp {
                slot: offset + g.slot,
                pairs: basis.rbs_pairs(g.p, g.q)?,
            })
        })
        .collect()
}

impl Model {
    /// Compiles `layers` for an input tensor of shape `input_dims`.
    ///
    /// With `readout = None` the first `n_classes` reachable basis states of
    /// the final basis, in ascending order, become the class outcomes.
    pub fn new(
        input_dims: &[usize],
        layers: Vec<LayerSpec>,
        readout: Option<ReadoutSpec>,
        n_classes: usize,
    ) -> Result<Model> {
        let input = TensorBasis::from_dims(input_dims)?;
        let mut basis = Basis::Tensor(input.clone());
        let mut bases = vec![basis.clone()];
        let mut stages = Vec::with_capacity(layers.len());
        let mut slot_names = Vec::new();
        let mut slot_blocks = Vec::new();
        let mut layer_params = Vec::new();
        let mut summaries = Vec::new();

        for (li, spec) in layers.iter().enumerate() {
            let offset = slot_names.len();
            let input_shape = shape_of(&basis);
            let (stage, next, depth, gates) = match spec {
                LayerSpec::Conv(c) => {
                    let tb = basis.as_tensor().ok_or(Error::BasisMismatch { expected: "tensor" })?;
                    let circuit = c.circuit(tb)?;
                    for (r, &np) in c.register_params()?.iter().enumerate() {
                        for g in 0..np {
                            slot_names.push(format!("layer{li}.conv.r{r}.{g}"));
                            slot_blocks.push(c.filter[r]);
                        }
                    }
                    let ops = lower(&basis, &circuit, offset)?;
                    let depth = c.depth()?;
                    (Stage::Gates(ops), basis.clone(), depth, circuit.gates().len())
                }
                LayerSpec::Pool(p) => {
                    let tb = basis.as_tensor().ok_or(Error::BasisMismatch { expected: "tensor" })?;
                    let ch = PoolingChannel::new(tb, &p.resolve(tb))?;
                    let next = Basis::Tensor(ch.output_basis().clone());
                    (Stage::Pool(ch), next, 1, 0)
                }
                LayerSpec::Merge => {
                    let tb = basis.as_tensor().ok_or(Error::BasisMismatch { expected: "tensor" })?;
                    let (indexer, map) = merge_map(tb)?;
                    let dim = indexer.dim();
                    (Stage::Merge { map, dim }, Basis::Hamming(indexer), 0, 0)
                }
                LayerSpec::Dense(d) => {
                    if !matches!(basis, Basis::Hamming(_)) {
                        return Err(Error::BasisMismatch {
                            expected: "merged Hamming",
                        });
                    }
                    let n = basis.n_qubits();
                    let circuit = d.circuit(n)?;
                    for g in 0..circuit.n_params() {
                        slot_names.push(format!("layer{li}.dense.{g}"));
                        slot_blocks.push(n);
                    }
                    let ops = lower(&basis, &circuit, offset)?;
                    (Stage::Gates(ops), basis.clone(), circuit.depth(), circuit.gates().len())
                }
            };
            summaries.push(LayerSummary {
                index: li,
                kind: spec.kind(),
                input_shape,
                output_shape: shape_of(&next),
                state_dim: next.dim(),
                params: slot_names.len() - offset,
                depth,
                gates,
            });
            layer_params.push(offset..slot_names.len());
            stages.push(stage);
            basis = next;
            bases.push(basis.clone());
        }

        let readout = match readout {
            Some(r) => r,
            None => ReadoutSpec::Outcomes(Self::default_outcomes(&stages, &bases, n_classes)?),
        };
        if readout.n_classes() != n_classes {
            return Err(Error::Config(vec![format!(
                "readout lists {} outcomes for {n_classes} classes",
                readout.n_classes()
            )]));
        }
        let supports = readout.class_supports(&basis)?;
        Ok(Model {
            input,
            specs: layers,
            stages,
            bases,
            readout,
            supports,
            slot_names,
            slot_blocks,
            layer_params,
            summaries,
        })
    }

    fn default_outcomes(stages: &[Stage], bases: &[Basis], n_classes: usize) -> Result<Vec<usize>> {
        let mut support = vec![true; bases[0].dim()];
        for (stage, out) in stages.iter().zip(&bases[1..]) {
            support = match stage {
                Stage::Gates(ops) => {
                    for op in ops {
                        for &(i, j) in &op.pairs {
                            let any = support[i] || support[j];
                            support[i] = any;
                            support[j] = any;
                        }
                    }
                    support
                }
                Stage::Pool(ch) => {
                    let mut next = vec![false; out.dim()];
                    for term in ch.terms() {
                        for &(i, o) in term {
                            next[o] |= support[i];
                        }
                    }
                    next
                }
                Stage::Merge { map, dim } => {
                    let mut next = vec![false; *dim];
                    for (i, &m) in map.iter().enumerate() {
                        next[m] = support[i];
                    }
                    next
                }
            };
        }
        let outcomes: Vec<usize> = (0..support.len()).filter(|&i| support[i]).take(n_classes).collect();
        if outcomes.len() < n_classes {
            return Err(Error::Config(vec![format!(
                "only {} reachable outcomes for {n_classes} classes",
                outcomes.len()
            )]));
        }
        Ok(outcomes)
    }

    pub fn input_basis(&self) -> &TensorBasis {
        &self.input
    }

    pub fn input_dims(&self) -> &[usize] {
        self.input.dims()
    }

    pub fn output_basis(&self) -> &Basis {
        self.bases.last().expect("at least the input basis")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn readout_spec(&self) -> &ReadoutSpec {
        &self.readout
    }

    pub fn n_classes(&self) -> usize {
        self.supports.len()
    }

    pub fn n_params(&self) -> usize {
        self.slot_names.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.slot_names
    }

    /// Parameter range owned by each layer.
    pub fn layer_params(&self) -> &[Range<usize>] {
        &self.layer_params
    }

    pub fn summary(&self) -> &[LayerSummary] {
        &self.summaries
    }

    pub(crate) fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub(crate) fn stage_basis(&self, i: usize) -> &Basis {
        &self.bases[i]
    }

    pub(crate) fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    /// I.i.d. uniform on `[-π/(2K), π/(2K)]`, `K` being the block size of the slot's layer.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.slot_blocks
            .iter()
            .map(|&k| {
                let a = PI / (2.0 * k as f64);
                rng.gen_range(-a..=a)
            })
            .collect()
    }

    /// Number of gate occurrences; a shared slot has one occurrence per block.
    pub fn n_occurrences(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Gates(ops) => ops.len(),
                _ => 0,
            })
            .sum()
    }

    /// Parameter slot of each gate occurrence, in forward order.
    pub fn occurrence_slots(&self) -> Vec<usize> {
        self.stages
            .iter()
            .flat_map(|s| match s {
                Stage::Gates(ops) => ops.iter().map(|g| g.slot).collect(),
                _ => Vec::new(),
            })
            .collect()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ArityMismatch {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Amplitude-encodes `x` in the input basis.
    pub fn encode(&self, x: &[f64]) -> Result<SubspaceState> {
        layers::encode_tensor(x, self.input.dims())
    }

    fn run(
        &self,
        x: &[f64],
        params: &[f64],
        shift: Option<(usize, f64)>,
        mut tape: Option<&mut Vec<TapeOp>>,
    ) -> Result<Work> {
        self.check_params(params)?;
        let mut work = Work::Pure(self.encode(x)?.into_amplitudes());
        let mut occurrence = 0usize;
        for (li, stage) in self.stages.iter().enumerate() {
            let dim = self.bases[li].dim();
            let input = tape.as_ref().map(|_| work.clone());
            let mut angles = Vec::new();
            work = match stage {
                Stage::Gates(ops) => {
                    for op in ops {
                        let mut theta = params[op.slot];
                        if let Some((o, d)) = shift {
                            if o == occurrence {
                                theta += d;
                            }
                        }
                        occurrence += 1;
                        let (s, c) = theta.sin_cos();
                        match &mut work {
                            Work::Pure(v) => rotate_vec(v, &op.pairs, c, s),
                            Work::Mixed(m) => conjugate(m, dim, &op.pairs, c, s),
                        }
                        if tape.is_some() {
                            angles.push(theta);
                        }
                    }
                    work
                }
                Stage::Pool(ch) => Work::Mixed(match &work {
                    Work::Pure(v) => ch.apply_pure_raw(v),
                    Work::Mixed(m) => ch.apply_density_raw(m),
                }),
                Stage::Merge { map, dim: out } => match &work {
                    Work::Pure(v) => Work::Pure(layers::scatter_vec(v, map, *out)),
                    Work::Mixed(m) => Work::Mixed(layers::scatter_mat(m, map, *out)),
                },
            };
            if let Some(t) = tape.as_mut() {
                t.push(TapeOp {
                    layer: li,
                    kind: self.specs[li].kind(),
                    angles,
                    input: input.expect("snapshot taken when recording"),
                });
            }
        }
        Ok(work)
    }

    fn probabilities(&self, work: &Work) -> Vec<f64> {
        let dim = self.output_basis().dim();
        match work {
            Work::Pure(v) => v.iter().map(|a| a * a).collect(),
            Work::Mixed(m) => (0..dim).map(|i| m[i * dim + i]).collect(),
        }
    }

    /// Final state before readout.
    pub fn forward_state(&self, x: &[f64], params: &[f64]) -> Result<QuantumState> {
        let basis = self.output_basis().clone();
        Ok(match self.run(x, params, None, None)? {
            Work::Pure(v) => SubspaceState::from_parts(basis, v).into(),
            Work::Mixed(m) => DensityState::from_parts(basis, m).into(),
        })
    }

    pub fn predict(&self, x: &[f64], params: &[f64]) -> Result<Readout> {
        let work = self.run(x, params, None, None)?;
        Ok(readout_from_supports(&self.probabilities(&work), &self.supports).1)
    }

    /// Unnormalized per-class outcome mass, with gate occurrence `o` shifted by `delta`.
    pub fn class_mass(&self, x: &[f64], params: &[f64], shift: Option<(usize, f64)>) -> Result<Vec<f64>> {
        let work = self.run(x, params, shift, None)?;
        Ok(readout_from_supports(&self.probabilities(&work), &self.supports).0)
    }

    /// Forward pass that records everything the reverse pass needs.
    pub fn record(&self, x: &[f64], params: &[f64]) -> Result<Tape> {
        let mut ops = Vec::with_capacity(self.stages.len());
        let out = self.run(x, params, None, Some(&mut ops))?;
        let (gathered, readout) = readout_from_supports(&self.probabilities(&out), &self.supports);
        Ok(Tape::new(self.n_params(), ops, out, gathered, readout))
    }

    /// Cross-entropy loss, class probabilities and exact gradient for one sample.
    pub fn loss_and_grad(&self, x: &[f64], label: usize, params: &[f64]) -> Result<(f64, Readout, Vec<f64>)> {
        let tape = self.record(x, params)?;
        let loss = crate::train::cross_entropy(&tape.readout().probs, label);
        let dp = crate::train::cross_entropy_grad(&tape.readout().probs, label);
        let grad = crate::train::backward(self, &tape, &dp)?;
        Ok((loss, tape.readout().clone(), grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::Connectivity;
    use crate::sim::AnsatzKind;

    fn reference() -> Model {
        let conv = |k| LayerSpec::Conv(ConvLayerSpec::uniform(k, 2, AnsatzKind::Pyramid));
        Model::new(
            &[16, 16],
            vec![
                conv(4),
                LayerSpec::Pool(PoolLayerSpec::default()),
                conv(4),
                LayerSpec::Pool(PoolLayerSpec::default()),
                LayerSpec::Merge,
                LayerSpec::Dense(DenseLayerSpec {
                    connectivity: Connectivity::Ansatz(AnsatzKind::Pyramid),
                }),
            ],
            None,
            10,
        )
        .unwrap()
    }

    #[test]
    fn reference_shapes_and_counts() {
        let m = reference();
        assert_eq!(m.n_params(), 12 + 12 + 28);
        let s = m.summary();
        assert_eq!(s[1].output_shape, vec![8, 8]);
        assert_eq!(s[3].output_shape, vec![4, 4]);
        assert_eq!(s[4].output_shape, vec![8, 2]);
        assert_eq!(s[4].state_dim, 28);
        assert_eq!(m.readout_spec(), &ReadoutSpec::Outcomes((0..10).collect()));
        assert_eq!(m.n_occurrences(), 6 * 4 * 2 + 6 * 2 * 2 + 28);
    }

    #[test]
    fn zero_params_give_input_distribution() {
        let m = Model::new(&[2, 2], vec![], Some(ReadoutSpec::Outcomes(vec![0, 1, 2, 3])), 4).unwrap();
        let r = m.predict(&[1.0, 1.0, 1.0, 3.0], &[]).unwrap();
        let want = [1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 9.0 / 12.0];
        for (a, b) in r.probs.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn init_respects_block_bounds() {
        use rand::SeedableRng;
        let m = reference();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = m.init_params(&mut rng);
        for (i, v) in p.iter().enumerate() {
            let k = if i < 24 { 4.0 } else { 8.0 };
            assert!(v.abs() <= PI / (2.0 * k));
        }
    }

    #[test]
    fn dense_on_tensor_basis_is_rejected() {
        let r = Model::new(
            &[2, 2],
            vec![LayerSpec::Dense(DenseLayerSpec {
                connectivity: Connectivity::Ansatz(AnsatzKind::Pyramid),
            })],
            None,
            2,
        );
        assert!(matches!(r, Err(Error::BasisMismatch { .. })));
    }
}
