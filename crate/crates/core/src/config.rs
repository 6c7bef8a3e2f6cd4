//! JSON experiment documents: architecture, dataset and training settings.
//!
//! ```json
//! {
//!   "input": { "dims": [16, 16] },
//!   "layers": [
//!     { "conv": { "K": 4, "ansatz": "pyramid" } },
//!     { "pool": {} },
//!     { "dense": { "connectivity": "pyramid" } }
//!   ],
//!   "train": { "epochs": 30, "batch_size": 32, "lr": 0.01, "seed": 0 }
//! }
//! ```
//!
//! A `merge` layer is inserted ahead of the first `dense` layer when absent.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{binomial, MAX_DIM, MAX_QUBITS};
use crate::data::{DatasetSpec, Image};
use crate::error::{Error, Result};
use crate::layers::{translated_copies, Connectivity, ConvLayerSpec, DenseLayerSpec, PoolLayerSpec, ReadoutSpec};
use crate::model::{LayerSpec, Model};
use crate::sim::AnsatzKind;
use crate::train::AdamConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    dims: Vec<usize>,
    #[serde(default)]
    translations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConv {
    #[serde(rename = "K")]
    k: OneOrMany<usize>,
    #[serde(default)]
    ansatz: Option<OneOrMany<AnsatzKind>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDense {
    #[serde(default)]
    connectivity: Option<AnsatzKind>,
    #[serde(default)]
    gates: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawLayer {
    Conv(RawConv),
    Pool(PoolLayerSpec),
    Merge {},
    Dense(RawDense),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    input: RawInput,
    layers: Vec<RawLayer>,
    #[serde(default)]
    readout: Option<ReadoutSpec>,
    #[serde(default = "ten")]
    classes: usize,
    #[serde(default)]
    dataset: Option<DatasetSpec>,
    #[serde(default)]
    train: TrainSpec,
}

fn ten() -> usize {
    10
}

/// Optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let a = AdamConfig::default();
        TrainSpec {
            epochs: 30,
            batch_size: 32,
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            seed: 0,
        }
    }
}

impl TrainSpec {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// A validated, normalized experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureConfig {
    /// Image shape before the optional translation register.
    pub image_dims: Vec<usize>,
    pub translations: Option<usize>,
    pub layers: Vec<LayerSpec>,
    pub readout: Option<ReadoutSpec>,
    pub classes: usize,
    pub dataset: Option<DatasetSpec>,
    pub train: TrainSpec,
    /// Normalizations applied during validation.
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct DigestView<'a> {
    input: &'a [usize],
    layers: &'a [LayerSpec],
    readout: &'a ReadoutSpec,
}

impl ArchitectureConfig {
    /// Shape of the tensor fed to the encoder.
    pub fn input_dims(&self) -> Vec<usize> {
        let mut d = self.image_dims.clone();
        if let Some(b) = self.translations {
            d.push(b);
        }
        d
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::new(
            &self.input_dims(),
            self.layers.clone(),
            self.readout.clone(),
            self.classes,
        )
    }

    /// Network input for a preprocessed image.
    pub fn prepare(&self, image: &Image) -> Result<Vec<f64>> {
        if [image.rows, image.cols] != self.image_dims[..] {
            return Err(Error::DimensionMismatch {
                expected: self.image_dims.iter().product(),
                got: image.pixels.len(),
            });
        }
        Ok(match self.translations {
            Some(b) => translated_copies(&image.pixels, image.rows, image.cols, b),
            None => image.pixels.clone(),
        })
    }

    /// SHA-256 over the canonical JSON of the input shape, layers and resolved readout.
    pub fn digest(&self, model: &Model) -> String {
        let view = DigestView {
            input: &self.input_dims(),
            layers: &self.layers,
            readout: model.readout_spec(),
        };
        let json = serde_json::to_string(&view).expect("architecture serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// Parameter count of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub index: usize,
    pub kind: &'static str,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub total: usize,
    pub per_layer: Vec<LayerCount>,
}

pub fn count_parameters(config: &ArchitectureConfig) -> Result<ParamCount> {
    let model = config.build_model()?;
    let per_layer: Vec<LayerCount> = model
        .summary()
        .iter()
        .map(|s| LayerCount {
            index: s.index,
            kind: s.kind,
            params: s.params,
        })
        .collect();
    Ok(ParamCount {
        total: model.n_params(),
        per_layer,
    })
}

/// Upper bound `C(n,k)(C(n,k) - 1)/2` on useful dense parameters over `B_k^n`.
pub fn dense_bound(n: usize, k: usize) -> Result<u64> {
    let d = binomial(n, k)?;
    Ok(d * d.saturating_sub(1) / 2)
}

pub fn load_config(path: &Path) -> Result<ArchitectureConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = validate_config(&text)?;
    if let Some(ds) = cfg.dataset.as_mut() {
        if ds.path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            ds.path = base.join(&ds.path);
        }
    }
    Ok(cfg)
}

/// Shape tracked while walking the layer list.
#[derive(Clone)]
enum Shape {
    Tensor(Vec<usize>),
    Merged { n: usize, k: usize, at: usize },
}

/// Parses and checks a config document, reporting every problem with its path.
pub fn validate_config(text: &str) -> Result<ArchitectureConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(vec![format!("{path}: {}", e.inner())])
    })?;

    let mut errors = Vec::new();
    let mut notes = Vec::new();

    let dims = raw.input.dims.clone();
    if dims.is_empty() {
        errors.push("input.dims: must list at least one register".to_string());
    }
    for (r, &d) in dims.iter().enumerate() {
        if d == 0 {
            errors.push(format!("input.dims[{r}]: register size must be positive"));
        }
    }
    let mut input_dims = dims.clone();
    if let Some(b) = raw.input.translations {
        if b == 0 {
            errors.push("input.translations: must be positive".to_string());
        }
        if dims.len() != 2 {
            errors.push("input.translations: requires a 2-D image input".to_string());
        }
        input_dims.push(b);
    }
    let n_total: usize = input_dims.iter().sum();
    let dim_total = input_dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
    if n_total > MAX_QUBITS || dim_total.is_none_or(|d| d as u64 > MAX_DIM) {
        errors.push(format!(
            "input.dims: {n_total} qubits / state dimension exceed the supported scale"
        ));
    }
    if raw.classes < 2 {
        errors.push(format!("classes: need at least 2, got {}", raw.classes));
    }

    let mut layers = Vec::with_capacity(raw.layers.len() + 1);
    let mut shape = Shape::Tensor(input_dims.clone());
    for (i, layer) in raw.layers.into_iter().enumerate() {
        let at = format!("layers[{i}]");
        match layer {
            RawLayer::Conv(c) => {
                let Shape::Tensor(d) = &shape else {
                    let Shape::Merged { at: m, .. } = shape else {
                        unreachable!()
                    };
                    errors.push(format!(
                        "{at}: conv needs tensor-encoded registers, but they were merged at layers[{m}]"
                    ));
                    continue;
                };
                let kr = d.len();
                let k_scalar = matches!(c.k, OneOrMany::One(_));
                let filter = match c.k {
                    OneOrMany::One(k) => vec![k; kr],
                    OneOrMany::Many(v) if v.len() == kr => v,
                    OneOrMany::Many(v) => {
                        errors.push(format!("{at}.K: lists {} sizes for {kr} registers", v.len()));
                        continue;
                    }
                };
                let ansatz = match c.ansatz {
                    None => vec![AnsatzKind::Pyramid; kr],
                    Some(OneOrMany::One(a)) => vec![a; kr],
                    Some(OneOrMany::Many(v)) if v.len() == kr => v,
                    Some(OneOrMany::Many(v)) => {
                        errors.push(format!("{at}.ansatz: lists {} kinds for {kr} registers", v.len()));
                        continue;
                    }
                };
                let path_k = |r: usize| {
                    if k_scalar {
                        format!("{at}.K")
                    } else {
                        format!("{at}.K[{r}]")
                    }
                };
                for r in 0..kr {
                    let k = filter[r];
                    let msg = if k == 0 || d[r] % k != 0 {
                        format!("{}: {k} does not divide {}", path_k(r), d[r])
                    } else if ansatz[r] == AnsatzKind::Butterfly && k > 1 && !k.is_power_of_two() {
                        format!("{}: butterfly needs a power-of-two filter, got {k}", path_k(r))
                    } else {
                        continue;
                    };
                    if !errors.contains(&msg) {
                        errors.push(msg);
                    }
                }
                layers.push(LayerSpec::Conv(ConvLayerSpec { filter, ansatz }));
            }
            RawLayer::Pool(p) => {
                let Shape::Tensor(d) = &mut shape else {
                    let Shape::Merged { at: m, .. } = shape else {
                        unreachable!()
                    };
                    errors.push(format!(
                        "{at}: pool needs tensor-encoded registers, but they were merged at layers[{m}]"
                    ));
                    continue;
                };
                let regs = p.registers.clone().unwrap_or_else(|| (0..d.len()).collect());
                let mut seen = vec![false; d.len()];
                for (j, &r) in regs.iter().enumerate() {
                    let rp = if p.registers.is_some() {
                        format!("{at}.registers[{j}]")
                    } else {
                        at.clone()
                    };
                    if r >= d.len() {
                        errors.push(format!("{rp}: register {r} does not exist ({} registers)", d.len()));
                    } else if std::mem::replace(&mut seen[r], true) {
                        errors.push(format!("{rp}: register {r} listed twice"));
                    } else if d[r] % 2 != 0 {
                        errors.push(format!("{rp}: register {r} has odd size {}", d[r]));
                    }
                }
                for (r, s) in seen.iter().enumerate() {
                    if *s {
                        d[r] = (d[r] / 2).max(1);
                    }
                }
                layers.push(LayerSpec::Pool(p));
            }
            RawLayer::Merge {} => match &shape {
                Shape::Tensor(d) => {
                    shape = Shape::Merged {
                        n: d.iter().sum(),
                        k: d.len(),
                        at: i,
                    };
                    layers.push(LayerSpec::Merge);
                }
                Shape::Merged { at: m, .. } => {
                    errors.push(format!("{at}: registers were already merged at layers[{m}]"));
                }
            },
            RawLayer::Dense(dl) => {
                if let Shape::Tensor(d) = &shape {
                    notes.push(format!("{at}: merge inserted before dense"));
                    shape = Shape::Merged {
                        n: d.iter().sum(),
                        k: d.len(),
                        at: i,
                    };
                    layers.push(LayerSpec::Merge);
                }
                let Shape::Merged { n, .. } = shape else { unreachable!() };
                let connectivity = match (dl.connectivity, dl.gates) {
                    (Some(_), Some(_)) => {
                        errors.push(format!("{at}: give either connectivity or gates, not both"));
                        continue;
                    }
                    (None, Some(g)) => {
                        for (j, &(p, q)) in g.iter().enumerate() {
                            if p >= n || q >= n {
                                errors.push(format!("{at}.gates[{j}]: qubit out of range for {n} qubits"));
                            } else if p == q {
                                errors.push(format!("{at}.gates[{j}]: gate needs two distinct qubits"));
                            }
                        }
                        Connectivity::Gates(g)
                    }
                    (c, None) => {
                        let kind = c.unwrap_or(AnsatzKind::Pyramid);
                        if kind == AnsatzKind::Butterfly && !n.is_power_of_two() {
                            errors.push(format!(
                                "{at}.connectivity: butterfly needs a power-of-two qubit count, got {n}"
                            ));
                        }
                        if n < 2 {
                            errors.push(format!("{at}: dense layer needs at least 2 qubits"));
                        }
                        Connectivity::Ansatz(kind)
                    }
                };
                layers.push(LayerSpec::Dense(DenseLayerSpec { connectivity }));
            }
        }
    }
    if let Shape::Merged { n, k, .. } = shape {
        if binomial(n, k).map_or(true, |d| d > MAX_DIM) {
            errors.push(format!("layers: merged basis C({n},{k}) exceeds the supported scale"));
        }
    }

    let t = &raw.train;
    if t.batch_size == 0 {
        errors.push("train.batch_size: must be positive".to_string());
    }
    if !(t.lr >= 0.0 && t.lr.is_finite()) {
        errors.push(format!("train.lr: must be a non-negative number, got {}", t.lr));
    }
    for (name, b) in [("beta1", t.beta1), ("beta2", t.beta2)] {
        if !(0.0..1.0).contains(&b) {
            errors.push(format!("train.{name}: must lie in [0, 1), got {b}"));
        }
    }
    if t.eps.is_nan() || t.eps <= 0.0 {
        errors.push(format!("train.eps: must be positive, got {}", t.eps));
    }

    if let Some(ds) = &raw.dataset {
        if ds.train_count == 0 {
            errors.push("dataset.train_count: must be positive".to_string());
        }
        if ds.downsample == 0 {
            errors.push("dataset.downsample: must be positive".to_string());
        } else {
            let [r, c] = ds.pad_to.unwrap_or(ds.source_shape());
            let [sr, sc] = ds.source_shape();
            if r < sr || c < sc {
                errors.push(format!(
                    "dataset.pad_to: {r}x{c} is smaller than the {sr}x{sc} source images"
                ));
            } else if r % ds.downsample != 0 || c % ds.downsample != 0 {
                errors.push(format!("dataset.downsample: {} does not divide {r}x{c}", ds.downsample));
            } else if ds.output_shape(sr, sc)[..] != dims[..] {
                let [orows, ocols] = ds.output_shape(sr, sc);
                errors.push(format!(
                    "dataset: preprocessing yields {orows}x{ocols} images but input.dims is {dims:?}"
                ));
            }
        }
    }

    let cfg = ArchitectureConfig {
        image_dims: dims,
        translations: raw.input.translations,
        layers,
        readout: raw.readout,
        classes: raw.classes,
        dataset: raw.dataset,
        train: raw.train,
        notes,
    };
    if errors.is_empty() {
        if let Err(e) = cfg.build_model() {
            errors.push(format!("model: {e}"));
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

/// Human-readable layer table with shapes, depths and parameter counts.
pub fn inspect_report(config: &ArchitectureConfig) -> Result<String> {
    use std::fmt::Write;
    let model = config.build_model()?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "input {:?}  state dim {}",
        config.input_dims(),
        model.input_basis().dim()
    );
    let _ = writeln!(
        out,
        "{:<5} {:<6} {:<12} {:<12} {:>9} {:>6} {:>6} {:>7}",
        "layer", "kind", "in", "out", "state dim", "gates", "depth", "params"
    );
    for s in model.summary() {
        let _ = writeln!(
            out,
            "{:<5} {:<6} {:<12} {:<12} {:>9} {:>6} {:>6} {:>7}",
            s.index,
            s.kind,
            format!("{:?}", s.input_shape),
            format!("{:?}", s.output_shape),
            s.state_dim,
            s.gates,
            s.depth,
            s.params
        );
    }
    let _ = writeln!(out, "total params {}", model.n_params());
    if let crate::sim::Basis::Hamming(h) = model.output_basis() {
        let _ = writeln!(
            out,
            "dense bound C({n},{k})(C({n},{k})-1)/2 = {}",
            dense_bound(h.n_qubits(), h.weight())?,
            n = h.n_qubits(),
            k = h.weight()
        );
    }
    let _ = match model.readout_spec() {
        ReadoutSpec::Outcomes(v) => writeln!(out, "readout outcomes {v:?}"),
        ReadoutSpec::QubitMarginal(v) => writeln!(out, "readout qubit_marginal {v:?}"),
    };
    for n in &config.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "digest {}", config.digest(&model));
    Ok(out)
}
