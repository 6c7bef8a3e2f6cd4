#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hwcnn::layers::{Connectivity, ConvLayerSpec, DenseLayerSpec, PoolLayerSpec};
use hwcnn::model::{LayerSpec, Model};
use hwcnn::sim::AnsatzKind;
use hwcnn::train::cross_entropy;
use rand::Rng;

pub const KINDS: [AnsatzKind; 3] = [AnsatzKind::Pyramid, AnsatzKind::Butterfly, AnsatzKind::X];

fn divisors(d: usize) -> Vec<usize> {
    (1..=d).filter(|k| d.is_multiple_of(*k)).collect()
}

fn ansatz_for<R: Rng>(rng: &mut R, k: usize) -> AnsatzKind {
    loop {
        let a = KINDS[rng.gen_range(0..3)];
        if a != AnsatzKind::Butterfly || k.is_power_of_two() {
            return a;
        }
    }
}

/// encode → conv → pool → merge → dense with at most `max_params` parameters.
pub fn random_architecture<R: Rng>(rng: &mut R, max_params: usize) -> Model {
    loop {
        let shapes: [&[usize]; 6] = [&[4, 4], &[2, 4], &[4, 6], &[6, 4], &[4, 2, 2], &[6, 6]];
        let dims = shapes[rng.gen_range(0..shapes.len())].to_vec();
        let filter: Vec<usize> = dims
            .iter()
            .map(|&d| {
                let ds: Vec<usize> = divisors(d).into_iter().filter(|&k| k <= 4).collect();
                ds[rng.gen_range(0..ds.len())]
            })
            .collect();
        let ansatz = filter.iter().map(|&k| ansatz_for(rng, k)).collect();
        let n_after: usize = dims.iter().map(|d| d / 2).sum();
        let dense = if rng.gen_bool(0.3) {
            let n_gates = rng.gen_range(1..=8);
            Connectivity::Gates(
                (0..n_gates)
                    .map(|_| {
                        let p = rng.gen_range(0..n_after);
                        let q = (p + rng.gen_range(1..n_after)) % n_after;
                        (p, q)
                    })
                    .collect(),
            )
        } else {
            Connectivity::Ansatz(ansatz_for(rng, n_after))
        };
        let layers = vec![
            LayerSpec::Conv(ConvLayerSpec { filter, ansatz }),
            LayerSpec::Pool(PoolLayerSpec::default()),
            LayerSpec::Merge,
            LayerSpec::Dense(DenseLayerSpec { connectivity: dense }),
        ];
        let classes = rng.gen_range(2..=6);
        if let Ok(m) = Model::new(&dims, layers, None, classes) {
            if m.n_params() <= max_params && m.n_params() > 0 {
                return m;
            }
        }
    }
}

pub fn random_params<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_input<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.0..1.0)).collect()
}

pub fn loss_at(model: &Model, x: &[f64], label: usize, params: &[f64]) -> f64 {
    cross_entropy(&model.predict(x, params).unwrap().probs, label)
}

/// Central differences with step `h`.
pub fn finite_difference(model: &Model, x: &[f64], label: usize, params: &[f64], h: f64) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let mut p = params.to_vec();
            p[i] += h;
            let up = loss_at(model, x, label, &p);
            p[i] -= 2.0 * h;
            let down = loss_at(model, x, label, &p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Two-frequency shift rule per gate occurrence on the raw class masses,
/// chained through normalization and cross-entropy by hand.
pub fn parameter_shift(model: &Model, x: &[f64], label: usize, params: &[f64], slots: &[usize]) -> Vec<f64> {
    let g = model.class_mass(x, params, None).unwrap();
    let total: f64 = g.iter().sum();
    let dl_dg: Vec<f64> = (0..g.len())
        .map(|c| {
            if c == label {
                -1.0 / g[label] + 1.0 / total
            } else {
                1.0 / total
            }
        })
        .collect();
    let occ_slots = model.occurrence_slots();
    let half_diff = |o: usize, s: f64| -> Vec<f64> {
        let up = model.class_mass(x, params, Some((o, s))).unwrap();
        let down = model.class_mass(x, params, Some((o, -s))).unwrap();
        up.iter().zip(&down).map(|(a, b)| (a - b) / 2.0).collect()
    };
    let q = std::f64::consts::FRAC_PI_4;
    slots
        .iter()
        .map(|&slot| {
            let mut d = 0.0;
            for (o, &s) in occ_slots.iter().enumerate() {
                if s != slot {
                    continue;
                }
                let g1 = half_diff(o, q);
                let g2 = half_diff(o, 2.0 * q);
                for c in 0..g.len() {
                    let dg = 2.0 * g1[c] + (1.0 - 2f64.sqrt()) * g2[c];
                    d += dl_dg[c] * dg;
                }
            }
            d
        })
        .collect()
}

/// Relative error with an absolute floor for near-zero pairs.
pub fn rel_err(a: f64, b: f64, abs_floor: f64) -> f64 {
    let e = (a - b).abs();
    if e <= abs_floor {
        0.0
    } else {
        e / a.abs().max(b.abs())
    }
}

/// Writes a deterministic class-dependent IDX dataset (28×28 images).
pub fn write_synthetic_idx(dir: &Path, n_train: usize, n_test: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for (prefix, n, salt) in [("train", n_train, 1u32), ("t10k", n_test, 7u32)] {
        let mut img = vec![0, 0, 8, 3];
        img.extend((n as u32).to_be_bytes());
        img.extend(28u32.to_be_bytes());
        img.extend(28u32.to_be_bytes());
        let mut lab = vec![0, 0, 8, 1];
        lab.extend((n as u32).to_be_bytes());
        for i in 0..n as u32 {
            let label = (i * 3 + salt) % 10;
            lab.push(label as u8);
            for r in 0..28u32 {
                for c in 0..28u32 {
                    let on = (r / 7 + c / 7 + label) % 4 == 0 || (r * c + i) % 17 == 0;
                    img.push(if on { 200 + ((r + c + i) % 50) as u8 } else { 0 });
                }
            }
        }
        std::fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), img).unwrap();
        std::fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), lab).unwrap();
    }
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

pub fn data_dir() -> PathBuf {
    std::env::var_os("HWCNN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data"))
}
