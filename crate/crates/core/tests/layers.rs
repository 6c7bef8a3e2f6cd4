mod common;

use hwcnn::basis::BasisIndexer;
use hwcnn::layers::{
    conv_forward, dense_forward, encode_tensor, merge_map, merge_registers, pool_forward, project_to_tensor, readout,
    translated_copies, Connectivity, ConvLayerSpec, DenseLayerSpec, PoolLayerSpec, ReadoutSpec, TensorBasis,
};
use hwcnn::model::{LayerSpec, Model};
use hwcnn::oracle::{self, apply_gate_full, bind_circuit, FullState, Subspace};
use hwcnn::sim::{AnsatzKind, Basis, QuantumState, SubspaceState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kron(a: &[f64], da: usize, b: &[f64], db: usize) -> Vec<f64> {
    let d = da * db;
    let mut out = vec![0.0; d * d];
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k) * d + j * db + l] = a[i * da + j] * b[k * db + l];
                }
            }
        }
    }
    out
}

/// Column-by-column reconstruction of the conv map on the tensor basis.
fn conv_matrix(dims: &[usize], spec: &ConvLayerSpec, params: &[f64]) -> Vec<f64> {
    let tb = TensorBasis::from_dims(dims).unwrap();
    let d = tb.dim();
    let mut m = vec![0.0; d * d];
    for col in 0..d {
        let e = SubspaceState::basis_state(Basis::Tensor(tb.clone()), col).unwrap();
        let out = conv_forward(QuantumState::Pure(e), spec, params).unwrap();
        let QuantumState::Pure(s) = out else {
            panic!("pure in, pure out")
        };
        for (row, a) in s.amplitudes().iter().enumerate() {
            m[row * d + col] = *a;
        }
    }
    m
}

fn pure(s: QuantumState) -> SubspaceState {
    match s {
        QuantumState::Pure(s) => s,
        QuantumState::Mixed(_) => panic!("expected a pure state"),
    }
}

#[test]
fn encode_two_by_two_names_the_bitstrings() {
    let s = encode_tensor(&[1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
    let tb = s.basis().as_tensor().unwrap();
    let names: Vec<String> = (0..4).map(|i| tb.bitstring(i).to_string()).collect();
    assert_eq!(names, ["1010", "1001", "0110", "0101"]);
    let n = 30f64.sqrt();
    for (a, want) in s.amplitudes().iter().zip([1.0, 2.0, 3.0, 4.0]) {
        assert!((a - want / n).abs() < 1e-15);
    }
    assert!(encode_tensor(&[0.0; 4], &[2, 2]).is_err());
    let one_hot = encode_tensor(&[0.0, 0.0, 5.0, 0.0], &[2, 2]).unwrap();
    assert_eq!(one_hot.amplitudes(), &[0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn two_by_two_conv_is_a_kronecker_of_rotations() {
    let (t1, t2) = (0.37, -1.21);
    let spec = ConvLayerSpec::uniform(2, 2, AnsatzKind::Pyramid);
    let x = [0.3, -0.8, 1.1, 0.5];
    let out = pure(
        conv_forward(
            QuantumState::Pure(encode_tensor(&x, &[2, 2]).unwrap()),
            &spec,
            &[t1, t2],
        )
        .unwrap(),
    );
    // The register's two states are |10> (index 0) and |01> (index 1).
    let rot = |t: f64| vec![t.cos(), -t.sin(), t.sin(), t.cos()];
    let u = kron(&rot(t1), 2, &rot(t2), 2);
    let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    for r in 0..4 {
        let want: f64 = (0..4).map(|c| u[r * 4 + c] * x[c] / n).sum();
        assert!((out.amplitudes()[r] - want).abs() < 1e-14);
    }
}

#[test]
fn zero_params_conv_and_dense_are_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = common::random_input(&mut rng, 64);
    let s = encode_tensor(&x, &[8, 8]).unwrap();
    let spec = ConvLayerSpec::uniform(4, 2, AnsatzKind::X);
    let out = pure(
        conv_forward(
            QuantumState::Pure(s.clone()),
            &spec,
            &vec![0.0; spec.n_params().unwrap()],
        )
        .unwrap(),
    );
    assert_eq!(out.amplitudes(), s.amplitudes());
    let merged = merge_registers(QuantumState::Pure(s)).unwrap();
    let dense = DenseLayerSpec {
        connectivity: Connectivity::Ansatz(AnsatzKind::Pyramid),
    };
    let after = dense_forward(merged.clone(), &dense, &[0.0; 120]).unwrap();
    assert_eq!(pure(after).amplitudes(), pure(merged).amplitudes());
}

#[test]
fn conv_windows_transform_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = ConvLayerSpec::uniform(2, 2, AnsatzKind::Pyramid);
    let params = [0.9, -0.4];
    let patch: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
    let place = |r0: usize, c0: usize| {
        let mut img = vec![0.0; 16];
        for a in 0..2 {
            for b in 0..2 {
                img[(r0 + a) * 4 + c0 + b] = patch[a * 2 + b];
            }
        }
        img
    };
    let run = |img: Vec<f64>| {
        pure(
            conv_forward(
                QuantumState::Pure(encode_tensor(&img, &[4, 4]).unwrap()),
                &spec,
                &params,
            )
            .unwrap(),
        )
        .into_amplitudes()
    };
    let top = run(place(0, 0));
    let bottom = run(place(2, 2));
    for a in 0..4 {
        for b in 0..4 {
            let shifted = if a >= 2 && b >= 2 {
                top[(a - 2) * 4 + b - 2]
            } else {
                0.0
            };
            assert!((bottom[a * 4 + b] - shifted).abs() < 1e-15, "({a},{b})");
        }
    }
    for (i, v) in top.iter().enumerate() {
        if i / 4 >= 2 || i % 4 >= 2 {
            assert_eq!(*v, 0.0, "window leaked at {i}");
        }
    }
}

#[test]
fn conv_matrix_factors_over_registers_and_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (dims, filter, ansatz) in [
        (vec![4, 4], vec![2, 2], vec![AnsatzKind::Pyramid, AnsatzKind::X]),
        (vec![4, 6], vec![4, 3], vec![AnsatzKind::Butterfly, AnsatzKind::Pyramid]),
        (vec![6, 2], vec![3, 1], vec![AnsatzKind::X, AnsatzKind::Pyramid]),
    ] {
        let spec = ConvLayerSpec {
            filter: filter.clone(),
            ansatz: ansatz.clone(),
        };
        let per = spec.register_params().unwrap();
        let params = common::random_params(&mut rng, spec.n_params().unwrap(), 3.0);
        let m = conv_matrix(&dims, &spec, &params);
        // each register alone, then the block structure inside one register
        let mut factors = Vec::new();
        let mut off = 0;
        for r in 0..2 {
            let single = ConvLayerSpec {
                filter: vec![filter[r]],
                ansatz: vec![ansatz[r]],
            };
            let mr = conv_matrix(&[dims[r]], &single, &params[off..off + per[r]]);
            off += per[r];
            let k = filter[r];
            let block = conv_matrix(&[k], &single, &params[off - per[r]..off]);
            for i in 0..dims[r] {
                for j in 0..dims[r] {
                    let want = if i / k == j / k {
                        block[(i % k) * k + j % k]
                    } else {
                        0.0
                    };
                    assert!((mr[i * dims[r] + j] - want).abs() < 1e-15);
                }
            }
            factors.push(mr);
        }
        let want = kron(&factors[0], dims[0], &factors[1], dims[1]);
        let d = dims[0] * dims[1];
        for i in 0..d * d {
            assert!((m[i] - want[i]).abs() < 1e-14, "{dims:?}");
        }
        // orthogonality of the whole map
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = (0..d).map(|r| m[r * d + a] * m[r * d + b]).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn merge_examples() {
    let tb = TensorBasis::from_dims(&[2, 2]).unwrap();
    let (idx, map) = merge_map(&tb).unwrap();
    assert_eq!(idx.dim(), 6);
    assert_eq!(map[0], 4);
    assert_eq!(map, vec![4, 3, 2, 1]);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tb = TensorBasis::from_dims(&[4, 2, 2]).unwrap();
    let x = common::random_input(&mut rng, tb.dim());
    let s = encode_tensor(&x, tb.dims()).unwrap();
    let merged = merge_registers(QuantumState::Pure(s.clone())).unwrap();
    assert!((pure(merged.clone()).norm() - 1.0).abs() < 1e-14);
    let back = project_to_tensor(&merged, &tb).unwrap();
    assert_eq!(pure(back).amplitudes(), s.amplitudes());

    let rho = pool_forward(
        &QuantumState::Pure(s),
        &PoolLayerSpec {
            registers: Some(vec![0]),
        },
    )
    .unwrap();
    let out_tb = rho.basis().as_tensor().unwrap().clone();
    let merged = merge_registers(QuantumState::Mixed(rho.clone())).unwrap();
    let QuantumState::Mixed(m) = &merged else { panic!() };
    assert!((m.trace() - 1.0).abs() < 1e-14);
    let QuantumState::Mixed(back) = project_to_tensor(&merged, &out_tb).unwrap() else {
        panic!()
    };
    assert_eq!(back.matrix(), rho.matrix());
}

#[test]
fn dense_pyramid_on_four_unary_qubits_is_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = DenseLayerSpec {
        connectivity: Connectivity::Ansatz(AnsatzKind::Pyramid),
    }
    .circuit(4)
    .unwrap();
    let params = common::random_params(&mut rng, c.n_params(), 3.0);
    let u = c
        .realized_matrix(&Basis::Hamming(BasisIndexer::new(4, 1).unwrap()), &params)
        .unwrap();
    for a in 0..4 {
        for b in 0..4 {
            let dot: f64 = (0..4).map(|r| u[r * 4 + a] * u[r * 4 + b]).sum();
            assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() <= 1e-10);
        }
    }
}

#[test]
fn dense_six_choose_two_matches_full_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let pairs: Vec<(usize, usize)> = (0..12)
            .map(|_| {
                let p = rng.gen_range(0..6);
                (p, (p + rng.gen_range(1..6)) % 6)
            })
            .collect();
        let spec = DenseLayerSpec {
            connectivity: Connectivity::Gates(pairs),
        };
        let params = common::random_params(&mut rng, 12, 3.0);
        let basis = Basis::Hamming(BasisIndexer::new(6, 2).unwrap());
        let x = common::random_input(&mut rng, 15);
        let s = SubspaceState::normalized(basis, x).unwrap();
        let target = Subspace::Hamming { n: 6, k: 2 };
        let mut full = FullState::embed(&s, &target).unwrap();
        for g in bind_circuit(&spec.circuit(6).unwrap(), &params) {
            apply_gate_full(&mut full, g).unwrap();
        }
        let want = oracle::project_to_subspace(&full, &target).unwrap();
        let got = pure(dense_forward(QuantumState::Pure(s), &spec, &params).unwrap());
        for (a, b) in got.amplitudes().iter().zip(want.amplitudes()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn readout_examples() {
    let basis = Basis::Hamming(BasisIndexer::new(5, 2).unwrap());
    let spec = ReadoutSpec::Outcomes((0..10).collect());
    let s = SubspaceState::basis_state(basis.clone(), 3).unwrap();
    let r = readout(&QuantumState::Pure(s), &spec).unwrap();
    let mut want = vec![0.0; 10];
    want[3] = 1.0;
    assert_eq!(r.probs, want);
    assert!(!r.degenerate);

    let uniform = SubspaceState::normalized(basis.clone(), vec![1.0; 10]).unwrap();
    let r = readout(&QuantumState::Pure(uniform), &spec).unwrap();
    assert!(r.probs.iter().all(|p| (p - 0.1).abs() < 1e-15));

    let few = ReadoutSpec::Outcomes(vec![0, 1]);
    let far = SubspaceState::basis_state(basis.clone(), 9).unwrap();
    let r = readout(&QuantumState::Pure(far), &few).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.probs, vec![0.5, 0.5]);

    assert!(readout(
        &QuantumState::Pure(SubspaceState::basis_state(basis.clone(), 0).unwrap()),
        &ReadoutSpec::Outcomes(vec![1, 1])
    )
    .is_err());
}

#[test]
fn translated_copies_shift_right() {
    let img = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let t = translated_copies(&img, 2, 3, 2);
    // (r, c, copy)
    assert_eq!(t, vec![1.0, 0.0, 2.0, 1.0, 3.0, 2.0, 4.0, 0.0, 5.0, 4.0, 6.0, 5.0]);
}

#[test]
fn pipeline_closure_and_param_counts() {
    let conv = |k| LayerSpec::Conv(ConvLayerSpec::uniform(k, 2, AnsatzKind::Pyramid));
    let layers = vec![
        conv(2),
        LayerSpec::Pool(PoolLayerSpec::default()),
        conv(2),
        LayerSpec::Pool(PoolLayerSpec::default()),
        conv(2),
        LayerSpec::Merge,
        LayerSpec::Dense(DenseLayerSpec {
            connectivity: Connectivity::Ansatz(AnsatzKind::Butterfly),
        }),
    ];
    let m = Model::new(&[8, 8], layers, None, 4).unwrap();
    let shapes: Vec<Vec<usize>> = m.summary().iter().map(|s| s.output_shape.clone()).collect();
    assert_eq!(shapes[4], vec![2, 2]);
    let ranges = m.layer_params();
    assert_eq!(ranges[1].len(), 0);
    assert_eq!(ranges[3].len(), 0);
    assert_eq!(m.n_params(), 2 + 2 + 2 + 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = common::random_input(&mut rng, 64);
    let r = m.predict(&x, &m.init_params(&mut rng)).unwrap();
    assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn pyramid_conv_count_is_triangular(ks in proptest::collection::vec(1usize..=8, 1..=4)) {
        let spec = ConvLayerSpec { filter: ks.clone(), ansatz: vec![AnsatzKind::Pyramid; ks.len()] };
        prop_assert_eq!(spec.n_params().unwrap(), ks.iter().map(|k| k * (k - 1) / 2).sum::<usize>());
    }

    #[test]
    fn readout_is_on_the_simplex(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_architecture(&mut rng, 40);
        let x = common::random_input(&mut rng, m.input_basis().dim());
        let r = m.predict(&x, &m.init_params(&mut rng)).unwrap();
        prop_assert!(r.probs.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
        prop_assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
