//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{finite_difference, parameter_shift, random_architecture, random_input, random_params, rel_err};
use hwcnn::basis::{binomial, BasisIndexer};
use hwcnn::config::{load_config, ArchitectureConfig};
use hwcnn::data::Split;
use hwcnn::layers::encode_tensor;
use hwcnn::oracle::{self, apply_gate_full, bind_circuit, FullState, Subspace};
use hwcnn::run::{load_samples, train_run, MetricsSplit, RunOptions};
use hwcnn::sim::{AnsatzCircuit, Basis, PoolingChannel, RbsGate, SubspaceState};
use hwcnn::train::evaluate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn hwcnn_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hwcnn"))
        .args(args)
        .output()
        .expect("spawn hwcnn")
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut leaked) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let n = rng.gen_range(k + 1..=10);
        let n_gates = rng.gen_range(1..=40);
        let gates = (0..n_gates)
            .map(|slot| {
                let p = rng.gen_range(0..n);
                RbsGate {
                    p,
                    q: (p + rng.gen_range(1..n)) % n,
                    slot,
                }
            })
            .collect();
        let c = AnsatzCircuit::new(n, n_gates, gates).unwrap();
        let params: Vec<f64> = (0..n_gates)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let basis = Basis::Hamming(BasisIndexer::new(n, k).unwrap());
        let x: Vec<f64> = (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut s = SubspaceState::normalized(basis, x).unwrap();
        let target = Subspace::Hamming { n, k };
        let mut full = FullState::embed(&s, &target).unwrap();
        for g in bind_circuit(&c, &params) {
            apply_gate_full(&mut full, g).unwrap();
        }
        s.apply_circuit(&c, &params).unwrap();
        leaked = leaked.max(oracle::leakage(&full, &target).unwrap());
        let proj = oracle::project_to_subspace(&full, &target).unwrap();
        for (a, b) in s.amplitudes().iter().zip(proj.amplitudes()) {
            worst = worst.max((a - b).abs());
        }
    }
    verdict(
        worst <= 1e-10 && leaked == 0.0,
        format!("200 circuits, max |diff| {worst:.2e}, leaked mass {leaked:e}"),
    )
}

fn pooling_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut trace_err, mut window_err) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let side = if i % 2 == 0 { 4 } else { 8 };
        let dims = [side, side];
        let img: Vec<f64> = (0..side * side).map(|_| rng.gen_range(0.0..1.0)).collect();
        let psi = encode_tensor(&img, &dims).unwrap();
        let ch = PoolingChannel::new(psi.basis().as_tensor().unwrap(), &[0, 1]).unwrap();
        let ours = ch.apply_pure(&psi).unwrap();
        let full = FullState::embed(&psi, &Subspace::Tensor(dims.to_vec())).unwrap();
        let reference = oracle::pool_reference(&full, &dims, &[0, 1]).unwrap();
        for (a, b) in ours.matrix().iter().zip(reference.matrix()) {
            worst = worst.max((a - b).abs());
        }
        trace_err = trace_err.max((ours.trace() - 1.0).abs());
        let norm2: f64 = img.iter().map(|v| v * v).sum();
        let half = side / 2;
        for a in 0..half {
            for b in 0..half {
                let mut w = 0.0;
                for r in 2 * a..2 * a + 2 {
                    for c in 2 * b..2 * b + 2 {
                        w += img[r * side + c].powi(2);
                    }
                }
                window_err = window_err.max((ours.get(a * half + b, a * half + b) - w / norm2).abs());
            }
        }
    }
    verdict(
        worst <= 1e-10 && trace_err <= 1e-9 && window_err <= 1e-10,
        format!("100 images, max |diff| {worst:.2e}, trace err {trace_err:.2e}, window-sum err {window_err:.2e}"),
    )
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut fd_worst, mut ps_worst, mut max_n) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..50 {
        let m = random_architecture(&mut rng, 30);
        max_n = max_n.max(m.input_basis().n_qubits());
        let x = random_input(&mut rng, m.input_basis().dim());
        let label = rng.gen_range(0..m.n_classes());
        let params = random_params(&mut rng, m.n_params(), 1.5);
        let (_, _, g) = m.loss_and_grad(&x, label, &params).unwrap();
        let fd = finite_difference(&m, &x, label, &params, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            fd_worst = fd_worst.max(rel_err(*a, *b, 1e-8));
        }
        let slots: Vec<usize> = (0..m.n_params().min(10)).collect();
        for (&s, p) in slots.iter().zip(parameter_shift(&m, &x, label, &params, &slots)) {
            ps_worst = ps_worst.max(rel_err(g[s], p, 1e-8));
        }
    }
    verdict(
        fd_worst <= 1e-4 && ps_worst <= 1e-8 && max_n <= 12,
        format!("50 architectures (n <= {max_n}), finite-difference rel err {fd_worst:.2e}, parameter-shift rel err {ps_worst:.2e}"),
    )
}

struct Golden {
    name: &'static str,
    text: String,
    layer_params: Vec<usize>,
    dense: Option<(usize, usize)>,
}

fn golden_configs(root: &Path) -> Vec<Golden> {
    let read = |p: &str| std::fs::read_to_string(root.join(p)).unwrap();
    let inline = |dims: &str, layers: &str, classes: usize| {
        format!(r#"{{"input": {{"dims": {dims}}}, "layers": {layers}, "classes": {classes}}}"#)
    };
    vec![
        Golden {
            name: "mnist",
            text: read("configs/mnist.json"),
            layer_params: vec![12, 0, 12, 0, 0, 28],
            dense: Some((8, 2)),
        },
        Golden {
            name: "fashion",
            text: read("configs/fashion.json"),
            layer_params: vec![12, 0, 12, 0, 0, 28],
            dense: Some((8, 2)),
        },
        Golden {
            name: "2x2 minimal",
            text: inline(
                "[2, 2]",
                r#"[{"conv": {"K": 2}}, {"merge": {}}, {"dense": {"connectivity": "pyramid"}}]"#,
                2,
            ),
            layer_params: vec![2, 0, 6],
            dense: Some((4, 2)),
        },
        Golden {
            name: "mixed filters",
            text: inline(
                "[8, 12]",
                r#"[{"conv": {"K": [8, 3], "ansatz": ["pyramid", "pyramid"]}}, {"pool": {}},
                    {"conv": {"K": [2, 6], "ansatz": ["x", "pyramid"]}}, {"merge": {}},
                    {"dense": {"connectivity": "pyramid"}}]"#,
                10,
            ),
            layer_params: vec![28 + 3, 0, 1 + 15, 0, 45],
            dense: Some((10, 2)),
        },
        Golden {
            name: "three registers",
            text: inline(
                "[4, 4, 4]",
                r#"[{"conv": {"K": 4}}, {"pool": {"registers": [0, 2]}}, {"merge": {}},
                    {"dense": {"gates": [[0, 1], [2, 3], [4, 5], [1, 6], [6, 7]]}}]"#,
                6,
            ),
            layer_params: vec![18, 0, 0, 5],
            dense: Some((8, 3)),
        },
    ]
}

fn parameter_counts() -> Verdict {
    let root = common::workspace_root();
    let dir = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    let goldens = golden_configs(&root);
    for (i, g) in goldens.iter().enumerate() {
        let path = if g.name == "mnist" || g.name == "fashion" {
            root.join(format!("configs/{}.json", g.name))
        } else {
            let p = dir.path().join(format!("g{i}.json"));
            std::fs::write(&p, &g.text).unwrap();
            p
        };
        let o = hwcnn_bin(&["inspect", "--config", path.to_str().unwrap()]);
        if !o.status.success() {
            problems.push(format!("{}: {}", g.name, String::from_utf8_lossy(&o.stderr).trim()));
            continue;
        }
        let out = String::from_utf8_lossy(&o.stdout).into_owned();
        let rows: Vec<Vec<&str>> = out
            .lines()
            .skip(2)
            .take_while(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
            .map(|l| l.split_whitespace().collect())
            .collect();
        let got: Vec<usize> = rows.iter().map(|r| r.last().unwrap().parse().unwrap()).collect();
        if got != g.layer_params {
            problems.push(format!("{}: per-layer {got:?} != {:?}", g.name, g.layer_params));
        }
        let total: usize = g.layer_params.iter().sum();
        if !out.contains(&format!("total params {total}\n")) {
            problems.push(format!("{}: total != {total}", g.name));
        }
        for r in &rows {
            if r[1] == "pool" && r.last() != Some(&"0") {
                problems.push(format!("{}: pool layer with parameters", g.name));
            }
        }
        if let Some((n, k)) = g.dense {
            let d = binomial(n, k).unwrap();
            let bound = d * (d - 1) / 2;
            if !out.contains(&format!("= {bound}\n")) || *g.layer_params.last().unwrap() as u64 > bound {
                problems.push(format!("{}: dense bound {bound} not reported or exceeded", g.name));
            }
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} golden configs", goldens.len())
        } else {
            problems.join("; ")
        },
    )
}

fn dataset_config(name: &str) -> Result<ArchitectureConfig, String> {
    let root = common::workspace_root();
    let mut cfg = load_config(&root.join(format!("configs/{name}.json"))).map_err(|e| e.to_string())?;
    if let Some(ds) = cfg.dataset.as_mut() {
        ds.path = common::data_dir().join(name);
        let missing: Vec<PathBuf> = ds
            .files(Split::Train)
            .into_iter()
            .chain(ds.files(Split::Test))
            .filter(|f| !f.exists())
            .collect();
        if !missing.is_empty() {
            return Err(format!("dataset files missing under {}", ds.path.display()));
        }
    }
    Ok(cfg)
}

struct SeedResult {
    train: f64,
    test: f64,
}

fn seed_sweep(cfg: &ArchitectureConfig, seeds: u64) -> Result<(Vec<SeedResult>, f64), String> {
    let t0 = Instant::now();
    let train = load_samples(cfg, Split::Train).map_err(|e| e.to_string())?;
    let test = load_samples(cfg, Split::Test).map_err(|e| e.to_string())?;
    let model = cfg.build_model().map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for seed in 0..seeds {
        let opts = RunOptions {
            seed: Some(seed),
            ..RunOptions::default()
        };
        let r = train_run(cfg, &train, &test, &opts, |_| {}).map_err(|e| e.to_string())?;
        let tr = evaluate(&model, &train, &r.params).map_err(|e| e.to_string())?;
        let te = r.last(MetricsSplit::Test).map(|m| m.accuracy).unwrap_or(0.0);
        out.push(SeedResult {
            train: tr.accuracy,
            test: te,
        });
    }
    Ok((out, t0.elapsed().as_secs_f64()))
}

fn fmt_seeds(rs: &[SeedResult]) -> String {
    rs.iter()
        .map(|r| format!("{:.1}/{:.1}", 100.0 * r.train, 100.0 * r.test))
        .collect::<Vec<_>>()
        .join(" ")
}

fn mnist_training() -> Verdict {
    let cfg = match dataset_config("mnist") {
        Ok(c) => c,
        Err(e) => return Fail(e),
    };
    let n_params = cfg.build_model().map(|m| m.n_params()).unwrap_or(usize::MAX);
    match seed_sweep(&cfg, 10) {
        Ok((rs, secs)) => {
            let good = rs.iter().filter(|r| r.train >= 0.85 && r.test >= 0.75).count();
            verdict(
                good >= 8 && n_params <= 800,
                format!(
                    "{good}/10 seeds reach train >= 85% and test >= 75% ({n_params} params, {} epochs, {secs:.0} s); train/test % per seed: {}",
                    cfg.train.epochs,
                    fmt_seeds(&rs)
                ),
            )
        }
        Err(e) => Fail(e),
    }
}

fn fashion_training() -> Verdict {
    let cfg = match dataset_config("fashion") {
        Ok(c) => c,
        Err(e) => return Fail(e),
    };
    match seed_sweep(&cfg, 10) {
        Ok((rs, secs)) => {
            let good = rs.iter().filter(|r| r.test >= 0.65).count();
            verdict(
                good > 5,
                format!(
                    "{good}/10 seeds reach test >= 65% ({} epochs, {secs:.0} s); train/test % per seed: {}",
                    cfg.train.epochs,
                    fmt_seeds(&rs)
                ),
            )
        }
        Err(e) => Fail(e),
    }
}

fn cifar_stretch() -> Verdict {
    let cfg = match dataset_config("cifar10") {
        Ok(c) => c,
        Err(e) => return Skip(e),
    };
    match seed_sweep(&cfg, 1) {
        Ok((rs, secs)) => verdict(
            rs[0].test > 0.20,
            format!("seed 0 train/test % {} ({secs:.0} s)", fmt_seeds(&rs)),
        ),
        Err(e) => Fail(e),
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = match dataset_config("mnist") {
        // fall back to synthetic IDX files so the byte comparison still runs
        Ok(_) => common::workspace_root().join("configs/mnist.json"),
        Err(_) => {
            common::write_synthetic_idx(&dir.path().join("data"), 2000, 1000);
            let text = std::fs::read_to_string(common::workspace_root().join("configs/mnist.json"))
                .unwrap()
                .replace("../data/mnist", "data");
            let p = dir.path().join("mnist.json");
            std::fs::write(&p, text).unwrap();
            p
        }
    };
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = hwcnn_bin(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--epochs",
            "2",
            "--seed",
            "4",
        ]);
        if !o.status.success() {
            return Fail(String::from_utf8_lossy(&o.stderr).trim().to_string());
        }
        csvs.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    verdict(
        csvs[0] == csvs[1] && csvs[0].len() > 40,
        format!(
            "two 2-epoch runs, {} byte CSVs, identical: {}",
            csvs[0].len(),
            csvs[0] == csvs[1]
        ),
    )
}

fn invariant_suite() -> Verdict {
    let o = hwcnn_bin(&["verify"]);
    let out = String::from_utf8_lossy(&o.stdout);
    let summary = out.lines().last().unwrap_or("").to_string();
    let failed: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    verdict(
        o.status.success() && failed.is_empty(),
        if failed.is_empty() { summary } else { failed.join("; ") },
    )
}

fn main() -> ExitCode {
    // libtest flags such as --list or a name filter arrive here too
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Check); 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 pooling channel equivalence", pooling_equivalence),
        ("3 gradient correctness", gradient_correctness),
        ("4 parameter-count formulas", parameter_counts),
        ("5 MNIST training", mnist_training),
        ("6 FashionMNIST training", fashion_training),
        ("6 stretch CIFAR-10", cifar_stretch),
        ("7 determinism", determinism),
        ("8 invariant suite", invariant_suite),
    ];
    let mut failed = 0;
    let mut passed = 0;
    let filter = args.iter().find(|a| !a.starts_with('-'));
    for (name, f) in criteria {
        if filter.is_some_and(|p| !name.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Pass(d) => {
                passed += 1;
                ("PASS", d)
            }
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {name}: {tag} [{secs:.1} s] {detail}");
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
