//! End-to-end acceptance checks. Each test prints one pass line; a panic
//! marks the corresponding criterion as failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;

use coolnet::channel::{self, diagnose, make_tau, make_tau_prime, vacuum_rate_kappa};
use coolnet::cli::{self, Cli, Command};
use coolnet::coding::{
    bound_down, compute_code_map, decoder_residual_bound, fidelity_down, fidelity_up,
};
use coolnet::cooling::{compute_trace, fit_time_step, relative_rms, shuffle_estimate};
use coolnet::linalg::{evolve_unitary, StateVector};
use coolnet::network::{build_heisenberg, load_graph, SpinNetwork};
use coolnet::protocol::{CompiledProtocol, Direction, ProtocolConfig};
use coolnet::states::{random_pure_state, StateRegistry};

fn graph_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../graphs/{name}"))
}

fn chain3(t: f64, l: usize, dir: Direction) -> CompiledProtocol {
    let net = SpinNetwork::chain(3, 1.0, 1).unwrap();
    ProtocolConfig::new(net, t, l, dir).unwrap().compile().unwrap()
}

fn pair(t: f64, l: usize, dir: Direction) -> CompiledProtocol {
    let net = SpinNetwork::chain(2, 1.0, 1).unwrap();
    ProtocolConfig::new(net, t, l, dir).unwrap().compile().unwrap()
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

#[test]
fn criterion_01_reduced_dynamics_oracle() {
    let start = Instant::now();
    for l in 1..=6 {
        let p = chain3(1.0, l, Direction::Forward);
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1000 * l as u64 + seed);
            let psi = random_pure_state(8, &mut rng);
            let (_, _, dist) = p.reduced_dynamics_check(&psi).unwrap();
            assert!(dist <= 1e-9, "L={l} seed={seed}: trace distance {dist}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 1 (reduced-dynamics oracle, 3-spin chain): pass ({elapsed:?})");
}

#[test]
fn criterion_02_eta_equals_eta_tilde() {
    for l in 1..=6 {
        let p = chain3(1.0, l, Direction::Forward);
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1000 * l as u64 + seed);
            let psi = random_pure_state(8, &mut rng);
            let full = p.apply_w(&psi).unwrap();
            let dec = p.decompose(&full).unwrap();
            let phi = dec.phi_m.as_ref().expect("generic input has η > 0");
            let eta_t = p.eta_tilde(&psi, phi).unwrap();
            assert!(
                (dec.eta - eta_t).abs() <= 1e-9,
                "L={l} seed={seed}: η={} η̃={eta_t}",
                dec.eta
            );
        }
    }
    println!("criterion 2 (η = η̃ on the oracle suite): pass");
}

#[test]
fn criterion_03_seven_spin_ergodicity() {
    let start = Instant::now();
    let net = load_graph(&graph_path("fig1.txt")).unwrap().relabeled_for_layout();
    let h = build_heisenberg(&net).unwrap();
    let u = evolve_unitary(&h, 0.7).unwrap();
    let dims = (net.dim_controlled(), net.dim_uncontrolled());
    let zero = StateVector::basis(dims.0, 0, vec![dims.0]).unwrap();
    for (label, ch) in [
        ("tau", make_tau(&u, &zero, dims).unwrap()),
        ("tau_prime", make_tau_prime(&u, &zero, dims).unwrap()),
    ] {
        let diag = diagnose(&ch).unwrap();
        assert!(diag.ergodic_pure, "{label} not certified ergodic");
        assert!(diag.purity_of_fixed_point >= 1.0 - 1e-9);
        assert!(
            diag.fixed_point.diagonal_element(0) >= 1.0 - 1e-9,
            "{label} fixed point is not the vacuum"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 3 (7-spin ergodicity certification): pass ({elapsed:?})");
}

#[test]
fn criterion_04_rate_cross_check() {
    let net = SpinNetwork::chain(3, 1.0, 1).unwrap();
    let h = build_heisenberg(&net).unwrap();
    let u = evolve_unitary(&h, 1.0).unwrap();
    let zero_c = StateVector::basis(2, 0, vec![2]).unwrap();
    let tau = make_tau(&u, &zero_c, (2, 4)).unwrap();
    let zero = StateVector::basis(4, 0, vec![4]).unwrap();
    let all_ones = StateVector::basis(4, 3, vec![4]).unwrap().to_density();
    let (_, residuals) = channel::eta_sequence(&tau, &all_ones, 100, &zero).unwrap();
    // log(1 − η) over L ∈ [30, 100]
    let points: Vec<(f64, f64)> = (30..=100)
        .map(|l| (l as f64, residuals[l - 1].ln()))
        .collect();
    let slope = least_squares_slope(&points);
    // Populations decay at the magnetization-diagonal rate of the
    // superoperator spectrum (the globally subleading modes are
    // inter-sector coherences with no diagonal weight).
    let expected = vacuum_rate_kappa(&tau).unwrap().ln();
    assert!(
        (slope - expected).abs() / expected.abs() <= 0.1,
        "slope {slope} vs spectrum rate {expected}"
    );
    println!("criterion 4 (η-decay rate matches the superoperator spectrum): pass");
}

#[test]
fn criterion_05_gram_and_decoder_inequalities() {
    let mut maps = Vec::new();
    for l in [8usize, 12, 16] {
        maps.push(compute_code_map(&pair(0.55, l, Direction::Forward)).unwrap());
        maps.push(compute_code_map(&pair(0.55, l, Direction::Reverse)).unwrap());
    }
    maps.push(compute_code_map(&chain3(0.7, 10, Direction::Forward)).unwrap());
    for code in &maps {
        let d = code.dim();
        let slack = 3.0 * (1.0 - code.eta0).sqrt();
        for j in 0..d {
            for k in 0..d {
                if j != k {
                    let g = code.gram.get(j, k).norm();
                    assert!(g <= slack + 1e-12, "|G_{j}{k}| = {g} > {slack}");
                }
            }
        }
        let (lhs, rhs) = decoder_residual_bound(code);
        assert!(lhs <= rhs + 1e-12, "‖D − V‖_F = {lhs} > {rhs}");
    }
    println!("criterion 5 (Gram and decoder inequalities on {} code maps): pass", maps.len());
}

#[test]
fn criterion_06_fidelity_bounds_and_median_decrease() {
    let start = Instant::now();
    let mut med_down = Vec::new();
    let mut med_up = Vec::new();
    for l in [8usize, 12, 16] {
        let pd = pair(0.55, l, Direction::Forward);
        let cd = compute_code_map(&pd).unwrap();
        let pu = pair(0.55, l, Direction::Reverse);
        let cu = compute_code_map(&pu).unwrap();
        let bdown = bound_down(cd.eta0, 4);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let mut downs = Vec::new();
        let mut ups = Vec::new();
        for _ in 0..30 {
            let psi = random_pure_state(4, &mut rng);
            let fd = fidelity_down(&psi, &pd, &cd).unwrap();
            if bdown > 0.0 {
                assert!(fd >= bdown - 1e-12, "F_down {fd} < bound {bdown} at L={l}");
            }
            let (fu, bup) = fidelity_up(&psi, &pu, &cu).unwrap();
            if bup > 0.0 {
                assert!(fu >= bup - 1e-12, "F_up {fu} < bound {bup} at L={l}");
            }
            downs.push(1.0 - fd);
            ups.push(1.0 - fu);
        }
        med_down.push(median(&mut downs));
        med_up.push(median(&mut ups));
    }
    assert!(
        med_down[0] > med_down[1] && med_down[1] > med_down[2],
        "median 1 − F_down not decreasing: {med_down:?}"
    );
    assert!(
        med_up[0] > med_up[1] && med_up[1] > med_up[2],
        "median 1 − F_up not decreasing: {med_up:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("criterion 6 (fidelity bounds, medians {med_down:?} / {med_up:?}): pass ({elapsed:?})");
}

#[test]
fn criterion_07_cooling_quartet_shapes() {
    let start = Instant::now();
    let net = load_graph(&graph_path("fig1.txt")).unwrap();
    let p = ProtocolConfig::new(net.clone(), 0.7, 1, Direction::Forward)
        .unwrap()
        .compile()
        .unwrap();
    let reg = StateRegistry::standard();
    let lmax = 800usize;
    for label in ["all_ones", "ghz", "mixed", "w"] {
        let rho0 = reg.resolve(label, net.n_qubits()).unwrap();
        let trace = compute_trace(&rho0, &p, lmax, label).unwrap();
        // coarse monotone trend toward 1
        for k in (0..lmax).step_by(50) {
            let next = (k + 50).min(lmax);
            assert!(
                trace.p0[next] + 1e-3 >= trace.p0[k],
                "{label}: P₀ drops between L={k} and L={next}"
            );
        }
        assert!(
            trace.p0[lmax] > 0.9,
            "{label}: P₀ at L={lmax} is only {}",
            trace.p0[lmax]
        );
        // asymptotically linear log(1 − P₀): compare tail slopes
        let window = |a: usize, b: usize| -> f64 {
            let pts: Vec<(f64, f64)> = (a..=b)
                .map(|l| (l as f64, (1.0 - trace.p0[l]).ln()))
                .collect();
            least_squares_slope(&pts)
        };
        let s1 = window(400, 600);
        let s2 = window(600, 800);
        assert!(
            (s1 - s2).abs() / s1.abs() < 0.2,
            "{label}: tail slopes {s1} vs {s2} disagree"
        );
        if label == "ghz" {
            for (l, &p0) in trace.p0.iter().enumerate() {
                assert!(p0 >= 0.5 - 1e-9, "GHZ P₀ = {p0} < 1/2 at L={l}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("criterion 7 (cooling quartet shape on the 7-spin graph): pass ({elapsed:?})");
}

#[test]
fn criterion_08_shuffle_estimator_fit() {
    let net = load_graph(&graph_path("chain7.txt")).unwrap();
    let reg = StateRegistry::standard();
    let rho0 = reg.resolve("all_ones", 7).unwrap();
    let lmax = 15usize;
    let t_grid: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
    let mut decays = Vec::new();
    for c_size in 1..=3usize {
        let controlled: Vec<usize> = (0..c_size).collect();
        let cnet = SpinNetwork::new(7, net.edges().to_vec(), controlled).unwrap();
        let template = ProtocolConfig::new(cnet, 1.0, 1, Direction::Forward).unwrap();
        let (t_best, _) = fit_time_step(&rho0, &template, lmax, &t_grid).unwrap();
        let mut cfg = template.clone();
        cfg.t = t_best;
        let p = cfg.compile().unwrap();
        let trace = compute_trace(&rho0, &p, lmax, "all_ones").unwrap();
        let rms = relative_rms(&trace.avg_n, &trace.estimator);
        assert!(
            rms <= 0.25,
            "|C| = {c_size}: relative RMS {rms} exceeds 0.25 (t = {t_best})"
        );
        decays.push((trace.avg_n[lmax] / trace.avg_n[0]).powf(1.0 / lmax as f64));
    }
    assert!(
        decays[0] > decays[1] && decays[1] > decays[2],
        "per-step decay does not strengthen with |C|: {decays:?}"
    );
    // the estimator itself strengthens the same way
    for c in 1..=3usize {
        let est_ratio = shuffle_estimate(1.0, c, 7 - c, 1);
        assert!((est_ratio - (7 - c) as f64 / 7.0).abs() < 1e-15);
    }
    println!("criterion 8 (shuffle-estimator fit, per-|C| decay {decays:?}): pass");
}

#[test]
fn criterion_09_p0_bound_on_all_traces() {
    let reg = StateRegistry::standard();
    // 7-spin quartet
    let net = load_graph(&graph_path("fig1.txt")).unwrap();
    let p = ProtocolConfig::new(net.clone(), 0.7, 1, Direction::Forward)
        .unwrap()
        .compile()
        .unwrap();
    let mut worst = f64::NEG_INFINITY;
    for label in ["vacuum", "all_ones", "ghz", "mixed", "w"] {
        let rho0 = reg.resolve(label, 7).unwrap();
        let trace = compute_trace(&rho0, &p, 100, label).unwrap();
        worst = worst.max(trace.bound_violation());
    }
    // equal-coupling chain, growing control region
    let chain = load_graph(&graph_path("chain7.txt")).unwrap();
    for c_size in 1..=3usize {
        let cnet = SpinNetwork::new(7, chain.edges().to_vec(), (0..c_size).collect()).unwrap();
        let p = ProtocolConfig::new(cnet, 0.9, 1, Direction::Forward)
            .unwrap()
            .compile()
            .unwrap();
        let rho0 = reg.resolve("all_ones", 7).unwrap();
        let trace = compute_trace(&rho0, &p, 15, "all_ones").unwrap();
        worst = worst.max(trace.bound_violation());
    }
    assert!(worst <= 1e-9, "max (1 − ⟨N̂⟩) − P₀ = {worst}");
    println!("criterion 9 (P₀ ≥ 1 − ⟨N̂⟩ elementwise, worst defect {worst:.2e}): pass");
}

#[test]
fn criterion_10_roundtrip_determinism() {
    let base = std::env::temp_dir().join("coolnet_acceptance_roundtrip");
    let dirs = [base.join("a"), base.join("b")];
    for dir in &dirs {
        let _ = std::fs::remove_dir_all(dir);
        let cli = Cli {
            command: Command::Roundtrip {
                graph: graph_path("pair.txt"),
                t: 0.55,
                l: 12,
                n_states: 10,
                seed: 7,
                out: dir.clone(),
            },
        };
        cli::run(&cli).unwrap();
    }
    let a = std::fs::read(dirs[0].join("roundtrip.csv")).unwrap();
    let b = std::fs::read(dirs[1].join("roundtrip.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated runs differ");
    // sanity: the composite column stays within [0, 1]
    let text = String::from_utf8(a).unwrap();
    for line in text.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        let composite: f64 = fields[3].parse().unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&composite));
    }
    println!("criterion 10 (byte-identical seeded roundtrip CSVs): pass");
}
