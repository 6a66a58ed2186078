use super::*;
use crate::groundtruth::exact_ground_state;
use crate::models::{rydberg_dense, RydbergParams};
use rand::SeedableRng;

fn zeros(n: usize) -> Mps {
    Mps::basis_state(&vec![0; n]).unwrap()
}

#[test]
fn product_state_measurements() {
    let d = simulate_measurements(&zeros(5), PauliBasis::Z, 100, 1).unwrap();
    assert!(d.shots.iter().all(|s| s.iter().all(|&b| b == 0)));
    let d = simulate_measurements(&zeros(5), PauliBasis::X, DEFAULT_SHOTS, 2).unwrap();
    assert_eq!(d.len(), 30_000);
    for k in 0..5 {
        let f = d.shots.iter().map(|s| s[k] as f64).sum::<f64>() / d.len() as f64;
        assert!((f - 0.5).abs() <= 0.01, "{f}");
    }
    assert!(simulate_measurements(&zeros(3), PauliBasis::Z, 0, 1).is_err());
}

#[test]
fn counting() {
    let d = EmpiricalDistribution::from_shots(2, &vec![vec![1, 0]; 4]).unwrap();
    assert_eq!(d.support_size(), 1);
    assert_eq!(d.get(&[1, 0]), 1.0);
    let shots = vec![vec![0, 0], vec![0, 1], vec![0, 1], vec![1, 1]];
    let d = EmpiricalDistribution::from_shots(2, &shots).unwrap();
    assert_eq!(d.get(&[0, 0]), 0.25);
    assert_eq!(d.get(&[0, 1]), 0.5);
    assert_eq!(d.get(&[1, 1]), 0.25);
    assert_eq!(d.get(&[1, 0]), 0.0);
    assert!((d.probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn random_state(n: usize, seed: u64) -> Mps {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Mps::random(n, 3, true, &mut r).unwrap()
}

#[test]
fn empirical_converges_to_born() {
    let m = random_state(6, 3);
    let exact = born_distribution(&m, PauliBasis::Z).unwrap();
    let d = simulate_measurements(&m, PauliBasis::Z, 100_000, 4).unwrap();
    assert!(total_variation(&empirical_distribution(&d).unwrap(), &exact) < 0.02);
    // on average over seeds the distance shrinks with more shots
    let mean_tv = |n: usize| {
        (0..5)
            .map(|s| total_variation(&empirical_distribution(&simulate_measurements(&m, PauliBasis::Z, n, 100 + s).unwrap()).unwrap(), &exact))
            .sum::<f64>()
            / 5.0
    };
    let (a, b, c) = (mean_tv(1_000), mean_tv(10_000), mean_tv(100_000));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn entropies() {
    let point = EmpiricalDistribution::from_shots(3, &[vec![0, 1, 0]]).unwrap();
    assert_eq!(shannon_entropy(&point), 0.0);
    let n = 4;
    let all: Vec<Vec<u8>> = (0..16).map(|i| (0..n).map(|k| ((i >> k) & 1) as u8).collect()).collect();
    let uni = EmpiricalDistribution::from_shots(n, &all).unwrap();
    let want = n as f64 * 2f64.ln();
    assert!((shannon_entropy(&uni) - want).abs() < 1e-12);
    for a in [0.5, 2.0, 3.0] {
        assert!((renyi_entropy(&uni, a).unwrap() - want).abs() < 1e-12);
    }
    let bern = EmpiricalDistribution::from_shots(1, &[vec![1], vec![0], vec![0], vec![0]]).unwrap();
    assert!((renyi_entropy(&bern, 2.0).unwrap() - 0.4700).abs() < 1e-4);
    assert!((renyi_entropy(&bern, 1.0001).unwrap() - shannon_entropy(&bern)).abs() < 1e-3);
    assert!(renyi_entropy(&bern, 0.0).is_err());
    assert!(renyi_entropy(&bern, -1.0).is_err());
}

#[test]
fn z2_basis_entropies_are_bounded() {
    let p = RydbergParams::dimensionless(0.8, 1.47).unwrap();
    let g = exact_ground_state(&rydberg_dense(&p, 13).unwrap(), 1).unwrap().state;
    let z = simulate_measurements(&g, PauliBasis::Z, 30_000, 5).unwrap();
    let x = simulate_measurements(&g, PauliBasis::X, 30_000, 5).unwrap();
    let sz = shannon_entropy(&empirical_distribution(&z).unwrap());
    let sx = shannon_entropy(&empirical_distribution(&x).unwrap());
    let cap = 13.0 * 2f64.ln();
    assert!(sz <= cap && sx <= cap);
    assert!(sz < sx, "{sz} {sx}");
    // direct recomputation
    let counts = empirical_distribution(&z).unwrap();
    let direct: f64 = counts.probs.values().map(|p| -p * p.ln()).sum();
    assert!((direct - sz).abs() < 1e-12);
}

#[test]
fn file_round_trip_and_errors() {
    let d = simulate_measurements(&random_state(9, 6), PauliBasis::X, 500, 42).unwrap();
    let text = render_dataset(&d);
    assert!(text.starts_with("# n_sites=9 basis=x seed=42\n"));
    assert_eq!(parse_dataset(&text).unwrap(), d);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    write_dataset(&d, &path).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), d);

    let h = parse_dataset("# n_sites=9 basis=x seed=42\n010101010\n").unwrap();
    assert_eq!((h.n_sites, h.basis, h.seed), (9, PauliBasis::X, 42));
    match parse_dataset("# n_sites=3 basis=z seed=1\n010\n012\n") {
        Err(Error::Parse { line, msg }) => {
            assert_eq!(line, 3);
            assert!(msg.contains('2'));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_dataset("n_sites=3\n000\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_dataset("# n_sites=3 basis=q seed=1\n000\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_dataset("# n_sites=3 basis=z seed=1\n0000\n"), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn equal_sizes_enforced() {
    let m = random_state(4, 7);
    let a = simulate_measurements(&m, PauliBasis::X, 10, 1).unwrap();
    let b = simulate_measurements(&m, PauliBasis::Z, 10, 1).unwrap();
    let c = simulate_measurements(&m, PauliBasis::Z, 11, 1).unwrap();
    assert!(validate_equal_sizes(&[a.clone(), b]).is_ok());
    assert!(matches!(validate_equal_sizes(&[a.clone(), c]), Err(Error::Validation(_))));
    assert!(validate_equal_sizes(&[a.clone(), a]).is_err());
}

#[test]
fn convergence_study() {
    let opts = ConvergenceOptions::default();
    assert_eq!((opts.total, opts.checkpoint, opts.trajectories, opts.tolerance), (100_000, 1_000, 50, 0.01));
    let quick = ConvergenceOptions {
        total: 2_000,
        checkpoint: 500,
        trajectories: 4,
        tolerance: 0.01,
        seed: 3,
    };
    let r = monte_carlo_convergence(&zeros(4), &[Observable::Magnetization], &quick).unwrap();
    assert_eq!(r.converged_at, vec![Some(500)]);
    assert!(monte_carlo_convergence(&zeros(4), &[Observable::Magnetization], &ConvergenceOptions { checkpoint: 300, ..quick.clone() }).is_err());

    let p = RydbergParams::dimensionless(1.8, 1.47).unwrap();
    let g = exact_ground_state(&rydberg_dense(&p, 9).unwrap(), 1).unwrap().state;
    let o = ConvergenceOptions {
        total: 20_000,
        checkpoint: 1_000,
        trajectories: 10,
        tolerance: 0.01,
        seed: 11,
    };
    let a = monte_carlo_convergence(&g, &Observable::ALL, &o).unwrap();
    let b = monte_carlo_convergence(&g, &Observable::ALL, &o).unwrap();
    assert_eq!(a.converged_at, b.converged_at);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_csv().lines().count(), 1 + 10 * 20 * 3);
}
