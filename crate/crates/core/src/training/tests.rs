use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use super::*;
use crate::dataset::{simulate_measurements, MeasurementDataset};
use crate::error::Error;
use crate::mps::{Mps, PauliBasis};

/// Amplitude by explicit matrix products, no shared helpers.
fn path_amp(psi: &Mps, bits: &[u8]) -> C64 {
    let mut row = vec![C64::new(1.0, 0.0)];
    for (k, t) in psi.sites().iter().enumerate() {
        let (dl, dr) = (t.shape()[0], t.shape()[2]);
        let mut next = vec![C64::new(0.0, 0.0); dr];
        for l in 0..dl {
            for r in 0..dr {
                next[r] += row[l] * t.get(&[l, bits[k] as usize, r]);
            }
        }
        row = next;
    }
    row[0]
}

fn all_bits(n: usize) -> Vec<Vec<u8>> {
    (0..1usize << n).map(|c| (0..n).map(|k| ((c >> k) & 1) as u8).collect()).collect()
}

fn u_matrix(b: PauliBasis) -> [[C64; 2]; 2] {
    let h = 1.0 / 2f64.sqrt();
    match b {
        PauliBasis::Z => [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]],
        PauliBasis::X => [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]],
        PauliBasis::Y => [[C64::new(h, 0.0), C64::new(0.0, -h)], [C64::new(h, 0.0), C64::new(0.0, h)]],
    }
}

/// Brute-force loss: enumerate all amplitudes, rotate them by summing over
/// every computational string.
fn brute_loss(psi: &Mps, data: &[(PauliBasis, Vec<Vec<u8>>)]) -> f64 {
    let n = psi.n_sites();
    let strings = all_bits(n);
    let amps: Vec<C64> = strings.iter().map(|b| path_amp(psi, b)).collect();
    let z: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let mut loss = 0.0;
    for (basis, shots) in data {
        let u = u_matrix(*basis);
        let mut acc = 0.0;
        for v in shots {
            let mut amp = C64::new(0.0, 0.0);
            for (w, a) in strings.iter().zip(&amps) {
                let mut coeff = C64::new(1.0, 0.0);
                for k in 0..n {
                    coeff *= u[v[k] as usize][w[k] as usize];
                }
                amp += coeff * a;
            }
            acc += (amp.norm_sqr() / z).ln();
        }
        loss -= acc / shots.len() as f64;
    }
    loss
}

fn random_shots(n: usize, count: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| r.gen_range(0..2u8)).collect()).collect()
}

fn batches_of(data: &[(PauliBasis, Vec<Vec<u8>>)]) -> Vec<BasisBatch> {
    data.iter().map(|(b, s)| BasisBatch::from_shots(*b, s)).collect()
}

/// Worst ratio of |analytic - numeric| to the allowed error
/// (1e-6 relative with a 1e-8 absolute floor); passes when <= 1.
fn fd_check(model: &BornMachine, batches: &[BasisBatch]) -> f64 {
    let g = nll_gradient(model, batches).unwrap();
    let p0 = model.params();
    let loss_at = |i: usize, dx: f64| {
        let mut m = model.clone();
        let mut p = p0.clone();
        p[i] += dx;
        m.set_params(&p).unwrap();
        nll_loss(m.psi(), batches).unwrap().loss
    };
    let mut worst = 0.0f64;
    let h = 1e-4;
    for i in 0..p0.len() {
        let d1 = (loss_at(i, h) - loss_at(i, -h)) / (2.0 * h);
        let d2 = (loss_at(i, h / 2.0) - loss_at(i, -h / 2.0)) / h;
        // Richardson extrapolation removes the O(h^2) term
        let fd = (4.0 * d2 - d1) / 3.0;
        let allowed = (1e-6 * fd.abs().max(g[i].abs())).max(1e-8);
        worst = worst.max((fd - g[i]).abs() / allowed);
    }
    worst
}

#[test]
fn init_is_deterministic_nonnegative_and_counts_parameters() {
    let a = init_model(6, 3, false, 11).unwrap();
    let b = init_model(6, 3, false, 11).unwrap();
    assert_eq!(a.params(), b.params());
    assert_ne!(a.params(), init_model(6, 3, false, 12).unwrap().params());
    assert_eq!(a.psi().bond_dims(), vec![1, 3, 3, 3, 3, 3, 1]);
    for bits in all_bits(6) {
        let amp = a.psi().amplitude(&bits).unwrap();
        assert!(amp.re >= 0.0 && amp.im == 0.0);
    }
    let c = init_model(6, 3, true, 11).unwrap();
    assert_eq!(c.parameter_count(), 2 * a.parameter_count());
    assert!(c.params().iter().all(|&x| (0.0..1.0).contains(&x)));
    assert!(init_model(1, 2, false, 0).is_err());
    assert!(init_model(3, 0, false, 0).is_err());
}

#[test]
fn loss_matches_brute_force_two_bases() {
    let model = init_model(6, 3, true, 5).unwrap();
    let data = vec![
        (PauliBasis::X, random_shots(6, 40, 1)),
        (PauliBasis::Z, random_shots(6, 40, 2)),
    ];
    let fast = nll_loss(model.psi(), &batches_of(&data)).unwrap().loss;
    let slow = brute_loss(model.psi(), &data);
    assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    let data_y = vec![(PauliBasis::Y, random_shots(6, 30, 3))];
    let fast = nll_loss(model.psi(), &batches_of(&data_y)).unwrap().loss;
    assert!((fast - brute_loss(model.psi(), &data_y)).abs() < 1e-10);
}

#[test]
fn uniform_model_gives_n_ln2() {
    let one = C64::new(1.0, 0.0);
    let psi = Mps::product(&vec![[one, one]; 7]).unwrap();
    let model = BornMachine::from_mps(&psi, 1).unwrap();
    let data = vec![(PauliBasis::Z, random_shots(7, 25, 9))];
    let l = nll_loss(model.psi(), &batches_of(&data)).unwrap().loss;
    assert!((l - 7.0 * 2f64.ln()).abs() < 1e-12);
}

/// Model whose Z-basis Born distribution equals the empirical one.
fn matched_model(n: usize, shots: &[Vec<u8>]) -> BornMachine {
    let mut counts = vec![0usize; 1 << n];
    for s in shots {
        // statevector index: site 0 is the most significant bit
        let idx = s.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        counts[idx] += 1;
    }
    let psi: Vec<C64> = counts
        .iter()
        .map(|&c| C64::new((c as f64 / shots.len() as f64).sqrt(), 0.0))
        .collect();
    let mps = Mps::from_statevector(&psi, n, 1 << n, 0.0).unwrap();
    let d = mps.max_bond();
    BornMachine::from_mps(&mps, d).unwrap()
}

#[test]
fn loss_equals_entropy_at_matched_model() {
    // every string occurs, so no zero-probability configuration in the model
    let mut shots = all_bits(4);
    shots.extend(random_shots(4, 200, 4));
    let model = matched_model(4, &shots);
    let b = BasisBatch::from_shots(PauliBasis::Z, &shots);
    let t = shots.len() as f64;
    let s: f64 = b.groups.iter().map(|&(_, m)| -(m as f64 / t) * (m as f64 / t).ln()).sum();
    let l = nll_loss(model.psi(), std::slice::from_ref(&b)).unwrap().loss;
    assert!((l - s).abs() < 1e-9, "{l} vs {s}");
    let g = nll_gradient(&model, &[b]).unwrap();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "gradient norm {norm}");
}

#[test]
fn gradient_matches_finite_differences_complex_xz() {
    let model = init_model(5, 3, true, 21).unwrap();
    let data = vec![
        (PauliBasis::X, random_shots(5, 60, 7)),
        (PauliBasis::Z, random_shots(5, 60, 8)),
    ];
    let worst = fd_check(&model, &batches_of(&data));
    assert!(worst <= 1.0, "error ratio {worst}");
}

#[test]
fn symmetric_parameters_give_symmetric_gradient() {
    // N = 2 (the minimal chain), D = 1, both sites (a, a), data 50/50 on 00 and 11
    let a = C64::new(0.7, 0.0);
    let psi = Mps::product(&[[a, a], [a, a]]).unwrap();
    let model = BornMachine::from_mps(&psi, 1).unwrap();
    let shots = vec![vec![0, 0], vec![1, 1]];
    let g = nll_gradient(&model, &[BasisBatch::from_shots(PauliBasis::Z, &shots)]).unwrap();
    assert!((g[0] - g[1]).abs() < 1e-10);
    assert!((g[2] - g[3]).abs() < 1e-10);
}

#[test]
fn global_phase_leaves_loss_and_probabilities() {
    let model = init_model(5, 2, true, 3).unwrap();
    let mut rotated = model.psi().clone();
    rotated.scale_site(2, C64::from_polar(1.0, 0.83));
    let data = vec![
        (PauliBasis::Y, random_shots(5, 50, 1)),
        (PauliBasis::Z, random_shots(5, 50, 2)),
    ];
    let b = batches_of(&data);
    let l0 = nll_loss(model.psi(), &b).unwrap().loss;
    let l1 = nll_loss(&rotated, &b).unwrap().loss;
    assert!((l0 - l1).abs() < 1e-10);
    let z0 = model.psi().norm_squared().unwrap();
    let z1 = rotated.norm_squared().unwrap();
    for bits in all_bits(5) {
        let p0 = model.psi().amplitude(&bits).unwrap().norm_sqr() / z0;
        let p1 = rotated.amplitude(&bits).unwrap().norm_sqr() / z1;
        assert!((p0 - p1).abs() < 1e-10);
    }
}

#[test]
fn zero_probability_is_an_error_and_tiny_is_floored() {
    let psi = Mps::basis_state(&[0, 0, 0]).unwrap();
    let model = BornMachine::from_mps(&psi, 1).unwrap();
    let b = BasisBatch::from_shots(PauliBasis::Z, &[vec![1, 0, 0]]);
    assert!(matches!(nll_loss(model.psi(), &[b]), Err(Error::ZeroProbability { .. })));
    let eps = C64::new(1e-80, 0.0);
    let one = C64::new(1.0, 0.0);
    let psi = Mps::product(&[[one, eps], [one, eps], [one, eps]]).unwrap();
    let b = BasisBatch::from_shots(PauliBasis::Z, &[vec![1, 1, 0], vec![0, 0, 0]]);
    let e = nll_loss(&psi, &[b]).unwrap();
    assert_eq!(e.floored, 1);
    assert!(e.loss.is_finite());
}

#[test]
fn nan_model_reports_non_finite_loss() {
    let mut model = init_model(3, 2, false, 0).unwrap();
    let mut p = model.params();
    p[0] = f64::NAN;
    model.set_params(&p).unwrap();
    let b = BasisBatch::from_shots(PauliBasis::Z, &[vec![0, 0, 0]]);
    assert!(matches!(nll_loss(model.psi(), &[b]), Err(Error::NonFiniteLoss { .. })));
    let d = MeasurementDataset::new(3, PauliBasis::Z, vec![vec![0, 1, 0]; 10], 0).unwrap();
    let cfg = TrainConfig {
        bases: vec![PauliBasis::Z],
        epochs: 2,
        ..TrainConfig::default()
    };
    match train(model, &[d], &cfg, None) {
        Err(Error::NonFiniteLoss { epoch, step, detail }) => {
            assert_eq!((epoch, step), (0, 0));
            assert!(detail.contains("010"), "{detail}");
        }
        other => panic!("expected NonFiniteLoss, got {other:?}"),
    }
}

fn small_problem() -> (Mps, Vec<MeasurementDataset>) {
    let target = Mps::ghz(4).unwrap();
    let sets = vec![
        simulate_measurements(&target, PauliBasis::Z, 400, 1).unwrap(),
        simulate_measurements(&target, PauliBasis::X, 400, 2).unwrap(),
    ];
    (target, sets)
}

#[test]
fn training_lowers_loss_and_respects_entropy_bound() {
    let (target, sets) = small_problem();
    let model = init_model(4, 2, false, 1).unwrap();
    let cfg = TrainConfig {
        bases: vec![PauliBasis::Z, PauliBasis::X],
        batch_size: 50,
        epochs: 15,
        adam: AdamConfig {
            learning_rate: 2e-2,
            ..AdamConfig::default()
        },
        spectrum: Some(SpectrumRequest { cut: 2, top_k: 2 }),
        ..TrainConfig::default()
    };
    let (_, hist) = train(model, &sets, &cfg, Some(&target)).unwrap();
    assert_eq!(hist.records.len(), 15);
    let l = hist.losses();
    assert!(l[l.len() - 1] < l[0]);
    for r in &hist.records {
        assert!(r.loss >= hist.data_entropy - 1e-9);
        assert!(r.fidelity.unwrap() <= 1.0 + 1e-12);
        assert_eq!(r.spectrum.as_ref().unwrap().len(), 2);
    }
    assert!(hist.last().unwrap().fidelity.unwrap() > hist.records[0].fidelity.unwrap());
}

#[test]
fn training_is_deterministic_and_basis_order_free() {
    let (_, sets) = small_problem();
    let cfg = TrainConfig {
        bases: vec![PauliBasis::Z, PauliBasis::X],
        batch_size: 64,
        epochs: 4,
        seed: 9,
        ..TrainConfig::default()
    };
    let run = |cfg: &TrainConfig, sets: &[MeasurementDataset]| {
        train(init_model(4, 2, true, 3).unwrap(), sets, cfg, None).unwrap()
    };
    let (m1, h1) = run(&cfg, &sets);
    let (m2, h2) = run(&cfg, &sets);
    assert_eq!(h1.losses(), h2.losses());
    assert_eq!(m1.params(), m2.params());
    assert_eq!(h1.to_csv(), h2.to_csv());
    let swapped = TrainConfig {
        bases: vec![PauliBasis::X, PauliBasis::Z],
        ..cfg.clone()
    };
    let rev: Vec<MeasurementDataset> = sets.iter().rev().cloned().collect();
    let (_, h3) = run(&swapped, &rev);
    assert_eq!(h1.losses(), h3.losses());
}

#[test]
fn zero_learning_rate_leaves_model() {
    let (_, sets) = small_problem();
    let model = init_model(4, 2, true, 8).unwrap();
    let cfg = TrainConfig {
        bases: vec![PauliBasis::X, PauliBasis::Z],
        epochs: 1,
        adam: AdamConfig {
            learning_rate: 0.0,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    let (out, hist) = train(model.clone(), &sets, &cfg, None).unwrap();
    assert_eq!(out.params(), model.params());
    assert_eq!(hist.records.len(), 1);
}

#[test]
fn config_and_dataset_validation() {
    let (_, sets) = small_problem();
    let model = init_model(4, 2, false, 0).unwrap();
    let bad = TrainConfig {
        bases: vec![PauliBasis::Z],
        ..TrainConfig::default()
    };
    assert!(train(model.clone(), &sets, &bad, None).is_err());
    let bad = TrainConfig {
        batch_size: 0,
        ..TrainConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = TrainConfig {
        bases: vec![],
        ..TrainConfig::default()
    };
    assert!(bad.validate().is_err());
    let short = vec![sets[0].clone(), MeasurementDataset::new(4, PauliBasis::X, sets[1].shots[..10].to_vec(), 0).unwrap()];
    assert!(train(model, &short, &TrainConfig::default(), None).is_err());
}

#[test]
fn plateau_stops_early() {
    // matched model: already at the entropy bound, so the loss cannot improve
    let mut shots = all_bits(3);
    shots.extend(shots.clone());
    let model = matched_model(3, &shots);
    let d = MeasurementDataset::new(3, PauliBasis::Z, shots, 0).unwrap();
    let cfg = TrainConfig {
        bases: vec![PauliBasis::Z],
        epochs: 50,
        plateau_window: 3,
        ..TrainConfig::default()
    };
    let (_, hist) = train(model, &[d], &cfg, None).unwrap();
    assert!(hist.stopped_early, "{:?}", hist.losses());
    assert_eq!(hist.records.len(), 4);
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.mps");
    let model = init_model(5, 3, true, 2).unwrap();
    let meta = CheckpointMeta {
        config: TrainConfig::default(),
        seed: 2,
        epoch: 7,
        loss: Some(1.5),
        fidelity: None,
        bond_dim: 3,
        complex_valued: true,
        init: "uniform[0,1)".into(),
    };
    write_checkpoint(&path, &model, &meta).unwrap();
    let (back, m2) = read_checkpoint(&path).unwrap();
    assert_eq!(back.params(), model.params());
    assert_eq!(m2, meta);
}

#[test]
fn encode_group_round_trip() {
    let bits = vec![1, 0, 1, 1, 0];
    assert_eq!(decode(encode(&bits), 5), bits);
    assert_eq!(group(&[3, 1, 3, 2, 3]), vec![(1, 1), (2, 1), (3, 3)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradient_matches_finite_differences(
        n in 2usize..=6,
        d in 1usize..=4,
        complex in any::<bool>(),
        mask in 1u8..8,
        seed in 0u64..1000,
    ) {
        let model = init_model(n, d, complex, seed).unwrap();
        let data: Vec<(PauliBasis, Vec<Vec<u8>>)> = PauliBasis::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(i, b)| (*b, random_shots(n, 30, seed + i as u64)))
            .collect();
        let worst = fd_check(&model, &batches_of(&data));
        prop_assert!(worst <= 1.0, "error ratio {}", worst);
    }

    #[test]
    fn loss_is_basis_order_invariant(seed in 0u64..1000) {
        let model = init_model(4, 2, true, seed).unwrap();
        let data = vec![
            (PauliBasis::X, random_shots(4, 20, seed)),
            (PauliBasis::Y, random_shots(4, 20, seed + 1)),
            (PauliBasis::Z, random_shots(4, 20, seed + 2)),
        ];
        let mut b = batches_of(&data);
        let l0 = nll_loss(model.psi(), &b).unwrap().loss;
        b.reverse();
        let l1 = nll_loss(model.psi(), &b).unwrap().loss;
        prop_assert!((l0 - l1).abs() < 1e-12);
    }
}
