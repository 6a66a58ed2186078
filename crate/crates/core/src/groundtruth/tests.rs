use super::*;
use crate::models::{rydberg_dense, rydberg_mpo, xy_dense, xy_mpo, RydbergParams, TransverseAxis, XYParams};

fn z2(delta: f64) -> RydbergParams {
    RydbergParams::dimensionless(delta, 1.47).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn exact_trivial_limits() {
    let p = RydbergParams::new(0.0, 1.0, 1e6, 1.0, 5, TransverseAxis::X).unwrap();
    let r = exact_ground_state(&rydberg_dense(&p, 6).unwrap(), 1).unwrap();
    assert!((r.energy + 6.0).abs() < 1e-12);
    assert!((r.state.amplitude(&[1; 6]).unwrap().norm() - 1.0).abs() < 1e-10);
    let x = XYParams::new(0.0, 0.5, 1.0).unwrap();
    let r = exact_ground_state(&xy_dense(&x, 4).unwrap(), 2).unwrap();
    assert!((r.energy + 2.0).abs() < 1e-12);
    assert!((r.gap.unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn exact_state_is_normalised_real_and_faithful() {
    let op = rydberg_dense(&z2(1.0), 9).unwrap();
    let r = exact_ground_state(&op, 1).unwrap();
    assert!(!r.state.complex_valued());
    assert!((r.state.norm_squared().unwrap() - 1.0).abs() < 1e-10);
    let v = r.state.to_statevector().unwrap();
    assert!((op.expectation(&v) - r.energy).abs() < 1e-9);
}

#[test]
fn dmrg_matches_exact_rydberg() {
    let p = z2(1.2);
    let ed = exact_ground_state(&rydberg_dense(&p, 10).unwrap(), 1).unwrap();
    let opts = DmrgOptions { d_max: 32, ..Default::default() };
    let dm = dmrg_ground_state(&rydberg_mpo(&p, 10).unwrap(), &opts, None).unwrap();
    assert!(dm.converged);
    assert!(rel(dm.energy, ed.energy) < 1e-8, "{} vs {}", dm.energy, ed.energy);
    assert!(dm.energy >= ed.energy - 1e-9);
    assert!(dm.state.is_canonical(0, 1e-10));
    assert!((dm.state.norm_squared().unwrap() - 1.0).abs() < 1e-10);
    let f = dm.state.inner_product(&ed.state).unwrap().norm_sqr();
    assert!(f > 1.0 - 1e-8);
}

#[test]
fn dmrg_energy_never_rises() {
    let p = XYParams::unit(0.6, 0.8).unwrap();
    let opts = DmrgOptions { d_max: 12, energy_tol: 1e-14, max_sweeps: 8, ..Default::default() };
    let r = dmrg_ground_state(&xy_mpo(&p, 12).unwrap(), &opts, None).unwrap();
    for w in r.sweep_log.windows(2) {
        assert!(w[1] <= w[0] + 1e-10 * w[0].abs(), "{:?}", r.sweep_log);
    }
}

#[test]
fn dmrg_classical_limit() {
    let p = RydbergParams::new(0.0, 1.3, 1.0, 1.47f64.powi(6), 5, TransverseAxis::X).unwrap();
    let n = 9;
    let ed = exact_ground_state(&rydberg_dense(&p, n).unwrap(), 1).unwrap();
    let r = dmrg_ground_state(&rydberg_mpo(&p, n).unwrap(), &DmrgOptions::default(), None).unwrap();
    assert!(r.sweep_log.len() <= 3, "{:?} vs {}", r.sweep_log, ed.energy);
    assert!((r.sweep_log[1] - ed.energy).abs() < 1e-10 * ed.energy.abs(), "{:?} vs {}", r.sweep_log, ed.energy);
    assert!((r.energy - ed.energy).abs() < 1e-10 * ed.energy.abs());
}

#[test]
fn dmrg_matches_exact_ising_critical() {
    let p = XYParams::unit(1.0, 1.0).unwrap();
    let ed = exact_ground_state(&xy_dense(&p, 12).unwrap(), 1).unwrap();
    let opts = DmrgOptions { d_max: 16, ..Default::default() };
    let dm = dmrg_ground_state(&xy_mpo(&p, 12).unwrap(), &opts, None).unwrap();
    assert!(rel(dm.energy, ed.energy) < 1e-7, "{} vs {}", dm.energy, ed.energy);
}

#[test]
fn dmrg_handles_complex_hamiltonian() {
    let p = z2(0.9).with_axis(TransverseAxis::Y);
    let ed = exact_ground_state(&rydberg_dense(&p, 8).unwrap(), 1).unwrap();
    let dm = dmrg_ground_state(&rydberg_mpo(&p, 8).unwrap(), &DmrgOptions::default(), None).unwrap();
    assert!(rel(dm.energy, ed.energy) < 1e-9);
}

#[test]
fn penalty_excited_state_gives_gap() {
    let p = XYParams::unit(0.5, 1.5).unwrap();
    let ed = exact_ground_state(&xy_dense(&p, 8).unwrap(), 2).unwrap();
    let mpo = xy_mpo(&p, 8).unwrap();
    let g = dmrg_ground_state(&mpo, &DmrgOptions::default(), None).unwrap();
    let e = dmrg_excited_state(&mpo, &g.state, 10.0 * g.energy.abs(), &DmrgOptions::default()).unwrap();
    assert!((e.energy - g.energy - ed.gap.unwrap()).abs() < 1e-7, "{} {}", e.energy - g.energy, ed.gap.unwrap());
    assert!(e.state.inner_product(&g.state).unwrap().norm() < 1e-5);
}

#[test]
fn overlaps() {
    let pat = ordered_pattern(13, 2).unwrap();
    assert_eq!(pat[0], 1);
    assert_eq!(pat[12], 1);
    let s = Mps::basis_state(&pat).unwrap();
    assert!((phase_overlap(&s, 2).unwrap() - 1.0).abs() < 1e-14);
    let g = Mps::basis_state(&[0; 13]).unwrap();
    for k in [2, 3, 4] {
        assert_eq!(phase_overlap(&g, k).unwrap(), 0.0);
    }
    assert!(phase_overlap(&g, 5).is_err());
    assert!(ordered_pattern(12, 3).is_err());
}

#[test]
fn single_point_sweep_equals_direct_call() {
    let fam = SweepFamily::Xy { coupling: 1.0, gamma: 0.7 };
    let mut opts = SweepOptions::new(10);
    opts.solver = Solver::Dmrg;
    opts.dmrg.d_max = 16;
    let line = adiabatic_sweep(&fam, &[0.8], &opts).unwrap();
    let mut d = opts.dmrg.clone();
    d.seed = crate::rng::derive_seed(opts.dmrg.seed, "sweep-point", 0);
    let direct = dmrg_ground_state(&xy_mpo(&XYParams::unit(0.7, 0.8).unwrap(), 10).unwrap(), &d, None).unwrap();
    assert_eq!(line.points[0].energy, direct.energy);
    assert!(adiabatic_sweep(&fam, &[], &opts).is_err());
    assert!(adiabatic_sweep(&fam, &[1.0, 0.5], &opts).is_err());
}

#[test]
fn warm_and_cold_starts_agree() {
    let fam = SweepFamily::Rydberg {
        rb_over_a: 1.47,
        truncation_range: 5,
        transverse_axis: TransverseAxis::X,
        order: Some(2),
    };
    let mut opts = SweepOptions::new(9);
    opts.solver = Solver::Dmrg;
    opts.dmrg.d_max = 16;
    let grid = [0.0, 0.6, 1.2, 1.8, 2.4];
    let line = adiabatic_sweep(&fam, &grid, &opts).unwrap();
    for i in [1, 2, 4] {
        let h = fam.hamiltonian(grid[i]).unwrap();
        let cold = dmrg_ground_state(&h.mpo(9).unwrap(), &opts.dmrg, None).unwrap();
        assert!(rel(line.points[i].energy, cold.energy) < 1e-7);
        let ed = exact_ground_state(&h.full_operator(9).unwrap(), 2).unwrap();
        assert!(line.points[i].energy >= ed.energy - 1e-9);
        assert!((line.points[i].gap.unwrap() - ed.gap.unwrap()).abs() < 1e-9);
    }
    for p in &line.points {
        let o = p.overlap.unwrap();
        assert!((0.0..=1.0).contains(&o));
    }
    let csv = sweep_csv(&line);
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("delta_over_omega,energy,gap,svn,magnetization,overlap,converged"));
}

fn fake_line(svn: &[f64], gap: &[f64], mag: &[f64]) -> SweepLine {
    let state = Mps::basis_state(&[0, 0]).unwrap();
    SweepLine {
        family: SweepFamily::Xy { coupling: 1.0, gamma: 1.0 },
        points: (0..svn.len())
            .map(|i| SweepPoint {
                x: i as f64 * 0.5,
                energy: 0.0,
                gap: Some(gap[i]),
                svn: svn[i],
                magnetization: mag[i],
                overlap: None,
                converged: true,
                state: state.clone(),
            })
            .collect(),
    }
}

#[test]
fn locator_flags_monotone_lines() {
    let l = fake_line(&[0.5, 0.4, 0.3, 0.2], &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.1, 0.2, 0.3]);
    let c = locate_critical_point(&l).unwrap();
    assert!(c.no_critical_point);
    assert_eq!(c.estimate, None);
    assert_eq!(c.boundary.as_deref(), Some("low"));
}

#[test]
fn locator_reports_interior_peak_and_diagnostics() {
    let l = fake_line(
        &[0.1, 0.3, 0.6, 0.4, 0.2, 0.1],
        &[0.9, 0.5, 0.2, 0.3, 0.6, 0.8],
        &[0.5, 0.48, 0.40, 0.2, 0.15, 0.13],
    );
    let c = locate_critical_point(&l).unwrap();
    assert_eq!(c.estimate, Some(1.0));
    assert_eq!(c.gap_min_at, Some(1.0));
    assert_eq!(c.magnetization_slope_at, Some(1.0));
    assert_eq!(c.spread, 0.0);
    let l = fake_line(&[0.1, 0.6, 0.3, 0.2, 0.1, 0.1], &[0.9, 0.5, 0.4, 0.3, 0.2, 0.1], &[0.5, 0.5, 0.5, 0.5, 0.5, 0.0]);
    let c = locate_critical_point(&l).unwrap();
    assert_eq!(c.estimate, Some(0.5));
    assert!((c.spread - 2.0).abs() < 1e-12);
    assert!(c.disagreement);
}

#[test]
fn z2_critical_spectrum_is_nearly_two_level() {
    // close to the N = 13 entanglement maximum on the R_b/a = 1.47 line
    let p = z2(0.8);
    let opts = DmrgOptions { d_max: 16, ..Default::default() };
    let r = dmrg_ground_state(&rydberg_mpo(&p, 13).unwrap(), &opts, None).unwrap();
    let s = r.state.entanglement_spectrum(6).unwrap();
    assert!(s[0] + s[1] > 0.99, "{:?}", &s[..4]);
}
