use std::ffi::{CStr, CString};
use std::ptr;

use bebm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bebm_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn xy_state_amplitudes_and_entropy() {
    unsafe {
        let mut psi = ptr::null_mut();
        let mut e = 0.0;
        assert_eq!(bebm_ground_state_xy(6, 1.0, 1.0, &mut psi, &mut e), BebmStatus::Ok);
        assert!(e < 0.0);
        let mut n = 0;
        assert_eq!(bebm_mps_n_sites(psi, &mut n), BebmStatus::Ok);
        assert_eq!(n, 6);
        let (mut re, mut im) = (0.0, 0.0);
        let bits = [0u8; 6];
        assert_eq!(bebm_mps_amplitude(psi, bits.as_ptr(), 6, &mut re, &mut im), BebmStatus::Ok);
        assert!(re.abs() > 0.1);
        let mut s = 0.0;
        assert_eq!(bebm_mps_entropy(psi, 3, &mut s), BebmStatus::Ok);
        assert!(s > 0.0);
        let mut f = 0.0;
        assert_eq!(bebm_quantum_fidelity(psi, psi, &mut f), BebmStatus::Ok);
        assert!((f - 1.0).abs() < 1e-10);

        let mut len = 0;
        assert_eq!(bebm_mps_entanglement_spectrum(psi, 3, ptr::null_mut(), 0, &mut len), BebmStatus::BufferTooSmall);
        let mut buf = vec![0.0; len];
        assert_eq!(bebm_mps_entanglement_spectrum(psi, 3, buf.as_mut_ptr(), len, &mut len), BebmStatus::Ok);
        assert!((buf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        bebm_mps_free(psi);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        let mut n = 0;
        assert_eq!(bebm_mps_n_sites(ptr::null(), &mut n), BebmStatus::NullPointer);
        assert!(last_error().contains("mps"));
        let mut psi = ptr::null_mut();
        assert_eq!(bebm_ground_state_xy(4, 1.0, 1.0, &mut psi, ptr::null_mut()), BebmStatus::Ok);
        assert!(last_error().is_empty());
        let mut s = 0.0;
        assert_eq!(bebm_mps_entropy(psi, 9, &mut s), BebmStatus::InvalidArgument);
        assert!(last_error().contains("cut"));
        let mut d = ptr::null_mut();
        assert_eq!(bebm_sample(psi, b'q' as _, 10, 0, &mut d), BebmStatus::InvalidArgument);
        let missing = CString::new("/nonexistent/file.mps").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(bebm_mps_read(missing.as_ptr(), &mut m), BebmStatus::Io);

        let mut other = ptr::null_mut();
        assert_eq!(bebm_ground_state_xy(5, 1.0, 1.0, &mut other, ptr::null_mut()), BebmStatus::Ok);
        let mut f = 0.0;
        assert_eq!(bebm_quantum_fidelity(psi, other, &mut f), BebmStatus::SizeMismatch);
        bebm_mps_free(psi);
        bebm_mps_free(other);
        bebm_mps_free(ptr::null_mut());
    }
}

#[test]
fn sample_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut psi = ptr::null_mut();
        assert_eq!(bebm_ground_state_rydberg(5, 0.5, 1.47, 5, &mut psi, ptr::null_mut()), BebmStatus::Ok);
        let (mut dx, mut dz) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(bebm_sample(psi, b'x' as _, 4000, 1, &mut dx), BebmStatus::Ok);
        assert_eq!(bebm_sample(psi, b'z' as _, 4000, 2, &mut dz), BebmStatus::Ok);
        let path = CString::new(dir.path().join("z.txt").to_str().unwrap()).unwrap();
        assert_eq!(bebm_dataset_write(dz, path.as_ptr()), BebmStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(bebm_dataset_read(path.as_ptr(), &mut back), BebmStatus::Ok);
        let mut len = 0;
        assert_eq!(bebm_dataset_len(back, &mut len), BebmStatus::Ok);
        assert_eq!(len, 4000);

        let mut model = ptr::null_mut();
        assert_eq!(bebm_model_new(5, 3, true, 7, &mut model), BebmStatus::Ok);
        let sets = [dx as *const BebmDataset, back as *const BebmDataset];
        let (mut loss, mut fid) = (0.0, 0.0);
        assert_eq!(
            bebm_train(model, sets.as_ptr(), 2, 60, 1e-2, 3, psi, &mut loss, &mut fid),
            BebmStatus::Ok,
            "{}",
            last_error()
        );
        assert!(loss.is_finite());
        assert!(fid > 0.9, "fidelity {fid}");

        let mut metrics = BebmMetrics::default();
        assert_eq!(bebm_evaluate(model, psi, 5000, 0, &mut metrics), BebmStatus::Ok);
        assert!((metrics.quantum_fidelity - fid).abs() < 1e-9);
        assert!(metrics.c_z > 0.9);

        let mpath = CString::new(dir.path().join("model.mps").to_str().unwrap()).unwrap();
        assert_eq!(bebm_model_write(model, mpath.as_ptr()), BebmStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(bebm_model_read(mpath.as_ptr(), &mut again), BebmStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(bebm_model_state(model, &mut a), BebmStatus::Ok);
        assert_eq!(bebm_model_state(again, &mut b), BebmStatus::Ok);
        let mut f = 0.0;
        assert_eq!(bebm_quantum_fidelity(a, b, &mut f), BebmStatus::Ok);
        assert!((f - 1.0).abs() < 1e-12);

        for p in [psi, a, b] {
            bebm_mps_free(p);
        }
        for d in [dx, dz, back] {
            bebm_dataset_free(d);
        }
        bebm_model_free(model);
        bebm_model_free(again);
    }
}

#[test]
fn recipe_runner_reports_usage_problems() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = dir.path().join("r.json");
    std::fs::write(
        &recipe,
        r#"{"schema_version": 1, "units": "dimensionless", "n_sites": 5,
            "system": {"family": "xy", "gamma": 1.0}, "point": 1.0}"#,
    )
    .unwrap();
    let r = CString::new(recipe.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let gt = CString::new("ground-truth").unwrap();
    unsafe {
        assert_eq!(bebm_run_recipe(r.as_ptr(), gt.as_ptr(), out.as_ptr()), BebmStatus::Ok);
        assert_eq!(std::fs::read_dir(dir.path().join("out")).unwrap().count(), 2);
        let scaling = CString::new("scaling").unwrap();
        assert_eq!(bebm_run_recipe(r.as_ptr(), scaling.as_ptr(), out.as_ptr()), BebmStatus::Validation);
        let bogus = CString::new("bogus").unwrap();
        assert_eq!(bebm_run_recipe(r.as_ptr(), bogus.as_ptr(), out.as_ptr()), BebmStatus::InvalidArgument);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bebm.h")).unwrap();
    for name in [
        "BEBM_STATUS_OK",
        "typedef struct BebmMps BebmMps",
        "bebm_last_error",
        "bebm_train",
        "bebm_evaluate",
        "bebm_run_recipe",
        "BebmMetrics",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
