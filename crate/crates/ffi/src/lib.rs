//! C ABI over `bebm`. Objects cross the boundary as opaque pointers that the
//! caller frees with the matching `*_free`. Every fallible call returns a
//! [`BebmStatus`]; on failure [`bebm_last_error`] describes the cause.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};


use bebm::cli::{self, Command, Context};
use bebm::dataset::{read_dataset, simulate_measurements, write_dataset, MeasurementDataset};
use bebm::groundtruth::{adiabatic_sweep, SweepFamily, SweepOptions};
use bebm::metrics::{evaluate, quantum_fidelity};
use bebm::models::TransverseAxis;
use bebm::mps::{read_mps, write_mps};
use bebm::training::{init_model, read_checkpoint, train, write_checkpoint, BornMachine, CheckpointMeta, TrainConfig};
use bebm::{Error, Mps, PauliBasis};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BebmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    SizeMismatch = 4,
    Io = 5,
    Format = 6,
    Numerical = 7,
    Training = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Matrix product state.
pub struct BebmMps(Mps);

/// Trained or freshly initialised Born machine.
pub struct BebmModel(BornMachine);

/// Measurement record in one Pauli basis.
pub struct BebmDataset(MeasurementDataset);

/// Headline metrics of a model against a reference state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BebmMetrics {
    pub c_x: f64,
    pub c_y: f64,
    pub c_z: f64,
    pub quantum_fidelity: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> BebmStatus {
    match e {
        Error::InvalidArgument(_) | Error::InvalidCut { .. } | Error::LengthMismatch { .. } | Error::Shape(_) => {
            BebmStatus::InvalidArgument
        }
        Error::Validation(_) | Error::TooLarge { .. } => BebmStatus::Validation,
        Error::SizeMismatch(..) | Error::ContractMismatch { .. } => BebmStatus::SizeMismatch,
        Error::Io(_) => BebmStatus::Io,
        Error::Format(_) | Error::Parse { .. } | Error::Json(_) => BebmStatus::Format,
        Error::Factorization(_) | Error::NotHermitian(_) | Error::ZeroNorm => BebmStatus::Numerical,
        Error::ZeroProbability { .. } | Error::NonFiniteLoss { .. } => BebmStatus::Training,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (BebmStatus, String)>) -> BebmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BebmStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            BebmStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (BebmStatus, String)>;
}

impl<T> Lift<T> for bebm::Result<T> {
    fn lift(self) -> Result<T, (BebmStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (BebmStatus, String) {
    (BebmStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (BebmStatus, String) {
    (BebmStatus::InvalidArgument, msg.into())
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (BebmStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (BebmStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (BebmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn basis_arg(c: c_char) -> Result<PauliBasis, (BebmStatus, String)> {
    match (c as u8).to_ascii_lowercase() {
        b'x' => Ok(PauliBasis::X),
        b'y' => Ok(PauliBasis::Y),
        b'z' => Ok(PauliBasis::Z),
        other => Err(invalid(format!("unknown basis '{}'", other as char))),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bebm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn bebm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- states ----

#[no_mangle]
pub unsafe extern "C" fn bebm_mps_read(path: *const c_char, out_mps: *mut *mut BebmMps) -> BebmStatus {
    guard(|| {
        let o = out(out_mps, "out_mps")?;
        let m = read_mps(&path_arg(path, "path")?).lift()?;
        *o = boxed(BebmMps(m));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_mps_write(mps: *const BebmMps, path: *const c_char) -> BebmStatus {
    guard(|| write_mps(&path_arg(path, "path")?, &as_ref(mps, "mps")?.0).lift())
}

#[no_mangle]
pub unsafe extern "C" fn bebm_mps_free(mps: *mut BebmMps) {
    if !mps.is_null() {
        drop(Box::from_raw(mps));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bebm_mps_n_sites(mps: *const BebmMps, out_n: *mut usize) -> BebmStatus {
    guard(|| {
        *out(out_n, "out_n")? = as_ref(mps, "mps")?.0.n_sites();
        Ok(())
    })
}

/// Amplitude `⟨bits|ψ⟩` for a configuration of `len` entries in {0, 1}.
#[no_mangle]
pub unsafe extern "C" fn bebm_mps_amplitude(
    mps: *const BebmMps,
    bits: *const u8,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BebmStatus {
    guard(|| {
        let m = &as_ref(mps, "mps")?.0;
        if bits.is_null() {
            return Err(null("bits"));
        }
        let a = m.amplitude(std::slice::from_raw_parts(bits, len)).lift()?;
        *out(out_re, "out_re")? = a.re;
        *out(out_im, "out_im")? = a.im;
        Ok(())
    })
}

/// Von Neumann entropy across the bond after site `cut` (1-based count of left sites).
#[no_mangle]
pub unsafe extern "C" fn bebm_mps_entropy(mps: *const BebmMps, cut: usize, out_s: *mut f64) -> BebmStatus {
    guard(|| {
        *out(out_s, "out_s")? = as_ref(mps, "mps")?.0.bipartite_entropy(cut).lift()?;
        Ok(())
    })
}

/// Entanglement spectrum, largest first. Writes at most `cap` values and
/// always reports the full length in `out_len`.
#[no_mangle]
pub unsafe extern "C" fn bebm_mps_entanglement_spectrum(
    mps: *const BebmMps,
    cut: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> BebmStatus {
    guard(|| {
        let spec = as_ref(mps, "mps")?.0.entanglement_spectrum(cut).lift()?;
        *out(out_len, "out_len")? = spec.len();
        if spec.len() > cap {
            return Err((BebmStatus::BufferTooSmall, format!("spectrum has {} values, buffer holds {cap}", spec.len())));
        }
        if !spec.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, spec.len()).copy_from_slice(&spec);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_quantum_fidelity(a: *const BebmMps, b: *const BebmMps, out_f: *mut f64) -> BebmStatus {
    guard(|| {
        *out(out_f, "out_f")? = quantum_fidelity(&as_ref(a, "a")?.0, &as_ref(b, "b")?.0).lift()?;
        Ok(())
    })
}

fn ground_state(fam: SweepFamily, n: usize, x: f64) -> bebm::Result<(Mps, f64)> {
    let mut o = SweepOptions::new(n);
    o.compute_gap = false;
    let line = adiabatic_sweep(&fam, &[x], &o)?;
    let p = line.points.into_iter().next().expect("one grid point");
    Ok((p.state, p.energy))
}

/// Ground state of the anisotropic XY chain with unit coupling.
#[no_mangle]
pub unsafe extern "C" fn bebm_ground_state_xy(
    n_sites: usize,
    gamma: f64,
    field: f64,
    out_mps: *mut *mut BebmMps,
    out_energy: *mut f64,
) -> BebmStatus {
    guard(|| {
        let o = out(out_mps, "out_mps")?;
        let (m, e) = ground_state(SweepFamily::Xy { coupling: 1.0, gamma }, n_sites, field).lift()?;
        if let Some(oe) = out_energy.as_mut() {
            *oe = e;
        }
        *o = boxed(BebmMps(m));
        Ok(())
    })
}

/// Ground state of the Rydberg chain in units of Ω and the lattice spacing,
/// interactions kept out to `truncation_range` neighbours.
#[no_mangle]
pub unsafe extern "C" fn bebm_ground_state_rydberg(
    n_sites: usize,
    delta_over_omega: f64,
    rb_over_a: f64,
    truncation_range: usize,
    out_mps: *mut *mut BebmMps,
    out_energy: *mut f64,
) -> BebmStatus {
    guard(|| {
        let o = out(out_mps, "out_mps")?;
        let fam = SweepFamily::Rydberg {
            rb_over_a,
            truncation_range,
            transverse_axis: TransverseAxis::X,
            order: None,
        };
        let (m, e) = ground_state(fam, n_sites, delta_over_omega).lift()?;
        if let Some(oe) = out_energy.as_mut() {
            *oe = e;
        }
        *o = boxed(BebmMps(m));
        Ok(())
    })
}

// ---- datasets ----

/// Draw `shots` measurements of `mps` in basis `'x'`, `'y'` or `'z'`.
#[no_mangle]
pub unsafe extern "C" fn bebm_sample(
    mps: *const BebmMps,
    basis: c_char,
    shots: usize,
    seed: u64,
    out_data: *mut *mut BebmDataset,
) -> BebmStatus {
    guard(|| {
        let o = out(out_data, "out_data")?;
        let d = simulate_measurements(&as_ref(mps, "mps")?.0, basis_arg(basis)?, shots, seed).lift()?;
        *o = boxed(BebmDataset(d));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_dataset_read(path: *const c_char, out_data: *mut *mut BebmDataset) -> BebmStatus {
    guard(|| {
        let o = out(out_data, "out_data")?;
        let d = read_dataset(&path_arg(path, "path")?).lift()?;
        *o = boxed(BebmDataset(d));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_dataset_write(data: *const BebmDataset, path: *const c_char) -> BebmStatus {
    guard(|| write_dataset(&as_ref(data, "data")?.0, &path_arg(path, "path")?).lift())
}

#[no_mangle]
pub unsafe extern "C" fn bebm_dataset_len(data: *const BebmDataset, out_len: *mut usize) -> BebmStatus {
    guard(|| {
        *out(out_len, "out_len")? = as_ref(data, "data")?.0.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_dataset_free(data: *mut BebmDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

// ---- models ----

#[no_mangle]
pub unsafe extern "C" fn bebm_model_new(
    n_sites: usize,
    bond_dim: usize,
    complex_valued: bool,
    seed: u64,
    out_model: *mut *mut BebmModel,
) -> BebmStatus {
    guard(|| {
        let o = out(out_model, "out_model")?;
        *o = boxed(BebmModel(init_model(n_sites, bond_dim, complex_valued, seed).lift()?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_model_free(model: *mut BebmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Train in place on `count` datasets (one per basis) with Adam.
/// `reference` may be null. Final full-data loss goes to `out_loss`,
/// final fidelity (NaN without a reference) to `out_fidelity`.
#[no_mangle]
pub unsafe extern "C" fn bebm_train(
    model: *mut BebmModel,
    datasets: *const *const BebmDataset,
    count: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    reference: *const BebmMps,
    out_loss: *mut f64,
    out_fidelity: *mut f64,
) -> BebmStatus {
    guard(|| {
        let m = out(model, "model")?;
        if datasets.is_null() || count == 0 {
            return Err(invalid("at least one dataset is required"));
        }
        let sets = std::slice::from_raw_parts(datasets, count)
            .iter()
            .map(|&d| as_ref(d, "dataset").map(|d| d.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cfg = TrainConfig {
            bases: sets.iter().map(|d| d.basis).collect(),
            epochs,
            seed,
            ..TrainConfig::default()
        };
        cfg.adam.learning_rate = learning_rate;
        let reference = reference.as_ref().map(|r| &r.0);
        let (trained, hist) = train(m.0.clone(), &sets, &cfg, reference).lift()?;
        let last = hist.last();
        if let Some(l) = out_loss.as_mut() {
            *l = last.map(|r| r.loss).unwrap_or(f64::NAN);
        }
        if let Some(f) = out_fidelity.as_mut() {
            *f = last.and_then(|r| r.fidelity).unwrap_or(f64::NAN);
        }
        m.0 = trained;
        Ok(())
    })
}

/// Normalised copy of the model's state.
#[no_mangle]
pub unsafe extern "C" fn bebm_model_state(model: *const BebmModel, out_mps: *mut *mut BebmMps) -> BebmStatus {
    guard(|| {
        let o = out(out_mps, "out_mps")?;
        *o = boxed(BebmMps(as_ref(model, "model")?.0.normalized().lift()?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_model_write(model: *const BebmModel, path: *const c_char) -> BebmStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        let cfg = TrainConfig::default();
        let meta = CheckpointMeta {
            seed: cfg.seed,
            config: cfg,
            epoch: 0,
            loss: None,
            fidelity: None,
            bond_dim: m.bond_dim(),
            complex_valued: m.complex_valued(),
            init: "external".into(),
        };
        write_checkpoint(&path_arg(path, "path")?, m, &meta).lift()
    })
}

#[no_mangle]
pub unsafe extern "C" fn bebm_model_read(path: *const c_char, out_model: *mut *mut BebmModel) -> BebmStatus {
    guard(|| {
        let o = out(out_model, "out_model")?;
        let (m, _) = read_checkpoint(&path_arg(path, "path")?).lift()?;
        *o = boxed(BebmModel(m));
        Ok(())
    })
}

/// Classical fidelities in all three bases and the quantum fidelity.
#[no_mangle]
pub unsafe extern "C" fn bebm_evaluate(
    model: *const BebmModel,
    reference: *const BebmMps,
    shots: usize,
    seed: u64,
    out_metrics: *mut BebmMetrics,
) -> BebmStatus {
    guard(|| {
        let o = out(out_metrics, "out_metrics")?;
        let r = evaluate(&as_ref(model, "model")?.0, &as_ref(reference, "reference")?.0, shots, seed).lift()?;
        *o = BebmMetrics {
            c_x: r.c_x,
            c_y: r.c_y,
            c_z: r.c_z,
            quantum_fidelity: r.quantum_fidelity,
        };
        Ok(())
    })
}

// ---- orchestration ----

/// Run a `bebm` subcommand that needs only a recipe (`ground-truth`,
/// `phase-map`, `locate-critical`, `sample`, `train`, `matrix`, `scaling`).
/// `out_dir` may be null. Usage problems report `Validation`.
#[no_mangle]
pub unsafe extern "C" fn bebm_run_recipe(
    recipe_path: *const c_char,
    command: *const c_char,
    out_dir: *const c_char,
) -> BebmStatus {
    guard(|| {
        let recipe = path_arg(recipe_path, "recipe_path")?;
        let name = path_arg(command, "command")?;
        let cmd = match name.to_str().unwrap_or_default() {
            "ground-truth" => Command::GroundTruth,
            "phase-map" => Command::PhaseMap,
            "locate-critical" => Command::LocateCritical,
            "sample" => Command::Sample { state: None },
            "train" => Command::Train {
                data: Vec::new(),
                reference: None,
            },
            "matrix" => Command::Matrix,
            "scaling" => Command::Scaling,
            other => return Err(invalid(format!("unknown command '{other}'"))),
        };
        let out_dir = if out_dir.is_null() { None } else { Some(path_arg(out_dir, "out_dir")?) };
        let cli_err = |e: cli::CliError| match e {
            cli::CliError::Usage(m) => (BebmStatus::Validation, m),
            cli::CliError::Runtime(e) => (status_of(&e), e.to_string()),
        };
        let ctx = Context::load(&recipe, None, out_dir.as_deref().map(Path::new), false).map_err(cli_err)?;
        cli::run(&ctx, &cmd).map_err(cli_err)?;
        Ok(())
    })
}

