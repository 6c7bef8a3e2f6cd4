//! C ABI over `hwcnn`.
//!
//! Every fallible function returns an [`HwcnnStatus`]; on failure a message is
//! kept per thread and can be read with [`hwcnn_last_error`]. Handles are
//! boxed Rust values and must be released with their `_free` function.
//!
//! # Safety
//!
//! Pointer arguments must be non-null unless documented otherwise, buffers
//! must hold exactly the stated number of elements, and handles must come
//! from this library and not be used after being freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hwcnn::basis::{binomial, BasisIndexer, BitString};
use hwcnn::config::{validate_config, ArchitectureConfig};
use hwcnn::model::Model;
use hwcnn::sim::{Basis, SubspaceState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwcnnStatus {
    Ok = 0,
    NullPointer = 1,
    BufferSize = 2,
    InvalidArgument = 3,
    Config = 4,
    ZeroNorm = 5,
    Panic = 6,
}

/// Opaque real state over the weight-k subspace of n qubits.
pub struct HwcnnState {
    inner: SubspaceState,
}

/// Opaque compiled network.
pub struct HwcnnModel {
    config: ArchitectureConfig,
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(HwcnnStatus, String);

impl From<hwcnn::Error> for Failure {
    fn from(e: hwcnn::Error) -> Self {
        let status = match e {
            hwcnn::Error::Config(_) | hwcnn::Error::Json(_) => HwcnnStatus::Config,
            hwcnn::Error::ZeroNorm => HwcnnStatus::ZeroNorm,
            _ => HwcnnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HwcnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HwcnnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HwcnnStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(HwcnnStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(Failure(
            HwcnnStatus::BufferSize,
            format!("{what} has length {got}, expected {want}"),
        ));
    }
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hwcnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn hwcnn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_binomial(n: usize, k: usize, out: *mut u64) -> HwcnnStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = binomial(n, k)?;
        Ok(())
    })
}

/// Position of `bits` (qubit 0 is the most significant of the n bits) in the
/// ascending enumeration of weight-k strings.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_rank(n: usize, k: usize, bits: u64, out: *mut usize) -> HwcnnStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = BasisIndexer::new(n, k)?.rank(BitString::from_bits(bits, n)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_unrank(n: usize, k: usize, index: usize, out: *mut u64) -> HwcnnStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = BasisIndexer::new(n, k)?.unrank(index)?.bits();
        Ok(())
    })
}

/// Normalizes `amplitudes` (length C(n,k)) into a new state.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_state_new(
    n: usize,
    k: usize,
    amplitudes: *const f64,
    len: usize,
    out: *mut *mut HwcnnState,
) -> HwcnnStatus {
    guard(|| {
        non_null(out, "out")?;
        let basis = Basis::Hamming(BasisIndexer::new(n, k)?);
        check_len(len, basis.dim(), "amplitudes")?;
        let amps = slice(amplitudes, len, "amplitudes")?.to_vec();
        let inner = SubspaceState::normalized(basis, amps)?;
        *out = Box::into_raw(Box::new(HwcnnState { inner }));
        Ok(())
    })
}

/// Subspace dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_state_dim(state: *const HwcnnState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.dim())
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_state_apply_rbs(state: *mut HwcnnState, p: usize, q: usize, theta: f64) -> HwcnnStatus {
    guard(|| {
        non_null(state, "state")?;
        (*state).inner.apply_rbs(p, q, theta)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_state_amplitudes(state: *const HwcnnState, out: *mut f64, len: usize) -> HwcnnStatus {
    guard(|| {
        non_null(state, "state")?;
        let amps = (*state).inner.amplitudes();
        check_len(len, amps.len(), "out")?;
        slice_mut(out, len, "out")?.copy_from_slice(amps);
        Ok(())
    })
}

/// Releases a state; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_state_free(state: *mut HwcnnState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Compiles a network from a JSON config document (NUL-terminated UTF-8).
/// Dataset paths in the document are not touched.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_from_config(json: *const c_char, out: *mut *mut HwcnnModel) -> HwcnnStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(HwcnnStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let config = validate_config(text)?;
        let model = config.build_model()?;
        *out = Box::into_raw(Box::new(HwcnnModel { config, model }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_free(model: *mut HwcnnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_n_params(model: *const HwcnnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_params())
}

/// Length of the flattened input tensor.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_input_len(model: *const HwcnnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.input_basis().dim())
}

#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_n_classes(model: *const HwcnnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_classes())
}

/// Writes the hex architecture digest (64 characters) and a NUL into `out`,
/// which must hold exactly 65 bytes.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_digest(model: *const HwcnnModel, out: *mut c_char, len: usize) -> HwcnnStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let m = &*model;
        let d = m.config.digest(&m.model);
        check_len(len, d.len() + 1, "out")?;
        let dst = std::slice::from_raw_parts_mut(out.cast::<u8>(), len);
        dst[..d.len()].copy_from_slice(d.as_bytes());
        dst[d.len()] = 0;
        Ok(())
    })
}

/// Seeded initial parameters, the same ones `hwcnn train` starts from.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_init_params(
    model: *const HwcnnModel,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> HwcnnStatus {
    guard(|| {
        non_null(model, "model")?;
        let m = &(*model).model;
        check_len(len, m.n_params(), "out")?;
        let p = m.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
        slice_mut(out, len, "out")?.copy_from_slice(&p);
        Ok(())
    })
}

/// Class probabilities for input `x`.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_predict(
    model: *const HwcnnModel,
    x: *const f64,
    x_len: usize,
    params: *const f64,
    params_len: usize,
    probs: *mut f64,
    probs_len: usize,
) -> HwcnnStatus {
    guard(|| {
        non_null(model, "model")?;
        let m = &(*model).model;
        check_len(x_len, m.input_basis().dim(), "x")?;
        check_len(params_len, m.n_params(), "params")?;
        check_len(probs_len, m.n_classes(), "probs")?;
        let r = m.predict(slice(x, x_len, "x")?, slice(params, params_len, "params")?)?;
        slice_mut(probs, probs_len, "probs")?.copy_from_slice(&r.probs);
        Ok(())
    })
}

/// Cross-entropy loss for `label` and its exact gradient.
#[no_mangle]
pub unsafe extern "C" fn hwcnn_model_loss_and_grad(
    model: *const HwcnnModel,
    x: *const f64,
    x_len: usize,
    label: usize,
    params: *const f64,
    params_len: usize,
    loss: *mut f64,
    grad: *mut f64,
    grad_len: usize,
) -> HwcnnStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(loss, "loss")?;
        let m = &(*model).model;
        check_len(x_len, m.input_basis().dim(), "x")?;
        check_len(params_len, m.n_params(), "params")?;
        check_len(grad_len, m.n_params(), "grad")?;
        if label >= m.n_classes() {
            return Err(Failure(
                HwcnnStatus::InvalidArgument,
                format!("label {label} out of range for {} classes", m.n_classes()),
            ));
        }
        let (l, _, g) = m.loss_and_grad(slice(x, x_len, "x")?, label, slice(params, params_len, "params")?)?;
        *loss = l;
        slice_mut(grad, grad_len, "grad")?.copy_from_slice(&g);
        Ok(())
    })
}
