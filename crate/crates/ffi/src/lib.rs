//! C ABI over the mmw-discovery library.
//!
//! Every entry point returns an [`MmwStatus`]. On failure a description is kept
//! per thread and can be fetched with [`mmw_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_build`/`*_from_json` functions and
//! released with the matching `*_free`. Strings returned to the caller are
//! released with [`mmw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmw_discovery::beambook::{self, CodebookSide, SweepCodebook, Thm3Grid};
use mmw_discovery::beamformers::{
    beamforming_gain, dominant_directional, egt_from_rsv, loss_db, optimal_f2, optimal_gain,
    prop1_beamformer, quantize_phases, theorem2_rx, BeamformerPair, RxMode,
};
use mmw_discovery::channel::{
    build_channel, sample_scenario, ArrayGeometry, ChannelMatrix, Scenario,
};
use mmw_discovery::harness::{run_experiment, write_records_csv, ExperimentConfig};
use mmw_discovery::rng::trial_rng;
use mmw_discovery::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Serialization = 4,
    Panic = 5,
}

/// Beamforming scheme selector for [`mmw_channel_scheme_loss_db`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmwScheme {
    Optimal = 0,
    EgtRsv = 1,
    Prop1 = 2,
    DirectionalMatchedFilter = 3,
    DirectionalDominant = 4,
}

/// Codebook side for [`mmw_codebook_build`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmwSide {
    Mwb = 0,
    Ue = 1,
}

/// A channel realization together with the scenario that produced it.
pub struct MmwChannel(ChannelMatrix);

/// A beam-sweep codebook.
pub struct MmwCodebook(SweepCodebook);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(MmwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NonFinite(_) | Error::NotHermitian { .. } | Error::NonConvergence { .. } => {
                MmwStatus::Numerical
            }
            Error::Json(_) | Error::Csv(_) | Error::Io(_) => MmwStatus::Serialization,
            _ => MmwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MmwStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MmwStatus::InvalidArgument, msg.into())
}

/// Runs `body`, records any failure and converts panics into [`MmwStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MmwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MmwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MmwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MmwStatus::Serialization, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        Failure(
            MmwStatus::Serialization,
            "string contains a NUL byte".into(),
        )
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, or 0 if
/// there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mmw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mmw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a channel from a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_from_json(
    json: *const c_char,
    out: *mut *mut MmwChannel,
) -> MmwStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = Scenario::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(MmwChannel(build_channel(&s)?)));
        Ok(())
    })
}

/// Draws the scenario of trial `trial` under `seed` (half-wavelength arrays,
/// 30 to 150 degree field of view) and builds its channel.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_sample(
    seed: u64,
    trial: u64,
    n_paths: usize,
    n_r: usize,
    n_t: usize,
    rho_db: f64,
    out: *mut *mut MmwChannel,
) -> MmwStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = sample_scenario(
            &mut trial_rng(seed, trial),
            n_paths,
            ArrayGeometry::ula(n_r),
            ArrayGeometry::ula(n_t),
            mmw_discovery::channel::DEFAULT_FOV_DEG,
            rho_db,
            rho_db,
        )?;
        *out = Box::into_raw(Box::new(MmwChannel(build_channel(&s)?)));
        Ok(())
    })
}

/// # Safety
/// `ch` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_free(ch: *mut MmwChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Writes the receive and transmit array sizes.
///
/// # Safety
/// `ch` must be a live handle; `n_r` and `n_t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_dims(
    ch: *const MmwChannel,
    n_r: *mut usize,
    n_t: *mut usize,
) -> MmwStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| null("channel"))?;
        *out_ref(n_r, "n_r")? = ch.0.n_rx();
        *out_ref(n_t, "n_t")? = ch.0.n_tx();
        Ok(())
    })
}

/// Copies `H` in row-major order as interleaved `(re, im)` doubles; `len` is
/// the capacity of `data` in doubles and must be at least `2 N_r N_t`.
///
/// # Safety
/// `ch` must be a live handle; `data` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_matrix(
    ch: *const MmwChannel,
    data: *mut f64,
    len: usize,
) -> MmwStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| null("channel"))?;
        if data.is_null() {
            return Err(null("data"));
        }
        let h = ch.0.h.as_slice();
        if len < 2 * h.len() {
            return Err(invalid(format!(
                "buffer holds {len} doubles, need {}",
                2 * h.len()
            )));
        }
        let out = std::slice::from_raw_parts_mut(data, 2 * h.len());
        for (i, z) in h.iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// Largest achievable beamforming gain `sigma_1(H)^2` (linear).
///
/// # Safety
/// `ch` must be a live handle; `gain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_optimal_gain(
    ch: *const MmwChannel,
    gain: *mut f64,
) -> MmwStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| null("channel"))?;
        *out_ref(gain, "gain")? = optimal_gain(&ch.0.h)?;
        Ok(())
    })
}

/// Loss in dB of `scheme` against the optimum. `bits > 0` quantizes the
/// transmit phases of the equal-gain schemes; 0 leaves them continuous.
///
/// # Safety
/// `ch` must be a live handle; `loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_channel_scheme_loss_db(
    ch: *const MmwChannel,
    scheme: MmwScheme,
    bits: u32,
    loss: *mut f64,
) -> MmwStatus {
    guard(|| {
        let ch = &ch.as_ref().ok_or_else(|| null("channel"))?.0;
        let loss = out_ref(loss, "loss")?;
        let quantize = |p: BeamformerPair| -> Result<BeamformerPair, Failure> {
            if bits == 0 {
                return Ok(p);
            }
            let tx = quantize_phases(&p.tx, bits)?;
            let rx = theorem2_rx(&ch.h, tx.weights())?;
            Ok(BeamformerPair { tx, rx })
        };
        let pair = match scheme {
            MmwScheme::Optimal => optimal_f2(ch)?,
            MmwScheme::EgtRsv => quantize(egt_from_rsv(ch)?)?,
            MmwScheme::Prop1 => quantize(prop1_beamformer(ch)?)?,
            MmwScheme::DirectionalMatchedFilter => {
                dominant_directional(ch, &ch.source.paths, RxMode::MatchedFilter)?
            }
            MmwScheme::DirectionalDominant => {
                dominant_directional(ch, &ch.source.paths, RxMode::DominantDirection)?
            }
        };
        let achieved = beamforming_gain(&ch.h, pair.tx.weights(), pair.rx.weights())?;
        *loss = loss_db(optimal_gain(&ch.h)?, achieved);
        Ok(())
    })
}

/// Parseval upper bound on worst-case gain, in dB.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_parseval_bound_db(
    n_t: usize,
    fov_width: f64,
    n_beams: usize,
    out: *mut f64,
) -> MmwStatus {
    guard(|| {
        *out_ref(out, "out")? = beambook::parseval_bound(n_t, fov_width, n_beams)?;
        Ok(())
    })
}

/// Sampled-Gram upper bound on worst-case gain over an interval of width
/// `omega0`, in dB, with the default search grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_thm3_bound_db(
    n_t: usize,
    omega0: f64,
    j_max: usize,
    out: *mut f64,
) -> MmwStatus {
    guard(|| {
        *out_ref(out, "out")? = beambook::thm3_bound(n_t, omega0, j_max, Thm3Grid::default())?;
        Ok(())
    })
}

/// Designs a sweep codebook over the field of view `[fov_lo_deg, fov_hi_deg]`.
/// `m = 1` gives CPO beams, `m` in 2..=4 broadened beams.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_codebook_build(
    n: usize,
    fov_lo_deg: f64,
    fov_hi_deg: f64,
    n_beams: usize,
    m: u8,
    side: MmwSide,
    out: *mut *mut MmwCodebook,
) -> MmwStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let side = match side {
            MmwSide::Mwb => CodebookSide::Mwb,
            MmwSide::Ue => CodebookSide::Ue,
        };
        let book = beambook::build_codebook(
            &ArrayGeometry::ula(n),
            [fov_lo_deg, fov_hi_deg],
            n_beams,
            m,
            side,
        )?;
        *out = Box::into_raw(Box::new(MmwCodebook(book)));
        Ok(())
    })
}

/// # Safety
/// `cb` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn mmw_codebook_free(cb: *mut MmwCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Number of beams.
///
/// # Safety
/// `cb` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_codebook_len(cb: *const MmwCodebook, len: *mut usize) -> MmwStatus {
    guard(|| {
        *out_ref(len, "len")? = cb.as_ref().ok_or_else(|| null("codebook"))?.0.len();
        Ok(())
    })
}

/// Copies beam `index` as interleaved `(re, im)` doubles; `len` must be at
/// least twice the array size.
///
/// # Safety
/// `cb` must be a live handle; `data` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mmw_codebook_beam(
    cb: *const MmwCodebook,
    index: usize,
    data: *mut f64,
    len: usize,
) -> MmwStatus {
    guard(|| {
        let book = &cb.as_ref().ok_or_else(|| null("codebook"))?.0;
        if data.is_null() {
            return Err(null("data"));
        }
        let beam = book
            .beams
            .get(index)
            .ok_or_else(|| invalid(format!("beam {index} of {}", book.len())))?;
        let w = beam.weights();
        if len < 2 * w.len() {
            return Err(invalid(format!(
                "buffer holds {len} doubles, need {}",
                2 * w.len()
            )));
        }
        let out = std::slice::from_raw_parts_mut(data, 2 * w.len());
        for (i, z) in w.iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// Serializes the codebook to JSON. Free the result with [`mmw_string_free`].
///
/// # Safety
/// `cb` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_codebook_to_json(
    cb: *const MmwCodebook,
    out: *mut *mut c_char,
) -> MmwStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = into_c_string(cb.as_ref().ok_or_else(|| null("codebook"))?.0.to_json()?)?;
        Ok(())
    })
}

/// Runs an experiment described by `config_json` and returns the per-trial
/// CSV. `workers = 0` uses the default pool size. Free the result with
/// [`mmw_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_csv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmw_experiment_run(
    config_json: *const c_char,
    workers: usize,
    out_csv: *mut *mut c_char,
) -> MmwStatus {
    guard(|| {
        let out = out_ref(out_csv, "out_csv")?;
        let cfg = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        let records = run_experiment(&cfg, (workers > 0).then_some(workers))?;
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf)?;
        let text = String::from_utf8(buf)
            .map_err(|_| Failure(MmwStatus::Serialization, "CSV is not UTF-8".into()))?;
        *out = into_c_string(text)?;
        Ok(())
    })
}
