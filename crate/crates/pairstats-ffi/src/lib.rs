//! C ABI for the photon-pair detection-statistics library.
//!
//! Every fallible function returns a [`PairstatsStatus`] code and writes
//! its results through out-pointers. Setups are opaque handles created
//! with [`pairstats_setup_new`] and released with [`pairstats_setup_free`].

use std::ffi::{c_char, CString};

use pairstats::{
    brightness_from_heralding, brightness_from_p1, brightness_upper_bound, detection_statistics,
    estimate_probabilities, g2_low_brightness_approx, multipair_ratio, predict_g2,
    simulate_windows, solve_transmissions, ChannelTransmissions, ClickCounts, DarkCountRates,
    Error, PairDistribution, PairKind, SetupModel,
};

/// Status codes returned by all fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairstatsStatus {
    Ok = 0,
    /// A null pointer was passed where an out-pointer or handle is required.
    NullPointer = 1,
    /// An argument is outside its mathematical domain.
    InvalidArgument = 2,
    /// The requested quantity is undefined for these inputs.
    Undefined = 3,
    /// The requested value lies outside the attainable range.
    OutOfRange = 4,
    /// No solution intersects the computed curve.
    NoIntersection = 5,
    /// The inputs are mutually inconsistent (model violation).
    Inconsistent = 6,
    /// Root finding or refinement failed to converge.
    SolverFailure = 7,
    /// The series truncation limit was exceeded.
    TruncationLimit = 8,
}

fn status_of(e: &Error) -> PairstatsStatus {
    match e {
        Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => PairstatsStatus::InvalidArgument,
        Error::Undefined(_) => PairstatsStatus::Undefined,
        Error::OutOfRange(_) => PairstatsStatus::OutOfRange,
        Error::NoIntersection(_) => PairstatsStatus::NoIntersection,
        Error::Inconsistency(_) => PairstatsStatus::Inconsistent,
        Error::Solver(_) => PairstatsStatus::SolverFailure,
        Error::TruncationLimit { .. } => PairstatsStatus::TruncationLimit,
    }
}

/// Pair-number distribution families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairstatsDistribution {
    Poisson = 0,
    Thermal = 1,
}

impl From<PairstatsDistribution> for PairKind {
    fn from(d: PairstatsDistribution) -> PairKind {
        match d {
            PairstatsDistribution::Poisson => PairKind::Poisson,
            PairstatsDistribution::Thermal => PairKind::Thermal,
        }
    }
}

/// Opaque detection-setup handle.
pub struct PairstatsSetup {
    model: SetupModel,
}

/// Characterization result: recovered parameters and diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairstatsCharacterization {
    pub eta_h: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub mu: f64,
    /// Single-pair emission probability at the recovered brightness.
    pub p1: f64,
    /// Single/multi-pair ratio at the recovered brightness.
    pub r: f64,
    /// Number of model-consistency warnings raised (0 means clean).
    pub n_warnings: u32,
}

/// Create a setup handle. `c` is the spectral-correlation factor in
/// (0, 1]; pass 1 for an uncorrelated source. On success writes the
/// handle to `out` and returns `Ok`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pairstats_setup_new(
    eta_h: f64,
    eta_a: f64,
    eta_b: f64,
    d_h: f64,
    d_a: f64,
    d_b: f64,
    c: f64,
    out: *mut *mut PairstatsSetup,
) -> PairstatsStatus {
    if out.is_null() {
        return PairstatsStatus::NullPointer;
    }
    let build = || -> Result<SetupModel, Error> {
        let t = ChannelTransmissions::new(eta_h, eta_a, eta_b)?;
        let d = DarkCountRates::new(d_h, d_a, d_b)?;
        SetupModel::new(t, d, c)
    };
    match build() {
        Ok(model) => {
            *out = Box::into_raw(Box::new(PairstatsSetup { model }));
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Release a setup handle. Passing null is a no-op.
///
/// # Safety
/// `setup` must be null or a handle from [`pairstats_setup_new`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pairstats_setup_free(setup: *mut PairstatsSetup) {
    if !setup.is_null() {
        drop(Box::from_raw(setup));
    }
}

unsafe fn model_of<'a>(setup: *const PairstatsSetup) -> Option<&'a SetupModel> {
    setup.as_ref().map(|s| &s.model)
}

/// Full per-window outcome probabilities. Writes eight entries to
/// `out_probabilities` in the order ---, A--, -B-, --H, AB-, A-H, -BH, ABH.
///
/// # Safety
/// `setup` must be a live handle; `out_probabilities` must point to at
/// least eight doubles.
#[no_mangle]
pub unsafe extern "C" fn pairstats_detection_statistics(
    setup: *const PairstatsSetup,
    dist: PairstatsDistribution,
    mu: f64,
    tail_tol: f64,
    out_probabilities: *mut f64,
) -> PairstatsStatus {
    let (Some(model), false) = (model_of(setup), out_probabilities.is_null()) else {
        return PairstatsStatus::NullPointer;
    };
    let run = || -> Result<[f64; 8], Error> {
        let d = PairDistribution::new(dist.into(), mu)?;
        Ok(*detection_statistics(&d, model, tail_tol)?.entries())
    };
    match run() {
        Ok(p) => {
            std::ptr::copy_nonoverlapping(p.as_ptr(), out_probabilities, 8);
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Heralded-mode autocorrelation predicted by the forward model.
///
/// # Safety
/// `setup` must be a live handle; `out_g2` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pairstats_predict_g2(
    setup: *const PairstatsSetup,
    dist: PairstatsDistribution,
    mu: f64,
    out_g2: *mut f64,
) -> PairstatsStatus {
    let (Some(model), false) = (model_of(setup), out_g2.is_null()) else {
        return PairstatsStatus::NullPointer;
    };
    let run = || -> Result<f64, Error> {
        predict_g2(model, &PairDistribution::new(dist.into(), mu)?)
    };
    match run() {
        Ok(g2) => {
            *out_g2 = g2;
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Brightness whose forward-model heralding probability equals `p_h`.
///
/// # Safety
/// `setup` must be a live handle; `out_mu` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pairstats_brightness_from_heralding(
    setup: *const PairstatsSetup,
    dist: PairstatsDistribution,
    p_h: f64,
    out_mu: *mut f64,
) -> PairstatsStatus {
    let (Some(model), false) = (model_of(setup), out_mu.is_null()) else {
        return PairstatsStatus::NullPointer;
    };
    match brightness_from_heralding(model, dist.into(), p_h) {
        Ok(mu) => {
            *out_mu = mu;
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Brightness on the low branch with single-pair probability `p1`.
///
/// # Safety
/// `out_mu` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pairstats_brightness_from_p1(
    dist: PairstatsDistribution,
    p1: f64,
    out_mu: *mut f64,
) -> PairstatsStatus {
    if out_mu.is_null() {
        return PairstatsStatus::NullPointer;
    }
    match brightness_from_p1(dist.into(), p1) {
        Ok(mu) => {
            *out_mu = mu;
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Single/multi-pair ratio `r = p1 / (1 - p0 - p1)`; writes +inf when
/// the multi-pair mass underflows.
///
/// # Safety
/// `out_r` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pairstats_multipair_ratio(
    dist: PairstatsDistribution,
    mu: f64,
    out_r: *mut f64,
) -> PairstatsStatus {
    if out_r.is_null() {
        return PairstatsStatus::NullPointer;
    }
    match PairDistribution::new(dist.into(), mu) {
        Ok(d) => {
            *out_r = multipair_ratio(&d);
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Brightness upper bound from a measured correlation strength `g`,
/// assuming loss-free channels with the given detector efficiencies.
/// Writes the bound and the corresponding lower bound on `r`.
///
/// # Safety
/// `out_mu_max` and `out_r_lower` must be valid pointers.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pairstats_brightness_upper_bound(
    g: f64,
    eta_h: f64,
    eta_a: f64,
    eta_b: f64,
    d_h: f64,
    d_a: f64,
    d_b: f64,
    dist: PairstatsDistribution,
    out_mu_max: *mut f64,
    out_r_lower: *mut f64,
) -> PairstatsStatus {
    if out_mu_max.is_null() || out_r_lower.is_null() {
        return PairstatsStatus::NullPointer;
    }
    let run = || -> Result<pairstats::BrightnessBound, Error> {
        let t = ChannelTransmissions::new(eta_h, eta_a, eta_b)?;
        let d = DarkCountRates::new(d_h, d_a, d_b)?;
        brightness_upper_bound(g, &t, &d, dist.into())
    };
    match run() {
        Ok(bound) => {
            *out_mu_max = bound.mu_max;
            *out_r_lower = bound.r_lower;
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Recover transmissions and brightness from measured probabilities.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pairstats_solve_transmissions(
    p_h: f64,
    p_a: f64,
    p_b: f64,
    p_ah: f64,
    p_bh: f64,
    n_windows: u64,
    d_h: f64,
    d_a: f64,
    d_b: f64,
    dist: PairstatsDistribution,
    out: *mut PairstatsCharacterization,
) -> PairstatsStatus {
    if out.is_null() {
        return PairstatsStatus::NullPointer;
    }
    let run = || -> Result<PairstatsCharacterization, Error> {
        let m = pairstats::MeasuredProbabilities::new(p_h, p_a, p_b, p_ah, p_bh, n_windows)?;
        let d = DarkCountRates::new(d_h, d_a, d_b)?;
        let c = solve_transmissions(&m, &d, dist.into())?;
        Ok(PairstatsCharacterization {
            eta_h: c.eta_h.value,
            eta_a: c.eta_a.value,
            eta_b: c.eta_b.value,
            mu: c.mu.value,
            p1: c.p1,
            r: c.r,
            n_warnings: c.warnings.len() as u32,
        })
    };
    match run() {
        Ok(c) => {
            *out = c;
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Monte Carlo simulation of `n_windows` measurement windows. Writes
/// eight outcome counts in canonical order, then the measured
/// probabilities can be recovered host-side; also writes the empirical
/// heralding probability for convenience.
///
/// # Safety
/// `setup` must be a live handle; `out_counts` must point to at least
/// eight `uint64_t`; `out_p_h` may be null if unwanted.
#[no_mangle]
pub unsafe extern "C" fn pairstats_simulate_windows(
    setup: *const PairstatsSetup,
    dist: PairstatsDistribution,
    mu: f64,
    n_windows: u64,
    seed: u64,
    out_counts: *mut u64,
    out_p_h: *mut f64,
) -> PairstatsStatus {
    let (Some(model), false) = (model_of(setup), out_counts.is_null()) else {
        return PairstatsStatus::NullPointer;
    };
    let run = || -> Result<ClickCounts, Error> {
        let d = PairDistribution::new(dist.into(), mu)?;
        simulate_windows(model, &d, n_windows, seed)
    };
    match run() {
        Ok(counts) => {
            std::ptr::copy_nonoverlapping(counts.outcome_counts.as_ptr(), out_counts, 8);
            if !out_p_h.is_null() {
                *out_p_h = estimate_probabilities(&counts).p_h;
            }
            PairstatsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Low-brightness closed form `g2 = mu (2 - eta_h)`.
#[no_mangle]
pub extern "C" fn pairstats_g2_low_brightness_approx(mu: f64, eta_h: f64) -> f64 {
    g2_low_brightness_approx(mu, eta_h)
}

/// Human-readable name of a status code. The returned string is owned
/// by the library and must not be freed.
#[no_mangle]
pub extern "C" fn pairstats_status_name(status: PairstatsStatus) -> *const c_char {
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    let names = NAMES.get_or_init(|| {
        [
            "ok",
            "null pointer",
            "invalid argument",
            "undefined",
            "out of range",
            "no intersection",
            "inconsistent",
            "solver failure",
            "truncation limit",
        ]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect()
    });
    names[status as usize].as_ptr()
}
