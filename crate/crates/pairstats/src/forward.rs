//! Forward model: master sum over the pair-number distribution.

use crate::error::{Error, Result};
use crate::matrix::{correlated_detection_matrix, dark_count_matrix};
use crate::outcome::ProbabilityVector;
use crate::setup::{PairDistribution, SetupModel};

/// Default tail mass left out of the master sum before renormalization.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Hard cap on the number of pair-number terms; exceeded only for
/// pathological brightness/tolerance combinations (e.g. thermal mu
/// beyond ~5, where the term count grows like exp(2 mu)).
pub const MAX_PAIR_TERMS: usize = 200_000;

/// Full per-window outcome probabilities for a source with the given
/// pair-number distribution viewed through the setup's channels and
/// detectors.
///
/// The infinite sum over the pair number is truncated once the included
/// pmf mass reaches `1 - tail_tol` and renormalized over that mass.
pub fn detection_statistics(
    dist: &PairDistribution,
    setup: &SetupModel,
    tail_tol: f64,
) -> Result<ProbabilityVector> {
    if !(tail_tol > 0.0) {
        return Err(Error::Domain(format!("tail_tol = {tail_tol} must be positive")));
    }
    let m_eta = correlated_detection_matrix(&setup.transmissions, setup.c())?;
    let m_dc = dark_count_matrix(&setup.darks);

    let mut state = ProbabilityVector::initial();
    let mut acc = [0.0f64; 8];
    let mut mass = 0.0f64;
    let mut terms = dist.terms();
    for i in 0..=MAX_PAIR_TERMS {
        let p = terms.next().expect("pmf iterator is infinite");
        for (a, &s) in acc.iter_mut().zip(state.entries()) {
            *a += p * s;
        }
        mass += p;
        if mass >= 1.0 - tail_tol {
            break;
        }
        if i == MAX_PAIR_TERMS {
            return Err(Error::TruncationLimit { max: MAX_PAIR_TERMS });
        }
        state = m_eta.apply(&state);
    }
    for a in &mut acc {
        *a /= mass;
    }
    Ok(m_dc.apply(&ProbabilityVector::new_unchecked(acc)))
}

/// Correlation strength `G = p_AH / (p_H p_A)`; 1 for uncorrelated
/// clicks, well above 1 when coincidences stem from true pairs.
pub fn correlation_strength(p: &ProbabilityVector) -> Result<f64> {
    let m = p.marginals();
    if m.p_h <= 0.0 || m.p_a <= 0.0 {
        return Err(Error::Undefined(
            "correlation strength needs p_H > 0 and p_A > 0".into(),
        ));
    }
    Ok(m.p_ah / (m.p_h * m.p_a))
}
