//! Joint detector outcomes and the probability vector over them.
//!
//! The canonical ordering of the eight outcomes is frozen for the whole
//! crate and for all file formats:
//!
//! ```text
//! 0: ---   1: A--   2: -B-   3: --H   4: AB-   5: A-H   6: -BH   7: ABH
//! ```

use crate::error::{Error, Result};

/// Tolerance for algebraic identities on probabilities (column sums,
/// vector normalization).
pub const PROB_TOL: f64 = 1e-12;

/// Which of the three detectors clicked during one measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetectorOutcome {
    pub a_clicked: bool,
    pub b_clicked: bool,
    pub h_clicked: bool,
}

/// All outcomes in canonical index order.
pub const OUTCOMES: [DetectorOutcome; 8] = [
    DetectorOutcome { a_clicked: false, b_clicked: false, h_clicked: false },
    DetectorOutcome { a_clicked: true, b_clicked: false, h_clicked: false },
    DetectorOutcome { a_clicked: false, b_clicked: true, h_clicked: false },
    DetectorOutcome { a_clicked: false, b_clicked: false, h_clicked: true },
    DetectorOutcome { a_clicked: true, b_clicked: true, h_clicked: false },
    DetectorOutcome { a_clicked: true, b_clicked: false, h_clicked: true },
    DetectorOutcome { a_clicked: false, b_clicked: true, h_clicked: true },
    DetectorOutcome { a_clicked: true, b_clicked: true, h_clicked: true },
];

impl DetectorOutcome {
    pub fn new(a_clicked: bool, b_clicked: bool, h_clicked: bool) -> Self {
        Self { a_clicked, b_clicked, h_clicked }
    }

    /// Canonical index in 0..8.
    pub fn index(self) -> usize {
        match (self.a_clicked, self.b_clicked, self.h_clicked) {
            (false, false, false) => 0,
            (true, false, false) => 1,
            (false, true, false) => 2,
            (false, false, true) => 3,
            (true, true, false) => 4,
            (true, false, true) => 5,
            (false, true, true) => 6,
            (true, true, true) => 7,
        }
    }

    pub fn from_index(index: usize) -> Self {
        OUTCOMES[index]
    }
}

/// Probabilities of the eight joint detector outcomes for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: [f64; 8],
}

impl ProbabilityVector {
    /// Build from raw entries, enforcing the normalization invariant.
    pub fn new(entries: [f64; 8]) -> Result<Self> {
        for (i, &p) in entries.iter().enumerate() {
            if !(0.0..=1.0 + PROB_TOL).contains(&p) || p.is_nan() {
                return Err(Error::Domain(format!(
                    "probability vector entry {i} = {p} is outside [0, 1]"
                )));
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!(
                "probability vector entries sum to {sum}, expected 1 within {PROB_TOL}"
            )));
        }
        Ok(Self { entries })
    }

    /// Construct without invariant checks. Internal use by code that
    /// guarantees the invariants structurally (matrix application).
    pub(crate) fn new_unchecked(entries: [f64; 8]) -> Self {
        Self { entries }
    }

    /// The initial state: no detector has clicked.
    pub fn initial() -> Self {
        let mut entries = [0.0; 8];
        entries[0] = 1.0;
        Self { entries }
    }

    pub fn entries(&self) -> &[f64; 8] {
        &self.entries
    }

    pub fn get(&self, outcome: DetectorOutcome) -> f64 {
        self.entries[outcome.index()]
    }

    /// Singles, coincidence and conditional probabilities derived by
    /// marginal summation.
    pub fn marginals(&self) -> MarginalSet {
        let p = &self.entries;
        let p_h = p[3] + p[5] + p[6] + p[7];
        let p_a = p[1] + p[4] + p[5] + p[7];
        let p_b = p[2] + p[4] + p[6] + p[7];
        let p_ah = p[5] + p[7];
        let p_bh = p[6] + p[7];
        let p_ab = p[4] + p[7];
        let p_abh = p[7];
        let cond = |num: f64| if p_h > 0.0 { Some(num / p_h) } else { None };
        MarginalSet {
            p_h,
            p_a,
            p_b,
            p_ah,
            p_bh,
            p_ab,
            p_abh,
            p_a_given_h: cond(p_ah),
            p_b_given_h: cond(p_bh),
            p_ab_given_h: cond(p_abh),
        }
    }
}

/// Marginal and conditional click probabilities of a [`ProbabilityVector`].
///
/// Conditionals on H are `None` when the heralding probability is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalSet {
    pub p_h: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ah: f64,
    pub p_bh: f64,
    pub p_ab: f64,
    pub p_abh: f64,
    pub p_a_given_h: Option<f64>,
    pub p_b_given_h: Option<f64>,
    pub p_ab_given_h: Option<f64>,
}
