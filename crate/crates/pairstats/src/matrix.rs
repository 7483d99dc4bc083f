//! Column-stochastic transition matrices acting on the outcome basis.

use crate::error::{Error, Result};
use crate::outcome::{ProbabilityVector, PROB_TOL};
use crate::setup::{ChannelTransmissions, DarkCountRates};

/// An 8x8 column-stochastic matrix; `entry(row, col)` is the probability
/// of the detectors moving from outcome `col` to outcome `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    // row-major: m[row][col]
    m: [[f64; 8]; 8],
}

impl TransitionMatrix {
    fn from_rows(m: [[f64; 8]; 8]) -> Result<Self> {
        for col in 0..8 {
            let mut sum = 0.0;
            for row in 0..8 {
                let v = m[row][col];
                if !(0.0..=1.0 + PROB_TOL).contains(&v) || v.is_nan() {
                    return Err(Error::Domain(format!(
                        "matrix entry ({row}, {col}) = {v} is outside [0, 1]"
                    )));
                }
                if row < col && v != 0.0 {
                    return Err(Error::Domain(format!(
                        "matrix entry ({row}, {col}) = {v} breaks lower-triangularity"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::Domain(format!(
                    "column {col} sums to {sum}, expected 1 within {PROB_TOL}"
                )));
            }
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 8]; 8];
        for i in 0..8 {
            m[i][i] = 1.0;
        }
        Self { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    /// Apply to a probability vector: `out = M p`.
    pub fn apply(&self, p: &ProbabilityVector) -> ProbabilityVector {
        let x = p.entries();
        let mut out = [0.0; 8];
        for row in 0..8 {
            let mut acc = 0.0;
            for col in 0..=row {
                acc += self.m[row][col] * x[col];
            }
            out[row] = acc;
        }
        ProbabilityVector::new_unchecked(out)
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &TransitionMatrix) -> TransitionMatrix {
        let mut m = [[0.0; 8]; 8];
        for row in 0..8 {
            for col in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += self.m[row][k] * other.m[k][col];
                }
                m[row][col] = acc;
            }
        }
        TransitionMatrix { m }
    }

    /// Largest absolute entrywise difference to another matrix.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for row in 0..8 {
            for col in 0..8 {
                worst = worst.max((self.m[row][col] - other.m[row][col]).abs());
            }
        }
        worst
    }
}

/// Single-pair detection matrix for uncorrelated photons.
pub fn detection_matrix(t: &ChannelTransmissions) -> TransitionMatrix {
    // ChannelTransmissions invariants guarantee nonnegative entries at c = 1.
    correlated_detection_matrix(t, 1.0).expect("c = 1 matrix is always valid")
}

/// Single-pair detection matrix with coincidences suppressed by the
/// spectral-correlation factor `c`: the joint A-H (B-H) detection
/// probability becomes `c * eta_a * eta_h` while the marginals stay
/// `eta_a` and `eta_h`.
pub fn correlated_detection_matrix(t: &ChannelTransmissions, c: f64) -> Result<TransitionMatrix> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c = {c} is outside (0, 1]")));
    }
    let (eh, ea, eb) = (t.eta_h(), t.eta_a(), t.eta_b());
    let mut m = [[0.0; 8]; 8];
    // column 0: ---
    m[0][0] = 1.0 - eh + (ea + eb) * (c * eh - 1.0);
    m[1][0] = ea * (1.0 - c * eh);
    m[2][0] = eb * (1.0 - c * eh);
    m[3][0] = eh * (1.0 - c * (ea + eb));
    m[5][0] = c * ea * eh;
    m[6][0] = c * eb * eh;
    // column 1: A--
    m[1][1] = 1.0 - eb + eh * (c * eb - 1.0);
    m[4][1] = eb * (1.0 - c * eh);
    m[5][1] = eh * (1.0 - c * eb);
    m[7][1] = c * eb * eh;
    // column 2: -B-
    m[2][2] = 1.0 - ea + eh * (c * ea - 1.0);
    m[4][2] = ea * (1.0 - c * eh);
    m[6][2] = eh * (1.0 - c * ea);
    m[7][2] = c * ea * eh;
    // column 3: --H
    m[3][3] = 1.0 - (ea + eb);
    m[5][3] = ea;
    m[6][3] = eb;
    // column 4: AB-
    m[4][4] = 1.0 - eh;
    m[7][4] = eh;
    // column 5: A-H
    m[5][5] = 1.0 - eb;
    m[7][5] = eb;
    // column 6: -BH
    m[6][6] = 1.0 - ea;
    m[7][6] = ea;
    m[7][7] = 1.0;
    TransitionMatrix::from_rows(m).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!(
            "correlated detection matrix has no probabilistic interpretation \
             for c = {c} with these transmissions: {msg}"
        )),
        other => other,
    })
}

/// Dark-count matrix: each detector fires independently with its
/// per-window dark probability.
pub fn dark_count_matrix(d: &DarkCountRates) -> TransitionMatrix {
    let (dh, da, db) = (d.d_h(), d.d_a(), d.d_b());
    let mut m = [[0.0; 8]; 8];
    // column 0: ---
    m[0][0] = (1.0 - da) * (1.0 - db) * (1.0 - dh);
    m[1][0] = da * (1.0 - db) * (1.0 - dh);
    m[2][0] = (1.0 - da) * db * (1.0 - dh);
    m[3][0] = (1.0 - da) * (1.0 - db) * dh;
    m[4][0] = da * db * (1.0 - dh);
    m[5][0] = da * (1.0 - db) * dh;
    m[6][0] = (1.0 - da) * db * dh;
    m[7][0] = da * db * dh;
    // column 1: A--
    m[1][1] = (1.0 - db) * (1.0 - dh);
    m[4][1] = db * (1.0 - dh);
    m[5][1] = (1.0 - db) * dh;
    m[7][1] = db * dh;
    // column 2: -B-
    m[2][2] = (1.0 - da) * (1.0 - dh);
    m[4][2] = da * (1.0 - dh);
    m[6][2] = (1.0 - da) * dh;
    m[7][2] = da * dh;
    // column 3: --H
    m[3][3] = (1.0 - da) * (1.0 - db);
    m[5][3] = da * (1.0 - db);
    m[6][3] = (1.0 - da) * db;
    m[7][3] = da * db;
    // column 4: AB-
    m[4][4] = 1.0 - dh;
    m[7][4] = dh;
    // column 5: A-H
    m[5][5] = 1.0 - db;
    m[7][5] = db;
    // column 6: -BH
    m[6][6] = 1.0 - da;
    m[7][6] = da;
    m[7][7] = 1.0;
    TransitionMatrix::from_rows(m).expect("dark-count matrix is always column-stochastic")
}
