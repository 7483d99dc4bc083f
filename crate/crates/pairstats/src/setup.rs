//! Physical setup parameters and pair-number distributions.

use crate::error::{Error, Result};

/// Overall channel transmissions from the source to each detector,
/// including optics, coupling, splitter routing and detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTransmissions {
    eta_h: f64,
    eta_a: f64,
    eta_b: f64,
}

impl ChannelTransmissions {
    /// The 50/50 splitter routes one photon to at most one of A and B, so
    /// `eta_a + eta_b <= 1` is required on top of the per-channel ranges.
    pub fn new(eta_h: f64, eta_a: f64, eta_b: f64) -> Result<Self> {
        for (name, v) in [("eta_h", eta_h), ("eta_a", eta_a), ("eta_b", eta_b)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if eta_a + eta_b > 1.0 {
            return Err(Error::Domain(format!(
                "eta_a + eta_b = {} exceeds 1 (nonphysical splitter model)",
                eta_a + eta_b
            )));
        }
        Ok(Self { eta_h, eta_a, eta_b })
    }

    pub fn eta_h(&self) -> f64 {
        self.eta_h
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }
}

/// Dark-count probabilities per measurement window, each in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkCountRates {
    d_h: f64,
    d_a: f64,
    d_b: f64,
}

impl DarkCountRates {
    pub fn new(d_h: f64, d_a: f64, d_b: f64) -> Result<Self> {
        for (name, v) in [("d_h", d_h), ("d_a", d_a), ("d_b", d_b)] {
            if !(0.0..1.0).contains(&v) || v.is_nan() {
                return Err(Error::Domain(format!("{name} = {v} is outside [0, 1)")));
            }
        }
        Ok(Self { d_h, d_a, d_b })
    }

    pub fn zero() -> Self {
        Self { d_h: 0.0, d_a: 0.0, d_b: 0.0 }
    }

    pub fn d_h(&self) -> f64 {
        self.d_h
    }

    pub fn d_a(&self) -> f64 {
        self.d_a
    }

    pub fn d_b(&self) -> f64 {
        self.d_b
    }
}

/// Full description of the detection setup: transmissions, dark counts
/// and the spectral-correlation factor `c` (1 means uncorrelated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupModel {
    pub transmissions: ChannelTransmissions,
    pub darks: DarkCountRates,
    c: f64,
}

impl SetupModel {
    pub fn new(transmissions: ChannelTransmissions, darks: DarkCountRates, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Domain(format!("c = {c} is outside (0, 1]")));
        }
        let model = Self { transmissions, darks, c };
        // Reject parameter combinations whose correlated matrix would
        // carry negative entries.
        crate::matrix::correlated_detection_matrix(&transmissions, c)?;
        Ok(model)
    }

    /// Setup without spectral correlations (`c = 1`).
    pub fn uncorrelated(transmissions: ChannelTransmissions, darks: DarkCountRates) -> Self {
        Self { transmissions, darks, c: 1.0 }
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Supported pair-number distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Poisson,
    Thermal,
}

impl PairKind {
    /// Largest single-pair probability the family can attain; the
    /// inversion `p1 -> mu` is only defined strictly below this.
    pub fn max_p1(&self) -> f64 {
        match self {
            // mu e^{-mu} maximized at mu = 1.
            PairKind::Poisson => (-1.0f64).exp(),
            // lambda(1 - lambda) maximized at lambda = 1/2.
            PairKind::Thermal => 0.25,
        }
    }

    /// Upper end of the low-brightness branch for [`crate::brightness_from_p1`].
    pub(crate) fn p1_branch_end(&self) -> f64 {
        match self {
            PairKind::Poisson => 1.0,
            // lambda = tanh^2(mu) = 1/2.
            PairKind::Thermal => (1.0f64 / 2.0f64.sqrt()).atanh(),
        }
    }
}

/// A pair-number pmf family with its brightness parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistribution {
    pub kind: PairKind,
    mu: f64,
}

impl PairDistribution {
    pub fn new(kind: PairKind, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || mu.is_nan() {
            return Err(Error::Domain(format!("mu = {mu} must be nonnegative")));
        }
        Ok(Self { kind, mu })
    }

    pub fn poisson(mu: f64) -> Result<Self> {
        Self::new(PairKind::Poisson, mu)
    }

    pub fn thermal(mu: f64) -> Result<Self> {
        Self::new(PairKind::Thermal, mu)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Probability of emitting exactly `i` pairs in one window.
    pub fn pmf(&self, i: u32) -> f64 {
        let mut it = self.terms();
        it.nth(i as usize).unwrap_or(0.0)
    }

    /// Iterator over `pmf(0), pmf(1), ...` using stable recurrences.
    pub fn terms(&self) -> PmfTerms {
        match self.kind {
            PairKind::Poisson => PmfTerms {
                current: (-self.mu).exp(),
                mu: self.mu,
                lambda: f64::NAN,
                index: 0,
                poisson: true,
            },
            PairKind::Thermal => {
                let lambda = self.mu.tanh().powi(2);
                PmfTerms { current: 1.0 - lambda, mu: self.mu, lambda, index: 0, poisson: false }
            }
        }
    }

    /// Mean number of pairs per window.
    ///
    /// Poisson brightness is the mean directly; for the thermal family
    /// parametrized by `p1 = (tanh(mu)/cosh(mu))^2` the mean is
    /// `sinh^2(mu)`, exposed here as the derived quantity.
    pub fn mean_pairs(&self) -> f64 {
        match self.kind {
            PairKind::Poisson => self.mu,
            PairKind::Thermal => self.mu.sinh().powi(2),
        }
    }

    /// Probability of more than one pair, summed tailwise to avoid the
    /// cancellation in `1 - p0 - p1` at small brightness.
    pub fn multi_pair_probability(&self) -> f64 {
        match self.kind {
            PairKind::Poisson => {
                let mut term = (-self.mu).exp() * self.mu * self.mu / 2.0;
                let mut sum = 0.0;
                let mut i = 2u32;
                loop {
                    sum += term;
                    i += 1;
                    term *= self.mu / f64::from(i);
                    if term < sum * 1e-17 || term == 0.0 {
                        return sum;
                    }
                }
            }
            PairKind::Thermal => {
                // sum_{i>=2} (1 - lambda) lambda^i = lambda^2
                self.mu.tanh().powi(4)
            }
        }
    }
}

/// See [`PairDistribution::terms`].
#[derive(Debug, Clone)]
pub struct PmfTerms {
    current: f64,
    mu: f64,
    lambda: f64,
    index: u32,
    poisson: bool,
}

impl Iterator for PmfTerms {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.current;
        self.index += 1;
        self.current = if self.poisson {
            self.current * self.mu / f64::from(self.index)
        } else {
            self.current * self.lambda
        };
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_bounds() {
        assert!(ChannelTransmissions::new(0.5, 0.6, 0.5).is_err());
        assert!(ChannelTransmissions::new(1.1, 0.0, 0.0).is_err());
        assert!(ChannelTransmissions::new(1.0, 0.5, 0.5).is_ok());
        assert!(ChannelTransmissions::new(0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn dark_rate_bounds() {
        assert!(DarkCountRates::new(1.0, 0.0, 0.0).is_err());
        assert!(DarkCountRates::new(0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn poisson_pmf_matches_closed_form() {
        let d = PairDistribution::poisson(0.7).unwrap();
        let mut fact = 1.0;
        for i in 0..10u32 {
            if i > 0 {
                fact *= f64::from(i);
            }
            let expected = (-0.7f64).exp() * 0.7f64.powi(i as i32) / fact;
            assert!((d.pmf(i) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn thermal_pmf_matches_stated_p1() {
        let mu = 0.3;
        let d = PairDistribution::thermal(mu).unwrap();
        let expected_p1 = (mu.tanh() / mu.cosh()).powi(2);
        assert!((d.pmf(1) - expected_p1).abs() < 1e-15);
        assert!((d.pmf(0) - 1.0 / mu.cosh().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn pmf_mass_sums_to_one() {
        for dist in [
            PairDistribution::poisson(0.02375).unwrap(),
            PairDistribution::poisson(2.0).unwrap(),
            PairDistribution::thermal(0.5).unwrap(),
        ] {
            let mass: f64 = dist.terms().take(400).sum();
            assert!((mass - 1.0).abs() < 1e-12, "mass {mass} for {dist:?}");
        }
    }

    #[test]
    fn thermal_mean_is_sinh_squared() {
        let mu = 0.4;
        let d = PairDistribution::thermal(mu).unwrap();
        let mean: f64 = d.terms().take(2000).enumerate().map(|(i, p)| i as f64 * p).sum();
        assert!((mean - mu.sinh().powi(2)).abs() < 1e-10);
        assert!((d.mean_pairs() - mu.sinh().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn multi_pair_probability_avoids_cancellation() {
        let d = PairDistribution::poisson(1e-6).unwrap();
        let exact = d.multi_pair_probability();
        // leading term mu^2/2
        assert!((exact - 5e-13).abs() / 5e-13 < 1e-5);
    }
}
