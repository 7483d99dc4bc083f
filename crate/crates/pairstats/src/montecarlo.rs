//! Brute-force per-window click simulator; the independent oracle
//! against which the exact matrix model is validated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;

use crate::characterize::MeasuredProbabilities;
use crate::error::{Error, Result};
use crate::outcome::DetectorOutcome;
use crate::setup::{PairDistribution, PairKind, SetupModel};

/// Windows per independent RNG stream; counts merge identically
/// regardless of scheduling.
const BATCH: u64 = 1 << 14;

/// Empirical per-window outcome counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickCounts {
    pub n_windows: u64,
    /// Counts indexed by [`DetectorOutcome::index`].
    pub outcome_counts: [u64; 8],
    /// RNG seed that produced the counts (0 for ingested data).
    pub seed: u64,
}

impl ClickCounts {
    pub fn new(outcome_counts: [u64; 8], seed: u64) -> Self {
        let n_windows = outcome_counts.iter().sum();
        Self { n_windows, outcome_counts, seed }
    }

    /// Empirical outcome frequencies.
    pub fn frequencies(&self) -> [f64; 8] {
        let n = self.n_windows as f64;
        let mut f = [0.0; 8];
        for (out, &c) in f.iter_mut().zip(&self.outcome_counts) {
            *out = c as f64 / n;
        }
        f
    }
}

/// Per-pair click probabilities derived from a setup, in the form the
/// sampler draws them: partner routing first, then the herald photon
/// conditioned on whether the partner survived.
struct PairSampler {
    eta_a: f64,
    eta_ab: f64,
    h_given_detected: f64,
    h_given_lost: f64,
}

impl PairSampler {
    fn new(setup: &SetupModel) -> Self {
        let t = &setup.transmissions;
        let (eh, ea, eb, c) = (t.eta_h(), t.eta_a(), t.eta_b(), setup.c());
        let lost = 1.0 - ea - eb;
        // Joint survival is c eta_h eta_x while the marginals stay eta_h
        // and eta_x; SetupModel construction guarantees the conditional
        // below is a probability.
        let h_given_lost = if lost > 0.0 { eh * (1.0 - c * (ea + eb)) / lost } else { eh };
        Self { eta_a: ea, eta_ab: ea + eb, h_given_detected: c * eh, h_given_lost }
    }

    /// Returns (a_clicked, b_clicked, h_clicked) for one pair.
    fn sample<R: Rng>(&self, rng: &mut R) -> (bool, bool, bool) {
        let route: f64 = rng.gen();
        let (a, b, detected) = if route < self.eta_a {
            (true, false, true)
        } else if route < self.eta_ab {
            (false, true, true)
        } else {
            (false, false, false)
        };
        let ph = if detected { self.h_given_detected } else { self.h_given_lost };
        let h = rng.gen::<f64>() < ph;
        (a, b, h)
    }
}

enum PairNumberSampler {
    Zero,
    Poisson(Poisson<f64>),
    Thermal { lambda: f64 },
}

impl PairNumberSampler {
    fn new(dist: &PairDistribution) -> Result<Self> {
        if dist.mu() == 0.0 {
            return Ok(Self::Zero);
        }
        match dist.kind {
            PairKind::Poisson => Poisson::new(dist.mu())
                .map(Self::Poisson)
                .map_err(|e| Error::Domain(format!("poisson sampler: {e}"))),
            PairKind::Thermal => Ok(Self::Thermal { lambda: dist.mu().tanh().powi(2) }),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Zero => 0,
            Self::Poisson(p) => p.sample(rng) as u64,
            Self::Thermal { lambda } => {
                // geometric with P(i) = (1 - lambda) lambda^i by inversion
                let u: f64 = rng.gen(); // [0, 1)
                ((1.0 - u).ln() / lambda.ln()).floor() as u64
            }
        }
    }
}

/// Simulate `n_windows` measurement windows and bin the joint click
/// outcomes. Deterministic for a fixed seed, independent of the number
/// of threads.
pub fn simulate_windows(
    setup: &SetupModel,
    dist: &PairDistribution,
    n_windows: u64,
    seed: u64,
) -> Result<ClickCounts> {
    if n_windows == 0 {
        return Err(Error::Domain("n_windows must be at least 1".into()));
    }
    let pair_sampler = PairSampler::new(setup);
    let number_sampler = PairNumberSampler::new(dist)?;
    let d = &setup.darks;
    let (dh, da, db) = (d.d_h(), d.d_a(), d.d_b());
    let n_batches = n_windows.div_ceil(BATCH);

    let counts = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let windows = BATCH.min(n_windows - batch * BATCH);
            let mut local = [0u64; 8];
            for _ in 0..windows {
                let pairs = number_sampler.sample(&mut rng);
                let mut a = false;
                let mut b = false;
                let mut h = false;
                for _ in 0..pairs {
                    let (pa, pb, ph) = pair_sampler.sample(&mut rng);
                    a |= pa;
                    b |= pb;
                    h |= ph;
                }
                if da > 0.0 {
                    a |= rng.gen::<f64>() < da;
                }
                if db > 0.0 {
                    b |= rng.gen::<f64>() < db;
                }
                if dh > 0.0 {
                    h |= rng.gen::<f64>() < dh;
                }
                local[DetectorOutcome::new(a, b, h).index()] += 1;
            }
            local
        })
        .reduce(
            || [0u64; 8],
            |mut acc, local| {
                for (a, l) in acc.iter_mut().zip(&local) {
                    *a += l;
                }
                acc
            },
        );
    Ok(ClickCounts { n_windows, outcome_counts: counts, seed })
}

/// Marginal singles and coincidence probabilities from binned counts.
pub fn estimate_probabilities(counts: &ClickCounts) -> MeasuredProbabilities {
    let c = &counts.outcome_counts;
    let n = counts.n_windows as f64;
    let p = |idx: &[usize]| idx.iter().map(|&i| c[i] as f64).sum::<f64>() / n;
    MeasuredProbabilities {
        p_h: p(&[3, 5, 6, 7]),
        p_a: p(&[1, 4, 5, 7]),
        p_b: p(&[2, 4, 6, 7]),
        p_ah: p(&[5, 7]),
        p_bh: p(&[6, 7]),
        n_windows: counts.n_windows,
    }
}

/// Binomial standard error of an empirical probability.
pub fn binomial_std_err(p: f64, n_windows: u64) -> f64 {
    (p * (1.0 - p) / n_windows as f64).sqrt()
}

/// Multinomial bootstrap resample of outcome counts.
pub fn resample_multinomial<R: Rng>(counts: &ClickCounts, rng: &mut R) -> ClickCounts {
    let n = counts.n_windows;
    let mut remaining = n;
    let mut remaining_mass = 1.0f64;
    let mut out = [0u64; 8];
    for i in 0..8 {
        if remaining == 0 {
            break;
        }
        let p = counts.outcome_counts[i] as f64 / n as f64;
        if i == 7 || remaining_mass <= 0.0 {
            out[i] = remaining;
            break;
        }
        let cond = (p / remaining_mass).clamp(0.0, 1.0);
        let draw = if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond).expect("valid binomial").sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        remaining_mass -= p;
    }
    ClickCounts { n_windows: n, outcome_counts: out, seed: counts.seed }
}

/// Characterize a source from binned counts and attach bootstrap
/// standard errors obtained by multinomial resampling.
///
/// Each resample is drawn on its own RNG stream, so the result is
/// deterministic for a fixed seed regardless of thread count. Fails if
/// more than 10% of the resamples are uncharacterizable (a sign the
/// measurement sits on the edge of the model's validity).
pub fn propagate_uncertainty(
    counts: &ClickCounts,
    darks: &crate::setup::DarkCountRates,
    kind: PairKind,
    n_resamples: u32,
    seed: u64,
) -> Result<crate::characterize::CharacterizedSource> {
    use crate::characterize::solve_transmissions;

    if n_resamples < 2 {
        return Err(Error::Domain("n_resamples must be at least 2".into()));
    }
    let measured = estimate_probabilities(counts);
    let mut central = solve_transmissions(&measured, darks, kind)?;
    if counts.n_windows < 10_000 {
        central.warnings.push(format!(
            "only {} windows recorded; bootstrap errors may be unreliable",
            counts.n_windows
        ));
    }

    let samples: Vec<Option<[f64; 4]>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let resampled = resample_multinomial(counts, &mut rng);
            let m = estimate_probabilities(&resampled);
            solve_transmissions(&m, darks, kind)
                .ok()
                .map(|c| [c.eta_h.value, c.eta_a.value, c.eta_b.value, c.mu.value])
        })
        .collect();

    let ok: Vec<&[f64; 4]> = samples.iter().flatten().collect();
    let failed = samples.len() - ok.len();
    if failed * 10 > samples.len() {
        return Err(Error::Inconsistency(format!(
            "{failed} of {} bootstrap resamples were uncharacterizable",
            samples.len()
        )));
    }
    if failed > 0 {
        central.warnings.push(format!(
            "{failed} of {} bootstrap resamples were uncharacterizable and were dropped",
            samples.len()
        ));
    }

    let n = ok.len() as f64;
    let mut std_err = [0.0f64; 4];
    for k in 0..4 {
        let mean = ok.iter().map(|s| s[k]).sum::<f64>() / n;
        let var = ok.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        std_err[k] = var.sqrt();
    }
    central.eta_h.std_err = Some(std_err[0]);
    central.eta_a.std_err = Some(std_err[1]);
    central.eta_b.std_err = Some(std_err[2]);
    central.mu.std_err = Some(std_err[3]);
    Ok(central)
}

/// Simulated heralded-mode autocorrelation with its approximate
/// standard error (first-order propagation of the binomial errors of
/// the three conditional probabilities; correlations ignored).
pub fn simulate_heralded_g2(
    setup: &SetupModel,
    dist: &PairDistribution,
    n_heralds: u64,
    seed: u64,
    max_windows: u64,
) -> Result<(f64, f64)> {
    if n_heralds == 0 {
        return Err(Error::Domain("n_heralds must be at least 1".into()));
    }
    let mut n_h = 0u64;
    let mut n_ah = 0u64;
    let mut n_bh = 0u64;
    let mut n_abh = 0u64;
    let mut windows_used = 0u64;
    let chunk = 1u64 << 18;
    let mut round = 0u64;
    while n_h < n_heralds {
        if windows_used >= max_windows {
            return Err(Error::Solver(format!(
                "collected only {n_h}/{n_heralds} heralds within the {max_windows}-window budget"
            )));
        }
        let take = chunk.min(max_windows - windows_used);
        // distinct seed per round keeps the streams independent
        let counts = simulate_windows(setup, dist, take, seed.wrapping_add(round << 32))?;
        windows_used += take;
        round += 1;
        let c = &counts.outcome_counts;
        n_h += c[3] + c[5] + c[6] + c[7];
        n_ah += c[5] + c[7];
        n_bh += c[6] + c[7];
        n_abh += c[7];
    }
    if n_ah == 0 || n_bh == 0 {
        return Err(Error::Undefined(
            "no heralded A or B clicks collected; g2 is undefined".into(),
        ));
    }
    let nh = n_h as f64;
    let p_a = n_ah as f64 / nh;
    let p_b = n_bh as f64 / nh;
    let p_ab = n_abh as f64 / nh;
    let g2 = p_ab / (p_a * p_b);
    let rel_var = |count: u64, p: f64| {
        if count == 0 {
            0.0
        } else {
            (1.0 - p) / count as f64
        }
    };
    let rel = rel_var(n_abh, p_ab) + rel_var(n_ah, p_a) + rel_var(n_bh, p_b);
    let std_err = if n_abh == 0 {
        // zero numerator: quote the one-count scale as the uncertainty
        (1.0 / nh) / (p_a * p_b)
    } else {
        g2 * rel.sqrt()
    };
    Ok((g2, std_err))
}
