//! Seeded Monte Carlo engine checking the closed forms against simulation.
//!
//! Trial `t` of a run with seed `s` draws everything (RIS-side fading, pilot
//! noise) from ChaCha8 stream `t` of key `s`, so a trial is reproducible on
//! its own regardless of how trials are scheduled. Trials are grouped into
//! fixed-size chunks whose partial moments are merged in chunk order, which
//! makes the sequential and parallel paths bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{ergodic_mmse, lambda_from_powers, PowerSplit};
use crate::channel::{sample_cascade_channel, CascadeStatistics};
use crate::error::{invalid, Result};
use crate::estimation::{
    conditional_stats, ls_estimate, pilot_noise_scale, rank1_conditional_stats, simulate_pilot_observation,
    EstimationStatistics, PilotSequence,
};
use crate::exec::Execution;
use crate::geometry::SteeringVector;
use crate::linalg::{complex_normal, complex_normal_vector, numerical_rank, outer, relative_frobenius, CMatrix, CVector};
use crate::receiver::PreparedReceiver;

/// Pass threshold on `|z|` for closed-form validation.
pub const Z_LIMIT: f64 = 4.0;

/// Kolmogorov–Smirnov critical coefficient at α = 0.01.
pub const KS_COEFFICIENT: f64 = 1.63;

const CHUNK: usize = 1024;

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Seed for grid point `index`; point 0 keeps the base seed.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One uplink link: cascade statistics, pilot sequence and the two powers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cascade: CascadeStatistics,
    pub pilot: PilotSequence,
    pub pilot_power: f64,
    pub data_power: f64,
}

impl Scenario {
    pub fn new(cascade: CascadeStatistics, pilot: PilotSequence, pilot_power: f64, data_power: f64) -> Result<Self> {
        if !(pilot_power > 0.0 && pilot_power.is_finite()) || !(data_power > 0.0 && data_power.is_finite()) {
            return invalid(format!("powers must be positive and finite, got P_p={pilot_power}, P_d={data_power}"));
        }
        Ok(Self { cascade, pilot, pilot_power, data_power })
    }

    /// Powers from a per-symbol split with `SNR = a / (ζ N_r N_b)`.
    pub fn with_aggregate_gain(
        cascade: CascadeStatistics,
        pilot: PilotSequence,
        aggregate_gain: f64,
        tau_c: u32,
        gamma_p: f64,
    ) -> Result<Self> {
        let gain = cascade.cascade_gain();
        if !(gain > 0.0) || !(aggregate_gain > 0.0) {
            return invalid("aggregate gain and cascade gain must be positive");
        }
        let split = PowerSplit::new(tau_c, gamma_p, aggregate_gain / gain)?;
        Self::new(cascade, pilot, split.pilot_power(), split.data_power())
    }

    pub fn tau_p(&self) -> usize {
        self.pilot.len()
    }

    pub fn pilot_noise_scale(&self) -> f64 {
        pilot_noise_scale(self.tau_p(), self.pilot_power)
    }

    pub fn lambda(&self) -> Result<f64> {
        lambda_from_powers(
            self.cascade.zeta(),
            self.cascade.n_r(),
            self.cascade.n_b(),
            self.pilot_power,
            self.data_power,
            self.tau_p(),
        )
    }

    pub fn closed_form_mmse(&self) -> Result<f64> {
        ergodic_mmse(self.lambda()?)
    }

    pub fn estimation_stats(&self) -> Result<EstimationStatistics> {
        conditional_stats(self.cascade.covariance(), self.pilot_noise_scale())
    }

    pub fn ensure_rank1(&self) -> Result<()> {
        let rank = numerical_rank(self.cascade.covariance(), 1e-10);
        if rank != 1 {
            return invalid(format!("cascade covariance has rank {rank}; the closed form needs rank 1"));
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<PreparedScenario<'_>> {
        self.cascade.correlation_factor()?;
        let stats = self.estimation_stats()?;
        let receiver = PreparedReceiver::new(&stats, self.data_power)?;
        Ok(PreparedScenario { scenario: self, receiver })
    }
}

/// Scenario with its per-run precomputations done.
#[derive(Debug)]
pub struct PreparedScenario<'a> {
    scenario: &'a Scenario,
    receiver: PreparedReceiver,
}

#[derive(Debug, Clone)]
pub struct TrialSample {
    pub h: CVector,
    pub h_hat: CVector,
    pub rho: f64,
    pub conditional_mmse: f64,
}

impl PreparedScenario<'_> {
    fn estimate(&self, seed: u64, trial: u64) -> Result<(CVector, CVector)> {
        let s = self.scenario;
        let mut rng = trial_rng(seed, trial);
        let h = sample_cascade_channel(&s.cascade, &mut rng)?;
        let y = simulate_pilot_observation(&h, &s.pilot, s.pilot_power, 1.0, &mut rng);
        let h_hat = ls_estimate(&y, &s.pilot, s.pilot_power)?;
        Ok((h, h_hat))
    }

    pub fn trial(&self, seed: u64, trial: u64) -> Result<TrialSample> {
        let (h, h_hat) = self.estimate(seed, trial)?;
        let out = self.receiver.evaluate(&h_hat)?;
        debug_assert!(
            (out.conditional_mmse - 1.0 / (1.0 + out.rho)).abs() <= 1e-8 / (1.0 + out.rho),
            "conditional MSE {} vs 1/(1+ρ) with ρ = {}",
            out.conditional_mmse,
            out.rho
        );
        Ok(TrialSample { h, h_hat, rho: out.rho, conditional_mmse: out.conditional_mmse })
    }

    pub fn rho(&self, seed: u64, trial: u64) -> Result<f64> {
        let (_, h_hat) = self.estimate(seed, trial)?;
        self.receiver.rho(&h_hat)
    }
}

/// Running count, mean and centered sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn sample_std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }

    fn standard_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sample_std() / (self.n as f64).sqrt()
        }
    }

    fn of(values: &[f64]) -> Moments {
        let mut m = Moments::default();
        values.iter().for_each(|&x| m.push(x));
        m
    }
}

fn z_score(estimate: f64, target: f64, standard_error: f64) -> f64 {
    let diff = estimate - target;
    if standard_error > 0.0 {
        diff / standard_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trials: u64,
    pub empirical_mean: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

impl TrialReport {
    pub fn passes(&self) -> bool {
        self.z_score.abs() < Z_LIMIT
    }
}

/// Mean conditional MSE over `trials` simulated coherence blocks, compared
/// against `(1/λ)e^{1/λ}E₁(1/λ)`.
pub fn empirical_ergodic_mmse(scenario: &Scenario, trials: u64, seed: u64, exec: Execution) -> Result<TrialReport> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let closed_form = scenario.closed_form_mmse()?;
    let prepared = scenario.prepare()?;
    let chunks = (trials as usize).div_ceil(CHUNK);
    let partials = exec.map_indexed(chunks, |k| -> Result<Moments> {
        let start = (k * CHUNK) as u64;
        let end = (start + CHUNK as u64).min(trials);
        let mut m = Moments::default();
        for t in start..end {
            m.push(prepared.trial(seed, t)?.conditional_mmse);
        }
        Ok(m)
    });
    let mut total = Moments::default();
    for p in partials {
        total = total.merge(p?);
    }
    let standard_error = total.standard_error();
    Ok(TrialReport {
        trials,
        empirical_mean: total.mean,
        standard_error,
        closed_form,
        z_score: z_score(total.mean, closed_form, standard_error),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialityReport {
    pub trials: u64,
    pub sample_mean: f64,
    pub sample_second_moment: f64,
    pub lambda_closed_form: f64,
    pub mean_z: f64,
    pub second_moment_z: f64,
    pub ks_statistic: Option<f64>,
    /// `1.63/√n`, reported alongside the statistic.
    pub ks_threshold: Option<f64>,
}

impl ExponentialityReport {
    /// Moment check at `|z| < limit`.
    pub fn moments_pass(&self, limit: f64) -> bool {
        self.mean_z.abs() < limit && self.second_moment_z.abs() < limit
    }

    /// `None` when the KS statistic was not requested.
    pub fn ks_passes(&self) -> Option<bool> {
        Some(self.ks_statistic? < self.ks_threshold?)
    }
}

/// Samples of `ρ` for a rank-1 scenario and their agreement with an
/// exponential law of mean `λ` (second moment `2λ²`).
pub fn sample_rho(
    scenario: &Scenario,
    trials: u64,
    seed: u64,
    exec: Execution,
    with_ks: bool,
) -> Result<(Vec<f64>, ExponentialityReport)> {
    scenario.ensure_rank1()?;
    if trials < 2 {
        return invalid("need at least two trials");
    }
    let lambda = scenario.lambda()?;
    let prepared = scenario.prepare()?;
    let chunks = (trials as usize).div_ceil(CHUNK);
    let per_chunk = exec.map_indexed(chunks, |k| -> Result<Vec<f64>> {
        let start = (k * CHUNK) as u64;
        let end = (start + CHUNK as u64).min(trials);
        (start..end).map(|t| prepared.rho(seed, t)).collect()
    });
    let mut samples = Vec::with_capacity(trials as usize);
    for chunk in per_chunk {
        samples.extend(chunk?);
    }
    let first = Moments::of(&samples);
    let squares: Vec<f64> = samples.iter().map(|r| r * r).collect();
    let second = Moments::of(&squares);
    let ks_statistic = with_ks.then(|| ks_exponential(&samples, lambda));
    let report = ExponentialityReport {
        trials,
        sample_mean: first.mean,
        sample_second_moment: second.mean,
        lambda_closed_form: lambda,
        mean_z: z_score(first.mean, lambda, first.standard_error()),
        second_moment_z: z_score(second.mean, 2.0 * lambda * lambda, second.standard_error()),
        ks_statistic,
        ks_threshold: with_ks.then(|| KS_COEFFICIENT / (trials as f64).sqrt()),
    };
    Ok((samples, report))
}

/// `sup |F_n(x) − (1 − e^{−x/λ})|`.
fn ks_exponential(samples: &[f64], lambda: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-x / lambda).exp_m1();
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// One report per grid point; point `i` runs with [`point_seed`]`(seed, i)`.
pub fn validate_closed_form(
    grid: &[Scenario],
    trials_per_point: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<TrialReport>> {
    if grid.is_empty() {
        return invalid("validation grid is empty");
    }
    grid.iter()
        .enumerate()
        .map(|(i, s)| empirical_ergodic_mmse(s, trials_per_point, point_seed(seed, i), exec))
        .collect()
}

/// Outcome of a randomized matrix-identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: u64,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteReport {
    fn from_errors(errors: Vec<Result<f64>>, tolerance: f64) -> Result<Self> {
        let cases = errors.len() as u64;
        let mut worst = 0.0f64;
        for e in errors {
            let e = e?;
            // NaN must fail, so avoid f64::max
            worst = if e.is_nan() || e > worst { e } else { worst };
        }
        Ok(Self { cases, max_relative_error: worst, tolerance, passed: worst < tolerance })
    }
}

const SUITE_ANTENNAS: [usize; 4] = [1, 2, 4, 10];

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

/// Per-realization identity `MSE(w*) = 1/(1+ρ)` over random scenarios:
/// `N_b ∈ {1, 2, 4, 10}`, random-rank PSD covariance, random powers, one
/// pilot symbol. The MSE is expanded term by term for the computed filter.
pub fn mse_identity_suite(cases: u64, seed: u64, exec: Execution) -> Result<SuiteReport> {
    let errors = exec.map_indexed(cases as usize, |i| -> Result<f64> {
        let mut rng = trial_rng(seed, i as u64);
        let n_b = SUITE_ANTENNAS[rng.random_range(0..SUITE_ANTENNAS.len())];
        let rank = rng.random_range(1..=n_b);
        let scale = log_uniform(&mut rng, -1.0, 1.0);
        let a = CMatrix::from_fn(n_b, rank, |_, _| complex_normal(&mut rng, scale));
        let c = &a * a.adjoint();
        let pilot_power = log_uniform(&mut rng, -2.0, 2.0);
        let data_power = log_uniform(&mut rng, -2.0, 2.0);
        let s = pilot_noise_scale(1, pilot_power);
        let h = &a * complex_normal_vector(&mut rng, rank, 1.0);
        let h_hat = h + complex_normal_vector(&mut rng, n_b, s);
        let receiver = PreparedReceiver::new(&conditional_stats(&c, s)?, data_power)?;
        let w = receiver.filter(&h_hat)?;
        let mse = receiver.mse_of(&w, &h_hat)?;
        let rho = receiver.rho(&h_hat)?;
        Ok((mse - 1.0 / (1.0 + rho)).abs() * (1.0 + rho))
    });
    SuiteReport::from_errors(errors, 1e-8)
}

/// Rank-1 closed forms against the general path on `C = ζ N_r N_b u uᴴ`,
/// worst relative Frobenius error over `R`, `D` and `Q`.
pub fn rank1_suite(cases: u64, seed: u64, exec: Execution) -> Result<SuiteReport> {
    let errors = exec.map_indexed(cases as usize, |i| -> Result<f64> {
        let mut rng = trial_rng(seed, i as u64);
        let n_b = SUITE_ANTENNAS[rng.random_range(0..SUITE_ANTENNAS.len())];
        let n_r = rng.random_range(1..=1024);
        let zeta = log_uniform(&mut rng, -2.0, 1.0);
        let u = SteeringVector::from_vector(complex_normal_vector(&mut rng, n_b, 1.0))?;
        let kappa = zeta * (n_r * n_b) as f64;
        // Pilot SNR κ/s between −30 and 50 dB. Rounding in C alone perturbs D by ~ε·κ/s.
        let s = kappa / log_uniform(&mut rng, -3.0, 5.0);
        let c = outer(u.as_vector(), u.as_vector()).scale(kappa);
        let general = conditional_stats(&c, s)?;
        let closed = rank1_conditional_stats(zeta, n_r, n_b, &u, s)?.stats;
        Ok(relative_frobenius(&general.r, &closed.r)
            .max(relative_frobenius(&general.d, &closed.d))
            .max(relative_frobenius(&general.q, &closed.q)))
    });
    SuiteReport::from_errors(errors, 1e-10)
}
