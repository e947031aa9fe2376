//! Closed-form layer: the exponential-distribution parameter `λ` of the
//! post-combining SNR, the ergodic MMSE `E[1/(1+ρ)] = (1/λ)e^{1/λ}E₁(1/λ)`,
//! and the pilot/data power split that maximizes `λ`.
//!
//! Large-scale gain and noise power are normalized to one throughout.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 1.0;
const CF_MAX_ITER: usize = 10_000;

/// `S(x) = eˣ E₁(x)` for `x > 0`.
///
/// Power series for `x ≤ 1`, modified Lentz continued fraction above. The
/// continued fraction yields `S` directly, so nothing overflows for large `x`.
pub fn e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return invalid(format!("exponential integral needs x > 0, got {x}"));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= SERIES_LIMIT {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(scaled_fraction(x, 0))
    }
}

/// `E₁(x) = −γ − ln x − Σ_{k≥1} (−x)^k/(k·k!)`.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (−x)^k / k!
    for k in 1..200 {
        term *= -x / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Evaluates `1/(b₀ + a₁/(b₁ + a₂/(b₂ + …)))` with `b_k = x + 2(k+s) + 1`,
/// `a_k = −(k+s)²` by the modified Lentz method.
///
/// `s = 0` gives `eˣE₁(x)`; `s = 1` gives the tail `T` in
/// `eˣE₁(x) = 1/(x + 1 − T)`.
fn scaled_fraction(x: f64, shift: usize) -> f64 {
    const TINY: f64 = 1e-300;
    let s = shift as f64;
    let mut b = x + 2.0 * s + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let k = i as f64 + s;
        let a = -k * k;
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `E[1/(1+ρ)]` for `ρ ~ Exp` with mean `λ`; equals one at `λ = 0`.
pub fn ergodic_mmse(lambda: f64) -> Result<f64> {
    if lambda < 0.0 || lambda.is_nan() {
        return invalid(format!("lambda must be nonnegative, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let x = 1.0 / lambda;
    Ok(x * e1_scaled(x)?)
}

/// `1 − E[1/(1+ρ)]`, accurate also when `λ` is tiny and the MMSE rounds to one.
pub fn ergodic_mmse_complement(lambda: f64) -> Result<f64> {
    if lambda < 0.0 || lambda.is_nan() {
        return invalid(format!("lambda must be nonnegative, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let x = 1.0 / lambda;
    if x <= SERIES_LIMIT {
        return Ok(1.0 - x * e1_scaled(x)?);
    }
    // 1 − x/(x + 1 − T) = (1 − T)/(x + 1 − T)
    let t = scaled_fraction(x, 1);
    Ok((1.0 - t) / (x + 1.0 - t))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSummary {
    pub lambda: f64,
    pub ergodic_mmse: f64,
    pub ergodic_mmse_db: f64,
}

impl ClosedFormSummary {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        let ergodic_mmse = ergodic_mmse(lambda)?;
        Ok(Self { lambda, ergodic_mmse, ergodic_mmse_db: to_db(ergodic_mmse) })
    }
}

/// `λ = κ² / (κ/(τ_p P_p) + κ/P_d + 1/(τ_p P_p P_d))`, `κ = ζ N_r N_b`.
pub fn lambda_from_powers(
    zeta: f64,
    n_r: usize,
    n_b: usize,
    pilot_power: f64,
    data_power: f64,
    tau_p: usize,
) -> Result<f64> {
    if !(zeta > 0.0 && pilot_power > 0.0 && data_power > 0.0) || n_r == 0 || n_b == 0 || tau_p == 0 {
        return invalid("lambda needs positive gain, array sizes, powers and pilot length");
    }
    let kappa = zeta * (n_r * n_b) as f64;
    let pilot_scale = 1.0 / (tau_p as f64 * pilot_power);
    let data_scale = 1.0 / data_power;
    Ok(kappa * kappa / (kappa * pilot_scale + kappa * data_scale + pilot_scale * data_scale))
}

/// Per-symbol power bookkeeping inside one coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    tau_c: u32,
    tau_p: u32,
    gamma_p: f64,
    gamma_d: f64,
    snr: f64,
}

impl PowerSplit {
    /// Single pilot symbol (`τ_p = 1`).
    pub fn new(tau_c: u32, gamma_p: f64, snr: f64) -> Result<Self> {
        Self::with_pilot_length(tau_c, 1, gamma_p, snr)
    }

    /// `γ_d` follows from `τ_p γ_p + (τ_c − τ_p) γ_d = τ_c`.
    pub fn with_pilot_length(tau_c: u32, tau_p: u32, gamma_p: f64, snr: f64) -> Result<Self> {
        if tau_p == 0 || tau_c <= tau_p {
            return invalid(format!("need 1 <= tau_p < tau_c, got tau_p={tau_p}, tau_c={tau_c}"));
        }
        let (tc, tp) = (tau_c as f64, tau_p as f64);
        if !(gamma_p > 0.0 && tp * gamma_p < tc) {
            return invalid(format!("gamma_p = {gamma_p} outside (0, {})", tc / tp));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return invalid(format!("snr must be positive, got {snr}"));
        }
        let gamma_d = (tc - tp * gamma_p) / (tc - tp);
        Ok(Self { tau_c, tau_p, gamma_p, gamma_d, snr })
    }

    pub fn tau_c(&self) -> u32 {
        self.tau_c
    }

    pub fn tau_p(&self) -> u32 {
        self.tau_p
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn gamma_d(&self) -> f64 {
        self.gamma_d
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn pilot_power(&self) -> f64 {
        self.gamma_p * self.snr
    }

    pub fn data_power(&self) -> f64 {
        self.gamma_d * self.snr
    }

    /// `γ_p / γ_d`.
    pub fn pdpr(&self) -> f64 {
        self.gamma_p / self.gamma_d
    }
}

/// `γ_d = (τ_c − γ_p)/(τ_c − 1)`.
pub fn data_ratio(gamma_p: f64, tau_c: u32) -> Result<f64> {
    if tau_c < 2 {
        return invalid(format!("tau_c must be at least 2, got {tau_c}"));
    }
    Ok(PowerSplit::new(tau_c, gamma_p, 1.0)?.gamma_d())
}

/// `λ` in terms of the aggregate gain `a` and the pilot ratio, in the
/// normalization where `λ(a) = λ_per_symbol(a/τ_c)`:
///
/// `λ = a² γ_p(τ_c − γ_p) / [(τ_c² + (τ_c − 2)τ_c γ_p) a + τ_c²(τ_c − 1)]`.
pub fn lambda_from_ratio(aggregate_gain: f64, split: &PowerSplit) -> Result<f64> {
    if split.tau_p != 1 {
        return invalid("lambda_from_ratio assumes a single pilot symbol");
    }
    if !(aggregate_gain > 0.0) {
        return invalid(format!("aggregate gain must be positive, got {aggregate_gain}"));
    }
    let tc = split.tau_c as f64;
    let g = split.gamma_p;
    let a = aggregate_gain;
    Ok(a * a * g * (tc - g) / ((tc * tc + (tc - 2.0) * tc * g) * a + tc * tc * (tc - 1.0)))
}

/// `λ` with `P_p = γ_p·SNR`, `P_d = γ_d·SNR` substituted into the power form,
/// `a = ζ N_r N_b SNR`. The equal-power point `γ_p = 1` is then independent of `τ_c`.
pub fn lambda_per_symbol(aggregate_gain: f64, split: &PowerSplit) -> Result<f64> {
    if split.tau_p != 1 {
        return invalid("lambda_per_symbol assumes a single pilot symbol");
    }
    if !(aggregate_gain > 0.0) {
        return invalid(format!("aggregate gain must be positive, got {aggregate_gain}"));
    }
    let a = aggregate_gain;
    let (gp, gd) = (split.gamma_p, split.gamma_d);
    Ok(a * a / ((1.0 / gp + 1.0 / gd) * a + 1.0 / (gp * gd)))
}

/// Which normalization of the aggregate gain a sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaForm {
    /// [`lambda_from_ratio`].
    #[default]
    AsPrinted,
    /// [`lambda_per_symbol`].
    PerSymbol,
}

impl LambdaForm {
    pub fn lambda(self, aggregate_gain: f64, split: &PowerSplit) -> Result<f64> {
        match self {
            LambdaForm::AsPrinted => lambda_from_ratio(aggregate_gain, split),
            LambdaForm::PerSymbol => lambda_per_symbol(aggregate_gain, split),
        }
    }

    /// Maximizer of [`LambdaForm::lambda`] over `γ_p`; closed form for
    /// `τ_c ≥ 3`, golden-section search for `τ_c = 2`.
    pub fn optimal_pilot_ratio(self, aggregate_gain: f64, tau_c: u32) -> Result<f64> {
        let a = match self {
            LambdaForm::AsPrinted => aggregate_gain,
            LambdaForm::PerSymbol => aggregate_gain * tau_c as f64,
        };
        match optimal_pilot_ratio(a, tau_c) {
            Err(Error::UnsupportedClosedForm { .. }) => optimal_pilot_ratio_numeric(a, tau_c),
            other => other,
        }
    }
}

/// Closed-form optimal pilot ratio `γ_p*` maximizing [`lambda_from_ratio`]:
///
/// `γ_p* = [τ_c(1−τ_c)/a − τ_c + τ_c √((τ_c−1)²/a² + ((τ_c−1)² + τ_c − 1)/a + τ_c − 1)] / (τ_c − 2)`.
pub fn optimal_pilot_ratio(aggregate_gain: f64, tau_c: u32) -> Result<f64> {
    if tau_c < 3 {
        return Err(Error::UnsupportedClosedForm { tau_c });
    }
    if !(aggregate_gain > 0.0) {
        return invalid(format!("aggregate gain must be positive, got {aggregate_gain}"));
    }
    let tc = tau_c as f64;
    let a = aggregate_gain;
    let m = tc - 1.0;
    let root = (m * m / (a * a) + (m * m + m) / a + m).sqrt();
    let gamma = (tc * (1.0 - tc) / a - tc + tc * root) / (tc - 2.0);
    let lo = tc * f64::EPSILON;
    Ok(gamma.clamp(lo, tc - lo))
}

/// Golden-section maximization of [`lambda_from_ratio`] over `γ_p ∈ (0, τ_c)`.
pub fn optimal_pilot_ratio_numeric(aggregate_gain: f64, tau_c: u32) -> Result<f64> {
    if tau_c < 2 {
        return invalid(format!("tau_c must be at least 2, got {tau_c}"));
    }
    if !(aggregate_gain > 0.0) {
        return invalid(format!("aggregate gain must be positive, got {aggregate_gain}"));
    }
    let tc = tau_c as f64;
    let objective = |g: f64| {
        PowerSplit::new(tau_c, g, 1.0)
            .and_then(|s| lambda_from_ratio(aggregate_gain, &s))
            .map(|l| -l)
            .unwrap_or(f64::INFINITY)
    };
    Ok(golden_section_min(objective, tc * 1e-12, tc * (1.0 - 1e-12), 1e-10 * tc))
}

pub(crate) fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Low- and high-SNR limits of the optimal PDPR `γ_p*/γ_d*`: `(τ_c − 1, √(τ_c − 1))`.
pub fn pdpr_limits(tau_c: u32) -> Result<(f64, f64)> {
    if tau_c < 2 {
        return invalid(format!("tau_c must be at least 2, got {tau_c}"));
    }
    let m = tau_c as f64 - 1.0;
    Ok((m, m.sqrt()))
}

/// Limits of `γ_p*` itself: `τ_c/2` as SNR → 0 and `τ_c/(1 + √(τ_c − 1))` as SNR → ∞.
pub fn pilot_ratio_limits(tau_c: u32) -> Result<(f64, f64)> {
    if tau_c < 2 {
        return invalid(format!("tau_c must be at least 2, got {tau_c}"));
    }
    let tc = tau_c as f64;
    Ok((tc / 2.0, tc / (1.0 + (tc - 1.0).sqrt())))
}
