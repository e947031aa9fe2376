//! Pilot model, least-squares estimation and the conditional distribution
//! `h | ĥ ~ CN(D ĥ, Q)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::SteeringVector;
use crate::linalg::{check_psd, complex_normal, hermitian_part, hpd_solve, outer, CMatrix, CVector};

/// Unit-modulus pilot sequence of length `τ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSequence {
    symbols: CVector,
    root: u32,
}

impl PilotSequence {
    pub fn symbols(&self) -> &CVector {
        &self.symbols
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Odd-length Zadoff–Chu sequence `s_j = exp(−iπ r j(j+1)/L)`.
pub fn zadoff_chu(length: usize, root: u32) -> Result<PilotSequence> {
    if length == 0 || length.is_multiple_of(2) {
        return invalid(format!("Zadoff-Chu length must be odd and positive, got {length}"));
    }
    if gcd(root as u64, length as u64) != 1 {
        return invalid(format!("root {root} is not coprime to length {length}"));
    }
    let l = length as u64;
    let symbols = CVector::from_fn(length, |j, _| {
        // reduce r·j(j+1)/2 mod L exactly; j(j+1) is even
        let j = j as u64;
        let k = ((root as u64 % l) * ((j * (j + 1) / 2) % l)) % l;
        Complex64::from_polar(1.0, -2.0 * PI * k as f64 / length as f64)
    });
    Ok(PilotSequence { symbols, root })
}

/// `Y_p = √P_p h sᵀ + N_p`, `N_p` i.i.d. `CN(0, noise_variance)`.
pub fn simulate_pilot_observation<R: Rng + ?Sized>(
    h: &CVector,
    pilot: &PilotSequence,
    pilot_power: f64,
    noise_variance: f64,
    rng: &mut R,
) -> CMatrix {
    let amp = pilot_power.sqrt();
    let s = pilot.symbols();
    CMatrix::from_fn(h.len(), s.len(), |i, j| {
        let clean = h[i] * s[j] * amp;
        if noise_variance > 0.0 {
            clean + complex_normal(rng, noise_variance)
        } else {
            clean
        }
    })
}

/// `ĥ = Y_p s* / (√P_p τ_p)`.
pub fn ls_estimate(observation: &CMatrix, pilot: &PilotSequence, pilot_power: f64) -> Result<CVector> {
    if observation.ncols() != pilot.len() {
        return invalid(format!(
            "observation has {} columns but pilot length is {}",
            observation.ncols(),
            pilot.len()
        ));
    }
    let correlated = observation * pilot.symbols().conjugate();
    Ok(correlated.unscale(pilot_power.sqrt() * pilot.len() as f64))
}

/// `σ²/(α² τ_p P_p)` with `α = σ = 1`: the per-entry variance of `ĥ − h`.
pub fn pilot_noise_scale(tau_p: usize, pilot_power: f64) -> f64 {
    1.0 / (tau_p as f64 * pilot_power)
}

/// Second-order statistics of the estimate and of the channel given it.
#[derive(Debug, Clone)]
pub struct EstimationStatistics {
    /// Covariance of `ĥ`.
    pub r: CMatrix,
    /// `C R⁻¹`.
    pub d: CMatrix,
    /// `C − C R⁻¹ C`.
    pub q: CMatrix,
    pub pilot_noise_scale: f64,
}

/// General-matrix path: `R = C + sI`, `D = C R⁻¹`, `Q = C − C R⁻¹ C`.
pub fn conditional_stats(c: &CMatrix, pilot_noise_scale: f64) -> Result<EstimationStatistics> {
    if !(pilot_noise_scale > 0.0) {
        return invalid(format!("pilot noise scale must be positive, got {pilot_noise_scale}"));
    }
    check_psd(c, 1e-10, "cascade covariance")?;
    let n = c.nrows();
    let c = hermitian_part(c);
    let r = &c + CMatrix::identity(n, n).scale(pilot_noise_scale);
    // R⁻¹C via a Hermitian solve; D = C R⁻¹ = (R⁻¹ C)ᴴ
    let r_inv_c = hpd_solve(&r, &c)?;
    let d = r_inv_c.adjoint();
    // C − CR⁻¹C = s·CR⁻¹ since C and R commute; avoids cancellation when C ≫ sI
    let q = hermitian_part(&d.scale(pilot_noise_scale));
    Ok(EstimationStatistics { r, d, q, pilot_noise_scale })
}

/// Rank-1 closed forms for `C = κ u uᴴ`, `κ = ζ N_r N_b`.
#[derive(Debug, Clone)]
pub struct Rank1Statistics {
    pub stats: EstimationStatistics,
    pub r_inverse: CMatrix,
    /// `D R^{1/2} = (C R⁻¹ C)^{1/2}`.
    pub d_sqrt_r: CMatrix,
}

pub fn rank1_conditional_stats(
    zeta: f64,
    n_r: usize,
    n_b: usize,
    u: &SteeringVector,
    pilot_noise_scale: f64,
) -> Result<Rank1Statistics> {
    if !(zeta > 0.0) || !(pilot_noise_scale > 0.0) {
        return invalid("rank-1 statistics need zeta > 0 and a positive pilot noise scale");
    }
    if u.len() != n_b {
        return invalid(format!("steering vector has {} entries, expected {n_b}", u.len()));
    }
    let kappa = zeta * (n_r * n_b) as f64;
    let s = pilot_noise_scale;
    let p = outer(u.as_vector(), u.as_vector());
    let eye = CMatrix::identity(n_b, n_b);
    let r = p.scale(kappa) + eye.scale(s);
    let r_inverse = (&eye - p.scale(kappa / (kappa + s))).unscale(s);
    let d = p.scale(kappa / (kappa + s));
    let q = p.scale(kappa * s / (kappa + s));
    let d_sqrt_r = p.scale((kappa * kappa / (kappa + s)).sqrt());
    Ok(Rank1Statistics {
        stats: EstimationStatistics { r, d, q, pilot_noise_scale: s },
        r_inverse,
        d_sqrt_r,
    })
}
