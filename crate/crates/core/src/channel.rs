//! Cascade MS → RIS → BS channel: rank-1 line-of-sight BS–RIS link,
//! statistical RIS configuration, effective gain `ζ` and channel sampling.
//!
//! The large-scale gain and noise power are normalized to one; link budget
//! enters only through the transmit powers.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{CorrelationMatrix, SteeringVector};
use crate::linalg::{complex_normal_vector, relative_frobenius, CMatrix, CVector};

/// Unit-modulus RIS reflection coefficients `ψ`, with `Ψ = diag(ψ)`.
///
/// Angles follow the `ψ_n = e^{−jθ_n}` convention: [`PhaseShifts::from_angles`]
/// and [`PhaseShifts::angles`] convert between the two.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts(CVector);

impl PhaseShifts {
    pub fn new(values: CVector) -> Result<Self> {
        if values.is_empty() {
            return invalid("phase vector must be nonempty");
        }
        for (i, z) in values.iter().enumerate() {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return invalid(format!("phase entry {i} has modulus {}", z.norm()));
            }
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(CVector::from_element(n, Complex64::new(1.0, 0.0)))
    }

    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(
            angles.len(),
            angles.iter().map(|&t| Complex64::from_polar(1.0, -t)),
        ))
    }

    /// `θ_n ∈ (−π, π]` with `ψ_n = e^{−jθ_n}`.
    pub fn angles(&self) -> Vec<f64> {
        // `+ 0.0` folds −0.0 into 0.0 so exported vectors are sign-clean.
        self.0.iter().map(|z| (-z.arg()) + 0.0).map(wrap_angle).collect()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Projects every entry back onto the unit circle.
    pub(crate) fn from_unnormalized(values: CVector) -> Self {
        Self(values.map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) }))
    }
}

fn wrap_angle(t: f64) -> f64 {
    use std::f64::consts::PI;
    if t <= -PI {
        t + 2.0 * PI
    } else if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// `H = √(N_r N_b) · u vᴴ`.
pub fn los_channel(u: &SteeringVector, v: &SteeringVector) -> CMatrix {
    let scale = ((u.len() * v.len()) as f64).sqrt();
    (u.as_vector() * v.as_vector().adjoint()).scale(scale)
}

/// `ζ = Re(vᴴ Ψ C_r Ψ* v)`.
pub fn effective_gain_zeta(v: &SteeringVector, phases: &PhaseShifts, correlation: &CorrelationMatrix) -> Result<f64> {
    let n = v.len();
    if phases.len() != n || correlation.len() != n {
        return invalid(format!(
            "dimension mismatch: v has {n} entries, phases {}, correlation {}",
            phases.len(),
            correlation.len()
        ));
    }
    // x = Ψ* v, so ζ = xᴴ C_r x
    let x: Vec<Complex64> = (0..n).map(|i| phases.0[i].conj() * v.as_vector()[i]).collect();
    let c = correlation.entries();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += x[j] * c[(i, j)];
        }
        acc += x[i].conj() * row;
    }
    let magnitude = acc.norm();
    if acc.im.abs() > 1e-12 * magnitude.max(f64::MIN_POSITIVE) {
        return Err(Error::InternalConsistency(format!("ζ has imaginary residue {:e}", acc.im)));
    }
    if acc.re < 0.0 {
        if acc.re < -1e-12 * c.norm() {
            return invalid(format!("negative effective gain {:e}: correlation is not PSD", acc.re));
        }
        return Ok(0.0);
    }
    Ok(acc.re)
}

/// Cascade covariance computed as the full product `H Ψ C_r Ψ* Hᴴ` and as the
/// rank-1 form `ζ N_r N_b u uᴴ`; the two must agree to `1e−10` relative
/// Frobenius error. Returns the rank-1 form.
pub fn cascade_covariance(
    u: &SteeringVector,
    v: &SteeringVector,
    phases: &PhaseShifts,
    correlation: &CorrelationMatrix,
    zeta: f64,
) -> Result<CMatrix> {
    let h = los_channel(u, v);
    let n_r = v.len();
    let psi = phases.as_vector();
    let c = correlation.entries();
    let inner = CMatrix::from_fn(n_r, n_r, |i, j| psi[i] * c[(i, j)] * psi[j].conj());
    let full = &h * inner * h.adjoint();
    let rank1 = (u.as_vector() * u.as_vector().adjoint()).scale(zeta * (n_r * u.len()) as f64);
    let err = relative_frobenius(&full, &rank1);
    if err > 1e-10 && full.norm().max(rank1.norm()) > 1e-300 {
        return Err(Error::InternalConsistency(format!(
            "cascade covariance paths disagree (relative error {err:e})"
        )));
    }
    Ok(rank1)
}

#[derive(Debug, Clone)]
pub struct CascadeStatistics {
    u: SteeringVector,
    v: SteeringVector,
    phases: PhaseShifts,
    ris_correlation: CorrelationMatrix,
    zeta: f64,
    los: CMatrix,
    covariance: CMatrix,
    factor: OnceLock<std::result::Result<CMatrix, Error>>,
}

impl CascadeStatistics {
    /// `u` is the BS steering vector (length `N_b`), `v` the RIS one (length `N_r`).
    pub fn new(
        u: SteeringVector,
        v: SteeringVector,
        phases: PhaseShifts,
        ris_correlation: CorrelationMatrix,
    ) -> Result<Self> {
        let zeta = effective_gain_zeta(&v, &phases, &ris_correlation)?;
        let covariance = cascade_covariance(&u, &v, &phases, &ris_correlation, zeta)?;
        let los = los_channel(&u, &v);
        Ok(Self { u, v, phases, ris_correlation, zeta, los, covariance, factor: OnceLock::new() })
    }

    pub fn u(&self) -> &SteeringVector {
        &self.u
    }

    pub fn v(&self) -> &SteeringVector {
        &self.v
    }

    pub fn phases(&self) -> &PhaseShifts {
        &self.phases
    }

    pub fn ris_correlation(&self) -> &CorrelationMatrix {
        &self.ris_correlation
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn los(&self) -> &CMatrix {
        &self.los
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    pub fn n_b(&self) -> usize {
        self.u.len()
    }

    pub fn n_r(&self) -> usize {
        self.v.len()
    }

    /// `ζ N_r N_b`, the only nonzero eigenvalue of `C`.
    pub fn cascade_gain(&self) -> f64 {
        self.zeta * (self.n_r() * self.n_b()) as f64
    }

    /// `F` with `F Fᴴ = C_r`, from the clamped eigen-decomposition.
    pub fn correlation_factor(&self) -> Result<&CMatrix> {
        self.factor
            .get_or_init(|| self.ris_correlation.factor())
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Draws `h = H Ψ h_r` with `h_r = F z`, `z ~ CN(0, I_r)`.
pub fn sample_cascade_channel<R: Rng + ?Sized>(stats: &CascadeStatistics, rng: &mut R) -> Result<CVector> {
    let f = stats.correlation_factor()?;
    let z = complex_normal_vector(rng, f.ncols(), 1.0);
    let h_r = f * z;
    let reflected = h_r.component_mul(stats.phases.as_vector());
    Ok(&stats.los * reflected)
}
