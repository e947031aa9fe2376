//! The actual MMSE receiver: a combiner that accounts for the conditional
//! distribution of the channel given its estimate, its conditional MSE and
//! the post-combining SNR `ρ`.
//!
//! The conditional MSE is evaluated term by term rather than through
//! `1/(1+ρ)`, so the identity between them stays a checkable property.

use nalgebra::{Cholesky, Dyn};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::estimation::EstimationStatistics;
use crate::linalg::{hermitian_part, CMatrix, CVector};

#[derive(Debug, Clone)]
pub struct ReceiverOutput {
    pub filter: CVector,
    pub conditional_mmse: f64,
    pub rho: f64,
}

/// The two expectations whose symmetry collapses the conditional MSE to
/// `1/(1+ρ)`: `√P_d wᴴ D ĥ` and `P_d wᴴ (Dĥĥᴴ Dᴴ + Q + I/P_d) w`.
#[derive(Debug, Clone, Copy)]
pub struct MseTerms {
    pub cross: f64,
    pub quadratic: f64,
}

/// Receiver bound to one set of conditional statistics and a data power;
/// factors `Q + I/P_d` once for repeated evaluations.
#[derive(Debug, Clone)]
pub struct PreparedReceiver {
    d: CMatrix,
    q: CMatrix,
    data_power: f64,
    regularized_q: Cholesky<Complex64, Dyn>,
}

impl PreparedReceiver {
    pub fn new(stats: &EstimationStatistics, data_power: f64) -> Result<Self> {
        if !(data_power > 0.0 && data_power.is_finite()) {
            return invalid(format!("data power must be positive, got {data_power}"));
        }
        let n = stats.q.nrows();
        let q = hermitian_part(&stats.q);
        let a = &q + CMatrix::identity(n, n).unscale(data_power);
        let regularized_q = a
            .cholesky()
            .ok_or_else(|| Error::InternalConsistency("Q + I/P_d is not positive definite".into()))?;
        Ok(Self { d: stats.d.clone(), q, data_power, regularized_q })
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    fn conditional_mean(&self, h_hat: &CVector) -> Result<CVector> {
        if h_hat.len() != self.dim() {
            return invalid(format!("estimate has {} entries, expected {}", h_hat.len(), self.dim()));
        }
        Ok(&self.d * h_hat)
    }

    /// `w = √P_d (P_d(Dĥĥᴴ Dᴴ + Q) + I)⁻¹ D ĥ`.
    pub fn filter(&self, h_hat: &CVector) -> Result<CVector> {
        let g = self.conditional_mean(h_hat)?;
        let n = g.len();
        let p = self.data_power;
        let system = (&g * g.adjoint() + &self.q).scale(p) + CMatrix::identity(n, n);
        let chol = hermitian_part(&system)
            .cholesky()
            .ok_or_else(|| Error::InternalConsistency("receiver system is not positive definite".into()))?;
        Ok(chol.solve(&g).scale(p.sqrt()))
    }

    /// Conditional MSE of `w`, expanded term by term.
    pub fn conditional_mmse(&self, h_hat: &CVector) -> Result<f64> {
        let w = self.filter(h_hat)?;
        self.mse_of(&w, h_hat)
    }

    /// `E[|wᴴ y_d − x|² | ĥ]` for an arbitrary combiner `w`.
    pub fn mse_of(&self, w: &CVector, h_hat: &CVector) -> Result<f64> {
        let g = self.conditional_mean(h_hat)?;
        let p = self.data_power;
        let wg = w.dotc(&g);
        let signal = p * (wg.norm_sqr() + w.dotc(&(&self.q * w)).re);
        let cross = p.sqrt() * 2.0 * wg.re;
        Ok(signal - cross + w.norm_squared() + 1.0)
    }

    /// `ρ = ĥᴴ Dᴴ (Q + I/P_d)⁻¹ D ĥ`.
    pub fn rho(&self, h_hat: &CVector) -> Result<f64> {
        let g = self.conditional_mean(h_hat)?;
        let value = g.dotc(&self.regularized_q.solve(&g));
        if value.im.abs() > 1e-12 * value.re.abs().max(f64::MIN_POSITIVE) && value.im.abs() > 1e-300 {
            return Err(Error::InternalConsistency(format!("ρ has imaginary residue {:e}", value.im)));
        }
        Ok(value.re.max(0.0))
    }

    pub fn terms(&self, h_hat: &CVector) -> Result<MseTerms> {
        let w = self.filter(h_hat)?;
        let g = self.conditional_mean(h_hat)?;
        let p = self.data_power;
        let cross = (w.dotc(&g) * p.sqrt()).re;
        let n = g.len();
        let m = (&g * g.adjoint() + &self.q).scale(p) + CMatrix::identity(n, n);
        let quadratic = w.dotc(&(m * &w)).re;
        Ok(MseTerms { cross, quadratic })
    }

    pub fn evaluate(&self, h_hat: &CVector) -> Result<ReceiverOutput> {
        let filter = self.filter(h_hat)?;
        let conditional_mmse = self.mse_of(&filter, h_hat)?;
        let rho = self.rho(h_hat)?;
        Ok(ReceiverOutput { filter, conditional_mmse, rho })
    }
}

pub fn mmse_filter(h_hat: &CVector, stats: &EstimationStatistics, data_power: f64) -> Result<CVector> {
    PreparedReceiver::new(stats, data_power)?.filter(h_hat)
}

pub fn conditional_mmse(h_hat: &CVector, stats: &EstimationStatistics, data_power: f64) -> Result<f64> {
    PreparedReceiver::new(stats, data_power)?.conditional_mmse(h_hat)
}

pub fn post_snr_rho(h_hat: &CVector, stats: &EstimationStatistics, data_power: f64) -> Result<f64> {
    PreparedReceiver::new(stats, data_power)?.rho(h_hat)
}
