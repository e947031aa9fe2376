//! Planar array geometry, plane-wave steering vectors and the isotropic
//! scattering correlation of a RIS.
//!
//! Positions are measured in carrier wavelengths. Arrays lie in the y–z plane
//! with element `(row, col)` at `(0, col·d, row·d)`, stored row-major so that
//! element `n = row·cols + col`. Every module that indexes RIS elements
//! (phase vectors, `C_r`, the coupling matrix) uses this ordering.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Eigenvalues in `[−CLAMP_TOLERANCE·λ_max, 0)` are treated as round-off.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
    spacing: f64,
    positions: Vec<[f64; 3]>,
}

/// Full `rows × cols` grid at the given spacing (in wavelengths).
pub fn planar_array_positions(rows: usize, cols: usize, spacing: f64) -> Result<ArrayGeometry> {
    if rows == 0 || cols == 0 {
        return invalid(format!("array dimensions must be positive, got {rows}x{cols}"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return invalid(format!("element spacing must be positive, got {spacing}"));
    }
    Ok(ArrayGeometry::grid(rows, cols, spacing, rows * cols))
}

impl ArrayGeometry {
    fn grid(rows: usize, cols: usize, spacing: f64, count: usize) -> Self {
        let positions = (0..count)
            .map(|n| {
                let (r, c) = (n / cols, n % cols);
                [0.0, c as f64 * spacing, r as f64 * spacing]
            })
            .collect();
        Self { rows, cols, spacing, positions }
    }

    /// An approximately square array of exactly `count` elements: a
    /// `⌈√count⌉`-wide grid filled row-major, so only the last row may be
    /// partial. For perfect squares this is the full square grid.
    pub fn square(count: usize, spacing: f64) -> Result<Self> {
        if count == 0 {
            return invalid("element count must be positive");
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return invalid(format!("element spacing must be positive, got {spacing}"));
        }
        let mut side = (count as f64).sqrt() as usize;
        while side * side < count {
            side += 1;
        }
        Ok(Self::grid(count.div_ceil(side), side, spacing, count))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, n: usize, m: usize) -> f64 {
        let (p, q) = (self.positions[n], self.positions[m]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

/// Unit-norm plane-wave response of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(CVector);

impl SteeringVector {
    /// Wraps an arbitrary vector after normalizing it to unit norm.
    pub fn from_vector(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return invalid("steering vector must have nonzero finite norm");
        }
        Ok(Self(v.unscale(norm)))
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
}

/// Unit propagation direction for azimuth (from +x towards +y) and elevation
/// (towards +z).
pub fn direction(azimuth: f64, elevation: f64) -> [f64; 3] {
    [
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    ]
}

pub fn steering_vector(geometry: &ArrayGeometry, azimuth: f64, elevation: f64) -> SteeringVector {
    let k = direction(azimuth, elevation);
    let amp = 1.0 / (geometry.len() as f64).sqrt();
    let v = CVector::from_iterator(
        geometry.len(),
        geometry.positions().iter().map(|p| {
            let phase = -2.0 * PI * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2]);
            Complex64::from_polar(amp, phase)
        }),
    );
    SteeringVector(v)
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Clamped eigen-decomposition of a correlation matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending, all `≥ 0`.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// How many slightly negative eigenvalues were clamped to zero.
    pub clipped: usize,
}

/// Real symmetric spatial correlation matrix of an array.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    spectrum: OnceLock<std::result::Result<Spectrum, Error>>,
}

impl CorrelationMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return invalid("correlation matrix must be square and nonempty");
        }
        let scale = entries.norm().max(f64::MIN_POSITIVE);
        if (&entries - entries.transpose()).norm() > 1e-12 * scale {
            return invalid("correlation matrix must be symmetric");
        }
        Ok(Self { entries, spectrum: OnceLock::new() })
    }

    /// Uncorrelated elements.
    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n), spectrum: OnceLock::new() }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn to_complex(&self) -> CMatrix {
        self.entries.map(Complex64::from)
    }

    /// Computed on first use; dense RIS layouts make this the expensive part.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        self.spectrum
            .get_or_init(|| clamped_spectrum(&self.entries))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn clipped_eigenvalues(&self) -> Result<usize> {
        Ok(self.spectrum()?.clipped)
    }

    /// `F` with `F Fᴴ = C` built from the strictly positive clamped
    /// eigenpairs; `N × r` with `r` the numerical rank (possibly zero).
    pub fn factor(&self) -> Result<CMatrix> {
        let s = self.spectrum()?;
        let keep: Vec<usize> = (0..s.eigenvalues.len()).filter(|&i| s.eigenvalues[i] > 0.0).collect();
        Ok(CMatrix::from_fn(self.len(), keep.len(), |r, c| {
            let i = keep[c];
            Complex64::from(s.eigenvectors[(r, i)] * s.eigenvalues[i].sqrt())
        }))
    }
}

fn clamped_spectrum(entries: &DMatrix<f64>) -> std::result::Result<Spectrum, Error> {
    let eig = SymmetricEigen::new(entries.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let top = eig.eigenvalues.max().max(0.0);
    let mut clipped = 0;
    let mut eigenvalues = Vec::with_capacity(order.len());
    for &i in &order {
        let v = eig.eigenvalues[i];
        if v < -CLAMP_TOLERANCE * top {
            return Err(Error::InvalidArgument(format!(
                "correlation matrix is indefinite (eigenvalue {v:e}, max {top:e})"
            )));
        }
        if v < 0.0 {
            clipped += 1;
            eigenvalues.push(0.0);
        } else {
            eigenvalues.push(v);
        }
    }
    let eigenvectors = DMatrix::from_fn(entries.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { eigenvalues, eigenvectors, clipped })
}

/// `c_nm = sinc(2‖p_n − p_m‖)` with positions in wavelengths.
pub fn isotropic_correlation(geometry: &ArrayGeometry) -> CorrelationMatrix {
    let n = geometry.len();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            sinc(2.0 * geometry.distance(i, j))
        }
    });
    CorrelationMatrix { entries, spectrum: OnceLock::new() }
}
