//! Dense complex linear algebra for the small (2..9 dimensional) matrices
//! that appear in qubit and qutrit channel work.
//!
//! Every routine here is a pure function. Tolerances are explicit
//! arguments; the `DEFAULT_*` constants give the values used when a caller
//! does not care.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex matrix. All matrix symbols of the library live in this type.
pub type CMatrix = DMatrix<Complex64>;

/// Relative asymmetry accepted by [`eig_hermitian`].
pub const DEFAULT_TOL_HERM: f64 = 1e-12;
/// Relative eigenvalue gap below which [`func_of_3x3`] refuses to interpolate.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
/// Relative size of imaginary noise dropped by [`truncate_imag`].
pub const DEFAULT_IMAG_TOL: f64 = 1e-10;

const EIG_MAX_ITER: usize = 10_000;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds a complex matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x)))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

/// Largest entrywise deviation from Hermiticity, `max |m - m†|`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| c(x)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEigen> {
    eig_hermitian_with_tol(m, DEFAULT_TOL_HERM)
}

/// Hermitian eigendecomposition; `tol_herm` is relative to `max(1, ‖m‖)`.
pub fn eig_hermitian_with_tol(m: &CMatrix, tol_herm: f64) -> Result<HermitianEigen> {
    let n = ensure_square(m)?;
    let tolerance = tol_herm * norm(m).max(1.0);
    let asymmetry = hermitian_residual(m);
    if asymmetry > tolerance {
        return Err(Error::NonHermitianInput {
            asymmetry,
            tolerance,
        });
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a general square matrix via complex Schur form, sorted by
/// descending real part, ties broken by descending imaginary part.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    let mut values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    sort_spectrum(&mut values);
    Ok(values)
}

fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Matrix exponential `exp(t·m)`.
///
/// Scaling and squaring: the argument is halved until its norm is at most
/// 1/2, summed as a Taylor series to machine precision and squared back.
pub fn expm(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = ensure_square(m)?;
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t == 0.0 {
        return Ok(identity(n));
    }
    let a = m.scale(t);
    let a_norm = norm(&a);
    if !a_norm.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut squarings = 0u32;
    if a_norm > 0.5 {
        squarings = (a_norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a.scale(0.5f64.powi(squarings as i32));

    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=40 {
        term = &term * &scaled;
        term.scale_mut(1.0 / k as f64);
        sum += &term;
        if norm(&term) <= f64::EPSILON * 0.01 * norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if !is_finite(&sum) {
        return Err(Error::NonFinite);
    }
    Ok(sum)
}

/// Eigenvalues of a 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum3 {
    /// Sorted by descending real part, ties by descending imaginary part.
    pub xi: [Complex64; 3],
}

impl Spectrum3 {
    pub fn from_values(mut xi: [Complex64; 3]) -> Self {
        sort_spectrum(&mut xi);
        Spectrum3 { xi }
    }

    pub fn min_gap(&self) -> f64 {
        let [a, b, c] = self.xi;
        (a - b).norm().min((b - c).norm()).min((a - c).norm())
    }
}

pub fn spectrum3(m: &CMatrix) -> Result<Spectrum3> {
    if m.nrows() != 3 || m.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: m.nrows().max(m.ncols()),
        });
    }
    let v = eigenvalues(m)?;
    Ok(Spectrum3 {
        xi: [v[0], v[1], v[2]],
    })
}

/// Coefficients of `g(X) = g₀𝟙 + g₁X + g₂X²` for distinct eigenvalues.
///
/// Each coefficient is a sum over the three cyclic shifts of
/// `(ξ₁, ξ₂, ξ₃)`:
/// `g₀ = −ξ₂ξ₃ w₁`, `g₁ = (ξ₂ + ξ₃) w₁`, `g₂ = −w₁` with
/// `w₁ = g(ξ₁) / ((ξ₁ − ξ₂)(ξ₃ − ξ₁))`.
pub fn interpolation_coefficients(xi: [Complex64; 3], g_xi: [Complex64; 3]) -> [Complex64; 3] {
    let mut coeffs = [Complex64::new(0.0, 0.0); 3];
    for shift in 0..3 {
        let x1 = xi[shift];
        let x2 = xi[(shift + 1) % 3];
        let x3 = xi[(shift + 2) % 3];
        let w = g_xi[shift] / ((x1 - x2) * (x3 - x1));
        coeffs[0] -= x2 * x3 * w;
        coeffs[1] += (x2 + x3) * w;
        coeffs[2] -= w;
    }
    coeffs
}

/// `g(m)` for a 3×3 matrix with three distinct eigenvalues.
///
/// `g` returns `None` where it is undefined. Fails with
/// [`Error::DegenerateSpectrum`] when two eigenvalues are closer than
/// `DEFAULT_GAP_TOL·‖m‖`.
pub fn func_of_3x3<G>(m: &CMatrix, g: G) -> Result<CMatrix>
where
    G: Fn(Complex64) -> Option<Complex64>,
{
    let spectrum = spectrum3(m)?;
    func_of_3x3_with_spectrum(m, &spectrum, g, DEFAULT_GAP_TOL)
}

/// Same as [`func_of_3x3`] with a caller-supplied spectrum and gap tolerance.
pub fn func_of_3x3_with_spectrum<G>(
    m: &CMatrix,
    spectrum: &Spectrum3,
    g: G,
    gap_tol: f64,
) -> Result<CMatrix>
where
    G: Fn(Complex64) -> Option<Complex64>,
{
    if m.nrows() != 3 || m.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: m.nrows().max(m.ncols()),
        });
    }
    let tolerance = gap_tol * norm(m).max(f64::MIN_POSITIVE);
    let gap = spectrum.min_gap();
    if gap < tolerance {
        return Err(Error::DegenerateSpectrum { gap, tolerance });
    }
    let mut g_xi = [Complex64::new(0.0, 0.0); 3];
    for (k, &x) in spectrum.xi.iter().enumerate() {
        g_xi[k] = g(x)
            .filter(|v| v.re.is_finite() && v.im.is_finite())
            .ok_or(Error::FunctionUndefined { re: x.re, im: x.im })?;
    }
    let [g0, g1, g2] = interpolation_coefficients(spectrum.xi, g_xi);
    let m2 = m * m;
    Ok(identity(3) * g0 + m * g1 + m2 * g2)
}

/// Principal logarithm on the positive real axis, `None` elsewhere.
pub fn real_log(x: Complex64) -> Option<Complex64> {
    if x.re > 0.0 && x.im.abs() <= 1e-12 * x.re.max(1.0) {
        Some(c(x.re.ln()))
    } else {
        None
    }
}

/// Zeroes imaginary parts below `rel·‖m‖` and reports whether that made
/// the matrix real.
pub fn truncate_imag(m: &CMatrix, rel: f64) -> (CMatrix, bool) {
    let cutoff = rel * norm(m);
    let mut all_real = true;
    let out = m.map(|z| {
        if z.im.abs() <= cutoff {
            c(z.re)
        } else {
            all_real = false;
            z
        }
    });
    (out, all_real)
}

/// Result of [`psd_on_subspace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceSpectrum {
    pub holds: bool,
    /// Smallest eigenvalue of `PmP` restricted to `range(P)`; `+∞` when the
    /// range is trivial.
    pub min_eigenvalue: f64,
    pub rank: usize,
}

/// Orthonormal basis for the range of a projector, checked for `P² = P = P†`.
pub fn projector_range(projector: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(projector)?;
    let idempotency = norm(&(projector * projector - projector));
    let hermiticity = hermitian_residual(projector);
    let residual = idempotency.max(hermiticity);
    if residual > 1e-12 * (n as f64).max(1.0) {
        return Err(Error::InvalidProjector { residual });
    }
    let eig = eig_hermitian(projector)?;
    let rank = eig.values.iter().filter(|&&v| v > 0.5).count();
    Ok(eig.vectors.columns(0, rank).into_owned())
}

/// Whether Hermitian `m` is positive semidefinite on `range(projector)`,
/// within `−tol·max(1, ‖m‖)`.
pub fn psd_on_subspace(m: &CMatrix, projector: &CMatrix, tol: f64) -> Result<SubspaceSpectrum> {
    let n = ensure_square(m)?;
    if projector.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: projector.nrows(),
        });
    }
    let basis = projector_range(projector)?;
    let rank = basis.ncols();
    if rank == 0 {
        return Ok(SubspaceSpectrum {
            holds: true,
            min_eigenvalue: f64::INFINITY,
            rank,
        });
    }
    let compressed = basis.adjoint() * hermitian_part(m) * &basis;
    let eig = eig_hermitian_with_tol(&hermitian_part(&compressed), 1e-9)?;
    let min_eigenvalue = eig.min();
    Ok(SubspaceSpectrum {
        holds: min_eigenvalue >= -tol * norm(m).max(1.0),
        min_eigenvalue,
        rank,
    })
}
