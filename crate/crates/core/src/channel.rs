//! Channel algebra shared by qubits and qutrits.
//!
//! Density matrices are vectorized row-major, `vec(ρ) = (ρ₁₁, ρ₁₂, …, ρ_NN)`,
//! and a [`Superoperator`] is the `N²×N²` matrix acting on that vector. The
//! matrix unit `|i⟩⟨j|` therefore sits at index `i·N + j`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, c, eig_hermitian, CMatrix};

/// Tolerance on Hermiticity, trace and smallest eigenvalue of a state.
pub const STATE_TOL: f64 = 1e-12;
/// Relative tolerance on the minimum Choi eigenvalue for complete positivity.
pub const DEFAULT_CP_TOL: f64 = 1e-10;
pub const DEFAULT_TP_TOL: f64 = 1e-12;
pub const DEFAULT_DB_TOL: f64 = 1e-10;
pub const DEFAULT_CCP_TOL: f64 = 1e-10;

/// Row-major vectorization of a square matrix.
pub fn vectorize(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * m.ncols());
    for i in 0..n {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn devectorize(v: &[Complex64]) -> Result<CMatrix> {
    let n = exact_sqrt(v.len()).ok_or(Error::DimensionMismatch {
        expected: (v.len() as f64).sqrt().round().powi(2) as usize,
        found: v.len(),
    })?;
    Ok(CMatrix::from_row_slice(n, n, v))
}

fn exact_sqrt(len: usize) -> Option<usize> {
    let n = (len as f64).sqrt().round() as usize;
    (n * n == len).then_some(n)
}

/// Matrix unit `|i⟩⟨j|`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0);
    m
}

/// A validated state: Hermitian, unit trace and positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = numerics::ensure_square(&matrix).map_err(|e| Error::NotAState(e.to_string()))?;
        if n == 0 {
            return Err(Error::NotAState("empty matrix".into()));
        }
        let asym = numerics::hermitian_residual(&matrix);
        if asym > STATE_TOL {
            return Err(Error::NotAState(format!("asymmetry {asym:.3e}")));
        }
        let trace = matrix.trace();
        if (trace - c(1.0)).norm() > STATE_TOL {
            return Err(Error::NotAState(format!("trace {trace}")));
        }
        let min = eig_hermitian(&matrix)?.min();
        if min < -STATE_TOL {
            return Err(Error::NotAState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Wraps a matrix without any checks. Used for diagnostics on maps
    /// that are not known to be physical.
    pub fn new_unchecked(matrix: CMatrix) -> Self {
        DensityMatrix { matrix }
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let n = probabilities.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(probabilities[i])
            } else {
                c(0.0)
            }
        }))
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `amplitudes`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotAState("zero or non-finite state vector".into()));
        }
        let n = amplitudes.len();
        let psi: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
        Ok(DensityMatrix {
            matrix: CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj()),
        })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            matrix: numerics::identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn vectorize(&self) -> Vec<Complex64> {
        vectorize(&self.matrix)
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// `N²×N²` matrix of a linear map on `N×N` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let side = numerics::ensure_square(&matrix)?;
        let dim = exact_sqrt(side)
            .filter(|&n| n > 0)
            .ok_or(Error::DimensionMismatch {
                expected: (side as f64).sqrt().round().powi(2) as usize,
                found: side,
            })?;
        Ok(Superoperator { dim, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Superoperator {
            dim: n,
            matrix: numerics::identity(n * n),
        }
    }

    pub fn zero(n: usize) -> Self {
        Superoperator {
            dim: n,
            matrix: CMatrix::zeros(n * n, n * n),
        }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn conjugation(u: &CMatrix) -> Result<Self> {
        let n = numerics::ensure_square(u)?;
        Ok(Superoperator {
            dim: n,
            matrix: u.kronecker(&u.map(|z| z.conj())),
        })
    }

    /// System dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `self ∘ other`, i.e. `other` acts first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_dim(other.dim)?;
        Ok(Superoperator {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// `exp(t·self)`.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        Ok(Superoperator {
            dim: self.dim,
            matrix: numerics::expm(&self.matrix, t)?,
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }

    /// Image of an arbitrary `N×N` matrix.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_dim(x.nrows())?;
        self.check_dim(x.ncols())?;
        let v = nalgebra::DVector::from_vec(vectorize(x));
        let out = &self.matrix * v;
        devectorize(out.as_slice())
    }

    /// Applies the map to a state. With `validate` the output must again be
    /// a density matrix.
    pub fn apply(&self, rho: &DensityMatrix, validate: bool) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        if validate {
            DensityMatrix::new(out).map_err(|e| Error::NonPhysicalOutput(e.to_string()))
        } else {
            Ok(DensityMatrix::new_unchecked(out))
        }
    }

    /// `max |tr Φ(E_ij) − tr E_ij|` over matrix units.
    pub fn trace_preservation_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for col in 0..n * n {
            let (i, j) = (col / n, col % n);
            let traced: Complex64 = (0..n).map(|k| self.matrix[(k * n + k, col)]).sum();
            let expected = if i == j { c(1.0) } else { c(0.0) };
            worst = worst.max((traced - expected).norm());
        }
        worst
    }

    /// `max |tr L(E_ij)|` over matrix units; zero for a generator.
    pub fn trace_kill_residual(&self) -> f64 {
        let n = self.dim;
        (0..n * n)
            .map(|col| {
                (0..n)
                    .map(|k| self.matrix[(k * n + k, col)])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_residual() <= tol
    }

    /// Eigenvalues, descending by real part.
    pub fn spectrum(&self) -> Result<Vec<Complex64>> {
        numerics::eigenvalues(&self.matrix)
    }

    pub fn choi(&self) -> ChoiMatrix {
        choi_of(self)
    }
}

/// `(1/N) Σᵢⱼ Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Choi matrix. Entry `((k,i),(l,j))` equals `Φ(|i⟩⟨j|)_{kl} / N`, which is
/// a reshuffle of the superoperator entry `((k,l),(i,j))`.
pub fn choi_of(phi: &Superoperator) -> ChoiMatrix {
    let n = phi.dim;
    let scale = 1.0 / n as f64;
    let matrix = CMatrix::from_fn(n * n, n * n, |row, col| {
        let (k, i) = (row / n, row % n);
        let (l, j) = (col / n, col % n);
        phi.matrix[(k * n + l, i * n + j)] * scale
    });
    ChoiMatrix { dim: n, matrix }
}

/// `|Ψ⁺⟩ = N^{-1/2} Σ |i⟩⊗|i⟩` as an `N²` column.
pub fn max_entangled(n: usize) -> CMatrix {
    let amp = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(
        n * n,
        1,
        |r, _| if r / n == r % n { c(amp) } else { c(0.0) },
    )
}

/// `𝟙 − |Ψ⁺⟩⟨Ψ⁺|`.
pub fn entangled_complement(n: usize) -> CMatrix {
    let psi = max_entangled(n);
    numerics::identity(n * n) - &psi * psi.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpCertificate {
    pub holds: bool,
    pub min_eigenvalue: f64,
}

/// Complete positivity via the Choi spectrum: holds iff the smallest
/// eigenvalue is at least `−tol·max(1, ‖C‖)`.
pub fn is_completely_positive(phi: &Superoperator, tol: f64) -> Result<CpCertificate> {
    let choi = choi_of(phi);
    let m = numerics::hermitian_part(&choi.matrix);
    let min_eigenvalue = eig_hermitian(&m)?.min();
    Ok(CpCertificate {
        holds: min_eigenvalue >= -tol * numerics::norm(&choi.matrix).max(1.0),
        min_eigenvalue,
    })
}

/// Kraus operators `Φ(ρ) = Σ K ρ K†`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
}

impl KrausSet {
    /// `‖Σ K†K − 𝟙‖`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.operators.first().map_or(0, |k| k.nrows());
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        numerics::norm(&(sum - numerics::identity(n)))
    }

    /// Superoperator `Σ K ⊗ conj(K)` (row-major convention).
    pub fn to_superoperator(&self) -> Result<Superoperator> {
        let n = self.operators.first().map_or(0, |k| k.nrows());
        let matrix = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n * n, n * n), |acc, k| {
                acc + k.kronecker(&k.map(|z| z.conj()))
            });
        Superoperator::new(matrix)
    }
}

/// Eigenvalues of the Choi matrix above this are kept as Kraus operators.
pub const KRAUS_RANK_TOL: f64 = 1e-12;

/// Kraus decomposition from the Choi spectrum: each eigenpair `(λ, u)`
/// yields `K_{ki} = √(Nλ) u_{(k,i)}`.
pub fn kraus_from_choi(choi: &ChoiMatrix) -> Result<KrausSet> {
    let n = choi.dim;
    let eig = eig_hermitian(&numerics::hermitian_part(&choi.matrix))?;
    let scale = numerics::norm(&choi.matrix).max(1.0);
    let min = eig.min();
    if min < -DEFAULT_CP_TOL * scale {
        return Err(Error::NotCp {
            min_eigenvalue: min,
        });
    }
    let operators = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > KRAUS_RANK_TOL)
        .map(|(col, &lambda)| {
            let weight = (n as f64 * lambda).sqrt();
            CMatrix::from_fn(n, n, |k, i| eig.vectors[(k * n + i, col)] * weight)
        })
        .collect();
    Ok(KrausSet { operators })
}

/// Thermal state `ρ_β = e^{−βH}/𝒵` of a diagonal Hamiltonian (k = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    energies: Vec<f64>,
    beta: f64,
    probabilities: Vec<f64>,
}

impl GibbsState {
    pub fn new(energies: &[f64], beta: f64) -> Result<Self> {
        if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParams(
                "energies must be finite and non-empty".into(),
            ));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        let probabilities = if beta.is_infinite() {
            let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let count = energies.iter().filter(|&&e| e == ground).count() as f64;
            energies
                .iter()
                .map(|&e| if e == ground { 1.0 / count } else { 0.0 })
                .collect()
        } else {
            // Shift by the ground energy so the exponent never overflows.
            let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let weights: Vec<f64> = energies
                .iter()
                .map(|&e| (-beta * (e - ground)).exp())
                .collect();
            let z: f64 = weights.iter().sum();
            weights.iter().map(|w| w / z).collect()
        };
        Ok(GibbsState {
            energies: energies.to_vec(),
            beta,
            probabilities,
        })
    }

    /// Temperature convention `β = 1/T`.
    pub fn from_temperature(energies: &[f64], temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        Self::new(energies, 1.0 / temperature)
    }

    /// Gibbs state with prescribed populations; energies are `−ln pᵢ` at β = 1.
    pub fn from_probabilities(probabilities: &[f64]) -> Result<Self> {
        let total: f64 = probabilities.iter().sum();
        if probabilities.is_empty()
            || probabilities.iter().any(|&p| !(p > 0.0 && p.is_finite()))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(Error::NotDistribution(format!(
                "Gibbs weights must be positive and sum to 1, got {probabilities:?}"
            )));
        }
        Ok(GibbsState {
            energies: probabilities.iter().map(|p| -p.ln()).collect(),
            beta: 1.0,
            probabilities: probabilities.to_vec(),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let n = self.dim();
        DensityMatrix::new_unchecked(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(self.probabilities[i])
            } else {
                c(0.0)
            }
        }))
    }
}

/// `⟨X, Y⟩_β = tr(ρ_β⁻¹ X† Y)`.
pub fn beta_inner(x: &CMatrix, y: &CMatrix, gibbs: &GibbsState) -> Complex64 {
    let n = gibbs.dim();
    let p = gibbs.probabilities();
    let mut acc = Complex64::new(0.0, 0.0);
    // (ρ⁻¹X†Y)_ii = Σ_k conj(X_ki) Y_ki / p_i
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for k in 0..n {
            row += x[(k, i)].conj() * y[(k, i)];
        }
        acc += row / p[i];
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailedBalanceReport {
    pub holds: bool,
    /// `max |⟨X, Φ(Y)⟩_β − ⟨Φ(X), Y⟩_β|` over matrix units.
    pub max_violation: f64,
    pub real_spectrum: bool,
    /// Largest `|Im λ|` over the spectrum of the map.
    pub max_imag: f64,
}

/// Self-adjointness under `⟨·,·⟩_β`, checked on every pair of matrix units.
///
/// `tol` is relative to `max(1, largest inner product)`.
pub fn check_detailed_balance(
    map: &Superoperator,
    gibbs: &GibbsState,
    tol: f64,
) -> Result<DetailedBalanceReport> {
    let n = map.dim();
    if gibbs.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gibbs.dim(),
        });
    }
    let images: Vec<CMatrix> = (0..n * n)
        .map(|idx| map.apply_matrix(&matrix_unit(n, idx / n, idx % n)))
        .collect::<Result<_>>()?;
    let units: Vec<CMatrix> = (0..n * n)
        .map(|idx| matrix_unit(n, idx / n, idx % n))
        .collect();
    let mut max_violation = 0.0f64;
    let mut scale = 1.0f64;
    for x in 0..n * n {
        for y in 0..n * n {
            let lhs = beta_inner(&units[x], &images[y], gibbs);
            let rhs = beta_inner(&images[x], &units[y], gibbs);
            scale = scale.max(lhs.norm()).max(rhs.norm());
            max_violation = max_violation.max((lhs - rhs).norm());
        }
    }
    let spectrum = map.spectrum()?;
    let max_imag = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let spectral_scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
    Ok(DetailedBalanceReport {
        holds: max_violation <= tol * scale,
        max_violation,
        real_spectrum: max_imag <= tol * spectral_scale,
        max_imag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcpCertificate {
    pub holds: bool,
    /// Smallest eigenvalue of `N·Choi(L)` on the complement of `|Ψ⁺⟩`.
    pub min_eigenvalue: f64,
}

/// Conditional complete positivity of a trace-killing generator.
pub fn is_ccp_generator(gen: &Superoperator, tol: f64) -> Result<CcpCertificate> {
    let n = gen.dim();
    let scale = numerics::norm(gen.matrix()).max(1.0);
    let residual = gen.trace_kill_residual();
    if residual > tol * scale {
        return Err(Error::TraceNotKilled { residual });
    }
    let choi = choi_of(gen).matrix.scale(n as f64);
    let sub = numerics::psd_on_subspace(
        &numerics::hermitian_part(&choi),
        &entangled_complement(n),
        tol,
    )?;
    Ok(CcpCertificate {
        holds: sub.holds,
        min_eigenvalue: sub.min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicReport {
    pub holds: bool,
    /// Smallest decay rate among the non-zero eigenvalues of the generator.
    pub gap: f64,
    /// Time at which convergence was checked, `horizon / gap`.
    pub time: f64,
    /// Largest Frobenius distance to `ρ_β` over the probe states.
    pub max_deviation: f64,
}

/// Probe states: `|i⟩⟨i|`, `(|i⟩+|j⟩)` and `(|i⟩+i|j⟩)` projectors. They
/// span all `N×N` matrices.
pub fn probe_states(n: usize) -> Vec<DensityMatrix> {
    let mut states = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut v = vec![c(0.0); n];
        v[i] = c(1.0);
        states.push(DensityMatrix::pure(&v).expect("unit vector"));
    }
    for i in 0..n {
        for j in i + 1..n {
            for phase in [c(1.0), Complex64::new(0.0, 1.0)] {
                let mut v = vec![c(0.0); n];
                v[i] = c(1.0);
                v[j] = phase;
                states.push(DensityMatrix::pure(&v).expect("non-zero vector"));
            }
        }
    }
    states
}

pub fn ergodic_limit_check(
    gen: &Superoperator,
    gibbs: &GibbsState,
    horizon: f64,
    tol: f64,
) -> Result<ErgodicReport> {
    let n = gen.dim();
    if gibbs.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gibbs.dim(),
        });
    }
    let spectrum = gen.spectrum()?;
    let zero_tol = 1e-10 * numerics::norm(gen.matrix()).max(1.0);
    let zeros = spectrum.iter().filter(|z| z.norm() <= zero_tol).count();
    if zeros != 1 {
        return Err(Error::ZeroGap);
    }
    let gap = spectrum
        .iter()
        .filter(|z| z.norm() > zero_tol)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);
    if !(gap > zero_tol) {
        return Err(Error::ZeroGap);
    }
    let time = horizon / gap;
    let propagator = gen.exp(time)?;
    let target = gibbs.density_matrix();
    let max_deviation = probe_states(n)
        .iter()
        .map(|rho| {
            propagator
                .apply_matrix(rho.matrix())
                .map(|out| numerics::norm(&(out - target.matrix())))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ErgodicReport {
        holds: max_deviation <= tol,
        gap,
        time,
        max_deviation,
    })
}
