//! Qutrit Davies maps with a non-degenerate Bohr spectrum.
//!
//! Populations evolve under a 3×3 column-stochastic block `F`, and each
//! coherence is damped independently: `λ_k` multiplies the coherence
//! between the two levels other than `k`. Levels are ordered by energy,
//! `e₁ > e₂ > e₃`, so the Gibbs weights satisfy `p₁ < p₂ < p₃`.

use nalgebra::Matrix3;
use serde::Serialize;
use serde_json::json;

use crate::channel::{self, GibbsState, Superoperator};
use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Column sums within this of 1 are renormalized.
    pub stochastic: f64,
    /// Relative tolerance for detailed balance and the cycle identity.
    pub detailed_balance: f64,
    /// Off-diagonal generator entries above `−generator` count as rates.
    pub generator: f64,
    pub ccp: f64,
    /// Verdicts inside this margin band may disagree.
    pub agreement_band: f64,
    /// Relative tolerance for `p₂² = p₁p₃`.
    pub bohr: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stochastic: 1e-12,
            detailed_balance: 1e-10,
            generator: 1e-10,
            ccp: 1e-10,
            agreement_band: 1e-8,
            bohr: 1e-10,
        }
    }
}

fn rows_of(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

fn to_complex(m: &Matrix3<f64>) -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| c(m[(i, j)]))
}

/// Column-stochastic 3×3 matrix acting on probability column vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritStochastic {
    f: Matrix3<f64>,
}

impl Serialize for QutritStochastic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(&self.f).serialize(s)
    }
}

impl QutritStochastic {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::with_tolerance(rows, Tolerances::default().stochastic)
    }

    /// Validates and renormalizes columns that are within `tol` of summing to 1.
    pub fn with_tolerance(rows: [[f64; 3]; 3], tol: f64) -> Result<Self> {
        let mut f = Matrix3::from_fn(|i, j| rows[i][j]);
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(x) = f.iter().find(|&&x| x < 0.0) {
            return Err(Error::InvalidParams(format!(
                "stochastic matrix has a negative entry {x}"
            )));
        }
        for j in 0..3 {
            let sum: f64 = f.column(j).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidParams(format!(
                    "column {} sums to {sum}, not 1",
                    j + 1
                )));
            }
            f.column_mut(j).unscale_mut(sum);
        }
        Ok(QutritStochastic { f })
    }

    pub fn identity() -> Self {
        QutritStochastic {
            f: Matrix3::identity(),
        }
    }

    /// `exp(t·G)` with tiny negative round-off clipped and columns renormalized.
    pub fn from_generator(g: &ClassicalGenerator, t: f64) -> Result<Self> {
        let e = numerics::expm(&to_complex(&g.g), t)?;
        let mut f = Matrix3::from_fn(|i, j| e[(i, j)].re.max(0.0));
        for j in 0..3 {
            let sum: f64 = f.column(j).sum();
            f.column_mut(j).unscale_mut(sum);
        }
        Ok(QutritStochastic { f })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.f
    }

    /// Entry `F_ij` with 1-based indices, as in the usual notation.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.f[(i - 1, j - 1)]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        rows_of(&self.f)
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        to_complex(&self.f)
    }

    pub fn trace(&self) -> f64 {
        self.f.trace()
    }

    /// Relabels levels `i → σ(i)`, so the result has `F'_{σ(i)σ(j)} = F_ij`.
    fn permuted(&self, sigma: [usize; 3]) -> QutritStochastic {
        let mut f = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                f[(sigma[i], sigma[j])] = self.f[(i, j)];
            }
        }
        QutritStochastic { f }
    }
}

/// Candidate classical generator: columns sum to zero, off-diagonal
/// entries are rates when the candidate is a true generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalGenerator {
    g: Matrix3<f64>,
}

impl Serialize for ClassicalGenerator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(&self.g).serialize(s)
    }
}

impl ClassicalGenerator {
    /// Off-diagonal entries from `rows`; the diagonal is set so columns sum to 0.
    pub fn from_rates(rows: [[f64; 3]; 3]) -> Self {
        let mut g = Matrix3::from_fn(|i, j| if i == j { 0.0 } else { rows[i][j] });
        for j in 0..3 {
            g[(j, j)] = -g.column(j).sum();
        }
        ClassicalGenerator { g }
    }

    /// Detailed-balance generator from the three lower rates
    /// `(G₂₁, G₃₁, G₃₂)`; the upper ones follow from `G_ij p_j = G_ji p_i`.
    pub fn detailed_balance(p: [f64; 3], g21: f64, g31: f64, g32: f64) -> Self {
        let g12 = g21 * p[0] / p[1];
        let g13 = g31 * p[0] / p[2];
        let g23 = g32 * p[1] / p[2];
        Self::from_rates([[0.0, g12, g13], [g21, 0.0, g23], [g31, g32, 0.0]])
    }

    pub fn from_matrix(g: Matrix3<f64>) -> Self {
        ClassicalGenerator { g }
    }

    pub fn zero() -> Self {
        ClassicalGenerator {
            g: Matrix3::zeros(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.g
    }

    /// Entry `G_ij`, 1-based.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.g[(i - 1, j - 1)]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        rows_of(&self.g)
    }

    /// Smallest off-diagonal entry as `(i, j, G_ij)`, 1-based.
    pub fn min_rate(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for i in 0..3 {
            for j in 0..3 {
                if i != j && self.g[(i, j)] < best.2 {
                    best = (i + 1, j + 1, self.g[(i, j)]);
                }
            }
        }
        best
    }

    pub fn column_sum_residual(&self) -> f64 {
        (0..3)
            .map(|j| self.g.column(j).sum().abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|G_ij p_j − G_ji p_i|`.
    pub fn detailed_balance_residual(&self, p: &[f64; 3]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..i {
                worst = worst.max((self.g[(i, j)] * p[j] - self.g[(j, i)] * p[i]).abs());
            }
        }
        worst
    }

    pub fn exp(&self, t: f64) -> Result<QutritStochastic> {
        QutritStochastic::from_generator(self, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingReport {
    pub f12_lt_f21: bool,
    pub f13_lt_f31: bool,
    pub f23_lt_f32: bool,
    /// `(F₁₂F₂₃F₃₁ − F₁₃F₃₂F₂₁)` relative to the larger product.
    pub cycle_residual: f64,
    pub cycle_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetailedBalanceReport {
    pub holds: bool,
    /// Largest relative violation of `F_ij p_j = F_ji p_i`.
    pub max_violation: f64,
    /// Present when `p` is strictly ordered and `F` is entrywise positive.
    pub ordering: Option<OrderingReport>,
}

fn relative_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

pub fn db_validate(f: &QutritStochastic, p: &[f64; 3]) -> DetailedBalanceReport {
    db_validate_with_tol(f, p, Tolerances::default().detailed_balance)
}

pub fn db_validate_with_tol(f: &QutritStochastic, p: &[f64; 3], tol: f64) -> DetailedBalanceReport {
    let mut max_violation = 0.0f64;
    for i in 0..3 {
        for j in 0..i {
            let v = relative_gap(f.f[(i, j)] * p[j], f.f[(j, i)] * p[i]);
            max_violation = max_violation.max(v);
        }
    }
    let ordered = p[0] < p[1] && p[1] < p[2];
    let ordering = (ordered && f.f.iter().all(|&x| x > 0.0)).then(|| {
        let cycle_residual = relative_gap(
            f.at(1, 2) * f.at(2, 3) * f.at(3, 1),
            f.at(1, 3) * f.at(3, 2) * f.at(2, 1),
        );
        OrderingReport {
            f12_lt_f21: f.at(1, 2) < f.at(2, 1),
            f13_lt_f31: f.at(1, 3) < f.at(3, 1),
            f23_lt_f32: f.at(2, 3) < f.at(3, 2),
            cycle_residual,
            cycle_holds: cycle_residual <= tol,
        }
    });
    let ordering_ok =
        ordering.is_none_or(|o| o.f12_lt_f21 && o.f13_lt_f31 && o.f23_lt_f32 && o.cycle_holds);
    DetailedBalanceReport {
        holds: max_violation <= tol && ordering_ok,
        max_violation,
        ordering,
    }
}

/// Closed-form stationary vector of a detailed-balance `F`.
pub fn stationary_vector(f: &QutritStochastic) -> Result<[f64; 3]> {
    for i in 1..=3 {
        for j in 1..=3 {
            if i != j && f.at(i, j) <= 0.0 {
                return Err(Error::NonPositiveRates(format!("F{i}{j} = {}", f.at(i, j))));
            }
        }
    }
    let component = |i: usize, j: usize, k: usize| {
        let num = f.at(i, j) * f.at(i, k);
        num / (num + f.at(i, j) * f.at(k, i) + f.at(i, k) * f.at(j, i))
    };
    Ok([component(1, 2, 3), component(2, 3, 1), component(3, 1, 2)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumAB {
    pub a: f64,
    /// `√max(radicand, 0)/2`; the modulus of the imaginary part is
    /// `√(−radicand)/2` when `complex` is set.
    pub b: f64,
    pub radicand: f64,
    pub complex: bool,
}

impl SpectrumAB {
    /// `{1, A + B, A − B}` when real.
    pub fn eigenvalues(&self) -> Option<[f64; 3]> {
        (!self.complex).then_some([1.0, self.a + self.b, self.a - self.b])
    }
}

pub fn spectrum_ab(f: &QutritStochastic) -> SpectrumAB {
    let t = f.trace();
    let t2 = (f.f * f.f).trace();
    let radicand = 2.0 * t2 - t * t + 2.0 * t - 3.0;
    SpectrumAB {
        a: 0.5 * (t - 1.0),
        b: 0.5 * radicand.max(0.0).sqrt(),
        radicand,
        complex: radicand < 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogExistence {
    /// `B` real, `0 ≤ A` and `B ≤ A`.
    pub ab_form: bool,
    /// `B` real, `1 ≤ tr F` and `tr F² + 2 tr F ≤ 2 + (tr F)²`.
    pub trace_form: bool,
    pub spectrum: SpectrumAB,
    pub trace: f64,
    pub trace_sq: f64,
}

impl LogExistence {
    pub fn holds(&self) -> bool {
        self.ab_form && self.trace_form
    }

    /// Whether the smallest eigenvalue is strictly positive.
    pub fn strictly_positive(&self) -> bool {
        !self.spectrum.complex && self.spectrum.a - self.spectrum.b > 0.0
    }
}

pub fn log_exists(f: &QutritStochastic) -> LogExistence {
    let spectrum = spectrum_ab(f);
    let t = f.trace();
    let t2 = (f.f * f.f).trace();
    let real = !spectrum.complex;
    LogExistence {
        ab_form: real && spectrum.a >= 0.0 && spectrum.b <= spectrum.a,
        trace_form: real && 1.0 <= t && t2 + 2.0 * t <= 2.0 + t * t,
        spectrum,
        trace: t,
        trace_sq: t2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogRoute {
    /// Three-point interpolation on distinct eigenvalues.
    Interpolation,
    /// Eigendecomposition of the symmetrized matrix `D^{-1/2} F D^{1/2}`.
    Symmetrized,
    /// Two-cluster interpolation for a diagonalizable matrix with a
    /// repeated eigenvalue.
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticLog {
    pub generator: ClassicalGenerator,
    pub route: LogRoute,
    /// Largest imaginary part discarded from the interpolation result.
    pub max_imag: f64,
}

/// Real logarithm of `F`.
pub fn log_stochastic(f: &QutritStochastic) -> Result<ClassicalGenerator> {
    log_stochastic_detailed(f).map(|l| l.generator)
}

pub fn log_stochastic_detailed(f: &QutritStochastic) -> Result<StochasticLog> {
    let existence = log_exists(f);
    if !existence.strictly_positive() {
        let s = existence.spectrum;
        return Err(Error::LogDoesNotExist(if s.complex {
            format!("complex eigenvalue pair (radicand {:.3e})", s.radicand)
        } else {
            format!("eigenvalue A - B = {:.3e} is not positive", s.a - s.b)
        }));
    }
    let m = f.to_cmatrix();
    let spectrum = numerics::spectrum3(&m)?;
    match numerics::func_of_3x3_with_spectrum(
        &m,
        &spectrum,
        numerics::real_log,
        numerics::DEFAULT_GAP_TOL,
    ) {
        Ok(log) => {
            let max_imag = log.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_imag > numerics::DEFAULT_IMAG_TOL * numerics::norm(&log).max(1.0) {
                return Err(Error::LogDoesNotExist(format!(
                    "logarithm has imaginary part {max_imag:.3e}"
                )));
            }
            Ok(StochasticLog {
                generator: ClassicalGenerator::from_matrix(Matrix3::from_fn(|i, j| log[(i, j)].re)),
                route: LogRoute::Interpolation,
                max_imag,
            })
        }
        Err(Error::DegenerateSpectrum { .. }) | Err(Error::FunctionUndefined { .. }) => {
            degenerate_log(f, &existence.spectrum)
        }
        Err(e) => Err(e),
    }
}

fn degenerate_log(f: &QutritStochastic, spectrum: &SpectrumAB) -> Result<StochasticLog> {
    let weight = stationary_vector(f)
        .ok()
        .filter(|p| db_validate(f, p).max_violation <= 1e-10)
        .or_else(|| {
            (relative_gap_matrix(&f.f, &f.f.transpose()) <= 1e-12).then_some([1.0 / 3.0; 3])
        });
    if let Some(p) = weight {
        return symmetrized_log(f, &p);
    }
    // F is similar to a symmetric matrix under detailed balance, hence
    // diagonalizable; with clusters {1, μ} the minimal polynomial is
    // (x − 1)(x − μ) and log F = log(μ)/(μ − 1)·(F − 𝟙).
    let [_, hi, lo] = spectrum.eigenvalues().expect("checked real");
    let mu = if (hi - 1.0).abs() > (lo - 1.0).abs() {
        hi
    } else {
        lo
    };
    let k = if (mu - 1.0).abs() < 1e-300 {
        1.0
    } else {
        mu.ln() / (mu - 1.0)
    };
    Ok(StochasticLog {
        generator: ClassicalGenerator::from_matrix((f.f - Matrix3::identity()) * k),
        route: LogRoute::Clustered,
        max_imag: 0.0,
    })
}

fn relative_gap_matrix(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    (x - y).norm() / x.norm().max(f64::MIN_POSITIVE)
}

fn symmetrized_log(f: &QutritStochastic, p: &[f64; 3]) -> Result<StochasticLog> {
    let sqrt_p = Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|i, _| p[i].sqrt()));
    let inv_sqrt_p = Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|i, _| 1.0 / p[i].sqrt()));
    let s = inv_sqrt_p * f.f * sqrt_p;
    let s = (s + s.transpose()) * 0.5;
    let eig =
        nalgebra::SymmetricEigen::try_new(s, f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    if let Some(v) = eig.eigenvalues.iter().find(|&&v| v <= 0.0) {
        return Err(Error::LogDoesNotExist(format!(
            "eigenvalue {v:.3e} is not positive"
        )));
    }
    let log_s = eig.eigenvectors
        * Matrix3::from_diagonal(&eig.eigenvalues.map(f64::ln))
        * eig.eigenvectors.transpose();
    Ok(StochasticLog {
        generator: ClassicalGenerator::from_matrix(sqrt_p * log_s * inv_sqrt_p),
        route: LogRoute::Symmetrized,
        max_imag: 0.0,
    })
}

/// Why a stochastic block is or is not on a classical semigroup.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemigroupCertificate {
    Generator {
        g: ClassicalGenerator,
    },
    NegativeRate {
        i: usize,
        j: usize,
        value: f64,
        g: ClassicalGenerator,
    },
    NoLogarithm {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupReport {
    pub holds: bool,
    /// Smallest off-diagonal entry of `log F`; absent without a logarithm.
    pub margin: Option<f64>,
    pub certificate: SemigroupCertificate,
}

pub fn semigroup_member(f: &QutritStochastic) -> SemigroupReport {
    semigroup_member_with_tol(f, Tolerances::default().generator)
}

pub fn semigroup_member_with_tol(f: &QutritStochastic, tol: f64) -> SemigroupReport {
    match log_stochastic(f) {
        Ok(g) => {
            let (i, j, value) = g.min_rate();
            if value >= -tol {
                SemigroupReport {
                    holds: true,
                    margin: Some(value),
                    certificate: SemigroupCertificate::Generator { g },
                }
            } else {
                SemigroupReport {
                    holds: false,
                    margin: Some(value),
                    certificate: SemigroupCertificate::NegativeRate { i, j, value, g },
                }
            }
        }
        Err(e) => SemigroupReport {
            holds: false,
            margin: None,
            certificate: SemigroupCertificate::NoLogarithm {
                reason: e.to_string(),
            },
        },
    }
}

/// One of the three rate-positivity inequalities in spectral form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GInequality {
    /// The generator entry `(i, j)` (1-based) whose sign this decides.
    pub entry: (usize, usize),
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GInequalities {
    pub conditions: [GInequality; 3],
    pub holds: bool,
}

/// Denominators below this are outside the domain of the inequalities.
pub const G_DENOMINATOR_MIN: f64 = 1e-12;

/// `y₁(1 − A + B) log(A + B) ≤ y₂(1 − A − B) log(A − B)` with
/// `y₂ = y₁ − 4B`, and its two cyclic relabelings.
///
/// The unpermuted form decides `G₁₂ ≥ 0`; relabeling `1 → 2 → 3 → 1`
/// gives `G₂₃ ≥ 0` and then `G₃₁ ≥ 0`.
pub fn inequality_g(f: &QutritStochastic) -> Result<GInequalities> {
    let s = spectrum_ab(f);
    if s.complex || s.b <= 0.0 {
        return Err(Error::DomainError(format!(
            "need a real, non-degenerate pair A ± B (radicand {:.3e})",
            s.radicand
        )));
    }
    let (hi, lo) = (s.a + s.b, s.a - s.b);
    if !(lo > 0.0 && hi < 1.0) {
        return Err(Error::DomainError(format!(
            "need 0 < A - B and A + B < 1, got A - B = {lo:.3e}, A + B = {hi:.3e}"
        )));
    }
    let shifts: [([usize; 3], (usize, usize)); 3] = [
        ([0, 1, 2], (1, 2)),
        ([1, 2, 0], (2, 3)),
        ([2, 0, 1], (3, 1)),
    ];
    let mut conditions = [GInequality {
        entry: (0, 0),
        lhs: 0.0,
        rhs: 0.0,
        margin: 0.0,
        holds: false,
    }; 3];
    for (k, (sigma, entry)) in shifts.into_iter().enumerate() {
        // relabel so that the target entry sits at position (1, 2)
        let mut inverse = [0; 3];
        for (i, &si) in sigma.iter().enumerate() {
            inverse[si] = i;
        }
        let q = f.permuted(inverse);
        let denom = q.at(2, 1);
        if denom < G_DENOMINATOR_MIN {
            return Err(Error::DomainError(format!(
                "F{}{} = {denom:.3e} is too small; use the numeric-log certificate",
                entry.1, entry.0
            )));
        }
        let y1 = 2.0 * s.b - q.at(1, 2) - q.at(2, 1) + q.at(1, 3) - q.at(3, 1) + q.at(2, 3)
            - q.at(3, 2)
            + 2.0 * q.at(2, 3) * q.at(3, 1) / denom;
        let y2 = y1 - 4.0 * s.b;
        let lhs = y1 * (1.0 - lo) * hi.ln();
        let rhs = y2 * (1.0 - hi) * lo.ln();
        conditions[k] = GInequality {
            entry,
            lhs,
            rhs,
            margin: rhs - lhs,
            holds: lhs <= rhs,
        };
    }
    Ok(GInequalities {
        holds: conditions.iter().all(|c| c.holds),
        conditions,
    })
}

/// 9×9 generator with classical part `G` and coherence decay rates `r`.
pub fn generator_superoperator(g: &ClassicalGenerator, r: [f64; 3]) -> Superoperator {
    let mut m = CMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            m[(4 * i, 4 * j)] = c(g.g[(i, j)]);
            if i != j {
                m[(3 * i + j, 3 * i + j)] = c(-r[3 - i - j]);
            }
        }
    }
    Superoperator::new(m).expect("9x9")
}

/// `M` with diagonal `(G₂₁+G₃₁, G₁₂+G₃₂, G₁₃+G₂₃)` and off-diagonal
/// `r₃` at (1,2), `r₂` at (1,3), `r₁` at (2,3).
pub fn ccp_matrix(g: &ClassicalGenerator, r: [f64; 3]) -> Matrix3<f64> {
    let d = [
        g.at(2, 1) + g.at(3, 1),
        g.at(1, 2) + g.at(3, 2),
        g.at(1, 3) + g.at(2, 3),
    ];
    Matrix3::new(
        d[0], r[2], r[1], //
        r[2], d[1], r[0], //
        r[1], r[0], d[2],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarCcp {
    /// `Σr − Σ_{i≠j} G_ij`.
    pub trace_margin: f64,
    /// Right side minus left side of the quadratic inequality.
    pub quadratic_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcpReport {
    pub holds: bool,
    pub scalar: ScalarCcp,
    /// Smallest eigenvalue of `−M` on the complement of `(1,1,1)`.
    pub subspace: Verdict,
    /// Smallest eigenvalue of the 9×9 generator Choi matrix off `|Ψ⁺⟩`.
    pub choi: Verdict,
    pub agree: bool,
    pub diagnostic: Option<String>,
}

/// The two scalar inequalities.
///
/// The quadratic one is the compressed determinant of `−M` on `(1,1,1)^⊥`:
/// `Σr² + 2Σ r_k d_k ≤ 2(r₁r₂ + r₂r₃ + r₃r₁) + (d₁d₂ + d₂d₃ + d₃d₁)`.
pub fn ccp_scalar(g: &ClassicalGenerator, r: [f64; 3], tol: f64) -> ScalarCcp {
    let d = [
        g.at(2, 1) + g.at(3, 1),
        g.at(1, 2) + g.at(3, 2),
        g.at(1, 3) + g.at(2, 3),
    ];
    let [r1, r2, r3] = r;
    let trace_margin = r1 + r2 + r3 - (d[0] + d[1] + d[2]);
    let lhs = r1 * r1 + r2 * r2 + r3 * r3 + 2.0 * (r1 * d[0] + r2 * d[1] + r3 * d[2]);
    let rhs = 2.0 * (r1 * r2 + r2 * r3 + r3 * r1) + (d[0] * d[1] + d[1] * d[2] + d[2] * d[0]);
    let quadratic_margin = rhs - lhs;
    let scale = 1.0
        + r.iter()
            .chain(d.iter())
            .map(|x| x.abs())
            .fold(0.0, f64::max);
    ScalarCcp {
        trace_margin,
        quadratic_margin,
        holds: trace_margin >= -tol * scale && quadratic_margin >= -tol * scale * scale,
    }
}

fn complement_of_ones() -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| c(if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 }))
}

/// All three CCP tests for a classical generator and decay rates.
pub fn ccp_check_rates(g: &ClassicalGenerator, r: [f64; 3], tol: &Tolerances) -> Result<CcpReport> {
    let scalar = ccp_scalar(g, r, tol.ccp);
    let minus_m = to_complex(&(-ccp_matrix(g, r)));
    let sub = numerics::psd_on_subspace(&minus_m, &complement_of_ones(), tol.ccp)?;
    let subspace = Verdict {
        holds: sub.holds,
        margin: sub.min_eigenvalue,
    };
    let cert = channel::is_ccp_generator(&generator_superoperator(g, r), tol.ccp)?;
    // the 9×9 test also sees the off-diagonal rates, which −M does not
    let choi = Verdict {
        holds: cert.holds,
        margin: cert.min_eigenvalue,
    };
    let (rate_i, rate_j, rate) = g.min_rate();

    let verdicts = [scalar.holds, subspace.holds, choi.holds];
    let margins = [
        scalar.trace_margin,
        scalar.quadratic_margin,
        subspace.margin,
        choi.margin,
    ];
    let near_boundary = margins.iter().any(|m| m.abs() < tol.agreement_band);
    // a negative rate fails the 9×9 test alone; that is not a disagreement
    // about the coherence block
    let rates_ok = rate >= -tol.generator;
    let agree = near_boundary
        || if rates_ok {
            verdicts.iter().all(|&v| v == verdicts[0])
        } else {
            scalar.holds == subspace.holds
        };
    let diagnostic = if !agree {
        let msg = format!(
            "CCP verdicts disagree: scalar {} (margins {:.3e}, {:.3e}), subspace {} ({:.3e}), 9x9 {} ({:.3e})",
            scalar.holds,
            scalar.trace_margin,
            scalar.quadratic_margin,
            subspace.holds,
            subspace.margin,
            choi.holds,
            choi.margin
        );
        log::warn!("{msg}");
        Some(msg)
    } else if !rates_ok {
        Some(format!("G{rate_i}{rate_j} = {rate:.3e} is negative"))
    } else {
        None
    };
    Ok(CcpReport {
        holds: scalar.holds && subspace.holds && choi.holds,
        scalar,
        subspace,
        choi,
        agree,
        diagnostic,
    })
}

/// Decay rates `r_k = −log λ_k`.
pub fn decay_rates(lambdas: [f64; 3]) -> [f64; 3] {
    lambdas.map(|l| -l.ln())
}

/// Stochastic block, coherence damps and Gibbs weights of a qutrit map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QutritDaviesParams {
    pub f: QutritStochastic,
    pub lambdas: [f64; 3],
    pub p: [f64; 3],
}

fn check_distribution(p: &[f64; 3], tol: f64) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::NotDistribution(format!(
            "weights must be positive, got {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotDistribution(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// Rejects `p₂² = p₁p₃`, where `e₁ − e₂ = e₂ − e₃`.
pub fn check_bohr_spectrum(p: &[f64; 3], tol: f64) -> Result<()> {
    let gap = relative_gap(p[1] * p[1], p[0] * p[2]);
    if gap <= tol {
        return Err(Error::DegenerateBohrSpectrum(format!(
            "p2^2 = p1 p3 to relative {gap:.3e}: equal energy gaps couple coherences"
        )));
    }
    Ok(())
}

impl QutritDaviesParams {
    /// Checks the weights (strictly increasing, non-degenerate gaps) and
    /// `λ ∈ (0, 1]`. Membership conditions are left to [`is_davies_qutrit`].
    pub fn new(f: QutritStochastic, lambdas: [f64; 3], p: [f64; 3]) -> Result<Self> {
        let tol = Tolerances::default();
        check_distribution(&p, tol.stochastic)?;
        if !(p[0] < p[1] && p[1] < p[2]) {
            return Err(Error::InvalidParams(format!(
                "weights must satisfy p1 < p2 < p3 (e1 > e2 > e3), got {p:?}"
            )));
        }
        check_bohr_spectrum(&p, tol.bohr)?;
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
            return Err(Error::InvalidParams(format!(
                "coherence damps must lie in (0, 1], got {l}"
            )));
        }
        Ok(QutritDaviesParams { f, lambdas, p })
    }

    pub fn new_unchecked(f: QutritStochastic, lambdas: [f64; 3], p: [f64; 3]) -> Self {
        QutritDaviesParams { f, lambdas, p }
    }

    /// The map `exp(t·𝓛)` of the generator with classical part `G` and
    /// decay rates `r`.
    pub fn from_generator(
        g: &ClassicalGenerator,
        r: [f64; 3],
        p: [f64; 3],
        t: f64,
    ) -> Result<Self> {
        let f = QutritStochastic::from_generator(g, t)?;
        Self::new(f, r.map(|rk| (-rk * t).exp()), p)
    }

    pub fn decay_rates(&self) -> [f64; 3] {
        decay_rates(self.lambdas)
    }

    pub fn gibbs(&self) -> Result<GibbsState> {
        GibbsState::from_probabilities(&self.p)
    }
}

pub fn ccp_check(params: &QutritDaviesParams) -> Result<CcpReport> {
    ccp_check_with(params, &Tolerances::default())
}

pub fn ccp_check_with(params: &QutritDaviesParams, tol: &Tolerances) -> Result<CcpReport> {
    let member = semigroup_member_with_tol(&params.f, tol.generator);
    let g = match member.certificate {
        SemigroupCertificate::Generator { g } => g,
        SemigroupCertificate::NegativeRate { i, j, value, .. } => {
            return Err(Error::NotOnSemigroup(format!("G{i}{j} = {value:.3e}")))
        }
        SemigroupCertificate::NoLogarithm { reason } => return Err(Error::NotOnSemigroup(reason)),
    };
    ccp_check_rates(&g, params.decay_rates(), tol)
}

/// The 9×9 superoperator, without any checks.
pub fn assemble_unchecked(params: &QutritDaviesParams) -> Superoperator {
    let mut m = CMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            m[(4 * i, 4 * j)] = c(params.f.f[(i, j)]);
            if i != j {
                m[(3 * i + j, 3 * i + j)] = c(params.lambdas[3 - i - j]);
            }
        }
    }
    Superoperator::new(m).expect("9x9")
}

pub fn assemble(params: &QutritDaviesParams) -> Result<Superoperator> {
    let report = is_davies_qutrit(params);
    if let Some((name, _)) = report.conditions().into_iter().find(|(_, c)| !c.holds) {
        return Err(Error::InvalidParams(format!("condition '{name}' fails")));
    }
    Ok(assemble_unchecked(params))
}

/// One membership condition with its slack and evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    pub margin: Option<f64>,
    pub certificate: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaviesReport {
    pub holds: bool,
    pub weights: Condition,
    pub detailed_balance: Condition,
    pub semigroup: Condition,
    pub lambda_positive: Condition,
    pub ccp: Condition,
}

impl DaviesReport {
    pub fn conditions(&self) -> Vec<(&'static str, &Condition)> {
        vec![
            ("weights", &self.weights),
            ("detailed_balance", &self.detailed_balance),
            ("semigroup", &self.semigroup),
            ("lambda_positive", &self.lambda_positive),
            ("ccp", &self.ccp),
        ]
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn is_davies_qutrit(params: &QutritDaviesParams) -> DaviesReport {
    is_davies_qutrit_with(params, &Tolerances::default())
}

pub fn is_davies_qutrit_with(params: &QutritDaviesParams, tol: &Tolerances) -> DaviesReport {
    let p = params.p;
    let weights = {
        let checked = check_distribution(&p, tol.stochastic)
            .and_then(|_| {
                if p[0] < p[1] && p[1] < p[2] {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!(
                        "weights not strictly increasing: {p:?}"
                    )))
                }
            })
            .and_then(|_| check_bohr_spectrum(&p, tol.bohr));
        Condition {
            holds: checked.is_ok(),
            margin: Some((p[1] - p[0]).min(p[2] - p[1])),
            certificate: match checked {
                Ok(()) => json!({ "p": p }),
                Err(e) => json!({ "p": p, "error": e.to_string() }),
            },
        }
    };

    let db = db_validate_with_tol(&params.f, &p, tol.detailed_balance);
    let detailed_balance = Condition {
        holds: db.holds,
        margin: Some(tol.detailed_balance - db.max_violation),
        certificate: serde_json::to_value(db).unwrap_or_default(),
    };

    let member = semigroup_member_with_tol(&params.f, tol.generator);
    let semigroup = Condition {
        holds: member.holds,
        margin: member.margin,
        certificate: serde_json::to_value(&member.certificate).unwrap_or_default(),
    };

    let min_lambda = params.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_positive = Condition {
        holds: params.lambdas.iter().all(|l| *l > 0.0 && *l <= 1.0),
        margin: finite_or_none(min_lambda),
        certificate: json!({ "lambda": params.lambdas }),
    };

    let ccp = if let (SemigroupCertificate::Generator { g }, true) =
        (&member.certificate, lambda_positive.holds)
    {
        match ccp_check_rates(g, params.decay_rates(), tol) {
            Ok(report) => Condition {
                holds: report.holds,
                margin: Some(
                    report
                        .scalar
                        .trace_margin
                        .min(report.scalar.quadratic_margin)
                        .min(report.subspace.margin),
                ),
                certificate: serde_json::to_value(&report).unwrap_or_default(),
            },
            Err(e) => Condition {
                holds: false,
                margin: None,
                certificate: json!({ "error": e.to_string() }),
            },
        }
    } else {
        Condition {
            holds: false,
            margin: None,
            certificate: json!({ "error": "needs a semigroup certificate and positive damps" }),
        }
    };

    DaviesReport {
        holds: weights.holds
            && detailed_balance.holds
            && semigroup.holds
            && lambda_positive.holds
            && ccp.holds,
        weights,
        detailed_balance,
        semigroup,
        lambda_positive,
        ccp,
    }
}
