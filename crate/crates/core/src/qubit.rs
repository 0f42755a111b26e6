//! One-qubit Davies maps.
//!
//! A qubit Davies map with Gibbs weights `(p, 1 − p)` is fixed by two
//! numbers: the population transfer `a` and the coherence damping `c`.
//! In superoperator form
//!
//! ```text
//! ⎡ 1−a  0  0   b  ⎤
//! ⎢  0   c  0   0  ⎥      b = a·p/(1−p)
//! ⎢  0   0  c   0  ⎥
//! ⎣  a   0  0  1−b ⎦
//! ```
//!
//! and it lies on a completely positive semigroup iff
//! `0 ≤ a ≤ 1`, `a + p ≤ 1` and `0 ≤ c ≤ √(1 − a/(1−p))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{self, GibbsState, Superoperator};
use crate::entropy::{binary_entropy, LogBase};
use crate::error::{Error, Result};
use crate::numerics::{c, from_real_rows, CMatrix};

/// Slack allowed on every parameter inequality.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Band inside which a case boundary counts as the lower-numbered case.
pub const MOE_CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitDaviesParams {
    pub a: f64,
    pub c: f64,
    /// Weight of the excited level in the Gibbs state.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QubitConstraint {
    #[serde(rename = "0 < p <= 1/2")]
    GibbsWeight,
    #[serde(rename = "0 <= a <= 1")]
    ARange,
    #[serde(rename = "a + p <= 1")]
    APlusP,
    #[serde(rename = "0 <= c <= sqrt(1 - a/(1-p))")]
    CBound,
}

impl QubitConstraint {
    pub fn describe(self) -> &'static str {
        match self {
            QubitConstraint::GibbsWeight => "0 < p <= 1/2",
            QubitConstraint::ARange => "0 <= a <= 1",
            QubitConstraint::APlusP => "a + p <= 1",
            QubitConstraint::CBound => "0 <= c <= sqrt(1 - a/(1-p))",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub constraint: QubitConstraint,
    pub holds: bool,
    /// Signed slack; negative when violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitValidation {
    pub valid: bool,
    pub checks: Vec<ConstraintCheck>,
}

impl QubitValidation {
    pub fn violated(&self) -> Vec<QubitConstraint> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.constraint)
            .collect()
    }
}

impl QubitDaviesParams {
    pub fn new(a: f64, c: f64, p: f64) -> Result<Self> {
        let params = QubitDaviesParams { a, c, p };
        let report = params.validate();
        if let Some(first) = report.checks.iter().find(|c| !c.holds) {
            return Err(invalid(first, &params));
        }
        Ok(params)
    }

    pub fn new_unchecked(a: f64, c: f64, p: f64) -> Self {
        QubitDaviesParams { a, c, p }
    }

    /// Reverse transfer `b = a·p/(1−p)`.
    pub fn b(&self) -> f64 {
        self.a * self.p / (1.0 - self.p)
    }

    /// `1 − a/(1−p) = 1 − a − b`, the population eigenvalue.
    pub fn population_eigenvalue(&self) -> f64 {
        1.0 - self.a / (1.0 - self.p)
    }

    pub fn validate(&self) -> QubitValidation {
        self.validate_with_tol(VALIDATION_TOL)
    }

    pub fn validate_with_tol(&self, tol: f64) -> QubitValidation {
        let QubitDaviesParams { a, c, p } = *self;
        let finite = a.is_finite() && c.is_finite() && p.is_finite();
        let gibbs = if finite { p.min(0.5 - p) } else { f64::NAN };
        let a_range = a.min(1.0 - a);
        let a_plus_p = 1.0 - a - p;
        let bound_sq = self.population_eigenvalue();
        let bound = if bound_sq >= 0.0 {
            bound_sq.sqrt()
        } else {
            bound_sq
        };
        let c_bound = c.min(bound - c);
        let check = |constraint, margin: f64| ConstraintCheck {
            constraint,
            holds: margin >= -tol,
            margin,
        };
        // p = 0 is a pure state, not a Gibbs state at finite temperature
        let gibbs_check = ConstraintCheck {
            constraint: QubitConstraint::GibbsWeight,
            holds: p > 0.0 && gibbs >= -tol,
            margin: gibbs,
        };
        let checks = vec![
            gibbs_check,
            check(QubitConstraint::ARange, a_range),
            check(QubitConstraint::APlusP, a_plus_p),
            check(QubitConstraint::CBound, c_bound),
        ];
        QubitValidation {
            valid: checks.iter().all(|c| c.holds),
            checks,
        }
    }

    /// The 4×4 superoperator. No validation.
    pub fn superoperator(&self) -> Superoperator {
        let QubitDaviesParams { a, c, .. } = *self;
        let b = self.b();
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            1.0 - a, 0.0, 0.0, b,
            0.0, c, 0.0, 0.0,
            0.0, 0.0, c, 0.0,
            a, 0.0, 0.0, 1.0 - b,
        ]);
        Superoperator::new(m).expect("4x4 is a qubit superoperator")
    }

    pub fn build(&self) -> Result<Superoperator> {
        let report = self.validate();
        if let Some(first) = report.checks.iter().find(|c| !c.holds) {
            return Err(invalid(first, self));
        }
        Ok(self.superoperator())
    }

    pub fn gibbs(&self) -> Result<GibbsState> {
        GibbsState::from_probabilities(&[self.p, 1.0 - self.p])
    }

    pub fn to_bloch(&self) -> BlochAffineMap {
        let eta = self.population_eigenvalue();
        BlochAffineMap {
            eta1: self.c,
            eta2: self.c,
            eta3: eta,
            // + 0.0 drops the sign of a negative zero
            kappa3: self.a * (2.0 * self.p - 1.0) / (1.0 - self.p) + 0.0,
        }
    }

    /// Reads `(a, c, p)` off a superoperator with the Davies sparsity
    /// pattern, entries matched to `tol`. With `a = 0` the weight is not
    /// determined and `p = ½` is reported.
    pub fn from_superoperator(phi: &Superoperator, tol: f64) -> Option<Self> {
        if phi.dim() != 2 {
            return None;
        }
        let m = phi.matrix();
        let pattern_ok = (0..4).all(|i| {
            (0..4).all(|j| {
                let structural =
                    matches!((i, j), (0, 0) | (0, 3) | (3, 0) | (3, 3) | (1, 1) | (2, 2));
                m[(i, j)].im.abs() <= tol && (structural || m[(i, j)].re.abs() <= tol)
            })
        });
        let (a, b, c) = (m[(3, 0)].re, m[(0, 3)].re, m[(1, 1)].re);
        let consistent = (m[(2, 2)].re - c).abs() <= tol
            && (m[(0, 0)].re - (1.0 - a)).abs() <= tol
            && (m[(3, 3)].re - (1.0 - b)).abs() <= tol;
        if !pattern_ok || !consistent {
            return None;
        }
        let p = if a.abs() <= tol && b.abs() <= tol {
            0.5
        } else {
            b / (a + b)
        };
        Some(QubitDaviesParams { a, c, p })
    }

    /// `log Φ` when it exists as a real matrix (`c > 0`, `1 − a − b > 0`).
    pub fn candidate_generator(&self) -> Option<Superoperator> {
        let s = self.population_eigenvalue();
        if !(self.c > 0.0 && s > 0.0) {
            return None;
        }
        // Population block M has eigenvalues 1 and s, so
        // log M = log(s)/(s − 1) · (M − 𝟙).
        let k = if (s - 1.0).abs() < 1e-300 {
            1.0
        } else {
            s.ln() / (s - 1.0)
        };
        let (a, b) = (self.a, self.b());
        let lc = self.c.ln();
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            -a * k, 0.0, 0.0, b * k,
            0.0, lc, 0.0, 0.0,
            0.0, 0.0, lc, 0.0,
            a * k, 0.0, 0.0, -b * k,
        ]);
        Superoperator::new(m).ok()
    }
}

fn invalid(check: &ConstraintCheck, params: &QubitDaviesParams) -> Error {
    let hint = if check.constraint == QubitConstraint::GibbsWeight && params.p > 0.5 {
        " (level 1 is the excited level, e1 > e2, so its Gibbs weight p cannot exceed 1/2)"
    } else {
        ""
    };
    Error::InvalidParams(format!(
        "{} violated by (a, c, p) = ({}, {}, {}), margin {:.3e}{hint}",
        check.constraint.describe(),
        params.a,
        params.c,
        params.p,
        check.margin
    ))
}

/// Rates of a qubit Davies semigroup: `a(t) = (1−p)(1 − e^{−At})`,
/// `c(t) = e^{−Γt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitRates {
    /// Population relaxation rate `A`.
    pub rate_a: f64,
    pub gamma: f64,
    pub p: f64,
    pub t: f64,
}

impl QubitRates {
    /// The time map without the `Γ ≥ A/2` check.
    pub fn params_unchecked(&self) -> QubitDaviesParams {
        QubitDaviesParams {
            a: (1.0 - self.p) * -(-self.rate_a * self.t).exp_m1(),
            c: (-self.gamma * self.t).exp(),
            p: self.p,
        }
    }

    pub fn to_params(&self) -> Result<QubitDaviesParams> {
        if !(self.rate_a >= 0.0 && self.t >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "need A >= 0 and t >= 0, got A = {}, t = {}",
                self.rate_a, self.t
            )));
        }
        if !(self.gamma >= self.rate_a / 2.0) {
            return Err(Error::RateOrderViolated {
                gamma: self.gamma,
                half_a: self.rate_a / 2.0,
            });
        }
        let params = self.params_unchecked();
        QubitDaviesParams::new(params.a, params.c, params.p)
    }
}

pub fn from_rates(rates: &QubitRates) -> Result<QubitDaviesParams> {
    rates.to_params()
}

/// Relaxation-time description: transverse `τ₁ = τ₂`, longitudinal `τ₃`,
/// equilibrium inversion `w_eq = 2p − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationTimes {
    pub tau1: f64,
    pub tau3: f64,
    pub w_eq: f64,
    pub t: f64,
}

impl RelaxationTimes {
    pub fn new(tau1: f64, tau3: f64, w_eq: f64, t: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau3 > 0.0 && tau1.is_finite() && tau3.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "relaxation times must be positive, got tau1 = {tau1}, tau3 = {tau3}"
            )));
        }
        if !(w_eq > -1.0 && w_eq <= 0.0) {
            return Err(Error::InvalidParams(format!(
                "equilibrium inversion must lie in (-1, 0], got {w_eq}"
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
        }
        Ok(RelaxationTimes {
            tau1,
            tau3,
            w_eq,
            t,
        })
    }

    pub fn p(&self) -> f64 {
        (1.0 + self.w_eq) / 2.0
    }

    pub fn at(&self, t: f64) -> RelaxationTimes {
        RelaxationTimes { t, ..*self }
    }

    pub fn rates(&self) -> QubitRates {
        QubitRates {
            rate_a: 1.0 / self.tau3,
            gamma: 1.0 / self.tau1,
            p: self.p(),
            t: self.t,
        }
    }

    pub fn params(&self) -> QubitDaviesParams {
        self.rates().params_unchecked()
    }

    pub fn satisfies_semigroup_bound(&self) -> bool {
        self.tau1 <= 2.0 * self.tau3
    }

    /// Generator in the Bloch basis, acting on `(1, u, v, w)`.
    pub fn generator_bloch(&self) -> CMatrix {
        let (g1, g3) = (1.0 / self.tau1, 1.0 / self.tau3);
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            0.0, -g1, 0.0, 0.0,
            0.0, 0.0, -g1, 0.0,
            self.w_eq * g3, 0.0, 0.0, -g3,
        ]);
        m
    }

    /// Generator in superoperator form.
    pub fn generator_super(&self) -> Superoperator {
        let (g1, g3) = (1.0 / self.tau1, 1.0 / self.tau3);
        let p = self.p();
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            -(1.0 - p) * g3, 0.0, 0.0, p * g3,
            0.0, -g1, 0.0, 0.0,
            0.0, 0.0, -g1, 0.0,
            (1.0 - p) * g3, 0.0, 0.0, -p * g3,
        ]);
        Superoperator::new(m).expect("4x4")
    }

    /// Closed form of `exp(t·L_S)`.
    pub fn propagator_closed_form(&self) -> Superoperator {
        let p = self.p();
        let d3 = -(-self.t / self.tau3).exp_m1();
        let e1 = (-self.t / self.tau1).exp();
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            1.0 - d3 * (1.0 - p), 0.0, 0.0, d3 * p,
            0.0, e1, 0.0, 0.0,
            0.0, 0.0, e1, 0.0,
            d3 * (1.0 - p), 0.0, 0.0, 1.0 - d3 * p,
        ]);
        Superoperator::new(m).expect("4x4")
    }

    /// Bloch form of the map at time `t`.
    pub fn evolve(&self) -> Result<BlochAffineMap> {
        if !self.satisfies_semigroup_bound() {
            return Err(Error::SemigroupConstraintViolated {
                tau1: self.tau1,
                tau3: self.tau3,
            });
        }
        let e1 = (-self.t / self.tau1).exp();
        let e3 = (-self.t / self.tau3).exp();
        Ok(BlochAffineMap {
            eta1: e1,
            eta2: e1,
            eta3: e3,
            kappa3: -(-self.t / self.tau3).exp_m1() * self.w_eq + 0.0,
        })
    }
}

/// Affine action on the Bloch ball with diagonal linear part:
/// `x' = (η₁x, η₂y, κ₃ + η₃z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochAffineMap {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub kappa3: f64,
}

impl BlochAffineMap {
    pub fn identity() -> Self {
        BlochAffineMap {
            eta1: 1.0,
            eta2: 1.0,
            eta3: 1.0,
            kappa3: 0.0,
        }
    }

    /// 4×4 matrix on `(1, x, y, z)`.
    pub fn matrix(&self) -> CMatrix {
        #[rustfmt::skip]
        let m = from_real_rows(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, self.eta1, 0.0, 0.0,
            0.0, 0.0, self.eta2, 0.0,
            self.kappa3, 0.0, 0.0, self.eta3,
        ]);
        m
    }

    pub fn to_superoperator(&self) -> Superoperator {
        bloch_to_super(&self.matrix())
    }

    /// Whether the image ellipsoid lies in the unit ball, checked on the
    /// poles and a ring of equatorial-to-polar directions.
    pub fn image_in_unit_ball(&self, tol: f64) -> bool {
        let steps = 256;
        (0..=steps).all(|k| {
            let theta = std::f64::consts::PI * k as f64 / steps as f64;
            let (s, z) = theta.sin_cos();
            let x = self.eta1 * s;
            let zz = self.kappa3 + self.eta3 * z;
            (x * x + zz * zz).sqrt() <= 1.0 + tol
        })
    }
}

/// `vec(ρ) = T·(1, x, y, z)` for `ρ = ½(𝟙 + x σ_x + y σ_y + z σ_z)`.
fn bloch_frame() -> (CMatrix, CMatrix) {
    let h = c(0.5);
    let z = c(0.0);
    let ih = Complex64::new(0.0, 0.5);
    #[rustfmt::skip]
    let t = CMatrix::from_row_slice(4, 4, &[
        h, z, z, h,
        z, h, -ih, z,
        z, h, ih, z,
        h, z, z, -h,
    ]);
    let one = c(1.0);
    let i = Complex64::new(0.0, 1.0);
    #[rustfmt::skip]
    let t_inv = CMatrix::from_row_slice(4, 4, &[
        one, z, z, one,
        z, one, one, z,
        z, i, -i, z,
        one, z, z, -one,
    ]);
    (t, t_inv)
}

/// Superoperator of a map given in Bloch form.
pub fn bloch_to_super(bloch: &CMatrix) -> Superoperator {
    let (t, t_inv) = bloch_frame();
    Superoperator::new(&t * bloch * t_inv).expect("4x4")
}

/// Bloch form of a qubit superoperator.
pub fn super_to_bloch(phi: &Superoperator) -> Result<CMatrix> {
    if phi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: phi.dim(),
        });
    }
    let (t, t_inv) = bloch_frame();
    Ok(t_inv * phi.matrix() * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub a: f64,
    pub c: f64,
    pub p: f64,
    pub valid: bool,
    pub choi_min_eig: f64,
    /// Valid point adjacent to the edge of the allowed region.
    pub boundary: bool,
}

/// Classifies the `grid × grid` lattice on `[0, 1]²` in the `(c, a)` plane.
/// Output is ordered by `(a-index, c-index)`.
pub fn region_grid(p: f64, grid: usize) -> Result<Vec<RegionPoint>> {
    check_region_args(p, grid)?;
    let h = 1.0 / (grid - 1) as f64;
    let classify = |i: usize, j: usize| -> Result<(QubitDaviesParams, bool, f64, f64)> {
        let params = QubitDaviesParams::new_unchecked(i as f64 * h, j as f64 * h, p);
        let report = params.validate();
        let margin = report
            .checks
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min);
        let cp = channel::is_completely_positive(&params.superoperator(), channel::DEFAULT_CP_TOL)?;
        Ok((params, report.valid, cp.min_eigenvalue, margin))
    };
    let cells: Vec<(QubitDaviesParams, bool, f64, f64)> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| classify(idx / grid, idx % grid))
        .collect::<Result<_>>()?;
    let valid_at = |i: usize, j: usize| cells[i * grid + j].1;
    Ok((0..grid * grid)
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let (params, valid, choi_min_eig, margin) = cells[idx];
            let neighbours = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            let edge = neighbours
                .iter()
                .any(|&(ni, nj)| ni < grid && nj < grid && !valid_at(ni, nj));
            RegionPoint {
                a: params.a,
                c: params.c,
                p,
                valid,
                choi_min_eig,
                boundary: valid && (edge || margin.abs() <= VALIDATION_TOL),
            }
        })
        .collect())
}

fn check_region_args(p: f64, grid: usize) -> Result<()> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::InvalidParams(format!(
            "p must lie in (0, 1/2], got {p}"
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidParams(format!(
            "grid must be >= 2, got {grid}"
        )));
    }
    Ok(())
}

/// Allowed region of the `(c, a)` plane at fixed `p`.
#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub p: f64,
    /// Valid lattice points only.
    pub points: Vec<RegionPoint>,
    /// `(c, a)` samples of `c = √(1 − a/(1−p))`, `0 ≤ a ≤ 1 − p`.
    pub boundary: Vec<(f64, f64)>,
    /// `(c, a)` corners: identity, full dephasing, total relaxation.
    pub corners: [(f64, f64); 3],
}

pub fn region_sample(p: f64, grid: usize) -> Result<Region> {
    let points = region_grid(p, grid)?
        .into_iter()
        .filter(|pt| pt.valid)
        .collect();
    Ok(Region {
        p,
        points,
        boundary: boundary_curve(p, grid),
        corners: [(1.0, 0.0), (0.0, 0.0), (0.0, 1.0 - p)],
    })
}

pub fn boundary_curve(p: f64, samples: usize) -> Vec<(f64, f64)> {
    let samples = samples.max(2);
    (0..samples)
        .map(|k| {
            let a = (1.0 - p) * k as f64 / (samples - 1) as f64;
            let bound = (1.0 - a / (1.0 - p)).max(0.0);
            (bound.sqrt(), a)
        })
        .collect()
}

/// Largest `c` at which the candidate generator of `(a, c, p)` is
/// conditionally completely positive, by bisection on the numerical test.
pub fn ccp_boundary_c(a: f64, p: f64, tol: f64) -> Result<f64> {
    let ccp = |c: f64| -> Result<bool> {
        let params = QubitDaviesParams::new_unchecked(a, c, p);
        match params.candidate_generator() {
            Some(gen) => Ok(channel::is_ccp_generator(&gen, channel::DEFAULT_CCP_TOL)?.holds),
            None => Ok(false),
        }
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if ccp(hi)? {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && ccp(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A unital Davies map `(η₁, η₁, η₃)` at infinite temperature.
#[derive(Debug, Clone, Serialize)]
pub struct BistochasticPoint {
    pub eta1: f64,
    pub eta3: f64,
    pub params: QubitDaviesParams,
    pub kappa3: f64,
    pub choi_min_eig: f64,
    /// Smallest eigenvalue of the generator Choi matrix off `|Ψ⁺⟩`;
    /// `None` on the faces where no real logarithm exists.
    pub generator_ccp_min_eig: Option<f64>,
    #[serde(skip)]
    pub map: Superoperator,
}

/// Maps of the infinite-temperature cross-section: `η₃ ∈ [0, 1]` and
/// `0 ≤ η₁ ≤ √η₃` sampled on a `grid × grid` lattice.
pub fn bistochastic_section(grid: usize) -> Result<Vec<BistochasticPoint>> {
    let grid = grid.max(2);
    let h = 1.0 / (grid - 1) as f64;
    let mut out = Vec::new();
    for i in 0..grid {
        let eta3 = i as f64 * h;
        for j in 0..grid {
            let eta1 = j as f64 * h;
            if eta1 > eta3.sqrt() + VALIDATION_TOL {
                continue;
            }
            let params = QubitDaviesParams::new_unchecked((1.0 - eta3) / 2.0, eta1, 0.5);
            let map = params.superoperator();
            let choi_min_eig =
                channel::is_completely_positive(&map, channel::DEFAULT_CP_TOL)?.min_eigenvalue;
            let generator_ccp_min_eig = match params.candidate_generator() {
                Some(gen) => {
                    Some(channel::is_ccp_generator(&gen, channel::DEFAULT_CCP_TOL)?.min_eigenvalue)
                }
                None => None,
            };
            out.push(BistochasticPoint {
                eta1,
                eta3,
                kappa3: params.to_bloch().kappa3,
                params,
                choi_min_eig,
                generator_ccp_min_eig,
                map,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoeCase {
    /// `c² ≤ (1−a−b)²`: the radicand is convex, minimizer `μ = 0`.
    One = 1,
    /// `(1−a−b)² ≤ c² ≤ (1−a−b)(1−2b)`: concave, vertex left of 0.
    Two = 2,
    /// `(1−a−b)(1−2b) ≤ c²`: interior minimizer `μ₀`.
    Three = 3,
}

impl MoeCase {
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl Serialize for MoeCase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoeAnalytic {
    pub entropy: f64,
    /// Excited-state weight of the optimal pure input.
    pub mu: f64,
    pub case: MoeCase,
    /// Output eigenvalues, larger first.
    pub eigenvalues: [f64; 2],
}

/// Squared eigenvalue splitting of `Φ(ρ)` for the pure input with
/// excited weight `μ`: `(2(1−a−b)μ − (1−2b))² + 4c²μ(1−μ)`.
pub fn moe_radicand(params: &QubitDaviesParams, mu: f64) -> f64 {
    let s = params.population_eigenvalue();
    let b = params.b();
    let d = 2.0 * s * mu - (1.0 - 2.0 * b);
    d * d + 4.0 * params.c * params.c * mu * (1.0 - mu)
}

pub fn moe_case(params: &QubitDaviesParams) -> MoeCase {
    let s = params.population_eigenvalue();
    let b = params.b();
    let c2 = params.c * params.c;
    if c2 <= s * s + MOE_CASE_TOL {
        MoeCase::One
    } else if c2 <= s * (1.0 - 2.0 * b) + MOE_CASE_TOL {
        MoeCase::Two
    } else {
        MoeCase::Three
    }
}

/// Closed-form minimal output entropy of a qubit Davies map.
pub fn min_output_entropy_analytic(
    params: &QubitDaviesParams,
    base: LogBase,
) -> Result<MoeAnalytic> {
    params.build()?;
    let b = params.b();
    let case = moe_case(params);
    let (mu, split) = match case {
        MoeCase::One | MoeCase::Two => (0.0, (1.0 - 2.0 * b).abs()),
        MoeCase::Three => {
            let (a, c2) = (params.a, params.c * params.c);
            let s = params.population_eigenvalue();
            let mu0 =
                ((a + b - 1.0) * (2.0 * b - 1.0) - c2) / (2.0 * (a + b - 1.0).powi(2) - 2.0 * c2);
            let radicand = c2 * (c2 + a * (2.0 - 4.0 * b) + 2.0 * b - 1.0) / (c2 - s * s);
            (mu0.clamp(0.0, 1.0), radicand.clamp(0.0, 1.0).sqrt())
        }
    };
    let hi = 0.5 * (1.0 + split);
    let lo = 0.5 * (1.0 - split);
    Ok(MoeAnalytic {
        entropy: binary_entropy(hi, base),
        mu,
        case,
        eigenvalues: [hi, lo],
    })
}

/// Whether the map at time `t` sits in case 1, i.e. `c² ≤ (1−a−b)²`.
pub fn moe_case_boundary(times: &RelaxationTimes) -> Result<bool> {
    times.evolve()?;
    Ok(moe_case(&times.params()) == MoeCase::One)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{self, norm};

    #[test]
    fn identity_corner() {
        let phi = QubitDaviesParams::new(0.0, 1.0, 0.3)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(phi, Superoperator::identity(2));
    }

    #[test]
    fn total_relaxation_corner() {
        let p = 0.2;
        let phi = QubitDaviesParams::new(1.0 - p, 0.0, p)
            .unwrap()
            .build()
            .unwrap();
        let rho = crate::channel::DensityMatrix::pure(&[c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        let out = phi.apply(&rho, true).unwrap();
        let target = crate::channel::DensityMatrix::diagonal(&[p, 1.0 - p]).unwrap();
        assert!(norm(&(out.matrix() - target.matrix())) < 1e-15);
    }

    #[test]
    fn build_entries() {
        let params = QubitDaviesParams::new(0.3, 0.5, 0.25).unwrap();
        assert!((params.b() - 0.1).abs() < 1e-15);
        let m = params.build().unwrap();
        assert!((m.matrix()[(0, 3)].re - 0.1).abs() < 1e-15);
        assert!((m.matrix()[(3, 3)].re - 0.9).abs() < 1e-15);
    }

    #[test]
    fn validation_examples() {
        let cg = QubitDaviesParams::new_unchecked(0.5, 0.0, 0.5).validate();
        assert!(cg.valid);
        let bad = QubitDaviesParams::new_unchecked(0.6, 0.9, 0.25).validate();
        assert!(!bad.valid);
        assert_eq!(bad.violated(), vec![QubitConstraint::CBound]);
        let margin = bad.checks[3].margin;
        assert!((margin - (0.2f64.sqrt() - 0.9)).abs() < 1e-15);
        for p in [0.05, 0.3, 0.5] {
            assert!(
                QubitDaviesParams::new_unchecked(0.0, 1.0, p)
                    .validate()
                    .valid
            );
        }
    }

    #[test]
    fn p_above_half_rejected_with_explanation() {
        let err = QubitDaviesParams::new(0.1, 0.5, 0.7).unwrap_err();
        assert!(err.to_string().contains("e1 > e2"), "{err}");
    }

    #[test]
    fn rate_examples() {
        let r = QubitRates {
            rate_a: 1.0,
            gamma: 0.5,
            p: 0.25,
            t: 0.0,
        };
        let at0 = from_rates(&r).unwrap();
        assert_eq!((at0.a, at0.c), (0.0, 1.0));
        let r = QubitRates { t: 2f64.ln(), ..r };
        let q = from_rates(&r).unwrap();
        assert!((q.a - 0.375).abs() < 1e-15);
        assert!((q.c - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((q.c * q.c - q.population_eigenvalue()).abs() < 1e-15);
        let bad = QubitRates { gamma: 0.4, ..r };
        assert!(matches!(
            from_rates(&bad),
            Err(Error::RateOrderViolated { .. })
        ));
    }

    #[test]
    fn generator_examples() {
        let iso = RelaxationTimes::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let lb = iso.generator_bloch();
        for k in 0..4 {
            let expected = if k == 0 { 0.0 } else { -1.0 };
            assert_eq!(lb[(k, k)].re, expected);
        }
        let r = RelaxationTimes::new(1.0, 2.0, -0.4, 0.0).unwrap();
        let ls = r.generator_super();
        assert!((ls.matrix()[(0, 0)].re + 0.35).abs() < 1e-15);
        assert!((ls.matrix()[(0, 3)].re - 0.15).abs() < 1e-15);
        // outer block is classically detailed balanced w.r.t. (p, 1 − p)
        let p = r.p();
        let m = ls.matrix();
        assert!((m[(0, 3)].re * (1.0 - p) - m[(3, 0)].re * p).abs() < 1e-15);
    }

    #[test]
    fn bloch_and_super_generators_agree() {
        let r = RelaxationTimes::new(1.3, 0.9, -0.2, 0.0).unwrap();
        let via_bloch = bloch_to_super(&r.generator_bloch());
        assert!(norm(&(via_bloch.matrix() - r.generator_super().matrix())) < 1e-14);
    }

    #[test]
    fn propagator_matches_expm() {
        let r = RelaxationTimes::new(1.3, 0.9, -0.2, 0.0).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let numeric = r.generator_super().exp(t).unwrap();
            let closed = r.at(t).propagator_closed_form();
            assert!(norm(&(numeric.matrix() - closed.matrix())) < 1e-12);
        }
    }

    #[test]
    fn evolve_examples() {
        let r = RelaxationTimes::new(1.0, 1.0, -0.4, 0.0).unwrap();
        assert_eq!(r.evolve().unwrap(), BlochAffineMap::identity());
        let late = r.at(1e4).evolve().unwrap();
        assert!(late.eta1.abs() < 1e-300 && late.eta3.abs() < 1e-300);
        assert!((late.kappa3 + 0.4).abs() < 1e-15);
        let one = r.at(1.0).evolve().unwrap();
        let e = (-1.0f64).exp();
        assert!((one.eta1 - e).abs() < 1e-15 && (one.eta3 - e).abs() < 1e-15);
        assert!((one.kappa3 + 0.4 * (1.0 - e)).abs() < 1e-15);
        let bad = RelaxationTimes::new(3.0, 1.0, -0.4, 1.0).unwrap();
        assert!(matches!(
            bad.evolve(),
            Err(Error::SemigroupConstraintViolated { .. })
        ));
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(
            QubitDaviesParams::new(0.0, 1.0, 0.3).unwrap().to_bloch(),
            BlochAffineMap::identity()
        );
        assert_eq!(
            QubitDaviesParams::new(0.3, 0.5, 0.5)
                .unwrap()
                .to_bloch()
                .kappa3,
            0.0
        );
        let m = QubitDaviesParams::new(0.3, 0.5, 0.25).unwrap().to_bloch();
        assert!((m.eta3 - 0.6).abs() < 1e-15);
        assert!((m.kappa3 + 0.2).abs() < 1e-15);
        assert!(m.image_in_unit_ball(1e-12));
    }

    #[test]
    fn bloch_round_trip() {
        let params = QubitDaviesParams::new(0.3, 0.5, 0.25).unwrap();
        let back = params.to_bloch().to_superoperator();
        assert!(norm(&(back.matrix() - params.superoperator().matrix())) < 1e-15);
        let bloch = super_to_bloch(&params.superoperator()).unwrap();
        assert!(norm(&(bloch - params.to_bloch().matrix())) < 1e-15);
    }

    #[test]
    fn grid_of_two_is_the_corners() {
        let pts = region_grid(0.5, 2).unwrap();
        let coords: Vec<(f64, f64)> = pts.iter().map(|p| (p.a, p.c)).collect();
        assert_eq!(coords, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
        let valid: Vec<bool> = pts.iter().map(|p| p.valid).collect();
        assert_eq!(valid, vec![true, true, false, false]);
    }

    #[test]
    fn region_corners_at_infinite_temperature() {
        let region = region_sample(0.5, 11).unwrap();
        assert_eq!(region.corners, [(1.0, 0.0), (0.0, 0.0), (0.0, 0.5)]);
        for pt in &region.points {
            assert!(pt.a <= 0.5 + 1e-12);
            assert!(pt.c <= (1.0 - 2.0 * pt.a).sqrt() + 1e-12);
        }
        assert!(region.points.iter().any(|p| p.a == 0.5 && p.c == 0.0));
    }

    #[test]
    fn region_rejects_bad_args() {
        assert!(region_grid(0.6, 10).is_err());
        assert!(region_grid(0.3, 1).is_err());
    }

    #[test]
    fn bistochastic_corners() {
        let pts = bistochastic_section(3).unwrap();
        let id = pts.iter().find(|p| p.eta1 == 1.0 && p.eta3 == 1.0).unwrap();
        assert_eq!(id.map, Superoperator::identity(2));
        let cd = pts.iter().find(|p| p.eta1 == 0.0 && p.eta3 == 0.0).unwrap();
        let rho = crate::channel::DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        let out = cd.map.apply(&rho, true).unwrap();
        assert!(norm(&(out.matrix() - numerics::identity(2).scale(0.5))) < 1e-15);
    }

    #[test]
    fn moe_identity_and_classical() {
        let id = min_output_entropy_analytic(
            &QubitDaviesParams::new(0.0, 1.0, 0.3).unwrap(),
            LogBase::Two,
        )
        .unwrap();
        assert!(id.entropy.abs() < 1e-15);
        let params = QubitDaviesParams::new(0.4, 0.0, 0.3).unwrap();
        let r = min_output_entropy_analytic(&params, LogBase::Two).unwrap();
        assert_eq!(r.case, MoeCase::One);
        assert!((r.entropy - binary_entropy(params.b(), LogBase::Two)).abs() < 1e-15);
    }

    #[test]
    fn moe_case_three_example() {
        let params = QubitDaviesParams::new(0.1, 0.9, 0.25).unwrap();
        let s = params.population_eigenvalue();
        let b = params.b();
        assert!(0.81 > s * (1.0 - 2.0 * b));
        let r = min_output_entropy_analytic(&params, LogBase::Two).unwrap();
        assert_eq!(r.case, MoeCase::Three);
        assert!(r.mu > 0.0 && r.mu < 1.0);
        // the radicand is stationary at μ₀
        let h = 1e-6;
        let slope = (moe_radicand(&params, r.mu + h) - moe_radicand(&params, r.mu - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-8, "{slope}");
        let split = moe_radicand(&params, r.mu).sqrt();
        assert!((split - (r.eigenvalues[0] - r.eigenvalues[1])).abs() < 1e-12);
    }

    #[test]
    fn moe_case_in_time_domain() {
        for (tau1, tau3, expected) in [(1.0, 2.0, true), (1.9, 1.0, false), (1.5, 1.5, true)] {
            let r = RelaxationTimes::new(tau1, tau3, -0.4, 1.0).unwrap();
            assert_eq!(moe_case_boundary(&r).unwrap(), expected, "{tau1} {tau3}");
        }
    }

    #[test]
    fn candidate_generator_inverts_build() {
        let params = QubitDaviesParams::new(0.3, 0.5, 0.25).unwrap();
        let gen = params.candidate_generator().unwrap();
        let back = gen.exp(1.0).unwrap();
        assert!(norm(&(back.matrix() - params.superoperator().matrix())) < 1e-13);
        assert!(QubitDaviesParams::new_unchecked(0.75, 0.5, 0.25)
            .candidate_generator()
            .is_none());
        assert!(QubitDaviesParams::new_unchecked(0.3, 0.0, 0.25)
            .candidate_generator()
            .is_none());
    }

    #[test]
    fn ccp_boundary_matches_closed_form() {
        for (a, p) in [(0.1, 0.5), (0.3, 0.25), (0.6, 0.1)] {
            let c_star = ccp_boundary_c(a, p, 1e-12).unwrap();
            let expected = (1.0 - a / (1.0 - p)).sqrt();
            assert!(
                (c_star - expected).abs() < 1e-9,
                "{a} {p}: {c_star} vs {expected}"
            );
        }
    }
}
