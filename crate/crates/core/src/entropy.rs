//! Entropies and the numerical minimal-output-entropy search.
//!
//! The search runs over pure inputs with nonnegative real amplitudes. For a
//! Davies map the populations and coherences do not mix, so a diagonal
//! unitary on the input only conjugates the output by the same diagonal
//! unitary, and the phases can be dropped without changing the entropy.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{self, DensityMatrix, Superoperator};
use crate::error::{Error, Result};
use crate::numerics::{self, c};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Bits.
    #[default]
    Two,
    /// Nats.
    E,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

/// `−Σ λ log λ` with `0 log 0 = 0`; values are clipped to `[0, 1]`.
pub fn entropy_of_spectrum(values: &[f64], base: LogBase) -> f64 {
    values
        .iter()
        .map(|&v| v.clamp(0.0, 1.0))
        .filter(|&v| v > 0.0)
        .map(|v| -v * base.log(v))
        .sum::<f64>()
        .max(0.0)
}

/// Binary entropy `H(x, 1 − x)`.
pub fn binary_entropy(x: f64, base: LogBase) -> f64 {
    entropy_of_spectrum(&[x, 1.0 - x], base)
}

pub fn shannon(p: &[f64], base: LogBase) -> Result<f64> {
    let total: f64 = p.iter().sum();
    if p.is_empty()
        || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite())
        || (total - 1.0).abs() > 1e-12
    {
        return Err(Error::NotDistribution(format!("{p:?}")));
    }
    Ok(entropy_of_spectrum(p, base))
}

/// `S(ρ) = −tr ρ log ρ`.
pub fn von_neumann(rho: &DensityMatrix, base: LogBase) -> Result<f64> {
    let eig = numerics::eig_hermitian(rho.matrix())?;
    if eig.min() < -channel::STATE_TOL || eig.max() > 1.0 + channel::STATE_TOL {
        return Err(Error::NotAState(format!(
            "spectrum outside [0, 1]: {:?}",
            eig.values
        )));
    }
    Ok(entropy_of_spectrum(&eig.values, base))
}

#[derive(Debug, Clone)]
pub struct EntropyResult {
    pub value: f64,
    /// Pure input state attaining `value`.
    pub minimizer: DensityMatrix,
    /// Nonnegative amplitudes of the minimizer.
    pub amplitudes: Vec<f64>,
    /// Number of objective evaluations.
    pub iterations: usize,
    /// Finite-difference Lipschitz constant of the grid objective times the
    /// final search resolution.
    pub gap_estimate: f64,
}

impl EntropyResult {
    /// Excited-state weight `μ = |ψ₁|²` for qubit results.
    pub fn mu(&self) -> Option<f64> {
        (self.amplitudes.len() == 2).then(|| self.amplitudes[0] * self.amplitudes[0])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MoeOptions {
    pub base: LogBase,
    pub qubit_grid: usize,
    pub qutrit_grid: usize,
    /// Resolution at which refinement stops.
    pub resolution: f64,
    /// Reject maps that are not CP or not trace preserving.
    pub validate: bool,
}

impl Default for MoeOptions {
    fn default() -> Self {
        MoeOptions {
            base: LogBase::Two,
            qubit_grid: 2048,
            qutrit_grid: 200,
            resolution: 1e-10,
            validate: true,
        }
    }
}

struct Objective<'a> {
    phi: &'a Superoperator,
    base: LogBase,
    evaluations: usize,
}

impl Objective<'_> {
    fn entropy(&mut self, amplitudes: &[f64]) -> f64 {
        self.evaluations += 1;
        let psi: Vec<Complex64> = amplitudes.iter().map(|&a| c(a)).collect();
        let n = psi.len();
        let input = numerics::CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j]);
        let out = self
            .phi
            .apply_matrix(&input)
            .expect("dimension checked by caller");
        match numerics::eig_hermitian_with_tol(&out, 1e-9) {
            Ok(eig) => entropy_of_spectrum(&eig.values, self.base),
            Err(_) => f64::INFINITY,
        }
    }
}

fn qubit_amplitudes(mu: f64) -> [f64; 2] {
    let mu = mu.clamp(0.0, 1.0);
    [mu.sqrt(), (1.0 - mu).sqrt()]
}

fn qutrit_amplitudes(x1: f64, x2: f64) -> [f64; 3] {
    let x3 = (1.0 - x1 - x2).max(0.0);
    [x1.max(0.0).sqrt(), x2.max(0.0).sqrt(), x3.sqrt()]
}

/// Minimal output entropy by direct search over pure inputs.
pub fn moe_numeric(phi: &Superoperator, options: &MoeOptions) -> Result<EntropyResult> {
    if options.validate {
        let residual = phi.trace_preservation_residual();
        if residual > channel::DEFAULT_TP_TOL * 100.0 {
            return Err(Error::NotTp { residual });
        }
        let cp = channel::is_completely_positive(phi, channel::DEFAULT_CP_TOL)?;
        if !cp.holds {
            return Err(Error::NotCp {
                min_eigenvalue: cp.min_eigenvalue,
            });
        }
    }
    let mut objective = Objective {
        phi,
        base: options.base,
        evaluations: 0,
    };
    match phi.dim() {
        2 => Ok(search_qubit(&mut objective, options)),
        3 => Ok(search_qutrit(&mut objective, options)),
        n => Err(Error::DimensionMismatch {
            expected: 3,
            found: n,
        }),
    }
}

fn search_qubit(objective: &mut Objective, options: &MoeOptions) -> EntropyResult {
    let grid = options.qubit_grid.max(2);
    let h = 1.0 / (grid - 1) as f64;
    let values: Vec<f64> = (0..grid)
        .map(|k| objective.entropy(&qubit_amplitudes(k as f64 * h)))
        .collect();
    // Ties go to the smaller μ.
    let best = (0..grid).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    let lipschitz = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0, f64::max);

    let mut lo = (best as f64 - 1.0).max(0.0) * h;
    let mut hi = ((best + 1).min(grid - 1)) as f64 * h;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective.entropy(&qubit_amplitudes(x1));
    let mut f2 = objective.entropy(&qubit_amplitudes(x2));
    while hi - lo > options.resolution {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective.entropy(&qubit_amplitudes(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective.entropy(&qubit_amplitudes(x2));
        }
    }
    let mut mu = best as f64 * h;
    let mut value = values[best];
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < value {
            value = f;
            mu = x;
        }
    }
    let amplitudes = qubit_amplitudes(mu).to_vec();
    finish(objective, value, amplitudes, lipschitz * options.resolution)
}

fn search_qutrit(objective: &mut Objective, options: &MoeOptions) -> EntropyResult {
    let grid = options.qutrit_grid.max(1);
    let h = 1.0 / grid as f64;
    let mut table = vec![vec![f64::NAN; grid + 1]; grid + 1];
    let mut best = (0usize, 0usize, f64::INFINITY);
    for i in 0..=grid {
        for j in 0..=grid - i {
            let f = objective.entropy(&qutrit_amplitudes(i as f64 * h, j as f64 * h));
            table[i][j] = f;
            if f < best.2 {
                best = (i, j, f);
            }
        }
    }
    let mut lipschitz = 0.0f64;
    for i in 0..=grid {
        for j in 0..=grid - i {
            if i + 1 + j <= grid {
                lipschitz = lipschitz.max((table[i + 1][j] - table[i][j]).abs() / h);
            }
            if i + j < grid {
                lipschitz = lipschitz.max((table[i][j + 1] - table[i][j]).abs() / h);
            }
        }
    }

    let (mut x1, mut x2, mut value) = (best.0 as f64 * h, best.1 as f64 * h, best.2);
    let directions = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let mut step = h;
    while step > options.resolution {
        let mut moved = false;
        for (d1, d2) in directions {
            let (y1, y2) = (x1 + d1 * step, x2 + d2 * step);
            if y1 < 0.0 || y2 < 0.0 || y1 + y2 > 1.0 {
                continue;
            }
            let f = objective.entropy(&qutrit_amplitudes(y1, y2));
            if f < value {
                value = f;
                x1 = y1;
                x2 = y2;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let amplitudes = qutrit_amplitudes(x1, x2).to_vec();
    finish(objective, value, amplitudes, lipschitz * step)
}

fn finish(
    objective: &Objective,
    value: f64,
    amplitudes: Vec<f64>,
    gap_estimate: f64,
) -> EntropyResult {
    let psi: Vec<Complex64> = amplitudes.iter().map(|&a| c(a)).collect();
    EntropyResult {
        value,
        minimizer: DensityMatrix::pure(&psi).expect("normalized amplitudes"),
        amplitudes,
        iterations: objective.evaluations,
        gap_estimate,
    }
}

/// `min_j H(column j)` of a column-stochastic matrix: the minimal output
/// entropy of the corresponding classical channel.
pub fn min_column_entropy(columns: &[Vec<f64>], base: LogBase) -> Result<f64> {
    columns
        .iter()
        .map(|col| shannon(col, base))
        .try_fold(f64::INFINITY, |acc, h| h.map(|h| acc.min(h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::pure(&[c(0.6), c(0.8)]).unwrap();
        assert!(von_neumann(&pure, LogBase::Two).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann(&mixed, LogBase::Two).unwrap() - 1.0).abs() < 1e-15);
        let e = (-1.0f64).exp();
        let p = e / (1.0 + e);
        let thermal = DensityMatrix::diagonal(&[p, 1.0 - p]).unwrap();
        let expected = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((von_neumann(&thermal, LogBase::Two).unwrap() - expected).abs() < 1e-15);
        assert!((p - 0.268_941_421_369_995).abs() < 1e-14);
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon(&[1.0, 0.0], LogBase::Two).unwrap(), 0.0);
        let third = 1.0 / 3.0;
        assert!((shannon(&[third; 3], LogBase::Two).unwrap() - 3f64.log2()).abs() < 1e-15);
        let h = shannon(&[0.1, 0.9], LogBase::Two).unwrap();
        assert!((h - 0.468_995_593_589_281).abs() < 1e-14);
        assert!(shannon(&[0.5, 0.6], LogBase::Two).is_err());
        assert!(shannon(&[-0.1, 1.1], LogBase::Two).is_err());
    }

    #[test]
    fn nats() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann(&mixed, LogBase::E).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn identity_channel_has_zero_moe() {
        for n in [2, 3] {
            let r = moe_numeric(&Superoperator::identity(n), &MoeOptions::default()).unwrap();
            assert!(r.value.abs() < 1e-12);
            assert!(r.minimizer.purity() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn depolarizing_has_one_bit() {
        let m = numerics::CMatrix::from_fn(4, 4, |r, col| {
            if r / 2 == r % 2 && col / 2 == col % 2 {
                c(0.5)
            } else {
                c(0.0)
            }
        });
        let phi = Superoperator::new(m).unwrap();
        let r = moe_numeric(&phi, &MoeOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_channels_rejected() {
        let scaled = Superoperator::new(numerics::identity(4).scale(0.5)).unwrap();
        assert!(matches!(
            moe_numeric(&scaled, &MoeOptions::default()),
            Err(Error::NotTp { .. })
        ));
    }
}
