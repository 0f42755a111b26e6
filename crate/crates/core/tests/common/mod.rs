//! Samplers and independent reference computations shared by the
//! integration tests. The reference computations never call the library's
//! own eigen-solvers or exponential.

#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use davieskit::qubit::QubitDaviesParams;
use davieskit::qutrit::{self, ClassicalGenerator, QutritDaviesParams};
use davieskit::CMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly increasing weights with non-degenerate energy gaps.
pub fn ordered_weights(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let x: [f64; 3] = [
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
        ];
        let s: f64 = x.iter().sum();
        let mut p = x.map(|v| v / s);
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gap_ok = p[1] - p[0] > 1e-3 && p[2] - p[1] > 1e-3;
        let bohr_ok = (p[1] * p[1] - p[0] * p[2]).abs() > 1e-6;
        if gap_ok && bohr_ok {
            return p;
        }
    }
}

/// Detailed-balance generator with lower rates drawn from `range`.
pub fn db_generator(
    rng: &mut impl Rng,
    p: [f64; 3],
    range: std::ops::Range<f64>,
) -> ClassicalGenerator {
    ClassicalGenerator::detailed_balance(
        p,
        rng.gen_range(range.clone()),
        rng.gen_range(range.clone()),
        rng.gen_range(range),
    )
}

/// Uniform sample from the valid `(a, c)` region at weight `p`.
pub fn valid_qubit(rng: &mut impl Rng) -> QubitDaviesParams {
    let p: f64 = rng.gen_range(0.01..=0.5);
    let a: f64 = rng.gen_range(0.0..=(1.0 - p));
    let bound = (1.0 - a / (1.0 - p)).max(0.0).sqrt();
    let c = rng.gen_range(0.0..=1.0) * bound;
    QubitDaviesParams::new(a, c, p).expect("sampled inside the region")
}

/// `exp(t·G)` for a detailed-balance generator by symmetrizing with
/// `D^{1/2}` and diagonalizing.
pub fn db_exp(g: &Matrix3<f64>, p: &[f64; 3], t: f64) -> Matrix3<f64> {
    let sq = Matrix3::from_diagonal(&Vector3::from_fn(|i, _| p[i].sqrt()));
    let isq = Matrix3::from_diagonal(&Vector3::from_fn(|i, _| 1.0 / p[i].sqrt()));
    let s = isq * g * sq;
    let s = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let e = eig.eigenvectors
        * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| (l * t).exp()))
        * eig.eigenvectors.transpose();
    sq * e * isq
}

/// Stationary vector by power iteration.
pub fn power_iteration(f: &Matrix3<f64>) -> [f64; 3] {
    let mut v = Vector3::new(1.0, 1.0, 1.0) / 3.0;
    for _ in 0..100_000 {
        let next = f * v;
        let next = next / next.sum();
        if (next - v).amax() < 1e-16 {
            v = next;
            break;
        }
        v = next;
    }
    [v[0], v[1], v[2]]
}

/// Eigenvalues `{1, λ₊, λ₋}` of a stochastic matrix from `tr F − 1` and
/// `det F`, the coefficients of the deflated characteristic polynomial.
pub fn stochastic_spectrum(f: &Matrix3<f64>) -> [Complex64; 3] {
    let s = f.trace() - 1.0;
    let d = f.determinant();
    let disc = Complex64::new(s * s - 4.0 * d, 0.0).sqrt();
    [
        Complex64::new(1.0, 0.0),
        (Complex64::new(s, 0.0) + disc) / 2.0,
        (Complex64::new(s, 0.0) - disc) / 2.0,
    ]
}

/// Multiset distance after sorting by (re, im).
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let key = |z: &Complex64| (z.re, z.im);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending, via the real symmetric
/// embedding `[[Re, −Im], [Im, Re]]` (each value appears twice there).
pub fn hermitian_eigs(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = 0.5 * (m[(i % n, j % n)] + m[(j % n, i % n)].conj());
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut values: Vec<f64> = SymmetricEigen::new(big)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.into_iter().step_by(2).collect()
}

pub fn hermitian_min_eig(m: &CMatrix) -> f64 {
    hermitian_eigs(m)[0]
}

/// Von Neumann entropy in bits from the reference eigenvalues.
pub fn entropy_bits_of(m: &CMatrix) -> f64 {
    entropy_bits(&hermitian_eigs(m))
}

/// Haar-random pure state.
pub fn random_pure(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(gauss(rng), gauss(rng)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Random density matrix `XX†/tr`.
pub fn random_state(rng: &mut impl Rng, n: usize) -> CMatrix {
    let x = CMatrix::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let rho = &x * x.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Shannon entropy in bits of a probability vector, `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Von Neumann entropy in bits of a 2×2 Hermitian matrix, in closed form.
pub fn qubit_entropy_bits(m: &CMatrix) -> f64 {
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    let d = (m[(0, 0)] - m[(1, 1)]).re;
    let off = m[(0, 1)].norm();
    let split = (d * d + 4.0 * off * off).sqrt();
    entropy_bits(&[(tr + split) / 2.0, (tr - split) / 2.0])
}

/// Forward-constructed qutrit Davies map `exp(t·𝓛)`: a detailed-balance
/// generator plus decay rates redrawn until the generator is CCP.
pub fn valid_qutrit(rng: &mut impl Rng) -> (QutritDaviesParams, ClassicalGenerator, [f64; 3], f64) {
    loop {
        let p = ordered_weights(rng);
        let g = db_generator(rng, p, 0.05..2.0);
        let total: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| g.matrix()[(i, j)])
            .sum();
        let r = [0; 3].map(|_| rng.gen_range(0.0..1.5) * total);
        let t = rng.gen_range(0.05..2.0);
        let Ok(params) = QutritDaviesParams::from_generator(&g, r, p, t) else {
            continue;
        };
        let ccp = qutrit::ccp_check_rates(&g, r, &qutrit::Tolerances::default());
        if matches!(ccp, Ok(ref report) if report.holds) {
            return (params, g, r, t);
        }
    }
}

pub fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
}
