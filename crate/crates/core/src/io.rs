//! File formats: JSON matrices, qutrit cases, time lists and CSV numbers.
//!
//! A matrix file is `{"dim": n, "re": [[...]], "im": [[...]]}` with `im`
//! optional. `dim` is the side length of the matrix; for a superoperator
//! the system dimension `N` (side `N²`) is accepted as well.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Superoperator;
use crate::error::{Error, Result};
use crate::numerics::CMatrix;
use crate::qutrit::{self, QutritDaviesParams, QutritStochastic};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    dim: usize,
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn check_rows(name: &str, rows: &[Vec<f64>], side: usize) -> Result<()> {
    if rows.len() != side {
        return Err(Error::Parse(format!(
            "'{name}' has {} rows, expected {side}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != side {
            return Err(Error::Parse(format!(
                "'{name}' row {i} has {} entries, expected {side}",
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

pub fn parse_matrix_json(text: &str) -> Result<CMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(parse_err)?;
    let side = file.re.len();
    if side == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if file.dim != side && file.dim.checked_mul(file.dim) != Some(side) {
        return Err(Error::Parse(format!(
            "dim {} matches neither the side {side} nor its square root",
            file.dim
        )));
    }
    check_rows("re", &file.re, side)?;
    if let Some(im) = &file.im {
        check_rows("im", im, side)?;
    }
    Ok(CMatrix::from_fn(side, side, |i, j| {
        let im = file.im.as_ref().map_or(0.0, |m| m[i][j]);
        Complex64::new(file.re[i][j], im)
    }))
}

pub fn parse_superoperator_json(text: &str) -> Result<Superoperator> {
    Superoperator::new(parse_matrix_json(text)?)
}

/// Serializes with `dim` equal to the side length; `im` is omitted for
/// real matrices.
pub fn matrix_to_json(m: &CMatrix) -> String {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    let real = m.iter().all(|z| z.im == 0.0);
    let file = MatrixFile {
        dim: m.nrows(),
        re: rows(|z| z.re),
        im: (!real).then(|| rows(|z| z.im)),
    };
    serde_json::to_string(&file).expect("finite matrix serializes")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QutritCaseFile {
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    #[serde(default)]
    p: Option<Vec<f64>>,
}

/// A qutrit case as read from disk. `p` defaults to the stationary vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritCase {
    pub f: QutritStochastic,
    pub lambdas: [f64; 3],
    pub p: Option<[f64; 3]>,
}

fn triple(name: &str, v: &[f64]) -> Result<[f64; 3]> {
    let t: [f64; 3] = v
        .try_into()
        .map_err(|_| Error::Parse(format!("'{name}' must have 3 entries, got {}", v.len())))?;
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(t)
}

pub fn parse_qutrit_case(text: &str) -> Result<QutritCase> {
    let file: QutritCaseFile = serde_json::from_str(text).map_err(parse_err)?;
    check_rows("F", &file.f, 3)?;
    let rows = [0, 1, 2].map(|i| [0, 1, 2].map(|j| file.f[i][j]));
    Ok(QutritCase {
        f: QutritStochastic::new(rows)?,
        lambdas: triple("lambda", &file.lambda)?,
        p: file.p.as_deref().map(|p| triple("p", p)).transpose()?,
    })
}

impl QutritCase {
    pub fn weights(&self) -> Result<[f64; 3]> {
        match self.p {
            Some(p) => Ok(p),
            None => qutrit::stationary_vector(&self.f),
        }
    }

    /// Parameters without the weight checks, for reporting.
    pub fn params_unchecked(&self) -> Result<QutritDaviesParams> {
        Ok(QutritDaviesParams::new_unchecked(
            self.f,
            self.lambdas,
            self.weights()?,
        ))
    }
}

/// Times separated by commas and/or whitespace; each must be finite and ≥ 0.
pub fn parse_times(text: &str) -> Result<Vec<f64>> {
    let times = text
        .split(|ch: char| ch == ',' || ch.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            let t: f64 = s
                .parse()
                .map_err(|_| Error::Parse(format!("'{s}' is not a number")))?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Parse(format!("time {s} must be finite and >= 0")));
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    if times.is_empty() {
        return Err(Error::Parse("no times given".into()));
    }
    Ok(times)
}

/// C's `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
