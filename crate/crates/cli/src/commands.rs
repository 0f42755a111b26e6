use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use davieskit::channel::{self, GibbsState, Superoperator};
use davieskit::entropy::{self, LogBase, MoeOptions};
use davieskit::io::{self, fmt_g17};
use davieskit::qubit::{self, QubitDaviesParams, QubitRates, RelaxationTimes};
use davieskit::qutrit::{self, Tolerances};

use crate::{Cli, Command, MoeMode, QubitArgs, TolArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Valid,
    Invalid,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Valid
        } else {
            Outcome::Invalid
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let (text, outcome) = match &cli.command {
        Command::ValidateQubit { params } => validate_qubit(params, &cli.tol)?,
        Command::Region { p, grid } => region(*p, *grid)?,
        Command::Moe {
            params,
            channel,
            mode,
            base,
            scan,
            grid,
        } => {
            let base = LogBase::from(*base);
            if *scan {
                moe_scan(params, *mode, base, *grid, &cli.tol)?
            } else if let Some(path) = channel {
                moe_channel(path, *mode, base, &cli.tol)?
            } else {
                moe_params(params, *mode, base, &cli.tol)?
            }
        }
        Command::Evolve {
            tau1,
            tau3,
            w_eq,
            times,
            base,
        } => evolve(*tau1, *tau3, *w_eq, times, (*base).into())?,
        Command::ValidateQutrit { file } => validate_qutrit(file, &cli.tol)?,
        Command::LogStochastic { file } => log_stochastic(file, &cli.tol)?,
    };
    match &cli.output {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(outcome)
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
enum QubitSource {
    Direct,
    Rates(QubitRates),
    Relaxation(RelaxationTimes),
}

fn resolve_qubit(args: &QubitArgs) -> Result<(QubitDaviesParams, QubitSource)> {
    let QubitArgs {
        a,
        c,
        p,
        rate_a,
        gamma,
        tau1,
        tau3,
        w_eq,
        t,
    } = *args;
    let given = |xs: &[Option<f64>]| xs.iter().all(Option::is_some);
    let absent = |xs: &[Option<f64>]| xs.iter().all(Option::is_none);
    if given(&[a, c, p]) && absent(&[rate_a, gamma, tau1, tau3, w_eq, t]) {
        let params = QubitDaviesParams::new_unchecked(a.unwrap(), c.unwrap(), p.unwrap());
        return Ok((params, QubitSource::Direct));
    }
    if given(&[rate_a, gamma, p, t]) && absent(&[a, c, tau1, tau3, w_eq]) {
        let rates = QubitRates {
            rate_a: rate_a.unwrap(),
            gamma: gamma.unwrap(),
            p: p.unwrap(),
            t: t.unwrap(),
        };
        if !(rates.rate_a >= 0.0 && rates.gamma >= 0.0 && rates.t >= 0.0) {
            bail!("rates and time must be non-negative");
        }
        return Ok((rates.params_unchecked(), QubitSource::Rates(rates)));
    }
    if given(&[tau1, tau3, w_eq, t]) && absent(&[a, c, p, rate_a, gamma]) {
        let times = RelaxationTimes {
            tau1: tau1.unwrap(),
            tau3: tau3.unwrap(),
            w_eq: w_eq.unwrap(),
            t: t.unwrap(),
        };
        if !(times.tau1 > 0.0 && times.tau3 > 0.0 && times.t >= 0.0) {
            bail!("relaxation times must be positive and t non-negative");
        }
        return Ok((times.params(), QubitSource::Relaxation(times)));
    }
    bail!(
        "give exactly one complete parameter set: --a --c --p, \
         --rate-a --gamma --p --t, or --tau1 --tau3 --w-eq --t"
    )
}

#[derive(Serialize)]
struct CheckRow {
    constraint: String,
    holds: bool,
    margin: f64,
}

fn validate_qubit(args: &QubitArgs, tol: &TolArgs) -> Result<(String, Outcome)> {
    let (params, source) = resolve_qubit(args)?;
    let validation = params.validate_with_tol(tol.tol_constraint);
    let mut rows: Vec<CheckRow> = validation
        .checks
        .iter()
        .map(|c| CheckRow {
            constraint: c.constraint.describe().into(),
            holds: c.holds,
            margin: c.margin,
        })
        .collect();
    let source_name = match source {
        QubitSource::Direct => "a,c,p",
        QubitSource::Rates(r) => {
            let margin = r.gamma - r.rate_a / 2.0;
            rows.push(CheckRow {
                constraint: "Gamma >= A/2".into(),
                holds: margin >= 0.0,
                margin,
            });
            "rates"
        }
        QubitSource::Relaxation(r) => {
            let margin = 2.0 * r.tau3 - r.tau1;
            rows.push(CheckRow {
                constraint: "tau1 <= 2 tau3".into(),
                holds: margin >= 0.0,
                margin,
            });
            "relaxation times"
        }
    };
    let valid = rows.iter().all(|r| r.holds);
    let phi = params.superoperator();
    let cp = channel::is_completely_positive(&phi, tol.tol_cp)?;
    let db = GibbsState::from_probabilities(&[params.p, 1.0 - params.p])
        .ok()
        .map(|g| channel::check_detailed_balance(&phi, &g, tol.tol_db))
        .transpose()?;
    let report = json!({
        "source": source_name,
        "params": { "a": params.a, "c": params.c, "p": params.p, "b": params.b() },
        "valid": valid,
        "constraints": rows,
        "choi_min_eig": cp.min_eigenvalue,
        "completely_positive": cp.holds,
        "detailed_balance_residual": db.map(|d| d.max_violation),
        "detailed_balance": db.map(|d| d.holds),
        "bloch": params.to_bloch(),
    });
    Ok((to_json(&report)?, Outcome::from_bool(valid)))
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn region(p: f64, grid: usize) -> Result<(String, Outcome)> {
    let points = qubit::region_grid(p, grid)?;
    let mut out = String::from("a,c,valid,choi_min_eig,boundary\n");
    for pt in &points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_g17(pt.a),
            fmt_g17(pt.c),
            bit(pt.valid),
            fmt_g17(pt.choi_min_eig),
            bit(pt.boundary)
        )?;
    }
    Ok((out, Outcome::Valid))
}

fn moe_options(base: LogBase) -> MoeOptions {
    MoeOptions {
        base,
        ..MoeOptions::default()
    }
}

fn numeric_json(r: &entropy::EntropyResult) -> Value {
    json!({
        "entropy": r.value,
        "mu": r.mu(),
        "amplitudes": r.amplitudes,
        "iterations": r.iterations,
        "gap_estimate": r.gap_estimate,
    })
}

/// Column entropies when the map only moves populations.
fn classical_bound(phi: &Superoperator, base: LogBase) -> Option<f64> {
    let n = phi.dim();
    let m = phi.matrix();
    let diag = |k: usize| k.is_multiple_of(n + 1);
    let classical =
        (0..n * n).all(|i| (0..n * n).all(|j| (diag(i) && diag(j)) || m[(i, j)].norm() == 0.0));
    if !classical {
        return None;
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| m[(i * (n + 1), j * (n + 1))].re).collect())
        .collect();
    entropy::min_column_entropy(&columns, base).ok()
}

fn moe_report(
    params: Option<QubitDaviesParams>,
    phi: &Superoperator,
    mode: MoeMode,
    base: LogBase,
    tol: &TolArgs,
) -> Result<(String, Outcome)> {
    let analytic = match (mode, params) {
        (MoeMode::Numeric, _) => None,
        (_, Some(params)) => Some(qubit::min_output_entropy_analytic(&params, base)?),
        (MoeMode::Analytic, None) => bail!("the analytic formula needs a qubit Davies map"),
        (MoeMode::Both, None) => None,
    };
    let numeric = match mode {
        MoeMode::Analytic => None,
        _ => Some(entropy::moe_numeric(phi, &moe_options(base))?),
    };
    let difference = match (&analytic, &numeric) {
        (Some(a), Some(n)) => Some((a.entropy - n.value).abs()),
        _ => None,
    };
    let agree = difference.map(|d| d <= tol.tol_moe);
    let report = json!({
        "base": base,
        "analytic": analytic,
        "numeric": numeric.as_ref().map(numeric_json),
        "difference": difference,
        "agree": agree,
        "classical_min_column_entropy": classical_bound(phi, base),
    });
    Ok((to_json(&report)?, Outcome::from_bool(agree.unwrap_or(true))))
}

fn moe_params(
    args: &QubitArgs,
    mode: MoeMode,
    base: LogBase,
    tol: &TolArgs,
) -> Result<(String, Outcome)> {
    let (params, _) = resolve_qubit(args)?;
    let validation = params.validate_with_tol(tol.tol_constraint);
    if !validation.valid {
        let names: Vec<_> = validation.violated().iter().map(|c| c.describe()).collect();
        eprintln!("not a qubit Davies map: violates {}", names.join(", "));
        return Ok((String::new(), Outcome::Invalid));
    }
    moe_report(Some(params), &params.superoperator(), mode, base, tol)
}

fn moe_channel(
    path: &Path,
    mode: MoeMode,
    base: LogBase,
    tol: &TolArgs,
) -> Result<(String, Outcome)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let phi = io::parse_superoperator_json(&text)?;
    let params = QubitDaviesParams::from_superoperator(&phi, 1e-12).filter(|p| p.validate().valid);
    match moe_report(params, &phi, mode, base, tol) {
        Err(e) => match e.downcast_ref::<davieskit::Error>() {
            Some(davieskit::Error::NotCp { .. } | davieskit::Error::NotTp { .. }) => {
                eprintln!("not a channel: {e}");
                Ok((String::new(), Outcome::Invalid))
            }
            _ => Err(e),
        },
        ok => ok,
    }
}

fn moe_scan(
    args: &QubitArgs,
    mode: MoeMode,
    base: LogBase,
    grid: usize,
    tol: &TolArgs,
) -> Result<(String, Outcome)> {
    let p = args.p.context("--scan needs --p")?;
    let points = qubit::region_grid(p, grid)?;
    let options = moe_options(base);
    let rows: Vec<(Option<f64>, Option<f64>, Option<u8>)> = points
        .par_iter()
        .map(|pt| {
            if !pt.valid {
                return Ok((None, None, None));
            }
            let params = QubitDaviesParams::new_unchecked(pt.a, pt.c, pt.p);
            let analytic = match mode {
                MoeMode::Numeric => None,
                _ => Some(qubit::min_output_entropy_analytic(&params, base)?),
            };
            let numeric = match mode {
                MoeMode::Analytic => None,
                _ => Some(entropy::moe_numeric(&params.superoperator(), &options)?.value),
            };
            Ok((
                analytic.map(|a| a.entropy),
                numeric,
                analytic.map(|a| a.case.number()),
            ))
        })
        .collect::<davieskit::Result<_>>()?;
    let opt = |x: Option<f64>| x.map(fmt_g17).unwrap_or_default();
    let mut out = String::from("a,c,p,valid,choi_min_eig,moe_analytic,moe_numeric,case\n");
    let mut agree = true;
    for (pt, (analytic, numeric, case)) in points.iter().zip(rows) {
        if let (Some(x), Some(y)) = (analytic, numeric) {
            agree &= (x - y).abs() <= tol.tol_moe;
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_g17(pt.a),
            fmt_g17(pt.c),
            fmt_g17(pt.p),
            bit(pt.valid),
            fmt_g17(pt.choi_min_eig),
            opt(analytic),
            opt(numeric),
            case.map(|c| c.to_string()).unwrap_or_default()
        )?;
    }
    Ok((out, Outcome::from_bool(agree)))
}

fn evolve(
    tau1: f64,
    tau3: f64,
    w_eq: f64,
    times: &str,
    base: LogBase,
) -> Result<(String, Outcome)> {
    let times = io::parse_times(times)?;
    let relax = match RelaxationTimes::new(tau1, tau3, w_eq, 0.0) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invalid generator: {e}");
            return Ok((String::new(), Outcome::Invalid));
        }
    };
    if !relax.satisfies_semigroup_bound() {
        eprintln!(
            "invalid generator: {}",
            davieskit::Error::SemigroupConstraintViolated { tau1, tau3 }
        );
        return Ok((String::new(), Outcome::Invalid));
    }
    let mut out = String::from("t,a,c,eta1,eta3,kappa3,moe\n");
    for t in times {
        let at = relax.at(t);
        let bloch = at.evolve()?;
        let params = at.params();
        let moe = qubit::min_output_entropy_analytic(&params, base)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_g17(t),
            fmt_g17(params.a),
            fmt_g17(params.c),
            fmt_g17(bloch.eta1),
            fmt_g17(bloch.eta3),
            fmt_g17(bloch.kappa3),
            fmt_g17(moe.entropy)
        )?;
    }
    Ok((out, Outcome::Valid))
}

fn qutrit_tolerances(tol: &TolArgs) -> Tolerances {
    Tolerances {
        detailed_balance: tol.tol_db,
        generator: tol.tol_generator,
        ccp: tol.tol_ccp,
        agreement_band: tol.tol_band,
        ..Tolerances::default()
    }
}

fn read_case(path: &Path) -> Result<io::QutritCase> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_qutrit_case(&text).with_context(|| format!("parsing {}", path.display()))
}

fn validate_qutrit(path: &Path, tol: &TolArgs) -> Result<(String, Outcome)> {
    let case = read_case(path)?;
    let params = case
        .params_unchecked()
        .context("no \"p\" given and F has no closed-form stationary vector")?;
    let report = qutrit::is_davies_qutrit_with(&params, &qutrit_tolerances(tol));
    Ok((to_json(&report)?, Outcome::from_bool(report.holds)))
}

fn log_stochastic(path: &Path, tol: &TolArgs) -> Result<(String, Outcome)> {
    let case = read_case(path)?;
    let existence = qutrit::log_exists(&case.f);
    let log = qutrit::log_stochastic_detailed(&case.f);
    let member = qutrit::semigroup_member_with_tol(&case.f, tol.tol_generator);
    let inequalities = match qutrit::inequality_g(&case.f) {
        Ok(ineq) => serde_json::to_value(ineq)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    let report = json!({
        "log_exists": existence,
        "log": log.as_ref().ok(),
        "log_error": log.as_ref().err().map(|e| e.to_string()),
        "semigroup": member,
        "inequalities": inequalities,
    });
    Ok((to_json(&report)?, Outcome::from_bool(member.holds)))
}
