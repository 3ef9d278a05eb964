use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dirk::algebra::{standard_expression, LevelSpec, Monomial, Polynomial, StandardExpression};
use dirk::bounds::{
    chsh_local_bound, global222_conjecture, local_gp_bound, nparty_bound, svetlichny_local_bound, two_party_gp_bound,
    Global222Config, NPartyParams,
};
use dirk::conic::{SolveStatus, SolverOptions};
use dirk::nosignalling::{gp_ns_bound, hbb_attack_report, solve_ns_guessing};
use dirk::npa::{build_guessing_relaxation, solve_guessing, sweep_curve, GuessingScenario, Pin};
use dirk::quantum::{attain_local, attain_nparty, attain_two_party, make_strategy, StrategyKind};
use dirk::scalar::QuadSurd;
use dirk::sos::{
    local_sos_certificate, local_tangent_target, two_party_sos_certificate, two_party_target, LocalParameters,
    SosCertificate, TwoPartyParameters,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::grid::GridSpec;
use crate::{
    AttackArgs, BoundArgs, Common, CurveArgs, Failure, Family, Format, Kind, NpartyArgs, NsBoundArgs, StrategyArgs,
    VerifySosArgs,
};

type Outcome = Result<(), Failure>;

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Outcome {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(config)?;
    writeln!(out).map_err(config)?;
    out.flush().map_err(config)
}

fn write_rows<T: Serialize>(common: &Common, rows: &[T]) -> Outcome {
    match common.format {
        Format::Json => write_json(common.output.as_deref(), &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(common.output.as_deref())?);
            for r in rows {
                w.serialize(r).map_err(config)?;
            }
            w.flush().map_err(config)
        }
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    if jobs == Some(0) {
        return Err(Failure::Config("--jobs must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(config)
}

fn positive(name: &str, x: f64) -> Outcome {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{name} must be positive, got {x}")))
    }
}

fn scenario(name: &str) -> Result<GuessingScenario, Failure> {
    name.parse().map_err(config)
}

/// Level used when none is given: all pairs of parties, which is where the
/// closed forms are reached.
fn default_level(sc: &GuessingScenario) -> &'static str {
    if sc.n_parties() == 2 {
        "1+AB"
    } else {
        "1+AB+AC+BC"
    }
}

fn level(text: Option<&str>, sc: &GuessingScenario) -> Result<LevelSpec, Failure> {
    LevelSpec::parse(text.unwrap_or(default_level(sc))).map_err(config)
}

fn expression(name: &str, n: usize) -> Result<Polynomial<f64>, Failure> {
    let e = standard_expression(name).map_err(config)?;
    if e.n_parties() != n {
        return Err(Failure::Config(format!(
            "`{name}` has {} parties but the scenario has {n}",
            e.n_parties()
        )));
    }
    Ok(e)
}

/// `name=value` into the canonical expression name and a pin.
fn named_pin(text: &str, n: usize) -> Result<(String, Pin), Failure> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("pin `{text}` is not of the form name=value")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| Failure::Config(format!("pin `{text}`: {e}")))?;
    let canonical = name.trim().parse::<StandardExpression>().map_err(config)?.to_string();
    Ok((canonical, (expression(name.trim(), n)?, value)))
}

fn status_failure(status: SolveStatus, what: &str) -> Outcome {
    match status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(Failure::Solver(format!("{what}: pinned values are infeasible"))),
        SolveStatus::NumericalLimit => Err(Failure::Solver(format!("{what}: tolerance not reached"))),
    }
}

#[derive(Serialize)]
struct CurveRow {
    violation: f64,
    npa_bound: Option<f64>,
    analytic_bound: Option<f64>,
    strategy_lower_bound: Option<f64>,
    ns_bound: Option<f64>,
    status: String,
    gap: Option<f64>,
    error: Option<String>,
}

/// Closed-form bound and attaining strategy for the scenarios that have one.
/// `fixed` holds the other pinned values by name.
fn closed_forms(sc: &str, pin: &str, fixed: &[(String, f64)], x: f64) -> (Option<f64>, Option<f64>) {
    let other = |name: &str| -> Option<f64> {
        match fixed {
            [] => Some(0.0),
            [(n, v)] if n == name => Some(*v),
            _ => None,
        }
    };
    let (analytic, strategy) = match (sc, pin) {
        ("a1", "mermin") => (
            other("mermin_prime").and_then(|mp| local_gp_bound(x, mp).ok().map(|b| b.clamped)),
            other("mermin_prime")
                .filter(|&mp| mp == 0.0)
                .and_then(|_| attain_local(x, 0.0).ok()),
        ),
        ("a1", "mermin_prime") => (
            other("mermin").and_then(|m| local_gp_bound(m, x).ok().map(|b| b.clamped)),
            other("mermin")
                .filter(|&m| m == 0.0)
                .and_then(|_| attain_local(x, FRAC_PI_2).ok()),
        ),
        ("a1", "svetlichny") if fixed.is_empty() => (
            svetlichny_local_bound(x).ok().map(|b| b.clamped),
            attain_local(x / SQRT_2, FRAC_PI_4).ok(),
        ),
        ("a1b1", "mermin") if fixed.is_empty() => {
            (two_party_gp_bound(x).ok().map(|b| b.clamped), attain_two_party(x).ok())
        }
        ("a1b1c1", "mermin") if fixed.is_empty() => (two_party_gp_bound(x).ok().map(|b| b.clamped), None),
        ("a2b2c2", "mermin") if fixed.is_empty() => (
            global222_conjecture(x, &Global222Config::default()).ok().map(|p| p.value),
            None,
        ),
        ("chsh_a1", "chsh") if fixed.is_empty() => (chsh_local_bound(x).ok().map(|b| b.clamped), None),
        _ => (None, None),
    };
    (analytic, strategy.map(|a| a.probability))
}

pub fn curve(a: CurveArgs) -> Outcome {
    positive("--tolerance", a.tolerance)?;
    let sc = scenario(&a.scenario)?;
    let sc_name = a.scenario.trim().to_ascii_lowercase();
    let n = sc.n_parties();
    let pin_name = a.pin.trim().parse::<StandardExpression>().map_err(config)?.to_string();
    let expr = expression(&a.pin, n)?;
    let mut fixed_named = Vec::new();
    let mut fixed = Vec::new();
    for f in &a.fixed {
        let (name, p) = named_pin(f, n)?;
        fixed_named.push((name, p.1));
        fixed.push(p);
    }
    let grid = a.grid.points(a.count).map_err(Failure::Config)?;
    let level = level(a.level.as_deref(), &sc)?;
    let options = SolverOptions::sdp().with_tolerance(a.tolerance);
    let pool = pool(a.common.jobs)?;

    let (npa, extras) = pool.install(|| -> Result<_, Failure> {
        let npa = sweep_curve(&sc, &level, std::slice::from_ref(&expr), &fixed, &grid, &options)?;
        let extras: Vec<_> = grid
            .par_iter()
            .map(|&v| {
                let (analytic, strategy) = closed_forms(&sc_name, &pin_name, &fixed_named, v);
                let ns = (!a.no_ns)
                    .then(|| {
                        let mut pins = fixed.clone();
                        pins.push((expr.clone(), v));
                        gp_ns_bound(&sc, &pins).ok()
                    })
                    .flatten();
                (analytic, strategy, ns)
            })
            .collect();
        Ok((npa, extras))
    })?;

    let mut failed = 0;
    let rows: Vec<CurveRow> = npa
        .into_iter()
        .zip(extras)
        .map(|(p, (analytic, strategy, ns))| {
            if p.error.is_some() || p.status == Some(SolveStatus::NumericalLimit) {
                failed += 1;
            }
            let optimal = p.status == Some(SolveStatus::Optimal);
            CurveRow {
                violation: p.violation,
                npa_bound: p.bound.filter(|_| optimal),
                analytic_bound: analytic,
                strategy_lower_bound: strategy,
                ns_bound: ns,
                status: p.status.map_or_else(|| "error".to_string(), |s| s.to_string()),
                gap: p.gap.filter(|g| g.is_finite()),
                error: p.error,
            }
        })
        .collect();
    write_rows(&a.common, &rows)?;
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} of {} grid points did not solve", rows.len())));
    }
    Ok(())
}

pub fn bound(a: BoundArgs) -> Outcome {
    positive("--tolerance", a.tolerance)?;
    let sc = scenario(&a.scenario)?;
    let level = level(a.level.as_deref(), &sc)?;
    let mut names = Vec::new();
    let mut pins = Vec::new();
    for p in &a.pins {
        let (name, pin) = named_pin(p, sc.n_parties())?;
        names.push(json!({ "expression": name, "value": pin.1 }));
        pins.push(pin);
    }
    if let Some(path) = &a.dump {
        let sdp = dirk::npa::build_guessing_relaxation(&sc, &level, &pins)?;
        write_json(Some(path), &sdp)?;
    }
    let r = solve_guessing(&sc, &level, &pins, &SolverOptions::sdp().with_tolerance(a.tolerance))?;
    write_json(
        a.output.as_deref(),
        &json!({
            "scenario": a.scenario,
            "level": level.to_string(),
            "pins": names,
            "result": r,
        }),
    )?;
    status_failure(r.status, "relaxation")
}

#[derive(Serialize)]
struct SosRow {
    family: &'static str,
    first: f64,
    second: f64,
    residual: f64,
    worst_monomial: Option<String>,
}

/// Grid ends given to four decimals are snapped onto the theta domain.
fn snap_theta(theta: f64) -> f64 {
    for end in [FRAC_PI_4, FRAC_PI_2] {
        if (theta - end).abs() <= 1e-4 {
            return end;
        }
    }
    theta
}

fn axis(single: Option<f64>, grid: Option<GridSpec>, name: &str) -> Result<Vec<f64>, Failure> {
    match (single, grid) {
        (Some(x), None) => Ok(vec![x]),
        (None, Some(g)) => g.by_count().map_err(Failure::Config),
        (Some(_), Some(_)) => Err(Failure::Config(format!("give --{name} or --grid-{name}, not both"))),
        (None, None) => Err(Failure::Config(format!("missing --{name} or --grid-{name}"))),
    }
}

fn corrupted<S: dirk::scalar::Coefficient>(mut target: Polynomial<S>, eps: Option<S>) -> Polynomial<S> {
    if let Some(eps) = eps {
        let id = Monomial::identity(target.n_parties());
        target.add_term(id, eps);
    }
    target
}

fn check(family: &'static str, first: f64, second: f64, cert: SosCertificate<f64>, target: Polynomial<f64>) -> dirk::Result<SosRow> {
    let v = cert.verify(&target)?;
    Ok(SosRow {
        family,
        first,
        second,
        residual: v.residual,
        worst_monomial: v.worst_monomial.map(|m| m.to_string()),
    })
}

pub fn verify_sos(a: VerifySosArgs) -> Outcome {
    positive("--tolerance", a.tolerance)?;
    let points: Vec<(f64, f64)> = match a.family {
        Family::Local => {
            let thetas = axis(a.theta, a.grid_theta, "theta")?;
            let phis = axis(a.phi, a.grid_phi, "phi")?;
            thetas
                .iter()
                .flat_map(|&t| phis.iter().map(move |&p| (snap_theta(t), p)))
                .collect()
        }
        Family::TwoParty => match (a.lambda, a.mu, a.grid_ratio) {
            (Some(l), Some(m), None) => vec![(l, m)],
            (None, None, Some(g)) => g.by_count().map_err(Failure::Config)?.into_iter().map(|r| (r, 1.0)).collect(),
            _ => return Err(Failure::Config("give --lambda and --mu, or --grid-ratio".into())),
        },
    };
    let rows: Vec<SosRow> = points
        .par_iter()
        .map(|&(x, y)| match a.family {
            Family::Local => check(
                "local",
                x,
                y,
                local_sos_certificate(x, y)?,
                corrupted(local_tangent_target(x, y)?, a.corrupt),
            ),
            Family::TwoParty => check(
                "two_party",
                x,
                y,
                two_party_sos_certificate(x, y)?,
                corrupted(two_party_target(x, y)?, a.corrupt),
            ),
        })
        .collect::<dirk::Result<_>>()
        .map_err(config)?;

    let mut w = csv::Writer::from_writer(sink(a.output.as_deref())?);
    for r in &rows {
        w.serialize(r).map_err(config)?;
    }
    w.flush().map_err(config)?;

    let worst = rows
        .iter()
        .max_by(|p, q| p.residual.total_cmp(&q.residual))
        .expect("at least one point");
    eprintln!(
        "{} points, max residual {:e} at ({}, {}) on {}",
        rows.len(),
        worst.residual,
        worst.first,
        worst.second,
        worst.worst_monomial.as_deref().unwrap_or("-")
    );
    if a.exact {
        verify_exact(a.family, a.corrupt)?;
    }
    if !(worst.residual <= a.tolerance) {
        return Err(Failure::Verification(format!(
            "residual {:e} exceeds {:e}",
            worst.residual, a.tolerance
        )));
    }
    Ok(())
}

/// Exact checks at the points whose coefficients lie in Q(sqrt 2).
fn verify_exact(family: Family, corrupt: Option<f64>) -> Outcome {
    let eps = corrupt
        .map(|e| {
            num_rational_from(e).ok_or_else(|| Failure::Config(format!("cannot represent {e} exactly")))
        })
        .transpose()?;
    let mut ok = true;
    match family {
        Family::Local => {
            for quarter_turns in 0..4 {
                let p = LocalParameters::<QuadSurd>::exact_half_pi(quarter_turns);
                let good = p.certificate().verify_exact(&corrupted(p.target(), eps))?;
                eprintln!("exact theta = pi/2, phi = {quarter_turns} pi/2: {good}");
                ok &= good;
            }
        }
        Family::TwoParty => {
            let p = TwoPartyParameters::<QuadSurd>::exact_equal();
            let good = p.certificate().verify_exact(&corrupted(p.target(), eps))?;
            eprintln!("exact lambda = mu: {good}");
            ok &= good;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification("exact identity does not hold".into()))
    }
}

fn num_rational_from(x: f64) -> Option<QuadSurd> {
    let r = num_rational::Rational64::approximate_float(x)?;
    Some(QuadSurd::new(r, 0.into()))
}

pub fn strategy(a: StrategyArgs) -> Outcome {
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| Failure::Config(format!("--kind needs --{name}")));
    let kind = match a.kind {
        Kind::Ghz => StrategyKind::Ghz,
        Kind::LocalTangent => StrategyKind::LocalTangent {
            theta: need(a.theta, "theta")?,
            phi: a.phi,
        },
        Kind::Violator => StrategyKind::LinearisationViolator { phi: a.phi },
        Kind::TwoParty => StrategyKind::TwoParty {
            lambda: need(a.lambda, "lambda")?,
            mu: need(a.mu, "mu")?,
        },
        Kind::Nparty => StrategyKind::NParty {
            n: a.n,
            lambda: need(a.lambda, "lambda")?,
            mu: need(a.mu, "mu")?,
        },
        Kind::Deterministic if a.n == 3 => StrategyKind::DeterministicMermin,
        Kind::Deterministic => StrategyKind::DeterministicNParty { n: a.n },
    };
    let s = make_strategy(kind)?;
    let n = s.n_parties();
    let value = |name: &str| -> Result<f64, Failure> { Ok(s.expectation(&standard_expression(name)?)?) };
    let all_plus = |setting: usize, parties: usize| -> Result<f64, Failure> {
        let events: Vec<_> = (0..parties).map(|p| (p, setting, 0)).collect();
        Ok(s.event_probability(&events)?)
    };
    let mut values = serde_json::Map::new();
    let mut probabilities = serde_json::Map::new();
    if n == 3 {
        for name in ["mermin", "mermin_prime", "svetlichny"] {
            values.insert(name.into(), json!(value(name)?));
        }
        probabilities.insert("a1".into(), json!(all_plus(0, 1)?));
        probabilities.insert("a1b1".into(), json!(all_plus(0, 2)?));
        probabilities.insert("a1b1c1".into(), json!(all_plus(0, 3)?));
        probabilities.insert("a2b2c2".into(), json!(all_plus(1, 3)?));
    } else {
        values.insert(format!("mermin_n({n})"), json!(value(&format!("mermin_n({n})"))?));
        probabilities.insert(format!("first_{}", n - 1), json!(all_plus(0, n - 1)?));
    }
    let mut report = json!({
        "strategy": s.to_json(),
        "values": values,
        "probabilities_all_plus": probabilities,
    });
    if a.behavior {
        report["behavior"] = s.behavior().to_json();
    }
    write_json(a.output.as_deref(), &report)
}

pub fn ns_bound(a: NsBoundArgs) -> Outcome {
    let sc = scenario(&a.scenario)?;
    let mut names = Vec::new();
    let mut pins = Vec::new();
    for p in &a.pins {
        let (name, pin) = named_pin(p, sc.n_parties())?;
        names.push(json!({ "expression": name, "value": pin.1 }));
        pins.push(pin);
    }
    let r = solve_ns_guessing(&sc, &pins, &SolverOptions::lp())?;
    write_json(
        a.output.as_deref(),
        &json!({
            "scenario": a.scenario,
            "pins": names,
            "bound": r.bound,
            "status": r.status.to_string(),
            "gap": r.gap,
            "decomposition": r.decomposition,
        }),
    )?;
    status_failure(r.status, "no-signalling LP")
}

pub fn attack_demo(a: AttackArgs) -> Outcome {
    let report = hbb_attack_report().map_err(|e| Failure::Solver(e.to_string()))?;
    write_json(a.output.as_deref(), &report)?;
    if a.check_marginal {
        eprintln!("Alice-Bob marginal local: {}", report.marginal.local);
        if !report.marginal.local {
            return Err(Failure::Verification("marginal is not certified local".into()));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct NpartyRow {
    #[serde(rename = "M_n")]
    m: f64,
    conjecture_bound: f64,
    strategy_lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    npa_bound: Option<Option<f64>>,
}

pub fn nparty(a: NpartyArgs) -> Outcome {
    if !(3..=5).contains(&a.n) {
        return Err(Failure::Config(format!("--n must be 3, 4 or 5, got {}", a.n)));
    }
    let params = NPartyParams::<f64>::new(a.n)?;
    let grid = match a.grid {
        Some(g) => g.points(a.count).map_err(Failure::Config)?,
        None => GridSpec {
            start: params.local,
            stop: params.quantum,
            third: 10.0,
        }
        .by_count()
        .map_err(Failure::Config)?,
    };
    let npa = match &a.npa_level {
        None => None,
        Some(_) if a.n != 4 => return Err(Failure::Config("--npa-level is only available for n = 4".into())),
        Some(text) => {
            let sc = GuessingScenario::new(4, &[(0, 0), (1, 0), (2, 0)])?;
            let level = LevelSpec::parse(text).map_err(config)?;
            let expr = standard_expression("mermin_n(4)")?;
            // Catches levels that cannot express the four-body terms before any solve.
            build_guessing_relaxation(&sc, &level, &[(expr.clone(), params.local)])?;
            Some((sc, level, expr))
        }
    };
    let pool = pool(a.common.jobs)?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|&m| -> Result<NpartyRow, Failure> {
                let npa_bound = npa.as_ref().map(|(sc, level, expr)| {
                    solve_guessing(sc, level, &[(expr.clone(), m)], &SolverOptions::sdp())
                        .ok()
                        .filter(|r| r.status == SolveStatus::Optimal)
                        .map(|r| r.bound)
                });
                Ok(NpartyRow {
                    m,
                    conjecture_bound: nparty_bound(a.n, m)?.clamped,
                    strategy_lower_bound: attain_nparty(a.n, m)?.probability,
                    npa_bound,
                })
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    write_rows(&a.common, &rows)?;
    if rows.iter().any(|r| r.npa_bound == Some(None)) {
        return Err(Failure::Solver("some NPA points did not solve".into()));
    }
    Ok(())
}
