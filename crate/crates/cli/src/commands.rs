//! Subcommands, each a [`Command`] registered by name.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use u2reg::config::Settings;
use u2reg::counting::{self, Progression, TrigPolynomial};
use u2reg::diophantine::{self, ThetaDecomposition};
use u2reg::fourier::{self, IntervalFunction};
use u2reg::growth::GrowthFunction;
use u2reg::irrational::{self, IrrationalCertificate};
use u2reg::registry::Registry;
use u2reg::regularity::{self, RegularityCertificate, VerificationReport};
use u2reg::torus::TorusPoint;

use crate::io::{self, csv_text, emit, num, read_json, to_json, CliError, CliResult};
use crate::Args;

pub trait Command: Send + Sync {
    fn about(&self) -> &'static str;
    fn run(&self, args: &Args) -> CliResult<()>;
}

pub fn registry() -> &'static Registry<dyn Command> {
    static R: OnceLock<Registry<dyn Command>> = OnceLock::new();
    R.get_or_init(|| {
        Registry::new("command")
            .with("spectrum", Arc::new(Spectrum) as Arc<dyn Command>)
            .with("u2", Arc::new(U2))
            .with("decompose", Arc::new(Decompose))
            .with("decompose-irrational", Arc::new(DecomposeIrrational))
            .with("verify", Arc::new(Verify))
            .with("theta-decompose", Arc::new(ThetaDecompose))
            .with("irrational-check", Arc::new(IrrationalCheck))
            .with("count", Arc::new(Count))
            .with("synth", Arc::new(Synth))
    })
}

const DEFAULT_EPSILON: f64 = 0.25;
const DEFAULT_GROWTH: &str = "poly:10,1";
const DEFAULT_COUNT_N: u64 = 4096;

fn settings(args: &Args) -> CliResult<Settings> {
    let mut s = Settings::from_names(&args.dft, &args.u2_method)?;
    if let Some(b) = args.budget {
        s.enumeration_budget = b;
    }
    Ok(s)
}

fn growth(args: &Args) -> CliResult<GrowthFunction> {
    Ok(GrowthFunction::parse(args.growth.as_deref().unwrap_or(DEFAULT_GROWTH))?)
}

fn epsilon(args: &Args) -> f64 {
    args.epsilon.unwrap_or(DEFAULT_EPSILON)
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::input(format!("--{flag} is required")))
}

fn first_input(args: &Args) -> CliResult<&Path> {
    args.input
        .first()
        .map(|p| p.as_path())
        .ok_or_else(|| CliError::input("--input is required"))
}

/// `f` from `--input`, or from `--generator` with `--N` and `--seed`.
fn load_function(args: &Args) -> CliResult<IntervalFunction> {
    if let Some(p) = args.input.first() {
        return read_json(p);
    }
    match &args.generator {
        Some(g) => {
            let n = need(args.n, "N")?;
            Ok(u2reg::synth::synth(g, n as usize, args.seed)?)
        }
        None => Err(CliError::input("--input or --generator is required")),
    }
}

fn parse_theta(spec: &str) -> CliResult<TorusPoint> {
    let mut coords = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (p, q) = part.split_once('/').unwrap_or((part, "1"));
        let bad = || CliError::input(format!("bad coordinate '{part}' in --theta"));
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(bad());
        }
        coords.push(BigRational::new(p, q));
    }
    Ok(TorusPoint::new(coords))
}

/// θ from `--theta`, else from the first `--input`.
fn load_theta(args: &Args) -> CliResult<TorusPoint> {
    match &args.theta {
        Some(s) => parse_theta(s),
        None => read_json(first_input(args)?),
    }
}

fn finish(report: &VerificationReport, what: &str) -> CliResult<()> {
    if report.passed() {
        eprintln!("{what}: all {} clauses pass", report.clauses.len());
        return Ok(());
    }
    for c in report.clauses.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}: {}", c.name, c.detail);
    }
    Err(CliError {
        code: io::EXIT_FAIL,
        message: format!("{what} failed clause(s): {}", report.failures().join(", ")),
    })
}

fn decomposition_table(
    f: &IntervalFunction,
    parts: [&IntervalFunction; 3],
) -> CliResult<String> {
    let rows = (1..=f.n()).map(|n| {
        vec![
            n.to_string(),
            num(f.at(n)),
            num(parts[0].at(n)),
            num(parts[1].at(n)),
            num(parts[2].at(n)),
        ]
    });
    csv_text(&["n", "f", "f_str", "f_sml", "f_unf"], rows)
}

struct Spectrum;

impl Command for Spectrum {
    fn about(&self) -> &'static str {
        "Fourier coefficients of f extended by zero to Z/MZ"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let f = load_function(args)?;
        let spec = fourier::dft_with(s.dft.as_ref(), &f.ambient())?;
        emit(args.output.as_deref(), &to_json(&spec)?)
    }
}

struct U2;

#[derive(Serialize)]
struct Norms {
    n: usize,
    m: usize,
    u2: f64,
    l2: f64,
}

impl Command for U2 {
    fn about(&self) -> &'static str {
        "U² norm of f on [N]"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let f = load_function(args)?;
        let u2 = fourier::u2_norm_interval_with(s.u2.as_ref(), &f)?;
        match &args.output {
            Some(p) => emit(
                Some(p),
                &to_json(&Norms {
                    n: f.n(),
                    m: f.m(),
                    u2,
                    l2: fourier::l2_norm(&f),
                })?,
            )?,
            None => println!("{}", num(u2)),
        }
        Ok(())
    }
}

struct Decompose;

impl Command for Decompose {
    fn about(&self) -> &'static str {
        "f = f_str + f_sml + f_unf with a verified certificate"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let f = load_function(args)?;
        let (eps, g) = (epsilon(args), growth(args)?);
        let cert = regularity::regularize_with(&f, eps, &g, &s)?;
        emit(args.output.as_deref(), &to_json(&cert)?)?;
        if let Some(p) = &args.csv {
            emit(Some(p), &decomposition_table(&f, [&cert.f_str, &cert.f_sml, &cert.f_unf])?)?;
        }
        let rep = regularity::verify_certificate(&cert, &f, eps, &g);
        let out = finish(&rep, "certificate");
        u2reg::json::dispose(cert);
        out
    }
}

struct DecomposeIrrational;

impl Command for DecomposeIrrational {
    fn about(&self) -> &'static str {
        "decomposition with f_str(n) = F(n/N, n mod q, θn), θ irrational"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let f = load_function(args)?;
        let (eps, g) = (epsilon(args), growth(args)?);
        let cert = irrational::regularize_irrational_with(&f, eps, &g, &s)?;
        emit(args.output.as_deref(), &to_json(&cert)?)?;
        if let Some(p) = &args.csv {
            let b = &cert.base;
            emit(Some(p), &decomposition_table(&f, [&b.f_str, &b.f_sml, &b.f_unf])?)?;
        }
        let rep = irrational::verify_irrational_with(&cert, &f, eps, &g, &s);
        let out = finish(&rep, "certificate");
        u2reg::json::dispose(cert);
        out
    }
}

struct Verify;

/// Top-level keys that tell the certificate kinds apart.
#[derive(Deserialize)]
struct Probe {
    base: Option<IgnoredAny>,
    witness: Option<IgnoredAny>,
    chart_coords: Option<IgnoredAny>,
}

impl Command for Verify {
    fn about(&self) -> &'static str {
        "recheck a certificate (regularity, irrational, or θ decomposition)"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let path = first_input(args)?;
        let text = io::read_text(path)?;
        let probe: Probe = io::parse_json(path, &text)?;
        let f_override: Option<IntervalFunction> = match args.input.get(1) {
            Some(p) => Some(read_json(p)?),
            None => None,
        };
        let rep = if probe.base.is_some() {
            let cert: IrrationalCertificate = io::parse_json(path, &text)?;
            let f = f_override.unwrap_or_else(|| cert.base.f.clone());
            let eps = args.epsilon.unwrap_or(cert.base.epsilon);
            let g = match &args.growth {
                Some(_) => growth(args)?,
                None => cert.growth.clone(),
            };
            let rep = irrational::verify_irrational_with(&cert, &f, eps, &g, &s);
            u2reg::json::dispose(cert);
            rep
        } else if probe.witness.is_some() {
            let cert: RegularityCertificate = io::parse_json(path, &text)?;
            let f = f_override.unwrap_or_else(|| cert.f.clone());
            let eps = args.epsilon.unwrap_or(cert.epsilon);
            let g = match &args.growth {
                Some(_) => growth(args)?,
                None => cert.growth.clone(),
            };
            let rep = regularity::verify_certificate(&cert, &f, eps, &g);
            u2reg::json::dispose(cert);
            rep
        } else if probe.chart_coords.is_some() {
            let dec: ThetaDecomposition = io::parse_json(path, &text)?;
            diophantine::verify_decomposition_with(&dec, s.enumeration_budget)
        } else {
            return Err(CliError::input(format!(
                "{}: not a recognised certificate",
                path.display()
            )));
        };
        if let Some(p) = &args.output {
            emit(Some(p), &to_json(&rep)?)?;
        }
        finish(&rep, "certificate")
    }
}

struct ThetaDecompose;

impl Command for ThetaDecompose {
    fn about(&self) -> &'static str {
        "θ = smooth + rational + irrational on a subtorus"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let theta = load_theta(args)?;
        let n = need(args.n, "N")?;
        let g = growth(args)?;
        let dec = diophantine::decompose_theta_from(&theta, n, &g, &BigInt::from(1), s.enumeration_budget)?;
        emit(args.output.as_deref(), &to_json(&dec)?)?;
        finish(&diophantine::verify_decomposition_with(&dec, s.enumeration_budget), "decomposition")
    }
}

struct IrrationalCheck;

impl Command for IrrationalCheck {
    fn about(&self) -> &'static str {
        "exhaustive (A, N)-irrationality scan of θ"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let s = settings(args)?;
        let theta = load_theta(args)?;
        let a = BigInt::from(need(args.a, "A")?);
        let n = BigInt::from(need(args.n, "N")?);
        let rec = diophantine::is_irrational_with(&theta, &a, &n, s.enumeration_budget)?;
        emit(args.output.as_deref(), &to_json(&rec)?)?;
        match rec.counterexample() {
            None => Ok(()),
            Some(q) => Err(CliError {
                code: io::EXIT_FAIL,
                message: format!(
                    "irrationality failed: q = ({}) has ‖q·θ‖ < A/N",
                    q.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
                ),
            }),
        }
    }
}

struct Count;

#[derive(Serialize)]
struct CountReport {
    theta: TorusPoint,
    tries: usize,
    progression: Progression,
    trial: counting::Trial,
    diagnostic: counting::GeometricDiagnostic,
}

fn parse_sweep(spec: &str) -> CliResult<Vec<u64>> {
    let body = spec.trim();
    let body = body.strip_prefix("A=").unwrap_or(body);
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| CliError::input(format!("bad A value '{}' in --sweep", t.trim())))
        })
        .collect()
}

impl Command for Count {
    fn about(&self) -> &'static str {
        "equidistribution of P(θn) against the geometric-series bound"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let poly: TrigPolynomial = match args.input.first() {
            Some(p) => read_json(p)?,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                TrigPolynomial::random_real(args.dim, 3, 10.0, &mut rng)
            }
        };
        poly.validate()?;
        let n = args.n.unwrap_or(DEFAULT_COUNT_N);

        if let Some(sweep) = &args.sweep {
            let a_values = parse_sweep(sweep)?;
            let rows = counting::a_sweep(&poly, n, &a_values, args.seed, args.tries)?;
            let mut violated = Vec::new();
            let table = rows.iter().map(|r| {
                let theta = r
                    .theta
                    .as_ref()
                    .map(|t| t.to_string())
                    .unwrap_or_default();
                let (err, bound) = match &r.trial {
                    Some(t) => {
                        if t.error > t.bound {
                            violated.push(r.a);
                        }
                        (num(t.error), num(t.bound))
                    }
                    None => {
                        eprintln!("A = {}: no ({}, {n})-irrational θ in {} tries", r.a, r.a, r.tries);
                        (String::new(), String::new())
                    }
                };
                vec![r.a.to_string(), theta, r.tries.to_string(), err, bound]
            });
            let text = csv_text(&["A", "theta", "tries", "error", "bound"], table.collect::<Vec<_>>())?;
            emit(args.output.as_deref(), &text)?;
            if let Some(p) = &args.csv {
                emit(Some(p), &text)?;
            }
            if !violated.is_empty() {
                return Err(CliError {
                    code: io::EXIT_FAIL,
                    message: format!("error exceeds bound at A = {violated:?}"),
                });
            }
            return Ok(());
        }

        let (theta, tries) = match (&args.theta, args.a) {
            (Some(s), _) => (parse_theta(s)?, 0),
            (None, Some(a)) => counting::find_irrational_theta(poly.dim, a, n, args.seed, args.tries)?
                .ok_or_else(|| CliError {
                    code: io::EXIT_BUDGET,
                    message: format!("no ({a}, {n})-irrational θ found in {} tries", args.tries),
                })?,
            (None, None) => return Err(CliError::input("count needs --theta, --A or --sweep")),
        };
        let q = args.q.unwrap_or(1);
        let p = Progression { start: q, step: q, length: n };
        let trial = counting::equidistribution_trial(&poly, &theta, &p)?;
        let diagnostic = counting::geometric_bounds(&poly, &theta, &p)?;
        let ok = trial.error <= trial.bound;
        let report = CountReport { theta, tries, progression: p, trial, diagnostic };
        emit(args.output.as_deref(), &to_json(&report)?)?;
        if ok {
            Ok(())
        } else {
            Err(CliError {
                code: io::EXIT_FAIL,
                message: format!(
                    "bound failed: error {} > bound {}",
                    report.trial.error, report.trial.bound
                ),
            })
        }
    }
}

struct Synth;

impl Command for Synth {
    fn about(&self) -> &'static str {
        "deterministic synthetic f on [N] from --generator and --seed"
    }

    fn run(&self, args: &Args) -> CliResult<()> {
        let g = args
            .generator
            .as_deref()
            .ok_or_else(|| CliError::input("--generator is required"))?;
        let n = need(args.n, "N")?;
        let f = u2reg::synth::synth(g, n as usize, args.seed)?;
        emit(args.output.as_deref(), &to_json(&f)?)
    }
}
