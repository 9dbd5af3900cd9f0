//! The `U²` regularity decomposition `f = f_str + f_sml + f_unf` and its
//! certificate verifier.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::config::{u2_within, Settings};
use crate::factors::{
    self, cell_average, conditional_expectation, energy, Factor, Termination, WeakTelemetry,
};
use crate::fourier::{self, l2_norm, IntervalFunction};
use crate::growth::GrowthFunction;
use crate::inverse::SetWitness;
pub use crate::report::{Clause, VerificationReport};
use crate::torus::TorusPoint;
use crate::witness::{Expr, StructureWitness};
use crate::{Error, Result};

/// Per-generator tolerance levels tried by
/// [`approximate_conditional_expectation`], coarse to fine; after these the
/// sharpest available witness is used.
const ACE_LEVELS: [f64; 7] = [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxExpectation {
    pub witness: StructureWitness,
    /// `‖g - F(θ·)‖₂`, measured.
    pub l2_error: f64,
    /// Per-generator tolerance level used; `None` means the sharpest witnesses.
    pub level: Option<f64>,
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

struct Composer<'a> {
    factor: &'a Factor,
    values: Vec<f64>,
    /// Chosen witness expression per generator, coordinates already global.
    exprs: Vec<Option<Expr>>,
}

impl Composer<'_> {
    /// Trie over generator splits: `clamp(w·A + (1-w)·B)`.
    fn build(&self, cells: &[usize], depth: usize) -> Result<Expr> {
        if cells.len() == 1 {
            return Ok(Expr::constant(self.values[cells[0]]));
        }
        let mut j = depth;
        loop {
            let first = self.factor.signature(cells[0])[j];
            if cells.iter().any(|&c| self.factor.signature(c)[j] != first) {
                break;
            }
            j += 1;
        }
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            cells.iter().partition(|&&c| self.factor.signature(c)[j]);
        let w = self.exprs[j]
            .clone()
            .ok_or_else(|| Error::invalid(format!("generator {j} has no witness")))?;
        let a = self.build(&inside, j + 1)?;
        let b = self.build(&outside, j + 1)?;
        Ok(Expr::clamp(Expr::Sum {
            terms: vec![
                Expr::Prod {
                    factors: vec![w.clone(), a],
                },
                Expr::Prod {
                    factors: vec![Expr::complement(w), b],
                },
            ],
        }))
    }
}

/// Composes generator witnesses into one `F(θn)` approximating the
/// `B`-measurable function `g` to `L²` error at most `target`.
pub fn approximate_conditional_expectation(
    g: &IntervalFunction,
    b: &Factor,
    target: f64,
) -> Result<ApproxExpectation> {
    if g.n() != b.n() {
        return Err(Error::invalid("function and factor lengths differ"));
    }
    if !b.is_certified() {
        return Err(Error::invalid(
            "factor cells are not generated from witnessed sets",
        ));
    }
    let values: Vec<f64> = b
        .cells()
        .iter()
        .map(|members| cell_average(g.values(), members))
        .collect();
    let all: Vec<usize> = (0..b.complexity()).collect();

    let mut best = f64::INFINITY;
    let levels = ACE_LEVELS.iter().map(|&l| Some(l)).chain([None]);
    for level in levels {
        let chosen: Vec<Option<&SetWitness>> = b
            .generators()
            .iter()
            .map(|set| match level {
                Some(l) => set.witness_within(l).or_else(|| set.sharpest()),
                None => set.sharpest(),
            })
            .collect();
        let mut thetas: Vec<TorusPoint> = Vec::new();
        let mut exprs = Vec::with_capacity(chosen.len());
        for sw in &chosen {
            exprs.push(sw.map(|sw| {
                let w = &sw.witness;
                if w.dim == 0 {
                    return w.expr.clone();
                }
                let offset = match thetas.iter().position(|t| *t == w.theta) {
                    Some(k) => thetas[..k].iter().map(TorusPoint::dim).sum::<usize>(),
                    None => {
                        let off: usize = thetas.iter().map(TorusPoint::dim).sum();
                        thetas.push(w.theta.clone());
                        off
                    }
                };
                w.expr.remap(&|c| c + offset)
            }));
        }
        let composer = Composer {
            factor: b,
            values: values.clone(),
            exprs,
        };
        let expr = composer.build(&all, 0)?;
        let theta = thetas
            .iter()
            .fold(TorusPoint::zero(0), |acc, t| acc.concat(t));
        let witness = StructureWitness::new(theta, expr)?;
        let err = l2_distance(g.values(), &witness.evaluate(g.n()));
        if err <= target {
            return Ok(ApproxExpectation {
                witness,
                l2_error: err,
                level,
            });
        }
        best = best.min(err);
    }
    Err(Error::TargetUnreachable { target, best })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub m_in: f64,
    pub m_out: f64,
    pub witness_error: f64,
    pub witness_complexity: f64,
    /// `1/F(m_out)`, the uniformity level of the weak regularization.
    pub delta: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub cells_before: usize,
    pub cells_after: usize,
    pub weak: WeakTelemetry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub l2_of_sml: f64,
    pub u2_of_unf: f64,
    /// `1/F(m_value)`.
    pub u2_bound: f64,
    pub witness_l2_error: f64,
    pub f_str_range: [f64; 2],
    pub f_str_plus_sml_range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub stages: Vec<StageRecord>,
    /// Energy of `B_0, B_1, ...`.
    pub energies: Vec<f64>,
    /// Cell counts of `B_0, B_1, ...`.
    pub complexities: Vec<usize>,
    pub stage_limit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub epsilon: f64,
    pub growth: GrowthFunction,
    pub f: IntervalFunction,
    pub f_str: IntervalFunction,
    pub f_sml: IntervalFunction,
    pub f_unf: IntervalFunction,
    pub m_value: f64,
    pub witness: StructureWitness,
    pub measured: Measured,
    pub telemetry: Telemetry,
}

/// `⌈4/ε²⌉ + 1`.
pub fn stage_limit(epsilon: f64) -> usize {
    (4.0 / (epsilon * epsilon)).ceil() as usize + 1
}

fn range(v: &[f64]) -> [f64; 2] {
    [
        v.iter().cloned().fold(f64::INFINITY, f64::min),
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    ]
}

fn inverse_growth(growth: &GrowthFunction, m: f64) -> Result<f64> {
    let v = growth.eval(m);
    if !v.is_finite() {
        return Err(Error::GrowthOverflow(m));
    }
    if !(v > 0.0) {
        return Err(Error::invalid(format!("growth {growth} is not positive at {m}")));
    }
    Ok(1.0 / v)
}

pub fn regularize(
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
) -> Result<RegularityCertificate> {
    regularize_with(f, epsilon, growth, &Settings::default())
}

pub fn regularize_with(
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
    settings: &Settings,
) -> Result<RegularityCertificate> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !f.within(0.0, 1.0) {
        return Err(Error::invalid("regularization needs values in [0, 1]"));
    }
    let n = f.n();
    let limit = stage_limit(epsilon);
    let max_steps = settings.max_steps.unwrap_or(n);

    let mut b = Factor::trivial(n);
    let mut m_i = 1.0f64;
    let mut tel = Telemetry {
        stages: Vec::new(),
        energies: vec![energy(f, &b)?],
        complexities: vec![b.complexity()],
        stage_limit: limit,
    };
    for _ in 0..limit {
        let g = conditional_expectation(f, &b)?;
        let ace = approximate_conditional_expectation(&g, &b, epsilon / 2.0)?;
        let m_next = m_i.max(ace.witness.complexity);
        let delta = inverse_growth(growth, m_next)?;
        let weak = factors::weak_regularize(f, &b, delta, max_steps, settings)?;
        if weak.termination() == Termination::Stalled {
            return Err(Error::WeakRegularization {
                steps: weak.telemetry.gains.len(),
                residual: weak.residual_u2(),
                delta,
                telemetry: Box::new(weak.telemetry),
            });
        }
        let b_next = weak.factor;
        let e_before = *tel.energies.last().expect("initial energy");
        let e_after = energy(f, &b_next)?;
        tel.stages.push(StageRecord {
            m_in: m_i,
            m_out: m_next,
            witness_error: ace.l2_error,
            witness_complexity: ace.witness.complexity,
            delta,
            energy_before: e_before,
            energy_after: e_after,
            cells_before: b.complexity(),
            cells_after: b_next.complexity(),
            weak: weak.telemetry,
        });
        tel.energies.push(e_after);
        tel.complexities.push(b_next.complexity());

        if e_after - e_before <= epsilon * epsilon / 4.0 {
            let proj = conditional_expectation(f, &b_next)?;
            return assemble(f, epsilon, growth, m_next, ace, &proj, tel);
        }
        b = b_next;
        m_i = m_next;
    }
    Err(Error::StageBudget(limit))
}

fn assemble(
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
    m_value: f64,
    ace: ApproxExpectation,
    proj: &IntervalFunction,
    telemetry: Telemetry,
) -> Result<RegularityCertificate> {
    let n = f.n();
    let str_vals = ace.witness.evaluate(n);
    let mut sml_vals = Vec::with_capacity(n);
    let mut unf_vals = Vec::with_capacity(n);
    for i in 0..n {
        let s = str_vals[i];
        let mut d = proj.values()[i] - s;
        // Keep f_str + f_sml inside [0, 1] after rounding.
        while s + d > 1.0 {
            d = d.next_down();
        }
        while s + d < 0.0 {
            d = d.next_up();
        }
        sml_vals.push(d);
        unf_vals.push(f.values()[i] - (s + d));
    }
    let f_str = f.with_values(str_vals)?;
    let f_sml = f.with_values(sml_vals)?;
    let f_unf = f.with_values(unf_vals)?;
    let sum_str_sml: Vec<f64> = f_str
        .values()
        .iter()
        .zip(f_sml.values())
        .map(|(a, b)| a + b)
        .collect();
    let measured = Measured {
        l2_of_sml: l2_norm(&f_sml),
        u2_of_unf: fourier::u2_norm_interval(&f_unf)?,
        u2_bound: inverse_growth(growth, m_value)?,
        witness_l2_error: ace.l2_error,
        f_str_range: range(f_str.values()),
        f_str_plus_sml_range: range(&sum_str_sml),
    };
    Ok(RegularityCertificate {
        epsilon,
        growth: growth.clone(),
        f: f.clone(),
        f_str,
        f_sml,
        f_unf,
        m_value,
        witness: ace.witness,
        measured,
        telemetry,
    })
}

/// Exact rational residual `|a + b + c - f|` against `2^-52 (|a|+|b|+|c|)`.
fn sum_clause(f: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> (bool, String) {
    let ulp = BigRational::new(1.into(), num_bigint::BigInt::from(1u64 << 52));
    let mut worst = 0usize;
    let mut worst_res = BigRational::zero();
    for i in 0..f.len() {
        let q = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
        let (qa, qb, qc) = (q(a[i]), q(b[i]), q(c[i]));
        let res = (&qa + &qb + &qc - q(f[i])).abs();
        let allow = &ulp * (qa.abs() + qb.abs() + qc.abs());
        if res > allow {
            return (
                false,
                format!(
                    "n = {}: f_str + f_sml + f_unf - f = {}",
                    i + 1,
                    crate::torus::rational_to_f64(&res)
                ),
            );
        }
        if res > worst_res {
            worst_res = res;
            worst = i + 1;
        }
    }
    (
        true,
        format!(
            "largest exact residual {:e} at n = {}",
            crate::torus::rational_to_f64(&worst_res),
            worst
        ),
    )
}

/// Recomputes every clause of `cert` from scratch.
pub fn verify_certificate(
    cert: &RegularityCertificate,
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
) -> VerificationReport {
    let mut rep = VerificationReport { clauses: Vec::new() };
    let shapes_ok = [&cert.f, &cert.f_str, &cert.f_sml, &cert.f_unf]
        .iter()
        .all(|g| g.n() == f.n() && g.m() == f.m());
    rep.push(
        "shape",
        shapes_ok && cert.f == *f,
        format!("N = {}, M = {}, input matches: {}", f.n(), f.m(), cert.f == *f),
    );
    if !shapes_ok {
        return rep;
    }

    let (ok, detail) = sum_clause(
        f.values(),
        cert.f_str.values(),
        cert.f_sml.values(),
        cert.f_unf.values(),
    );
    rep.push("sum", ok, detail);

    let l2 = l2_norm(&cert.f_sml);
    rep.push(
        "l2_small",
        l2 <= epsilon,
        format!("‖f_sml‖₂ = {l2:e}, ε = {epsilon}"),
    );

    match (fourier::u2_norm_interval(&cert.f_unf), inverse_growth(growth, cert.m_value)) {
        (Ok(u2), Ok(bound)) => rep.push(
            "u2_uniform",
            u2_within(u2, bound),
            format!("‖f_unf‖_U² = {u2:e}, 1/F(M) = {bound:e}"),
        ),
        (a, b) => rep.push(
            "u2_uniform",
            false,
            format!("could not evaluate: {:?} {:?}", a.err(), b.err()),
        ),
    }

    let str_ok = cert.f_str.within(0.0, 1.0);
    rep.push("range_str", str_ok, format!("range {:?}", range(cert.f_str.values())));
    let sum: Vec<f64> = cert
        .f_str
        .values()
        .iter()
        .zip(cert.f_sml.values())
        .map(|(a, b)| a + b)
        .collect();
    let r = range(&sum);
    rep.push(
        "range_str_plus_sml",
        r[0] >= 0.0 && r[1] <= 1.0,
        format!("range {r:?}"),
    );
    let bounded = cert.f_sml.within(-1.0, 1.0) && cert.f_unf.within(-1.0, 1.0);
    rep.push("bounded", bounded, "f_sml, f_unf within [-1, 1]");

    let w = &cert.witness;
    match StructureWitness::new(w.theta.clone(), w.expr.clone()) {
        Ok(fresh) => {
            let eval = fresh.evaluate(f.n());
            let dev = eval
                .iter()
                .zip(cert.f_str.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            rep.push(
                "witness_eval",
                dev <= 1e-12,
                format!("max |F(θn) - f_str(n)| = {dev:e}"),
            );
            rep.push(
                "witness_complexity",
                fresh.complexity <= cert.m_value,
                format!("complexity {} vs M = {}", fresh.complexity, cert.m_value),
            );
            let (lip, sup) = fresh.spot_check(2000, 0);
            rep.push(
                "lipschitz_spot_check",
                lip <= 1.0 + 1e-9 && sup <= 1.0 + 1e-9,
                format!("worst ratios: lip {lip:.6}, sup {sup:.6}"),
            );
        }
        Err(e) => rep.push("witness_eval", false, e.to_string()),
    }

    let stages = cert.telemetry.stages.len();
    let limit = stage_limit(epsilon);
    rep.push(
        "stage_count",
        stages >= 1 && stages <= limit,
        format!("{stages} stages, limit {limit}"),
    );
    rep
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    #[test]
    fn constant_function() {
        let f = IntervalFunction::new(vec![0.5; 64]).unwrap();
        let g = GrowthFunction::parse("exp:1").unwrap();
        let cert = regularize(&f, 0.5, &g).unwrap();
        assert!(cert.f_str.values().iter().all(|&v| v == 0.5));
        assert!(cert.f_sml.values().iter().all(|&v| v == 0.0));
        assert!(cert.f_unf.values().iter().all(|&v| v == 0.0));
        assert!(verify_certificate(&cert, &f, 0.5, &g).passed());
    }

    #[test]
    fn trivial_factor_gives_constant_witness() {
        let g = IntervalFunction::new(vec![0.3; 10]).unwrap();
        let a = approximate_conditional_expectation(&g, &Factor::trivial(10), 0.0).unwrap();
        assert_eq!(a.l2_error, 0.0);
        assert_eq!(a.witness.expr, Expr::constant(0.3));
    }

    #[test]
    fn single_generator_error_is_bounded_by_generator_error() {
        let n = 128;
        let f = IntervalFunction::from_fn(n, |k| {
            0.5 + 0.4 * (std::f64::consts::TAU * 3.0 * k as f64 / 256.0).cos()
        })
        .unwrap();
        let cs = crate::inverse::correlating_set(&f.map(|v| v - 0.5), 0.1).unwrap();
        let b = Factor::trivial(n).join(Arc::new(cs.set.clone()));
        let g = conditional_expectation(&f, &b).unwrap();
        let coarse = cs.set.witnesses.iter().map(|w| w.achieved_l2_error).fold(0.0, f64::max);
        let a = approximate_conditional_expectation(&g, &b, coarse).unwrap();
        let used = cs.set.witness_within(a.level.unwrap_or(0.0)).or(cs.set.sharpest()).unwrap();
        assert!(a.l2_error <= used.achieved_l2_error + 1e-12);
    }

    #[test]
    fn uncertified_factor_is_rejected() {
        let g = IntervalFunction::new(vec![0.3; 4]).unwrap();
        let b = Factor::from_cells(4, vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert!(approximate_conditional_expectation(&g, &b, 0.1).is_err());
    }
}
