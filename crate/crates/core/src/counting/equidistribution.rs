//! Averages of `F(θn)` along arithmetic progressions.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Progression, TorusFunction, TrigPolynomial};
use crate::diophantine::is_irrational_with;
use crate::torus::{rational_to_f64, TorusPoint};
use crate::{Error, Result};

/// `E_{n∈P} F(θn)` by direct summation.
pub fn progression_average(f: &dyn TorusFunction, theta: &TorusPoint, p: &Progression) -> Result<Complex64> {
    p.validate()?;
    if f.dim() != theta.dim() {
        return Err(Error::invalid(format!(
            "function on T^{} but θ in T^{}",
            f.dim(),
            theta.dim()
        )));
    }
    let mult = theta.multiples();
    let mut x = Vec::with_capacity(theta.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    for n in p.iter() {
        mult.write(n, &mut x);
        acc += f.eval(&x);
    }
    Ok(acc / p.length as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermBound {
    pub m: Vec<i64>,
    pub abs_coeff: f64,
    /// `‖(m·θ)·step‖_T`, rounded from the exact value.
    pub alpha_norm: f64,
    /// `min(1, 1/(L·‖(m·θ)·step‖_T))`, bounding `|E_{n∈P} e(m·θn)|`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricDiagnostic {
    pub terms: Vec<TermBound>,
    /// `Σ_{m≠0} |c_m|·bound_m`, which bounds `|E_{n∈P} P(θn) - c_0|`.
    pub total: f64,
}

/// Per-frequency geometric-series bounds for a trigonometric polynomial.
pub fn geometric_bounds(poly: &TrigPolynomial, theta: &TorusPoint, p: &Progression) -> Result<GeometricDiagnostic> {
    p.validate()?;
    poly.validate()?;
    if poly.dim != theta.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let step = BigInt::from(p.step);
    let len = p.length as f64;
    let mut terms = Vec::new();
    let mut total = 0.0;
    for t in &poly.terms {
        if t.m.iter().all(|&x| x == 0) {
            continue;
        }
        let q: Vec<BigInt> = t.m.iter().map(|&x| BigInt::from(x) * &step).collect();
        let alpha = theta.dot_norm(&q);
        let alpha_norm = rational_to_f64(&alpha);
        let bound = if alpha_norm > 0.0 {
            (1.0 / (len * alpha_norm)).min(1.0)
        } else {
            1.0
        };
        let abs_coeff = t.coeff().norm();
        total += abs_coeff * bound;
        terms.push(TermBound {
            m: t.m.clone(),
            abs_coeff,
            alpha_norm,
            bound,
        });
    }
    Ok(GeometricDiagnostic { terms, total })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub average_re: f64,
    pub average_im: f64,
    pub c0_re: f64,
    pub c0_im: f64,
    /// `|E_{n∈P} P(θn) - c_0|`.
    pub error: f64,
    pub bound: f64,
}

pub fn equidistribution_trial(poly: &TrigPolynomial, theta: &TorusPoint, p: &Progression) -> Result<Trial> {
    let avg = progression_average(poly, theta, p)?;
    let c0 = poly.c0();
    let diag = geometric_bounds(poly, theta, p)?;
    Ok(Trial {
        average_re: avg.re,
        average_im: avg.im,
        c0_re: c0.re,
        c0_im: c0.im,
        error: (avg - c0).norm(),
        bound: diag.total,
    })
}

/// Default denominator for searched θ: a prime above `10^6`.
const SEARCH_DENOMINATOR: i64 = 1_000_003;

/// Seeded search for `θ ∈ T^dim` with denominator `1000003` that is
/// `(A, N)`-irrational; `None` after `max_tries` candidates.
pub fn find_irrational_theta(
    dim: usize,
    a: u64,
    n: u64,
    seed: u64,
    max_tries: usize,
) -> Result<Option<(TorusPoint, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, n) = (BigInt::from(a), BigInt::from(n));
    for tries in 1..=max_tries {
        let theta = TorusPoint::new(
            (0..dim)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(1..SEARCH_DENOMINATOR)),
                        BigInt::from(SEARCH_DENOMINATOR),
                    )
                })
                .collect(),
        );
        match is_irrational_with(&theta, &a, &n, crate::config::ENUMERATION_BUDGET) {
            Ok(r) if r.passed() => return Ok(Some((theta, tries))),
            Ok(_) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: u64,
    /// `None` when no `(A, N)`-irrational θ was found.
    pub theta: Option<TorusPoint>,
    pub tries: usize,
    pub trial: Option<Trial>,
}

/// For each `A`, searches a fresh `(A, N)`-irrational θ and measures the
/// equidistribution error of `poly` along `[N]` against its geometric bound.
pub fn a_sweep(
    poly: &TrigPolynomial,
    n: u64,
    a_values: &[u64],
    seed: u64,
    max_tries: usize,
) -> Result<Vec<SweepRow>> {
    let p = Progression::interval(n);
    a_values
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let found = find_irrational_theta(poly.dim, a, n, seed.wrapping_add(i as u64), max_tries)?;
            Ok(match found {
                Some((theta, tries)) => {
                    let trial = equidistribution_trial(poly, &theta, &p)?;
                    SweepRow {
                        a,
                        theta: Some(theta),
                        tries,
                        trial: Some(trial),
                    }
                }
                None => SweepRow {
                    a,
                    theta: None,
                    tries: max_tries,
                    trial: None,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{TorusFn, TrigTerm};
    use std::f64::consts::TAU;

    #[test]
    fn constant_average() {
        let c = TorusFn::real(2, 0.4, |_| 0.4);
        let th = TorusPoint::from_fractions(&[(1, 7), (2, 9)]).unwrap();
        let v = progression_average(&c, &th, &Progression { start: 3, step: 5, length: 11 }).unwrap();
        assert!((v.re - 0.4).abs() < 1e-15);
        assert!(progression_average(&c, &th, &Progression { start: 1, step: 1, length: 0 }).is_err());
    }

    #[test]
    fn geometric_closed_form() {
        // e(x) at θ = 1/2 along the even numbers 2, 4, …, 2N: every term is 1.
        let e = TrigPolynomial::new(1, vec![TrigTerm { m: vec![1], re: 1.0, im: 0.0 }]).unwrap();
        let th = TorusPoint::from_fractions(&[(1, 2)]).unwrap();
        let n = 50;
        let v = progression_average(&e, &th, &Progression { start: 2, step: 2, length: n }).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // Along all of [2N] the sum telescopes to 0.
        let v = progression_average(&e, &th, &Progression::interval(2 * n)).unwrap();
        assert!(v.norm() < 1e-12);
        // Generic ratio against the closed form.
        let th = TorusPoint::from_fractions(&[(3, 17)]).unwrap();
        let v = progression_average(&e, &th, &Progression::interval(40)).unwrap();
        let z = Complex64::from_polar(1.0, TAU * 3.0 / 17.0);
        let closed = z * (z.powu(40) - 1.0) / (z - 1.0) / 40.0;
        assert!((v - closed).norm() < 1e-12);
        let diag = geometric_bounds(&e, &th, &Progression::interval(40)).unwrap();
        assert!(v.norm() <= diag.total);
    }

    #[test]
    fn search_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let poly = TrigPolynomial::random_real(1, 3, 10.0, &mut rng);
        let rows = a_sweep(&poly, 4096, &[25], 5, 10_000).unwrap();
        let t = rows[0].trial.as_ref().unwrap();
        assert!(t.error <= t.bound);
        assert!(t.bound <= poly.lip_bound() / 25.0);
    }
}
