//! Equidistribution of `θn` along progressions and of
//! `(n/N, n mod q, θn)` on `[0,1] × Z/qZ × T^d`.

mod equidistribution;
mod fejer;
mod grid;
mod structured;

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::TORUS_GRID;
use crate::witness::StructureWitness;
use crate::{Error, Result};

pub use equidistribution::{
    a_sweep, equidistribution_trial, find_irrational_theta, geometric_bounds,
    progression_average, GeometricDiagnostic, SweepRow, TermBound, Trial,
};
pub use fejer::{fejer_truncate, FejerApproximation};
pub use structured::{
    phi_diagnostic, structured_average, structured_integral_estimate, PhiCase, PhiDiagnostic,
    PhiTerm,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub m: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

impl TrigTerm {
    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn l2(&self) -> f64 {
        self.m.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }

    pub fn l1(&self) -> u64 {
        self.m.iter().map(|x| x.unsigned_abs()).sum()
    }
}

/// `P(x) = Σ c_m e(m·x)` on `T^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub dim: usize,
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        let p = TrigPolynomial { dim, terms };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        TrigPolynomial {
            dim,
            terms: vec![TrigTerm {
                m: vec![0; dim],
                re: c,
                im: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.m.len() != self.dim {
                return Err(Error::invalid(format!(
                    "frequency {:?} has length {} but dim = {}",
                    t.m,
                    t.m.len(),
                    self.dim
                )));
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient at {:?}", t.m)));
            }
        }
        Ok(())
    }

    /// `c_0`, the integral over `T^dim`.
    pub fn c0(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.m.iter().all(|&x| x == 0))
            .map(TrigTerm::coeff)
            .sum()
    }

    pub fn degree(&self) -> u64 {
        self.terms.iter().map(TrigTerm::l1).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.m.iter().zip(x).map(|(&m, &v)| m as f64 * v).sum();
                t.coeff() * Complex64::from_polar(1.0, TAU * phase.rem_euclid(1.0))
            })
            .sum()
    }

    /// `Σ |c_m| (1 + 2π‖m‖₂)`.
    pub fn lip_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff().norm() * (1.0 + TAU * t.l2()))
            .sum()
    }

    /// A real trigonometric polynomial with frequencies `‖m‖₁ ≤ degree`,
    /// random coefficients, and `lip_bound` in `[lip_max/2, lip_max]`.
    pub fn random_real(dim: usize, degree: u64, lip_max: f64, rng: &mut impl Rng) -> Self {
        let mut half = Vec::new();
        enumerate_half(dim, degree as i64, &mut vec![0; dim], 0, &mut half);
        let mut terms = vec![TrigTerm {
            m: vec![0; dim],
            re: rng.gen::<f64>(),
            im: 0.0,
        }];
        for m in half {
            let r: f64 = rng.gen::<f64>().sqrt();
            let a: f64 = rng.gen::<f64>();
            let c = Complex64::from_polar(r, TAU * a);
            terms.push(TrigTerm {
                m: m.iter().map(|x| -x).collect(),
                re: c.re,
                im: -c.im,
            });
            terms.push(TrigTerm { m, re: c.re, im: c.im });
        }
        let mut p = TrigPolynomial { dim, terms };
        let target = lip_max * (0.5 + 0.5 * rng.gen::<f64>());
        let s = target / p.lip_bound();
        for t in &mut p.terms {
            t.re *= s;
            t.im *= s;
        }
        p.terms.sort_by(|a, b| a.m.cmp(&b.m));
        p
    }
}

/// Nonzero `m` with `‖m‖₁ ≤ budget` and first nonzero entry positive.
fn enumerate_half(dim: usize, budget: i64, cur: &mut Vec<i64>, pos: usize, out: &mut Vec<Vec<i64>>) {
    if pos == dim {
        if cur.iter().any(|&x| x != 0) {
            out.push(cur.clone());
        }
        return;
    }
    let used: i64 = cur[..pos].iter().map(|x| x.abs()).sum();
    let left = budget - used;
    let leading = cur[..pos].iter().all(|&x| x == 0);
    let lo = if leading { 0 } else { -left };
    for v in lo..=left {
        cur[pos] = v;
        enumerate_half(dim, budget, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// A function on `T^dim` with a bound on its Lipschitz norm (sup plus seminorm).
pub trait TorusFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Complex64;
    fn lip_bound(&self) -> f64;
    fn as_trig(&self) -> Option<&TrigPolynomial> {
        None
    }
}

impl TorusFunction for TrigPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        TrigPolynomial::eval(self, x)
    }

    fn lip_bound(&self) -> f64 {
        TrigPolynomial::lip_bound(self)
    }

    fn as_trig(&self) -> Option<&TrigPolynomial> {
        Some(self)
    }
}

impl TorusFunction for StructureWitness {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.expr.eval(x), 0.0)
    }

    fn lip_bound(&self) -> f64 {
        self.lip_bound
    }
}

type TorusClosure = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A torus function given by a closure and a claimed Lipschitz bound.
#[derive(Clone)]
pub struct TorusFn {
    dim: usize,
    lip: f64,
    f: TorusClosure,
}

impl TorusFn {
    pub fn new(dim: usize, lip: f64, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        TorusFn { dim, lip, f: Arc::new(f) }
    }

    pub fn real(dim: usize, lip: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TorusFn::new(dim, lip, move |x| Complex64::new(f(x), 0.0))
    }
}

impl TorusFunction for TorusFn {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (self.f)(x)
    }

    fn lip_bound(&self) -> f64 {
        self.lip
    }
}

/// A function on `[0,1] × Z/qZ × T^dim`, Lipschitz for the sum of the
/// Euclidean, discrete and torus metrics.
pub trait StructuredFunction: Send + Sync {
    fn modulus(&self) -> u64;
    fn dim(&self) -> usize;
    fn eval(&self, x: f64, y: u64, z: &[f64]) -> Complex64;
    fn lip_bound(&self) -> f64;
}

type StructuredClosure = Arc<dyn Fn(f64, u64, &[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct StructuredFn {
    q: u64,
    dim: usize,
    lip: f64,
    f: StructuredClosure,
}

impl StructuredFn {
    pub fn new(
        q: u64,
        dim: usize,
        lip: f64,
        f: impl Fn(f64, u64, &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        StructuredFn { q, dim, lip, f: Arc::new(f) }
    }
}

impl StructuredFunction for StructuredFn {
    fn modulus(&self) -> u64 {
        self.q
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: f64, y: u64, z: &[f64]) -> Complex64 {
        (self.f)(x, y, z)
    }

    fn lip_bound(&self) -> f64 {
        self.lip
    }
}

/// `{start, start + step, …}` with `length` terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
    pub length: u64,
}

impl Progression {
    /// `[N] = {1, …, N}`.
    pub fn interval(n: u64) -> Self {
        Progression { start: 1, step: 1, length: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("empty progression"));
        }
        if self.step == 0 {
            return Err(Error::invalid("progression step must be positive"));
        }
        self.start
            .checked_add((self.length - 1).checked_mul(self.step).unwrap_or(u64::MAX))
            .filter(|&v| v < u64::MAX)
            .map(|_| ())
            .ok_or_else(|| Error::invalid("progression overflows u64"))
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.length).map(move |i| self.start + i * self.step)
    }
}

/// An integral with a rigorous error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub re: f64,
    pub im: f64,
    pub error_bound: f64,
}

impl Estimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `∫_{T^d} F`: `c_0` for trigonometric input, else the midpoint rule on a
/// `64^d` grid with error at most `Lip·√d/128`.
pub fn integral_estimate(f: &dyn TorusFunction) -> Estimate {
    if let Some(p) = f.as_trig() {
        let c = p.c0();
        return Estimate { re: c.re, im: c.im, error_bound: 0.0 };
    }
    let d = f.dim();
    let g = TORUS_GRID;
    let total = g.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut acc = Complex64::new(0.0, 0.0);
    for idx in 0..total {
        let mut r = idx;
        for c in x.iter_mut().rev() {
            *c = ((r % g) as f64 + 0.5) / g as f64;
            r /= g;
        }
        acc += f.eval(&x);
    }
    let v = acc / total as f64;
    Estimate {
        re: v.re,
        im: v.im,
        error_bound: f.lip_bound() * (d as f64).sqrt() / (2.0 * g as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist0(x: &[f64]) -> f64 {
        let t = x[0].rem_euclid(1.0);
        t.min(1.0 - t)
    }

    #[test]
    fn integral_examples() {
        let c = TrigPolynomial::constant(2, 0.7);
        let e = integral_estimate(&c);
        assert_eq!((e.re, e.error_bound), (0.7, 0.0));

        let cos = TorusFn::real(1, 1.0 + TAU, |x| (TAU * x[0]).cos());
        let e = integral_estimate(&cos);
        assert!(e.re.abs() <= e.error_bound);
        assert!(e.re.abs() < 1e-12);

        let d = TorusFn::real(1, 1.5, dist0);
        let e = integral_estimate(&d);
        assert!((e.re - 0.25).abs() <= e.error_bound);
        assert!((e.re - 0.25).abs() < 1e-12);
    }

    #[test]
    fn random_polynomial_is_real_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = TrigPolynomial::random_real(2, 3, 10.0, &mut rng);
        assert!(p.lip_bound() <= 10.0 + 1e-12);
        assert!(p.lip_bound() >= 5.0 - 1e-12);
        assert!(p.degree() <= 3);
        let v = p.eval(&[0.123, 0.456]);
        assert!(v.im.abs() < 1e-12);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<TrigPolynomial>(&json).unwrap(), p);
    }

    #[test]
    fn progression_checks() {
        assert!(Progression { start: 1, step: 1, length: 0 }.validate().is_err());
        let p = Progression { start: 2, step: 3, length: 4 };
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![2, 5, 8, 11]);
    }
}
