//! Regularity with the structured part in the form `F̃(n/N, n mod q, θn)`,
//! `θ` highly irrational on a subtorus.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::config::{Settings, GROWTH_INFLATION, NORM_TOL};
use crate::counting::StructuredFunction;
use crate::diophantine::{
    decompose_theta_from, is_irrational_with, verify_decomposition_with, IntMatrix, SubtorusChart,
    ThetaDecomposition,
};
use crate::fourier::{self, IntervalFunction};
use crate::growth::GrowthFunction;
use crate::regularity::{regularize_with, verify_certificate, RegularityCertificate};
use crate::report::VerificationReport;
use crate::torus::{frac, rational_to_f64, TorusPoint};
use crate::witness::Expr;
use crate::{Error, Result};

/// The maps feeding `F̃(x, y, z) = F(N·s·x + θ_rat·y + L⁻¹(z, 0))`, where
/// `F` is the base witness expression on `T^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FTilde {
    pub n: u64,
    #[serde(with = "crate::torus::big_string")]
    pub q: BigInt,
    /// `d`, the dimension of the base witness.
    pub ambient_dim: usize,
    /// `d'`, the dimension of the irrational chart.
    pub dim: usize,
    /// `N·s` with `s` the signed representative of `θ_smooth`.
    #[serde(with = "crate::torus::rational_string::vec")]
    pub smooth_scaled: Vec<BigRational>,
    pub rational: TorusPoint,
    /// First `d'` columns of `L⁻¹`.
    pub chart_inverse: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub m1: f64,
    pub m2: f64,
    pub m: f64,
    /// `F₁(M₁)`.
    pub f1_at_m1: f64,
    /// `F₂(M₂)`.
    pub f2_at_m2: f64,
    /// `F(M)`.
    pub f_at_m: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrationalCertificate {
    pub base: RegularityCertificate,
    pub growth: GrowthFunction,
    pub growth_1: GrowthFunction,
    pub growth_2: GrowthFunction,
    pub decomposition: ThetaDecomposition,
    #[serde(with = "crate::torus::big_string")]
    pub q: BigInt,
    pub chart: SubtorusChart,
    pub theta_irr: TorusPoint,
    pub f_tilde: FTilde,
    /// Bound on `‖F̃‖_Lip` for the sum of the three coordinate metrics.
    pub lip_bound: f64,
    pub m_value: f64,
    pub growth_audit: GrowthAudit,
}

/// `(F₁, F₂)` with `F₂(M) = F(16M²)` and `F₁(M) = F₂(16M²)`.
pub fn inflated_growths(growth: &GrowthFunction) -> (GrowthFunction, GrowthFunction) {
    let f2 = growth.inflate(GROWTH_INFLATION);
    let f1 = f2.inflate(GROWTH_INFLATION);
    (f1, f2)
}

fn signed(x: &BigRational) -> BigRational {
    let f = frac(x);
    if f > BigRational::new(BigInt::one(), BigInt::from(2)) {
        f - BigRational::one()
    } else {
        f
    }
}

fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

fn build_f_tilde(dec: &ThetaDecomposition) -> FTilde {
    let d = dec.theta.dim();
    let dp = dec.chart.dim;
    let big_n = BigRational::from_integer(BigInt::from(dec.n));
    let smooth_scaled = dec.smooth.coords().iter().map(|c| signed(c) * &big_n).collect();
    let cols = (0..d)
        .map(|i| dec.chart.inverse.row(i)[..dp].to_vec())
        .collect();
    FTilde {
        n: dec.n,
        q: dec.torsion_order.clone(),
        ambient_dim: d,
        dim: dp,
        smooth_scaled,
        rational: dec.rational.clone(),
        chart_inverse: IntMatrix::from_rows(cols).expect("rectangular"),
    }
}

impl FTilde {
    /// The torus point `N·s·x + θ_rat·y + L⁻¹(z, 0)`, exactly.
    pub fn argument_exact(&self, x: &BigRational, y: &BigInt, z: &[BigRational]) -> TorusPoint {
        let yr = BigRational::from_integer(y.clone());
        let coords = (0..self.ambient_dim)
            .map(|i| {
                let mut v = &self.smooth_scaled[i] * x + &self.rational.coords()[i] * &yr;
                for (l, zj) in self.chart_inverse.row(i).iter().zip(z) {
                    if !l.is_zero() {
                        v += BigRational::from_integer(l.clone()) * zj;
                    }
                }
                v
            })
            .collect();
        TorusPoint::new(coords)
    }

    /// The same argument in floating point.
    pub fn argument(&self, x: f64, y: u64, z: &[f64]) -> Vec<f64> {
        (0..self.ambient_dim)
            .map(|i| {
                let mut v = rational_to_f64(&self.smooth_scaled[i]) * x
                    + (rational_to_f64(&self.rational.coords()[i]) * y as f64).rem_euclid(1.0);
                for (l, zj) in self.chart_inverse.row(i).iter().zip(z) {
                    v += big_to_f64(l) * zj;
                }
                v.rem_euclid(1.0)
            })
            .collect()
    }

    /// `‖x ↦ N·s·x‖`, `‖L⁻¹ restricted to the chart‖` (Frobenius) and the
    /// largest displacement `d(θ_rat·y, θ_rat·y')`.
    fn operator_norms(&self) -> (f64, f64, f64) {
        let smooth = self
            .smooth_scaled
            .iter()
            .map(|c| {
                let v = rational_to_f64(c);
                v * v
            })
            .sum::<f64>()
            .sqrt();
        let chart = big_to_f64(&self.chart_inverse.frobenius_sq()).sqrt();
        let torsion = if self.rational.is_zero() {
            0.0
        } else {
            (self.ambient_dim as f64).sqrt() / 2.0
        };
        (smooth, chart, torsion)
    }
}

/// `F̃` with the base witness expression, as a [`StructuredFunction`].
#[derive(Clone, Debug)]
pub struct StructuredWitness {
    pub f_tilde: FTilde,
    pub expr: Expr,
    pub lip_bound: f64,
    q: u64,
}

impl StructuredWitness {
    pub fn new(cert: &IrrationalCertificate) -> Result<Self> {
        let q = cert
            .q
            .to_u64()
            .ok_or_else(|| Error::invalid(format!("modulus {} does not fit in u64", cert.q)))?;
        Ok(StructuredWitness {
            f_tilde: cert.f_tilde.clone(),
            expr: cert.base.witness.expr.clone(),
            lip_bound: cert.lip_bound,
            q,
        })
    }
}

impl StructuredFunction for StructuredWitness {
    fn modulus(&self) -> u64 {
        self.q
    }

    fn dim(&self) -> usize {
        self.f_tilde.dim
    }

    fn eval(&self, x: f64, y: u64, z: &[f64]) -> Complex64 {
        Complex64::new(self.expr.eval(&self.f_tilde.argument(x, y, z)), 0.0)
    }

    fn lip_bound(&self) -> f64 {
        self.lip_bound
    }
}

fn lip_of(f_tilde: &FTilde, sup: f64, lip_seminorm: f64) -> f64 {
    let (smooth, chart, torsion) = f_tilde.operator_norms();
    let torsion_lip = if torsion == 0.0 {
        0.0
    } else {
        (2.0 * sup).min(lip_seminorm * torsion)
    };
    let semi = (lip_seminorm * smooth).max(lip_seminorm * chart).max(torsion_lip);
    sup + semi
}

fn audit(
    growth: &GrowthFunction,
    f1: &GrowthFunction,
    f2: &GrowthFunction,
    m1: f64,
    m2: f64,
    m: f64,
) -> GrowthAudit {
    let (a, b, c) = (f1.eval(m1), f2.eval(m2), growth.eval(m));
    GrowthAudit {
        m1,
        m2,
        m,
        f1_at_m1: a,
        f2_at_m2: b,
        f_at_m: c,
        passed: a.is_finite() && b.is_finite() && c.is_finite() && a >= b && b >= c,
    }
}

pub fn regularize_irrational(
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
) -> Result<IrrationalCertificate> {
    regularize_irrational_with(f, epsilon, growth, &Settings::default())
}

pub fn regularize_irrational_with(
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
    settings: &Settings,
) -> Result<IrrationalCertificate> {
    let (f1, f2) = inflated_growths(growth);
    let base = regularize_with(f, epsilon, &f1, settings)?;
    let m1 = base.m_value;
    let m_start = BigInt::from(m1.ceil() as u64);
    let n = f.n() as u64;
    let dec = decompose_theta_from(&base.witness.theta, n, &f2, &m_start, settings.enumeration_budget)?;
    let m2 = big_to_f64(&dec.m_value);

    let f_tilde = build_f_tilde(&dec);
    let w = &base.witness;
    let lip_bound = lip_of(&f_tilde, w.sup_bound, w.lip_seminorm);
    let m = m2
        .max(lip_bound)
        .max(big_to_f64(&dec.torsion_order))
        .max(dec.chart.dim as f64)
        .ceil();
    let growth_audit = audit(growth, &f1, &f2, m1, m2, m);
    if !growth_audit.passed {
        return Err(Error::GrowthAudit(format!(
            "F1(M1) = {:e}, F2(M2) = {:e}, F(M) = {:e} with M1 = {m1}, M2 = {m2}, M = {m}",
            growth_audit.f1_at_m1, growth_audit.f2_at_m2, growth_audit.f_at_m
        )));
    }
    Ok(IrrationalCertificate {
        growth: growth.clone(),
        growth_1: f1,
        growth_2: f2,
        q: dec.torsion_order.clone(),
        chart: dec.chart.clone(),
        theta_irr: dec.chart_coords.clone(),
        f_tilde,
        lip_bound,
        m_value: m,
        growth_audit,
        decomposition: dec,
        base,
    })
}

/// `F̃(n/N, n mod q, (θ_irr·n) in chart coordinates)`, from exact arguments.
pub fn evaluate_structured(cert: &IrrationalCertificate, n: u64) -> Result<f64> {
    let ft = &cert.f_tilde;
    if n == 0 || n > ft.n {
        return Err(Error::invalid(format!("n = {n} outside [1, {}]", ft.n)));
    }
    Ok(evaluate_exact(ft, &cert.base.witness.expr, &cert.theta_irr, n))
}

fn evaluate_exact(ft: &FTilde, expr: &Expr, theta_irr: &TorusPoint, n: u64) -> f64 {
    let nb = BigInt::from(n);
    let x = BigRational::new(nb.clone(), BigInt::from(ft.n));
    let y = if ft.q.is_positive() { &nb % &ft.q } else { BigInt::zero() };
    let z = theta_irr.scale(&nb);
    let arg = ft.argument_exact(&x, &y, z.coords());
    expr.eval(&arg.to_f64())
}

/// All of `F̃` on `[N]`.
pub fn evaluate_structured_all(cert: &IrrationalCertificate) -> Vec<f64> {
    let ft = &cert.f_tilde;
    (1..=ft.n)
        .map(|n| evaluate_exact(ft, &cert.base.witness.expr, &cert.theta_irr, n))
        .collect()
}

/// Rechecks the base certificate, the decomposition and the structured form.
pub fn verify_irrational(
    cert: &IrrationalCertificate,
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
) -> VerificationReport {
    verify_irrational_with(cert, f, epsilon, growth, &Settings::default())
}

pub fn verify_irrational_with(
    cert: &IrrationalCertificate,
    f: &IntervalFunction,
    epsilon: f64,
    growth: &GrowthFunction,
    settings: &Settings,
) -> VerificationReport {
    let mut rep = VerificationReport::default();
    let (f1, f2) = inflated_growths(growth);
    let chain_ok = cert.growth == *growth && cert.growth_1 == f1 && cert.growth_2 == f2;
    rep.push(
        "growth_chain",
        chain_ok,
        format!("F = {growth}, F1 = {f1}, F2 = {f2}"),
    );
    rep.extend_prefixed("base", verify_certificate(&cert.base, f, epsilon, &f1));

    let dec = &cert.decomposition;
    rep.extend_prefixed("decomposition", verify_decomposition_with(dec, settings.enumeration_budget));
    let consistent = dec.theta == cert.base.witness.theta
        && dec.n == f.n() as u64
        && dec.growth == f2
        && cert.q == dec.torsion_order
        && cert.chart == dec.chart
        && cert.theta_irr == dec.chart_coords
        && cert.f_tilde == build_f_tilde(dec);
    rep.push(
        "consistency",
        consistent,
        "θ, N, q, chart, θ_irr and F̃ match the decomposition",
    );
    if !consistent {
        return rep;
    }

    let vals = evaluate_structured_all(cert);
    let dev = vals
        .iter()
        .zip(cert.base.f_str.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    rep.push(
        "structured_eval",
        dev <= NORM_TOL,
        format!("max |F̃(n/N, n mod q, θn) - f_str(n)| = {dev:e}"),
    );

    let w = &cert.base.witness;
    let lip = lip_of(&cert.f_tilde, w.sup_bound, w.lip_seminorm);
    let q = big_to_f64(&cert.q);
    let m = cert.m_value;
    rep.push(
        "complexity",
        lip == cert.lip_bound && lip <= m && q <= m && (cert.chart.dim as f64) <= m,
        format!("Lip = {lip}, q = {q}, d' = {}, M = {m}", cert.chart.dim),
    );

    let m2 = big_to_f64(&dec.m_value);
    let a = audit(growth, &f1, &f2, cert.base.m_value, m2, m);
    rep.push(
        "growth_audit",
        a.passed && a == cert.growth_audit,
        format!("F1(M1) = {:e} ≥ F2(M2) = {:e} ≥ F(M) = {:e}", a.f1_at_m1, a.f2_at_m2, a.f_at_m),
    );

    let (ok, detail) = match growth.ceil_at(m) {
        Err(e) => (false, e.to_string()),
        Ok(a) => {
            let a = a.max(BigInt::one());
            match is_irrational_with(&cert.theta_irr, &a, &BigInt::from(f.n()), settings.enumeration_budget) {
                Ok(r) => (r.passed(), format!("A = ⌈F(M)⌉ = {a}: {:?}", r.outcome)),
                Err(e) => (false, e.to_string()),
            }
        }
    };
    rep.push("irrationality", ok, detail);

    match (fourier::u2_norm_interval(&cert.base.f_unf), growth.eval(m)) {
        (Ok(u2), fm) if fm > 0.0 => rep.push(
            "u2_uniform",
            crate::config::u2_within(u2, 1.0 / fm),
            format!("‖f_unf‖_U² = {u2:e}, 1/F(M) = {:e}", 1.0 / fm),
        ),
        (r, fm) => rep.push("u2_uniform", false, format!("{:?}, F(M) = {fm}", r.err())),
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synth;

    #[test]
    fn constant_input() {
        let f = IntervalFunction::new(vec![0.25; 64]).unwrap();
        let g = GrowthFunction::parse("poly:2,1").unwrap();
        let cert = regularize_irrational(&f, 0.5, &g).unwrap();
        assert_eq!(cert.q, BigInt::one());
        assert_eq!(cert.chart.dim, 0);
        assert_eq!(evaluate_structured(&cert, 1).unwrap(), 0.25);
        assert!(evaluate_structured(&cert, 0).is_err());
        assert!(evaluate_structured(&cert, 65).is_err());
        let rep = verify_irrational(&cert, &f, 0.5, &g);
        assert!(rep.passed(), "{:?}", rep.failures());
    }

    #[test]
    fn period_three() {
        let f = synth("cosine:1,3", 1023, 0).unwrap();
        let g = GrowthFunction::parse("poly:1,0.5").unwrap();
        let cert = regularize_irrational(&f, 0.25, &g).unwrap();
        assert_eq!(cert.q, BigInt::from(3));
        assert_eq!(cert.theta_irr.dim(), 0);
        assert!(cert.decomposition.smooth.is_zero());
        let s = cert.base.f_str.values();
        assert!(s.iter().zip(&s[3..]).all(|(a, b)| a == b));
        let rep = verify_irrational(&cert, &f, 0.25, &g);
        assert!(rep.passed(), "{:?}", rep.failures());
    }
}
