//! `θ = θ_smooth + θ_rational + θ_irrational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::irrationality::{is_irrational_with, IrrationalityRecord};
use super::lattice::{bezout_vector, complete_unimodular, SubtorusChart};
use crate::config::ENUMERATION_BUDGET;
use crate::growth::GrowthFunction;
use crate::report::VerificationReport;
use crate::torus::{frac, TorusPoint};
use crate::{Error, Result};

/// One descent step, in the chart coordinates it was taken in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentStep {
    #[serde(with = "crate::torus::big_string")]
    pub m_before: BigInt,
    pub scan: IrrationalityRecord,
    /// `gcd(q)`; `q = m·q'`.
    #[serde(with = "crate::torus::big_string")]
    pub m: BigInt,
    #[serde(with = "crate::torus::rational_string::vec")]
    pub smooth_shift: Vec<BigRational>,
    pub rational_shift: TorusPoint,
    pub unimodular: SubtorusChart,
    #[serde(with = "crate::torus::big_string")]
    pub m_after: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaDecomposition {
    pub theta: TorusPoint,
    pub n: u64,
    pub growth: GrowthFunction,
    pub smooth: TorusPoint,
    pub rational: TorusPoint,
    pub irrational: TorusPoint,
    pub chart: SubtorusChart,
    /// `irrational` in chart coordinates, a point of `T^{d'}`.
    pub chart_coords: TorusPoint,
    #[serde(with = "crate::torus::big_string")]
    pub m_value: BigInt,
    #[serde(with = "crate::torus::big_string")]
    pub torsion_order: BigInt,
    /// `⌈F(M)⌉`, the level of the final scan.
    #[serde(with = "crate::torus::big_string")]
    pub a_param: BigInt,
    pub certificate: IrrationalityRecord,
    pub steps: Vec<DescentStep>,
}

/// Smallest integer `k ≥ 0` with `k² ≥ x`.
fn ceil_sqrt_rational(x: &BigRational) -> BigInt {
    let c = x.ceil().to_integer();
    if c <= BigInt::zero() {
        return BigInt::zero();
    }
    let s = c.sqrt();
    if &s * &s == c {
        s
    } else {
        s + 1
    }
}

/// `⌈N · d(θ, 0)⌉`.
pub fn smooth_scale(theta: &TorusPoint, n: u64) -> BigInt {
    let n = BigRational::from_integer(BigInt::from(n));
    ceil_sqrt_rational(&(theta.sq_dist_to_zero() * &n * &n))
}

/// Representative of `x mod 1` in `(-1/2, 1/2]`.
fn signed_rep(x: &BigRational) -> BigRational {
    let f = frac(x);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if f > half {
        f - BigRational::one()
    } else {
        f
    }
}

fn level(growth: &GrowthFunction, m: &BigInt) -> Result<BigInt> {
    let mf = m.to_f64().unwrap_or(f64::INFINITY);
    if !mf.is_finite() {
        return Err(Error::GrowthOverflow(mf));
    }
    let a = growth.ceil_at(mf)?;
    Ok(a.max(BigInt::one()))
}

pub fn decompose_theta(theta: &TorusPoint, n: u64, growth: &GrowthFunction) -> Result<ThetaDecomposition> {
    decompose_theta_from(theta, n, growth, &BigInt::one(), ENUMERATION_BUDGET)
}

/// Runs the descent starting from complexity `m_start`.
pub fn decompose_theta_from(
    theta: &TorusPoint,
    n: u64,
    growth: &GrowthFunction,
    m_start: &BigInt,
    budget: u64,
) -> Result<ThetaDecomposition> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let d = theta.dim();
    let big_n = BigInt::from(n);
    let mut m = m_start.max(&BigInt::one()).clone();
    let mut chart = SubtorusChart::identity(d);
    let mut z = theta.clone();
    let mut smooth = TorusPoint::zero(d);
    let mut smooth_real = vec![BigRational::zero(); d];
    let mut rational = TorusPoint::zero(d);
    let mut steps = Vec::new();

    loop {
        let a = level(growth, &m)?;
        let scan = is_irrational_with(&z, &a, &big_n, budget)?;
        let Some(q) = scan.counterexample().map(<[BigInt]>::to_vec) else {
            return finish(theta, n, growth, smooth, rational, chart, z, m, a, scan, steps);
        };
        if steps.len() >= d {
            return Err(Error::Consistency(format!(
                "descent did not settle after {d} steps"
            )));
        }
        let dp = z.dim();
        let m_before = m.clone();

        // Smooth shift along the coordinate with the largest |q_j|.
        let s = signed_rep(&z.dot(&q));
        let j = (0..dp).max_by_key(|&i| (q[i].abs(), std::cmp::Reverse(i))).unwrap();
        let mut sigma = vec![BigRational::zero(); dp];
        sigma[j] = &s / BigRational::from_integer(q[j].clone());
        let z1 = z.sub(&TorusPoint::new(sigma.clone()));

        // Rational shift killing q'·z modulo 1.
        let g = q.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let q_prime: Vec<BigInt> = q.iter().map(|x| x / &g).collect();
        let u = complete_unimodular(&q_prime)?;
        let v = bezout_vector(&u);
        let k_over_m = z1.dot(&q_prime);
        let rho = TorusPoint::new(
            v.iter()
                .map(|vi| &k_over_m * BigRational::from_integer(vi.clone()))
                .collect(),
        );
        let z2 = z1.sub(&rho);
        debug_assert!(z2.dot(&q_prime).is_zero());

        // Pull both shifts back to θ coordinates through the current chart.
        let mut sigma_full = sigma.clone();
        sigma_full.resize(d, BigRational::zero());
        let sigma_back = chart.inverse.apply(&sigma_full);
        for (acc, x) in smooth_real.iter_mut().zip(&sigma_back) {
            *acc += x;
        }
        smooth = TorusPoint::new(smooth_real.clone());
        let mut rho_full = rho.coords().to_vec();
        rho_full.resize(d, BigRational::zero());
        rational = rational.add(&TorusPoint::new(chart.inverse.apply(&rho_full)));

        // Descend: new chart blockdiag(U, I)·L.
        let big_u = u.matrix.embed(d);
        let big_u_inv = u.inverse.embed(d);
        let matrix = big_u.mul(&chart.matrix);
        let inverse = chart.inverse.mul(&big_u_inv);
        chart = SubtorusChart::new(dp - 1, matrix, inverse);
        z = u.matrix.apply_torus(&z2).project(&(0..dp - 1).collect::<Vec<_>>());

        m = m
            .max(smooth_scale_real(&smooth_real, n))
            .max(rational.order())
            .max(chart.complexity.clone());
        steps.push(DescentStep {
            m_before,
            scan,
            m: g,
            smooth_shift: sigma,
            rational_shift: rho,
            unimodular: u,
            m_after: m.clone(),
        });
    }
}

/// `⌈N·|x|⌉` for the real vector `x`, which bounds `⌈N·d(x mod 1, 0)⌉`.
fn smooth_scale_real(x: &[BigRational], n: u64) -> BigInt {
    let n = BigRational::from_integer(BigInt::from(n));
    let sq = x.iter().fold(BigRational::zero(), |acc, c| acc + c * c);
    ceil_sqrt_rational(&(sq * &n * &n))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    theta: &TorusPoint,
    n: u64,
    growth: &GrowthFunction,
    smooth: TorusPoint,
    rational: TorusPoint,
    chart: SubtorusChart,
    z: TorusPoint,
    m: BigInt,
    a: BigInt,
    certificate: IrrationalityRecord,
    steps: Vec<DescentStep>,
) -> Result<ThetaDecomposition> {
    let irrational = theta.sub(&smooth).sub(&rational);
    if chart.from_chart(&z) != irrational {
        return Err(Error::Consistency(
            "irrational part disagrees with its chart coordinates".into(),
        ));
    }
    let torsion_order = rational.order();
    Ok(ThetaDecomposition {
        theta: theta.clone(),
        n,
        growth: growth.clone(),
        smooth,
        rational,
        irrational,
        chart,
        chart_coords: z,
        m_value: m,
        torsion_order,
        a_param: a,
        certificate,
        steps,
    })
}

/// Rechecks every clause of a decomposition from scratch.
pub fn verify_decomposition(dec: &ThetaDecomposition) -> VerificationReport {
    verify_decomposition_with(dec, ENUMERATION_BUDGET)
}

pub fn verify_decomposition_with(dec: &ThetaDecomposition, budget: u64) -> VerificationReport {
    let mut rep = VerificationReport::default();
    let d = dec.theta.dim();
    let m = &dec.m_value;
    let dims_ok = [&dec.smooth, &dec.rational, &dec.irrational]
        .iter()
        .all(|p| p.dim() == d)
        && dec.chart.ambient_dim == d
        && dec.chart_coords.dim() == dec.chart.dim;
    rep.push("shape", dims_ok, format!("d = {d}, d' = {}", dec.chart.dim));
    if !dims_ok {
        return rep;
    }

    let sum = dec.smooth.add(&dec.rational).add(&dec.irrational);
    rep.push("exact_sum", sum == dec.theta, "smooth + rational + irrational = θ");

    let scale = smooth_scale(&dec.smooth, dec.n);
    rep.push(
        "smooth_bound",
        scale <= *m,
        format!("⌈N·d(smooth, 0)⌉ = {scale} ≤ M = {m}"),
    );

    let q = &dec.torsion_order;
    let kills = dec.rational.scale(q).is_zero();
    rep.push(
        "torsion",
        q.is_positive() && kills && q <= m && *q == dec.rational.order(),
        format!("q = {q}, q·rational = 0: {kills}, M = {m}"),
    );

    rep.push(
        "chart_unimodular",
        dec.chart.is_valid(),
        format!("|det L| = 1 and L·L⁻¹ = I, complexity {}", dec.chart.complexity),
    );
    rep.push(
        "chart_complexity",
        dec.chart.complexity <= *m,
        format!("max |L_ij| = {} ≤ M = {m}", dec.chart.complexity),
    );

    let in_chart = dec.chart.contains(&dec.irrational)
        && dec.chart.to_chart(&dec.irrational) == dec.chart_coords;
    rep.push(
        "subtorus",
        in_chart,
        "L·irrational = (chart coordinates, 0)",
    );

    let a = level(&dec.growth, m);
    let (ok, detail) = match a {
        Err(e) => (false, e.to_string()),
        Ok(a) if a != dec.a_param => (false, format!("recorded A = {} but ⌈F(M)⌉ = {a}", dec.a_param)),
        Ok(a) => match is_irrational_with(&dec.chart_coords, &a, &BigInt::from(dec.n), budget) {
            Err(e) => (false, e.to_string()),
            Ok(r) => (
                r.passed(),
                format!("rerun at A = {a}, N = {}: {} vectors, {:?}", dec.n, r.visited, r.outcome),
            ),
        },
    };
    rep.push("irrationality", ok, detail);

    rep.push(
        "iterations",
        dec.steps.len() <= d && dec.steps.len() == d - dec.chart.dim,
        format!("{} steps, d = {d}", dec.steps.len()),
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(pairs: &[(i64, i64)]) -> TorusPoint {
        TorusPoint::from_fractions(pairs).unwrap()
    }

    #[test]
    fn one_third_is_rational() {
        let g = GrowthFunction::parse("poly:10,1").unwrap();
        let dec = decompose_theta(&t(&[(1, 3)]), 100, &g).unwrap();
        assert!(dec.smooth.is_zero());
        assert_eq!(dec.rational, t(&[(1, 3)]));
        assert!(dec.irrational.is_zero());
        assert_eq!(dec.chart.dim, 0);
        assert_eq!(dec.torsion_order, BigInt::from(3));
        assert!(verify_decomposition(&dec).passed());
    }

    #[test]
    fn tiny_theta_is_smooth() {
        let g = GrowthFunction::parse("poly:2,1").unwrap();
        let dec = decompose_theta(&t(&[(1, 1000)]), 100, &g).unwrap();
        assert_eq!(dec.smooth, t(&[(1, 1000)]));
        assert!(dec.rational.is_zero());
        assert!(dec.irrational.is_zero());
        assert!(verify_decomposition(&dec).passed());
    }

    #[test]
    fn mixed_two_dimensional() {
        let n = 1_000_000u64;
        let (p, big_q) = (123_457i64, 1_000_003i64);
        let theta = TorusPoint::new(vec![
            BigRational::new(1.into(), 3.into()) + BigRational::new(1.into(), BigInt::from(10 * n)),
            BigRational::new(p.into(), big_q.into()),
        ]);
        let g = GrowthFunction::parse("poly:10,1").unwrap();
        let dec = decompose_theta(&theta, n, &g).unwrap();
        let rep = verify_decomposition(&dec);
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(dec.chart.dim, 1);
        assert_eq!(dec.torsion_order, BigInt::from(3));
        let json = serde_json::to_string(&dec).unwrap();
        let back: ThetaDecomposition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dec);
    }

    #[test]
    fn tampering_is_caught() {
        let g = GrowthFunction::parse("poly:10,1").unwrap();
        let mut dec = decompose_theta(&t(&[(1, 3)]), 100, &g).unwrap();
        dec.rational = t(&[(1, 4)]);
        let rep = verify_decomposition(&dec);
        assert!(rep.failures().contains(&"exact_sum"));
        assert!(rep.failures().contains(&"torsion"));
    }
}
