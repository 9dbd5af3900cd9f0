//! Averages over `n ↦ (n/N, n mod q, θn)` and the exponential-sum
//! decomposition behind them.

use std::f64::consts::{PI, TAU};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::grid::{fftn, signed_freq, unflatten};
use super::{Estimate, StructuredFunction};
use crate::config::{INTERVAL_GRID, TORUS_GRID};
use crate::torus::{frac, norm_t, rational_to_f64, TorusPoint};
use crate::{Error, Result};

const GRID_BUDGET: usize = 1 << 24;
const COEFF_FLOOR: f64 = 1e-14;

fn check(f: &dyn StructuredFunction, theta: &TorusPoint, n: u64) -> Result<()> {
    if f.modulus() == 0 {
        return Err(Error::invalid("modulus q must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if f.dim() != theta.dim() {
        return Err(Error::invalid(format!(
            "function on T^{} but θ in T^{}",
            f.dim(),
            theta.dim()
        )));
    }
    Ok(())
}

/// `E_{n≤N} F(n/N, n mod q, θn)`.
pub fn structured_average(f: &dyn StructuredFunction, theta: &TorusPoint, n: u64) -> Result<Complex64> {
    check(f, theta, n)?;
    let q = f.modulus();
    let mult = theta.multiples();
    let mut z = Vec::with_capacity(theta.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        mult.write(k, &mut z);
        acc += f.eval(k as f64 / n as f64, k % q, &z);
    }
    Ok(acc / n as f64)
}

fn grid_size(q: u64, d: usize, x_len: usize) -> Result<usize> {
    let mut total = x_len.checked_mul(q as usize);
    for _ in 0..d {
        total = total.and_then(|t| t.checked_mul(TORUS_GRID));
    }
    match total {
        Some(t) if t <= GRID_BUDGET => Ok(t),
        _ => Err(Error::Budget {
            what: "sampling a structured function".into(),
            bound: format!("{x_len}·{q}·{}^{d}", TORUS_GRID),
            visited: 0,
            budget: GRID_BUDGET as u64,
        }),
    }
}

/// `∫ F dμ` for Lebesgue × uniform × Haar, by the midpoint rule with
/// `128` points on `[0,1]` and `64` per torus coordinate.
pub fn structured_integral_estimate(f: &dyn StructuredFunction) -> Result<Estimate> {
    let q = f.modulus();
    if q == 0 {
        return Err(Error::invalid("modulus q must be at least 1"));
    }
    let d = f.dim();
    let gx = INTERVAL_GRID;
    let total = grid_size(q, d, gx)?;
    let mut shape = vec![gx, q as usize];
    shape.extend(std::iter::repeat(TORUS_GRID).take(d));
    let mut idx = vec![0usize; shape.len()];
    let mut z = vec![0.0; d];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..total {
        unflatten(i, &shape, &mut idx);
        for (c, &k) in z.iter_mut().zip(&idx[2..]) {
            *c = (k as f64 + 0.5) / TORUS_GRID as f64;
        }
        acc += f.eval((idx[0] as f64 + 0.5) / gx as f64, idx[1] as u64, &z);
    }
    let v = acc / total as f64;
    let mesh = 0.5 / gx as f64 + (d as f64).sqrt() * 0.5 / TORUS_GRID as f64;
    Ok(Estimate {
        re: v.re,
        im: v.im,
        error_bound: f.lip_bound() * mesh,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiCase {
    /// `m ≠ 0`: controlled by the irrationality of `θ` after multiplying by `q`.
    Frequency,
    /// `m = 0`, `a ≠ 0`: a nontrivial character of `Z/qZ`.
    Residue,
    /// `m = 0`, `a = 0`, `k ≠ 0`: `cos(πkx)`, paired over `±k`.
    Interval,
}

/// One term `c · e(k x/2 + a y/q + m·z)` of the expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiTerm {
    pub k: i64,
    pub a: u64,
    pub m: Vec<i64>,
    pub case: PhiCase,
    pub coeff_re: f64,
    pub coeff_im: f64,
    /// `‖α‖_T` with `α = k/2N + a/q + m·θ`.
    pub alpha_norm: f64,
    /// `‖qα‖_T`.
    pub q_alpha_norm: f64,
    /// `E_{n≤N} φ(n/N, n mod q, θn)` from the closed geometric form.
    pub average_re: f64,
    pub average_im: f64,
    /// Bound on `|average|` for this case.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiDiagnostic {
    pub kx: usize,
    pub kz: usize,
    pub terms: Vec<PhiTerm>,
    /// `max |F - P|` on the sampling grid.
    pub grid_error: f64,
    /// Bound on `sup |F - P|` over the whole domain.
    pub sup_bound: f64,
    /// Constant term of `P`, a quadrature value of `∫ F dμ`.
    pub c000: f64,
    /// `E_{n≤N} F(n/N, n mod q, θn)`.
    pub average_re: f64,
    pub average_im: f64,
    /// `c000 + Σ coeff·average`, the same average for `P`.
    pub p_average_re: f64,
    pub p_average_im: f64,
    /// `|average - c000|`.
    pub measured_error: f64,
    /// `sup_bound + Σ |coeff|·bound`, which must dominate `measured_error`.
    pub total_bound: f64,
    /// Terms whose average exceeds their bound (should be empty).
    pub violations: usize,
}

/// `E_{n≤N} e(αn)` for rational `α`.
fn geometric_average(alpha: &BigRational, n: u64) -> Complex64 {
    let a = frac(alpha);
    if a.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    let big_n = BigRational::from_integer(BigInt::from(n));
    let z = Complex64::from_polar(1.0, TAU * rational_to_f64(&a));
    let zn = Complex64::from_polar(1.0, TAU * rational_to_f64(&frac(&(&a * &big_n))));
    z * (zn - 1.0) / ((z - 1.0) * n as f64)
}

/// Expands `F` (reflected evenly to `x ∈ [-1,1]`) in the characters
/// `e(kx/2 + ay/q + m·z)`, `|k| ≤ kx`, `|m_i| ≤ kz`, with Fejér weights,
/// and bounds the average of every non-constant term along
/// `(n/N, n mod q, θn)`.
pub fn phi_diagnostic(
    f: &dyn StructuredFunction,
    theta: &TorusPoint,
    n: u64,
    kx: usize,
    kz: usize,
) -> Result<PhiDiagnostic> {
    check(f, theta, n)?;
    let q = f.modulus();
    let d = f.dim();
    let gx = 2 * INTERVAL_GRID;
    let g = TORUS_GRID;
    if kx >= INTERVAL_GRID || 2 * kz >= g {
        return Err(Error::invalid(format!("truncation ({kx}, {kz}) exceeds the grid")));
    }
    let total = grid_size(q, d, gx)?;
    let mut shape = vec![gx, q as usize];
    shape.extend(std::iter::repeat(g).take(d));
    let mut idx = vec![0usize; shape.len()];
    let mut z = vec![0.0; d];
    let samples: Vec<Complex64> = (0..total)
        .map(|i| {
            unflatten(i, &shape, &mut idx);
            for (c, &k) in z.iter_mut().zip(&idx[2..]) {
                *c = k as f64 / g as f64;
            }
            let t = -1.0 + idx[0] as f64 / INTERVAL_GRID as f64;
            f.eval(t.abs(), idx[1] as u64, &z)
        })
        .collect();
    let mut raw = samples.clone();
    fftn(&mut raw, &shape, false);
    for c in &mut raw {
        *c /= total as f64;
    }

    // Truncate with Fejér weights and symmetrize in k.
    let mut kept = vec![Complex64::new(0.0, 0.0); total];
    let mut m = vec![0i64; d];
    for i in 0..total {
        unflatten(i, &shape, &mut idx);
        let k = signed_freq(idx[0], gx);
        if k.unsigned_abs() as usize > kx {
            continue;
        }
        let mut w = 1.0 - k.unsigned_abs() as f64 / (kx + 1) as f64;
        let mut inside = true;
        for (mi, &b) in m.iter_mut().zip(&idx[2..]) {
            *mi = signed_freq(b, g);
            if mi.unsigned_abs() as usize > kz {
                inside = false;
            }
            w *= 1.0 - mi.unsigned_abs() as f64 / (kz + 1) as f64;
        }
        if !inside {
            continue;
        }
        let mut mirror = idx.clone();
        mirror[0] = (gx - idx[0]) % gx;
        let j = mirror.iter().zip(&shape).fold(0, |acc, (&v, &len)| acc * len + v);
        kept[i] = 0.5 * (raw[i] + raw[j]) * w;
    }

    let mut terms = Vec::new();
    let mut lip_p = 0.0;
    let mut c000 = Complex64::new(0.0, 0.0);
    let big_n = BigInt::from(n);
    let two_n = BigRational::from_integer(&big_n * 2);
    let qr = BigRational::from_integer(BigInt::from(q));
    let mut p_average = Complex64::new(0.0, 0.0);
    let mut violations = 0;
    for i in 0..total {
        let v = kept[i];
        if v.norm() <= COEFF_FLOOR {
            continue;
        }
        unflatten(i, &shape, &mut idx);
        let k = signed_freq(idx[0], gx);
        // Coefficient of e(k t/2) with t = -1 + idx/128.
        let c = if k % 2 == 0 { v } else { -v };
        let a = idx[1] as u64;
        for (mi, &b) in m.iter_mut().zip(&idx[2..]) {
            *mi = signed_freq(b, g);
        }
        let m_norm = m.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        lip_p += c.norm() * (PI * k.unsigned_abs() as f64 + TAU * m_norm);
        let m_zero = m.iter().all(|&x| x == 0);
        if k == 0 && a == 0 && m_zero {
            c000 = c;
            continue;
        }
        let case = if !m_zero {
            PhiCase::Frequency
        } else if a != 0 {
            PhiCase::Residue
        } else {
            PhiCase::Interval
        };
        if case == PhiCase::Interval && k < 0 {
            continue;
        }
        let mq: Vec<BigInt> = m.iter().map(|&x| BigInt::from(x)).collect();
        let alpha = BigRational::new(BigInt::from(k), big_n.clone() * 2)
            + BigRational::new(BigInt::from(a), BigInt::from(q))
            + theta.dot(&mq);
        let alpha_norm = rational_to_f64(&norm_t(&alpha));
        let q_alpha_norm = rational_to_f64(&norm_t(&(&alpha * &qr)));
        let (coeff, average, bound) = match case {
            PhiCase::Frequency => {
                let b = if q_alpha_norm > 0.0 {
                    (q as f64 / (2.0 * n as f64 * q_alpha_norm)).min(1.0)
                } else {
                    1.0
                };
                (c, geometric_average(&alpha, n), b)
            }
            PhiCase::Residue => {
                let b = if alpha_norm > 0.0 {
                    (1.0 / (2.0 * n as f64 * alpha_norm)).min(1.0)
                } else {
                    1.0
                };
                (c, geometric_average(&alpha, n), b)
            }
            PhiCase::Interval => {
                // c_k e(kx/2) + c_{-k} e(-kx/2) = 2c_k cos(πkx).
                let cos_avg = geometric_average(&alpha, n).re;
                let b = if frac(&(BigRational::from_integer(BigInt::from(k)) / &two_n)).is_zero() {
                    1.0
                } else {
                    1.0 / n as f64
                };
                (2.0 * c, Complex64::new(cos_avg, 0.0), b)
            }
        };
        if average.norm() > bound * (1.0 + 1e-9) + 1e-15 {
            violations += 1;
        }
        p_average += coeff * average;
        terms.push(PhiTerm {
            k,
            a,
            m: m.clone(),
            case,
            coeff_re: coeff.re,
            coeff_im: coeff.im,
            alpha_norm,
            q_alpha_norm,
            average_re: average.re,
            average_im: average.im,
            bound,
        });
    }
    p_average += c000;

    fftn(&mut kept, &shape, true);
    let grid_error = kept
        .iter()
        .zip(&samples)
        .map(|(p, s)| (p - s).norm())
        .fold(0.0, f64::max);
    let mesh = 0.5 / INTERVAL_GRID as f64 + (d as f64).sqrt() * 0.5 / g as f64;
    let sup_bound = grid_error + (f.lip_bound() + lip_p) * mesh;
    let average = structured_average(f, theta, n)?;
    let term_sum: f64 = terms
        .iter()
        .map(|t| Complex64::new(t.coeff_re, t.coeff_im).norm() * t.bound)
        .sum();
    Ok(PhiDiagnostic {
        kx,
        kz,
        terms,
        grid_error,
        sup_bound,
        c000: c000.re,
        average_re: average.re,
        average_im: average.im,
        p_average_re: p_average.re,
        p_average_im: p_average.im,
        measured_error: (average - c000).norm(),
        total_bound: sup_bound + term_sum,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{find_irrational_theta, StructuredFn};

    #[test]
    fn constant_one() {
        let f = StructuredFn::new(1, 0, 1.0, |_, _, _| Complex64::new(1.0, 0.0));
        let v = structured_average(&f, &TorusPoint::zero(0), 10).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residue_indicator() {
        let f = StructuredFn::new(3, 1, 2.0, |_, y, _| Complex64::new(if y == 0 { 1.0 } else { 0.0 }, 0.0));
        let th = TorusPoint::from_fractions(&[(2, 7)]).unwrap();
        let v = structured_average(&f, &th, 300).unwrap();
        assert!((v.re - 1.0 / 3.0).abs() < 1e-12);
        let e = structured_integral_estimate(&f).unwrap();
        assert!((e.re - 1.0 / 3.0).abs() < 1e-12);
        assert!(structured_average(&StructuredFn::new(0, 1, 1.0, |_, _, _| Complex64::new(0.0, 0.0)), &th, 3).is_err());
    }

    #[test]
    fn ramp_times_phase() {
        let n = 4096;
        let (th, _) = find_irrational_theta(1, 25, n, 1, 10_000).unwrap().unwrap();
        let f = StructuredFn::new(2, 1, 1.0 + TAU, |x, _, z| x * Complex64::from_polar(1.0, TAU * z[0]));
        let v = structured_average(&f, &th, n).unwrap();
        assert!(v.norm() <= 0.05);
        let diag = phi_diagnostic(&f, &th, n, 8, 2).unwrap();
        assert_eq!(diag.violations, 0);
        assert!(diag.measured_error <= diag.total_bound);
        let p_avg = Complex64::new(diag.p_average_re, diag.p_average_im);
        assert!((p_avg - v).norm() <= diag.sup_bound);
    }

    #[test]
    fn interval_pairs_vanish() {
        // F depends on x only: only the paired cosine terms appear.
        let f = StructuredFn::new(1, 0, 2.0, |x, _, _| Complex64::new(x, 0.0));
        let diag = phi_diagnostic(&f, &TorusPoint::zero(0), 1000, 16, 0).unwrap();
        assert!(diag.terms.iter().all(|t| t.case == PhiCase::Interval && t.k > 0));
        assert_eq!(diag.violations, 0);
        assert!((diag.c000 - 0.5).abs() < 1e-3);
        assert!(diag.measured_error <= diag.total_bound);
    }
}
