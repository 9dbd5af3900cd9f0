//! Fejér means of sampled torus functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{fftn, signed_freq, unflatten};
use super::{TorusFunction, TrigPolynomial, TrigTerm};
use crate::config::{FEJER_MAX_DEGREE, TORUS_GRID};
use crate::{Error, Result};

const COEFF_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FejerApproximation {
    pub poly: TrigPolynomial,
    /// Box degree `K`: `|m_i| ≤ K` for every term.
    pub degree: usize,
    /// `max |F - P|` over the `64^d` sampling grid.
    pub grid_error: f64,
    /// `grid_error + (Lip F + Lip P)·√d/128`, valid everywhere on `T^d`.
    pub sup_bound: f64,
}

/// Smallest Fejér mean `σ_K F` (`K ≤ 31`) whose grid error is at most `delta/2`.
///
/// Trigonometric polynomials are returned unchanged.
pub fn fejer_truncate(f: &dyn TorusFunction, delta: f64) -> Result<FejerApproximation> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if let Some(p) = f.as_trig() {
        let degree = p
            .terms
            .iter()
            .flat_map(|t| t.m.iter().map(|x| x.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        return Ok(FejerApproximation {
            poly: p.clone(),
            degree,
            grid_error: 0.0,
            sup_bound: 0.0,
        });
    }
    let d = f.dim();
    let g = TORUS_GRID;
    let shape = vec![g; d];
    let total = g.pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let samples: Vec<Complex64> = (0..total)
        .map(|i| {
            unflatten(i, &shape, &mut idx);
            for (c, &k) in x.iter_mut().zip(&idx) {
                *c = k as f64 / g as f64;
            }
            f.eval(&x)
        })
        .collect();
    let mut coeffs = samples.clone();
    fftn(&mut coeffs, &shape, false);
    for c in &mut coeffs {
        *c /= total as f64;
    }

    let mut best = f64::INFINITY;
    let mut freq = vec![0i64; d];
    for k in 1..=FEJER_MAX_DEGREE {
        let mut kept = vec![Complex64::new(0.0, 0.0); total];
        let mut terms = Vec::new();
        for i in 0..total {
            unflatten(i, &shape, &mut idx);
            let mut w = 1.0;
            for (fq, &b) in freq.iter_mut().zip(&idx) {
                *fq = signed_freq(b, g);
                w *= (1.0 - fq.unsigned_abs() as f64 / (k + 1) as f64).max(0.0);
            }
            let c = coeffs[i] * w;
            if w > 0.0 && c.norm() > COEFF_FLOOR {
                kept[i] = c;
                terms.push(TrigTerm {
                    m: freq.clone(),
                    re: c.re,
                    im: c.im,
                });
            }
        }
        fftn(&mut kept, &shape, true);
        let grid_error = kept
            .iter()
            .zip(&samples)
            .map(|(p, s)| (p - s).norm())
            .fold(0.0, f64::max);
        best = best.min(grid_error);
        if grid_error <= delta / 2.0 {
            terms.sort_by(|a, b| a.m.cmp(&b.m));
            let poly = TrigPolynomial { dim: d, terms };
            let mesh = (d as f64).sqrt() / (2.0 * g as f64);
            let sup_bound = grid_error + (f.lip_bound() + poly.lip_bound()) * mesh;
            return Ok(FejerApproximation {
                poly,
                degree: k,
                grid_error,
                sup_bound,
            });
        }
    }
    Err(Error::TargetUnreachable {
        target: delta / 2.0,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::TorusFn;

    #[test]
    fn trig_input_unchanged() {
        let p = TrigPolynomial::new(
            1,
            vec![
                TrigTerm { m: vec![-1], re: 0.5, im: 0.0 },
                TrigTerm { m: vec![1], re: 0.5, im: 0.0 },
            ],
        )
        .unwrap();
        let a = fejer_truncate(&p, 0.01).unwrap();
        assert_eq!(a.poly, p);
        assert_eq!(a.grid_error, 0.0);
    }

    #[test]
    fn constant_sampled() {
        let c = TorusFn::real(2, 0.3, |_| 0.3);
        let a = fejer_truncate(&c, 0.01).unwrap();
        assert_eq!(a.poly.terms.len(), 1);
        assert!((a.poly.c0().re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn distance_to_zero() {
        let f = TorusFn::real(1, 1.5, |x| {
            let t = x[0].rem_euclid(1.0);
            t.min(1.0 - t)
        });
        let a = fejer_truncate(&f, 0.1).unwrap();
        assert!((a.poly.c0().re - 0.25).abs() < 1e-3);
        assert!(a.grid_error <= 0.05);
        // Direct check between grid points.
        for i in 0..1000 {
            let x = (i as f64 + 0.37) / 1000.0;
            let err = (a.poly.eval(&[x]).re - x.min(1.0 - x)).abs();
            assert!(err <= a.sup_bound);
        }
    }

    #[test]
    fn budget_failure_reports_best() {
        // A steep ramp cannot be matched to 1e-6 by degree 31.
        let f = TorusFn::real(1, 200.0, |x| (x[0] * 100.0).min(1.0));
        match fejer_truncate(&f, 1e-6) {
            Err(Error::TargetUnreachable { best, .. }) => assert!(best > 5e-7),
            other => panic!("unexpected {other:?}"),
        }
    }
}
