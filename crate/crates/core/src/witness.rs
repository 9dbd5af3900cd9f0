//! Expression trees for Lipschitz functions `F: T^d -> R` and the
//! structure witnesses `n ↦ F(θn)` built from them.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fourier::IntervalFunction;
use crate::torus::TorusPoint;
use crate::{Error, Result};

/// A node of an expression tree on `T^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    /// `cos(2π x_coord)`.
    RePhase { coord: usize },
    /// `sin(2π x_coord)`.
    ImPhase { coord: usize },
    /// `clamp((arg - lo) / (hi - lo))`; decreasing when `hi < lo`.
    Ramp { lo: f64, hi: f64, arg: Box<Expr> },
    Sum { terms: Vec<Expr> },
    Prod { factors: Vec<Expr> },
    /// Truncation to `[0, 1]`.
    Clamp { arg: Box<Expr> },
}

pub fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn ramp(lo: f64, hi: f64, arg: Expr) -> Expr {
        Expr::Ramp {
            lo,
            hi,
            arg: Box::new(arg),
        }
    }

    pub fn clamp(arg: Expr) -> Expr {
        Expr::Clamp { arg: Box::new(arg) }
    }

    pub fn scaled(c: f64, arg: Expr) -> Expr {
        Expr::Prod {
            factors: vec![Expr::constant(c), arg],
        }
    }

    /// `1 - arg`.
    pub fn complement(arg: Expr) -> Expr {
        Expr::Sum {
            terms: vec![Expr::constant(1.0), Expr::scaled(-1.0, arg)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const { value } => *value,
            Expr::RePhase { coord } => (TAU * x[*coord]).cos(),
            Expr::ImPhase { coord } => (TAU * x[*coord]).sin(),
            Expr::Ramp { lo, hi, arg } => clamp01((arg.eval(x) - lo) / (hi - lo)),
            Expr::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
            Expr::Prod { factors } => factors.iter().map(|t| t.eval(x)).product(),
            Expr::Clamp { arg } => clamp01(arg.eval(x)),
        }
    }

    /// `(sup |F|, Lipschitz seminorm)` upper bounds.
    pub fn bounds(&self) -> (f64, f64) {
        let (lo, hi, lip) = self.range_bounds();
        (lo.abs().max(hi.abs()), lip)
    }

    /// `(lo, hi, lip)` with `lo ≤ F ≤ hi`, by interval arithmetic.
    pub fn range_bounds(&self) -> (f64, f64, f64) {
        match self {
            Expr::Const { value } => (*value, *value, 0.0),
            Expr::RePhase { .. } | Expr::ImPhase { .. } => (-1.0, 1.0, TAU),
            Expr::Ramp { lo, hi, arg } => {
                let (_, _, lip) = arg.range_bounds();
                (0.0, 1.0, lip / (hi - lo).abs())
            }
            Expr::Sum { terms } => terms.iter().fold((0.0, 0.0, 0.0), |(a, b, l), t| {
                let (ta, tb, tl) = t.range_bounds();
                (a + ta, b + tb, l + tl)
            }),
            Expr::Prod { factors } => {
                let b: Vec<(f64, f64, f64)> = factors.iter().map(Expr::range_bounds).collect();
                let (lo, hi) = b.iter().fold((1.0, 1.0), |(a, c), &(x, y, _)| {
                    let p = [a * x, a * y, c * x, c * y];
                    (
                        p.iter().cloned().fold(f64::INFINITY, f64::min),
                        p.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    )
                });
                let sups: Vec<f64> = b.iter().map(|p| p.0.abs().max(p.1.abs())).collect();
                let lip = (0..b.len())
                    .map(|i| {
                        b[i].2
                            * sups
                                .iter()
                                .enumerate()
                                .filter(|(j, _)| *j != i)
                                .map(|(_, s)| s)
                                .product::<f64>()
                    })
                    .sum();
                (lo, hi, lip)
            }
            Expr::Clamp { arg } => {
                let (a, b, l) = arg.range_bounds();
                (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0), l)
            }
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const { .. } => None,
            Expr::RePhase { coord } | Expr::ImPhase { coord } => Some(*coord),
            Expr::Ramp { arg, .. } | Expr::Clamp { arg } => arg.max_coord(),
            Expr::Sum { terms: v } | Expr::Prod { factors: v } => {
                v.iter().filter_map(Expr::max_coord).max()
            }
        }
    }

    /// Rewrites every coordinate index through `map`.
    pub fn remap(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const { value } => Expr::Const { value: *value },
            Expr::RePhase { coord } => Expr::RePhase { coord: map(*coord) },
            Expr::ImPhase { coord } => Expr::ImPhase { coord: map(*coord) },
            Expr::Ramp { lo, hi, arg } => Expr::ramp(*lo, *hi, arg.remap(map)),
            Expr::Sum { terms } => Expr::Sum {
                terms: terms.iter().map(|t| t.remap(map)).collect(),
            },
            Expr::Prod { factors } => Expr::Prod {
                factors: factors.iter().map(|t| t.remap(map)).collect(),
            },
            Expr::Clamp { arg } => Expr::clamp(arg.remap(map)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Expr::Const { value } if !value.is_finite() => {
                Err(Error::invalid("non-finite constant in expression"))
            }
            Expr::Ramp { lo, hi, arg } => {
                if !(lo.is_finite() && hi.is_finite()) || lo == hi {
                    return Err(Error::invalid("ramp needs finite lo != hi"));
                }
                arg.validate()
            }
            Expr::Clamp { arg } => arg.validate(),
            Expr::Sum { terms: v } | Expr::Prod { factors: v } => {
                v.iter().try_for_each(Expr::validate)
            }
            _ => Ok(()),
        }
    }
}

/// Euclidean torus distance `min_z ‖x - y - z‖₂`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = (a - b).rem_euclid(1.0);
            let t = t.min(1.0 - t);
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// `n ↦ F(θn)` with `F` given by an expression tree on `T^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureWitness {
    pub dim: usize,
    pub theta: TorusPoint,
    pub expr: Expr,
    pub sup_bound: f64,
    /// Bound on `sup |F(x) - F(y)| / d(x, y)`.
    pub lip_seminorm: f64,
    /// `sup_bound + lip_seminorm`, a bound on `‖F‖_Lip`.
    pub lip_bound: f64,
    /// `max(dim, lip_bound)`.
    pub complexity: f64,
}

impl StructureWitness {
    pub fn new(theta: TorusPoint, expr: Expr) -> Result<Self> {
        let dim = theta.dim();
        if let Some(c) = expr.max_coord() {
            if c >= dim {
                return Err(Error::invalid(format!(
                    "expression uses coordinate {c} but dimension is {dim}"
                )));
            }
        }
        expr.validate()?;
        let (sup_bound, lip_seminorm) = expr.bounds();
        let lip_bound = sup_bound + lip_seminorm;
        Ok(StructureWitness {
            dim,
            theta,
            expr,
            sup_bound,
            lip_seminorm,
            lip_bound,
            complexity: (dim as f64).max(lip_bound),
        })
    }

    pub fn constant(value: f64) -> Self {
        StructureWitness::new(TorusPoint::zero(0), Expr::constant(value))
            .expect("constant witness is valid")
    }

    /// `F(θn)` for `n = 1..=n_max`.
    pub fn evaluate(&self, n_max: usize) -> Vec<f64> {
        let mult = self.theta.multiples();
        let mut x = Vec::with_capacity(self.dim);
        (1..=n_max as u64)
            .map(|n| {
                mult.write(n, &mut x);
                self.expr.eval(&x)
            })
            .collect()
    }

    pub fn evaluate_at(&self, n: u64) -> f64 {
        self.expr.eval(&self.theta.multiples().at(n))
    }

    /// `F(θ·)` on `[N]` with the ambient modulus of `like`.
    pub fn to_function(&self, like: &IntervalFunction) -> IntervalFunction {
        like.with_values(self.evaluate(like.n()))
            .expect("evaluation has length N")
    }

    /// Largest observed `|F(x)-F(y)| / (lip_seminorm · d(x,y))` and
    /// `|F(x)| / sup_bound` over `samples` seeded random pairs; both must be ≤ 1.
    pub fn spot_check(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_lip: f64 = 0.0;
        let mut worst_sup: f64 = 0.0;
        for i in 0..samples {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            let scale = 0.5f64.powi((i % 20) as i32);
            let y: Vec<f64> = x
                .iter()
                .map(|v| (v + scale * (rng.gen::<f64>() - 0.5)).rem_euclid(1.0))
                .collect();
            let fx = self.expr.eval(&x);
            let fy = self.expr.eval(&y);
            let d = torus_distance(&x, &y);
            let diff = (fx - fy).abs();
            if d > 0.0 {
                let ratio = if self.lip_seminorm > 0.0 {
                    diff / (self.lip_seminorm * d)
                } else if diff > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                };
                worst_lip = worst_lip.max(ratio);
            }
            let s = if self.sup_bound > 0.0 {
                fx.abs() / self.sup_bound
            } else if fx.abs() > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst_sup = worst_sup.max(s);
        }
        (worst_lip, worst_sup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_tags() {
        let e = Expr::clamp(Expr::Sum {
            terms: vec![Expr::constant(0.5), Expr::RePhase { coord: 0 }],
        });
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"node":"clamp","arg":{"node":"sum","terms":[{"node":"const","value":0.5},{"node":"re_phase","coord":0}]}}"#
        );
        assert_eq!(serde_json::from_str::<Expr>(&s).unwrap(), e);
    }

    #[test]
    fn bounds_compose() {
        let e = Expr::Prod {
            factors: vec![Expr::constant(2.0), Expr::ImPhase { coord: 0 }],
        };
        assert_eq!(e.bounds(), (2.0, 2.0 * TAU));
        let r = Expr::ramp(0.25, 0.75, Expr::RePhase { coord: 0 });
        assert_eq!(r.bounds(), (1.0, TAU / 0.5));
        let c = Expr::complement(r);
        assert_eq!(c.range_bounds(), (0.0, 1.0, TAU / 0.5));
    }

    #[test]
    fn witness_rejects_bad_coordinates_and_ramps() {
        let theta = TorusPoint::from_fractions(&[(1, 5)]).unwrap();
        assert!(StructureWitness::new(theta.clone(), Expr::RePhase { coord: 1 }).is_err());
        assert!(StructureWitness::new(theta, Expr::ramp(0.5, 0.5, Expr::constant(0.0))).is_err());
    }

    #[test]
    fn evaluation_and_spot_check() {
        let theta = TorusPoint::from_fractions(&[(1, 4)]).unwrap();
        let w = StructureWitness::new(theta, Expr::RePhase { coord: 0 }).unwrap();
        let v = w.evaluate(4);
        let want = [0.0, -1.0, 0.0, 1.0];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(w.complexity, 1.0 + TAU);
        let (lip, sup) = w.spot_check(500, 1);
        assert!(lip <= 1.0 && sup <= 1.0);
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_distance(&[0.05], &[0.95]) - 0.1).abs() < 1e-12);
        assert!((torus_distance(&[0.0, 0.5], &[0.0, 0.0]) - 0.5).abs() < 1e-12);
    }
}
