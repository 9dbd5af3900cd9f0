//! Exhaustive `(A, N)`-irrationality scans.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::config::ENUMERATION_BUDGET;
use crate::torus::TorusPoint;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Irrationality {
    Pass,
    Counterexample {
        #[serde(with = "crate::torus::big_string::vec")]
        q: Vec<BigInt>,
        /// `‖q·θ‖_T`.
        #[serde(with = "crate::torus::rational_string")]
        norm: BigRational,
    },
}

/// Outcome of one scan, with the parameters it ran at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrrationalityRecord {
    pub dim: usize,
    #[serde(with = "crate::torus::big_string")]
    pub a: BigInt,
    #[serde(with = "crate::torus::big_string")]
    pub n: BigInt,
    pub visited: u64,
    pub outcome: Irrationality,
}

impl IrrationalityRecord {
    pub fn passed(&self) -> bool {
        self.outcome == Irrationality::Pass
    }

    pub fn counterexample(&self) -> Option<&[BigInt]> {
        match &self.outcome {
            Irrationality::Pass => None,
            Irrationality::Counterexample { q, .. } => Some(q),
        }
    }
}

/// Number of `q ∈ Z^d ∖ {0}` with `‖q‖₁ ≤ a`, counted up to sign.
pub fn scan_size(d: usize, a: &BigInt) -> BigInt {
    // Σ_k 2^k C(d,k) C(a,k)
    let mut total = BigInt::zero();
    let mut cd = BigInt::one();
    let mut ca = BigInt::one();
    let mut pow = BigInt::one();
    for k in 0..=d {
        if k > 0 {
            cd = cd * BigInt::from(d - k + 1) / BigInt::from(k);
            ca = ca * (a - BigInt::from(k - 1)) / BigInt::from(k);
            pow *= 2;
        }
        if ca.is_zero() {
            break;
        }
        total += &pow * &cd * &ca;
    }
    (total - 1) / 2
}

/// Tests `‖q·θ‖_T ≥ A/N` for every `q ≠ 0` with `‖q‖₁ ≤ A`.
///
/// `q` and `-q` are scanned once (first nonzero entry positive), in order
/// of `‖q‖₁` and then lexicographically; the first violation is returned.
pub fn is_irrational(theta: &TorusPoint, a: &BigInt, n: &BigInt) -> Result<IrrationalityRecord> {
    is_irrational_with(theta, a, n, ENUMERATION_BUDGET)
}

pub fn is_irrational_with(
    theta: &TorusPoint,
    a: &BigInt,
    n: &BigInt,
    budget: u64,
) -> Result<IrrationalityRecord> {
    if *a < BigInt::one() || *n < BigInt::one() {
        return Err(Error::invalid(format!("need A >= 1 and N >= 1, got A = {a}, N = {n}")));
    }
    let d = theta.dim();
    let denom = theta.order();
    let nums: Vec<BigInt> = theta
        .coords()
        .iter()
        .map(|c| c.numer() * (&denom / c.denom()))
        .collect();
    let mut scan = Scan {
        d,
        a: a.clone(),
        n: n.clone(),
        budget,
        visited: 0,
        q: vec![0; d],
        found: None,
        fast: Fast::new(&denom, &nums, a, n),
        denom,
        nums,
    };
    let max_norm = a.to_u64().unwrap_or(u64::MAX);
    if d > 0 {
        let mut s = 1u64;
        while s <= max_norm {
            scan.level(0, s, false, &BigInt::zero(), 0)?;
            if scan.found.is_some() {
                break;
            }
            s += 1;
        }
    }
    let outcome = match scan.found.take() {
        None => Irrationality::Pass,
        Some(q) => {
            let q: Vec<BigInt> = q.into_iter().map(BigInt::from).collect();
            let norm = theta.dot_norm(&q);
            Irrationality::Counterexample { q, norm }
        }
    };
    Ok(IrrationalityRecord {
        dim: d,
        a: a.clone(),
        n: n.clone(),
        visited: scan.visited,
        outcome,
    })
}

/// `u64` convenience wrapper.
pub fn is_irrational_u64(theta: &TorusPoint, a: u64, n: u64) -> Result<IrrationalityRecord> {
    is_irrational(theta, &BigInt::from(a), &BigInt::from(n))
}

/// Machine-integer arithmetic when `A·D` and `N·D` fit comfortably in `i128`.
struct Fast {
    denom: i128,
    nums: Vec<i128>,
    a: i128,
    n: i128,
}

impl Fast {
    fn new(denom: &BigInt, nums: &[BigInt], a: &BigInt, n: &BigInt) -> Option<Fast> {
        let db = denom.bits();
        if db + a.bits().max(n.bits()) + 4 > 120 {
            return None;
        }
        Some(Fast {
            denom: denom.to_i128()?,
            nums: nums.iter().map(|x| x.to_i128()).collect::<Option<_>>()?,
            a: a.to_i128()?,
            n: n.to_i128()?,
        })
    }

    /// `‖s/D‖_T < A/N` for the partial sum `s = Σ q_i p_i`.
    fn violates(&self, s: i128) -> bool {
        let r = s.rem_euclid(self.denom);
        let r = r.min(self.denom - r);
        r * self.n < self.a * self.denom
    }
}

struct Scan {
    d: usize,
    a: BigInt,
    n: BigInt,
    budget: u64,
    visited: u64,
    q: Vec<i64>,
    found: Option<Vec<i64>>,
    fast: Option<Fast>,
    denom: BigInt,
    nums: Vec<BigInt>,
}

impl Scan {
    fn check(&mut self, big_sum: &BigInt, fast_sum: i128) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::Budget {
                what: format!("scanning ‖q‖₁ ≤ {} in dimension {}", self.a, self.d),
                bound: scan_size(self.d, &self.a).to_string(),
                visited: self.visited - 1,
                budget: self.budget,
            });
        }
        let bad = match &self.fast {
            Some(f) => f.violates(fast_sum),
            None => {
                let r = big_sum.mod_floor(&self.denom);
                let r = (&self.denom - &r).min(r);
                &r * &self.n < &self.a * &self.denom
            }
        };
        if bad {
            self.found = Some(self.q.clone());
        }
        Ok(())
    }

    /// Enumerates coordinates `pos..d` with `Σ|q_i| = rem`, ascending.
    fn level(&mut self, pos: usize, rem: u64, nonzero: bool, big_sum: &BigInt, fast_sum: i128) -> Result<()> {
        if self.found.is_some() {
            return Ok(());
        }
        let rem_i = rem as i64;
        if pos + 1 == self.d {
            let opts: &[i64] = if rem == 0 {
                &[0]
            } else if nonzero {
                &[-1, 1]
            } else {
                &[1]
            };
            for &sgn in opts {
                let x = sgn * rem_i;
                self.q[pos] = x;
                let (bs, fs) = self.extend(pos, x, big_sum, fast_sum);
                self.check(&bs, fs)?;
                if self.found.is_some() {
                    return Ok(());
                }
            }
            self.q[pos] = 0;
            return Ok(());
        }
        let lo = if nonzero { -rem_i } else { 0 };
        for x in lo..=rem_i {
            self.q[pos] = x;
            let (bs, fs) = self.extend(pos, x, big_sum, fast_sum);
            self.level(pos + 1, rem - x.unsigned_abs(), nonzero || x != 0, &bs, fs)?;
            if self.found.is_some() {
                return Ok(());
            }
        }
        self.q[pos] = 0;
        Ok(())
    }

    fn extend(&self, pos: usize, x: i64, big_sum: &BigInt, fast_sum: i128) -> (BigInt, i128) {
        match &self.fast {
            Some(f) => (BigInt::zero(), fast_sum + x as i128 * f.nums[pos]),
            None => (big_sum + BigInt::from(x) * &self.nums[pos], 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(pairs: &[(i64, i64)]) -> TorusPoint {
        TorusPoint::from_fractions(pairs).unwrap()
    }

    #[test]
    fn examples() {
        let r = is_irrational_u64(&t(&[(0, 1)]), 1, 7).unwrap();
        assert_eq!(r.counterexample().unwrap(), &[BigInt::from(1)]);

        let r = is_irrational_u64(&t(&[(1, 2)]), 3, 10).unwrap();
        assert_eq!(r.counterexample().unwrap(), &[BigInt::from(2)]);

        let r = is_irrational_u64(&t(&[(5, 13)]), 2, 13).unwrap();
        assert!(r.passed());
        assert_eq!(r.visited, 2);
    }

    #[test]
    fn lexicographic_within_norm() {
        // Both (0,1) and (1,0) kill θ = (0,0); the lexicographically first wins.
        let r = is_irrational_u64(&t(&[(0, 1), (0, 1)]), 5, 5).unwrap();
        assert_eq!(r.counterexample().unwrap(), &[BigInt::from(0), BigInt::from(1)]);
        // Norm 2 beats a later lexicographic vector of norm 1 only if norm 1 fails.
        let r = is_irrational_u64(&t(&[(1, 2), (1, 2)]), 2, 1000).unwrap();
        assert_eq!(r.counterexample().unwrap(), &[BigInt::from(0), BigInt::from(2)]);
    }

    #[test]
    fn counts() {
        assert_eq!(scan_size(1, &BigInt::from(5)), BigInt::from(5));
        // 2D: 2a² + 2a + 1 points in the ball.
        assert_eq!(scan_size(2, &BigInt::from(3)), BigInt::from(12));
        let r = is_irrational_u64(&t(&[(1, 101), (7, 103)]), 3, 1_000_000).unwrap();
        assert!(r.passed());
        assert_eq!(r.visited, 12);
    }

    #[test]
    fn budget() {
        let err = is_irrational_with(&t(&[(1, 1009), (3, 1013)]), &BigInt::from(50), &BigInt::from(10u64.pow(9)), 100)
            .unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains("bound 2550"));
    }

    #[test]
    fn big_path_agrees() {
        let huge = BigInt::from(10u32).pow(40u32) + 7u32;
        let theta = TorusPoint::new(vec![BigRational::new(BigInt::from(1), huge.clone())]);
        let r = is_irrational(&theta, &BigInt::from(3), &huge).unwrap();
        // ‖q/huge‖ = q/huge < 3/huge for q = 1.
        assert_eq!(r.counterexample().unwrap(), &[BigInt::from(1)]);
        let r = is_irrational(&theta, &BigInt::from(1), &BigInt::from(2)).unwrap();
        assert!(!r.passed());
    }
}
