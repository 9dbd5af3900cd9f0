//! Exact points of the torus `T^d = (R/Z)^d`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fractional part `x - floor(x)`, in `[0, 1)`.
pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// `‖x‖_T`, distance from `x` to the nearest integer.
pub fn norm_t(x: &BigRational) -> BigRational {
    let f = frac(x);
    let g = BigRational::one() - &f;
    if f <= g {
        f
    } else {
        g
    }
}

/// A point of `T^d` with exact rational coordinates reduced to `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTorusPoint", into = "RawTorusPoint")]
pub struct TorusPoint {
    coords: Vec<BigRational>,
}

#[derive(Serialize, Deserialize)]
struct RawTorusPoint {
    dim: usize,
    coords: Vec<[String; 2]>,
}

impl TryFrom<RawTorusPoint> for TorusPoint {
    type Error = Error;

    fn try_from(raw: RawTorusPoint) -> Result<Self> {
        if raw.coords.len() != raw.dim {
            return Err(Error::invalid(format!(
                "dim = {} but {} coordinates supplied",
                raw.dim,
                raw.coords.len()
            )));
        }
        let mut coords = Vec::with_capacity(raw.dim);
        for [p, q] in &raw.coords {
            let p: BigInt = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer '{p}'")))?;
            let q: BigInt = q
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer '{q}'")))?;
            if q.is_zero() {
                return Err(Error::invalid("zero denominator"));
            }
            coords.push(BigRational::new(p, q));
        }
        Ok(TorusPoint::new(coords))
    }
}

impl From<TorusPoint> for RawTorusPoint {
    fn from(t: TorusPoint) -> Self {
        RawTorusPoint {
            dim: t.dim(),
            coords: t
                .coords
                .iter()
                .map(|c| [c.numer().to_string(), c.denom().to_string()])
                .collect(),
        }
    }
}

/// Comma-separated fractions, e.g. `1/3,2/7`.
impl std::fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}/{}", c.numer(), c.denom())?;
        }
        Ok(())
    }
}

impl TorusPoint {
    pub fn new(coords: Vec<BigRational>) -> Self {
        TorusPoint {
            coords: coords.iter().map(frac).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        TorusPoint {
            coords: vec![BigRational::zero(); dim],
        }
    }

    /// From `(p, q)` pairs meaning `p/q`.
    pub fn from_fractions(pairs: &[(i64, i64)]) -> Result<Self> {
        if pairs.iter().any(|&(_, q)| q == 0) {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(TorusPoint::new(
            pairs
                .iter()
                .map(|&(p, q)| BigRational::new(p.into(), q.into()))
                .collect(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &TorusPoint) -> TorusPoint {
        assert_eq!(self.dim(), other.dim(), "torus dimension mismatch");
        TorusPoint::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &TorusPoint) -> TorusPoint {
        assert_eq!(self.dim(), other.dim(), "torus dimension mismatch");
        TorusPoint::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `k·θ`.
    pub fn scale(&self, k: &BigInt) -> TorusPoint {
        let k = BigRational::from_integer(k.clone());
        TorusPoint::new(self.coords.iter().map(|c| c * &k).collect())
    }

    /// `q·θ mod 1`, in `[0, 1)`.
    pub fn dot(&self, q: &[BigInt]) -> BigRational {
        assert_eq!(self.dim(), q.len(), "torus dimension mismatch");
        let mut acc = BigRational::zero();
        for (c, k) in self.coords.iter().zip(q) {
            if !k.is_zero() {
                acc += c * BigRational::from_integer(k.clone());
            }
        }
        frac(&acc)
    }

    /// `‖q·θ‖_T`.
    pub fn dot_norm(&self, q: &[BigInt]) -> BigRational {
        norm_t(&self.dot(q))
    }

    /// `d(θ, 0)²` for the Euclidean torus metric.
    pub fn sq_dist_to_zero(&self) -> BigRational {
        self.coords
            .iter()
            .map(|c| {
                let t = norm_t(c);
                &t * &t
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Smallest `q ≥ 1` with `q·θ = 0`.
    pub fn order(&self) -> BigInt {
        self.coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Coordinates `θ_1..θ_d` followed by `φ_1..φ_e`.
    pub fn concat(&self, other: &TorusPoint) -> TorusPoint {
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        TorusPoint { coords }
    }

    pub fn project(&self, idx: &[usize]) -> TorusPoint {
        TorusPoint {
            coords: idx.iter().map(|&i| self.coords[i].clone()).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(rational_to_f64).collect()
    }

    /// Precomputes a fast evaluator of `n ↦ nθ mod 1` as floats.
    pub fn multiples(&self) -> Multiples {
        Multiples {
            coords: self
                .coords
                .iter()
                .map(|c| match (c.numer().to_u64(), c.denom().to_u64()) {
                    (Some(p), Some(q)) => Coord::Small(p, q),
                    _ => Coord::Big(c.numer().clone(), c.denom().clone()),
                })
                .collect(),
        }
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug)]
enum Coord {
    Small(u64, u64),
    Big(BigInt, BigInt),
}

/// Evaluates `(p·n mod q)/q` per coordinate; exact residue, one rounding.
#[derive(Clone, Debug)]
pub struct Multiples {
    coords: Vec<Coord>,
}

const EXACT: u64 = 1 << 53;

impl Multiples {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn at(&self, n: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coords.len());
        self.write(n, &mut out);
        out
    }

    pub fn write(&self, n: u64, out: &mut Vec<f64>) {
        out.clear();
        for c in &self.coords {
            out.push(match c {
                Coord::Small(p, q) => {
                    let r = ((*p as u128 * n as u128) % *q as u128) as u64;
                    if *q < EXACT {
                        r as f64 / *q as f64
                    } else {
                        rational_to_f64(&BigRational::new(r.into(), (*q).into()))
                    }
                }
                Coord::Big(p, q) => {
                    let r = (p * BigInt::from(n)).mod_floor(q);
                    rational_to_f64(&BigRational::new(r, q.clone()))
                }
            });
        }
    }
}

/// Serde adapters writing big integers as decimal strings.
pub mod big_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use num_bigint::BigInt;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| x.to_string()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| s.parse().map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

/// Serde adapter writing rationals as `["p", "q"]`.
pub mod rational_string {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([v.numer().to_string(), v.denom().to_string()])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let [p, q] = <[String; 2]>::deserialize(d)?;
        let p: BigInt = p.parse().map_err(serde::de::Error::custom)?;
        let q: BigInt = q.parse().map_err(serde::de::Error::custom)?;
        if q.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(BigRational::new(p, q))
    }

    pub mod vec {
        use num_rational::BigRational;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "super")] BigRational);

        pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| W(x.clone())))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn reduction_and_norm() {
        let t = TorusPoint::new(vec![r(7, 3), r(-1, 4)]);
        assert_eq!(t.coords(), &[r(1, 3), r(3, 4)]);
        assert_eq!(norm_t(&r(3, 4)), r(1, 4));
        assert_eq!(t.sq_dist_to_zero(), r(1, 9) + r(1, 16));
        assert_eq!(t.order(), BigInt::from(12));
    }

    #[test]
    fn dot_products() {
        let t = TorusPoint::from_fractions(&[(5, 13)]).unwrap();
        assert_eq!(t.dot_norm(&[BigInt::from(2)]), r(3, 13));
        assert_eq!(t.dot_norm(&[BigInt::from(-1)]), r(5, 13));
    }

    #[test]
    fn json_roundtrip() {
        let t = TorusPoint::from_fractions(&[(1, 3), (5, 7)]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"dim":2,"coords":[["1","3"],["5","7"]]}"#);
        assert_eq!(serde_json::from_str::<TorusPoint>(&s).unwrap(), t);
        assert!(serde_json::from_str::<TorusPoint>(r#"{"dim":1,"coords":[["1","0"]]}"#).is_err());
    }

    #[test]
    fn multiples_are_exact_residues() {
        let t = TorusPoint::from_fractions(&[(1, 3), (2, 5)]).unwrap();
        let m = t.multiples();
        assert_eq!(m.at(4), vec![1.0 / 3.0, 3.0 / 5.0]);
        let big = TorusPoint::new(vec![BigRational::new(
            BigInt::from(1),
            BigInt::from(10u64).pow(30),
        )]);
        let v = big.multiples().at(3);
        assert_eq!(v[0], 3e-30);
    }
}
