//! Growth functions `F: R⁺ -> R⁺` and their string syntax.
//!
//! - `poly:c,k` is `M ↦ c·M^k`
//! - `exp:c` is `M ↦ c·2^M`
//! - `table:M1=V1,M2=V2,...` interpolates linearly between strictly
//!   increasing points and extrapolates with the end slopes
//! - `inflate:c,<spec>` is `M ↦ F(c·M²)`

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::FromPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::registry::Registry;
use crate::{Error, Result};

pub trait Growth: Send + Sync + fmt::Debug {
    fn eval(&self, m: f64) -> f64;
    /// Canonical string, re-parsable by [`GrowthFunction::parse`].
    fn spec(&self) -> String;
}

/// Parses the arguments after `name:` into a growth function.
pub trait GrowthFamily: Send + Sync {
    fn parse(&self, args: &str, whole: &str) -> Result<Arc<dyn Growth>>;
}

fn number(token: &str, whole: &str) -> Result<f64> {
    let t = token.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse(format!(
            "bad number '{t}' in growth spec '{whole}'"
        ))),
    }
}

fn positive(token: &str, whole: &str) -> Result<f64> {
    let v = number(token, whole)?;
    if v <= 0.0 {
        return Err(Error::Parse(format!(
            "'{}' must be positive in growth spec '{whole}'",
            token.trim()
        )));
    }
    Ok(v)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug)]
struct Poly {
    c: f64,
    k: f64,
}

impl Growth for Poly {
    fn eval(&self, m: f64) -> f64 {
        self.c * m.powf(self.k)
    }
    fn spec(&self) -> String {
        format!("poly:{},{}", fmt_num(self.c), fmt_num(self.k))
    }
}

struct PolyFamily;

impl GrowthFamily for PolyFamily {
    fn parse(&self, args: &str, whole: &str) -> Result<Arc<dyn Growth>> {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!(
                "poly expects 'c,k', got '{args}' in growth spec '{whole}'"
            )));
        }
        Ok(Arc::new(Poly {
            c: positive(parts[0], whole)?,
            k: positive(parts[1], whole)?,
        }))
    }
}

#[derive(Debug)]
struct Exp {
    c: f64,
}

impl Growth for Exp {
    fn eval(&self, m: f64) -> f64 {
        self.c * m.exp2()
    }
    fn spec(&self) -> String {
        format!("exp:{}", fmt_num(self.c))
    }
}

struct ExpFamily;

impl GrowthFamily for ExpFamily {
    fn parse(&self, args: &str, whole: &str) -> Result<Arc<dyn Growth>> {
        if args.contains(',') {
            return Err(Error::Parse(format!(
                "exp expects a single constant, got '{args}' in growth spec '{whole}'"
            )));
        }
        Ok(Arc::new(Exp {
            c: positive(args, whole)?,
        }))
    }
}

#[derive(Debug)]
struct Table {
    points: Vec<(f64, f64)>,
}

impl Growth for Table {
    fn eval(&self, m: f64) -> f64 {
        let p = &self.points;
        let seg = match p.iter().position(|&(x, _)| m <= x) {
            Some(0) => {
                let (x0, y0) = p[0];
                return if x0 > 0.0 { y0 * (m / x0) } else { y0 };
            }
            Some(i) => i - 1,
            None => p.len() - 2,
        };
        let (x0, y0) = p[seg];
        let (x1, y1) = p[seg + 1];
        y0 + (y1 - y0) * (m - x0) / (x1 - x0)
    }
    fn spec(&self) -> String {
        let body: Vec<String> = self
            .points
            .iter()
            .map(|&(x, y)| format!("{}={}", fmt_num(x), fmt_num(y)))
            .collect();
        format!("table:{}", body.join(","))
    }
}

struct TableFamily;

impl GrowthFamily for TableFamily {
    fn parse(&self, args: &str, whole: &str) -> Result<Arc<dyn Growth>> {
        let mut points = Vec::new();
        for token in args.split(',') {
            let (x, y) = token.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "table entry '{}' is not 'M=V' in growth spec '{whole}'",
                    token.trim()
                ))
            })?;
            let x = number(x, whole)?;
            let y = positive(y, whole)?;
            if x < 0.0 {
                return Err(Error::Parse(format!(
                    "table entry '{}' has negative M in growth spec '{whole}'",
                    token.trim()
                )));
            }
            if let Some(&(px, py)) = points.last() {
                if !(x > px && y > py) {
                    return Err(Error::Parse(format!(
                        "table entry '{}' is not strictly increasing in growth spec '{whole}'",
                        token.trim()
                    )));
                }
            }
            points.push((x, y));
        }
        if points.len() < 2 {
            return Err(Error::Parse(format!(
                "table needs at least two points in growth spec '{whole}'"
            )));
        }
        Ok(Arc::new(Table { points }))
    }
}

#[derive(Debug)]
struct Inflated {
    c: f64,
    inner: GrowthFunction,
}

impl Growth for Inflated {
    fn eval(&self, m: f64) -> f64 {
        self.inner.eval(self.c * m * m)
    }
    fn spec(&self) -> String {
        format!("inflate:{},{}", fmt_num(self.c), self.inner.spec())
    }
}

struct InflateFamily;

impl GrowthFamily for InflateFamily {
    fn parse(&self, args: &str, whole: &str) -> Result<Arc<dyn Growth>> {
        let (c, rest) = args.split_once(',').ok_or_else(|| {
            Error::Parse(format!(
                "inflate expects 'c,<spec>', got '{args}' in growth spec '{whole}'"
            ))
        })?;
        Ok(Arc::new(Inflated {
            c: positive(c, whole)?,
            inner: GrowthFunction::parse(rest)?,
        }))
    }
}

pub fn families() -> &'static Registry<dyn GrowthFamily> {
    static REG: OnceLock<Registry<dyn GrowthFamily>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn GrowthFamily>::new("growth family")
            .with("poly", Arc::new(PolyFamily))
            .with("exp", Arc::new(ExpFamily))
            .with("table", Arc::new(TableFamily))
            .with("inflate", Arc::new(InflateFamily))
    })
}

/// An increasing function `R⁺ -> R⁺`, selected by its spec string.
#[derive(Clone)]
pub struct GrowthFunction(Arc<dyn Growth>);

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrowthFunction({})", self.spec())
    }
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

impl PartialEq for GrowthFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec() == other.spec()
    }
}

impl Eq for GrowthFunction {}

impl GrowthFunction {
    pub fn parse(spec: &str) -> Result<GrowthFunction> {
        let spec = spec.trim();
        let (name, args) = spec.split_once(':').ok_or_else(|| {
            Error::Parse(format!("growth spec '{spec}' lacks 'family:' prefix"))
        })?;
        let family = families().get(name.trim()).map_err(|_| {
            Error::Parse(format!(
                "unknown growth family '{}' in growth spec '{spec}' (known: {})",
                name.trim(),
                families().names().join(", ")
            ))
        })?;
        Ok(GrowthFunction(family.parse(args, spec)?))
    }

    pub fn poly(c: f64, k: f64) -> Result<GrowthFunction> {
        GrowthFunction::parse(&format!("poly:{c},{k}"))
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.0.eval(m)
    }

    pub fn spec(&self) -> String {
        self.0.spec()
    }

    /// `M ↦ F(c·M²)`.
    pub fn inflate(&self, c: f64) -> GrowthFunction {
        GrowthFunction(Arc::new(Inflated {
            c,
            inner: self.clone(),
        }))
    }

    /// `⌈F(M)⌉` as an integer; non-finite values are an error.
    pub fn ceil_at(&self, m: f64) -> Result<BigInt> {
        let v = self.eval(m);
        if !v.is_finite() {
            return Err(Error::GrowthOverflow(m));
        }
        BigInt::from_f64(v.ceil()).ok_or(Error::GrowthOverflow(m))
    }

    /// Checks `F` is strictly increasing and positive on `points` (sorted ascending).
    pub fn check_monotone(&self, points: &[f64]) -> Result<()> {
        let mut prev: Option<(f64, f64)> = None;
        for &m in points {
            let v = self.eval(m);
            if !(v > 0.0) {
                return Err(Error::invalid(format!("growth {self} is not positive at {m}")));
            }
            if let Some((pm, pv)) = prev {
                if m > pm && !(v > pv) {
                    return Err(Error::invalid(format!(
                        "growth {self} is not increasing between {pm} and {m}"
                    )));
                }
            }
            prev = Some((m, v));
        }
        Ok(())
    }
}

impl Serialize for GrowthFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.spec())
    }
}

impl<'de> Deserialize<'de> for GrowthFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        GrowthFunction::parse(&s).map_err(serde::de::Error::custom)
    }
}
