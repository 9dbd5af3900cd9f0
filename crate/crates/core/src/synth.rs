//! Deterministic synthetic inputs `f: [N] -> [0,1]`.
//!
//! Generator specs:
//!
//! | spec | `f(n)` |
//! |---|---|
//! | `constant:c` | `c` |
//! | `interval` | `1` if `n ≤ N/2` |
//! | `interval:a,b` | `1` if `a ≤ n ≤ b` |
//! | `residue:q,a` | `1` if `n ≡ a (mod q)` |
//! | `cosine:r,Q` | `½(1 + cos(2π r n / Q))` |
//! | `cosine:r,Q,A` | `½ + (A/2) cos(2π r n / Q)` |
//! | `uniform` | seeded uniform in `[0,1)` |
//! | `uniform:lo,hi` | seeded uniform in `[lo,hi)` |
//! | `w1*g1+w2*g2+...` | `Σ wᵢ gᵢ(n)` clipped to `[0,1]` |
//!
//! All randomness comes from one ChaCha8 stream seeded by the caller and
//! consumed term by term, left to right.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fourier::IntervalFunction;
use crate::registry::Registry;
use crate::{Error, Result};

pub trait Generator: Send + Sync {
    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

pub trait GeneratorFamily: Send + Sync {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>>;
}

fn numbers(args: Option<&str>, whole: &str, counts: &[usize]) -> Result<Vec<f64>> {
    let parts: Vec<&str> = match args {
        None => Vec::new(),
        Some(a) => a.split(',').map(str::trim).collect(),
    };
    if !counts.contains(&parts.len()) {
        return Err(Error::Parse(format!(
            "generator '{whole}' takes {counts:?} arguments, got {}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse(format!("bad number '{p}' in generator '{whole}'"))),
        })
        .collect()
}

struct Constant(f64);

impl Generator for Constant {
    fn generate(&self, n: usize, _: &mut ChaCha8Rng) -> Vec<f64> {
        vec![self.0; n]
    }
}

struct ConstantFamily;

impl GeneratorFamily for ConstantFamily {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>> {
        Ok(Arc::new(Constant(numbers(args, whole, &[1])?[0])))
    }
}

struct Interval(Option<(f64, f64)>);

impl Generator for Interval {
    fn generate(&self, n: usize, _: &mut ChaCha8Rng) -> Vec<f64> {
        let (a, b) = self.0.unwrap_or((1.0, (n / 2) as f64));
        (1..=n)
            .map(|k| if (k as f64) >= a && (k as f64) <= b { 1.0 } else { 0.0 })
            .collect()
    }
}

struct IntervalFamily;

impl GeneratorFamily for IntervalFamily {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>> {
        let v = numbers(args, whole, &[0, 2])?;
        Ok(Arc::new(Interval((v.len() == 2).then(|| (v[0], v[1])))))
    }
}

struct Residue {
    q: u64,
    a: u64,
}

impl Generator for Residue {
    fn generate(&self, n: usize, _: &mut ChaCha8Rng) -> Vec<f64> {
        (1..=n as u64)
            .map(|k| if k % self.q == self.a { 1.0 } else { 0.0 })
            .collect()
    }
}

struct ResidueFamily;

impl GeneratorFamily for ResidueFamily {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>> {
        let v = numbers(args, whole, &[2])?;
        if v[0] < 1.0 || v[0].fract() != 0.0 || v[1].fract() != 0.0 {
            return Err(Error::Parse(format!(
                "residue needs integers q >= 1 and a in generator '{whole}'"
            )));
        }
        let q = v[0] as u64;
        Ok(Arc::new(Residue {
            q,
            a: (v[1] as i64).rem_euclid(q as i64) as u64,
        }))
    }
}

struct Cosine {
    r: f64,
    q: f64,
    amp: f64,
}

impl Generator for Cosine {
    fn generate(&self, n: usize, _: &mut ChaCha8Rng) -> Vec<f64> {
        (1..=n)
            .map(|k| {
                // Reduce r·n mod Q before scaling when both are integers.
                let x = if self.r.fract() == 0.0 && self.q.fract() == 0.0 {
                    ((self.r as i128 * k as i128).rem_euclid(self.q as i128)) as f64 / self.q
                } else {
                    (self.r * k as f64 / self.q).rem_euclid(1.0)
                };
                0.5 + 0.5 * self.amp * (TAU * x).cos()
            })
            .collect()
    }
}

struct CosineFamily;

impl GeneratorFamily for CosineFamily {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>> {
        let v = numbers(args, whole, &[2, 3])?;
        if v[1] == 0.0 {
            return Err(Error::Parse(format!("zero period in generator '{whole}'")));
        }
        Ok(Arc::new(Cosine {
            r: v[0],
            q: v[1],
            amp: v.get(2).copied().unwrap_or(1.0),
        }))
    }
}

struct Uniform {
    lo: f64,
    hi: f64,
}

impl Generator for Uniform {
    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n)
            .map(|_| self.lo + (self.hi - self.lo) * rng.gen::<f64>())
            .collect()
    }
}

struct UniformFamily;

impl GeneratorFamily for UniformFamily {
    fn parse(&self, args: Option<&str>, whole: &str) -> Result<Arc<dyn Generator>> {
        let v = numbers(args, whole, &[0, 2])?;
        let (lo, hi) = if v.is_empty() { (0.0, 1.0) } else { (v[0], v[1]) };
        Ok(Arc::new(Uniform { lo, hi }))
    }
}

pub fn families() -> &'static Registry<dyn GeneratorFamily> {
    static REG: OnceLock<Registry<dyn GeneratorFamily>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn GeneratorFamily>::new("generator")
            .with("constant", Arc::new(ConstantFamily))
            .with("interval", Arc::new(IntervalFamily))
            .with("residue", Arc::new(ResidueFamily))
            .with("cosine", Arc::new(CosineFamily))
            .with("uniform", Arc::new(UniformFamily))
    })
}

struct Mixture {
    terms: Vec<(f64, Arc<dyn Generator>)>,
}

impl Generator for Mixture {
    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (w, g) in &self.terms {
            for (o, v) in out.iter_mut().zip(g.generate(n, rng)) {
                *o += w * v;
            }
        }
        out.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}

fn parse_single(spec: &str, whole: &str) -> Result<Arc<dyn Generator>> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (spec.trim(), None),
    };
    let family = families().get(name).map_err(|_| {
        Error::Parse(format!(
            "unknown generator '{name}' in '{whole}' (known: {})",
            families().names().join(", ")
        ))
    })?;
    family.parse(args, whole)
}

/// Parses a generator spec (see module docs).
pub fn parse(spec: &str) -> Result<Arc<dyn Generator>> {
    let spec = spec.trim();
    if !spec.contains('*') && !spec.contains('+') {
        return parse_single(spec, spec);
    }
    let mut terms = Vec::new();
    for term in spec.split('+') {
        let (w, g) = match term.split_once('*') {
            Some((w, g)) => {
                let w: f64 = w.trim().parse().map_err(|_| {
                    Error::Parse(format!("bad weight '{}' in generator '{spec}'", w.trim()))
                })?;
                (w, g)
            }
            None => (1.0, term),
        };
        terms.push((w, parse_single(g, spec)?));
    }
    Ok(Arc::new(Mixture { terms }))
}

/// `f` on `[N]` from a generator spec and a seed.
pub fn synth(spec: &str, n: usize, seed: u64) -> Result<IntervalFunction> {
    let g = parse(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = g.generate(n, &mut rng);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("generator '{spec}' produced non-finite values")));
    }
    IntervalFunction::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(synth("constant:0.5", 8, 0).unwrap().values(), &[0.5; 8]);
        assert_eq!(synth("interval", 4, 0).unwrap().values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(synth("residue:3,0", 6, 0).unwrap().values(), &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let c = synth("cosine:1,3", 3, 0).unwrap();
        assert!((c.values()[2] - 1.0).abs() < 1e-15);
        assert!((c.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn seeded_uniform_is_reproducible() {
        let a = synth("uniform", 100, 7).unwrap();
        let b = synth("uniform", 100, 7).unwrap();
        let c = synth("uniform", 100, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.within(0.0, 1.0));
    }

    #[test]
    fn mixtures_clip() {
        let f = synth("0.8*constant:1+0.8*interval", 4, 0).unwrap();
        assert_eq!(f.values(), &[1.0, 1.0, 0.8, 0.8]);
    }

    #[test]
    fn unknown_generator() {
        let err = synth("sawtooth:3", 4, 0).err().unwrap().to_string();
        assert!(err.contains("'sawtooth'"));
        assert!(synth("cosine:1", 4, 0).is_err());
    }
}
