//! Fourier analysis on `Z/MZ` and the `U²`, `L²` norms on `[N]`.
//!
//! Conventions: `e_M(x) = exp(2πi x / M)`, `f̂(r) = E_x f(x) e_M(-rx)`.
//! A function on `[N] = {1..N}` is embedded in `Z/MZ` (`M ≥ 2N`) by
//! placing `f(n)` at residue `n mod M` and zero elsewhere.

use std::f64::consts::TAU;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::NORM_TOL;
use crate::registry::Registry;
use crate::{Error, Result};

/// Field of values a function may take: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Default
    + Serialize
    + DeserializeOwned
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    fn to_complex(self) -> Complex64;
    fn abs_sq(self) -> f64;
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn conj(self) -> Self {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// A function on `[N]` together with its ambient modulus `M ≥ 2N`.
///
/// `values[i]` holds `f(i + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawIntervalFunction<T>",
    into = "RawIntervalFunction<T>",
    bound = "T: Scalar"
)]
pub struct IntervalFunction<T: Scalar = f64> {
    n: usize,
    m: usize,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawIntervalFunction<T: Scalar> {
    n: usize,
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<RawIntervalFunction<T>> for IntervalFunction<T> {
    type Error = Error;

    fn try_from(raw: RawIntervalFunction<T>) -> Result<Self> {
        if raw.values.len() != raw.n {
            return Err(Error::invalid(format!(
                "n = {} but {} values supplied",
                raw.n,
                raw.values.len()
            )));
        }
        IntervalFunction::with_modulus(raw.values, raw.m)
    }
}

impl<T: Scalar> From<IntervalFunction<T>> for RawIntervalFunction<T> {
    fn from(f: IntervalFunction<T>) -> Self {
        RawIntervalFunction {
            n: f.n,
            m: f.m,
            values: f.values,
        }
    }
}

impl<T: Scalar> IntervalFunction<T> {
    /// Builds `f` on `[values.len()]` with the default modulus `M = 2N`.
    pub fn new(values: Vec<T>) -> Result<Self> {
        let m = 2 * values.len();
        Self::with_modulus(values, m)
    }

    pub fn with_modulus(values: Vec<T>, m: usize) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::invalid("interval function needs N >= 1"));
        }
        if m < 2 * n {
            return Err(Error::invalid(format!(
                "ambient modulus M = {m} is below 2N = {}",
                2 * n
            )));
        }
        Ok(IntervalFunction { n, m, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> T) -> Result<Self> {
        Self::new((1..=n).map(&mut f).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// `f(n)` for `n` in `1..=N`.
    pub fn at(&self, n: usize) -> T {
        self.values[n - 1]
    }

    /// Same values, different ambient modulus.
    pub fn remodulus(&self, m: usize) -> Result<Self> {
        Self::with_modulus(self.values.clone(), m)
    }

    /// Same shape and modulus, new values.
    pub fn with_values<U: Scalar>(&self, values: Vec<U>) -> Result<IntervalFunction<U>> {
        if values.len() != self.n {
            return Err(Error::invalid("value count does not match N"));
        }
        IntervalFunction::with_modulus(values, self.m)
    }

    pub fn map<U: Scalar>(&self, mut g: impl FnMut(T) -> U) -> IntervalFunction<U> {
        IntervalFunction {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &IntervalFunction<T>,
        mut g: impl FnMut(T, T) -> T,
    ) -> Result<IntervalFunction<T>> {
        self.check_same_n(other)?;
        Ok(IntervalFunction {
            n: self.n,
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| g(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &IntervalFunction<T>) -> Result<IntervalFunction<T>> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &IntervalFunction<T>) -> Result<IntervalFunction<T>> {
        self.zip_with(other, |a, b| a + b)
    }

    fn check_same_n<U: Scalar>(&self, other: &IntervalFunction<U>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::invalid(format!(
                "length mismatch: N = {} vs N = {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    /// Zero-extension of `f` to `Z/MZ`, indexed by residue.
    pub fn ambient(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for (i, v) in self.values.iter().enumerate() {
            out[(i + 1) % self.m] = v.to_complex();
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs_sq().sqrt())
            .fold(0.0, f64::max)
    }
}

impl IntervalFunction<f64> {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n as f64
    }

    pub fn to_complex(&self) -> IntervalFunction<Complex64> {
        self.map(Complex64::from)
    }

    /// True if every value lies in `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.values.iter().all(|&v| v >= lo && v <= hi)
    }
}

/// Fourier coefficients `f̂(r)`, `r ∈ Z/MZ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum", into = "RawSpectrum")]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpectrum {
    m: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        if raw.re.len() != raw.m || raw.im.len() != raw.m {
            return Err(Error::invalid("spectrum arrays must have length m"));
        }
        Ok(Spectrum {
            coeffs: raw
                .re
                .into_iter()
                .zip(raw.im)
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        })
    }
}

impl From<Spectrum> for RawSpectrum {
    fn from(s: Spectrum) -> Self {
        RawSpectrum {
            m: s.coeffs.len(),
            re: s.coeffs.iter().map(|c| c.re).collect(),
            im: s.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl Spectrum {
    pub fn modulus(&self) -> usize {
        self.coeffs.len()
    }

    /// `Σ_r |f̂(r)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_r |f̂(r)|⁴`.
    pub fn fourth_moment(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr() * c.norm_sqr()).sum()
    }
}

/// A discrete Fourier transform on `Z/MZ`.
pub trait DftBackend: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// `out[r] = (1/M) Σ_x f(x) e_M(-rx)`.
    fn forward(&self, f: &[Complex64]) -> Vec<Complex64>;

    /// `out[x] = Σ_r c(r) e_M(rx)`.
    fn inverse(&self, c: &[Complex64]) -> Vec<Complex64>;
}

/// Direct `O(M²)` summation with an exact-index twiddle table.
#[derive(Debug, Default)]
pub struct NaiveDft;

fn twiddles(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            let a = TAU * k as f64 / m as f64;
            Complex64::new(a.cos(), -a.sin())
        })
        .collect()
}

impl DftBackend for NaiveDft {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn forward(&self, f: &[Complex64]) -> Vec<Complex64> {
        let m = f.len();
        let w = twiddles(m);
        let scale = 1.0 / m as f64;
        (0..m)
            .map(|r| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, v) in f.iter().enumerate() {
                    acc += v * w[(r * x) % m];
                }
                acc * scale
            })
            .collect()
    }

    fn inverse(&self, c: &[Complex64]) -> Vec<Complex64> {
        let m = c.len();
        let w = twiddles(m);
        (0..m)
            .map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (r, v) in c.iter().enumerate() {
                    acc += v * w[(r * x) % m].conj();
                }
                acc
            })
            .collect()
    }
}

/// FFT backend; plans are cached across calls.
pub struct FftDft {
    planner: Mutex<FftPlanner<f64>>,
}

impl Default for FftDft {
    fn default() -> Self {
        FftDft {
            planner: Mutex::new(FftPlanner::new()),
        }
    }
}

impl Debug for FftDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FftDft")
    }
}

impl DftBackend for FftDft {
    fn name(&self) -> &'static str {
        "fft"
    }

    fn forward(&self, f: &[Complex64]) -> Vec<Complex64> {
        let plan = self
            .planner
            .lock()
            .expect("planner lock")
            .plan_fft_forward(f.len());
        let mut buf = f.to_vec();
        plan.process(&mut buf);
        let scale = 1.0 / f.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    fn inverse(&self, c: &[Complex64]) -> Vec<Complex64> {
        let plan = self
            .planner
            .lock()
            .expect("planner lock")
            .plan_fft_inverse(c.len());
        let mut buf = c.to_vec();
        plan.process(&mut buf);
        buf
    }
}

pub fn dft_backends() -> &'static Registry<dyn DftBackend> {
    static REG: OnceLock<Registry<dyn DftBackend>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn DftBackend>::new("dft backend")
            .with("naive", Arc::new(NaiveDft))
            .with("fft", Arc::new(FftDft::default()))
    })
}

/// Strategy for the additive-quadruple sum
/// `Q(f) = Σ_{x+w=y+z} f(x) f(w) conj f(y) conj f(z) = M³ ‖f‖⁴_{U²(Z/MZ)}`.
pub trait U2Evaluator: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn quadruple_sum(&self, f: &[Complex64]) -> f64;
}

/// `Q(f) = Σ_s |r(s)|²` with `r(s) = Σ_x f(x) f(s-x)`, skipping zeros of `f`.
#[derive(Debug, Default)]
pub struct DirectU2;

impl U2Evaluator for DirectU2 {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn quadruple_sum(&self, f: &[Complex64]) -> f64 {
        let m = f.len();
        let support: Vec<usize> = (0..m).filter(|&x| f[x] != Complex64::new(0.0, 0.0)).collect();
        let mut r = vec![Complex64::new(0.0, 0.0); m];
        for &x in &support {
            for &w in &support {
                let s = (x + w) % m;
                r[s] += f[x] * f[w];
            }
        }
        r.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// `Q(f) = M³ Σ_r |f̂(r)|⁴`.
#[derive(Debug)]
pub struct SpectralU2 {
    pub backend: Arc<dyn DftBackend>,
}

impl U2Evaluator for SpectralU2 {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn quadruple_sum(&self, f: &[Complex64]) -> f64 {
        let m = f.len() as f64;
        let coeffs = self.backend.forward(f);
        let s: f64 = coeffs.iter().map(|c| c.norm_sqr() * c.norm_sqr()).sum();
        s * m * m * m
    }
}

pub fn u2_evaluators() -> &'static Registry<dyn U2Evaluator> {
    static REG: OnceLock<Registry<dyn U2Evaluator>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn U2Evaluator>::new("U2 evaluator")
            .with("direct", Arc::new(DirectU2))
            .with(
                "spectral",
                Arc::new(SpectralU2 {
                    backend: dft_backends().get("fft").expect("fft registered"),
                }),
            )
            .with(
                "spectral-naive",
                Arc::new(SpectralU2 {
                    backend: dft_backends().get("naive").expect("naive registered"),
                }),
            )
    })
}

fn to_complex_vec<T: Scalar>(f: &[T]) -> Vec<Complex64> {
    f.iter().map(|v| v.to_complex()).collect()
}

/// Fourier transform of a function on `Z/MZ` (`M = f.len()`), naive backend.
pub fn dft<T: Scalar>(f: &[T]) -> Result<Spectrum> {
    dft_with(&NaiveDft, f)
}

pub fn dft_with<T: Scalar>(backend: &dyn DftBackend, f: &[T]) -> Result<Spectrum> {
    if f.is_empty() {
        return Err(Error::invalid("dft of an empty function"));
    }
    Ok(Spectrum {
        coeffs: backend.forward(&to_complex_vec(f)),
    })
}

/// Fourier inversion: `f(x) = Σ_r f̂(r) e_M(rx)`.
pub fn idft(s: &Spectrum) -> Result<Vec<Complex64>> {
    idft_with(&NaiveDft, s)
}

pub fn idft_with(backend: &dyn DftBackend, s: &Spectrum) -> Result<Vec<Complex64>> {
    if s.coeffs.is_empty() {
        return Err(Error::invalid("idft of an empty spectrum"));
    }
    Ok(backend.inverse(&s.coeffs))
}

fn fourth_root(q: f64) -> Result<f64> {
    if q < -NORM_TOL {
        return Err(Error::Consistency(format!(
            "negative U2 fourth power {q}"
        )));
    }
    Ok(q.max(0.0).powf(0.25))
}

/// `‖f‖_{U²(Z/MZ)}` by the direct convolution count.
pub fn u2_norm_cyclic<T: Scalar>(f: &[T]) -> Result<f64> {
    u2_norm_cyclic_with(&DirectU2, f)
}

pub fn u2_norm_cyclic_with<T: Scalar>(eval: &dyn U2Evaluator, f: &[T]) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::invalid("U2 norm of an empty function"));
    }
    let m = f.len() as f64;
    fourth_root(eval.quadruple_sum(&to_complex_vec(f)) / (m * m * m))
}

/// Number of additive quadruples `x+w = y+z` in `[N]^4`, `(2N³+N)/3`.
pub fn interval_quadruples(n: usize) -> f64 {
    let n = n as u128;
    ((2 * n * n * n + n) / 3) as f64
}

/// `‖f‖_{U²([N])} = ‖f‖_{U²(Z/MZ)} / ‖1_[N]‖_{U²(Z/MZ)}` by the direct count.
pub fn u2_norm_interval<T: Scalar>(f: &IntervalFunction<T>) -> Result<f64> {
    u2_norm_interval_with(&DirectU2, f)
}

pub fn u2_norm_interval_with<T: Scalar>(
    eval: &dyn U2Evaluator,
    f: &IntervalFunction<T>,
) -> Result<f64> {
    if f.m < 2 * f.n {
        return Err(Error::invalid("ambient modulus below 2N"));
    }
    fourth_root(eval.quadruple_sum(&f.ambient()) / interval_quadruples(f.n))
}

/// `(E_{n∈[N]} |f(n)|²)^{1/2}`.
pub fn l2_norm<T: Scalar>(f: &IntervalFunction<T>) -> f64 {
    (f.values.iter().map(|v| v.abs_sq()).sum::<f64>() / f.n as f64).sqrt()
}

/// `E_{n∈[N]} f(n) conj g(n)`.
pub fn correlation<T: Scalar, U: Scalar>(
    f: &IntervalFunction<T>,
    g: &IntervalFunction<U>,
) -> Result<Complex64> {
    f.check_same_n(g)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.values.iter().zip(&g.values) {
        acc += a.to_complex() * b.to_complex().conj();
    }
    Ok(acc / f.n as f64)
}

/// `E_{n∈[N]} f(n) e(-rn/M)` for every `r ∈ Z/MZ`.
pub fn interval_coefficients<T: Scalar>(
    backend: &dyn DftBackend,
    f: &IntervalFunction<T>,
) -> Vec<Complex64> {
    let scale = f.m as f64 / f.n as f64;
    backend
        .forward(&f.ambient())
        .into_iter()
        .map(|c| c * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constant_has_single_coefficient() {
        let s = dft(&[1.0; 8]).unwrap();
        assert!(close(s.coeffs[0].re, 1.0, 1e-12));
        for c in &s.coeffs[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn character_is_unit_coefficient() {
        let f: Vec<Complex64> = (0..8)
            .map(|x| Complex64::from_polar(1.0, TAU * x as f64 / 8.0))
            .collect();
        for backend in dft_backends().names() {
            let s = dft_with(&*dft_backends().get(backend).unwrap(), &f).unwrap();
            for (r, c) in s.coeffs.iter().enumerate() {
                let want = if r == 1 { 1.0 } else { 0.0 };
                assert!((c - Complex64::new(want, 0.0)).norm() < 1e-12, "{backend} r={r}");
            }
        }
    }

    #[test]
    fn point_mass_is_flat() {
        let s = dft(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for c in &s.coeffs {
            assert!((c - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(dft::<f64>(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn u2_of_constant_and_character() {
        assert!(close(u2_norm_cyclic(&[1.0; 12]).unwrap(), 1.0, 1e-12));
        let f: Vec<Complex64> = (0..12)
            .map(|x| Complex64::from_polar(1.0, TAU * 5.0 * x as f64 / 12.0))
            .collect();
        assert!(close(u2_norm_cyclic(&f).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn indicator_of_four_in_z8() {
        let f = IntervalFunction::new(vec![1.0; 4]).unwrap();
        let got = u2_norm_cyclic(&f.ambient()).unwrap();
        assert!(close(got, (44.0f64 / 512.0).powf(0.25), 1e-12));
        assert!(close(got, 0.5414, 1e-4));
    }

    #[test]
    fn interval_norm_trivial_cases() {
        let one = IntervalFunction::new(vec![1.0; 9]).unwrap();
        assert!(close(u2_norm_interval(&one).unwrap(), 1.0, 1e-12));
        let zero = IntervalFunction::new(vec![0.0; 9]).unwrap();
        assert_eq!(u2_norm_interval(&zero).unwrap(), 0.0);
    }

    #[test]
    fn small_modulus_is_rejected() {
        assert!(IntervalFunction::with_modulus(vec![1.0; 4], 7).is_err());
    }

    #[test]
    fn l2_and_correlation_examples() {
        let f = IntervalFunction::new(vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(close(l2_norm(&f), 0.75f64.sqrt(), 1e-15));
        let half = IntervalFunction::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(close(l2_norm(&half), 0.5f64.sqrt(), 1e-15));
        let c = IntervalFunction::new(vec![0.3; 5]).unwrap();
        assert!(close(l2_norm(&c), 0.3, 1e-15));

        let a = IntervalFunction::new(vec![1.0, -1.0]).unwrap();
        let b = IntervalFunction::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(correlation(&a, &b).unwrap(), Complex64::new(0.0, 0.0));
        assert!(close(correlation(&f, &f).unwrap().re, l2_norm(&f).powi(2), 1e-15));
        let ones = IntervalFunction::new(vec![1.0; 4]).unwrap();
        assert!(close(correlation(&f, &ones).unwrap().re, f.mean(), 1e-15));
        let short = IntervalFunction::new(vec![1.0; 3]).unwrap();
        assert!(correlation(&f, &short).is_err());
    }

    #[test]
    fn json_shape_and_validation() {
        let f = IntervalFunction::new(vec![0.5, 0.25]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"n":2,"m":4,"values":[0.5,0.25]}"#);
        assert_eq!(serde_json::from_str::<IntervalFunction>(&s).unwrap(), f);
        assert!(serde_json::from_str::<IntervalFunction>(r#"{"n":3,"m":6,"values":[1.0]}"#).is_err());
        assert!(serde_json::from_str::<IntervalFunction>(r#"{"n":1,"m":1,"values":[1.0]}"#).is_err());

        let sp = dft(&[1.0, 0.0]).unwrap();
        let js = serde_json::to_string(&sp).unwrap();
        assert!(js.starts_with(r#"{"m":2,"re":[0.5,0.5],"im":["#));
        assert_eq!(serde_json::from_str::<Spectrum>(&js).unwrap(), sp);
    }
}
