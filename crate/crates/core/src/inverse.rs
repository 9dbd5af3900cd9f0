//! Large Fourier coefficients and correlating level sets with explicit
//! complexity witnesses.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{
    MAXIMAL_CAP, MAXIMAL_RADII, RAMP_MAX, RAMP_MIN, THRESHOLD_GRID, WITNESS_LADDER,
};
use crate::fourier::{self, l2_norm, DftBackend, IntervalFunction, Scalar};
use crate::torus::TorusPoint;
use crate::witness::{Expr, StructureWitness};
use crate::{Error, Result};

/// Relative tolerance under which two scan values count as tied.
const TIE_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierPeak {
    /// Frequency `r` in `Z/MZ`.
    pub r: usize,
    pub m: usize,
    /// `θ = r / M` as a point of `T^1`.
    pub theta: TorusPoint,
    /// `|E_{n∈[N]} f(n) e(-θn)|`.
    pub achieved: f64,
}

/// `e(-rn/M)` with the residue `rn mod M` reduced exactly.
fn phase(r: usize, n: usize, m: usize) -> Complex64 {
    let k = ((r as u128 * n as u128) % m as u128) as f64;
    let a = TAU * k / m as f64;
    Complex64::new(a.cos(), -a.sin())
}

/// `E_{n∈[N]} f(n) e(-rn/M)` by direct summation.
pub fn coefficient_at<T: Scalar>(f: &IntervalFunction<T>, r: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        acc += v.to_complex() * phase(r, i + 1, f.m());
    }
    acc / f.n() as f64
}

/// Index of the largest value; near-ties (relative `1e-12`) go to the lowest index.
fn argmax_low(values: &[f64]) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = best - TIE_REL * best.abs();
    values
        .iter()
        .position(|&v| v >= floor)
        .expect("nonempty scan")
}

/// Scans every `r ∈ Z/MZ` for the largest `|E f(n) e(-rn/M)|`.
pub fn large_fourier_coefficient<T: Scalar>(
    f: &IntervalFunction<T>,
    delta: f64,
) -> Result<FourierPeak> {
    large_fourier_coefficient_with(&*fourier::dft_backends().get("fft")?, f, delta)
}

pub fn large_fourier_coefficient_with<T: Scalar>(
    backend: &dyn DftBackend,
    f: &IntervalFunction<T>,
    delta: f64,
) -> Result<FourierPeak> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if f.sup_norm() > 1.0 + 1e-12 {
        return Err(Error::invalid("inverse theorem needs |f| <= 1"));
    }
    let mags: Vec<f64> = fourier::interval_coefficients(backend, f)
        .iter()
        .map(|c| c.norm())
        .collect();
    let r = argmax_low(&mags);
    Ok(FourierPeak {
        r,
        m: f.m(),
        theta: TorusPoint::from_fractions(&[(r as i64, f.m() as i64)])?,
        achieved: coefficient_at(f, r).norm(),
    })
}

/// `sup_k (1/2r_k)(1/N) |{n : |φ(n) - t| ≤ r_k}|` over `r_k = 2^-k`, `k = 1..12`;
/// the cap `2^12` if some `φ(n) = t` exactly.
pub fn maximal_function(phi: &IntervalFunction, t: f64) -> f64 {
    let mut sorted = phi.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    maximal_sorted(&sorted, t)
}

fn maximal_sorted(sorted: &[f64], t: f64) -> f64 {
    let n = sorted.len() as f64;
    let lo = sorted.partition_point(|&v| v - t < 0.0);
    let hi = sorted.partition_point(|&v| v - t <= 0.0);
    if hi > lo {
        return MAXIMAL_CAP;
    }
    let mut best: f64 = 0.0;
    for k in 1..=MAXIMAL_RADII {
        let r = 0.5f64.powi(k);
        let a = sorted.partition_point(|&v| v - t < -r);
        let b = sorted.partition_point(|&v| v - t <= r);
        best = best.max((b - a) as f64 / (2.0 * r * n));
    }
    best.min(MAXIMAL_CAP)
}

/// Which part of `e(-θn)` becomes the `[0,1]`-valued function `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    RePos,
    ReNeg,
    ImPos,
    ImNeg,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::RePos, Variant::ReNeg, Variant::ImPos, Variant::ImNeg];

    /// `φ` as an expression in `x = θn`; `Im e(-x) = -sin 2πx`.
    pub fn expr(self) -> Expr {
        match self {
            Variant::RePos => Expr::clamp(Expr::RePhase { coord: 0 }),
            Variant::ReNeg => Expr::clamp(Expr::scaled(-1.0, Expr::RePhase { coord: 0 })),
            Variant::ImPos => Expr::clamp(Expr::scaled(-1.0, Expr::ImPhase { coord: 0 })),
            Variant::ImNeg => Expr::clamp(Expr::ImPhase { coord: 0 }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetWitness {
    pub target_error: f64,
    pub witness: StructureWitness,
    pub achieved_l2_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetProvenance {
    pub theta: TorusPoint,
    pub variant: Variant,
    pub t: f64,
    pub maximal: f64,
}

/// A subset `E ⊆ [N]` with witnesses `‖1_E - F(θ·)‖₂ ≤ 1/M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurableSet {
    pub indicator: IntervalFunction,
    pub witnesses: Vec<SetWitness>,
    pub provenance: Option<SetProvenance>,
}

impl MeasurableSet {
    /// A set whose indicator is exactly `F(θ·)` for a constant `F`.
    pub fn constant(like: &IntervalFunction, full: bool) -> MeasurableSet {
        let v = if full { 1.0 } else { 0.0 };
        MeasurableSet {
            indicator: like.map(|_| v),
            witnesses: vec![SetWitness {
                target_error: 0.0,
                witness: StructureWitness::constant(v),
                achieved_l2_error: 0.0,
            }],
            provenance: None,
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        self.indicator.at(n) != 0.0
    }

    pub fn size(&self) -> usize {
        self.indicator.values().iter().filter(|&&v| v != 0.0).count()
    }

    /// Lowest-complexity witness meeting `target`, ties to the earliest.
    pub fn witness_within(&self, target: f64) -> Option<&SetWitness> {
        self.witnesses
            .iter()
            .filter(|w| w.achieved_l2_error <= target)
            .min_by(|a, b| a.witness.complexity.total_cmp(&b.witness.complexity))
    }

    /// The witness with the smallest achieved error, ties to lowest complexity.
    pub fn sharpest(&self) -> Option<&SetWitness> {
        self.witnesses.iter().min_by(|a, b| {
            a.achieved_l2_error
                .total_cmp(&b.achieved_l2_error)
                .then(a.witness.complexity.total_cmp(&b.witness.complexity))
        })
    }

    pub fn id(&self) -> String {
        match &self.provenance {
            Some(p) => format!("{}:{:?}:{}", p.theta.coords()[0], p.variant, p.t),
            None => format!("const:{}", self.size()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatingSet {
    pub set: MeasurableSet,
    /// `|E f 1_E|`, recomputed directly.
    pub achieved: f64,
    pub variant: Option<Variant>,
    pub peak: FourierPeak,
}

fn threshold(k: usize) -> f64 {
    (k as f64 + 0.5) / THRESHOLD_GRID as f64
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// Level set `E_t = {φ ≥ t}` correlating with `f`, with ramp witnesses.
pub fn correlating_set(f: &IntervalFunction, delta: f64) -> Result<CorrelatingSet> {
    correlating_set_with(&*fourier::dft_backends().get("fft")?, f, delta)
}

pub fn correlating_set_with(
    backend: &dyn DftBackend,
    f: &IntervalFunction,
    delta: f64,
) -> Result<CorrelatingSet> {
    let peak = large_fourier_coefficient_with(backend, f, delta)?;
    let n = f.n();
    let empty = |peak: FourierPeak| CorrelatingSet {
        set: MeasurableSet::constant(f, false),
        achieved: 0.0,
        variant: None,
        peak,
    };
    if peak.achieved == 0.0 {
        return Ok(empty(peak));
    }

    let phis: Vec<(Variant, StructureWitness, Vec<f64>)> = Variant::ALL
        .iter()
        .map(|&v| {
            let w = StructureWitness::new(peak.theta.clone(), v.expr())?;
            let vals = w.evaluate(n);
            Ok((v, w, vals))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = phis
        .iter()
        .map(|(_, _, vals)| {
            let s: f64 = f.values().iter().zip(vals).map(|(a, b)| a * b).sum();
            (s / n as f64).abs()
        })
        .collect();
    let (variant, phi_witness, phi) = &phis[argmax_low(&scores)];

    // Order points by decreasing φ; prefix sums give Σ_{φ ≥ t} f.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    let desc: Vec<f64> = order.iter().map(|&i| phi[i]).collect();
    let mut prefix = vec![0.0; n + 1];
    for (j, &i) in order.iter().enumerate() {
        prefix[j + 1] = prefix[j] + f.values()[i];
    }
    let corr: Vec<f64> = (0..THRESHOLD_GRID)
        .map(|k| {
            let t = threshold(k);
            let count = desc.partition_point(|&v| v >= t);
            (prefix[count] / n as f64).abs()
        })
        .collect();
    let best = corr.iter().cloned().fold(0.0, f64::max);
    if best == 0.0 {
        return Ok(empty(peak));
    }

    let mut asc = phi.clone();
    asc.sort_by(f64::total_cmp);
    let mut chosen: Option<(usize, f64)> = None;
    for (k, &c) in corr.iter().enumerate() {
        if c < best / 2.0 {
            continue;
        }
        let mt = maximal_sorted(&asc, threshold(k));
        if chosen.map_or(true, |(_, m)| mt < m) {
            chosen = Some((k, mt));
        }
    }
    let (k, mt) = chosen.expect("the best threshold lies in the good set");
    let t = threshold(k);

    let indicator = f.with_values(phi.iter().map(|&v| if v >= t { 1.0 } else { 0.0 }).collect())?;
    let achieved = fourier::correlation(f, &indicator)?.norm();

    let mut witnesses = Vec::new();
    for &target_m in &WITNESS_LADDER {
        let r = (1.0 / (4.0 * mt * target_m * target_m)).clamp(RAMP_MIN, RAMP_MAX);
        let w = StructureWitness::new(
            peak.theta.clone(),
            Expr::ramp(t - r, t + r, phi_witness.expr.clone()),
        )?;
        let err = l2_distance(indicator.values(), &w.evaluate(n));
        if err <= 1.0 / target_m {
            witnesses.push(SetWitness {
                target_error: 1.0 / target_m,
                witness: w,
                achieved_l2_error: err,
            });
        }
    }
    let below = phi
        .iter()
        .cloned()
        .filter(|&v| v < t)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = below.max(t - 2.0 * RAMP_MIN);
    let sep = StructureWitness::new(peak.theta.clone(), Expr::ramp(lo, t, phi_witness.expr.clone()))?;
    let err = l2_distance(indicator.values(), &sep.evaluate(n));
    witnesses.push(SetWitness {
        target_error: err,
        witness: sep,
        achieved_l2_error: err,
    });

    Ok(CorrelatingSet {
        set: MeasurableSet {
            indicator,
            witnesses,
            provenance: Some(SetProvenance {
                theta: peak.theta.clone(),
                variant: *variant,
                t,
                maximal: mt,
            }),
        },
        achieved,
        variant: Some(*variant),
        peak,
    })
}

/// `‖1_E - F(θ·)‖₂` recomputed from the witness.
pub fn witness_error(set: &MeasurableSet, w: &StructureWitness) -> f64 {
    let diff = set
        .indicator
        .with_values(
            set.indicator
                .values()
                .iter()
                .zip(w.evaluate(set.indicator.n()))
                .map(|(a, b)| a - b)
                .collect(),
        )
        .expect("same length");
    l2_norm(&diff)
}
