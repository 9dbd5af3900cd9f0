//! Factors (finite partitions) of `[N]`, conditional expectation, energy and
//! the energy-increment loop.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{Settings, GAIN_FLOOR_DIVISOR, IDENTITY_TOL};
use crate::fourier::{self, IntervalFunction};
use crate::inverse::{self, MeasurableSet};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
struct Cell {
    /// Index of the cell of the base partition this cell lies in.
    base: usize,
    /// Membership in each generator set.
    signature: Vec<bool>,
    /// Members, ascending, 1-based.
    members: Vec<usize>,
}

/// A partition of `[N]` into nonempty cells, obtained from a base
/// partition by successive joins with measurable sets.
#[derive(Clone, Debug)]
pub struct Factor {
    n: usize,
    cell_of: Vec<usize>,
    cells: Vec<Cell>,
    base_cells: usize,
    generators: Vec<Arc<MeasurableSet>>,
}

/// Serialized form: `{ "n", "cells", "generators" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRecord {
    pub n: usize,
    pub cells: Vec<Vec<usize>>,
    pub generators: Vec<String>,
}

impl Factor {
    /// `{[N]}`.
    pub fn trivial(n: usize) -> Factor {
        Factor::from_cells(n, vec![(1..=n).collect()]).expect("one cell partitions [N]")
    }

    /// Singletons.
    pub fn discrete(n: usize) -> Factor {
        Factor::from_cells(n, (1..=n).map(|i| vec![i]).collect()).expect("singletons partition [N]")
    }

    /// A base partition given by explicit cells (1-based members).
    pub fn from_cells(n: usize, cells: Vec<Vec<usize>>) -> Result<Factor> {
        let mut cell_of = vec![usize::MAX; n];
        let mut out = Vec::with_capacity(cells.len());
        for (k, mut members) in cells.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::invalid(format!("cell {k} is empty")));
            }
            members.sort_unstable();
            for &x in &members {
                if x == 0 || x > n {
                    return Err(Error::invalid(format!("member {x} outside [1, {n}]")));
                }
                if cell_of[x - 1] != usize::MAX {
                    return Err(Error::invalid(format!("member {x} appears twice")));
                }
                cell_of[x - 1] = k;
            }
            out.push(Cell {
                base: k,
                signature: Vec::new(),
                members,
            });
        }
        if let Some(x) = cell_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::invalid(format!("member {} is not covered", x + 1)));
        }
        let base_cells = out.len();
        Ok(Factor::assemble(n, out, base_cells, Vec::new()))
    }

    pub fn from_record(rec: &FactorRecord) -> Result<Factor> {
        Factor::from_cells(rec.n, rec.cells.clone())
    }

    fn assemble(
        n: usize,
        mut cells: Vec<Cell>,
        base_cells: usize,
        generators: Vec<Arc<MeasurableSet>>,
    ) -> Factor {
        cells.sort_by_key(|c| c.members[0]);
        let mut cell_of = vec![0; n];
        for (k, c) in cells.iter().enumerate() {
            for &x in &c.members {
                cell_of[x - 1] = k;
            }
        }
        Factor {
            n,
            cell_of,
            cells,
            base_cells,
            generators,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cells.
    pub fn complexity(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_of(&self, x: usize) -> usize {
        self.cell_of[x - 1]
    }

    pub fn cells(&self) -> Vec<&[usize]> {
        self.cells.iter().map(|c| c.members.as_slice()).collect()
    }

    pub fn generators(&self) -> &[Arc<MeasurableSet>] {
        &self.generators
    }

    /// True when every cell is an intersection of generator sets and
    /// complements, so its indicator inherits the generators' witnesses.
    pub fn is_certified(&self) -> bool {
        self.base_cells == 1
    }

    pub fn signature(&self, cell: usize) -> &[bool] {
        &self.cells[cell].signature
    }

    /// `B ∨ {E, [N]∖E}`, dropping empty cells.
    pub fn join(&self, set: Arc<MeasurableSet>) -> Factor {
        let mut cells = Vec::with_capacity(2 * self.cells.len());
        for c in &self.cells {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                c.members.iter().partition(|&&x| set.contains(x));
            for (members, bit) in [(inside, true), (outside, false)] {
                if !members.is_empty() {
                    let mut signature = c.signature.clone();
                    signature.push(bit);
                    cells.push(Cell {
                        base: c.base,
                        signature,
                        members,
                    });
                }
            }
        }
        let mut generators = self.generators.clone();
        generators.push(set);
        Factor::assemble(self.n, cells, self.base_cells, generators)
    }

    /// True if every cell of `coarser` is a union of cells of `self`.
    pub fn refines(&self, coarser: &Factor) -> bool {
        self.n == coarser.n
            && self.cells.iter().all(|c| {
                let k = coarser.cell_of(c.members[0]);
                c.members.iter().all(|&x| coarser.cell_of(x) == k)
            })
    }

    pub fn record(&self) -> FactorRecord {
        FactorRecord {
            n: self.n,
            cells: self.cells.iter().map(|c| c.members.clone()).collect(),
            generators: self.generators.iter().map(|g| g.id()).collect(),
        }
    }
}

/// Average of `values` over `members`; exact when the values agree.
pub(crate) fn cell_average(values: &[f64], members: &[usize]) -> f64 {
    let first = values[members[0] - 1];
    if members.iter().all(|&x| values[x - 1] == first) {
        return first;
    }
    members.iter().map(|&x| values[x - 1]).sum::<f64>() / members.len() as f64
}

/// `E(f|B)`: each point receives the average of `f` over its cell.
pub fn conditional_expectation(f: &IntervalFunction, b: &Factor) -> Result<IntervalFunction> {
    if f.n() != b.n {
        return Err(Error::invalid(format!(
            "function has N = {} but factor has N = {}",
            f.n(),
            b.n
        )));
    }
    let mut out = vec![0.0; f.n()];
    for c in &b.cells {
        let avg = cell_average(f.values(), &c.members);
        for &x in &c.members {
            out[x - 1] = avg;
        }
    }
    f.with_values(out)
}

/// `‖g‖₂²`.
pub fn mean_square(g: &IntervalFunction) -> f64 {
    g.values().iter().map(|v| v * v).sum::<f64>() / g.n() as f64
}

/// `‖E(f|B)‖₂²`.
pub fn energy(f: &IntervalFunction, b: &Factor) -> Result<f64> {
    Ok(mean_square(&conditional_expectation(f, b)?))
}

#[derive(Clone, Debug)]
pub enum StepOutcome {
    Step {
        factor: Factor,
        gain: f64,
        u2: f64,
        achieved: f64,
    },
    NoStep {
        u2: f64,
    },
}

/// One energy increment: if `‖f - E(f|B)‖_{U²} ≥ δ`, join `B` with a set
/// correlating with `f - E(f|B)`.
pub fn energy_increment_step(
    f: &IntervalFunction,
    b: &Factor,
    delta: f64,
    settings: &Settings,
) -> Result<StepOutcome> {
    let proj = conditional_expectation(f, b)?;
    let g = f.sub(&proj)?;
    let u2 = fourier::u2_norm_interval_with(&*settings.u2, &g)?;
    if u2 < delta {
        return Ok(StepOutcome::NoStep { u2 });
    }
    step_on_residual(f, b, &proj, g, u2, delta, settings)
}

fn step_on_residual(
    f: &IntervalFunction,
    b: &Factor,
    proj: &IntervalFunction,
    g: IntervalFunction,
    u2: f64,
    delta: f64,
    settings: &Settings,
) -> Result<StepOutcome> {
    let sup = g.sup_norm();
    let g = if sup > 1.0 { g.map(|v| v / sup) } else { g };
    let cs = inverse::correlating_set_with(&*settings.dft, &g, delta)?;
    if cs.achieved == 0.0 {
        return Ok(StepOutcome::NoStep { u2 });
    }
    let factor = b.join(Arc::new(cs.set));
    if factor.complexity() == b.complexity() {
        return Ok(StepOutcome::NoStep { u2 });
    }
    let proj_new = conditional_expectation(f, &factor)?;
    let gain = mean_square(&proj_new.sub(proj)?);
    let diff = mean_square(&proj_new) - mean_square(proj);
    if (gain - diff).abs() > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "energy gain {diff} differs from projection increment {gain}"
        )));
    }
    Ok(StepOutcome::Step {
        factor,
        gain,
        u2,
        achieved: cs.achieved,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `‖f - E(f|B)‖_{U²} ≤ δ`.
    Uniform,
    /// The last gain fell below the floor `γ`.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTelemetry {
    pub delta: f64,
    pub gain_floor: f64,
    /// Energy before each step and after the last.
    pub energies: Vec<f64>,
    /// `‖f - E(f|B)‖_{U²}` at each visited factor.
    pub u2_norms: Vec<f64>,
    pub gains: Vec<f64>,
    pub cells: Vec<usize>,
    pub termination: Option<Termination>,
}

#[derive(Clone, Debug)]
pub struct WeakOutcome {
    pub factor: Factor,
    pub telemetry: WeakTelemetry,
}

impl WeakOutcome {
    pub fn termination(&self) -> Termination {
        self.telemetry.termination.expect("set on success")
    }

    pub fn residual_u2(&self) -> f64 {
        *self.telemetry.u2_norms.last().expect("at least one measurement")
    }
}

/// Iterates [`energy_increment_step`] until the residual is `δ`-uniform or
/// the gain drops below `γ = δ⁴/1024`.
pub fn weak_regularize(
    f: &IntervalFunction,
    b0: &Factor,
    delta: f64,
    max_steps: usize,
    settings: &Settings,
) -> Result<WeakOutcome> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let gain_floor = delta.powi(4) / GAIN_FLOOR_DIVISOR;
    let mut b = b0.clone();
    let mut tel = WeakTelemetry {
        delta,
        gain_floor,
        energies: Vec::new(),
        u2_norms: Vec::new(),
        gains: Vec::new(),
        cells: Vec::new(),
        termination: None,
    };
    loop {
        let proj = conditional_expectation(f, &b)?;
        let g = f.sub(&proj)?;
        let u2 = fourier::u2_norm_interval_with(&*settings.u2, &g)?;
        tel.energies.push(mean_square(&proj));
        tel.u2_norms.push(u2);
        tel.cells.push(b.complexity());
        if u2 <= delta {
            tel.termination = Some(Termination::Uniform);
            break;
        }
        if tel.gains.len() >= max_steps {
            return Err(Error::WeakRegularization {
                steps: tel.gains.len(),
                residual: u2,
                delta,
                telemetry: Box::new(tel),
            });
        }
        match step_on_residual(f, &b, &proj, g, u2, delta, settings)? {
            StepOutcome::NoStep { .. } => {
                tel.termination = Some(Termination::Stalled);
                break;
            }
            StepOutcome::Step { factor, gain, .. } => {
                let before = *tel.energies.last().expect("pushed above");
                let after = energy(f, &factor)?;
                if !(after > before) {
                    tel.termination = Some(Termination::Stalled);
                    break;
                }
                tel.gains.push(gain);
                b = factor;
                if gain < gain_floor {
                    let proj = conditional_expectation(f, &b)?;
                    tel.energies.push(mean_square(&proj));
                    tel.u2_norms
                        .push(fourier::u2_norm_interval_with(&*settings.u2, &f.sub(&proj)?)?);
                    tel.cells.push(b.complexity());
                    tel.termination = Some(Termination::Stalled);
                    break;
                }
            }
        }
    }
    Ok(WeakOutcome {
        factor: b,
        telemetry: tel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn func(v: Vec<f64>) -> IntervalFunction {
        IntervalFunction::new(v).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let f = func(vec![0.0, 1.0, 1.0, 1.0]);
        let trivial = conditional_expectation(&f, &Factor::trivial(4)).unwrap();
        assert!(trivial.values().iter().all(|&v| v == 0.75));
        let discrete = conditional_expectation(&f, &Factor::discrete(4)).unwrap();
        assert_eq!(discrete, f);
        let b = Factor::from_cells(4, vec![vec![1, 2], vec![3, 4]]).unwrap();
        let e = conditional_expectation(&f, &b).unwrap();
        assert_eq!(e.values(), &[0.5, 0.5, 1.0, 1.0]);
        assert_eq!(energy(&f, &b).unwrap(), 5.0 / 8.0);
        assert_eq!(energy(&f, &Factor::trivial(4)).unwrap(), 0.75 * 0.75);
        assert_eq!(energy(&f, &Factor::discrete(4)).unwrap(), 0.75);
    }

    #[test]
    fn bad_partitions_are_rejected() {
        assert!(Factor::from_cells(3, vec![vec![1, 2], vec![]]).is_err());
        assert!(Factor::from_cells(3, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(Factor::from_cells(3, vec![vec![1, 2]]).is_err());
        assert!(Factor::from_cells(3, vec![vec![1, 2], vec![4]]).is_err());
        let f = func(vec![0.0; 5]);
        assert!(conditional_expectation(&f, &Factor::trivial(4)).is_err());
    }

    #[test]
    fn join_examples() {
        let like = func(vec![0.0; 6]);
        let e = MeasurableSet {
            indicator: func(vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
            witnesses: Vec::new(),
            provenance: None,
        };
        let j = Factor::trivial(6).join(Arc::new(e));
        assert_eq!(j.cells(), vec![&[1, 2, 5][..], &[3, 4, 6][..]]);
        assert!(j.refines(&Factor::trivial(6)));
        assert!(j.is_certified());
        let full = j.join(Arc::new(MeasurableSet::constant(&like, true)));
        assert_eq!(full.cells(), j.cells());
        assert_eq!(full.generators().len(), 2);
        let rec = full.record();
        assert_eq!(rec.cells, vec![vec![1, 2, 5], vec![3, 4, 6]]);
    }

    #[test]
    fn measurable_function_takes_no_step() {
        let b = Factor::from_cells(4, vec![vec![1, 2], vec![3, 4]]).unwrap();
        let f = func(vec![0.2, 0.2, 0.9, 0.9]);
        let out = energy_increment_step(&f, &b, 0.01, &Settings::default()).unwrap();
        assert!(matches!(out, StepOutcome::NoStep { u2 } if u2 == 0.0));
    }

    #[test]
    fn half_interval_gains_energy() {
        let f = IntervalFunction::from_fn(64, |n| if n <= 32 { 1.0 } else { 0.0 }).unwrap();
        let b = Factor::trivial(64);
        match energy_increment_step(&f, &b, 0.1, &Settings::default()).unwrap() {
            StepOutcome::Step { factor, gain, .. } => {
                assert!(gain > 0.0);
                let direct = energy(&f, &factor).unwrap() - energy(&f, &b).unwrap();
                assert!((gain - direct).abs() <= 1e-12);
            }
            StepOutcome::NoStep { .. } => panic!("expected a step"),
        }
    }

    #[test]
    fn constant_is_already_uniform() {
        let f = func(vec![0.4; 16]);
        let out = weak_regularize(&f, &Factor::trivial(16), 0.1, 10, &Settings::default()).unwrap();
        assert_eq!(out.factor.complexity(), 1);
        assert_eq!(out.termination(), Termination::Uniform);
    }

    #[test]
    fn exhausted_steps_report_telemetry() {
        let f = IntervalFunction::from_fn(64, |n| ((n * 37) % 11) as f64 / 10.0).unwrap();
        match weak_regularize(&f, &Factor::trivial(64), 1e-6, 1, &Settings::default()) {
            Err(Error::WeakRegularization { steps, telemetry, .. }) => {
                assert_eq!(steps, 1);
                assert_eq!(telemetry.gains.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
