//! Piecewise-constant functions of wealth.
//!
//! A function is a base value followed by breakpoints. A breakpoint
//! `(x, inclusive, v)` starts a new piece with value `v` at `x` itself when
//! `inclusive`, or just after `x` otherwise. At a single threshold `x` there
//! may therefore be two breakpoints, `(x, true)` then `(x, false)`, which
//! isolates the atom `{x}`. Breakpoints are strictly increasing in the order
//! `x⁻ < x⁺`, thresholds closer than [`WEALTH_TOL`] count as equal, and
//! adjacent pieces never repeat a value.

use crate::error::{Error, Result};
use crate::wealth::{WealthKind, WealthSpace};
use crate::WEALTH_TOL;

/// Values closer than this are merged when canonicalizing.
pub const VALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint<V> {
    pub threshold: f64,
    pub inclusive: bool,
    pub value: V,
}

impl<V> Breakpoint<V> {
    /// Whether this breakpoint is at or before wealth `w`, i.e. `w` lies in
    /// its piece or a later one.
    fn starts_by(&self, w: f64) -> bool {
        let gap = self.threshold - w;
        if gap.abs() <= WEALTH_TOL {
            self.inclusive
        } else {
            gap < 0.0
        }
    }

    /// Whether this breakpoint comes strictly after the position `(x, incl)`.
    fn after(&self, x: f64, inclusive: bool) -> bool {
        let gap = self.threshold - x;
        if gap.abs() <= WEALTH_TOL {
            inclusive && !self.inclusive
        } else {
            gap > 0.0
        }
    }
}

/// A piecewise-constant map from wealth to `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<V> {
    base: V,
    pieces: Vec<Breakpoint<V>>,
}

/// Probability-valued function of wealth: target utilities and value slices.
pub type StepFunction = Piecewise<f64>;

/// Action choice as a function of wealth, for one state and timestep.
pub type ActionMap = Piecewise<usize>;

impl<V: Copy + PartialEq> Piecewise<V> {
    pub fn constant(value: V) -> Self {
        Self { base: value, pieces: Vec::new() }
    }

    pub fn base(&self) -> V {
        self.base
    }

    pub fn pieces(&self) -> &[Breakpoint<V>] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn eval(&self, w: f64) -> V {
        let k = self.pieces.partition_point(|bp| bp.starts_by(w));
        if k == 0 {
            self.base
        } else {
            self.pieces[k - 1].value
        }
    }

    /// Restricts the function to `[lo, hi]` and extends it by constants
    /// outside. Values on the closed window are unchanged.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        let start = self.pieces.partition_point(|bp| bp.starts_by(lo));
        let base = self.eval(lo);
        let mut pieces = Vec::new();
        let mut last = base;
        for bp in &self.pieces[start..] {
            if bp.after(hi, true) {
                break;
            }
            if bp.value != last {
                pieces.push(*bp);
                last = bp.value;
            }
        }
        Self { base, pieces }
    }

    /// Iterates `(from, inclusive_from, value)`; the first entry has
    /// `from = -inf`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, bool, V)> + '_ {
        std::iter::once((f64::NEG_INFINITY, false, self.base))
            .chain(self.pieces.iter().map(|bp| (bp.threshold, bp.inclusive, bp.value)))
    }

    fn from_raw(base: V, raw: Vec<Breakpoint<V>>, same: impl Fn(V, V) -> bool) -> Self {
        let mut pieces: Vec<Breakpoint<V>> = Vec::with_capacity(raw.len());
        let mut last = base;
        for bp in raw {
            if !same(last, bp.value) {
                last = bp.value;
                pieces.push(bp);
            }
        }
        Self { base, pieces }
    }
}

impl ActionMap {
    /// Builds an action map from `(threshold, inclusive, action)` entries in
    /// increasing position order.
    pub fn from_entries(base: usize, entries: Vec<(f64, bool, usize)>) -> Result<Self> {
        let raw = checked_breakpoints(entries)?;
        Ok(Self::from_raw(base, raw, |a, b| a == b))
    }

    pub fn max_action(&self) -> usize {
        self.pieces.iter().map(|bp| bp.value).fold(self.base, usize::max)
    }
}

fn checked_breakpoints<V: Copy>(entries: Vec<(f64, bool, V)>) -> Result<Vec<Breakpoint<V>>> {
    let raw: Vec<Breakpoint<V>> = entries
        .into_iter()
        .map(|(threshold, inclusive, value)| Breakpoint { threshold, inclusive, value })
        .collect();
    for pair in raw.windows(2) {
        if !pair[1].after(pair[0].threshold, pair[0].inclusive) {
            return Err(Error::Argument(format!(
                "breakpoints out of order at {} / {}",
                pair[0].threshold, pair[1].threshold
            )));
        }
    }
    if let Some(bp) = raw.iter().find(|bp| !bp.threshold.is_finite()) {
        return Err(Error::Argument(format!("threshold {} is not finite", bp.threshold)));
    }
    Ok(raw)
}

/// One input of a sweep: a function shifted left by `offset`, i.e. the
/// function `x ↦ f(x + offset)`.
struct Shifted<'a> {
    f: &'a StepFunction,
    offset: f64,
}

/// Walks the merged partition of several functions. `combine` maps the
/// inputs' current values to the output value of each region.
fn sweep<R: Copy>(inputs: &[Shifted<'_>], mut combine: impl FnMut(&[f64]) -> R) -> (R, Vec<Breakpoint<R>>) {
    struct Event {
        x: f64,
        inclusive: bool,
        input: usize,
        value: f64,
    }
    let total: usize = inputs.iter().map(|i| i.f.pieces.len()).sum();
    let mut events = Vec::with_capacity(total);
    for (idx, input) in inputs.iter().enumerate() {
        for bp in &input.f.pieces {
            events.push(Event { x: bp.threshold - input.offset, inclusive: bp.inclusive, input: idx, value: bp.value });
        }
    }
    events.sort_by(|a, b| a.x.total_cmp(&b.x));

    let mut current: Vec<f64> = inputs.iter().map(|i| i.f.base).collect();
    let base = combine(&current);
    let mut out = Vec::with_capacity(total);
    let mut i = 0;
    while i < events.len() {
        let anchor = events[i].x;
        let mut j = i;
        while j < events.len() && events[j].x - anchor <= WEALTH_TOL {
            j += 1;
        }
        let group = &events[i..j];
        for inclusive in [true, false] {
            let mut touched = false;
            for e in group.iter().filter(|e| e.inclusive == inclusive) {
                current[e.input] = e.value;
                touched = true;
            }
            if touched {
                out.push(Breakpoint { threshold: anchor, inclusive, value: combine(&current) });
            }
        }
        i = j;
    }
    (base, out)
}

fn clamp_probability(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

impl StepFunction {
    /// Builds a step function from explicit breakpoints, merging repeated
    /// values. Values must be probabilities.
    pub fn new(base: f64, entries: Vec<(f64, bool, f64)>) -> Result<Self> {
        let raw = checked_breakpoints(entries)?;
        if std::iter::once(base).chain(raw.iter().map(|bp| bp.value)).any(|v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Argument("step function values must lie in [0, 1]".into()));
        }
        Ok(Self::from_raw(base, raw, same_value))
    }

    /// Indicator of `{x : w ◁ x}`, where `◁` is `<` when `strict` and `<=`
    /// otherwise.
    pub fn target_utility(w: f64, strict: bool) -> Self {
        Self { base: 0.0, pieces: vec![Breakpoint { threshold: w, inclusive: !strict, value: 1.0 }] }
    }

    /// The function `x ↦ self(x ∘ r)` for a reward received at timestep
    /// index `t`.
    pub fn shift(&self, reward: f64, t: usize, space: &WealthSpace) -> Result<Self> {
        match space.kind() {
            WealthKind::Ordinal(_) => self.pull_back(reward, space),
            _ => Ok(self.translate(space.discount(t) * reward)),
        }
    }

    /// `x ↦ self(x + offset)`.
    pub(crate) fn translate(&self, offset: f64) -> Self {
        if offset == 0.0 {
            return self.clone();
        }
        Self {
            base: self.base,
            pieces: self
                .pieces
                .iter()
                .map(|bp| Breakpoint { threshold: bp.threshold - offset, ..*bp })
                .collect(),
        }
    }

    /// Pullback through an ordinal transition table, evaluated class by class.
    pub(crate) fn pull_back(&self, reward: f64, space: &WealthSpace) -> Result<Self> {
        let scale = space
            .ordinal_scale()
            .ok_or_else(|| Error::Config("ordinal pullback needs a transition table".into()))?;
        let label = scale.label_of(reward)?;
        let values: Vec<f64> = (0..scale.len()).map(|c| self.eval(scale.step(c, label) as f64)).collect();
        let raw = values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, &v)| Breakpoint { threshold: c as f64, inclusive: true, value: v })
            .collect();
        Ok(Self::from_raw(values[0], raw, same_value))
    }

    /// Pointwise convex combination `Σ weight_i f_i`.
    pub fn combine(terms: &[(f64, &StepFunction)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Argument("combine needs at least one term".into()));
        }
        if let Some((w, _)) = terms.iter().find(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Argument(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("weights sum to {total}, expected 1")));
        }
        let shifted: Vec<(f64, &StepFunction, f64)> = terms.iter().map(|&(w, f)| (w, f, 0.0)).collect();
        Ok(Self::combine_shifted(&shifted))
    }

    /// `x ↦ Σ weight_i f_i(x + offset_i)` without argument checks.
    pub(crate) fn combine_shifted(terms: &[(f64, &StepFunction, f64)]) -> Self {
        let inputs: Vec<Shifted<'_>> = terms.iter().map(|&(_, f, offset)| Shifted { f, offset }).collect();
        let weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let (base, raw) = sweep(&inputs, |vals| {
            clamp_probability(weights.iter().zip(vals).map(|(w, v)| w * v).sum())
        });
        Self::from_raw(base, raw, same_value)
    }

    /// Upper envelope, together with the smallest index attaining it on each
    /// piece (ties within [`VALUE_TOL`] go to the lower index).
    pub fn pointwise_max(fs: &[StepFunction]) -> Result<(Self, ActionMap)> {
        if fs.is_empty() {
            return Err(Error::Argument("pointwise_max needs at least one function".into()));
        }
        Ok(Self::envelope(fs))
    }

    pub(crate) fn envelope(fs: &[StepFunction]) -> (Self, ActionMap) {
        let inputs: Vec<Shifted<'_>> = fs.iter().map(|f| Shifted { f, offset: 0.0 }).collect();
        let (base, raw) = sweep(&inputs, |vals| {
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let arg = vals.iter().position(|&v| v >= best - VALUE_TOL).unwrap_or(0);
            (best, arg)
        });
        let values = Self::from_raw(
            base.0,
            raw.iter().map(|bp| Breakpoint { threshold: bp.threshold, inclusive: bp.inclusive, value: bp.value.0 }).collect(),
            same_value,
        );
        let actions = ActionMap::from_raw(
            base.1,
            raw.iter().map(|bp| Breakpoint { threshold: bp.threshold, inclusive: bp.inclusive, value: bp.value.1 }).collect(),
            |a, b| a == b,
        );
        (values, actions)
    }

    /// Exact sup-norm distance, taken over the merged partition.
    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        let inputs = [Shifted { f: self, offset: 0.0 }, Shifted { f: other, offset: 0.0 }];
        let (base, raw) = sweep(&inputs, |vals| (vals[0] - vals[1]).abs());
        raw.iter().map(|bp| bp.value).fold(base, f64::max)
    }

    pub fn is_nondecreasing(&self) -> bool {
        let mut last = self.base;
        for bp in &self.pieces {
            if bp.value < last - VALUE_TOL {
                return false;
            }
            last = bp.value;
        }
        true
    }
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOL
}
