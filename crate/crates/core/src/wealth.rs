//! Wealth levels: how rewards accumulate along a history, how the resulting
//! values are ordered, and how far apart they are.
//!
//! Every wealth value is carried as an `f64`. Numeric spaces use it directly;
//! ordinal spaces use the class index `0..m`, so order and distance on indices
//! coincide with the ordinal order and the index distance `|j - i|`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mdp::{Horizon, Mdp};

/// A finite, totally ordered set of wealth classes together with a
/// class-transition table (class × reward label → class).
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalScale {
    classes: Vec<String>,
    /// `table[class][label]` is the class reached after receiving `label`.
    table: Vec<Vec<usize>>,
    initial: usize,
}

impl OrdinalScale {
    pub fn new(classes: Vec<String>, table: Vec<Vec<usize>>, initial: usize) -> Result<Self> {
        let m = classes.len();
        if m == 0 {
            return Err(Error::Config("ordinal scale needs at least one class".into()));
        }
        if table.len() != m {
            return Err(Error::Config(format!(
                "transition table has {} rows for {} classes",
                table.len(),
                m
            )));
        }
        let labels = table[0].len();
        for (i, row) in table.iter().enumerate() {
            if row.len() != labels {
                return Err(Error::Config(format!(
                    "transition table row for class {} has {} labels, expected {}",
                    classes[i],
                    row.len(),
                    labels
                )));
            }
            if let Some(&bad) = row.iter().find(|&&c| c >= m) {
                return Err(Error::Config(format!("transition table refers to class index {bad}")));
            }
        }
        if initial >= m {
            return Err(Error::Config(format!("initial class index {initial} out of range")));
        }
        Ok(Self { classes, table, initial })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.table[0].len()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    /// Class reached from `class` after receiving reward label `label`.
    pub fn step(&self, class: usize, label: usize) -> usize {
        self.table[class][label]
    }

    pub(crate) fn label_of(&self, reward: f64) -> Result<usize> {
        let label = reward.round();
        if (reward - label).abs() > 1e-12 || label < 0.0 || label as usize >= self.n_labels() {
            return Err(Error::Config(format!(
                "reward {reward} is not a transition label in 0..{}",
                self.n_labels()
            )));
        }
        Ok(label as usize)
    }

    pub(crate) fn class_of(&self, w: f64) -> Result<usize> {
        let idx = w.round();
        if (w - idx).abs() > 1e-12 || idx < 0.0 || idx as usize >= self.len() {
            return Err(Error::Argument(format!("{w} is not a class index of this scale")));
        }
        Ok(idx as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WealthKind {
    /// Plain sum of rewards.
    Additive,
    /// `w + gamma^t * r` at timestep index `t` (0 for the first action).
    Discounted { gamma: f64 },
    Ordinal(OrdinalScale),
}

/// The wealth-level space of one problem: the accumulation rule, the left
/// identity `w0`, and the bounds `[w_min, w_max]` of final wealth levels.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthSpace {
    kind: WealthKind,
    w0: f64,
    w_min: f64,
    w_max: f64,
}

impl WealthSpace {
    /// Undiscounted sum of rewards, with bounds fitted to `mdp`.
    ///
    /// For a finite horizon `T` the bounds are `T * r_min` and `T * r_max`.
    /// For an infinite horizon only the side fixed by the reward sign is
    /// finite (`w_max = 0` when all rewards are nonpositive, `w_min = 0` when
    /// all are nonnegative).
    pub fn additive(mdp: &Mdp) -> Self {
        let (r_min, r_max) = mdp.reward_range();
        let (w_min, w_max) = match mdp.horizon() {
            Horizon::Finite(t) => (t as f64 * r_min, t as f64 * r_max),
            Horizon::Infinite => {
                let lo = if r_min >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
                let hi = if r_max <= 0.0 { 0.0 } else { f64::INFINITY };
                (lo, hi)
            }
        };
        Self { kind: WealthKind::Additive, w0: 0.0, w_min, w_max }
    }

    /// Discounted sum of rewards; requires a finite horizon.
    pub fn discounted(mdp: &Mdp, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!("discount factor {gamma} not in (0, 1]")));
        }
        let t = match mdp.horizon() {
            Horizon::Finite(t) => t,
            Horizon::Infinite => {
                return Err(Error::Config(
                    "discounted wealth is only supported for finite horizons".into(),
                ))
            }
        };
        let (r_min, r_max) = mdp.reward_range();
        let weight: f64 = (0..t).map(|i| gamma.powi(i as i32)).sum();
        Ok(Self {
            kind: WealthKind::Discounted { gamma },
            w0: 0.0,
            w_min: r_min * weight,
            w_max: r_max * weight,
        })
    }

    pub fn ordinal(scale: OrdinalScale) -> Self {
        let w0 = scale.initial() as f64;
        let w_max = (scale.len() - 1) as f64;
        Self { kind: WealthKind::Ordinal(scale), w0, w_min: 0.0, w_max }
    }

    /// Replaces the bounds, e.g. with a user-supplied quantile bracket.
    pub fn with_bounds(mut self, w_min: f64, w_max: f64) -> Result<Self> {
        if w_min.is_nan() || w_max.is_nan() || w_min > w_max {
            return Err(Error::Argument(format!("invalid wealth bounds [{w_min}, {w_max}]")));
        }
        if self.is_ordinal() {
            return Err(Error::Unsupported("ordinal bounds are fixed by the class list".into()));
        }
        self.w_min = w_min;
        self.w_max = w_max;
        Ok(self)
    }

    pub fn kind(&self) -> &WealthKind {
        &self.kind
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self.kind, WealthKind::Ordinal(_))
    }

    pub fn ordinal_scale(&self) -> Option<&OrdinalScale> {
        match &self.kind {
            WealthKind::Ordinal(scale) => Some(scale),
            _ => None,
        }
    }

    /// Weight applied to a reward received at timestep index `t`.
    pub(crate) fn discount(&self, t: usize) -> f64 {
        match self.kind {
            WealthKind::Discounted { gamma } => gamma.powi(t as i32),
            _ => 1.0,
        }
    }

    pub fn accumulate(&self, w: f64, r: f64, t: usize) -> Result<f64> {
        match &self.kind {
            WealthKind::Additive => Ok(w + r),
            WealthKind::Discounted { gamma } => Ok(w + gamma.powi(t as i32) * r),
            WealthKind::Ordinal(scale) => {
                let class = scale.class_of(w)?;
                let label = scale.label_of(r)?;
                Ok(scale.step(class, label) as f64)
            }
        }
    }

    /// Total order on wealth levels. Exact: no tolerance is applied here.
    pub fn compare(&self, a: f64, b: f64) -> Ordering {
        a.total_cmp(&b)
    }

    pub fn distance(&self, a: f64, b: f64) -> f64 {
        (a - b).abs()
    }

    /// Mid-elements of `[a, b]`: one midpoint for numeric spaces, the two
    /// central classes for ordinal ones.
    pub fn mid(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if a > b {
            return Err(Error::Argument(format!("mid({a}, {b}) requires a <= b")));
        }
        if self.is_ordinal() {
            Ok(ordinal_mid(a as i64, b as i64))
        } else if a == b {
            Ok(vec![a])
        } else {
            Ok(vec![(a + b) / 2.0])
        }
    }

    /// Immediate predecessor class; the lowest class is its own predecessor.
    pub fn prec(&self, w: f64) -> Result<f64> {
        match &self.kind {
            WealthKind::Ordinal(scale) => {
                let i = scale.class_of(w)?;
                Ok(i.saturating_sub(1) as f64)
            }
            _ => Err(Error::Unsupported("prec is only defined on ordinal wealth spaces".into())),
        }
    }
}

/// Mid-elements of two (possibly sentinel) class indices.
pub(crate) fn ordinal_mid(i: i64, j: i64) -> Vec<f64> {
    let lo = (i + j).div_euclid(2);
    let hi = lo + (i + j).rem_euclid(2);
    if lo == hi {
        vec![lo as f64]
    } else {
        vec![lo as f64, hi as f64]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Mdp;

    fn three_classes() -> WealthSpace {
        let classes = vec!["w1".to_string(), "w2".to_string(), "w3".to_string()];
        // label k moves to max(current, k)
        let table = (0..3).map(|i| (0..3).map(|k| usize::max(i, k)).collect()).collect();
        WealthSpace::ordinal(OrdinalScale::new(classes, table, 0).unwrap())
    }

    fn four_classes() -> WealthSpace {
        let classes = (1..=4).map(|i| format!("w{i}")).collect();
        let table = (0..4).map(|i| vec![i]).collect();
        WealthSpace::ordinal(OrdinalScale::new(classes, table, 0).unwrap())
    }

    fn unit_chain(horizon: usize) -> Mdp {
        Mdp::from_state_action(1, 1, vec![(0, 0, 0, 1.0)], vec![vec![1.0]], 0, Horizon::Finite(horizon))
            .unwrap()
    }

    #[test]
    fn additive_accumulation() {
        let space = WealthSpace::additive(&unit_chain(2));
        let w = space.accumulate(0.0, 1.0, 0).unwrap();
        assert_eq!(space.accumulate(w, -1.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn discounted_accumulation() {
        let space = WealthSpace::discounted(&unit_chain(2), 0.9).unwrap();
        let w = space.accumulate(space.w0(), 1.0, 0).unwrap();
        let w = space.accumulate(w, 1.0, 1).unwrap();
        assert!((w - 1.9).abs() < 1e-15);
        assert!((space.w_max() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn additive_bounds_scale_with_horizon() {
        let m = Mdp::from_state_action(
            1,
            2,
            vec![(0, 0, 0, 1.0), (0, 1, 0, 1.0)],
            vec![vec![0.0, 1.0]],
            0,
            Horizon::Finite(5),
        )
        .unwrap();
        let space = WealthSpace::additive(&m);
        assert_eq!(space.w_max(), 5.0);
        assert_eq!(space.w_min(), 0.0);
    }

    #[test]
    fn compare_orders() {
        let space = WealthSpace::additive(&unit_chain(1));
        assert_eq!(space.compare(1.5, 1.5), Ordering::Equal);
        assert_eq!(space.compare(-1.0, 1.9), Ordering::Less);
        let ord = three_classes();
        assert_eq!(ord.compare(0.0, 1.0), Ordering::Less);
    }

    #[test]
    fn mid_elements() {
        let space = WealthSpace::additive(&unit_chain(5));
        assert_eq!(space.mid(0.0, 5.0).unwrap(), vec![2.5]);
        assert_eq!(space.mid(1.0, 1.0).unwrap(), vec![1.0]);
        assert!(space.mid(2.0, 1.0).is_err());
        let ord = four_classes();
        assert_eq!(ord.mid(0.0, 3.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(ord.mid(2.0, 2.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn mid_minimizes_max_distance_on_ordinal_scales() {
        let ord = four_classes();
        for i in 0..4 {
            for j in i..4 {
                let (a, b) = (i as f64, j as f64);
                let cost = |m: f64| ord.distance(a, m).max(ord.distance(b, m));
                let best = (0..4).map(|k| cost(k as f64)).fold(f64::INFINITY, f64::min);
                let mids = ord.mid(a, b).unwrap();
                for m in &mids {
                    assert_eq!(cost(*m), best);
                }
                let argmins = (0..4).filter(|&k| cost(k as f64) == best).count();
                assert_eq!(argmins, mids.len());
            }
        }
    }

    #[test]
    fn prec_on_ordinal_and_numeric() {
        let ord = three_classes();
        assert_eq!(ord.prec(2.0).unwrap(), 1.0);
        assert_eq!(ord.prec(1.0).unwrap(), 0.0);
        assert_eq!(ord.prec(0.0).unwrap(), 0.0);
        let space = WealthSpace::additive(&unit_chain(1));
        assert!(matches!(space.prec(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ordinal_accumulate_uses_table() {
        let ord = three_classes();
        assert_eq!(ord.accumulate(0.0, 2.0, 0).unwrap(), 2.0);
        assert_eq!(ord.accumulate(2.0, 1.0, 3).unwrap(), 2.0);
        assert!(matches!(ord.accumulate(0.0, 0.5, 0), Err(Error::Config(_))));
        assert!(matches!(ord.accumulate(0.0, 7.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn ordinal_distance_is_index_gap() {
        let ord = four_classes();
        assert_eq!(ord.distance(0.0, 3.0), 3.0);
        assert_eq!(ord.distance(2.0, 1.0), 1.0);
    }

    #[test]
    fn sentinel_mid() {
        assert_eq!(ordinal_mid(-1, 2), vec![0.0, 1.0]);
        assert_eq!(ordinal_mid(-1, 0), vec![-1.0, 0.0]);
    }
}
