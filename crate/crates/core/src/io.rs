//! JSON problem and policy files, and CSV dumps of value functions.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dp::ValueFunction;
use crate::error::{Error, Result};
use crate::mdp::{Horizon, Mdp, RewardKind};
use crate::policy::WealthMarkovPolicy;
use crate::step::ActionMap;
use crate::wealth::{OrdinalScale, WealthKind, WealthSpace};

/// An MDP together with the wealth space its quantiles are taken in.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mdp: Mdp,
    pub space: WealthSpace,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    mdp: MdpFile,
    wealth_space: WealthFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct MdpFile {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<(usize, usize, usize, f64)>,
    rewards: RewardsFile,
    initial_state: usize,
    horizon: HorizonFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
enum RewardsFile {
    Sa(Vec<Vec<f64>>),
    Sas(Vec<(usize, usize, usize, f64)>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonFile {
    Finite(usize),
    Named(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct WealthFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<String>>,
    /// Class name -> class reached for each reward label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition_table: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
}

impl Problem {
    pub fn new(mdp: Mdp, space: WealthSpace) -> Self {
        Self { mdp, space }
    }

    /// Parses and validates a problem file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        let mdp = file.mdp.into_mdp()?;
        mdp.ensure_valid()?;
        let space = file.wealth_space.into_space(&mdp)?;
        Ok(Self { mdp, space })
    }

    /// Compact JSON; kernels of the larger benchmarks run to millions of
    /// entries.
    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile { mdp: MdpFile::from_mdp(&self.mdp), wealth_space: WealthFile::from_space(&self.space) };
        Ok(serde_json::to_string(&file)?)
    }
}

impl MdpFile {
    fn into_mdp(self) -> Result<Mdp> {
        let horizon = match self.horizon {
            HorizonFile::Finite(t) => Horizon::Finite(t),
            HorizonFile::Named(s) if s == "inf" => Horizon::Infinite,
            HorizonFile::Named(s) => return Err(Error::Config(format!("horizon must be an integer or \"inf\", got {s:?}"))),
        };
        match self.rewards {
            RewardsFile::Sa(values) => {
                Mdp::from_state_action(self.n_states, self.n_actions, self.transitions, values, self.initial_state, horizon)
            }
            RewardsFile::Sas(values) => {
                let mut by_edge = HashMap::with_capacity(values.len());
                for (s, a, next, r) in values {
                    if by_edge.insert((s, a, next), r).is_some() {
                        return Err(Error::Config(format!("duplicate reward for ({s}, {a}, {next})")));
                    }
                }
                let mut entries = Vec::with_capacity(self.transitions.len());
                for (s, a, next, p) in self.transitions {
                    let r = *by_edge
                        .get(&(s, a, next))
                        .ok_or_else(|| Error::Config(format!("no reward for transition ({s}, {a}, {next})")))?;
                    entries.push((s, a, next, p, r));
                }
                Mdp::from_transitions(self.n_states, self.n_actions, entries, self.initial_state, horizon)
            }
        }
    }

    fn from_mdp(m: &Mdp) -> Self {
        let mut transitions = Vec::new();
        let mut sas = Vec::new();
        for (s, a, edges) in m.rows() {
            for e in edges {
                transitions.push((s, a, e.next, e.prob));
                sas.push((s, a, e.next, e.reward));
            }
        }
        let rewards = match m.rewards() {
            RewardKind::StateAction(flat) => RewardsFile::Sa(flat.chunks(m.n_actions().max(1)).map(<[f64]>::to_vec).collect()),
            RewardKind::Transition => RewardsFile::Sas(sas),
        };
        let horizon = match m.horizon() {
            Horizon::Finite(t) => HorizonFile::Finite(t),
            Horizon::Infinite => HorizonFile::Named("inf".into()),
        };
        Self {
            n_states: m.n_states(),
            n_actions: m.n_actions(),
            transitions,
            rewards,
            initial_state: m.initial_state(),
            horizon,
        }
    }
}

impl WealthFile {
    fn into_space(self, m: &Mdp) -> Result<WealthSpace> {
        match self.kind.as_str() {
            "additive" => Ok(WealthSpace::additive(m)),
            "discounted" => {
                let gamma = self.gamma.ok_or_else(|| Error::Config("discounted wealth needs \"gamma\"".into()))?;
                WealthSpace::discounted(m, gamma)
            }
            "ordinal" => {
                let classes = self.classes.ok_or_else(|| Error::Config("ordinal wealth needs \"classes\"".into()))?;
                let named = self
                    .transition_table
                    .ok_or_else(|| Error::Config("ordinal wealth needs \"transition_table\"".into()))?;
                let index = |name: &str| {
                    classes
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| Error::Config(format!("unknown wealth class {name:?}")))
                };
                let mut table = Vec::with_capacity(classes.len());
                for class in &classes {
                    let row = named
                        .get(class)
                        .ok_or_else(|| Error::Config(format!("transition table has no row for {class:?}")))?;
                    table.push(row.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?);
                }
                if let Some(extra) = named.keys().find(|k| !classes.contains(k)) {
                    return Err(Error::Config(format!("unknown wealth class {extra:?}")));
                }
                let initial = match &self.initial {
                    Some(name) => index(name)?,
                    None => 0,
                };
                Ok(WealthSpace::ordinal(OrdinalScale::new(classes, table, initial)?))
            }
            other => Err(Error::Config(format!("unknown wealth space kind {other:?}"))),
        }
    }

    fn from_space(space: &WealthSpace) -> Self {
        match space.kind() {
            WealthKind::Additive => Self { kind: "additive".into(), ..Self::default() },
            WealthKind::Discounted { gamma } => Self { kind: "discounted".into(), gamma: Some(*gamma), ..Self::default() },
            WealthKind::Ordinal(scale) => {
                let classes = scale.classes().to_vec();
                let table = scale
                    .table()
                    .iter()
                    .zip(&classes)
                    .map(|(row, name)| (name.clone(), row.iter().map(|&c| classes[c].clone()).collect()))
                    .collect();
                Self {
                    kind: "ordinal".into(),
                    initial: Some(classes[scale.initial()].clone()),
                    transition_table: Some(table),
                    classes: Some(classes),
                    gamma: None,
                }
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    s: usize,
    intervals: Vec<IntervalFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IntervalFile {
    /// `None` for the first interval, which is unbounded below.
    from: Option<f64>,
    inclusive_from: bool,
    action: usize,
}

pub fn policy_to_json(pi: &WealthMarkovPolicy) -> Result<String> {
    let mut rules = Vec::new();
    for (k, row) in pi.rules().iter().enumerate() {
        for (s, map) in row.iter().enumerate() {
            let intervals = map
                .intervals()
                .map(|(from, inclusive_from, action)| IntervalFile {
                    from: from.is_finite().then_some(from),
                    inclusive_from,
                    action,
                })
                .collect();
            rules.push(RuleFile { t: (!pi.is_stationary()).then_some(k + 1), s, intervals });
        }
    }
    Ok(serde_json::to_string_pretty(&rules)?)
}

pub fn policy_from_json(text: &str) -> Result<WealthMarkovPolicy> {
    let rules: Vec<RuleFile> = serde_json::from_str(text)?;
    if rules.is_empty() {
        return Err(Error::Config("policy file has no rules".into()));
    }
    let stationary = rules[0].t.is_none();
    if rules.iter().any(|r| r.t.is_none() != stationary) {
        return Err(Error::Config("policy file mixes stationary and time-indexed rules".into()));
    }
    let epochs = if stationary { 1 } else { rules.iter().filter_map(|r| r.t).max().unwrap_or(0) };
    let n_states = rules.iter().map(|r| r.s + 1).max().unwrap_or(0);
    let mut table: Vec<Vec<Option<ActionMap>>> = vec![vec![None; n_states]; epochs];
    for rule in rules {
        let k = match rule.t {
            Some(0) => return Err(Error::Config("policy epochs start at t = 1".into())),
            Some(t) => t - 1,
            None => 0,
        };
        let map = interval_map(&rule.intervals)
            .map_err(|e| Error::Config(format!("rule (t={:?}, s={}): {e}", rule.t, rule.s)))?;
        if table[k][rule.s].replace(map).is_some() {
            return Err(Error::Config(format!("duplicate rule for t={:?}, s={}", rule.t, rule.s)));
        }
    }
    let mut out = Vec::with_capacity(epochs);
    for (k, row) in table.into_iter().enumerate() {
        let row: Option<Vec<ActionMap>> = row.into_iter().collect();
        out.push(row.ok_or_else(|| Error::Config(format!("policy is missing a state at epoch {}", k + 1)))?);
    }
    Ok(if stationary {
        WealthMarkovPolicy::stationary(out.pop().expect("one epoch"))
    } else {
        WealthMarkovPolicy::new(out)
    })
}

fn interval_map(intervals: &[IntervalFile]) -> Result<ActionMap> {
    let (first, rest) = intervals.split_first().ok_or_else(|| Error::Config("no intervals".into()))?;
    if first.from.is_some() {
        return Err(Error::Config("first interval must start at null (-inf)".into()));
    }
    let mut entries = Vec::with_capacity(rest.len());
    for iv in rest {
        let from = iv.from.ok_or_else(|| Error::Config("only the first interval may start at null".into()))?;
        entries.push((from, iv.inclusive_from, iv.action));
    }
    ActionMap::from_entries(first.action, entries)
}

/// CSV dump of every value slice: `t,s,threshold,inclusive,value`, the first
/// row of each slice carrying `-inf`.
pub fn value_dump_csv(vf: &ValueFunction) -> String {
    let mut out = String::from("t,s,threshold,inclusive,value\n");
    let epochs = vf.horizon().map_or(1, |t| t + 1);
    for t in 1..=epochs {
        for s in 0..vf.n_states() {
            for (x, incl, v) in vf.slice(t, s).intervals() {
                let t_col = if vf.is_stationary() { String::new() } else { t.to_string() };
                let _ = writeln!(out, "{t_col},{s},{x},{incl},{v}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{generate_garnet, two_state_example, GarnetConfig};

    #[test]
    fn garnet_round_trip() {
        let m = generate_garnet(&GarnetConfig::new(6, 2, 3)).unwrap();
        let p = Problem::new(m.clone(), WealthSpace::additive(&m));
        let back = Problem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn transition_rewards_round_trip() {
        let m = two_state_example(Horizon::Infinite);
        let p = Problem::new(m.clone(), WealthSpace::additive(&m));
        let text = p.to_json().unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(Problem::from_json(&text).unwrap(), p);
    }

    #[test]
    fn ordinal_file() {
        let text = r#"{
            "mdp": {"n_states": 1, "n_actions": 1, "transitions": [[0, 0, 0, 1.0]],
                    "rewards": {"kind": "sa", "values": [[1]]}, "initial_state": 0, "horizon": 2},
            "wealth_space": {"kind": "ordinal", "classes": ["bad", "good"],
                             "transition_table": {"bad": ["bad", "good"], "good": ["good", "good"]}}
        }"#;
        let p = Problem::from_json(text).unwrap();
        assert!(p.space.is_ordinal());
        assert_eq!(p.space.accumulate(0.0, 1.0, 0).unwrap(), 1.0);
        assert_eq!(Problem::from_json(&p.to_json().unwrap()).unwrap(), p);
    }

    #[test]
    fn invalid_kernel_is_a_validation_error() {
        let text = r#"{"mdp": {"n_states": 1, "n_actions": 1, "transitions": [[0, 0, 0, 0.5]],
            "rewards": {"kind": "sa", "values": [[0]]}, "initial_state": 0, "horizon": 1},
            "wealth_space": {"kind": "additive"}}"#;
        assert!(matches!(Problem::from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn policy_round_trip() {
        let map = ActionMap::from_entries(1, vec![(0.5, true, 0), (0.5, false, 1), (2.0, false, 0)]).unwrap();
        let pi = WealthMarkovPolicy::new(vec![vec![map.clone(), ActionMap::constant(0)], vec![ActionMap::constant(1), map]]);
        let back = policy_from_json(&policy_to_json(&pi).unwrap()).unwrap();
        assert_eq!(back, pi);

        let st = WealthMarkovPolicy::stationary(vec![ActionMap::constant(1)]);
        let text = policy_to_json(&st).unwrap();
        assert!(!text.contains("\"t\""));
        assert_eq!(policy_from_json(&text).unwrap(), st);
    }

    #[test]
    fn malformed_policies_rejected() {
        assert!(policy_from_json("[]").is_err());
        assert!(policy_from_json(r#"[{"s": 0, "intervals": [{"from": 1.0, "inclusive_from": true, "action": 0}]}]"#).is_err());
        assert!(policy_from_json(r#"[{"t": 2, "s": 0, "intervals": [{"from": null, "inclusive_from": false, "action": 0}]}]"#).is_err());
    }
}
