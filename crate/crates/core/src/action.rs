//! Action vocabulary on the circumplex, the reaction network, and the two
//! ways of walking it: uniformly, or weighted toward the tension arc.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arc::{target_delta, ArcCurve};
use crate::error::{Error, Result};
use crate::registry::{ObjectKind, Registry};
use crate::rng::RandomSource;
use crate::sequence::{MaskSlot, PanelSequence};

pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Walk lengths beyond this are refused by [`count_paths`].
pub const MAX_PATH_ENUMERATION: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDef {
    pub name: String,
    /// Pleasantness, in `[-1, 1]`.
    pub valence: f64,
    /// Arousal on the tension scale, in `[-5, 5]`.
    pub activation: f64,
    #[serde(default)]
    pub reactions: Vec<String>,
    #[serde(default)]
    pub symbols: Vec<String>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub height_level: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionNode {
    pub name: String,
    pub valence: f64,
    pub activation: f64,
}

/// Directed action -> reaction graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionNetwork {
    nodes: Vec<ActionNode>,
    index: BTreeMap<String, usize>,
    edges: Vec<Vec<usize>>,
}

impl ActionNetwork {
    /// Builds from `(name, activation)` nodes and `(from, to)` edges.
    pub fn from_edges(nodes: &[(&str, f64)], edges: &[(&str, &str)]) -> Result<Self> {
        let mut reg = Registry::new();
        for (name, activation) in nodes {
            reg.register_object(
                name,
                crate::registry::ObjectDef::new(ObjectKind::Action).with("activation", *activation),
            );
        }
        for (from, to) in edges {
            reg.register_relation(from, "reaction", to)?;
        }
        Self::from_registry(&reg)
    }

    /// Reads action objects and their `reaction` relations.
    pub fn from_registry(reg: &Registry) -> Result<Self> {
        let nodes: Vec<ActionNode> = reg
            .objects_of(ObjectKind::Action)
            .map(|(name, def)| ActionNode {
                name: name.to_string(),
                valence: def.attr("valence").unwrap_or(0.0),
                activation: def.attr("activation").unwrap_or(0.0),
            })
            .collect();
        let index: BTreeMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        let mut edges = vec![Vec::new(); nodes.len()];
        for (from, rel, to) in reg.relations() {
            if rel != "reaction" {
                continue;
            }
            let (Some(&f), Some(&t)) = (index.get(from), index.get(to)) else {
                return Err(Error::UnknownAction(format!("{from} -> {to}")));
            };
            edges[f].push(t);
        }
        for e in edges.iter_mut() {
            e.sort_unstable();
            e.dedup();
        }
        Ok(Self { nodes, index, edges })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ActionNode] {
        &self.nodes
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.nodes[id].name
    }

    pub fn activation(&self, id: usize) -> f64 {
        self.nodes[id].activation
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.edges[id]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Out-neighbours of `action`.
    pub fn reactions(&self, action: &str) -> Result<BTreeSet<String>> {
        let id = self.id(action)?;
        Ok(self.edges[id].iter().map(|t| self.nodes[*t].name.clone()).collect())
    }

    /// Fewest edges from any of `from` to any of `to`, with the path.
    pub fn shortest_path(&self, from: &[usize], to: &BTreeSet<usize>) -> Option<Vec<usize>> {
        let mut prev: Vec<Option<usize>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for &s in from {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.edges[u] {
                if to.contains(&v) {
                    let mut path = vec![v, u];
                    let mut cur = u;
                    while let Some(p) = prev[cur] {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Selection probabilities: each candidate weighs `1 / max(eps, |delta - a_j|)`
/// where `delta` is the wanted tension change, then the weights are normalised.
pub fn selection_weights(activations: &[f64], current: f64, next: f64, epsilon: f64) -> Vec<f64> {
    weights_for_delta(activations, target_delta(current, next), epsilon)
}

pub fn weights_for_delta(activations: &[f64], delta: f64, epsilon: f64) -> Vec<f64> {
    let raw: Vec<f64> = activations
        .iter()
        .map(|a| 1.0 / (delta - a).abs().max(epsilon))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// One character's walk over `len` panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub actions: Vec<usize>,
    /// Panels where the walk restarted after a dead end.
    pub restarts: Vec<usize>,
}

/// Walks the network from `start` (uniform when `None`), choosing each next
/// action with `choose(step, current, candidates)`. Dead ends restart from a
/// uniform node.
fn walk_with(
    network: &ActionNetwork,
    start: Option<usize>,
    len: usize,
    rng: &mut RandomSource,
    mut choose: impl FnMut(usize, &[usize], &mut RandomSource) -> usize,
) -> Result<Walk> {
    if network.is_empty() {
        return Err(Error::Invalid("action network is empty".into()));
    }
    let mut actions = Vec::with_capacity(len);
    let mut restarts = Vec::new();
    if len == 0 {
        return Ok(Walk { actions, restarts });
    }
    actions.push(start.unwrap_or_else(|| rng.below(network.len())));
    for step in 1..len {
        let cur = actions[step - 1];
        let candidates = network.successors(cur);
        let next = if candidates.is_empty() {
            restarts.push(step);
            rng.below(network.len())
        } else {
            candidates[choose(step, candidates, rng)]
        };
        actions.push(next);
    }
    Ok(Walk { actions, restarts })
}

/// Uniform walk; `start` pins the first action.
pub fn walk(
    network: &ActionNetwork,
    start: Option<&str>,
    len: usize,
    rng: &mut RandomSource,
) -> Result<Walk> {
    let start = start.map(|s| network.id(s)).transpose()?;
    walk_with(network, start, len, rng, |_, c, rng| rng.below(c.len()))
}

fn write_walk(
    sequence: &mut PanelSequence,
    network: &ActionNetwork,
    slot: MaskSlot,
    walk: &Walk,
    layer: &str,
) {
    for (panel, id) in sequence.panels.iter_mut().zip(&walk.actions) {
        if let Some(c) = panel.in_slot_mut(slot) {
            c.action = network.name(*id).to_string();
        }
    }
    for step in &walk.restarts {
        sequence.note(format!(
            "{layer}: {slot:?} walk hit a dead end before panel {step}; restarted from a random action"
        ));
    }
}

fn occupied_slots(sequence: &PanelSequence) -> Vec<MaskSlot> {
    MaskSlot::ALL
        .into_iter()
        .filter(|s| sequence.panels.iter().any(|p| p.in_slot(*s).is_some()))
        .collect()
}

/// Each character starts from a uniform action and follows uniform reactions.
pub fn random_walk(
    mut sequence: PanelSequence,
    network: &ActionNetwork,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    let n = sequence.len();
    for slot in occupied_slots(&sequence) {
        let w = walk(network, None, n, rng)?;
        write_walk(&mut sequence, network, slot, &w, "action");
    }
    Ok(sequence)
}

/// Each character starts from a uniform action; every next action is drawn
/// from the current action's reactions with [`selection_weights`] toward the
/// arc's change between the two panels. A forward revision sweep then swaps
/// any action that is not a reaction of its predecessor for the heaviest
/// feasible one.
pub fn arc_guided_walk(
    mut sequence: PanelSequence,
    network: &ActionNetwork,
    arc: &ArcCurve,
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    if arc.len() != sequence.len() {
        return Err(Error::Invalid(format!(
            "arc has {} points for {} panels",
            arc.len(),
            sequence.len()
        )));
    }
    let deltas = arc.deltas();
    let n = sequence.len();
    for slot in occupied_slots(&sequence) {
        let mut w = walk_with(network, None, n, rng, |step, cands, rng| {
            let acts: Vec<f64> = cands.iter().map(|c| network.activation(*c)).collect();
            let weights = weights_for_delta(&acts, deltas[step - 1], epsilon);
            rng.pick_weighted(&weights).unwrap_or(0)
        })?;
        let revised = revise_walk(&mut w.actions, network, Some(&deltas), epsilon);
        write_walk(&mut sequence, network, slot, &w, "action");
        if revised > 0 {
            sequence.note(format!("action: revised {revised} {slot:?} actions to restore adjacency"));
        }
    }
    Ok(sequence)
}

/// Single forward sweep replacing any action that is not a reaction of its
/// predecessor. Replacement is the reaction of maximal weight toward the arc
/// delta, or of activation closest to 0 without an arc. Returns the number of
/// replacements.
pub fn revise_walk(
    actions: &mut [usize],
    network: &ActionNetwork,
    deltas: Option<&[f64]>,
    epsilon: f64,
) -> usize {
    let mut revised = 0;
    for i in 1..actions.len() {
        let prev = actions[i - 1];
        if network.has_edge(prev, actions[i]) || network.successors(prev).is_empty() {
            continue;
        }
        let cands = network.successors(prev);
        let delta = deltas.map(|d| d[i - 1]).unwrap_or(0.0);
        let acts: Vec<f64> = cands.iter().map(|c| network.activation(*c)).collect();
        let weights = weights_for_delta(&acts, delta, epsilon);
        let best = weights
            .iter()
            .enumerate()
            .fold(0, |best, (j, w)| if *w > weights[best] { j } else { best });
        actions[i] = cands[best];
        revised += 1;
    }
    revised
}

/// Mean over characters and gutters of `|a(next action) - arc delta|`: how far
/// the tension change each chosen action carries is from the one the arc asks for.
pub fn arc_tracking_error(
    sequence: &PanelSequence,
    network: &ActionNetwork,
    arc: &ArcCurve,
) -> Result<f64> {
    if arc.len() != sequence.len() {
        return Err(Error::Invalid("arc and sequence lengths differ".into()));
    }
    let deltas = arc.deltas();
    let mut total = 0.0;
    let mut count = 0usize;
    for slot in occupied_slots(sequence) {
        for (i, delta) in deltas.iter().enumerate() {
            if let Some(c) = sequence.panels[i + 1].in_slot(slot) {
                let a = network.activation(network.id(&c.action)?);
                total += (a - delta).abs();
                count += 1;
            }
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Tension the actions actually carry: starts at the first target (or 0) and
/// moves by the mean activation of each later panel's characters.
pub fn realized_scores(sequence: &PanelSequence, network: &ActionNetwork) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(sequence.len());
    let mut value = sequence.panels.first().and_then(|p| p.tension).unwrap_or(0.0);
    for (i, panel) in sequence.panels.iter().enumerate() {
        if i > 0 && !panel.characters.is_empty() {
            let mut sum = 0.0;
            for c in &panel.characters {
                sum += network.activation(network.id(&c.action)?);
            }
            value = (value + sum / panel.characters.len() as f64).clamp(0.0, 10.0);
        }
        out.push(value);
    }
    Ok(out)
}

/// Consecutive per-character action pairs that are not network edges.
pub fn adjacency_violations(sequence: &PanelSequence, network: &ActionNetwork) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for w in sequence.panels.windows(2) {
        for c in &w[1].characters {
            if let Some(prev) = w[0].in_slot(c.mask_slot) {
                let (a, b) = (network.id(&prev.action)?, network.id(&c.action)?);
                if !network.has_edge(a, b) {
                    out.push((w[1].index, prev.action.clone(), c.action.clone()));
                }
            }
        }
    }
    Ok(out)
}

/// Distinct walks with exactly `k` edges, counted by depth-first enumeration.
pub fn count_paths(network: &ActionNetwork, k: usize) -> Result<u64> {
    if k < 1 {
        return Err(Error::Invalid("walk length must be at least 1".into()));
    }
    if k > MAX_PATH_ENUMERATION {
        return Err(Error::Guardrail(format!(
            "walk length {k} exceeds the enumeration limit of {MAX_PATH_ENUMERATION}"
        )));
    }
    fn dfs(network: &ActionNetwork, node: usize, remaining: usize) -> u64 {
        if remaining == 0 {
            return 1;
        }
        network
            .successors(node)
            .iter()
            .map(|n| dfs(network, *n, remaining - 1))
            .sum()
    }
    Ok((0..network.len()).map(|s| dfs(network, s, k)).sum())
}

/// `(p-2)! / (p-2-k)!`, the falling factorial of `p - 2` over `k` terms.
pub fn path_upper_bound(p: usize, k: usize) -> Result<u128> {
    if k < 1 || p < k + 2 {
        return Err(Error::Invalid(format!("path bound needs k >= 1 and p >= k + 2 (p = {p}, k = {k})")));
    }
    let top = (p - 2) as u128;
    (0..k as u128).try_fold(1u128, |acc, i| {
        acc.checked_mul(top - i)
            .ok_or_else(|| Error::Overflow(format!("path bound for p = {p}, k = {k}")))
    })
}
