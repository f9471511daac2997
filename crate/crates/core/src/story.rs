//! Story assertions (subject, relation, object, owner triples), the links they
//! induce onto scenes, cast and action pools, and the constraint pass that
//! makes a sequence act the story out.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::action::ActionNetwork;
use crate::error::{Error, Result};
use crate::grammar::PhaseCategory;
use crate::layout::{transition_holds, TransitionContext, TransitionKind};
use crate::pack::ContentPack;
use crate::rng::RandomSource;
use crate::sequence::{resize_sequence, MaskSlot, PanelSequence};

pub const LOCATION_RELATION: &str = "location_on";
pub const ACTION_RELATION: &str = "action";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub l: Vec<String>,
    pub relation: String,
    pub r: Vec<String>,
    pub r_owner: Option<String>,
    pub order: usize,
}

fn string_list(v: Option<&Value>, field: &str, index: usize) -> Result<Vec<String>> {
    let bad = |reason: String| Error::AssertionParse { index, reason };
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(vec![s.trim().to_string()]),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| {
                i.as_str()
                    .map(|s| s.trim().to_string())
                    .ok_or_else(|| bad(format!("`{field}` holds a non-string")))
            })
            .collect(),
        Some(_) => Err(bad(format!("`{field}` must be a string or a list of strings"))),
    }
}

/// Parses an assertion array. `relation` and `r_owner` may be a string or a
/// one-element list; `tense` and `properties` are accepted and ignored. The
/// result is stably sorted by `order`, which defaults to the record position.
pub fn load_assertions(text: &str) -> Result<Vec<Assertion>> {
    let doc: Value = serde_json::from_str(text)?;
    let records = doc
        .as_array()
        .ok_or_else(|| Error::Json("assertion document must be an array".into()))?;
    let mut out = Vec::with_capacity(records.len());
    for (index, rec) in records.iter().enumerate() {
        let bad = |reason: &str| Error::AssertionParse {
            index,
            reason: reason.to_string(),
        };
        let obj = rec.as_object().ok_or_else(|| bad("record is not an object"))?;
        let l = string_list(obj.get("l"), "l", index)?;
        if l.is_empty() || l.iter().any(String::is_empty) {
            return Err(bad("`l` needs at least one subject"));
        }
        let relation = string_list(obj.get("relation"), "relation", index)?;
        let relation = match relation.as_slice() {
            [] => return Err(bad("missing `relation`")),
            [one] if !one.is_empty() => one.clone(),
            [_] => return Err(bad("empty `relation`")),
            _ => return Err(bad("`relation` must name exactly one predicate")),
        };
        let r = string_list(obj.get("r"), "r", index)?;
        let r_owner = string_list(obj.get("r_owner"), "r_owner", index)?.into_iter().next();
        let order = match obj.get("order") {
            None => index,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| bad("`order` must be a non-negative integer"))? as usize,
        };
        out.push(Assertion { l, relation, r, r_owner, order });
    }
    out.sort_by_key(|a| a.order);
    Ok(out)
}

/// One action-bearing assertion: who acts and which actions realise it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beat {
    pub order: usize,
    pub relation: String,
    /// Label the pool was looked up by.
    pub key: String,
    pub subjects: Vec<String>,
    pub pool: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    pub scene: Option<String>,
    /// Character ids in slot order.
    pub cast: Vec<String>,
    pub beats: Vec<Beat>,
    pub warnings: Vec<String>,
}

impl LinkTable {
    pub fn is_empty(&self) -> bool {
        self.scene.is_none() && self.cast.is_empty() && self.beats.is_empty()
    }
}

/// Binds locations to a scene, subjects to slots, and every other relation
/// to the pool of actions carrying the matching label. `action` assertions
/// look up their object (`B action angry` uses the `angry` label); other
/// relations use the relation name (`A has apple` uses `has`). The owner of
/// the object takes part in the beat alongside the subjects.
pub fn derive_links(assertions: &[Assertion], pack: &ContentPack) -> Result<LinkTable> {
    let mut links = LinkTable::default();
    for a in assertions {
        for id in &a.l {
            if !links.cast.contains(id) {
                if links.cast.len() < MaskSlot::ALL.len() {
                    links.cast.push(id.clone());
                } else {
                    links
                        .warnings
                        .push(format!("assertion {}: no free slot for `{id}`; ignored", a.order));
                }
            }
        }
    }
    for a in assertions {
        if a.relation == LOCATION_RELATION {
            let loc = a.r.first().ok_or_else(|| Error::AssertionParse {
                index: a.order,
                reason: "location_on without a location".into(),
            })?;
            let scene = pack.scene_for_location(loc)?.id.clone();
            match &links.scene {
                None => links.scene = Some(scene),
                Some(s) if *s != scene => links.warnings.push(format!(
                    "assertion {}: sequence already set in `{s}`; `{loc}` ignored",
                    a.order
                )),
                Some(_) => {}
            }
            continue;
        }
        let key = if a.relation == ACTION_RELATION {
            match a.r.first() {
                Some(k) => k.to_lowercase(),
                None => {
                    links.warnings.push(format!("assertion {}: action without an object; skipped", a.order));
                    continue;
                }
            }
        } else {
            a.relation.to_lowercase()
        };
        let mut pool = pack.pool(&key);
        if pool.is_empty() && pack.action(&key).is_ok() {
            pool.insert(key.clone());
        }
        if pool.is_empty() {
            links
                .warnings
                .push(format!("assertion {}: no actions linked to `{key}`; skipped", a.order));
            continue;
        }
        let mut subjects: Vec<String> = Vec::new();
        for id in a.l.iter().chain(a.r_owner.iter()) {
            if links.cast.contains(id) && !subjects.contains(id) {
                subjects.push(id.clone());
            }
        }
        links.beats.push(Beat {
            order: a.order,
            relation: a.relation.clone(),
            key,
            subjects,
            pool,
        });
    }
    Ok(links)
}

/// Proportional contiguous spans: beat `j` of `k` covers panels
/// `floor(j n / k) .. floor((j + 1) n / k)`. Needs `n >= k`.
pub fn allocate_spans(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|j| j * n / k..(j + 1) * n / k).collect()
}

/// Forward reachable sets under per-panel allowed sets (`None` = any action).
/// Returns the first panel whose set is empty, if any.
fn reachable(network: &ActionNetwork, allowed: &[Option<BTreeSet<usize>>]) -> (Vec<BTreeSet<usize>>, Option<usize>) {
    let all: BTreeSet<usize> = (0..network.len()).collect();
    let mut sets: Vec<BTreeSet<usize>> = Vec::with_capacity(allowed.len());
    for (i, a) in allowed.iter().enumerate() {
        let base = a.clone().unwrap_or_else(|| all.clone());
        let set: BTreeSet<usize> = if i == 0 {
            base
        } else {
            sets[i - 1]
                .iter()
                .flat_map(|u| network.successors(*u).iter().copied())
                .filter(|v| base.contains(v))
                .collect()
        };
        if set.is_empty() {
            return (sets, Some(i));
        }
        sets.push(set);
    }
    (sets, None)
}

/// Makes the sequence follow the links: bound scene everywhere, cast renamed
/// by slot, and each beat's subjects acting from its pool over its span, in
/// story order. Actions are chosen by a backward pass over forward-reachable
/// sets, so neighbours stay network-adjacent; an action already in place is
/// kept when it fits. If no walk exists, bridging panels found by shortest
/// path are inserted before the first unreachable panel.
pub fn constrain_sequence(
    mut sequence: PanelSequence,
    links: &LinkTable,
    pack: &ContentPack,
    network: &ActionNetwork,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    if links.is_empty() {
        return Ok(sequence);
    }
    let k = links.beats.len();
    if sequence.len() < k {
        sequence.note(format!("story: grew sequence from {} to {k} panels to fit the story", sequence.len()));
        sequence = resize_sequence(sequence, k, &pack.defaults)?;
    }
    if let Some(scene) = &links.scene {
        for p in sequence.panels.iter_mut() {
            p.scene = Some(scene.clone());
        }
    }
    for p in sequence.panels.iter_mut() {
        for (name, slot) in links.cast.iter().zip(MaskSlot::ALL) {
            let Some(c) = p.in_slot_mut(slot) else { continue };
            let old = std::mem::replace(&mut c.character_id, name.clone());
            for b in p.balloons.iter_mut().filter(|b| b.owner == old) {
                b.owner = name.clone();
            }
            for s in p.symbols.iter_mut().filter(|s| s.owner == old) {
                s.owner = name.clone();
            }
        }
    }
    for w in &links.warnings {
        sequence.note(format!("story: {w}"));
    }
    if k == 0 {
        return Ok(sequence);
    }

    let pools: Vec<BTreeSet<usize>> = links
        .beats
        .iter()
        .map(|b| b.pool.iter().map(|a| network.id(a)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut beat_of: Vec<Option<usize>> = vec![None; sequence.len()];
    for (j, span) in allocate_spans(sequence.len(), k).into_iter().enumerate() {
        for i in span {
            beat_of[i] = Some(j);
        }
    }

    let slots: Vec<MaskSlot> = links.cast.iter().zip(MaskSlot::ALL).map(|(_, s)| s).collect();
    let budget = 4 * (sequence.len() + network.len());
    let mut inserted = 0usize;
    let sets = 'search: loop {
        let mut per_slot = Vec::with_capacity(slots.len());
        for (slot, name) in slots.iter().zip(&links.cast) {
            let allowed: Vec<Option<BTreeSet<usize>>> = beat_of
                .iter()
                .map(|b| b.filter(|j| links.beats[*j].subjects.contains(name)).map(|j| pools[j].clone()))
                .collect();
            let (sets, fail) = reachable(network, &allowed);
            if let Some(f) = fail {
                let target = allowed[f].clone().expect("unconstrained panels are always reachable");
                let path = network.shortest_path(&sets[f - 1].iter().copied().collect::<Vec<_>>(), &target);
                let Some(path) = path else {
                    return Err(Error::Constraint {
                        kind: "story".into(),
                        reason: format!(
                            "beat `{}` for `{name}` cannot be reached from panel {}",
                            links.beats[beat_of[f].expect("constrained")].key,
                            f - 1
                        ),
                    });
                };
                let bridges = path.len() - 2;
                if inserted + bridges > budget {
                    return Err(Error::Constraint {
                        kind: "story".into(),
                        reason: "bridging did not converge".into(),
                    });
                }
                insert_bridges(&mut sequence, f, bridges);
                for _ in 0..bridges {
                    beat_of.insert(f, None);
                }
                inserted += bridges;
                sequence.note(format!(
                    "story: inserted {bridges} bridging panel(s) before panel {f} so `{name}` can reach `{}`",
                    links.beats[beat_of[f + bridges].expect("constrained")].key
                ));
                continue 'search;
            }
            per_slot.push((*slot, sets));
        }
        break per_slot;
    };
    if inserted > 0 && sequence.grammar.is_some() {
        sequence.note("story: bridging panels sit outside the grammar tree");
    }

    for (slot, sets) in sets {
        let n = sequence.len();
        let mut chosen = vec![0usize; n];
        for i in (0..n).rev() {
            let cands: Vec<usize> = if i + 1 == n {
                sets[i].iter().copied().collect()
            } else {
                sets[i]
                    .iter()
                    .copied()
                    .filter(|u| network.has_edge(*u, chosen[i + 1]))
                    .collect()
            };
            let current = sequence.panels[i]
                .in_slot(slot)
                .and_then(|c| network.id(&c.action).ok());
            chosen[i] = match current {
                Some(c) if cands.contains(&c) => c,
                _ => cands[rng.below(cands.len())],
            };
        }
        for (p, a) in sequence.panels.iter_mut().zip(chosen) {
            if let Some(c) = p.in_slot_mut(slot) {
                c.action = network.name(a).to_string();
            }
        }
    }

    let ctx = TransitionContext::new(pack, network);
    let mut relabelled = Vec::new();
    for i in 1..sequence.len() {
        if let Some(kind) = sequence.panels[i - 1].transition_to_next {
            if !transition_holds(&sequence.panels[i - 1], &sequence.panels[i], kind, &ctx)? {
                sequence.panels[i - 1].transition_to_next = Some(TransitionKind::ActionToAction);
                relabelled.push(i - 1);
            }
        }
    }
    if !relabelled.is_empty() {
        sequence.note(format!(
            "story: gutters after panels {relabelled:?} relabelled action_to_action to match the story's changes"
        ));
    }
    Ok(sequence)
}

fn insert_bridges(sequence: &mut PanelSequence, at: usize, count: usize) {
    let prev = sequence.panels[at - 1].clone();
    let next_tension = sequence.panels[at].tension;
    for _ in 0..count {
        let mut p = prev.clone();
        p.phase = prev.phase.map(|_| PhaseCategory::Prolongation);
        p.tension = match (prev.tension, next_tension) {
            (Some(a), Some(b)) => Some((a + b) / 2.0),
            _ => prev.tension,
        };
        p.transition_to_next = prev.transition_to_next.map(|_| TransitionKind::ActionToAction);
        sequence.panels.insert(at, p);
    }
    if prev.transition_to_next.is_some() {
        sequence.panels[at - 1].transition_to_next = Some(TransitionKind::ActionToAction);
    }
    sequence.reindex();
}
