//! Visual narrative grammar: phases, center-embedded tree expansion, and
//! structure counting.
//!
//! A phase is an ordered subsequence of `E I L P R` that always contains the
//! peak. Trees grow by replacing a single category leaf with a whole phase in
//! place, so the in-order leaves of the tree read as the panel sequence.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::sequence::{resize_sequence, PanelDefaults, PanelSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseCategory {
    #[serde(rename = "E")]
    Establisher,
    #[serde(rename = "I")]
    Initial,
    #[serde(rename = "L")]
    Prolongation,
    #[serde(rename = "P")]
    Peak,
    #[serde(rename = "R")]
    Release,
}

use PhaseCategory::*;

impl PhaseCategory {
    /// Canonical order within a phase.
    pub const ALL: [PhaseCategory; 5] = [Establisher, Initial, Prolongation, Peak, Release];
    pub const OPTIONAL: [PhaseCategory; 4] = [Establisher, Initial, Prolongation, Release];

    pub fn letter(self) -> char {
        match self {
            Establisher => 'E',
            Initial => 'I',
            Prolongation => 'L',
            Peak => 'P',
            Release => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.letter() == c.to_ascii_uppercase())
    }

    /// Narrative importance, higher wins ties: P > I > R > E > L.
    pub fn importance(self) -> u8 {
        match self {
            Peak => 4,
            Initial => 3,
            Release => 2,
            Establisher => 1,
            Prolongation => 0,
        }
    }

    fn code(self) -> u128 {
        self as u128 + 1
    }
}

impl fmt::Display for PhaseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub fn format_phases(phases: &[PhaseCategory]) -> String {
    phases.iter().map(|p| p.letter()).collect()
}

/// Parses strings such as `"EIPR"` or `"E,I,P,R"`.
pub fn parse_phases(s: &str) -> Result<Vec<PhaseCategory>> {
    s.chars()
        .filter(|c| !matches!(c, ',' | ' ' | '[' | ']'))
        .map(|c| PhaseCategory::from_letter(c).ok_or_else(|| Error::Invalid(format!("unknown category `{c}`"))))
        .collect()
}

/// True when `phase` is a strictly canonical subsequence of `E I L P R` holding `P`.
pub fn is_valid_phase(phase: &[PhaseCategory]) -> bool {
    phase.windows(2).all(|w| w[0] < w[1]) && phase.contains(&Peak)
}

/// Inclusion probability of each optional category when a phase is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInclusion {
    pub establisher: f64,
    pub initial: f64,
    pub prolongation: f64,
    pub release: f64,
}

impl PhaseInclusion {
    pub fn uniform(p: f64) -> Self {
        Self {
            establisher: p,
            initial: p,
            prolongation: p,
            release: p,
        }
    }

    fn prob(&self, cat: PhaseCategory) -> f64 {
        match cat {
            Establisher => self.establisher,
            Initial => self.initial,
            Prolongation => self.prolongation,
            Release => self.release,
            Peak => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for cat in PhaseCategory::OPTIONAL {
            let p = self.prob(cat);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability {
                    name: format!("include_{}", cat.letter().to_ascii_lowercase()),
                    value: p,
                });
            }
        }
        Ok(())
    }
}

impl Default for PhaseInclusion {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

/// Draws one phase; the peak is always present.
pub fn sample_phase(rng: &mut RandomSource, inclusion: &PhaseInclusion) -> Vec<PhaseCategory> {
    let mut keep = [false; 5];
    for cat in PhaseCategory::OPTIONAL {
        keep[cat as usize] = rng.chance(inclusion.prob(cat));
    }
    keep[Peak as usize] = true;
    PhaseCategory::ALL
        .into_iter()
        .filter(|c| keep[*c as usize])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarNode {
    Category(PhaseCategory),
    Phase(PhaseNode),
}

impl GrammarNode {
    /// The category this child fills in its parent phase.
    fn role(&self) -> Option<PhaseCategory> {
        match self {
            GrammarNode::Category(c) => Some(*c),
            GrammarNode::Phase(p) => p.replaces,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNode {
    /// The category leaf this phase replaced; `None` only at the root.
    pub replaces: Option<PhaseCategory>,
    pub children: Vec<GrammarNode>,
}

impl PhaseNode {
    fn flat(replaces: Option<PhaseCategory>, phase: &[PhaseCategory]) -> Self {
        Self {
            replaces,
            children: phase.iter().copied().map(GrammarNode::Category).collect(),
        }
    }

    fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                GrammarNode::Phase(p) => p.depth(),
                GrammarNode::Category(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    fn collect_leaves(&self, out: &mut Vec<PhaseCategory>) {
        for child in &self.children {
            match child {
                GrammarNode::Category(c) => out.push(*c),
                GrammarNode::Phase(p) => p.collect_leaves(out),
            }
        }
    }

    fn check(&self, is_root: bool) -> Result<()> {
        if is_root != self.replaces.is_none() {
            return Err(Error::Invalid(if is_root {
                "root phase claims to replace a category".into()
            } else {
                "embedded phase without the category it replaced".into()
            }));
        }
        let roles: Option<Vec<_>> = self.children.iter().map(GrammarNode::role).collect();
        let roles = roles.ok_or_else(|| Error::Invalid("child phase without a role".into()))?;
        if !is_valid_phase(&roles) {
            return Err(Error::Invalid(format!(
                "phase children `{}` are not a canonical phase",
                format_phases(&roles)
            )));
        }
        for child in &self.children {
            if let GrammarNode::Phase(p) = child {
                p.check(false)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarTree {
    pub root: PhaseNode,
}

impl GrammarTree {
    pub fn flat(phase: &[PhaseCategory]) -> Self {
        Self {
            root: PhaseNode::flat(None, phase),
        }
    }

    /// Number of phase levels; a flat phase has depth 1.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Every phase node is canonical with a peak, every embedded phase records
    /// the category it replaced, and the depth bound holds.
    pub fn validate(&self, max_depth: usize) -> Result<()> {
        self.root.check(true)?;
        if self.depth() > max_depth {
            return Err(Error::Invalid(format!(
                "tree depth {} exceeds {max_depth}",
                self.depth()
            )));
        }
        Ok(())
    }
}

pub fn leaf_sequence(tree: &GrammarTree) -> Vec<PhaseCategory> {
    let mut out = Vec::new();
    tree.root.collect_leaves(&mut out);
    out
}

/// Grows a center-embedded tree from `phase`. Each category leaf at depth
/// below `max_depth` is independently replaced by a freshly sampled phase
/// with probability `expand_prob`.
pub fn expand_tree(
    phase: &[PhaseCategory],
    expand_prob: f64,
    max_depth: usize,
    inclusion: &PhaseInclusion,
    rng: &mut RandomSource,
) -> Result<GrammarTree> {
    if max_depth < 1 {
        return Err(Error::InvalidDepth(max_depth));
    }
    if !(0.0..=1.0).contains(&expand_prob) {
        return Err(Error::InvalidProbability {
            name: "expand_prob".into(),
            value: expand_prob,
        });
    }
    if !is_valid_phase(phase) {
        return Err(Error::Invalid(format!(
            "`{}` is not a canonical phase",
            format_phases(phase)
        )));
    }
    let mut root = PhaseNode::flat(None, phase);
    expand_node(&mut root, 1, expand_prob, max_depth, inclusion, rng);
    Ok(GrammarTree { root })
}

fn expand_node(
    node: &mut PhaseNode,
    depth: usize,
    expand_prob: f64,
    max_depth: usize,
    inclusion: &PhaseInclusion,
    rng: &mut RandomSource,
) {
    if depth >= max_depth {
        return;
    }
    for child in node.children.iter_mut() {
        let GrammarNode::Category(cat) = *child else {
            continue;
        };
        if rng.chance(expand_prob) {
            let phase = sample_phase(rng, inclusion);
            let mut sub = PhaseNode::flat(Some(cat), &phase);
            expand_node(&mut sub, depth + 1, expand_prob, max_depth, inclusion, rng);
            *child = GrammarNode::Phase(sub);
        }
    }
}

/// Resizes `sequence` to the leaf count and stamps each panel with its category.
pub fn assign_phases(
    sequence: PanelSequence,
    leaves: &[PhaseCategory],
    defaults: &PanelDefaults,
) -> Result<PanelSequence> {
    if leaves.is_empty() {
        return Err(Error::Invalid("no phases to assign".into()));
    }
    let mut sequence = if sequence.len() != leaves.len() {
        resize_sequence(sequence, leaves.len(), defaults)?
    } else {
        sequence
    };
    for (panel, cat) in sequence.panels.iter_mut().zip(leaves) {
        panel.phase = Some(*cat);
    }
    Ok(sequence)
}

/// Closed form `2^4 * (2^5 * 2^4)^(n-1)` for `n` structure levels.
pub fn count_structures(n: usize) -> Result<u128> {
    if n < 1 {
        return Err(Error::InvalidDepth(n));
    }
    let mut total: u128 = 16;
    for _ in 1..n {
        total = total
            .checked_mul(32 * 16)
            .ok_or_else(|| Error::Overflow(format!("structure count for n = {n}")))?;
    }
    Ok(total)
}

/// Hard ceiling on the depth any enumeration will attempt.
pub const MAX_ENUMERATION_DEPTH: usize = 3;
/// Trees beyond this count are refused rather than enumerated.
pub const ENUMERATION_TREE_BUDGET: u128 = 5_000_000;

/// Number of distinct trees of depth at most `max_depth` under this engine's
/// expansion: every category at depth `< max_depth` is either kept or replaced
/// by any of the 16 phases.
pub fn count_trees(max_depth: usize) -> Result<u128> {
    if max_depth < 1 {
        return Err(Error::InvalidDepth(max_depth));
    }
    // options for one category slot inside a phase node at depth d
    let mut slot: u128 = 1;
    let mut phases_at_depth: u128 = 0;
    for _ in (1..=max_depth).rev() {
        // sum over subsets S of the optional categories of slot^(|S| + 1)
        let one_plus = slot
            .checked_add(1)
            .ok_or_else(|| Error::Overflow("tree count".into()))?;
        phases_at_depth = one_plus
            .checked_pow(4)
            .and_then(|v| v.checked_mul(slot))
            .ok_or_else(|| Error::Overflow(format!("tree count for depth {max_depth}")))?;
        slot = phases_at_depth
            .checked_add(1)
            .ok_or_else(|| Error::Overflow("tree count".into()))?;
    }
    Ok(phases_at_depth)
}

fn check_enumeration(max_depth: usize) -> Result<()> {
    if max_depth < 1 {
        return Err(Error::InvalidDepth(max_depth));
    }
    if max_depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::Guardrail(format!(
            "depth {max_depth} exceeds the enumeration limit of {MAX_ENUMERATION_DEPTH}"
        )));
    }
    match count_trees(max_depth) {
        Ok(n) if n <= ENUMERATION_TREE_BUDGET => Ok(()),
        Ok(n) => Err(Error::Guardrail(format!(
            "depth {max_depth} spans {n} trees, over the budget of {ENUMERATION_TREE_BUDGET}"
        ))),
        Err(_) => Err(Error::Guardrail(format!(
            "depth {max_depth} spans more trees than fit in 128 bits"
        ))),
    }
}

/// A phase sequence packed as base-6 digits (1..=5), with its length.
type Packed = (u128, u32);

fn concat(a: Packed, b: Packed) -> Packed {
    (a.0 * 6u128.pow(b.1) + b.0, a.1 + b.1)
}

fn unpack((mut key, len): Packed) -> Vec<PhaseCategory> {
    let mut out = vec![Peak; len as usize];
    for slot in out.iter_mut().rev() {
        *slot = PhaseCategory::ALL[(key % 6) as usize - 1];
        key /= 6;
    }
    out
}

fn all_phases() -> Vec<Vec<PhaseCategory>> {
    (0u8..16)
        .map(|mask| {
            PhaseCategory::ALL
                .into_iter()
                .filter(|c| match c {
                    Peak => true,
                    other => {
                        let bit = PhaseCategory::OPTIONAL.iter().position(|o| o == other).unwrap();
                        mask & (1 << bit) != 0
                    }
                })
                .collect()
        })
        .collect()
}

/// Distinct leaf sequences a phase node at `depth` can produce.
fn phase_yields(depth: usize, max_depth: usize) -> HashSet<Packed> {
    let deeper = if depth < max_depth {
        Some(phase_yields(depth + 1, max_depth))
    } else {
        None
    };
    let mut out = HashSet::new();
    for phase in all_phases() {
        let mut partial: Vec<Packed> = vec![(0, 0)];
        for cat in phase {
            let mut options: Vec<Packed> = vec![(cat.code(), 1)];
            if let Some(d) = &deeper {
                options.extend(d.iter().copied());
            }
            partial = partial
                .iter()
                .flat_map(|p| options.iter().map(move |o| concat(*p, *o)))
                .collect::<HashSet<_>>()
                .into_iter()
                .collect();
        }
        out.extend(partial);
    }
    out
}

/// Number of distinct phase sequences reachable with trees of depth at most
/// `max_depth`, without materialising them.
pub fn count_distinct_structures(max_depth: usize) -> Result<usize> {
    check_enumeration(max_depth)?;
    Ok(phase_yields(1, max_depth).len())
}

/// Every distinct leaf sequence of a tree of depth at most `max_depth`,
/// sorted by length then lexicographically.
pub fn enumerate_structures(max_depth: usize) -> Result<Vec<Vec<PhaseCategory>>> {
    check_enumeration(max_depth)?;
    let mut out: Vec<_> = phase_yields(1, max_depth).into_iter().map(unpack).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Vec<PhaseCategory> {
        parse_phases(s).unwrap()
    }

    #[test]
    fn forced_inclusion() {
        let mut rng = RandomSource::new(0);
        assert_eq!(sample_phase(&mut rng, &PhaseInclusion::uniform(1.0)), p("EILPR"));
        assert_eq!(sample_phase(&mut rng, &PhaseInclusion::uniform(0.0)), p("P"));
    }

    #[test]
    fn sampling_reaches_all_sixteen_phases() {
        let mut rng = RandomSource::new(11);
        let seen: HashSet<_> = (0..2000)
            .map(|_| sample_phase(&mut rng, &PhaseInclusion::default()))
            .collect();
        assert_eq!(seen.len(), 16);
        assert!(seen.iter().all(|ph| is_valid_phase(ph)));
    }

    #[test]
    fn importance_order() {
        let mut cats = PhaseCategory::ALL.to_vec();
        cats.sort_by_key(|c| std::cmp::Reverse(c.importance()));
        assert_eq!(cats, p("PIREL"));
    }

    #[test]
    fn zero_probability_gives_flat_tree() {
        let mut rng = RandomSource::new(3);
        let tree = expand_tree(&p("EIPR"), 0.0, 3, &PhaseInclusion::default(), &mut rng).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(leaf_sequence(&tree), p("EIPR"));
    }

    #[test]
    fn peak_only_certain_expansion() {
        let mut rng = RandomSource::new(5);
        let tree = expand_tree(&p("P"), 1.0, 2, &PhaseInclusion::default(), &mut rng).unwrap();
        assert_eq!(tree.depth(), 2);
        let GrammarNode::Phase(sub) = &tree.root.children[0] else {
            panic!("peak was not expanded");
        };
        assert_eq!(sub.replaces, Some(Peak));
        let inner: Vec<_> = sub.children.iter().map(|c| c.role().unwrap()).collect();
        assert_eq!(leaf_sequence(&tree), inner);
        tree.validate(2).unwrap();
    }

    #[test]
    fn expansion_is_replayable() {
        let run = || {
            let mut rng = RandomSource::new(99);
            expand_tree(&p("EILPR"), 0.5, 3, &PhaseInclusion::default(), &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn expand_rejects_bad_input() {
        let mut rng = RandomSource::new(0);
        let inc = PhaseInclusion::default();
        assert_eq!(
            expand_tree(&p("P"), 0.3, 0, &inc, &mut rng),
            Err(Error::InvalidDepth(0))
        );
        assert!(expand_tree(&p("EI"), 0.3, 2, &inc, &mut rng).is_err());
        assert!(expand_tree(&p("PE"), 0.3, 2, &inc, &mut rng).is_err());
        assert!(expand_tree(&p("P"), 1.5, 2, &inc, &mut rng).is_err());
    }

    #[test]
    fn leaves_of_hand_built_tree() {
        let tree = GrammarTree {
            root: PhaseNode {
                replaces: None,
                children: vec![
                    GrammarNode::Category(Establisher),
                    GrammarNode::Phase(PhaseNode::flat(Some(Initial), &p("IP"))),
                    GrammarNode::Category(Peak),
                    GrammarNode::Category(Release),
                ],
            },
        };
        tree.validate(2).unwrap();
        assert_eq!(leaf_sequence(&tree), p("EIPPR"));
        assert_eq!(leaf_sequence(&GrammarTree::flat(&p("P"))), p("P"));
        assert!(tree.validate(1).is_err());
    }

    #[test]
    fn validate_rejects_missing_replacement_trail() {
        let mut tree = GrammarTree::flat(&p("EP"));
        tree.root.children[0] = GrammarNode::Phase(PhaseNode::flat(None, &p("P")));
        assert!(tree.validate(3).is_err());
    }

    #[test]
    fn assign_resizes() {
        let d = PanelDefaults::default();
        let mut rng = RandomSource::new(1);
        let four = crate::sequence::new_sequence(&mut rng, 4, 4, &d).unwrap();
        let s = assign_phases(four.clone(), &p("EIPR"), &d).unwrap();
        assert_eq!(s.panels.iter().map(|x| x.phase.unwrap()).collect::<Vec<_>>(), p("EIPR"));

        let two = crate::sequence::resize_sequence(four.clone(), 2, &d).unwrap();
        assert_eq!(assign_phases(two, &p("EIPR"), &d).unwrap().len(), 4);

        let six = crate::sequence::resize_sequence(four.clone(), 6, &d).unwrap();
        let one = assign_phases(six, &p("P"), &d).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.panels[0].phase, Some(Peak));

        assert!(assign_phases(four, &[], &d).is_err());
    }

    #[test]
    fn closed_form_counts() {
        assert_eq!(count_structures(1).unwrap(), 16);
        assert_eq!(count_structures(2).unwrap(), 8192);
        assert!(count_structures(0).is_err());
        assert!(matches!(count_structures(40), Err(Error::Overflow(_))));
    }

    #[test]
    fn tree_counts() {
        assert_eq!(count_trees(1).unwrap(), 16);
        // 17 * 18^4: each of up to five slots holds a leaf or one of 16 phases
        assert_eq!(count_trees(2).unwrap(), 1_784_592);
    }

    #[test]
    fn enumeration_depth_one_matches_brute_force() {
        // oracle: all 2^4 choices of optional categories, built independently
        let mut oracle = HashSet::new();
        for e in [false, true] {
            for i in [false, true] {
                for l in [false, true] {
                    for r in [false, true] {
                        let mut s = String::new();
                        if e { s.push('E'); }
                        if i { s.push('I'); }
                        if l { s.push('L'); }
                        s.push('P');
                        if r { s.push('R'); }
                        oracle.insert(p(&s));
                    }
                }
            }
        }
        let got = enumerate_structures(1).unwrap();
        assert_eq!(got.len(), 16);
        assert_eq!(got.into_iter().collect::<HashSet<_>>(), oracle);
        assert_eq!(count_distinct_structures(1).unwrap(), count_structures(1).unwrap() as usize);
    }

    #[test]
    fn enumeration_guardrails() {
        assert!(matches!(enumerate_structures(4), Err(Error::Guardrail(_))));
        assert!(matches!(count_distinct_structures(3), Err(Error::Guardrail(_))));
        assert!(enumerate_structures(0).is_err());
    }

    #[test]
    fn packing_roundtrip() {
        let s = p("EILPRPP");
        let packed = s.iter().fold((0u128, 0u32), |acc, c| concat(acc, (c.code(), 1)));
        assert_eq!(unpack(packed), s);
    }

    proptest! {
        #[test]
        fn zero_expansion_is_identity(mask in 0u8..16, depth in 1usize..5, seed: u64) {
            let phase = &all_phases()[mask as usize];
            let mut rng = RandomSource::new(seed);
            let tree = expand_tree(phase, 0.0, depth, &PhaseInclusion::default(), &mut rng).unwrap();
            prop_assert_eq!(&leaf_sequence(&tree), phase);
        }

        #[test]
        fn generated_trees_validate(seed: u64, prob in 0.0f64..=1.0, depth in 1usize..4) {
            let mut rng = RandomSource::new(seed);
            let phase = sample_phase(&mut rng, &PhaseInclusion::default());
            let tree = expand_tree(&phase, prob, depth, &PhaseInclusion::default(), &mut rng).unwrap();
            prop_assert!(tree.validate(depth).is_ok());
            prop_assert!(!leaf_sequence(&tree).is_empty());
        }
    }
}
