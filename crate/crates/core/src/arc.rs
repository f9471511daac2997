//! Tension scores per panel, derived from grammar categories.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::PhaseCategory::{self, *};
use crate::registry::{value_op, ValueOp};
use crate::rng::RandomSource;
use crate::sequence::PanelSequence;

pub const MIN_TENSION: f64 = 0.0;
pub const MAX_TENSION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcMode {
    /// Running value updated by each category's operation.
    Dictionary,
    /// Each category maps straight to its base score.
    Canonical,
}

impl std::str::FromStr for ArcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dictionary" => Ok(ArcMode::Dictionary),
            "canonical" => Ok(ArcMode::Canonical),
            other => Err(Error::Invalid(format!("unknown arc mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcProfile {
    pub base: BTreeMap<PhaseCategory, f64>,
    pub oper: BTreeMap<PhaseCategory, ValueOp>,
    /// Half-width `l` of the `(-1)^k * l` oscillation.
    pub oscillation: f64,
    pub mode: ArcMode,
}

impl ArcProfile {
    /// E:0 I:2 L:4 P:6 R:2 with E and R resetting and I, L, P accumulating.
    pub fn dictionary(oscillation: f64) -> Self {
        Self {
            base: BTreeMap::from([
                (Establisher, 0.0),
                (Initial, 2.0),
                (Prolongation, 4.0),
                (Peak, 6.0),
                (Release, 2.0),
            ]),
            oper: BTreeMap::from([
                (Establisher, ValueOp::Equal),
                (Initial, ValueOp::Add),
                (Prolongation, ValueOp::Add),
                (Peak, ValueOp::Add),
                (Release, ValueOp::Equal),
            ]),
            oscillation,
            mode: ArcMode::Dictionary,
        }
    }

    /// E:2 I:4 L:5 P:8 R:3. I sits between E and L.
    pub fn canonical(oscillation: f64) -> Self {
        Self {
            base: BTreeMap::from([
                (Establisher, 2.0),
                (Initial, 4.0),
                (Prolongation, 5.0),
                (Peak, 8.0),
                (Release, 3.0),
            ]),
            oper: PhaseCategory::ALL.into_iter().map(|c| (c, ValueOp::Equal)).collect(),
            oscillation,
            mode: ArcMode::Canonical,
        }
    }

    pub fn for_mode(mode: ArcMode, oscillation: f64) -> Self {
        match mode {
            ArcMode::Dictionary => Self::dictionary(oscillation),
            ArcMode::Canonical => Self::canonical(oscillation),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for cat in PhaseCategory::ALL {
            let b = *self
                .base
                .get(&cat)
                .ok_or_else(|| Error::Invalid(format!("arc profile lacks a score for {cat}")))?;
            if !(MIN_TENSION..=MAX_TENSION).contains(&b) {
                return Err(Error::Invalid(format!("base score {b} for {cat} outside [0, 10]")));
            }
            if self.mode == ArcMode::Dictionary && !self.oper.contains_key(&cat) {
                return Err(Error::Invalid(format!("arc profile lacks an operation for {cat}")));
            }
        }
        if !(0.0..=1.0).contains(&self.oscillation) {
            return Err(Error::Invalid(format!(
                "oscillation range {} outside [0, 1]",
                self.oscillation
            )));
        }
        Ok(())
    }

    /// Tension values for `phases` with every oscillation sign supplied.
    fn scores(&self, phases: &[PhaseCategory], signs: &[f64]) -> Vec<f64> {
        let mut running = 0.0;
        phases
            .iter()
            .zip(signs)
            .map(|(cat, sign)| {
                let base = self.base[cat];
                let value = match self.mode {
                    ArcMode::Canonical => base,
                    ArcMode::Dictionary => {
                        running = value_op(running, self.oper[cat], base);
                        running
                    }
                };
                (value + sign * self.oscillation).clamp(MIN_TENSION, MAX_TENSION)
            })
            .collect()
    }
}

impl Default for ArcProfile {
    fn default() -> Self {
        Self::canonical(0.5)
    }
}

/// Categories spread over `n` panels when no grammar has run.
pub fn default_arc_phases(n: usize) -> Vec<PhaseCategory> {
    if n == 1 {
        return vec![Peak];
    }
    (0..n)
        .map(|i| PhaseCategory::ALL[((i * 4) as f64 / (n - 1) as f64).round() as usize])
        .collect()
}

/// Stamps every panel with a tension score. Without grammar phases the
/// default arc is used and the fallback is recorded in the sequence notes.
pub fn assign_tension(
    mut sequence: PanelSequence,
    profile: &ArcProfile,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    profile.validate()?;
    let phases: Option<Vec<_>> = sequence.panels.iter().map(|p| p.phase).collect();
    let phases = match phases {
        Some(p) => p,
        None => {
            sequence.note("arc: panels lack grammar phases; used default narrative arc scores");
            default_arc_phases(sequence.len())
        }
    };
    // k is a fresh coin per panel
    let signs: Vec<f64> = phases
        .iter()
        .map(|_| if rng.chance(0.5) { -1.0 } else { 1.0 })
        .collect();
    for (panel, score) in sequence.panels.iter_mut().zip(profile.scores(&phases, &signs)) {
        panel.tension = Some(score);
    }
    Ok(sequence)
}

/// `|d|^2 / d` for `d = next - current`, extended by 0 at `d = 0`.
pub fn target_delta(current: f64, next: f64) -> f64 {
    let d = next - current;
    if d == 0.0 {
        0.0
    } else {
        d.abs().powi(2) / d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcCurve(pub Vec<f64>);

impl ArcCurve {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.0.windows(2).map(|w| target_delta(w[0], w[1])).collect()
    }
}

pub fn arc_curve(sequence: &PanelSequence) -> Result<ArcCurve> {
    sequence
        .panels
        .iter()
        .map(|p| {
            p.tension.ok_or_else(|| Error::Dependency {
                layer: format!("arc curve (panel {})", p.index),
                missing: "arc".into(),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(ArcCurve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcRow {
    pub panel: usize,
    pub phase: Option<PhaseCategory>,
    pub target: f64,
    pub realized: f64,
}

pub const ARC_CSV_HEADER: &str = "panel,phase,target,realized";

pub fn arc_rows(sequence: &PanelSequence, realized: &[f64]) -> Result<Vec<ArcRow>> {
    let curve = arc_curve(sequence)?;
    if realized.len() != curve.len() {
        return Err(Error::Invalid(format!(
            "realized curve has {} points for {} panels",
            realized.len(),
            curve.len()
        )));
    }
    Ok(sequence
        .panels
        .iter()
        .zip(curve.0)
        .zip(realized)
        .map(|((p, target), realized)| ArcRow {
            panel: p.index,
            phase: p.phase,
            target,
            realized: *realized,
        })
        .collect())
}

pub fn write_arc_csv(rows: &[ArcRow]) -> String {
    let mut out = String::from(ARC_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let phase = r.phase.map(|p| p.letter().to_string()).unwrap_or_else(|| "-".into());
        writeln!(out, "{},{},{:.3},{:.3}", r.panel, phase, r.target, r.realized).unwrap();
    }
    out
}

pub fn read_arc_csv(text: &str) -> Result<Vec<ArcRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ARC_CSV_HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                reason: format!("expected header `{ARC_CSV_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Csv {
            line: i + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let phase = match fields[1] {
            "-" => None,
            f => {
                let mut chars = f.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some(PhaseCategory::from_letter(c).ok_or_else(|| bad("unknown phase"))?),
                    _ => return Err(bad("unknown phase")),
                }
            }
        };
        rows.push(ArcRow {
            panel: fields[0].parse().map_err(|_| bad("panel is not an index"))?,
            phase,
            target: fields[2].parse().map_err(|_| bad("target is not a number"))?,
            realized: fields[3].parse().map_err(|_| bad("realized is not a number"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_phases;
    use crate::sequence::{new_sequence, PanelDefaults};
    use proptest::prelude::*;

    fn phased(s: &str) -> PanelSequence {
        let phases = parse_phases(s).unwrap();
        let mut rng = RandomSource::new(0);
        let mut seq = new_sequence(&mut rng, phases.len(), phases.len(), &PanelDefaults::default()).unwrap();
        for (p, c) in seq.panels.iter_mut().zip(phases) {
            p.phase = Some(c);
        }
        seq
    }

    fn tensions(seq: &PanelSequence) -> Vec<f64> {
        seq.panels.iter().map(|p| p.tension.unwrap()).collect()
    }

    #[test]
    fn dictionary_mode_accumulates() {
        let mut rng = RandomSource::new(1);
        let s = assign_tension(phased("EIPR"), &ArcProfile::dictionary(0.0), &mut rng).unwrap();
        assert_eq!(tensions(&s), vec![0.0, 2.0, 8.0, 2.0]);
    }

    #[test]
    fn canonical_mode_worked_example() {
        let mut rng = RandomSource::new(1);
        let s = assign_tension(phased("ELPR"), &ArcProfile::canonical(0.0), &mut rng).unwrap();
        assert_eq!(tensions(&s), vec![2.0, 5.0, 8.0, 3.0]);
    }

    #[test]
    fn dictionary_mode_clamps_runaway_sums() {
        // I L P keep adding: 2, 6, 12 -> clamped at 10
        let mut rng = RandomSource::new(1);
        let s = assign_tension(phased("ILP"), &ArcProfile::dictionary(0.0), &mut rng).unwrap();
        assert_eq!(tensions(&s), vec![2.0, 6.0, 10.0]);
    }

    #[test]
    fn missing_phases_fall_back_with_note() {
        let mut rng = RandomSource::new(0);
        let seq = new_sequence(&mut rng, 5, 5, &PanelDefaults::default()).unwrap();
        let s = assign_tension(seq, &ArcProfile::canonical(0.0), &mut rng).unwrap();
        assert_eq!(tensions(&s), vec![2.0, 4.0, 5.0, 8.0, 3.0]);
        assert!(s.notes.iter().any(|n| n.contains("default narrative arc")));
        assert!(s.panels.iter().all(|p| p.phase.is_none()));
    }

    #[test]
    fn default_arc_phases_shape() {
        assert_eq!(default_arc_phases(1), vec![Peak]);
        assert_eq!(default_arc_phases(2), vec![Establisher, Release]);
        assert_eq!(default_arc_phases(5), PhaseCategory::ALL.to_vec());
    }

    #[test]
    fn target_delta_examples() {
        assert_eq!(target_delta(2.0, 5.0), 3.0);
        assert_eq!(target_delta(5.0, 2.0), -3.0);
        assert_eq!(target_delta(4.0, 4.0), 0.0);
    }

    #[test]
    fn curve_projection_and_missing_tension() {
        let mut s = phased("ELPR");
        for (p, t) in s.panels.iter_mut().zip([2.0, 5.0, 8.0, 3.0]) {
            p.tension = Some(t);
        }
        assert_eq!(arc_curve(&s).unwrap(), ArcCurve(vec![2.0, 5.0, 8.0, 3.0]));
        s.panels[2].tension = None;
        assert!(matches!(arc_curve(&s), Err(Error::Dependency { .. })));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let rows = vec![
            ArcRow { panel: 0, phase: Some(Establisher), target: 2.4999, realized: 0.0 },
            ArcRow { panel: 1, phase: None, target: 7.125, realized: 10.0 },
        ];
        let text = write_arc_csv(&rows);
        assert_eq!(text, "panel,phase,target,realized\n0,E,2.500,0.000\n1,-,7.125,10.000\n");
        assert_eq!(write_arc_csv(&read_arc_csv(&text).unwrap()), text);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_arc_csv("wrong\n").is_err());
        assert!(matches!(
            read_arc_csv("panel,phase,target,realized\n0,X,1,1\n"),
            Err(Error::Csv { line: 2, .. })
        ));
        assert!(read_arc_csv("panel,phase,target,realized\n0,E,1\n").is_err());
    }

    #[test]
    fn profile_validation() {
        let mut p = ArcProfile::canonical(0.5);
        p.validate().unwrap();
        p.oscillation = 1.5;
        assert!(p.validate().is_err());
        let mut q = ArcProfile::dictionary(0.0);
        q.base.insert(Peak, 11.0);
        assert!(q.validate().is_err());
    }

    proptest! {
        #[test]
        fn target_delta_identity(a in 0.0f64..=10.0, b in 0.0f64..=10.0) {
            prop_assume!(a != b);
            prop_assert!((target_delta(a, b) - (b - a)).abs() <= 1e-12);
        }

        #[test]
        fn oscillation_is_bounded(
            cats in prop::collection::vec(0usize..5, 1..12),
            l in 0.0f64..=1.0,
            seed: u64,
            dictionary: bool,
        ) {
            let s: String = cats.iter().map(|i| PhaseCategory::ALL[*i].letter()).collect();
            let base = if dictionary { ArcProfile::dictionary(0.0) } else { ArcProfile::canonical(0.0) };
            let mut wobbly = base.clone();
            wobbly.oscillation = l;
            let flat = tensions(&assign_tension(phased(&s), &base, &mut RandomSource::new(seed)).unwrap());
            let osc = tensions(&assign_tension(phased(&s), &wobbly, &mut RandomSource::new(seed)).unwrap());
            for (f, o) in flat.iter().zip(&osc) {
                prop_assert!((f - o).abs() <= l + 1e-12);
                prop_assert!((0.0..=10.0).contains(o));
            }
        }

        #[test]
        fn peak_never_below_establisher_within_flat_phase(mask in 0u8..16) {
            let mut s = String::new();
            for (bit, c) in ['E', 'I', 'L'].iter().enumerate() {
                if mask & (1 << bit) != 0 { s.push(*c); }
            }
            s.push('P');
            if mask & 8 != 0 { s.push('R'); }
            let seq = assign_tension(phased(&s), &ArcProfile::dictionary(0.0), &mut RandomSource::new(0)).unwrap();
            let t = tensions(&seq);
            let peak = s.find('P').unwrap();
            if let Some(e) = s.find('E') {
                prop_assert!(t[peak] >= t[e]);
            }
        }
    }
}
