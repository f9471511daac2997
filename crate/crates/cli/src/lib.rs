//! Command implementations behind the `comicgen` binary.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use comicgen_core::action::{
    adjacency_violations, arc_tracking_error, count_paths, path_upper_bound, realized_scores, ActionNetwork,
};
use comicgen_core::arc::{arc_curve, arc_rows, write_arc_csv, ArcMode, ArcProfile};
use comicgen_core::grammar::{count_distinct_structures, count_structures, count_trees, MAX_ENUMERATION_DEPTH};
use comicgen_core::layout::{transition_holds, TransitionContext};
use comicgen_core::render::{emit_manifest, render_pages, BalloonKind, PageSpec};
use comicgen_core::story::{derive_links, load_assertions};
use comicgen_core::{generate, parse_layers, ContentPack, Layer, LayerContext, PanelSequence};

pub const SAMPLE_STORY: &str = include_str!("../data/story.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    Pages,
    Manifest,
    ArcCsv,
}

impl FromStr for Emit {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "pages" => Ok(Emit::Pages),
            "manifest" => Ok(Emit::Manifest),
            "arc-csv" => Ok(Emit::ArcCsv),
            other => bail!("unknown output `{other}` (expected pages, manifest, arc-csv)"),
        }
    }
}

pub fn parse_emit(csv: &str) -> Result<BTreeSet<Emit>> {
    csv.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub layers: Vec<Layer>,
    /// `None` uses the bundled sample pack.
    pub pack: Option<PathBuf>,
    pub assertions: Option<PathBuf>,
    pub out: PathBuf,
    pub emit: BTreeSet<Emit>,
    pub arc_mode: ArcMode,
    pub columns: usize,
    pub rows_per_page: Option<usize>,
    /// `key=value` overrides for layer parameters.
    pub params: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            layers: parse_layers("grammar,arc,action,composition,transition,balloon").expect("known layers"),
            pack: None,
            assertions: None,
            out: PathBuf::from("out"),
            emit: [Emit::Pages, Emit::Manifest].into(),
            arc_mode: ArcMode::Canonical,
            columns: 3,
            rows_per_page: None,
            params: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for path in self.pack.iter().chain(self.assertions.iter()) {
            ensure!(path.exists(), "{} does not exist", path.display());
        }
        ensure!(self.columns > 0, "--columns must be positive");
        Ok(())
    }
}

pub fn load_pack(path: Option<&Path>) -> Result<ContentPack> {
    match path {
        Some(p) => ContentPack::load(p).with_context(|| format!("loading pack {}", p.display())),
        None => Ok(ContentPack::sample()),
    }
}

/// Layer context from the config: pack parameters, then arc mode, then `--param`s.
pub fn build_context<'a>(cfg: &RunConfig, pack: &'a ContentPack, story: Option<&str>) -> Result<LayerContext<'a>> {
    let mut ctx = LayerContext::new(pack)?;
    ctx.params.arc = ArcProfile::for_mode(cfg.arc_mode, ctx.params.arc.oscillation);
    for (k, v) in &cfg.params {
        ctx.params.set(k, v).with_context(|| format!("--param {k}={v}"))?;
    }
    if let Some(text) = story {
        let assertions = load_assertions(text)?;
        ctx = ctx.with_links(derive_links(&assertions, pack)?);
    }
    Ok(ctx)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sequence: PanelSequence,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// One line per panel: phase, tension, scene, composition, transition, actions.
pub fn summary_table(seq: &PanelSequence) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5}  {:>5}  {:>7}  {:<8}  {:<12}  {:<16}  characters",
        "panel", "phase", "tension", "scene", "composition", "transition"
    );
    for p in &seq.panels {
        let chars: Vec<String> = p
            .characters
            .iter()
            .map(|c| format!("{}:{}{}", c.character_id, c.action, if c.display { "" } else { "(hidden)" }))
            .collect();
        let _ = writeln!(
            s,
            "{:>5}  {:>5}  {:>7}  {:<8}  {:<12}  {:<16}  {}",
            p.index,
            p.phase.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            p.tension.map(|t| format!("{t:.2}")).unwrap_or_else(|| "-".into()),
            p.scene.as_deref().unwrap_or("-"),
            p.composition.as_deref().unwrap_or("-"),
            p.transition_to_next.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            chars.join(" ")
        );
    }
    for n in &seq.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

fn write_file(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

/// Writes the requested artifacts of `seq` into `dir`.
pub fn write_outputs(
    seq: &PanelSequence,
    pack: &ContentPack,
    network: &ActionNetwork,
    dir: &Path,
    emit: &BTreeSet<Emit>,
    spec: &PageSpec,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    if emit.contains(&Emit::Pages) {
        for (k, page) in render_pages(seq, pack, spec)?.iter().enumerate() {
            write_file(dir.join(format!("page-{}.svg", k + 1)), page, &mut files)?;
        }
    }
    if emit.contains(&Emit::Manifest) {
        write_file(dir.join("manifest.json"), &emit_manifest(seq)?, &mut files)?;
    }
    if emit.contains(&Emit::ArcCsv) {
        let realized = realized_scores(seq, network)?;
        let rows = arc_rows(seq, &realized).context("arc-csv needs the arc layer")?;
        write_file(dir.join("arc.csv"), &write_arc_csv(&rows), &mut files)?;
    }
    Ok(files)
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let pack = load_pack(cfg.pack.as_deref())?;
    let story = match &cfg.assertions {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let ctx = build_context(cfg, &pack, story.as_deref())?;
    let sequence = generate(cfg.seed, &cfg.layers, &ctx)?;
    sequence.validate()?;
    let spec = PageSpec {
        columns: cfg.columns,
        rows_per_page: cfg.rows_per_page,
        ..PageSpec::default()
    };
    let files = write_outputs(&sequence, &pack, &ctx.network, &cfg.out, &cfg.emit, &spec)?;
    let summary = summary_table(&sequence);
    Ok(RunOutput { sequence, files, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeKind {
    /// Grammar structures with `n` levels of embedding.
    Structures { n: usize },
    /// Action walks with `k` steps.
    Paths { k: usize },
}

pub fn cmd_analyze(kind: AnalyzeKind, pack: &ContentPack) -> Result<String> {
    let mut s = String::new();
    match kind {
        AnalyzeKind::Structures { n } => {
            let formula = count_structures(n)?;
            ensure!(
                n <= MAX_ENUMERATION_DEPTH,
                "refusing to enumerate {n} levels: the limit is {MAX_ENUMERATION_DEPTH}"
            );
            let distinct = count_distinct_structures(n)? as u128;
            let trees = count_trees(n)?;
            let _ = writeln!(s, "structures n={n}");
            let _ = writeln!(s, "formula: {formula}");
            let _ = writeln!(s, "enumerated: {distinct} distinct phase sequences from {trees} trees");
            let _ = writeln!(s, "agree: {}", formula == distinct);
            if formula != distinct {
                let _ = writeln!(
                    s,
                    "note: the closed form multiplies 2^5 expansion choices by 2^4 phases per level; \
                     the enumeration expands only categories present in a phase and merges trees with equal leaves"
                );
            }
        }
        AnalyzeKind::Paths { k } => {
            let p = pack.actions.len();
            let bound = path_upper_bound(p, k)?;
            let count = count_paths(&pack.network()?, k)?;
            let _ = writeln!(s, "paths k={k} over {p} actions");
            let _ = writeln!(s, "formula: {bound}");
            let _ = writeln!(s, "enumerated: {count}");
            let _ = writeln!(s, "within bound: {}", u128::from(count) <= bound);
        }
    }
    Ok(s)
}

pub const SHOWCASES: [&str; 5] = ["arc_onoff", "actionnet_onoff", "transition_demo", "balloon_display", "story_demo"];

fn run(seed: u64, layers: &str, pack: &ContentPack, params: &[(&str, &str)], story: Option<&str>) -> Result<(PanelSequence, ActionNetwork)> {
    let cfg = RunConfig {
        seed,
        params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..RunConfig::default()
    };
    let ctx = build_context(&cfg, pack, story)?;
    let seq = generate(seed, &parse_layers(layers)?, &ctx)?;
    Ok((seq, ctx.network))
}

fn all_outputs() -> BTreeSet<Emit> {
    [Emit::Pages, Emit::Manifest].into()
}

/// Writes a paired on/off comparison under `out/<name>` and returns its report.
pub fn cmd_showcase(name: &str, seed: u64, out: &Path) -> Result<String> {
    let pack = ContentPack::sample();
    let network = pack.network()?;
    let dir = out.join(name);
    let spec = PageSpec::default();
    let mut r = String::new();
    let _ = writeln!(r, "showcase {name}, seed {seed}");
    match name {
        "arc_onoff" => {
            let (on, _) = run(seed, "grammar,arc,action,composition,balloon", &pack, &[], None)?;
            let (mut off, _) = run(seed, "grammar,action,composition,balloon", &pack, &[], None)?;
            let arc = arc_curve(&on)?;
            let err_on = arc_tracking_error(&on, &network, &arc)?;
            let err_off = arc_tracking_error(&off, &network, &arc)?;
            write_outputs(&on, &pack, &network, &dir.join("arc_on"), &[Emit::Pages, Emit::Manifest, Emit::ArcCsv].into(), &spec)?;
            write_outputs(&off, &pack, &network, &dir.join("arc_off"), &all_outputs(), &spec)?;
            // the free run has no tensions of its own; chart it against the same arc
            for (p, t) in off.panels.iter_mut().zip(&arc.0) {
                p.tension = Some(*t);
            }
            let realized = realized_scores(&off, &network)?;
            fs::write(dir.join("arc_off").join("arc.csv"), write_arc_csv(&arc_rows(&off, &realized)?))?;
            let _ = writeln!(r, "arc: {:?}", arc.0.iter().map(|t| (t * 100.0).round() / 100.0).collect::<Vec<_>>());
            let _ = writeln!(r, "mean |activation - arc delta| with arc layer: {err_on:.3}");
            let _ = writeln!(r, "mean |activation - arc delta| without arc layer: {err_off:.3}");
        }
        "actionnet_onoff" => {
            let (on, _) = run(seed, "grammar,arc,action,composition", &pack, &[], None)?;
            let mut free = pack.clone();
            let names: Vec<String> = free.actions.iter().map(|a| a.name.clone()).collect();
            for a in free.actions.iter_mut() {
                a.reactions = names.clone();
            }
            let (off, _) = run(seed, "grammar,arc,action,composition", &free, &[], None)?;
            write_outputs(&on, &pack, &network, &dir.join("network_on"), &all_outputs(), &spec)?;
            write_outputs(&off, &pack, &network, &dir.join("network_off"), &all_outputs(), &spec)?;
            let _ = writeln!(r, "non-edge action pairs with the network: {}", adjacency_violations(&on, &network)?.len());
            let _ = writeln!(r, "non-edge action pairs without it: {}", adjacency_violations(&off, &network)?.len());
        }
        "transition_demo" => {
            let params = [("panels", "4"), ("transitions", "aspect,action,scene")];
            let (seq, _) = run(seed, "free_action,composition,transition,balloon", &pack, &params, None)?;
            let (plain, _) = run(seed, "free_action,composition,balloon", &pack, &params, None)?;
            write_outputs(&seq, &pack, &network, &dir.join("transitions_on"), &all_outputs(), &spec)?;
            write_outputs(&plain, &pack, &network, &dir.join("transitions_off"), &all_outputs(), &spec)?;
            let ctx = TransitionContext::new(&pack, &network);
            for w in seq.panels.windows(2) {
                let kind = w[0].transition_to_next.expect("every gutter has a kind");
                let _ = writeln!(
                    r,
                    "panel {} -> {}: {kind} (holds: {}) scene {} -> {}, composition {} -> {}",
                    w[0].index,
                    w[1].index,
                    transition_holds(&w[0], &w[1], kind, &ctx)?,
                    w[0].scene.as_deref().unwrap_or("-"),
                    w[1].scene.as_deref().unwrap_or("-"),
                    w[0].composition.as_deref().unwrap_or("-"),
                    w[1].composition.as_deref().unwrap_or("-"),
                );
            }
        }
        "balloon_display" => {
            let base = "grammar,arc,action,composition,balloon";
            let (shown, _) = run(seed, base, &pack, &[("display_prob", "1")], None)?;
            let (hidden, _) = run(seed, &format!("{base},display"), &pack, &[("display_prob", "1"), ("hide_final", "2")], None)?;
            write_outputs(&shown, &pack, &network, &dir.join("display_on"), &all_outputs(), &spec)?;
            write_outputs(&hidden, &pack, &network, &dir.join("display_off"), &all_outputs(), &spec)?;
            let count = |s: &PanelSequence, k: BalloonKind| s.panels.iter().flat_map(|p| &p.balloons).filter(|b| b.kind == k).count();
            for k in BalloonKind::ALL {
                let _ = writeln!(r, "{} balloons: {}", k.as_str(), count(&shown, k));
            }
            let flags: Vec<String> = hidden
                .panels
                .iter()
                .map(|p| p.characters.iter().map(|c| if c.display { "on" } else { "off" }).collect::<Vec<_>>().join("/"))
                .collect();
            let _ = writeln!(r, "display flags with the display layer: {}", flags.join(" "));
        }
        "story_demo" => {
            let layers = "grammar,arc,action,transition,story,balloon";
            let (seq, _) = run(seed, layers, &pack, &[("display_prob", "1")], Some(SAMPLE_STORY))?;
            let (free, _) = run(seed, "grammar,arc,action,transition,balloon", &pack, &[("display_prob", "1")], None)?;
            write_outputs(&seq, &pack, &network, &dir.join("story_on"), &all_outputs(), &spec)?;
            write_outputs(&free, &pack, &network, &dir.join("story_off"), &all_outputs(), &spec)?;
            let scenes: BTreeSet<&str> = seq.panels.iter().filter_map(|p| p.scene.as_deref()).collect();
            let _ = writeln!(r, "scenes: {scenes:?}");
            let _ = writeln!(r, "cast: {:?}", seq.cast());
            for id in seq.cast() {
                let acts: Vec<&str> = seq.panels.iter().filter_map(|p| p.character(&id)).map(|c| c.action.as_str()).collect();
                let _ = writeln!(r, "{id}: {}", acts.join(" -> "));
            }
        }
        other => bail!("unknown showcase `{other}` (expected one of {})", SHOWCASES.join(", ")),
    }
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.txt"), &r)?;
    Ok(r)
}
