use std::collections::BTreeSet;

use comicgen_core::render::{emit_manifest, parse_manifest, render_pages, PageSpec};
use comicgen_core::{generate, parse_layers, ContentPack, LayerContext};

const LAYERS: &str = "grammar,arc,action,composition,transition,balloon,display";

#[test]
fn manifests_round_trip() {
    let pack = ContentPack::sample();
    let ctx = LayerContext::new(&pack).unwrap();
    let layers = parse_layers(LAYERS).unwrap();
    for seed in 0..100 {
        let seq = generate(seed, &layers, &ctx).unwrap();
        let text = emit_manifest(&seq).unwrap();
        let back = parse_manifest(&text).unwrap();
        assert_eq!(emit_manifest(&back).unwrap(), text);
        assert_eq!(back.panels.len(), seq.len());
        assert_eq!(back.seed, seed);
    }
}

#[test]
fn pages_parse_with_unique_ids_and_every_panel_once() {
    let pack = ContentPack::sample();
    let ctx = LayerContext::new(&pack).unwrap();
    let layers = parse_layers(LAYERS).unwrap();
    for seed in 0..100 {
        let seq = generate(seed, &layers, &ctx).unwrap();
        let spec = PageSpec {
            columns: 2,
            rows_per_page: Some(1),
            ..PageSpec::default()
        };
        let pages = render_pages(&seq, &pack, &spec).unwrap();
        assert_eq!(pages.len(), seq.len().div_ceil(2));
        let mut ids = BTreeSet::new();
        let mut panels = Vec::new();
        for svg in &pages {
            let doc = roxmltree::Document::parse(svg).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
            for n in doc.descendants().filter(|n| n.is_element()) {
                if let Some(id) = n.attribute("id") {
                    if id != "page-background" {
                        assert!(ids.insert(id.to_string()), "duplicate id {id}");
                    }
                }
                if n.attribute("class") == Some("panel") {
                    panels.push(n.attribute("id").unwrap().to_string());
                }
            }
        }
        let want: Vec<String> = (0..seq.len()).map(|i| format!("panel-{i}")).collect();
        assert_eq!(panels, want);
    }
}
