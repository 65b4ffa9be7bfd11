//! Merge the greek salad candidates into a mini graph, then widen it
//! with the reference graph into the super graph, printing the full
//! accounting at each stage.

use std::path::Path;

use anyhow::{Context, Result};

use foon::merge::{consolidate, merge_graphs, merge_trees};
use foon::parse::{parse_graph_labeled, parse_task_tree_labeled};
use foon::validate::{compile_transition_table, Mode};

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reference_text =
        std::fs::read_to_string(fixtures.join("reference.txt")).context("reference")?;
    let reference = parse_graph_labeled("reference", &reference_text);
    let table = compile_transition_table(&reference.graph);

    let mut parses = Vec::new();
    for i in 1..=5 {
        let name = format!("tree{i}");
        let text = std::fs::read_to_string(fixtures.join(format!("greek/{name}.txt")))
            .with_context(|| name.clone())?;
        parses.push(parse_task_tree_labeled(&name, &text));
    }

    let (mini, report) = merge_trees(&parses, &table, Mode::Relaxed)?;
    println!(
        "candidates: {} units in, {} kept, {} dropped, {} duplicates",
        report.total, report.kept, report.dropped_invalid, report.deduplicated
    );
    for dropped in &report.dropped {
        println!("  dropped {} from {}", dropped.key, dropped.source);
        for defect in &dropped.defects {
            println!("    {}: {}", defect.kind_name(), defect.detail());
        }
    }

    let (consolidated, renames) = consolidate(&mini);
    for (from, to) in &renames {
        println!("rename: {from} -> {to}");
    }
    println!("mini: {} units after consolidation", consolidated.len());

    let merged = merge_graphs(&mini, &reference.graph);
    println!(
        "super: {} units ({} candidate, {} reference, {} shared by both)",
        merged.graph.len(),
        merged.from_first,
        merged.from_second,
        merged.shared
    );
    Ok(())
}
