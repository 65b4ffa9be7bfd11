//! Validate the five greek salad candidate trees against a transition
//! table compiled from the reference graph, printing one diagnostic line
//! per defect the way the CLI does.

use std::path::Path;

use anyhow::{Context, Result};

use foon::parse::{parse_graph_labeled, parse_task_tree_labeled};
use foon::validate::{compile_transition_table, validate_parsed, Mode};

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reference_text =
        std::fs::read_to_string(fixtures.join("reference.txt")).context("reference")?;
    let reference = parse_graph_labeled("reference", &reference_text);
    let table = compile_transition_table(&reference.graph);
    println!(
        "table: {} transition pairs from {} reference units",
        table.len(),
        reference.graph.len()
    );

    for i in 1..=5 {
        let name = format!("tree{i}");
        let text = std::fs::read_to_string(fixtures.join(format!("greek/{name}.txt")))
            .with_context(|| name.clone())?;
        let parse = parse_task_tree_labeled(&name, &text);
        let report = validate_parsed(&parse, &table, Mode::Relaxed);
        let verdict = if report.valid { "valid" } else { "invalid" };
        println!("{name}: {verdict} ({} units)", report.units.len());
        for line in report.lines() {
            println!("  {line}");
        }
    }
    Ok(())
}
