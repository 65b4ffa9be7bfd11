//! Parse a task-tree file, print what was found, and show that
//! serializing and reparsing reproduces the same canonical text.

use std::path::Path;

use anyhow::{ensure, Context, Result};

use foon::parse::parse_task_tree_labeled;

fn main() -> Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/boil_water.txt");
    let text = std::fs::read_to_string(&path).context("reading fixture")?;
    let parse = parse_task_tree_labeled("boil_water", &text);

    println!("source: {}", parse.source);
    println!("units: {}", parse.units.len());
    for (i, unit) in parse.units.iter().enumerate() {
        println!("  {}. [{}] key {}", i + 1, unit.motion.name, unit.key());
    }
    if let Some(goal) = &parse.goal {
        println!("goal: {} {:?}", goal.name, goal.states);
    }
    for defect in &parse.defects {
        println!("defect: {defect}");
    }

    let tree = parse.tree().context("tree should have a goal")?;
    let serialized = tree.to_text();
    let reparsed = parse_task_tree_labeled("roundtrip", &serialized);
    let again = reparsed.tree().context("reparse keeps the goal")?;
    ensure!(
        serialized == again.to_text(),
        "serialize ∘ parse ∘ serialize must be the identity"
    );
    ensure!(
        tree.keys() == again.keys(),
        "unit keys must survive the round trip"
    );
    println!("round trip: canonical text and unit keys identical");
    Ok(())
}
