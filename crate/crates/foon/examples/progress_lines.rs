//! Derive and render per-ingredient progress lines for the boil-water
//! tree: one timeline per object, one entry per state change.

use std::path::Path;

use anyhow::{Context, Result};

use foon::parse::parse_task_tree_labeled;
use foon::progress::{derive_progress_lines, render_progress_lines};

fn main() -> Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/boil_water.txt");
    let text = std::fs::read_to_string(&path).context("reading fixture")?;
    let parse = parse_task_tree_labeled("boil_water", &text);
    let tree = parse.tree().context("tree should have a goal")?;

    let lines = derive_progress_lines(&tree);
    println!("{} ingredients tracked:", lines.len());
    print!("{}", render_progress_lines(&lines));
    Ok(())
}
