//! Align a recipe's numbered steps with its task tree and pack them into
//! fine-tune records under a token budget, printed as JSON Lines.

use std::path::Path;

use anyhow::{Context, Result};

use foon::llm::dataset::{align_steps, build_finetune_dataset, records_to_jsonl, RecipePair};
use foon::llm::parse_numbered_instructions;
use foon::parse::parse_task_tree_labeled;

fn main() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/greek");

    let recipe = std::fs::read_to_string(dir.join("recipe.txt")).context("reading recipe")?;
    let instructions = parse_numbered_instructions(&recipe)?;

    // tree2 is the clean candidate whose unit count matches the step count.
    let tree_text = std::fs::read_to_string(dir.join("tree2.txt")).context("reading tree")?;
    let parse = parse_task_tree_labeled("tree2", &tree_text);
    anyhow::ensure!(parse.defects.is_empty(), "tree2 should parse clean");
    let tree = parse.tree().context("tree2 should have a goal")?;

    let steps = align_steps("greek-salad", &instructions.steps, &tree)?;
    let pair = RecipePair {
        recipe_id: "greek-salad".to_string(),
        dish: "greek salad".to_string(),
        steps,
    };

    for budget in [2048, 160] {
        let records = build_finetune_dataset(&[pair.clone()], budget)?;
        println!(
            "budget {budget}: {} record(s), completions cover {} step(s)",
            records.len(),
            pair.steps.len()
        );
        print!("{}", records_to_jsonl(&records)?);
        println!();
    }
    Ok(())
}
