//! Regenerates the committed replay and dataset fixtures from the greek
//! salad text fixtures. Run after editing fixtures/greek/*:
//!
//! ```text
//! cargo run --example record_fixtures
//! ```
//!
//! A scripted client stands in for the live endpoint; the recording
//! wrapper writes one JSON file per request digest into fixtures/replay,
//! which is what every replay-driven test and example reads.

use std::path::Path;

use anyhow::{Context, Result};

use foon::llm::dataset::{align_steps, RecipePair};
use foon::llm::{
    generate_recipe, generate_task_trees, parse_numbered_instructions, DishSpec, LlmConfig,
    RecordingClient, ScriptedClient,
};
use foon::parse::parse_task_tree_labeled;

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let read = |rel: &str| -> Result<String> {
        std::fs::read_to_string(fixtures.join(rel)).with_context(|| format!("reading {rel}"))
    };

    let recipe = read("greek/recipe.txt")?;
    let config = LlmConfig::default();
    let mut scripted = ScriptedClient::new();
    scripted.script(&config.recipe_model, 0, &recipe);
    let mut trees = Vec::new();
    for i in 0..config.samples {
        let text = read(&format!("greek/tree{}.txt", i + 1))?;
        scripted.script(&config.tree_model, i, &text);
        trees.push(text);
    }

    let replay_dir = fixtures.join("replay");
    let recorder = RecordingClient::new(scripted, &replay_dir);
    let dish = DishSpec::new(
        "greek salad",
        ["tomato", "cucumber", "onion", "feta", "olive oil"],
    )?;
    let response = generate_recipe(&recorder, &config, &dish)?;
    let samples = generate_task_trees(&recorder, &config, &response.text);
    for sample in &samples {
        sample.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    println!(
        "recorded 1 recipe and {} tree responses into {}",
        samples.len(),
        replay_dir.display()
    );

    // The aligned pair fixture: recipe steps zipped with the units of a
    // clean candidate (tree2; tree1 carries the seeded apple defect).
    let instructions = parse_numbered_instructions(&recipe)?;
    let parse = parse_task_tree_labeled("tree2", &trees[1]);
    let tree = parse.tree().context("tree2 should declare a goal")?;
    let steps = align_steps("greek-salad", &instructions.steps, &tree)?;
    let pairs = vec![RecipePair {
        recipe_id: "greek-salad".to_string(),
        dish: dish.name.clone(),
        steps,
    }];
    let dataset_dir = fixtures.join("dataset");
    std::fs::create_dir_all(&dataset_dir)?;
    let path = dataset_dir.join("pairs.json");
    std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&pairs)?))?;
    println!("wrote {}", path.display());
    Ok(())
}
