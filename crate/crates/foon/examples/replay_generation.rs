//! Replay the committed greek salad recordings: the same requests that
//! were recorded return the same texts, and an unrecorded request fails
//! loudly instead of inventing one.

use std::path::Path;

use anyhow::Result;

use foon::llm::{
    generate_recipe, generate_task_trees, DishSpec, GenerationClient, GenerationRequest,
    LlmConfig, ReplayClient,
};
use foon::parse::parse_task_tree_labeled;

fn main() -> Result<()> {
    let replay_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay");
    let client = ReplayClient::new(&replay_dir);
    let config = LlmConfig::default();
    let dish = DishSpec::new(
        "greek salad",
        ["tomato", "cucumber", "onion", "feta", "olive oil"],
    )?;

    let recipe = generate_recipe(&client, &config, &dish)?;
    println!("recipe ({} lines):", recipe.text.lines().count());
    for line in recipe.text.lines() {
        println!("  {line}");
    }

    let samples = generate_task_trees(&client, &config, &recipe.text);
    println!("\n{} tree samples replayed:", samples.len());
    for (i, sample) in samples.iter().enumerate() {
        let text = sample.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
        let parse = parse_task_tree_labeled(&format!("tree{}", i + 1), &text.text);
        println!(
            "  sample {}: {} units, {} defect(s)",
            i + 1,
            parse.units.len(),
            parse.defects.len()
        );
    }

    // A request that was never recorded misses instead of guessing.
    let unknown = GenerationRequest {
        model: config.tree_model.clone(),
        prompt: "something never asked before".to_string(),
        n: 1,
        max_tokens: config.max_tokens,
        sample_index: 0,
    };
    match client.generate(&unknown) {
        Err(e) => println!("\nunrecorded request: {e}"),
        Ok(_) => anyhow::bail!("unrecorded request unexpectedly succeeded"),
    }
    Ok(())
}
