//! The full pipeline against the committed greek salad recordings: dish
//! to recipe to candidate trees to merged graphs to the cheapest plan,
//! with every intermediate written under target/end_to_end.

use std::path::Path;

use anyhow::{Context, Result};

use foon::llm::{DishSpec, LlmConfig, ReplayClient};
use foon::retrieve::SearchLimits;
use foon::validate::Mode;
use foon::{run_pipeline, PipelineConfig};

fn main() -> Result<()> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let fixtures = manifest.join("fixtures");
    let out_dir = manifest.join("target/end_to_end");

    let config = PipelineConfig {
        dish: DishSpec::new(
            "greek salad",
            ["tomato", "cucumber", "onion", "feta", "olive oil"],
        )?,
        llm: LlmConfig::default(),
        reference_path: fixtures.join("reference.txt"),
        kitchen_path: fixtures.join("kitchen.txt"),
        costs_path: Some(fixtures.join("robot.json")),
        out_dir: out_dir.clone(),
        mode: Mode::Relaxed,
        limits: SearchLimits::default(),
    };

    let client = ReplayClient::new(fixtures.join("replay"));
    let outcome = run_pipeline(&client, &config).context("pipeline run")?;

    println!("recipe steps: {}", outcome.recipe_steps);
    println!("candidate trees: {}", outcome.candidates);
    if let Some(report) = &outcome.merge {
        println!(
            "merge: {} parsed = {} kept + {} dropped + {} duplicates",
            report.total, report.kept, report.dropped_invalid, report.deduplicated
        );
    }
    let selection = &outcome.selection;
    println!(
        "plan: {:?} route, cost {:.2} over {} units",
        selection.source,
        selection.result.total_cost,
        selection.result.tree.units.len()
    );
    if let (Some(mini), Some(sup)) = (selection.mini_cost, selection.super_cost) {
        println!("  mini-graph plan {mini:.2}, super-graph plan {sup:.2}");
    }
    for warning in &outcome.warnings {
        println!("warning: {warning}");
    }
    println!("\nartifacts under {}:", outcome.out_dir.display());
    for path in &outcome.artifacts {
        let rel = path.strip_prefix(&outcome.out_dir).unwrap_or(path);
        println!("  {}", rel.display());
    }
    Ok(())
}
