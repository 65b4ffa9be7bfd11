//! Retrieve plans for a milkshake from a candidate-only graph and from
//! the same graph widened by a reference, showing why the widened graph
//! wins: both exhaustive enumeration and best-first search are run, and
//! they agree on the minimum.

use std::path::Path;

use anyhow::{ensure, Context, Result};

use foon::merge::merge_graphs;
use foon::parse::{parse_graph_labeled, parse_inventory};
use foon::retrieve::{
    enumerate_trees, retrieve_min_cost, select_final, tree_cost, CostModel, KitchenInventory,
    SearchLimits,
};

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig4");
    let read = |name: &str| -> Result<String> {
        std::fs::read_to_string(fixtures.join(name)).with_context(|| name.to_string())
    };

    let mini = parse_graph_labeled("mini", &read("mini.txt")?).graph;
    let reference = parse_graph_labeled("reference", &read("reference.txt")?).graph;
    let superset = merge_graphs(&mini, &reference).graph;
    let kitchen = KitchenInventory::new(parse_inventory(&read("kitchen.txt")?).items);
    let costs = CostModel::from_json(&read("costs.json")?)?;
    let goal = foon::retrieve::parse_goal_spec("milkshake:blended")?;
    let limits = SearchLimits::default();

    for (label, graph) in [("mini", &mini), ("super", &superset)] {
        let trees = enumerate_trees(graph, &goal, &kitchen, &limits)?;
        println!("{label}: {} complete trees", trees.len());
        for tree in &trees {
            let motions: Vec<&str> =
                tree.units.iter().map(|u| u.motion.name.as_str()).collect();
            println!("  cost {:.2}: {}", tree_cost(tree, &costs), motions.join(", "));
        }
        let best = retrieve_min_cost(graph, &goal, &kitchen, &costs, &limits)?;
        let enumerated_min = trees
            .iter()
            .map(|t| tree_cost(t, &costs))
            .fold(f64::INFINITY, f64::min);
        ensure!(
            best.total_cost == enumerated_min,
            "search and enumeration must agree"
        );
        println!("  minimum by search: {:.2}", best.total_cost);
    }

    let mini_best = retrieve_min_cost(&mini, &goal, &kitchen, &costs, &limits).ok();
    let super_best = retrieve_min_cost(&superset, &goal, &kitchen, &costs, &limits).ok();
    let selection = select_final(mini_best, super_best)?;
    println!(
        "final: {} plan at {:.2} (improvement {:.2})",
        selection.source,
        selection.result.total_cost,
        selection.improvement.unwrap_or(0.0)
    );
    Ok(())
}
