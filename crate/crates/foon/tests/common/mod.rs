//! Shared helpers for integration tests: fixture loading, a seeded
//! random instance generator, and an independent executability check.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foon::model::{FunctionalUnit, Graph, MotionNode, ObjectNode, TaskTree};
use foon::parse::{parse_graph_labeled, parse_inventory, parse_task_tree_labeled, TreeParse};
use foon::retrieve::{satisfies, CostModel, KitchenInventory};

pub fn fixture_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Graph and tree files whose units are trusted to be correct. The greek
/// candidate trees are deliberately excluded: they carry seeded defects.
pub fn trusted_graph_files() -> Vec<PathBuf> {
    let mut files = vec![
        fixture_path("reference.txt"),
        fixture_path("boil_water.txt"),
        fixture_path("fig4/mini.txt"),
        fixture_path("fig4/reference.txt"),
    ];
    let mut recipes: Vec<PathBuf> = std::fs::read_dir(fixture_path("recipes"))
        .expect("recipes dir")
        .map(|e| e.expect("dir entry").path())
        .collect();
    recipes.sort();
    files.extend(recipes);
    files
}

pub fn greek_tree_files() -> Vec<PathBuf> {
    (1..=5).map(|i| fixture_path(&format!("greek/tree{i}.txt"))).collect()
}

pub fn read_fixture(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

pub fn load_tree(path: &Path) -> TreeParse {
    let name = path.file_stem().expect("file name").to_string_lossy().to_string();
    let parse = parse_task_tree_labeled(&name, &read_fixture(path));
    assert!(
        parse.defects.is_empty(),
        "{} has parse defects: {:?}",
        path.display(),
        parse.defects
    );
    parse
}

pub fn load_graph(path: &Path) -> Graph {
    let name = path.file_stem().expect("file name").to_string_lossy().to_string();
    let parsed = parse_graph_labeled(&name, &read_fixture(path));
    assert!(
        parsed.defects.is_empty(),
        "{} has parse defects: {:?}",
        path.display(),
        parsed.defects
    );
    parsed.graph
}

pub fn load_kitchen(path: &Path) -> KitchenInventory {
    let parsed = parse_inventory(&read_fixture(path));
    assert!(
        parsed.defects.is_empty(),
        "{} has parse defects: {:?}",
        path.display(),
        parsed.defects
    );
    KitchenInventory::new(parsed.items)
}

pub fn graph_of(units: &[FunctionalUnit]) -> Graph {
    let mut g = Graph::new();
    for unit in units {
        g.insert(unit.clone());
    }
    g
}

/// Union of every trusted fixture file, deduplicated.
pub fn pool_graph() -> Graph {
    let mut g = Graph::new();
    for path in trusted_graph_files() {
        for unit in load_graph(&path).units() {
            g.insert(unit.clone());
        }
    }
    g
}

/// Kitchen containing exactly the tree's unproduced inputs.
pub fn kitchen_from_leaves(units: &[FunctionalUnit]) -> KitchenInventory {
    // Units come in execution order, so an input the recipe itself must be
    // handed is one no earlier unit produced. A whole-list check would
    // miss items like water poured into a pitcher, where the pouring
    // unit's own output still satisfies its input.
    let mut leaves: Vec<ObjectNode> = Vec::new();
    for (i, unit) in units.iter().enumerate() {
        for input in &unit.inputs {
            let produced = units[..i]
                .iter()
                .any(|u| u.outputs.iter().any(|o| satisfies(o, input)));
            if !produced && !leaves.contains(input) {
                leaves.push(input.clone());
            }
        }
    }
    KitchenInventory::new(leaves)
}

/// Step the tree forward from the kitchen, requiring every input to be
/// available when its unit runs. Independent of the search code.
pub fn assert_executable(tree: &TaskTree, kitchen: &KitchenInventory) {
    let mut available: Vec<ObjectNode> = kitchen.items().to_vec();
    for (i, unit) in tree.units.iter().enumerate() {
        for input in &unit.inputs {
            assert!(
                available.iter().any(|have| satisfies(have, input)),
                "unit {} ({}) needs {:?} which is not available",
                i + 1,
                unit.motion.name,
                input
            );
        }
        available.extend(unit.outputs.iter().cloned());
    }
    assert!(
        tree.units
            .last()
            .map(|u| u.outputs.iter().any(|o| satisfies(o, &tree.goal)))
            .unwrap_or_else(|| kitchen.satisfies(&tree.goal)),
        "tree does not end by producing its goal"
    );
}

pub struct RandomInstance {
    pub graph: Graph,
    pub goal: ObjectNode,
    pub kitchen: KitchenInventory,
    pub costs: CostModel,
}

const NAMES: [&str; 6] = ["apple", "bean", "corn", "dough", "egg", "flour"];
const STATES: [&str; 6] = ["raw", "chopped", "cooked", "mixed", "baked", "whole"];
const MOTIONS: [&str; 5] = ["slice", "boil", "stir", "bake", "fry"];

fn random_node(rng: &mut ChaCha8Rng, names: &[&str]) -> ObjectNode {
    let name = names.choose(rng).expect("names");
    let mut node = ObjectNode::new(name);
    let count = rng.gen_range(1..=2);
    for _ in 0..count {
        node.add_state(STATES.choose(rng).expect("states"));
    }
    node
}

/// Forward-chained random instance: units mostly consume already
/// reachable nodes, so a good share of goals are solvable; names come
/// pre-normalized so consolidation is the identity.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name_count = rng.gen_range(3..=6);
    let names: Vec<&str> = NAMES[..name_count].to_vec();

    let kitchen_items: Vec<ObjectNode> = names
        .iter()
        .map(|name| {
            let mut node = ObjectNode::new(name);
            node.add_state(STATES.choose(&mut rng).expect("states"));
            node
        })
        .collect();
    let mut reachable = kitchen_items.clone();

    let mut graph = Graph::new();
    let unit_count = rng.gen_range(1..=12);
    for _ in 0..unit_count {
        let input_count = rng.gen_range(1..=3.min(reachable.len()));
        let mut inputs: Vec<ObjectNode> = Vec::new();
        for _ in 0..input_count {
            let pick = reachable.choose(&mut rng).expect("reachable").clone();
            if !inputs.contains(&pick) {
                inputs.push(pick);
            }
        }
        // A dash of noise: sometimes require a node nothing provides.
        if rng.gen_bool(0.1) {
            let noise = random_node(&mut rng, &names);
            if !inputs.contains(&noise) {
                inputs.push(noise);
            }
        }
        let motion = MotionNode::new(MOTIONS.choose(&mut rng).expect("motions"));
        let output_count = rng.gen_range(1..=2);
        let mut outputs: Vec<ObjectNode> = Vec::new();
        for _ in 0..output_count {
            let node = random_node(&mut rng, &names);
            if !outputs.contains(&node) {
                outputs.push(node);
            }
        }
        reachable.extend(outputs.iter().cloned());
        graph.insert(FunctionalUnit::new(inputs, motion, outputs));
    }

    let goal = if rng.gen_bool(0.85) {
        reachable.choose(&mut rng).expect("reachable").clone()
    } else {
        random_node(&mut rng, &names)
    };

    let mut costs = BTreeMap::new();
    for motion in MOTIONS {
        let hundredths: u32 = rng.gen_range(0..=100);
        costs.insert(motion.to_string(), f64::from(hundredths) / 100.0);
    }
    RandomInstance {
        graph,
        goal,
        kitchen: KitchenInventory::new(kitchen_items),
        costs: CostModel::new(costs, 1.0).expect("costs in range"),
    }
}
