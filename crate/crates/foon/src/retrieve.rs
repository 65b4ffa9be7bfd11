//! Backward search from a goal node to kitchen-satisfiable ingredients.
//!
//! A graph is an AND/OR structure: a requirement is an OR over the units
//! producing it, and a unit is an AND over its inputs. [`enumerate_trees`]
//! explores every producer choice depth-first and is the exhaustive
//! reference route; [`retrieve_min_cost`] runs uniform-cost search over the
//! same choice space and must return exactly the enumeration minimum. Both
//! routes resolve a requirement against the kitchen first and against
//! already-chosen units second, branch over producers in unit-key order,
//! never repeat a unit within one tree, and reject choice sets with cyclic
//! dependencies, so their candidate spaces are identical by construction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Graph, ObjectNode, TaskTree};
use crate::normalize::normalize_name;

/// Whether `item` can stand in for `required`: names equal, required
/// states a subset of the item's, required contents a subset of the
/// item's.
pub fn satisfies(item: &ObjectNode, required: &ObjectNode) -> bool {
    item.name == required.name
        && required.states.is_subset(&item.states)
        && required.contents.is_subset(&item.contents)
}

/// What the robot's kitchen holds. Object and contents names are
/// normalized at construction so lookups against consolidated graphs
/// line up; states are kept as written.
#[derive(Clone, Debug, Default)]
pub struct KitchenInventory {
    items: Vec<ObjectNode>,
}

impl KitchenInventory {
    pub fn new(items: Vec<ObjectNode>) -> Self {
        KitchenInventory {
            items: items
                .into_iter()
                .map(|o| o.map_names(normalize_name))
                .collect(),
        }
    }

    pub fn items(&self) -> &[ObjectNode] {
        &self.items
    }

    pub fn satisfies(&self, required: &ObjectNode) -> bool {
        self.items.iter().any(|item| satisfies(item, required))
    }
}

#[derive(Debug, Error)]
pub enum CostModelError {
    #[error("cost for motion '{motion}' is {value}, outside [0, 1]")]
    OutOfRange { motion: String, value: f64 },
    #[error("cost file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-motion execution costs in `[0, 1]`, with a default for motions the
/// model does not list.
#[derive(Clone, Debug, Serialize)]
pub struct CostModel {
    costs: BTreeMap<String, f64>,
    default_cost: f64,
}

impl CostModel {
    pub fn new(
        costs: BTreeMap<String, f64>,
        default_cost: f64,
    ) -> Result<Self, CostModelError> {
        for (motion, &value) in &costs {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(CostModelError::OutOfRange {
                    motion: motion.clone(),
                    value,
                });
            }
        }
        if !(0.0..=1.0).contains(&default_cost) || default_cost.is_nan() {
            return Err(CostModelError::OutOfRange {
                motion: "(default)".to_string(),
                value: default_cost,
            });
        }
        let costs = costs
            .into_iter()
            .map(|(motion, value)| (normalize_name(&motion), value))
            .collect();
        Ok(CostModel {
            costs,
            default_cost,
        })
    }

    /// Every motion costs 1.0.
    pub fn uniform() -> Self {
        CostModel {
            costs: BTreeMap::new(),
            default_cost: 1.0,
        }
    }

    /// Load from JSON: `{"costs": {"pour": 0.1, ...}, "default_cost": 1.0}`.
    pub fn from_json(text: &str) -> Result<Self, CostModelError> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(default)]
            costs: BTreeMap<String, f64>,
            #[serde(default = "default_default_cost")]
            default_cost: f64,
        }
        fn default_default_cost() -> f64 {
            1.0
        }
        let raw: Raw = serde_json::from_str(text)?;
        CostModel::new(raw.costs, raw.default_cost)
    }

    pub fn cost(&self, motion: &str) -> f64 {
        self.costs.get(motion).copied().unwrap_or(self.default_cost)
    }

    pub fn default_cost(&self) -> f64 {
        self.default_cost
    }
}

/// Caps on the backward search. `max_depth` bounds units per tree,
/// `max_trees` bounds how many trees enumeration collects.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub max_depth: usize,
    pub max_trees: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_depth: 64,
            max_trees: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("no path to goal {goal}; unsatisfiable requirements: {}", missing.join("; "))]
    NoPath { goal: String, missing: Vec<String> },
    #[error("no plan available from any graph")]
    NoPlan,
    #[error("goal '{0}' is not a valid goal spec (expected name:state,...)")]
    BadGoalSpec(String),
}

/// A retrieved plan with its costs and search effort counters.
#[derive(Clone, Debug)]
pub struct RetrievalResult {
    pub tree: TaskTree,
    pub total_cost: f64,
    /// Cost per unit, in tree order.
    pub per_unit_costs: Vec<f64>,
    /// Search states expanded.
    pub expansions: usize,
    /// Complete candidate plans seen before settling on this one.
    pub alternatives_considered: usize,
}

/// Render a requirement the way goal specs are written.
pub fn format_requirement(node: &ObjectNode) -> String {
    let states: Vec<&str> = node.states.iter().map(String::as_str).collect();
    if states.is_empty() {
        node.name.clone()
    } else {
        format!("{}:{}", node.name, states.join(","))
    }
}

/// Parse a `name:state,...` goal spec. The name is normalized like any
/// ingredient name; states are only case and whitespace cleaned.
pub fn parse_goal_spec(spec: &str) -> Result<ObjectNode, RetrievalError> {
    let (name_part, states_part) = spec
        .split_once(':')
        .ok_or_else(|| RetrievalError::BadGoalSpec(spec.to_string()))?;
    let name = normalize_name(name_part);
    if name.is_empty() {
        return Err(RetrievalError::BadGoalSpec(spec.to_string()));
    }
    let mut node = ObjectNode::new(&name);
    for state in states_part.split(',') {
        let state = crate::normalize::clean_label(state);
        if !state.is_empty() {
            node.states.insert(state);
        }
    }
    if node.states.is_empty() {
        return Err(RetrievalError::BadGoalSpec(spec.to_string()));
    }
    Ok(node)
}

/// Sum in ascending order so the same multiset of costs always folds to
/// the same float, no matter what order a route discovered the units in.
fn sorted_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut values: Vec<f64> = values.into_iter().collect();
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

/// Total plan cost: the sum of each unit's motion cost. Empty plans are
/// free.
pub fn tree_cost(tree: &TaskTree, costs: &CostModel) -> f64 {
    sorted_sum(tree.units.iter().map(|u| costs.cost(&u.motion.name)))
}

/// Indices of graph units with at least one output satisfying `req`, in
/// unit-key order.
fn producers_satisfying(g: &Graph, req: &ObjectNode) -> Vec<usize> {
    g.producers_for_name(&req.name)
        .into_iter()
        .filter(|&at| g.unit(at).outputs.iter().any(|o| satisfies(o, req)))
        .collect()
}

fn chosen_produce(g: &Graph, chosen: &[usize], req: &ObjectNode) -> bool {
    chosen
        .iter()
        .any(|&at| g.unit(at).outputs.iter().any(|o| satisfies(o, req)))
}

/// A requirement to satisfy during backward search: the node itself and,
/// when it is a unit's input, the position in the chosen list of the unit
/// that needs it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Requirement {
    node: ObjectNode,
    consumer: Option<usize>,
}

/// True when `candidate` is `consumer` itself or any unit it feeds,
/// walking the expansion forest toward the goal producer.
fn feeds_transitively(
    parents: &[Option<usize>],
    candidate: usize,
    mut consumer: Option<usize>,
) -> bool {
    while let Some(pos) = consumer {
        if pos == candidate {
            return true;
        }
        consumer = parents[pos];
    }
    false
}

/// Whether an already-chosen unit can satisfy this requirement. A unit
/// must never feed its own consumer chain: using an output of the
/// consumer itself, or of anything downstream of it, would close a
/// dependency cycle the plan cannot execute.
fn chosen_satisfies(
    g: &Graph,
    chosen: &[usize],
    parents: &[Option<usize>],
    req: &Requirement,
) -> bool {
    chosen.iter().enumerate().any(|(pos, &at)| {
        g.unit(at).outputs.iter().any(|o| satisfies(o, &req.node))
            && !feeds_transitively(parents, pos, req.consumer)
    })
}

/// Which units can ever execute: forward-chain from the kitchen until no
/// further unit's inputs are all satisfiable.
fn forward_fired(g: &Graph, kitchen: &KitchenInventory) -> Vec<bool> {
    let mut fired = vec![false; g.len()];
    loop {
        let mut progressed = false;
        for at in 0..g.len() {
            if fired[at] {
                continue;
            }
            let ready = g.unit(at).inputs.iter().all(|req| {
                kitchen.satisfies(req)
                    || fired
                        .iter()
                        .enumerate()
                        .any(|(i, &f)| f && g.unit(i).outputs.iter().any(|o| satisfies(o, req)))
            });
            if ready {
                fired[at] = true;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    fired
}

/// Requirements in the goal's backward closure that no kitchen item and
/// no executable unit can ever satisfy. Explains why retrieval found no
/// path; the truly absent base ingredients always appear, alongside the
/// downstream requirements they block.
fn unreachable_requirements(
    g: &Graph,
    goal: &ObjectNode,
    kitchen: &KitchenInventory,
) -> Vec<String> {
    let fired = forward_fired(g, kitchen);
    let satisfiable = |req: &ObjectNode| {
        kitchen.satisfies(req)
            || fired
                .iter()
                .enumerate()
                .any(|(i, &f)| f && g.unit(i).outputs.iter().any(|o| satisfies(o, req)))
    };
    let mut seen: BTreeSet<ObjectNode> = BTreeSet::new();
    let mut missing: BTreeSet<String> = BTreeSet::new();
    let mut stack = vec![goal.clone()];
    while let Some(req) = stack.pop() {
        if !seen.insert(req.clone()) || satisfiable(&req) {
            continue;
        }
        missing.insert(format_requirement(&req));
        for at in producers_satisfying(g, &req) {
            for input in &g.unit(at).inputs {
                stack.push(input.clone());
            }
        }
    }
    missing.into_iter().collect()
}

/// Execution order for a chosen unit set: repeatedly emit the smallest-key
/// unit whose inputs are all kitchen-satisfiable or produced by an
/// already-emitted unit. The first chosen unit is the one picked to
/// produce the goal; nothing may depend on it, so it is held back until
/// everything else has fired and the order ends by producing the goal.
/// `None` when the set is cyclic.
fn topo_order(g: &Graph, chosen: &[usize], kitchen: &KitchenInventory) -> Option<Vec<usize>> {
    let Some((&root, rest)) = chosen.split_first() else {
        return Some(Vec::new());
    };
    let mut remaining: Vec<usize> = rest.to_vec();
    remaining.sort_by(|&a, &b| g.unit(a).key().cmp(&g.unit(b).key()));
    remaining.push(root);
    let mut order: Vec<usize> = Vec::new();
    while !remaining.is_empty() {
        let candidates = remaining.len().max(2) - 1;
        let next = remaining[..candidates].iter().position(|&at| {
            g.unit(at)
                .inputs
                .iter()
                .all(|req| kitchen.satisfies(req) || chosen_produce(g, &order, req))
        })?;
        order.push(remaining.remove(next));
    }
    Some(order)
}

fn make_tree(g: &Graph, order: &[usize], goal: &ObjectNode) -> TaskTree {
    let units = order.iter().map(|&at| g.unit(at).clone()).collect();
    TaskTree::new(units, goal.clone())
}

/// Requirements a branch pushes, in reverse sorted order so they pop
/// ascending. Each carries the chosen-list position of the unit that
/// consumes it.
fn push_inputs(pending: &mut Vec<Requirement>, g: &Graph, at: usize, consumer: usize) {
    let mut inputs = g.unit(at).inputs.clone();
    inputs.sort();
    for input in inputs.into_iter().rev() {
        pending.push(Requirement {
            node: input,
            consumer: Some(consumer),
        });
    }
}

/// Exhaustively enumerate execution-sound trees for `goal`, depth-first,
/// producers in unit-key order. A goal the kitchen already satisfies
/// yields exactly the empty tree.
pub fn enumerate_trees(
    g: &Graph,
    goal: &ObjectNode,
    kitchen: &KitchenInventory,
    limits: &SearchLimits,
) -> Result<Vec<TaskTree>, RetrievalError> {
    if kitchen.satisfies(goal) {
        return Ok(vec![TaskTree::new(Vec::new(), goal.clone())]);
    }
    let mut results = Vec::new();
    dfs(
        g,
        kitchen,
        limits,
        Vec::new(),
        Vec::new(),
        vec![Requirement {
            node: goal.clone(),
            consumer: None,
        }],
        goal,
        &mut results,
    );
    if results.is_empty() {
        Err(RetrievalError::NoPath {
            goal: format_requirement(goal),
            missing: unreachable_requirements(g, goal, kitchen),
        })
    } else {
        Ok(results)
    }
}

fn dfs(
    g: &Graph,
    kitchen: &KitchenInventory,
    limits: &SearchLimits,
    chosen: Vec<usize>,
    parents: Vec<Option<usize>>,
    mut pending: Vec<Requirement>,
    goal: &ObjectNode,
    results: &mut Vec<TaskTree>,
) {
    if results.len() >= limits.max_trees {
        return;
    }
    let req = loop {
        match pending.pop() {
            None => {
                if let Some(order) = topo_order(g, &chosen, kitchen) {
                    let tree = make_tree(g, &order, goal);
                    debug_assert!(tree
                        .units
                        .last()
                        .is_some_and(|u| u.outputs.iter().any(|o| satisfies(o, goal))));
                    results.push(tree);
                }
                return;
            }
            Some(req) => {
                if !kitchen.satisfies(&req.node) && !chosen_satisfies(g, &chosen, &parents, &req) {
                    break req;
                }
            }
        }
    };
    for at in producers_satisfying(g, &req.node) {
        if chosen.contains(&at) || chosen.len() + 1 > limits.max_depth {
            continue;
        }
        let mut next_chosen = chosen.clone();
        let mut next_parents = parents.clone();
        let consumer = next_chosen.len();
        next_chosen.push(at);
        next_parents.push(req.consumer);
        let mut next_pending = pending.clone();
        push_inputs(&mut next_pending, g, at, consumer);
        dfs(
            g,
            kitchen,
            limits,
            next_chosen,
            next_parents,
            next_pending,
            goal,
            results,
        );
    }
}

struct QueueNode {
    priority: f64,
    chosen: Vec<usize>,
    parents: Vec<Option<usize>>,
    pending: Vec<Requirement>,
}

impl PartialEq for QueueNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QueueNode {}
impl PartialOrd for QueueNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| self.chosen.len().cmp(&other.chosen.len()))
            .then_with(|| self.chosen.cmp(&other.chosen))
            .then_with(|| self.pending.cmp(&other.pending))
    }
}

/// Minimum-cost plan via uniform-cost search. Agrees exactly with the
/// minimum over [`enumerate_trees`] whenever limits do not bind; ties
/// break toward fewer units, then the lexicographically smallest unit-key
/// sequence.
pub fn retrieve_min_cost(
    g: &Graph,
    goal: &ObjectNode,
    kitchen: &KitchenInventory,
    costs: &CostModel,
    limits: &SearchLimits,
) -> Result<RetrievalResult, RetrievalError> {
    if kitchen.satisfies(goal) {
        return Ok(RetrievalResult {
            tree: TaskTree::new(Vec::new(), goal.clone()),
            total_cost: 0.0,
            per_unit_costs: Vec::new(),
            expansions: 0,
            alternatives_considered: 1,
        });
    }
    let node_priority = |chosen: &[usize]| {
        sorted_sum(chosen.iter().map(|&at| costs.cost(&g.unit(at).motion.name)))
    };
    let mut queue: BinaryHeap<std::cmp::Reverse<QueueNode>> = BinaryHeap::new();
    queue.push(std::cmp::Reverse(QueueNode {
        priority: 0.0,
        chosen: Vec::new(),
        parents: Vec::new(),
        pending: vec![Requirement {
            node: goal.clone(),
            consumer: None,
        }],
    }));
    let mut expansions = 0usize;
    let mut completions: Vec<TaskTree> = Vec::new();
    let mut best_cost: Option<f64> = None;

    while let Some(std::cmp::Reverse(node)) = queue.pop() {
        if let Some(best) = best_cost {
            if node.priority > best {
                break;
            }
        }
        expansions += 1;
        let QueueNode {
            mut pending,
            chosen,
            parents,
            ..
        } = node;
        let req = loop {
            match pending.pop() {
                None => break None,
                Some(req) => {
                    if !kitchen.satisfies(&req.node)
                        && !chosen_satisfies(g, &chosen, &parents, &req)
                    {
                        break Some(req);
                    }
                }
            }
        };
        let Some(req) = req else {
            if let Some(order) = topo_order(g, &chosen, kitchen) {
                let tree = make_tree(g, &order, goal);
                let cost = tree_cost(&tree, costs);
                if best_cost.is_none() {
                    best_cost = Some(cost);
                }
                completions.push(tree);
            }
            continue;
        };
        for at in producers_satisfying(g, &req.node) {
            if chosen.contains(&at) || chosen.len() + 1 > limits.max_depth {
                continue;
            }
            let mut next_chosen = chosen.clone();
            let mut next_parents = parents.clone();
            let consumer = next_chosen.len();
            next_chosen.push(at);
            next_parents.push(req.consumer);
            let mut next_pending = pending.clone();
            push_inputs(&mut next_pending, g, at, consumer);
            queue.push(std::cmp::Reverse(QueueNode {
                priority: node_priority(&next_chosen),
                chosen: next_chosen,
                parents: next_parents,
                pending: next_pending,
            }));
        }
    }

    let alternatives = completions.len();
    let best = completions
        .into_iter()
        .map(|tree| {
            let cost = tree_cost(&tree, costs);
            (tree, cost)
        })
        .min_by(|(ta, ca), (tb, cb)| {
            ca.total_cmp(cb)
                .then_with(|| ta.units.len().cmp(&tb.units.len()))
                .then_with(|| ta.keys().cmp(&tb.keys()))
        });
    match best {
        Some((tree, total_cost)) => {
            let per_unit_costs = tree
                .units
                .iter()
                .map(|u| costs.cost(&u.motion.name))
                .collect();
            Ok(RetrievalResult {
                tree,
                total_cost,
                per_unit_costs,
                expansions,
                alternatives_considered: alternatives,
            })
        }
        None => Err(RetrievalError::NoPath {
            goal: format_requirement(goal),
            missing: unreachable_requirements(g, goal, kitchen),
        }),
    }
}

/// Which graph the final plan came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    Mini,
    Super,
}

impl fmt::Display for PlanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanSource::Mini => f.write_str("mini"),
            PlanSource::Super => f.write_str("super"),
        }
    }
}

/// The final plan choice between the candidate-only graph and the
/// reference-augmented graph.
#[derive(Clone, Debug)]
pub struct FinalSelection {
    pub result: RetrievalResult,
    pub source: PlanSource,
    pub mini_cost: Option<f64>,
    pub super_cost: Option<f64>,
    /// `mini - super` when both plans exist.
    pub improvement: Option<f64>,
    /// Set when the super plan costs more than the mini plan, which a
    /// superset graph should never allow. Never silently dropped.
    pub cost_regression: Option<String>,
}

/// Prefer the super-graph plan; fall back to the mini plan only when no
/// super plan exists. Errors with `NoPlan` when neither exists.
pub fn select_final(
    mini: Option<RetrievalResult>,
    superset: Option<RetrievalResult>,
) -> Result<FinalSelection, RetrievalError> {
    let mini_cost = mini.as_ref().map(|r| r.total_cost);
    let super_cost = superset.as_ref().map(|r| r.total_cost);
    let improvement = match (mini_cost, super_cost) {
        (Some(m), Some(s)) => Some(m - s),
        _ => None,
    };
    let cost_regression = match (mini_cost, super_cost) {
        (Some(m), Some(s)) if s > m => Some(format!(
            "super-graph plan costs {s} but the mini-graph plan costs {m}; \
             a superset graph should never retrieve worse"
        )),
        _ => None,
    };
    let (result, source) = match (mini, superset) {
        (_, Some(s)) => (s, PlanSource::Super),
        (Some(m), None) => (m, PlanSource::Mini),
        (None, None) => return Err(RetrievalError::NoPlan),
    };
    Ok(FinalSelection {
        result,
        source,
        mini_cost,
        super_cost,
        improvement,
        cost_regression,
    })
}
