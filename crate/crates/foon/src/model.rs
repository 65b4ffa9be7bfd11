//! Core graph model: object and motion nodes, functional units, graphs,
//! and task trees.
//!
//! A functional unit pairs one or more input objects and one or more output
//! objects with exactly one motion. Its identity is the [`UnitKey`]: the
//! unit's canonical text with inputs and outputs in sorted order, which
//! deliberately excludes provenance so the same step learned from two
//! sources collapses to one unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::normalize::clean_label;

/// An ingredient, tool, or container with its state set and, for
/// containers, the normalized names of what it holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectNode {
    pub name: String,
    pub states: BTreeSet<String>,
    pub contents: BTreeSet<String>,
}

impl ObjectNode {
    /// Build a stateless node. Labels pass through [`clean_label`] so text
    /// produced from programmatic nodes stays line-safe and canonical.
    pub fn new(name: &str) -> Self {
        ObjectNode {
            name: clean_label(name),
            states: BTreeSet::new(),
            contents: BTreeSet::new(),
        }
    }

    pub fn with_states<'a>(name: &str, states: impl IntoIterator<Item = &'a str>) -> Self {
        let mut node = ObjectNode::new(name);
        for s in states {
            node.add_state(s);
        }
        node
    }

    pub fn add_state(&mut self, state: &str) {
        let state = clean_label(state);
        if !state.is_empty() {
            self.states.insert(state);
        }
    }

    pub fn add_content(&mut self, content: &str) {
        let content = clean_label(content);
        if !content.is_empty() {
            self.contents.insert(content);
        }
    }

    /// Rewrite every label through `f`.
    pub fn map_labels(&self, f: impl Fn(&str) -> String) -> Self {
        ObjectNode {
            name: f(&self.name),
            states: self.states.iter().map(|s| f(s)).collect(),
            contents: self.contents.iter().map(|c| f(c)).collect(),
        }
    }

    /// Rewrite only the name and contents entries through `f`. States
    /// stay as written: they are descriptions, not ingredient names, and
    /// must never be singularized.
    pub fn map_names(&self, f: impl Fn(&str) -> String) -> Self {
        ObjectNode {
            name: f(&self.name),
            states: self.states.clone(),
            contents: self.contents.iter().map(|c| f(c)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MotionNode {
    pub name: String,
}

impl MotionNode {
    pub fn new(name: &str) -> Self {
        MotionNode {
            name: clean_label(name),
        }
    }
}

/// Where a unit came from: a source label (candidate tree, reference graph,
/// file path), the unit's 1-based block ordinal in that source, and its
/// line span.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceRef {
    pub source: String,
    pub block: usize,
    pub lines: (usize, usize),
}

impl SourceRef {
    pub fn new(source: &str, block: usize, lines: (usize, usize)) -> Self {
        SourceRef {
            source: source.to_string(),
            block,
            lines,
        }
    }
}

impl fmt::Display for SourceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.source, self.block)
    }
}

#[derive(Clone, Debug)]
pub struct FunctionalUnit {
    pub inputs: Vec<ObjectNode>,
    pub motion: MotionNode,
    pub outputs: Vec<ObjectNode>,
    /// Every source this unit was seen in; grows when duplicates merge.
    pub sources: Vec<SourceRef>,
}

impl FunctionalUnit {
    pub fn new(inputs: Vec<ObjectNode>, motion: MotionNode, outputs: Vec<ObjectNode>) -> Self {
        FunctionalUnit {
            inputs,
            motion,
            outputs,
            sources: Vec::new(),
        }
    }

    pub fn with_source(mut self, source: SourceRef) -> Self {
        self.sources.push(source);
        self
    }

    /// Canonical text: the unit in file format with inputs and outputs each
    /// in sorted node order. This is also the serialized form, so identity
    /// and round-tripping share one definition.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let mut sorted_in: Vec<&ObjectNode> = self.inputs.iter().collect();
        sorted_in.sort();
        let mut sorted_out: Vec<&ObjectNode> = self.outputs.iter().collect();
        sorted_out.sort();
        for node in sorted_in {
            write_object(&mut out, node);
        }
        out.push_str("M\t");
        out.push_str(&self.motion.name);
        out.push('\n');
        for node in sorted_out {
            write_object(&mut out, node);
        }
        out
    }

    pub fn key(&self) -> UnitKey {
        UnitKey(self.text())
    }

    /// Rewrite every label through `f`, keeping provenance.
    pub fn map_labels(&self, f: impl Fn(&str) -> String) -> Self {
        FunctionalUnit {
            inputs: self.inputs.iter().map(|o| o.map_labels(&f)).collect(),
            motion: MotionNode {
                name: f(&self.motion.name),
            },
            outputs: self.outputs.iter().map(|o| o.map_labels(&f)).collect(),
            sources: self.sources.clone(),
        }
    }

    /// Rewrite object names and contents through `f`, leaving states,
    /// the motion, and provenance alone.
    pub fn map_names(&self, f: impl Fn(&str) -> String) -> Self {
        FunctionalUnit {
            inputs: self.inputs.iter().map(|o| o.map_names(&f)).collect(),
            motion: self.motion.clone(),
            outputs: self.outputs.iter().map(|o| o.map_names(&f)).collect(),
            sources: self.sources.clone(),
        }
    }

    fn merge_sources(&mut self, other: &FunctionalUnit) {
        for src in &other.sources {
            if !self.sources.contains(src) {
                self.sources.push(src.clone());
            }
        }
    }
}

fn write_object(out: &mut String, node: &ObjectNode) {
    out.push_str("O\t");
    out.push_str(&node.name);
    out.push('\n');
    for state in &node.states {
        out.push_str("S\t");
        out.push_str(state);
        out.push('\n');
    }
    if !node.contents.is_empty() {
        out.push_str("C\t");
        out.push_str(
            &node
                .contents
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
}

/// Canonical unit identity. Ordered lexicographically by canonical text;
/// two units have equal keys exactly when their canonical forms are equal.
/// Serializes as the short digest, which is what reports address units by.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitKey(String);

impl Serialize for UnitKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.digest())
    }
}

impl UnitKey {
    pub fn canonical_text(&self) -> &str {
        &self.0
    }

    /// Short stable identifier for reports and logs.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.0.as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for UnitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digest())
    }
}

/// Outcome of inserting a unit into a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inserted {
    Added,
    /// A unit with the same key already existed; provenance was merged.
    Deduplicated,
}

/// A deduplicated set of functional units with producer and consumer
/// indices. Insertion order is preserved and meaningful: serialization
/// walks units in that order.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    units: Vec<FunctionalUnit>,
    index: BTreeMap<UnitKey, usize>,
    producers: BTreeMap<ObjectNode, Vec<usize>>,
    consumers: BTreeMap<ObjectNode, Vec<usize>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn insert(&mut self, unit: FunctionalUnit) -> Inserted {
        let key = unit.key();
        if let Some(&at) = self.index.get(&key) {
            self.units[at].merge_sources(&unit);
            return Inserted::Deduplicated;
        }
        let at = self.units.len();
        for node in &unit.outputs {
            self.producers.entry(node.clone()).or_default().push(at);
        }
        for node in &unit.inputs {
            self.consumers.entry(node.clone()).or_default().push(at);
        }
        self.units.push(unit);
        self.index.insert(key, at);
        Inserted::Added
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[FunctionalUnit] {
        &self.units
    }

    pub fn unit(&self, at: usize) -> &FunctionalUnit {
        &self.units[at]
    }

    pub fn contains_key(&self, key: &UnitKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &UnitKey> {
        self.index.keys()
    }

    /// Indices of units producing exactly this canonical node.
    pub fn producers_of(&self, node: &ObjectNode) -> &[usize] {
        self.producers.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Indices of units producing any node with this name, in unit-key
    /// order. Callers filter further by state and content satisfaction.
    pub fn producers_for_name(&self, name: &str) -> Vec<usize> {
        let floor = ObjectNode::new(name);
        let mut found: BTreeSet<usize> = BTreeSet::new();
        for (node, units) in self.producers.range(floor..) {
            if node.name != name {
                break;
            }
            found.extend(units.iter().copied());
        }
        let mut sorted: Vec<usize> = found.into_iter().collect();
        sorted.sort_by(|&a, &b| self.units[a].key().cmp(&self.units[b].key()));
        sorted
    }

    /// Indices of units consuming any node with this name.
    pub fn consumers_for_name(&self, name: &str) -> Vec<usize> {
        let floor = ObjectNode::new(name);
        let mut found: BTreeSet<usize> = BTreeSet::new();
        for (node, units) in self.consumers.range(floor..) {
            if node.name != name {
                break;
            }
            found.extend(units.iter().copied());
        }
        found.into_iter().collect()
    }

    /// Serialize: units in insertion order, canonical inside, each block
    /// closed with a `//` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for unit in &self.units {
            out.push_str(&unit.text());
            out.push_str("//\n");
        }
        out
    }

    /// Indices must always be rebuildable from the unit list alone.
    /// Used by tests to pin index consistency.
    pub fn indices_consistent(&self) -> bool {
        let mut fresh = Graph::new();
        for unit in &self.units {
            fresh.insert(unit.clone());
        }
        fresh.index == self.index
            && fresh.producers == self.producers
            && fresh.consumers == self.consumers
    }
}

/// An ordered plan: the goal node plus the units that produce it. Parsed
/// trees keep file order and make no soundness promise; retrieved trees are
/// execution-ordered with the goal produced by the final unit.
#[derive(Clone, Debug)]
pub struct TaskTree {
    pub units: Vec<FunctionalUnit>,
    pub goal: ObjectNode,
}

impl TaskTree {
    pub fn new(units: Vec<FunctionalUnit>, goal: ObjectNode) -> Self {
        TaskTree { units, goal }
    }

    /// Serialize: `GOAL` header, then units in tree order, canonical inside.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("GOAL\t");
        out.push_str(&self.goal.name);
        out.push('\t');
        out.push_str(
            &self
                .goal
                .states
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for unit in &self.units {
            out.push_str(&unit.text());
            out.push_str("//\n");
        }
        out
    }

    pub fn keys(&self) -> Vec<UnitKey> {
        self.units.iter().map(FunctionalUnit::key).collect()
    }
}
