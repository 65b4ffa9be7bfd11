//! Per-ingredient state timelines for a task tree, the compact rendering
//! a cook can glance at to follow what happens to each object.
//!
//! An ingredient's timeline advances when a unit's output changes its
//! state set, or when it enters a container through a contents list,
//! which adds a pseudo-state `in <container>`. Pseudo-states render after
//! the states an object carries itself; change detection ignores order.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::TaskTree;

/// One timeline step. Step 0 is the state an ingredient was first
/// required in, before any motion touched it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgressEntry {
    pub step: usize,
    pub states: Vec<String>,
    pub motion: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgressLine {
    pub ingredient: String,
    pub timeline: Vec<ProgressEntry>,
}

fn as_set(states: &[String]) -> BTreeSet<&str> {
    states.iter().map(String::as_str).collect()
}

/// Derive one line per object name the tree touches, sorted by name.
/// Units are numbered from 1 in execution order.
pub fn derive_progress_lines(tree: &TaskTree) -> Vec<ProgressLine> {
    let mut lines: BTreeMap<String, ProgressLine> = BTreeMap::new();
    let mut current: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, unit) in tree.units.iter().enumerate() {
        let step = i + 1;
        for input in &unit.inputs {
            if !lines.contains_key(&input.name) {
                let states: Vec<String> = input.states.iter().cloned().collect();
                lines.insert(
                    input.name.clone(),
                    ProgressLine {
                        ingredient: input.name.clone(),
                        timeline: vec![ProgressEntry {
                            step: 0,
                            states: states.clone(),
                            motion: None,
                        }],
                    },
                );
                current.insert(input.name.clone(), states);
            }
        }
        // One prospective next state per name this unit touches: direct
        // outputs first, then containment pseudo-states layered on top.
        let mut next: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for output in &unit.outputs {
            next.insert(output.name.clone(), output.states.iter().cloned().collect());
        }
        for output in &unit.outputs {
            let pseudo = format!("in {}", output.name);
            for content in &output.contents {
                let base = next
                    .get(content)
                    .or_else(|| current.get(content))
                    .cloned()
                    .unwrap_or_default();
                if !base.iter().any(|s| s == &pseudo) {
                    let mut with = base;
                    with.push(pseudo.clone());
                    next.insert(content.clone(), with);
                } else {
                    next.entry(content.clone()).or_insert(base);
                }
            }
        }
        for (name, states) in next {
            let changed = match current.get(&name) {
                Some(cur) => as_set(cur) != as_set(&states),
                None => true,
            };
            if !changed {
                continue;
            }
            let line = lines.entry(name.clone()).or_insert_with(|| ProgressLine {
                ingredient: name.clone(),
                timeline: Vec::new(),
            });
            line.timeline.push(ProgressEntry {
                step,
                states: states.clone(),
                motion: Some(unit.motion.name.clone()),
            });
            current.insert(name, states);
        }
    }
    lines.into_values().collect()
}

/// Render lines as `name: states -> [motion] states -> ...`, one per
/// ingredient, in the order given.
pub fn render_progress_lines(lines: &[ProgressLine]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.ingredient);
        out.push_str(": ");
        let parts: Vec<String> = line
            .timeline
            .iter()
            .map(|e| match &e.motion {
                None => e.states.join(", "),
                Some(motion) => format!("[{}] {}", motion, e.states.join(", ")),
            })
            .collect();
        out.push_str(&parts.join(" -> "));
        out.push('\n');
    }
    out
}
