//! Folding validated candidate trees into one graph, and widening that
//! graph with a trusted reference network.
//!
//! Units merge independently: a tree with one bad unit still contributes
//! its good ones. Every input unit is accounted for exactly once, so
//! `kept + dropped_invalid + deduplicated == total` always holds, and
//! dropped units keep their provenance and defects instead of vanishing.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Graph, Inserted, SourceRef, UnitKey};
use crate::normalize::normalize_name;
use crate::parse::TreeParse;
use crate::validate::{validate_parsed, Defect, Mode, TransitionTable};

/// Nothing survived validation, so there is no graph to build.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("no valid units to merge")]
pub struct EmptyMerge;

/// A unit rejected during merge, with where it came from and why.
#[derive(Clone, Debug, Serialize)]
pub struct DroppedUnit {
    pub source: SourceRef,
    pub key: UnitKey,
    pub defects: Vec<Defect>,
}

/// Where every input unit went. The counts partition the input:
/// `kept + dropped_invalid + deduplicated == total`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MergeReport {
    pub total: usize,
    pub kept: usize,
    pub dropped_invalid: usize,
    pub deduplicated: usize,
    /// Digests of the units the graph kept, in insertion order.
    pub kept_keys: Vec<UnitKey>,
    pub dropped: Vec<DroppedUnit>,
}

/// Validate each parsed tree against `table` and fold the valid units
/// into one graph. Duplicate units merge their provenance. Tree-level
/// problems such as a missing goal do not block a tree's healthy units.
pub fn merge_trees(
    parses: &[TreeParse],
    table: &TransitionTable,
    mode: Mode,
) -> Result<(Graph, MergeReport), EmptyMerge> {
    let mut graph = Graph::default();
    let mut report = MergeReport::default();
    for parse in parses {
        let verdicts = validate_parsed(parse, table, mode);
        for (unit, verdict) in parse.units.iter().zip(&verdicts.units) {
            report.total += 1;
            if !verdict.valid {
                report.dropped_invalid += 1;
                report.dropped.push(DroppedUnit {
                    source: unit
                        .sources
                        .first()
                        .cloned()
                        .unwrap_or_else(|| {
                            SourceRef::new(&parse.source, verdict.ordinal, (0, 0))
                        }),
                    key: unit.key(),
                    defects: verdict.defects.clone(),
                });
                continue;
            }
            match graph.insert(unit.clone()) {
                Inserted::Added => {
                    report.kept += 1;
                    report.kept_keys.push(unit.key());
                }
                Inserted::Deduplicated => report.deduplicated += 1,
            }
        }
    }
    if graph.is_empty() {
        return Err(EmptyMerge);
    }
    debug_assert_eq!(
        report.kept + report.dropped_invalid + report.deduplicated,
        report.total
    );
    Ok((graph, report))
}

/// Rewrite every object and contents name to its normal form. Units that
/// become identical under renaming merge, keeping all provenance. The
/// returned map records each label that actually changed.
pub fn consolidate(g: &Graph) -> (Graph, BTreeMap<String, String>) {
    let mut renames = BTreeMap::new();
    let mut note = |raw: &str| {
        let normal = normalize_name(raw);
        if normal != raw {
            renames.insert(raw.to_string(), normal);
        }
    };
    let mut out = Graph::default();
    for unit in g.units() {
        for node in unit.inputs.iter().chain(&unit.outputs) {
            note(&node.name);
            for content in &node.contents {
                note(content);
            }
        }
        out.insert(unit.map_names(normalize_name));
    }
    (out, renames)
}

/// How a widening merge went: the union graph plus what overlapped.
#[derive(Clone, Debug, Serialize)]
pub struct GraphMerge {
    #[serde(skip)]
    pub graph: Graph,
    pub renames: BTreeMap<String, String>,
    /// Units of the first graph (all kept, listed first).
    pub from_first: usize,
    /// Units only the second graph contributed.
    pub from_second: usize,
    /// Units present in both; their provenance is merged.
    pub shared: usize,
}

/// Union of two graphs after consolidating both. Units of `first` come
/// first; a unit present in both keeps the provenance of both sides.
pub fn merge_graphs(first: &Graph, second: &Graph) -> GraphMerge {
    let (first, mut renames) = consolidate(first);
    let (second, renames_second) = consolidate(second);
    renames.extend(renames_second);
    let mut graph = Graph::default();
    for unit in first.units() {
        graph.insert(unit.clone());
    }
    let mut from_second = 0;
    let mut shared = 0;
    for unit in second.units() {
        match graph.insert(unit.clone()) {
            Inserted::Added => from_second += 1,
            Inserted::Deduplicated => shared += 1,
        }
    }
    GraphMerge {
        graph,
        renames,
        from_first: first.len(),
        from_second,
        shared,
    }
}
