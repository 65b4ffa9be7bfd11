//! Screening candidate trees against transitions a trusted corpus has
//! actually exhibited.
//!
//! The table compiles permissively: every unequal (input state, output
//! state) pair an object exhibits across a unit is recorded, not just the
//! changed states. Checking is precise: only states a unit actually loses
//! and gains are queried. Compiling and checking the same corpus can
//! therefore never flag it, which is the self-consistency anchor the
//! mutation tests build on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{FunctionalUnit, Graph, TaskTree, UnitKey};
use crate::parse::{parse_graph, DefectKind, TreeParse};

/// How transition evidence is matched. Relaxed accepts a state change any
/// motion has exhibited; strict demands evidence under the same motion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Relaxed,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    State,
    Motion,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelKind::State => f.write_str("state"),
            LabelKind::Motion => f.write_str("motion"),
        }
    }
}

/// One problem found in a candidate unit or tree. `UnknownLabel` is
/// advisory; everything else blocks the unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "defect", rename_all = "snake_case")]
pub enum Defect {
    Syntax { kind: DefectKind, detail: String },
    MissingState { object: String },
    InvalidTransition {
        object: String,
        from: String,
        to: String,
        motion: String,
    },
    UnknownLabel { kind: LabelKind, label: String },
}

impl Defect {
    /// Advisory defects are reported but do not invalidate a unit.
    pub fn is_advisory(&self) -> bool {
        matches!(self, Defect::UnknownLabel { .. })
    }

    /// Stable name for machine-readable defect lines.
    pub fn kind_name(&self) -> String {
        match self {
            Defect::Syntax { kind, .. } => kind.to_string(),
            Defect::MissingState { .. } => "MissingState".to_string(),
            Defect::InvalidTransition { .. } => "InvalidTransition".to_string(),
            Defect::UnknownLabel { .. } => "UnknownLabel".to_string(),
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Defect::Syntax { detail, .. } => detail.clone(),
            Defect::MissingState { object } => {
                format!("object '{object}' carries no state")
            }
            Defect::InvalidTransition {
                object,
                from,
                to,
                motion,
            } => format!(
                "object '{object}' goes '{from}' -> '{to}' under '{motion}', \
                 a transition the reference never exhibits"
            ),
            Defect::UnknownLabel { kind, label } => {
                format!("{kind} '{label}' does not appear in the reference")
            }
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind_name(), self.detail())
    }
}

/// State transitions observed in trusted graphs, indexed globally and per
/// motion, plus the label vocabulary for advisory checks.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TransitionTable {
    pairs: BTreeSet<(String, String)>,
    by_motion: BTreeMap<String, BTreeSet<(String, String)>>,
    known_states: BTreeSet<String>,
    known_motions: BTreeSet<String>,
}

impl TransitionTable {
    /// Record every unequal (input state, output state) pair each
    /// same-name object exhibits across each unit.
    pub fn add_graph(&mut self, g: &Graph) {
        for unit in g.units() {
            self.known_motions.insert(unit.motion.name.clone());
            for node in unit.inputs.iter().chain(&unit.outputs) {
                self.known_states.extend(node.states.iter().cloned());
            }
            for output in &unit.outputs {
                for input in unit.inputs.iter().filter(|i| i.name == output.name) {
                    for s_in in &input.states {
                        for s_out in &output.states {
                            if s_in == s_out {
                                continue;
                            }
                            let pair = (s_in.clone(), s_out.clone());
                            self.pairs.insert(pair.clone());
                            self.by_motion
                                .entry(unit.motion.name.clone())
                                .or_default()
                                .insert(pair);
                        }
                    }
                }
            }
        }
    }

    pub fn allows(&self, from: &str, to: &str) -> bool {
        self.pairs
            .contains(&(from.to_string(), to.to_string()))
    }

    pub fn allows_for(&self, motion: &str, from: &str, to: &str) -> bool {
        self.by_motion
            .get(motion)
            .is_some_and(|pairs| pairs.contains(&(from.to_string(), to.to_string())))
    }

    pub fn knows_state(&self, state: &str) -> bool {
        self.known_states.contains(state)
    }

    pub fn knows_motion(&self, motion: &str) -> bool {
        self.known_motions.contains(motion)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn compile_transition_table(g: &Graph) -> TransitionTable {
    let mut table = TransitionTable::default();
    table.add_graph(g);
    table
}

/// Structural checks on a single unit: every object must carry at least
/// one state.
pub fn check_syntax(unit: &FunctionalUnit) -> Vec<Defect> {
    let mut defects = Vec::new();
    for node in unit.inputs.iter().chain(&unit.outputs) {
        if node.states.is_empty() {
            let defect = Defect::MissingState {
                object: node.name.clone(),
            };
            if !defects.contains(&defect) {
                defects.push(defect);
            }
        }
    }
    defects
}

/// Transition checks on a single unit. For each same-name input/output
/// object pair, every (lost state, gained state) combination must appear
/// in the table; states merely added or merely dropped need no evidence.
/// Labels outside the table's vocabulary earn advisories.
pub fn check_transitions(
    unit: &FunctionalUnit,
    table: &TransitionTable,
    mode: Mode,
) -> Vec<Defect> {
    let mut defects = Vec::new();
    let push = |d: Defect, defects: &mut Vec<Defect>| {
        if !defects.contains(&d) {
            defects.push(d);
        }
    };
    for output in &unit.outputs {
        for input in unit.inputs.iter().filter(|i| i.name == output.name) {
            for lost in input.states.difference(&output.states) {
                for gained in output.states.difference(&input.states) {
                    let allowed = match mode {
                        Mode::Relaxed => table.allows(lost, gained),
                        Mode::Strict => table.allows_for(&unit.motion.name, lost, gained),
                    };
                    if !allowed {
                        push(
                            Defect::InvalidTransition {
                                object: output.name.clone(),
                                from: lost.clone(),
                                to: gained.clone(),
                                motion: unit.motion.name.clone(),
                            },
                            &mut defects,
                        );
                    }
                }
            }
        }
    }
    if !table.knows_motion(&unit.motion.name) {
        push(
            Defect::UnknownLabel {
                kind: LabelKind::Motion,
                label: unit.motion.name.clone(),
            },
            &mut defects,
        );
    }
    for node in unit.inputs.iter().chain(&unit.outputs) {
        for state in &node.states {
            if !table.knows_state(state) {
                push(
                    Defect::UnknownLabel {
                        kind: LabelKind::State,
                        label: state.clone(),
                    },
                    &mut defects,
                );
            }
        }
    }
    defects
}

/// Verdict for one unit, addressed by its source block ordinal.
#[derive(Clone, Debug, Serialize)]
pub struct UnitVerdict {
    pub ordinal: usize,
    pub key: UnitKey,
    pub defects: Vec<Defect>,
    pub valid: bool,
}

/// A defect not attributable to a parsed unit, addressed by the source
/// block it came from (0 for file-level problems).
#[derive(Clone, Debug, Serialize)]
pub struct TreeDefect {
    pub block: usize,
    pub defect: Defect,
}

/// Everything found while validating one tree.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub source: String,
    pub mode: Mode,
    pub units: Vec<UnitVerdict>,
    pub tree_defects: Vec<TreeDefect>,
    /// True when no blocking defect exists anywhere in the tree.
    pub valid: bool,
}

impl ValidationReport {
    /// One `source:ordinal:kind:detail` line per defect, ordered by
    /// source position.
    pub fn lines(&self) -> Vec<String> {
        let mut entries: Vec<(usize, String)> = Vec::new();
        for td in &self.tree_defects {
            entries.push((
                td.block,
                format!(
                    "{}:{}:{}:{}",
                    self.source,
                    td.block,
                    td.defect.kind_name(),
                    td.defect.detail()
                ),
            ));
        }
        for verdict in &self.units {
            for defect in &verdict.defects {
                entries.push((
                    verdict.ordinal,
                    format!(
                        "{}:{}:{}:{}",
                        self.source,
                        verdict.ordinal,
                        defect.kind_name(),
                        defect.detail()
                    ),
                ));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        entries.into_iter().map(|(_, line)| line).collect()
    }

    pub fn blocking_defect_count(&self) -> usize {
        self.tree_defects
            .iter()
            .filter(|td| !td.defect.is_advisory())
            .count()
            + self
                .units
                .iter()
                .flat_map(|v| &v.defects)
                .filter(|d| !d.is_advisory())
                .count()
    }
}

fn verdict_for(unit: &FunctionalUnit, ordinal: usize, table: &TransitionTable, mode: Mode) -> UnitVerdict {
    let mut defects = check_syntax(unit);
    defects.extend(check_transitions(unit, table, mode));
    let valid = defects.iter().all(Defect::is_advisory);
    UnitVerdict {
        ordinal,
        key: unit.key(),
        defects,
        valid,
    }
}

fn unit_ordinal(unit: &FunctionalUnit, position: usize) -> usize {
    unit.sources
        .first()
        .map(|s| s.block)
        .unwrap_or(position + 1)
}

/// Validate an already-built tree under `label`.
pub fn validate_tree(
    tree: &TaskTree,
    table: &TransitionTable,
    mode: Mode,
    label: &str,
) -> ValidationReport {
    let units: Vec<UnitVerdict> = tree
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| verdict_for(u, unit_ordinal(u, i), table, mode))
        .collect();
    let valid = units.iter().all(|v| v.valid);
    ValidationReport {
        source: label.to_string(),
        mode,
        units,
        tree_defects: Vec::new(),
        valid,
    }
}

/// Validate a parsed tree, folding its parse defects in as blocking
/// syntax defects. A tree whose goal could not be resolved is invalid.
pub fn validate_parsed(parse: &TreeParse, table: &TransitionTable, mode: Mode) -> ValidationReport {
    let tree_defects: Vec<TreeDefect> = parse
        .defects
        .iter()
        .map(|pd| TreeDefect {
            block: pd.block,
            defect: Defect::Syntax {
                kind: pd.kind,
                detail: pd.detail.clone(),
            },
        })
        .collect();
    let units: Vec<UnitVerdict> = parse
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| verdict_for(u, unit_ordinal(u, i), table, mode))
        .collect();
    let valid = units.iter().all(|v| v.valid)
        && tree_defects.iter().all(|td| td.defect.is_advisory());
    ValidationReport {
        source: parse.source.clone(),
        mode,
        units,
        tree_defects,
        valid,
    }
}

/// All defects in a piece of unit text, parse problems included. Built
/// for screening single mutated units, so no goal is required.
pub fn validate_unit_text(text: &str, table: &TransitionTable, mode: Mode) -> Vec<Defect> {
    let parsed = parse_graph(text);
    let mut defects: Vec<Defect> = parsed
        .defects
        .iter()
        .map(|pd| Defect::Syntax {
            kind: pd.kind,
            detail: pd.detail.clone(),
        })
        .collect();
    for unit in parsed.graph.units() {
        defects.extend(check_syntax(unit));
        defects.extend(check_transitions(unit, table, mode));
    }
    defects
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_graph, parse_task_tree};

    const CORPUS: &str = "\
O\tonion\nS\twhole\nO\tknife\nS\tclean\nM\tslice\nO\tonion\nS\tsliced\nO\tknife\nS\tdirty\n//\n\
O\ttomato\nS\twhole\nM\tchop\nO\ttomato\nS\tdiced\n//\n\
O\twater\nS\traw\nO\tpot\nS\tempty\nM\tpour\nO\twater\nS\tin pot\nS\traw\nO\tpot\nS\tfilled\n//\n";

    fn table() -> TransitionTable {
        compile_transition_table(&parse_graph(CORPUS).graph)
    }

    #[test]
    fn compiles_cross_product_pairs() {
        let t = table();
        assert!(t.allows("whole", "sliced"));
        assert!(t.allows("whole", "diced"));
        assert!(t.allows("clean", "dirty"));
        assert!(t.allows("empty", "filled"));
        assert!(!t.allows("sliced", "whole"));
        assert!(t.allows_for("slice", "whole", "sliced"));
        assert!(!t.allows_for("chop", "whole", "sliced"));
        assert!(t.knows_state("raw"));
        assert!(t.knows_motion("pour"));
        assert!(!t.knows_motion("fling"));
    }

    #[test]
    fn corpus_validates_against_its_own_table() {
        let g = parse_graph(CORPUS).graph;
        let t = table();
        for unit in g.units() {
            for mode in [Mode::Relaxed, Mode::Strict] {
                let defects = check_transitions(unit, &t, mode);
                assert!(
                    defects.is_empty(),
                    "self-check flagged {unit:?}: {defects:?}"
                );
            }
        }
    }

    #[test]
    fn reversed_transition_is_flagged() {
        let text = "O\tonion\nS\tsliced\nM\tslice\nO\tonion\nS\twhole\n//\n";
        let g = parse_graph(text).graph;
        let defects = check_transitions(&g.units()[0], &table(), Mode::Relaxed);
        assert!(defects.iter().any(|d| matches!(
            d,
            Defect::InvalidTransition { object, from, to, .. }
                if object == "onion" && from == "sliced" && to == "whole"
        )));
    }

    #[test]
    fn strict_mode_requires_same_motion_evidence() {
        // The corpus only slices onions; chopping one to sliced is fine
        // relaxed, flagged strict.
        let text = "O\tonion\nS\twhole\nM\tchop\nO\tonion\nS\tsliced\n//\n";
        let g = parse_graph(text).graph;
        let unit = &g.units()[0];
        let t = table();
        let relaxed = check_transitions(unit, &t, Mode::Relaxed);
        assert!(relaxed.iter().all(Defect::is_advisory));
        let strict = check_transitions(unit, &t, Mode::Strict);
        assert!(strict
            .iter()
            .any(|d| matches!(d, Defect::InvalidTransition { .. })));
    }

    #[test]
    fn added_states_need_no_evidence() {
        // Gaining "in pot" while keeping "raw" loses nothing, so even an
        // empty table accepts it.
        let text = "O\twater\nS\traw\nM\tpour\nO\twater\nS\tin pot\nS\traw\n//\n";
        let g = parse_graph(text).graph;
        let defects = check_transitions(&g.units()[0], &TransitionTable::default(), Mode::Relaxed);
        assert!(defects.iter().all(Defect::is_advisory));
    }

    #[test]
    fn stateless_object_is_flagged() {
        let text = "O\tonion\nM\tslice\nO\tonion\nS\tsliced\n//\n";
        let g = parse_graph(text).graph;
        let defects = check_syntax(&g.units()[0]);
        assert_eq!(
            defects,
            vec![Defect::MissingState {
                object: "onion".to_string()
            }]
        );
    }

    #[test]
    fn unknown_labels_are_advisory_only() {
        let text = "O\tonion\nS\twhole\nM\tjulienne\nO\tonion\nS\twhole\nS\tshredded\n//\n";
        let g = parse_graph(text).graph;
        let defects = check_transitions(&g.units()[0], &table(), Mode::Relaxed);
        assert!(!defects.is_empty());
        assert!(defects.iter().all(Defect::is_advisory));
        let report = validate_tree(
            &crate::model::TaskTree::new(
                vec![g.units()[0].clone()],
                crate::model::ObjectNode::with_states("onion", ["shredded", "whole"]),
            ),
            &table(),
            Mode::Relaxed,
            "advisory",
        );
        assert!(report.valid);
        assert_eq!(report.blocking_defect_count(), 0);
    }

    #[test]
    fn parse_defects_invalidate_the_tree() {
        let text = "GOAL\tonion\tsliced\nO\tonion\nS\twhole\nO\tonion\nS\tsliced\n//\n";
        let parsed = parse_task_tree(text);
        let report = validate_parsed(&parsed, &table(), Mode::Relaxed);
        assert!(!report.valid);
        assert!(report
            .tree_defects
            .iter()
            .any(|td| matches!(td.defect, Defect::Syntax { kind: DefectKind::MissingMotion, .. })));
    }

    #[test]
    fn defect_lines_are_stable() {
        let text = "GOAL\tonion\tsliced\nO\tonion\nM\tslice\nO\tonion\nS\tsliced\n//\n";
        let parsed = parse_task_tree(text);
        let report = validate_parsed(&parsed, &table(), Mode::Relaxed);
        let lines = report.lines();
        assert_eq!(
            lines[0],
            "<input>:1:MissingState:object 'onion' carries no state"
        );
    }

    #[test]
    fn unit_text_screening_sees_parse_and_transition_defects() {
        let t = table();
        let missing_motion = "O\tonion\nS\twhole\nO\tonion\nS\tsliced\n//\n";
        let defects = validate_unit_text(missing_motion, &t, Mode::Relaxed);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::Syntax { kind: DefectKind::MissingMotion, .. })));
        let reversed = "O\tonion\nS\tsliced\nM\tslice\nO\tonion\nS\twhole\n//\n";
        let defects = validate_unit_text(reversed, &t, Mode::Relaxed);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::InvalidTransition { .. })));
    }
}
