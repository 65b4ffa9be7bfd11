//! Task trees for robotic cooking: validate candidate trees from a
//! language model, merge the survivors into a graph, widen that graph
//! with a reference network, and retrieve the cheapest execution plan.
//!
//! The text format is line-based: `O\t<name>` opens an object with
//! following `S\t<state>` and `C\t<contents>` lines, `M\t<motion>` splits
//! a block's inputs from its outputs, and `//` closes the block. Task
//! tree files may open with a `GOAL\t<name>\t<states>` header.

pub mod llm;
pub mod merge;
pub mod model;
pub mod progress;
pub mod normalize;
pub mod parse;
pub mod pipeline;
pub mod retrieve;
pub mod validate;

pub use llm::{
    build_finetune_dataset, build_recipe_prompt, build_tree_prompt, estimate_tokens,
    generate_recipe, generate_samples, generate_task_trees, parse_numbered_instructions,
    DishSpec, EndpointClient, GenerationClient, GenerationRequest, GenerationResponse, LlmConfig,
    LlmError, RecordingClient, ReplayClient, ScriptedClient,
};
pub use merge::{
    consolidate, merge_graphs, merge_trees, DroppedUnit, EmptyMerge, GraphMerge, MergeReport,
};
pub use model::{
    FunctionalUnit, Graph, Inserted, MotionNode, ObjectNode, SourceRef, TaskTree, UnitKey,
};
pub use normalize::{clean_label, normalize_name};
pub use progress::{derive_progress_lines, render_progress_lines, ProgressEntry, ProgressLine};
pub use parse::{
    parse_graph, parse_graph_labeled, parse_inventory, parse_task_tree, parse_task_tree_labeled,
    DefectKind, ParseDefect, ParsedGraph, ParsedInventory, TreeParse,
};
pub use pipeline::{
    build_client, run_pipeline, PipelineConfig, PipelineError, PipelineOutcome, RouteRecord,
};
pub use retrieve::{
    enumerate_trees, parse_goal_spec, retrieve_min_cost, satisfies, select_final, tree_cost,
    CostModel, CostModelError, FinalSelection, KitchenInventory, PlanSource, RetrievalError,
    RetrievalResult, SearchLimits,
};
pub use validate::{
    check_syntax, check_transitions, compile_transition_table, validate_parsed, validate_tree,
    validate_unit_text, Defect, LabelKind, Mode, TransitionTable, UnitVerdict, ValidationReport,
};
