//! The whole flow in one call: dish to recipe to candidate trees to
//! graphs to the cheapest plan, leaving every intermediate on disk.
//!
//! Artifacts are written as soon as each stage produces them, so a run
//! that fails late still leaves everything earlier for inspection. Raw
//! model text is always saved before any parsing touches it. Under a
//! replay client the run is fully deterministic: rerunning into the same
//! directory rewrites byte-identical artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::llm::{
    generate_recipe, generate_task_trees, parse_numbered_instructions, DishSpec, EndpointClient,
    GenerationClient, LlmConfig, LlmError, RecordingClient, ReplayClient,
};
use crate::merge::{consolidate, merge_graphs, merge_trees, MergeReport};
use crate::model::{Graph, ObjectNode, TaskTree};
use crate::normalize::normalize_name;
use crate::parse::{parse_graph_labeled, parse_inventory, parse_task_tree_labeled, TreeParse};
use crate::progress::{derive_progress_lines, render_progress_lines};
use crate::retrieve::{
    retrieve_min_cost, select_final, CostModel, CostModelError, FinalSelection, KitchenInventory,
    RetrievalError, RetrievalResult, SearchLimits,
};
use crate::validate::{compile_transition_table, Mode};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} generation failed: {source}")]
    Generation {
        stage: &'static str,
        source: LlmError,
    },
    #[error("recipe text is unusable: {0}")]
    Instructions(LlmError),
    #[error("no candidate tree declared or implied a goal")]
    NoGoal,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cost model: {0}")]
    Costs(#[from] CostModelError),
    #[error("no plan for the goal from either graph")]
    NoPlan,
}

impl PipelineError {
    /// Process exit code: 1 when no plan exists, 2 for unusable inputs,
    /// 3 for transport or replay failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::NoPlan => 1,
            PipelineError::Generation { .. } => 3,
            _ => 2,
        }
    }
}

/// Everything a pipeline run needs besides the client.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub dish: DishSpec,
    pub llm: LlmConfig,
    pub reference_path: PathBuf,
    pub kitchen_path: PathBuf,
    /// Uniform costs when absent.
    pub costs_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub mode: Mode,
    pub limits: SearchLimits,
}

/// The client a run should use: replay from `replay_dir` by default, or
/// a recording wrapper around the live endpoint when `record` is set.
pub fn build_client(
    llm: &LlmConfig,
    replay_dir: &Path,
    record: bool,
) -> Box<dyn GenerationClient> {
    if record {
        Box::new(RecordingClient::new(
            EndpointClient::new(llm.endpoint.clone(), llm.api_key_env.clone()),
            replay_dir,
        ))
    } else {
        Box::new(ReplayClient::new(replay_dir))
    }
}

/// One retrieval route's outcome as recorded in `retrieval.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RouteRecord {
    pub cost: Option<f64>,
    pub units: Option<usize>,
    pub alternatives: Option<usize>,
    pub expansions: Option<usize>,
    pub error: Option<String>,
}

impl RouteRecord {
    fn from_result(result: &Result<RetrievalResult, String>) -> Self {
        match result {
            Ok(r) => RouteRecord {
                cost: Some(r.total_cost),
                units: Some(r.tree.units.len()),
                alternatives: Some(r.alternatives_considered),
                expansions: Some(r.expansions),
                error: None,
            },
            Err(e) => RouteRecord {
                cost: None,
                units: None,
                alternatives: None,
                expansions: None,
                error: Some(e.clone()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct FinalRecord {
    source: String,
    mini_cost: Option<f64>,
    super_cost: Option<f64>,
    improvement: Option<f64>,
    cost_regression: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct RetrievalArtifact {
    goal: String,
    mini: RouteRecord,
    #[serde(rename = "super")]
    superset: RouteRecord,
    #[serde(rename = "final")]
    final_: Option<FinalRecord>,
}

#[derive(Clone, Debug, Serialize)]
struct MergeArtifact {
    candidates: Option<MergeReport>,
    candidate_note: Option<String>,
    renames: BTreeMap<String, String>,
    widening: WideningRecord,
}

#[derive(Clone, Debug, Serialize)]
struct WideningRecord {
    from_mini: usize,
    from_reference: usize,
    shared: usize,
}

/// What a successful run produced.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub recipe_steps: usize,
    pub candidates: usize,
    pub merge: Option<MergeReport>,
    pub selection: FinalSelection,
    /// Per-sample generation failures and other non-fatal oddities.
    pub warnings: Vec<String>,
    /// Every file written, in creation order.
    pub artifacts: Vec<PathBuf>,
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

/// Run every stage, writing artifacts into `config.out_dir`:
/// `recipe.txt`, one `tree<i>.txt` per raw sample, `mini.txt`,
/// `super.txt`, `merge_report.json`, `tree6.txt` and `tree7.txt` for the
/// plans, `progress.txt`, and `retrieval.json`.
pub fn run_pipeline(
    client: &dyn GenerationClient,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let mut artifacts = ArtifactWriter::new(&config.out_dir)?;
    let mut warnings = Vec::new();

    // Recipe.
    let recipe = generate_recipe(client, &config.llm, &config.dish)
        .map_err(|source| PipelineError::Generation {
            stage: "recipe",
            source,
        })?;
    artifacts.write("recipe.txt", &recipe.text)?;
    let instructions =
        parse_numbered_instructions(&recipe.text).map_err(PipelineError::Instructions)?;
    warnings.extend(instructions.warnings.iter().cloned());

    // Candidate trees: raw text first, parsing second.
    let samples = generate_task_trees(client, &config.llm, &recipe.text);
    let mut parses: Vec<TreeParse> = Vec::new();
    let mut generation_failures = 0;
    for (i, sample) in samples.iter().enumerate() {
        let label = format!("tree{}", i + 1);
        match sample {
            Ok(response) => {
                artifacts.write(&format!("{label}.txt"), &response.text)?;
                parses.push(parse_task_tree_labeled(&label, &response.text));
            }
            Err(e) => {
                generation_failures += 1;
                warnings.push(format!("{label}: generation failed: {e}"));
            }
        }
    }
    if parses.is_empty() {
        return Err(PipelineError::Generation {
            stage: "trees",
            source: LlmError::Transport(format!(
                "all {generation_failures} tree samples failed"
            )),
        });
    }
    for parse in &parses {
        for defect in &parse.defects {
            warnings.push(format!("{}: {}", parse.source, defect));
        }
    }

    // The goal comes from the candidates themselves: first tree that
    // declared or implied one.
    let goal_raw = parses
        .iter()
        .find_map(|p| p.goal.clone())
        .ok_or(PipelineError::NoGoal)?;
    let goal: ObjectNode = goal_raw.map_names(normalize_name);

    // Reference, table, kitchen, costs.
    let reference_text = read_file(&config.reference_path)?;
    let reference = parse_graph_labeled("reference", &reference_text);
    for defect in &reference.defects {
        warnings.push(format!("reference: {defect}"));
    }
    let table = compile_transition_table(&reference.graph);
    let kitchen_text = read_file(&config.kitchen_path)?;
    let inventory = parse_inventory(&kitchen_text);
    for defect in &inventory.defects {
        warnings.push(format!("kitchen: {defect}"));
    }
    let kitchen = KitchenInventory::new(inventory.items.clone());
    let costs = match &config.costs_path {
        Some(path) => CostModel::from_json(&read_file(path)?)?,
        None => CostModel::uniform(),
    };

    // Mini graph from the surviving candidate units.
    let (mini, merge_report, candidate_note) =
        match merge_trees(&parses, &table, config.mode) {
            Ok((graph, report)) => (Some(graph), Some(report), None),
            Err(e) => {
                warnings.push(format!("candidate merge: {e}"));
                (None, None, Some(e.to_string()))
            }
        };
    let mini_consolidated = mini.as_ref().map(|g| consolidate(g).0);
    if let Some(g) = &mini_consolidated {
        artifacts.write("mini.txt", &g.to_text())?;
    }

    // Super graph: candidates widened by the reference, or the reference
    // alone when nothing survived.
    let (super_graph, renames, widening) = match &mini {
        Some(mini) => {
            let merged = merge_graphs(mini, &reference.graph);
            let widening = WideningRecord {
                from_mini: merged.from_first,
                from_reference: merged.from_second,
                shared: merged.shared,
            };
            (merged.graph, merged.renames, widening)
        }
        None => {
            let (graph, renames) = consolidate(&reference.graph);
            let widening = WideningRecord {
                from_mini: 0,
                from_reference: graph.len(),
                shared: 0,
            };
            (graph, renames, widening)
        }
    };
    artifacts.write("super.txt", &super_graph.to_text())?;
    let merge_artifact = MergeArtifact {
        candidates: merge_report.clone(),
        candidate_note,
        renames,
        widening,
    };
    artifacts.write(
        "merge_report.json",
        &format!("{}\n", serde_json::to_string_pretty(&merge_artifact).expect("serializable")),
    )?;

    // Plans from both graphs.
    let route = |graph: Option<&Graph>, missing_note: &str| -> Result<RetrievalResult, String> {
        match graph {
            Some(g) => retrieve_min_cost(g, &goal, &kitchen, &costs, &config.limits)
                .map_err(|e| e.to_string()),
            None => Err(missing_note.to_string()),
        }
    };
    let tree6 = route(mini_consolidated.as_ref(), "no valid candidate units to search");
    let tree7 = route(Some(&super_graph), "");
    if let Ok(r) = &tree6 {
        artifacts.write("tree6.txt", &r.tree.to_text())?;
    }
    if let Ok(r) = &tree7 {
        artifacts.write("tree7.txt", &r.tree.to_text())?;
    }

    let selection = select_final(tree6.clone().ok(), tree7.clone().ok());
    let final_record = selection.as_ref().ok().map(|s| FinalRecord {
        source: s.source.to_string(),
        mini_cost: s.mini_cost,
        super_cost: s.super_cost,
        improvement: s.improvement,
        cost_regression: s.cost_regression.clone(),
    });
    let retrieval_artifact = RetrievalArtifact {
        goal: crate::retrieve::format_requirement(&goal),
        mini: RouteRecord::from_result(&tree6),
        superset: RouteRecord::from_result(&tree7),
        final_: final_record,
    };
    artifacts.write(
        "retrieval.json",
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&retrieval_artifact).expect("serializable")
        ),
    )?;

    let selection = match selection {
        Ok(s) => s,
        Err(RetrievalError::NoPlan) => return Err(PipelineError::NoPlan),
        Err(other) => {
            // select_final only fails with NoPlan; anything else would be
            // a bug worth hearing about loudly.
            unreachable!("unexpected selection error: {other}");
        }
    };
    if let Some(regression) = &selection.cost_regression {
        warnings.push(regression.clone());
    }

    let final_tree: &TaskTree = &selection.result.tree;
    artifacts.write(
        "progress.txt",
        &render_progress_lines(&derive_progress_lines(final_tree)),
    )?;

    Ok(PipelineOutcome {
        out_dir: config.out_dir.clone(),
        recipe_steps: instructions.steps.len(),
        candidates: parses.len(),
        merge: merge_report,
        selection,
        warnings,
        artifacts: artifacts.written,
    })
}
