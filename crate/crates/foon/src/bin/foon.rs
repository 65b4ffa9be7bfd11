//! Command-line front end. Each subcommand is a thin wrapper over one
//! library entry point; graph and tree text goes to stdout or `--out`
//! files, human summaries go to stderr, and `--json` swaps the summary
//! for a machine-readable one on stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use foon::llm::dataset::{build_finetune_dataset, load_pairs_json, records_to_jsonl};
use foon::llm::{DishSpec, LlmConfig};
use foon::merge::{consolidate, merge_graphs, merge_trees};
use foon::parse::{parse_graph_labeled, parse_inventory, parse_task_tree_labeled, TreeParse};
use foon::pipeline::{build_client, run_pipeline, PipelineConfig};
use foon::progress::{derive_progress_lines, render_progress_lines};
use foon::retrieve::{
    parse_goal_spec, retrieve_min_cost, CostModel, KitchenInventory, SearchLimits,
};
use foon::validate::{compile_transition_table, validate_parsed, Mode};

#[derive(Parser)]
#[command(name = "foon", version, about = "Task trees over functional object-oriented networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse task-tree text and report its structure and defects.
    Parse(ParseArgs),
    /// Check a tree against transitions learned from a reference graph.
    Validate(ValidateArgs),
    /// Merge candidate trees into one graph, optionally widened by a reference.
    Merge(MergeArgs),
    /// Find the cheapest task tree that reaches a goal from a kitchen.
    Retrieve(RetrieveArgs),
    /// Render per-ingredient progress lines for a task tree.
    Progress(ProgressArgs),
    /// Build fine-tune records from aligned recipe and tree pairs.
    Dataset(DatasetArgs),
    /// Run the whole flow from dish name to final plan.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Task-tree text file.
    file: PathBuf,
    /// Emit the parse as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Task-tree text file to check.
    file: PathBuf,
    /// Graph whose units define the allowed state transitions.
    #[arg(long)]
    reference: PathBuf,
    /// Require transition evidence from the same motion, not just any motion.
    #[arg(long)]
    strict: bool,
    /// Emit the full report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Candidate task-tree files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Graph defining allowed transitions; its units also widen the result.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Require transition evidence from the same motion.
    #[arg(long)]
    strict: bool,
    /// Write the consolidated candidate graph here.
    #[arg(long)]
    mini_out: Option<PathBuf>,
    /// Write the widened graph here (needs --reference).
    #[arg(long)]
    super_out: Option<PathBuf>,
    /// Emit the merge report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RetrieveArgs {
    /// Graph file to search.
    #[arg(long)]
    graph: PathBuf,
    /// Goal as name:state,state (states optional for a bare name).
    #[arg(long)]
    goal: String,
    /// Starting inventory, as object blocks.
    #[arg(long)]
    kitchen: PathBuf,
    /// Per-motion cost JSON; uniform costs when absent.
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Most units a single tree may use.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Most complete trees enumeration may collect.
    #[arg(long)]
    max_trees: Option<usize>,
    /// Emit the plan and its costs as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ProgressArgs {
    /// Task-tree text file.
    file: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    /// JSON file of recipes paired with aligned tree steps.
    #[arg(long)]
    pairs: PathBuf,
    /// Token budget per training record.
    #[arg(long)]
    budget: usize,
    /// Write JSONL here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Dish to cook.
    #[arg(long)]
    dish: String,
    /// Ingredient constraint, repeatable.
    #[arg(long = "ingredient")]
    ingredients: Vec<String>,
    /// Reference graph file.
    #[arg(long)]
    reference: PathBuf,
    /// Starting inventory file.
    #[arg(long)]
    kitchen: PathBuf,
    /// Per-motion cost JSON; uniform costs when absent.
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Directory of recorded generations to replay.
    #[arg(long, default_value = "replays")]
    replay: PathBuf,
    /// Call the live endpoint and record responses into --replay.
    #[arg(long)]
    record: bool,
    /// Generation endpoint URL (with --record).
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the API key (with --record).
    #[arg(long)]
    api_key_env: Option<String>,
    /// Candidate trees to sample.
    #[arg(long)]
    samples: Option<u32>,
    /// Require transition evidence from the same motion.
    #[arg(long)]
    strict: bool,
    /// Emit the run summary as JSON on stdout.
    #[arg(long)]
    json: bool,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn mode(strict: bool) -> Mode {
    if strict {
        Mode::Strict
    } else {
        Mode::Relaxed
    }
}

fn parse_tree_file(path: &Path) -> Result<TreeParse> {
    Ok(parse_task_tree_labeled(
        &path.display().to_string(),
        &read(path)?,
    ))
}

fn cmd_parse(args: ParseArgs) -> Result<i32> {
    let parse = parse_tree_file(&args.file)?;
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            source: &'a str,
            units: Vec<String>,
            goal: Option<&'a foon::model::ObjectNode>,
            defects: &'a [foon::parse::ParseDefect],
        }
        let out = Out {
            source: &parse.source,
            units: parse.units.iter().map(|u| u.text()).collect(),
            goal: parse.goal.as_ref(),
            defects: &parse.defects,
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        let goal = parse
            .goal
            .as_ref()
            .map(|g| foon::retrieve::format_requirement(g))
            .unwrap_or_else(|| "(none)".to_string());
        eprintln!(
            "{}: {} units, goal {}, {} defects",
            parse.source,
            parse.units.len(),
            goal,
            parse.defects.len()
        );
        for defect in &parse.defects {
            println!("{}:{}:{}:{}", parse.source, defect.block, defect.kind, defect.detail);
        }
    }
    Ok(if parse.defects.is_empty() { 0 } else { 1 })
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let reference = parse_graph_labeled("reference", &read(&args.reference)?);
    if !reference.defects.is_empty() {
        eprintln!(
            "reference: {} defective blocks skipped",
            reference.defects.len()
        );
    }
    let table = compile_transition_table(&reference.graph);
    let parse = parse_tree_file(&args.file)?;
    let report = validate_parsed(&parse, &table, mode(args.strict));
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for line in report.lines() {
            println!("{line}");
        }
        eprintln!(
            "{}: {}",
            report.source,
            if report.valid {
                "valid".to_string()
            } else {
                format!("{} blocking defects", report.blocking_defect_count())
            }
        );
    }
    Ok(if report.valid { 0 } else { 1 })
}

fn cmd_merge(args: MergeArgs) -> Result<i32> {
    let reference = match &args.reference {
        Some(path) => Some(parse_graph_labeled("reference", &read(path)?)),
        None => None,
    };
    let table = match &reference {
        Some(r) => compile_transition_table(&r.graph),
        None => Default::default(),
    };
    let mut parses = Vec::new();
    for file in &args.files {
        parses.push(parse_tree_file(file)?);
    }
    let (mini, report) = match merge_trees(&parses, &table, mode(args.strict)) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("{e}");
            return Ok(1);
        }
    };
    let (mini, renames) = consolidate(&mini);
    if let Some(path) = &args.mini_out {
        std::fs::write(path, mini.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let widened = reference.as_ref().map(|r| merge_graphs(&mini, &r.graph));
    if let Some(path) = &args.super_out {
        let Some(merged) = &widened else {
            bail!("--super-out needs --reference");
        };
        std::fs::write(path, merged.graph.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            report: &'a foon::merge::MergeReport,
            renames: &'a std::collections::BTreeMap<String, String>,
            widened: Option<&'a foon::merge::GraphMerge>,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Out {
                report: &report,
                renames: &renames,
                widened: widened.as_ref(),
            })?
        );
    } else {
        eprintln!(
            "kept {} of {} units ({} invalid, {} duplicates), {} after consolidation",
            report.kept,
            report.total,
            report.dropped_invalid,
            report.deduplicated,
            mini.len()
        );
        for dropped in &report.dropped {
            for defect in &dropped.defects {
                println!(
                    "{}:{}:{}:{}",
                    dropped.source.source,
                    dropped.source.block,
                    defect.kind_name(),
                    defect.detail()
                );
            }
        }
        if let Some(merged) = &widened {
            eprintln!(
                "widened to {} units ({} candidate, {} reference, {} shared)",
                merged.graph.len(),
                merged.from_first,
                merged.from_second,
                merged.shared
            );
        }
        if args.mini_out.is_none() && args.super_out.is_none() {
            print!(
                "{}",
                widened
                    .as_ref()
                    .map(|m| m.graph.to_text())
                    .unwrap_or_else(|| mini.to_text())
            );
        }
    }
    Ok(0)
}

fn cmd_retrieve(args: RetrieveArgs) -> Result<i32> {
    let parsed = parse_graph_labeled(&args.graph.display().to_string(), &read(&args.graph)?);
    if !parsed.defects.is_empty() {
        eprintln!("{} defective blocks skipped", parsed.defects.len());
    }
    let (graph, _) = consolidate(&parsed.graph);
    let goal = parse_goal_spec(&args.goal)?;
    let inventory = parse_inventory(&read(&args.kitchen)?);
    let kitchen = KitchenInventory::new(inventory.items);
    let costs = match &args.costs {
        Some(path) => CostModel::from_json(&read(path)?)?,
        None => CostModel::uniform(),
    };
    let mut limits = SearchLimits::default();
    if let Some(depth) = args.max_depth {
        limits.max_depth = depth;
    }
    if let Some(trees) = args.max_trees {
        limits.max_trees = trees;
    }
    let result = match retrieve_min_cost(&graph, &goal, &kitchen, &costs, &limits) {
        Ok(result) => result,
        Err(e) => {
            eprintln!("{e}");
            return Ok(1);
        }
    };
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            goal: String,
            total_cost: f64,
            per_unit_costs: &'a [f64],
            units: usize,
            expansions: usize,
            alternatives_considered: usize,
            tree: String,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Out {
                goal: foon::retrieve::format_requirement(&goal),
                total_cost: result.total_cost,
                per_unit_costs: &result.per_unit_costs,
                units: result.tree.units.len(),
                expansions: result.expansions,
                alternatives_considered: result.alternatives_considered,
                tree: result.tree.to_text(),
            })?
        );
    } else {
        eprintln!(
            "cost {} over {} units ({} alternatives, {} expansions)",
            result.total_cost,
            result.tree.units.len(),
            result.alternatives_considered,
            result.expansions
        );
        print!("{}", result.tree.to_text());
    }
    Ok(0)
}

fn cmd_progress(args: ProgressArgs) -> Result<i32> {
    let parse = parse_tree_file(&args.file)?;
    let Some(tree) = parse.tree() else {
        eprintln!("{}: no goal declared or implied", parse.source);
        return Ok(1);
    };
    print!("{}", render_progress_lines(&derive_progress_lines(&tree)));
    Ok(0)
}

fn cmd_dataset(args: DatasetArgs) -> Result<i32> {
    let pairs = load_pairs_json(&read(&args.pairs)?)?;
    let records = build_finetune_dataset(&pairs, args.budget)?;
    let jsonl = records_to_jsonl(&records)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &jsonl)
                .with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("{} records -> {}", records.len(), path.display());
        }
        None => print!("{jsonl}"),
    }
    Ok(0)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<i32> {
    let dish = DishSpec::new(&args.dish, args.ingredients.iter().map(String::as_str))?;
    let mut llm = LlmConfig::default();
    if let Some(endpoint) = args.endpoint {
        llm.endpoint = endpoint;
    }
    if let Some(var) = args.api_key_env {
        llm.api_key_env = var;
    }
    if let Some(samples) = args.samples {
        llm.samples = samples;
    }
    let client = build_client(&llm, &args.replay, args.record);
    let config = PipelineConfig {
        dish,
        llm,
        reference_path: args.reference,
        kitchen_path: args.kitchen,
        costs_path: args.costs,
        out_dir: args.out,
        mode: mode(args.strict),
        limits: SearchLimits::default(),
    };
    match run_pipeline(client.as_ref(), &config) {
        Ok(outcome) => {
            if args.json {
                #[derive(Serialize)]
                struct Out<'a> {
                    out_dir: &'a Path,
                    recipe_steps: usize,
                    candidates: usize,
                    merge: Option<&'a foon::merge::MergeReport>,
                    source: String,
                    total_cost: f64,
                    warnings: &'a [String],
                    artifacts: &'a [PathBuf],
                }
                println!(
                    "{}",
                    serde_json::to_string_pretty(&Out {
                        out_dir: &outcome.out_dir,
                        recipe_steps: outcome.recipe_steps,
                        candidates: outcome.candidates,
                        merge: outcome.merge.as_ref(),
                        source: outcome.selection.source.to_string(),
                        total_cost: outcome.selection.result.total_cost,
                        warnings: &outcome.warnings,
                        artifacts: &outcome.artifacts,
                    })?
                );
            } else {
                for warning in &outcome.warnings {
                    eprintln!("warning: {warning}");
                }
                eprintln!(
                    "{} steps, {} candidate trees; final plan from {} graph, cost {}",
                    outcome.recipe_steps,
                    outcome.candidates,
                    outcome.selection.source,
                    outcome.selection.result.total_cost
                );
                for artifact in &outcome.artifacts {
                    println!("{}", artifact.display());
                }
            }
            Ok(0)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Retrieve(args) => cmd_retrieve(args),
        Command::Progress(args) => cmd_progress(args),
        Command::Dataset(args) => cmd_dataset(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
