//! End-to-end checks of the command-line interface: every subcommand, the
//! documented exit codes, and the JSON output shapes scripts rely on.

use std::path::Path;
use std::process::{Command, Output};

use anyhow::{Context, Result};

fn foon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_of(out: &Output) -> Result<serde_json::Value> {
    serde_json::from_str(&stdout_of(out)).context("stdout is JSON")
}

#[test]
fn version_prints_the_binary_name() {
    let out = foon(&["--version"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).starts_with("foon "));
}

#[test]
fn parse_reports_units_goal_and_exit_zero() -> Result<()> {
    let out = foon(&["parse", "fixtures/greek/tree2.txt", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out)?;
    assert_eq!(v["units"].as_array().unwrap().len(), 6);
    assert_eq!(v["goal"]["name"], "greek salad");
    assert_eq!(v["defects"].as_array().unwrap().len(), 0);
    Ok(())
}

#[test]
fn parse_flags_defects_and_exits_one() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("broken.txt");
    std::fs::write(&path, "GOAL\tsoup\thot\nO\twater\nS\traw\nO\tsoup\nS\thot\n//\n")?;
    let out = foon(&["parse", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("MissingMotion"));
    Ok(())
}

#[test]
fn validate_passes_a_clean_tree() {
    let out = foon(&[
        "validate",
        "fixtures/greek/tree2.txt",
        "--reference",
        "fixtures/reference.txt",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr_of(&out).contains("valid"));
}

#[test]
fn validate_rejects_an_impossible_transition() {
    let out = foon(&[
        "validate",
        "fixtures/greek/tree1.txt",
        "--reference",
        "fixtures/reference.txt",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("InvalidTransition"));
    assert!(stdout_of(&out).contains("apple"));
}

#[test]
fn merge_accounts_for_every_unit_and_writes_graphs() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let mini = dir.path().join("mini.txt");
    let wide = dir.path().join("super.txt");
    let out = foon(&[
        "merge",
        "fixtures/greek/tree1.txt",
        "fixtures/greek/tree2.txt",
        "fixtures/greek/tree3.txt",
        "fixtures/greek/tree4.txt",
        "fixtures/greek/tree5.txt",
        "--reference",
        "fixtures/reference.txt",
        "--mini-out",
        mini.to_str().unwrap(),
        "--super-out",
        wide.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out)?;
    assert_eq!(v["report"]["total"], 31);
    assert_eq!(v["report"]["kept"], 7);
    assert_eq!(v["report"]["dropped_invalid"], 1);
    assert_eq!(v["report"]["deduplicated"], 23);
    assert_eq!(v["renames"]["tomatoes"], "tomato");
    assert_eq!(v["widened"]["from_first"], 6);
    assert_eq!(v["widened"]["from_second"], 8);
    assert_eq!(v["widened"]["shared"], 2);
    for path in [&mini, &wide] {
        let text = std::fs::read_to_string(path)?;
        assert!(text.contains("M\t"), "{} holds units", path.display());
    }
    Ok(())
}

#[test]
fn retrieve_prints_the_cheapest_plan() -> Result<()> {
    let out = foon(&[
        "retrieve",
        "--graph",
        "fixtures/fig4/mini.txt",
        "--goal",
        "milkshake:blended",
        "--kitchen",
        "fixtures/fig4/kitchen.txt",
        "--costs",
        "fixtures/fig4/costs.json",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out)?;
    assert!((v["total_cost"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert_eq!(v["units"], 4);
    assert_eq!(v["goal"], "milkshake:blended");
    Ok(())
}

#[test]
fn retrieve_without_a_path_exits_one_and_names_the_gap() {
    let out = foon(&[
        "retrieve",
        "--graph",
        "fixtures/fig4/mini.txt",
        "--goal",
        "lasagna:baked",
        "--kitchen",
        "fixtures/fig4/kitchen.txt",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("no path to goal lasagna:baked"));
}

#[test]
fn progress_renders_one_line_per_ingredient() {
    let out = foon(&["progress", "fixtures/boil_water.txt"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("water: raw"));
    assert!(text.contains("boiled"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn dataset_emits_jsonl_records() -> Result<()> {
    let out = foon(&[
        "dataset",
        "--pairs",
        "fixtures/dataset/pairs.json",
        "--budget",
        "2048",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_eq!(text.lines().count(), 1);
    let record: serde_json::Value = serde_json::from_str(text.lines().next().unwrap())?;
    assert_eq!(record["recipe_id"], "greek-salad");
    assert!(record["prompt"].as_str().unwrap().contains("1. Slice"));
    Ok(())
}

#[test]
fn dataset_with_a_hopeless_budget_is_a_usage_error() {
    let out = foon(&[
        "dataset",
        "--pairs",
        "fixtures/dataset/pairs.json",
        "--budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error"));
}

fn greek_pipeline_args<'a>(out_dir: &'a Path, kitchen: &'a str) -> Vec<&'a str> {
    let mut args = vec![
        "pipeline",
        "--dish",
        "greek salad",
    ];
    for ingredient in ["tomato", "cucumber", "onion", "feta", "olive oil"] {
        args.push("--ingredient");
        args.push(ingredient);
    }
    args.extend([
        "--reference",
        "fixtures/reference.txt",
        "--kitchen",
        kitchen,
        "--costs",
        "fixtures/robot.json",
        "--replay",
        "fixtures/replay",
        "--out",
    ]);
    args.push(out_dir.to_str().unwrap());
    args
}

#[test]
fn pipeline_replays_to_a_full_artifact_set() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let mut args = greek_pipeline_args(dir.path(), "fixtures/kitchen.txt");
    args.push("--json");
    let out = foon(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v = json_of(&out)?;
    assert_eq!(v["recipe_steps"], 6);
    assert_eq!(v["candidates"], 5);
    assert_eq!(v["source"], "super");
    assert!((v["total_cost"].as_f64().unwrap() - 0.65).abs() < 1e-9);
    assert_eq!(v["artifacts"].as_array().unwrap().len(), 13);
    assert!(dir.path().join("retrieval.json").is_file());
    assert!(dir.path().join("progress.txt").is_file());
    Ok(())
}

#[test]
fn pipeline_without_any_plan_exits_one() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let empty_kitchen = dir.path().join("kitchen.txt");
    std::fs::write(&empty_kitchen, "")?;
    let out_dir = dir.path().join("run");
    std::fs::create_dir(&out_dir)?;
    let kitchen = empty_kitchen.to_str().unwrap().to_string();
    let args = greek_pipeline_args(&out_dir, &kitchen);
    let out = foon(&args);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("no plan for the goal"));
    Ok(())
}

#[test]
fn pipeline_replay_miss_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = foon(&[
        "pipeline",
        "--dish",
        "mystery stew",
        "--reference",
        "fixtures/reference.txt",
        "--kitchen",
        "fixtures/kitchen.txt",
        "--replay",
        "fixtures/replay",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("no recorded response"));
}
