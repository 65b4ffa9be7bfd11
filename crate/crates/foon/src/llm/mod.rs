//! Turning a dish into candidate task trees through a language model.
//!
//! Everything here is deterministic except the model call itself, which
//! hides behind [`client::GenerationClient`]. Prompts are versioned
//! because recorded fixtures key on the request digest: changing a prompt
//! template invalidates recordings, and the version string makes that an
//! explicit event instead of a silent miss.

pub mod client;
pub mod dataset;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::normalize::clean_label;
pub use client::{
    EndpointClient, GenerationClient, RecordingClient, ReplayClient, ScriptedClient,
};
pub use dataset::{
    align_steps, build_finetune_dataset, load_pairs_json, records_to_jsonl, AlignedStep,
    DatasetError, FinetuneRecord, RecipePair,
};

pub const PROMPT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("no recorded response for request {digest} (model {model}); run with recording enabled first")]
    ReplayMiss { digest: String, model: String },
    #[error("endpoint api key env var {0} is not set")]
    MissingApiKey(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("generated text contains no numbered instructions")]
    NoInstructionsFound,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DishSpecError {
    #[error("dish name is empty")]
    EmptyName,
    #[error("ingredient {0} is empty")]
    EmptyIngredient(usize),
}

/// The dish a recipe is requested for.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DishSpec {
    pub name: String,
    pub ingredients: Vec<String>,
}

impl DishSpec {
    pub fn new(
        name: &str,
        ingredients: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<Self, DishSpecError> {
        let name = clean_label(name);
        if name.is_empty() {
            return Err(DishSpecError::EmptyName);
        }
        let ingredients: Vec<String> = ingredients
            .into_iter()
            .map(|i| clean_label(i.as_ref()))
            .collect();
        if let Some(at) = ingredients.iter().position(String::is_empty) {
            return Err(DishSpecError::EmptyIngredient(at + 1));
        }
        Ok(DishSpec { name, ingredients })
    }
}

/// Prompt asking for a numbered recipe.
pub fn build_recipe_prompt(dish: &DishSpec) -> String {
    let mut prompt = format!(
        "Write a recipe for {}.\n\
         Number every step like \"1.\" and keep each step to one sentence.\n",
        dish.name
    );
    if !dish.ingredients.is_empty() {
        prompt.push_str("Use only these ingredients: ");
        prompt.push_str(&dish.ingredients.join(", "));
        prompt.push_str(".\n");
    }
    prompt.push_str(&format!("(recipe prompt {PROMPT_VERSION})\n"));
    prompt
}

/// Prompt asking for one task tree covering a recipe, in the line format
/// this crate parses.
pub fn build_tree_prompt(recipe: &str) -> String {
    format!(
        "Convert this recipe into a task tree.\n\
         Write one unit per step: input objects first (O/S/C lines), one\n\
         M line, output objects, then a // line. Start the file with a\n\
         GOAL line naming the finished dish and its states.\n\
         Recipe:\n{recipe}\n(tree prompt {PROMPT_VERSION})\n"
    )
}

/// One sampling request. `sample_index` distinguishes the n otherwise
/// identical requests of a batch so each gets its own digest, and with it
/// its own recording.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub model: String,
    pub prompt: String,
    pub n: u32,
    pub max_tokens: u32,
    pub sample_index: u32,
}

impl GenerationRequest {
    /// Stable identity for record and replay, from every field that
    /// changes what the model would return.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.model.as_bytes());
        hasher.update([0]);
        hasher.update(self.n.to_le_bytes());
        hasher.update(self.max_tokens.to_le_bytes());
        hasher.update(self.sample_index.to_le_bytes());
        hasher.update([0]);
        hasher.update(self.prompt.as_bytes());
        let hash = hasher.finalize();
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub model: String,
    pub text: String,
    #[serde(default = "default_finish_reason")]
    pub finish_reason: String,
}

fn default_finish_reason() -> String {
    "stop".to_string()
}

/// How generation is configured. `api_key_env` names the environment
/// variable holding the key; the key itself never appears in config.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub api_key_env: String,
    pub recipe_model: String,
    pub tree_model: String,
    pub samples: u32,
    pub max_tokens: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8080/v1/generate".to_string(),
            api_key_env: "FOON_API_KEY".to_string(),
            recipe_model: "recipe-writer-1".to_string(),
            tree_model: "tree-writer-1".to_string(),
            samples: 5,
            max_tokens: 1024,
        }
    }
}

/// Run `n` single-sample requests concurrently, one thread each, and
/// return every outcome in sample order. A failed sample never hides the
/// others.
pub fn generate_samples(
    client: &(impl GenerationClient + ?Sized),
    model: &str,
    prompt: &str,
    n: u32,
    max_tokens: u32,
) -> Vec<Result<GenerationResponse, LlmError>> {
    let requests: Vec<GenerationRequest> = (0..n)
        .map(|sample_index| GenerationRequest {
            model: model.to_string(),
            prompt: prompt.to_string(),
            n: 1,
            max_tokens,
            sample_index,
        })
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = requests
            .iter()
            .map(|request| scope.spawn(move || client.generate(request)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("generation thread panicked"))
            .collect()
    })
}

/// One recipe text for the dish.
pub fn generate_recipe(
    client: &(impl GenerationClient + ?Sized),
    config: &LlmConfig,
    dish: &DishSpec,
) -> Result<GenerationResponse, LlmError> {
    let prompt = build_recipe_prompt(dish);
    client.generate(&GenerationRequest {
        model: config.recipe_model.clone(),
        prompt,
        n: 1,
        max_tokens: config.max_tokens,
        sample_index: 0,
    })
}

/// `config.samples` candidate task-tree texts for the recipe.
pub fn generate_task_trees(
    client: &(impl GenerationClient + ?Sized),
    config: &LlmConfig,
    recipe: &str,
) -> Vec<Result<GenerationResponse, LlmError>> {
    generate_samples(
        client,
        &config.tree_model,
        &build_tree_prompt(recipe),
        config.samples,
        config.max_tokens,
    )
}

/// Numbered instructions pulled out of generated recipe text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedInstructions {
    pub steps: Vec<String>,
    /// Numbering oddities worth surfacing: gaps, repeats, restarts.
    pub warnings: Vec<String>,
}

/// Extract lines shaped like `1. text` or `2) text`, in order of
/// appearance. Unnumbered lines (headers, blank lines) are skipped.
pub fn parse_numbered_instructions(text: &str) -> Result<ParsedInstructions, LlmError> {
    let pattern = regex::Regex::new(r"^\s*(\d+)[.)]\s*(.*)$").expect("static regex");
    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    let mut last_number: Option<u64> = None;
    for line in text.lines() {
        let Some(captures) = pattern.captures(line) else {
            continue;
        };
        let number: u64 = captures[1].parse().unwrap_or(u64::MAX);
        let body = captures[2].trim();
        if body.is_empty() {
            warnings.push(format!("step {number} has no text"));
            continue;
        }
        if let Some(last) = last_number {
            if number != last + 1 {
                warnings.push(format!(
                    "step numbering jumps from {last} to {number}"
                ));
            }
        } else if number != 1 {
            warnings.push(format!("numbering starts at {number}"));
        }
        last_number = Some(number);
        steps.push(body.to_string());
    }
    if steps.is_empty() {
        return Err(LlmError::NoInstructionsFound);
    }
    Ok(ParsedInstructions { steps, warnings })
}

/// Crude but stable token estimate: one token per 4 bytes, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    estimate_tokens_with(text, 4.0)
}

/// Token estimate with a custom bytes-per-token divisor.
pub fn estimate_tokens_with(text: &str, bytes_per_token: f64) -> usize {
    assert!(bytes_per_token > 0.0, "divisor must be positive");
    (text.len() as f64 / bytes_per_token).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dish_spec_cleans_and_validates() {
        let dish = DishSpec::new("  Greek  Salad ", ["Cucumber", "TOMATO"]).unwrap();
        assert_eq!(dish.name, "greek salad");
        assert_eq!(dish.ingredients, ["cucumber", "tomato"]);
        assert_eq!(
            DishSpec::new("  ", ["x"]).unwrap_err(),
            DishSpecError::EmptyName
        );
        assert_eq!(
            DishSpec::new("soup", ["water", " "]).unwrap_err(),
            DishSpecError::EmptyIngredient(2)
        );
    }

    #[test]
    fn prompts_are_deterministic_and_versioned() {
        let dish = DishSpec::new("greek salad", ["cucumber"]).unwrap();
        let a = build_recipe_prompt(&dish);
        let b = build_recipe_prompt(&dish);
        assert_eq!(a, b);
        assert!(a.contains("greek salad"));
        assert!(a.contains("cucumber"));
        assert!(a.contains(PROMPT_VERSION));
        assert!(build_tree_prompt("1. Slice.").contains("1. Slice."));
    }

    #[test]
    fn request_digest_is_stable_and_sample_sensitive() {
        let request = GenerationRequest {
            model: "tree-writer-1".to_string(),
            prompt: "hello".to_string(),
            n: 1,
            max_tokens: 64,
            sample_index: 0,
        };
        // Frozen: recorded fixtures are addressed by this value.
        assert_eq!(request.digest(), "2e449c96d2f8b681");
        let mut sibling = request.clone();
        sibling.sample_index = 1;
        assert_ne!(request.digest(), sibling.digest());
    }

    #[test]
    fn numbered_instructions_parse_in_order() {
        let text = "Salad\n\n1. Slice the cucumber.\n2) Chop the tomato.\n3. Mix.\n";
        let parsed = parse_numbered_instructions(text).unwrap();
        assert_eq!(
            parsed.steps,
            [
                "Slice the cucumber.",
                "Chop the tomato.",
                "Mix."
            ]
        );
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn numbering_gaps_warn_but_do_not_fail() {
        let text = "2. Start oddly.\n4. Jump.\n";
        let parsed = parse_numbered_instructions(text).unwrap();
        assert_eq!(parsed.steps.len(), 2);
        assert_eq!(parsed.warnings.len(), 2);
        assert!(parsed.warnings[0].contains("starts at 2"));
        assert!(parsed.warnings[1].contains("jumps from 2 to 4"));
    }

    #[test]
    fn unnumbered_text_is_an_error() {
        assert!(matches!(
            parse_numbered_instructions("just prose, no steps"),
            Err(LlmError::NoInstructionsFound)
        ));
    }

    #[test]
    fn token_estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
        assert_eq!(estimate_tokens_with("abcdefgh", 8.0), 1);
    }

    #[test]
    fn config_defaults_match_the_pipeline() {
        let config = LlmConfig::default();
        assert_eq!(config.samples, 5);
        assert_eq!(config.api_key_env, "FOON_API_KEY");
    }

    #[test]
    fn samples_come_back_in_index_order() {
        let mut client = ScriptedClient::new();
        for i in 0..5 {
            client.script("tree-writer-1", i, &format!("tree {i}"));
        }
        let results = generate_samples(&client, "tree-writer-1", "prompt", 5, 64);
        assert_eq!(results.len(), 5);
        for (i, result) in results.iter().enumerate() {
            assert_eq!(result.as_ref().unwrap().text, format!("tree {i}"));
        }
    }

    #[test]
    fn a_failed_sample_does_not_hide_the_others() {
        let mut client = ScriptedClient::new();
        client.script("tree-writer-1", 0, "tree 0");
        client.script("tree-writer-1", 2, "tree 2");
        let results = generate_samples(&client, "tree-writer-1", "prompt", 3, 64);
        assert!(results[0].is_ok());
        assert!(results[1].is_err());
        assert!(results[2].is_ok());
    }
}
