//! Building a fine-tune dataset from recipes whose instructions are
//! aligned, step by step, with the units of a validated task tree.
//!
//! Long recipes are split into chunks of consecutive steps so every
//! record fits a token budget with headroom. Chunking never rewrites
//! anything: concatenating a recipe's completions in chunk order
//! reproduces exactly the concatenation of its unit texts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TaskTree;

use super::estimate_tokens;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("recipe {recipe_id}: {instructions} instructions but {units} units; steps must align one to one")]
    AlignmentMismatch {
        recipe_id: String,
        instructions: usize,
        units: usize,
    },
    #[error("recipe {recipe_id}: step {step} alone exceeds the token budget {budget}")]
    UnchunkableRecipe {
        recipe_id: String,
        step: usize,
        budget: usize,
    },
    #[error("pairs file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One instruction paired with the unit text it teaches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedStep {
    pub instruction: String,
    pub unit_text: String,
}

/// A recipe ready for dataset building.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecipePair {
    pub recipe_id: String,
    pub dish: String,
    pub steps: Vec<AlignedStep>,
}

/// One training record. `chunk_index` orders the chunks of a recipe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub prompt: String,
    pub completion: String,
    pub recipe_id: String,
    pub chunk_index: usize,
}

/// Pair instructions with tree units positionally.
pub fn align_steps(
    recipe_id: &str,
    instructions: &[String],
    tree: &TaskTree,
) -> Result<Vec<AlignedStep>, DatasetError> {
    if instructions.len() != tree.units.len() {
        return Err(DatasetError::AlignmentMismatch {
            recipe_id: recipe_id.to_string(),
            instructions: instructions.len(),
            units: tree.units.len(),
        });
    }
    Ok(instructions
        .iter()
        .zip(&tree.units)
        .map(|(instruction, unit)| AlignedStep {
            instruction: instruction.clone(),
            unit_text: format!("{}//\n", unit.text()),
        })
        .collect())
}

fn chunk_prompt(dish: &str, steps: &[(usize, &AlignedStep)]) -> String {
    let mut prompt = format!("Translate these steps of the {dish} recipe into task units:\n");
    for (number, step) in steps {
        prompt.push_str(&format!("{number}. {}\n", step.instruction));
    }
    prompt
}

fn chunk_completion(steps: &[(usize, &AlignedStep)]) -> String {
    steps.iter().map(|(_, s)| s.unit_text.as_str()).collect()
}

/// Greedily pack consecutive steps into records whose estimated prompt
/// plus completion size stays within 90% of `budget` tokens.
pub fn build_finetune_dataset(
    pairs: &[RecipePair],
    budget: usize,
) -> Result<Vec<FinetuneRecord>, DatasetError> {
    let limit = (budget as f64 * 0.9).floor() as usize;
    let mut records = Vec::new();
    for pair in pairs {
        let numbered: Vec<(usize, &AlignedStep)> = pair
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s))
            .collect();
        let mut chunk_index = 0;
        let mut start = 0;
        while start < numbered.len() {
            let mut end = start;
            while end < numbered.len() {
                let candidate = &numbered[start..=end];
                let size = estimate_tokens(&chunk_prompt(&pair.dish, candidate))
                    + estimate_tokens(&chunk_completion(candidate));
                if size > limit {
                    break;
                }
                end += 1;
            }
            if end == start {
                return Err(DatasetError::UnchunkableRecipe {
                    recipe_id: pair.recipe_id.clone(),
                    step: numbered[start].0,
                    budget,
                });
            }
            let chunk = &numbered[start..end];
            records.push(FinetuneRecord {
                prompt: chunk_prompt(&pair.dish, chunk),
                completion: chunk_completion(chunk),
                recipe_id: pair.recipe_id.clone(),
                chunk_index,
            });
            chunk_index += 1;
            start = end;
        }
    }
    Ok(records)
}

/// Serialize records as JSON Lines, one compact object per line.
pub fn records_to_jsonl(records: &[FinetuneRecord]) -> Result<String, DatasetError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Load aligned recipe pairs from their JSON file.
pub fn load_pairs_json(text: &str) -> Result<Vec<RecipePair>, DatasetError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(recipe_id: &str, steps: usize) -> RecipePair {
        RecipePair {
            recipe_id: recipe_id.to_string(),
            dish: "test dish".to_string(),
            steps: (0..steps)
                .map(|i| AlignedStep {
                    instruction: format!("Do thing number {i}."),
                    unit_text: format!(
                        "O\titem{i}\nS\traw\nM\twork\nO\titem{i}\nS\tdone\n//\n"
                    ),
                })
                .collect(),
        }
    }

    #[test]
    fn completions_reassemble_the_whole_tree() {
        let pairs = vec![pair("r1", 12)];
        let records = build_finetune_dataset(&pairs, 64).unwrap();
        assert!(records.len() > 1, "budget 64 must force chunking");
        let reassembled: String = records.iter().map(|r| r.completion.as_str()).collect();
        let expected: String = pairs[0].steps.iter().map(|s| s.unit_text.as_str()).collect();
        assert_eq!(reassembled, expected);
        for (i, record) in records.iter().enumerate() {
            assert_eq!(record.chunk_index, i);
            assert_eq!(record.recipe_id, "r1");
        }
    }

    #[test]
    fn every_record_fits_the_budget_with_headroom() {
        let records = build_finetune_dataset(&[pair("r1", 30)], 100).unwrap();
        for record in records {
            let size = estimate_tokens(&record.prompt) + estimate_tokens(&record.completion);
            assert!(size <= 90, "record of {size} tokens exceeds 90");
        }
    }

    #[test]
    fn a_step_too_big_for_the_budget_is_an_error() {
        let err = build_finetune_dataset(&[pair("r1", 3)], 10).unwrap_err();
        match err {
            DatasetError::UnchunkableRecipe { recipe_id, step, budget } => {
                assert_eq!(recipe_id, "r1");
                assert_eq!(step, 1);
                assert_eq!(budget, 10);
            }
            other => panic!("expected UnchunkableRecipe, got {other:?}"),
        }
    }

    #[test]
    fn prompts_number_steps_by_recipe_position() {
        let records = build_finetune_dataset(&[pair("r1", 12)], 64).unwrap();
        assert!(records[0].prompt.contains("1. Do thing number 0."));
        // Later chunks keep the recipe's own numbering.
        let last = records.last().unwrap();
        assert!(last.prompt.contains("12. Do thing number 11."));
    }

    #[test]
    fn jsonl_round_trips() {
        let records = build_finetune_dataset(&[pair("r1", 4)], 2048).unwrap();
        let jsonl = records_to_jsonl(&records).unwrap();
        let parsed: Vec<FinetuneRecord> = jsonl
            .lines()
            .map(|line| serde_json::from_str(line).unwrap())
            .collect();
        assert_eq!(parsed, records);
    }

    #[test]
    fn alignment_mismatch_is_reported() {
        use crate::model::{ObjectNode, TaskTree};
        let tree = TaskTree::new(Vec::new(), ObjectNode::with_states("x", ["done"]));
        let err = align_steps("r9", &["one step".to_string()], &tree).unwrap_err();
        assert!(matches!(err, DatasetError::AlignmentMismatch { .. }));
    }

    #[test]
    fn pairs_json_round_trips() {
        let pairs = vec![pair("r1", 2)];
        let text = serde_json::to_string_pretty(&pairs).unwrap();
        let loaded = load_pairs_json(&text).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].steps, pairs[0].steps);
    }
}
