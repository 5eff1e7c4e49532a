use std::collections::BTreeSet;

use super::prompts::{parse_command_prompt, parse_grounding_prompt, EMPTY_PATH, PROPOSAL_RULE, YES_NO_RULE};
use super::{extract_concepts, fallback_script};
use crate::llm::{Oracle, OracleError};
use crate::text::{contains_token_run, normalize_name, tokenize};

/// Command oracle that emits the deterministic template script for the
/// concepts it finds in the question.
#[derive(Debug, Clone)]
pub struct TemplateCommandOracle {
    vocabulary: Vec<String>,
    prereq_depth: u32,
    expansion_hops: u32,
}

impl TemplateCommandOracle {
    pub fn new(vocabulary: Vec<String>) -> Self {
        Self {
            vocabulary,
            prereq_depth: 3,
            expansion_hops: 2,
        }
    }

    pub fn with_limits(vocabulary: Vec<String>, prereq_depth: u32, expansion_hops: u32) -> Self {
        Self {
            vocabulary,
            prereq_depth,
            expansion_hops,
        }
    }
}

impl Oracle for TemplateCommandOracle {
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let (task, question) = parse_command_prompt(prompt).ok_or(OracleError::UnrecognizedPrompt)?;
        let concepts = extract_concepts(question, &self.vocabulary);
        Ok(fallback_script(task, &concepts, self.prereq_depth, self.expansion_hops).unwrap_or_default())
    }
}

/// Command oracle whose output never parses.
#[derive(Debug, Clone, Copy, Default)]
pub struct GarbageOracle;

impl Oracle for GarbageOracle {
    fn complete(&self, _prompt: &str) -> Result<String, OracleError> {
        Ok("MATCH (a)-[:PREREQ*]->(b) RETURN p; -- sure, here you go!".to_string())
    }
}

/// Answer oracle that follows the grounding prompt's rules literally.
///
/// Yes/No prompts get `Yes` unless the path block is `EMPTY`. List prompts
/// get the distinct path concepts not named in the question. Proposal
/// prompts get a one-line idea naming every path concept.
#[derive(Debug, Clone, Copy, Default)]
pub struct FollowingAnswerOracle;

impl Oracle for FollowingAnswerOracle {
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let (question, block) = parse_grounding_prompt(prompt).ok_or(OracleError::UnrecognizedPrompt)?;
        if prompt.contains(YES_NO_RULE) {
            return Ok(if block.trim() == EMPTY_PATH { "No" } else { "Yes" }.to_string());
        }
        let mut seen = BTreeSet::new();
        let names: Vec<&str> = if block.trim() == EMPTY_PATH {
            Vec::new()
        } else {
            block
                .lines()
                .flat_map(|l| l.split(';'))
                .map(str::trim)
                .filter(|n| !n.is_empty() && seen.insert(normalize_name(n)))
                .collect()
        };
        if prompt.contains(PROPOSAL_RULE) {
            return Ok(format!("Project: combine {}.", names.join(", ")));
        }
        let q = tokenize(question);
        let fresh: Vec<&str> = names
            .into_iter()
            .filter(|n| !contains_token_run(&q, &tokenize(n)))
            .collect();
        Ok(fresh.join(";"))
    }
}
