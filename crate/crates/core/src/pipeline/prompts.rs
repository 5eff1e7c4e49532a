use crate::graph::{ConceptGraph, ConceptId};
use crate::query::GRAMMAR_REFERENCE;

pub const GRAPH_INTRO: &str = "There is a concept graph that includes the relations between concepts.";
pub const PATH_RETURNED: &str = "Based on the question, the path between concepts has been returned.";
pub const EMPTY_RULE: &str = "If the path is empty, then there is no relationship.";
pub const PATH_ONLY: &str = "Only use the returned path as the information for answering.";
pub const YES_NO_RULE: &str = "Only return \"Yes\" or \"No\".";
pub const LIST_RULE: &str = "Only return a list of concepts separated by \";\".";
pub const PROPOSAL_RULE: &str =
    "The returned paths connect the known concepts to related ones. Use them to propose a project with a title and a description.";
pub const EMPTY_PATH: &str = "EMPTY";
pub const ANSWER_RETRY_SUFFIX: &str = "Answer with one word: Yes or No.";

/// Command-generation prompt: grammar reference, task number and question.
pub fn command_prompt(task: u8, question: &str) -> String {
    format!("{GRAMMAR_REFERENCE}\nTask: {task}\nQuestion:\n{question}\nReturn the path.")
}

/// Splits a command prompt back into (task, question).
pub fn parse_command_prompt(prompt: &str) -> Option<(u8, &str)> {
    let start = prompt.rfind("\nTask: ")? + "\nTask: ".len();
    let rest = &prompt[start..];
    let (task, rest) = rest.split_once("\nQuestion:\n")?;
    let question = rest.strip_suffix("\nReturn the path.")?;
    Some((task.trim().parse().ok()?, question))
}

/// One line per path with names joined by `;`, or `EMPTY`.
pub fn render_paths(graph: &ConceptGraph, paths: &[Vec<ConceptId>]) -> String {
    if paths.is_empty() {
        return EMPTY_PATH.to_string();
    }
    paths
        .iter()
        .map(|p| graph.render_path(p))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Path-grounded answer prompt. Task 1 asks for Yes/No, Tasks 2-4 for a
/// concept list and Task 5 for a project proposal.
pub fn grounding_prompt(task: u8, question: &str, rendered_paths: &str) -> String {
    let rules: Vec<&str> = match task {
        1 => vec![GRAPH_INTRO, PATH_RETURNED, EMPTY_RULE, PATH_ONLY, YES_NO_RULE],
        5 => vec![GRAPH_INTRO, PROPOSAL_RULE],
        _ => vec![GRAPH_INTRO, PATH_RETURNED, EMPTY_RULE, PATH_ONLY, LIST_RULE],
    };
    format!(
        "{}\n***Question**:\n{question}\n***Path**:\n{rendered_paths}",
        rules.join("\n")
    )
}

/// Splits a grounding prompt into (question, path block).
pub fn parse_grounding_prompt(prompt: &str) -> Option<(&str, &str)> {
    let (_, rest) = prompt.split_once("\n***Question**:\n")?;
    rest.rsplit_once("\n***Path**:\n")
}
