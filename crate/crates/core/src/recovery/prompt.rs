//! Pairwise judgment prompt templates and verdict parsing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RecoveryError;

/// Prompt family plus the parameters only some families use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptVariant {
    ZeroShot,
    CoT,
    /// Documents mentioning either concept.
    ZeroShotDoc,
    /// Neighboring concepts from labeled training edges within `hops`.
    ZeroShotCon {
        hops: usize,
    },
    /// Stored introductory paragraphs.
    ZeroShotWiki,
    /// Top-`k` lexically retrieved passages.
    ZeroShotRag {
        k: usize,
    },
}

/// Parameter-free tag of a [`PromptVariant`], used as the fixture key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantKind {
    #[serde(rename = "zs")]
    ZeroShot,
    #[serde(rename = "cot")]
    CoT,
    #[serde(rename = "zs-doc")]
    ZeroShotDoc,
    #[serde(rename = "zs-con")]
    ZeroShotCon,
    #[serde(rename = "zs-wiki")]
    ZeroShotWiki,
    #[serde(rename = "zs-rag")]
    ZeroShotRag,
}

impl VariantKind {
    pub const ALL: [VariantKind; 6] = [
        VariantKind::ZeroShot,
        VariantKind::CoT,
        VariantKind::ZeroShotDoc,
        VariantKind::ZeroShotCon,
        VariantKind::ZeroShotWiki,
        VariantKind::ZeroShotRag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::ZeroShot => "zs",
            VariantKind::CoT => "cot",
            VariantKind::ZeroShotDoc => "zs-doc",
            VariantKind::ZeroShotCon => "zs-con",
            VariantKind::ZeroShotWiki => "zs-wiki",
            VariantKind::ZeroShotRag => "zs-rag",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown prompt variant {s:?}"))
    }
}

impl PromptVariant {
    pub const DEFAULT_RAG_K: usize = 3;
    pub const DEFAULT_CON_HOPS: usize = 1;

    pub fn kind(self) -> VariantKind {
        match self {
            PromptVariant::ZeroShot => VariantKind::ZeroShot,
            PromptVariant::CoT => VariantKind::CoT,
            PromptVariant::ZeroShotDoc => VariantKind::ZeroShotDoc,
            PromptVariant::ZeroShotCon { .. } => VariantKind::ZeroShotCon,
            PromptVariant::ZeroShotWiki => VariantKind::ZeroShotWiki,
            PromptVariant::ZeroShotRag { .. } => VariantKind::ZeroShotRag,
        }
    }

    /// Variant for `kind` with default parameters.
    pub fn from_kind(kind: VariantKind) -> Self {
        match kind {
            VariantKind::ZeroShot => PromptVariant::ZeroShot,
            VariantKind::CoT => PromptVariant::CoT,
            VariantKind::ZeroShotDoc => PromptVariant::ZeroShotDoc,
            VariantKind::ZeroShotCon => PromptVariant::ZeroShotCon {
                hops: Self::DEFAULT_CON_HOPS,
            },
            VariantKind::ZeroShotWiki => PromptVariant::ZeroShotWiki,
            VariantKind::ZeroShotRag => PromptVariant::ZeroShotRag { k: Self::DEFAULT_RAG_K },
        }
    }
}

/// Final answer of a pairwise judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Verdict::Yes
    }

    pub fn flip(self) -> Self {
        Verdict::from_bool(!self.is_yes())
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_yes() { "YES" } else { "NO" })
    }
}

const HINTS: &str = "Hints:
1. Answer YES or NO only.
2. This is a directional relation, which means if YES, (B,A) may be False, but (A,B) is True.
3. Your answer will be used to create a knowledge graph.";

const HINTS_END: &str = "3. Your answer will be used to create a knowledge graph.";

/// Header that introduces external content for the Doc., Con. and Wiki. variants.
pub const CONTENTS_HEADER: &str = "And here are related contents to help: ";

/// Header that introduces retrieved passages for the RAG variant.
pub const RAG_HEADER: &str = "Related contents:";

/// Suffix appended when re-asking after an unparseable answer.
pub const RETRY_SUFFIX: &str = "Answer YES or NO only.";

const COT_STEPS: &str = "# Identify the Domain and Concepts: Clearly define A and B within their domain. Understand the specific content and scope of each concept.

# Analyze the Directional Relationship: Determine if knowledge of concept A is essential before one can fully grasp concept B. This involves considering if A provides foundational knowledge or skills required for understanding B.

# Evaluate Dependency: Assess whether B is dependent on A in such a way that without understanding A, one cannot understand B.

# Draw a Conclusion: Based on your analysis, decide if understanding A is a necessary prerequisite for understanding B.

# Provide a Clear Answer: After detailed reasoning, conclude with a distinct answer: <result>YES</result> if understanding A is a prerequisite for understanding B, or <result>NO</result> if it is not.";

fn zero_shot_head(domain: &str, a: &str, b: &str) -> String {
    format!(
        "We have two {domain} related concepts: A: {a} and B: {b}.\n\
         Do you think that people learning {a} will help in understanding {b}?\n\
         {HINTS}"
    )
}

fn cot_head(domain: &str, a: &str, b: &str) -> String {
    format!(
        "In the context of {domain}, we have two concepts: A: {a} and B: {b}. \
         Assess if understanding {a} is a necessary prerequisite for understanding {b}. \
         Employ the Chain of Thought approach to detail your reasoning before giving a final answer.\n\n\
         {COT_STEPS}"
    )
}

/// Renders the judgment prompt for the ordered pair (`concept_a`, `concept_b`).
///
/// For the plain zero-shot variant `additional_info` fills the trailing
/// free-form line, which disappears when empty. Doc. keeps the content
/// inline after [`CONTENTS_HEADER`]; Con. and Wiki. put it on the following
/// lines; RAG puts it under [`RAG_HEADER`].
pub fn render_prompt(
    variant: PromptVariant,
    domain: &str,
    concept_a: &str,
    concept_b: &str,
    additional_info: &str,
) -> Result<String, RecoveryError> {
    if concept_a.trim().is_empty() || concept_b.trim().is_empty() {
        return Err(RecoveryError::EmptyConcept);
    }
    let (a, b) = (concept_a, concept_b);
    let mut out = match variant {
        PromptVariant::CoT => cot_head(domain, a, b),
        _ => zero_shot_head(domain, a, b),
    };
    match variant {
        PromptVariant::ZeroShot => {
            if !additional_info.is_empty() {
                out.push('\n');
                out.push_str(additional_info);
            }
        }
        PromptVariant::CoT => {
            if !additional_info.is_empty() {
                out.push_str("\n\n");
                out.push_str(additional_info);
            }
        }
        PromptVariant::ZeroShotDoc => {
            out.push('\n');
            out.push_str(CONTENTS_HEADER);
            out.push_str(additional_info);
        }
        PromptVariant::ZeroShotCon { .. } | PromptVariant::ZeroShotWiki => {
            out.push('\n');
            out.push_str(CONTENTS_HEADER);
            out.push('\n');
            out.push_str(additional_info);
        }
        PromptVariant::ZeroShotRag { .. } => {
            out.push('\n');
            out.push_str(RAG_HEADER);
            out.push('\n');
            out.push_str(additional_info);
        }
    }
    Ok(out)
}

/// Reads a YES/NO verdict. A `<result>…</result>` tag takes priority; else
/// the first standalone case-insensitive `YES` or `NO` token decides.
pub fn parse_verdict(raw: &str) -> Result<Verdict, RecoveryError> {
    let lower = raw.to_ascii_lowercase();
    let mut from = 0;
    while let Some(open) = lower[from..].find("<result>") {
        let start = from + open + "<result>".len();
        let Some(close) = lower[start..].find("</result>") else {
            break;
        };
        match lower[start..start + close].trim() {
            "yes" => return Ok(Verdict::Yes),
            "no" => return Ok(Verdict::No),
            _ => from = start + close,
        }
    }
    raw.split(|c: char| !c.is_alphanumeric())
        .find_map(|tok| {
            if tok.eq_ignore_ascii_case("yes") {
                Some(Verdict::Yes)
            } else if tok.eq_ignore_ascii_case("no") {
                Some(Verdict::No)
            } else {
                None
            }
        })
        .ok_or(RecoveryError::UnparseableVerdict)
}

/// Recovers the concept pair from a rendered judgment prompt.
///
/// Candidate splits of the `A: … and B: …` slot are checked against the
/// sentence that repeats both names, so names containing " and B: " still
/// resolve when the repetition disambiguates them.
pub fn extract_pair(prompt: &str) -> Option<(String, String)> {
    let first = prompt.lines().next()?;
    if first.starts_with("We have two ") {
        let rest = &first[first.find(" related concepts: A: ")? + " related concepts: A: ".len()..];
        let rest = rest.strip_suffix('.')?;
        for (i, _) in rest.match_indices(" and B: ") {
            let (a, b) = (&rest[..i], &rest[i + " and B: ".len()..]);
            let probe = format!("\nDo you think that people learning {a} will help in understanding {b}?\n");
            if prompt.contains(&probe) {
                return Some((a.to_string(), b.to_string()));
            }
        }
        None
    } else if first.starts_with("In the context of ") {
        let rest = &first[first.find(", we have two concepts: A: ")? + ", we have two concepts: A: ".len()..];
        for (i, _) in rest.match_indices(" and B: ") {
            let a = &rest[..i];
            let tail = &rest[i + " and B: ".len()..];
            let mid = format!(". Assess if understanding {a} is a necessary prerequisite for understanding ");
            for (j, _) in tail.match_indices(&mid) {
                let b = &tail[..j];
                let expected = format!("{b}. Employ the Chain of Thought approach");
                if tail[j + mid.len()..].starts_with(&expected) {
                    return Some((a.to_string(), b.to_string()));
                }
            }
        }
        None
    } else {
        None
    }
}

/// Infers which variant rendered `prompt`.
pub fn detect_variant(prompt: &str) -> Option<VariantKind> {
    extract_pair(prompt)?;
    if prompt.starts_with("In the context of ") {
        return Some(VariantKind::CoT);
    }
    let tail = &prompt[prompt.find(HINTS_END)? + HINTS_END.len()..];
    let Some(tail) = tail.strip_prefix('\n') else {
        return Some(VariantKind::ZeroShot);
    };
    if let Some(after) = tail.strip_prefix(CONTENTS_HEADER) {
        if let Some(body) = after.strip_prefix('\n') {
            if body.contains(" is a prerequisite of the following concepts:") {
                return Some(VariantKind::ZeroShotCon);
            }
            return Some(VariantKind::ZeroShotWiki);
        }
        return Some(VariantKind::ZeroShotDoc);
    }
    if tail.starts_with(RAG_HEADER) {
        return Some(VariantKind::ZeroShotRag);
    }
    Some(VariantKind::ZeroShot)
}
