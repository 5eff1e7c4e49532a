//! `kind[:argument]` flag values naming oracles, embedders and samplers.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Serialize, Serializer};

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn path_arg(kind: &str, arg: Option<&str>) -> Result<PathBuf, String> {
    match arg {
        Some(p) if !p.is_empty() => Ok(PathBuf::from(p)),
        _ => Err(format!("{kind} needs a file: {kind}:PATH")),
    }
}

fn no_arg<T>(kind: &str, arg: Option<&str>, value: T) -> Result<T, String> {
    match arg {
        None => Ok(value),
        Some(_) => Err(format!("{kind} takes no argument")),
    }
}

macro_rules! serialize_as_display {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    )*};
}

serialize_as_display!(JudgeSpec, CommandSpec, AnswerSpec, EmbedderSpec, PairSpec);

/// Oracle answering pairwise judgments.
#[derive(Debug, Clone, PartialEq)]
pub enum JudgeSpec {
    /// Answers from a hidden edge TSV over the same concept ids.
    MockGraph(PathBuf),
    /// Replays a judgment JSONL keyed by (a, b, variant).
    Fixture(PathBuf),
    /// Replays exact prompt/response pairs.
    Replay(PathBuf),
    Echo,
    Live,
}

impl FromStr for JudgeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split(s) {
            ("mock-graph", a) => path_arg("mock-graph", a).map(JudgeSpec::MockGraph),
            ("fixture", a) => path_arg("fixture", a).map(JudgeSpec::Fixture),
            ("replay", a) => path_arg("replay", a).map(JudgeSpec::Replay),
            ("echo", a) => no_arg("echo", a, JudgeSpec::Echo),
            ("live", a) => no_arg("live", a, JudgeSpec::Live),
            (k, _) => Err(format!(
                "unknown oracle {k:?}; expected mock-graph:PATH, fixture:PATH, replay:PATH, echo or live"
            )),
        }
    }
}

impl fmt::Display for JudgeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JudgeSpec::MockGraph(p) => write!(f, "mock-graph:{}", p.display()),
            JudgeSpec::Fixture(p) => write!(f, "fixture:{}", p.display()),
            JudgeSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            JudgeSpec::Echo => f.write_str("echo"),
            JudgeSpec::Live => f.write_str("live"),
        }
    }
}

/// Oracle turning questions into query scripts.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandSpec {
    Template,
    Garbage,
    Replay(PathBuf),
    Live,
}

impl FromStr for CommandSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split(s) {
            ("template", a) => no_arg("template", a, CommandSpec::Template),
            ("garbage", a) => no_arg("garbage", a, CommandSpec::Garbage),
            ("replay", a) => path_arg("replay", a).map(CommandSpec::Replay),
            ("live", a) => no_arg("live", a, CommandSpec::Live),
            (k, _) => Err(format!(
                "unknown command oracle {k:?}; expected template, garbage, replay:PATH or live"
            )),
        }
    }
}

impl fmt::Display for CommandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandSpec::Template => f.write_str("template"),
            CommandSpec::Garbage => f.write_str("garbage"),
            CommandSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            CommandSpec::Live => f.write_str("live"),
        }
    }
}

/// Oracle answering grounded questions.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerSpec {
    Following,
    Replay(PathBuf),
    Echo,
    Live,
}

impl FromStr for AnswerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split(s) {
            ("following", a) => no_arg("following", a, AnswerSpec::Following),
            ("replay", a) => path_arg("replay", a).map(AnswerSpec::Replay),
            ("echo", a) => no_arg("echo", a, AnswerSpec::Echo),
            ("live", a) => no_arg("live", a, AnswerSpec::Live),
            (k, _) => Err(format!(
                "unknown answer oracle {k:?}; expected following, replay:PATH, echo or live"
            )),
        }
    }
}

impl fmt::Display for AnswerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerSpec::Following => f.write_str("following"),
            AnswerSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            AnswerSpec::Echo => f.write_str("echo"),
            AnswerSpec::Live => f.write_str("live"),
        }
    }
}

/// Text embedder for similarity matching.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderSpec {
    Exact,
    /// Seeded random vectors of the given width.
    Hash(usize),
    Trigram,
    /// `{"concept", "vector"}` JSONL.
    Store(PathBuf),
    Live,
}

impl FromStr for EmbedderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split(s) {
            ("exact", a) => no_arg("exact", a, EmbedderSpec::Exact),
            ("hash", None) => Ok(EmbedderSpec::Hash(256)),
            ("hash", Some(d)) => match d.parse() {
                Ok(n) if n > 0 => Ok(EmbedderSpec::Hash(n)),
                _ => Err(format!("hash width must be a positive integer, got {d:?}")),
            },
            ("trigram", a) => no_arg("trigram", a, EmbedderSpec::Trigram),
            ("store", a) => path_arg("store", a).map(EmbedderSpec::Store),
            ("live", a) => no_arg("live", a, EmbedderSpec::Live),
            (k, _) => Err(format!(
                "unknown embedder {k:?}; expected exact, hash[:DIM], trigram, store:PATH or live"
            )),
        }
    }
}

impl fmt::Display for EmbedderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedderSpec::Exact => f.write_str("exact"),
            EmbedderSpec::Hash(d) => write!(f, "hash:{d}"),
            EmbedderSpec::Trigram => f.write_str("trigram"),
            EmbedderSpec::Store(p) => write!(f, "store:{}", p.display()),
            EmbedderSpec::Live => f.write_str("live"),
        }
    }
}

/// Which ordered pairs recovery judges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSpec {
    All,
    Balanced(usize),
}

impl FromStr for PairSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split(s) {
            ("all", a) => no_arg("all", a, PairSpec::All),
            ("balanced", Some(n)) => match n.parse() {
                Ok(n) if n > 0 => Ok(PairSpec::Balanced(n)),
                _ => Err(format!("balanced sample size must be a positive integer, got {n:?}")),
            },
            _ => Err(format!("unknown pair sampling {s:?}; expected all or balanced:N")),
        }
    }
}

impl fmt::Display for PairSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairSpec::All => f.write_str("all"),
            PairSpec::Balanced(n) => write!(f, "balanced:{n}"),
        }
    }
}
