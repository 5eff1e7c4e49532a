use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalReport, SimilarityScore};

/// Run metadata attached to every serialized report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

/// Macro-averaged similarity scores over a set of list answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListReport {
    pub items: usize,
    pub precision: f64,
    pub recall: f64,
    pub s_f1: f64,
}

impl ListReport {
    pub fn mean(scores: &[SimilarityScore]) -> Self {
        let n = scores.len();
        let avg = |f: fn(&SimilarityScore) -> f64| {
            if n == 0 {
                0.0
            } else {
                scores.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Self {
            items: n,
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
            s_f1: avg(|s| s.s_f1),
        }
    }

    pub fn table(&self, meta: &ReportMeta) -> String {
        let mut out = meta_lines(meta);
        for (k, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("s_f1", self.s_f1),
        ] {
            let _ = writeln!(out, "{k:<10} {v:>8.4}");
        }
        let _ = writeln!(out, "{:<10} {:>8}", "items", self.items);
        out
    }
}

fn meta_lines(meta: &ReportMeta) -> String {
    let mut out = String::new();
    if let Some(d) = &meta.dataset {
        let _ = writeln!(out, "{:<10} {d}", "dataset");
    }
    if let Some(v) = &meta.variant {
        let _ = writeln!(out, "{:<10} {v}", "variant");
    }
    if let Some(mu) = meta.mu {
        let _ = writeln!(out, "{:<10} {mu}", "mu");
    }
    out
}

impl EvalReport {
    /// Aligned plain-text rendering.
    pub fn table(&self, meta: &ReportMeta) -> String {
        let mut out = meta_lines(meta);
        for (k, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            let _ = writeln!(out, "{k:<10} {v:>8.4}");
        }
        for (k, v) in [("tp", self.tp), ("fp", self.fp), ("tn", self.tn), ("fn", self.fn_)] {
            let _ = writeln!(out, "{k:<10} {v:>8}");
        }
        out
    }
}
