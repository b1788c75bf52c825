use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{
    binary_auc_pr, confusion_matrix, macro_auc_pr, macro_precision_from, macro_recall_from, per_class_auc_pr,
    per_class_precision, per_class_recall,
};
use crate::training::Phase;
use crate::Result;

pub const AUC_PR_METHOD: &str = "average precision; tied scores form one block";
pub const PRECISION_CONVENTION: &str = "a class never predicted has precision 0";
pub const RECALL_CONVENTION: &str = "classes without support are excluded from the macro average";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: u32,
    pub support: u64,
    pub predicted: u64,
    pub precision: f64,
    pub recall: Option<f64>,
    pub auc_pr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub model: String,
    pub checkpoint: Option<String>,
    pub graph: Option<String>,
    pub auc_pr_method: String,
    pub precision_convention: String,
    pub recall_convention: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub phase: Phase,
    pub num_nodes: usize,
    pub num_classes: usize,
    pub macro_recall: f64,
    pub macro_precision: f64,
    /// Mean one-vs-rest AUC-PR over classes present with both outcomes.
    pub auc_pr: Option<f64>,
    /// Label 0 against the rest, scored by `P(L = 0)`.
    pub binary_auc_pr: Option<f64>,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassReport>,
    pub metadata: ReportMetadata,
}

impl EvalReport {
    pub fn from_predictions(
        phase: Phase,
        model: &str,
        predictions: &[u32],
        labels: &[u32],
        class_scores: &[Vec<f64>],
        num_classes: usize,
    ) -> Result<Self> {
        let confusion = confusion_matrix(predictions, labels, num_classes)?;
        let recall = per_class_recall(&confusion);
        let precision = per_class_precision(&confusion);
        let auc = per_class_auc_pr(class_scores, labels, num_classes)?;
        let per_class = (0..num_classes)
            .map(|c| ClassReport {
                class: c as u32,
                support: confusion[c].iter().sum(),
                predicted: confusion.iter().map(|r| r[c]).sum(),
                precision: precision[c],
                recall: recall[c],
                auc_pr: auc[c],
            })
            .collect();
        Ok(Self {
            phase,
            num_nodes: labels.len(),
            num_classes,
            macro_recall: macro_recall_from(&confusion),
            macro_precision: macro_precision_from(&confusion),
            auc_pr: macro_auc_pr(class_scores, labels, num_classes)?,
            binary_auc_pr: binary_auc_pr(class_scores, labels)?,
            confusion,
            per_class,
            metadata: ReportMetadata {
                model: model.to_string(),
                checkpoint: None,
                graph: None,
                auc_pr_method: AUC_PR_METHOD.into(),
                precision_convention: PRECISION_CONVENTION.into(),
                recall_convention: RECALL_CONVENTION.into(),
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Aligned-column summary for terminals.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {}", "model", self.metadata.model);
        let _ = writeln!(out, "{:<16} {}", "phase", self.phase);
        let _ = writeln!(out, "{:<16} {}", "nodes", self.num_nodes);
        let _ = writeln!(out, "{:<16} {:.4}", "macro_recall", self.macro_recall);
        let _ = writeln!(out, "{:<16} {:.4}", "macro_precision", self.macro_precision);
        let _ = writeln!(out, "{:<16} {}", "auc_pr", opt(self.auc_pr));
        let _ = writeln!(out, "{:<16} {}", "binary_auc_pr", opt(self.binary_auc_pr));
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>5} {:>8} {:>9} {:>9} {:>9} {:>9}",
            "class", "support", "predicted", "precision", "recall", "auc_pr"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:>5} {:>8} {:>9} {:>9.4} {:>9} {:>9}",
                c.class,
                c.support,
                c.predicted,
                c.precision,
                opt(c.recall),
                opt(c.auc_pr)
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "confusion (rows true, columns predicted)");
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>7}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    /// One row per class.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("phase,class,support,predicted,precision,recall,auc_pr\n");
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.phase,
                c.class,
                c.support,
                c.predicted,
                c.precision,
                opt(c.recall),
                opt(c.auc_pr)
            );
        }
        out
    }
}
