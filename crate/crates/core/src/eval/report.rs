use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, Metric, MetricSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub metrics: MetricSet,
}

/// One row per system, columns per metric.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn push(&mut self, name: &str, metrics: MetricSet) {
        self.rows.push(ReportRow { name: name.into(), metrics });
    }

    /// `row.metric.field = value` lines.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for (m, s) in [(Metric::Da, r.metrics.da), (Metric::Slot, r.metrics.slot), (Metric::Kb, r.metrics.kb)] {
                if let Some(s) = s {
                    let _ = writeln!(out, "{}.{}.precision = {:.6}", r.name, m.as_str(), s.precision);
                    let _ = writeln!(out, "{}.{}.recall = {:.6}", r.name, m.as_str(), s.recall);
                    let _ = writeln!(out, "{}.{}.f1 = {:.6}", r.name, m.as_str(), s.f1);
                }
            }
            if let Some(b) = r.metrics.bleu {
                let _ = writeln!(out, "{}.bleu = {:.6}", r.name, b);
            }
        }
        out
    }

    /// Tab-separated table with DA, slot and KB F1 and BLEU columns.
    pub fn to_table(&self) -> String {
        let mut out = String::from("model\tda_f1\tslot_f1\tkb_f1\tbleu\n");
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.name,
                cell(r.metrics.value(Metric::Da)),
                cell(r.metrics.value(Metric::Slot)),
                cell(r.metrics.value(Metric::Kb)),
                cell(r.metrics.value(Metric::Bleu))
            );
        }
        out
    }

    /// Writes the flat report to `path` and the table next to it with a
    /// `.tsv` extension.
    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_flat())?;
        std::fs::write(path.with_extension("tsv"), self.to_table())?;
        Ok(())
    }
}
