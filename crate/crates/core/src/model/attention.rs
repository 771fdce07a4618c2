use std::fmt::Write;

/// Attention weights with one row per history turn and one column per
/// decoder step.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMatrix {
    pub weights: Vec<Vec<f64>>,
    pub columns: Vec<String>,
}

impl AttentionMatrix {
    /// Builds the matrix from per-step weight vectors (one per column).
    pub fn from_columns(cols: Vec<Vec<f64>>, columns: Vec<String>) -> Self {
        let turns = cols.first().map_or(0, Vec::len);
        let weights = (0..turns).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Self { weights, columns }
    }

    pub fn turns(&self) -> usize {
        self.weights.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.weights.iter().map(|r| r[j]).collect()
    }

    /// Turn with the largest weight for column `j`.
    pub fn argmax_turn(&self, j: usize) -> usize {
        let col = self.column(j);
        (0..col.len()).fold(0, |b, i| if col[i] > col[b] { i } else { b })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn heatmap_csv(m: &AttentionMatrix) -> String {
    let mut out = String::from("turn");
    for c in &m.columns {
        out.push(',');
        out.push_str(&csv_field(c));
    }
    out.push('\n');
    for (i, row) in m.weights.iter().enumerate() {
        out.push_str(&i.to_string());
        for w in row {
            let _ = write!(out, ",{w:.6}");
        }
        out.push('\n');
    }
    out
}

const SHADES: [char; 10] = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];

/// Character heatmap, darker is heavier. Turn labels run down the left and
/// the generated tokens are listed underneath.
pub fn heatmap_text(m: &AttentionMatrix, turn_labels: &[String]) -> String {
    let mut out = String::new();
    let width = turn_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).min(40);
    for (i, row) in m.weights.iter().enumerate() {
        let label: String = turn_labels.get(i).map_or_else(|| format!("turn {i}"), |l| l.chars().take(40).collect());
        let _ = write!(out, "{label:>width$} |");
        for w in row {
            let k = ((w.clamp(0.0, 1.0) * (SHADES.len() - 1) as f64).round()) as usize;
            out.push(SHADES[k]);
        }
        out.push('\n');
    }
    for (j, c) in m.columns.iter().enumerate() {
        let _ = writeln!(out, "{:>width$}  {j:>3} {c}", "");
    }
    out
}
