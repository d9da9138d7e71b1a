use crate::json::Object;

/// One model × task entry of a results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultCell {
    pub mean: f64,
    pub stderr: f64,
    pub failed: bool,
}

impl ResultCell {
    pub fn ok(mean: f64, stderr: f64) -> Self {
        ResultCell { mean, stderr, failed: false }
    }

    pub fn failed() -> Self {
        ResultCell { mean: f64::NAN, stderr: f64::NAN, failed: true }
    }

    fn valid(&self) -> bool {
        !self.failed && !self.mean.is_nan()
    }
}

/// Models × tasks table of mean losses, ranked per task.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub models: Vec<String>,
    /// Whether each model contains a tuned component; rendered with an asterisk.
    pub tuned: Vec<bool>,
    pub tasks: Vec<String>,
    /// `cells[model][task]`.
    pub cells: Vec<Vec<ResultCell>>,
}

/// Formats `x` with four significant digits.
pub fn format_sig4(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return crate::json::number(x).trim_matches('"').to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 3 - magnitude;
    if decimals >= 0 {
        let s = format!("{x:.*}", decimals as usize);
        // Rounding can carry into a new leading digit, e.g. 9.9996 -> 10.000.
        let again = s.parse::<f64>().map_or(magnitude, |v| v.abs().log10().floor() as i32);
        if again > magnitude && decimals > 0 {
            return format!("{x:.*}", decimals as usize - 1);
        }
        s
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{}", (x / scale).round() * scale)
    }
}

impl ResultTable {
    /// `ranks[model][task]`: 1 for the lowest mean loss; ties share the best rank; failed cells rank last.
    pub fn ranks(&self) -> Vec<Vec<usize>> {
        let mut ranks = vec![vec![0; self.tasks.len()]; self.models.len()];
        for t in 0..self.tasks.len() {
            let valid = self.cells.iter().filter(|c| c[t].valid()).count();
            for (m, row) in self.cells.iter().enumerate() {
                let cell = row[t];
                ranks[m][t] = if cell.valid() {
                    1 + self.cells.iter().filter(|o| o[t].valid() && o[t].mean < cell.mean).count()
                } else {
                    valid + 1
                };
            }
        }
        ranks
    }

    pub fn mean_ranks(&self) -> Vec<f64> {
        self.ranks().iter().map(|r| r.iter().sum::<usize>() as f64 / r.len().max(1) as f64).collect()
    }

    /// Model indices sorted by mean rank; ties keep insertion order.
    pub fn order(&self) -> Vec<usize> {
        let mr = self.mean_ranks();
        let mut idx: Vec<usize> = (0..self.models.len()).collect();
        idx.sort_by(|a, b| mr[*a].total_cmp(&mr[*b]));
        idx
    }

    fn label(&self, m: usize) -> String {
        if self.tuned[m] {
            format!("{}*", self.models[m])
        } else {
            self.models[m].clone()
        }
    }

    /// GitHub-flavored markdown with cells `(rank) mean±stderr`.
    pub fn to_markdown(&self) -> String {
        let ranks = self.ranks();
        let mut out = format!("| model | {} |\n", self.tasks.join(" | "));
        out.push_str(&format!("|---|{}\n", "---|".repeat(self.tasks.len())));
        for m in self.order() {
            let cells: Vec<String> = self.cells[m]
                .iter()
                .zip(&ranks[m])
                .map(|(c, r)| {
                    if c.failed {
                        format!("({r}) failed")
                    } else {
                        format!("({r}) {}±{}", format_sig4(c.mean), format_sig4(c.stderr))
                    }
                })
                .collect();
            out.push_str(&format!("| {} | {} |\n", self.label(m).replace('|', "\\|"), cells.join(" | ")));
        }
        out
    }

    /// JSON array of `{model, task, mean, stderr, rank, tuned, failed}` records in table order.
    pub fn to_json(&self) -> String {
        let ranks = self.ranks();
        let mut records = Vec::new();
        for m in self.order() {
            for (t, task) in self.tasks.iter().enumerate() {
                let c = self.cells[m][t];
                records.push(
                    Object::new()
                        .str("model", &self.models[m])
                        .str("task", task)
                        .num("mean", c.mean)
                        .num("stderr", c.stderr)
                        .raw("rank", ranks[m][t].to_string())
                        .raw("tuned", self.tuned[m].to_string())
                        .raw("failed", c.failed.to_string())
                        .render(),
                );
            }
        }
        format!("[{}]", records.join(","))
    }
}
