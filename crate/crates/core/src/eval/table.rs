use serde::{Deserialize, Serialize};

use super::metrics::Metrics;

/// Metrics of the ensemble of the `k` best models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub k: usize,
    pub metrics: Metrics,
}

/// Renders rows as aligned text columns: the first column is left-aligned,
/// numbers are right-aligned with two decimals (as percentages).
pub fn format_table(header: &[&str], rows: &[(String, Vec<f64>)]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, values)| {
            std::iter::once(label.clone())
                .chain(values.iter().map(|v| format!("{:.2}", 100.0 * v)))
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            if i >= widths.len() {
                widths.push(0);
            }
            widths[i] = widths[i].max(c.len());
        }
    }
    let render = |row: &[String]| {
        let mut line = String::new();
        for (i, c) in row.iter().enumerate() {
            if i == 0 {
                line.push_str(&format!("{:<w$}", c, w = widths[0]));
            } else {
                line.push_str(&format!("  {:>w$}", c, w = widths[i]));
            }
        }
        line.trim_end().to_string()
    };
    let mut out = render(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out.push('\n');
    for row in &cells {
        out.push_str(&render(row));
        out.push('\n');
    }
    out
}

/// One row per ensemble size with channel and function accuracy, plus
/// majority and minority function accuracy when available.
pub fn ensemble_table(rows: &[EnsembleRow]) -> String {
    let subsets = rows.iter().any(|r| r.metrics.majority.is_some());
    let mut header = vec!["k", "channel", "function"];
    if subsets {
        header.extend(["majority", "minority"]);
    }
    let body: Vec<(String, Vec<f64>)> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let mut v = vec![m.channel_accuracy, m.function_accuracy];
            if subsets {
                v.push(m.majority.map_or(0.0, |s| s.function_accuracy));
                v.push(m.minority.map_or(0.0, |s| s.function_accuracy));
            }
            (r.k.to_string(), v)
        })
        .collect();
    format_table(&header, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned() {
        let t = format_table(
            &["k", "acc"],
            &[("1".into(), vec![0.5]), ("10".into(), vec![1.0])],
        );
        assert_eq!(t, "k      acc\n1    50.00\n10  100.00\n");
    }

    #[test]
    fn one_row_per_k() {
        let rows: Vec<EnsembleRow> = (1..=4)
            .map(|k| EnsembleRow {
                k,
                metrics: Metrics::default(),
            })
            .collect();
        assert_eq!(ensemble_table(&rows).lines().count(), 5);
    }
}
