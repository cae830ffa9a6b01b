//! Output files: CSV and markdown rendering plus atomic writes.
//!
//! Numbers are printed with `f64`'s `Display`, which emits the shortest
//! decimal string that parses back to the same value — reruns with the
//! same config therefore reproduce every file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use advkit::defense::CurveRow;
use advkit::fsio::write_atomic;
use advkit::model::EpochStats;
use advkit::transfer::TransferMatrix;

use crate::error::CliError;

/// Writes `contents` to `dir/name` through a temp file + rename.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", dir.display())))?;
    Ok(write_atomic(&dir.join(name), contents.as_bytes())?)
}

/// Per-epoch training log. Columns: epoch (1-based), loss, top1.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,top1\n");
    for (i, row) in history.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, row.loss, row.top1);
    }
    out
}

/// Robustness sweep. Columns: epsilon, top1, top5, success_rate, median_l2.
pub fn robustness_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("epsilon,top1,top5,success_rate,median_l2\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epsilon, r.top1, r.top5, r.success_rate, r.median_l2
        );
    }
    out
}

fn rate_cell(rate: Option<f64>) -> String {
    // An undefined rate (no example fooled the source model) renders as
    // an empty cell so downstream tooling can tell it from a real zero.
    rate.map(|r| r.to_string()).unwrap_or_default()
}

/// Source-by-target transfer rates in percent; row = crafting model.
pub fn transfer_csv(m: &TransferMatrix) -> String {
    let mut out = String::from("source\\target");
    for id in &m.model_ids {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (id, row) in m.model_ids.iter().zip(&m.rates) {
        let _ = write!(out, "{id}");
        for rate in row {
            let _ = write!(out, ",{}", rate_cell(*rate));
        }
        out.push('\n');
    }
    out
}

/// Human-readable companion to `transfer_csv`.
pub fn transfer_md(m: &TransferMatrix) -> String {
    let mut out = String::from("# Cross-model transfer\n\n");
    let _ = writeln!(
        out,
        "Attack: `{}`{} — {} rate of examples crafted on the row model,\n\
         evaluated on the column model, over the shared crafting set\n\
         (percent of examples that fooled the source).\n",
        m.attack,
        m.epsilon
            .map(|e| format!(" at epsilon {e}"))
            .unwrap_or_default(),
        match m.metric {
            advkit::transfer::TransferMetric::Top1 => "top-1",
            advkit::transfer::TransferMetric::Top5 => "top-5",
        }
    );
    let _ = write!(out, "| source \\\\ target |");
    for id in &m.model_ids {
        let _ = write!(out, " {id} |");
    }
    out.push('\n');
    let _ = write!(out, "| --- |");
    for _ in &m.model_ids {
        let _ = write!(out, " --- |");
    }
    out.push('\n');
    for (id, row) in m.model_ids.iter().zip(&m.rates) {
        let _ = write!(out, "| {id} |");
        for rate in row {
            let cell = rate.map(|r| format!("{r:.1}")).unwrap_or_else(|| "—".to_string());
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out.push('\n');
    match m.mean_off_diagonal() {
        Some(mean) => {
            let _ = writeln!(out, "Mean off-diagonal transfer rate: {mean:.2}%.");
        }
        None => {
            let _ = writeln!(out, "Mean off-diagonal transfer rate: undefined.");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use advkit::transfer::TransferMetric;

    #[test]
    fn history_rows_are_one_based_and_shortest_form() {
        let h = vec![
            EpochStats { loss: 0.5, top1: 0.25 },
            EpochStats { loss: 0.1, top1: 1.0 },
        ];
        assert_eq!(history_csv(&h), "epoch,loss,top1\n1,0.5,0.25\n2,0.1,1\n");
    }

    #[test]
    fn robustness_keeps_documented_column_order() {
        let rows = vec![CurveRow {
            epsilon: 0.0,
            top1: 0.9976,
            top5: 1.0,
            success_rate: 0.0,
            median_l2: 0.0,
        }];
        assert_eq!(
            robustness_csv(&rows),
            "epsilon,top1,top5,success_rate,median_l2\n0,0.9976,1,0,0\n"
        );
    }

    #[test]
    fn transfer_csv_leaves_undefined_cells_empty() {
        let m = TransferMatrix {
            model_ids: vec!["a".into(), "b".into()],
            rates: vec![vec![Some(100.0), Some(56.5)], vec![None, Some(100.0)]],
            attack: "fgsm".into(),
            epsilon: Some(0.125),
            metric: TransferMetric::Top1,
        };
        assert_eq!(
            transfer_csv(&m),
            "source\\target,a,b\na,100,56.5\nb,,100\n"
        );
        let md = transfer_md(&m);
        assert!(md.contains("| a | 100.0 | 56.5 |"));
        assert!(md.contains("| b | — | 100.0 |"));
        assert!(md.contains("Mean off-diagonal transfer rate: 56.50%."));
    }
}
