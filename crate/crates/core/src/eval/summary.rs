use std::fmt::Write as _;

use serde::Serialize;

use super::EvalReport;

/// One end-to-end trial: the final report and the iterations each loop used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub report: EvalReport,
    pub place_iters: usize,
    pub wire_iters: usize,
    /// False when the trial ended on a backend error.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub circuit: String,
    pub trials: usize,
    pub completed: usize,
    pub correct_count: usize,
    pub avg_place_iters: f64,
    pub avg_wire_iters: f64,
    pub avg_aesthetics: f64,
    pub reports: Vec<EvalReport>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Aggregate trials of one circuit. Averages use completed trials only.
pub fn summarize_trials(circuit: &str, trials: &[TrialRecord]) -> RunSummary {
    let done = || trials.iter().filter(|t| t.completed);
    RunSummary {
        circuit: circuit.to_string(),
        trials: trials.len(),
        completed: done().count(),
        correct_count: trials.iter().filter(|t| t.report.correct).count(),
        avg_place_iters: mean(done().map(|t| t.place_iters as f64)),
        avg_wire_iters: mean(done().map(|t| t.wire_iters as f64)),
        avg_aesthetics: mean(done().map(|t| t.report.composite())),
        reports: trials.iter().map(|t| t.report.clone()).collect(),
    }
}

pub const COLUMNS: [&str; 5] = [
    "Circuit",
    "Correctness",
    "Aesthetics proxy",
    "Avg. Iter. for Placement",
    "Avg. Iter. for Wiring",
];

/// Aligned text table, one row per circuit.
pub fn format_table(rows: &[RunSummary]) -> String {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.circuit.clone(),
                format!("{}/{}", r.correct_count, r.trials),
                format!("{:.2}", r.avg_aesthetics),
                format!("{:.1}", r.avg_place_iters),
                format!("{:.1}", r.avg_wire_iters),
            ]
        })
        .collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |vals: [&str; 5]| {
        let parts: Vec<String> = vals
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (v, w))| if i == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        format!("| {} |", parts.join(" | "))
    };
    let mut s = String::new();
    let _ = writeln!(s, "{}", line(COLUMNS));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(s, "|-{}-|", rule.join("-|-"));
    for row in &cells {
        let _ = writeln!(
            s,
            "{}",
            line([&row[0], &row[1], &row[2], &row[3], &row[4]].map(String::as_str))
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(correct: bool) -> EvalReport {
        EvalReport {
            correct,
            connectivity_failures: vec![],
            overlap_violations: vec![],
            short_circuits: vec![],
            aesthetics: None,
        }
    }

    fn trial(correct: bool, p: usize, w: usize) -> TrialRecord {
        TrialRecord {
            report: report(correct),
            place_iters: p,
            wire_iters: w,
            completed: true,
        }
    }

    #[test]
    fn nine_of_ten() {
        let mut ts: Vec<TrialRecord> = (0..9).map(|_| trial(true, 3, 4)).collect();
        ts.push(trial(false, 3, 4));
        let s = summarize_trials("Inverter", &ts);
        assert_eq!((s.correct_count, s.trials), (9, 10));
        assert!(format_table(&[s]).contains("9/10"));
    }

    #[test]
    fn single_trial_averages_are_its_values() {
        let s = summarize_trials("x", &[trial(true, 5, 7)]);
        assert_eq!(s.avg_place_iters, 5.0);
        assert_eq!(s.avg_wire_iters, 7.0);
    }

    #[test]
    fn incomplete_trials_do_not_count_toward_averages() {
        let mut bad = trial(false, 1, 1);
        bad.completed = false;
        let s = summarize_trials("x", &[trial(true, 4, 6), bad]);
        assert_eq!(s.avg_place_iters, 4.0);
        assert_eq!(s.completed, 1);
    }

    #[test]
    fn table_has_the_expected_columns() {
        let t = format_table(&[summarize_trials("x", &[trial(true, 1, 1)])]);
        let header = t.lines().next().unwrap();
        for c in COLUMNS {
            assert!(header.contains(c));
        }
    }
}
