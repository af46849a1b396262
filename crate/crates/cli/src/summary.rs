use std::io::Write;

use adasdca::{RunResult, SolverVariant};

use crate::experiment::{fmt_real, Experiment};
use crate::CliError;

pub const SUMMARY_HEADER: [&str; 7] = [
    "variant",
    "runs",
    "reached",
    "median_epochs",
    "iqr_epochs",
    "median_seconds",
    "iqr_seconds",
];

/// Median and interquartile range; `+∞` marks runs that never got there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Spread {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        let iqr = if q3.is_finite() { q3 - q1 } else { f64::INFINITY };
        Spread { median: quantile(&v, 0.5), iqr }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: SolverVariant,
    pub runs: usize,
    pub reached: usize,
    pub epochs: Spread,
    pub seconds: Spread,
}

/// First evaluation with gap at most `threshold`, as (epoch, seconds).
pub fn time_to_threshold(run: &RunResult, threshold: f64) -> Option<(f64, f64)> {
    run.trace
        .iter()
        .find(|t| t.gap <= threshold)
        .map(|t| (t.epoch, t.elapsed_seconds))
}

/// Per-variant summaries sorted by median epochs, then variant id.
/// Repeated variant entries are summarized separately.
pub fn summarize(experiment: &Experiment, threshold: f64) -> Vec<VariantSummary> {
    let per = experiment.config.seeds.len();
    let mut out: Vec<VariantSummary> = experiment
        .runs
        .chunks(per)
        .map(|runs| {
            let hits: Vec<Option<(f64, f64)>> =
                runs.iter().map(|r| time_to_threshold(r, threshold)).collect();
            let epochs: Vec<f64> = hits.iter().map(|h| h.map_or(f64::INFINITY, |x| x.0)).collect();
            let seconds: Vec<f64> = hits.iter().map(|h| h.map_or(f64::INFINITY, |x| x.1)).collect();
            VariantSummary {
                variant: runs[0].variant,
                runs: runs.len(),
                reached: hits.iter().filter(|h| h.is_some()).count(),
                epochs: Spread::of(&epochs),
                seconds: Spread::of(&seconds),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.epochs
            .median
            .total_cmp(&b.epochs.median)
            .then_with(|| a.variant.to_string().cmp(&b.variant.to_string()))
    });
    out
}

fn show(x: f64, max_epochs: usize) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        format!("> {max_epochs}")
    }
}

fn show_or_na(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "n/a".into()
    }
}

/// Aligned text table.
pub fn render_table(rows: &[VariantSummary], threshold: f64, max_epochs: usize) -> String {
    let header = vec![
        "variant".to_string(),
        "reached".into(),
        "median epochs".into(),
        "IQR epochs".into(),
        "median s".into(),
        "IQR s".into(),
    ];
    let mut cells = vec![header];
    for r in rows {
        cells.push(vec![
            r.variant.to_string(),
            format!("{}/{}", r.reached, r.runs),
            show(r.epochs.median, max_epochs),
            show_or_na(r.epochs.iqr),
            show_or_na(r.seconds.median),
            show_or_na(r.seconds.iqr),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = format!("gap threshold {}\n", fmt_real(threshold));
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_real(x: f64) -> String {
    if x.is_finite() {
        fmt_real(x)
    } else {
        String::new()
    }
}

/// Summary CSV; unreached medians and undefined IQRs are empty fields.
pub fn write_summary_csv<W: Write>(rows: &[VariantSummary], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.variant.to_string(),
            r.runs.to_string(),
            r.reached.to_string(),
            csv_real(r.epochs.median),
            csv_real(r.epochs.iqr),
            csv_real(r.seconds.median),
            csv_real(r.seconds.iqr),
        ])?;
    }
    w.flush()?;
    Ok(())
}
