//! Evaluation report rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use curio_core::evaluation::{EvaluationReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}` (json, csv, markdown)")),
        }
    }
}

pub fn render(reports: &[EvaluationReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = match reports {
                [one] => serde_json::to_string_pretty(one),
                many => serde_json::to_string_pretty(many),
            }
            .expect("reports serialise");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::Markdown => render_markdown(reports),
    }
}

fn precision(p: Option<f64>) -> String {
    p.map_or_else(|| "--".into(), |p| format!("{p:.2}"))
}

/// One row per report; reports over zero videos contribute no row.
pub fn render_markdown(reports: &[EvaluationReport]) -> String {
    let mut s = String::from("| Config | Videos | Accept | Correct | FP | Prec. |\n|---|---:|---:|---:|---:|---:|\n");
    for r in reports.iter().filter(|r| r.videos > 0) {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.label,
            r.videos,
            r.accepts,
            r.correct,
            r.false_positives,
            precision(r.precision)
        );
    }
    let advisory: Vec<String> = reports
        .iter()
        .filter(|r| r.advisory_correct > 0)
        .map(|r| format!("{} +{}", r.label, r.advisory_correct))
        .collect();
    if !advisory.is_empty() {
        let _ = writeln!(
            s,
            "\nCorrect by inspection on unannotated videos (not in precision): {}",
            advisory.join(", ")
        );
    }
    let mixed: Vec<&str> = reports
        .iter()
        .filter(|r| r.format_tag_mismatch)
        .map(|r| r.label.as_str())
        .collect();
    if !mixed.is_empty() {
        let _ = writeln!(s, "\nWarning: mixed input format tags in {}", mixed.join(", "));
    }
    s
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Correct => "correct",
        Verdict::FalsePositive => "false_positive",
        Verdict::Abstain => "abstain",
        Verdict::NoGt => "no_gt",
    }
}

/// Per-video rows.
pub fn render_csv(reports: &[EvaluationReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "video", "decision", "matched_id", "matched_title", "verdict", "advisory_correct"])
        .expect("in-memory write");
    for r in reports {
        for v in &r.per_video {
            let decision = if v.decision == curio_core::Decision::Accept { "accept" } else { "abstain" };
            let advisory = v.advisory_correct.map_or(String::new(), |a| a.to_string());
            w.write_record([
                r.label.as_str(),
                v.video.as_str(),
                decision,
                v.matched_id.as_ref().map_or("", |id| id.as_str()),
                v.matched_title.as_deref().unwrap_or(""),
                verdict_name(v.verdict),
                advisory.as_str(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
