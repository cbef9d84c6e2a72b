use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::{EpisodeResult, RunMode};
use crate::llm::{Purpose, TokenUsage};

/// Column sums over the rows of a report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub levels: usize,
    pub solved: usize,
    pub first_plan_success: usize,
    pub usage: BTreeMap<Purpose, TokenUsage>,
    pub total_tokens: u64,
    pub exchanges: usize,
    pub revisions: usize,
    pub revision_attempts: usize,
    pub explorations: usize,
    pub env_steps: u64,
    #[serde(default)]
    pub wall_time_ms: u64,
    #[serde(default)]
    pub llm_latency_ms: u64,
}

impl Totals {
    pub fn of(rows: &[EpisodeResult]) -> Self {
        let mut t = Totals {
            usage: Purpose::ALL.into_iter().map(|p| (p, TokenUsage::default())).collect(),
            ..Default::default()
        };
        for r in rows {
            t.levels += 1;
            t.solved += r.solved as usize;
            t.first_plan_success += r.first_plan_success as usize;
            for (p, u) in &r.usage {
                *t.usage.entry(*p).or_default() += *u;
            }
            t.total_tokens += r.total_tokens().total();
            t.exchanges += r.exchanges;
            t.revisions += r.revisions;
            t.revision_attempts += r.revision_attempts;
            t.explorations += r.explorations;
            t.env_steps += r.env_steps;
            t.wall_time_ms += r.wall_time_ms;
            t.llm_latency_ms += r.llm_latency_ms;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub mode: RunMode,
    pub rows: Vec<EpisodeResult>,
    pub totals: Totals,
}

impl RunReport {
    pub fn new(name: impl Into<String>, mode: RunMode, rows: Vec<EpisodeResult>) -> Self {
        RunReport {
            name: name.into(),
            mode,
            totals: Totals::of(&rows),
            rows,
        }
    }

    pub fn all_solved(&self) -> bool {
        self.rows.iter().all(|r| r.solved)
    }

    pub fn infrastructure_failure(&self) -> bool {
        self.rows.iter().any(|r| r.infrastructure_error)
    }

    /// 0 when every level is solved, 2 when some are not, 1 when a
    /// level failed because of the service or the cassette.
    pub fn exit_code(&self) -> i32 {
        if self.infrastructure_failure() {
            1
        } else if self.all_solved() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Column-aligned text.
    #[default]
    Table,
    /// JSON.
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected table or json)")),
        }
    }
}

const TIMING_FIELDS: [&str; 2] = ["wall_time_ms", "llm_latency_ms"];

/// Renders a report. Timing varies between runs, so it is left out unless
/// `timing` is set; without it the output is a pure function of the run.
pub fn emit_report(report: &RunReport, format: ReportFormat, timing: bool) -> String {
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::to_value(report).expect("report serializes");
            if !timing {
                for row in v["rows"].as_array_mut().into_iter().flatten() {
                    strip_timing(row);
                }
                strip_timing(&mut v["totals"]);
            }
            serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
        }
        ReportFormat::Table => table(report, timing),
    }
}

fn strip_timing(v: &mut serde_json::Value) {
    if let Some(m) = v.as_object_mut() {
        for f in TIMING_FIELDS {
            m.remove(f);
        }
    }
}

const PURPOSE_COLUMNS: [(Purpose, &str); 5] = [
    (Purpose::AbstractionSynthesis, "abstr"),
    (Purpose::ProblemSynthesis, "problem"),
    (Purpose::ClassifierSynthesis, "classif"),
    (Purpose::WorldModelSynthesis, "model"),
    (Purpose::Revision, "revise"),
];

fn table(report: &RunReport, timing: bool) -> String {
    let mut header: Vec<String> = ["ep", "level", "seed", "solved", "first"].map(String::from).to_vec();
    header.extend(PURPOSE_COLUMNS.iter().map(|(_, h)| h.to_string()));
    header.extend(["tokens", "revs", "expl", "steps", "plan"].map(String::from));
    if timing {
        header.extend(["compute_ms", "llm_ms"].map(String::from));
    }
    let yes_no = |b: bool| if b { "yes" } else { "NO" }.to_string();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for r in &report.rows {
        let mut row = vec![
            r.episode.to_string(),
            r.level.clone(),
            r.seed.to_string(),
            yes_no(r.solved),
            yes_no(r.first_plan_success),
        ];
        row.extend(PURPOSE_COLUMNS.iter().map(|(p, _)| r.tokens(*p).total().to_string()));
        row.extend([
            r.total_tokens().total().to_string(),
            r.revisions.to_string(),
            r.explorations.to_string(),
            r.env_steps.to_string(),
            r.plan.len().to_string(),
        ]);
        if timing {
            row.push(r.wall_time_ms.saturating_sub(r.llm_latency_ms).to_string());
            row.push(r.llm_latency_ms.to_string());
        }
        rows.push(row);
    }
    let t = &report.totals;
    let mut total = vec![
        "total".to_string(),
        format!("{} levels", t.levels),
        String::new(),
        format!("{}/{}", t.solved, t.levels),
        format!("{}/{}", t.first_plan_success, t.levels),
    ];
    total.extend(
        PURPOSE_COLUMNS
            .iter()
            .map(|(p, _)| t.usage.get(p).copied().unwrap_or_default().total().to_string()),
    );
    total.extend([
        t.total_tokens.to_string(),
        t.revisions.to_string(),
        t.explorations.to_string(),
        t.env_steps.to_string(),
        report.rows.iter().map(|r| r.plan.len()).sum::<usize>().to_string(),
    ]);
    if timing {
        total.push(t.wall_time_ms.saturating_sub(t.llm_latency_ms).to_string());
        total.push(t.llm_latency_ms.to_string());
    }

    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows.iter().chain(std::iter::once(&total)) {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| -> String {
        let s: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 1 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = format!("# {} ({})\n", report.name, report.mode);
    out.push_str(&line(&header));
    out.push_str(&(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n"));
    for row in &rows {
        out.push_str(&line(row));
    }
    out.push_str(&line(&total));
    let failures: Vec<&EpisodeResult> = report.rows.iter().filter(|r| !r.solved).collect();
    if !failures.is_empty() {
        out.push_str("\nunsolved:\n");
        for r in failures {
            let _ = writeln!(
                out,
                "  {} (seed {}): {}",
                r.level,
                r.seed,
                r.failure.as_deref().unwrap_or("no plan reached the goal")
            );
        }
    }
    out
}
