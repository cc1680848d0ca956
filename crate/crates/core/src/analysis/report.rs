use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    analyze_metric, ig_by_type, join_turns, per_game, summarize, AftMode, AnalysisError, IgRow,
    Metric, MetricAnalysis, SummaryStats, SweepKind, SweepReport,
};
use crate::model::{IgRecord, Transcript};
use crate::taxonomy::DEFAULT_ENUMERATION_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub aft_mode: AftMode,
    pub enumeration_threshold: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            aft_mode: AftMode::Censored,
            enumeration_threshold: DEFAULT_ENUMERATION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub options: AnalysisOptions,
    /// Survival model family used by every AFT fit.
    pub aft_distribution: String,
    pub summary: SummaryStats,
    pub ig_by_type: Option<Vec<IgRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ig_by_type_notice: Option<String>,
    pub metrics: Vec<MetricAnalysis>,
}

pub fn analyze(
    transcripts: &[Transcript],
    records: &[IgRecord],
    options: AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let summary = summarize(transcripts, options.enumeration_threshold)?;
    let turns = join_turns(transcripts, records)?;
    let (ig_table, notice) = match ig_by_type(&turns) {
        Ok(rows) => (Some(rows), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let games = per_game(transcripts, records)?;
    let metrics = Metric::BOTH
        .iter()
        .map(|&m| analyze_metric(&games, m, options.aft_mode))
        .collect();
    Ok(AnalysisReport {
        options,
        aft_distribution: "lognormal".into(),
        summary,
        ig_by_type: ig_table,
        ig_by_type_notice: notice,
        metrics,
    })
}

fn fmt_p(p: f64) -> String {
    if p == 0.0 {
        "0".into()
    } else if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

fn signed(v: f64, digits: usize) -> String {
    format!("{v:+.digits$}")
}

/// Pads every column to its widest cell. The first column is left aligned.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.iter().map(|h| h.to_string()).collect());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.clone()));
        out.push('\n');
    }
    out
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn render_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Games: {}  Successes: {}  Errored: {}",
            s.n_games, s.successes, s.errored_games
        );
        let anq = match (s.anq, s.anq_ci) {
            (Some(a), Some(ci)) => format!("{a:.1} ± {ci:.2}"),
            (Some(a), None) => format!("{a:.1}"),
            _ => "n/a".into(),
        };
        out.push_str(&table(
            &["Condition", "SR (%)", "ANQ"],
            &[vec![
                "All games".into(),
                format!("{:.1} ± {:.2}", 100.0 * s.sr, 100.0 * s.sr_ci),
                anq,
            ]],
        ));
        out.push('\n');

        match &self.ig_by_type {
            Some(rows) => {
                let cell =
                    |r: &IgRow, m: Metric| r.sigma[&m].map_or("n/a".into(), |v| signed(v, 2));
                let body: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.group.label(),
                            format!("{:.1}", 100.0 * r.ratio),
                            cell(r, Metric::Bayes),
                            cell(r, Metric::Entropy),
                        ]
                    })
                    .collect();
                out.push_str(&table(
                    &["Type", "Ratio (%)", "Bayes IG (σ)", "Entropy IG (σ)"],
                    &body,
                ));
            }
            None => {
                let _ = writeln!(
                    out,
                    "IG by type omitted: {}",
                    self.ig_by_type_notice.as_deref().unwrap_or("no data")
                );
            }
        }
        out.push('\n');

        let body: Vec<Vec<String>> = self
            .metrics
            .iter()
            .map(|m| {
                let aft = m.aft.as_ref().map_or("n/a".into(), |f| {
                    format!("{} ({})", signed(f.beta[1], 3), fmt_p(f.p_values[1]))
                });
                let rho = m.spearman.map_or("n/a".into(), |c| {
                    format!("{} ({})", signed(c.rho, 3), fmt_p(c.p_value))
                });
                vec![m.metric.label().into(), aft, rho]
            })
            .collect();
        out.push_str(&table(
            &["IG Metric", "AFT Coefficient (p)", "Spearman ρ (p)"],
            &body,
        ));
        for m in &self.metrics {
            if let Some(n) = &m.aft_notice {
                let _ = writeln!(out, "AFT omitted for {}: {n}", m.metric.label());
            }
            if let Some(n) = &m.spearman_notice {
                let _ = writeln!(out, "Spearman omitted for {}: {n}", m.metric.label());
            }
        }
        let mode = match self.options.aft_mode {
            AftMode::Censored => "failures right-censored",
            AftMode::SuccessesOnly => "successes only",
        };
        let _ = writeln!(out, "AFT: {} model, {mode}", self.aft_distribution);
        out.push('\n');

        out.push_str(&table(
            &["Enumerations", "Questions", "Rate (%)"],
            &[vec![
                s.enumeration_count.to_string(),
                s.n_questions.to_string(),
                format!("{:.1}", 100.0 * s.enumeration_ratio),
            ]],
        ));
        out
    }
}

fn sweep_cells(row: &super::SweepRow) -> [String; 4] {
    let (b, bp) = row.aft.as_ref().map_or(("n/a".into(), "n/a".into()), |f| {
        (signed(f.beta[1], 3), fmt_p(f.p_values[1]))
    });
    let (r, rp) = row.spearman.map_or(("n/a".into(), "n/a".into()), |c| {
        (signed(c.rho, 3), fmt_p(c.p_value))
    });
    [b, bp, r, rp]
}

fn prune_label(p: f64) -> String {
    if p == 0.0 {
        "none".into()
    } else {
        format!("{:.0}%", 100.0 * p)
    }
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn render_text(&self) -> String {
        match self.kind {
            SweepKind::Tau => {
                let body: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut cells = vec![format!("{:.2}", r.tau)];
                        cells.extend(sweep_cells(r));
                        cells
                    })
                    .collect();
                table(&["τ", "AFT β", "AFT p", "Spearman ρ", "Spearman p"], &body)
            }
            SweepKind::AlphaPrune => {
                let mut out = String::new();
                let mut alphas: Vec<f64> = Vec::new();
                for r in &self.rows {
                    if !alphas.contains(&r.alpha) {
                        alphas.push(r.alpha);
                    }
                }
                for (i, alpha) in alphas.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "α = {alpha}");
                    let body: Vec<Vec<String>> = self
                        .rows
                        .iter()
                        .filter(|r| r.alpha == *alpha)
                        .map(|r| {
                            let [b, bp, rho, rp] = sweep_cells(r);
                            vec![prune_label(r.prune_fraction), rho, rp, b, bp]
                        })
                        .collect();
                    out.push_str(&table(&["Threshold", "ρ", "p", "AFT β", "AFT p"], &body));
                }
                out
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "tau,alpha,prune_fraction,n_games,aft_beta,aft_p,spearman_rho,spearman_p\n",
        );
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.tau,
                r.alpha,
                r.prune_fraction,
                r.n_games,
                opt(r.aft.as_ref().map(|f| f.beta[1])),
                opt(r.aft.as_ref().map(|f| f.p_values[1])),
                opt(r.spearman.map(|c| c.rho)),
                opt(r.spearman.map(|c| c.p_value)),
            );
        }
        out
    }
}
