//! Snapshot, compliance summary, radar chart and adversary effects renderings.
//!
//! Reports only format numbers produced by [`crate::scoring`] and
//! [`crate::effects`]; they never recompute them. Tables show percentages
//! with one decimal, the snapshot aggregate with two.

use std::f64::consts::PI;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::assessment::{Assessment, Satisfaction};
use crate::catalog::{AdversaryEffect, CatalogView, RequirementId, SecurityLevel};
use crate::effects::{EffectCell, EffectsRow};
use crate::scoring::{overall_compliance, OverallScore, ScoringOptions, Verdict};

pub const NO_EFFECTS_LABEL: &str = "No Adverse Effects Listed";

/// Radar canvas edge length in user units.
pub const RADAR_SIZE: f64 = 800.0;
/// Space kept between the outer ring and the canvas edge for labels.
pub const RADAR_LABEL_MARGIN: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("a radar chart needs at least 3 axes, got {0}")]
    TooFewAxes(usize),
    #[error("axis {label}: value {value} is outside [0, 1]")]
    FractionOutOfRange { label: String, value: f64 },
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("CSV output failed: {0}")]
    Csv(String),
}

/// `0.6` -> `"60.0"`
pub fn percent1(fraction: f64) -> String {
    format!("{:.1}", fraction * 100.0)
}

/// `0.8646` -> `"86.46"`
pub fn percent2(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}

fn points(p: f64) -> String {
    p.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub index: u32,
    pub requirement_id: RequirementId,
    /// Satisfaction code, `None` when unanswered.
    pub code: Option<Satisfaction>,
    pub text: String,
    /// Set for answered requirements whose answer is not `Y`.
    pub emphasis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotFamily {
    pub code: String,
    pub name: String,
    pub question_count: usize,
    pub answered: usize,
    pub completion_percent: String,
    pub points: f64,
    pub compliance: f64,
    pub compliance_percent: String,
    pub empty: bool,
    pub rows: Vec<SnapshotRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotDoc {
    pub title: String,
    pub level: SecurityLevel,
    pub level_label: String,
    pub organization: String,
    pub completed_on: Option<NaiveDate>,
    pub total_questions: usize,
    pub total_answered: usize,
    pub completion_percent: String,
    pub overall_compliance: f64,
    /// Two decimals, e.g. `86.46%`.
    pub overall_compliance_percent: String,
    pub families: Vec<SnapshotFamily>,
}

/// Aggregate view of every family block plus completion and compliance.
pub fn snapshot(view: &CatalogView, a: &Assessment, opts: &ScoringOptions) -> SnapshotDoc {
    let score = overall_compliance(view, a, opts);
    let completion = a.completion(view);

    let families = view
        .families
        .iter()
        .zip(&score.family_scores)
        .map(|(family, fs)| {
            let rows: Vec<SnapshotRow> = family
                .requirements
                .iter()
                .map(|r| {
                    let code = a.responses.get(&r.id).map(|e| e.satisfaction);
                    SnapshotRow {
                        index: r.id.index(),
                        requirement_id: r.id.clone(),
                        code,
                        text: a
                            .rendered_text(view, &r.id)
                            .unwrap_or_else(|_| r.text.clone()),
                        emphasis: matches!(code, Some(s) if s != Satisfaction::Yes),
                    }
                })
                .collect();
            let question_count = family.requirements.len();
            let answered = rows.iter().filter(|r| r.code.is_some()).count();
            let completion = if question_count == 0 {
                0.0
            } else {
                answered as f64 / question_count as f64
            };
            SnapshotFamily {
                code: family.code.clone(),
                name: family.name.clone(),
                question_count,
                answered,
                completion_percent: format!("{}%", percent1(completion)),
                points: fs.points,
                compliance: fs.fraction,
                compliance_percent: format!("{}%", percent1(fs.fraction)),
                empty: family.empty,
                rows,
            }
        })
        .collect();

    SnapshotDoc {
        title: view.title.clone(),
        level: view.level,
        level_label: view.level.label().to_string(),
        organization: a.organization.clone(),
        completed_on: a.completed_on,
        total_questions: completion.total,
        total_answered: completion.answered,
        completion_percent: format!("{}%", percent1(completion.fraction)),
        overall_compliance: score.fraction,
        overall_compliance_percent: format!("{}%", percent2(score.fraction)),
        families,
    }
}

impl SnapshotDoc {
    /// Plain-text rendering. Emphasized rows carry a `*` after the code.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "SNAPSHOT    Security Level: {}    ASSESSMENT SUMMARY",
            self.level_label
        );
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "Organization: {}", self.organization);
        match self.completed_on {
            Some(d) => {
                let _ = writeln!(out, "Completed: {d}");
            }
            None => {
                let _ = writeln!(out, "Completed: (in progress)");
            }
        }
        let _ = writeln!(
            out,
            "No. of Questions: {}    Completed/Pct.: {} {}",
            self.total_questions, self.total_answered, self.completion_percent
        );
        let _ = writeln!(
            out,
            "Overall compliance: {}",
            self.overall_compliance_percent
        );
        for f in &self.families {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{} ({})    Questions: {}    Completed: {} {}    Compliance: {} {}",
                f.name.to_uppercase(),
                f.code,
                f.question_count,
                f.answered,
                f.completion_percent,
                points(f.points),
                f.compliance_percent
            );
            if f.empty {
                let _ = writeln!(out, "  (no requirements at this level)");
            }
            for r in &f.rows {
                let code = r.code.map(|c| c.code()).unwrap_or('-');
                let mark = if r.emphasis { '*' } else { ' ' };
                let _ = writeln!(out, "  {:>3}  {code}{mark}  {}", r.index, r.text);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceRow {
    pub family: String,
    pub name: String,
    pub points: f64,
    pub count: usize,
    pub fraction: f64,
    /// One decimal, without the `%` sign.
    pub percent: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceSummary {
    pub rows: Vec<ComplianceRow>,
    pub total: ComplianceRow,
    pub threshold_percent: String,
}

pub const TOTAL_ROW_LABEL: &str = "TOTAL";

pub fn compliance_summary(score: &OverallScore) -> ComplianceSummary {
    let rows = score
        .family_scores
        .iter()
        .map(|f| ComplianceRow {
            family: f.family_code.clone(),
            name: f.family_name.clone(),
            points: f.points,
            count: f.requirement_count,
            fraction: f.fraction,
            percent: percent1(f.fraction),
            verdict: score
                .family_verdicts
                .get(&f.family_code)
                .copied()
                .unwrap_or(Verdict::Fail),
        })
        .collect();
    ComplianceSummary {
        rows,
        total: ComplianceRow {
            family: TOTAL_ROW_LABEL.into(),
            name: "All families".into(),
            points: score.total_points,
            count: score.total_requirements,
            fraction: score.fraction,
            percent: percent1(score.fraction),
            verdict: score.aggregate_verdict,
        },
        threshold_percent: percent1(score.threshold),
    }
}

fn csv_string(records: Vec<Vec<String>>) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.write_record(&r)
            .map_err(|e| ReportError::Csv(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ReportError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Csv(e.to_string()))
}

/// Delimited compliance table: header `family,points,count,percent,verdict`,
/// one row per family, then a `TOTAL` row.
pub fn compliance_table(score: &OverallScore) -> String {
    let summary = compliance_summary(score);
    let mut records = vec![vec![
        "family".to_string(),
        "points".into(),
        "count".into(),
        "percent".into(),
        "verdict".into(),
    ]];
    for r in summary.rows.iter().chain(std::iter::once(&summary.total)) {
        records.push(vec![
            r.family.clone(),
            points(r.points),
            r.count.to_string(),
            r.percent.clone(),
            r.verdict.as_str().to_string(),
        ]);
    }
    csv_string(records).expect("in-memory CSV write")
}

/// Aligned plain-text version of [`compliance_table`].
pub fn compliance_text(score: &OverallScore) -> String {
    let summary = compliance_summary(score);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>8} {:>6} {:>8}  verdict",
        "family", "points", "count", "percent"
    );
    for r in summary.rows.iter().chain(std::iter::once(&summary.total)) {
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>6} {:>7}%  {}",
            r.family,
            points(r.points),
            r.count,
            r.percent,
            r.verdict.as_str()
        );
    }
    let _ = writeln!(out, "threshold {}%", summary.threshold_percent);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarAxis {
    pub label: String,
    pub fraction: f64,
}

/// Radar chart input. Axes start at 12 o'clock and proceed clockwise,
/// evenly spaced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarSpec {
    pub axes: Vec<RadarAxis>,
    /// Draws a reference ring at this fraction.
    pub threshold: Option<f64>,
}

impl RadarSpec {
    /// One axis per family, in catalog order, with a ring at the
    /// assessment threshold.
    pub fn from_score(score: &OverallScore) -> Self {
        Self {
            axes: score
                .family_scores
                .iter()
                .map(|f| RadarAxis {
                    label: f.family_code.clone(),
                    fraction: f.fraction,
                })
                .collect(),
            threshold: Some(score.threshold),
        }
    }

    pub fn center() -> (f64, f64) {
        (RADAR_SIZE / 2.0, RADAR_SIZE / 2.0)
    }

    pub fn radius() -> f64 {
        RADAR_SIZE / 2.0 - RADAR_LABEL_MARGIN
    }

    fn angle(&self, i: usize) -> f64 {
        -PI / 2.0 + 2.0 * PI * i as f64 / self.axes.len() as f64
    }

    fn point(&self, i: usize, r: f64) -> (f64, f64) {
        let (cx, cy) = Self::center();
        let a = self.angle(i);
        (cx + r * a.cos(), cy + r * a.sin())
    }

    pub fn spoke_end(&self, i: usize) -> (f64, f64) {
        self.point(i, Self::radius())
    }

    pub fn vertex(&self, i: usize) -> (f64, f64) {
        self.point(i, Self::radius() * self.axes[i].fraction)
    }

    fn check(&self) -> Result<(), ReportError> {
        if self.axes.len() < 3 {
            return Err(ReportError::TooFewAxes(self.axes.len()));
        }
        for a in &self.axes {
            if !(0.0..=1.0).contains(&a.fraction) {
                return Err(ReportError::FractionOutOfRange {
                    label: a.label.clone(),
                    value: a.fraction,
                });
            }
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(ReportError::ThresholdOutOfRange(t));
            }
        }
        Ok(())
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// Standalone SVG 1.1 radar chart. Output is a pure function of `spec`.
pub fn radar_svg(spec: &RadarSpec) -> Result<String, ReportError> {
    spec.check()?;
    let (cx, cy) = RadarSpec::center();
    let radius = RadarSpec::radius();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        RADAR_SIZE
    );
    let _ = writeln!(s, "<title>Compliance by control family</title>");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{0}" height="{0}" fill="white"/>"#,
        RADAR_SIZE
    );

    let _ = writeln!(
        s,
        r##"<g class="grid" fill="none" stroke="#cccccc" stroke-width="1">"##
    );
    for step in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}"/>"#,
            num(cx),
            num(cy),
            num(radius * step)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r##"<g class="spokes" stroke="#999999" stroke-width="1">"##
    );
    for (i, axis) in spec.axes.iter().enumerate() {
        let (x, y) = spec.spoke_end(i);
        let _ = writeln!(
            s,
            r#"<line data-axis="{}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            xml_escape(&axis.label),
            num(cx),
            num(cy),
            num(x),
            num(y)
        );
    }
    let _ = writeln!(s, "</g>");

    if let Some(t) = spec.threshold {
        let _ = writeln!(
            s,
            r##"<circle class="threshold" cx="{}" cy="{}" r="{}" fill="none" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            num(cx),
            num(cy),
            num(radius * t)
        );
    }

    let points: Vec<String> = (0..spec.axes.len())
        .map(|i| {
            let (x, y) = spec.vertex(i);
            format!("{},{}", num(x), num(y))
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon class="data" points="{}" fill="#1f77b4" fill-opacity="0.25" stroke="#1f77b4" stroke-width="2"/>"##,
        points.join(" ")
    );

    let _ = writeln!(s, r##"<g class="vertices" fill="#1f77b4">"##);
    for (i, axis) in spec.axes.iter().enumerate() {
        let (x, y) = spec.vertex(i);
        let _ = writeln!(
            s,
            r#"<circle data-axis="{}" data-percent="{}" cx="{}" cy="{}" r="4"/>"#,
            xml_escape(&axis.label),
            percent1(axis.fraction),
            num(x),
            num(y)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<g class="labels" font-family="sans-serif" font-size="14" fill="black">"#
    );
    for (i, axis) in spec.axes.iter().enumerate() {
        let (x, y) = spec.point(i, radius + RADAR_LABEL_MARGIN / 2.0);
        let dx = x - cx;
        let anchor = if dx.abs() < 1e-6 {
            "middle"
        } else if dx > 0.0 {
            "start"
        } else {
            "end"
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" dominant-baseline="middle">{}</text>"#,
            num(x),
            num(y),
            xml_escape(&axis.label)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectsDocRow {
    pub family_code: String,
    pub family_name: String,
    pub number: u32,
    /// Satisfaction code, or `-` when unanswered.
    pub code: String,
    /// `Yes`, `No` or empty, in effect column order.
    pub cells: Vec<String>,
    /// Spans the effect columns when set.
    pub label: Option<String>,
    pub unanswered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectsDoc {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<EffectsDocRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedEffects {
    pub doc: EffectsDoc,
    pub csv: String,
}

pub const UNANSWERED_CODE: &str = "-";

/// Effects map as a document model and as delimited text with columns
/// `family,#,C,(R)edirect,(P)reclude,(I)mpede,(L)imit,(E)xpose`.
pub fn render_effects(rows: &[EffectsRow]) -> RenderedEffects {
    let mut columns = vec!["family".to_string(), "#".into(), "C".into()];
    columns.extend(AdversaryEffect::ALL.iter().map(|e| e.heading().to_string()));

    let doc_rows: Vec<EffectsDocRow> = rows
        .iter()
        .map(|r| {
            let cells = AdversaryEffect::ALL
                .iter()
                .map(|e| match r.cells.get(e) {
                    Some(EffectCell::Yes) => "Yes".to_string(),
                    Some(EffectCell::No) => "No".to_string(),
                    _ => String::new(),
                })
                .collect();
            EffectsDocRow {
                family_code: r.family_code.clone(),
                family_name: r.family_name.clone(),
                number: r.requirement_id.index(),
                code: r
                    .satisfaction
                    .map(|s| s.code().to_string())
                    .unwrap_or_else(|| UNANSWERED_CODE.to_string()),
                cells,
                label: r.no_effects_listed.then(|| NO_EFFECTS_LABEL.to_string()),
                unanswered: r.unanswered,
            }
        })
        .collect();

    let mut records = vec![columns.clone()];
    for r in &doc_rows {
        let mut rec = vec![r.family_code.clone(), r.number.to_string(), r.code.clone()];
        match &r.label {
            Some(label) => {
                rec.push(label.clone());
                rec.extend(std::iter::repeat_n(
                    String::new(),
                    AdversaryEffect::ALL.len() - 1,
                ));
            }
            None => rec.extend(r.cells.iter().cloned()),
        }
        records.push(rec);
    }

    RenderedEffects {
        doc: EffectsDoc {
            title: "Adversary Effects Map".into(),
            columns,
            rows: doc_rows,
        },
        csv: csv_string(records).expect("in-memory CSV write"),
    }
}
