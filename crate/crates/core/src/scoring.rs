//! Value calculus, family and aggregate compliance, determination findings
//! and threshold verdicts.
//!
//! Values: `Y` and `A` score 1, `N` and `D` score 0, `P` scores its stored
//! partial value. A family's compliance is the sum of its values over the
//! number of requirements in the level view. Unanswered and not-applicable
//! requirements stay in the denominator at value 0 unless
//! [`ScoringOptions::exclude_not_applicable`] is set. The aggregate is
//! total points over total requirements, never a mean of family fractions.
//!
//! Nothing here rounds; rounding happens only when reports format numbers.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::assessment::{Assessment, ResponseEntry, Satisfaction};
use crate::catalog::{CatalogView, FamilyView, RequirementId, Tier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("partial satisfaction requires a partial value")]
    MissingPartialValue,
    #[error("a partial value is only allowed with satisfaction P")]
    UnexpectedPartialValue,
    #[error("unknown family {0}")]
    UnknownFamily(String),
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
}

/// Numeric value of one answer.
pub fn value_of(satisfaction: Satisfaction, partial_value: Option<f64>) -> Result<f64, ScoreError> {
    match (satisfaction, partial_value) {
        (Satisfaction::Partial, Some(v)) => Ok(v),
        (Satisfaction::Partial, None) => Err(ScoreError::MissingPartialValue),
        (_, Some(_)) => Err(ScoreError::UnexpectedPartialValue),
        (Satisfaction::Yes | Satisfaction::Alternative, None) => Ok(1.0),
        (Satisfaction::No | Satisfaction::NotApplicable, None) => Ok(0.0),
    }
}

fn entry_value(entry: &ResponseEntry) -> f64 {
    // entries are validated on record and on load
    value_of(entry.satisfaction, entry.partial_value).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScoringOptions {
    /// Drop `D` answers from the denominator instead of scoring them 0.
    pub exclude_not_applicable: bool,
    /// Per-family threshold; the assessment threshold applies when unset.
    pub family_threshold: Option<f64>,
}

impl ScoringOptions {
    pub fn with_family_threshold(mut self, threshold: f64) -> Result<Self, ScoreError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ScoreError::ThresholdOutOfRange(threshold));
        }
        self.family_threshold = Some(threshold);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    /// Pass iff `fraction >= threshold`.
    pub fn against(fraction: f64, threshold: f64) -> Verdict {
        if fraction >= threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyScore {
    pub family_code: String,
    pub family_name: String,
    pub points: f64,
    pub requirement_count: usize,
    /// `points / requirement_count`, or 0 for a family with no countable
    /// requirements.
    pub fraction: f64,
    pub answered_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverallScore {
    pub family_scores: Vec<FamilyScore>,
    pub total_points: f64,
    pub total_requirements: usize,
    pub fraction: f64,
    pub threshold: f64,
    pub family_threshold: Option<f64>,
    pub family_verdicts: BTreeMap<String, Verdict>,
    pub aggregate_verdict: Verdict,
}

fn ratio(points: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        points / count as f64
    }
}

fn score_family(family: &FamilyView, a: &Assessment, opts: &ScoringOptions) -> FamilyScore {
    let mut points = 0.0;
    let mut count = 0;
    let mut answered = 0;
    for r in &family.requirements {
        match a.responses.get(&r.id) {
            Some(entry) => {
                answered += 1;
                if opts.exclude_not_applicable && entry.satisfaction == Satisfaction::NotApplicable
                {
                    continue;
                }
                points += entry_value(entry);
                count += 1;
            }
            None => count += 1,
        }
    }
    FamilyScore {
        family_code: family.code.clone(),
        family_name: family.name.clone(),
        points,
        requirement_count: count,
        fraction: ratio(points, count),
        answered_count: answered,
    }
}

/// Compliance of one family of the level view.
pub fn family_compliance(
    view: &CatalogView,
    a: &Assessment,
    family_code: &str,
    opts: &ScoringOptions,
) -> Result<FamilyScore, ScoreError> {
    let family = view
        .family(family_code)
        .ok_or_else(|| ScoreError::UnknownFamily(family_code.to_string()))?;
    Ok(score_family(family, a, opts))
}

/// Family and aggregate compliance with verdicts against the assessment
/// threshold (and the family threshold, when given).
pub fn overall_compliance(
    view: &CatalogView,
    a: &Assessment,
    opts: &ScoringOptions,
) -> OverallScore {
    let family_scores: Vec<FamilyScore> = view
        .families
        .iter()
        .map(|f| score_family(f, a, opts))
        .collect();
    let total_points: f64 = family_scores.iter().map(|f| f.points).sum();
    let total_requirements: usize = family_scores.iter().map(|f| f.requirement_count).sum();
    let mut score = OverallScore {
        fraction: ratio(total_points, total_requirements),
        family_scores,
        total_points,
        total_requirements,
        threshold: a.threshold,
        family_threshold: opts.family_threshold,
        family_verdicts: BTreeMap::new(),
        aggregate_verdict: Verdict::Fail,
    };
    let verdicts = threshold_eval(&score, opts.family_threshold);
    score.family_verdicts = verdicts.families;
    score.aggregate_verdict = verdicts.aggregate;
    score
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictSet {
    pub families: BTreeMap<String, Verdict>,
    pub aggregate: Verdict,
}

/// Compares family fractions against `family_threshold` (or the aggregate
/// threshold when `None`) and the aggregate fraction against
/// `score.threshold`.
pub fn threshold_eval(score: &OverallScore, family_threshold: Option<f64>) -> VerdictSet {
    let ft = family_threshold.unwrap_or(score.threshold);
    VerdictSet {
        families: score
            .family_scores
            .iter()
            .map(|f| (f.family_code.clone(), Verdict::against(f.fraction, ft)))
            .collect(),
        aggregate: Verdict::against(score.fraction, score.threshold),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    Satisfied,
    OtherThanSatisfied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Determination {
    pub finding: Finding,
    /// Set for `D` answers, which are other than satisfied.
    pub not_applicable: bool,
}

pub fn finding_for(entry: &ResponseEntry) -> Determination {
    match entry.satisfaction {
        Satisfaction::Yes | Satisfaction::Alternative => Determination {
            finding: Finding::Satisfied,
            not_applicable: false,
        },
        Satisfaction::Partial | Satisfaction::No => Determination {
            finding: Finding::OtherThanSatisfied,
            not_applicable: false,
        },
        Satisfaction::NotApplicable => Determination {
            finding: Finding::OtherThanSatisfied,
            not_applicable: true,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementFinding {
    pub requirement_id: RequirementId,
    pub tier: Tier,
    #[serde(flatten)]
    pub determination: Determination,
    /// Findings are defined for enhanced requirements; base-tier findings
    /// are an extension and flagged as such.
    pub extension: bool,
}

/// Determinations for every answered requirement of the view, in catalog order.
pub fn findings(view: &CatalogView, a: &Assessment) -> Vec<RequirementFinding> {
    view.requirements()
        .filter_map(|r| {
            a.responses.get(&r.id).map(|entry| RequirementFinding {
                requirement_id: r.id.clone(),
                tier: r.tier,
                determination: finding_for(entry),
                extension: r.tier == Tier::Base,
            })
        })
        .collect()
}
