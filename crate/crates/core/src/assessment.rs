//! An assessment in progress: responses, parameter assignments, method
//! matrices, persistence and history diffs.
//!
//! Every mutating method validates its input completely before touching the
//! assessment, so a failed call leaves it unchanged. Each successful mutation
//! bumps `revision` by exactly one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogView, HipaaType, RequirementId, SecurityLevel, Tier};
use crate::odp;

pub const DEFAULT_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessmentError {
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("requirement {0} is not in the assessed catalog view")]
    UnknownRequirement(RequirementId),
    #[error("partial satisfaction requires a partial value")]
    MissingPartialValue,
    #[error("partial value {0} must lie strictly between 0 and 1")]
    PartialOutOfRange(f64),
    #[error("a partial value is only allowed with satisfaction P")]
    UnexpectedPartialValue,
    #[error("{requirement} has no parameter slot {ordinal}")]
    UnknownSlot {
        requirement: RequirementId,
        ordinal: u32,
    },
    #[error("invalid parameter value {0:?} (must be non-empty, without brackets)")]
    InvalidOdpValue(String),
    #[error("{0} is a base-tier requirement; method matrices apply to enhanced requirements only")]
    BaseTier(RequirementId),
    #[error("individual evidence is only allowed under the interview method ({0})")]
    IndividualEvidence(Method),
    #[error("{requirement}: method matrix incomplete ({method} {attribute} not set)")]
    IncompleteMatrix {
        requirement: RequirementId,
        method: Method,
        attribute: &'static str,
    },
    #[error("assessment file does not match the schema: {0}")]
    Schema(String),
    #[error(
        "assessment references catalog digest {expected} but the supplied catalog has {actual}"
    )]
    DigestMismatch { expected: String, actual: String },
    #[error("assessments cover different catalogs or levels")]
    Incomparable,
}

/// Requirement satisfaction as answered by the assessed organization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Satisfaction {
    #[serde(rename = "Y")]
    Yes,
    #[serde(rename = "P")]
    Partial,
    #[serde(rename = "A")]
    Alternative,
    #[serde(rename = "N")]
    No,
    #[serde(rename = "D")]
    NotApplicable,
}

impl Satisfaction {
    pub const ALL: [Satisfaction; 5] = [
        Satisfaction::Yes,
        Satisfaction::Partial,
        Satisfaction::Alternative,
        Satisfaction::No,
        Satisfaction::NotApplicable,
    ];

    pub fn code(self) -> char {
        match self {
            Satisfaction::Yes => 'Y',
            Satisfaction::Partial => 'P',
            Satisfaction::Alternative => 'A',
            Satisfaction::No => 'N',
            Satisfaction::NotApplicable => 'D',
        }
    }

    /// Parses a satisfaction code, including the partial shortcuts
    /// `PL`, `PM` and `PH` (0.25, 0.50, 0.75).
    pub fn parse_with_shortcut(s: &str) -> Result<(Satisfaction, Option<f64>), String> {
        match s.to_ascii_uppercase().as_str() {
            "PL" => Ok((Satisfaction::Partial, Some(0.25))),
            "PM" => Ok((Satisfaction::Partial, Some(0.50))),
            "PH" => Ok((Satisfaction::Partial, Some(0.75))),
            _ => s.parse().map(|sat| (sat, None)),
        }
    }
}

impl FromStr for Satisfaction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "Y" => Ok(Satisfaction::Yes),
            "P" => Ok(Satisfaction::Partial),
            "A" => Ok(Satisfaction::Alternative),
            "N" => Ok(Satisfaction::No),
            "D" => Ok(Satisfaction::NotApplicable),
            _ => Err(format!(
                "unknown satisfaction code {s:?} (expected Y|P|A|N|D)"
            )),
        }
    }
}

impl fmt::Display for Satisfaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One assessor answer for a requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub satisfaction: Satisfaction,
    /// Present iff `satisfaction` is partial; strictly inside (0, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_value: Option<f64>,
    /// Short answer describing how the requirement is met.
    #[serde(default)]
    pub satisfying_statement: String,
    /// People interviewed.
    #[serde(default)]
    pub names: Vec<String>,
    /// Tools or processes that validate the requirement.
    #[serde(default)]
    pub validation_tools: Vec<String>,
    #[serde(default)]
    pub hipaa_types: BTreeSet<HipaaType>,
    pub recorded_at: DateTime<Utc>,
    #[serde(default)]
    pub recorded_by: String,
}

impl ResponseEntry {
    pub fn new(satisfaction: Satisfaction) -> Self {
        Self {
            satisfaction,
            partial_value: None,
            satisfying_statement: String::new(),
            names: Vec::new(),
            validation_tools: Vec::new(),
            hipaa_types: BTreeSet::new(),
            recorded_at: Utc::now(),
            recorded_by: String::new(),
        }
    }

    pub fn partial(value: f64) -> Self {
        Self {
            partial_value: Some(value),
            ..Self::new(Satisfaction::Partial)
        }
    }

    pub fn statement(mut self, s: impl Into<String>) -> Self {
        self.satisfying_statement = s.into();
        self
    }

    pub fn name(mut self, n: impl Into<String>) -> Self {
        self.names.push(n.into());
        self
    }

    pub fn tool(mut self, t: impl Into<String>) -> Self {
        self.validation_tools.push(t.into());
        self
    }

    pub fn hipaa(mut self, h: HipaaType) -> Self {
        self.hipaa_types.insert(h);
        self
    }

    pub fn by(mut self, who: impl Into<String>) -> Self {
        self.recorded_by = who.into();
        self
    }

    pub fn check(&self) -> Result<(), AssessmentError> {
        match (self.satisfaction, self.partial_value) {
            (Satisfaction::Partial, None) => Err(AssessmentError::MissingPartialValue),
            (Satisfaction::Partial, Some(v)) if !(v > 0.0 && v < 1.0) => {
                Err(AssessmentError::PartialOutOfRange(v))
            }
            (Satisfaction::Partial, Some(_)) => Ok(()),
            (_, Some(_)) => Err(AssessmentError::UnexpectedPartialValue),
            (_, None) => Ok(()),
        }
    }
}

/// Depth or coverage attribute of an assessment method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Basic,
    Focused,
    Comprehensive,
}

impl Attribute {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Basic => "basic",
            Attribute::Focused => "focused",
            Attribute::Comprehensive => "comprehensive",
        }
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(Attribute::Basic),
            "focused" => Ok(Attribute::Focused),
            "comprehensive" => Ok(Attribute::Comprehensive),
            _ => Err(format!(
                "unknown attribute {s:?} (expected basic|focused|comprehensive)"
            )),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Examine,
    Interview,
    Test,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Examine, Method::Interview, Method::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Examine => "examine",
            Method::Interview => "interview",
            Method::Test => "test",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "examine" => Ok(Method::Examine),
            "interview" => Ok(Method::Interview),
            "test" => Ok(Method::Test),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceKind {
    Specification,
    Mechanism,
    Activity,
    /// A person; interview evidence only.
    Individual,
}

impl FromStr for EvidenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "specification" => Ok(EvidenceKind::Specification),
            "mechanism" => Ok(EvidenceKind::Mechanism),
            "activity" => Ok(EvidenceKind::Activity),
            "individual" => Ok(EvidenceKind::Individual),
            _ => Err(format!("unknown evidence kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub kind: EvidenceKind,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodCell {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Attribute>,
    #[serde(default)]
    pub evidence: Vec<EvidenceItem>,
}

impl MethodCell {
    pub fn new(depth: Attribute, coverage: Attribute) -> Self {
        Self {
            depth: Some(depth),
            coverage: Some(coverage),
            evidence: Vec::new(),
        }
    }
}

/// Examine/interview/test attributes for one enhanced requirement.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodMatrix {
    #[serde(default)]
    pub examine: MethodCell,
    #[serde(default)]
    pub interview: MethodCell,
    #[serde(default)]
    pub test: MethodCell,
}

impl MethodMatrix {
    pub fn cell(&self, method: Method) -> &MethodCell {
        match method {
            Method::Examine => &self.examine,
            Method::Interview => &self.interview,
            Method::Test => &self.test,
        }
    }

    pub fn cell_mut(&mut self, method: Method) -> &mut MethodCell {
        match method {
            Method::Examine => &mut self.examine,
            Method::Interview => &mut self.interview,
            Method::Test => &mut self.test,
        }
    }

    fn check(&self) -> Result<(), AssessmentError> {
        for method in [Method::Examine, Method::Test] {
            if self
                .cell(method)
                .evidence
                .iter()
                .any(|e| e.kind == EvidenceKind::Individual)
            {
                return Err(AssessmentError::IndividualEvidence(method));
            }
        }
        Ok(())
    }

    /// First unset attribute cell, if any.
    fn missing(&self) -> Option<(Method, &'static str)> {
        Method::ALL.into_iter().find_map(|m| {
            let c = self.cell(m);
            if c.depth.is_none() {
                Some((m, "depth"))
            } else if c.coverage.is_none() {
                Some((m, "coverage"))
            } else {
                None
            }
        })
    }
}

/// Identifies the catalog an assessment was created against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogRef {
    pub schema_version: String,
    pub digest: String,
    /// Where the catalog was loaded from, when it came from a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
struct OdpRecord {
    requirement_id: RequirementId,
    ordinal: u32,
    value: String,
}

mod odp_values_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(RequirementId, u32), String>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.iter().map(|((id, ordinal), value)| OdpRecord {
            requirement_id: id.clone(),
            ordinal: *ordinal,
            value: value.clone(),
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<(RequirementId, u32), String>, D::Error> {
        let records = Vec::<OdpRecord>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for r in records {
            if map
                .insert((r.requirement_id.clone(), r.ordinal), r.value)
                .is_some()
            {
                return Err(serde::de::Error::custom(format!(
                    "duplicate parameter value for {} slot {}",
                    r.requirement_id, r.ordinal
                )));
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assessment {
    pub catalog_ref: CatalogRef,
    pub level: SecurityLevel,
    pub organization: String,
    #[serde(default)]
    pub completed_on: Option<NaiveDate>,
    pub threshold: f64,
    #[serde(default)]
    pub responses: BTreeMap<RequirementId, ResponseEntry>,
    #[serde(default, with = "odp_values_serde")]
    pub odp_values: BTreeMap<(RequirementId, u32), String>,
    #[serde(default)]
    pub method_matrices: BTreeMap<RequirementId, MethodMatrix>,
    pub revision: u64,
}

/// Answered versus total requirements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Completion {
    pub answered: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Non-fatal conditions noticed while loading an assessment file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    DigestMismatch { expected: String, actual: String },
    OrphanResponse(RequirementId),
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::DigestMismatch { expected, actual } => write!(
                f,
                "catalog digest mismatch: assessment expects {expected}, catalog is {actual}"
            ),
            LoadWarning::OrphanResponse(id) => {
                write!(
                    f,
                    "response for {id} has no requirement in the catalog view"
                )
            }
        }
    }
}

fn check_threshold(t: f64) -> Result<(), AssessmentError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(AssessmentError::ThresholdOutOfRange(t))
    }
}

impl Assessment {
    /// Starts an empty assessment over a level-selected catalog view.
    pub fn new(
        view: &CatalogView,
        organization: impl Into<String>,
        threshold: f64,
    ) -> Result<Self, AssessmentError> {
        check_threshold(threshold)?;
        Ok(Self {
            catalog_ref: CatalogRef {
                schema_version: view.schema_version.clone(),
                digest: view.digest.clone(),
                path: None,
            },
            level: view.level,
            organization: organization.into(),
            completed_on: None,
            threshold,
            responses: BTreeMap::new(),
            odp_values: BTreeMap::new(),
            method_matrices: BTreeMap::new(),
            revision: 0,
        })
    }

    fn require<'v>(
        view: &'v CatalogView,
        id: &RequirementId,
    ) -> Result<&'v crate::catalog::Requirement, AssessmentError> {
        view.requirement(id)
            .ok_or_else(|| AssessmentError::UnknownRequirement(id.clone()))
    }

    fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    /// Stores (or replaces) the response for a requirement.
    pub fn record_response(
        &mut self,
        view: &CatalogView,
        id: &RequirementId,
        entry: ResponseEntry,
    ) -> Result<u64, AssessmentError> {
        Self::require(view, id)?;
        entry.check()?;
        self.responses.insert(id.clone(), entry);
        Ok(self.bump())
    }

    /// Assigns an organization-defined value to a parameter slot.
    pub fn assign_odp(
        &mut self,
        view: &CatalogView,
        id: &RequirementId,
        ordinal: u32,
        value: impl Into<String>,
    ) -> Result<u64, AssessmentError> {
        let req = Self::require(view, id)?;
        let slots = odp::extract_odp_slots(req).unwrap_or_default();
        if !slots.iter().any(|s| s.ordinal == ordinal) {
            return Err(AssessmentError::UnknownSlot {
                requirement: id.clone(),
                ordinal,
            });
        }
        let value = value.into();
        if !odp::valid_value(&value) {
            return Err(AssessmentError::InvalidOdpValue(value));
        }
        self.odp_values.insert((id.clone(), ordinal), value);
        Ok(self.bump())
    }

    pub fn set_method_matrix(
        &mut self,
        view: &CatalogView,
        id: &RequirementId,
        matrix: MethodMatrix,
    ) -> Result<u64, AssessmentError> {
        let req = Self::require(view, id)?;
        if req.tier != Tier::Enhanced {
            return Err(AssessmentError::BaseTier(id.clone()));
        }
        matrix.check()?;
        self.method_matrices.insert(id.clone(), matrix);
        Ok(self.bump())
    }

    /// Marks the assessment finished. Every stored method matrix must have
    /// all six attribute cells set.
    pub fn complete(&mut self, on: NaiveDate) -> Result<u64, AssessmentError> {
        for (id, m) in &self.method_matrices {
            if let Some((method, attribute)) = m.missing() {
                return Err(AssessmentError::IncompleteMatrix {
                    requirement: id.clone(),
                    method,
                    attribute,
                });
            }
        }
        self.completed_on = Some(on);
        Ok(self.bump())
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<u64, AssessmentError> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(self.bump())
    }

    /// Any stored response counts as answered, including `D`.
    pub fn completion(&self, view: &CatalogView) -> Completion {
        let total = view.requirement_count();
        let answered = view
            .requirements()
            .filter(|r| self.responses.contains_key(&r.id))
            .count();
        Completion {
            answered,
            total,
            fraction: if total == 0 {
                0.0
            } else {
                answered as f64 / total as f64
            },
        }
    }

    /// Requirement text with assigned parameter values substituted; slots
    /// without an assignment keep the catalog default.
    pub fn rendered_text(
        &self,
        view: &CatalogView,
        id: &RequirementId,
    ) -> Result<String, AssessmentError> {
        let req = Self::require(view, id)?;
        let segs = odp::segments(&req.text).map_err(|e| AssessmentError::Schema(e.to_string()))?;
        Ok(odp::render(&segs, |ordinal| {
            self.odp_values
                .get(&(id.clone(), ordinal))
                .map(String::as_str)
        }))
    }

    /// Assessment file text: pretty JSON plus a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("assessment serializes");
        s.push('\n');
        s
    }

    /// Parses an assessment file and checks its internal invariants. The
    /// catalog reference is not checked; see [`Assessment::load`].
    pub fn from_json(text: &str) -> Result<Self, AssessmentError> {
        let a: Assessment =
            serde_json::from_str(text).map_err(|e| AssessmentError::Schema(e.to_string()))?;
        check_threshold(a.threshold).map_err(|e| AssessmentError::Schema(e.to_string()))?;
        for (id, entry) in &a.responses {
            entry
                .check()
                .map_err(|e| AssessmentError::Schema(format!("{id}: {e}")))?;
        }
        for (id, m) in &a.method_matrices {
            m.check()
                .map_err(|e| AssessmentError::Schema(format!("{id}: {e}")))?;
        }
        for ((_, _), value) in &a.odp_values {
            if !odp::valid_value(value) {
                return Err(AssessmentError::Schema(format!(
                    "invalid parameter value {value:?}"
                )));
            }
        }
        Ok(a)
    }

    /// Parses an assessment file against the catalog it will be used with.
    ///
    /// A digest mismatch is an error unless `allow_mismatch` is set, in which
    /// case it is returned as a warning. Responses, matrices and parameter
    /// values must all refer to requirements of the level view; with a
    /// mismatched catalog, stray responses become warnings instead.
    pub fn load(
        text: &str,
        catalog: &Catalog,
        allow_mismatch: bool,
    ) -> Result<(Assessment, CatalogView, Vec<LoadWarning>), AssessmentError> {
        let a = Self::from_json(text)?;
        let view = crate::catalog::select_level(catalog, a.level);
        let mut warnings = Vec::new();
        let mismatch = a.catalog_ref.digest != view.digest;
        if mismatch {
            if !allow_mismatch {
                return Err(AssessmentError::DigestMismatch {
                    expected: a.catalog_ref.digest.clone(),
                    actual: view.digest.clone(),
                });
            }
            warnings.push(LoadWarning::DigestMismatch {
                expected: a.catalog_ref.digest.clone(),
                actual: view.digest.clone(),
            });
        }

        for id in a.responses.keys() {
            if view.requirement(id).is_none() {
                if mismatch {
                    warnings.push(LoadWarning::OrphanResponse(id.clone()));
                } else {
                    return Err(AssessmentError::Schema(format!(
                        "response for {id} is outside the {} view",
                        a.level
                    )));
                }
            }
        }
        if !mismatch {
            for id in a.method_matrices.keys() {
                match view.requirement(id) {
                    Some(r) if r.tier == Tier::Enhanced => {}
                    _ => {
                        return Err(AssessmentError::Schema(format!(
                            "method matrix for {id} does not name an enhanced requirement"
                        )))
                    }
                }
            }
            for (id, ordinal) in a.odp_values.keys() {
                let known = view
                    .requirement(id)
                    .and_then(|r| odp::extract_odp_slots(r).ok())
                    .is_some_and(|slots| slots.iter().any(|s| s.ordinal == *ordinal));
                if !known {
                    return Err(AssessmentError::Schema(format!(
                        "parameter value for unknown slot {id} #{ordinal}"
                    )));
                }
            }
        }
        Ok((a, view, warnings))
    }
}

/// One field that differs between two assessments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Change {
    pub requirement_id: RequirementId,
    pub field: String,
    pub before: String,
    pub after: String,
}

fn join(items: &[String]) -> String {
    items.join("; ")
}

fn response_fields(entry: Option<&ResponseEntry>) -> [(&'static str, String); 6] {
    let e = entry;
    [
        (
            "hipaa_types",
            e.map(|e| {
                e.hipaa_types
                    .iter()
                    .map(|h| h.as_str())
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .unwrap_or_default(),
        ),
        ("names", e.map(|e| join(&e.names)).unwrap_or_default()),
        (
            "partial_value",
            e.and_then(|e| e.partial_value)
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ),
        (
            "satisfaction",
            e.map(|e| e.satisfaction.to_string()).unwrap_or_default(),
        ),
        (
            "satisfying_statement",
            e.map(|e| e.satisfying_statement.clone())
                .unwrap_or_default(),
        ),
        (
            "validation_tools",
            e.map(|e| join(&e.validation_tools)).unwrap_or_default(),
        ),
    ]
}

fn matrix_fields(m: Option<&MethodMatrix>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for method in Method::ALL {
        let cell = m.map(|m| m.cell(method));
        let attr = |a: Option<Attribute>| a.map(|a| a.to_string()).unwrap_or_default();
        out.push((
            format!("methods.{method}.coverage"),
            attr(cell.and_then(|c| c.coverage)),
        ));
        out.push((
            format!("methods.{method}.depth"),
            attr(cell.and_then(|c| c.depth)),
        ));
        let evidence = cell
            .map(|c| {
                c.evidence
                    .iter()
                    .map(|e| {
                        format!(
                            "{}: {}",
                            format!("{:?}", e.kind).to_lowercase(),
                            e.description
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .unwrap_or_default();
        out.push((format!("methods.{method}.evidence"), evidence));
    }
    out
}

/// Field-level differences in responses, parameter values and method
/// matrices, ordered by requirement id and then field name. Audit metadata
/// (`recorded_at`, `recorded_by`) is not compared.
pub fn diff(old: &Assessment, new: &Assessment) -> Result<Vec<Change>, AssessmentError> {
    if old.catalog_ref.digest != new.catalog_ref.digest || old.level != new.level {
        return Err(AssessmentError::Incomparable);
    }

    let mut ids: BTreeSet<&RequirementId> = BTreeSet::new();
    ids.extend(old.responses.keys());
    ids.extend(new.responses.keys());
    ids.extend(old.method_matrices.keys());
    ids.extend(new.method_matrices.keys());
    ids.extend(old.odp_values.keys().map(|(id, _)| id));
    ids.extend(new.odp_values.keys().map(|(id, _)| id));

    let mut changes = Vec::new();
    for id in ids {
        let mut fields: Vec<(String, String, String)> = Vec::new();

        let before = response_fields(old.responses.get(id));
        let after = response_fields(new.responses.get(id));
        for ((name, b), (_, a)) in before.into_iter().zip(after) {
            fields.push((name.to_string(), b, a));
        }

        let before = matrix_fields(old.method_matrices.get(id));
        let after = matrix_fields(new.method_matrices.get(id));
        for ((name, b), (_, a)) in before.into_iter().zip(after) {
            fields.push((name, b, a));
        }

        let mut ordinals: BTreeSet<u32> = BTreeSet::new();
        for map in [&old.odp_values, &new.odp_values] {
            ordinals.extend(map.keys().filter(|(i, _)| i == id).map(|(_, o)| *o));
        }
        for ordinal in ordinals {
            let key = (id.clone(), ordinal);
            fields.push((
                format!("odp[{ordinal}]"),
                old.odp_values.get(&key).cloned().unwrap_or_default(),
                new.odp_values.get(&key).cloned().unwrap_or_default(),
            ));
        }

        fields.sort_by(|x, y| x.0.cmp(&y.0));
        changes.extend(fields.into_iter().filter(|(_, b, a)| b != a).map(
            |(field, before, after)| Change {
                requirement_id: id.clone(),
                field,
                before,
                after,
            },
        ));
    }
    Ok(changes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{select_level, Catalog};

    fn id(s: &str) -> RequirementId {
        s.parse().unwrap()
    }

    fn high() -> CatalogView {
        select_level(&Catalog::sample(), SecurityLevel::High)
    }

    #[test]
    fn new_assessment_starts_empty() {
        let view = select_level(&Catalog::reference(), SecurityLevel::High);
        let a = Assessment::new(&view, "X", 0.80).unwrap();
        assert_eq!(a.revision, 0);
        assert!(a.responses.is_empty());
        assert_eq!(a.level, SecurityLevel::High);
        let c = a.completion(&view);
        assert_eq!((c.answered, c.total, c.fraction), (0, 144, 0.0));

        let medium = select_level(&Catalog::reference(), SecurityLevel::Medium);
        let a = Assessment::new(&medium, "X", 0.80).unwrap();
        assert_eq!(a.completion(&medium).total, 110);
    }

    #[test]
    fn threshold_range() {
        let view = high();
        assert_eq!(
            Assessment::new(&view, "X", 1.5),
            Err(AssessmentError::ThresholdOutOfRange(1.5))
        );
        assert!(Assessment::new(&view, "X", 0.0).is_ok());
        assert!(Assessment::new(&view, "X", 1.0).is_ok());
        assert!(Assessment::new(&view, "X", f64::NAN).is_err());
    }

    #[test]
    fn record_incident_handling_response() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        let entry = ResponseEntry::new(Satisfaction::Yes)
            .statement("This task is handled by the IT Security Team.")
            .name("Tom")
            .tool("Tool 1")
            .tool("Tool 2")
            .hipaa(HipaaType::Administrative)
            .hipaa(HipaaType::Technical);
        assert_eq!(a.record_response(&view, &id("IR.1"), entry.clone()), Ok(1));
        assert_eq!(a.responses[&id("IR.1")], entry);
        assert_eq!(a.responses[&id("IR.1")].hipaa_types.len(), 2);

        let na = ResponseEntry::new(Satisfaction::NotApplicable)
            .statement("This capability is beyond the scope of current datacenter operations.");
        assert_eq!(a.record_response(&view, &id("IR.4"), na), Ok(2));
    }

    #[test]
    fn record_errors_leave_assessment_unchanged() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        let before = a.clone();
        assert_eq!(
            a.record_response(&view, &id("ZZ.99"), ResponseEntry::new(Satisfaction::Yes)),
            Err(AssessmentError::UnknownRequirement(id("ZZ.99")))
        );
        assert_eq!(
            a.record_response(
                &view,
                &id("IR.1"),
                ResponseEntry::new(Satisfaction::Partial)
            ),
            Err(AssessmentError::MissingPartialValue)
        );
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                a.record_response(&view, &id("IR.1"), ResponseEntry::partial(bad)),
                Err(AssessmentError::PartialOutOfRange(_))
            ));
        }
        let mut yes = ResponseEntry::new(Satisfaction::Yes);
        yes.partial_value = Some(0.5);
        assert_eq!(
            a.record_response(&view, &id("IR.1"), yes),
            Err(AssessmentError::UnexpectedPartialValue)
        );
        assert_eq!(a, before);
    }

    #[test]
    fn medium_view_rejects_enhanced_ids() {
        let view = select_level(&Catalog::sample(), SecurityLevel::Medium);
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        assert!(a
            .record_response(&view, &id("IR.5"), ResponseEntry::new(Satisfaction::Yes))
            .is_err());
    }

    #[test]
    fn odp_assignment_and_rendering() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        let ir5 = id("IR.5");
        assert!(a
            .rendered_text(&view, &ir5)
            .unwrap()
            .ends_with("within [24 hours]."));
        assert_eq!(a.assign_odp(&view, &ir5, 1, "12 hours"), Ok(1));
        let text = a.rendered_text(&view, &ir5).unwrap();
        assert!(text.ends_with("within [12 hours]."), "{text}");

        assert_eq!(
            a.assign_odp(&view, &ir5, 7, "x"),
            Err(AssessmentError::UnknownSlot {
                requirement: ir5.clone(),
                ordinal: 7
            })
        );
        assert!(matches!(
            a.assign_odp(&view, &ir5, 1, "[x]"),
            Err(AssessmentError::InvalidOdpValue(_))
        ));
        assert_eq!(a.revision, 1);
    }

    fn full_matrix() -> MethodMatrix {
        MethodMatrix {
            examine: MethodCell::new(Attribute::Basic, Attribute::Comprehensive),
            interview: MethodCell::new(Attribute::Comprehensive, Attribute::Comprehensive),
            test: MethodCell::new(Attribute::Comprehensive, Attribute::Comprehensive),
        }
    }

    #[test]
    fn method_matrix_rules() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        assert_eq!(
            a.set_method_matrix(&view, &id("IR.5"), full_matrix()),
            Ok(1)
        );
        assert_eq!(
            a.set_method_matrix(&view, &id("AC.1"), full_matrix()),
            Err(AssessmentError::BaseTier(id("AC.1")))
        );

        let mut m = full_matrix();
        m.examine.evidence.push(EvidenceItem {
            kind: EvidenceKind::Specification,
            description: "IR plan v3".into(),
        });
        assert_eq!(a.set_method_matrix(&view, &id("IR.5"), m.clone()), Ok(2));

        m.interview.evidence.push(EvidenceItem {
            kind: EvidenceKind::Individual,
            description: "Tom".into(),
        });
        assert_eq!(a.set_method_matrix(&view, &id("IR.5"), m.clone()), Ok(3));

        m.test.evidence.push(EvidenceItem {
            kind: EvidenceKind::Individual,
            description: "Tom".into(),
        });
        assert_eq!(
            a.set_method_matrix(&view, &id("IR.5"), m),
            Err(AssessmentError::IndividualEvidence(Method::Test))
        );
    }

    #[test]
    fn completion_requires_full_matrices() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        let mut m = full_matrix();
        m.test.coverage = None;
        a.set_method_matrix(&view, &id("IR.4"), m).unwrap();
        let date = NaiveDate::from_ymd_opt(2020, 7, 1).unwrap();
        assert!(matches!(
            a.complete(date),
            Err(AssessmentError::IncompleteMatrix { .. })
        ));
        a.set_method_matrix(&view, &id("IR.4"), full_matrix())
            .unwrap();
        assert_eq!(a.complete(date), Ok(3));
        assert_eq!(a.completed_on, Some(date));
    }

    #[test]
    fn completion_counts_every_code() {
        let view = high();
        let mut a = Assessment::new(&view, "X", 0.80).unwrap();
        for (i, sat) in Satisfaction::ALL.into_iter().enumerate() {
            let entry = match sat {
                Satisfaction::Partial => ResponseEntry::partial(0.5),
                s => ResponseEntry::new(s),
            };
            a.record_response(&view, &id(&format!("IR.{}", i + 1)), entry)
                .unwrap();
        }
        let c = a.completion(&view);
        assert_eq!((c.answered, c.total), (5, view.requirement_count()));
    }

    #[test]
    fn shortcuts() {
        assert_eq!(
            Satisfaction::parse_with_shortcut("PL"),
            Ok((Satisfaction::Partial, Some(0.25)))
        );
        assert_eq!(
            Satisfaction::parse_with_shortcut("pm"),
            Ok((Satisfaction::Partial, Some(0.5)))
        );
        assert_eq!(
            Satisfaction::parse_with_shortcut("PH"),
            Ok((Satisfaction::Partial, Some(0.75)))
        );
        assert_eq!(
            Satisfaction::parse_with_shortcut("D"),
            Ok((Satisfaction::NotApplicable, None))
        );
        assert!(Satisfaction::parse_with_shortcut("X").is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let view = high();
        let mut a = Assessment::new(&view, "Org", 0.8).unwrap();
        a.record_response(&view, &id("IR.1"), ResponseEntry::new(Satisfaction::Yes))
            .unwrap();
        a.record_response(&view, &id("IR.2"), ResponseEntry::partial(0.3))
            .unwrap();
        a.record_response(&view, &id("AC.1"), ResponseEntry::new(Satisfaction::No))
            .unwrap();
        a.assign_odp(&view, &id("IR.5"), 1, "12 hours").unwrap();
        a.set_method_matrix(&view, &id("IR.5"), full_matrix())
            .unwrap();
        let text = a.to_json();
        assert!(text.contains("\"satisfaction\": \"P\""));
        assert!(text.contains("\"depth\": \"basic\""));
        let back = Assessment::from_json(&text).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json(), text);

        let (loaded, _, warnings) = Assessment::load(&text, &Catalog::sample(), false).unwrap();
        assert_eq!(loaded, a);
        assert!(warnings.is_empty());
    }

    #[test]
    fn digest_mismatch_is_a_warning_with_override() {
        let view = high();
        let a = Assessment::new(&view, "Org", 0.8).unwrap();
        let text = a.to_json();
        let other = Catalog::reference();
        assert!(matches!(
            Assessment::load(&text, &other, false),
            Err(AssessmentError::DigestMismatch { .. })
        ));
        let (_, _, warnings) = Assessment::load(&text, &other, true).unwrap();
        assert!(matches!(warnings[0], LoadWarning::DigestMismatch { .. }));
    }

    #[test]
    fn truncated_file_is_schema_error() {
        let view = high();
        let text = Assessment::new(&view, "Org", 0.8).unwrap().to_json();
        let cut = &text[..text.len() / 2];
        assert!(matches!(
            Assessment::from_json(cut),
            Err(AssessmentError::Schema(_))
        ));
    }

    #[test]
    fn invalid_partial_in_file_is_schema_error() {
        let view = high();
        let mut a = Assessment::new(&view, "Org", 0.8).unwrap();
        a.record_response(&view, &id("IR.1"), ResponseEntry::partial(0.5))
            .unwrap();
        let text = a.to_json().replace("0.5", "1.5");
        assert!(matches!(
            Assessment::from_json(&text),
            Err(AssessmentError::Schema(_))
        ));
    }

    #[test]
    fn diff_single_satisfaction_change() {
        let view = high();
        let mut old = Assessment::new(&view, "Org", 0.8).unwrap();
        old.record_response(&view, &id("IR.3"), ResponseEntry::new(Satisfaction::No))
            .unwrap();
        assert!(diff(&old, &old).unwrap().is_empty());

        let mut new = old.clone();
        new.record_response(&view, &id("IR.3"), ResponseEntry::new(Satisfaction::Yes))
            .unwrap();
        assert_eq!(
            diff(&old, &new).unwrap(),
            vec![Change {
                requirement_id: id("IR.3"),
                field: "satisfaction".into(),
                before: "N".into(),
                after: "Y".into(),
            }]
        );
    }

    #[test]
    fn diff_requires_same_level() {
        let cat = Catalog::sample();
        let a = Assessment::new(&select_level(&cat, SecurityLevel::High), "O", 0.8).unwrap();
        let b = Assessment::new(&select_level(&cat, SecurityLevel::Medium), "O", 0.8).unwrap();
        assert_eq!(diff(&a, &b), Err(AssessmentError::Incomparable));
    }

    #[test]
    fn diff_orders_by_id_then_field() {
        let view = high();
        let old = Assessment::new(&view, "Org", 0.8).unwrap();
        let mut new = old.clone();
        new.record_response(
            &view,
            &id("IR.2"),
            ResponseEntry::new(Satisfaction::Yes).statement("s"),
        )
        .unwrap();
        new.record_response(&view, &id("AC.1"), ResponseEntry::new(Satisfaction::Yes))
            .unwrap();
        new.assign_odp(&view, &id("IR.5"), 1, "12 hours").unwrap();
        let keys: Vec<_> = diff(&old, &new)
            .unwrap()
            .into_iter()
            .map(|c| format!("{} {}", c.requirement_id, c.field))
            .collect();
        assert_eq!(
            keys,
            vec![
                "AC.1 satisfaction",
                "IR.2 satisfaction",
                "IR.2 satisfying_statement",
                "IR.5 odp[1]"
            ]
        );
    }
}
