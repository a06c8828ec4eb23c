//! Control catalogs: families of base and enhanced requirements.
//!
//! A catalog file is JSON with the layout
//!
//! ```text
//! { schema_version, title, source_note,
//!   families: [ { code, name,
//!     requirements: [ { id, tier, text, hipaa_types, adversary_effects } ] } ] }
//! ```
//!
//! Requirement ids are `FAMILY.index` with 1-based contiguous indices inside
//! each family. Parameter slots are not stored separately; they are the
//! bracket spans inside `text` (see [`crate::odp`]).
//!
//! The canonical form of a catalog is its pretty-printed JSON followed by a
//! single newline. [`Catalog::digest`] hashes exactly those bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::odp::{self, OdpError};

/// The reference catalog shipped with the crate: 14 families, 110 base and
/// 34 enhanced requirements.
pub const REFERENCE_CATALOG: &str = include_str!("../data/reference_catalog.json");

/// A three-family catalog used by examples and tests. Its IR family has
/// three base and two enhanced requirements.
pub const SAMPLE_CATALOG: &str = include_str!("../data/sample_catalog.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("empty catalog")]
    Empty,
    #[error("malformed requirement id {id:?} (expected FAMILY.index)")]
    BadId { id: String },
    #[error("{requirement}: unknown adversary effect {name:?}")]
    UnknownEffect { requirement: String, name: String },
    #[error("{requirement}: unknown HIPAA control type {name:?}")]
    UnknownHipaaType { requirement: String, name: String },
    #[error("duplicate requirement id {id} at {first} and {second}")]
    DuplicateId {
        id: RequirementId,
        first: String,
        second: String,
    },
    #[error("{requirement}: malformed parameter span: {source}")]
    MalformedOdp {
        requirement: RequirementId,
        source: OdpError,
    },
    #[error("{requirement}: base-tier requirement carries adversary effects")]
    EffectOnBase { requirement: RequirementId },
    #[error("{location}: {message}")]
    Structure { location: String, message: String },
}

/// Requirement identifier, written `FAMILY.index` (e.g. `IR.3`).
///
/// Ordering is by family code, then numerically by index, so `IR.10` sorts
/// after `IR.9`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RequirementId {
    family: String,
    index: u32,
}

impl RequirementId {
    pub fn new(family: impl Into<String>, index: u32) -> Self {
        Self {
            family: family.into(),
            index,
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

impl fmt::Display for RequirementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.family, self.index)
    }
}

impl FromStr for RequirementId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CatalogError::BadId { id: s.to_string() };
        let (family, index) = s.rsplit_once('.').ok_or_else(bad)?;
        if family.is_empty() || !family.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(bad());
        }
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index: u32 = index.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Self::new(family, index))
    }
}

impl Serialize for RequirementId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RequirementId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Base,
    Enhanced,
}

/// HIPAA Security Rule safeguard category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HipaaType {
    Administrative,
    Technical,
    Physical,
}

impl HipaaType {
    pub const ALL: [HipaaType; 3] = [
        HipaaType::Administrative,
        HipaaType::Technical,
        HipaaType::Physical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HipaaType::Administrative => "administrative",
            HipaaType::Technical => "technical",
            HipaaType::Physical => "physical",
        }
    }
}

impl FromStr for HipaaType {
    type Err = String;

    /// Accepts the full names and the short forms `admin`, `tech`, `phys`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "administrative" | "admin" => Ok(HipaaType::Administrative),
            "technical" | "tech" => Ok(HipaaType::Technical),
            "physical" | "phys" => Ok(HipaaType::Physical),
            _ => Err(format!("unknown HIPAA control type {s:?}")),
        }
    }
}

impl fmt::Display for HipaaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The five desired effects on an adversary. Declaration order is the
/// column order of the effects map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryEffect {
    Redirect,
    Preclude,
    Impede,
    Limit,
    Expose,
}

impl AdversaryEffect {
    pub const ALL: [AdversaryEffect; 5] = [
        AdversaryEffect::Redirect,
        AdversaryEffect::Preclude,
        AdversaryEffect::Impede,
        AdversaryEffect::Limit,
        AdversaryEffect::Expose,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdversaryEffect::Redirect => "redirect",
            AdversaryEffect::Preclude => "preclude",
            AdversaryEffect::Impede => "impede",
            AdversaryEffect::Limit => "limit",
            AdversaryEffect::Expose => "expose",
        }
    }

    /// Column heading, e.g. `(R)edirect`.
    pub fn heading(self) -> &'static str {
        match self {
            AdversaryEffect::Redirect => "(R)edirect",
            AdversaryEffect::Preclude => "(P)reclude",
            AdversaryEffect::Impede => "(I)mpede",
            AdversaryEffect::Limit => "(L)imit",
            AdversaryEffect::Expose => "(E)xpose",
        }
    }
}

impl FromStr for AdversaryEffect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdversaryEffect::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown adversary effect {s:?}"))
    }
}

impl fmt::Display for AdversaryEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Assessment scope: medium covers base-tier requirements, high adds the
/// enhanced tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityLevel {
    Medium,
    High,
}

impl SecurityLevel {
    pub fn includes(self, tier: Tier) -> bool {
        match self {
            SecurityLevel::Medium => tier == Tier::Base,
            SecurityLevel::High => true,
        }
    }

    /// Header label used in the snapshot report.
    pub fn label(self) -> &'static str {
        match self {
            SecurityLevel::Medium => "MEDIUM (Base)",
            SecurityLevel::High => "HIGH (Enhanced)",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SecurityLevel::Medium => "medium",
            SecurityLevel::High => "high",
        }
    }
}

impl FromStr for SecurityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "medium" => Ok(SecurityLevel::Medium),
            "high" => Ok(SecurityLevel::High),
            _ => Err(format!(
                "unknown security level {s:?} (expected medium or high)"
            )),
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: RequirementId,
    pub tier: Tier,
    /// Requirement prose; may contain bracketed parameter spans.
    pub text: String,
    pub hipaa_types: BTreeSet<HipaaType>,
    /// Always empty for base-tier requirements.
    pub adversary_effects: BTreeSet<AdversaryEffect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlFamily {
    pub code: String,
    pub name: String,
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema_version: String,
    pub title: String,
    pub source_note: String,
    pub families: Vec<ControlFamily>,
}

// Wire shape used while parsing so that unknown enum names can be reported
// with the requirement they belong to.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    schema_version: String,
    title: String,
    #[serde(default)]
    source_note: String,
    families: Vec<RawFamily>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    code: String,
    name: String,
    #[serde(default)]
    requirements: Vec<RawRequirement>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequirement {
    id: String,
    tier: Tier,
    text: String,
    #[serde(default)]
    hipaa_types: Vec<String>,
    #[serde(default)]
    adversary_effects: Vec<String>,
}

/// Parses catalog JSON and rejects any catalog that violates a structural
/// invariant. The first violation found is returned.
pub fn parse_catalog(source: &str) -> Result<Catalog, CatalogError> {
    let catalog = parse_unchecked(source)?;
    match violations(&catalog).into_iter().next() {
        Some(err) => Err(err),
        None => Ok(catalog),
    }
}

/// Validates catalog JSON and reports every structural finding. Syntax
/// errors and unknown annotation names still stop at the first problem.
pub fn validate_catalog_source(source: &str) -> Result<ValidationReport, CatalogError> {
    parse_unchecked(source).map(|c| validate_catalog(&c))
}

fn parse_unchecked(source: &str) -> Result<Catalog, CatalogError> {
    let raw: RawCatalog = serde_json::from_str(source).map_err(|e| CatalogError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.families.is_empty() {
        return Err(CatalogError::Empty);
    }

    let mut families = Vec::with_capacity(raw.families.len());
    for rf in raw.families {
        let mut requirements = Vec::with_capacity(rf.requirements.len());
        for rr in rf.requirements {
            let id: RequirementId = rr.id.parse()?;
            let hipaa_types = rr
                .hipaa_types
                .iter()
                .map(|n| {
                    // only the canonical lowercase names are valid in files
                    HipaaType::ALL
                        .into_iter()
                        .find(|h| h.as_str() == n)
                        .ok_or_else(|| CatalogError::UnknownHipaaType {
                            requirement: rr.id.clone(),
                            name: n.clone(),
                        })
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            let adversary_effects = rr
                .adversary_effects
                .iter()
                .map(|n| {
                    n.parse::<AdversaryEffect>()
                        .map_err(|_| CatalogError::UnknownEffect {
                            requirement: rr.id.clone(),
                            name: n.clone(),
                        })
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            requirements.push(Requirement {
                id,
                tier: rr.tier,
                text: rr.text,
                hipaa_types,
                adversary_effects,
            });
        }
        families.push(ControlFamily {
            code: rf.code,
            name: rf.name,
            requirements,
        });
    }

    Ok(Catalog {
        schema_version: raw.schema_version,
        title: raw.title,
        source_note: raw.source_note,
        families,
    })
}

impl Catalog {
    /// Parses and validates the shipped reference catalog.
    pub fn reference() -> Catalog {
        parse_catalog(REFERENCE_CATALOG).expect("shipped reference catalog is valid")
    }

    pub fn sample() -> Catalog {
        parse_catalog(SAMPLE_CATALOG).expect("shipped sample catalog is valid")
    }

    /// Canonical serialization: pretty JSON plus a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("catalog serializes");
        s.push('\n');
        s
    }

    /// Lowercase hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.families.iter().flat_map(|f| f.requirements.iter())
    }

    pub fn counts(&self) -> CatalogCounts {
        let mut counts = CatalogCounts {
            families: self.families.len(),
            ..Default::default()
        };
        for r in self.requirements() {
            match r.tier {
                Tier::Base => counts.base += 1,
                Tier::Enhanced => counts.enhanced += 1,
            }
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CatalogCounts {
    pub families: usize,
    pub base: usize,
    pub enhanced: usize,
}

impl CatalogCounts {
    pub fn total(&self) -> usize {
        self.base + self.enhanced
    }
}

impl fmt::Display for CatalogCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "families={} base={} enhanced={} total={}",
            self.families,
            self.base,
            self.enhanced,
            self.total()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FindingLevel {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationFinding {
    pub level: FindingLevel,
    pub message: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub counts: CatalogCounts,
    pub findings: Vec<ValidationFinding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &ValidationFinding> {
        self.findings
            .iter()
            .filter(|f| f.level == FindingLevel::Error)
    }

    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }
}

fn location(family: &ControlFamily, position: usize) -> String {
    format!("family {} requirement #{}", family.code, position + 1)
}

/// All invariant violations, in catalog order.
fn violations(catalog: &Catalog) -> Vec<CatalogError> {
    let mut out = Vec::new();
    if catalog.families.is_empty() {
        out.push(CatalogError::Empty);
    }

    let mut codes: HashMap<&str, usize> = HashMap::new();
    let mut seen: HashMap<&RequirementId, String> = HashMap::new();
    for (fi, family) in catalog.families.iter().enumerate() {
        if family.code.trim().is_empty() {
            out.push(CatalogError::Structure {
                location: format!("families[{fi}]"),
                message: "family code is empty".into(),
            });
        } else if let Some(prev) = codes.insert(&family.code, fi) {
            out.push(CatalogError::Structure {
                location: format!("families[{fi}]"),
                message: format!(
                    "family code {} already used by families[{prev}]",
                    family.code
                ),
            });
        }

        for (pos, req) in family.requirements.iter().enumerate() {
            let here = location(family, pos);
            if let Some(first) = seen.get(&req.id) {
                out.push(CatalogError::DuplicateId {
                    id: req.id.clone(),
                    first: first.clone(),
                    second: here,
                });
                continue;
            }
            seen.insert(&req.id, here.clone());

            if req.id.family() != family.code {
                out.push(CatalogError::Structure {
                    location: here.clone(),
                    message: format!("id {} does not belong to family {}", req.id, family.code),
                });
            } else if req.id.index() as usize != pos + 1 {
                out.push(CatalogError::Structure {
                    location: here.clone(),
                    message: format!("id {} out of sequence (expected index {})", req.id, pos + 1),
                });
            }
            if req.tier == Tier::Base && !req.adversary_effects.is_empty() {
                out.push(CatalogError::EffectOnBase {
                    requirement: req.id.clone(),
                });
            }
            if let Err(source) = odp::check_text(&req.text) {
                out.push(CatalogError::MalformedOdp {
                    requirement: req.id.clone(),
                    source,
                });
            }
        }
    }
    out
}

/// Checks every catalog invariant and reports findings as data.
pub fn validate_catalog(catalog: &Catalog) -> ValidationReport {
    let mut findings: Vec<ValidationFinding> = violations(catalog)
        .into_iter()
        .map(|err| {
            let location = match &err {
                CatalogError::DuplicateId { second, .. } => second.clone(),
                CatalogError::Structure { location, .. } => location.clone(),
                CatalogError::EffectOnBase { requirement }
                | CatalogError::MalformedOdp { requirement, .. } => requirement.to_string(),
                _ => "catalog".to_string(),
            };
            ValidationFinding {
                level: FindingLevel::Error,
                message: err.to_string(),
                location,
            }
        })
        .collect();

    for family in &catalog.families {
        if family.requirements.is_empty() {
            findings.push(ValidationFinding {
                level: FindingLevel::Warning,
                message: "family has no requirements".into(),
                location: format!("family {}", family.code),
            });
        }
        if family.name.trim().is_empty() {
            findings.push(ValidationFinding {
                level: FindingLevel::Warning,
                message: "family name is empty".into(),
                location: format!("family {}", family.code),
            });
        }
    }

    ValidationReport {
        counts: catalog.counts(),
        findings,
    }
}

/// A family restricted to the requirements in scope for a level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyView {
    pub code: String,
    pub name: String,
    pub requirements: Vec<Requirement>,
    /// Set when the level filter removed every requirement of the family.
    pub empty: bool,
}

/// A catalog filtered to one security level. Family order is preserved and
/// families left without requirements are retained with `empty` set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogView {
    pub level: SecurityLevel,
    pub schema_version: String,
    pub title: String,
    pub digest: String,
    pub families: Vec<FamilyView>,
    #[serde(skip)]
    index: BTreeMap<RequirementId, (usize, usize)>,
}

/// Filters a catalog to the requirements in scope for `level`.
pub fn select_level(catalog: &Catalog, level: SecurityLevel) -> CatalogView {
    let families: Vec<FamilyView> = catalog
        .families
        .iter()
        .map(|f| {
            let requirements: Vec<Requirement> = f
                .requirements
                .iter()
                .filter(|r| level.includes(r.tier))
                .cloned()
                .collect();
            FamilyView {
                code: f.code.clone(),
                name: f.name.clone(),
                empty: requirements.is_empty(),
                requirements,
            }
        })
        .collect();

    let index = families
        .iter()
        .enumerate()
        .flat_map(|(fi, f)| {
            f.requirements
                .iter()
                .enumerate()
                .map(move |(ri, r)| (r.id.clone(), (fi, ri)))
        })
        .collect();

    CatalogView {
        level,
        schema_version: catalog.schema_version.clone(),
        title: catalog.title.clone(),
        digest: catalog.digest(),
        families,
        index,
    }
}

impl CatalogView {
    pub fn requirement(&self, id: &RequirementId) -> Option<&Requirement> {
        self.index
            .get(id)
            .map(|&(fi, ri)| &self.families[fi].requirements[ri])
    }

    pub fn family(&self, code: &str) -> Option<&FamilyView> {
        self.families.iter().find(|f| f.code == code)
    }

    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.families.iter().flat_map(|f| f.requirements.iter())
    }

    pub fn requirement_count(&self) -> usize {
        self.index.len()
    }
}
