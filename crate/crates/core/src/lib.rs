//! Security posture assessment against base (medium) and enhanced (high)
//! CUI requirement catalogs.
//!
//! The crate covers the whole assessment workflow:
//!
//! - [`catalog`]: parse, validate and level-filter control catalogs
//! - [`odp`]: organization-defined parameter slots inside requirement text
//! - [`assessment`]: responses, parameter values, method matrices, files, diffs
//! - [`scoring`]: value calculus, family and aggregate compliance, findings
//! - [`effects`]: the adversary effects map for enhanced requirements
//! - [`report`]: snapshot, compliance table, radar SVG and effects exports
//! - [`cli`] and [`service`]: command-line and HTTP front ends
//!
//! ```
//! use cuiassess::prelude::*;
//!
//! let catalog = Catalog::sample();
//! let view = select_level(&catalog, SecurityLevel::High);
//! let mut a = Assessment::new(&view, "Example Clinic", 0.80).unwrap();
//! for (i, code) in ["Y", "Y", "N", "D", "Y"].iter().enumerate() {
//!     let id = format!("IR.{}", i + 1).parse().unwrap();
//!     a.record_response(&view, &id, ResponseEntry::new(code.parse().unwrap())).unwrap();
//! }
//! let ir = family_compliance(&view, &a, "IR", &ScoringOptions::default()).unwrap();
//! assert_eq!(ir.points, 3.0);
//! assert_eq!(cuiassess::report::percent1(ir.fraction), "60.0");
//! ```

pub mod assessment;
pub mod catalog;
pub mod cli;
pub mod effects;
pub mod odp;
pub mod report;
pub mod scoring;
pub mod service;
pub mod store;

pub mod prelude {
    pub use crate::assessment::{
        diff, Assessment, Attribute, Change, Completion, EvidenceItem, EvidenceKind, Method,
        MethodCell, MethodMatrix, ResponseEntry, Satisfaction,
    };
    pub use crate::catalog::{
        parse_catalog, select_level, validate_catalog, AdversaryEffect, Catalog, CatalogView,
        HipaaType, Requirement, RequirementId, SecurityLevel, Tier,
    };
    pub use crate::effects::{effects_map, EffectCell, EffectsRow, PartialPolicy};
    pub use crate::odp::{extract_odp_slots, OdpSlot};
    pub use crate::report::{
        compliance_table, radar_svg, render_effects, snapshot, RadarSpec, SnapshotDoc,
    };
    pub use crate::scoring::{
        family_compliance, finding_for, overall_compliance, threshold_eval, value_of, Finding,
        OverallScore, ScoringOptions, Verdict,
    };
}
