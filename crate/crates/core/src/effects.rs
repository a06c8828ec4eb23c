//! Adversary effects map: for each enhanced requirement, whether each
//! annotated effect is achieved given the recorded answer.
//!
//! Effects are not ordinal and are never aggregated into a number. A cell is
//! a pure function of the requirement's annotation set and its own answer.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::assessment::{Assessment, Satisfaction};
use crate::catalog::{AdversaryEffect, CatalogView, RequirementId, SecurityLevel, Tier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EffectsError {
    #[error("the adversary effects map needs a high-level assessment (enhanced requirements)")]
    MediumLevel,
}

/// How partial answers are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PartialPolicy {
    /// `P` achieves the annotated effects.
    #[default]
    Achieved,
    /// `P` does not achieve them.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectCell {
    Yes,
    No,
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EffectsRow {
    pub family_code: String,
    pub family_name: String,
    pub requirement_id: RequirementId,
    /// `None` when the requirement has not been answered.
    pub satisfaction: Option<Satisfaction>,
    /// One entry per effect, in column order.
    pub cells: BTreeMap<AdversaryEffect, EffectCell>,
    pub no_effects_listed: bool,
    pub unanswered: bool,
}

fn achieved(s: Satisfaction, policy: PartialPolicy) -> bool {
    match s {
        Satisfaction::Yes | Satisfaction::Alternative => true,
        Satisfaction::Partial => policy == PartialPolicy::Achieved,
        Satisfaction::No | Satisfaction::NotApplicable => false,
    }
}

/// Builds one row per enhanced requirement, ordered by family then index.
pub fn effects_map(
    a: &Assessment,
    view: &CatalogView,
    policy: PartialPolicy,
) -> Result<Vec<EffectsRow>, EffectsError> {
    if view.level != SecurityLevel::High {
        return Err(EffectsError::MediumLevel);
    }
    let mut rows = Vec::new();
    for family in &view.families {
        for req in family
            .requirements
            .iter()
            .filter(|r| r.tier == Tier::Enhanced)
        {
            let satisfaction = a.responses.get(&req.id).map(|e| e.satisfaction);
            let status = match satisfaction {
                Some(s) if achieved(s, policy) => EffectCell::Yes,
                _ => EffectCell::No,
            };
            let no_effects_listed = req.adversary_effects.is_empty();
            let cells = AdversaryEffect::ALL
                .into_iter()
                .map(|effect| {
                    let cell = if req.adversary_effects.contains(&effect) {
                        status
                    } else {
                        EffectCell::Blank
                    };
                    (effect, cell)
                })
                .collect();
            rows.push(EffectsRow {
                family_code: family.code.clone(),
                family_name: family.name.clone(),
                requirement_id: req.id.clone(),
                satisfaction,
                cells,
                no_effects_listed,
                unanswered: satisfaction.is_none(),
            });
        }
    }
    Ok(rows)
}
