//! Organization-defined parameter (ODP) slots.
//!
//! Requirement prose marks each parameter with a single-level square bracket
//! span, e.g. `within [24 hours]`. Brackets never nest and there is no escape
//! syntax, so a literal `[` cannot appear in requirement prose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Requirement, RequirementId};

/// Bracket syntax problems, reported with the byte offset into the text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OdpError {
    #[error("unclosed '[' at byte {offset}")]
    Unclosed { offset: usize },
    #[error("nested '[' at byte {offset}")]
    Nested { offset: usize },
    #[error("unmatched ']' at byte {offset}")]
    UnmatchedClose { offset: usize },
    #[error("empty parameter '[]' at byte {offset}")]
    Empty { offset: usize },
}

/// One parameter slot of a requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdpSlot {
    pub requirement_id: RequirementId,
    /// 1-based position among the slots of the requirement.
    pub ordinal: u32,
    /// Bracket content as written in the catalog.
    pub default_text: String,
}

/// A piece of requirement text: literal prose or a bracketed slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment<'a> {
    Text(&'a str),
    Slot { ordinal: u32, default: &'a str },
}

/// Splits `text` into literal and slot segments in textual order.
pub fn segments(text: &str) -> Result<Vec<Segment<'_>>, OdpError> {
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut open: Option<usize> = None;
    let mut ordinal = 0;

    for (offset, ch) in text.char_indices() {
        match ch {
            '[' => {
                if open.is_some() {
                    return Err(OdpError::Nested { offset });
                }
                if offset > literal_start {
                    out.push(Segment::Text(&text[literal_start..offset]));
                }
                open = Some(offset);
            }
            ']' => {
                let start = open.take().ok_or(OdpError::UnmatchedClose { offset })?;
                let inner = &text[start + 1..offset];
                if inner.is_empty() {
                    return Err(OdpError::Empty { offset: start });
                }
                ordinal += 1;
                out.push(Segment::Slot {
                    ordinal,
                    default: inner,
                });
                literal_start = offset + 1;
            }
            _ => {}
        }
    }
    if let Some(offset) = open {
        return Err(OdpError::Unclosed { offset });
    }
    if literal_start < text.len() {
        out.push(Segment::Text(&text[literal_start..]));
    }
    Ok(out)
}

/// Checks bracket well-formedness without allocating slots.
pub fn check_text(text: &str) -> Result<(), OdpError> {
    segments(text).map(|_| ())
}

/// Returns one slot per bracket span of the requirement, in textual order.
pub fn extract_odp_slots(requirement: &Requirement) -> Result<Vec<OdpSlot>, OdpError> {
    Ok(segments(&requirement.text)?
        .into_iter()
        .filter_map(|seg| match seg {
            Segment::Slot { ordinal, default } => Some(OdpSlot {
                requirement_id: requirement.id.clone(),
                ordinal,
                default_text: default.to_string(),
            }),
            Segment::Text(_) => None,
        })
        .collect())
}

/// Rebuilds text from segments, substituting slot values where `value_for`
/// yields one. Brackets are kept around every slot.
pub fn render<'a, F>(segments: &[Segment<'a>], mut value_for: F) -> String
where
    F: FnMut(u32) -> Option<&'a str>,
{
    let mut out = String::new();
    for seg in segments {
        match *seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot { ordinal, default } => {
                out.push('[');
                out.push_str(value_for(ordinal).unwrap_or(default));
                out.push(']');
            }
        }
    }
    out
}

/// An assigned value must itself be a valid bracket body.
pub fn valid_value(value: &str) -> bool {
    !value.trim().is_empty() && !value.contains(['[', ']'])
}
