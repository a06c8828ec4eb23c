//! Generators and brute-force reference computations shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cuiassess::catalog::ControlFamily;
use cuiassess::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const PARTIALS: [f64; 3] = [0.25, 0.50, 0.75];
pub const CODES: [char; 5] = ['Y', 'P', 'A', 'N', 'D'];

/// Family codes are unique: two letters followed by the family position.
fn family_code(i: usize) -> String {
    let letters = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    format!(
        "{}{}{}",
        letters[i % 26] as char,
        letters[(i * 7 + 3) % 26] as char,
        i
    )
}

fn random_text(rng: &mut StdRng) -> String {
    let words = [
        "monitor", "the", "system", "within", "access", "records", "users",
    ];
    let mut out = String::new();
    for i in 0..rng.gen_range(2..12) {
        if i > 0 {
            out.push(' ');
        }
        if rng.gen_bool(0.1) {
            out.push_str(&format!("[{} days]", rng.gen_range(1..90)));
        } else {
            out.push_str(words.choose(rng).unwrap());
        }
    }
    out
}

/// A valid catalog with `families` families of 1 to `max_reqs` requirements
/// each. Base requirements come first within a family.
pub fn random_catalog(rng: &mut StdRng, families: usize, max_reqs: usize) -> Catalog {
    let mut out = Vec::with_capacity(families);
    for fi in 0..families {
        let code = family_code(fi);
        let n = rng.gen_range(1..=max_reqs);
        let base = rng.gen_range(0..=n);
        let requirements = (0..n)
            .map(|ri| {
                let tier = if ri < base {
                    Tier::Base
                } else {
                    Tier::Enhanced
                };
                let adversary_effects: BTreeSet<AdversaryEffect> = if tier == Tier::Enhanced {
                    AdversaryEffect::ALL
                        .into_iter()
                        .filter(|_| rng.gen_bool(0.4))
                        .collect()
                } else {
                    BTreeSet::new()
                };
                Requirement {
                    id: RequirementId::new(code.clone(), ri as u32 + 1),
                    tier,
                    text: random_text(rng),
                    hipaa_types: HipaaType::ALL
                        .into_iter()
                        .filter(|_| rng.gen_bool(0.3))
                        .collect(),
                    adversary_effects,
                }
            })
            .collect();
        out.push(ControlFamily {
            code: code.clone(),
            name: format!("Family {code}"),
            requirements,
        });
    }
    Catalog {
        schema_version: "1".into(),
        title: "generated".into(),
        source_note: String::new(),
        families: out,
    }
}

pub fn entry_for(code: char, partial: Option<f64>) -> ResponseEntry {
    match code {
        'P' => ResponseEntry::partial(partial.expect("partial value")),
        c => ResponseEntry::new(c.to_string().parse().unwrap()),
    }
}

/// A random response, roughly one in six left unanswered (`None`).
pub fn random_response(rng: &mut StdRng) -> Option<(char, Option<f64>)> {
    if rng.gen_bool(1.0 / 6.0) {
        return None;
    }
    let code = *CODES.choose(rng).unwrap();
    let partial = (code == 'P').then(|| *PARTIALS.choose(rng).unwrap());
    Some((code, partial))
}

pub fn random_assessment(rng: &mut StdRng, view: &CatalogView) -> Assessment {
    let threshold = [0.5, 0.8, 0.9][rng.gen_range(0..3)];
    let mut a = Assessment::new(view, "Generated Org", threshold).unwrap();
    let ids: Vec<RequirementId> = view.requirements().map(|r| r.id.clone()).collect();
    for id in ids {
        if let Some((code, partial)) = random_response(rng) {
            let mut e = entry_for(code, partial).by("generator");
            if rng.gen_bool(0.3) {
                e = e.statement(format!("note {}", rng.gen_range(0..1000)));
            }
            a.record_response(view, &id, e).unwrap();
        }
    }
    a
}

/// Value of a recorded answer, written against the single-letter codes.
pub fn oracle_value(code: char, partial: Option<f64>) -> f64 {
    match code {
        'Y' | 'A' => 1.0,
        'N' | 'D' => 0.0,
        'P' => partial.unwrap(),
        other => panic!("unexpected code {other}"),
    }
}

pub struct OracleFamily {
    pub code: String,
    pub points: f64,
    pub count: usize,
}

/// Brute-force compliance straight from the catalog and the response map:
/// every in-level requirement counts once, unanswered ones score zero.
pub fn oracle_scores(
    catalog: &Catalog,
    level: SecurityLevel,
    a: &Assessment,
    exclude_na: bool,
) -> (Vec<OracleFamily>, f64, usize) {
    let mut families = Vec::new();
    let (mut all_points, mut all_count) = (0.0, 0usize);
    for f in &catalog.families {
        let (mut points, mut count) = (0.0, 0usize);
        for r in &f.requirements {
            let in_level = level == SecurityLevel::High || r.tier == Tier::Base;
            if !in_level {
                continue;
            }
            match a.responses.get(&r.id) {
                Some(e) => {
                    let code = e.satisfaction.code();
                    if exclude_na && code == 'D' {
                        continue;
                    }
                    points += oracle_value(code, e.partial_value);
                    count += 1;
                }
                None => count += 1,
            }
        }
        all_points += points;
        all_count += count;
        families.push(OracleFamily {
            code: f.code.clone(),
            points,
            count,
        });
    }
    (families, all_points, all_count)
}

pub fn oracle_fraction(points: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        points / count as f64
    }
}
