//! Save an assessment, revise two answers, and list the field-level changes
//! between the two files.

use cuiassess::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::sample();
    let view = select_level(&catalog, SecurityLevel::Medium);
    let mut first = Assessment::new(&view, "Lakeview Dental", 0.80)?;
    for id in ["AC.1", "AC.2", "AT.1"] {
        first.record_response(&view, &id.parse()?, ResponseEntry::new(Satisfaction::No))?;
    }
    let saved = first.to_json();

    let (mut second, view, _) = Assessment::load(&saved, &catalog, false)?;
    second.record_response(
        &view,
        &"AC.1".parse()?,
        ResponseEntry::new(Satisfaction::Yes).statement("MFA rolled out"),
    )?;
    second.record_response(&view, &"AT.1".parse()?, ResponseEntry::partial(0.25))?;

    for c in diff(&first, &second)? {
        println!(
            "{} {}: {:?} -> {:?}",
            c.requirement_id, c.field, c.before, c.after
        );
    }
    let opts = ScoringOptions::default();
    println!(
        "aggregate {:.1}% -> {:.1}%",
        overall_compliance(&view, &first, &opts).fraction * 100.0,
        overall_compliance(&view, &second, &opts).fraction * 100.0
    );
    Ok(())
}
