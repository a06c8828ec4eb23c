//! Answer the incident response family of the sample catalog, fill in the
//! organization-defined parameters and print the snapshot and compliance
//! table.

use cuiassess::prelude::*;
use cuiassess::report::compliance_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::sample();
    let view = select_level(&catalog, SecurityLevel::High);
    let mut a = Assessment::new(&view, "Riverside Family Practice", 0.80)?;

    let answers = [
        (
            "IR.1",
            ResponseEntry::new(Satisfaction::Yes).statement("Handling plan v3 adopted"),
        ),
        (
            "IR.2",
            ResponseEntry::new(Satisfaction::Yes).tool("ticketing system"),
        ),
        ("IR.3", ResponseEntry::new(Satisfaction::No)),
        ("IR.4", ResponseEntry::new(Satisfaction::NotApplicable)),
        (
            "IR.5",
            ResponseEntry::partial(0.5)
                .name("J. Ortiz")
                .hipaa(HipaaType::Administrative),
        ),
    ];
    for (id, entry) in answers {
        a.record_response(&view, &id.parse()?, entry.by("practice manager"))?;
    }
    a.assign_odp(&view, &"IR.5".parse()?, 1, "48 hours")?;

    println!("{}", a.rendered_text(&view, &"IR.5".parse()?)?);
    println!();

    let opts = ScoringOptions::default();
    print!("{}", snapshot(&view, &a, &opts).to_text());
    println!();
    print!("{}", compliance_text(&overall_compliance(&view, &a, &opts)));
    Ok(())
}
