//! Record the examine/interview/test matrix for an enhanced requirement and
//! show the completion check that runs when the assessment is completed.

use chrono::NaiveDate;
use cuiassess::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::sample();
    let view = select_level(&catalog, SecurityLevel::High);
    let mut a = Assessment::new(&view, "Summit Pediatrics", 0.80)?;
    let id: RequirementId = "IR.4".parse()?;

    let mut matrix = MethodMatrix {
        examine: MethodCell::new(Attribute::Focused, Attribute::Basic),
        interview: MethodCell::new(Attribute::Basic, Attribute::Basic),
        ..Default::default()
    };
    matrix.interview.evidence.push(EvidenceItem {
        kind: EvidenceKind::Individual,
        description: "security operations lead".into(),
    });
    a.set_method_matrix(&view, &id, matrix.clone())?;

    match a.complete(NaiveDate::from_ymd_opt(2026, 3, 31).unwrap()) {
        Ok(_) => println!("completed"),
        Err(e) => println!("cannot complete yet: {e}"),
    }

    matrix.test = MethodCell::new(Attribute::Comprehensive, Attribute::Focused);
    a.set_method_matrix(&view, &id, matrix)?;
    a.complete(NaiveDate::from_ymd_opt(2026, 3, 31).unwrap())?;
    println!("completed on {}", a.completed_on.unwrap());
    Ok(())
}
