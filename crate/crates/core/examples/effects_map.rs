//! Build the adversary effects map for a high-level assessment and print it
//! as CSV, once with partial answers counted as achieving their effects and
//! once without.

use cuiassess::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::sample();
    let view = select_level(&catalog, SecurityLevel::High);
    let mut a = Assessment::new(&view, "Harbor Imaging", 0.80)?;
    a.record_response(
        &view,
        &"AC.3".parse()?,
        ResponseEntry::new(Satisfaction::Yes),
    )?;
    a.record_response(&view, &"AT.3".parse()?, ResponseEntry::partial(0.75))?;
    a.record_response(
        &view,
        &"IR.5".parse()?,
        ResponseEntry::new(Satisfaction::No),
    )?;

    for policy in [PartialPolicy::Achieved, PartialPolicy::Strict] {
        println!("{policy:?}:");
        let rows = effects_map(&a, &view, policy)?;
        print!("{}", render_effects(&rows).csv);
        println!();
    }
    Ok(())
}
