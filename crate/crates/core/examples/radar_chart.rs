//! Score every family of the reference catalog with a fixed answer pattern
//! and write the radar chart SVG.
//!
//! ```text
//! cargo run --example radar_chart -- radar.svg
//! ```

use cuiassess::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "radar.svg".into());
    let catalog = Catalog::reference();
    let view = select_level(&catalog, SecurityLevel::High);
    let mut a = Assessment::new(&view, "Northside Clinic", 0.80)?;

    let pattern = [
        Satisfaction::Yes,
        Satisfaction::Yes,
        Satisfaction::No,
        Satisfaction::Yes,
    ];
    let ids: Vec<RequirementId> = view.requirements().map(|r| r.id.clone()).collect();
    for (i, id) in ids.iter().enumerate() {
        a.record_response(&view, id, ResponseEntry::new(pattern[i % pattern.len()]))?;
    }

    let score = overall_compliance(&view, &a, &ScoringOptions::default());
    for f in &score.family_scores {
        println!("{:<3} {:>5.1}%", f.family_code, f.fraction * 100.0);
    }
    std::fs::write(&out, radar_svg(&RadarSpec::from_score(&score))?)?;
    println!("wrote {out}");
    Ok(())
}
