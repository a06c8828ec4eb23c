//! Validate a catalog file, or the embedded reference catalog when no path
//! is given, and print its counts and findings.
//!
//! ```text
//! cargo run --example validate_catalog -- path/to/catalog.json
//! ```

use cuiassess::catalog::{validate_catalog_source, FindingLevel, REFERENCE_CATALOG};

fn main() {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| {
            eprintln!("cannot read {path}: {e}");
            std::process::exit(3);
        }),
        None => REFERENCE_CATALOG.to_string(),
    };

    let report = match validate_catalog_source(&source) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("invalid catalog: {e}");
            std::process::exit(1);
        }
    };
    println!("{}", report.counts);
    for f in &report.findings {
        let tag = if f.level == FindingLevel::Error {
            "error"
        } else {
            "warning"
        };
        println!("{tag}: {}: {}", f.location, f.message);
    }
    if !report.is_valid() {
        std::process::exit(1);
    }
}
