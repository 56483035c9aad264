//! The full estimand catalog at each design width: per-arm pre and post
//! trends and levels, their changes at the intervention, the pairwise
//! difference-in-differences contrasts, and (with two control groups)
//! the triple-difference estimands.
//!
//! Run with `cargo run --example estimand_catalog`.

use ddd_itsa::report::render_estimands;
use ddd_itsa::{catalog, fit, CsvSchema, DesignSpec, PanelSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = include_str!("../data/cigsales.csv");
    let panel = PanelSeries::load_csv(csv.as_bytes(), &CsvSchema::default())?;

    let designs = [
        ("Triple difference, two control groups", DesignSpec::new("3", &["8", "19"], &["4"], 1989)),
        ("Controlled, one control group", DesignSpec::new("3", &["8", "19"], &[], 1989)),
        ("Single group", DesignSpec::new("3", &[], &[], 1989)),
    ];
    for (i, (title, spec)) in designs.into_iter().enumerate() {
        let fitted = fit(&panel, &spec.with_lag(1))?;
        let rows = catalog(&fitted, 0.95)?;
        if i > 0 {
            println!();
        }
        print!(
            "{}",
            render_estimands(&format!("{title} ({} estimands)", rows.len()), &rows)
        );
    }
    Ok(())
}
