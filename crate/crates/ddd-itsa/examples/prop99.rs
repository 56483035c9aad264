//! The worked example the crate ships with: California's 1989
//! Proposition 99 tobacco program. Idaho and Montana form the primary
//! control group, Colorado the second one, and the outcome is annual
//! per-capita cigarette sales.
//!
//! Run with `cargo run --example prop99`.

use ddd_itsa::report::render_fit_table;
use ddd_itsa::{fit, lincom, parse_combination, CsvSchema, DesignSpec, PanelSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = include_str!("../data/cigsales.csv");
    let panel = PanelSeries::load_csv(csv.as_bytes(), &CsvSchema::default())?;

    // State ids: 3 = California, 8 = Idaho, 19 = Montana, 4 = Colorado.
    let spec = DesignSpec::new("3", &["8", "19"], &["4"], 1989).with_lag(1);
    let fitted = fit(&panel, &spec)?;
    print!("{}", render_fit_table(&fitted, 0.95)?);

    // The headline quantity: how much more the treated trend bent at the
    // intervention than both control comparisons say it would have.
    let ddd = lincom(&fitted, &parse_combination("b7 - b11", fitted.k)?, 0.95)?;
    println!();
    println!(
        "Triple-difference trend change: {:.2} packs per capita per year \
         (95% CI {:.2} to {:.2}, p = {:.3})",
        ddd.estimate, ddd.ci_lower, ddd.ci_upper, ddd.p_value
    );
    Ok(())
}
