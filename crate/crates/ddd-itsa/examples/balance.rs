//! Pre-period balance: were the arms comparable on level and trend
//! before the intervention? Each pairwise contrast "passes" when its
//! p-value exceeds alpha, i.e. the data do not reject comparability.
//!
//! Run with `cargo run --example balance`.

use ddd_itsa::report::render_balance;
use ddd_itsa::{balance, fit, CsvSchema, DesignSpec, PanelSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = include_str!("../data/cigsales.csv");
    let panel = PanelSeries::load_csv(csv.as_bytes(), &CsvSchema::default())?;
    let spec = DesignSpec::new("3", &["8", "19"], &["4"], 1989).with_lag(1);
    let fitted = fit(&panel, &spec)?;

    let report = balance(&fitted, 0.05)?;
    print!("{}", render_balance(&report));
    println!();
    if report.all_pass() {
        println!("No contrast rejects balance: the arms tracked each other before 1989.");
    } else {
        println!("At least one contrast rejects balance; read the table before trusting the design.");
    }
    Ok(())
}
