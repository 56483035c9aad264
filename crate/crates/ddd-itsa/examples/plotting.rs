//! Figure output: the plot document (observed points, fitted pre/post
//! segments, and the counterfactual continuation of each pre-period
//! line) as JSON for external tooling and as a self-contained SVG.
//!
//! Run with `cargo run --example plotting`.

use ddd_itsa::report::{plot_document, plot_json, render_svg};
use ddd_itsa::{fit, CsvSchema, DesignSpec, PanelSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = include_str!("../data/cigsales.csv");
    let panel = PanelSeries::load_csv(csv.as_bytes(), &CsvSchema::default())?;
    let spec = DesignSpec::new("3", &["8", "19"], &["4"], 1989).with_lag(1);
    let fitted = fit(&panel, &spec)?;

    let doc = plot_document(&fitted)?;
    println!("intervention at {}", doc.intervention_time);
    for series in &doc.series {
        println!(
            "{:<10} pre slope {:>6.2}, post slope {:>6.2}, counterfactual end {:>7.2}",
            series.label,
            series.fitted_pre.slope,
            series.fitted_post.slope,
            series.counterfactual.points.last().map(|p| p.value).unwrap_or(f64::NAN)
        );
    }

    let dir = std::env::temp_dir();
    let json_path = dir.join("ddd-itsa-plot.json");
    let svg_path = dir.join("ddd-itsa-plot.svg");
    std::fs::write(&json_path, plot_json(&doc))?;
    std::fs::write(&svg_path, render_svg(&doc))?;
    println!();
    println!("wrote {}", json_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}
