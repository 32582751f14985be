use anyhow::{bail, Result};
use mofa::sampler::{sample_lhs, Criterion, DesignMatrix};

use crate::{write_output, Format, SampleArgs};

/// Design as CSV with a `x1..xd` header.
pub fn design_csv(design: &DesignMatrix) -> String {
    let header: Vec<String> = (1..=design.factors()).map(|i| format!("x{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in design.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Read a CSV design. A first line that does not parse as numbers is taken
/// as a header.
pub fn read_design_csv(text: &str) -> Result<DesignMatrix> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => bail!("line {}: {e}", i + 1),
        }
    }
    if rows.is_empty() {
        bail!("design has no rows");
    }
    Ok(DesignMatrix::from_rows(&rows)?)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let criterion: Criterion = args.criterion.parse()?;
    let runs = match (args.runs, args.levels) {
        (Some(r), None) => r,
        (None, Some(n)) => n * n,
        _ => bail!("give exactly one of --runs or --levels"),
    };
    let design = sample_lhs(runs, args.factors, criterion, args.seed)?;
    let text = match args.format {
        Format::Csv => design_csv(&design),
        Format::Json => serde_json::to_string_pretty(&design)? + "\n",
    };
    write_output(args.out.as_deref(), &text)
}
