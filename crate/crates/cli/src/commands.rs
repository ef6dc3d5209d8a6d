use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ruin_core::joint::{pearson_correlation, BuildOptions};
use ruin_core::oracle::{dp_window, finite_horizon_table, monte_carlo_ruin, GENERATOR};
use ruin_core::reference::{reproduce as reproduce_table, Reproduction};
use ruin_core::{solve, EngineOptions, JointMatrix};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;
use crate::format::{fixed_half_even, write_psi_csv};
use crate::svg::{line_chart, Series};

fn write_failed(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn stdout_failed(source: std::io::Error) -> CliError {
    CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// Computes ψ(0..=u_max), writes the CSV (and SVG) and prints a summary.
pub fn compute(
    config_path: &Path,
    out: Option<&Path>,
    svg: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let opts = config.engine_options();
    let sol = solve(&config.model, config.u_max, &opts)?;
    let table = &sol.table;

    let csv_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.path.clone());
    let file = File::create(&csv_path).map_err(write_failed(&csv_path))?;
    write_psi_csv(BufWriter::new(file), &table.psi_f64()).map_err(|e| CliError::Write {
        path: csv_path.clone(),
        source: e.into(),
    })?;

    let svg_path = (svg || config.output.format == OutputFormat::CsvSvg)
        .then(|| csv_path.with_extension("svg"));
    if let Some(path) = &svg_path {
        let series = [Series {
            label: "ψ(u)".into(),
            values: table.psi_f64(),
        }];
        fs::write(path, line_chart("Ruin probability ψ(u)", &series))
            .map_err(write_failed(path))?;
    }

    let mut lines = vec![
        format!("model class: {}", table.model_class),
        format!("E S: {}", table.expected_sum.to_f64()),
        format!("correlation: {}", pearson_correlation(&sol.matrix)),
        format!("psi(0): {}", fixed_half_even(&table.psi[0], 4)),
        format!(
            "delta: {:.3e} (N = {})",
            table.delta.to_f64(),
            table.horizon
        ),
    ];
    lines.extend(table.warnings.iter().map(|w| format!("warning: {w}")));
    lines.push(format!("wrote {}", csv_path.display()));
    if let Some(path) = svg_path {
        lines.push(format!("wrote {}", path.display()));
    }
    for line in lines {
        writeln!(stdout, "{line}").map_err(stdout_failed)?;
    }
    Ok(())
}

fn print_reproduction(r: &Reproduction, stdout: &mut dyn Write) -> std::io::Result<()> {
    let t = &r.table;
    writeln!(
        stdout,
        "Table {}: {} (tolerance {:e})",
        t.id, t.description, t.tolerance
    )?;
    for (c, setting) in t.settings.iter().enumerate() {
        let sol = &r.solutions[c];
        writeln!(stdout)?;
        writeln!(
            stdout,
            "{} ({}), delta = {:.1e}",
            setting.parameter,
            setting.heading,
            sol.table.delta.to_f64()
        )?;
        writeln!(
            stdout,
            "{:>3} {:>10} {:>10} {:>10}",
            "u", "computed", "published", "diff"
        )?;
        for cell in r.cells.iter().filter(|cell| cell.column == c) {
            writeln!(
                stdout,
                "{:>3} {:>10} {:>10.4} {:>10.1e}",
                cell.u,
                fixed_half_even(&sol.table.psi[cell.u], 4),
                cell.published,
                cell.diff
            )?;
        }
    }
    Ok(())
}

/// Recomputes a published table; a mismatch beyond the table's tolerance is an error.
pub fn reproduce(id: u8, svg: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let r = reproduce_table(id, &EngineOptions::default())?;
    print_reproduction(&r, stdout).map_err(stdout_failed)?;
    if let Some(path) = svg {
        let series: Vec<Series> = r
            .table
            .settings
            .iter()
            .zip(&r.solutions)
            .map(|(s, sol)| Series {
                label: s.parameter.clone(),
                values: sol.table.psi_f64(),
            })
            .collect();
        let title = format!("Table {}: ψ(u)", id);
        fs::write(path, line_chart(&title, &series)).map_err(write_failed(path))?;
    }
    let bad = r.mismatches();
    writeln!(stdout).map_err(stdout_failed)?;
    if bad.is_empty() {
        writeln!(
            stdout,
            "all {} cells within {:e} (max diff {:.1e})",
            r.cells.len(),
            r.table.tolerance,
            r.max_diff()
        )
        .map_err(stdout_failed)?;
        return Ok(());
    }
    let listing: Vec<String> = bad
        .iter()
        .map(|c| {
            format!(
                "u={} {}: computed {:.4}, published {:.4}, diff {:.1e}",
                c.u, r.table.settings[c.column].parameter, c.computed, c.published, c.diff
            )
        })
        .collect();
    Err(CliError::Mismatch(format!(
        "{} of {} cells exceed {:e}:\n  {}",
        bad.len(),
        r.cells.len(),
        r.table.tolerance,
        listing.join("\n  ")
    )))
}

/// Engine table next to the finite-horizon DP and a Monte Carlo estimate for each u.
pub fn oracle(
    config_path: &Path,
    pairs: usize,
    paths: u64,
    seed: u64,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let opts = config.engine_options();
    let sol = solve(&config.model, config.u_max, &opts)?;
    let wide = JointMatrix::build(
        &config.model,
        &BuildOptions {
            min_window: dp_window(config.u_max, pairs),
            ..opts.build_options(config.u_max)
        },
    )?;
    let dp = finite_horizon_table(&wide, config.u_max, pairs)?;

    let mut out = Vec::new();
    out.push(format!(
        "model class: {}; generator {GENERATOR}, seed {seed}, pairs {pairs}, paths {paths}",
        sol.table.model_class
    ));
    out.push(format!(
        "{:>3} {:>10} {:>10} {:>10} {:>10}",
        "u", "engine", "DP", "MC", "stderr"
    ));
    let mut warnings = Vec::new();
    for u in 0..=config.u_max {
        let mc = monte_carlo_ruin(&wide, u, pairs, paths, seed)?;
        for w in mc.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        out.push(format!(
            "{:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            u,
            sol.table.psi[u].to_f64(),
            dp.psi(u),
            mc.estimate,
            mc.stderr
        ));
    }
    out.extend(warnings.into_iter().map(|w| format!("warning: {w}")));
    for line in out {
        writeln!(stdout, "{line}").map_err(stdout_failed)?;
    }
    Ok(())
}
