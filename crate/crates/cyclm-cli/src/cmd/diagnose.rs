//! `cyclm diagnose` — exploratory artifacts for one simulated realization:
//! the series itself, its periodogram, its sample autocovariance, and a
//! grid of filter coefficients across levels, plus optional SVG plots.
//!
//! Periodogram frequencies and autocovariance lags are in sample units
//! (radians per sample and samples); the manifest records the grid spacing
//! needed to rescale them to model units.

use std::path::Path;
use std::time::Instant;

use cyclm::filters::filter_by_name;
use cyclm::mc::{periodogram, sample_autocovariance};
use cyclm::transform::{coefficient_grid, validate_scheme};

use crate::cmd::series;
use crate::config::{RawConfig, ResolvedConfig};
use crate::csvio::{fmt_f64, write_text, Csv};
use crate::manifest::Manifest;
use crate::svg::SvgStyle;
use crate::{write_svg, CliError};

pub const SCHEMA: &[(&str, &[&str])] = &[
    ("series", series::SERIES_KEYS),
    ("run", series::RUN_KEYS),
    ("scheme", series::SCHEME_KEYS),
    ("diagnose", &["filter", "maxlag", "count"]),
];

pub fn run(config_text: &str, out: &Path, svg: bool) -> Result<String, CliError> {
    let start = Instant::now();
    let raw = RawConfig::parse(config_text)?;
    raw.check_schema(SCHEMA)?;

    let mut resolved = ResolvedConfig::new();
    let built = series::build_series(&raw, &mut resolved)?;
    let grid = &built.grid;
    let n = grid.n();

    let sc = series::scheme_from(&raw)?;
    let dsec = raw.section("diagnose");
    let filter_name = dsec.str("filter")?.to_string();
    let filter = filter_by_name(&filter_name)?;
    let maxlag = dsec.usize_or("maxlag", 100.min(n - 1))?;
    let count = dsec.usize_or("count", 32)?;

    series::echo_scheme(&mut resolved, &sc);
    resolved.open_section("diagnose");
    resolved.set_str("filter", &filter_name);
    resolved.set_usize("maxlag", maxlag);
    resolved.set_usize("count", count);

    let mut artifacts = Vec::new();
    series::write_series_csv(out, "realization.csv", grid, &mut artifacts)?;

    let pgram = periodogram(grid)?;
    let mut csv = Csv::new(&["frequency", "power"]);
    for (w, p) in &pgram {
        csv.row(&[fmt_f64(*w), fmt_f64(*p)]);
    }
    write_text(&out.join("periodogram.csv"), &csv.finish())?;
    artifacts.push("periodogram.csv".to_string());

    let acov = sample_autocovariance(grid, maxlag)?;
    let mut csv = Csv::new(&["lag", "value"]);
    for (h, r) in acov.iter().enumerate() {
        csv.row(&[h.to_string(), fmt_f64(*r)]);
    }
    write_text(&out.join("autocovariance.csv"), &csv.finish())?;
    artifacts.push("autocovariance.csv".to_string());

    let j_range = (sc.scheme.j_min(), sc.scheme.j_max());
    let blocks = coefficient_grid(grid, &filter, &sc.scheme, j_range, count)?;
    let mut csv = Csv::new(&["j", "k", "b_jk", "delta"]);
    for block in &blocks {
        for (i, delta) in block.values().iter().enumerate() {
            let k = (i + 1) as u64;
            csv.row(&[
                block.j().to_string(),
                k.to_string(),
                fmt_f64(block.gamma() * k as f64),
                fmt_f64(*delta),
            ]);
        }
    }
    write_text(&out.join("coefficient_grid.csv"), &csv.finish())?;
    artifacts.push("coefficient_grid.csv".to_string());

    let validation = validate_scheme(&sc.scheme, &filter, j_range);

    if svg {
        let series_pts: Vec<(f64, f64)> = grid
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (grid.t0() + i as f64 * grid.dt(), *v))
            .collect();
        write_svg(
            out,
            "realization.svg",
            &series_pts,
            &SvgStyle::new("realization", "t", "value"),
            &mut artifacts,
        )?;
        write_svg(
            out,
            "periodogram.svg",
            &pgram,
            &SvgStyle::new("periodogram", "frequency (rad/sample)", "power"),
            &mut artifacts,
        )?;
        let acov_pts: Vec<(f64, f64)> =
            acov.iter().enumerate().map(|(h, r)| (h as f64, *r)).collect();
        write_svg(
            out,
            "autocovariance.svg",
            &acov_pts,
            &SvgStyle::new("sample autocovariance", "lag (samples)", "value"),
            &mut artifacts,
        )?;
    }

    let mut man = Manifest::new("diagnose", resolved.text(), Some(built.seed));
    man.artifacts = artifacts;
    man.timing_seconds = start.elapsed().as_secs_f64();
    man.details = serde_json::json!({
        "dt": grid.dt(),
        "validation": validation,
    });
    man.write(out)?;

    Ok(format!(
        "wrote {} diagnostic artifacts and manifest.json to {}",
        man.artifacts.len(),
        out.display()
    ))
}
