//! `cyclm transform` — read a sampled series, compute the filter
//! coefficients of every level in the scheme, and write one CSV per level
//! (`k,b_jk,delta`) plus a manifest embedding the scheme-validation report.
//!
//! Coefficient counts: the estimation level `j` (default: the scheme's
//! first level) gets its configured count m_j; levels j+1 and j+2 get the
//! estimator's second-moment count M_j (design rate m_j/(a_{j+1}^{-2} −
//! a_{j+2}^{-2})², subject to the scheme's cap), so the emitted files feed
//! `cyclm estimate` directly.  Any remaining levels use their own counts.

use std::path::Path;
use std::time::Instant;

use cyclm::filters::filter_by_name;
use cyclm::transform::{compute_m_count, filter_coefficients, validate_scheme};

use crate::cmd::series;
use crate::config::{RawConfig, ResolvedConfig};
use crate::csvio::{fmt_f64, write_text, Csv};
use crate::manifest::Manifest;
use crate::CliError;

pub const SCHEMA: &[(&str, &[&str])] = &[
    ("input", &["series"]),
    ("scheme", series::SCHEME_KEYS),
    ("transform", &["filter", "estimation_level"]),
];

pub fn run(config_text: &str, out: &Path) -> Result<String, CliError> {
    let start = Instant::now();
    let raw = RawConfig::parse(config_text)?;
    raw.check_schema(SCHEMA)?;

    let input_path = raw.section("input").str("series")?.to_string();
    let grid = series::read_series_csv(Path::new(&input_path))?;

    let sc = series::scheme_from(&raw)?;
    let tsec = raw.section("transform");
    let filter_name = tsec.str("filter")?.to_string();
    let filter = filter_by_name(&filter_name)?;
    let j = tsec.u64_or("estimation_level", sc.j_min as u64)? as u32;
    sc.scheme.level(j)?;

    let mut resolved = ResolvedConfig::new();
    resolved.open_section("input");
    resolved.set_str("series", &input_path);
    series::echo_scheme(&mut resolved, &sc);
    resolved.open_section("transform");
    resolved.set_str("filter", &filter_name);
    resolved.set_u64("estimation_level", j as u64);

    // Second-moment count for the estimation triple, when it exists.
    let mcount = if sc.scheme.level(j + 2).is_ok() {
        Some(compute_m_count(&sc.scheme, j)?)
    } else {
        None
    };

    let validation = validate_scheme(&sc.scheme, &filter, (sc.scheme.j_min(), sc.scheme.j_max()));

    let mut artifacts = Vec::new();
    for lev in sc.scheme.levels() {
        let count = match &mcount {
            Some(mc) if lev.j == j + 1 || lev.j == j + 2 => {
                usize::try_from(mc.value).map_err(|_| {
                    CliError::config(format!(
                        "second-moment count M = {} at level {} does not fit in memory; \
                         set a smaller m_cap in [scheme]",
                        mc.value, lev.j
                    ))
                })?
            }
            _ => lev.m,
        };
        let block = filter_coefficients(&grid, &filter, &sc.scheme, lev.j, count)?;
        let mut csv = Csv::new(&["k", "b_jk", "delta"]);
        for (i, delta) in block.values().iter().enumerate() {
            let k = (i + 1) as u64;
            csv.row(&[k.to_string(), fmt_f64(lev.gamma * k as f64), fmt_f64(*delta)]);
        }
        let name = format!("level_{}.csv", lev.j);
        write_text(&out.join(&name), &csv.finish())?;
        artifacts.push(name);
    }

    let all_pass = validation.all_pass();
    let mut man = Manifest::new("transform", resolved.text(), None);
    man.artifacts = artifacts;
    man.timing_seconds = start.elapsed().as_secs_f64();
    man.details = serde_json::json!({
        "validation": validation,
        "estimation_level": j,
        "second_moment_count": mcount,
    });
    man.write(out)?;

    Ok(format!(
        "wrote {} level files and manifest.json to {} (scheme checks {})",
        sc.scheme.len(),
        out.display(),
        if all_pass { "pass" } else { "have failures; see manifest.json" }
    ))
}
