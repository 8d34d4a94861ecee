//! `cyclm estimate` — invert the first two coefficient moments into
//! (s0_hat, alpha_hat).  Consumes three coefficient CSVs (`k,b_jk,delta`):
//! the estimation level and the two levels above it, as written by
//! `cyclm transform`.  Writes the full estimate report as `estimate.json`.

use std::path::Path;
use std::time::Instant;

use cyclm::estimate::{adjusted_estimate, increment_stat};
use cyclm::filters::filter_by_name;

use crate::config::{RawConfig, ResolvedConfig};
use crate::csvio::{read_csv_columns, write_text};
use crate::manifest::Manifest;
use crate::CliError;

pub const SCHEMA: &[(&str, &[&str])] = &[
    ("input", &["base", "up1", "up2"]),
    ("estimate", &["filter", "c", "a1", "a2", "v_s0", "v_alpha"]),
];

fn mean_square(deltas: &[f64]) -> f64 {
    deltas.iter().map(|d| d * d).sum::<f64>() / deltas.len() as f64
}

fn read_deltas(path: &str) -> Result<Vec<f64>, CliError> {
    let cols = read_csv_columns(Path::new(path), &["k", "b_jk", "delta"])?;
    if cols[2].is_empty() {
        return Err(CliError::runtime(format!("{path}: no coefficient rows")));
    }
    Ok(cols[2].clone())
}

pub fn run(config_text: &str, out: &Path) -> Result<String, CliError> {
    let start = Instant::now();
    let raw = RawConfig::parse(config_text)?;
    raw.check_schema(SCHEMA)?;

    let input = raw.section("input");
    let base_path = input.str("base")?.to_string();
    let up1_path = input.str("up1")?.to_string();
    let up2_path = input.str("up2")?.to_string();

    let est = raw.section("estimate");
    let filter_name = est.str("filter")?.to_string();
    let filter = filter_by_name(&filter_name)?;
    let c = est.f64_or("c", 1.0)?;
    let a1 = est.f64("a1")?;
    let a2 = est.f64("a2")?;
    let v_at = match (est.opt_f64("v_s0")?, est.opt_f64("v_alpha")?) {
        (Some(s0), Some(alpha)) => Some((s0, alpha)),
        (None, None) => None,
        _ => {
            return Err(CliError::config(
                "v_s0 and v_alpha must be given together (or both omitted)".to_string(),
            ))
        }
    };

    let base = read_deltas(&base_path)?;
    let up1 = read_deltas(&up1_path)?;
    let up2 = read_deltas(&up2_path)?;
    if up1.len() != up2.len() {
        return Err(CliError::config(format!(
            "the two upper levels must have equal coefficient counts, got {} ({up1_path}) \
             and {} ({up2_path})",
            up1.len(),
            up2.len()
        )));
    }

    let dbar = mean_square(&base);
    let dincr = increment_stat(mean_square(&up1), mean_square(&up2), a1, a2)?;
    let report = adjusted_estimate(
        dbar,
        dincr,
        &filter,
        base.len() as u64,
        up1.len() as u64,
        c,
        v_at,
    )?;

    let mut resolved = ResolvedConfig::new();
    resolved.open_section("input");
    resolved.set_str("base", &base_path);
    resolved.set_str("up1", &up1_path);
    resolved.set_str("up2", &up2_path);
    resolved.open_section("estimate");
    resolved.set_str("filter", &filter_name);
    resolved.set_f64("c", c);
    resolved.set_f64("a1", a1);
    resolved.set_f64("a2", a2);
    if let Some((s0, alpha)) = v_at {
        resolved.set_f64("v_s0", s0);
        resolved.set_f64("v_alpha", alpha);
    }

    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::runtime(format!("cannot serialize estimate report: {e}")))?;
    json.push('\n');
    write_text(&out.join("estimate.json"), &json)?;

    let mut man = Manifest::new("estimate", resolved.text(), None);
    man.artifacts = vec!["estimate.json".to_string()];
    man.timing_seconds = start.elapsed().as_secs_f64();
    man.write(out)?;

    Ok(format!(
        "s0_hat = {}, alpha_hat = {}{}; wrote estimate.json and manifest.json to {}",
        report.s0_hat,
        report.alpha_hat,
        if report.truncation_active { " (moments truncated into the feasible region)" } else { "" },
        out.display()
    ))
}
