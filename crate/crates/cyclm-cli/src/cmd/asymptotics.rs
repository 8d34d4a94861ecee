//! `cyclm asymptotics` — print the limiting variance constants of the two
//! replicate statistics and the estimator's asymptotic covariance at a
//! given parameter point, as JSON on stdout (optionally also written as an
//! artifact with a manifest).

use std::path::PathBuf;
use std::time::Instant;

use cyclm::estimate::{asymptotic_correlation, asymptotic_covariance, asymptotic_v1};
use cyclm::filters::filter_by_name;
use cyclm::spectral::ModelParams;
use serde::Serialize;

use crate::config::{RawConfig, ResolvedConfig};
use crate::csvio::write_text;
use crate::manifest::Manifest;
use crate::{CliError, Flags};

pub const SCHEMA: &[(&str, &[&str])] = &[("asymptotics", &["filter", "c", "s0", "alpha"])];

#[derive(Serialize)]
struct AsymptoticsOutput {
    filter: String,
    c: f64,
    s0: f64,
    alpha: f64,
    /// Limiting per-replicate variance of the normalized second moment.
    #[serde(rename = "V1")]
    v1: f64,
    /// Asymptotic covariance of (s0_hat, alpha_hat), row-major 2×2.
    #[serde(rename = "V")]
    v: [f64; 4],
    /// Asymptotic correlation of the two estimates.
    rho: f64,
}

pub fn run(flags: &Flags) -> Result<String, CliError> {
    let start = Instant::now();
    // Either a config file (possibly a manifest) or the four flags.
    let (filter_name, c, s0, alpha) = match flags.value("config") {
        Some(path) => {
            for f in ["filter", "c", "s0", "alpha"] {
                if flags.value(f).is_some() {
                    return Err(CliError::usage(format!(
                        "--{f} conflicts with --config; give one or the other"
                    )));
                }
            }
            let text =
                crate::manifest::load_config_text(&PathBuf::from(path), "asymptotics")?;
            let raw = RawConfig::parse(&text)?;
            raw.check_schema(SCHEMA)?;
            let sec = raw.section("asymptotics");
            (sec.str("filter")?.to_string(), sec.f64_or("c", 1.0)?, sec.f64("s0")?, sec.f64("alpha")?)
        }
        None => (
            flags.require("filter")?.to_string(),
            flags.f64_or("c", 1.0)?,
            flags.f64("s0")?,
            flags.f64("alpha")?,
        ),
    };

    let filter = filter_by_name(&filter_name)?;
    let model = ModelParams::new(s0, alpha)?;
    let v1 = asymptotic_v1(&model, &filter, c)?;
    let v = asymptotic_covariance(s0, alpha, &filter, c)?;
    let rho = asymptotic_correlation(s0, alpha, &filter, c)?;

    let output = AsymptoticsOutput { filter: filter_name.clone(), c, s0, alpha, v1, v, rho };
    let json = serde_json::to_string_pretty(&output)
        .map_err(|e| CliError::runtime(format!("cannot serialize output: {e}")))?;

    if let Some(dir) = flags.value("out") {
        let out = PathBuf::from(dir);
        std::fs::create_dir_all(&out).map_err(|e| {
            CliError::runtime(format!("cannot create output directory {}: {e}", out.display()))
        })?;
        write_text(&out.join("asymptotics.json"), &format!("{json}\n"))?;

        let mut resolved = ResolvedConfig::new();
        resolved.open_section("asymptotics");
        resolved.set_str("filter", &filter_name);
        resolved.set_f64("c", c);
        resolved.set_f64("s0", s0);
        resolved.set_f64("alpha", alpha);
        let mut man = Manifest::new("asymptotics", resolved.text(), None);
        man.artifacts = vec!["asymptotics.json".to_string()];
        man.timing_seconds = start.elapsed().as_secs_f64();
        man.write(&out)?;
    }

    Ok(json)
}
