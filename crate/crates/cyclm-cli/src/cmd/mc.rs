//! `cyclm mc` — Monte Carlo study of the two replicate statistics and the
//! parameter estimates.  Writes `report.json` (byte-identical across
//! reruns and worker counts at a fixed seed), the replicate samples as
//! CSV, normal quantile–quantile data for both statistics, and, with
//! `--svg`, deterministic scatter plots.

use std::path::Path;
use std::time::Instant;

use cyclm::filters::filter_by_name;
use cyclm::mc::{qq_data, run_replicates, MCConfig, SimulatorKind, Truth};
use cyclm::spectral::GegenbauerParams;

use crate::cmd::series::{self, model_from};
use crate::config::{RawConfig, ResolvedConfig, Section};
use crate::csvio::{fmt_f64, write_text, Csv};
use crate::manifest::Manifest;
use crate::svg::SvgStyle;
use crate::{write_svg, CliError};

pub const SCHEMA: &[(&str, &[&str])] = &[
    ("mc", &["replicates", "seed", "workers", "simulator", "j", "filter"]),
    ("truth", &["kind", "s0", "alpha", "taper_scale", "u", "d", "sigma_eps"]),
    ("scheme", series::SCHEME_KEYS),
    ("spectral", &["dt", "band", "bins"]),
    ("ma", &["truncation"]),
];

fn parse_simulator(text: &str) -> Result<SimulatorKind, CliError> {
    match text {
        "exact-covariance" => Ok(SimulatorKind::ExactCovariance),
        "gegenbauer-ma" => Ok(SimulatorKind::GegenbauerMa),
        "spectral-bin" => Ok(SimulatorKind::SpectralBin),
        other => Err(CliError::config(format!(
            "simulator {other:?} is not one of \"exact-covariance\", \"gegenbauer-ma\", \
             \"spectral-bin\""
        ))),
    }
}

/// Parse `[truth]`, policing keys per kind, and echo it resolved.
fn parse_truth(raw: &RawConfig, resolved: &mut ResolvedConfig) -> Result<Truth, CliError> {
    let sec: Section = raw.section("truth");
    let kind = sec.str("kind")?;
    let allowed: &[&str] = match kind {
        "model" => &["kind", "s0", "alpha", "taper_scale"],
        "gegenbauer" => &["kind", "u", "d", "sigma_eps"],
        other => {
            return Err(CliError::config(format!(
                "truth kind {other:?} is not one of \"model\", \"gegenbauer\""
            )))
        }
    };
    for key in raw.keys_in("truth") {
        if !allowed.contains(&key) {
            return Err(CliError::config(format!(
                "key {key:?} does not apply to truth kind {kind:?}; allowed keys: {}",
                allowed.join(", ")
            )));
        }
    }
    resolved.open_section("truth");
    match kind {
        "model" => {
            let s0 = sec.f64("s0")?;
            let alpha = sec.f64("alpha")?;
            let taper_scale = sec.f64_or("taper_scale", 1.0)?;
            resolved.set_str("kind", "model");
            resolved.set_f64("s0", s0);
            resolved.set_f64("alpha", alpha);
            resolved.set_f64("taper_scale", taper_scale);
            Ok(Truth::Model(model_from(s0, alpha, taper_scale)?))
        }
        "gegenbauer" => {
            let u = sec.f64("u")?;
            let d = sec.f64("d")?;
            let sigma_eps = sec.f64("sigma_eps")?;
            resolved.set_str("kind", "gegenbauer");
            resolved.set_f64("u", u);
            resolved.set_f64("d", d);
            resolved.set_f64("sigma_eps", sigma_eps);
            Ok(Truth::Gegenbauer(GegenbauerParams::new(u, d, sigma_eps)?))
        }
        _ => unreachable!("kind validated above"),
    }
}

pub fn run(config_text: &str, out: &Path, svg: bool) -> Result<String, CliError> {
    let start = Instant::now();
    let raw = RawConfig::parse(config_text)?;
    raw.check_schema(SCHEMA)?;

    let mc = raw.section("mc");
    let replicates = mc.usize("replicates")?;
    let seed = mc.u64("seed")?;
    let workers = mc.usize_or("workers", 1)?;
    let simulator_text = mc.str("simulator")?.to_string();
    let simulator = parse_simulator(&simulator_text)?;
    let filter_name = mc.str("filter")?.to_string();
    let filter = filter_by_name(&filter_name)?;

    let sc = series::scheme_from(&raw)?;
    let j = mc.u64_or("j", sc.j_min as u64)? as u32;

    let spectral = raw.section("spectral");
    let dt = spectral.f64_or("dt", 0.2)?;
    let bins = spectral.usize_or("bins", 1024)?;
    let band = match spectral.opt_str("band") {
        None | Some("auto") => None,
        Some(text) => Some(text.parse::<f64>().map_err(|_| {
            CliError::config(format!(
                "key \"band\" in section [spectral]: {text:?} is not a number or \"auto\""
            ))
        })?),
    };
    let ma_truncation = raw.section("ma").usize_or("truncation", 256)?;

    let mut resolved = ResolvedConfig::new();
    resolved.open_section("mc");
    resolved.set_usize("replicates", replicates);
    resolved.set_u64("seed", seed);
    resolved.set_usize("workers", workers);
    resolved.set_str("simulator", &simulator_text);
    resolved.set_u64("j", j as u64);
    resolved.set_str("filter", &filter_name);
    let truth = parse_truth(&raw, &mut resolved)?;
    series::echo_scheme(&mut resolved, &sc);
    resolved.open_section("spectral");
    resolved.set_f64("dt", dt);
    match band {
        Some(b) => resolved.set_f64("band", b),
        None => resolved.set_str("band", "auto"),
    }
    resolved.set_usize("bins", bins);
    resolved.open_section("ma");
    resolved.set_usize("truncation", ma_truncation);

    let cfg = MCConfig::new(replicates, truth, filter, sc.scheme, j, simulator, seed)?
        .with_workers(workers)
        .with_spectral(dt, band, bins)?
        .with_ma_truncation(ma_truncation)?;

    let report = run_replicates(&cfg)?;

    let mut artifacts = Vec::new();
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::runtime(format!("cannot serialize report: {e}")))?;
    json.push('\n');
    write_text(&out.join("report.json"), &json)?;
    artifacts.push("report.json".to_string());

    let mut s1s2 = Csv::new(&["replicate", "S1", "S2"]);
    for (i, (s1, s2)) in report.samples_s1.iter().zip(&report.samples_s2).enumerate() {
        s1s2.row(&[i.to_string(), fmt_f64(*s1), fmt_f64(*s2)]);
    }
    write_text(&out.join("s1_s2.csv"), &s1s2.finish())?;
    artifacts.push("s1_s2.csv".to_string());

    let mut est = Csv::new(&["replicate", "s0_hat", "alpha_hat", "truncated"]);
    for (i, e) in report.estimates.iter().enumerate() {
        est.row(&[
            i.to_string(),
            fmt_f64(e.s0_hat),
            fmt_f64(e.alpha_hat),
            if e.truncated { "true".to_string() } else { "false".to_string() },
        ]);
    }
    write_text(&out.join("estimates.csv"), &est.finish())?;
    artifacts.push("estimates.csv".to_string());

    let qq1 = qq_data(&report.samples_s1)?;
    let qq2 = qq_data(&report.samples_s2)?;
    for (name, qq) in [("qq_s1.csv", &qq1), ("qq_s2.csv", &qq2)] {
        let mut csv = Csv::new(&["theoretical", "sample"]);
        for (t, s) in qq.iter() {
            csv.row(&[fmt_f64(*t), fmt_f64(*s)]);
        }
        write_text(&out.join(name), &csv.finish())?;
        artifacts.push(name.to_string());
    }

    if svg {
        let pts: Vec<(f64, f64)> = report
            .samples_s1
            .iter()
            .zip(&report.samples_s2)
            .map(|(a, b)| (*a, *b))
            .collect();
        write_svg(
            out,
            "s1_s2.svg",
            &pts,
            &SvgStyle::new("replicate statistics", "S1", "S2"),
            &mut artifacts,
        )?;
        write_svg(
            out,
            "qq_s1.svg",
            &qq1,
            &SvgStyle::new("normal Q-Q of S1", "normal quantile", "sample quantile")
                .with_diagonal(),
            &mut artifacts,
        )?;
        write_svg(
            out,
            "qq_s2.svg",
            &qq2,
            &SvgStyle::new("normal Q-Q of S2", "normal quantile", "sample quantile")
                .with_diagonal(),
            &mut artifacts,
        )?;
    }

    let mut man = Manifest::new("mc", resolved.text(), Some(seed));
    man.artifacts = artifacts;
    man.timing_seconds = start.elapsed().as_secs_f64();
    man.write(out)?;

    Ok(format!(
        "{} replicates in {:.2} s: var(S1) = {:.5} (theory {:.5}), var(S2) = {:.5} \
         (theory {:.5}), corr = {:.4}, truncation rate = {:.4}; wrote {} artifacts to {}",
        replicates,
        report.runtime.as_secs_f64(),
        report.empirical_var_s1,
        report.theory_var_s1,
        report.empirical_var_s2,
        report.theory_var_s2,
        report.corr_s1_s2,
        report.truncation_rate,
        man.artifacts.len(),
        out.display()
    ))
}
