//! Shared builders: the `[series]`/`[run]` sections (used by `simulate` and
//! `diagnose`) and the `[scheme]` section (used by `transform`, `mc`, and
//! `diagnose`).

use std::path::Path;
use std::sync::Arc;

use cyclm::simulate::{
    simulate_gegenbauer, simulate_spectral, GridSpec, SeriesGrid, SimulationConfig,
};
use cyclm::spectral::{GegenbauerParams, ModelParams};
use cyclm::transform::{LevelScheme, DEFAULT_M_CAP};

use crate::config::{RawConfig, ResolvedConfig};
use crate::CliError;

pub const SERIES_KEYS: &[&str] = &[
    "kind", "n", "t0", "u", "d", "sigma_eps", "truncation", "s0", "alpha", "dt", "band", "bins",
    "taper_scale",
];
pub const RUN_KEYS: &[&str] = &["seed", "replicate"];
pub const SCHEME_KEYS: &[&str] = &["j_min", "a", "gamma", "m", "c", "m_cap"];

/// Spectral model with the standard smooth taper 1/(1 + (λ/scale)⁶).
/// `taper_scale = 1` is the default taper; larger scales keep the taper flat
/// over a wider band, which matters when filter scales are small.
pub fn model_from(s0: f64, alpha: f64, taper_scale: f64) -> Result<ModelParams, CliError> {
    if taper_scale == 1.0 {
        return Ok(ModelParams::new(s0, alpha)?);
    }
    if !(taper_scale > 0.0 && taper_scale.is_finite()) {
        return Err(CliError::config(format!(
            "taper_scale must be positive and finite, got {taper_scale}"
        )));
    }
    let label = format!("scaled({taper_scale}):1/(1+(x/s)^6)");
    Ok(ModelParams::with_taper(
        s0,
        alpha,
        &label,
        Arc::new(move |l: f64| 1.0 / (1.0 + (l / taper_scale).powi(6))),
    )?)
}

/// A simulated series plus the seed that produced it.
#[derive(Debug)]
pub struct BuiltSeries {
    pub grid: SeriesGrid,
    pub seed: u64,
}

/// Build the series described by `[series]`/`[run]` and echo both sections
/// (defaults resolved) into `resolved`.
pub fn build_series(raw: &RawConfig, resolved: &mut ResolvedConfig) -> Result<BuiltSeries, CliError> {
    let series = raw.section("series");
    let run = raw.section("run");
    let kind = series.str("kind")?;
    let n = series.usize("n")?;
    let seed = run.u64("seed")?;
    let replicate = run.u64_or("replicate", 0)?;
    let t0 = series.f64_or("t0", 0.0)?;

    let allowed: &[&str] = match kind {
        "gegenbauer" => &["kind", "n", "t0", "u", "d", "sigma_eps", "truncation"],
        "spectral" => &["kind", "n", "t0", "s0", "alpha", "dt", "band", "bins", "taper_scale"],
        other => {
            return Err(CliError::config(format!(
                "series kind {other:?} is not one of \"gegenbauer\", \"spectral\""
            )))
        }
    };
    for key in raw.keys_in("series") {
        if !allowed.contains(&key) {
            return Err(CliError::config(format!(
                "key {key:?} does not apply to series kind {kind:?}; allowed keys: {}",
                allowed.join(", ")
            )));
        }
    }

    let grid = match kind {
        "gegenbauer" => {
            let u = series.f64("u")?;
            let d = series.f64("d")?;
            let sigma_eps = series.f64("sigma_eps")?;
            let truncation = series.usize_or("truncation", 100)?;
            let g = GegenbauerParams::new(u, d, sigma_eps)?;
            let cfg = SimulationConfig { seed, truncation_n: truncation, replicate_index: replicate };
            let sim = simulate_gegenbauer(&g, n, &cfg)?;
            resolved.open_section("series");
            resolved.set_str("kind", "gegenbauer");
            resolved.set_usize("n", n);
            resolved.set_f64("t0", t0);
            resolved.set_f64("u", u);
            resolved.set_f64("d", d);
            resolved.set_f64("sigma_eps", sigma_eps);
            resolved.set_usize("truncation", truncation);
            // The MA recurrence is intrinsically unit-spaced; t0 relabels
            // the grid origin only.
            SeriesGrid::new(t0, 1.0, sim.values().to_vec())?
        }
        "spectral" => {
            let s0 = series.f64("s0")?;
            let alpha = series.f64("alpha")?;
            let taper_scale = series.f64_or("taper_scale", 1.0)?;
            let dt = series.f64_or("dt", 0.2)?;
            let band = series.f64_or("band", (2.0 * s0).max(s0 + 1.0))?;
            let bins = series.usize_or("bins", 1024)?;
            let model = model_from(s0, alpha, taper_scale)?;
            let grid_spec = GridSpec::new(t0, dt, n)?;
            let cfg = SimulationConfig { seed, truncation_n: 100, replicate_index: replicate };
            resolved.open_section("series");
            resolved.set_str("kind", "spectral");
            resolved.set_usize("n", n);
            resolved.set_f64("t0", t0);
            resolved.set_f64("s0", s0);
            resolved.set_f64("alpha", alpha);
            resolved.set_f64("taper_scale", taper_scale);
            resolved.set_f64("dt", dt);
            resolved.set_f64("band", band);
            resolved.set_usize("bins", bins);
            simulate_spectral(&model, &grid_spec, band, bins, &cfg)?
        }
        _ => unreachable!("kind validated above"),
    };

    resolved.open_section("run");
    resolved.set_u64("seed", seed);
    resolved.set_u64("replicate", replicate);

    Ok(BuiltSeries { grid, seed })
}

/// Parsed `[scheme]` section, keeping the raw vectors for echoing.
pub struct SchemeConfig {
    pub scheme: LevelScheme,
    pub j_min: u32,
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub m: Vec<usize>,
    pub c: f64,
    pub m_cap: Option<u64>,
}

/// Parse `[scheme]`.  When `m_cap` is absent, the library default cap is
/// applied; `m_cap=none` requests the uncapped design rate.
pub fn scheme_from(raw: &RawConfig) -> Result<SchemeConfig, CliError> {
    let sec = raw.section("scheme");
    let j_min = sec.u64("j_min")? as u32;
    let a = sec.f64_list("a")?;
    let gamma = sec.f64_list("gamma")?;
    let m = sec.usize_list("m")?;
    let c = sec.f64("c")?;
    let m_cap = match sec.opt_str("m_cap") {
        None => Some(DEFAULT_M_CAP),
        Some("none") => None,
        Some(text) => Some(text.parse().map_err(|_| {
            CliError::config(format!(
                "key \"m_cap\" in section [scheme]: {text:?} is not an integer or \"none\""
            ))
        })?),
    };
    let scheme = LevelScheme::new(j_min, a.clone(), gamma.clone(), m.clone(), c, m_cap)?;
    Ok(SchemeConfig { scheme, j_min, a, gamma, m, c, m_cap })
}

pub fn echo_scheme(resolved: &mut ResolvedConfig, sc: &SchemeConfig) {
    resolved.open_section("scheme");
    resolved.set_u64("j_min", sc.j_min as u64);
    resolved.set_f64_list("a", &sc.a);
    resolved.set_f64_list("gamma", &sc.gamma);
    resolved.set_usize_list("m", &sc.m);
    resolved.set_f64("c", sc.c);
    match sc.m_cap {
        Some(cap) => resolved.set_u64("m_cap", cap),
        None => resolved.set_str("m_cap", "none"),
    }
}

/// Write the series as `<name>` (`t,value`) in the output directory.
pub fn write_series_csv(
    dir: &Path,
    name: &str,
    grid: &SeriesGrid,
    artifacts: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut csv = crate::csvio::Csv::new(&["t", "value"]);
    for (i, v) in grid.values().iter().enumerate() {
        csv.row(&[
            crate::csvio::fmt_f64(grid.t0() + i as f64 * grid.dt()),
            crate::csvio::fmt_f64(*v),
        ]);
    }
    crate::csvio::write_text(&dir.join(name), &csv.finish())?;
    artifacts.push(name.to_string());
    Ok(())
}

/// Read a `t,value` CSV back into a uniform grid, deriving the spacing from
/// the endpoints and checking the interior stays uniform.
pub fn read_series_csv(path: &Path) -> Result<SeriesGrid, CliError> {
    let cols = crate::csvio::read_csv_columns(path, &["t", "value"])?;
    let (t, v) = (&cols[0], cols[1].clone());
    if t.len() < 2 {
        return Err(CliError::runtime(format!(
            "{}: a series needs at least 2 samples, got {}",
            path.display(),
            t.len()
        )));
    }
    let n = t.len();
    let t0 = t[0];
    let dt = (t[n - 1] - t0) / (n - 1) as f64;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::runtime(format!(
            "{}: time column must be strictly increasing",
            path.display()
        )));
    }
    let span = (t[n - 1] - t0).abs().max(1.0);
    for (i, &ti) in t.iter().enumerate() {
        let expect = t0 + i as f64 * dt;
        if (ti - expect).abs() > 1e-9 * span {
            return Err(CliError::runtime(format!(
                "{}: time column is not uniformly spaced (row {}: {ti} vs expected {expect})",
                path.display(),
                i + 2
            )));
        }
    }
    Ok(SeriesGrid::new(t0, dt, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_kinds_are_policed_per_kind() {
        let raw = RawConfig::parse(
            "[series]\nkind=gegenbauer\nn=16\nu=0.3\nd=0.2\nsigma_eps=1.0\ns0=2.0\n[run]\nseed=1\n",
        )
        .unwrap();
        let mut resolved = ResolvedConfig::new();
        let err = build_series(&raw, &mut resolved).unwrap_err();
        assert_eq!(err.exit_code, 2);
        assert!(err.message.contains("s0"), "{}", err.message);
        assert!(err.message.contains("gegenbauer"), "{}", err.message);
    }

    #[test]
    fn gegenbauer_series_is_deterministic_and_relabels_t0() {
        let text = "[series]\nkind=gegenbauer\nn=32\nt0=-8\nu=0.3\nd=0.2\nsigma_eps=1.0\n\
                    [run]\nseed=77\n";
        let raw = RawConfig::parse(text).unwrap();
        let mut r1 = ResolvedConfig::new();
        let b1 = build_series(&raw, &mut r1).unwrap();
        let mut r2 = ResolvedConfig::new();
        let b2 = build_series(&raw, &mut r2).unwrap();
        assert_eq!(b1.grid.values(), b2.grid.values());
        assert_eq!(b1.grid.t0(), -8.0);
        assert_eq!(b1.grid.dt(), 1.0);
        assert_eq!(r1.text(), r2.text());

        // The resolved echo parses back to the same series.
        let raw_again = RawConfig::parse(&r1.text()).unwrap();
        let mut r3 = ResolvedConfig::new();
        let b3 = build_series(&raw_again, &mut r3).unwrap();
        assert_eq!(b1.grid.values(), b3.grid.values());
        assert_eq!(r1.text(), r3.text());
    }

    #[test]
    fn spectral_series_fills_band_default_and_echoes_it() {
        let text = "[series]\nkind=spectral\nn=64\ns0=2.0\nalpha=0.25\ndt=0.5\n[run]\nseed=5\n";
        let raw = RawConfig::parse(text).unwrap();
        let mut resolved = ResolvedConfig::new();
        let built = build_series(&raw, &mut resolved).unwrap();
        assert_eq!(built.grid.n(), 64);
        assert_eq!(built.grid.dt(), 0.5);
        // band defaults to max(2 s0, s0 + 1) = 4.
        assert!(resolved.text().contains("band=4.0000000000000000e0"));
    }

    #[test]
    fn scheme_parsing_applies_the_default_cap_and_supports_none() {
        let raw = RawConfig::parse(
            "[scheme]\nj_min=3\na=8,16,32\ngamma=8,16,32\nm=64,64,64\nc=1\n",
        )
        .unwrap();
        let sc = scheme_from(&raw).unwrap();
        assert_eq!(sc.m_cap, Some(DEFAULT_M_CAP));
        assert_eq!(sc.scheme.j_min(), 3);
        assert_eq!(sc.scheme.j_max(), 5);

        let raw = RawConfig::parse(
            "[scheme]\nj_min=3\na=8,16,32\ngamma=8,16,32\nm=64,64,64\nc=1\nm_cap=none\n",
        )
        .unwrap();
        assert_eq!(scheme_from(&raw).unwrap().m_cap, None);

        let raw = RawConfig::parse(
            "[scheme]\nj_min=3\na=8,16,32\ngamma=8,16,32\nm=64,64,64\nc=1\nm_cap=512\n",
        )
        .unwrap();
        assert_eq!(scheme_from(&raw).unwrap().m_cap, Some(512));
    }

    #[test]
    fn series_csv_round_trips_through_write_and_read() {
        let dir = std::env::temp_dir().join(format!("cyclm-series-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = SeriesGrid::new(-3.5, 0.25, (0..40).map(|i| (i as f64).cos()).collect()).unwrap();
        let mut artifacts = Vec::new();
        write_series_csv(&dir, "series.csv", &grid, &mut artifacts).unwrap();
        assert_eq!(artifacts, vec!["series.csv"]);

        let back = read_series_csv(&dir.join("series.csv")).unwrap();
        assert_eq!(back.t0(), -3.5);
        assert!((back.dt() - 0.25).abs() < 1e-12);
        assert_eq!(back.values(), grid.values());
        std::fs::remove_dir_all(&dir).ok();
    }
}
