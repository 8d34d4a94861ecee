//! `cyclm filters info <name>` — print a filter's spectral constants:
//! effective support, the two squared-transform moments L0 and L2, and the
//! periodized energy integral I(c) at a chosen shift ratio, compared
//! against the filter's reference values where available.

use cyclm::filters::{filter_by_name, i_of_c};
use serde::Serialize;

use crate::CliError;

const SUPPORT_TOL: f64 = 1e-8;
/// Relative tolerance for declaring a computed moment equal to its
/// reference value.
const AGREE_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct MomentCheck {
    computed: f64,
    reference: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct FilterInfo {
    name: String,
    /// Effective support of the transfer function (|psi_hat| above 1e-8).
    support: [f64; 2],
    #[serde(rename = "L0")]
    l0: f64,
    #[serde(rename = "L2")]
    l2: f64,
    c: f64,
    #[serde(rename = "I_of_c")]
    i_of_c: f64,
    #[serde(rename = "L0_check", skip_serializing_if = "Option::is_none")]
    l0_check: Option<MomentCheck>,
    #[serde(rename = "L2_check", skip_serializing_if = "Option::is_none")]
    l2_check: Option<MomentCheck>,
}

fn check(computed: f64, reference: f64) -> MomentCheck {
    MomentCheck {
        computed,
        reference,
        agrees: (computed - reference).abs() <= AGREE_TOL * reference.abs().max(1.0),
    }
}

pub fn run(name: &str, c: f64, json: bool) -> Result<String, CliError> {
    let filter = filter_by_name(name)?;
    let (lo, hi) = filter.effective_support(SUPPORT_TOL);
    let l0 = filter.l0();
    let l2 = filter.l2();
    let ic = i_of_c(&filter, c)?;
    let reference = filter.reference_moments();

    let info = FilterInfo {
        name: filter.name().to_string(),
        support: [lo, hi],
        l0,
        l2,
        c,
        i_of_c: ic,
        l0_check: reference.map(|(r0, _)| check(l0, r0)),
        l2_check: reference.map(|(_, r2)| check(l2, r2)),
    };

    if json {
        return serde_json::to_string_pretty(&info)
            .map_err(|e| CliError::runtime(format!("cannot serialize filter info: {e}")));
    }

    let verdict = |chk: &MomentCheck| {
        if chk.agrees {
            format!("reference {}  (agrees)", chk.reference)
        } else {
            format!("reference {}  (differs)", chk.reference)
        }
    };
    let mut lines = Vec::new();
    lines.push(format!("name     {}", info.name));
    lines.push(format!("support  [{lo}, {hi}]  (|psi_hat| above {SUPPORT_TOL})"));
    match &info.l0_check {
        Some(chk) => lines.push(format!("L0       {l0}  {}", verdict(chk))),
        None => lines.push(format!("L0       {l0}")),
    }
    match &info.l2_check {
        Some(chk) => lines.push(format!("L2       {l2}  {}", verdict(chk))),
        None => lines.push(format!("L2       {l2}")),
    }
    lines.push(format!("I(c)     {ic}  at c = {c}"));
    Ok(lines.join("\n"))
}
