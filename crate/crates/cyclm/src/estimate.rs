//! Method-of-moments inversion of the first two transform moments.
//!
//! The pipeline here is: form the mean-square statistic δ̄ of a coefficient
//! block and the rescaled increment statistic Δδ̄ across two finer levels,
//! normalize them by the filter constants L0 = ∫|ψ̂|² and L2 = ∫η²|ψ̂|² to a
//! moment pair (y₁, y₂), truncate the pair into the feasible region
//! 𝒟 = {0 < y₁ < 1, 0 < y₂ < y₁²/2}, and invert the moment map
//! Φ(s₀, α) = (s₀^{−4α}, α·s₀^{−4α−2}) through the principal Lambert-W branch
//! to obtain (ŝ₀, α̂) together with its asymptotic covariance matrix.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{i_of_c, Filter, FilterKind};
use crate::spectral::ModelParams;
use crate::transform::CoefficientBlock;

/// Raw normalized moment pair (δ̄/L0, Δδ̄/(2·L2)) before truncation.
///
/// Components must be finite but are otherwise unconstrained: the pair is
/// whatever the data produced, and only the truncation step forces it into
/// the feasible region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPoint {
    pub y1: f64,
    pub y2: f64,
}

impl MomentPoint {
    pub fn new(y1: f64, y2: f64) -> Result<Self> {
        if !y1.is_finite() || !y2.is_finite() {
            return Err(Error::Domain(format!(
                "moment point components must be finite, got ({y1}, {y2})"
            )));
        }
        Ok(Self { y1, y2 })
    }
}

/// A point of the feasible region 𝒟 = {0 < y₁ < 1, 0 < y₂ < y₁²/2}, the
/// exact image of the admissible parameter rectangle under the moment map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasiblePoint {
    y1: f64,
    y2: f64,
}

impl FeasiblePoint {
    pub fn new(y1: f64, y2: f64) -> Result<Self> {
        if !y1.is_finite() || !y2.is_finite() {
            return Err(Error::Domain(format!(
                "feasible point components must be finite, got ({y1}, {y2})"
            )));
        }
        if !(y1 > 0.0 && y1 < 1.0) {
            return Err(Error::Domain(format!(
                "first moment coordinate must lie strictly in (0, 1), got {y1}"
            )));
        }
        if !(y2 > 0.0 && y2 < y1 * y1 / 2.0) {
            return Err(Error::Domain(format!(
                "second moment coordinate must lie strictly in (0, y1²/2) = (0, {}), got {y2}",
                y1 * y1 / 2.0
            )));
        }
        Ok(Self { y1, y2 })
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }
}

/// Result of applying the truncation map 𝒯(·, ·, eps) to a raw moment pair.
#[derive(Debug, Clone, Copy)]
pub struct Truncation {
    /// The truncated point, always strictly inside the feasible region.
    pub point: FeasiblePoint,
    /// True when the truncation moved the input (any coordinate clamped).
    pub active: bool,
    /// True when a clamp band was empty (upper bound strictly below lower)
    /// and the lower bound was returned. Unreachable for eps ≤ 1/2; for
    /// eps ∈ (1/2, 1) the y₁ band [eps, 1−eps] is inverted and this fires.
    pub degenerate: bool,
}

/// Full record of one adjusted estimate: inputs, intermediate moment pair,
/// truncation outcome, parameter estimates, and plug-in covariance.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    /// Mean-square statistic δ̄ at the coarse level (recorded verbatim, even
    /// when a pathological input was negative).
    pub delta_bar: f64,
    /// Rescaled increment statistic Δδ̄ across the two finer levels.
    pub delta_incr: f64,
    /// Raw normalized first moment δ̄/L0.
    pub y1: f64,
    /// Raw normalized second moment Δδ̄/(2·L2).
    pub y2: f64,
    /// Truncation level, min(1/m, 1/2).
    pub eps: f64,
    pub truncated_y1: f64,
    pub truncated_y2: f64,
    pub truncation_active: bool,
    pub truncation_degenerate: bool,
    pub s0_hat: f64,
    pub alpha_hat: f64,
    /// Asymptotic covariance of √m·((ŝ₀, α̂) − (s₀, α)), row-major.
    #[serde(rename = "V")]
    pub v: [f64; 4],
    /// Number of coefficients behind δ̄.
    pub m_j: u64,
    /// Number of coefficients behind each level of Δδ̄.
    #[serde(rename = "M_j")]
    pub m_big: u64,
}

impl EstimateReport {
    pub fn moment(&self) -> MomentPoint {
        MomentPoint {
            y1: self.y1,
            y2: self.y2,
        }
    }

    pub fn truncated(&self) -> FeasiblePoint {
        FeasiblePoint::new(self.truncated_y1, self.truncated_y2)
            .expect("a stored truncation outcome is always strictly feasible")
    }
}

/// Mean of the squared coefficients, δ̄ = (1/m)·Σ_k δ_k².
pub fn mean_square_stat(block: &CoefficientBlock) -> f64 {
    let v = block.values();
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Rescaled difference of two mean-square statistics at scales a_j1 < a_j2:
/// (δ̄_{j1} − δ̄_{j2}) / (a_{j1}^{−2} − a_{j2}^{−2}).
pub fn increment_stat(dbar_j1: f64, dbar_j2: f64, a_j1: f64, a_j2: f64) -> Result<f64> {
    if !dbar_j1.is_finite() || !dbar_j2.is_finite() {
        return Err(Error::Domain(format!(
            "mean-square statistics must be finite, got ({dbar_j1}, {dbar_j2})"
        )));
    }
    if !(a_j1 > 0.0 && a_j1.is_finite() && a_j2 > 0.0 && a_j2.is_finite()) {
        return Err(Error::Domain(format!(
            "scales must be positive and finite, got ({a_j1}, {a_j2})"
        )));
    }
    let denom = a_j1.powi(-2) - a_j2.powi(-2);
    if denom == 0.0 {
        return Err(Error::Domain(format!(
            "equal scales a = {a_j1} give a degenerate increment denominator"
        )));
    }
    Ok((dbar_j1 - dbar_j2) / denom)
}

/// Centered and √m-scaled versions of the two statistics:
/// S1 = √m·(δ̄/L0 − s₀^{−4α}) and S2 = √m·(Δδ̄/(2L2) − α·s₀^{−4α−2}).
pub fn normalized_stats(
    dbar: f64,
    dincr: f64,
    filter: &Filter,
    m: u64,
    truth: &ModelParams,
) -> (f64, f64) {
    let target = phi(truth.s0(), truth.alpha())
        .expect("model parameters always lie in the admissible rectangle");
    let rm = (m as f64).sqrt();
    (
        rm * (dbar / filter.l0() - target.y1),
        rm * (dincr / (2.0 * filter.l2()) - target.y2),
    )
}

fn check_parameter_rectangle(s0: f64, alpha: f64) -> Result<()> {
    if !(s0 > 1.0 && s0.is_finite()) {
        return Err(Error::Domain(format!(
            "singularity location must satisfy s0 > 1, got {s0}"
        )));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Domain(format!(
            "memory exponent must lie in (0, 1/2), got {alpha}"
        )));
    }
    Ok(())
}

/// The moment map Φ(s₀, α) = (s₀^{−4α}, α·s₀^{−4α−2}); its image is exactly
/// the feasible region 𝒟.
pub fn phi(s0: f64, alpha: f64) -> Result<MomentPoint> {
    check_parameter_rectangle(s0, alpha)?;
    Ok(MomentPoint {
        y1: s0.powf(-4.0 * alpha),
        y2: alpha * s0.powf(-4.0 * alpha - 2.0),
    })
}

/// Principal branch W₀ of the Lambert W function: the solution w ≥ −1 of
/// w·eʷ = y for y ≥ −1/e.
///
/// Halley iteration (at most 50 steps) from a piecewise initial guess:
/// a branch-point series within 1e−3 of −1/e, ln(1+y) up to y = e, and
/// ln y − ln ln y beyond. The result satisfies
/// |w·eʷ − y| ≤ 1e−12·max(1, |y|).
pub fn lambert_w0(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("Lambert W argument must be finite, got {y}")));
    }
    let neg_inv_e = -(-1.0f64).exp();
    if y < neg_inv_e {
        return Err(Error::Domain(format!(
            "Lambert W₀ requires y ≥ −1/e ≈ {neg_inv_e}, got {y}"
        )));
    }
    let mut w = if y - neg_inv_e < 1e-3 {
        // series in p = √(2(e·y + 1)) around the branch point w = −1
        let p = (2.0 * (E * y + 1.0)).max(0.0).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * 43.0 / 540.0)))
    } else if y < E {
        (1.0 + y).ln()
    } else {
        let l = y.ln();
        l - l.ln()
    };
    let tol = 1e-13 * y.abs().max(1.0);
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - y;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        w = (w - f / denom).max(-1.0);
        if !w.is_finite() {
            break;
        }
    }
    let resid = (w * w.exp() - y).abs();
    if !w.is_finite() || resid > 1e-12 * y.abs().max(1.0) {
        return Err(Error::Quadrature(format!(
            "Lambert W iteration did not meet tolerance at y = {y} (residual {resid})"
        )));
    }
    Ok(w.max(-1.0))
}

/// Inverse of the moment map on the feasible region:
/// s₀ = exp(½·W(q)), α = (y₂/y₁)·exp(W(q)) with q = −y₁·ln(y₁)/(2y₂).
///
/// The output always lies in (1, ∞) × (0, ½).
pub fn phi_inverse(p: FeasiblePoint) -> (f64, f64) {
    let q = -p.y1() * p.y1().ln() / (2.0 * p.y2());
    // inside the feasible region y1 ∈ (0,1) forces q > 0 > −1/e
    let w = lambert_w0(q).expect("Lambert argument is positive on the feasible region");
    let ew = w.exp();
    (ew.sqrt(), p.y2() / p.y1() * ew)
}

/// Truncation map 𝒯 into the feasible region: clamps y₁ to [eps, 1−eps],
/// then y₂ to [eps²/4, 𝒯₁²/2 − eps²/4]. When a band is empty (upper bound
/// strictly below lower), the lower bound is used and the outcome is flagged
/// degenerate. Idempotent, and the output is always strictly feasible.
pub fn truncate_t(y1: f64, y2: f64, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!(
            "truncation level must lie strictly in (0, 1), got {eps}"
        )));
    }
    if !y1.is_finite() || !y2.is_finite() {
        return Err(Error::Domain(format!(
            "moment pair must be finite before truncation, got ({y1}, {y2})"
        )));
    }
    let mut degenerate = false;
    let (lo1, hi1) = (eps, 1.0 - eps);
    let t1 = if hi1 < lo1 {
        degenerate = true;
        lo1
    } else {
        y1.clamp(lo1, hi1)
    };
    let lo2 = eps * eps / 4.0;
    let hi2 = t1 * t1 / 2.0 - lo2;
    let t2 = if hi2 < lo2 {
        degenerate = true;
        lo2
    } else {
        y2.clamp(lo2, hi2)
    };
    let point = FeasiblePoint::new(t1, t2)
        .expect("truncation output is strictly feasible for every eps in (0, 1)");
    Ok(Truncation {
        point,
        active: t1 != y1 || t2 != y2,
        degenerate,
    })
}

/// Guard above which eps = 1/m falls below the resolution at which the
/// moment-map inversion can keep the open-set invariants strict.
const MAX_MEAN_SQUARE_COUNT: u64 = 1 << 45;

/// Full adjusted estimate from the two statistics: normalizes by the filter
/// constants, truncates with eps = min(1/m, 1/2), inverts the moment map,
/// and attaches the asymptotic covariance.
///
/// The covariance is evaluated at the estimate (plug-in) unless `v_at`
/// supplies a parameter pair to evaluate at, as in simulation studies where
/// the truth is known. `c` is the configured limiting shift ratio γ_j/a_j of
/// the level scheme, and `m_big` is the per-level coefficient count behind
/// `dincr` (recorded in the report).
pub fn adjusted_estimate(
    dbar: f64,
    dincr: f64,
    filter: &Filter,
    m: u64,
    m_big: u64,
    c: f64,
    v_at: Option<(f64, f64)>,
) -> Result<EstimateReport> {
    if m == 0 || m_big == 0 {
        return Err(Error::Config(
            "coefficient counts m and M must be at least 1".into(),
        ));
    }
    if m > MAX_MEAN_SQUARE_COUNT {
        return Err(Error::Config(format!(
            "coefficient count m = {m} exceeds {MAX_MEAN_SQUARE_COUNT}; eps = 1/m would \
             underflow the feasibility margins"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!(
            "limiting shift ratio c must be positive and finite, got {c}"
        )));
    }
    if !dbar.is_finite() || !dincr.is_finite() {
        return Err(Error::Domain(format!(
            "statistics must be finite, got δ̄ = {dbar}, Δδ̄ = {dincr}"
        )));
    }
    let y1 = dbar / filter.l0();
    let y2 = dincr / (2.0 * filter.l2());
    let eps = (1.0 / m as f64).min(0.5);
    let tr = truncate_t(y1, y2, eps)?;
    let (s0_hat, alpha_hat) = phi_inverse(tr.point);
    assert!(
        s0_hat > 1.0 && alpha_hat > 0.0 && alpha_hat < 0.5,
        "moment-map inversion left the parameter rectangle: ({s0_hat}, {alpha_hat})"
    );
    let (vs, va) = v_at.unwrap_or((s0_hat, alpha_hat));
    let v = asymptotic_covariance(vs, va, filter, c)?;
    assert!(
        v[0] > 0.0 && v[3] > 0.0 && v[1] == v[2] && v[0] * v[3] - v[1] * v[2] >= -1e-10 * v[0] * v[3],
        "asymptotic covariance is not a valid symmetric matrix: {v:?}"
    );
    Ok(EstimateReport {
        delta_bar: dbar,
        delta_incr: dincr,
        y1,
        y2,
        eps,
        truncated_y1: tr.point.y1(),
        truncated_y2: tr.point.y2(),
        truncation_active: tr.active,
        truncation_degenerate: tr.degenerate,
        s0_hat,
        alpha_hat,
        v,
        m_j: m,
        m_big,
    })
}

/// Limiting variance 𝒱₁ = 4cπ·s₀^{−8α}·I(c) of the quadratic functional
/// Σδ²/√m, where I(c) is the filter's periodized-energy integral.
pub fn asymptotic_v1(model: &ModelParams, filter: &Filter, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "shift ratio c must be positive and finite, got {c}"
        )));
    }
    let ic = i_of_c(filter, c)?;
    Ok(4.0 * c * PI * model.s0().powf(-8.0 * model.alpha()) * ic)
}

/// Asymptotic covariance V of √m·((ŝ₀, α̂) − (s₀, α)), row-major, via the
/// explicit closed form: with g = 1 − 4α·ln s₀ and the common prefactor
/// P = cπ·s₀²·I(c)/(4α²(1 + 2·ln s₀)²),
///
/// V₁₁ = P·(g²/L0² + 8·s₀⁴·ln²s₀/L2²),
/// V₁₂ = P·(g·α(4α+2)/(s₀·L0²) − 8α·s₀³·ln s₀/L2²),
/// V₂₂ = P·(α²(4α+2)²/(s₀²·L0²) + 8α²·s₀²/L2²).
pub fn asymptotic_covariance(s0: f64, alpha: f64, filter: &Filter, c: f64) -> Result<[f64; 4]> {
    check_parameter_rectangle(s0, alpha)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "shift ratio c must be positive and finite, got {c}"
        )));
    }
    let ic = i_of_c(filter, c)?;
    let (l0, l2) = (filter.l0(), filter.l2());
    let ln_s = s0.ln();
    let pref = c * PI * s0 * s0 * ic / (4.0 * alpha * alpha * (1.0 + 2.0 * ln_s).powi(2));
    let inv_l0_sq = 1.0 / (l0 * l0);
    let inv_l2_sq = 1.0 / (l2 * l2);
    let g = 1.0 - 4.0 * alpha * ln_s;
    let v11 = g * g * inv_l0_sq + 8.0 * s0.powi(4) * ln_s * ln_s * inv_l2_sq;
    let v12 = g * alpha * (4.0 * alpha + 2.0) / s0 * inv_l0_sq
        - 8.0 * alpha * s0.powi(3) * ln_s * inv_l2_sq;
    let v22 = alpha * alpha * (4.0 * alpha + 2.0).powi(2) / (s0 * s0) * inv_l0_sq
        + 8.0 * alpha * alpha * s0 * s0 * inv_l2_sq;
    Ok([pref * v11, pref * v12, pref * v12, pref * v22])
}

/// Same covariance through the delta-method route: conjugate the diagonal
/// moment-statistic covariance 𝒱₁·diag(1/L0², 1/(2L2²)) by the numerically
/// inverted Jacobian of the moment map. Kept as an independent cross-check
/// of [`asymptotic_covariance`]; the two must agree to rounding error.
pub fn asymptotic_covariance_via_jacobian(
    s0: f64,
    alpha: f64,
    filter: &Filter,
    c: f64,
) -> Result<[f64; 4]> {
    let dphi = jacobian_phi(s0, alpha)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "shift ratio c must be positive and finite, got {c}"
        )));
    }
    let det = dphi[0] * dphi[3] - dphi[1] * dphi[2];
    let inv = [dphi[3] / det, -dphi[1] / det, -dphi[2] / det, dphi[0] / det];
    let ic = i_of_c(filter, c)?;
    let v1 = 4.0 * c * PI * s0.powf(-8.0 * alpha) * ic;
    let (l0, l2) = (filter.l0(), filter.l2());
    let d0 = v1 / (l0 * l0);
    let d1 = v1 / (2.0 * l2 * l2);
    let v12 = inv[0] * inv[2] * d0 + inv[1] * inv[3] * d1;
    Ok([
        inv[0] * inv[0] * d0 + inv[1] * inv[1] * d1,
        v12,
        v12,
        inv[2] * inv[2] * d0 + inv[3] * inv[3] * d1,
    ])
}

/// Correlation ρ = V₁₂/√(V₁₁·V₂₂) of the two components of the asymptotic
/// estimator distribution. For the flat unit band filter the value is also
/// evaluated through the fully expanded formula (constants 1/(4π²) = 1/L0²
/// and 18/π⁶ = 8/L2²) and the two routes are asserted to agree.
pub fn asymptotic_correlation(s0: f64, alpha: f64, filter: &Filter, c: f64) -> Result<f64> {
    let v = asymptotic_covariance(s0, alpha, filter, c)?;
    let rho = v[1] / (v[0] * v[3]).sqrt();
    if matches!(filter.kind(), FilterKind::Shannon) {
        let explicit = shannon_correlation_explicit(s0, alpha);
        assert!(
            (rho - explicit).abs() <= 1e-9 * rho.abs().max(1.0),
            "matrix-derived correlation {rho} disagrees with the explicit flat-band \
             formula {explicit} at (s0, alpha) = ({s0}, {alpha})"
        );
    }
    Ok(rho)
}

/// Expanded flat-band correlation: the prefactor P and the c-dependence
/// cancel in ρ, leaving only the filter constants L0 = 2π and L2 = 2π³/3,
/// i.e. 1/L0² = 1/(4π²) and 8/L2² = 18/π⁶.
fn shannon_correlation_explicit(s0: f64, alpha: f64) -> f64 {
    let c0 = 1.0 / (4.0 * PI * PI);
    let c2 = 18.0 / PI.powi(6);
    let ln_s = s0.ln();
    let g = 1.0 - 4.0 * alpha * ln_s;
    let num = c0 * g * alpha * (4.0 * alpha + 2.0) / s0 - c2 * alpha * s0.powi(3) * ln_s;
    let d1 = c0 * g * g + c2 * s0.powi(4) * ln_s * ln_s;
    let d2 = c0 * alpha * alpha * (4.0 * alpha + 2.0).powi(2) / (s0 * s0)
        + c2 * alpha * alpha * s0 * s0;
    num / (d1 * d2).sqrt()
}

/// Jacobian of the moment map, row-major:
/// DΦ = s₀^{−4α−2}·[−4αs₀, −4s₀²ln s₀; α(−4α−2)/s₀, 1 − 4α·ln s₀].
pub fn jacobian_phi(s0: f64, alpha: f64) -> Result<[f64; 4]> {
    check_parameter_rectangle(s0, alpha)?;
    let pref = s0.powf(-4.0 * alpha - 2.0);
    let ln_s = s0.ln();
    Ok([
        pref * (-4.0 * alpha * s0),
        pref * (-4.0 * s0 * s0 * ln_s),
        pref * alpha * (-4.0 * alpha - 2.0) / s0,
        pref * (1.0 - 4.0 * alpha * ln_s),
    ])
}

/// Closed-form determinant of the moment-map Jacobian,
/// −4α·s₀^{−8α−3}·(1 + 2·ln s₀); strictly negative on the whole rectangle.
pub fn jacobian_phi_det(s0: f64, alpha: f64) -> Result<f64> {
    check_parameter_rectangle(s0, alpha)?;
    Ok(-4.0 * alpha * s0.powf(-8.0 * alpha - 3.0) * (1.0 + 2.0 * s0.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{meyer_filter, mexican_hat_filter, shannon_filter};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn feasible_grid() -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for i in 0..10 {
            for k in 0..9 {
                let s0 = 1.1 + 3.9 * i as f64 / 9.0;
                let alpha = 0.05 + 0.4 * k as f64 / 8.0;
                pts.push((s0, alpha));
            }
        }
        pts
    }

    #[test]
    fn moment_and_feasible_point_validation() {
        assert!(MomentPoint::new(-3.0, 7.0).is_ok());
        assert!(MomentPoint::new(f64::NAN, 0.1).is_err());
        assert!(MomentPoint::new(0.1, f64::INFINITY).is_err());

        assert!(FeasiblePoint::new(0.5, 0.1).is_ok());
        // boundary y2 = y1²/2 is excluded
        assert!(FeasiblePoint::new(0.5, 0.125).is_err());
        assert!(FeasiblePoint::new(0.0, 0.1).is_err());
        assert!(FeasiblePoint::new(1.0, 0.1).is_err());
        assert!(FeasiblePoint::new(0.5, 0.0).is_err());
        assert!(FeasiblePoint::new(0.5, -0.01).is_err());
    }

    #[test]
    fn mean_square_stat_examples() {
        use crate::transform::CoefficientSource;
        let zero =
            CoefficientBlock::new(0, 2.0, 2.0, vec![0.0; 8], CoefficientSource::SeriesDiscretized)
                .unwrap();
        assert_eq!(mean_square_stat(&zero), 0.0);
        let b = CoefficientBlock::new(
            0,
            2.0,
            2.0,
            vec![1.0, -1.0, 2.0],
            CoefficientSource::SeriesDiscretized,
        )
        .unwrap();
        assert_eq!(mean_square_stat(&b), 2.0);
    }

    #[test]
    fn increment_stat_examples() {
        assert_eq!(increment_stat(0.7, 0.7, 2.0, 4.0).unwrap(), 0.0);
        let v = increment_stat(0.8, 0.5, 2.0, 4.0).unwrap();
        assert!((v - 1.6).abs() < 1e-14, "0.3/(1/4 - 1/16) = 1.6, got {v}");
        assert!(increment_stat(0.8, 0.5, 3.0, 3.0).is_err());
        assert!(increment_stat(0.8, 0.5, 0.0, 3.0).is_err());
        assert!(increment_stat(0.8, 0.5, -1.0, 3.0).is_err());
        assert!(increment_stat(f64::NAN, 0.5, 2.0, 4.0).is_err());
    }

    #[test]
    fn normalized_stats_center_at_the_targets() {
        let f = shannon_filter();
        let p = ModelParams::new(2.0, 0.25).unwrap();
        let t = phi(2.0, 0.25).unwrap();
        let (s1, s2) = normalized_stats(t.y1 * f.l0(), t.y2 * 2.0 * f.l2(), &f, 4096, &p);
        assert!(s1.abs() < 1e-12, "centered first statistic should vanish, got {s1}");
        assert!(s2.abs() < 1e-12, "centered second statistic should vanish, got {s2}");
        let (s1, _) = normalized_stats(t.y1 * f.l0() + 0.1, 0.0, &f, 100, &p);
        assert!((s1 - 10.0 * 0.1 / f.l0()).abs() < 1e-12);
    }

    #[test]
    fn phi_examples_and_domain() {
        let p = phi(2.0, 0.25).unwrap();
        assert!((p.y1 - 0.5).abs() < 1e-15);
        assert!((p.y2 - 0.03125).abs() < 1e-15);
        // the image always satisfies the feasibility constraints
        for &(s0, alpha) in &feasible_grid() {
            let p = phi(s0, alpha).unwrap();
            assert!(p.y1 > 0.0 && p.y1 < 1.0);
            assert!(p.y2 > 0.0 && p.y2 < p.y1 * p.y1 / 2.0);
        }
        // boundary approach as alpha → 0⁺: y1 → 1⁻ from inside, y2 → 0⁺
        let p = phi(2.0, 1e-9).unwrap();
        assert!(p.y1 < 1.0 && p.y1 > 1.0 - 1e-7);
        assert!(p.y2 > 0.0 && p.y2 < 1e-9);
        assert!(phi(1.0, 0.25).is_err());
        assert!(phi(0.9, 0.25).is_err());
        assert!(phi(2.0, 0.0).is_err());
        assert!(phi(2.0, 0.5).is_err());
        assert!(phi(f64::INFINITY, 0.25).is_err());
    }

    #[test]
    fn lambert_w_known_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_eq!(lambert_w0(std::f64::consts::E).unwrap(), 1.0);
        let w = lambert_w0(-(-1.0f64).exp()).unwrap();
        assert!((w + 1.0).abs() < 1e-6, "branch point should give −1, got {w}");
        assert!(w >= -1.0);
        // the inversion example: W(5.545177444479562) = 2·ln 2
        let w = lambert_w0(5.545177444479562).unwrap();
        assert!((w - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        // Omega constant
        let w = lambert_w0(1.0).unwrap();
        assert!((w - 0.5671432904097838).abs() < 1e-12);
        assert!(lambert_w0(-0.4).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_w_residual_on_log_grid() {
        // log-spaced offsets from the branch point up to 1e8
        let n = 100_000;
        let lo = 1e-12f64;
        let hi = 1e8 + 1.0 / std::f64::consts::E;
        let neg_inv_e = -(-1.0f64).exp();
        for i in 0..n {
            let t = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let y = neg_inv_e + t;
            let w = lambert_w0(y).unwrap();
            let resid = (w * w.exp() - y).abs();
            assert!(
                resid <= 1e-12 * y.abs().max(1.0),
                "residual {resid} too large at y = {y}"
            );
            assert!(w >= -1.0);
        }
    }

    #[test]
    fn phi_inverse_round_trips() {
        let p = FeasiblePoint::new(0.5, 0.03125).unwrap();
        let (s0, alpha) = phi_inverse(p);
        assert!((s0 - 2.0).abs() < 1e-9);
        assert!((alpha - 0.25).abs() < 1e-9);
        for &(s0, alpha) in &feasible_grid() {
            let m = phi(s0, alpha).unwrap();
            let (s0_hat, alpha_hat) =
                phi_inverse(FeasiblePoint::new(m.y1, m.y2).unwrap());
            assert!(
                (s0_hat - s0).abs() < 1e-9 * s0,
                "s0 round trip failed at ({s0}, {alpha}): {s0_hat}"
            );
            assert!(
                (alpha_hat - alpha).abs() < 1e-9,
                "alpha round trip failed at ({s0}, {alpha}): {alpha_hat}"
            );
        }
        // forward round trip on feasible points with relative margin 1e−3,
        // plus the alpha = −ln(y1)/(2W) identity as an independent route
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..200 {
            let y1 = 1e-3 + (1.0 - 2e-3) * rng.gen::<f64>();
            let cap = y1 * y1 / 2.0;
            let y2 = cap * (1e-3 + (1.0 - 2e-3) * rng.gen::<f64>());
            let p = FeasiblePoint::new(y1, y2).unwrap();
            let (s0, alpha) = phi_inverse(p);
            let q = phi(s0, alpha).unwrap();
            assert!((q.y1 - y1).abs() < 1e-9 * y1);
            assert!((q.y2 - y2).abs() < 1e-9 * y2);
            let w = lambert_w0(-y1 * y1.ln() / (2.0 * y2)).unwrap();
            assert!((alpha - (-y1.ln() / (2.0 * w))).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_inverse_range_on_random_feasible_points() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let y1 = (rng.gen::<f64>() * (1.0 - 2e-9) + 1e-9).min(1.0 - 1e-9);
            let cap = y1 * y1 / 2.0;
            let y2 = cap * (rng.gen::<f64>() * (1.0 - 2e-9) + 1e-9);
            let p = match FeasiblePoint::new(y1, y2) {
                Ok(p) => p,
                Err(_) => continue, // rounding pushed the draw onto a boundary
            };
            let (s0, alpha) = phi_inverse(p);
            assert!(s0 > 1.0 && s0.is_finite(), "s0 = {s0} out of range at {p:?}");
            assert!(alpha > 0.0 && alpha < 0.5, "alpha = {alpha} out of range at {p:?}");
        }
    }

    #[test]
    fn truncation_examples() {
        // interior point with margin: identity, nothing flagged
        let t = truncate_t(0.5, 0.05, 0.01).unwrap();
        assert_eq!((t.point.y1(), t.point.y2()), (0.5, 0.05));
        assert!(!t.active && !t.degenerate);
        // both coordinates clamped from below/band
        let t = truncate_t(-0.2, 0.1, 0.1).unwrap();
        assert!((t.point.y1() - 0.1).abs() < 1e-15);
        assert!((t.point.y2() - 0.0025).abs() < 1e-15);
        assert!(t.active && !t.degenerate);
        // y1 clamped from above, y2 already inside the band
        let t = truncate_t(1.5, 0.25, 0.1).unwrap();
        assert!((t.point.y1() - 0.9).abs() < 1e-15);
        assert!((t.point.y2() - 0.25).abs() < 1e-15);
        assert!(t.active && !t.degenerate);
        // eps outside (0,1)
        assert!(truncate_t(0.5, 0.05, 0.0).is_err());
        assert!(truncate_t(0.5, 0.05, 1.0).is_err());
        assert!(truncate_t(0.5, 0.05, f64::NAN).is_err());
        assert!(truncate_t(f64::NAN, 0.05, 0.1).is_err());
        // eps > 1/2 inverts the y1 band; lower bound returned and flagged
        let t = truncate_t(0.8, 0.1, 0.7).unwrap();
        assert_eq!(t.point.y1(), 0.7);
        assert!(t.degenerate);
        assert!(t.point.y2() > 0.0 && t.point.y2() < t.point.y1() * t.point.y1() / 2.0);
    }

    #[test]
    fn truncation_idempotent_and_never_degenerate_for_small_eps() {
        let ys = [-5.0, -0.2, 0.0, 1e-6, 0.3, 0.5, 0.999, 1.5, 10.0];
        let epss = [0.001, 0.01, 0.1, 0.3, 0.5];
        for &eps in &epss {
            for &y1 in &ys {
                for &y2 in &ys {
                    let t = truncate_t(y1, y2, eps).unwrap();
                    assert!(!t.degenerate, "degenerate at ({y1}, {y2}, {eps})");
                    let t2 = truncate_t(t.point.y1(), t.point.y2(), eps).unwrap();
                    assert_eq!(t.point.y1(), t2.point.y1(), "idempotence broke");
                    assert_eq!(t.point.y2(), t2.point.y2(), "idempotence broke");
                    assert!(!t2.active, "re-truncation must be the identity");
                }
            }
        }
    }

    #[test]
    fn adjusted_estimate_round_trip_and_clamp() {
        let f = shannon_filter();
        let target = phi(2.0, 0.25).unwrap();
        // noiseless inputs reproduce the parameters and leave truncation idle
        let r = adjusted_estimate(
            target.y1 * f.l0(),
            target.y2 * 2.0 * f.l2(),
            &f,
            100,
            1600,
            1.0,
            None,
        )
        .unwrap();
        assert!((r.s0_hat - 2.0).abs() < 1e-9);
        assert!((r.alpha_hat - 0.25).abs() < 1e-9);
        assert!(!r.truncation_active && !r.truncation_degenerate);
        assert_eq!(r.eps, 0.01);
        assert_eq!((r.m_j, r.m_big), (100, 1600));
        assert_eq!(r.v, asymptotic_covariance(r.s0_hat, r.alpha_hat, &f, 1.0).unwrap());
        let det = r.v[0] * r.v[3] - r.v[1] * r.v[2];
        assert!(r.v[0] > 0.0 && r.v[3] > 0.0 && det > 0.0);
        // pathological negative mean square: clamped to eps, still estimable
        let r = adjusted_estimate(-0.3, target.y2 * 2.0 * f.l2(), &f, 100, 1600, 1.0, None)
            .unwrap();
        assert!(r.truncation_active);
        assert_eq!(r.truncated_y1, 0.01);
        assert!(r.s0_hat > 1.0 && r.alpha_hat > 0.0 && r.alpha_hat < 0.5);
        // m = 1 forces eps = 1/2 (the largest usable truncation level)
        let r = adjusted_estimate(0.4 * f.l0(), 0.02 * 2.0 * f.l2(), &f, 1, 1, 1.0, None)
            .unwrap();
        assert_eq!(r.eps, 0.5);
        assert!(r.truncation_active);
        // covariance evaluated at supplied truth instead of the estimate
        let r = adjusted_estimate(
            target.y1 * f.l0() + 0.05,
            target.y2 * 2.0 * f.l2(),
            &f,
            100,
            1600,
            1.0,
            Some((2.0, 0.25)),
        )
        .unwrap();
        assert_eq!(r.v, asymptotic_covariance(2.0, 0.25, &f, 1.0).unwrap());
        // config errors
        assert!(adjusted_estimate(0.5, 0.1, &f, 0, 1, 1.0, None).is_err());
        assert!(adjusted_estimate(0.5, 0.1, &f, 4, 0, 1.0, None).is_err());
        assert!(adjusted_estimate(0.5, 0.1, &f, 4, 4, 0.0, None).is_err());
        assert!(adjusted_estimate(0.5, 0.1, &f, 1 << 50, 4, 1.0, None).is_err());
        assert!(adjusted_estimate(f64::NAN, 0.1, &f, 4, 4, 1.0, None).is_err());
    }

    #[test]
    fn estimate_report_serializes_with_stable_keys() {
        let f = shannon_filter();
        let target = phi(2.0, 0.25).unwrap();
        let r = adjusted_estimate(
            target.y1 * f.l0(),
            target.y2 * 2.0 * f.l2(),
            &f,
            100,
            1600,
            1.0,
            None,
        )
        .unwrap();
        let json = serde_json::to_value(&r).unwrap();
        let obj = json.as_object().unwrap();
        for key in [
            "delta_bar",
            "delta_incr",
            "y1",
            "y2",
            "eps",
            "truncated_y1",
            "truncated_y2",
            "truncation_active",
            "truncation_degenerate",
            "s0_hat",
            "alpha_hat",
            "V",
            "m_j",
            "M_j",
        ] {
            assert!(obj.contains_key(key), "missing report key {key}");
        }
        assert_eq!(obj.len(), 14);
        assert_eq!(json["V"].as_array().unwrap().len(), 4);
        assert_eq!(json["m_j"], 100);
        assert_eq!(json["M_j"], 1600);
        // accessors reproduce the stored pairs
        assert_eq!(r.moment().y1, r.y1);
        assert_eq!(r.truncated().y2(), r.truncated_y2);
    }

    #[test]
    fn limiting_variance_examples() {
        let p = ModelParams::new(2.0, 0.25).unwrap();
        let v = asymptotic_v1(&p, &shannon_filter(), 1.0).unwrap();
        assert!(
            (v - 2.0 * PI * PI).abs() < 1e-10 * v,
            "flat band, c = 1: expected 2π², got {v}"
        );
        let v = asymptotic_v1(&p, &meyer_filter(), 2.0).unwrap();
        let expect = 11.0 * PI * PI / 3.0;
        assert!(
            (v - expect).abs() < 1e-9 * v,
            "smooth band, c = 2: expected 11π²/3, got {v}"
        );
        // strictly positive across parameters, filters, and shift ratios
        let mh = mexican_hat_filter(1.0).unwrap();
        for f in [&shannon_filter(), &meyer_filter(), &mh] {
            for &(s0, alpha) in &[(1.2, 0.05), (2.0, 0.25), (4.0, 0.45)] {
                for &c in &[0.4, 1.0, 2.0] {
                    let p = ModelParams::new(s0, alpha).unwrap();
                    let v = asymptotic_v1(&p, f, c).unwrap();
                    assert!(v > 0.0 && v.is_finite());
                }
            }
        }
        assert!(asymptotic_v1(&p, &shannon_filter(), 0.0).is_err());
    }

    #[test]
    fn covariance_closed_form_equals_jacobian_route() {
        let f = shannon_filter();
        for &(s0, alpha) in &feasible_grid() {
            let a = asymptotic_covariance(s0, alpha, &f, 1.0).unwrap();
            let b = asymptotic_covariance_via_jacobian(s0, alpha, &f, 1.0).unwrap();
            let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for k in 0..4 {
                assert!(
                    (a[k] - b[k]).abs() <= 1e-10 * scale,
                    "entry {k} disagrees at ({s0}, {alpha}): {} vs {}",
                    a[k],
                    b[k]
                );
            }
            assert_eq!(a[1], a[2]);
            assert!(a[0] > 0.0 && a[3] > 0.0);
            assert!(a[0] * a[3] - a[1] * a[2] > 0.0);
        }
        // cross-checks on the other filters at single points
        let m = meyer_filter();
        let a = asymptotic_covariance(2.0, 0.25, &m, 2.0).unwrap();
        let b = asymptotic_covariance_via_jacobian(2.0, 0.25, &m, 2.0).unwrap();
        let scale = a[0].abs().max(a[3].abs());
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() <= 1e-10 * scale);
        }
        let mh = mexican_hat_filter(1.0).unwrap();
        let a = asymptotic_covariance(1.5, 0.3, &mh, 0.8).unwrap();
        let b = asymptotic_covariance_via_jacobian(1.5, 0.3, &mh, 0.8).unwrap();
        let scale = a[0].abs().max(a[3].abs());
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn frozen_covariance_matrix_at_reference_point() {
        // independently computed from the closed form with I(1) = 2π,
        // L0 = 2π, L2 = 2π³/3
        let v = asymptotic_covariance(2.0, 0.25, &shannon_filter(), 1.0).unwrap();
        assert!((v[0] - 8.114910003231401).abs() < 1e-12 * v[0]);
        assert!((v[1] + 1.2779018640655253).abs() < 1e-12 * v[1].abs());
        assert!((v[3] - 0.4571686374398193).abs() < 1e-12 * v[3]);
    }

    #[test]
    fn correlation_behavior_and_frozen_values() {
        let f = shannon_filter();
        for &(s0, alpha) in &feasible_grid() {
            let rho = asymptotic_correlation(s0, alpha, &f, 1.0).unwrap();
            assert!(rho.abs() < 1.0, "correlation must be inside (−1, 1), got {rho}");
        }
        // components nearly collinear just above the singular scale s0 = 1,
        // decorrelating and flipping sign as s0 grows
        let near = asymptotic_correlation(1.05, 0.25, &f, 1.0).unwrap();
        let far = asymptotic_correlation(3.0, 0.25, &f, 1.0).unwrap();
        assert!(near > far);
        assert!((near - 0.937782445206).abs() < 1e-9);
        assert!((far + 0.936504533458).abs() < 1e-9);
        let sh = asymptotic_correlation(1.5, 0.25, &f, 1.0).unwrap();
        let me = asymptotic_correlation(1.5, 0.25, &meyer_filter(), 1.0).unwrap();
        assert!((sh - 0.075821022898).abs() < 1e-9);
        assert!((me - 0.132728718234).abs() < 1e-9);
        assert!(me > sh);
        // scale-free: the shift ratio c rescales V but cancels in ρ
        let r1 = asymptotic_correlation(2.0, 0.25, &f, 1.0).unwrap();
        let r2 = asymptotic_correlation(2.0, 0.25, &f, 0.5).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences_and_determinant() {
        let direct = |s0: f64, alpha: f64| {
            let j = jacobian_phi(s0, alpha).unwrap();
            j[0] * j[3] - j[1] * j[2]
        };
        let d = jacobian_phi_det(2.0, 0.25).unwrap();
        assert!((d - direct(2.0, 0.25)).abs() < 1e-12 * d.abs());
        for &(s0, alpha) in &[(1.2, 0.1), (1.5, 0.25), (2.0, 0.25), (3.0, 0.4), (4.5, 0.05)] {
            let j = jacobian_phi(s0, alpha).unwrap();
            let h = 1e-6;
            let fd = [
                (phi(s0 + h, alpha).unwrap().y1 - phi(s0 - h, alpha).unwrap().y1) / (2.0 * h),
                (phi(s0, alpha + h).unwrap().y1 - phi(s0, alpha - h).unwrap().y1) / (2.0 * h),
                (phi(s0 + h, alpha).unwrap().y2 - phi(s0 - h, alpha).unwrap().y2) / (2.0 * h),
                (phi(s0, alpha + h).unwrap().y2 - phi(s0, alpha - h).unwrap().y2) / (2.0 * h),
            ];
            for k in 0..4 {
                assert!(
                    (j[k] - fd[k]).abs() < 1e-5 * j[k].abs().max(1e-12),
                    "Jacobian entry {k} at ({s0}, {alpha}): {} vs finite difference {}",
                    j[k],
                    fd[k]
                );
            }
        }
        for &(s0, alpha) in &feasible_grid() {
            assert!(jacobian_phi_det(s0, alpha).unwrap().abs() > 0.0);
        }
    }

    proptest! {
        #[test]
        fn truncation_is_idempotent_and_feasible(
            y1 in -10.0f64..10.0,
            y2 in -10.0f64..10.0,
            eps in 1e-6f64..0.5,
        ) {
            let t = truncate_t(y1, y2, eps).unwrap();
            prop_assert!(t.point.y1() > 0.0 && t.point.y1() < 1.0);
            prop_assert!(t.point.y2() > 0.0 && t.point.y2() < t.point.y1() * t.point.y1() / 2.0);
            prop_assert!(!t.degenerate);
            let t2 = truncate_t(t.point.y1(), t.point.y2(), eps).unwrap();
            prop_assert_eq!(t.point.y1(), t2.point.y1());
            prop_assert_eq!(t.point.y2(), t2.point.y2());
            prop_assert!(!t2.active);
        }

        #[test]
        fn lambert_w_is_an_inverse_on_its_domain(
            t in 1e-10f64..1e8,
        ) {
            let y = -(-1.0f64).exp() + t;
            let w = lambert_w0(y).unwrap();
            prop_assert!(w >= -1.0);
            prop_assert!((w * w.exp() - y).abs() <= 1e-12 * y.abs().max(1.0));
        }

        #[test]
        fn moment_map_round_trips_through_its_inverse(
            s0 in 1.01f64..8.0,
            alpha in 0.01f64..0.49,
        ) {
            let p = phi(s0, alpha).unwrap();
            let (s0_hat, alpha_hat) = phi_inverse(FeasiblePoint::new(p.y1, p.y2).unwrap());
            prop_assert!((s0_hat - s0).abs() < 1e-8 * s0);
            prop_assert!((alpha_hat - alpha).abs() < 1e-8);
        }
    }
}
