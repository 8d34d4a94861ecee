//! Spectral model with a cyclic singularity, and the covariance integrals of
//! its filter coefficients.
//!
//! The process is Gaussian, stationary, zero-mean, with spectral density
//!
//! ```text
//!   f(λ) = h(λ) / |λ² − s₀²|^(2α),     s₀ > 1,  α ∈ (0, ½),
//! ```
//!
//! so the density diverges at the cycle frequencies ±s₀ (long memory around
//! a nonzero peak). The taper h is even, bounded, h(0) = 1, positive at ±s₀,
//! and flat to fourth order at the origin; the default is h(λ) = 1/(1 + λ⁶).
//!
//! Filter coefficients at scale `a` and shift spacing `γ` have covariances
//! expressed by the kernel integral
//!
//! ```text
//!   ℐ_ζ(x) = ∫ cos(ζη) |ψ̂(η)|² h(xη) (s₀² − x²η²)^(−2α) dη,
//! ```
//!
//! valid while the filter band, scaled by x = 1/a, stays strictly inside
//! (−s₀, s₀):  Var δ_k = ℐ₀(1/a) and Cov(δ_k, δ_l) = ℐ_{(b_k−b_l)/a}(1/a).
//!
//! As x → 0,
//!
//! ```text
//!   ℐ₀(x) = s₀^(−4α) [ L0 + 2α x² L2/s₀² + O(x⁴) ],
//! ```
//!
//! which is the expansion the moment estimator inverts: the leading term
//! pins s₀^(−4α) and the x² gap between consecutive scales pins α s₀^(−4α−2).

use crate::error::{Error, Result};
use crate::fft::{fft_in_place, next_pow2, C64};
use crate::filters::{Filter, SUPPORT_TOL};
use crate::quad;
use std::sync::Arc;

/// Shared closure type for spectral tapers h(λ).
pub type Taper = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The default taper 1/(1 + λ⁶): even, h(0) = 1, first four derivatives
/// vanish at 0, integrable tails.
pub fn default_taper(lambda: f64) -> f64 {
    1.0 / (1.0 + lambda.powi(6))
}

/// Model parameters: cycle frequency s₀ > 1, memory exponent α ∈ (0, ½),
/// and the spectral taper h.
#[derive(Clone)]
pub struct ModelParams {
    s0: f64,
    alpha: f64,
    taper: Taper,
    taper_label: String,
}

impl std::fmt::Debug for ModelParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelParams")
            .field("s0", &self.s0)
            .field("alpha", &self.alpha)
            .field("taper", &self.taper_label)
            .finish()
    }
}

impl ModelParams {
    /// Model with the default taper 1/(1 + λ⁶).
    pub fn new(s0: f64, alpha: f64) -> Result<Self> {
        Self::with_taper(s0, alpha, "default:1/(1+x^6)", Arc::new(default_taper))
    }

    /// Model with a caller-supplied taper. The label identifies the taper in
    /// manifests and cache keys; supply a distinct label per distinct taper.
    ///
    /// The taper is probed numerically at construction: h(0) = 1, h(±s₀) > 0
    /// and evenness at a few points; violations are domain errors.
    pub fn with_taper(s0: f64, alpha: f64, taper_label: &str, taper: Taper) -> Result<Self> {
        if !(s0 > 1.0 && s0.is_finite()) {
            return Err(Error::Domain(format!("s0 = {s0} must lie in (1, ∞)")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1/2)")));
        }
        let h0 = taper(0.0);
        if (h0 - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("taper must satisfy h(0) = 1, got {h0}")));
        }
        if !(taper(s0) > 0.0) {
            return Err(Error::Domain(format!(
                "taper must be positive at the cycle frequency: h({s0}) = {}",
                taper(s0)
            )));
        }
        for probe in [0.7, 1.9, 3.3] {
            let (hp, hm) = (taper(probe), taper(-probe));
            if (hp - hm).abs() > 1e-9 * hp.abs().max(1.0) {
                return Err(Error::Domain(format!(
                    "taper must be even: h({probe}) = {hp} vs h(−{probe}) = {hm}"
                )));
            }
        }
        Ok(ModelParams { s0, alpha, taper, taper_label: taper_label.to_string() })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn taper(&self, lambda: f64) -> f64 {
        (self.taper)(lambda)
    }

    pub fn taper_label(&self) -> &str {
        &self.taper_label
    }

    /// Stable fingerprint of (s₀, α, taper) for keying factor caches. The
    /// taper is identified by its label plus probed values, so two models
    /// with different closures but identical labels still separate as long
    /// as the closures differ on the probe grid.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
            h ^= h >> 29;
        };
        mix(self.s0.to_bits());
        mix(self.alpha.to_bits());
        for b in self.taper_label.as_bytes() {
            mix(*b as u64);
        }
        let mut probe = 0.37;
        for _ in 0..12 {
            mix(self.taper(probe).to_bits());
            probe = probe * 1.9 + 0.11;
        }
        h
    }
}

/// f(λ) = h(λ)/|λ² − s₀²|^(2α). Errors when evaluated exactly at the
/// singular frequencies ±s₀ (the density is +∞ there).
pub fn spectral_density(params: &ModelParams, lambda: f64) -> Result<f64> {
    let d = (lambda * lambda - params.s0 * params.s0).abs();
    if d == 0.0 {
        return Err(Error::Domain(format!(
            "spectral density is singular at λ = ±s₀ = ±{}",
            params.s0
        )));
    }
    Ok(params.taper(lambda) / d.powf(2.0 * params.alpha))
}

/// ∫_lo^hi f(λ) dλ, valid across the singular points ±s₀ (the substitution
/// rule in [`quad::integrate_singular`] absorbs the integrable blow-up).
pub fn integrated_spectrum(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    quad::integrate_singular(
        |lam: f64| params.taper(lam),
        lo,
        hi,
        params.s0,
        2.0 * params.alpha,
        1e-12,
        1e-10,
    )
}

/// The band over which kernel integrals run: the filter's hard band edge if
/// it has one, otherwise the effective edge where |ψ̂| has decayed below
/// [`SUPPORT_TOL`] of its peak (Mexican hat).
fn integration_band(filter: &Filter) -> f64 {
    let hard = filter.band().1;
    let eff = filter.effective_support(SUPPORT_TOL).1;
    hard.min(eff)
}

fn check_band_inside_singularity(params: &ModelParams, x: f64, a_band: f64) -> Result<()> {
    // strict margin: the quadrature sees (s₀² − x²η²)^(−2α) up to η = A, so
    // x·A must stay below s₀ with room for the adaptive rule to converge
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("scale argument x = {x} must be ≥ 0")));
    }
    if x * a_band >= params.s0 * (1.0 - 1e-9) {
        return Err(Error::SingularitySupport { s0: params.s0, x_a_eff: x * a_band });
    }
    Ok(())
}

/// Kernel integral ℐ_ζ(x) = ∫ cos(ζη)|ψ̂(η)|² h(xη)(s₀²−x²η²)^(−2α) dη.
///
/// Errors with [`Error::SingularitySupport`] if the scaled band x·A reaches
/// the singularity s₀. ζ may be any real (the kernel is even in ζ); the
/// cosine form keeps the result exactly real.
pub fn i_zeta(params: &ModelParams, filter: &Filter, zeta: f64, x: f64) -> Result<f64> {
    let a_band = integration_band(filter);
    check_band_inside_singularity(params, x, a_band)?;
    let s0sq = params.s0 * params.s0;
    let two_alpha = 2.0 * params.alpha;
    let g = |eta: f64| {
        let p = filter.psi_hat(eta);
        p * p * params.taper(x * eta) / (s0sq - x * x * eta * eta).powf(two_alpha)
    };
    let z = zeta.abs();
    if z < 1e-300 {
        // plain adaptive route (also the ζ = 0 oracle path)
        let mut points = vec![0.0];
        points.extend_from_slice(filter.breakpoints());
        points.push(a_band);
        return Ok(2.0 * quad::adaptive_split(g, &points, 1e-12, 1e-10)?);
    }
    Ok(2.0 * quad::oscillatory_cos(g, 0.0, a_band, z, filter.breakpoints()))
}

/// Cov(δ_{jk}, δ_{jl}) at scale `a` for shifts a distance `lag_distance`
/// = b_jk − b_jl apart: ℐ_{lag_distance/a}(1/a). At lag 0 this is Var δ_jk.
pub fn coefficient_covariance(
    params: &ModelParams,
    filter: &Filter,
    a: f64,
    lag_distance: f64,
) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("scale a = {a} must be positive")));
    }
    i_zeta(params, filter, lag_distance / a, 1.0 / a)
}

/// Lags crossing this count switch the covariance row to the FFT route.
const FFT_ROW_THRESHOLD: usize = 64;

/// First row r(0..m) of the Toeplitz covariance matrix of (δ_{j1}, …, δ_{jm})
/// at scale `a`, shift spacing `gamma`: r(q) = ℐ_{γq/a}(1/a).
///
/// Auto-selects between the per-lag oscillatory quadrature route (small m)
/// and the folded-FFT route (large m); the two are cross-checked against
/// each other in tests.
pub fn toeplitz_covariance_row(
    params: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<Vec<f64>> {
    if m <= FFT_ROW_THRESHOLD {
        toeplitz_covariance_row_quadrature(params, filter, a, gamma, m)
    } else {
        toeplitz_covariance_row_fft(params, filter, a, gamma, m)
    }
}

/// Covariance row by per-lag oscillatory quadrature (reference route; cost
/// grows quadratically in m because high lags oscillate faster).
pub fn toeplitz_covariance_row_quadrature(
    params: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("shift spacing gamma = {gamma} must be positive")));
    }
    (0..m)
        .map(|q| coefficient_covariance(params, filter, a, gamma * q as f64))
        .collect()
}

/// Covariance row by periodized sampling + one FFT.
///
/// r(q) = ∫ g(η) cos(βqη) dη with β = γ/a is a cosine transform sampled at
/// the arithmetic frequencies βq, so folding g into one period 2π/β and
/// taking a midpoint-rule DFT yields every lag at once. The midpoint sum
/// equals the exact transform of the folded samples, so the only error is
/// aliasing of Fourier content above the grid: O(1/N²) when the fold is
/// continuous (integer a/γ with a hard band edge) and O(log N/N) when the
/// folded band edge jumps; N ≥ max(4m, 2¹⁷) keeps either far below the
/// tolerance of every downstream use.
pub fn toeplitz_covariance_row_fft(
    params: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<Vec<f64>> {
    if !(a > 0.0 && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "scale a = {a} and shift spacing gamma = {gamma} must be positive"
        )));
    }
    let x = 1.0 / a;
    let a_band = integration_band(filter);
    check_band_inside_singularity(params, x, a_band)?;
    let s0sq = params.s0 * params.s0;
    let two_alpha = 2.0 * params.alpha;
    let g = |eta: f64| {
        let p = filter.psi_hat(eta);
        p * p * params.taper(x * eta) / (s0sq - x * x * eta * eta).powf(two_alpha)
    };

    let beta = gamma / a;
    let period = 2.0 * std::f64::consts::PI / beta;
    let n = next_pow2((4 * m).max(1 << 17));
    let du = period / n as f64;
    let mut buf: Vec<C64> = Vec::with_capacity(n);
    for i in 0..n {
        let u = (i as f64 + 0.5) * du;
        // fold the even integrand: all copies u + p·period inside [−A, A]
        let p_lo = ((-a_band - u) / period).ceil() as i64;
        let p_hi = ((a_band - u) / period).floor() as i64;
        let mut acc = 0.0;
        for p in p_lo..=p_hi {
            let eta = (u + p as f64 * period).abs();
            if eta <= a_band {
                acc += g(eta);
            }
        }
        buf.push(C64::new(acc, 0.0));
    }
    fft_in_place(&mut buf);
    let mut row = Vec::with_capacity(m);
    for (q, item) in buf.iter().enumerate().take(m) {
        // undo the half-sample midpoint phase
        let phase = -std::f64::consts::PI * q as f64 / n as f64;
        row.push(du * (item.re * phase.cos() - item.im * phase.sin()));
    }
    Ok(row)
}

/// Var(Σ_k δ_{jk}²) for the Gaussian coefficient vector:
///
/// ```text
///   2 Σ_{|q| < m} (m − |q|) r(q)².
/// ```
///
/// Dividing by m gives the variance of the √m-normalized mean square, which
/// converges (a → ∞, m → ∞, a/γ → c) to 𝒱₁ = 4cπ·s₀^(−8α)·I(c).
pub fn quadratic_variance(
    params: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("quadratic variance needs m ≥ 1".into()));
    }
    let row = toeplitz_covariance_row(params, filter, a, gamma, m)?;
    let mf = m as f64;
    let mut total = mf * row[0] * row[0];
    for (q, r) in row.iter().enumerate().skip(1) {
        total += 2.0 * (mf - q as f64) * r * r;
    }
    Ok(2.0 * total)
}

/// Parameters of a discrete-time seasonal long-memory (Gegenbauer) process:
/// (1 − 2uB + B²)^d X_t = ε_t with |u| ≤ 1, d ∈ (0, ½), sd(ε) = σ_ε.
///
/// σ_ε = 0 is admitted as a degenerate (identically zero) process for
/// simulator edge cases; the model mapping requires σ_ε > 0.
#[derive(Clone, Debug)]
pub struct GegenbauerParams {
    pub u: f64,
    pub d: f64,
    pub sigma_eps: f64,
}

impl GegenbauerParams {
    pub fn new(u: f64, d: f64, sigma_eps: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("Gegenbauer u = {u} must lie in [−1, 1]")));
        }
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::Domain(format!("Gegenbauer d = {d} must lie in (0, 1/2)")));
        }
        if !(sigma_eps >= 0.0 && sigma_eps.is_finite()) {
            return Err(Error::Domain(format!(
                "innovation sd {sigma_eps} must be finite and nonnegative"
            )));
        }
        Ok(GegenbauerParams { u, d, sigma_eps })
    }
}

/// Ratio R(λ) = (s₀² − λ²)/(2(cos λ − u)) with u = cos s₀, evaluated stably
/// through its removable singularity at |λ| = s₀ via the exact identity
/// cos x − cos s₀ = −2 sin((x+s₀)/2) sin((x−s₀)/2):
///
/// ```text
///   R = [ε/sin(ε/2)] · (2s₀ + ε) / (4 sin((x+s₀)/2)),    ε = |λ| − s₀,
/// ```
///
/// which has no cancellation anywhere on |λ| ≤ π (with 1 < s₀ < π the sine
/// factors only vanish at the removable point itself).
fn gegenbauer_ratio(s0: f64, lambda: f64) -> f64 {
    let x = lambda.abs();
    let eps = x - s0;
    let sinc_like = if eps == 0.0 { 2.0 } else { eps / (0.5 * eps).sin() };
    sinc_like * (2.0 * s0 + eps) / (4.0 * (0.5 * (x + s0)).sin())
}

/// Identify the continuous singular model matching a Gegenbauer process:
/// cycle frequency s₀ = arccos u and exponent α = d, with the default taper.
///
/// The identification is of the singularity location/exponent only — the
/// full density match (including the exact taper and scale) is available via
/// [`gegenbauer_exact_model`], which is also the oracle justifying this map.
///
/// Requires arccos u > 1 (u < cos 1 ≈ 0.5403) so the model's s₀ > 1 holds.
pub fn gegenbauer_to_model(g: &GegenbauerParams) -> Result<ModelParams> {
    let s0 = g.u.acos();
    if s0 <= 1.0 {
        return Err(Error::Domain(format!(
            "Gegenbauer u = {} gives cycle frequency arccos u = {s0} ≤ 1; the singular \
             model needs s₀ > 1 (u < cos 1 ≈ 0.5403)",
            g.u
        )));
    }
    ModelParams::new(s0, g.d)
}

/// Express a Gegenbauer spectrum *exactly* in the singular-model form.
///
/// The Gegenbauer density σ²/(2π)·(2|cos λ − u|)^(−2d) on [−π, π] equals
/// `scale · h(λ)/|λ² − s₀²|^(2d)` with s₀ = arccos u, α = d,
/// h(λ) = (R(λ)/R(0))^(2d) and scale = σ²·R(0)^(2d)/(2π). Returns the model
/// (whose taper vanishes outside [−π, π]) and that scale.
///
/// Requires u ∈ (−1, cos 1): the lower endpoint makes cos λ − u vanish to
/// second order at λ = ±π and the ratio taper diverges there.
pub fn gegenbauer_exact_model(g: &GegenbauerParams) -> Result<(ModelParams, f64)> {
    let s0 = g.u.acos();
    if s0 <= 1.0 {
        return Err(Error::Domain(format!(
            "Gegenbauer u = {} gives cycle frequency arccos u = {s0} ≤ 1; the singular \
             model needs s₀ > 1 (u < cos 1 ≈ 0.5403)",
            g.u
        )));
    }
    if g.u <= -1.0 {
        return Err(Error::Domain(
            "Gegenbauer u = −1 puts a second-order zero at λ = ±π; the ratio taper \
             is unbounded there"
                .into(),
        ));
    }
    if !(g.sigma_eps > 0.0) {
        return Err(Error::Domain("model mapping needs a positive innovation sd".into()));
    }
    let d = g.d;
    let r0 = gegenbauer_ratio(s0, 0.0);
    let scale = g.sigma_eps * g.sigma_eps * r0.powf(2.0 * d) / (2.0 * std::f64::consts::PI);
    let taper: Taper = Arc::new(move |lambda: f64| {
        if lambda.abs() > std::f64::consts::PI {
            return 0.0;
        }
        (gegenbauer_ratio(s0, lambda) / r0).powf(2.0 * d)
    });
    let label = format!("gegenbauer:u={},d={}", g.u, g.d);
    let params = ModelParams::with_taper(s0, d, &label, taper)?;
    Ok((params, scale))
}
