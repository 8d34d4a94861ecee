//! Seed-deterministic process generators.
//!
//! Three routes, in increasing fidelity to the continuous model:
//!
//! 1. [`simulate_gegenbauer`] — truncated moving average of the discrete-time
//!    seasonal long-memory process (1 − 2uB + B²)^d X = ε.
//! 2. [`simulate_spectral`] — harmonic superposition of the continuous-time
//!    model: independent Gaussian amplitudes on frequency bins, each bin
//!    carrying its exactly integrated spectral mass (singular bin included).
//! 3. [`simulate_coefficients_exact`] — draws filter-coefficient blocks
//!    directly from their analytic Toeplitz covariance, skipping time
//!    discretization entirely (dense Cholesky up to 4096, circulant
//!    embedding above).
//!
//! Every generator is a pure function of its numeric inputs plus
//! (seed, replicate index): replicate-level parallelism cannot change any
//! output byte, because each replicate owns a counter-keyed stream.

use crate::error::{Error, Result};
use crate::fft::{fft_in_place, next_pow2, C64};
use crate::filters::Filter;
use crate::linalg::{cholesky_in_place, lower_triangular_matvec};
use crate::spectral::{integrated_spectrum, toeplitz_covariance_row, GegenbauerParams, ModelParams};
use crate::transform::{CoefficientBlock, CoefficientSource};
use once_cell::sync::Lazy;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A uniformly sampled real series: values[i] is X(t0 + i·dt).
#[derive(Clone, Debug)]
pub struct SeriesGrid {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SeriesGrid {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("grid step dt = {dt} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::Domain("series needs at least one sample".into()));
        }
        if !t0.is_finite() {
            return Err(Error::Domain(format!("grid origin t0 = {t0} must be finite")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("series contains non-finite value {bad}")));
        }
        Ok(SeriesGrid { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }
}

/// Shape of a grid to simulate on (a [`SeriesGrid`] without the values).
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct GridSpec {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("grid step dt = {dt} must be positive")));
        }
        if n == 0 {
            return Err(Error::Domain("grid needs at least one sample".into()));
        }
        if !t0.is_finite() {
            return Err(Error::Domain(format!("grid origin t0 = {t0} must be finite")));
        }
        Ok(GridSpec { t0, dt, n })
    }
}

/// Seed and replicate bookkeeping shared by all generators.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Moving-average truncation level N (the MA sum keeps lags 0..=N).
    pub truncation_n: usize,
    pub replicate_index: u64,
}

impl SimulationConfig {
    pub fn new(seed: u64) -> Self {
        SimulationConfig { seed, truncation_n: 100, replicate_index: 0 }
    }

    pub fn with_replicate(mut self, replicate_index: u64) -> Self {
        self.replicate_index = replicate_index;
        self
    }

    pub fn with_truncation(mut self, truncation_n: usize) -> Result<Self> {
        if truncation_n == 0 {
            return Err(Error::Domain("MA truncation level must be ≥ 1".into()));
        }
        self.truncation_n = truncation_n;
        Ok(self)
    }
}

// ---------------------------------------------------------------------------
// keyed random streams
// ---------------------------------------------------------------------------

// domain tags keep generators with the same (seed, replicate, level) on
// disjoint streams
const DOMAIN_GENERIC: u64 = 0;
const DOMAIN_GEGENBAUER: u64 = 1;
const DOMAIN_SPECTRAL: u64 = 2;
const DOMAIN_EXACT: u64 = 3;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keyed_rng(seed: u64, replicate: u64, level: u64, domain: u64) -> ChaCha12Rng {
    let mut state = seed;
    let inputs = [replicate, level, domain, 0x243f_6a88_85a3_08d3];
    let mut key = [0u8; 32];
    for (chunk, inp) in key.chunks_exact_mut(8).zip(inputs) {
        state ^= inp.wrapping_mul(0xff51_afd7_ed55_8ccd);
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// A reproducible stream of standard normal variates, keyed by
/// (seed, replicate, level). Distinct keys give statistically independent
/// streams; the same key always replays the same sequence.
pub struct NormalStream {
    rng: ChaCha12Rng,
}

impl NormalStream {
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_normal();
        }
    }
}

pub fn rng_stream(seed: u64, replicate: u64, level: u64) -> NormalStream {
    NormalStream { rng: keyed_rng(seed, replicate, level, DOMAIN_GENERIC) }
}

// ---------------------------------------------------------------------------
// Gegenbauer moving average
// ---------------------------------------------------------------------------

/// Gegenbauer polynomial value by the explicit alternating sum, with a
/// cancellation diagnostic (oracle use; the production route is the
/// recurrence in [`gegenbauer_coeffs`]).
#[derive(Clone, Copy, Debug)]
pub struct ExplicitCoeff {
    pub value: f64,
    /// log10(Σ|terms| / |Σ terms|): decimal digits lost to cancellation.
    pub cancellation_digits: f64,
    /// More than 6 digits lost: trust only as a rough oracle.
    pub flagged: bool,
}

/// C_n^{(d)}(u) = Σ_{k=0}^{⌊n/2⌋} (−1)^k (2u)^{n−2k} Γ(d−k+n) / (k!(n−2k)!Γ(d)),
/// with every Γ-ratio formed as a finite product Π(d+i), never as a quotient
/// of two huge Γ evaluations.
pub fn gegenbauer_coeff_explicit(u: f64, d: f64, n: usize) -> Result<ExplicitCoeff> {
    check_gegenbauer_domain(u, d)?;
    let mut sum = 0.0f64;
    let mut abs_sum = 0.0f64;
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut term = sign * (2.0 * u).powi((n - 2 * k) as i32);
        // Γ(d + n − k)/Γ(d) = Π_{i=0}^{n−k−1} (d + i)
        for i in 0..(n - k) {
            term *= d + i as f64;
        }
        for i in 1..=k {
            term /= i as f64;
        }
        for i in 1..=(n - 2 * k) {
            term /= i as f64;
        }
        sum += term;
        abs_sum += term.abs();
    }
    let cancellation_digits = if sum == 0.0 {
        if abs_sum == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (abs_sum / sum.abs()).log10().max(0.0)
    };
    Ok(ExplicitCoeff { value: sum, cancellation_digits, flagged: cancellation_digits > 6.0 })
}

/// C_0..C_N by the three-term recurrence
/// C_n = 2u(1 + (d−1)/n)·C_{n−1} − (1 + 2(d−1)/n)·C_{n−2},
/// C_0 = 1, C_1 = 2ud (numerically stable in the growing direction).
pub fn gegenbauer_coeffs(u: f64, d: f64, n_max: usize) -> Result<Vec<f64>> {
    check_gegenbauer_domain(u, d)?;
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    if n_max >= 1 {
        c.push(2.0 * u * d);
    }
    for n in 2..=n_max {
        let nf = n as f64;
        let next = 2.0 * u * (1.0 + (d - 1.0) / nf) * c[n - 1]
            - (1.0 + 2.0 * (d - 1.0) / nf) * c[n - 2];
        c.push(next);
    }
    Ok(c)
}

fn check_gegenbauer_domain(u: f64, d: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("Gegenbauer u = {u} must lie in [−1, 1]")));
    }
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::Domain(format!("Gegenbauer d = {d} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Heuristic estimate of Σ_{n>N} C_n² / Σ_{n≤N} C_n² for the truncation
/// warning: the coefficients decay like an oscillation under an n^(d−1)
/// envelope, so the squared tail is extrapolated by fitting that power law
/// to the last few squared coefficients (which averages the oscillation out).
pub fn gegenbauer_tail_fraction(coeffs: &[f64], d: f64) -> f64 {
    let n = coeffs.len() - 1;
    if n < 2 {
        return f64::INFINITY;
    }
    let head: f64 = coeffs.iter().map(|c| c * c).sum();
    let lo = n.saturating_sub(9).max(2);
    let mut kappa = 0.0;
    for q in lo..=n {
        kappa += coeffs[q] * coeffs[q] / (q as f64).powf(2.0 * d - 2.0);
    }
    kappa /= (n - lo + 1) as f64;
    // Σ_{q>N} q^{2d−2} ≈ N^{2d−1}/(1−2d)
    let tail = kappa * (n as f64).powf(2.0 * d - 1.0) / (1.0 - 2.0 * d);
    tail / head
}

/// Truncated moving-average simulation of the Gegenbauer process on the
/// integer grid (dt = 1): X(t) = σ_ε Σ_{n=0}^{N} C_n ε(t−n) with i.i.d.
/// standard Gaussian ε, N = `cfg.truncation_n`. Logs a warning when the
/// discarded tail Σ_{n>N} C_n² is estimated above 1% of the kept sum.
pub fn simulate_gegenbauer(
    g: &GegenbauerParams,
    len: usize,
    cfg: &SimulationConfig,
) -> Result<SeriesGrid> {
    if len == 0 {
        return Err(Error::Domain("series length must be ≥ 1".into()));
    }
    if cfg.truncation_n == 0 {
        return Err(Error::Domain("MA truncation level must be ≥ 1".into()));
    }
    let n_trunc = cfg.truncation_n;
    let coeffs = gegenbauer_coeffs(g.u, g.d, n_trunc)?;
    let tail = gegenbauer_tail_fraction(&coeffs, g.d);
    if tail > 0.01 {
        log::warn!(
            "MA truncation N = {n_trunc} keeps too little memory: estimated tail energy \
             {:.2}% of the kept Σ C_n² (u = {}, d = {})",
            100.0 * tail,
            g.u,
            g.d
        );
    }
    let mut eps = vec![0.0f64; len + n_trunc];
    let mut stream = NormalStream {
        rng: keyed_rng(cfg.seed, cfg.replicate_index, 0, DOMAIN_GEGENBAUER),
    };
    stream.fill(&mut eps);
    let mut values = vec![0.0f64; len];
    for (t, v) in values.iter_mut().enumerate() {
        // eps[i] is ε at time i − N, so ε(t−n) = eps[t + N − n]
        let mut acc = 0.0;
        for (n, c) in coeffs.iter().enumerate() {
            acc += c * eps[t + n_trunc - n];
        }
        *v = g.sigma_eps * acc;
    }
    SeriesGrid::new(0.0, 1.0, values)
}

// ---------------------------------------------------------------------------
// spectral-bin simulator
// ---------------------------------------------------------------------------

static BIN_MASS_CACHE: Lazy<Mutex<HashMap<(u64, u64, usize), Arc<Vec<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Per-bin standard deviations σ_b with σ_b² = 2∫_bin f(λ)dλ on the uniform
/// partition of [0, band]; the bin containing s₀ gets its exact integrated
/// mass via the singularity-aware rule. Cached per (model, band, bins).
fn spectral_bin_sds(model: &ModelParams, band: f64, bins: usize) -> Result<Arc<Vec<f64>>> {
    let key = (model.fingerprint(), band.to_bits(), bins);
    if let Some(hit) = BIN_MASS_CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let width = band / bins as f64;
    let mut sds = Vec::with_capacity(bins);
    for b in 0..bins {
        let lo = b as f64 * width;
        let hi = if b + 1 == bins { band } else { (b + 1) as f64 * width };
        let mass = 2.0 * integrated_spectrum(model, lo, hi)?;
        sds.push(mass.max(0.0).sqrt());
    }
    let arc = Arc::new(sds);
    BIN_MASS_CACHE.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

/// Harmonic superposition of the continuous model on `grid`:
///
/// ```text
///   X(t) = Σ_b σ_b (ξ_b cos(λ_b t) + η_b sin(λ_b t)),
/// ```
///
/// ξ_b, η_b independent standard normals (drawn in bin order), λ_b the bin
/// midpoints of the uniform partition of [0, band], σ_b² the exactly
/// integrated two-sided bin mass. Zero-mean, stationary (over bin-midpoint
/// harmonics) and Gaussian by construction; Var X(t) = ∫_{−band}^{band} f.
pub fn simulate_spectral(
    model: &ModelParams,
    grid: &GridSpec,
    band: f64,
    bins: usize,
    cfg: &SimulationConfig,
) -> Result<SeriesGrid> {
    if !(band > model.s0()) {
        return Err(Error::Config(format!(
            "spectral band {band} must exceed the singular frequency s0 = {} \
             (the bins must cover the spectral peak)",
            model.s0()
        )));
    }
    if bins < 64 {
        return Err(Error::Config(format!("need at least 64 bins, got {bins}")));
    }
    let sds = spectral_bin_sds(model, band, bins)?;
    let width = band / bins as f64;
    let mut stream = NormalStream {
        rng: keyed_rng(cfg.seed, cfg.replicate_index, 0, DOMAIN_SPECTRAL),
    };
    let mut values = vec![0.0f64; grid.n];
    for (b, sd) in sds.iter().enumerate() {
        let xi = sd * stream.next_normal();
        let eta = sd * stream.next_normal();
        if xi == 0.0 && eta == 0.0 {
            continue;
        }
        let lam = (b as f64 + 0.5) * width;
        // rotation recurrence for (cos λt_i, sin λt_i), re-seeded from exact
        // trig every 1024 steps to stop drift accumulation
        let (step_c, step_s) = ((lam * grid.dt).cos(), (lam * grid.dt).sin());
        let mut c = 0.0;
        let mut s = 0.0;
        for (i, v) in values.iter_mut().enumerate() {
            if i % 1024 == 0 {
                let phase = lam * (grid.t0 + i as f64 * grid.dt);
                c = phase.cos();
                s = phase.sin();
            } else {
                let cn = c * step_c - s * step_s;
                s = s * step_c + c * step_s;
                c = cn;
            }
            *v += xi * c + eta * s;
        }
    }
    SeriesGrid::new(grid.t0, grid.dt, values)
}

// ---------------------------------------------------------------------------
// exact-covariance coefficient sampler
// ---------------------------------------------------------------------------

/// Largest block size factored densely; larger blocks go through circulant
/// embedding.
pub const DENSE_LIMIT: usize = 4096;

type FactorKey = (u64, u64, u64, u64, usize);

struct DenseFactor {
    l: Vec<f64>, // lower Cholesky factor, row-major m×m
    jittered: bool,
}

struct CircFactor {
    n: usize,
    /// √(λ_k/n) for the embedding eigenvalues λ_k (clamped at 0).
    scale: Vec<f64>,
    clamped: usize,
}

static DENSE_CACHE: Lazy<Mutex<HashMap<FactorKey, Arc<DenseFactor>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static CIRC_CACHE: Lazy<Mutex<HashMap<FactorKey, Arc<CircFactor>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
/// Latest complex draw per factor key: replicates 2p and 2p+1 share one FFT.
#[allow(clippy::type_complexity)]
static PAIR_CACHE: Lazy<Mutex<HashMap<FactorKey, (u64, u64, Arc<(Vec<f64>, Vec<f64>)>)>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn factor_key(model: &ModelParams, filter: &Filter, a: f64, gamma: f64, m: usize) -> FactorKey {
    (model.fingerprint(), filter.fingerprint(), a.to_bits(), gamma.to_bits(), m)
}

/// Distinguishes the random stream of one (a, γ, m) block from another's
/// within the same replicate.
fn level_tag(a: f64, gamma: f64, m: usize) -> u64 {
    let mut state = 0x1f83_d9ab_fb41_bd6b_u64;
    state ^= a.to_bits();
    let mut tag = splitmix64(&mut state);
    state ^= gamma.to_bits();
    tag ^= splitmix64(&mut state).rotate_left(21);
    state ^= m as u64;
    tag ^ splitmix64(&mut state).rotate_left(42)
}

fn dense_factor(
    model: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<Arc<DenseFactor>> {
    let key = factor_key(model, filter, a, gamma, m);
    if let Some(hit) = DENSE_CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let row = toeplitz_covariance_row(model, filter, a, gamma, m)?;
    let build = |jitter: f64| -> Result<Vec<f64>> {
        let mut mat = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                mat[i * m + j] = row[i.abs_diff(j)];
            }
            mat[i * m + i] += jitter;
        }
        cholesky_in_place(&mut mat, m)?;
        Ok(mat)
    };
    let (l, jittered) = match build(0.0) {
        Ok(l) => (l, false),
        Err(first) => {
            let jitter = 1e-10 * row[0];
            match build(jitter) {
                Ok(l) => {
                    log::warn!(
                        "coefficient covariance (a = {a}, γ = {gamma}, m = {m}) needed a \
                         {jitter:.1e} diagonal jitter to factor"
                    );
                    (l, true)
                }
                Err(_) => {
                    return Err(Error::Factorization(format!(
                        "Toeplitz covariance at a = {a}, γ = {gamma}, m = {m} is not \
                         positive definite even with 1e−10 relative jitter: {first}"
                    )))
                }
            }
        }
    };
    let arc = Arc::new(DenseFactor { l, jittered });
    DENSE_CACHE.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

fn circulant_factor(
    model: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<Arc<CircFactor>> {
    let key = factor_key(model, filter, a, gamma, m);
    if let Some(hit) = CIRC_CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let n = next_pow2(2 * m);
    // extend with TRUE covariances out to the embedding half-period —
    // padding with zeros instead is what usually breaks nonnegativity
    let row = toeplitz_covariance_row(model, filter, a, gamma, n / 2 + 1)?;
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); n];
    for (q, r) in row.iter().enumerate() {
        buf[q].re = *r;
        if q > 0 && q < n / 2 {
            buf[n - q].re = *r;
        }
    }
    fft_in_place(&mut buf);
    let mut max_eig = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for v in &buf {
        max_eig = max_eig.max(v.re);
        min_eig = min_eig.min(v.re);
    }
    if min_eig < -1e-8 * max_eig {
        return Err(Error::Factorization(format!(
            "circulant embedding of the covariance row (a = {a}, γ = {gamma}, m = {m}, \
             embedding size {n}) has eigenvalues in [{min_eig:.3e}, {max_eig:.3e}]; \
             the row is not embeddable at this size"
        )));
    }
    let mut clamped = 0usize;
    let scale: Vec<f64> = buf
        .iter()
        .map(|v| {
            if v.re < 0.0 {
                clamped += 1;
                0.0
            } else {
                (v.re / n as f64).sqrt()
            }
        })
        .collect();
    let arc = Arc::new(CircFactor { n, scale, clamped });
    CIRC_CACHE.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

/// One complex circulant draw = two independent real draws (re, im); keyed by
/// the pair index so replicates 2p and 2p+1 reuse one FFT.
fn circulant_pair(
    factor: &CircFactor,
    key: FactorKey,
    seed: u64,
    pair: u64,
    tag: u64,
    m: usize,
) -> Arc<(Vec<f64>, Vec<f64>)> {
    if let Some((s, p, hit)) = PAIR_CACHE.lock().unwrap().get(&key) {
        if *s == seed && *p == pair {
            return hit.clone();
        }
    }
    let n = factor.n;
    let mut rng = keyed_rng(seed, pair, tag, DOMAIN_EXACT);
    let mut buf: Vec<C64> = Vec::with_capacity(n);
    for k in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        buf.push(C64::new(factor.scale[k] * x, factor.scale[k] * y));
    }
    fft_in_place(&mut buf);
    let re: Vec<f64> = buf.iter().take(m).map(|v| v.re).collect();
    let im: Vec<f64> = buf.iter().take(m).map(|v| v.im).collect();
    let arc = Arc::new((re, im));
    PAIR_CACHE.lock().unwrap().insert(key, (seed, pair, arc.clone()));
    arc
}

/// Draw δ_1..δ_m exactly from the centred Gaussian with Toeplitz covariance
/// r(q) = ℐ_{γq/a}(1/a) — no time-discretization error. Dense Cholesky for
/// m ≤ [`DENSE_LIMIT`] (1e−10 relative jitter retry), circulant embedding
/// with true-covariance extension above it. Factorizations are cached per
/// (model, filter, a, γ, m); the draw is a pure function of
/// (inputs, seed, replicate).
pub fn simulate_coefficients_exact(
    model: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
    cfg: &SimulationConfig,
) -> Result<CoefficientBlock> {
    if m == 0 {
        return Err(Error::Domain("coefficient count m must be ≥ 1".into()));
    }
    if !(a > 0.0 && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "scale a = {a} and shift spacing γ = {gamma} must be positive"
        )));
    }
    let tag = level_tag(a, gamma, m);
    let values = if m <= DENSE_LIMIT {
        let factor = dense_factor(model, filter, a, gamma, m)?;
        let mut z = vec![0.0f64; m];
        NormalStream { rng: keyed_rng(cfg.seed, cfg.replicate_index, tag, DOMAIN_EXACT) }
            .fill(&mut z);
        let mut y = vec![0.0f64; m];
        lower_triangular_matvec(&factor.l, m, &z, &mut y);
        y
    } else {
        let key = factor_key(model, filter, a, gamma, m);
        let factor = circulant_factor(model, filter, a, gamma, m)?;
        if factor.clamped > 0 {
            log::debug!(
                "circulant embedding clamped {} slightly negative eigenvalues",
                factor.clamped
            );
        }
        let pair = cfg.replicate_index / 2;
        let both = circulant_pair(&factor, key, cfg.seed, pair, tag, m);
        if cfg.replicate_index % 2 == 0 {
            both.0.clone()
        } else {
            both.1.clone()
        }
    };
    CoefficientBlock::new(0, a, gamma, values, CoefficientSource::ExactCovariance)
}

/// Test-and-diagnostics view of the dense factor path: whether the cached
/// factorization needed jitter.
pub fn dense_factor_was_jittered(
    model: &ModelParams,
    filter: &Filter,
    a: f64,
    gamma: f64,
    m: usize,
) -> Result<bool> {
    Ok(dense_factor(model, filter, a, gamma, m)?.jittered)
}
