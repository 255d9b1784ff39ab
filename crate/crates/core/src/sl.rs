//! Stuart-Landau lattice analytics.
//!
//! Node dynamics `z' = (alpha + i beta) z - z |z|^2 + (C/2)(z_up(t - tau) + z_left(t - tau))`.
//! Everything here is expressed per Fourier mode in rotated coordinates
//! `k_plus = (k1 + k2)/2`, `k_minus = (k1 - k2)/2`, with the effective
//! coupling `R = C cos(k_minus)`.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambertw::{lambert_w, LambertError};
use crate::lattice::{enumerate_modes, principal_angle, SlParams, WaveVector};
use crate::roots::{self, Eval, RootError, RootSet, Window};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlError {
    #[error("delay must be positive, got {0}")]
    NonPositiveDelay(f64),
    #[error(transparent)]
    Lambert(#[from] LambertError),
    #[error("Lambert-W eigenvalue {lambda} fails the characteristic residual ({residual:e})")]
    Residual { lambda: Complex64, residual: f64 },
    #[error("mode is decoupled (cos k_minus = 0); the delayed term vanishes")]
    Decoupled,
    #[error("no stability change of the steady state for alpha in [{lo}, {hi}] (rightmost Re: {re_lo}, {re_hi})")]
    NoSignChange { lo: f64, hi: f64, re_lo: f64, re_hi: f64 },
    #[error("alpha_0 has a pole: cos^2 k_minus = sin^2 k_tau")]
    Pole,
    #[error("closed-form Hessian requires cos k_tau > 0 (got {cos_k_tau}); the wave is in the uniform-instability regime")]
    Regime { cos_k_tau: f64 },
    #[error("root search failed for perturbation (q1, q2) = ({q1}, {q2}): {source}")]
    RootSearch { q1: f64, q2: f64, source: RootError },
}

/// Travelling wave `z_{m,n}(t) = a exp(i(Omega t - k1 m - k2 n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub omega: f64,
    pub wave: WaveVector,
    /// `k_plus - Omega tau`, wrapped to `(-pi, pi]`.
    pub k_tau: f64,
    /// `C cos(k_minus)`.
    pub r: f64,
}

impl PlaneWave {
    /// The wave with frequency `omega` on mode `wave`, if its squared
    /// amplitude is positive. `omega` is expected to solve the Kepler equation.
    pub fn from_frequency(
        params: SlParams,
        coupling: f64,
        tau: f64,
        wave: WaveVector,
        omega: f64,
    ) -> Option<Self> {
        let r = coupling * wave.k_minus().cos();
        let k_tau = principal_angle(wave.k_plus() - omega * tau);
        let a2 = params.alpha + r * k_tau.cos();
        (a2 > 0.0).then(|| Self { amplitude: a2.sqrt(), omega, wave, k_tau, r })
    }

    pub fn a2(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// Largest violation of the amplitude, frequency and circle relations.
    pub fn invariant_residuals(&self, params: SlParams) -> (f64, f64, f64) {
        let a2 = self.a2();
        let amp = (a2 - params.alpha - self.r * self.k_tau.cos()).abs();
        let freq = (self.omega - params.beta - self.r * self.k_tau.sin()).abs();
        let circle = ((a2 - params.alpha).powi(2) + (self.omega - params.beta).powi(2)
            - self.r * self.r)
            .abs();
        (amp, freq, circle)
    }

    /// Complex state of node `(m, n)` at time `t`.
    pub fn state(&self, m: usize, n: usize, t: f64) -> Complex64 {
        let phase = self.omega * t - self.wave.k1() * m as f64 - self.wave.k2() * n as f64;
        Complex64::from_polar(self.amplitude, phase)
    }
}

/// Exact steady-state eigenvalues of one Fourier mode on the given Lambert-W
/// branches: `lambda_j = alpha + i beta + W_j(tau R e^{i k_plus - (alpha + i beta) tau}) / tau`.
pub fn stst_eigenvalues(
    params: SlParams,
    coupling: f64,
    tau: f64,
    wave: WaveVector,
    branches: std::ops::RangeInclusive<i32>,
) -> Result<RootSet, SlError> {
    if !(tau > 0.0) {
        return Err(SlError::NonPositiveDelay(tau));
    }
    let mu = Complex64::new(params.alpha, params.beta);
    let r = coupling * wave.k_minus().cos();
    let mut roots = Vec::new();
    if r == 0.0 || wave.k_minus().cos().abs() < 1e-15 {
        roots.push(mu);
    } else {
        let z = tau * r * (I * wave.k_plus() - mu * tau).exp();
        for j in branches {
            let lambda = mu + lambert_w(j, z)? / tau;
            let e = stst_factor(params, r, wave.k_plus(), tau, lambda);
            let residual = e.relative_residual();
            if residual > roots::RESIDUAL_TOLERANCE {
                return Err(SlError::Residual { lambda, residual });
            }
            roots.push(lambda);
        }
    }
    let roots = roots::dedup(roots);
    let window = bounding_window(&roots);
    Ok(RootSet { roots, tolerance: roots::RESIDUAL_TOLERANCE, window })
}

fn bounding_window(roots: &[Complex64]) -> Window {
    let (mut a, mut b, mut c, mut d) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for r in roots {
        a = a.min(r.re);
        b = b.max(r.re);
        c = c.min(r.im);
        d = d.max(r.im);
    }
    Window { re_min: a - 1e-9, re_max: b + 1e-9, im_min: c - 1e-9, im_max: d + 1e-9 }
}

/// `-lambda + alpha + i beta + R e^{i k_plus - lambda tau}` with derivative.
pub fn stst_factor(params: SlParams, r: f64, k_plus: f64, tau: f64, lambda: Complex64) -> Eval {
    let mu = Complex64::new(params.alpha, params.beta);
    let delayed = r * (I * k_plus - lambda * tau).exp();
    Eval {
        value: -lambda + mu + delayed,
        derivative: -1.0 - tau * delayed,
        scale: lambda.norm() + mu.norm() + delayed.norm(),
    }
}

/// Large-delay pseudo-continuous spectrum of the steady state:
/// `gamma(Omega) = -1/2 log((alpha^2 + (beta - Omega)^2) / (C^2 cos^2 k_minus))`.
pub fn stst_pcs(params: SlParams, coupling: f64, k_minus: f64, omega: f64) -> Result<f64, SlError> {
    let denom = (coupling * k_minus.cos()).powi(2);
    if denom <= 1e-24 * coupling * coupling || denom == 0.0 {
        return Err(SlError::Decoupled);
    }
    let num = params.alpha * params.alpha + (params.beta - omega).powi(2);
    Ok(-0.5 * (num / denom).ln())
}

/// Euclidean distance from `lambda` to the curve `{gamma(Omega)/tau + i Omega}`.
pub fn stst_pcs_distance(
    params: SlParams,
    coupling: f64,
    k_minus: f64,
    tau: f64,
    lambda: Complex64,
) -> Result<f64, SlError> {
    let point = |w: f64| -> Result<f64, SlError> {
        let g = stst_pcs(params, coupling, k_minus, w)?;
        Ok((Complex64::new(g / tau, w) - lambda).norm())
    };
    // the horizontal offset bounds the distance, so the closest curve point
    // lies within that band of Im(lambda)
    let horizontal = point(lambda.im)?;
    let (mut lo, mut hi) = (lambda.im - horizontal, lambda.im + horizontal);
    let mut best = horizontal;
    for _ in 0..4 {
        let n = 64;
        let mut arg = lambda.im;
        for i in 0..=n {
            let w = lo + (hi - lo) * i as f64 / n as f64;
            let d = point(w)?;
            if d < best {
                best = d;
                arg = w;
            }
        }
        let h = (hi - lo) / n as f64;
        lo = arg - h;
        hi = arg + h;
    }
    Ok(best)
}

/// Branches scanned for the rightmost steady-state eigenvalue.
const RIGHTMOST_BRANCHES: i32 = 8;

/// Largest real part of the steady-state spectrum over all lattice modes.
pub fn stst_rightmost(
    params: SlParams,
    coupling: f64,
    tau: f64,
    modes: &[WaveVector],
) -> Result<f64, SlError> {
    let mut best = f64::NEG_INFINITY;
    for wv in modes {
        let re = if tau == 0.0 {
            params.alpha + coupling * wv.k_minus().cos() * wv.k_plus().cos()
        } else {
            stst_eigenvalues(params, coupling, tau, *wv, -RIGHTMOST_BRANCHES..=RIGHTMOST_BRANCHES)?
                .rightmost()
                .map_or(f64::NEG_INFINITY, |l| l.re)
        };
        best = best.max(re);
    }
    Ok(best)
}

/// Value of `alpha` at which the homogeneous steady state loses stability on
/// a `rows x cols` lattice, by bisection on the rightmost eigenvalue.
pub fn hopf_threshold(
    beta: f64,
    coupling: f64,
    tau: f64,
    rows: usize,
    cols: usize,
) -> Result<f64, SlError> {
    if tau < 0.0 {
        return Err(SlError::NonPositiveDelay(tau));
    }
    let modes = enumerate_modes(rows, cols);
    if tau == 0.0 {
        let top = modes
            .iter()
            .map(|wv| coupling * wv.k_minus().cos() * wv.k_plus().cos())
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(-top);
    }
    let rightmost = |alpha: f64| stst_rightmost(SlParams { alpha, beta }, coupling, tau, &modes);
    let (mut lo, mut hi) = (-coupling - 1.0, coupling + 1.0);
    let (re_lo, re_hi) = (rightmost(lo)?, rightmost(hi)?);
    if !(re_lo < 0.0 && re_hi > 0.0) {
        return Err(SlError::NoSignChange { lo, hi, re_lo, re_hi });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if rightmost(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Every plane wave with positive amplitude, ordered by mode, then frequency.
pub fn enumerate_plane_waves(
    params: SlParams,
    coupling: f64,
    tau: f64,
    modes: &[WaveVector],
) -> Vec<PlaneWave> {
    let mut out = Vec::new();
    for wv in modes {
        let r = coupling * wv.k_minus().cos();
        for omega in roots::solve_kepler(params.beta, r, wv.k_plus(), tau) {
            if let Some(w) = PlaneWave::from_frequency(params, coupling, tau, *wv, omega) {
                out.push(w);
            }
        }
    }
    out
}

/// Number of Kepler solutions summed over modes, i.e. the number of Hopf
/// bifurcations of the steady state regardless of `alpha`.
pub fn hopf_count(beta: f64, coupling: f64, tau: f64, modes: &[WaveVector]) -> usize {
    modes
        .iter()
        .map(|wv| roots::solve_kepler(beta, coupling * wv.k_minus().cos(), wv.k_plus(), tau).len())
        .sum()
}

/// Estimate of [`hopf_count`] on an `n x n` lattice from integrating the
/// Kepler root density `2 |R| tau / pi` over the modes:
/// `(2 C tau / pi) n / sin(pi / 2n)` for odd `n`, `(2 C tau / pi) n cot(pi / 2n)` for even `n`.
pub fn hopf_count_estimate(n: usize, coupling: f64, tau: f64) -> f64 {
    let x = PI / (2.0 * n as f64);
    let lead = 2.0 * coupling * tau / PI * n as f64;
    if n % 2 == 1 {
        lead / x.sin()
    } else {
        lead / x.tan()
    }
}

/// Large-lattice asymptote `4 C tau n^2 / pi^2` of the Hopf count.
pub fn hopf_count_asymptotic(n: usize, coupling: f64, tau: f64) -> f64 {
    4.0 * coupling * tau * (n * n) as f64 / (PI * PI)
}

/// Pieces of the plane-wave characteristic function
/// `chi = P0(lambda) - P1(lambda) X + S X^2`, `X = e^{-lambda tau + i q_plus}`.
#[derive(Debug, Clone, Copy)]
struct ChiTerms {
    a2: f64,
    rc: f64,
    rs: f64,
    /// `R_+ e^{i k_tau}`
    rp_e: Complex64,
    /// `R_- e^{-i k_tau}`
    rm_e: Complex64,
    s: f64,
    tau: f64,
    q_plus: f64,
}

impl ChiTerms {
    fn new(wave: &PlaneWave, coupling: f64, tau: f64, q_plus: f64, q_minus: f64) -> Self {
        let km = wave.wave.k_minus();
        let rp = coupling * (km + q_minus).cos();
        let rm = coupling * (km - q_minus).cos();
        let ekt = Complex64::from_polar(1.0, wave.k_tau);
        Self {
            a2: wave.a2(),
            rc: wave.r * wave.k_tau.cos(),
            rs: wave.r * wave.k_tau.sin(),
            rp_e: rp * ekt,
            rm_e: rm * ekt.conj(),
            s: rp * rm,
            tau,
            q_plus,
        }
    }

    fn p0(&self, l: Complex64) -> Complex64 {
        l * l + 2.0 * (self.a2 + self.rc) * l + self.r2() + 2.0 * self.a2 * self.rc
    }

    fn r2(&self) -> f64 {
        self.rc * self.rc + self.rs * self.rs
    }

    fn p1(&self, l: Complex64) -> Complex64 {
        (self.a2 + self.rc + l) * (self.rp_e + self.rm_e) - I * self.rs * (self.rp_e - self.rm_e)
    }

    fn eval(&self, l: Complex64) -> Eval {
        let x = (-l * self.tau + I * self.q_plus).exp();
        let p0 = self.p0(l);
        let p1 = self.p1(l);
        let sx2 = self.s * x * x;
        let value = p0 - p1 * x + sx2;
        let dp0 = 2.0 * l + 2.0 * (self.a2 + self.rc);
        let dp1 = self.rp_e + self.rm_e;
        let derivative = dp0 - dp1 * x + self.tau * p1 * x - 2.0 * self.tau * sx2;
        let scale = l.norm_sqr()
            + 2.0 * (self.a2 + self.rc).abs() * l.norm()
            + self.r2()
            + 2.0 * (self.a2 * self.rc).abs()
            + ((self.a2 + self.rc).abs() + l.norm() + self.rs.abs())
                * (self.rp_e.norm() + self.rm_e.norm())
                * x.norm()
            + sx2.norm();
        Eval { value, derivative, scale }
    }

    /// Both solutions `X` of the quadratic at fixed `lambda`.
    fn x_roots(&self, l: Complex64) -> [Option<Complex64>; 2] {
        let p0 = self.p0(l);
        let p1 = self.p1(l);
        if self.s == 0.0 {
            return [(p1.norm() > 0.0).then(|| p0 / p1), None];
        }
        let disc = (p1 * p1 - 4.0 * self.s * p0).sqrt();
        let big = if (p1 + disc).norm() >= (p1 - disc).norm() { p1 + disc } else { p1 - disc };
        if big.norm() == 0.0 {
            return [None, None];
        }
        [Some(big / (2.0 * self.s)), Some(2.0 * p0 / big)]
    }
}

/// Plane-wave characteristic function `chi(lambda; q_minus, q_plus)`.
pub fn floquet_chi(
    wave: &PlaneWave,
    lambda: Complex64,
    q_plus: f64,
    q_minus: f64,
    coupling: f64,
    tau: f64,
) -> Complex64 {
    ChiTerms::new(wave, coupling, tau, q_plus, q_minus).eval(lambda).value
}

/// [`floquet_chi`] with derivative and magnitude scale.
pub fn floquet_chi_eval(
    wave: &PlaneWave,
    lambda: Complex64,
    q_plus: f64,
    q_minus: f64,
    coupling: f64,
    tau: f64,
) -> Eval {
    ChiTerms::new(wave, coupling, tau, q_plus, q_minus).eval(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    StrongUnstable,
    UniformUnstable,
    ModulationalUnstable,
}

impl StabilityClass {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::StrongUnstable => "strong",
            StabilityClass::UniformUnstable => "uniform",
            StabilityClass::ModulationalUnstable => "modulational",
        }
    }
}

/// Most unstable perturbation `(omega, q_minus, q_plus)` and its growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub max_growth: f64,
    pub witness: (f64, f64, f64),
}

/// Perturbation wavevectors used by the exact scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QGrid {
    /// All `rows x cols` admissible lattice modes.
    Lattice { rows: usize, cols: usize },
    /// Uniform `n x n` sampling of the continuum, `q_minus` in `(-pi, pi]`,
    /// `q_plus` in `(0, 2 pi]`.
    Continuous { n: usize },
}

impl QGrid {
    pub const INFINITE_LATTICE_SAMPLES: usize = 16;

    pub fn points(&self) -> Vec<WaveVector> {
        match *self {
            QGrid::Lattice { rows, cols } => enumerate_modes(rows, cols),
            QGrid::Continuous { n } => {
                let mut out = Vec::with_capacity(n * n);
                for i in 1..=n {
                    for j in 1..=n {
                        let qm = -PI + TAU * i as f64 / n as f64;
                        let qp = TAU * j as f64 / n as f64;
                        out.push(WaveVector::from_rotated(qp, qm));
                    }
                }
                out
            }
        }
    }
}

/// Search settings for [`floquet_exact`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    pub re_min: f64,
    /// `None` selects `max(1, 2 alpha)`.
    pub re_max: Option<f64>,
    /// `None` selects `3 |beta| + 3`.
    pub im_half_width: Option<f64>,
    pub grid: (usize, usize),
    /// Add seeds predicted by the large-delay structure of the spectrum.
    pub asymptotic_seeds: bool,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { re_min: -2.0, re_max: None, im_half_width: None, grid: (40, 40), asymptotic_seeds: true }
    }
}

impl FloquetOptions {
    pub fn window(&self, params: SlParams) -> Result<Window, RootError> {
        let re_max = self.re_max.unwrap_or_else(|| (2.0 * params.alpha).max(1.0));
        let h = self.im_half_width.unwrap_or(3.0 * params.beta.abs() + 3.0);
        Window::new(self.re_min, re_max, -h, h)
    }
}

/// Radius around `lambda = 0` at `q = 0` excluded as the phase-shift mode.
pub const TRIVIAL_EXCLUSION: f64 = 1e-6;
const GROWTH_TOLERANCE: f64 = 1e-9;

/// Roots of `chi` for one perturbation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub q: WaveVector,
    pub roots: RootSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetScan {
    pub verdict: StabilityVerdict,
    pub modes: Vec<ModeSpectrum>,
}

/// Exact Floquet scan of a plane wave over a set of perturbation modes.
pub fn floquet_exact(
    wave: &PlaneWave,
    params: SlParams,
    coupling: f64,
    tau: f64,
    qgrid: QGrid,
    options: &FloquetOptions,
) -> Result<FloquetScan, SlError> {
    if !(tau > 0.0) {
        return Err(SlError::NonPositiveDelay(tau));
    }
    let window = options.window(params).map_err(|source| SlError::RootSearch { q1: 0.0, q2: 0.0, source })?;
    let strong = strong_spectrum(wave, params);
    let mut max_growth = f64::NEG_INFINITY;
    let mut witness = (0.0, 0.0, 0.0);
    let mut modes = Vec::new();
    for q in qgrid.points() {
        let terms = ChiTerms::new(wave, coupling, tau, q.k_plus(), q.k_minus());
        let mut seeds = vec![strong.lambda_plus, strong.lambda_minus];
        if options.asymptotic_seeds {
            seeds.extend(asymptotic_seeds(&terms, &window));
        }
        let set = roots::find_roots_seeded(|l| terms.eval(l), window, options.grid, seeds)
            .map_err(|source| SlError::RootSearch { q1: q.k1(), q2: q.k2(), source })?;
        let trivial_mode = q.same_mode(&WaveVector::new(0.0, 0.0));
        for l in &set.roots {
            if trivial_mode && l.norm() <= TRIVIAL_EXCLUSION {
                continue;
            }
            if l.re > max_growth {
                max_growth = l.re;
                witness = (l.im, q.k_minus(), q.k_plus());
            }
        }
        modes.push(ModeSpectrum { q, roots: set });
    }
    let class = if max_growth <= GROWTH_TOLERANCE {
        StabilityClass::Stable
    } else {
        unstable_class(wave, params)
    };
    Ok(FloquetScan { verdict: StabilityVerdict { class, max_growth, witness }, modes })
}

fn unstable_class(wave: &PlaneWave, params: SlParams) -> StabilityClass {
    if wave.a2() < strong_threshold(params.alpha, wave.r) {
        StabilityClass::StrongUnstable
    } else if wave.k_tau.cos() < 0.0 {
        StabilityClass::UniformUnstable
    } else {
        StabilityClass::ModulationalUnstable
    }
}

/// Fixed-point predictions of the pseudo-continuous roots:
/// `lambda = (i q_plus - log X(lambda) + 2 pi i n) / tau` on both quadratic branches.
fn asymptotic_seeds(terms: &ChiTerms, window: &Window) -> Vec<Complex64> {
    let tau = terms.tau;
    let n_lo = (window.im_min * tau / TAU).floor() as i64 - 1;
    let n_hi = (window.im_max * tau / TAU).ceil() as i64 + 1;
    let mut out = Vec::new();
    for n in n_lo..=n_hi {
        for branch in 0..2 {
            let mut l = Complex64::new(0.0, TAU * n as f64 / tau);
            let mut ok = true;
            for _ in 0..6 {
                let Some(x) = terms.x_roots(l)[branch] else {
                    ok = false;
                    break;
                };
                if x.norm() == 0.0 || !x.re.is_finite() {
                    ok = false;
                    break;
                }
                l = (I * terms.q_plus - x.ln() + I * (TAU * n as f64)) / tau;
            }
            if ok && l.re.is_finite() {
                out.push(l);
            }
        }
    }
    out
}

/// Delay-independent part of the plane-wave spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongSpectrum {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Amplitude below which a strongly unstable eigenvalue exists.
    pub a_s: f64,
}

/// Squared amplitude `a_S^2(alpha; R)` below which the strong spectrum is unstable.
pub fn strong_threshold(alpha: f64, r: f64) -> f64 {
    let r = r.abs();
    if alpha <= SQRT_2 * r {
        0.5 * alpha
    } else {
        0.5 * (alpha + (alpha * alpha - 2.0 * r * r).sqrt())
    }
}

/// Roots of `lambda^2 + 2(2a^2 - alpha) lambda + 2a^2(a^2 - alpha) + R^2`.
pub fn strong_spectrum(wave: &PlaneWave, params: SlParams) -> StrongSpectrum {
    let a2 = wave.a2();
    let alpha = params.alpha;
    let disc = Complex64::new(a2 * a2 + (a2 - alpha).powi(2) - wave.r * wave.r, 0.0).sqrt();
    let center = Complex64::new(alpha - 2.0 * a2, 0.0);
    StrongSpectrum {
        lambda_plus: center + disc,
        lambda_minus: center - disc,
        a_s: strong_threshold(alpha, wave.r).max(0.0).sqrt(),
    }
}

/// The two large-delay multipliers `Y_{+-}(omega, q_minus)`.
pub fn floquet_y(wave: &PlaneWave, coupling: f64, omega: f64, q_minus: f64) -> (Complex64, Complex64) {
    let km = wave.wave.k_minus();
    let a2 = wave.a2();
    let (ckt, skt) = (wave.k_tau.cos(), wave.k_tau.sin());
    let r = wave.r;
    let s = coupling * coupling * (km + q_minus).cos() * (km - q_minus).cos();
    let a = coupling
        * ((r + a2 * ckt) * km.cos() * q_minus.cos() + omega * skt * km.sin() * q_minus.sin());
    let b = coupling
        * (-a2 * skt * km.sin() * q_minus.sin() + omega * ckt * km.cos() * q_minus.cos());
    let d = r * r - omega * omega + 2.0 * r * a2 * ckt;
    let e = 2.0 * omega * (a2 + r * ckt);
    let ab = Complex64::new(a, b);
    let de = Complex64::new(d, e);
    let zeta = Complex64::new(a * a - b * b - s * d, 2.0 * a * b - s * e);
    let root = zeta.sqrt();
    // Y+ Y- = (D + iE)/S: take the non-cancelling combination directly and
    // recover the other from the product
    let plus = ab + root;
    let minus = ab - root;
    if plus.norm() >= minus.norm() {
        (plus / s, de / plus)
    } else {
        (de / minus, minus / s)
    }
}

/// `(gamma_+, gamma_-) = (-log|Y_+|, -log|Y_-|)`.
pub fn floquet_pcs(wave: &PlaneWave, coupling: f64, omega: f64, q_minus: f64) -> (f64, f64) {
    let (yp, ym) = floquet_y(wave, coupling, omega, q_minus);
    (-yp.norm().ln(), -ym.norm().ln())
}

/// Largest `max(gamma_+, gamma_-)` over an `n x n` grid of `(omega, q_minus)`
/// excluding the trivial point, with the location of the maximum.
pub fn pcs_max_growth(wave: &PlaneWave, coupling: f64, omega_max: f64, n: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..n {
        let w = -omega_max + 2.0 * omega_max * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let q = -PI + TAU * (j as f64 + 0.5) / n as f64;
            let (gp, gm) = floquet_pcs(wave, coupling, w, q);
            let g = gp.max(gm);
            if g > best.0 {
                best = (g, w, q);
            }
        }
    }
    best
}

/// Real roots `a^2` of the neutral-stability cubic
/// `a^6 - 5/2 alpha a^4 + (2 alpha^2 - R^2/2 (1 + 2 sin^2 k_-)) a^2 - alpha^3/2 + R^2 alpha/2 (1 + sin^2 k_-)`.
pub fn neutral_amplitude(alpha: f64, coupling: f64, k_minus: f64) -> Vec<f64> {
    let r2 = (coupling * k_minus.cos()).powi(2);
    let s2 = k_minus.sin().powi(2);
    roots::solve_cubic_real(
        1.0,
        -2.5 * alpha,
        2.0 * alpha * alpha - 0.5 * r2 * (1.0 + 2.0 * s2),
        -0.5 * alpha.powi(3) + 0.5 * r2 * alpha * (1.0 + s2),
    )
    .expect("leading coefficient is one")
}

/// Eckhaus amplitude `a_M^2 = (3 alpha + sqrt(alpha^2 + 8 C^2)) / 4` of the diagonal waves.
pub fn eckhaus_amplitude(alpha: f64, coupling: f64) -> f64 {
    0.25 * (3.0 * alpha + (alpha * alpha + 8.0 * coupling * coupling).sqrt())
}

/// Smallest `alpha` at which the wave with given `(k_minus, k_tau)` is stable
/// against long-wave perturbations.
pub fn alpha0(k_minus: f64, k_tau: f64, coupling: f64) -> Result<f64, SlError> {
    let d = k_minus.cos().powi(2) - k_tau.sin().powi(2);
    if d.abs() < 1e-14 {
        return Err(SlError::Pole);
    }
    let r = coupling * k_minus.cos();
    Ok(r * k_tau.cos() * (1.0 - 2.0 * d) / d)
}

/// Second derivatives of `gamma_-` at `(omega, q_minus) = (0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hessian {
    pub ww: f64,
    pub wq: f64,
    pub qq: f64,
}

impl Hessian {
    pub fn negative_definite(&self) -> bool {
        self.ww < 0.0 && self.ww * self.qq - self.wq * self.wq > 0.0
    }
}

pub fn hessian_at_trivial(wave: &PlaneWave) -> Result<Hessian, SlError> {
    let (c, s) = (wave.k_tau.cos(), wave.k_tau.sin());
    if !(c > 0.0) {
        return Err(SlError::Regime { cos_k_tau: c });
    }
    let r = wave.r;
    let a2 = wave.a2();
    let tkm = wave.wave.k_minus().tan();
    let tkt = s / c;
    Ok(Hessian {
        ww: (r / a2 * s * s / c - 1.0) / (r * r * c * c),
        qq: -1.0 + r * tkm * tkm / (a2 * c.powi(3)) + tkm * tkm * tkt * tkt,
        wq: tkm * tkt / (a2 * c * c),
    })
}

/// Sign of this expression decides negative definiteness of the Hessian:
/// `(cos^2 k_tau - sin^2 k_-)(R cos k_tau + a^2) - R cos k_tau`.
pub fn modulational_margin(wave: &PlaneWave) -> f64 {
    let c = wave.k_tau.cos();
    let s = wave.wave.k_minus().sin();
    (c * c - s * s) * (wave.r * c + wave.a2()) - wave.r * c
}

/// Large-delay classification from the strong spectrum, the trivial
/// multiplier, and the curvature at the trivial point.
pub fn asymptotic_class(wave: &PlaneWave, params: SlParams) -> StabilityClass {
    if wave.a2() < strong_threshold(params.alpha, wave.r) {
        StabilityClass::StrongUnstable
    } else if wave.k_tau.cos() < 0.0 {
        StabilityClass::UniformUnstable
    } else if modulational_margin(wave) <= 0.0 {
        StabilityClass::ModulationalUnstable
    } else {
        StabilityClass::Stable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SL: SlParams = SlParams { alpha: -2.0, beta: 0.5 };

    fn random_wave(rng: &mut ChaCha8Rng) -> (PlaneWave, SlParams, f64, f64) {
        loop {
            let params = SlParams { alpha: rng.gen_range(-1.0..3.0), beta: rng.gen_range(-1.0..1.0) };
            let c = rng.gen_range(0.5..3.0);
            let tau = rng.gen_range(1.0..40.0);
            let wv = WaveVector::new(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
            let r = c * wv.k_minus().cos();
            let waves: Vec<_> = roots::solve_kepler(params.beta, r, wv.k_plus(), tau)
                .into_iter()
                .filter_map(|w| PlaneWave::from_frequency(params, c, tau, wv, w))
                .collect();
            if !waves.is_empty() {
                let i = rng.gen_range(0..waves.len());
                return (waves[i], params, c, tau);
            }
        }
    }

    #[test]
    fn uncoupled_steady_state_has_single_eigenvalue() {
        let set = stst_eigenvalues(SL, 0.0, 20.0, WaveVector::new(0.0, 0.0), -3..=3).unwrap();
        assert_eq!(set.roots, vec![Complex64::new(-2.0, 0.5)]);
        // decoupled mode: cos k_minus = 0
        let wv = WaveVector::new(PI / 2.0, -PI / 2.0);
        let set = stst_eigenvalues(SL, 2.0, 20.0, wv, -3..=3).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn steady_state_critical_and_stable_cases() {
        let wv = WaveVector::new(0.0, 0.0);
        let crit = stst_eigenvalues(SL, 2.0, 20.0, wv, -20..=20).unwrap();
        let right = crit.rightmost().unwrap();
        assert!(right.re.abs() < 5e-3, "{right}");
        let stable = SlParams { alpha: -2.5, ..SL };
        for wv in enumerate_modes(3, 3) {
            let set = stst_eigenvalues(stable, 2.0, 20.0, wv, -40..=40).unwrap();
            assert!(set.roots.iter().all(|l| l.re < 0.0));
        }
    }

    #[test]
    fn stst_pcs_values() {
        assert_eq!(stst_pcs(SL, 2.0, 0.0, 0.5).unwrap(), 0.0);
        let g = stst_pcs(SlParams { alpha: -2.5, beta: 0.5 }, 2.0, 0.0, 0.5).unwrap();
        assert!((g + 1.25f64.ln()).abs() < 1e-15);
        assert!((g + 0.22314).abs() < 1e-5);
        assert!(matches!(stst_pcs(SL, 2.0, PI / 2.0, 0.5), Err(SlError::Decoupled)));
        for (i, km) in [0.0, 0.3, 1.0].iter().enumerate() {
            for w in [-1.0, 0.0, 0.49, 0.51, 2.0] {
                let g = stst_pcs(SL, 2.0, *km, w).unwrap();
                assert!(g <= stst_pcs(SL, 2.0, 0.0, 0.5).unwrap() + 1e-15, "{i}");
            }
        }
    }

    #[test]
    fn hopf_threshold_without_delay_is_minus_c() {
        assert_eq!(hopf_threshold(0.5, 2.0, 0.0, 3, 3).unwrap(), -2.0);
    }

    #[test]
    fn hopf_threshold_approaches_minus_c() {
        let a20 = hopf_threshold(0.5, 2.0, 20.0, 3, 3).unwrap();
        let a200 = hopf_threshold(0.5, 2.0, 200.0, 3, 3).unwrap();
        assert!((a20 + 2.0).abs() <= 0.1, "{a20}");
        assert!((a200 + 2.0).abs() < (a20 + 2.0).abs(), "{a20} {a200}");
    }

    #[test]
    fn no_waves_below_the_circles() {
        let spec = LatticeSpec::new(3, 3, crate::ModelParams::StuartLandau(SL), 2.0).unwrap();
        let p = SlParams { alpha: -2.1, beta: 0.5 };
        assert!(enumerate_plane_waves(p, 2.0, 20.0, &spec.modes()).is_empty());
    }

    #[test]
    fn enumerated_waves_satisfy_invariants() {
        let p = SlParams { alpha: 1.0, beta: 0.5 };
        let waves = enumerate_plane_waves(p, 2.0, 20.0, &enumerate_modes(3, 3));
        assert!(!waves.is_empty());
        for w in &waves {
            let (amp, freq, circle) = w.invariant_residuals(p);
            assert!(amp <= 1e-12 && freq <= 1e-12 && circle <= 1e-10);
            assert!(w.amplitude > 0.0);
        }
    }

    #[test]
    fn hopf_count_on_three_by_three() {
        let count = hopf_count(0.5, 2.0, 20.0, &enumerate_modes(3, 3)) as f64;
        let est = hopf_count_estimate(3, 2.0, 20.0);
        assert!((count / est - 1.0).abs() <= 0.15, "{count} vs {est}");
    }

    #[test]
    fn trivial_exponent_and_symmetry_of_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (w, _, c, tau) = random_wave(&mut rng);
            let e = floquet_chi_eval(&w, Complex64::new(0.0, 0.0), 0.0, 0.0, c, tau);
            assert!(e.relative_residual() <= 1e-12, "{}", e.relative_residual());

            let l = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
            let (qp, qm) = (rng.gen_range(0.0..TAU), rng.gen_range(-PI..PI));
            let mirrored = PlaneWave { k_tau: -w.k_tau, ..w };
            let lhs = floquet_chi(&mirrored, l.conj(), -qp, qm, c, tau).conj();
            let rhs = floquet_chi(&w, l, qp, qm, c, tau);
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }

    /// Independent route: the 2x2 system in the raw lattice variables.
    fn chi_by_determinant(
        w: &PlaneWave,
        p: SlParams,
        c: f64,
        tau: f64,
        l: Complex64,
        q1: f64,
        q2: f64,
    ) -> Complex64 {
        let (k1, k2) = (w.wave.k1(), w.wave.k2());
        let a2 = w.a2();
        let om = w.omega;
        let e = |x: f64| Complex64::from_polar(1.0, x);
        let m11 = Complex64::new(p.alpha - 2.0 * a2, p.beta - om) - l
            + 0.5 * c * (-(l + I * om) * tau).exp() * (e(k1 + q1) + e(k2 + q2));
        let m22 = Complex64::new(p.alpha - 2.0 * a2, om - p.beta) - l
            + 0.5 * c * (-(l - I * om) * tau).exp() * (e(-(k1 - q1)) + e(-(k2 - q2)));
        m11 * m22 - a2 * a2
    }

    #[test]
    fn chi_matches_determinant_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (w, p, c, tau) = random_wave(&mut rng);
            let l = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-3.0..3.0));
            let (q1, q2) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
            let qp = 0.5 * (q1 + q2);
            let qm = 0.5 * (q1 - q2);
            let e = floquet_chi_eval(&w, l, qp, qm, c, tau);
            let oracle = chi_by_determinant(&w, p, c, tau, l, q1, q2);
            assert!(
                (e.value - oracle).norm() <= 1e-12 * e.scale.max(1.0),
                "{} vs {} (scale {})",
                e.value,
                oracle,
                e.scale
            );
        }
    }

    #[test]
    fn chi_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (w, _, c, tau) = random_wave(&mut rng);
            let l = Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-2.0..2.0));
            let h = 1e-6;
            let f = |z| floquet_chi(&w, z, 0.4, 0.3, c, tau);
            let fd = (f(l + h) - f(l - h)) / (2.0 * h);
            let e = floquet_chi_eval(&w, l, 0.4, 0.3, c, tau);
            assert!((fd - e.derivative).norm() <= 1e-6 * e.derivative.norm().max(e.scale));
        }
    }

    #[test]
    fn strong_spectrum_cases() {
        let wv = WaveVector::new(0.0, 0.0);
        let w = PlaneWave { amplitude: 0.5, omega: 0.0, wave: wv, k_tau: 0.0, r: 1.0 };
        assert_eq!(strong_spectrum(&w, SlParams { alpha: 0.0, beta: 0.0 }).a_s, 0.0);

        // complex pair when a^4 + (a^2 - alpha)^2 < R^2
        let p = SlParams { alpha: 1.0, beta: 0.0 };
        let w = PlaneWave { amplitude: 0.8, omega: 0.0, wave: wv, k_tau: 0.0, r: 2.0 };
        let s = strong_spectrum(&w, p);
        assert!((s.lambda_plus - s.lambda_minus.conj()).norm() < 1e-15);
        assert!((s.lambda_plus.re - (1.0 - 2.0 * 0.64)).abs() < 1e-15);

        // second case of the threshold: the reduced quadratic has a zero root at a_S
        let alpha = 2.0 * SQRT_2;
        let p = SlParams { alpha, beta: 0.0 };
        let as2 = strong_threshold(alpha, 1.0);
        assert!((as2 - 0.5 * (alpha + (alpha * alpha - 2.0).sqrt())).abs() < 1e-15);
        let quad_max_re = |a2: f64| {
            // oracle: quadratic formula on lambda^2 + b lambda + c
            let b = 2.0 * (2.0 * a2 - alpha);
            let c = 2.0 * a2 * (a2 - alpha) + 1.0;
            let d = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
            ((-b + d) / 2.0).re.max(((-b - d) / 2.0).re)
        };
        assert!(quad_max_re(as2 - 1e-6) > 0.0 && quad_max_re(as2 + 1e-6) < 0.0);
        let below = PlaneWave { amplitude: (as2 - 1e-3).sqrt(), omega: 0.0, wave: wv, k_tau: 0.0, r: 1.0 };
        let s = strong_spectrum(&below, p);
        assert!(s.lambda_plus.re.max(s.lambda_minus.re) > 0.0);
        assert!((quad_max_re(as2 - 1e-3) - s.lambda_plus.re.max(s.lambda_minus.re)).abs() < 1e-12);
    }

    #[test]
    fn trivial_multiplier_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 30 {
            let (w, _, c, _) = random_wave(&mut rng);
            if w.k_tau.cos() < 0.0 || w.r <= 0.0 {
                continue;
            }
            let (gp, gm) = floquet_pcs(&w, c, 0.0, 0.0);
            assert!(gm.abs() < 1e-12, "{gm}");
            let want = -(1.0 + 2.0 * w.a2() / w.r * w.k_tau.cos()).ln();
            assert!((gp - want).abs() < 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn pcs_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let (w, _, c, _) = random_wave(&mut rng);
            let om = rng.gen_range(-3.0..3.0);
            let q = rng.gen_range(-PI..PI);
            let (gp, gm) = floquet_pcs(&w, c, om, q);
            let (gp2, gm2) = floquet_pcs(&w, c, -om, -q);
            assert!((gp - gp2).abs() < 1e-10 && (gm - gm2).abs() < 1e-10);
            let (gp3, _) = floquet_pcs(&w, c, om, q + PI);
            assert!((gp3 - gm).abs() < 1e-10);
        }
    }

    #[test]
    fn neutral_amplitude_closed_form() {
        let roots = neutral_amplitude(1.0, 2.0, 0.0);
        let top = *roots.last().unwrap();
        assert!((top - (3.0 + 33f64.sqrt()) / 4.0).abs() < 1e-12);
        assert!((top - 2.18614).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (alpha, c, km) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.1..3.0), rng.gen_range(-1.5..1.5));
            let r2 = (c * f64::cos(km)).powi(2);
            let s2 = f64::sin(km).powi(2);
            for x in neutral_amplitude(alpha, c, km) {
                let p = x.powi(3) - 2.5 * alpha * x * x
                    + (2.0 * alpha * alpha - 0.5 * r2 * (1.0 + 2.0 * s2)) * x
                    - 0.5 * alpha.powi(3)
                    + 0.5 * r2 * alpha * (1.0 + s2);
                let scale = 1.0 + alpha.abs().powi(3) + r2 * (1.0 + alpha.abs());
                assert!(p.abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn alpha0_values() {
        assert_eq!(alpha0(0.0, 0.0, 2.0).unwrap(), -2.0);
        assert_eq!(alpha0(0.0, 0.0, 1.0).unwrap(), -1.0);
        assert_eq!(alpha0(0.3, 0.7, 2.0).unwrap(), alpha0(0.3, -0.7, 2.0).unwrap());
        assert!(matches!(alpha0(0.0, PI / 2.0, 2.0), Err(SlError::Pole)));
        // at alpha_0 the margin of the wave with these (k_minus, k_tau) vanishes
        let (km, kt, c) = (0.3, 0.4, 2.0);
        let a0 = alpha0(km, kt, c).unwrap();
        let r = c * f64::cos(km);
        let w = PlaneWave {
            amplitude: (a0 + r * f64::cos(kt)).max(0.0).sqrt(),
            omega: 0.0,
            wave: WaveVector::from_rotated(0.0, km),
            k_tau: kt,
            r,
        };
        if w.a2() > 0.0 {
            assert!(modulational_margin(&w).abs() < 1e-12);
        }
        // diagonal synchronous wave at onset: a^2 -> 0 on the circle means
        // alpha = -C, and the neutral cubic has the root a^2 = 0 there
        let roots = neutral_amplitude(-2.0, 2.0, 0.0);
        assert!(roots.iter().any(|x| x.abs() < 1e-9), "{roots:?}");
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        while checked < 25 {
            let (w, _, c, _) = random_wave(&mut rng);
            if w.k_tau.cos() < 0.2 || w.wave.k_minus().abs() > 1.2 {
                continue;
            }
            let h = 1e-4;
            let g = |om: f64, q: f64| floquet_pcs(&w, c, om, q).1;
            let fww = (g(h, 0.0) - 2.0 * g(0.0, 0.0) + g(-h, 0.0)) / (h * h);
            let fqq = (g(0.0, h) - 2.0 * g(0.0, 0.0) + g(0.0, -h)) / (h * h);
            let fwq = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
            let hs = hessian_at_trivial(&w).unwrap();
            let scale = hs.ww.abs().max(hs.qq.abs()).max(hs.wq.abs()).max(1.0);
            if scale > 100.0 {
                // near-degenerate curvature; the difference quotient loses accuracy
                continue;
            }
            assert!((fww - hs.ww).abs() <= 1e-3 * scale, "{fww} {}", hs.ww);
            assert!((fqq - hs.qq).abs() <= 1e-3 * scale, "{fqq} {}", hs.qq);
            assert!((fwq - hs.wq).abs() <= 1e-3 * scale, "{fwq} {}", hs.wq);
            // definiteness flips exactly where the margin changes sign
            assert_eq!(hs.negative_definite(), modulational_margin(&w) > 0.0, "{hs:?}");
            checked += 1;
        }
        let wv = WaveVector::new(0.0, 0.0);
        let w = PlaneWave { amplitude: 1.0, omega: 0.0, wave: wv, k_tau: 0.3, r: 2.0 };
        assert_eq!(hessian_at_trivial(&w).unwrap().wq, 0.0);
        let w = PlaneWave { k_tau: 2.0, ..w };
        assert!(matches!(hessian_at_trivial(&w), Err(SlError::Regime { .. })));
    }

    #[test]
    fn asymptotic_classes_are_layered_by_amplitude() {
        let c = 2.0;
        for alpha in [0.5, 1.0, 2.0, 3.5] {
            let p = SlParams { alpha, beta: 0.5 };
            let wv = WaveVector::new(0.0, 0.0);
            let mut waves = enumerate_plane_waves(p, c, 50.0, &[wv]);
            waves.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
            let rank = |k: StabilityClass| match k {
                StabilityClass::StrongUnstable => 0,
                StabilityClass::UniformUnstable | StabilityClass::ModulationalUnstable => 1,
                StabilityClass::Stable => 2,
            };
            let ranks: Vec<_> = waves.iter().map(|w| rank(asymptotic_class(w, p))).collect();
            assert!(ranks.windows(2).all(|p| p[0] <= p[1]), "alpha {alpha}: {ranks:?}");
            // the stable layer starts at the Eckhaus amplitude
            for w in &waves {
                let stable = asymptotic_class(w, p) == StabilityClass::Stable;
                assert_eq!(stable, w.a2() > eckhaus_amplitude(alpha, c), "{w:?}");
            }
        }
    }

    #[test]
    fn uniform_and_strong_waves_are_unstable_exactly() {
        let p = SlParams { alpha: 1.0, beta: 0.5 };
        let (c, tau) = (2.0, 20.0);
        let wv = WaveVector::new(0.0, 0.0);
        let waves = enumerate_plane_waves(p, c, tau, &[wv]);
        let opts = FloquetOptions::default();
        let grid = QGrid::Lattice { rows: 2, cols: 2 };
        let uniform = waves
            .iter()
            .find(|w| w.k_tau.cos() < 0.0 && w.a2() > strong_threshold(p.alpha, w.r) + 0.05)
            .unwrap();
        let v = floquet_exact(uniform, p, c, tau, grid, &opts).unwrap().verdict;
        assert_eq!(v.class, StabilityClass::UniformUnstable, "{v:?}");
        let strong = waves.iter().min_by(|a, b| a.amplitude.total_cmp(&b.amplitude)).unwrap();
        assert!(strong.a2() < strong_threshold(p.alpha, strong.r));
        let v = floquet_exact(strong, p, c, tau, grid, &opts).unwrap().verdict;
        assert_eq!(v.class, StabilityClass::StrongUnstable, "{v:?}");
        assert!(v.max_growth > 0.05, "{v:?}");
    }

    #[test]
    fn eckhaus_stable_diagonal_wave_at_long_delay() {
        let p = SlParams { alpha: 3.0, beta: 0.5 };
        let (c, tau) = (2.0, 50.0);
        let wv = WaveVector::new(0.0, 0.0);
        let am2 = eckhaus_amplitude(p.alpha, c);
        let waves = enumerate_plane_waves(p, c, tau, &[wv]);
        let w = waves
            .iter()
            .filter(|w| w.a2() > am2)
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
            .unwrap();
        let scan = floquet_exact(w, p, c, tau, QGrid::Lattice { rows: 4, cols: 4 }, &FloquetOptions::default())
            .unwrap();
        assert_eq!(scan.verdict.class, StabilityClass::Stable, "{:?}", scan.verdict);
        // the phase-shift root is present at q = 0 but excluded from the verdict
        let q0 = &scan.modes[0];
        assert!(q0.q.same_mode(&WaveVector::new(0.0, 0.0)));
        assert!(q0.roots.roots.iter().any(|l| l.norm() < 1e-8));
    }

    #[test]
    fn steady_state_roots_approach_the_curve() {
        let wv = WaveVector::new(0.0, 0.0);
        let mut last = f64::INFINITY;
        for tau in [20.0, 50.0, 100.0, 200.0] {
            let span = crate::lambertw::branch_span(2.5 * tau + 10.0);
            let set = stst_eigenvalues(SL, 2.0, tau, wv, -span..=span).unwrap();
            let worst = set
                .roots
                .iter()
                .filter(|l| l.im.abs() <= 2.0)
                .map(|l| stst_pcs_distance(SL, 2.0, 0.0, tau, *l).unwrap())
                .fold(0.0, f64::max);
            assert!(worst < last, "tau {tau}: {worst} !< {last}");
            last = worst;
        }
    }
}
