//! FitzHugh-Nagumo lattice analytics.
//!
//! Node dynamics with a synaptic gate `s` driven by delayed presynaptic activity:
//!
//! ```text
//! v' = v - v^3/3 - w + I + (C/2)(v_r - v)(s_up(t - tau) + s_left(t - tau))
//! w' = eps (v + a - b w)
//! s' = alpha(v)(1 - s) - 0.6 s,   alpha(v) = 0.5 / (1 + exp(-5 (v - 1)))
//! ```

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FhnParams, WaveVector};
use crate::roots::{self, Eval, RootError, RootSet, Window};

/// Decay rate of the synaptic gate.
pub const GATE_DECAY: f64 = 0.6;
/// Interval scanned for rest states.
pub const STEADY_RANGE: (f64, f64) = (-5.0, 5.0);
const STEADY_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FhnError {
    #[error("mode is decoupled (cos k_minus = 0); the delayed term vanishes")]
    Decoupled,
    #[error("coupling entry vanishes (a31 b13 = 0); the dispersion relation is undefined")]
    NoFeedback,
    #[error("bracket [{lo}, {hi}] does not enclose the saddle-node coupling")]
    Bracket { lo: f64, hi: f64 },
    #[error(transparent)]
    Roots(#[from] RootError),
}

/// Presynaptic opening rate `alpha(v)`.
pub fn gate_rate(v: f64) -> f64 {
    0.5 / (1.0 + (-5.0 * (v - 1.0)).exp())
}

fn gate_rate_prime(v: f64) -> f64 {
    let a = gate_rate(v);
    5.0 * a * (1.0 - 2.0 * a)
}

/// Resting gate value `alpha / (alpha + 0.6)`.
pub fn gate_rest(v: f64) -> f64 {
    let a = gate_rate(v);
    a / (a + GATE_DECAY)
}

fn gate_rest_prime(v: f64) -> f64 {
    let a = gate_rate(v);
    GATE_DECAY * gate_rate_prime(v) / (a + GATE_DECAY).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnSteadyState {
    pub v: f64,
    pub w: f64,
    pub s: f64,
}

impl FhnSteadyState {
    pub fn at(params: &FhnParams, v: f64) -> Self {
        Self { v, w: (v + params.a) / params.b, s: gate_rest(v) }
    }
}

/// Scalar rest-state equation in `v` after eliminating `w` and `s`.
pub fn steady_residual(params: &FhnParams, coupling: f64, v: f64) -> f64 {
    v - v.powi(3) / 3.0 - (v + params.a) / params.b
        + params.current
        + coupling * (params.v_r - v) * gate_rest(v)
}

fn steady_residual_prime(params: &FhnParams, coupling: f64, v: f64) -> f64 {
    1.0 - v * v - 1.0 / params.b + coupling * synaptic_slope(params, v)
}

/// `d/dv [(v_r - v) s(v)]`.
fn synaptic_slope(params: &FhnParams, v: f64) -> f64 {
    (params.v_r - v) * gate_rest_prime(v) - gate_rest(v)
}

/// Current that makes `v` a rest state.
pub fn current_for_rest(params: &FhnParams, coupling: f64, v: f64) -> f64 {
    -steady_residual(&FhnParams { current: 0.0, ..*params }, coupling, v)
}

/// All rest states with `v` in [`STEADY_RANGE`], ordered by `v`.
pub fn steady_states(params: &FhnParams, coupling: f64) -> Vec<FhnSteadyState> {
    steady_states_in(params, coupling, STEADY_RANGE.0, STEADY_RANGE.1)
}

pub fn steady_states_in(params: &FhnParams, coupling: f64, lo: f64, hi: f64) -> Vec<FhnSteadyState> {
    let g = |v| steady_residual(params, coupling, v);
    let dg = |v| steady_residual_prime(params, coupling, v);
    let steps = ((hi - lo) / STEADY_STEP).ceil() as usize;
    let mut out: Vec<f64> = Vec::new();
    let mut x0 = lo;
    let mut g0 = g(x0);
    for i in 1..=steps {
        let x1 = (lo + i as f64 * STEADY_STEP).min(hi);
        let g1 = g(x1);
        if g0 == 0.0 {
            out.push(x0);
        } else if g0 * g1 < 0.0 {
            out.push(roots::refine_bracket(&g, &dg, x0, x1));
        }
        x0 = x1;
        g0 = g1;
    }
    if g0 == 0.0 {
        out.push(x0);
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    out.into_iter().map(|v| FhnSteadyState::at(params, v)).collect()
}

/// Currents at which rest states fold, ordered increasingly. Empty below the
/// saddle-node coupling.
pub fn fold_currents(params: &FhnParams, coupling: f64) -> Vec<f64> {
    let d = |v| steady_residual_prime(params, coupling, v);
    let dd = |v| {
        let h = 1e-6;
        (d(v + h) - d(v - h)) / (2.0 * h)
    };
    let (lo, hi) = STEADY_RANGE;
    let steps = ((hi - lo) / STEADY_STEP).ceil() as usize;
    let mut out = Vec::new();
    for i in 0..steps {
        let (x0, x1) = (lo + i as f64 * STEADY_STEP, lo + (i + 1) as f64 * STEADY_STEP);
        if d(x0) * d(x1) < 0.0 {
            let v = roots::refine_bracket(&d, &dd, x0, x1);
            out.push(current_for_rest(params, coupling, v));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `max_v g'(v)`: positive exactly when a fold exists at this coupling.
fn fold_margin(params: &FhnParams, coupling: f64) -> (f64, f64) {
    let (lo, hi) = STEADY_RANGE;
    let steps = ((hi - lo) / STEADY_STEP).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=steps {
        let v = lo + i as f64 * STEADY_STEP;
        let d = steady_residual_prime(params, coupling, v);
        if d > best.0 {
            best = (d, v);
        }
    }
    best
}

/// Smallest coupling at which a saddle-node of rest states exists for some current.
///
/// Bisects on the sign of `max_v g'(v)`, then polishes the cusp point
/// `g'(v) = g''(v) = 0` by Newton in `(v, C)`.
pub fn saddle_node_coupling(params: &FhnParams) -> Result<f64, FhnError> {
    let (mut lo, mut hi) = (0.0, 10.0);
    if fold_margin(params, lo).0 >= 0.0 || fold_margin(params, hi).0 <= 0.0 {
        return Err(FhnError::Bracket { lo, hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if fold_margin(params, mid).0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    let mut v = fold_margin(params, c).1;
    // g'(v; C) = 1 - v^2 - 1/b + C h(v); at the cusp also g'' = -2v + C h'(v) = 0
    let h = |v| synaptic_slope(params, v);
    let step = 1e-5;
    let dh = |v| (h(v + step) - h(v - step)) / (2.0 * step);
    let ddh = |v| (h(v + step) - 2.0 * h(v) + h(v - step)) / (step * step);
    for _ in 0..30 {
        let f1 = 1.0 - v * v - 1.0 / params.b + c * h(v);
        let f2 = -2.0 * v + c * dh(v);
        let (j11, j12) = (f2, h(v));
        let (j21, j22) = (-2.0 + c * ddh(v), dh(v));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 {
            break;
        }
        let dv = (f1 * j22 - f2 * j12) / det;
        let dc = (j11 * f2 - j21 * f1) / det;
        v -= dv;
        c -= dc;
        if dv.abs() + dc.abs() < 1e-13 {
            break;
        }
    }
    if (c - 0.5 * (lo + hi)).abs() > 1e-4 {
        // Newton wandered off; the bisection value is accurate to 1e-6
        return Ok(0.5 * (lo + hi));
    }
    Ok(c)
}

/// Instantaneous and delayed Jacobians of one node at a rest state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationPair {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
}

impl LinearizationPair {
    pub fn new(stst: &FhnSteadyState, params: &FhnParams, coupling: f64) -> Self {
        let al = gate_rate(stst.v);
        let mut a = Matrix3::zeros();
        a[(0, 0)] = 1.0 - stst.v * stst.v - coupling * stst.s;
        a[(0, 1)] = -1.0;
        a[(1, 0)] = params.eps;
        a[(1, 1)] = -params.b * params.eps;
        a[(2, 0)] = 5.0 * al * (1.0 - 2.0 * al) * (1.0 - stst.s);
        a[(2, 2)] = -al - GATE_DECAY;
        let mut b = Matrix3::zeros();
        b[(0, 2)] = 0.5 * coupling * (params.v_r - stst.v);
        Self { a, b }
    }

    pub fn b13(&self) -> f64 {
        self.b[(0, 2)]
    }

    /// `det(-lambda + A + 2 cos(k_-) e^{i k_+} e^{-lambda tau} B)` with derivative.
    pub fn characteristic(&self, wave: &WaveVector, tau: f64, lambda: Complex64) -> Eval {
        let a = &self.a;
        let (a11, a12, a21, a22, a31, a33) =
            (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)], a[(2, 0)], a[(2, 2)]);
        let gain = 2.0 * wave.k_minus().cos() * self.b13() * a31;
        let e = gain * (Complex64::new(0.0, wave.k_plus()) - lambda * tau).exp();
        let (x, y, z) = (a11 - lambda, a22 - lambda, a33 - lambda);
        let p = x * y * z - a12 * a21 * z;
        let dp = -(y * z + x * z + x * y) + a12 * a21;
        let value = p - e * y;
        let derivative = dp + e + tau * e * y;
        let scale = x.norm() * y.norm() * z.norm() + (a12 * a21).abs() * z.norm() + e.norm() * y.norm();
        Eval { value, derivative, scale }
    }

    pub fn instantaneous_eigenvalues(&self) -> Vec<Complex64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

/// Exact characteristic roots of one Fourier mode inside `window`.
pub fn char_roots(
    stst: &FhnSteadyState,
    params: &FhnParams,
    coupling: f64,
    tau: f64,
    wave: &WaveVector,
    window: Window,
) -> Result<RootSet, FhnError> {
    char_roots_with_grid(stst, params, coupling, tau, wave, window, (40, 40))
}

pub fn char_roots_with_grid(
    stst: &FhnSteadyState,
    params: &FhnParams,
    coupling: f64,
    tau: f64,
    wave: &WaveVector,
    window: Window,
    grid: (usize, usize),
) -> Result<RootSet, FhnError> {
    let lin = LinearizationPair::new(stst, params, coupling);
    let strong = lin.instantaneous_eigenvalues();
    if lin.b13() * wave.k_minus().cos() * lin.a[(2, 0)] == 0.0 || wave.k_minus().cos().abs() < 1e-15 {
        let mut r: Vec<_> = strong.into_iter().filter(|l| window.contains(*l)).collect();
        r = roots::dedup(r);
        return Ok(RootSet { roots: r, tolerance: roots::RESIDUAL_TOLERANCE, window });
    }
    let mut seeds = strong;
    if tau > 0.0 {
        seeds.extend(asymptotic_seeds(&lin, wave, tau, &window));
    }
    Ok(roots::find_roots_seeded(|l| lin.characteristic(wave, tau, l), window, grid, seeds)?)
}

/// Fixed-point predictions `lambda = (i k_+ - log(P/Q) + 2 pi i n) / tau`.
fn asymptotic_seeds(lin: &LinearizationPair, wave: &WaveVector, tau: f64, window: &Window) -> Vec<Complex64> {
    let a = &lin.a;
    let gain = 2.0 * wave.k_minus().cos() * lin.b13() * a[(2, 0)];
    let ratio = |l: Complex64| {
        let (x, y, z) = (a[(0, 0)] - l, a[(1, 1)] - l, a[(2, 2)] - l);
        (x * y * z - a[(0, 1)] * a[(1, 0)] * z) / (gain * y)
    };
    let n_lo = (window.im_min * tau / TAU).floor() as i64 - 1;
    let n_hi = (window.im_max * tau / TAU).ceil() as i64 + 1;
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for n in n_lo..=n_hi {
        let mut l = Complex64::new(0.0, TAU * n as f64 / tau);
        for _ in 0..6 {
            let x = ratio(l);
            if !(x.norm() > 0.0 && x.norm().is_finite()) {
                break;
            }
            l = (i * wave.k_plus() - x.ln() + i * (TAU * n as f64)) / tau;
        }
        if l.re.is_finite() && l.im.is_finite() {
            out.push(l);
        }
    }
    out
}

/// Delay-independent eigenvalues of a rest state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnStrongSpectrum {
    pub lambda_0: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// `a11 > b eps`: an unstable strong eigenvalue exists.
    pub unstable: bool,
    /// `a11 < 2 sqrt(eps) - b eps`: the pair is complex.
    pub complex_pair: bool,
}

pub fn strong_spectrum(stst: &FhnSteadyState, params: &FhnParams, coupling: f64) -> FhnStrongSpectrum {
    let lin = LinearizationPair::new(stst, params, coupling);
    strong_spectrum_of(lin.a[(0, 0)], lin.a[(2, 2)], params)
}

/// Strong spectrum from the two diagonal entries it depends on.
pub fn strong_spectrum_of(a11: f64, a33: f64, params: &FhnParams) -> FhnStrongSpectrum {
    let be = params.b * params.eps;
    let disc = Complex64::new((a11 + be).powi(2) - 4.0 * params.eps, 0.0).sqrt();
    FhnStrongSpectrum {
        lambda_0: a33,
        lambda_plus: 0.5 * (a11 - be + disc),
        lambda_minus: 0.5 * (a11 - be - disc),
        unstable: a11 > be,
        complex_pair: a11 < 2.0 * params.eps.sqrt() - be,
    }
}

/// Large-delay growth exponent `gamma(Omega, k_-)` of the pseudo-continuous spectrum.
pub fn hybrid_dispersion(
    stst: &FhnSteadyState,
    params: &FhnParams,
    coupling: f64,
    omega: f64,
    k_minus: f64,
) -> Result<f64, FhnError> {
    let lin = LinearizationPair::new(stst, params, coupling);
    hybrid_dispersion_lin(&lin, omega, k_minus)
}

fn hybrid_dispersion_lin(lin: &LinearizationPair, omega: f64, k_minus: f64) -> Result<f64, FhnError> {
    let a = &lin.a;
    let ck = k_minus.cos();
    if ck.abs() < 1e-15 {
        return Err(FhnError::Decoupled);
    }
    let feedback = a[(2, 0)] * lin.b13();
    if feedback == 0.0 {
        return Err(FhnError::NoFeedback);
    }
    let iw = Complex64::new(0.0, omega);
    let y = (a[(2, 2)] - iw) / (2.0 * feedback * ck)
        * (a[(0, 0)] - iw - a[(0, 1)] * a[(1, 0)] / (a[(1, 1)] - iw));
    Ok(-y.norm().ln())
}

/// `(omega, k_minus, gamma)` on a regular grid; decoupled columns are skipped.
pub fn hybrid_surface(
    stst: &FhnSteadyState,
    params: &FhnParams,
    coupling: f64,
    omegas: &[f64],
    k_minus: &[f64],
) -> Result<Vec<(f64, f64, f64)>, FhnError> {
    let lin = LinearizationPair::new(stst, params, coupling);
    let mut out = Vec::with_capacity(omegas.len() * k_minus.len());
    for &w in omegas {
        for &k in k_minus {
            match hybrid_dispersion_lin(&lin, w, k) {
                Ok(g) => out.push((w, k, g)),
                Err(FhnError::Decoupled) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub current: f64,
    pub omega: f64,
    pub v: f64,
}

/// Seed grid for [`hopf_points`].
pub const HOPF_SEED_V: (f64, f64) = (-2.5, 2.5);
pub const HOPF_SEED_OMEGA: f64 = 3.0;
pub const HOPF_SEEDS: usize = 50;

/// Points `(I, Omega)` where a characteristic root of the mode sits at `i Omega`.
///
/// The rest potential `v` fixes the linearization independently of `I`, so
/// Newton runs over `(v, Omega)` and the current follows from the rest equation.
pub fn hopf_points(
    params: &FhnParams,
    coupling: f64,
    tau: f64,
    wave: &WaveVector,
    current_range: (f64, f64),
) -> Vec<HopfPoint> {
    let f = |v: f64, omega: f64| {
        let lin = LinearizationPair::new(&FhnSteadyState::at(params, v), params, coupling);
        lin.characteristic(wave, tau, Complex64::new(0.0, omega))
    };
    let mut found: Vec<HopfPoint> = Vec::new();
    for i in 0..HOPF_SEEDS {
        let v0 = HOPF_SEED_V.0 + (HOPF_SEED_V.1 - HOPF_SEED_V.0) * i as f64 / (HOPF_SEEDS - 1) as f64;
        for j in 1..=HOPF_SEEDS {
            let w0 = HOPF_SEED_OMEGA * j as f64 / HOPF_SEEDS as f64;
            let Some((v, omega)) = hopf_newton(&f, v0, w0) else { continue };
            if omega.abs() < 1e-8 || !(STEADY_RANGE.0..=STEADY_RANGE.1).contains(&v) {
                continue;
            }
            let current = current_for_rest(params, coupling, v);
            if current < current_range.0 || current > current_range.1 {
                continue;
            }
            if f(v, omega).relative_residual() > roots::RESIDUAL_TOLERANCE {
                continue;
            }
            if !found.iter().any(|h| (h.v - v).abs() < 1e-7 && (h.omega - omega).abs() < 1e-7) {
                found.push(HopfPoint { current, omega, v });
            }
        }
    }
    found.sort_by(|a, b| a.current.total_cmp(&b.current).then(a.omega.total_cmp(&b.omega)));
    found
}

fn hopf_newton(f: &impl Fn(f64, f64) -> Eval, mut v: f64, mut omega: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let e = f(v, omega);
        let h = 1e-7 * v.abs().max(1.0);
        let dv = (f(v + h, omega).value - f(v - h, omega).value) / (2.0 * h);
        // d/dOmega of F(i Omega) is i F'
        let dw = Complex64::new(0.0, 1.0) * e.derivative;
        let det = dv.re * dw.im - dw.re * dv.im;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut sv = (e.value.re * dw.im - dw.re * e.value.im) / det;
        let mut sw = (dv.re * e.value.im - e.value.re * dv.im) / det;
        let damp = (sv.abs().max(sw.abs()) / 0.5).max(1.0);
        sv /= damp;
        sw /= damp;
        v -= sv;
        omega -= sw;
        if !(v.is_finite() && omega.is_finite()) || v.abs() > 10.0 {
            return None;
        }
        if sv.abs() + sw.abs() < 1e-13 * (1.0 + omega.abs()) {
            return Some((v, omega));
        }
    }
    let e = f(v, omega);
    (e.relative_residual() <= roots::RESIDUAL_TOLERANCE).then_some((v, omega))
}
