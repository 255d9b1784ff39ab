//! Root finding shared by the spectral analyses: Newton search for zeros of
//! quasi-polynomials in a rectangle, all real solutions of the Kepler
//! equation, and real roots of a cubic.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two roots closer than this are the same root.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// Accepted `|f(root)| / scale(root)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("degenerate search window {0:?}")]
    DegenerateWindow(Window),
    #[error("seed grid must be at least 2x2, got {0}x{1}")]
    GridTooSmall(usize, usize),
    #[error("leading coefficient of the cubic is zero")]
    NotCubic,
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, RootError> {
        let w = Self { re_min, re_max, im_min, im_max };
        let finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(RootError::DegenerateWindow(w));
        }
        Ok(w)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn diagonal(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
}

/// Value, derivative and magnitude scale of an analytic function at a point.
///
/// `scale` is the sum of the magnitudes of the terms making up the value, so
/// `|value| / scale` measures cancellation rather than absolute size. This is
/// what makes residuals comparable when the delayed terms carry factors like
/// `e^{-lambda tau}` with large `tau`.
#[derive(Debug, Clone, Copy)]
pub struct Eval {
    pub value: Complex64,
    pub derivative: Complex64,
    pub scale: f64,
}

impl Eval {
    pub fn relative_residual(&self) -> f64 {
        self.value.norm() / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Deduplicated roots found inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub tolerance: f64,
    pub window: Window,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Root with the largest real part.
    pub fn rightmost(&self) -> Option<Complex64> {
        self.roots.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

/// Newton from every point of an `nx x ny` grid over `window`.
pub fn find_roots_quasipoly<F>(
    f: F,
    window: Window,
    grid: (usize, usize),
) -> Result<RootSet, RootError>
where
    F: Fn(Complex64) -> Eval,
{
    find_roots_seeded(f, window, grid, std::iter::empty())
}

/// Grid search plus extra seeds, typically asymptotic predictions of where
/// the roots sit.
pub fn find_roots_seeded<F, I>(
    f: F,
    window: Window,
    grid: (usize, usize),
    extra_seeds: I,
) -> Result<RootSet, RootError>
where
    F: Fn(Complex64) -> Eval,
    I: IntoIterator<Item = Complex64>,
{
    let window = Window::new(window.re_min, window.re_max, window.im_min, window.im_max)?;
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(RootError::GridTooSmall(nx, ny));
    }
    let mut found = Vec::new();
    let dx = (window.re_max - window.re_min) / (nx - 1) as f64;
    let dy = (window.im_max - window.im_min) / (ny - 1) as f64;
    let grid_seeds = (0..nx).flat_map(|i| {
        (0..ny).map(move |j| {
            Complex64::new(window.re_min + i as f64 * dx, window.im_min + j as f64 * dy)
        })
    });
    for seed in grid_seeds.chain(extra_seeds) {
        if let Some(root) = newton(&f, seed, &window) {
            found.push(root);
        }
    }
    Ok(RootSet { roots: dedup(found), tolerance: RESIDUAL_TOLERANCE, window })
}

/// Newton polish of a single seed. Returns a root inside the window whose
/// relative residual passes [`RESIDUAL_TOLERANCE`].
pub fn newton<F>(f: &F, seed: Complex64, window: &Window) -> Option<Complex64>
where
    F: Fn(Complex64) -> Eval,
{
    let max_step = 0.25 * window.diagonal();
    let mut z = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let e = f(z);
        if !(e.value.re.is_finite() && e.value.im.is_finite()) {
            return None;
        }
        if e.value.norm() == 0.0 {
            break;
        }
        if e.derivative.norm() == 0.0 || !e.derivative.re.is_finite() {
            return None;
        }
        let mut step = e.value / e.derivative;
        let len = step.norm();
        if len > max_step {
            step *= max_step / len;
        }
        z -= step;
        if !window_with_margin(window, z) {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let e = f(z);
    (window.contains(z) && e.relative_residual() <= RESIDUAL_TOLERANCE).then_some(z)
}

fn window_with_margin(w: &Window, z: Complex64) -> bool {
    let mx = 0.5 * (w.re_max - w.re_min);
    let my = 0.5 * (w.im_max - w.im_min);
    z.re >= w.re_min - mx && z.re <= w.re_max + mx && z.im >= w.im_min - my && z.im <= w.im_max + my
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

/// Merge roots closer than [`DEDUP_RADIUS`] and sort by imaginary, then real part.
pub fn dedup(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    roots.sort_by(cmp_complex);
    let mut out: Vec<Complex64> = Vec::with_capacity(roots.len());
    for r in roots {
        // roots are sorted by imaginary part: only a short tail can be close
        let dup = out
            .iter()
            .rev()
            .take_while(|q| r.im - q.im <= DEDUP_RADIUS)
            .any(|q| (*q - r).norm() <= DEDUP_RADIUS);
        if !dup {
            out.push(r);
        }
    }
    out.sort_by(cmp_complex);
    out
}

/// All real solutions of `omega = beta + r sin(k_plus - omega tau)`, ascending.
///
/// The right-hand side oscillates in `omega` with period `2 pi / tau`; sampling
/// at a step well below a quarter of that period brackets every transversal
/// root, and tangential roots are caught by refining the extrema of the
/// residual.
pub fn solve_kepler(beta: f64, r: f64, k_plus: f64, tau: f64) -> Vec<f64> {
    if r == 0.0 {
        return vec![beta];
    }
    if tau == 0.0 {
        return vec![beta + r * k_plus.sin()];
    }
    let g = |w: f64| w - beta - r * (k_plus - w * tau).sin();
    let dg = |w: f64| 1.0 + r * tau * (k_plus - w * tau).cos();
    let ddg = |w: f64| r * tau * tau * (k_plus - w * tau).sin();

    let step = (PI / (4.0 * (1.0 + r.abs() * tau))).min(1e-2);
    let lo = beta - r.abs() - step;
    let hi = beta + r.abs() + step;
    let n = ((hi - lo) / step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let ds: Vec<f64> = xs.iter().map(|&x| dg(x)).collect();

    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (xs[i], xs[i + 1]);
        if gs[i] == 0.0 {
            roots.push(a);
        }
        if ds[i] * ds[i + 1] < 0.0 {
            // g is monotone on either side of the extremum; two roots or a
            // double root can hide without a sign change over [a, b]
            let x = refine_bracket(&dg, &ddg, a, b);
            let gx = g(x);
            if gx.abs() <= 1e-12 {
                roots.push(x);
            } else {
                if gs[i] * gx < 0.0 {
                    roots.push(refine_bracket(&g, &dg, a, x));
                }
                if gx * gs[i + 1] < 0.0 {
                    roots.push(refine_bracket(&g, &dg, x, b));
                }
            }
        } else if gs[i] * gs[i + 1] < 0.0 {
            roots.push(refine_bracket(&g, &dg, a, b));
        }
    }
    if gs[n] == 0.0 {
        roots.push(xs[n]);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);
    roots
}

/// Safeguarded Newton inside a sign-change bracket, falling back to bisection.
pub fn refine_bracket<F, D>(f: &F, df: &D, mut a: f64, mut b: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    if f(b) == 0.0 {
        return b;
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > a.min(b) && newton < a.max(b) {
            newton
        } else {
            0.5 * (a + b)
        };
        if (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, ascending, repeated according
/// to multiplicity.
pub fn solve_cubic_real(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>, RootError> {
    if c3 == 0.0 {
        return Err(RootError::NotCubic);
    }
    let (a2, a1, a0) = (c2 / c3, c1 / c3, c0 / c3);
    #[rustfmt::skip]
    let companion = Matrix3::new(
        -a2, -a1, -a0,
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    );
    let p = |x: f64| ((x + a2) * x + a1) * x + a0;
    let dp = |x: f64| (3.0 * x + 2.0 * a2) * x + a1;
    let ddp = |x: f64| 6.0 * x + 2.0 * a2;
    let scale = [c3, c2, c1, c0].iter().fold(0.0f64, |m, c| m.max(c.abs()));

    let mut roots = Vec::new();
    for ev in companion.complex_eigenvalues().iter() {
        // clustered eigenvalues of a multiple root split into the complex
        // plane at the eps^(1/m) level
        if ev.im.abs() > 1e-4 * (1.0 + ev.re.abs()) {
            continue;
        }
        let x = polish_real(&p, &dp, &ddp, ev.re);
        if (c3 * p(x)).abs() <= 1e-10 * scale {
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    // a simple root reached from two eigenvalue seeds is reported once
    let mut out: Vec<f64> = Vec::with_capacity(3);
    for x in roots {
        let mult = out.iter().filter(|&&y| (y - x).abs() <= 1e-8 * (1.0 + x.abs())).count();
        let allowed = if dp(x).abs() <= 1e-6 * (1.0 + scale / c3.abs()) {
            if ddp(x).abs() <= 1e-4 * (1.0 + scale / c3.abs()) {
                3
            } else {
                2
            }
        } else {
            1
        };
        if mult < allowed {
            out.push(x);
        }
    }
    Ok(out)
}

fn polish_real<P, D, DD>(p: &P, dp: &D, ddp: &DD, mut x: f64) -> f64
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    DD: Fn(f64) -> f64,
{
    for _ in 0..100 {
        let (f, d, dd) = (p(x), dp(x), ddp(x));
        if f == 0.0 {
            break;
        }
        // Halley step stays well behaved near double roots
        let denom = 2.0 * d * d - f * dd;
        let step = if denom != 0.0 {
            2.0 * f * d / denom
        } else if d != 0.0 {
            f / d
        } else {
            break;
        };
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambertw::lambert_w;

    fn window(a: f64, b: f64, c: f64, d: f64) -> Window {
        Window::new(a, b, c, d).unwrap()
    }

    #[test]
    fn unit_imaginary_pair() {
        let f = |z: Complex64| Eval {
            value: z * z + 1.0,
            derivative: 2.0 * z,
            scale: z.norm_sqr() + 1.0,
        };
        let set = find_roots_quasipoly(f, window(-2.0, 2.0, -2.0, 2.0), (10, 10)).unwrap();
        assert_eq!(set.len(), 2);
        assert!((set.roots[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((set.roots[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn linear_function() {
        let c = Complex64::new(-2.5, 0.5);
        let f = |z: Complex64| Eval { value: -z + c, derivative: Complex64::new(-1.0, 0.0), scale: z.norm() + c.norm() };
        let set = find_roots_quasipoly(f, window(-4.0, 1.0, -2.0, 2.0), (4, 4)).unwrap();
        assert_eq!(set.roots, vec![c]);
    }

    #[test]
    fn window_and_grid_validation() {
        assert!(matches!(Window::new(1.0, 1.0, 0.0, 1.0), Err(RootError::DegenerateWindow(_))));
        let f = |z: Complex64| Eval { value: z, derivative: Complex64::new(1.0, 0.0), scale: 1.0 };
        assert!(matches!(
            find_roots_quasipoly(f, window(-1.0, 1.0, -1.0, 1.0), (1, 5)),
            Err(RootError::GridTooSmall(1, 5))
        ));
        // no roots in the window is an empty set, not an error
        let g = |z: Complex64| Eval { value: z.exp(), derivative: z.exp(), scale: z.exp().norm() };
        assert!(find_roots_quasipoly(g, window(-1.0, 1.0, -1.0, 1.0), (5, 5)).unwrap().is_empty());
    }

    #[test]
    fn newton_agrees_with_lambert_w_on_steady_state_factor() {
        // -lambda + alpha + i beta + C e^{-lambda tau}, homogeneous mode
        let (alpha, beta, c, tau) = (-2.0, 0.5, 2.0, 20.0);
        let mu = Complex64::new(alpha, beta);
        let f = move |l: Complex64| {
            let d = c * (-l * tau).exp();
            Eval { value: -l + mu + d, derivative: -1.0 - tau * d, scale: l.norm() + mu.norm() + d.norm() }
        };
        let w = window(-0.5, 0.2, -2.0, 2.0);
        let set = find_roots_quasipoly(f, w, (30, 60)).unwrap();
        assert!(set.len() > 5);
        let z = Complex64::new(tau * c, 0.0) * (-mu * tau).exp();
        for root in &set.roots {
            let best = (-30..=30)
                .map(|j| (mu + lambert_w(j, z).unwrap() / tau - root).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8, "root {root} has no Lambert-W partner ({best})");
        }
    }

    #[test]
    fn kepler_trivial_cases() {
        assert_eq!(solve_kepler(0.7, 0.0, 1.0, 20.0), vec![0.7]);
        let r = solve_kepler(0.5, 2.0, 0.3, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - (0.5 + 2.0 * 0.3f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn kepler_count_matches_dense_sampling() {
        let (beta, r, kp, tau) = (0.5, 2.0, 0.0, 20.0);
        let g = |w: f64| w - beta - r * (kp - w * tau).sin();
        // oracle: sign changes on a 1e-5 grid
        let (lo, hi) = (beta - r - 0.01, beta + r + 0.01);
        let n = ((hi - lo) / 1e-5).round() as usize;
        let mut changes = 0;
        let mut prev = g(lo);
        for i in 1..=n {
            let cur = g(lo + (hi - lo) * i as f64 / n as f64);
            if prev * cur < 0.0 || cur == 0.0 {
                changes += 1;
            }
            prev = cur;
        }
        let roots = solve_kepler(beta, r, kp, tau);
        assert_eq!(roots.len(), changes);
        for w in &roots {
            assert!(g(*w).abs() <= 1e-12);
            assert!(*w >= beta - r && *w <= beta + r);
        }
        assert!(roots.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn kepler_close_pair_inside_one_sample() {
        // two roots 0.009 apart near the band edge; reference values from
        // 30-digit findroot
        let want = [
            -0.4992956198202349,
            -0.49053355655834646,
            -0.22150100457234717,
            -0.13940602976295322,
            0.07434420219052307,
            0.19388398522790345,
            0.3728917924559895,
            0.5248409509186853,
            0.6720337184533508,
            0.855954821512752,
            0.9703531290641063,
            1.1899911474309182,
            1.265412811209339,
        ];
        let roots = solve_kepler(0.5, 1.0, std::f64::consts::FRAC_PI_3, 20.0);
        assert_eq!(roots.len(), want.len(), "{roots:?}");
        for (got, w) in roots.iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
    }

    #[test]
    fn kepler_tangential_root() {
        // choose k_plus so that an extremum of g touches zero exactly:
        // g'(w*) = 0 and g(w*) = 0 at w* with r tau cos(k - w* tau) = -1
        let (beta, r, tau) = (0.0, 0.5, 4.0);
        let phase = (-1.0f64 / (r * tau)).acos();
        let w_star = beta + r * phase.sin();
        let kp = phase + w_star * tau;
        let roots = solve_kepler(beta, r, kp, tau);
        assert!(roots.iter().any(|w| (w - w_star).abs() < 1e-6), "{roots:?} vs {w_star}");
    }

    #[test]
    fn cubic_examples() {
        assert_eq!(solve_cubic_real(1.0, 0.0, 0.0, -1.0).unwrap().len(), 1);
        assert!((solve_cubic_real(1.0, 0.0, 0.0, -1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        let r = solve_cubic_real(1.0, 0.0, -1.0, 0.0).unwrap();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        // (x - 1)^2 (x + 2)
        let r = solve_cubic_real(1.0, 0.0, -3.0, 2.0).unwrap();
        assert_eq!(r.len(), 3, "{r:?}");
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-7 && (r[2] - 1.0).abs() < 1e-7);
        // (x - 2)^3
        let r = solve_cubic_real(1.0, -6.0, 12.0, -8.0).unwrap();
        assert_eq!(r.len(), 3, "{r:?}");
        assert!(matches!(solve_cubic_real(0.0, 1.0, 0.0, 0.0), Err(RootError::NotCubic)));
    }

    #[test]
    fn cubic_neutral_curve_largest_root() {
        // neutral-stability cubic in a^2 for alpha = 1, C = 2, k_minus = 0
        let (alpha, c): (f64, f64) = (1.0, 2.0);
        let r2 = c * c;
        let roots = solve_cubic_real(
            1.0,
            -2.5 * alpha,
            2.0 * alpha * alpha - 0.5 * r2,
            -0.5 * alpha.powi(3) + 0.5 * r2 * alpha,
        )
        .unwrap();
        let closed = (3.0 * alpha + (alpha * alpha + 8.0 * c * c).sqrt()) / 4.0;
        assert!((roots.last().unwrap() - closed).abs() < 1e-12);
        assert!((closed - (3.0 + 33f64.sqrt()) / 4.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kepler_invariant_under_full_turn(beta in -2.0f64..2.0, r in -3.0f64..3.0,
                                                kp in -4.0f64..4.0, tau in 0.0f64..40.0) {
                let a = solve_kepler(beta, r, kp, tau);
                let b = solve_kepler(beta, r, kp + 2.0 * PI, tau);
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
                for w in &a {
                    prop_assert!((w - beta - r * (kp - w * tau).sin()).abs() <= 1e-12);
                }
            }

            #[test]
            fn cubic_roots_have_small_residual(c3 in 0.1f64..3.0, c2 in -5.0f64..5.0,
                                               c1 in -5.0f64..5.0, c0 in -5.0f64..5.0) {
                let scale = [c3, c2, c1, c0].iter().fold(0.0f64, |m, c| m.max(c.abs()));
                let roots = solve_cubic_real(c3, c2, c1, c0).unwrap();
                prop_assert!(!roots.is_empty());
                for x in roots {
                    let p = ((c3 * x + c2) * x + c1) * x + c0;
                    prop_assert!(p.abs() <= 1e-10 * scale);
                }
            }

            #[test]
            fn conjugate_closed_roots(a in -1.0f64..1.0, b in 0.2f64..2.0) {
                // real coefficients: lambda^2 - 2 a lambda + a^2 + b^2 - 0.1 e^{-lambda}
                let f = move |z: Complex64| {
                    let e = 0.1 * (-z).exp();
                    Eval {
                        value: z * z - 2.0 * a * z + a * a + b * b - e,
                        derivative: 2.0 * z - 2.0 * a + e,
                        scale: z.norm_sqr() + 2.0 * a.abs() * z.norm() + a * a + b * b + e.norm(),
                    }
                };
                let set = find_roots_quasipoly(f, Window::new(-3.0, 3.0, -3.0, 3.0).unwrap(), (12, 12)).unwrap();
                for r in &set.roots {
                    if r.im.abs() < 3.0 - 1e-9 {
                        prop_assert!(set.roots.iter().any(|q| (q - r.conj()).norm() < 1e-7));
                    }
                }
            }
        }
    }
}
