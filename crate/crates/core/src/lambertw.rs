//! Multi-branch complex Lambert W.
//!
//! Branches follow the usual convention: `W_k(z) + ln W_k(z) = ln z + 2 pi i k`
//! with principal logarithms, `W_0` and `W_{-1}` share the branch point
//! `-1/e` from the upper half plane (including the real axis), `W_0` and `W_1`
//! from the lower half plane.

use std::f64::consts::{E, TAU};

use num_complex::Complex64;
use thiserror::Error;

/// Largest branch index accepted.
pub const MAX_BRANCH: i32 = 1024;
const MAX_ITERATIONS: usize = 60;
const STEP_TOLERANCE: f64 = 1e-13;
const BRANCH_POINT_RADIUS: f64 = 0.3;
/// Below this `|p|` the truncated branch-point series is exact to rounding.
const SERIES_ONLY_RADIUS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambertError {
    #[error("branch index {0} exceeds the supported range |k| <= {MAX_BRANCH}")]
    BranchOutOfRange(i32),
    #[error("W_{branch}(0) is singular for non-principal branches")]
    Singular { branch: i32 },
    #[error("non-finite argument {z}")]
    NonFinite { z: Complex64 },
    #[error("Halley iteration for W_{branch}({z}) did not converge; last iterate {last}")]
    NoConvergence { z: Complex64, branch: i32, last: Complex64 },
}

/// `W_branch(z)`: the solution of `w e^w = z` on the requested branch.
pub fn lambert_w(branch: i32, z: Complex64) -> Result<Complex64, LambertError> {
    if branch.abs() > MAX_BRANCH {
        return Err(LambertError::BranchOutOfRange(branch));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(LambertError::NonFinite { z });
    }
    if z == Complex64::new(0.0, 0.0) {
        return if branch == 0 { Ok(z) } else { Err(LambertError::Singular { branch }) };
    }

    if near_branch_point(branch, z) {
        // the side of the cut is fixed by the sign of p in the seed
        let p = branch_point_p(branch, z);
        if p.norm() < SERIES_ONLY_RADIUS {
            return Ok(branch_point_series(p));
        }
        return halley(z, branch_point_series(p))
            .ok_or(LambertError::NoConvergence { z, branch, last: branch_point_series(p) });
    }

    let mut w = initial_guess(branch, z);
    if let Some(w) = polish(branch, z, w) {
        return Ok(w);
    }
    // the asymptotic seed can land in a neighbouring basin for moderate |z|;
    // recover by moving the seed by the observed branch offset
    for _ in 0..3 {
        let found = halley(z, w).unwrap_or(w);
        let offset = branch - branch_of(found, z);
        if offset == 0 {
            break;
        }
        w = found + Complex64::new(0.0, TAU * offset as f64);
        if let Some(w) = polish(branch, z, w) {
            return Ok(w);
        }
    }
    Err(LambertError::NoConvergence { z, branch, last: w })
}

fn polish(branch: i32, z: Complex64, seed: Complex64) -> Option<Complex64> {
    let w = halley(z, seed)?;
    (branch_of(w, z) == branch).then_some(w)
}

/// Branch index recovered from `w + ln w - ln z = 2 pi i k`.
fn branch_of(w: Complex64, z: Complex64) -> i32 {
    let k = (w + w.ln() - z.ln()).im / TAU;
    let rounded = k.round();
    // on the real segment [-1/e, 0) both W_0 and W_{-1} are real; the
    // identity above only pins the branch up to that ambiguity
    if z.im == 0.0 && z.re < 0.0 && z.re >= -1.0 / E && w.im == 0.0 {
        return if w.re >= -1.0 { 0 } else { -1 };
    }
    rounded as i32
}

fn halley(z: Complex64, mut w: Complex64) -> Option<Complex64> {
    // iterate on (w e^w - z) e^{-w} so that huge |z| does not overflow
    for _ in 0..MAX_ITERATIONS {
        let t = w - z * (-w).exp();
        if t == Complex64::new(0.0, 0.0) {
            return Some(w);
        }
        let wp1 = w + 1.0;
        let denom = wp1 - (w + 2.0) * t / (2.0 * wp1);
        if !(denom.re.is_finite() && denom.im.is_finite()) || denom.norm() == 0.0 {
            return None;
        }
        let step = t / denom;
        w -= step;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
        if step.norm() <= STEP_TOLERANCE * w.norm().max(1.0) {
            return Some(w);
        }
    }
    None
}

fn near_branch_point(branch: i32, z: Complex64) -> bool {
    if (z + 1.0 / E).norm() >= BRANCH_POINT_RADIUS {
        return false;
    }
    match branch {
        0 => true,
        -1 => z.im >= 0.0,
        1 => z.im < 0.0,
        _ => false,
    }
}

fn initial_guess(branch: i32, z: Complex64) -> Complex64 {
    if branch == 0 && z.norm() <= 1.0 {
        // (2,2) Pade approximant around the origin
        let num = z * (3.0 + 6.0 * z + z * z);
        let den = 3.0 + 9.0 * z + 5.0 * z * z;
        return num / den;
    }
    let l1 = z.ln() + Complex64::new(0.0, TAU * branch as f64);
    let l2 = l1.ln();
    l1 - l2 + l2 / l1 + l2 * (l2 - 2.0) / (2.0 * l1 * l1)
}

fn branch_point_p(branch: i32, z: Complex64) -> Complex64 {
    let p = (2.0 * (E * z + 1.0)).sqrt();
    if branch == 0 {
        p
    } else {
        -p
    }
}

/// Series of `W` in `p = sqrt(2 (e z + 1))` about the branch point.
fn branch_point_series(p: Complex64) -> Complex64 {
    const COEFFS: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    COEFFS.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * p + c)
}

/// Largest `|k|` whose branch can put `Im W_k(z)` inside `|Im W| <= im_bound`.
pub fn branch_span(im_bound: f64) -> i32 {
    ((im_bound / TAU).ceil() as i32 + 1).min(MAX_BRANCH)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(w: Complex64, z: Complex64) -> f64 {
        (w * w.exp() - z).norm() / z.norm().max(1.0)
    }

    #[test]
    fn trivial_points() {
        assert_eq!(lambert_w(0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let w = lambert_w(0, c(E, 0.0)).unwrap();
        assert!((w - c(1.0, 0.0)).norm() < 1e-15);
        let w = lambert_w(-1, c(-1.0 / E, 0.0)).unwrap();
        assert!((w - c(-1.0, 0.0)).norm() < 1e-7, "{w}");
        assert!(residual(w, c(-1.0 / E, 0.0)) < 1e-15);
    }

    #[test]
    fn second_branch_residual() {
        let z = c(3.0, 4.0);
        let w = lambert_w(2, z).unwrap();
        assert!(residual(w, z) <= 1e-12);
    }

    #[test]
    fn matches_reference_values() {
        // reference values from an arbitrary-precision implementation
        let table: &[(i32, Complex64, Complex64)] = &[
            (0, c(1.0, 0.0), c(0.56714329040978384, 0.0)),
            (-1, c(-0.1, 0.0), c(-3.5771520639572971, 0.0)),
            (1, c(1.0, 0.0), c(-1.5339133197935746, 4.3751851530618984)),
            (-1, c(1.0, 0.0), c(-1.5339133197935746, -4.3751851530618984)),
            (2, c(3.0, 4.0), c(-0.8655467994333399, 11.849956798331991)),
            (-3, c(-2.0, 0.5), c(-1.9422701063983323, -14.246649230163175)),
            (0, c(-0.3, 0.0), c(-0.48940222718021492, 0.0)),
            (0, c(-0.36, 0.0), c(-0.80608431597081764, 0.0)),
            (-1, c(-0.36, 0.0), c(-1.2227701339785062, 0.0)),
            (1, c(-0.36, 0.0), c(-3.1112512656651576, 7.4588001296131639)),
            (5, c(1e10, 0.0), c(19.439675634699555, 30.413855562687576)),
            (-7, c(0.0, 1e-5), c(-15.280333397932106, -40.479760633347112)),
            (0, c(-0.5, 0.0), c(-0.79402363234468942, 0.77011175051037906)),
            (0, c(1e-8, 1e-8), c(9.9999999999999969e-09, 9.9999998000000035e-09)),
        ];
        for &(k, z, want) in table {
            let got = lambert_w(k, z).unwrap();
            assert!(
                (got - want).norm() <= 1e-12 * want.norm().max(1.0),
                "W_{k}({z}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(lambert_w(1, c(0.0, 0.0)), Err(LambertError::Singular { .. })));
        assert!(matches!(
            lambert_w(MAX_BRANCH + 1, c(1.0, 0.0)),
            Err(LambertError::BranchOutOfRange(_))
        ));
        assert!(matches!(lambert_w(0, c(f64::NAN, 0.0)), Err(LambertError::NonFinite { .. })));
    }

    #[test]
    fn large_delay_arguments() {
        // arguments of the size produced by tau C e^{-alpha tau} at tau = 200
        let z = Complex64::from_polar(400.0 * (400.0f64).exp(), 1.3);
        for k in [-80, -3, 0, 17, 80] {
            let w = lambert_w(k, z).unwrap();
            assert!((w * w.exp() - z).norm() / z.norm() <= 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn defining_identity(k in -40i32..=40, re in -50.0f64..50.0, im in -50.0f64..50.0) {
                prop_assume!(re.abs() + im.abs() > 1e-6);
                let z = c(re, im);
                let w = lambert_w(k, z).unwrap();
                prop_assert!(residual(w, z) <= 1e-12, "k={} z={} w={}", k, z, w);
                prop_assert_eq!(branch_of(w, z), k);
            }

            #[test]
            fn conjugate_symmetry(k in -20i32..=20, re in -20.0f64..20.0, im in 1e-3f64..20.0) {
                let z = c(re, im);
                let w = lambert_w(k, z).unwrap();
                let wc = lambert_w(-k, z.conj()).unwrap();
                prop_assert!((w.conj() - wc).norm() <= 1e-12 * w.norm().max(1.0));
            }
        }
    }
}
