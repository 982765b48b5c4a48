//! Isolation of the smallest positive real root of a polynomial.
//!
//! The root is bracketed by a uniform scan with step `2^-10` and then refined
//! by bisection. Roots of even multiplicity produce no sign change; the scan
//! also looks for local minima of `|p|` that vanish to rounding accuracy.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::poly::Poly;

pub const SCAN_STEP: f64 = 1.0 / 1024.0;

/// Smallest root in `(0, upper]`, or `None` if the scan finds none.
pub fn smallest_positive_root(p: &Poly<f64>, upper: f64) -> Option<f64> {
    smallest_root_in(p, 0.0, upper)
}

/// Like [`smallest_positive_root`] but keeps doubling the window past `upper`
/// until `limit`.
pub fn smallest_positive_root_extended(p: &Poly<f64>, upper: f64, limit: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = upper;
    while lo < limit {
        if let Some(r) = smallest_root_in(p, lo, hi) {
            return Some(r);
        }
        lo = hi;
        hi *= 2.0;
    }
    None
}

fn smallest_root_in(p: &Poly<f64>, lo: f64, hi: f64) -> Option<f64> {
    if p.degree().unwrap_or(0) == 0 {
        return None;
    }
    let steps = ((hi - lo) / SCAN_STEP).ceil() as usize;
    let grid = |i: usize| (lo + i as f64 * SCAN_STEP).min(hi);
    let mut prev_t = grid(0);
    let mut prev_v = p.eval_f64(prev_t);
    let mut prev_prev_abs = f64::INFINITY;
    for i in 1..=steps {
        let t = grid(i);
        let v = p.eval_f64(t);
        if prev_t > 0.0 && prev_v == 0.0 {
            return Some(prev_t);
        }
        if v == 0.0 {
            return Some(t);
        }
        if prev_v.signum() != v.signum() {
            return Some(bisect(p, prev_t, t));
        }
        // |p| has a local minimum at prev_t: possible tangent root
        if i >= 2 && prev_v.abs() <= prev_prev_abs && prev_v.abs() <= v.abs() {
            let a = grid(i - 2);
            if let Some(r) = tangent_root(p, a, t) {
                return Some(r);
            }
        }
        prev_prev_abs = prev_v.abs();
        prev_t = t;
        prev_v = v;
    }
    None
}

fn bisect(p: &Poly<f64>, mut a: f64, mut b: f64) -> f64 {
    let mut fa = p.eval_f64(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.eval_f64(m);
        if fm == 0.0 {
            return m;
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimisation of `|p|` on `[a, b]`; accepts the minimiser as
/// a root when `|p|` vanishes relative to its rounding scale.
fn tangent_root(p: &Poly<f64>, mut a: f64, mut b: f64) -> Option<f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| p.eval_f64(t).abs();
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    if t > 0.0 && f(t) <= 1e-10 * p.abs_scale(t) {
        Some(t)
    } else {
        None
    }
}

/// All complex roots, as eigenvalues of the companion matrix.
///
/// The QR iteration can stall on companion matrices that are scaled
/// permutations (e.g. `1 - t^n`); Durand-Kerner iteration takes over then.
pub fn complex_roots(p: &Poly<f64>) -> Vec<Complex64> {
    let Some(deg) = p.degree() else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let c = p.coeffs();
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    match Schur::try_new(comp, f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => durand_kerner(p),
    }
}

fn durand_kerner(p: &Poly<f64>) -> Vec<Complex64> {
    let c = p.coeffs();
    let deg = c.len() - 1;
    let lead = c[deg];
    let eval = |z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k / lead);
    let bound = 1.0 + c.iter().map(|k| (k / lead).abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * (0.5 * bound)).collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let denom = (0..deg)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// True when some complex root has modulus strictly below `rho` (relative margin 1e-6).
pub fn has_smaller_modulus_root(p: &Poly<f64>, rho: f64) -> bool {
    complex_roots(p)
        .iter()
        .any(|z| z.norm() < rho * (1.0 - 1e-6))
}
