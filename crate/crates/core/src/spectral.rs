//! Characteristic root, kernel vector and normalization of valuations.
//!
//! `θ(t) = det M(t)` is computed by fraction-free elimination. Its smallest
//! positive root `ρ` makes `M(ρ)` singular with a one-dimensional kernel
//! spanned by a positive vector `U`; the cocycle is `Δ(α, β) = U_β / U_α`.

use nalgebra::DMatrix;
use num_traits::{Num, Zero};
use thiserror::Error;

use crate::markov;
use crate::poly::{Poly, Rational};
use crate::roots;
use crate::system::{ConcurrentSystem, MobiusMatrix, SystemError, Valuation};

/// Relative tolerance for the numerical rank of `M(ρ)`.
pub const RANK_TOL: f64 = 1e-8;
/// Roots are searched in `(0, 2]`, then in doubling windows up to this bound.
pub const ROOT_SEARCH_LIMIT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("IrreducibilityError: clause {0} fails")]
    NotIrreducible(&'static str),
    #[error("NoPositiveRoot: det M(t) has no positive root below {ROOT_SEARCH_LIMIT}")]
    NoPositiveRoot,
    #[error("KernelDimensionNot1: numerical rank {rank} for {dim} states")]
    KernelDimensionNot1 { rank: usize, dim: usize },
    #[error("NonPositiveKernel: kernel vector has entries of both signs or zero")]
    NonPositiveKernel,
    #[error("GapViolation: letter {letter:?} has root {rho_a} not above {rho}")]
    GapViolation { letter: String, rho_a: f64, rho: f64 },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Polynomials supporting the exact divisions of Bareiss elimination.
pub trait BareissScalar: Clone + Num {
    fn bareiss_div(p: &Poly<Self>, d: &Poly<Self>) -> Poly<Self>;
}

impl BareissScalar for f64 {
    fn bareiss_div(p: &Poly<f64>, d: &Poly<f64>) -> Poly<f64> {
        p.div_exact(d)
    }
}

impl BareissScalar for Rational {
    fn bareiss_div(p: &Poly<Rational>, d: &Poly<Rational>) -> Poly<Rational> {
        if d.coeff(0).is_zero() {
            p.div_rem(d).0
        } else {
            p.div_exact(d)
        }
    }
}

/// `det M(t)` by Bareiss elimination over polynomials.
pub fn char_poly<T: BareissScalar>(m: &MobiusMatrix<T>) -> Poly<T> {
    let n = m.dim();
    if n == 0 {
        return Poly::one();
    }
    let mut a = m.entries.clone();
    let mut prev = Poly::one();
    let mut negate = false;
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return Poly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = T::bareiss_div(&num, &prev);
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        &Poly::zero() - &det
    } else {
        det
    }
}

/// Zeroes coefficients that are rounding noise relative to the largest one.
fn clean(p: Poly<f64>) -> Poly<f64> {
    let max = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    Poly::new(
        p.coeffs()
            .iter()
            .map(|&c| if c.abs() <= 1e-13 * max { 0.0 } else { c })
            .collect(),
    )
}

/// Smallest positive root of `θ`.
pub fn characteristic_root(theta: &Poly<f64>) -> Result<f64, SpectralError> {
    roots::smallest_positive_root_extended(theta, 2.0, ROOT_SEARCH_LIMIT).ok_or(SpectralError::NoPositiveRoot)
}

/// Smallest positive root of an exact `θ`, located on its square-free part.
pub fn characteristic_root_exact(theta: &Poly<Rational>) -> Result<f64, SpectralError> {
    characteristic_root(&theta.squarefree().to_f64())
}

/// Generator of the kernel of a matrix of corank one, positive and scaled so
/// that its first entry is 1.
///
/// Gaussian elimination with full pivoting; the rank is decided relative to
/// the largest entry.
pub fn kernel_vector(m: &DMatrix<f64>) -> Result<Vec<f64>, SpectralError> {
    let n = m.nrows();
    if n == 1 {
        return if m[(0, 0)].abs() <= RANK_TOL {
            Ok(vec![1.0])
        } else {
            Err(SpectralError::KernelDimensionNot1 { rank: 1, dim: 1 })
        };
    }
    let mut a = m.clone();
    let mut cols: Vec<usize> = (0..n).collect();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if a[(i, j)].abs() > best {
                    (pi, pj, best) = (i, j, a[(i, j)].abs());
                }
            }
        }
        if best <= RANK_TOL * scale {
            break;
        }
        a.swap_rows(k, pi);
        a.swap_columns(k, pj);
        cols.swap(k, pj);
        for i in k + 1..n {
            let factor = a[(i, k)] / a[(k, k)];
            for j in k..n {
                a[(i, j)] -= factor * a[(k, j)];
            }
        }
        rank += 1;
    }
    if rank != n - 1 {
        return Err(SpectralError::KernelDimensionNot1 { rank, dim: n });
    }
    let mut y = vec![0.0; n];
    y[n - 1] = 1.0;
    for k in (0..n - 1).rev() {
        let s: f64 = (k + 1..n).map(|j| a[(k, j)] * y[j]).sum();
        y[k] = -s / a[(k, k)];
    }
    let mut u = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        u[c] = y[k];
    }
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if u.iter().any(|&v| v <= 1e-12 * max) {
        return Err(SpectralError::NonPositiveKernel);
    }
    let u0 = u[0];
    Ok(u.into_iter().map(|v| v / u0).collect())
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Exact `θ` when the weights are exact rationals.
    pub theta_exact: Option<Poly<Rational>>,
    pub theta: Poly<f64>,
    pub rho: f64,
    pub u: Vec<f64>,
    /// Normalized probabilistic valuation `f̃`.
    pub prob_valuation: Valuation,
    /// `‖M(ρ) U‖∞`.
    pub kernel_residual: f64,
    /// Some complex root of `θ` has modulus below `ρ`.
    pub smaller_modulus_root: bool,
}

impl Spectrum {
    /// Requires an irreducible system.
    pub fn compute(sys: &ConcurrentSystem) -> Result<Self, SpectralError> {
        if let Some(clause) = sys.irreducibility_report().failed_clause() {
            return Err(SpectralError::NotIrreducible(clause));
        }
        Spectrum::compute_unchecked(sys)
    }

    pub fn compute_unchecked(sys: &ConcurrentSystem) -> Result<Self, SpectralError> {
        let (theta_exact, theta, rho, m) = if sys.is_exact() {
            let m = sys.mobius_matrix();
            let te = char_poly(&m);
            let sf = te.squarefree().to_f64();
            let rho = characteristic_root(&sf)?;
            (Some(te.clone()), te.to_f64(), rho, m.to_f64())
        } else {
            let m = sys.mobius_matrix_for(sys.valuation());
            let t = clean(char_poly(&m));
            let rho = characteristic_root(&t)?;
            (None, t, rho, m)
        };
        let diag = match &theta_exact {
            Some(te) => te.squarefree().to_f64(),
            None => theta.clone(),
        };
        let smaller_modulus_root = roots::has_smaller_modulus_root(&diag, rho);
        let m_rho = m.eval_matrix(rho);
        let u = kernel_vector(&m_rho)?;
        let kernel_residual = (&m_rho * DMatrix::from_column_slice(u.len(), 1, &u)).amax();
        let mut spectrum = Spectrum {
            theta_exact,
            theta,
            rho,
            u,
            prob_valuation: Valuation { values: Vec::new() },
            kernel_residual,
            smaller_modulus_root,
        };
        spectrum.prob_valuation = normalize_valuation(sys, &spectrum);
        Ok(spectrum)
    }

    /// `Δ(α, β) = U_β / U_α`.
    pub fn delta(&self, alpha: usize, beta: usize) -> f64 {
        self.u[beta] / self.u[alpha]
    }

    pub fn delta_table(&self) -> Vec<Vec<f64>> {
        let n = self.u.len();
        (0..n).map(|a| (0..n).map(|b| self.delta(a, b)).collect()).collect()
    }

    /// `θ(ρ)`.
    pub fn theta_residual(&self) -> f64 {
        self.theta.eval_f64(self.rho)
    }
}

/// `f̃_α(a) = ρ Δ(α, α·a) λ_α(a)`.
pub fn normalize_valuation(sys: &ConcurrentSystem, spectrum: &Spectrum) -> Valuation {
    let base = sys.valuation();
    let values = (0..sys.num_states())
        .map(|alpha| {
            (0..sys.alphabet().len())
                .map(|a| match sys.step(alpha, a) {
                    Some(beta) => spectrum.rho * spectrum.delta(alpha, beta) * base.get(alpha, a),
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    Valuation { values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilisticReport {
    /// `max_α |h_α(ε)|`.
    pub max_abs_h_empty: f64,
    /// Minimum of `h_α(c)` over enabled non-empty cliques.
    pub min_h: f64,
    pub pass: bool,
}

/// Whether a valuation is probabilistic: `h_α(ε) = 0` and `h_α ≥ 0`.
pub fn check_probabilistic(sys: &ConcurrentSystem, f: &Valuation, tol: f64) -> ProbabilisticReport {
    let h = markov::system_mobius_transform(sys, f);
    let mut max_abs_h_empty: f64 = 0.0;
    let mut min_h = f64::INFINITY;
    for alpha in 0..sys.num_states() {
        max_abs_h_empty = max_abs_h_empty.max(h.get(alpha, 0).abs());
        for (i, &c) in sys.cliques().iter().enumerate().skip(1) {
            if sys.act_clique(alpha, c).is_some() {
                min_h = min_h.min(h.get(alpha, i));
            }
        }
    }
    ProbabilisticReport {
        max_abs_h_empty,
        min_h,
        pass: max_abs_h_empty <= tol && min_h >= -tol,
    }
}

/// `ρᵃ` for every letter: smallest positive root of `det Mᵃ(t)` for the
/// restriction to `Σ \ {a}`, or `+∞` when there is none.
pub fn letter_roots(sys: &ConcurrentSystem) -> Result<Vec<f64>, SpectralError> {
    (0..sys.alphabet().len())
        .map(|a| {
            let r = sys.restrict_letter(a)?;
            let root = if r.is_exact() {
                characteristic_root_exact(&char_poly(&r.mobius_matrix()))
            } else {
                characteristic_root(&clean(char_poly(&r.mobius_matrix_for(r.valuation()))))
            };
            Ok(root.unwrap_or(f64::INFINITY))
        })
        .collect()
}

/// Letter roots, failing on the first `ρᵃ ≤ ρ + tol`.
pub fn spectral_gaps(sys: &ConcurrentSystem, rho: f64, tol: f64) -> Result<Vec<f64>, SpectralError> {
    let gaps = letter_roots(sys)?;
    for (a, &r) in gaps.iter().enumerate() {
        if r <= rho + tol {
            return Err(SpectralError::GapViolation {
                letter: sys.alphabet().name(a).to_string(),
                rho_a: r,
                rho,
            });
        }
    }
    Ok(gaps)
}
