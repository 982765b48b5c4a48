//! The Markov chain of state-and-cliques.
//!
//! For a probabilistic valuation `f`, the Möbius transform `h_α` of
//! `c ↦ f_α(c)` is the law of the first clique from state `α`, and
//! `g_β(c) = Σ_{d ∈ C_β, c → d} h_β(d)` normalizes the transitions. Some
//! references write the summand of `g` as `h(c)`; the sum is over `h(d)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::system::{ConcurrentSystem, Valuation};
use crate::trace::Clique;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("NotStochastic: row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("NotStronglyConnected")]
    NotStronglyConnected,
    #[error("empty component")]
    Empty,
}

/// `h_α(c)` for every state and every clique, indexed like the system's cliques.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMobiusTransform {
    pub h: Vec<Vec<f64>>,
}

impl SystemMobiusTransform {
    pub fn get(&self, alpha: usize, clique_pos: usize) -> f64 {
        self.h[alpha][clique_pos]
    }

    pub fn at(&self, sys: &ConcurrentSystem, alpha: usize, c: Clique) -> f64 {
        sys.clique_index().position(c).map_or(0.0, |i| self.h[alpha][i])
    }
}

/// `f_α(c)` over all cliques, zero where `α·c = ⊥`.
pub fn clique_values(sys: &ConcurrentSystem, f: &Valuation) -> Vec<Vec<f64>> {
    (0..sys.num_states())
        .map(|alpha| sys.cliques().iter().map(|&c| f.clique(sys, alpha, c)).collect())
        .collect()
}

pub fn system_mobius_transform(sys: &ConcurrentSystem, f: &Valuation) -> SystemMobiusTransform {
    let idx = sys.clique_index();
    SystemMobiusTransform {
        h: clique_values(sys, f)
            .iter()
            .map(|fa| idx.mobius_transform(fa))
            .collect(),
    }
}

/// `g_β(c)` for every state `β` and clique `c`.
pub fn g_function(sys: &ConcurrentSystem, h: &SystemMobiusTransform) -> Vec<Vec<f64>> {
    let alphabet = sys.alphabet();
    (0..sys.num_states())
        .map(|beta| {
            sys.cliques()
                .iter()
                .map(|&c| {
                    sys.cliques()
                        .iter()
                        .enumerate()
                        .filter(|&(_, &d)| {
                            !d.is_empty() && sys.act_clique(beta, d).is_some() && alphabet.is_normal_pair(c, d)
                        })
                        .map(|(j, _)| h.get(beta, j))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Vertices `(α, c)` with `c` non-empty and `α·c ≠ ⊥`, by state then clique order.
pub fn state_and_cliques(sys: &ConcurrentSystem) -> Vec<(usize, Clique)> {
    (0..sys.num_states())
        .flat_map(|alpha| sys.enabled_cliques(alpha).map(move |c| (alpha, c)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct TransitionKernel {
    pub vertices: Vec<(usize, Clique)>,
    /// `P = 1{β=α·c} 1{c→d} h_β(d) / g_{α·c}(c)`.
    pub p: DMatrix<f64>,
    /// `P = 1{β=α·c} 1{c→d} f_α(c) h_β(d) / h_α(c)`.
    pub p_alt: DMatrix<f64>,
    /// Rows where `g_{α·c}(c) > tol`; the others are unreachable.
    pub defined: Vec<bool>,
    /// `initial[α][v] = h_α(c)` for `v = (α, c)`.
    pub initial: Vec<Vec<f64>>,
    /// Largest `|P − P_alt|` over rows defined in both forms.
    pub form_discrepancy: f64,
    /// Rows defined in one form only.
    pub definedness_mismatches: usize,
    index: HashMap<(usize, Clique), usize>,
}

impl TransitionKernel {
    pub fn position(&self, alpha: usize, c: Clique) -> Option<usize> {
        self.index.get(&(alpha, c)).copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Largest `|Σ_j P_ij − 1|` over defined rows.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.len())
            .filter(|&i| self.defined[i])
            .map(|i| (self.p.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|Σ_c h_α(c) − 1|`.
    pub fn max_initial_error(&self) -> f64 {
        self.initial
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn transition_kernel(
    sys: &ConcurrentSystem,
    f: &Valuation,
    h: &SystemMobiusTransform,
    g: &[Vec<f64>],
    tol: f64,
) -> TransitionKernel {
    let vertices = state_and_cliques(sys);
    let index: HashMap<(usize, Clique), usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = vertices.len();
    let cidx = sys.clique_index();
    let alphabet = sys.alphabet();
    let mut p = DMatrix::zeros(n, n);
    let mut p_alt = DMatrix::zeros(n, n);
    let mut defined = vec![false; n];
    let mut form_discrepancy: f64 = 0.0;
    let mut definedness_mismatches = 0;
    for (i, &(alpha, c)) in vertices.iter().enumerate() {
        let beta = sys.act_clique(alpha, c).expect("vertex");
        let ci = cidx.position(c).expect("clique");
        let g_row = g[beta][ci];
        let h_row = h.get(alpha, ci);
        let f_c = f.clique(sys, alpha, c);
        let def34 = g_row > tol;
        let def62 = h_row > tol;
        defined[i] = def34;
        if def34 != def62 {
            definedness_mismatches += 1;
        }
        for (j, &(b2, d)) in vertices.iter().enumerate() {
            if b2 != beta || !alphabet.is_normal_pair(c, d) {
                continue;
            }
            let h_d = h.get(beta, cidx.position(d).expect("clique"));
            if def34 {
                p[(i, j)] = h_d / g_row;
            }
            if def62 {
                p_alt[(i, j)] = f_c * h_d / h_row;
            }
            if def34 && def62 {
                form_discrepancy = form_discrepancy.max((p[(i, j)] - p_alt[(i, j)]).abs());
            }
        }
    }
    let initial = (0..sys.num_states())
        .map(|alpha| {
            vertices
                .iter()
                .map(|&(a, c)| if a == alpha { h.at(sys, alpha, c) } else { 0.0 })
                .collect()
        })
        .collect();
    TransitionKernel {
        vertices,
        p,
        p_alt,
        defined,
        initial,
        form_discrepancy,
        definedness_mismatches,
        index,
    }
}

/// Largest `|h_α(c) − f_α(c) g_{α·c}(c)|` over state-and-cliques.
pub fn identity_discrepancy(sys: &ConcurrentSystem, f: &Valuation, h: &SystemMobiusTransform, g: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (alpha, c) in state_and_cliques(sys) {
        let beta = sys.act_clique(alpha, c).expect("vertex");
        let ci = sys.clique_index().position(c).expect("clique");
        let rhs = f.clique(sys, alpha, c) * g[beta][ci];
        worst = worst.max((h.get(alpha, ci) - rhs).abs());
    }
    worst
}

fn check_component(p: &DMatrix<f64>) -> Result<(), MarkovError> {
    let n = p.nrows();
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    for i in 0..n {
        let sum = p.row(i).sum();
        if (sum - 1.0).abs() > 1e-9 || p.row(i).iter().any(|&v| v < 0.0) {
            return Err(MarkovError::NotStochastic { row: i, sum });
        }
    }
    for transpose in [false, true] {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if transpose { p[(j, i)] } else { p[(i, j)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.contains(&false) {
            return Err(MarkovError::NotStronglyConnected);
        }
    }
    Ok(())
}

/// Invariant law of an irreducible stochastic matrix: solves `(Pᵀ − I) π = 0`
/// with one equation replaced by `Σ π = 1`, falling back to power iteration.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>, MarkovError> {
    check_component(p)?;
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    match a.full_piv_lu().solve(&b) {
        Some(pi) if pi.iter().all(|v| v.is_finite() && *v > 0.0) => Ok(pi.iter().copied().collect()),
        _ => stationary_power(p),
    }
}

/// Power iteration on the lazy chain `(P + I) / 2`, to a step change of 1e-15.
pub fn stationary_power(p: &DMatrix<f64>) -> Result<Vec<f64>, MarkovError> {
    check_component(p)?;
    let n = p.nrows();
    let lazy = (p + DMatrix::identity(n, n)) * 0.5;
    let lazy_t = lazy.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..1_000_000 {
        let mut next = &lazy_t * &pi;
        let s = next.sum();
        next /= s;
        let change = (&next - &pi).amax();
        pi = next;
        if change < 1e-15 {
            break;
        }
    }
    Ok(pi.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;
    use crate::presets;
    use crate::spectral::Spectrum;
    use crate::trace::CliqueIndex;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn toy_transform_and_g() {
        let toy = presets::toy();
        let sp = Spectrum::compute(&toy).unwrap();
        let f = &sp.prob_valuation;
        let h = system_mobius_transform(&toy, f);
        let a = Clique::singleton(0);
        assert!(close(h.at(&toy, 0, a), 0.0));
        assert!(close(h.at(&toy, 1, a), 0.0));
        assert!(close(h.at(&toy, 0, Clique::EMPTY), 0.0));
        let g = g_function(&toy, &h);
        let ab = toy.clique_index().position(Clique(0b011)).unwrap();
        assert!(close(g[2][ab], 1.0));
        assert!(identity_discrepancy(&toy, f, &h, &g) < 1e-12);
        let k = transition_kernel(&toy, f, &h, &g, 1e-9);
        let i = k.position(0, Clique(0b011)).unwrap();
        let j = k.position(2, Clique(0b100)).unwrap();
        assert!(close(k.p[(i, j)], 0.25));
        assert!(k.max_row_sum_error() < 1e-12);
        assert!(k.form_discrepancy < 1e-12);
        assert_eq!(k.definedness_mismatches, 0);
        assert!(!k.defined[k.position(0, a).unwrap()]);
        assert!(k.max_initial_error() < 1e-12);
    }

    #[test]
    fn zero_valuation_leaves_only_the_empty_clique() {
        let toy = presets::toy();
        let zero = Valuation { values: vec![vec![0.0; 3]; 3] };
        let h = system_mobius_transform(&toy, &zero);
        for alpha in 0..3 {
            assert_eq!(h.get(alpha, 0), 1.0);
            assert!(h.h[alpha][1..].iter().all(|&v| v == 0.0));
        }
        let g = g_function(&toy, &h);
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn dimer_initial_law() {
        let d = presets::dimer();
        let sp = Spectrum::compute(&d).unwrap();
        let h = system_mobius_transform(&d, &sp.prob_valuation);
        let g = g_function(&d, &h);
        let k = transition_kernel(&d, &sp.prob_valuation, &h, &g, 1e-9);
        let b = k.position(0, Clique::singleton(1)).unwrap();
        assert!(close(k.initial[0][b], 2.0 / 9.0));
        // agrees with the exact monoid-level transform
        let idx = CliqueIndex::new(d.alphabet());
        let third = rational(1, 3);
        let f: Vec<_> = idx.cliques().iter().map(|c| num_traits::pow(third.clone(), c.len())).collect();
        let exact = idx.mobius_transform(&f);
        for (i, e) in exact.iter().enumerate() {
            let e: f64 = num_traits::ToPrimitive::to_f64(e).unwrap();
            assert!(close(h.get(0, i), e));
        }
    }

    #[test]
    fn stationary_laws() {
        let cycle = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        for pi in [stationary_distribution(&cycle).unwrap(), stationary_power(&cycle).unwrap()] {
            assert!(pi.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
        }
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.5, 0.5]);
        assert!(matches!(stationary_distribution(&bad), Err(MarkovError::NotStochastic { .. })));
        let split = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(stationary_distribution(&split), Err(MarkovError::NotStronglyConnected));
    }
}
