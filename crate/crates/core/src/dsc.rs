//! Directed graph of state-and-cliques (DSC), stability, and the
//! condensation of its stable part.
//!
//! A vertex `(α, c)` is stable when some protection exists: a trace `x` from
//! `α` whose first clique is `c` and stays `c` in every extension of `x`.
//! Numerically this is `h_α(c) > tol`. A combinatorial check is also
//! available: an extension `x b` enlarges the first clique exactly when `b`
//! is independent of every letter of `x`, so protections are decided by a
//! search over pairs (state `α·x`, letters of `x`), which is finite.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::markov::{self, SystemMobiusTransform};
use crate::spectral::Spectrum;
use crate::system::ConcurrentSystem;
use crate::trace::{Clique, Trace};

pub const MAX_PROTECTION_DEPTH: usize = 12;
/// Tolerance for "same spectral radius as the maximum".
pub const BASIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DscError {
    #[error("StructuralInconsistency: {0}")]
    StructuralInconsistency(String),
    #[error("BudgetExceeded: depth {requested} above {limit}")]
    BudgetExceeded { requested: usize, limit: usize },
    #[error("not a state-and-clique: ({0}, {1})")]
    NotAVertex(String, String),
    #[error("UmbrellaViolation: {0}")]
    UmbrellaViolation(String),
}

#[derive(Clone, Debug)]
pub struct DscGraph {
    pub vertices: Vec<(usize, Clique)>,
    pub successors: Vec<Vec<usize>>,
    index: HashMap<(usize, Clique), usize>,
}

impl DscGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn position(&self, alpha: usize, c: Clique) -> Option<usize> {
        self.index.get(&(alpha, c)).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.successors[i].contains(&j)
    }

    pub fn label(&self, sys: &ConcurrentSystem, i: usize) -> String {
        let (alpha, c) = self.vertices[i];
        format!("({},{})", sys.states()[alpha], sys.alphabet().clique_label(c))
    }
}

/// Vertices `(α, c)` with `α·c ≠ ⊥`; edges `(α,c) → (α·c, d)` for `c → d`.
pub fn build_dsc(sys: &ConcurrentSystem) -> DscGraph {
    let vertices = markov::state_and_cliques(sys);
    let index: HashMap<(usize, Clique), usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let alphabet = sys.alphabet();
    let successors = vertices
        .iter()
        .map(|&(alpha, c)| {
            let beta = sys.act_clique(alpha, c).expect("vertex");
            vertices
                .iter()
                .enumerate()
                .filter(|&(_, &(b2, d))| b2 == beta && alphabet.is_normal_pair(c, d))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    DscGraph {
        vertices,
        successors,
        index,
    }
}

/// `stable(α, c) ⟺ h_α(c) > tol`, with structural checks: predecessors of
/// stable vertices are stable and every stable vertex has a stable successor.
pub fn classify_stable(
    sys: &ConcurrentSystem,
    dsc: &DscGraph,
    h: &SystemMobiusTransform,
    tol: f64,
) -> Result<Vec<bool>, DscError> {
    let stable: Vec<bool> = dsc.vertices.iter().map(|&(a, c)| h.at(sys, a, c) > tol).collect();
    for (i, succ) in dsc.successors.iter().enumerate() {
        if !stable[i] && succ.iter().any(|&j| stable[j]) {
            return Err(DscError::StructuralInconsistency(format!(
                "{} is unstable but has a stable successor",
                dsc.label(sys, i)
            )));
        }
        if stable[i] && !succ.iter().any(|&j| stable[j]) {
            return Err(DscError::StructuralInconsistency(format!(
                "{} is stable without a stable successor",
                dsc.label(sys, i)
            )));
        }
    }
    if sys.irreducibility_report().non_trivial && !stable.contains(&true) {
        return Err(DscError::StructuralInconsistency("no stable vertex".into()));
    }
    Ok(stable)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtectionOutcome {
    /// A protection of the vertex.
    Certificate(Trace),
    /// The finite search space holds no protection: the vertex is unstable.
    Refuted,
    /// The depth budget ran out first.
    Inconclusive,
}

/// Breadth-first search for a protection of `(α, c)` extending `c` by at most
/// `depth_budget` letters.
pub fn protection_search(
    sys: &ConcurrentSystem,
    alpha: usize,
    c: Clique,
    depth_budget: usize,
) -> Result<ProtectionOutcome, DscError> {
    if depth_budget > MAX_PROTECTION_DEPTH {
        return Err(DscError::BudgetExceeded {
            requested: depth_budget,
            limit: MAX_PROTECTION_DEPTH,
        });
    }
    let alphabet = sys.alphabet();
    let vertex_err = || DscError::NotAVertex(sys.states()[alpha].clone(), alphabet.clique_label(c));
    if c.is_empty() || !alphabet.is_clique(c) {
        return Err(vertex_err());
    }
    let start = sys.act_clique(alpha, c).ok_or_else(vertex_err)?;
    // letters whose every occurrence would join the first clique of x
    let free = |mask: u64| -> u64 {
        Clique(mask)
            .letters()
            .fold(alphabet.full_mask(), |m, a| m & alphabet.independent_mask(a))
    };
    let mut seen: HashSet<(usize, u64)> = HashSet::new();
    seen.insert((start, c.0));
    let mut queue = VecDeque::new();
    queue.push_back((start, c.0, c.letters().collect::<Vec<_>>()));
    let mut truncated = false;
    while let Some((beta, mask, word)) = queue.pop_front() {
        if sys.enabled(beta) & free(mask) == 0 {
            let x = alphabet.normal_form(&word).expect("letters of the alphabet");
            return Ok(ProtectionOutcome::Certificate(x));
        }
        for b in Clique(sys.enabled(beta)).letters() {
            if alphabet.dependent_mask(b) & mask == 0 {
                continue;
            }
            let next = (sys.step(beta, b).expect("enabled"), mask | 1 << b);
            if seen.contains(&next) {
                continue;
            }
            if word.len() - c.len() >= depth_budget {
                truncated = true;
                continue;
            }
            seen.insert(next);
            let mut w = word.clone();
            w.push(b);
            queue.push_back((next.0, next.1, w));
        }
    }
    Ok(if truncated {
        ProtectionOutcome::Inconclusive
    } else {
        ProtectionOutcome::Refuted
    })
}

/// `F_{(α,c),(β,d)} = 1{β=α·c} 1{c→d} ρ^{|c|} λ_α(c)` with the system's own valuation.
pub fn f_matrix(sys: &ConcurrentSystem, dsc: &DscGraph, rho: f64) -> DMatrix<f64> {
    let n = dsc.len();
    let mut f = DMatrix::zeros(n, n);
    for (i, &(alpha, c)) in dsc.vertices.iter().enumerate() {
        let w = rho.powi(c.len() as i32) * sys.valuation().clique(sys, alpha, c);
        for &j in &dsc.successors[i] {
            f[(i, j)] = w;
        }
    }
    f
}

/// Spectral radius of a non-negative irreducible matrix, by power iteration
/// on `A + I` until the Collatz-Wielandt bounds meet.
pub fn spectral_radius_irreducible(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return a[(0, 0)];
    }
    let b = a + DMatrix::identity(n, n);
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let mut estimate = 0.0;
    for _ in 0..100_000 {
        let y = &b * &x;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        estimate = 0.5 * (lo + hi);
        x = &y / y.amax();
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    estimate - 1.0
}

#[derive(Clone, Debug)]
pub struct Component {
    /// DSC vertex indices, ascending.
    pub vertices: Vec<usize>,
    pub radius: f64,
    pub basic: bool,
    pub is_final: bool,
}

#[derive(Clone, Debug)]
pub struct Condensation {
    /// Strongly connected components of the stable subgraph.
    pub components: Vec<Component>,
    pub f_plus_radius: f64,
    pub f_zero_radius: f64,
    /// Basic components are exactly the final ones.
    pub umbrella: bool,
}

impl Condensation {
    pub fn basic(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.basic)
    }

    pub fn finals(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.is_final)
    }

    /// Fails unless the umbrella property holds and `F⁰` has radius below 1.
    pub fn check(&self) -> Result<(), DscError> {
        if !self.umbrella {
            return Err(DscError::UmbrellaViolation("basic and final components differ".into()));
        }
        if self.f_zero_radius >= 1.0 - BASIC_TOL {
            return Err(DscError::UmbrellaViolation(format!(
                "unstable block has spectral radius {}",
                self.f_zero_radius
            )));
        }
        Ok(())
    }
}

/// SCCs of the subgraph on `keep`, each with its vertex list and radius of `F`.
fn components_of(dsc: &DscGraph, f: &DMatrix<f64>, keep: &[bool]) -> Vec<(Vec<usize>, f64)> {
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..dsc.len()).map(|i| graph.add_node(i)).collect();
    for (i, succ) in dsc.successors.iter().enumerate() {
        for &j in succ {
            if keep[i] && keep[j] {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut out: Vec<(Vec<usize>, f64)> = tarjan_scc(&graph)
        .into_iter()
        .map(|scc| {
            let mut vs: Vec<usize> = scc.into_iter().map(|n| graph[n]).collect();
            vs.sort_unstable();
            vs
        })
        .filter(|vs| keep[vs[0]])
        .map(|vs| {
            let sub = DMatrix::from_fn(vs.len(), vs.len(), |i, j| f[(vs[i], vs[j])]);
            let r = spectral_radius_irreducible(&sub);
            (vs, r)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Condensation of the stable subgraph with basic/final marks.
pub fn condense(dsc: &DscGraph, stable: &[bool], f: &DMatrix<f64>) -> Condensation {
    let unstable: Vec<bool> = stable.iter().map(|s| !s).collect();
    let f_zero_radius = components_of(dsc, f, &unstable)
        .iter()
        .map(|c| c.1)
        .fold(0.0, f64::max);
    let comps = components_of(dsc, f, stable);
    let f_plus_radius = comps.iter().map(|c| c.1).fold(0.0, f64::max);
    let mut owner = vec![usize::MAX; dsc.len()];
    for (k, (vs, _)) in comps.iter().enumerate() {
        for &v in vs {
            owner[v] = k;
        }
    }
    let components: Vec<Component> = comps
        .iter()
        .enumerate()
        .map(|(k, (vs, r))| {
            let is_final = vs.iter().all(|&v| {
                dsc.successors[v]
                    .iter()
                    .all(|&w| !stable[w] || owner[w] == k)
            });
            Component {
                vertices: vs.clone(),
                radius: *r,
                basic: (r - f_plus_radius).abs() <= BASIC_TOL,
                is_final,
            }
        })
        .collect();
    let umbrella = components.iter().all(|c| c.basic == c.is_final);
    Condensation {
        components,
        f_plus_radius,
        f_zero_radius,
        umbrella,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    /// `‖F u − u‖∞`.
    pub residual: f64,
    pub zero_on_unstable: bool,
    pub positive_on_stable: bool,
    pub pass: bool,
}

/// Checks that `u_{(α,c)} = Δ(α₀, α) h_α(c)` is a non-negative fixed vector of
/// `F`, vanishing exactly off the stable vertices. `h` comes from the
/// normalized valuation.
pub fn f_invariant_vector_check(
    sys: &ConcurrentSystem,
    dsc: &DscGraph,
    f: &DMatrix<f64>,
    spectrum: &Spectrum,
    h: &SystemMobiusTransform,
    stable: &[bool],
    tol: f64,
) -> InvariantReport {
    let u = nalgebra::DVector::from_iterator(
        dsc.len(),
        dsc.vertices.iter().map(|&(a, c)| spectrum.delta(0, a) * h.at(sys, a, c)),
    );
    let residual = (f * &u - &u).amax();
    let zero_on_unstable = (0..dsc.len()).all(|i| stable[i] || u[i].abs() <= tol);
    let positive_on_stable = (0..dsc.len()).all(|i| !stable[i] || u[i] > tol);
    let nonzero = u.amax() > tol;
    InvariantReport {
        residual,
        zero_on_unstable,
        positive_on_stable,
        pass: residual <= 1e-9 && zero_on_unstable && positive_on_stable && nonzero,
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz document: unstable vertices dashed, basic components as clusters.
pub fn to_dot(sys: &ConcurrentSystem, dsc: &DscGraph, stable: Option<&[bool]>, cond: Option<&Condensation>) -> String {
    let mut out = String::from("digraph dsc {\n  node [shape=box];\n");
    let mut clustered = vec![false; dsc.len()];
    if let Some(cond) = cond {
        for (k, comp) in cond.basic().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{k} {{\n    style=dotted;\n    label=\"basic {k}\";");
            for &v in &comp.vertices {
                clustered[v] = true;
                let _ = writeln!(out, "    v{v};");
            }
            out.push_str("  }\n");
        }
    }
    for i in 0..dsc.len() {
        let style = match stable {
            Some(s) if !s[i] => "dashed",
            _ => "solid",
        };
        let _ = writeln!(out, "  v{i} [label=\"{}\", style={style}];", dot_escape(&dsc.label(sys, i)));
    }
    for (i, succ) in dsc.successors.iter().enumerate() {
        for &j in succ {
            let _ = writeln!(out, "  v{i} -> v{j};");
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    struct Analysed {
        sys: ConcurrentSystem,
        sp: Spectrum,
        dsc: DscGraph,
        h: SystemMobiusTransform,
        stable: Vec<bool>,
    }

    fn analyse(sys: ConcurrentSystem) -> Analysed {
        let sp = Spectrum::compute(&sys).unwrap();
        let dsc = build_dsc(&sys);
        let h = markov::system_mobius_transform(&sys, &sp.prob_valuation);
        let stable = classify_stable(&sys, &dsc, &h, 1e-9).unwrap();
        Analysed { sys, sp, dsc, h, stable }
    }

    fn unstable_labels(a: &Analysed) -> Vec<String> {
        (0..a.dsc.len()).filter(|&i| !a.stable[i]).map(|i| a.dsc.label(&a.sys, i)).collect()
    }

    #[test]
    fn toy_structure() {
        let a = analyse(presets::toy());
        assert_eq!(a.dsc.len(), 10);
        assert_eq!(unstable_labels(&a), ["(0,a)", "(1,a)"]);
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let cond = condense(&a.dsc, &a.stable, &f);
        let basic: Vec<_> = cond.basic().collect();
        assert_eq!(basic.len(), 1);
        assert_eq!(basic[0].vertices.len(), 6);
        assert!(cond.umbrella);
        assert!((cond.f_plus_radius - 1.0).abs() < 1e-9);
        assert!(cond.f_zero_radius < 1.0 - 1e-6);
        cond.check().unwrap();
        let inv = f_invariant_vector_check(&a.sys, &a.dsc, &f, &a.sp, &a.h, &a.stable, 1e-9);
        assert!(inv.pass, "{inv:?}");
    }

    #[test]
    fn toy_protections() {
        let toy = presets::toy();
        let (a, b) = (Clique::singleton(0), Clique::singleton(1));
        match protection_search(&toy, 0, b, 12).unwrap() {
            ProtectionOutcome::Certificate(x) => {
                assert_eq!(x.first_clique(), b);
                assert_eq!(toy.alphabet().trace_label(&x), "bc");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(protection_search(&toy, 0, a, 12).unwrap(), ProtectionOutcome::Refuted);
        assert_eq!(protection_search(&toy, 1, a, 12).unwrap(), ProtectionOutcome::Refuted);
        // maximal enabled clique protects itself
        let ab = Clique(0b011);
        assert_eq!(
            protection_search(&toy, 0, ab, 0).unwrap(),
            ProtectionOutcome::Certificate(toy.alphabet().normal_form(&[0, 1]).unwrap())
        );
        assert_eq!(protection_search(&toy, 0, b, 0).unwrap(), ProtectionOutcome::Inconclusive);
        assert!(matches!(protection_search(&toy, 0, b, 13), Err(DscError::BudgetExceeded { .. })));
        assert!(matches!(
            protection_search(&toy, 0, Clique::singleton(2), 3),
            Err(DscError::NotAVertex(..))
        ));
    }

    #[test]
    fn dimer_is_all_stable() {
        let a = analyse(presets::dimer());
        assert_eq!(a.dsc.len(), 7);
        assert!(a.stable.iter().all(|&s| s));
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let inv = f_invariant_vector_check(&a.sys, &a.dsc, &f, &a.sp, &a.h, &a.stable, 1e-9);
        assert!(inv.pass);
        let digraph = a.sys.alphabet().clique_digraph();
        assert_eq!(a.dsc.edge_count(), digraph.edge_count());
    }

    #[test]
    fn cyc6_components() {
        let a = analyse(presets::cyc6());
        for (i, &(alpha, c)) in a.dsc.vertices.iter().enumerate() {
            assert_eq!(a.stable[i], c.0 == a.sys.enabled(alpha), "{}", a.dsc.label(&a.sys, i));
        }
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let cond = condense(&a.dsc, &a.stable, &f);
        let mut sizes: Vec<usize> = cond.basic().map(|c| c.vertices.len()).collect();
        sizes.sort();
        assert_eq!(sizes, [3, 6]);
        assert!(cond.umbrella);
    }

    #[test]
    fn free_monoid_is_one_component() {
        let a = analyse(presets::free(3));
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let cond = condense(&a.dsc, &a.stable, &f);
        assert_eq!(cond.components.len(), 1);
        assert!(cond.components[0].basic && cond.components[0].is_final);
    }

    #[test]
    fn zero_transform_fails_the_invariant_check() {
        let a = analyse(presets::toy());
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let zero = SystemMobiusTransform { h: vec![vec![0.0; 5]; 3] };
        let inv = f_invariant_vector_check(&a.sys, &a.dsc, &f, &a.sp, &zero, &a.stable, 1e-9);
        assert!(!inv.pass);
    }

    #[test]
    fn dot_output() {
        let a = analyse(presets::toy());
        let f = f_matrix(&a.sys, &a.dsc, a.sp.rho);
        let cond = condense(&a.dsc, &a.stable, &f);
        let dot = to_dot(&a.sys, &a.dsc, Some(&a.stable), Some(&cond));
        assert_eq!(dot.matches("[label=").count(), 10);
        assert_eq!(dot.matches("style=dashed").count(), 2);
        assert_eq!(dot, to_dot(&a.sys, &a.dsc, Some(&a.stable), Some(&cond)));
        let empty = DscGraph { vertices: vec![], successors: vec![], index: HashMap::new() };
        assert_eq!(to_dot(&a.sys, &empty, None, None), "digraph dsc {\n  node [shape=box];\n}\n");
    }

    #[test]
    fn radius_of_small_matrices() {
        let cyc = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius_irreducible(&cyc) - 1.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let expect = (5.0 + 33f64.sqrt()) / 2.0;
        assert!((spectral_radius_irreducible(&m) - expect).abs() < 1e-10);
    }
}
