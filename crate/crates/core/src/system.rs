//! Concurrent systems: a trace monoid acting partially on a finite set of
//! states, with a valuation on the defined (state, letter) pairs.
//!
//! `None` in the action table is the sink `⊥`.

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{Poly, Rational};
use crate::trace::{Alphabet, Clique, CliqueIndex, Trace, TraceError};

pub const MAX_ENUMERATION_LENGTH: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("DuplicateState: {0:?}")]
    DuplicateState(String),
    #[error("UnknownState: {0:?}")]
    UnknownState(String),
    #[error("action table has the wrong shape: {0}")]
    Shape(String),
    #[error("CommutationViolation: state {state:?}, letters {a:?} and {b:?}")]
    CommutationViolation { state: String, a: String, b: String },
    #[error("InconsistentWeights: state {state:?}, letters {a:?} and {b:?} give different weights in either order")]
    InconsistentWeights { state: String, a: String, b: String },
    #[error("WeightSupportMismatch: state {state:?}, letter {letter:?}")]
    WeightSupportMismatch { state: String, letter: String },
    #[error("NonPositiveWeight: state {state:?}, letter {letter:?}")]
    NonPositiveWeight { state: String, letter: String },
    #[error("BudgetExceeded: requested {requested}, limit {limit}")]
    BudgetExceeded { requested: usize, limit: usize },
    #[error("SingularAtS: growth matrix undefined at s = {0}")]
    SingularAtS(f64),
}

/// Per (state, letter) real weights, zero where the action is undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation {
    pub values: Vec<Vec<f64>>,
}

impl Valuation {
    pub fn get(&self, alpha: usize, a: usize) -> f64 {
        self.values[alpha][a]
    }

    /// `f_α(c)` along the ascending linearization of `c`; zero if `α·c = ⊥`.
    pub fn clique(&self, sys: &ConcurrentSystem, alpha: usize, c: Clique) -> f64 {
        self.word(sys, alpha, c.letters())
    }

    pub fn trace(&self, sys: &ConcurrentSystem, alpha: usize, x: &Trace) -> f64 {
        self.word(sys, alpha, x.word())
    }

    fn word(&self, sys: &ConcurrentSystem, alpha: usize, letters: impl IntoIterator<Item = usize>) -> f64 {
        let mut s = alpha;
        let mut w = 1.0;
        for a in letters {
            match sys.step(s, a) {
                Some(t) => {
                    w *= self.values[s][a];
                    s = t;
                }
                None => return 0.0,
            }
        }
        w
    }
}

/// The four clauses of irreducibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IrreducibilityReport {
    pub transitive: bool,
    pub non_trivial: bool,
    pub monoid_irreducible: bool,
    pub live: bool,
    pub irreducible: bool,
}

impl IrreducibilityReport {
    /// Name of the first failing clause.
    pub fn failed_clause(&self) -> Option<&'static str> {
        if !self.non_trivial {
            Some("non_trivial")
        } else if !self.monoid_irreducible {
            Some("monoid_irreducible")
        } else if !self.transitive {
            Some("transitive")
        } else if !self.live {
            Some("live")
        } else {
            None
        }
    }
}

/// Square matrix of polynomials indexed by states.
#[derive(Clone, Debug, PartialEq)]
pub struct MobiusMatrix<T> {
    pub entries: Vec<Vec<Poly<T>>>,
}

impl<T: Clone + Num> MobiusMatrix<T> {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly<T> {
        &self.entries[i][j]
    }

    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, t: &T) -> Vec<Vec<T>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| p.eval(t)).collect())
            .collect()
    }
}

impl<T: Clone + Num + ToPrimitive> MobiusMatrix<T> {
    pub fn to_f64(&self) -> MobiusMatrix<f64> {
        MobiusMatrix {
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(Poly::to_f64).collect())
                .collect(),
        }
    }
}

impl MobiusMatrix<f64> {
    pub fn eval_matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval_f64(t))
    }
}

#[derive(Clone, Debug)]
pub struct ConcurrentSystem {
    alphabet: Alphabet,
    states: Vec<String>,
    action: Vec<Vec<Option<usize>>>,
    weights: Vec<Vec<Option<Rational>>>,
    valuation: Valuation,
    exact: bool,
    cliques: CliqueIndex,
}

impl ConcurrentSystem {
    /// Validates a system given by its action table `[state][letter]` and
    /// optional exact weights with the same shape.
    ///
    /// `exact` records whether the weights are meant as exact rationals (as
    /// opposed to binary images of floating point numbers).
    pub fn new(
        alphabet: Alphabet,
        states: Vec<String>,
        action: Vec<Vec<Option<usize>>>,
        weights: Option<Vec<Vec<Option<Rational>>>>,
        exact: bool,
    ) -> Result<Self, SystemError> {
        let mut seen = HashSet::new();
        for s in &states {
            if !seen.insert(s.as_str()) {
                return Err(SystemError::DuplicateState(s.clone()));
            }
        }
        let n = alphabet.len();
        if action.len() != states.len() || action.iter().any(|row| row.len() != n) {
            return Err(SystemError::Shape(format!(
                "expected {} rows of {} entries",
                states.len(),
                n
            )));
        }
        for row in &action {
            for t in row.iter().flatten() {
                if *t >= states.len() {
                    return Err(SystemError::UnknownState(format!("#{t}")));
                }
            }
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != states.len() || w.iter().any(|row| row.len() != n) {
                    return Err(SystemError::Shape("weight table shape".into()));
                }
                w
            }
            None => action
                .iter()
                .map(|row| row.iter().map(|t| t.map(|_| Rational::one())).collect())
                .collect(),
        };
        for (alpha, row) in weights.iter().enumerate() {
            for (a, w) in row.iter().enumerate() {
                let name = || (states[alpha].clone(), alphabet.name(a).to_string());
                match (action[alpha][a], w) {
                    (Some(_), Some(w)) if !w.is_positive() => {
                        let (state, letter) = name();
                        return Err(SystemError::NonPositiveWeight { state, letter });
                    }
                    (Some(_), Some(_)) | (None, None) => {}
                    _ => {
                        let (state, letter) = name();
                        return Err(SystemError::WeightSupportMismatch { state, letter });
                    }
                }
            }
        }
        for (a, b) in alphabet.independence_pairs() {
            for alpha in 0..states.len() {
                let ab = action[alpha][a].and_then(|s| action[s][b]);
                let ba = action[alpha][b].and_then(|s| action[s][a]);
                if ab != ba {
                    return Err(SystemError::CommutationViolation {
                        state: states[alpha].clone(),
                        a: alphabet.name(a).to_string(),
                        b: alphabet.name(b).to_string(),
                    });
                }
            }
        }
        for (a, b) in alphabet.independence_pairs() {
            for alpha in 0..states.len() {
                let (Some(sa), Some(sb)) = (action[alpha][a], action[alpha][b]) else {
                    continue;
                };
                if action[sa][b].is_none() {
                    continue;
                }
                let w = |s: usize, l: usize| weights[s][l].clone().expect("defined");
                let lhs = w(alpha, a) * w(sa, b);
                let rhs = w(alpha, b) * w(sb, a);
                let consistent = if exact {
                    lhs == rhs
                } else {
                    let (l, r) = (lhs.to_f64().unwrap_or(f64::NAN), rhs.to_f64().unwrap_or(f64::NAN));
                    (l - r).abs() <= 1e-9 * l.abs().max(r.abs())
                };
                if !consistent {
                    return Err(SystemError::InconsistentWeights {
                        state: states[alpha].clone(),
                        a: alphabet.name(a).to_string(),
                        b: alphabet.name(b).to_string(),
                    });
                }
            }
        }
        let valuation = Valuation {
            values: weights
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|w| w.as_ref().map_or(0.0, |w| w.to_f64().unwrap_or(f64::NAN)))
                        .collect()
                })
                .collect(),
        };
        let cliques = CliqueIndex::new(&alphabet);
        Ok(ConcurrentSystem {
            alphabet,
            states,
            action,
            weights,
            valuation,
            exact,
            cliques,
        })
    }

    /// Singleton-state system `{*}` on which every letter acts trivially.
    pub fn wrap_monoid(alphabet: Alphabet, letter_weights: &[Rational]) -> Result<Self, SystemError> {
        assert_eq!(letter_weights.len(), alphabet.len(), "one weight per letter");
        let n = alphabet.len();
        let action = vec![vec![Some(0); n]];
        let weights = vec![letter_weights.iter().cloned().map(Some).collect()];
        ConcurrentSystem::new(alphabet, vec!["*".to_string()], action, Some(weights), true)
    }

    /// Same system with new weights; `exact = false` marks them as floating point.
    pub fn with_valuation(&self, valuation: &Valuation) -> Result<Self, SystemError> {
        let weights = self
            .action
            .iter()
            .enumerate()
            .map(|(alpha, row)| {
                row.iter()
                    .enumerate()
                    .map(|(a, t)| {
                        t.map(|_| {
                            BigRational::from_float(valuation.values[alpha][a])
                                .unwrap_or_else(Rational::zero)
                        })
                    })
                    .collect()
            })
            .collect();
        ConcurrentSystem::new(
            self.alphabet.clone(),
            self.states.clone(),
            self.action.clone(),
            Some(weights),
            false,
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_table(&self) -> &[Vec<Option<usize>>] {
        &self.action
    }

    pub fn weights(&self) -> &[Vec<Option<Rational>>] {
        &self.weights
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn clique_index(&self) -> &CliqueIndex {
        &self.cliques
    }

    pub fn cliques(&self) -> &[Clique] {
        self.cliques.cliques()
    }

    pub fn step(&self, alpha: usize, a: usize) -> Option<usize> {
        self.action[alpha][a]
    }

    pub fn act_word(&self, alpha: usize, word: &[usize]) -> Option<usize> {
        word.iter().try_fold(alpha, |s, &a| self.action[s][a])
    }

    /// `α·x`, computed along the normal-form linearization.
    pub fn act(&self, alpha: usize, x: &Trace) -> Option<usize> {
        self.act_word(alpha, &x.word())
    }

    pub fn act_clique(&self, alpha: usize, c: Clique) -> Option<usize> {
        c.letters().try_fold(alpha, |s, a| self.action[s][a])
    }

    /// Letters `a` with `α·a ≠ ⊥`.
    pub fn enabled(&self, alpha: usize) -> u64 {
        self.action[alpha]
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_some())
            .fold(0, |m, (a, _)| m | 1 << a)
    }

    /// Non-empty cliques `c` with `α·c ≠ ⊥`.
    pub fn enabled_cliques(&self, alpha: usize) -> impl Iterator<Item = Clique> + '_ {
        self.cliques()
            .iter()
            .copied()
            .filter(move |&c| !c.is_empty() && self.act_clique(alpha, c).is_some())
    }

    /// Exact `λ_α(c)`; zero when `α·c = ⊥`.
    pub fn clique_weight(&self, alpha: usize, c: Clique) -> Rational {
        let w = self.word_weight(alpha, c.letters());
        if self.exact {
            debug_assert_eq!(
                w,
                self.word_weight(alpha, c.letters().collect::<Vec<_>>().into_iter().rev()),
                "clique weight depends on the linearization"
            );
        }
        w
    }

    pub fn trace_weight(&self, alpha: usize, x: &Trace) -> Rational {
        self.word_weight(alpha, x.word())
    }

    fn word_weight(&self, alpha: usize, letters: impl IntoIterator<Item = usize>) -> Rational {
        let mut s = alpha;
        let mut w = Rational::one();
        for a in letters {
            match (self.action[s][a], &self.weights[s][a]) {
                (Some(t), Some(x)) => {
                    w *= x;
                    s = t;
                }
                _ => return Rational::zero(),
            }
        }
        w
    }

    pub fn irreducibility_report(&self) -> IrreducibilityReport {
        let n = self.num_states();
        let non_trivial = self.action.iter().flatten().any(Option::is_some);
        let monoid_irreducible = self.alphabet.is_irreducible();
        let forward: Vec<Vec<usize>> = self
            .action
            .iter()
            .map(|row| row.iter().flatten().copied().collect())
            .collect();
        let mut backward = vec![Vec::new(); n];
        for (s, targets) in forward.iter().enumerate() {
            for &t in targets {
                backward[t].push(s);
            }
        }
        let transitive = n > 0 && (0..n).all(|s| reach(&forward, [s]).len() == n);
        let live = (0..self.alphabet.len()).all(|a| {
            let enabled = (0..n).filter(|&s| self.action[s][a].is_some());
            reach(&backward, enabled).len() == n
        });
        IrreducibilityReport {
            transitive,
            non_trivial,
            monoid_irreducible,
            live,
            irreducible: transitive && non_trivial && monoid_irreducible && live,
        }
    }

    /// Exact Möbius matrix `M_{α,β}(t) = Σ_{α·c=β} λ_α(c)(-t)^{|c|}`.
    pub fn mobius_matrix(&self) -> MobiusMatrix<Rational> {
        self.mobius_matrix_with(|alpha, c| self.clique_weight(alpha, c))
    }

    /// Möbius matrix for an arbitrary real valuation on the same action.
    pub fn mobius_matrix_for(&self, f: &Valuation) -> MobiusMatrix<f64> {
        self.mobius_matrix_with(|alpha, c| f.clique(self, alpha, c))
    }

    fn mobius_matrix_with<T, F>(&self, weight: F) -> MobiusMatrix<T>
    where
        T: Clone + Num + std::ops::Neg<Output = T>,
        F: Fn(usize, Clique) -> T,
    {
        let n = self.num_states();
        let mut coeffs: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); n]; n];
        for alpha in 0..n {
            for &c in self.cliques() {
                let Some(beta) = self.act_clique(alpha, c) else {
                    continue;
                };
                let w = weight(alpha, c);
                let term = if c.len() % 2 == 0 { w } else { -w };
                let entry = &mut coeffs[alpha][beta];
                if entry.len() <= c.len() {
                    entry.resize(c.len() + 1, T::zero());
                }
                entry[c.len()] = entry[c.len()].clone() + term;
            }
        }
        MobiusMatrix {
            entries: coeffs
                .into_iter()
                .map(|row| row.into_iter().map(Poly::new).collect())
                .collect(),
        }
    }

    /// `G(s) = M(s)^{-1}`; all entries must be non-negative.
    pub fn growth_matrix_at(&self, s: f64) -> Result<DMatrix<f64>, SystemError> {
        growth_matrix(&self.mobius_matrix_for(&self.valuation), s)
    }

    /// Restriction of the action to the submonoid generated by `Σ \ {a}`.
    pub fn restrict_letter(&self, a: usize) -> Result<Self, SystemError> {
        if a >= self.alphabet.len() {
            return Err(TraceError::UnknownLetter(format!("#{a}")).into());
        }
        let (alphabet, keep) = self.alphabet.without_letter(a);
        let action = self
            .action
            .iter()
            .map(|row| keep.iter().map(|&b| row[b]).collect())
            .collect();
        let weights = self
            .weights
            .iter()
            .map(|row| keep.iter().map(|&b| row[b].clone()).collect())
            .collect();
        ConcurrentSystem::new(alphabet, self.states.clone(), action, Some(weights), self.exact)
    }

    /// All traces `x` with `α·x ≠ ⊥` and `|x| ≤ max_len`, ordered by length
    /// then by normal form.
    pub fn enumerate_trajectories(&self, alpha: usize, max_len: usize) -> Result<Vec<Trace>, SystemError> {
        if max_len > MAX_ENUMERATION_LENGTH {
            return Err(SystemError::BudgetExceeded {
                requested: max_len,
                limit: MAX_ENUMERATION_LENGTH,
            });
        }
        let mut out = vec![Trace::empty()];
        let mut level: Vec<(Trace, usize)> = vec![(Trace::empty(), alpha)];
        for _ in 0..max_len {
            let mut next = BTreeSet::new();
            for (x, beta) in &level {
                for a in 0..self.alphabet.len() {
                    if let Some(gamma) = self.action[*beta][a] {
                        let mut y = x.clone();
                        y.push_letter(&self.alphabet, a);
                        next.insert((y, gamma));
                    }
                }
            }
            level = next.into_iter().collect();
            out.extend(level.iter().map(|(x, _)| x.clone()));
        }
        Ok(out)
    }

    pub fn state_label(&self, alpha: Option<usize>) -> &str {
        alpha.map_or("⊥", |s| self.states[s].as_str())
    }
}

/// `M(s)^{-1}` for a numeric Möbius matrix, rejecting points where the
/// inverse fails or has a negative entry.
pub fn growth_matrix(m: &MobiusMatrix<f64>, s: f64) -> Result<DMatrix<f64>, SystemError> {
    if !(s >= 0.0) {
        return Err(SystemError::SingularAtS(s));
    }
    let g = m
        .eval_matrix(s)
        .try_inverse()
        .ok_or(SystemError::SingularAtS(s))?;
    if g.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(SystemError::SingularAtS(s));
    }
    Ok(g)
}

fn reach(graph: &[Vec<usize>], start: impl IntoIterator<Item = usize>) -> HashSet<usize> {
    let mut seen: HashSet<usize> = HashSet::new();
    let mut stack: Vec<usize> = start.into_iter().collect();
    seen.extend(stack.iter().copied());
    while let Some(s) = stack.pop() {
        for &t in &graph[s] {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;
    use crate::presets;

    #[test]
    fn toy_validates_and_acts() {
        let toy = presets::toy();
        let a = |s: &str| toy.alphabet().normal_form(&toy.alphabet().parse_word(s).unwrap()).unwrap();
        assert_eq!(toy.act(0, &a("ab")), Some(2));
        assert_eq!(toy.act(0, &a("")), Some(0));
        assert_eq!(toy.act(0, &a("c")), None);
        assert!(toy.irreducibility_report().irreducible);
    }

    #[test]
    fn commutation_violation_detected() {
        let toy = presets::toy();
        let mut action = toy.action_table().to_vec();
        // 0·b = 0 gives (0·a)·b = 2 but (0·b)·a = 1
        action[0][1] = Some(0);
        let err = ConcurrentSystem::new(toy.alphabet().clone(), toy.states().to_vec(), action, None, true)
            .unwrap_err();
        assert!(matches!(err, SystemError::CommutationViolation { .. }), "{err}");
    }

    #[test]
    fn weight_support_rules() {
        let toy = presets::toy();
        let mut w = toy.weights().to_vec();
        w[0][2] = Some(rational(1, 1));
        let err = ConcurrentSystem::new(
            toy.alphabet().clone(),
            toy.states().to_vec(),
            toy.action_table().to_vec(),
            Some(w.clone()),
            true,
        )
        .unwrap_err();
        assert_eq!(
            err,
            SystemError::WeightSupportMismatch { state: "0".into(), letter: "c".into() }
        );
        w[0][2] = None;
        w[0][0] = Some(rational(0, 1));
        let err = ConcurrentSystem::new(
            toy.alphabet().clone(),
            toy.states().to_vec(),
            toy.action_table().to_vec(),
            Some(w),
            true,
        )
        .unwrap_err();
        assert!(matches!(err, SystemError::NonPositiveWeight { .. }));
    }

    #[test]
    fn toy_mobius_matrix() {
        let m = presets::toy().mobius_matrix();
        let p = Poly::from_integers;
        let expect = [
            [p(&[1]), p(&[0, -1]), p(&[0, -1, 1])],
            [p(&[0, -1]), p(&[1]), p(&[0, -1, 1])],
            [p(&[0, -1]), p(&[]), p(&[1, -2, 1])],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.entry(i, j), &expect[i][j], "entry ({i},{j})");
            }
        }
        let id = m.eval(&rational(0, 1));
        for (i, row) in id.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, rational((i == j) as i64, 1));
            }
        }
    }

    #[test]
    fn dimer_wrap_is_its_mobius_polynomial() {
        let d = presets::dimer();
        assert_eq!(d.num_states(), 1);
        assert_eq!(d.mobius_matrix().entry(0, 0), &Poly::from_integers(&[1, -4, 3]));
    }

    #[test]
    fn trivial_wrap_is_flagged() {
        let empty: [&str; 0] = [];
        let sys = ConcurrentSystem::wrap_monoid(Alphabet::free(&empty), &[]).unwrap();
        let r = sys.irreducibility_report();
        assert!(!r.non_trivial && !r.irreducible);
    }

    #[test]
    fn growth_matrix_series() {
        let toy = presets::toy();
        let g0 = toy.growth_matrix_at(0.0).unwrap();
        assert!((g0 - DMatrix::identity(3, 3)).abs().max() < 1e-15);
        // truncated word enumeration at s = 0.25; the omitted tail is of order (s/ρ)^13
        let s = 0.25f64;
        let g = toy.growth_matrix_at(s).unwrap();
        for alpha in 0..3 {
            let mut row = [0.0; 3];
            for x in toy.enumerate_trajectories(alpha, 12).unwrap() {
                let beta = toy.act(alpha, &x).unwrap();
                row[beta] += s.powi(x.len() as i32) * toy.trace_weight(alpha, &x).to_f64().unwrap();
            }
            for beta in 0..3 {
                let err = g[(alpha, beta)] - row[beta];
                assert!((0.0..5e-4).contains(&err), "{alpha},{beta}: {err}");
            }
        }
        assert!(matches!(toy.growth_matrix_at(0.75), Err(SystemError::SingularAtS(_))));
    }

    #[test]
    fn restrictions() {
        let toy = presets::toy();
        let r = toy.restrict_letter(2).unwrap();
        assert_eq!(r.alphabet().letters(), ["a", "b"]);
        assert_eq!(r.alphabet().independence_pairs(), vec![(0, 1)]);
        assert_eq!(r.step(2, 0), Some(2));
        let single = ConcurrentSystem::wrap_monoid(Alphabet::free(&["a"]), &[rational(1, 1)]).unwrap();
        assert!(single.restrict_letter(0).unwrap().alphabet().is_trivial());
        let d = presets::dimer().restrict_letter(0).unwrap();
        assert_eq!(d.alphabet().letters(), ["b", "c", "d"]);
        assert_eq!(d.mobius_matrix().entry(0, 0), &Poly::from_integers(&[1, -3, 1]));
        assert!(toy.restrict_letter(7).is_err());
    }

    #[test]
    fn trajectory_enumeration() {
        let toy = presets::toy();
        let one: Vec<String> = toy
            .enumerate_trajectories(0, 1)
            .unwrap()
            .iter()
            .map(|x| toy.alphabet().trace_label(x))
            .collect();
        assert_eq!(one, ["ε", "a", "b"]);
        assert_eq!(toy.enumerate_trajectories(0, 0).unwrap().len(), 1);
        // aa, ab, bb, bc
        let two = toy.enumerate_trajectories(0, 2).unwrap();
        assert_eq!(two.iter().filter(|x| x.len() == 2).count(), 4);
        assert!(matches!(
            toy.enumerate_trajectories(0, 15),
            Err(SystemError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn liveness_flips_without_the_c_arrow() {
        let toy = presets::toy();
        assert!(toy.irreducibility_report().live);
        let mut action = toy.action_table().to_vec();
        let mut weights = toy.weights().to_vec();
        action[2][2] = None;
        weights[2][2] = None;
        let cut = ConcurrentSystem::new(toy.alphabet().clone(), toy.states().to_vec(), action, Some(weights), true)
            .unwrap();
        let r = cut.irreducibility_report();
        assert!(!r.live && !r.irreducible);
    }

    #[test]
    fn monoid_reducibility_reported() {
        let alph = Alphabet::new(&["a", "b"], &[("a", "b")]).unwrap();
        let sys = ConcurrentSystem::wrap_monoid(alph, &[rational(1, 1), rational(1, 1)]).unwrap();
        assert!(!sys.irreducibility_report().monoid_irreducible);
    }
}
