//! Slow, independent cross-checks: trace censuses by enumeration, Taylor
//! coefficients of the inverse Möbius matrix, Möbius round trips and
//! protection searches against the stability flags.

use std::collections::{BTreeMap, HashSet};

use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::dsc::{self, DscError, ProtectionOutcome};
use crate::markov::SystemMobiusTransform;
use crate::poly::{Poly, Rational};
use crate::system::{ConcurrentSystem, MobiusMatrix};
use crate::trace::{Alphabet, Clique, CliqueIndex, Trace};

pub const MAX_CENSUS_LEN: usize = 12;
pub const MAX_CENSUS_TRACES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("BudgetExceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Dsc(#[from] DscError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bucket {
    pub count: u64,
    pub weight: Rational,
}

/// Traces of `M_{α,β}` bucketed by `(α, β, length)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCensus {
    pub max_len: usize,
    pub buckets: BTreeMap<(usize, usize, usize), Bucket>,
}

impl TraceCensus {
    pub fn count(&self, alpha: usize, beta: usize, len: usize) -> u64 {
        self.buckets.get(&(alpha, beta, len)).map_or(0, |b| b.count)
    }

    pub fn weight(&self, alpha: usize, beta: usize, len: usize) -> Rational {
        self.buckets
            .get(&(alpha, beta, len))
            .map_or_else(Rational::zero, |b| b.weight.clone())
    }

    /// Number of traces of length `len` from `α`, all end states together.
    pub fn count_from(&self, alpha: usize, len: usize) -> u64 {
        self.buckets
            .iter()
            .filter(|((a, _, l), _)| *a == alpha && *l == len)
            .map(|(_, b)| b.count)
            .sum()
    }

    fn add(&mut self, sys: &ConcurrentSystem, alpha: usize, x: &Trace) {
        let beta = sys.act(alpha, x).expect("enumerated trajectory");
        let bucket = self.buckets.entry((alpha, beta, x.len())).or_default();
        bucket.count += 1;
        bucket.weight += sys.trace_weight(alpha, x);
    }
}

fn check_len(max_len: usize) -> Result<(), OracleError> {
    if max_len > MAX_CENSUS_LEN {
        return Err(OracleError::BudgetExceeded(format!(
            "length {max_len} above {MAX_CENSUS_LEN}"
        )));
    }
    Ok(())
}

fn guard(total: usize) -> Result<(), OracleError> {
    if total > MAX_CENSUS_TRACES {
        return Err(OracleError::BudgetExceeded(format!(
            "more than {MAX_CENSUS_TRACES} traces"
        )));
    }
    Ok(())
}

/// Extends words letter by letter and dedupes by normal form.
pub fn census(sys: &ConcurrentSystem, max_len: usize) -> Result<TraceCensus, OracleError> {
    check_len(max_len)?;
    let alphabet = sys.alphabet();
    let mut out = TraceCensus {
        max_len,
        buckets: BTreeMap::new(),
    };
    let mut total = 0;
    for alpha in 0..sys.num_states() {
        let mut layer = vec![(Trace::empty(), alpha)];
        out.add(sys, alpha, &Trace::empty());
        for _ in 0..max_len {
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for (x, beta) in &layer {
                for a in Clique(sys.enabled(*beta)).letters() {
                    let mut y = x.clone();
                    y.push_letter(alphabet, a);
                    if seen.insert(y.clone()) {
                        next.push((y, sys.step(*beta, a).expect("enabled")));
                    }
                }
            }
            total += next.len();
            guard(total)?;
            for (y, _) in &next {
                out.add(sys, alpha, y);
            }
            layer = next;
        }
    }
    Ok(out)
}

/// Same buckets, enumerating normal forms directly as chains of normal pairs.
pub fn census_by_cliques(sys: &ConcurrentSystem, max_len: usize) -> Result<TraceCensus, OracleError> {
    check_len(max_len)?;
    let alphabet = sys.alphabet();
    let mut out = TraceCensus {
        max_len,
        buckets: BTreeMap::new(),
    };
    let mut total = 0;
    for alpha in 0..sys.num_states() {
        out.add(sys, alpha, &Trace::empty());
        // (cliques so far, length, current state)
        let mut stack: Vec<(Vec<Clique>, usize, usize)> = vec![(Vec::new(), 0, alpha)];
        while let Some((cs, len, beta)) = stack.pop() {
            for d in sys.enabled_cliques(beta) {
                if d.is_empty() || len + d.len() > max_len {
                    continue;
                }
                if let Some(&c) = cs.last() {
                    if !alphabet.is_normal_pair(c, d) {
                        continue;
                    }
                }
                let mut next = cs.clone();
                next.push(d);
                let word: Vec<usize> = next.iter().flat_map(|c| c.letters()).collect();
                out.add(sys, alpha, &alphabet.normal_form(&word).expect("letters"));
                total += 1;
                guard(total)?;
                stack.push((next, len + d.len(), sys.act_clique(beta, d).expect("enabled")));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub alpha: usize,
    pub beta: usize,
    pub degree: usize,
    pub expected: Rational,
    pub found: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesReport {
    pub max_len: usize,
    pub first_mismatch: Option<Mismatch>,
}

impl SeriesReport {
    pub fn pass(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Taylor coefficients of `M(t)^{-1}` up to degree `max_len`, from
/// `G_0 = I` and `G_k = −Σ_{j≥1} M_j G_{k−j}`.
pub fn inverse_series(m: &MobiusMatrix<Rational>, max_len: usize) -> Vec<Vec<Vec<Rational>>> {
    let n = m.dim();
    let coeff = |i: usize, j: usize, k: usize| -> Rational { m.entry(i, j).coeff(k) };
    let mut g: Vec<Vec<Vec<Rational>>> = Vec::with_capacity(max_len + 1);
    g.push(
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect(),
    );
    for k in 1..=max_len {
        let mut gk = vec![vec![Rational::zero(); n]; n];
        for j in 1..=k.min(m.max_degree()) {
            for (a, row) in gk.iter_mut().enumerate() {
                for b in 0..n {
                    let mut acc = Rational::zero();
                    for c in 0..n {
                        let mc = coeff(a, c, j);
                        if !mc.is_zero() {
                            acc += mc * &g[k - j][c][b];
                        }
                    }
                    row[b] -= acc;
                }
            }
        }
        g.push(gk);
    }
    g
}

/// Compares the inverse series against census weights, degree by degree.
pub fn series_check(census: &TraceCensus, m: &MobiusMatrix<Rational>, max_len: usize) -> SeriesReport {
    let series = inverse_series(m, max_len);
    let n = m.dim();
    for (k, gk) in series.iter().enumerate() {
        for alpha in 0..n {
            for beta in 0..n {
                let expected = census.weight(alpha, beta, k);
                if gk[alpha][beta] != expected {
                    return SeriesReport {
                        max_len,
                        first_mismatch: Some(Mismatch {
                            alpha,
                            beta,
                            degree: k,
                            expected,
                            found: gk[alpha][beta].clone(),
                        }),
                    };
                }
            }
        }
    }
    SeriesReport {
        max_len,
        first_mismatch: None,
    }
}

/// Copy of `m` with `t^k` added to entry `(i, j)`.
pub fn perturb(m: &MobiusMatrix<Rational>, i: usize, j: usize, k: usize) -> MobiusMatrix<Rational> {
    let mut entries = m.entries.clone();
    entries[i][j] = &entries[i][j] + &Poly::monomial(Rational::one(), k);
    MobiusMatrix { entries }
}

/// Random rational clique functions survive transform then inverse exactly.
pub fn mobius_roundtrip_check<R: Rng>(alphabet: &Alphabet, trials: usize, rng: &mut R) -> bool {
    let index = CliqueIndex::new(alphabet);
    (0..trials).all(|_| {
        let f: Vec<Rational> = (0..index.len())
            .map(|_| Rational::new(rng.random_range(-20..=20).into(), rng.random_range(1..=9).into()))
            .collect();
        roundtrip(&index, &f)
    })
}

pub fn roundtrip(index: &CliqueIndex, f: &[Rational]) -> bool {
    index.mobius_inverse(&index.mobius_transform(f)) == f
}

#[derive(Clone, Debug)]
pub struct StabilityCrossCheck {
    pub vertices: Vec<(usize, Clique)>,
    pub h_stable: Vec<bool>,
    pub outcomes: Vec<ProtectionOutcome>,
    /// Vertices whose search outcome contradicts the `h` flag.
    pub mismatches: Vec<usize>,
}

impl StabilityCrossCheck {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn unstable(&self) -> Vec<(usize, Clique)> {
        self.vertices
            .iter()
            .zip(&self.h_stable)
            .filter(|(_, s)| !**s)
            .map(|(v, _)| *v)
            .collect()
    }
}

/// Runs a protection search on every vertex and compares with `h > tol`.
pub fn stability_cross_check(
    sys: &ConcurrentSystem,
    h: &SystemMobiusTransform,
    depth: usize,
    tol: f64,
) -> Result<StabilityCrossCheck, OracleError> {
    let graph = dsc::build_dsc(sys);
    let mut h_stable = Vec::new();
    let mut outcomes = Vec::new();
    let mut mismatches = Vec::new();
    for (i, &(alpha, c)) in graph.vertices.iter().enumerate() {
        let stable = h.at(sys, alpha, c) > tol;
        let outcome = dsc::protection_search(sys, alpha, c, depth)?;
        let contradicts = match outcome {
            ProtectionOutcome::Certificate(_) => !stable,
            ProtectionOutcome::Refuted => stable,
            ProtectionOutcome::Inconclusive => false,
        };
        if contradicts {
            mismatches.push(i);
        }
        h_stable.push(stable);
        outcomes.push(outcome);
    }
    Ok(StabilityCrossCheck {
        vertices: graph.vertices,
        h_stable,
        outcomes,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov;
    use crate::poly::rational;
    use crate::presets;
    use crate::spectral::Spectrum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_monoid() -> ConcurrentSystem {
        let toy = presets::toy();
        ConcurrentSystem::wrap_monoid(toy.alphabet().clone(), &[Rational::one(), Rational::one(), Rational::one()]).unwrap()
    }

    #[test]
    fn toy_monoid_length_two() {
        let c = census(&toy_monoid(), 2).unwrap();
        assert_eq!(c.count(0, 0, 2), 8);
    }

    #[test]
    fn dimer_counts() {
        let c = census(&presets::dimer(), 3).unwrap();
        let counts: Vec<u64> = (0..=3).map(|k| c.count(0, 0, k)).collect();
        assert_eq!(counts, vec![1, 4, 13, 40]);
    }

    #[test]
    fn empty_length() {
        let toy = presets::toy();
        let c = census(&toy, 0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(c.count(a, b, 0), u64::from(a == b));
            }
        }
    }

    #[test]
    fn length_guard() {
        assert!(matches!(census(&presets::toy(), 13), Err(OracleError::BudgetExceeded(_))));
    }

    #[test]
    fn two_enumerations_agree() {
        for sys in [presets::toy(), presets::dimer(), presets::philosophers(4)] {
            assert_eq!(census(&sys, 6).unwrap(), census_by_cliques(&sys, 6).unwrap());
        }
    }

    #[test]
    fn series_toy_and_dimer() {
        for sys in [presets::toy(), presets::dimer()] {
            let c = census(&sys, 8).unwrap();
            let m = sys.mobius_matrix();
            assert!(series_check(&c, &m, 8).pass());
            let bad = series_check(&c, &perturb(&m, 0, 0, 3), 8);
            assert_eq!(bad.first_mismatch.unwrap().degree, 3);
        }
    }

    #[test]
    fn roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(mobius_roundtrip_check(presets::toy().alphabet(), 3, &mut rng));
        let index = CliqueIndex::new(&presets::dimer_alphabet());
        assert!(roundtrip(&index, &vec![Rational::zero(); index.len()]));
    }

    #[test]
    fn dimer_table() {
        let a = presets::dimer_alphabet();
        let index = CliqueIndex::new(&a);
        let f: Vec<Rational> = index
            .cliques()
            .iter()
            .map(|c| rational(1, 3i64.pow(c.len() as u32)))
            .collect();
        let h = index.mobius_transform(&f);
        let expect = |word: &[&str]| -> Rational {
            let letters: Vec<usize> = word.iter().map(|w| a.index_of(w).unwrap()).collect();
            h[index.position(Clique::from_letters(&letters)).unwrap()].clone()
        };
        assert_eq!(expect(&[]), Rational::zero());
        assert_eq!(expect(&["a"]), rational(1, 9));
        assert_eq!(expect(&["b"]), rational(2, 9));
        assert_eq!(expect(&["c"]), rational(2, 9));
        assert_eq!(expect(&["d"]), rational(1, 9));
        for pair in [["a", "c"], ["a", "d"], ["b", "d"]] {
            assert_eq!(expect(&pair), rational(1, 9));
        }
    }

    fn cross(sys: &ConcurrentSystem) -> StabilityCrossCheck {
        let sp = Spectrum::compute(sys).unwrap();
        let h = markov::system_mobius_transform(sys, &sp.prob_valuation);
        stability_cross_check(sys, &h, 12, 1e-9).unwrap()
    }

    #[test]
    fn toy_unstable_pair() {
        let toy = presets::toy();
        let r = cross(&toy);
        assert!(r.pass());
        let a = Clique::singleton(0);
        assert_eq!(r.unstable(), vec![(0, a), (1, a)]);
    }

    #[test]
    fn cyc6_stable_are_maximal() {
        let sys = presets::cyc6();
        let r = cross(&sys);
        assert!(r.pass());
        for (&(alpha, c), &s) in r.vertices.iter().zip(&r.h_stable) {
            let maximal = sys.enabled_cliques(alpha).all(|d| !c.is_subset(d) || d == c);
            assert_eq!(s, maximal, "{}", sys.alphabet().clique_label(c));
        }
    }

    #[test]
    fn free_all_stable() {
        let r = cross(&presets::free(1));
        assert!(r.pass() && r.h_stable.iter().all(|&s| s));
    }
}
