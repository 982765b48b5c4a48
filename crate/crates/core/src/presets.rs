//! Reference systems and a random generator of small irreducible systems.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use rand::Rng;

use crate::poly::{rational, Rational};
use crate::system::ConcurrentSystem;
use crate::trace::{Alphabet, Clique, Trace};

pub const PRESET_NAMES: [&str; 6] = ["toy", "dimer", "cyc6", "philosophers", "free", "doubled"];

/// Three states, `ab = ba`; `c` only enabled at state 2.
pub fn toy() -> ConcurrentSystem {
    let alphabet = Alphabet::new(&["a", "b", "c"], &[("a", "b")]).expect("static alphabet");
    let action = vec![
        vec![Some(1), Some(2), None],
        vec![Some(0), Some(2), None],
        vec![Some(2), Some(2), Some(0)],
    ];
    let states = ["0", "1", "2"].map(String::from).to_vec();
    ConcurrentSystem::new(alphabet, states, action, None, true).expect("static system")
}

pub fn dimer_alphabet() -> Alphabet {
    Alphabet::new(&["a", "b", "c", "d"], &[("a", "c"), ("a", "d"), ("b", "d")]).expect("static alphabet")
}

/// The dimer monoid acting on a single state.
pub fn dimer() -> ConcurrentSystem {
    let ones = vec![Rational::one(); 4];
    ConcurrentSystem::wrap_monoid(dimer_alphabet(), &ones).expect("wrap")
}

/// Free monoid on `n` letters acting on a single state.
pub fn free(n: usize) -> ConcurrentSystem {
    let letters = letter_names(n, "");
    let ones = vec![Rational::one(); n];
    ConcurrentSystem::wrap_monoid(Alphabet::free(&letters), &ones).expect("wrap")
}

fn letter_names(n: usize, prefix: &str) -> Vec<String> {
    if prefix.is_empty() && n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        let p = if prefix.is_empty() { "l" } else { prefix };
        (0..n).map(|i| format!("{p}{i}")).collect()
    }
}

/// Letters `a0..a{n-1}` where `a_i` and `a_j` commute unless `i - j = ±1 mod n`.
pub fn cycle_alphabet(n: usize) -> Alphabet {
    let letters = letter_names(n, "a");
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (j - i) % n;
            if d != 1 && d != n - 1 {
                pairs.push((i, j));
            }
        }
    }
    Alphabet::from_indices(letters, &pairs).expect("cycle alphabet")
}

/// States are the cliques of the monoid; a letter enters a clique when it
/// keeps it a clique, leaves it when already present, and is blocked otherwise.
pub fn doubled(alphabet: &Alphabet) -> ConcurrentSystem {
    let cliques = alphabet.cliques();
    let index: BTreeMap<Clique, usize> = cliques.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let action = cliques
        .iter()
        .map(|&g| {
            (0..alphabet.len())
                .map(|a| {
                    let next = if g.contains(a) {
                        Some(Clique(g.0 & !(1 << a)))
                    } else if alphabet.parallel(g, Clique::singleton(a)) {
                        Some(Clique(g.0 | 1 << a))
                    } else {
                        None
                    };
                    next.map(|c| index[&c])
                })
                .collect()
        })
        .collect();
    let states = cliques.iter().map(|&c| alphabet.clique_label(c)).collect();
    ConcurrentSystem::new(alphabet.clone(), states, action, None, true).expect("doubled action commutes")
}

/// Doubled system of the `n`-cycle dependence monoid.
pub fn philosophers(n: usize) -> ConcurrentSystem {
    doubled(&cycle_alphabet(n))
}

/// Letters `0..5` of `Z/6`, `a` and `b` commute unless `a - b ∈ {-1, 0, 1}`.
pub fn cyc6_alphabet() -> Alphabet {
    let letters: Vec<String> = (0..6).map(|i| i.to_string()).collect();
    let mut pairs = Vec::new();
    for i in 0..6usize {
        for j in (i + 1)..6 {
            let d = (j - i) % 6;
            if d != 1 && d != 5 {
                pairs.push((i, j));
            }
        }
    }
    Alphabet::from_indices(letters, &pairs).expect("cyc6 alphabet")
}

/// Classes of prefixes of powers of `w = 031425`, two traces being identified
/// when they agree after left multiplication by powers of `w`. Each class is
/// named by its representative not divisible by `w`.
pub fn cyc6() -> ConcurrentSystem {
    let alphabet = cyc6_alphabet();
    let w = alphabet.normal_form(&[0, 3, 1, 4, 2, 5]).expect("letters");
    let w3 = alphabet.concat(&alphabet.concat(&w, &w), &w);
    let canon = |mut x: Trace| {
        while let Ok(q) = alphabet.left_quotient(&w, &x) {
            x = q;
        }
        x
    };
    let mut found: BTreeSet<Trace> = BTreeSet::new();
    let mut stack = vec![Trace::empty()];
    found.insert(Trace::empty());
    let mut edges: Vec<(Trace, usize, Trace)> = Vec::new();
    while let Some(x) = stack.pop() {
        for a in 0..alphabet.len() {
            let mut y = x.clone();
            y.push_letter(&alphabet, a);
            if alphabet.left_divides(&y, &w3) {
                let z = canon(y);
                edges.push((x.clone(), a, z.clone()));
                if found.insert(z.clone()) {
                    stack.push(z);
                }
            }
        }
    }
    let mut states: Vec<Trace> = found.into_iter().collect();
    states.sort_by_key(|x| (x.len(), x.word()));
    let pos = |x: &Trace| states.iter().position(|s| s == x).expect("discovered state");
    let mut action = vec![vec![None; alphabet.len()]; states.len()];
    for (x, a, z) in &edges {
        action[pos(x)][*a] = Some(pos(z));
    }
    let names = states
        .iter()
        .map(|x| {
            if x.is_empty() {
                "ε".to_string()
            } else {
                x.word().iter().map(|&a| alphabet.name(a)).collect()
            }
        })
        .collect();
    ConcurrentSystem::new(alphabet, names, action, None, true).expect("cyc6 action commutes")
}

/// Random irreducible system with at most `max_letters` letters and
/// `max_states` states. With `weighted`, letter weights `k/4` are twisted by
/// a random potential on states.
///
/// A random partial action table is repaired into a commuting one by
/// disabling entries on every violated square, then rejected unless
/// irreducible.
pub fn random_irreducible<R: Rng>(rng: &mut R, max_letters: usize, max_states: usize, weighted: bool) -> ConcurrentSystem {
    loop {
        if let Some(sys) = random_candidate(rng, max_letters, max_states, weighted) {
            if sys.irreducibility_report().irreducible {
                return sys;
            }
        }
    }
}

fn random_candidate<R: Rng>(rng: &mut R, max_letters: usize, max_states: usize, weighted: bool) -> Option<ConcurrentSystem> {
    let n = rng.random_range(1..=max_letters.max(1));
    let k = rng.random_range(1..=max_states.max(1));
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(0.35) {
                pairs.push((a, b));
            }
        }
    }
    let alphabet = Alphabet::from_indices(letter_names(n, ""), &pairs).ok()?;
    if !alphabet.is_irreducible() {
        return None;
    }
    let mut action: Vec<Vec<Option<usize>>> = (0..k)
        .map(|_| {
            (0..n)
                .map(|_| rng.random_bool(0.75).then(|| rng.random_range(0..k)))
                .collect()
        })
        .collect();
    loop {
        let mut changed = false;
        for &(a, b) in &pairs {
            for s in 0..k {
                let ab = action[s][a].and_then(|t| action[t][b]);
                let ba = action[s][b].and_then(|t| action[t][a]);
                if ab != ba {
                    let letter = if rng.random_bool(0.5) { a } else { b };
                    action[s][letter] = None;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // λ_α(a) = w_a φ(α·a) / φ(α) does not depend on the linearization
    let weights = weighted.then(|| {
        let letter: Vec<i64> = (0..n).map(|_| rng.random_range(1..=8)).collect();
        let potential: Vec<i64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
        action
            .iter()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .map(|(a, t)| t.map(|t| rational(letter[a] * potential[t], 4 * potential[s])))
                    .collect()
            })
            .collect()
    });
    let states = (0..k).map(|i| i.to_string()).collect();
    ConcurrentSystem::new(alphabet, states, action, weights, true).ok()
}
