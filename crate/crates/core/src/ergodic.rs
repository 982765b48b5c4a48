//! Ergodic constants of the chain of state-and-cliques: speedup, limits of
//! additive test functions, simulation, and Boltzmann cylinder probabilities.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsc::Condensation;
use crate::markov::{self, MarkovError, TransitionKernel};
use crate::spectral::Spectrum;
use crate::system::{ConcurrentSystem, SystemError};
use crate::trace::{Clique, Trace};

pub const BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgodicError {
    #[error("IncompatibleAdditive: state {state:?}, letters {a:?} and {b:?}")]
    IncompatibleAdditive { state: String, a: String, b: String },
    #[error("height is not an additive test function")]
    NotAdditive,
    #[error("DeadRow: step {step} reached an unreachable row")]
    DeadRow { step: usize },
    #[error("LetterNeverHit: {0:?}")]
    LetterNeverHit(String),
    #[error("no final component")]
    NoFinalComponent,
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `φ_α(a)` per state and letter.
    Additive(Vec<Vec<f64>>),
    Length,
    Height,
    LetterCount(usize),
}

impl TestFunction {
    /// Per (state, letter) values for additive kinds.
    pub fn additive_values(&self, sys: &ConcurrentSystem) -> Option<Vec<Vec<f64>>> {
        let shape = |v: &dyn Fn(usize) -> f64| {
            (0..sys.num_states())
                .map(|_| (0..sys.alphabet().len()).map(v).collect())
                .collect()
        };
        match self {
            TestFunction::Additive(v) => Some(v.clone()),
            TestFunction::Length => Some(shape(&|_| 1.0)),
            TestFunction::LetterCount(a) => Some(shape(&|b| if b == *a { 1.0 } else { 0.0 })),
            TestFunction::Height => None,
        }
    }
}

/// `φ_α(c)` summed along the ascending linearization of `c`.
fn additive_on_clique(sys: &ConcurrentSystem, phi: &[Vec<f64>], alpha: usize, c: Clique) -> f64 {
    let mut s = alpha;
    let mut total = 0.0;
    for a in c.letters() {
        total += phi[s][a];
        s = sys.step(s, a).expect("clique enabled");
    }
    total
}

/// `φ_α(a) + φ_{α·a}(b) = φ_α(b) + φ_{α·b}(a)` on every commuting square.
pub fn check_compatible(sys: &ConcurrentSystem, phi: &[Vec<f64>]) -> Result<(), ErgodicError> {
    for (a, b) in sys.alphabet().independence_pairs() {
        for alpha in 0..sys.num_states() {
            let (Some(sa), Some(sb)) = (sys.step(alpha, a), sys.step(alpha, b)) else {
                continue;
            };
            if sys.step(sa, b).is_none() {
                continue;
            }
            let lhs = phi[alpha][a] + phi[sa][b];
            let rhs = phi[alpha][b] + phi[sb][a];
            if (lhs - rhs).abs() > 1e-12 * (1.0 + lhs.abs()) {
                return Err(ErgodicError::IncompatibleAdditive {
                    state: sys.states()[alpha].clone(),
                    a: sys.alphabet().name(a).to_string(),
                    b: sys.alphabet().name(b).to_string(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ComponentLaw {
    /// Kernel vertex indices.
    pub vertices: Vec<usize>,
    pub pi: Vec<f64>,
    pub speedup: f64,
}

#[derive(Clone, Debug)]
pub struct SpeedupReport {
    pub components: Vec<ComponentLaw>,
    pub speedup: f64,
    /// Largest difference between component speedups.
    pub discrepancy: f64,
}

/// Stationary law of each final component and `s_J = Σ |d| π_J(α, d)`.
pub fn speedup_analytic(kernel: &TransitionKernel, cond: &Condensation) -> Result<SpeedupReport, ErgodicError> {
    let mut components = Vec::new();
    for comp in cond.finals() {
        let vs = &comp.vertices;
        let sub = DMatrix::from_fn(vs.len(), vs.len(), |i, j| kernel.p[(vs[i], vs[j])]);
        let pi = markov::stationary_distribution(&sub)?;
        let speedup = vs
            .iter()
            .zip(&pi)
            .map(|(&v, p)| kernel.vertices[v].1.len() as f64 * p)
            .sum();
        components.push(ComponentLaw {
            vertices: vs.clone(),
            pi,
            speedup,
        });
    }
    let first = components.first().ok_or(ErgodicError::NoFinalComponent)?.speedup;
    let discrepancy = components
        .iter()
        .map(|c| (c.speedup - first).abs())
        .fold(0.0, f64::max);
    Ok(SpeedupReport {
        components,
        speedup: first,
        discrepancy,
    })
}

/// `k_φ = Σ π_J φ_α(c) / Σ π_J |c|` on the first final component, with the
/// largest deviation across the others.
pub fn additive_limit(
    sys: &ConcurrentSystem,
    kernel: &TransitionKernel,
    speedup: &SpeedupReport,
    phi: &TestFunction,
) -> Result<(f64, f64), ErgodicError> {
    let values = phi.additive_values(sys).ok_or(ErgodicError::NotAdditive)?;
    check_compatible(sys, &values)?;
    let limits: Vec<f64> = speedup
        .components
        .iter()
        .map(|comp| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&v, p) in comp.vertices.iter().zip(&comp.pi) {
                let (alpha, c) = kernel.vertices[v];
                num += p * additive_on_clique(sys, &values, alpha, c);
                den += p * c.len() as f64;
            }
            num / den
        })
        .collect();
    let first = *limits.first().ok_or(ErgodicError::NoFinalComponent)?;
    let spread = limits.iter().map(|k| (k - first).abs()).fold(0.0, f64::max);
    Ok((first, spread))
}

/// Cumulative transition tables for sampling; unreachable targets are dropped.
#[derive(Clone, Debug)]
pub struct Sampler {
    rows: Vec<Vec<(usize, f64)>>,
    initial: Vec<Vec<(usize, f64)>>,
}

fn cumulative(weights: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    weights
        .filter(|&(_, w)| w > 0.0)
        .map(|(j, w)| {
            acc += w;
            (j, acc)
        })
        .collect()
}

fn draw<R: Rng>(rng: &mut R, table: &[(usize, f64)]) -> Option<usize> {
    let total = table.last()?.1;
    let u = rng.random::<f64>() * total;
    let k = table.partition_point(|&(_, c)| c <= u);
    Some(table[k.min(table.len() - 1)].0)
}

impl Sampler {
    pub fn new(kernel: &TransitionKernel) -> Self {
        let n = kernel.len();
        let rows = (0..n)
            .map(|i| {
                if kernel.defined[i] {
                    cumulative((0..n).filter(|&j| kernel.defined[j]).map(|j| (j, kernel.p[(i, j)])))
                } else {
                    Vec::new()
                }
            })
            .collect();
        let initial = kernel
            .initial
            .iter()
            .map(|row| cumulative(row.iter().copied().enumerate().filter(|&(j, _)| kernel.defined[j])))
            .collect();
        Sampler { rows, initial }
    }

    /// `steps` cliques from state `α`. The generator is ChaCha8 seeded by
    /// `seed` on stream `stream`.
    pub fn sample(&self, alpha: usize, steps: usize, seed: u64, stream: u64) -> Result<Trajectory, ErgodicError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut vertices = Vec::with_capacity(steps);
        if steps > 0 {
            let mut v = draw(&mut rng, &self.initial[alpha]).ok_or(ErgodicError::DeadRow { step: 0 })?;
            vertices.push(v);
            for step in 1..steps {
                v = draw(&mut rng, &self.rows[v]).ok_or(ErgodicError::DeadRow { step })?;
                vertices.push(v);
            }
        }
        Ok(Trajectory {
            start: alpha,
            seed,
            stream,
            vertices,
        })
    }
}

/// Sequence of state-and-cliques `(α_i, C_{i+1})` as kernel vertex indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub start: usize,
    pub seed: u64,
    pub stream: u64,
    pub vertices: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Total number of letters.
    pub fn total_length(&self, kernel: &TransitionKernel) -> usize {
        self.vertices.iter().map(|&v| kernel.vertices[v].1.len()).sum()
    }
}

pub fn sample_trajectory(kernel: &TransitionKernel, alpha: usize, steps: usize, seed: u64) -> Result<Trajectory, ErgodicError> {
    Sampler::new(kernel).sample(alpha, steps, seed, 0)
}

/// Independent trajectories on streams `0..count`, one thread each, returned
/// in stream order.
pub fn sample_trajectories(
    kernel: &TransitionKernel,
    alpha: usize,
    steps: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<Trajectory>, ErgodicError> {
    let sampler = Sampler::new(kernel);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..count as u64)
            .map(|k| {
                let sampler = &sampler;
                scope.spawn(move || sampler.sample(alpha, steps, seed, k))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling thread"))
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Batch-means standard error.
    pub stderr: f64,
}

impl Estimate {
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.stderr
    }
}

/// Ratio `Σ num / Σ den` with the standard error of its per-batch values.
fn batch_ratio(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let value = num.iter().sum::<f64>() / den.iter().sum::<f64>();
    let size = n / BATCHES;
    if size == 0 {
        return Estimate { value, stderr: f64::INFINITY };
    }
    let batches: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            num[r.clone()].iter().sum::<f64>() / den[r].iter().sum::<f64>()
        })
        .collect();
    let mean = batches.iter().sum::<f64>() / BATCHES as f64;
    let var = batches.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Estimate {
        value,
        stderr: (var / BATCHES as f64).sqrt(),
    }
}

/// `|Y_n| / height(Y_n)` over the whole trajectory.
pub fn speedup_estimate(traj: &Trajectory, kernel: &TransitionKernel) -> Estimate {
    let lens: Vec<f64> = traj.vertices.iter().map(|&v| kernel.vertices[v].1.len() as f64).collect();
    let ones = vec![1.0; lens.len()];
    batch_ratio(&lens, &ones)
}

#[derive(Clone, Debug)]
pub struct ErgodicMeans {
    /// `Mφ(Y_n) = φ(Y_n) / |Y_n|` for `n = 1..=N`.
    pub running: Vec<f64>,
    pub last: Estimate,
}

impl ErgodicMeans {
    /// `max − min` of the running means over the last tenth of the run.
    pub fn last_decile_range(&self) -> f64 {
        let tail = &self.running[self.running.len() * 9 / 10..];
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub fn ergodic_means(
    sys: &ConcurrentSystem,
    kernel: &TransitionKernel,
    traj: &Trajectory,
    phi: &TestFunction,
) -> Result<ErgodicMeans, ErgodicError> {
    let values = phi.additive_values(sys);
    if let Some(v) = &values {
        check_compatible(sys, v)?;
    }
    let mut num = Vec::with_capacity(traj.len());
    let mut den = Vec::with_capacity(traj.len());
    for &v in &traj.vertices {
        let (alpha, c) = kernel.vertices[v];
        num.push(match &values {
            Some(vals) => additive_on_clique(sys, vals, alpha, c),
            None => 1.0,
        });
        den.push(c.len() as f64);
    }
    let (mut sn, mut sd) = (0.0, 0.0);
    let running = num
        .iter()
        .zip(&den)
        .map(|(x, y)| {
            sn += x;
            sd += y;
            sn / sd
        })
        .collect();
    Ok(ErgodicMeans {
        running,
        last: batch_ratio(&num, &den),
    })
}

#[derive(Clone, Debug)]
pub struct HittingChain {
    /// Steps whose clique contains the letter.
    pub boundaries: Vec<usize>,
    /// State reached after each of those cliques.
    pub states: Vec<usize>,
    /// Closed classes of the empirical transition graph of `states`.
    pub closed_classes: Vec<Vec<usize>>,
}

impl HittingChain {
    pub fn single_closed_class(&self) -> bool {
        self.closed_classes.len() == 1
    }
}

/// Successive hitting times of `a` at clique granularity and the states `X_n`.
pub fn hitting_chain(
    sys: &ConcurrentSystem,
    kernel: &TransitionKernel,
    traj: &Trajectory,
    a: usize,
) -> Result<HittingChain, ErgodicError> {
    let mut boundaries = Vec::new();
    let mut states = Vec::new();
    for (i, &v) in traj.vertices.iter().enumerate() {
        let (alpha, c) = kernel.vertices[v];
        if c.contains(a) {
            boundaries.push(i);
            states.push(sys.act_clique(alpha, c).expect("vertex"));
        }
    }
    if states.is_empty() {
        return Err(ErgodicError::LetterNeverHit(sys.alphabet().name(a).to_string()));
    }
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..sys.num_states()).map(|s| graph.add_node(s)).collect();
    let mut seen = vec![false; sys.num_states()];
    for w in states.windows(2) {
        if graph.find_edge(nodes[w[0]], nodes[w[1]]).is_none() {
            graph.add_edge(nodes[w[0]], nodes[w[1]], ());
        }
    }
    for &s in &states {
        seen[s] = true;
    }
    let sccs = tarjan_scc(&graph);
    let mut closed_classes: Vec<Vec<usize>> = sccs
        .into_iter()
        .map(|scc| {
            let mut v: Vec<usize> = scc.into_iter().map(|n| graph[n]).collect();
            v.sort_unstable();
            v
        })
        .filter(|class| seen[class[0]])
        .filter(|class| {
            class
                .iter()
                .all(|&s| graph.neighbors(nodes[s]).all(|t| class.contains(&graph[t])))
        })
        .collect();
    closed_classes.sort();
    Ok(HittingChain {
        boundaries,
        states,
        closed_classes,
    })
}

/// Boltzmann cylinder probabilities at a fixed `s`.
#[derive(Clone, Debug)]
pub struct Boltzmann {
    pub s: f64,
    /// `G_α(s) = Σ_β G_{α,β}(s)`.
    pub row_sums: Vec<f64>,
}

impl Boltzmann {
    pub fn at(sys: &ConcurrentSystem, s: f64) -> Result<Self, SystemError> {
        let g = sys.growth_matrix_at(s)?;
        let row_sums = (0..g.nrows()).map(|i| g.row(i).sum()).collect();
        Ok(Boltzmann { s, row_sums })
    }

    /// `H_{α,β}(s) = G_β(s) / G_α(s)`.
    pub fn ratio(&self, alpha: usize, beta: usize) -> f64 {
        self.row_sums[beta] / self.row_sums[alpha]
    }

    /// `s^{|x|} λ_α(x) G_{α·x}(s) / G_α(s)`.
    pub fn cylinder(&self, sys: &ConcurrentSystem, alpha: usize, x: &Trace) -> f64 {
        match sys.act(alpha, x) {
            Some(beta) => {
                self.s.powi(x.len() as i32) * sys.valuation().trace(sys, alpha, x) * self.ratio(alpha, beta)
            }
            None => 0.0,
        }
    }
}

pub fn boltzmann_cylinder(sys: &ConcurrentSystem, alpha: usize, x: &Trace, s: f64) -> Result<f64, SystemError> {
    Ok(Boltzmann::at(sys, s)?.cylinder(sys, alpha, x))
}

#[derive(Clone, Debug)]
pub struct BoltzmannRow {
    pub k: u32,
    pub s: f64,
    /// Largest `|ν_{α,s}(⇑x) − f̃_α(x)|` over the sample.
    pub max_cylinder_error: f64,
    /// Largest `|H_{α,β}(s) − Δ(α,β)|`.
    pub max_ratio_error: f64,
    pub ratios: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct BoltzmannTable {
    pub rows: Vec<BoltzmannRow>,
}

impl BoltzmannTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].max_cylinder_error < w[0].max_cylinder_error)
    }
}

/// Cylinder errors at `s = ρ(1 − 10^{-k})` against the limit `f̃_α(x)`.
pub fn boltzmann_convergence(
    sys: &ConcurrentSystem,
    spectrum: &Spectrum,
    sample: &[(usize, Trace)],
    ks: impl IntoIterator<Item = u32>,
) -> Result<BoltzmannTable, SystemError> {
    let n = sys.num_states();
    let rows = ks
        .into_iter()
        .map(|k| {
            let s = spectrum.rho * (1.0 - 10f64.powi(-(k as i32)));
            let b = Boltzmann::at(sys, s)?;
            let max_cylinder_error = sample
                .iter()
                .map(|(alpha, x)| {
                    let limit = spectrum.prob_valuation.trace(sys, *alpha, x);
                    (b.cylinder(sys, *alpha, x) - limit).abs()
                })
                .fold(0.0, f64::max);
            let ratios: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|c| b.ratio(a, c)).collect()).collect();
            let max_ratio_error = (0..n)
                .flat_map(|a| (0..n).map(move |c| (a, c)))
                .map(|(a, c)| (ratios[a][c] - spectrum.delta(a, c)).abs())
                .fold(0.0, f64::max);
            Ok(BoltzmannRow {
                k,
                s,
                max_cylinder_error,
                max_ratio_error,
                ratios,
            })
        })
        .collect::<Result<_, SystemError>>()?;
    Ok(BoltzmannTable { rows })
}

/// Every trace of length at most `max_len` from every state.
pub fn short_traces(sys: &ConcurrentSystem, max_len: usize) -> Result<Vec<(usize, Trace)>, SystemError> {
    let mut out = Vec::new();
    for alpha in 0..sys.num_states() {
        for x in sys.enumerate_trajectories(alpha, max_len)? {
            out.push((alpha, x));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsc;
    use crate::presets;

    struct Pipeline {
        sys: ConcurrentSystem,
        kernel: TransitionKernel,
        cond: Condensation,
        stable: Vec<bool>,
    }

    fn pipeline(sys: ConcurrentSystem) -> Pipeline {
        let sp = Spectrum::compute(&sys).unwrap();
        let f = &sp.prob_valuation;
        let h = markov::system_mobius_transform(&sys, f);
        let g = markov::g_function(&sys, &h);
        let kernel = markov::transition_kernel(&sys, f, &h, &g, 1e-9);
        let graph = dsc::build_dsc(&sys);
        let stable = dsc::classify_stable(&sys, &graph, &h, 1e-9).unwrap();
        let fm = dsc::f_matrix(&sys, &graph, sp.rho);
        let cond = dsc::condense(&graph, &stable, &fm);
        Pipeline { sys, kernel, cond, stable }
    }

    #[test]
    fn cyc6_speedup_is_two() {
        let p = pipeline(presets::cyc6());
        let rep = speedup_analytic(&p.kernel, &p.cond).unwrap();
        assert_eq!(rep.components.len(), 2);
        assert!((rep.speedup - 2.0).abs() < 1e-12);
        assert!(rep.discrepancy < 1e-12);
    }

    #[test]
    fn free_speedup_is_one() {
        let p = pipeline(presets::free(3));
        let rep = speedup_analytic(&p.kernel, &p.cond).unwrap();
        assert!((rep.speedup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_limits() {
        let p = pipeline(presets::toy());
        let rep = speedup_analytic(&p.kernel, &p.cond).unwrap();
        assert!(rep.speedup > 1.0 && rep.speedup < 2.0);
        let (k, _) = additive_limit(&p.sys, &p.kernel, &rep, &TestFunction::Length).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let total: f64 = (0..3)
            .map(|a| additive_limit(&p.sys, &p.kernel, &rep, &TestFunction::LetterCount(a)).unwrap().0)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut bad = vec![vec![1.0; 3]; 3];
        bad[0][0] = 2.0;
        assert!(matches!(
            additive_limit(&p.sys, &p.kernel, &rep, &TestFunction::Additive(bad)),
            Err(ErgodicError::IncompatibleAdditive { .. })
        ));
        assert_eq!(
            additive_limit(&p.sys, &p.kernel, &rep, &TestFunction::Height),
            Err(ErgodicError::NotAdditive)
        );
    }

    #[test]
    fn toy_simulation() {
        let p = pipeline(presets::toy());
        let traj = sample_trajectory(&p.kernel, 0, 20_000, 42).unwrap();
        assert_eq!(traj, sample_trajectory(&p.kernel, 0, 20_000, 42).unwrap());
        assert!(traj.vertices.iter().all(|&v| p.stable[v]));
        for w in traj.vertices.windows(2) {
            assert!(p.kernel.p[(w[0], w[1])] > 0.0);
        }
        let means = ergodic_means(&p.sys, &p.kernel, &traj, &TestFunction::Length).unwrap();
        assert!(means.running.iter().all(|&m| m == 1.0));
        let hit = hitting_chain(&p.sys, &p.kernel, &traj, 2).unwrap();
        assert!(hit.single_closed_class());
        assert!(hit.states.iter().all(|&s| s == 0));
    }

    #[test]
    fn first_clique_frequencies() {
        let p = pipeline(presets::toy());
        let sampler = Sampler::new(&p.kernel);
        let n = 20_000;
        let mut counts = vec![0usize; p.kernel.len()];
        for k in 0..n {
            let t = sampler.sample(0, 1, 9, k).unwrap();
            counts[t.vertices[0]] += 1;
        }
        for (v, &c) in counts.iter().enumerate() {
            let q = p.kernel.initial[0][v];
            let sd = (n as f64 * q * (1.0 - q)).sqrt();
            assert!((c as f64 - n as f64 * q).abs() <= 4.0 * sd + 1e-9, "vertex {v}");
        }
    }

    #[test]
    fn boltzmann_cylinders() {
        let toy = presets::toy();
        let sp = Spectrum::compute(&toy).unwrap();
        let eps = Trace::empty();
        let a = toy.alphabet().normal_form(&[0]).unwrap();
        let c = toy.alphabet().normal_form(&[2]).unwrap();
        for s in [0.1, 0.3, 0.45] {
            assert!((boltzmann_cylinder(&toy, 0, &eps, s).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(boltzmann_cylinder(&toy, 0, &c, s).unwrap(), 0.0);
        }
        let near = boltzmann_cylinder(&toy, 0, &a, 0.5 * (1.0 - 1e-6)).unwrap();
        assert!((near - 0.5).abs() < 1e-4);
        let table = boltzmann_convergence(&toy, &sp, &short_traces(&toy, 4).unwrap(), 1..=5).unwrap();
        assert!(table.strictly_decreasing());
        let last = table.rows.last().unwrap();
        assert!(last.max_cylinder_error < 1e-3);
        assert!((last.ratios[0][2] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn single_state_ratios_are_one() {
        let d = presets::dimer();
        let b = Boltzmann::at(&d, 0.3).unwrap();
        assert_eq!(b.ratio(0, 0), 1.0);
    }
}
