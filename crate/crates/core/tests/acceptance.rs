//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::Command;
use std::time::{Duration, Instant};

use csergo::dsc::DscGraph;
use csergo::ergodic::{self, TestFunction};
use csergo::markov;
use csergo::oracle;
use csergo::poly::{rational, Poly, Rational};
use csergo::presets;
use csergo::report::{Analysis, DoubledRelation, DEFAULT_TOL};
use csergo::spectral::{self, Spectrum};
use csergo::system::ConcurrentSystem;
use csergo::trace::{Clique, CliqueIndex};
use num_traits::{Pow, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(sys: &ConcurrentSystem) -> Result<Analysis, String> {
    Analysis::run(sys, DEFAULT_TOL).map_err(|e| e.to_string())
}

fn letter(sys: &ConcurrentSystem, name: &str) -> usize {
    sys.alphabet().index_of(name).expect("letter")
}

fn clique(sys: &ConcurrentSystem, names: &[&str]) -> Clique {
    Clique::from_letters(&names.iter().map(|n| letter(sys, n)).collect::<Vec<_>>())
}

fn fixtures() -> Vec<(&'static str, ConcurrentSystem)> {
    vec![
        ("TOY", presets::toy()),
        ("DIMER", presets::dimer()),
        ("CYC6", presets::cyc6()),
        ("PHIL-4", presets::philosophers(4)),
        ("PHIL-5", presets::philosophers(5)),
    ]
}

fn random_systems(count: usize, seed: u64) -> Vec<ConcurrentSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| presets::random_irreducible(&mut rng, 4, 4, true)).collect()
}

fn toy_golden() -> Check {
    let start = Instant::now();
    let toy = presets::toy();
    let a = run(&toy)?;
    let elapsed = start.elapsed();
    let sp = &a.spectrum;
    ensure((sp.rho - 0.5).abs() <= 1e-9, format!("rho = {}", sp.rho))?;
    let target = [1.0, 1.0, 2.0];
    for (u, t) in sp.u.iter().zip(target) {
        ensure((u / sp.u[0] - t).abs() / t <= 1e-9, format!("U = {:?}", sp.u))?;
    }
    let table = [
        ("0", "a", 0.5),
        ("0", "b", 1.0),
        ("1", "a", 0.5),
        ("1", "b", 1.0),
        ("2", "a", 0.5),
        ("2", "b", 0.5),
        ("2", "c", 0.25),
    ];
    for (s, l, v) in table {
        let got = sp.prob_valuation.get(toy.state_index(s).unwrap(), letter(&toy, l));
        ensure((got - v).abs() <= 1e-9, format!("f({s},{l}) = {got}"))?;
    }
    for s in 0..2 {
        let h = a.h.at(&toy, s, clique(&toy, &["a"]));
        ensure(h.abs() <= 1e-9, format!("h_{s}(a) = {h}"))?;
    }
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("rho=0.5, U=(1,1,2), {elapsed:.2?}"))
}

fn toy_structure() -> Check {
    let toy = presets::toy();
    let a = run(&toy)?;
    ensure(a.dsc.len() == 10, format!("{} DSC vertices", a.dsc.len()))?;
    let unstable = a.unstable_labels(&toy);
    ensure(unstable == ["(0,a)", "(1,a)"], format!("unstable {unstable:?}"))?;
    let stable = a.stable.iter().filter(|&&s| s).count();
    ensure(stable == 8, format!("{stable} stable vertices"))?;
    let basic: Vec<usize> = a.condensation.basic().map(|c| c.vertices.len()).collect();
    ensure(basic == [6], format!("basic component sizes {basic:?}"))?;
    ensure(a.condensation.umbrella, "umbrella verdict false")?;
    Ok("10 vertices, unstable {(0,a),(1,a)}, 8 stable, one basic of size 6, umbrella".into())
}

fn dimer() -> Check {
    let sys = presets::dimer();
    let mu = sys.alphabet().counting_mobius_polynomial();
    ensure(mu == Poly::from_integers(&[1, -4, 3]), format!("mu = {mu}"))?;
    let third = rational(1, 3);
    ensure(mu.eval(&third).is_zero(), "mu(1/3) != 0")?;
    let a = run(&sys)?;
    ensure((a.spectrum.rho - 1.0 / 3.0).abs() <= 1e-12, format!("rho = {}", a.spectrum.rho))?;
    let index = CliqueIndex::new(sys.alphabet());
    let f: Vec<Rational> = index.cliques().iter().map(|c| Pow::pow(&third, c.len() as u32)).collect();
    let h_exact = index.mobius_transform(&f);
    let table: [(&[&str], Rational); 7] = [
        (&["a"], rational(1, 9)),
        (&["b"], rational(2, 9)),
        (&["c"], rational(2, 9)),
        (&["d"], rational(1, 9)),
        (&["a", "c"], rational(1, 9)),
        (&["a", "d"], rational(1, 9)),
        (&["b", "d"], rational(1, 9)),
    ];
    for (names, v) in table {
        let c = clique(&sys, names);
        let exact = &h_exact[index.position(c).unwrap()];
        ensure(*exact == v, format!("exact h({names:?}) = {exact}"))?;
        let float = a.h.at(&sys, 0, c);
        let vf = num_traits::ToPrimitive::to_f64(&v).unwrap();
        ensure((float - vf).abs() <= 1e-12, format!("h({names:?}) = {float}"))?;
    }
    Ok("mu = 1 - 4t + 3t^2, rho = 1/3, h table exact".into())
}

fn is_simple_cycle(dsc: &DscGraph, vertices: &[usize]) -> bool {
    vertices.iter().all(|&v| dsc.successors[v].iter().filter(|s| vertices.contains(s)).count() == 1)
}

fn cyc6() -> Check {
    let sys = presets::cyc6();
    ensure(sys.num_states() == 15, format!("{} states", sys.num_states()))?;
    ensure(sys.irreducibility_report().irreducible, "not irreducible")?;
    let a = run(&sys)?;
    let mut sizes = Vec::new();
    for c in a.condensation.basic() {
        ensure(is_simple_cycle(&a.dsc, &c.vertices), "basic component is not a cycle")?;
        sizes.push(c.vertices.len());
    }
    sizes.sort_unstable();
    ensure(sizes == [3, 6], format!("basic sizes {sizes:?}"))?;
    ensure(a.speedup.components.len() == 2, "expected two final components")?;
    for c in &a.speedup.components {
        ensure((c.speedup - 2.0).abs() <= 1e-12, format!("component speedup {}", c.speedup))?;
    }
    ensure(a.speedup.discrepancy <= 1e-12, format!("discrepancy {}", a.speedup.discrepancy))?;
    Ok("15 states, basic cycles of lengths 3 and 6, s = 2 on both".into())
}

fn philosophers() -> Check {
    let mut parts = Vec::new();
    for n in [5, 4] {
        let sys = presets::philosophers(n);
        let sp = Spectrum::compute(&sys).map_err(|e| e.to_string())?;
        let rel = DoubledRelation::check(&sys, &sp).map_err(|e| e.to_string())?;
        ensure(rel.rho_squared_error <= 1e-9, format!("PHIL-{n}: |rho^2 - r| = {}", rel.rho_squared_error))?;
        ensure(rel.delta_error <= 1e-9, format!("PHIL-{n}: Delta error {}", rel.delta_error))?;
        parts.push(format!("PHIL-{n} r={:.6}", rel.monoid_root));
    }
    Ok(parts.join(", "))
}

fn spectral_gaps() -> Check {
    let mut systems: Vec<(String, ConcurrentSystem)> = vec![
        ("TOY".into(), presets::toy()),
        ("DIMER".into(), presets::dimer()),
        ("CYC6".into(), presets::cyc6()),
        ("PHIL-5".into(), presets::philosophers(5)),
    ];
    for (i, s) in random_systems(50, 6).into_iter().enumerate() {
        systems.push((format!("random #{i}"), s));
    }
    let mut min_gap = f64::INFINITY;
    for (name, sys) in &systems {
        let sp = Spectrum::compute(sys).map_err(|e| format!("{name}: {e}"))?;
        let roots = spectral::letter_roots(sys).map_err(|e| format!("{name}: {e}"))?;
        for (a, r) in roots.iter().enumerate() {
            ensure(
                *r >= sp.rho + 1e-6,
                format!("{name}: letter {} root {r} vs rho {}", sys.alphabet().name(a), sp.rho),
            )?;
            min_gap = min_gap.min(r - sp.rho);
        }
    }
    Ok(format!("{} systems, smallest gap {min_gap:.3e}", systems.len()))
}

fn oracle_equivalence() -> Check {
    let mut parts = Vec::new();
    for (name, sys) in [("TOY", presets::toy()), ("DIMER", presets::dimer())] {
        let start = Instant::now();
        let census = oracle::census(&sys, 8).map_err(|e| e.to_string())?;
        let report = oracle::series_check(&census, &sys.mobius_matrix(), 8);
        let elapsed = start.elapsed();
        ensure(report.pass(), format!("{name}: {:?}", report.first_mismatch))?;
        ensure(elapsed < Duration::from_secs(10), format!("{name} took {elapsed:?}"))?;
        parts.push(format!("{name} {elapsed:.2?}"));
    }
    Ok(format!("degree 8 exact: {}", parts.join(", ")))
}

fn markov_identities() -> Check {
    let mut systems: Vec<(String, ConcurrentSystem)> =
        fixtures().into_iter().map(|(n, s)| (n.to_string(), s)).collect();
    for (i, s) in random_systems(50, 8).into_iter().enumerate() {
        systems.push((format!("random #{i}"), s));
    }
    let mut worst: f64 = 0.0;
    for (name, sys) in &systems {
        let sp = Spectrum::compute(sys).map_err(|e| format!("{name}: {e}"))?;
        let f = &sp.prob_valuation;
        let h = markov::system_mobius_transform(sys, f);
        let g = markov::g_function(sys, &h);
        let k = markov::transition_kernel(sys, f, &h, &g, DEFAULT_TOL);
        let errs = [
            markov::identity_discrepancy(sys, f, &h, &g),
            k.form_discrepancy,
            k.max_row_sum_error(),
            k.max_initial_error(),
        ];
        ensure(k.definedness_mismatches == 0, format!("{name}: rows defined in one form only"))?;
        for e in errs {
            ensure(e <= 1e-9, format!("{name}: discrepancies {errs:?}"))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("{} systems, worst {worst:.3e}", systems.len()))
}

fn boltzmann() -> Check {
    let toy = presets::toy();
    let sp = Spectrum::compute(&toy).map_err(|e| e.to_string())?;
    let sample = ergodic::short_traces(&toy, 4).map_err(|e| e.to_string())?;
    let table = ergodic::boltzmann_convergence(&toy, &sp, &sample, 1..=5).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = table.rows.iter().map(|r| r.max_cylinder_error).collect();
    ensure(table.strictly_decreasing(), format!("errors {errs:?}"))?;
    let last = table.rows.last().unwrap();
    ensure(last.max_cylinder_error < 1e-3, format!("final error {}", last.max_cylinder_error))?;
    let h02 = last.ratios[0][2];
    ensure((h02 - 2.0).abs() < 1e-3, format!("H_02 = {h02}"))?;
    Ok(format!("errors {}, H_02 = {h02:.6}", errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" > ")))
}

fn slln_run(name: &str, sys: &ConcurrentSystem, seed: u64) -> Result<String, String> {
    let start = Instant::now();
    let a = run(sys)?;
    let traj = ergodic::sample_trajectory(&a.kernel, 0, 1_000_000, seed).map_err(|e| e.to_string())?;
    let est = ergodic::speedup_estimate(&traj, &a.kernel);
    ensure(
        est.within(a.speedup.speedup, 3.0),
        format!("{name}: speedup {} ± {} vs {}", est.value, est.stderr, a.speedup.speedup),
    )?;
    for l in 0..sys.alphabet().len() {
        let m = ergodic::ergodic_means(sys, &a.kernel, &traj, &TestFunction::LetterCount(l)).map_err(|e| e.to_string())?;
        ensure(
            m.last.within(a.letter_densities[l], 3.0),
            format!("{name}: density {} = {} ± {} vs {}", sys.alphabet().name(l), m.last.value, m.last.stderr, a.letter_densities[l]),
        )?;
    }
    let unstable = traj.vertices.iter().filter(|&&v| !a.stable[v]).count();
    ensure(unstable == 0, format!("{name}: {unstable} unstable visits"))?;
    let mut hits = vec![0usize; sys.alphabet().len()];
    for &v in &traj.vertices {
        for l in a.kernel.vertices[v].1.letters() {
            hits[l] += 1;
        }
    }
    let min_hits = *hits.iter().min().unwrap();
    ensure(min_hits >= 1000, format!("{name}: letter hits {hits:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("{name} took {elapsed:?}"))?;
    Ok(format!("{name} s≈{:.4}±{:.1e} vs {:.4} ({elapsed:.1?})", est.value, est.stderr, a.speedup.speedup))
}

fn slln() -> Check {
    let toy = slln_run("TOY", &presets::toy(), 1)?;
    let phil = slln_run("PHIL-5", &presets::philosophers(5), 1)?;
    Ok(format!("{toy}; {phil}"))
}

fn idempotence() -> Check {
    let mut worst: f64 = 0.0;
    for (name, sys) in fixtures() {
        let sp = Spectrum::compute(&sys).map_err(|e| format!("{name}: {e}"))?;
        let again = sys.with_valuation(&sp.prob_valuation).map_err(|e| e.to_string())?;
        let sp2 = Spectrum::compute(&again).map_err(|e| format!("{name}: {e}"))?;
        ensure((sp2.rho - 1.0).abs() <= 1e-9, format!("{name}: r = {}", sp2.rho))?;
        worst = worst.max((sp2.rho - 1.0).abs());
        for a in 0..sys.num_states() {
            for b in 0..sys.num_states() {
                let d = sp2.delta(a, b);
                ensure((d - 1.0).abs() <= 1e-9, format!("{name}: Delta({a},{b}) = {d}"))?;
                worst = worst.max((d - 1.0).abs());
            }
        }
    }
    Ok(format!("all fixtures, worst deviation {worst:.3e}"))
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_csergo");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut csvs = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(bin)
            .args(["simulate", "preset:toy", "--steps", "1000000", "--seed", "42", "--csv"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), format!("simulate failed: {}", String::from_utf8_lossy(&status.stderr)))?;
        csvs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        let out = Command::new(bin)
            .args(["analyze", "preset:toy", "--json"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), "analyze failed")?;
        reports.push(out.stdout);
    }
    ensure(csvs[0] == csvs[1], "CSV differs between runs")?;
    ensure(reports[0] == reports[1], "JSON report differs between runs")?;
    Ok(format!("CSV {} bytes and JSON {} bytes identical", csvs[0].len(), reports[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("TOY golden analysis", toy_golden),
        ("TOY structure", toy_structure),
        ("DIMER", dimer),
        ("CYC6", cyc6),
        ("PHIL-5 and PHIL-4", philosophers),
        ("spectral gap", spectral_gaps),
        ("oracle equivalence", oracle_equivalence),
        ("Markov identities", markov_identities),
        ("Boltzmann convergence", boltzmann),
        ("strong law at desk scale", slln),
        ("normalization idempotence", idempotence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
