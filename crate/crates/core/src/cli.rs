//! Command-line front end.
//!
//! Exit codes: 0 success, 2 parse or shape error, 3 semantic validation
//! error, 4 reducible system, 5 numeric failure or failed check.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dsc;
use crate::ergodic::{self, ErgodicError, TestFunction};
use crate::model::{AlphabetDocument, ModelDocument, ModelError};
use crate::oracle::{self, OracleError};
use crate::presets;
use crate::report::{Analysis, AnalysisError, DoubledRelation, DEFAULT_TOL};
use crate::spectral::SpectralError;
use crate::system::{ConcurrentSystem, SystemError};
use crate::trace::TraceError;

pub const TOL_ENV: &str = "CSERGO_TOL";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

fn system_code(e: &SystemError) -> i32 {
    match e {
        SystemError::Trace(_) | SystemError::DuplicateState(_) | SystemError::UnknownState(_) | SystemError::Shape(_) => 2,
        SystemError::CommutationViolation { .. }
        | SystemError::WeightSupportMismatch { .. }
        | SystemError::InconsistentWeights { .. }
        | SystemError::NonPositiveWeight { .. } => 3,
        SystemError::BudgetExceeded { .. } | SystemError::SingularAtS(_) => 5,
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::Parse(_) => 2,
            ModelError::System(s) => system_code(s),
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        CliError::new(system_code(&e), e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::new(2, e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        let code = match &e {
            SpectralError::NotIrreducible(_) => 4,
            SpectralError::System(s) => system_code(s),
            _ => 5,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Irreducibility(_) => CliError::new(4, e.to_string()),
            AnalysisError::Spectral(s) => s.into(),
            other => CliError::new(5, other.to_string()),
        }
    }
}

impl From<ErgodicError> for CliError {
    fn from(e: ErgodicError) -> Self {
        CliError::new(5, e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::new(5, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(2, format!("io: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "csergo", version, about = "Analyze probabilistic concurrent systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArg {
    /// Model file, or `preset:NAME[:N]`.
    pub model: String,
    /// Numerical tolerance; overrides the CSERGO_TOL environment variable.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that a model parses and is a valid system.
    Validate(ModelArg),
    /// Full spectral, Markov and structural analysis.
    Analyze {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        json: bool,
    },
    /// Graph of state-and-cliques, its stable part and components.
    Dsc {
        #[command(flatten)]
        model: ModelArg,
        /// Write a Graphviz file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Speedup per final component.
    Speedup(ModelArg),
    /// Sample a trajectory of the chain of state-and-cliques.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        /// Initial state name; defaults to the first state.
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write per-step CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Boltzmann cylinder convergence at s = ρ(1 − 10^-k), k = 1..grid.
    Boltzmann {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 5)]
        grid: u32,
        /// Longest sampled trace.
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Brute-force cross-checks.
    Oracle {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Emit a reference system as a model document.
    Preset {
        /// toy, dimer, cyc6, philosophers, free or doubled.
        name: String,
        #[arg(long)]
        n: Option<usize>,
        /// Alphabet file for `doubled`.
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

/// Built-in systems by name; `doubled` needs an alphabet file.
pub fn preset(name: &str, n: Option<usize>, alphabet: Option<&Path>) -> Result<(ConcurrentSystem, bool), CliError> {
    let sized = |default: usize| -> Result<usize, CliError> {
        let n = n.unwrap_or(default);
        if n == 0 || n > 26 {
            return Err(CliError::new(2, format!("--n {n} out of range 1..=26")));
        }
        Ok(n)
    };
    Ok(match name {
        "toy" => (presets::toy(), false),
        "dimer" => (presets::dimer(), false),
        "cyc6" => (presets::cyc6(), false),
        "free" => (presets::free(sized(2)?), false),
        "philosophers" => {
            let n = sized(5)?;
            if n < 3 {
                return Err(CliError::new(2, "philosophers needs --n of at least 3"));
            }
            (presets::philosophers(n), true)
        }
        "doubled" => {
            let path = alphabet.ok_or_else(|| CliError::new(2, "doubled needs --alphabet FILE"))?;
            let a = AlphabetDocument::from_json(&fs::read_to_string(path)?)?;
            (presets::doubled(&a), true)
        }
        other => return Err(CliError::new(2, format!("UnknownPreset: {other:?}"))),
    })
}

/// Loads `preset:NAME[:N]` or a model file. The flag reports a doubled system.
pub fn load(source: &str) -> Result<(ConcurrentSystem, bool), CliError> {
    if let Some(rest) = source.strip_prefix("preset:") {
        let (name, n) = match rest.split_once(':') {
            Some((name, n)) => (
                name,
                Some(n.parse().map_err(|_| CliError::new(2, format!("bad preset size {n:?}")))?),
            ),
            None => (rest, None),
        };
        return preset(name, n, None);
    }
    let text = fs::read_to_string(source).map_err(|e| CliError::new(2, format!("{source}: {e}")))?;
    Ok((ModelDocument::from_json(&text)?.to_system()?, false))
}

/// Flag, then environment, then the default.
pub fn resolve_tol(flag: Option<f64>) -> Result<f64, CliError> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::new(2, format!("{TOL_ENV}={v:?} is not a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::new(2, format!("tolerance {tol} must be positive")));
    }
    Ok(tol)
}

/// Up to 12 significant digits, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = (11 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Runs a command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(m) => validate(&m, out),
        Command::Analyze { model, json } => analyze(&model, json, out),
        Command::Dsc { model, dot } => cmd_dsc(&model, dot.as_deref(), out),
        Command::Speedup(m) => speedup(&m, out),
        Command::Simulate {
            model,
            state,
            steps,
            seed,
            csv,
        } => simulate(&model, state.as_deref(), steps, seed, csv.as_deref(), out),
        Command::Boltzmann { model, grid, max_len } => boltzmann(&model, grid, max_len, out),
        Command::Oracle { model, max_len } => cmd_oracle(&model, max_len, out),
        Command::Preset {
            name,
            n,
            alphabet,
            emit,
        } => {
            let (sys, _) = preset(&name, n, alphabet.as_deref())?;
            let text = ModelDocument::from_system(&sys).to_json();
            match emit {
                Some(path) => fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(())
        }
    }
}

fn validate(m: &ModelArg, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, _) = load(&m.model)?;
    let report = sys.irreducibility_report();
    writeln!(
        out,
        "valid: {} states, {} letters, {} independent pairs",
        sys.num_states(),
        sys.alphabet().len(),
        sys.alphabet().independence_pairs().len()
    )?;
    match report.failed_clause() {
        None => writeln!(out, "irreducible: yes")?,
        Some(clause) => writeln!(out, "irreducible: no ({clause})")?,
    }
    Ok(())
}

fn analysis(m: &ModelArg) -> Result<(ConcurrentSystem, bool, Analysis), CliError> {
    let tol = resolve_tol(m.tol)?;
    let (sys, doubled) = load(&m.model)?;
    let a = Analysis::run(&sys, tol)?;
    Ok((sys, doubled, a))
}

fn analyze(m: &ModelArg, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, doubled, a) = analysis(m)?;
    let relation = if doubled {
        Some(DoubledRelation::check(&sys, &a.spectrum)?)
    } else {
        None
    };
    if json {
        let mut v = a.to_json(&sys);
        if let Some(r) = &relation {
            v["doubled_relation"] = r.to_json(a.tol);
        }
        let mut s = serde_json::to_string_pretty(&v).expect("serializable");
        s.push('\n');
        out.write_all(s.as_bytes())?;
        return Ok(());
    }
    let sp = &a.spectrum;
    let states = sys.states();
    let mut s = String::new();
    writeln!(s, "states: {}", states.join(" ")).unwrap();
    writeln!(s, "theta(t) = {}", sp.theta_exact.as_ref().map_or_else(|| sp.theta.to_string(), |t| t.to_string())).unwrap();
    writeln!(s, "rho = {}", fmt_num(sp.rho)).unwrap();
    writeln!(s, "U = ({})", sp.u.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(", ")).unwrap();
    writeln!(s, "probabilistic valuation:").unwrap();
    for (alpha, name) in states.iter().enumerate() {
        let row: Vec<String> = (0..sys.alphabet().len())
            .filter(|&l| sys.step(alpha, l).is_some())
            .map(|l| format!("{}={}", sys.alphabet().name(l), fmt_num(sp.prob_valuation.get(alpha, l))))
            .collect();
        writeln!(s, "  {name}: {}", row.join(" ")).unwrap();
    }
    writeln!(s, "unstable: {}", a.unstable_labels(&sys).join(" ")).unwrap();
    writeln!(
        s,
        "DSC: {} vertices, {} stable, {} basic components, umbrella {}",
        a.dsc.len(),
        a.stable.iter().filter(|&&x| x).count(),
        a.condensation.basic().count(),
        a.condensation.umbrella
    )
    .unwrap();
    writeln!(s, "{} = {}", Analysis::speedup_label(&sys), fmt_num(a.speedup.speedup)).unwrap();
    let dens: Vec<String> = sys
        .alphabet()
        .letters()
        .iter()
        .zip(&a.letter_densities)
        .map(|(l, d)| format!("{l}={}", fmt_num(*d)))
        .collect();
    writeln!(s, "letter densities: {}", dens.join(" ")).unwrap();
    if let Some(r) = &relation {
        writeln!(
            s,
            "doubled: r = {}, |rho^2 - r| = {:.3e}, max |Delta - r^((|b|-|a|)/2)| = {:.3e}",
            fmt_num(r.monoid_root),
            r.rho_squared_error,
            r.delta_error
        )
        .unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn cmd_dsc(m: &ModelArg, dot: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, _, a) = analysis(m)?;
    writeln!(out, "vertices: {}", a.dsc.len())?;
    writeln!(out, "edges: {}", a.dsc.edge_count())?;
    writeln!(out, "stable: {}", a.stable_labels(&sys).join(" "))?;
    writeln!(out, "unstable: {}", a.unstable_labels(&sys).join(" "))?;
    for (i, c) in a.condensation.components.iter().enumerate() {
        let labels: Vec<String> = c.vertices.iter().map(|&v| a.dsc.label(&sys, v)).collect();
        writeln!(
            out,
            "component {i}: size {} radius {}{}{} [{}]",
            c.vertices.len(),
            fmt_num(c.radius),
            if c.basic { " basic" } else { "" },
            if c.is_final { " final" } else { "" },
            labels.join(" ")
        )?;
    }
    writeln!(out, "umbrella: {}", a.condensation.umbrella)?;
    if let Some(path) = dot {
        fs::write(path, dsc::to_dot(&sys, &a.dsc, Some(&a.stable), Some(&a.condensation)))?;
    }
    Ok(())
}

fn speedup(m: &ModelArg, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, _, a) = analysis(m)?;
    let label = Analysis::speedup_label(&sys);
    writeln!(out, "s = {}", fmt_num(a.speedup.speedup))?;
    writeln!(out, "label: {label}")?;
    writeln!(out, "component\tsize\tspeedup")?;
    for (i, c) in a.speedup.components.iter().enumerate() {
        writeln!(out, "{i}\t{}\t{}", c.vertices.len(), fmt_num(c.speedup))?;
    }
    writeln!(out, "discrepancy: {:.3e}", a.speedup.discrepancy)?;
    Ok(())
}

fn simulate(
    m: &ModelArg,
    state: Option<&str>,
    steps: usize,
    seed: u64,
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if steps == 0 {
        return Err(CliError::new(2, "--steps must be at least 1"));
    }
    let (sys, _, a) = analysis(m)?;
    let alpha = match state {
        Some(name) => sys
            .state_index(name)
            .ok_or_else(|| CliError::new(2, format!("UnknownState: {name:?}")))?,
        None => 0,
    };
    let traj = ergodic::sample_trajectory(&a.kernel, alpha, steps, seed)?;
    if let Some(i) = traj.vertices.iter().find(|&&v| !a.stable[v]) {
        return Err(CliError::new(5, format!("trajectory entered unstable vertex {}", a.dsc.label(&sys, *i))));
    }
    let alphabet = sys.alphabet();
    let write_csv = |w: &mut dyn Write| -> Result<(), CliError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["step", "state", "clique", "len_cum", "height_cum", "mean_height_ratio"]
            .map(String::from)
            .to_vec();
        header.extend(alphabet.letters().iter().cloned());
        wr.write_record(&header).map_err(csv_err)?;
        let mut counts = vec![0u64; alphabet.len()];
        let mut len = 0usize;
        for (i, &v) in traj.vertices.iter().enumerate() {
            let (beta, c) = a.kernel.vertices[v];
            len += c.len();
            for l in c.letters() {
                counts[l] += 1;
            }
            let height = i + 1;
            let mut rec = vec![
                height.to_string(),
                sys.states()[beta].clone(),
                alphabet.clique_label(c),
                len.to_string(),
                height.to_string(),
                (len as f64 / height as f64).to_string(),
            ];
            rec.extend(counts.iter().map(u64::to_string));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    };
    match csv_path {
        None => write_csv(out),
        Some(path) => {
            let mut file = std::io::BufWriter::new(fs::File::create(path)?);
            write_csv(&mut file)?;
            file.flush()?;
            let est = ergodic::speedup_estimate(&traj, &a.kernel);
            writeln!(out, "steps: {steps}")?;
            writeln!(out, "empirical speedup: {} ± {}", fmt_num(est.value), fmt_num(est.stderr))?;
            writeln!(out, "analytic speedup: {}", fmt_num(a.speedup.speedup))?;
            for l in 0..alphabet.len() {
                let means = ergodic::ergodic_means(&sys, &a.kernel, &traj, &TestFunction::LetterCount(l))?;
                writeln!(
                    out,
                    "density {}: {} ± {} (analytic {})",
                    alphabet.name(l),
                    fmt_num(means.last.value),
                    fmt_num(means.last.stderr),
                    fmt_num(a.letter_densities[l])
                )?;
            }
            Ok(())
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::new(2, format!("csv: {e}"))
}

fn boltzmann(m: &ModelArg, grid: u32, max_len: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, _, a) = analysis(m)?;
    let sample = ergodic::short_traces(&sys, max_len)?;
    let table = ergodic::boltzmann_convergence(&sys, &a.spectrum, &sample, 1..=grid)?;
    writeln!(out, "k\ts\tmax_cylinder_error\tmax_ratio_error")?;
    for r in &table.rows {
        writeln!(out, "{}\t{}\t{:.6e}\t{:.6e}", r.k, fmt_num(r.s), r.max_cylinder_error, r.max_ratio_error)?;
    }
    writeln!(out, "strictly decreasing: {}", table.strictly_decreasing())?;
    Ok(())
}

fn cmd_oracle(m: &ModelArg, max_len: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = resolve_tol(m.tol)?;
    let (sys, _) = load(&m.model)?;
    let census = oracle::census(&sys, max_len)?;
    let total: u64 = census.buckets.values().map(|b| b.count).sum();
    writeln!(out, "census: {total} trajectories up to length {max_len}")?;
    let series = oracle::series_check(&census, &sys.mobius_matrix(), max_len);
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    writeln!(out, "series_check: {}", verdict(series.pass()))?;
    if let Some(mm) = &series.first_mismatch {
        writeln!(
            out,
            "  first mismatch: ({}, {}) degree {}: census {} vs series {}",
            sys.states()[mm.alpha],
            sys.states()[mm.beta],
            mm.degree,
            mm.expected,
            mm.found
        )?;
    }
    let relin = oracle::census_by_cliques(&sys, max_len)? == census;
    writeln!(out, "relinearization: {}", verdict(relin))?;
    let mut ok = series.pass() && relin;
    if sys.irreducibility_report().irreducible {
        let sp = crate::spectral::Spectrum::compute(&sys)?;
        let h = crate::markov::system_mobius_transform(&sys, &sp.prob_valuation);
        let cross = oracle::stability_cross_check(&sys, &h, dsc::MAX_PROTECTION_DEPTH, tol)?;
        writeln!(out, "stability_cross_check: {}", verdict(cross.pass()))?;
        ok &= cross.pass();
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::new(5, "oracle check failed"))
    }
}

/// Entry point for the binary: parses `args` and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
