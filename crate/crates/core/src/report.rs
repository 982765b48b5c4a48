//! The full analysis pipeline and its JSON report.

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::dsc::{self, Condensation, DscError, DscGraph};
use crate::ergodic::{self, ErgodicError, SpeedupReport, TestFunction};
use crate::markov::{self, SystemMobiusTransform, TransitionKernel};
use crate::spectral::{self, ProbabilisticReport, SpectralError, Spectrum};
use crate::system::{ConcurrentSystem, IrreducibilityReport};
use crate::trace::smallest_root_monoid;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("IrreducibilityError: clause {0:?} fails")]
    Irreducibility(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dsc(#[from] DscError),
    #[error(transparent)]
    Ergodic(#[from] ErgodicError),
}

/// Every derived object of an irreducible system.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub tol: f64,
    pub irreducibility: IrreducibilityReport,
    pub spectrum: Spectrum,
    pub probabilistic: ProbabilisticReport,
    pub h: SystemMobiusTransform,
    pub g: Vec<Vec<f64>>,
    pub identity_discrepancy: f64,
    pub kernel: TransitionKernel,
    pub dsc: DscGraph,
    pub stable: Vec<bool>,
    pub f: DMatrix<f64>,
    pub condensation: Condensation,
    pub speedup: SpeedupReport,
    pub letter_densities: Vec<f64>,
    pub letter_roots: Vec<f64>,
}

impl Analysis {
    pub fn run(sys: &ConcurrentSystem, tol: f64) -> Result<Self, AnalysisError> {
        let irreducibility = sys.irreducibility_report();
        if let Some(clause) = irreducibility.failed_clause() {
            return Err(AnalysisError::Irreducibility(clause));
        }
        let spectrum = Spectrum::compute(sys)?;
        let fv = &spectrum.prob_valuation;
        let probabilistic = spectral::check_probabilistic(sys, fv, tol);
        let h = markov::system_mobius_transform(sys, fv);
        let g = markov::g_function(sys, &h);
        let identity_discrepancy = markov::identity_discrepancy(sys, fv, &h, &g);
        let kernel = markov::transition_kernel(sys, fv, &h, &g, tol);
        let dsc = dsc::build_dsc(sys);
        let stable = dsc::classify_stable(sys, &dsc, &h, tol)?;
        let f = dsc::f_matrix(sys, &dsc, spectrum.rho);
        let condensation = dsc::condense(&dsc, &stable, &f);
        let speedup = ergodic::speedup_analytic(&kernel, &condensation)?;
        let letter_densities = (0..sys.alphabet().len())
            .map(|a| Ok(ergodic::additive_limit(sys, &kernel, &speedup, &TestFunction::LetterCount(a))?.0))
            .collect::<Result<_, ErgodicError>>()?;
        let letter_roots = spectral::letter_roots(sys)?;
        Ok(Analysis {
            tol,
            irreducibility,
            spectrum,
            probabilistic,
            h,
            g,
            identity_discrepancy,
            kernel,
            dsc,
            stable,
            f,
            condensation,
            speedup,
            letter_densities,
            letter_roots,
        })
    }

    pub fn unstable_labels(&self, sys: &ConcurrentSystem) -> Vec<String> {
        (0..self.dsc.len())
            .filter(|&i| !self.stable[i])
            .map(|i| self.dsc.label(sys, i))
            .collect()
    }

    pub fn stable_labels(&self, sys: &ConcurrentSystem) -> Vec<String> {
        (0..self.dsc.len())
            .filter(|&i| self.stable[i])
            .map(|i| self.dsc.label(sys, i))
            .collect()
    }

    pub fn speedup_label(sys: &ConcurrentSystem) -> &'static str {
        let uniform = sys.weights().iter().flatten().flatten().all(num_traits::One::is_one);
        if uniform {
            "speedup"
        } else {
            "speedup under measure"
        }
    }

    pub fn to_json(&self, sys: &ConcurrentSystem) -> Value {
        let states = sys.states();
        let letters = sys.alphabet().letters();
        let ir = &self.irreducibility;
        let sp = &self.spectrum;
        let per_state = |f: &dyn Fn(usize) -> Value| -> Value {
            Value::Object(states.iter().enumerate().map(|(i, s)| (s.clone(), f(i))).collect())
        };
        let delta = per_state(&|a| per_state(&|b| num(sp.delta(a, b))));
        let valuation = per_state(&|a| {
            Value::Object(
                (0..letters.len())
                    .filter(|&l| sys.step(a, l).is_some())
                    .map(|l| (letters[l].clone(), num(sp.prob_valuation.get(a, l))))
                    .collect(),
            )
        });
        let h_table = per_state(&|a| {
            Value::Object(
                sys.enabled_cliques(a)
                    .map(|c| (sys.alphabet().clique_label(c), num(self.h.at(sys, a, c))))
                    .collect(),
            )
        });
        let components: Vec<Value> = self
            .condensation
            .components
            .iter()
            .map(|c| {
                json!({
                    "vertices": c.vertices.iter().map(|&v| self.dsc.label(sys, v)).collect::<Vec<_>>(),
                    "spectral_radius": num(c.radius),
                    "basic": c.basic,
                    "final": c.is_final,
                })
            })
            .collect();
        let per_component: Vec<Value> = self
            .speedup
            .components
            .iter()
            .map(|c| {
                json!({
                    "vertices": c.vertices.iter().map(|&v| self.dsc.label(sys, v)).collect::<Vec<_>>(),
                    "stationary": c.pi.iter().map(|&p| num(p)).collect::<Vec<_>>(),
                    "speedup": num(c.speedup),
                })
            })
            .collect();
        let by_letter = |v: &[f64]| -> Value {
            Value::Object(letters.iter().cloned().zip(v.iter().map(|&x| num(x))).collect())
        };
        let theta_exact = sp
            .theta_exact
            .as_ref()
            .map(|t| Value::Array(t.coeffs().iter().map(|c| Value::String(c.to_string())).collect()));
        let mut theta = Map::new();
        theta.insert("coefficients".into(), Value::Array(sp.theta.coeffs().iter().map(|&c| num(c)).collect()));
        theta.insert("display".into(), Value::String(sp.theta.to_string()));
        if let Some(e) = theta_exact {
            theta.insert("exact".into(), e);
        }
        json!({
            "tool": {"name": env!("CARGO_PKG_NAME"), "version": VERSION},
            "tolerance": self.tol,
            "states": states,
            "letters": letters,
            "irreducibility": {
                "transitive": ir.transitive,
                "non_trivial": ir.non_trivial,
                "monoid_irreducible": ir.monoid_irreducible,
                "live": ir.live,
                "irreducible": ir.irreducible,
            },
            "theta": theta,
            "rho": num(sp.rho),
            "kernel_vector": sp.u.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "kernel_residual": num(sp.kernel_residual),
            "smaller_modulus_root": sp.smaller_modulus_root,
            "delta": delta,
            "probabilistic_valuation": valuation,
            "mobius_transform": h_table,
            "probabilistic_check": {
                "max_abs_h_empty": num(self.probabilistic.max_abs_h_empty),
                "min_h": num(self.probabilistic.min_h),
                "pass": self.probabilistic.pass,
            },
            "markov": {
                "identity_discrepancy": num(self.identity_discrepancy),
                "form_discrepancy": num(self.kernel.form_discrepancy),
                "max_row_sum_error": num(self.kernel.max_row_sum_error()),
                "max_initial_error": num(self.kernel.max_initial_error()),
            },
            "dsc": {
                "vertices": self.dsc.len(),
                "edges": self.dsc.edge_count(),
                "stable": self.stable_labels(sys),
                "unstable": self.unstable_labels(sys),
            },
            "components": components,
            "umbrella": self.condensation.umbrella,
            "f_plus_spectral_radius": num(self.condensation.f_plus_radius),
            "f_zero_spectral_radius": num(self.condensation.f_zero_radius),
            "speedup": {
                "label": Analysis::speedup_label(sys),
                "value": num(self.speedup.speedup),
                "discrepancy": num(self.speedup.discrepancy),
                "per_component": per_component,
            },
            "letter_densities": by_letter(&self.letter_densities),
            "letter_roots": by_letter(&self.letter_roots),
        })
    }
}

/// `ρ² = r` and `Δ(α, β) = r^{(|β|−|α|)/2}` for the doubled system of a monoid,
/// whose states are the monoid's cliques in the order of `cliques()`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledRelation {
    pub monoid_root: f64,
    pub rho_squared_error: f64,
    pub delta_error: f64,
}

impl DoubledRelation {
    pub fn check(sys: &ConcurrentSystem, spectrum: &Spectrum) -> Result<Self, SpectralError> {
        let alphabet = sys.alphabet();
        let r = smallest_root_monoid(&alphabet.counting_mobius_polynomial()).map_err(|_| SpectralError::NoPositiveRoot)?;
        let sizes: Vec<i32> = alphabet.cliques().iter().map(|c| c.len() as i32).collect();
        let mut delta_error: f64 = 0.0;
        for (a, &sa) in sizes.iter().enumerate() {
            for (b, &sb) in sizes.iter().enumerate() {
                let expect = r.sqrt().powi(sb - sa);
                delta_error = delta_error.max((spectrum.delta(a, b) - expect).abs());
            }
        }
        Ok(DoubledRelation {
            monoid_root: r,
            rho_squared_error: (spectrum.rho * spectrum.rho - r).abs(),
            delta_error,
        })
    }

    pub fn to_json(&self, tol: f64) -> Value {
        json!({
            "monoid_root": num(self.monoid_root),
            "rho_squared_error": num(self.rho_squared_error),
            "delta_error": num(self.delta_error),
            "pass": self.rho_squared_error <= tol && self.delta_error <= tol,
        })
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}
