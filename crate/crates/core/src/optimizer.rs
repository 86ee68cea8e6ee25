//! Minimization of `λ_min(B(θ))` over the 16 measurement parameters.
//!
//! Each restart is a steepest-descent run with Barzilai–Borwein trial steps
//! and an Armijo backtracking line search. The gradient of an eigenvalue
//! `λ = ⟨ψ|B(θ)|ψ⟩` is `⟨ψ|∂B/∂θ|ψ⟩`; since `B` is linear in its polynomial
//! coefficients, only the 3×3-level coefficients are differentiated (by
//! central differences) and contracted with expectation tables of `ψ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell_operator::{bell_coefficients, quantum_violation, BellAssembler, BellCoefficients};
use crate::error::{Error, Result};
use crate::linalg::lowest_eigenpairs;
use crate::su3_irreps::IrrepLabel;
use crate::su3_measurements::{GeneratorSet, MeasurementParams, PARAM_LEN};

/// Two lowest levels closer than this are averaged in the objective.
pub const DEGENERACY_GAP: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 10.0;
const MIN_STEP: f64 = 1e-14;
const LANCZOS_TOL: f64 = 1e-11;
const NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// First trial step of the line search.
    pub gradient_step: f64,
    pub finite_difference_epsilon: f64,
    /// Stop once the gradient norm falls below this.
    pub convergence_tolerance: f64,
    pub seed: u64,
    /// Stop once `stall_window` consecutive iterations improve the objective
    /// by less than `stall_tolerance` in total. Zero disables the rule.
    pub stall_window: usize,
    pub stall_tolerance: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iterations: 500,
            gradient_step: 0.1,
            finite_difference_epsilon: 1e-5,
            convergence_tolerance: 1e-6,
            seed: 0,
            stall_window: 25,
            stall_tolerance: 1e-9,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.restarts > 0
            && self.max_iterations > 0
            && self.gradient_step > 0.0
            && self.finite_difference_epsilon > 0.0
            && self.convergence_tolerance > 0.0;
        if !positive {
            return Err(Error::InvalidInput("optimization parameters must be positive".into()));
        }
        if self.convergence_tolerance >= self.gradient_step {
            return Err(Error::InvalidInput(
                "convergence_tolerance must be smaller than gradient_step".into(),
            ));
        }
        if self.stall_tolerance < 0.0 || !self.stall_tolerance.is_finite() {
            return Err(Error::InvalidInput("stall_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    Stalled,
    StepUnderflow,
    MaxIterations,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub restart: usize,
    pub iteration: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub final_value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Gradient norm reached `convergence_tolerance`.
    pub converged: bool,
    pub termination: Termination,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub label: IrrepLabel,
    pub n: usize,
    pub dim: usize,
    pub best_settings: MeasurementParams,
    /// Lowest eigenvalue at `best_settings` from a full diagonalization.
    pub best_value: f64,
    pub best_restart: usize,
    /// Objective values of every restart, one point per accepted iteration.
    pub trace: Vec<TracePoint>,
    pub restarts: Vec<RestartSummary>,
    pub restarts_used: usize,
    pub config: OptimizationConfig,
}

/// Objective value and gradient at one point.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `λ₁ − λ₀`.
    pub gap: f64,
    /// Lowest eigenvector, reused as a Lanczos start vector.
    pub ground: Vec<Complex64>,
}

fn coefficients_at(theta: &[f64], n: usize) -> Result<BellCoefficients> {
    let params = MeasurementParams::from_flat(theta)?;
    Ok(bell_coefficients(&params.projectors(GeneratorSet::standard())?, n))
}

/// `∂c/∂θ_k` for every parameter by central differences.
fn coefficient_derivatives(theta: &[f64], n: usize, eps: f64) -> Result<Vec<BellCoefficients>> {
    (0..theta.len())
        .map(|k| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[k] += eps;
            minus[k] -= eps;
            let mut d = coefficients_at(&plus, n)?;
            d.axpy(-1.0, &coefficients_at(&minus, n)?);
            let mut scaled = BellCoefficients::zeros();
            scaled.axpy(0.5 / eps, &d);
            Ok(scaled)
        })
        .collect()
}

/// `λ_min(B(θ))`, or the mean of the two lowest levels when they are within
/// [`DEGENERACY_GAP`], together with its gradient.
pub fn objective(asm: &BellAssembler, theta: &[f64], eps: f64, start: Option<&[Complex64]>) -> Result<ObjectiveEval> {
    let matrix = asm.assemble(&coefficients_at(theta, asm.n)?);
    let count = if asm.dim() > 1 { 2 } else { 1 };
    let pairs = lowest_eigenpairs(&matrix, count, start, LANCZOS_TOL)?;
    let gap = if count == 2 { pairs.values[1] - pairs.values[0] } else { f64::INFINITY };
    let used = if gap < DEGENERACY_GAP { 2 } else { 1 };
    let derivs = coefficient_derivatives(theta, asm.n, eps)?;
    let mut gradient = vec![0.0; theta.len()];
    for v in &pairs.vectors[..used] {
        let tables = asm.expectation_tables(v);
        for (g, d) in gradient.iter_mut().zip(&derivs) {
            *g += d.contract(&tables).re / used as f64;
        }
    }
    let value = pairs.values[..used].iter().sum::<f64>() / used as f64;
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Eigensolver("non-finite objective".into()));
    }
    Ok(ObjectiveEval {
        value,
        gradient,
        gap,
        ground: pairs.vectors[0].clone(),
    })
}

/// Random starting point for `restart`, uniform in `[−1, 1]^16`, drawn from
/// the stream of that restart.
pub fn initial_point(seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..2 * PARAM_LEN).map(|_| rng.random_range(-1.0..1.0)).collect()
}

struct RestartRun {
    summary: RestartSummary,
    theta: Vec<f64>,
    trace: Vec<TracePoint>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn run_restart(asm: &BellAssembler, mut theta: Vec<f64>, config: &OptimizationConfig, restart: usize) -> RestartRun {
    let eps = config.finite_difference_epsilon;
    let failed = |theta: Vec<f64>, trace: Vec<TracePoint>, e: Error, iterations: usize| RestartRun {
        summary: RestartSummary {
            restart,
            final_value: trace.last().map_or(f64::INFINITY, |p| p.value),
            iterations,
            gradient_norm: f64::NAN,
            converged: false,
            termination: Termination::Failed,
            error: Some(e.to_string()),
        },
        theta,
        trace,
    };
    let mut current = match objective(asm, &theta, eps, None) {
        Ok(e) => e,
        Err(e) => return failed(theta, Vec::new(), e, 0),
    };
    let mut trace = vec![TracePoint {
        restart,
        iteration: 0,
        value: current.value,
    }];
    let mut step = config.gradient_step;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        let gnorm = norm(&current.gradient);
        if gnorm < config.convergence_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        if config.stall_window > 0 && trace.len() > config.stall_window {
            let earlier = trace[trace.len() - 1 - config.stall_window].value;
            if earlier - current.value < config.stall_tolerance {
                termination = Termination::Stalled;
                break;
            }
        }
        let accepted = loop {
            let trial: Vec<f64> = theta.iter().zip(&current.gradient).map(|(t, g)| t - step * g).collect();
            match objective(asm, &trial, eps, Some(&current.ground)) {
                Ok(next) if next.value <= current.value - ARMIJO * step * gnorm * gnorm => break Some((trial, next)),
                Ok(_) => {}
                Err(e) => return failed(theta, trace, e, iterations),
            }
            step *= 0.5;
            // below this the predicted decrease drowns in eigensolver noise
            if step < MIN_STEP || step * gnorm * gnorm < NOISE_FLOOR * (1.0 + current.value.abs()) {
                break None;
            }
        };
        let Some((trial, next)) = accepted else {
            termination = Termination::StepUnderflow;
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.gradient.iter().zip(&current.gradient).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { (ss / sy).clamp(MIN_STEP, MAX_STEP) } else { (2.0 * step).min(MAX_STEP) };
        theta = trial;
        current = next;
        iterations += 1;
        trace.push(TracePoint {
            restart,
            iteration: iterations,
            value: current.value,
        });
    }
    let gradient_norm = norm(&current.gradient);
    RestartRun {
        summary: RestartSummary {
            restart,
            final_value: current.value,
            iterations,
            gradient_norm,
            converged: gradient_norm < config.convergence_tolerance,
            termination,
            error: None,
        },
        theta,
        trace,
    }
}

/// Best settings for irrep `label` of `n` parties over `config.restarts`
/// random starting points.
pub fn optimize_measurements(label: IrrepLabel, n: usize, config: &OptimizationConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let asm = BellAssembler::new(label, n)?;
    optimize_with(&asm, config)
}

/// Same as [`optimize_measurements`] with a prebuilt assembler.
pub fn optimize_with(asm: &BellAssembler, config: &OptimizationConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let runs: Vec<RestartRun> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(asm, initial_point(config.seed, r), config, r))
        .collect();
    let best = runs
        .iter()
        .filter(|r| r.summary.error.is_none())
        .min_by(|a, b| a.summary.final_value.total_cmp(&b.summary.final_value))
        .ok_or_else(|| {
            let first = runs.iter().find_map(|r| r.summary.error.clone()).unwrap_or_default();
            Error::Eigensolver(format!("every restart failed; first error: {first}"))
        })?;
    let best_settings = MeasurementParams::from_flat(&best.theta)?;
    let op = asm.from_params(&best_settings)?;
    let best_value = quantum_violation(&op)?;
    Ok(OptimizationResult {
        label: asm.label,
        n: asm.n,
        dim: asm.dim(),
        best_settings,
        best_value,
        best_restart: best.summary.restart,
        trace: runs.iter().flat_map(|r| r.trace.iter().copied()).collect(),
        restarts: runs.iter().map(|r| r.summary.clone()).collect(),
        restarts_used: runs.len(),
        config: *config,
    })
}
