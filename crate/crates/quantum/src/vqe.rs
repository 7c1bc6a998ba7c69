use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::circuit::Circuit;
use crate::measure::{noisy_energy, sample_energy_with, Calibration, EnergyEstimate, ShotPlan};
use crate::noise::NoiseModel;
use crate::pauli::PauliHamiltonian;
use crate::statevector::{expectation, simulate_statevector};
use crate::{Error, Result};
use qnnp_core::rng::{derive_seed, rng, stream};

/// Readout-error mitigation for the noisy backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Mitigation {
    Off,
    /// Calibration matrix from the infinite-shot limit.
    Exact,
    /// Calibration matrix from this many shots per basis state.
    Sampled(u64),
}

/// How energies are estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// Exact statevector expectation.
    Exact,
    /// Shot sampling on the exact state.
    Sampled(ShotPlan),
    /// Density-matrix evolution with thermal noise and readout errors;
    /// without a plan, the infinite-shot limit.
    Noisy {
        noise: NoiseModel,
        shots: Option<ShotPlan>,
        mitigation: Mitigation,
    },
}

impl Backend {
    /// Same backend with its sampling seed replaced.
    pub fn reseeded(&self, seed: u64) -> Backend {
        let mut b = self.clone();
        match &mut b {
            Backend::Exact => {}
            Backend::Sampled(plan) => plan.seed = seed,
            Backend::Noisy { shots, .. } => {
                if let Some(plan) = shots {
                    plan.seed = seed;
                }
            }
        }
        b
    }

    fn seed(&self) -> u64 {
        match self {
            Backend::Sampled(plan) | Backend::Noisy { shots: Some(plan), .. } => plan.seed,
            _ => 0,
        }
    }
}

/// Energy estimator for one circuit and Hamiltonian. Evaluation `i` samples
/// with seed `derive_seed(plan.seed, [i])`.
pub struct Evaluator<'a> {
    h: &'a PauliHamiltonian,
    circuit: &'a Circuit,
    backend: &'a Backend,
    calibration: Option<Calibration>,
    count: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(h: &'a PauliHamiltonian, circuit: &'a Circuit, backend: &'a Backend) -> Result<Self> {
        if circuit.n_qubits != h.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit circuit, {}-qubit Hamiltonian",
                circuit.n_qubits, h.n_qubits
            )));
        }
        let calibration = match backend {
            Backend::Noisy { noise, mitigation, .. } => {
                noise.validate()?;
                match mitigation {
                    Mitigation::Off => None,
                    Mitigation::Exact => Some(Calibration::from_noise_model(h.n_qubits, noise)?),
                    Mitigation::Sampled(shots) => {
                        let mut r = stream(backend.seed(), &[u64::MAX]);
                        Some(Calibration::sampled(h.n_qubits, noise, *shots, &mut r)?)
                    }
                }
            }
            _ => None,
        };
        Ok(Evaluator {
            h,
            circuit,
            backend,
            calibration,
            count: 0,
        })
    }

    /// Number of evaluations so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn evaluate(&mut self, theta: &[f64]) -> Result<EnergyEstimate> {
        self.evaluate_on(self.circuit, theta)
    }

    fn evaluate_on(&mut self, circuit: &Circuit, theta: &[f64]) -> Result<EnergyEstimate> {
        let index = self.count;
        self.count += 1;
        match self.backend {
            Backend::Exact => {
                let state = simulate_statevector(circuit, theta)?;
                Ok(EnergyEstimate {
                    energy: expectation(&state, self.h)?,
                    eps_stat: 0.0,
                })
            }
            Backend::Sampled(plan) => {
                let state = simulate_statevector(circuit, theta)?;
                let mut r = rng(derive_seed(plan.seed, &[index]));
                sample_energy_with(&state, self.h, plan, &mut r)
            }
            Backend::Noisy { noise, shots, .. } => {
                let mut r;
                let shots = match shots {
                    Some(plan) => {
                        r = rng(derive_seed(plan.seed, &[index]));
                        Some((plan, &mut r))
                    }
                    None => None,
                };
                noisy_energy(circuit, theta, self.h, noise, shots, self.calibration.as_ref())
            }
        }
    }
}

/// Starting point of the first restart.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoint {
    Zeros,
    Fixed(Vec<f64>),
    /// Uniform in `[-scale, scale]`.
    Random { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Iterations per restart: gradient steps or simplex updates.
    pub max_iterations: usize,
    /// Gradient-norm threshold (gradient descent) or spread of simplex
    /// values (Nelder-Mead).
    pub tolerance: f64,
    /// Initial step length or simplex edge.
    pub initial_step: f64,
    pub restarts: usize,
    pub init: InitialPoint,
    /// Later restarts start uniformly in `[-restart_scale, restart_scale]`.
    pub restart_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 200,
            tolerance: 1e-7,
            initial_step: 0.5,
            restarts: 1,
            init: InitialPoint::Zeros,
            restart_scale: PI,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self, n_params: usize) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "optimizer budget must allow at least one iteration and one restart".into(),
            ));
        }
        if !(self.tolerance >= 0.0) || !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter("tolerance and step must be positive".into()));
        }
        if let InitialPoint::Fixed(v) = &self.init {
            if v.len() != n_params {
                return Err(Error::DimensionMismatch(format!(
                    "{} initial parameters for {n_params} slots",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    fn start(&self, restart: usize, n: usize) -> Vec<f64> {
        let random = |scale: f64| {
            let mut r = stream(self.seed, &[restart as u64]);
            (0..n).map(|_| r.random_range(-scale..=scale)).collect()
        };
        match (&self.init, restart) {
            (InitialPoint::Zeros, 0) => vec![0.0; n],
            (InitialPoint::Fixed(v), 0) => v.clone(),
            (InitialPoint::Random { scale }, 0) => random(*scale),
            _ => random(self.restart_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub restart: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeResult {
    pub theta: Vec<f64>,
    /// Fresh evaluation at `theta`.
    pub energy: f64,
    pub eps_stat: f64,
    /// Every objective evaluation (parameter-shift evaluations excluded).
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub iterations: usize,
    /// All energy evaluations including gradients and the final one.
    pub evaluations: u64,
    pub best_restart: usize,
}

struct RunOutcome {
    theta: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

/// Minimizes the backend's energy estimate over the circuit parameters.
/// The exact backend uses parameter-shift gradient descent with
/// backtracking; sampled and noisy backends use Nelder-Mead.
pub fn vqe(h: &PauliHamiltonian, circuit: &Circuit, config: &OptimizerConfig, backend: &Backend) -> Result<VqeResult> {
    config.validate(circuit.n_params)?;
    circuit.validate()?;
    let mut eval = Evaluator::new(h, circuit, backend)?;
    let mut trace = Vec::new();
    let mut best: Option<(usize, RunOutcome)> = None;
    let mut iterations = 0;
    for restart in 0..config.restarts {
        let theta0 = config.start(restart, circuit.n_params);
        let mut objective = |theta: &[f64], ev: &mut Evaluator| -> Result<f64> {
            let e = ev.evaluate(theta)?.energy;
            trace.push(TracePoint { restart, energy: e });
            Ok(e)
        };
        let run = if matches!(backend, Backend::Exact) {
            gradient_descent(&mut eval, &mut objective, theta0, config)?
        } else {
            nelder_mead(&mut eval, &mut objective, theta0, config)?
        };
        iterations += run.iterations;
        log::debug!("restart {restart}: {:.10} after {} iterations", run.value, run.iterations);
        if best.as_ref().is_none_or(|(_, b)| run.value < b.value) {
            best = Some((restart, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    let fresh = eval.evaluate(&run.theta)?;
    if !fresh.energy.is_finite() {
        return Err(Error::InvalidParameter("energy estimate is not finite".into()));
    }
    Ok(VqeResult {
        theta: run.theta,
        energy: fresh.energy,
        eps_stat: fresh.eps_stat,
        trace,
        converged: run.converged,
        iterations,
        evaluations: eval.count(),
        best_restart,
    })
}

type Objective<'o> = dyn FnMut(&[f64], &mut Evaluator) -> Result<f64> + 'o;

/// Parameter-shift gradient: every occurrence of a slot is shifted by
/// `+-pi/2` separately and the halved differences are summed.
pub fn parameter_shift_gradient(eval: &mut Evaluator, theta: &[f64]) -> Result<Vec<f64>> {
    let (expanded, owner) = eval.circuit.expand_slots();
    let mut x: Vec<f64> = owner.iter().map(|&i| theta[i]).collect();
    let mut grad = vec![0.0; theta.len()];
    for (occ, &slot) in owner.iter().enumerate() {
        let t = x[occ];
        x[occ] = t + FRAC_PI_2;
        let plus = eval.evaluate_on(&expanded, &x)?.energy;
        x[occ] = t - FRAC_PI_2;
        let minus = eval.evaluate_on(&expanded, &x)?.energy;
        x[occ] = t;
        grad[slot] += 0.5 * (plus - minus);
    }
    Ok(grad)
}

fn gradient_descent(
    eval: &mut Evaluator,
    objective: &mut Objective,
    mut theta: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<RunOutcome> {
    let mut f = objective(&theta, eval)?;
    let mut step = config.initial_step;
    let mut converged = theta.is_empty();
    let mut iterations = 0;
    while !converged && iterations < config.max_iterations {
        let g = parameter_shift_gradient(eval, &theta)?;
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2.sqrt() <= config.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..50 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - step * gi).collect();
            let fc = objective(&cand, eval)?;
            if fc <= f - 1e-4 * step * g2 {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent within machine precision
            converged = g2.sqrt() <= config.tolerance.sqrt();
            break;
        }
        step = (2.0 * step).min(1e8);
    }
    if !converged && !theta.is_empty() && iterations == config.max_iterations {
        let g = parameter_shift_gradient(eval, &theta)?;
        converged = g.iter().map(|v| v * v).sum::<f64>().sqrt() <= config.tolerance;
    }
    Ok(RunOutcome {
        theta,
        value: f,
        converged,
        iterations,
    })
}

fn nelder_mead(
    eval: &mut Evaluator,
    objective: &mut Objective,
    theta0: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<RunOutcome> {
    let n = theta0.len();
    let f0 = objective(&theta0, eval)?;
    if n == 0 {
        return Ok(RunOutcome {
            theta: theta0,
            value: f0,
            converged: true,
            iterations: 0,
        });
    }
    let mut simplex = vec![(theta0.clone(), f0)];
    for i in 0..n {
        let mut v = theta0.clone();
        v[i] += config.initial_step;
        let fv = objective(&v, eval)?;
        simplex.push((v, fv));
    }
    let affine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= config.tolerance || size <= 1e-10 {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = affine(&centroid, &worst.0, -1.0);
        let fr = objective(&reflected, eval)?;
        if fr < simplex[0].1 {
            let expanded = affine(&centroid, &worst.0, -2.0);
            let fe = objective(&expanded, eval)?;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
            let contracted = affine(&centroid, target, 0.5);
            let fc = objective(&contracted, eval)?;
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v = affine(&best, &entry.0, 0.5);
                    let fv = objective(&v, eval)?;
                    *entry = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (theta, value) = simplex.swap_remove(0);
    Ok(RunOutcome {
        theta,
        value,
        converged,
        iterations,
    })
}
