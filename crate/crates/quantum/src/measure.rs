use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{Circuit, Gate};
use crate::density::{simulate_density, DensityMatrix};
use crate::noise::NoiseModel;
use crate::pauli::{PauliHamiltonian, PauliString, C64};
use crate::statevector::apply_gate;
use crate::{Error, Result};

/// Shots per measured (non-identity) term.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    Uniform(u64),
    /// One entry per measured term, in Hamiltonian order.
    PerTerm(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotPlan {
    pub allocation: Allocation,
    pub seed: u64,
}

impl ShotPlan {
    pub fn uniform(shots: u64, seed: u64) -> Self {
        ShotPlan {
            allocation: Allocation::Uniform(shots),
            seed,
        }
    }

    /// Splits `total` shots in proportion to `|c_k| sqrt(1 - <P_k>^2)`, at
    /// least one per term.
    pub fn variance_weighted(total: u64, h: &PauliHamiltonian, state: &[C64], seed: u64) -> Result<Self> {
        h.check_state(state)?;
        let weights: Vec<f64> = h
            .measured_terms()
            .map(|(c, p)| {
                let e = p.expectation(state);
                c.abs() * (1.0 - e * e).max(0.0).sqrt()
            })
            .collect();
        let sum: f64 = weights.iter().sum();
        let k = weights.len() as u64;
        if total < k {
            return Err(Error::InvalidParameter(format!("{total} shots cannot cover {k} terms")));
        }
        let shots = weights
            .iter()
            .map(|w| if sum > 0.0 { ((w / sum) * total as f64).floor().max(1.0) as u64 } else { total / k })
            .collect();
        Ok(ShotPlan {
            allocation: Allocation::PerTerm(shots),
            seed,
        })
    }

    /// Shots for each measured term of `h`.
    pub fn shots(&self, h: &PauliHamiltonian) -> Result<Vec<u64>> {
        let k = h.measured_terms().count();
        let shots = match &self.allocation {
            Allocation::Uniform(s) => vec![*s; k],
            Allocation::PerTerm(v) => {
                if v.len() != k {
                    return Err(Error::DimensionMismatch(format!(
                        "{} shot counts for {k} measured terms",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if shots.contains(&0) {
            return Err(Error::InvalidParameter("every term needs at least one shot".into()));
        }
        Ok(shots)
    }
}

/// Energy estimate and its statistical standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub eps_stat: f64,
}

/// Gates rotating the eigenbasis of `p` onto the computational basis:
/// H for X, S dagger then H for Y.
pub fn measurement_rotation(p: &PauliString) -> Vec<Gate> {
    let mut gates = Vec::new();
    for q in 0..p.n_qubits {
        match p.op(q) {
            'X' => gates.push(Gate::H(q)),
            'Y' => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            _ => {}
        }
    }
    gates
}

/// Terms needing the same rotation share a key.
fn basis_key(p: &PauliString) -> (u64, u64) {
    (p.x & !p.z, p.x & p.z)
}

/// `+-1` eigenvalue of outcome `b` after rotation.
#[inline]
fn parity(b: usize, support: u64) -> f64 {
    if ((b as u64) & support).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn expectation_from(probs: &[f64], p: &PauliString) -> f64 {
    probs.iter().enumerate().map(|(b, q)| q * parity(b, p.support())).sum()
}

/// Outcome distribution of measuring `p` on a pure state.
pub fn measurement_distribution(state: &[C64], p: &PauliString) -> Vec<f64> {
    let mut v = state.to_vec();
    for g in measurement_rotation(p) {
        apply_gate(&mut v, p.n_qubits, &g, &[]);
    }
    v.iter().map(|a| a.norm_sqr()).collect()
}

/// Multinomial draw of `n` outcomes.
pub fn sample_counts(probs: &[f64], n: u64, rng: &mut ChaCha20Rng) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        let k = if i + 1 == probs.len() || p >= mass {
            left
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(left, (p / mass).min(1.0)).expect("valid probability").sample(rng)
        };
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    counts
}

/// Flips each measured bit independently: 1 read as 0 with
/// `p0_given_1`, 0 read as 1 with `p1_given_0`.
pub fn apply_readout(counts: &[u64], n_qubits: usize, noise: &NoiseModel, rng: &mut ChaCha20Rng) -> Vec<u64> {
    let mut counts = counts.to_vec();
    for q in 0..n_qubits {
        let r = noise.readout_for(q);
        if r.p0_given_1 == 0.0 && r.p1_given_0 == 0.0 {
            continue;
        }
        let bit = 1usize << q;
        let mut next = vec![0u64; counts.len()];
        for (b, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p = if b & bit == 0 { r.p1_given_0 } else { r.p0_given_1 };
            let flips = if p <= 0.0 {
                0
            } else if p >= 1.0 {
                c
            } else {
                Binomial::new(c, p).expect("valid probability").sample(rng)
            };
            next[b] += c - flips;
            next[b ^ bit] += flips;
        }
        counts = next;
    }
    counts
}

/// Infinite-shot limit of [`apply_readout`] on a probability vector.
pub fn readout_probabilities(probs: &[f64], n_qubits: usize, noise: &NoiseModel) -> Vec<f64> {
    let mut p = probs.to_vec();
    for q in 0..n_qubits {
        let m = noise.readout_for(q).matrix();
        let bit = 1usize << q;
        for b in (0..p.len()).filter(|b| b & bit == 0) {
            let (p0, p1) = (p[b], p[b | bit]);
            p[b] = m[0][0] * p0 + m[0][1] * p1;
            p[b | bit] = m[1][0] * p0 + m[1][1] * p1;
        }
    }
    p
}

/// Per-term sampling from outcome distributions; `dist` returns the
/// distribution for a term (cached per measurement basis) and `post` maps
/// raw counts to the probabilities used in the estimate.
fn sampled_estimate(
    h: &PauliHamiltonian,
    plan: &ShotPlan,
    rng: &mut ChaCha20Rng,
    mut dist: impl FnMut(&PauliString) -> Result<Vec<f64>>,
    mut post: impl FnMut(Vec<u64>, &mut ChaCha20Rng) -> Result<Vec<f64>>,
) -> Result<EnergyEstimate> {
    let shots = plan.shots(h)?;
    let mut cache: HashMap<(u64, u64), Vec<f64>> = HashMap::new();
    let mut energy = h.constant();
    let mut var = 0.0;
    for ((c, p), &s) in h.measured_terms().zip(&shots) {
        let key = basis_key(p);
        if !cache.contains_key(&key) {
            cache.insert(key, dist(p)?);
        }
        let counts = sample_counts(&cache[&key], s, rng);
        let probs = post(counts, rng)?;
        let e = expectation_from(&probs, p);
        energy += c * e;
        var += c * c * (1.0 - e * e).max(0.0) / s as f64;
    }
    Ok(EnergyEstimate {
        energy,
        eps_stat: var.sqrt(),
    })
}

/// Shot-based energy estimate on a pure state: each measured term gets its
/// own `S_k` single-shot outcomes in its eigenbasis. The reported error is
/// `sqrt(sum_k c_k^2 Var_k / S_k)` with the sample variances.
pub fn sample_energy(state: &[C64], h: &PauliHamiltonian, plan: &ShotPlan) -> Result<EnergyEstimate> {
    let mut rng = qnnp_core::rng::rng(plan.seed);
    sample_energy_with(state, h, plan, &mut rng)
}

pub(crate) fn sample_energy_with(
    state: &[C64],
    h: &PauliHamiltonian,
    plan: &ShotPlan,
    rng: &mut ChaCha20Rng,
) -> Result<EnergyEstimate> {
    h.check_state(state)?;
    sampled_estimate(
        h,
        plan,
        rng,
        |p| Ok(measurement_distribution(state, p)),
        |counts, _| Ok(normalize(&counts)),
    )
}

fn normalize(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect()
}

/// Energy from a noisy device: density-matrix evolution with thermal noise
/// (also during the basis rotations), then readout errors, optionally
/// mitigated with `calibration`. Without a shot plan the infinite-shot
/// limit is returned.
pub fn noisy_energy(
    circuit: &Circuit,
    theta: &[f64],
    h: &PauliHamiltonian,
    noise: &NoiseModel,
    shots: Option<(&ShotPlan, &mut ChaCha20Rng)>,
    calibration: Option<&Calibration>,
) -> Result<EnergyEstimate> {
    if circuit.n_qubits != h.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit circuit, {}-qubit Hamiltonian",
            circuit.n_qubits, h.n_qubits
        )));
    }
    let rho = simulate_density(circuit, theta, noise)?;
    let n = h.n_qubits;
    let rotated = |p: &PauliString| -> Vec<f64> {
        let mut r: DensityMatrix = rho.clone();
        for g in measurement_rotation(p) {
            r.apply_noisy(&g, &[], noise);
        }
        r.probabilities()
    };
    let mitigate = |probs: Vec<f64>| -> Result<Vec<f64>> {
        match calibration {
            Some(cal) => cal.mitigate(&probs),
            None => Ok(probs),
        }
    };
    match shots {
        Some((plan, rng)) => sampled_estimate(
            h,
            plan,
            rng,
            |p| Ok(rotated(p)),
            |counts, rng| mitigate(normalize(&apply_readout(&counts, n, noise, rng))),
        ),
        None => {
            let mut cache: HashMap<(u64, u64), Vec<f64>> = HashMap::new();
            let mut energy = h.constant();
            for (c, p) in h.measured_terms() {
                let key = basis_key(p);
                if !cache.contains_key(&key) {
                    let probs = readout_probabilities(&rotated(p), n, noise);
                    cache.insert(key, mitigate(probs)?);
                }
                energy += c * expectation_from(&cache[&key], p);
            }
            Ok(EnergyEstimate { energy, eps_stat: 0.0 })
        }
    }
}

/// Assignment matrix `A[i][j] = p(read i | prepared j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub n_qubits: usize,
    pub matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Calibration {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "calibration matrix must be 2^n square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sv = matrix.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if !(smin > 1e-12 * smax) {
            return Err(Error::SingularCalibration(format!(
                "smallest singular value {smin:e} vs largest {smax:e}"
            )));
        }
        let inverse = matrix.clone().try_inverse().ok_or_else(|| Error::SingularCalibration("not invertible".into()))?;
        Ok(Calibration {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
            inverse,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(DMatrix::identity(1 << n_qubits, 1 << n_qubits)).expect("identity is regular")
    }

    /// Prepares every basis state with X gates under `noise` (thermal noise
    /// included) and records the infinite-shot readout distribution.
    pub fn from_noise_model(n_qubits: usize, noise: &NoiseModel) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let probs = readout_probabilities(&prepared_basis_state(n_qubits, j, noise)?, n_qubits, noise);
            m.set_column(j, &DVector::from_vec(probs));
        }
        Self::new(m)
    }

    /// As [`Calibration::from_noise_model`] but from `shots` sampled readouts
    /// per basis state.
    pub fn sampled(n_qubits: usize, noise: &NoiseModel, shots: u64, rng: &mut ChaCha20Rng) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let probs = prepared_basis_state(n_qubits, j, noise)?;
            let counts = apply_readout(&sample_counts(&probs, shots, rng), n_qubits, noise, rng);
            m.set_column(j, &DVector::from_vec(normalize(&counts)));
        }
        Self::new(m)
    }

    /// Corrected distribution `A^-1 p`; if that leaves the simplex, the
    /// nonnegative least-squares solution of `A q = p`, renormalized.
    pub fn mitigate(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if probs.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for a {}-qubit calibration",
                probs.len(),
                self.n_qubits
            )));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("empty outcome distribution".into()));
        }
        let p = DVector::from_iterator(probs.len(), probs.iter().map(|x| x / total));
        let q = &self.inverse * &p;
        let q = if q.iter().all(|&x| x >= -1e-12) {
            q.map(|x| x.max(0.0))
        } else {
            nnls(&self.matrix, &p)
        };
        let s = q.sum();
        Ok(q.iter().map(|x| x / s).collect())
    }
}

fn prepared_basis_state(n_qubits: usize, j: usize, noise: &NoiseModel) -> Result<Vec<f64>> {
    let mut prep = Circuit::new(n_qubits);
    for q in (0..n_qubits).filter(|q| j >> q & 1 == 1) {
        prep.push(Gate::X(q))?;
    }
    Ok(simulate_density(&prep, &[], noise)?.probabilities())
}

/// Mitigated counts: [`Calibration::mitigate`] on a histogram.
pub fn mitigate_readout(counts: &[u64], calibration: &Calibration) -> Result<Vec<f64>> {
    calibration.mitigate(&normalize(counts))
}

/// Lawson-Hanson nonnegative least squares `min ||A x - b||, x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0);
    for _outer in 0..(3 * n).max(10) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let z_sub = sub.svd(true, true).solve(b, 1e-14).expect("U and V computed");
            let mut z = DVector::zeros(n);
            for (k, &i) in idx.iter().enumerate() {
                z[i] = z_sub[k];
            }
            if idx.iter().all(|&i| z[i] > 0.0) {
                x = z;
                break;
            }
            // step back toward x until a passive variable hits zero
            let alpha = idx
                .iter()
                .filter(|&&i| z[i] <= 0.0)
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (z - &x) * alpha;
            for &i in &idx {
                if x[i].abs() <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x
}
