use crate::circuit::{Circuit, Gate};
use crate::noise::NoiseModel;
use crate::pauli::{PauliHamiltonian, C64};
use crate::statevector::{apply_1q, apply_cx, single_qubit_matrix};
use crate::{Error, Result};

/// Largest register for density-matrix simulation.
pub const MAX_DENSITY_QUBITS: usize = 6;

/// Row-major `2^n x 2^n` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        data[0] = C64::new(1.0, 0.0);
        DensityMatrix { n_qubits, data }
    }

    pub fn from_state(state: &[C64]) -> Self {
        let dim = state.len();
        let n_qubits = dim.trailing_zeros() as usize;
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(state[r] * state[c].conj());
            }
        }
        DensityMatrix { n_qubits, data }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim() + c]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Diagonal: computational-basis outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re.max(0.0)).collect()
    }

    /// `tr(rho H)`.
    pub fn expectation(&self, h: &PauliHamiltonian) -> Result<f64> {
        if h.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit density matrix, {}-qubit Hamiltonian",
                self.n_qubits, h.n_qubits
            )));
        }
        let dim = self.dim();
        let mut e = 0.0;
        for (c, p) in &h.terms {
            let x = p.x as usize;
            // P[b^x][b] = phase(b), so tr(rho P) = sum_b rho[b][b^x] phase(b)
            let t: C64 = (0..dim).map(|b| self.get(b, b ^ x) * p.phase(b)).sum();
            e += c * t.re;
        }
        Ok(e)
    }

    fn apply_unitary(&mut self, gate: &Gate, theta: &[f64]) {
        let n = self.n_qubits;
        let dim = self.dim();
        match gate {
            Gate::CX { control, target } => {
                for c in 0..dim {
                    apply_cx(&mut self.data, n, *control, *target, c, dim);
                }
                for r in 0..dim {
                    apply_cx(&mut self.data, n, *control, *target, r * dim, 1);
                }
            }
            g => {
                let m = single_qubit_matrix(g, theta).expect("single-qubit gate");
                let q = g.qubits().0;
                for c in 0..dim {
                    apply_1q(&mut self.data, n, q, &m, c, dim);
                }
                let mc = [m[0].conj(), m[1].conj(), m[2].conj(), m[3].conj()];
                for r in 0..dim {
                    apply_1q(&mut self.data, n, q, &mc, r * dim, 1);
                }
            }
        }
    }

    /// Amplitude damping `gamma` followed by phase damping `lambda` on `q`.
    fn damp(&mut self, q: usize, gamma: f64, lambda: f64) {
        if gamma == 0.0 && lambda == 0.0 {
            return;
        }
        let dim = self.dim();
        let bit = 1usize << q;
        let off = ((1.0 - gamma) * (1.0 - lambda)).sqrt();
        for r in (0..dim).filter(|r| r & bit == 0) {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let (r1, c1) = (r | bit, c | bit);
                let p11 = self.data[r1 * dim + c1];
                self.data[r * dim + c] += p11 * gamma;
                self.data[r1 * dim + c1] = p11 * (1.0 - gamma);
                self.data[r * dim + c1] *= off;
                self.data[r1 * dim + c] *= off;
            }
        }
    }

    /// Applies `gate` followed by thermal relaxation on the qubits it acts
    /// on for the gate's duration.
    pub fn apply_noisy(&mut self, gate: &Gate, theta: &[f64], noise: &NoiseModel) {
        self.apply_unitary(gate, theta);
        let t = noise.gate_duration_ns(gate);
        if t == 0.0 || !noise.has_decoherence() {
            return;
        }
        let (gamma, lambda) = noise.damping(t);
        let (a, b) = gate.qubits();
        self.damp(a, gamma, lambda);
        if let Some(b) = b {
            self.damp(b, gamma, lambda);
        }
    }
}

fn check(circuit: &Circuit, noise: &NoiseModel) -> Result<()> {
    if circuit.n_qubits > MAX_DENSITY_QUBITS {
        return Err(Error::TooManyQubits {
            what: "density-matrix simulation",
            max: MAX_DENSITY_QUBITS,
            n: circuit.n_qubits,
        });
    }
    noise.validate()
}

/// `|0...0><0...0|` evolved by the circuit with relaxation and dephasing
/// after every gate.
pub fn simulate_density(circuit: &Circuit, theta: &[f64], noise: &NoiseModel) -> Result<DensityMatrix> {
    check(circuit, noise)?;
    circuit.check_params(theta)?;
    let mut rho = DensityMatrix::zero_state(circuit.n_qubits);
    for g in &circuit.gates {
        rho.apply_noisy(g, theta, noise);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Angle;
    use crate::statevector::simulate_statevector;

    #[test]
    fn noiseless_matches_statevector() {
        let mut c = Circuit::new(3);
        c.push(Gate::H(0)).unwrap();
        c.push(Gate::RY(1, Angle::Slot(0))).unwrap();
        c.push(Gate::CX { control: 0, target: 2 }).unwrap();
        c.push(Gate::SX(2)).unwrap();
        c.push(Gate::RZ(1, Angle::Fixed(0.4))).unwrap();
        c.push(Gate::Sdg(0)).unwrap();
        let theta = [0.7];
        let rho = simulate_density(&c, &theta, &NoiseModel::ideal()).unwrap();
        let psi = DensityMatrix::from_state(&simulate_statevector(&c, &theta).unwrap());
        for (a, b) in rho.data.iter().zip(&psi.data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn single_x_decay() {
        let mut c = Circuit::new(1);
        c.push(Gate::X(0)).unwrap();
        let noise = NoiseModel::baseline().without_readout_error();
        let rho = simulate_density(&c, &[], &noise).unwrap();
        assert!((rho.get(1, 1).re - (-35.6e-3f64 / 100.0).exp()).abs() < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherence_decays_with_t2() {
        let mut c = Circuit::new(1);
        c.push(Gate::H(0)).unwrap();
        let noise = NoiseModel::baseline().with_coherence(80.0, 50.0);
        let rho = simulate_density(&c, &[], &noise).unwrap();
        let expected = 0.5 * (-35.6e-3f64 / 50.0).exp();
        // amplitude damping also shifts the populations; the coherence only scales
        assert!((rho.get(0, 1).re - expected).abs() < 1e-14);
    }

    #[test]
    fn limits() {
        let c = Circuit::new(7);
        assert!(simulate_density(&c, &[], &NoiseModel::ideal()).is_err());
        let c = Circuit::new(1);
        assert!(simulate_density(&c, &[], &NoiseModel::baseline().with_coherence(10.0, 30.0)).is_err());
    }
}
