use std::fmt;
use std::str::FromStr;

use crate::circuit::{Circuit, Gate};
use crate::pauli::{PauliHamiltonian, C64};
use crate::{Error, Result};

/// Largest register for statevector simulation.
pub const MAX_STATEVECTOR_QUBITS: usize = 20;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// 2x2 matrix of a single-qubit gate, row-major.
pub(crate) fn single_qubit_matrix(gate: &Gate, theta: &[f64]) -> Option<[C64; 4]> {
    let r = |x: f64| C64::new(x, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match gate {
        Gate::I(_) => [ONE, ZERO, ZERO, ONE],
        Gate::X(_) => [ZERO, ONE, ONE, ZERO],
        Gate::SX(_) => {
            let a = C64::new(0.5, 0.5);
            let b = C64::new(0.5, -0.5);
            [a, b, b, a]
        }
        Gate::H(_) => [r(h), r(h), r(h), r(-h)],
        Gate::Sdg(_) => [ONE, ZERO, ZERO, C64::new(0.0, -1.0)],
        Gate::RY(_, a) => {
            let (s, c) = (a.value(theta) / 2.0).sin_cos();
            [r(c), r(-s), r(s), r(c)]
        }
        Gate::RZ(_, a) => {
            let t = a.value(theta) / 2.0;
            [C64::from_polar(1.0, -t), ZERO, ZERO, C64::from_polar(1.0, t)]
        }
        Gate::CX { .. } => return None,
    })
}

/// Applies `m` to qubit `q` of a vector with the given element stride:
/// indices `base + stride * b` for basis index `b`.
#[inline]
pub(crate) fn apply_1q(v: &mut [C64], n_qubits: usize, q: usize, m: &[C64; 4], offset: usize, stride: usize) {
    let bit = 1usize << q;
    for b in 0..(1usize << n_qubits) {
        if b & bit != 0 {
            continue;
        }
        let i0 = offset + stride * b;
        let i1 = offset + stride * (b | bit);
        let (a0, a1) = (v[i0], v[i1]);
        v[i0] = m[0] * a0 + m[1] * a1;
        v[i1] = m[2] * a0 + m[3] * a1;
    }
}

#[inline]
pub(crate) fn apply_cx(v: &mut [C64], n_qubits: usize, control: usize, target: usize, offset: usize, stride: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for b in 0..(1usize << n_qubits) {
        if b & cb != 0 && b & tb == 0 {
            v.swap(offset + stride * b, offset + stride * (b | tb));
        }
    }
}

pub(crate) fn apply_gate(state: &mut [C64], n_qubits: usize, gate: &Gate, theta: &[f64]) {
    match gate {
        Gate::CX { control, target } => apply_cx(state, n_qubits, *control, *target, 0, 1),
        g => {
            let m = single_qubit_matrix(g, theta).expect("single-qubit gate");
            apply_1q(state, n_qubits, g.qubits().0, &m, 0, 1);
        }
    }
}

/// `|0...0>` evolved by the circuit.
pub fn simulate_statevector(circuit: &Circuit, theta: &[f64]) -> Result<Vec<C64>> {
    if circuit.n_qubits > MAX_STATEVECTOR_QUBITS {
        return Err(Error::TooManyQubits {
            what: "statevector simulation",
            max: MAX_STATEVECTOR_QUBITS,
            n: circuit.n_qubits,
        });
    }
    circuit.check_params(theta)?;
    let mut state = vec![ZERO; 1 << circuit.n_qubits];
    state[0] = ONE;
    for g in &circuit.gates {
        apply_gate(&mut state, circuit.n_qubits, g, theta);
    }
    Ok(state)
}

/// `<psi|H|psi>`.
pub fn expectation(state: &[C64], h: &PauliHamiltonian) -> Result<f64> {
    h.check_state(state)?;
    Ok(h.terms.iter().map(|(c, p)| c * p.expectation(state)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// `sum_k c_k^2 (1 - <P_k>^2)`
    PerTerm,
    /// `(sum_k |c_k|)^2`, state independent.
    UpperBound,
}

impl FromStr for VarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_term" => Ok(VarianceMode::PerTerm),
            "upper_bound" => Ok(VarianceMode::UpperBound),
            _ => Err(Error::InvalidParameter(format!("unknown variance mode {s:?}"))),
        }
    }
}

impl fmt::Display for VarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceMode::PerTerm => "per_term",
            VarianceMode::UpperBound => "upper_bound",
        })
    }
}

/// Single-shot variance of the energy estimator summed over measured terms
/// (identity terms carry no variance).
pub fn variance(state: &[C64], h: &PauliHamiltonian, mode: VarianceMode) -> Result<f64> {
    h.check_state(state)?;
    Ok(match mode {
        VarianceMode::PerTerm => h
            .measured_terms()
            .map(|(c, p)| {
                let e = p.expectation(state);
                c * c * (1.0 - e * e).max(0.0)
            })
            .sum(),
        VarianceMode::UpperBound => h.measured_terms().map(|(c, _)| c.abs()).sum::<f64>().powi(2),
    })
}
