use nalgebra::DMatrix;

use crate::pauli::{PauliHamiltonian, C64};
use crate::{Error, Result};

/// Largest register handled by dense diagonalization.
pub const MAX_EXACT_QUBITS: usize = 12;

/// Dense matrix `sum_k c_k P_k`.
pub fn dense_matrix(h: &PauliHamiltonian) -> Result<DMatrix<C64>> {
    check_size(h)?;
    let dim = h.dim();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for (c, p) in &h.terms {
        let x = p.x as usize;
        for b in 0..dim {
            m[(b ^ x, b)] += p.phase(b) * *c;
        }
    }
    Ok(m)
}

fn check_size(h: &PauliHamiltonian) -> Result<()> {
    if h.n_qubits > MAX_EXACT_QUBITS {
        return Err(Error::TooManyQubits {
            what: "exact diagonalization",
            max: MAX_EXACT_QUBITS,
            n: h.n_qubits,
        });
    }
    Ok(())
}

/// Lowest eigenvalue and a normalized eigenvector.
pub fn exact_ground_state(h: &PauliHamiltonian) -> Result<(f64, Vec<C64>)> {
    check_size(h)?;
    let dim = h.dim();
    // an even number of Y factors keeps every matrix element real
    if h.terms.iter().all(|(_, p)| p.n_y() % 2 == 0) {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (c, p) in &h.terms {
            let x = p.x as usize;
            for b in 0..dim {
                m[(b ^ x, b)] += p.phase(b).re * c;
            }
        }
        let eig = m.symmetric_eigen();
        let i = eig.eigenvalues.argmin().0;
        let v = eig.eigenvectors.column(i).iter().map(|&a| C64::new(a, 0.0)).collect();
        return Ok((eig.eigenvalues[i], v));
    }
    let eig = dense_matrix(h)?.symmetric_eigen();
    let i = eig.eigenvalues.argmin().0;
    Ok((eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_ground_states() {
        let z = PauliHamiltonian::parse_str("1.0 Z").unwrap();
        let (e, v) = exact_ground_state(&z).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        assert!((v[1].norm() - 1.0).abs() < 1e-14);

        let x = PauliHamiltonian::parse_str("1.0 X").unwrap();
        let (e, v) = exact_ground_state(&x).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        // (|0> - |1>)/sqrt2 up to a global phase
        assert!((v[0] + v[1]).norm() < 1e-14 && (v[0].norm() - 0.5f64.sqrt()).abs() < 1e-14);

        let mix = PauliHamiltonian::parse_str("0.5 Z\n0.5 X").unwrap();
        assert!((exact_ground_state(&mix).unwrap().0 + 0.5f64.sqrt()).abs() < 1e-14);

        let y = PauliHamiltonian::parse_str("0.3 Y\n0.4 Z").unwrap();
        assert!((exact_ground_state(&y).unwrap().0 + 0.5).abs() < 1e-14);
    }

    #[test]
    fn size_ceiling() {
        let big = PauliHamiltonian::parse_str(&format!("1.0 {}", "Z".repeat(13))).unwrap();
        assert!(matches!(exact_ground_state(&big), Err(Error::TooManyQubits { .. })));
    }
}
