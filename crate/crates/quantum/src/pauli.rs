use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest register a Pauli string can address.
pub const MAX_PAULI_QUBITS: usize = 64;

/// Tensor product of single-qubit Paulis as X/Z bit masks; `Y` sets both
/// bits. Character `q` of the text form acts on qubit `q`, which is bit `q`
/// of a basis-state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString { n_qubits, x: 0, z: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `P|b> = phase * |b ^ x>`.
    #[inline]
    pub fn phase(&self, b: usize) -> C64 {
        let sign = if ((b as u64) & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        match self.n_y() % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }

    /// Character for qubit `q`.
    pub fn op(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    pub fn expectation(&self, state: &[C64]) -> f64 {
        let x = self.x as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (b, amp) in state.iter().enumerate() {
            acc += state[b ^ x].conj() * self.phase(b) * amp;
        }
        acc.re
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n == 0 || n > MAX_PAULI_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "Pauli string length must be 1..={MAX_PAULI_QUBITS}, got {n}"
            )));
        }
        let mut p = PauliString::identity(n);
        for (q, c) in s.chars().enumerate() {
            let bit = 1u64 << q;
            match c {
                'I' => {}
                'X' => p.x |= bit,
                'Y' => {
                    p.x |= bit;
                    p.z |= bit;
                }
                'Z' => p.z |= bit,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "bad Pauli character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.op(q))?;
        }
        Ok(())
    }
}

/// `H = sum_k c_k P_k` with real coefficients in Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    pub n_qubits: usize,
    /// Unique strings in first-seen order.
    pub terms: Vec<(f64, PauliString)>,
}

impl PauliHamiltonian {
    /// Merges duplicate strings by adding their coefficients.
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut out: Vec<(f64, PauliString)> = Vec::new();
        let mut index: BTreeMap<PauliString, usize> = BTreeMap::new();
        for (c, p) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite coefficient for {p}")));
            }
            if p.n_qubits != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "term {p} has {} qubits, Hamiltonian has {n_qubits}",
                    p.n_qubits
                )));
            }
            match index.get(&p) {
                Some(&i) => out[i].0 += c,
                None => {
                    index.insert(p, out.len());
                    out.push((c, p));
                }
            }
        }
        Ok(PauliHamiltonian { n_qubits, terms: out })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        parse_with_name(text, "<hamiltonian>")
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Coefficient of the identity string (0 if absent).
    pub fn constant(&self) -> f64 {
        self.terms.iter().filter(|(_, p)| p.is_identity()).map(|(c, _)| c).sum()
    }

    /// Terms that need a measurement.
    pub fn measured_terms(&self) -> impl Iterator<Item = &(f64, PauliString)> {
        self.terms.iter().filter(|(_, p)| !p.is_identity())
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|(c, p)| format!("{c:e} {p}\n")).collect()
    }

    pub(crate) fn check_state(&self, state: &[C64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {}-qubit Hamiltonian",
                state.len(),
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// Reads `<coefficient> <pauli_string>` lines; `#` starts a comment.
pub fn parse_hamiltonian(path: impl AsRef<Path>) -> Result<PauliHamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_name(&text, &path.display().to_string())
}

fn parse_with_name(text: &str, name: &str) -> Result<PauliHamiltonian> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut terms = Vec::new();
    let mut n_qubits = None;
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(lineno, format!("expected '<coefficient> <pauli>', got {line:?}")));
        }
        let c: f64 = fields[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad coefficient {:?}", fields[0])))?;
        if !c.is_finite() {
            return Err(err(lineno, "non-finite coefficient".into()));
        }
        let p: PauliString = fields[1].parse().map_err(|e: Error| err(lineno, e.to_string()))?;
        match n_qubits {
            None => n_qubits = Some(p.n_qubits),
            Some(n) if n != p.n_qubits => {
                return Err(err(lineno, format!("string {} has {} qubits, expected {n}", fields[1], p.n_qubits)))
            }
            _ => {}
        }
        terms.push((c, p));
    }
    let n = n_qubits.ok_or_else(|| err(0, "no terms".into()))?;
    PauliHamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, b: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        v[b] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn parse_and_merge() {
        let h = PauliHamiltonian::parse_str("# test\n0.5 ZI\n0.5 ZI\n-0.2 II # constant\n").unwrap();
        assert_eq!(h.terms.len(), 2);
        assert_eq!(h.terms[0], (1.0, "ZI".parse().unwrap()));
        assert_eq!(h.constant(), -0.2);
        assert_eq!(PauliHamiltonian::parse_str("1.0 ZX").unwrap().terms.len(), 1);
        assert!(matches!(PauliHamiltonian::parse_str("1.0 ZA"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(PauliHamiltonian::parse_str("1.0 Z\n1.0 ZZ"), Err(Error::Parse { line: 2, .. })));
        assert!(PauliHamiltonian::parse_str("abc ZZ").is_err());
        assert!(PauliHamiltonian::parse_str("").is_err());
        let h = PauliHamiltonian::parse_str("0.25 XYZI\n").unwrap();
        assert_eq!(PauliHamiltonian::parse_str(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn qubit_order_is_little_endian() {
        // Z on qubit 0 sees bit 0 of the index
        let z0: PauliString = "ZI".parse().unwrap();
        assert_eq!(z0.expectation(&basis(2, 0b01)), -1.0);
        assert_eq!(z0.expectation(&basis(2, 0b10)), 1.0);
        let x1: PauliString = "IX".parse().unwrap();
        assert_eq!(x1.x, 0b10);
    }

    #[test]
    fn y_action() {
        let y: PauliString = "Y".parse().unwrap();
        // Y|0> = i|1>, Y|1> = -i|0>
        assert_eq!(y.phase(0), C64::new(0.0, 1.0));
        assert_eq!(y.phase(1), C64::new(0.0, -1.0));
        let s = 0.5f64.sqrt();
        let plus_i = vec![C64::new(s, 0.0), C64::new(0.0, s)];
        assert!((y.expectation(&plus_i) - 1.0).abs() < 1e-15);
    }
}
