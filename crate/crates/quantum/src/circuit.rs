use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Rotation angle: a variational slot or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Slot(usize),
    Fixed(f64),
}

impl Angle {
    pub fn value(&self, theta: &[f64]) -> f64 {
        match *self {
            Angle::Slot(i) => theta[i],
            Angle::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    I(usize),
    X(usize),
    SX(usize),
    H(usize),
    /// S dagger, `diag(1, -i)`.
    Sdg(usize),
    RY(usize, Angle),
    RZ(usize, Angle),
    CX { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::I(q) | Gate::X(q) | Gate::SX(q) | Gate::H(q) | Gate::Sdg(q) | Gate::RY(q, _) | Gate::RZ(q, _) => {
                (q, None)
            }
            Gate::CX { control, target } => (control, Some(target)),
        }
    }

    pub fn angle(&self) -> Option<Angle> {
        match *self {
            Gate::RY(_, a) | Gate::RZ(_, a) => Some(a),
            _ => None,
        }
    }
}

/// Ordered gate list on `n_qubits` qubits with `n_params` angle slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            n_params: 0,
            gates: Vec::new(),
        }
    }

    /// Appends a gate; slots beyond the current count extend it.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let (a, b) = gate.qubits();
        if a >= self.n_qubits || b.is_some_and(|b| b >= self.n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "gate {gate:?} outside a {}-qubit register",
                self.n_qubits
            )));
        }
        if b == Some(a) {
            return Err(Error::InvalidParameter(format!("gate {gate:?} uses one qubit twice")));
        }
        if let Some(Angle::Slot(i)) = gate.angle() {
            self.n_params = self.n_params.max(i + 1);
        }
        if let Some(Angle::Fixed(v)) = gate.angle() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite fixed angle".into()));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Every slot below `n_params` is used at least once.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.n_params];
        for g in &self.gates {
            if let Some(Angle::Slot(i)) = g.angle() {
                used[i] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidParameter(format!("parameter slot {i} is never used")));
        }
        Ok(())
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a circuit with {} slots",
                theta.len(),
                self.n_params
            )));
        }
        Ok(())
    }

    pub fn count_cx(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::CX { .. })).count()
    }

    /// Same circuit with every slot occurrence given its own slot; returns
    /// the owning slot of each new one.
    pub(crate) fn expand_slots(&self) -> (Circuit, Vec<usize>) {
        let mut out = Circuit::new(self.n_qubits);
        let mut owner = Vec::new();
        for g in &self.gates {
            let g = match *g {
                Gate::RY(q, Angle::Slot(i)) => {
                    owner.push(i);
                    Gate::RY(q, Angle::Slot(owner.len() - 1))
                }
                Gate::RZ(q, Angle::Slot(i)) => {
                    owner.push(i);
                    Gate::RZ(q, Angle::Slot(owner.len() - 1))
                }
                other => other,
            };
            out.push(g).expect("copied from a valid circuit");
        }
        (out, owner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzKind {
    /// Two-qubit, one-parameter H2 circuit: X(0), RY(1), CX(1, 0).
    H2Minimal,
    /// Blocks of per-qubit RY rotations and a linear CX cascade, followed by
    /// a final RY layer.
    RyCnot,
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h2_minimal" => Ok(AnsatzKind::H2Minimal),
            "ry_cnot" => Ok(AnsatzKind::RyCnot),
            _ => Err(Error::InvalidParameter(format!("unknown ansatz {s:?}"))),
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzKind::H2Minimal => "h2_minimal",
            AnsatzKind::RyCnot => "ry_cnot",
        })
    }
}

pub fn build_ansatz(kind: AnsatzKind, n_qubits: usize, depth: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    match kind {
        AnsatzKind::H2Minimal => {
            if n_qubits != 2 {
                return Err(Error::InvalidParameter(format!(
                    "h2_minimal needs 2 qubits, got {n_qubits}"
                )));
            }
            c.push(Gate::X(0))?;
            c.push(Gate::RY(1, Angle::Slot(0)))?;
            c.push(Gate::CX { control: 1, target: 0 })?;
        }
        AnsatzKind::RyCnot => {
            if depth < 1 || n_qubits < 1 {
                return Err(Error::InvalidParameter(format!(
                    "ry_cnot needs depth >= 1 and at least one qubit, got depth {depth} on {n_qubits} qubits"
                )));
            }
            let mut slot = 0;
            let mut ry_layer = |c: &mut Circuit| -> Result<()> {
                for q in 0..n_qubits {
                    c.push(Gate::RY(q, Angle::Slot(slot)))?;
                    slot += 1;
                }
                Ok(())
            };
            for _ in 0..depth {
                ry_layer(&mut c)?;
                for q in 0..n_qubits.saturating_sub(1) {
                    c.push(Gate::CX { control: q, target: q + 1 })?;
                }
            }
            ry_layer(&mut c)?;
        }
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ansatz_counts() {
        let c = build_ansatz(AnsatzKind::RyCnot, 9, 24).unwrap();
        assert_eq!(c.n_params, 225);
        assert_eq!(c.count_cx(), 192);
        let h2 = build_ansatz(AnsatzKind::H2Minimal, 2, 0).unwrap();
        assert_eq!((h2.n_params, h2.count_cx()), (1, 1));
        assert!(build_ansatz(AnsatzKind::H2Minimal, 3, 0).is_err());
        assert!(build_ansatz(AnsatzKind::RyCnot, 2, 0).is_err());
        assert!("uccsd".parse::<AnsatzKind>().is_err());
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c.push(Gate::CX { control: 1, target: 1 }).is_err());
        c.push(Gate::RY(0, Angle::Slot(2))).unwrap();
        assert_eq!(c.n_params, 3);
        assert!(c.validate().is_err());
        assert!(c.check_params(&[0.0; 2]).is_err());
    }

    #[test]
    fn slot_expansion() {
        let mut c = Circuit::new(1);
        c.push(Gate::RY(0, Angle::Slot(0))).unwrap();
        c.push(Gate::RZ(0, Angle::Fixed(0.3))).unwrap();
        c.push(Gate::RY(0, Angle::Slot(0))).unwrap();
        let (e, owner) = c.expand_slots();
        assert_eq!(e.n_params, 2);
        assert_eq!(owner, vec![0, 0]);
    }
}
