use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::circuit::Gate;
use crate::{Error, Result};

/// Assignment error of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutError {
    /// Probability of reading 0 when the qubit is in |1>.
    pub p0_given_1: f64,
    /// Probability of reading 1 when the qubit is in |0>.
    pub p1_given_0: f64,
}

impl ReadoutError {
    pub const NONE: ReadoutError = ReadoutError {
        p0_given_1: 0.0,
        p1_given_0: 0.0,
    };

    /// `[[p(0|0), p(0|1)], [p(1|0), p(1|1)]]`, columns indexed by the true
    /// bit.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [1.0 - self.p1_given_0, self.p0_given_1],
            [self.p1_given_0, 1.0 - self.p0_given_1],
        ]
    }

    fn valid(&self) -> bool {
        (0.0..=1.0).contains(&self.p0_given_1) && (0.0..=1.0).contains(&self.p1_given_0)
    }
}

/// Thermal relaxation/dephasing per gate plus readout assignment errors.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub t1_us: f64,
    pub t2_us: f64,
    pub gate_time_1q_ns: f64,
    pub gate_time_cx_ns: f64,
    /// Default readout error for every qubit.
    pub readout: ReadoutError,
    /// Qubit-specific readout errors overriding the default.
    pub readout_per_qubit: BTreeMap<usize, ReadoutError>,
}

impl NoiseModel {
    /// Reference device: T1 = T2 = 100 us, 35.6 ns single-qubit pulses,
    /// 430 ns CX, readout errors 4 % (1 read as 0) and 2 % (0 read as 1).
    pub fn baseline() -> Self {
        NoiseModel {
            t1_us: 100.0,
            t2_us: 100.0,
            gate_time_1q_ns: 35.6,
            gate_time_cx_ns: 430.0,
            readout: ReadoutError {
                p0_given_1: 0.04,
                p1_given_0: 0.02,
            },
            readout_per_qubit: BTreeMap::new(),
        }
    }

    /// No decoherence and perfect readout.
    pub fn ideal() -> Self {
        NoiseModel {
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            readout: ReadoutError::NONE,
            ..Self::baseline()
        }
    }

    pub fn with_coherence(mut self, t1_us: f64, t2_us: f64) -> Self {
        self.t1_us = t1_us;
        self.t2_us = t2_us;
        self
    }

    pub fn without_readout_error(mut self) -> Self {
        self.readout = ReadoutError::NONE;
        self.readout_per_qubit.clear();
        self
    }

    /// Multiplies every readout error rate by `factor`.
    pub fn scale_readout(mut self, factor: f64) -> Self {
        let scale = |r: &mut ReadoutError| {
            r.p0_given_1 *= factor;
            r.p1_given_0 *= factor;
        };
        scale(&mut self.readout);
        self.readout_per_qubit.values_mut().for_each(scale);
        self
    }

    pub fn readout_for(&self, qubit: usize) -> ReadoutError {
        self.readout_per_qubit.get(&qubit).copied().unwrap_or(self.readout)
    }

    pub fn has_readout_error(&self) -> bool {
        let nonzero = |r: &ReadoutError| r.p0_given_1 != 0.0 || r.p1_given_0 != 0.0;
        nonzero(&self.readout) || self.readout_per_qubit.values().any(nonzero)
    }

    pub fn has_decoherence(&self) -> bool {
        self.t1_us.is_finite() || self.t2_us.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_us > 0.0 && self.t2_us > 0.0) {
            return Err(Error::InvalidParameter("T1 and T2 must be positive".into()));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::InvalidParameter(format!(
                "T2 = {} us exceeds 2 T1 = {} us",
                self.t2_us,
                2.0 * self.t1_us
            )));
        }
        if !(self.gate_time_1q_ns >= 0.0 && self.gate_time_cx_ns >= 0.0)
            || !self.gate_time_1q_ns.is_finite()
            || !self.gate_time_cx_ns.is_finite()
        {
            return Err(Error::InvalidParameter("gate times must be finite and non-negative".into()));
        }
        if !self.readout.valid() || !self.readout_per_qubit.values().all(ReadoutError::valid) {
            return Err(Error::InvalidParameter("readout probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Duration in ns. RY is two SX pulses; RZ and S dagger are virtual.
    pub fn gate_duration_ns(&self, gate: &Gate) -> f64 {
        match gate {
            Gate::I(_) | Gate::X(_) | Gate::SX(_) | Gate::H(_) => self.gate_time_1q_ns,
            Gate::RY(..) => 2.0 * self.gate_time_1q_ns,
            Gate::RZ(..) | Gate::Sdg(_) => 0.0,
            Gate::CX { .. } => self.gate_time_cx_ns,
        }
    }

    /// Amplitude-damping `gamma = 1 - exp(-t/T1)` and extra pure-dephasing
    /// `lambda = 1 - exp(-2t/T_phi)` with `1/T_phi = 1/T2 - 1/(2 T1)`, so that
    /// coherences decay as `exp(-t/T2)` overall.
    pub fn damping(&self, duration_ns: f64) -> (f64, f64) {
        let t_us = duration_ns * 1e-3;
        let gamma = -(-t_us / self.t1_us).exp_m1();
        let rate_phi = (1.0 / self.t2_us - 0.5 / self.t1_us).max(0.0);
        let lambda = -(-2.0 * t_us * rate_phi).exp_m1();
        (gamma, lambda)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "t1_us = {}", self.t1_us).unwrap();
        writeln!(out, "t2_us = {}", self.t2_us).unwrap();
        writeln!(out, "gate_time_1q_ns = {}", self.gate_time_1q_ns).unwrap();
        writeln!(out, "gate_time_cx_ns = {}", self.gate_time_cx_ns).unwrap();
        writeln!(out, "readout_p0_given_1 = {}", self.readout.p0_given_1).unwrap();
        writeln!(out, "readout_p1_given_0 = {}", self.readout.p1_given_0).unwrap();
        for (q, r) in &self.readout_per_qubit {
            writeln!(out, "readout_p0_given_1.{q} = {}", r.p0_given_1).unwrap();
            writeln!(out, "readout_p1_given_0.{q} = {}", r.p1_given_0).unwrap();
        }
        out
    }

    /// `key = value` lines; keys not given keep their baseline values.
    /// Per-qubit readout rates use a `.<qubit>` suffix.
    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse_named(text, "<noise model>")
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_named(&text, &path.display().to_string())
    }

    fn parse_named(text: &str, name: &str) -> Result<Self> {
        let mut model = NoiseModel::baseline();
        for (k, raw) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                path: name.to_string(),
                line: k + 1,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let v: f64 = value.parse().map_err(|_| err(format!("bad number {value:?}")))?;
            let (base, qubit) = match key.split_once('.') {
                Some((b, q)) => (b, Some(q.parse::<usize>().map_err(|_| err(format!("bad qubit in {key:?}")))?)),
                None => (key, None),
            };
            fn target(m: &mut NoiseModel, qubit: Option<usize>) -> &mut ReadoutError {
                let default = m.readout;
                match qubit {
                    Some(q) => m.readout_per_qubit.entry(q).or_insert(default),
                    None => &mut m.readout,
                }
            }
            match (base, qubit) {
                ("t1_us", None) => model.t1_us = v,
                ("t2_us", None) => model.t2_us = v,
                ("gate_time_1q_ns", None) => model.gate_time_1q_ns = v,
                ("gate_time_cx_ns", None) => model.gate_time_cx_ns = v,
                ("readout_p0_given_1", _) => target(&mut model, qubit).p0_given_1 = v,
                ("readout_p1_given_0", _) => target(&mut model, qubit).p1_given_0 = v,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_rates() {
        let m = NoiseModel::baseline();
        let (g, l) = m.damping(35.6);
        assert!((g - (1.0 - (-35.6e-3f64 / 100.0).exp())).abs() < 1e-15);
        // T2 = T1: only amplitude damping dephases... plus 1/(2T1) extra
        let expected_l = 1.0 - (-2.0 * 35.6e-3 * (1.0 / 100.0 - 0.5 / 100.0f64)).exp();
        assert!((l - expected_l).abs() < 1e-15);
        assert_eq!(NoiseModel::ideal().damping(430.0), (0.0, 0.0));
        let two_t1 = NoiseModel::baseline().with_coherence(100.0, 200.0);
        assert_eq!(two_t1.damping(430.0).1, 0.0);
    }

    #[test]
    fn validation_and_text() {
        assert!(NoiseModel::baseline().with_coherence(100.0, 201.0).validate().is_err());
        let mut m = NoiseModel::baseline().scale_readout(0.01);
        assert!((m.readout.p0_given_1 - 4e-4).abs() < 1e-18);
        m.readout_per_qubit.insert(1, ReadoutError { p0_given_1: 0.1, p1_given_0: 0.05 });
        let back = NoiseModel::parse_str(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(NoiseModel::parse_str("t3_us = 4").is_err());
        assert!(NoiseModel::parse_str("t1_us 4").is_err());
        assert!(NoiseModel::parse_str("readout_p0_given_1 = 1.5").is_err());
        let inf = NoiseModel::parse_str("t1_us = inf\nt2_us = inf").unwrap();
        assert!(!inf.has_decoherence());
    }
}
