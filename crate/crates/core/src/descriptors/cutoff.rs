use crate::{Error, Result};

/// Cutoff radius, Bohr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r_c: f64,
}

impl CutoffSpec {
    pub fn new(r_c: f64) -> Result<Self> {
        if r_c > 0.0 && r_c.is_finite() {
            Ok(CutoffSpec { r_c })
        } else {
            Err(Error::InvalidParameter(format!("cutoff radius must be positive, got {r_c}")))
        }
    }

    /// `tanh^3(1 - r/r_c)` inside the cutoff, zero outside.
    pub fn value(&self, r: f64) -> f64 {
        if r >= self.r_c {
            return 0.0;
        }
        (1.0 - r / self.r_c).tanh().powi(3)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.value_and_derivative(r).1
    }

    pub fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        if r >= self.r_c {
            return (0.0, 0.0);
        }
        let t = (1.0 - r / self.r_c).tanh();
        let t2 = t * t;
        (t2 * t, -3.0 * t2 * (1.0 - t2) / self.r_c)
    }
}

pub fn cutoff(r: f64, spec: &CutoffSpec) -> f64 {
    spec.value(r)
}

pub fn cutoff_derivative(r: f64, spec: &CutoffSpec) -> f64 {
    spec.derivative(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let c = CutoffSpec::new(6.0).unwrap();
        assert_eq!(c.value(6.0), 0.0);
        assert_eq!(c.value_and_derivative(6.6), (0.0, 0.0));
        // tanh(1)^3 evaluated independently from the exponential form
        let t1 = (1.0 - (-2.0f64).exp()) / (1.0 + (-2.0f64).exp());
        assert!((c.value(0.0) - t1.powi(3)).abs() < 1e-15);
        assert!((c.value(0.0) - 0.441_744).abs() < 1e-6);
        assert!(CutoffSpec::new(0.0).is_err());
        assert!(CutoffSpec::new(-1.0).is_err());
    }

    #[test]
    fn smooth_at_cutoff() {
        let c = CutoffSpec::new(12.0).unwrap();
        let r = 12.0 * (1.0 - 1e-8);
        let (v, d) = c.value_and_derivative(r);
        assert!(v.abs() < 1e-20 && d.abs() < 1e-14, "{v} {d}");
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = CutoffSpec::new(5.0).unwrap();
        for &r in &[0.1, 1.0, 2.5, 4.0, 4.9] {
            let h = 1e-6;
            let fd = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            assert!((fd - c.derivative(r)).abs() < 1e-9);
        }
    }
}
