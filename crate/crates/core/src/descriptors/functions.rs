use std::fmt;

use super::cutoff::CutoffSpec;
use crate::data::Element;
use crate::{Error, Result};

/// Radial function `sum_j exp(-eta (R_ij - R_s)^2) f_c(R_ij)` over neighbors
/// of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSF {
    /// Gaussian width, 1/Bohr^2.
    pub eta: f64,
    /// Gaussian center, Bohr.
    pub r_s: f64,
    pub cutoff: CutoffSpec,
    pub neighbor: Element,
}

impl RadialSF {
    pub fn new(eta: f64, r_s: f64, cutoff: CutoffSpec, neighbor: Element) -> Result<Self> {
        let sf = RadialSF { eta, r_s, cutoff, neighbor };
        sf.validate()?;
        Ok(sf)
    }

    pub fn validate(&self) -> Result<()> {
        // R_s == r_c is allowed: the shifted parameter grid starts there
        if !(self.eta > 0.0 && self.eta.is_finite()) || !(0.0..=self.cutoff.r_c).contains(&self.r_s) {
            return Err(Error::InvalidParameter(format!(
                "radial function needs eta > 0 and 0 <= r_s <= r_c: {self}"
            )));
        }
        Ok(())
    }
}

/// Angular function
/// `2^(1-zeta) sum_j sum_(k != j) (1 + lambda cos theta_ijk)^zeta
///  exp(-eta (R_ij^2 + R_ik^2 + R_jk^2)) f_c(R_ij) f_c(R_ik) f_c(R_jk)`
/// over ordered neighbor pairs whose elements match `neighbors` as an
/// unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSF {
    pub eta: f64,
    /// +1 or -1.
    pub lambda: f64,
    pub zeta: f64,
    pub cutoff: CutoffSpec,
    /// Stored sorted.
    pub neighbors: (Element, Element),
}

impl AngularSF {
    pub fn new(
        eta: f64,
        lambda: f64,
        zeta: f64,
        cutoff: CutoffSpec,
        a: Element,
        b: Element,
    ) -> Result<Self> {
        let neighbors = if a <= b { (a, b) } else { (b, a) };
        let sf = AngularSF { eta, lambda, zeta, cutoff, neighbors };
        sf.validate()?;
        Ok(sf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite())
            || (self.lambda != 1.0 && self.lambda != -1.0)
            || !(self.zeta >= 1.0 && self.zeta.is_finite())
            || self.neighbors.0 > self.neighbors.1
        {
            return Err(Error::InvalidParameter(format!(
                "angular function needs eta > 0, lambda = +-1, zeta >= 1: {self}"
            )));
        }
        Ok(())
    }

    pub(crate) fn matches(&self, a: &Element, b: &Element) -> bool {
        let (x, y) = &self.neighbors;
        (a == x && b == y) || (a == y && b == x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymmetryFunction {
    Radial(RadialSF),
    Angular(AngularSF),
}

impl SymmetryFunction {
    pub fn cutoff(&self) -> CutoffSpec {
        match self {
            SymmetryFunction::Radial(sf) => sf.cutoff,
            SymmetryFunction::Angular(sf) => sf.cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymmetryFunction::Radial(sf) => sf.validate(),
            SymmetryFunction::Angular(sf) => sf.validate(),
        }
    }
}

impl fmt::Display for RadialSF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G2 {} eta={} r_s={} r_c={}", self.neighbor, self.eta, self.r_s, self.cutoff.r_c)
    }
}

impl fmt::Display for AngularSF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "G3 {}-{} eta={} lambda={} zeta={} r_c={}",
            self.neighbors.0, self.neighbors.1, self.eta, self.lambda, self.zeta, self.cutoff.r_c
        )
    }
}
