//! Unit conversion between the on-disk atomic units and eV/Å.

/// CODATA 2018 Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// CODATA 2018 Bohr radius in Å.
pub const BOHR_ANGSTROM: f64 = 0.529_177_210_903;

pub const MEV_PER_HARTREE: f64 = HARTREE_EV * 1000.0;

/// Unit system of energies, lengths and forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnitSystem {
    /// Hartree, Bohr, Hartree/Bohr.
    #[default]
    Atomic,
    /// eV, Å, eV/Å.
    ElectronVoltAngstrom,
}

impl UnitSystem {
    /// Multiplier taking an energy in `self` to Hartree.
    pub fn energy_to_hartree(self) -> f64 {
        match self {
            UnitSystem::Atomic => 1.0,
            UnitSystem::ElectronVoltAngstrom => 1.0 / HARTREE_EV,
        }
    }

    /// Multiplier taking a length in `self` to Bohr.
    pub fn length_to_bohr(self) -> f64 {
        match self {
            UnitSystem::Atomic => 1.0,
            UnitSystem::ElectronVoltAngstrom => 1.0 / BOHR_ANGSTROM,
        }
    }

    pub fn force_to_atomic(self) -> f64 {
        self.energy_to_hartree() / self.length_to_bohr()
    }
}

impl std::str::FromStr for UnitSystem {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "atomic" | "hartree-bohr" => Ok(UnitSystem::Atomic),
            "ev-angstrom" | "ev" => Ok(UnitSystem::ElectronVoltAngstrom),
            other => Err(crate::Error::InvalidParameter(format!(
                "unknown unit system {other:?} (expected atomic or ev-angstrom)"
            ))),
        }
    }
}

pub fn mev_to_hartree(mev: f64) -> f64 {
    mev / MEV_PER_HARTREE
}

pub fn hartree_to_mev(ha: f64) -> f64 {
    ha * MEV_PER_HARTREE
}

/// eV/Å to Hartree/Bohr.
pub fn ev_per_angstrom_to_atomic(f: f64) -> f64 {
    f * UnitSystem::ElectronVoltAngstrom.force_to_atomic()
}

/// Hartree/Bohr to eV/Å.
pub fn atomic_to_ev_per_angstrom(f: f64) -> f64 {
    f / UnitSystem::ElectronVoltAngstrom.force_to_atomic()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((hartree_to_mev(mev_to_hartree(10.0)) - 10.0).abs() < 1e-12);
        // 1 Ha/Bohr is about 51.42 eV/Å
        let one = ev_per_angstrom_to_atomic(51.422_067_476);
        assert!((one - 1.0).abs() < 1e-9);
    }
}
