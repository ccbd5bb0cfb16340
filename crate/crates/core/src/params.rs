//! Model parameters. Frequencies are in units of the cavity amplitude decay
//! rate `kappa`, times in units of `1/kappa`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `g/kappa` for which the weak-coupling (fast cavity) formulas are used.
pub const FAST_CAVITY_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Central cavity frequency; the linear modes sit at `omega_c +- delta`.
    pub omega_c: f64,
    /// Half splitting between the H and V modes.
    pub delta: f64,
    /// Trion resonance frequency.
    pub omega_0: f64,
    /// Light-matter coupling.
    pub g: f64,
    /// Cavity amplitude decay rate; photons escape at `2 kappa`.
    pub kappa: f64,
    /// Delta-pulse pump amplitude of the sigma+ component.
    pub eps_plus: Complex64,
    /// Delta-pulse pump amplitude of the sigma- component.
    pub eps_minus: Complex64,
    /// Maximum Fock occupation kept per circular mode.
    pub photon_cutoff: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_c: 0.0,
            delta: 1.0,
            omega_0: 0.0,
            g: 0.15,
            kappa: 1.0,
            eps_plus: Complex64::new(0.0, 0.0),
            eps_minus: Complex64::new(0.0, 0.0),
            photon_cutoff: 2,
        }
    }
}

impl SystemParams {
    /// Parameters with `omega_c = 0`, `kappa = 1` and the trion detuned by
    /// `detuning` from the cavity centre.
    pub fn new(g: f64, delta: f64, detuning: f64) -> Self {
        Self {
            g,
            delta,
            omega_0: detuning,
            ..Self::default()
        }
    }

    /// The parameter set of the reference time-domain run: `g = 0.15`,
    /// `delta = 1`, trion at the cavity centre, sigma+ pump of area `pi kappa / g`.
    pub fn reference_run() -> Self {
        let g = 0.15;
        Self {
            eps_plus: Complex64::new(std::f64::consts::PI / g, 0.0),
            ..Self::new(g, 1.0, 0.0)
        }
    }

    pub fn with_pump(mut self, eps_plus: Complex64, eps_minus: Complex64) -> Self {
        self.eps_plus = eps_plus;
        self.eps_minus = eps_minus;
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.photon_cutoff = cutoff;
        self
    }

    /// Trion detuning from the cavity centre, `omega_0 - omega_c`.
    pub fn detuning(&self) -> f64 {
        self.omega_0 - self.omega_c
    }

    pub fn omega_h(&self) -> f64 {
        self.omega_c + self.delta
    }

    pub fn omega_v(&self) -> f64 {
        self.omega_c - self.delta
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_c, self.delta, self.omega_0, self.g, self.kappa]
            .iter()
            .all(|x| x.is_finite())
            && self.eps_plus.is_finite()
            && self.eps_minus.is_finite();
        if !finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be >= 0, got {}", self.g)));
        }
        if self.photon_cutoff < 1 {
            return Err(Error::InvalidParams("photon_cutoff must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_fast_cavity(&self) -> bool {
        self.g / self.kappa <= FAST_CAVITY_RATIO
    }

    /// Validates and additionally refuses parameters outside the fast-cavity regime.
    pub fn require_fast_cavity(&self) -> Result<()> {
        self.validate()?;
        if !self.is_fast_cavity() {
            return Err(Error::RegimeViolation {
                ratio: self.g / self.kappa,
                threshold: FAST_CAVITY_RATIO,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(SystemParams { kappa: 0.0, ..Default::default() }.validate().is_err());
        assert!(SystemParams { g: -0.1, ..Default::default() }.validate().is_err());
        assert!(SystemParams::default().with_cutoff(0).validate().is_err());
        assert!(SystemParams { delta: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }

    #[test]
    fn fast_cavity_threshold() {
        assert!(SystemParams::new(0.25, 1.0, 0.0).is_fast_cavity());
        let strong = SystemParams::new(0.3, 1.0, 0.0);
        assert!(!strong.is_fast_cavity());
        assert!(matches!(strong.require_fast_cavity(), Err(Error::RegimeViolation { .. })));
    }
}
