use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::history::HistoryView;
use crate::spectral::SpectralBasis;

/// Delay functional `η: H → [0, r]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    /// `η ≡ tau0`.
    Constant { tau0: f64 },
    /// `η(φ) = r·s(κ(∫‖A^{-1/2}φ‖² + q‖A^{1/2}φ(0)‖²))`, `s(z) = z/(1+z)`.
    HistoryEnergy {
        kappa: f64,
        #[serde(default)]
        q: f64,
    },
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec::HistoryEnergy { kappa: 1.0, q: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayFunctional {
    spec: DelaySpec,
    r: f64,
    l_eta: f64,
}

impl DelayFunctional {
    pub fn new(spec: DelaySpec, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(SddError::InvalidParameter(format!("delay bound r must be positive, got {r}")));
        }
        let l_eta = match spec {
            DelaySpec::Constant { tau0 } => {
                if !(0.0..=r).contains(&tau0) {
                    return Err(SddError::InvalidParameter(format!("constant delay {tau0} outside [0, {r}]")));
                }
                0.0
            }
            DelaySpec::HistoryEnergy { kappa, q } => {
                if !(kappa > 0.0 && kappa.is_finite()) || !(q >= 0.0 && q.is_finite()) {
                    return Err(SddError::InvalidParameter(format!(
                        "history-energy delay needs kappa > 0 and q >= 0, got {kappa}, {q}"
                    )));
                }
                // η = r·s(κX²) with X the (semi)norm on the right of the
                // Lipschitz condition; dη/dX = 2rκX/(1+κX²)², maximal at
                // κX² = 1/3, giving (3√3/8)·r·√κ.
                3.0 * 3f64.sqrt() / 8.0 * r * kappa.sqrt()
            }
        };
        Ok(Self { spec, r, l_eta })
    }

    pub fn spec(&self) -> &DelaySpec {
        &self.spec
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn l_eta(&self) -> f64 {
        self.l_eta
    }

    pub fn q(&self) -> f64 {
        match self.spec {
            DelaySpec::Constant { .. } => 0.0,
            DelaySpec::HistoryEnergy { q, .. } => q,
        }
    }

    /// `Some(τ₀)` for a constant delay.
    pub fn constant_value(&self) -> Option<f64> {
        match self.spec {
            DelaySpec::Constant { tau0 } => Some(tau0),
            DelaySpec::HistoryEnergy { .. } => None,
        }
    }

    pub fn eval(&self, h: &HistoryView<'_>, basis: &SpectralBasis) -> f64 {
        match self.spec {
            DelaySpec::Constant { tau0 } => tau0,
            DelaySpec::HistoryEnergy { kappa, q } => {
                let mut z = h.neg_half_energy_integral(basis);
                if q > 0.0 {
                    z += q * basis.power_norm_sq(0.5, &h.head_value());
                }
                let z = kappa * z;
                (self.r * z / (1.0 + z)).clamp(0.0, self.r)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryBuffer;
    use crate::spectral::DomainSpec;
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        let basis = SpectralBasis::new(DomainSpec::new(PI, 8).unwrap(), 2).unwrap();
        let h = HistoryBuffer::constant(1.0, &[1.0, 0.0]);
        let c = DelayFunctional::new(DelaySpec::Constant { tau0: 0.3 }, 1.0).unwrap();
        assert_eq!(c.eval(&h.view(), &basis), 0.3);
        let e = DelayFunctional::new(DelaySpec::HistoryEnergy { kappa: 1.0, q: 0.0 }, 1.0).unwrap();
        assert!((e.eval(&h.view(), &basis) - 0.5).abs() < 1e-14);
        let z = HistoryBuffer::constant(1.0, &[0.0, 0.0]);
        assert_eq!(e.eval(&z.view(), &basis), 0.0);
    }

    #[test]
    fn lipschitz_constant_matches_slope_maximum() {
        let d = DelayFunctional::new(DelaySpec::HistoryEnergy { kappa: 4.0, q: 0.0 }, 2.0).unwrap();
        let slope = |x: f64| 2.0 * 2.0 * 4.0 * x / (1.0 + 4.0 * x * x).powi(2);
        let sampled = (1..20000).map(|i| slope(i as f64 * 1e-4)).fold(0.0, f64::max);
        assert!((sampled - d.l_eta()).abs() < 1e-6 && sampled <= d.l_eta());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(DelayFunctional::new(DelaySpec::Constant { tau0: 2.0 }, 1.0).is_err());
        assert!(DelayFunctional::new(DelaySpec::HistoryEnergy { kappa: 0.0, q: 0.0 }, 1.0).is_err());
    }
}
