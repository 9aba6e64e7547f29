use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};

/// Pointwise nonlinearity `b: ℝ → ℝ`, bounded and Lipschitz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Nonlinearity {
    /// `p·w·e^{−|w|}`; the odd extension keeps `b` bounded for `w < 0`.
    Nicholson { p: f64 },
    /// `cap·tanh(gain·s/cap)`.
    SaturatingLinear { gain: f64, cap: f64 },
    /// `b ≡ value`.
    Constant { value: f64 },
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Nonlinearity::Nicholson { p: 2.0 }
    }
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Nonlinearity::Nicholson { p } => p > 0.0 && p.is_finite(),
            Nonlinearity::SaturatingLinear { gain, cap } => {
                gain >= 0.0 && gain.is_finite() && cap > 0.0 && cap.is_finite()
            }
            Nonlinearity::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SddError::InvalidParameter(format!("invalid nonlinearity parameters {self:?}")))
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Nicholson { p } => p * s * (-s.abs()).exp(),
            Nonlinearity::SaturatingLinear { gain, cap } => cap * (gain * s / cap).tanh(),
            Nonlinearity::Constant { value } => value,
        }
    }

    /// `sup |b|`.
    pub fn m_b(&self) -> f64 {
        match *self {
            Nonlinearity::Nicholson { p } => p / std::f64::consts::E,
            Nonlinearity::SaturatingLinear { cap, .. } => cap,
            Nonlinearity::Constant { value } => value.abs(),
        }
    }

    /// Lipschitz constant of `b`.
    pub fn l_b(&self) -> f64 {
        match *self {
            // |b'(w)| = p|1 − |w||e^{−|w|} peaks at w = 0
            Nonlinearity::Nicholson { p } => p,
            Nonlinearity::SaturatingLinear { gain, .. } => gain,
            Nonlinearity::Constant { .. } => 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Nonlinearity::Constant { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::Nicholson { p: 2.0 },
            Nonlinearity::Nicholson { p: 0.7 },
            Nonlinearity::SaturatingLinear { gain: 1.5, cap: 0.4 },
            Nonlinearity::Constant { value: -0.3 },
        ]
    }

    #[test]
    fn nicholson_bound_is_attained() {
        let b = Nonlinearity::Nicholson { p: 2.0 };
        assert!((b.eval(1.0) - b.m_b()).abs() < 1e-15);
        assert!((b.eval(-1.0) + b.m_b()).abs() < 1e-15);
        assert_eq!(b.eval(0.0), 0.0);
    }

    proptest! {
        #[test]
        fn bounded_and_lipschitz(s in -50.0f64..50.0, t in -50.0f64..50.0) {
            for b in all() {
                prop_assert!(b.eval(s).abs() <= b.m_b() * (1.0 + 1e-12));
                prop_assert!((b.eval(s) - b.eval(t)).abs() <= b.l_b() * (s - t).abs() * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Nonlinearity::Nicholson { p: -1.0 }.validate().is_err());
        assert!(Nonlinearity::SaturatingLinear { gain: 1.0, cap: 0.0 }.validate().is_err());
        assert!(Nonlinearity::Constant { value: f64::NAN }.validate().is_err());
    }
}
