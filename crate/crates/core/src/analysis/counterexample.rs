//! Scalar shift examples showing that the translation `h ↦ v_h` is not
//! continuous in the Lipschitz norms when `v` has a derivative jump.
//!
//! `v = 0` on `[−r, 0]`, `v(t) = t` after. Then `‖v_h − v_0‖_Lip = 1 + h` and
//! the derivative part alone stays at 1, so neither goes to zero. The
//! control `v(t) = t²` is C¹ and both quantities vanish as `h → 0`.

use serde::Serialize;

use super::report::EstimateReport;
use crate::error::Result;
use crate::history::{snapshot_of, Segment};
use crate::spectral::{DomainSpec, SpectralBasis};

/// Shifts used for the extrapolation to `h = 0`.
pub const SHIFTS: [f64; 3] = [0.1, 0.01, 0.001];

/// Tolerance on the full Lipschitz-norm limit (the `h` term is linear, so
/// the extrapolation is in fact much tighter).
pub const LIP_LIMIT_TOL: f64 = 1e-2;
/// Tolerance on the derivative limit and on the smooth control.
pub const LIMIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftProfile {
    /// `v(t) = t` for `t > 0` (kink at 0).
    Ramp,
    /// `v(t) = t²` for `t > 0` (C¹).
    Parabola,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftNorm {
    /// `max|φ| + |||φ|||`.
    Lip,
    /// Derivative sup only.
    Seminorm,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftSeries {
    pub profile: ShiftProfile,
    pub norm: ShiftNorm,
    pub samples: Vec<(f64, f64)>,
    pub limit: f64,
}

fn scalar_basis() -> SpectralBasis {
    // L = π gives λ₁ = 1, so A^{±1/2} is the identity on the one mode.
    SpectralBasis::new(DomainSpec::new(std::f64::consts::PI, 2).expect("valid"), 1).expect("valid")
}

fn path(profile: ShiftProfile, r: f64, t_end: f64) -> Vec<Segment> {
    let zero = Segment::new(-r, 0.0, vec![0.0], vec![0.0], vec![0.0], vec![0.0]);
    let tail = match profile {
        ShiftProfile::Ramp => Segment::new(0.0, t_end, vec![0.0], vec![t_end], vec![1.0], vec![1.0]),
        ShiftProfile::Parabola => {
            Segment::new(0.0, t_end, vec![0.0], vec![t_end * t_end], vec![0.0], vec![2.0 * t_end])
        }
    };
    vec![zero, tail]
}

/// Polynomial extrapolation of `(x_i, y_i)` to `x = 0` (Neville).
pub fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|q| q.1).collect();
    let n = p.len();
    for k in 1..n {
        for i in 0..n - k {
            let (xi, xk) = (points[i].0, points[i + k].0);
            p[i] = (xi * p[i + 1] - xk * p[i]) / (xi - xk);
        }
    }
    p[0]
}

/// `‖v_h − v_0‖` for each shift and the extrapolated limit.
pub fn shift_series(profile: ShiftProfile, norm: ShiftNorm, r: f64, shifts: &[f64]) -> Result<ShiftSeries> {
    let basis = scalar_basis();
    let t_end = 2.0 * shifts.iter().cloned().fold(1.0, f64::max);
    let segs = path(profile, r, t_end);
    let v0 = snapshot_of(&segs, 0.0, r)?;
    let samples = shifts
        .iter()
        .map(|&h| {
            let diff = snapshot_of(&segs, h, r)?.difference(&v0)?;
            let value = match norm {
                ShiftNorm::Lip => diff.lip_norm(&basis),
                ShiftNorm::Seminorm => diff.lipschitz_constant(&basis),
            };
            Ok((h, value))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = neville_at_zero(&samples);
    Ok(ShiftSeries { profile, norm, samples, limit })
}

fn limit_report(id: &str, norm: ShiftNorm, r: f64, tol: f64) -> Result<EstimateReport> {
    let ramp = shift_series(ShiftProfile::Ramp, norm, r, &SHIFTS)?;
    let control = shift_series(ShiftProfile::Parabola, norm, r, &SHIFTS)?;
    // Expected: the ramp limit equals 1, the control limit is 0.
    let report = EstimateReport::new(id, 1.0, ramp.limit, tol)
        .with("expected_limit", 1.0)
        .with("samples", &ramp.samples)
        .with("control_samples", &control.samples)
        .with("control_limit", control.limit);
    if (ramp.limit - 1.0).abs() > tol {
        Ok(report.fail("extrapolated limit differs from 1"))
    } else if control.limit.abs() > LIMIT_TOL {
        Ok(report.fail("smooth control does not vanish"))
    } else {
        Ok(report)
    }
}

/// Full Lipschitz norm of `v_h − v_0` as `h → 0`.
pub fn remark4(r: f64) -> Result<EstimateReport> {
    limit_report("remark4", ShiftNorm::Lip, r, LIP_LIMIT_TOL)
}

/// Derivative seminorm of `v_h − v_0` as `h → 0`.
pub fn remark5(r: f64) -> Result<EstimateReport> {
    limit_report("remark5", ShiftNorm::Seminorm, r, LIMIT_TOL)
}
