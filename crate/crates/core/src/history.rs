//! Dense-output history segments `u_t(θ) = u(t + θ)`, `θ ∈ [-r, 0]`.
//!
//! A path is a contiguous list of cubic Hermite pieces in coefficient space.
//! Each piece carries its own end derivatives, so derivative jumps at joins
//! (non-compatible initial data at `t = 0`, the scalar shift examples) are
//! representable. A [`HistoryBuffer`] owns a path trimmed exactly to its
//! window; a [`HistoryView`] borrows a window of a longer path, which is how
//! the integrator reads its own live record without copying.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::quadrature::{GAUSS4_NODES, GAUSS4_WEIGHTS};
use crate::spectral::{CoeffVec, SpectralBasis};

/// Sampling density used for every sup over θ.
pub const SAMPLES_PER_SEGMENT: usize = 32;

/// One cubic Hermite piece on `[t0, t1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
}

#[inline]
fn hermite_weights(tau: f64, h: f64) -> [f64; 4] {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    [2.0 * t3 - 3.0 * t2 + 1.0, (t3 - 2.0 * t2 + tau) * h, -2.0 * t3 + 3.0 * t2, (t3 - t2) * h]
}

#[inline]
fn hermite_deriv_weights(tau: f64, h: f64) -> [f64; 4] {
    let t2 = tau * tau;
    [(6.0 * t2 - 6.0 * tau) / h, 3.0 * t2 - 4.0 * tau + 1.0, (6.0 * tau - 6.0 * t2) / h, 3.0 * t2 - 2.0 * tau]
}

impl Segment {
    pub fn new(t0: f64, t1: f64, y0: Vec<f64>, y1: Vec<f64>, d0: Vec<f64>, d1: Vec<f64>) -> Self {
        debug_assert!(t1 > t0);
        debug_assert!(y0.len() == y1.len() && d0.len() == y0.len() && d1.len() == y0.len());
        Self { t0, t1, y0, y1, d0, d1 }
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let w = hermite_weights((s - self.t0) / h, h);
        for (k, o) in out.iter_mut().enumerate() {
            *o = w[0] * self.y0[k] + w[1] * self.d0[k] + w[2] * self.y1[k] + w[3] * self.d1[k];
        }
    }

    pub fn eval_deriv_into(&self, s: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let w = hermite_deriv_weights((s - self.t0) / h, h);
        for (k, o) in out.iter_mut().enumerate() {
            *o = w[0] * self.y0[k] + w[1] * self.d0[k] + w[2] * self.y1[k] + w[3] * self.d1[k];
        }
    }

    fn value_at(&self, s: f64) -> Vec<f64> {
        if s == self.t0 {
            return self.y0.clone();
        }
        if s == self.t1 {
            return self.y1.clone();
        }
        let mut v = vec![0.0; self.dim()];
        self.eval_into(s, &mut v);
        v
    }

    fn deriv_at(&self, s: f64) -> Vec<f64> {
        if s == self.t0 {
            return self.d0.clone();
        }
        if s == self.t1 {
            return self.d1.clone();
        }
        let mut v = vec![0.0; self.dim()];
        self.eval_deriv_into(s, &mut v);
        v
    }

    /// The same cubic, re-expressed on `[a, b]` (exact up to rounding).
    pub fn restrict(&self, a: f64, b: f64) -> Segment {
        Segment::new(a, b, self.value_at(a), self.value_at(b), self.deriv_at(a), self.deriv_at(b))
    }

    /// `∫_a^b Σ_k w_k y_k(s)² ds` over a sub-interval, exact for the cubic.
    pub fn weighted_sq_integral(&self, weights: &[f64], a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut v = vec![0.0; self.dim()];
        let mut acc = 0.0;
        for (x, w) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
            self.eval_into(a + x * (b - a), &mut v);
            acc += w * v.iter().zip(weights).map(|(g, q)| q * g * g).sum::<f64>();
        }
        acc * (b - a)
    }

    fn scale_by_power_sq(basis: &SpectralBasis, alpha: f64, v: &[f64]) -> f64 {
        basis.power_norm_sq(alpha, v)
    }
}

/// Index of the segment containing `s`; joins resolve to the left piece.
fn locate(segments: &[Segment], s: f64) -> usize {
    // first segment with t1 >= s
    let idx = segments.partition_point(|seg| seg.t1 < s);
    idx.min(segments.len() - 1)
}

fn window_eps(start: f64, end: f64) -> f64 {
    1e-12 * (1.0 + start.abs().max(end.abs()))
}

/// Borrowed window `[start, end]` of a contiguous path.
#[derive(Clone, Copy, Debug)]
pub struct HistoryView<'a> {
    segments: &'a [Segment],
    start: f64,
    end: f64,
    /// Running `∫‖A^{-1/2}·‖²` aligned with `segments` (len + 1 entries).
    energy_prefix: Option<&'a [f64]>,
}

impl<'a> HistoryView<'a> {
    /// `segments` must be contiguous and cover `[start, end]`.
    pub fn new(segments: &'a [Segment], start: f64, end: f64) -> Self {
        debug_assert!(!segments.is_empty());
        let first = locate(segments, start + window_eps(start, end));
        let first = if segments[first].t0 > start { first.saturating_sub(1) } else { first };
        let last = locate(segments, end);
        Self { segments: &segments[first..=last], start, end, energy_prefix: None }
    }

    pub(crate) fn with_energy_prefix(
        segments: &'a [Segment],
        prefix: &'a [f64],
        start: f64,
        end: f64,
    ) -> Self {
        let first = locate(segments, start + window_eps(start, end));
        let first = if segments[first].t0 > start { first.saturating_sub(1) } else { first };
        let last = locate(segments, end);
        Self {
            segments: &segments[first..=last],
            start,
            end,
            energy_prefix: Some(&prefix[first..=last + 1]),
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Current time `t` (θ = 0).
    pub fn anchor(&self) -> f64 {
        self.end
    }

    pub fn r(&self) -> f64 {
        self.end - self.start
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn segments(&self) -> &'a [Segment] {
        self.segments
    }

    fn check(&self, s: f64) -> Result<f64> {
        let eps = window_eps(self.start, self.end);
        if s < self.start - eps || s > self.end + eps || !s.is_finite() {
            return Err(SddError::Window { s, start: self.start, end: self.end });
        }
        Ok(s.clamp(self.start, self.end))
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) -> Result<()> {
        let s = self.check(s)?;
        let seg = &self.segments[locate(self.segments, s)];
        if s == seg.t1 {
            out.copy_from_slice(&seg.y1);
        } else if s == seg.t0 {
            out.copy_from_slice(&seg.y0);
        } else {
            seg.eval_into(s, out);
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> Result<CoeffVec> {
        let mut v = vec![0.0; self.dim()];
        self.eval_into(s, &mut v)?;
        Ok(CoeffVec(v))
    }

    /// Derivative; at a join the left piece is used.
    pub fn eval_deriv(&self, s: f64) -> Result<CoeffVec> {
        let s = self.check(s)?;
        let seg = &self.segments[locate(self.segments, s)];
        Ok(CoeffVec(seg.deriv_at(s)))
    }

    /// φ(0).
    pub fn head(&self) -> &'a [f64] {
        let seg = self.segments.last().expect("non-empty");
        debug_assert!(seg.t1 >= self.end);
        if seg.t1 == self.end {
            &seg.y1
        } else {
            // only reachable for views built on a longer path
            &seg.y1
        }
    }

    /// φ(0) as an owned vector, honouring views that end inside a piece.
    pub fn head_value(&self) -> Vec<f64> {
        let seg = self.segments.last().expect("non-empty");
        seg.value_at(self.end)
    }

    /// φ̇(0) (left derivative).
    pub fn head_deriv(&self) -> Vec<f64> {
        let seg = self.segments.last().expect("non-empty");
        seg.deriv_at(self.end)
    }

    /// Visits every sample point `(s, segment)` of the sup grid on `[a, b]`.
    fn for_each_sample(&self, a: f64, b: f64, mut f: impl FnMut(f64, &Segment)) {
        for seg in self.segments {
            let lo = seg.t0.max(a);
            let hi = seg.t1.min(b);
            if hi < lo {
                continue;
            }
            if hi == lo {
                f(lo, seg);
                continue;
            }
            for j in 0..=SAMPLES_PER_SEGMENT {
                let s = lo + (hi - lo) * j as f64 / SAMPLES_PER_SEGMENT as f64;
                let s = if j == SAMPLES_PER_SEGMENT { hi } else { s };
                f(s, seg);
            }
        }
    }

    /// Sampled `max_θ ‖A^alpha φ(θ)‖`.
    pub fn sup_power_norm(&self, basis: &SpectralBasis, alpha: f64) -> f64 {
        let mut v = vec![0.0; self.dim()];
        let mut best = 0.0f64;
        self.for_each_sample(self.start, self.end, |s, seg| {
            seg.eval_into(s, &mut v);
            best = best.max(Segment::scale_by_power_sq(basis, alpha, &v));
        });
        best.sqrt()
    }

    /// Sampled `max_{s ∈ [a,b]} ‖A^alpha φ̇(s)‖`, both one-sided values at joins.
    pub fn sup_power_norm_deriv_on(&self, basis: &SpectralBasis, alpha: f64, a: f64, b: f64) -> f64 {
        let mut v = vec![0.0; self.dim()];
        let mut best = 0.0f64;
        self.for_each_sample(a.max(self.start), b.min(self.end), |s, seg| {
            seg.eval_deriv_into(s, &mut v);
            best = best.max(Segment::scale_by_power_sq(basis, alpha, &v));
        });
        best.sqrt()
    }

    pub fn norm_c_minus_half(&self, basis: &SpectralBasis) -> f64 {
        self.sup_power_norm(basis, -0.5)
    }

    /// `‖A^{1/2} φ(0)‖`.
    pub fn head_energy_norm(&self, basis: &SpectralBasis) -> f64 {
        basis.power_norm(0.5, &self.head_value())
    }

    pub fn norm_h(&self, basis: &SpectralBasis) -> f64 {
        self.norm_c_minus_half(basis) + self.head_energy_norm(basis)
    }

    /// Derivative-sup surrogate of `|||φ|||_[a,b]` (absolute times).
    pub fn lipschitz_seminorm(&self, basis: &SpectralBasis, a: f64, b: f64) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if b < a {
            return Err(SddError::InvalidParameter(format!("empty interval [{a}, {b}]")));
        }
        Ok(self.sup_power_norm_deriv_on(basis, -0.5, a, b))
    }

    /// Lower bound of `|||φ|||_[a,b]` from difference quotients over pairs of
    /// sample points (`n` equispaced points).
    pub fn lipschitz_pair_estimate(&self, basis: &SpectralBasis, a: f64, b: f64, n: usize) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let pts: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let vals: Vec<CoeffVec> = pts.iter().map(|&s| self.eval(s)).collect::<Result<_>>()?;
        let mut best = 0.0f64;
        let mut diff = vec![0.0; self.dim()];
        for i in 0..n {
            for j in i + 1..n {
                for (d, (x, y)) in diff.iter_mut().zip(vals[i].iter().zip(vals[j].iter())) {
                    *d = x - y;
                }
                best = best.max(basis.power_norm(-0.5, &diff) / (pts[j] - pts[i]));
            }
        }
        Ok(best)
    }

    /// `‖φ‖_𝓛` with the derivative-sup seminorm.
    pub fn norm_l(&self, basis: &SpectralBasis) -> f64 {
        self.norm_c_minus_half(basis)
            + self.sup_power_norm_deriv_on(basis, -0.5, self.start, self.end)
            + self.head_energy_norm(basis)
    }

    /// `‖φ‖_X = max‖A^{-1/2}φ‖ + max‖A^{-1/2}φ̇‖ + ‖A^{1/2}φ(0)‖`.
    pub fn norm_x(&self, basis: &SpectralBasis) -> f64 {
        self.norm_c_minus_half(basis)
            + self.sup_power_norm_deriv_on(basis, -0.5, self.start, self.end)
            + self.head_energy_norm(basis)
    }

    /// Scalar Lipschitz norm `max‖A^{-1/2}φ‖ + |||φ|||` (no endpoint term).
    pub fn lip_norm(&self, basis: &SpectralBasis) -> f64 {
        self.norm_c_minus_half(basis) + self.sup_power_norm_deriv_on(basis, -0.5, self.start, self.end)
    }

    /// `∫_window Σ_k w_k φ_k(θ)² dθ`, exact for the Hermite pieces.
    pub fn weighted_sq_integral(&self, weights: &[f64]) -> f64 {
        self.segments
            .iter()
            .map(|seg| seg.weighted_sq_integral(weights, seg.t0.max(self.start), seg.t1.min(self.end)))
            .sum()
    }

    /// `∫_{-r}^0 ‖A^{-1/2}φ(θ)‖² dθ`.
    pub fn neg_half_energy_integral(&self, basis: &SpectralBasis) -> f64 {
        if let Some(prefix) = self.energy_prefix {
            let inv: Vec<f64> = basis.eigenvalues().iter().map(|l| 1.0 / l).collect();
            let n = self.segments.len();
            let first = &self.segments[0];
            let last = &self.segments[n - 1];
            if n == 1 {
                return first.weighted_sq_integral(&inv, self.start, self.end);
            }
            let head = first.weighted_sq_integral(&inv, self.start.max(first.t0), first.t1);
            let tail = last.weighted_sq_integral(&inv, last.t0, self.end.min(last.t1));
            let middle = prefix[n - 1] - prefix[1];
            return head + middle + tail;
        }
        let inv: Vec<f64> = basis.eigenvalues().iter().map(|l| 1.0 / l).collect();
        self.weighted_sq_integral(&inv)
    }

    /// Owned copy trimmed exactly to the window.
    pub fn to_buffer(&self) -> HistoryBuffer {
        let segments = trim(self.segments, self.start, self.end);
        HistoryBuffer { r: self.end - self.start, anchor: self.end, segments }
    }
}

fn trim(segments: &[Segment], start: f64, end: f64) -> Vec<Segment> {
    let eps = window_eps(start, end);
    let mut out = Vec::with_capacity(segments.len());
    for seg in segments {
        let lo = seg.t0.max(start);
        let hi = seg.t1.min(end);
        if hi - lo <= eps {
            continue;
        }
        if lo == seg.t0 && hi == seg.t1 {
            out.push(seg.clone());
        } else {
            out.push(seg.restrict(lo, hi));
        }
    }
    out
}

/// Owned solution segment `u_t` on `[anchor - r, anchor]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryBuffer {
    r: f64,
    anchor: f64,
    segments: Vec<Segment>,
}

impl HistoryBuffer {
    /// Validates that `segments` tile `[anchor - r, anchor]` contiguously.
    pub fn from_segments(r: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(r > 0.0) {
            return Err(SddError::InvalidParameter(format!("delay bound r must be positive, got {r}")));
        }
        let first = segments
            .first()
            .ok_or_else(|| SddError::InvalidParameter("history needs at least one segment".into()))?;
        let last = segments.last().expect("non-empty");
        let m = first.dim();
        let anchor = last.t1;
        let eps = window_eps(anchor - r, anchor);
        if (first.t0 - (anchor - r)).abs() > eps {
            return Err(SddError::InvalidParameter(format!(
                "segments start at {} but the window starts at {}",
                first.t0,
                anchor - r
            )));
        }
        for pair in segments.windows(2) {
            if pair[0].t1 != pair[1].t0 {
                return Err(SddError::InvalidParameter(format!(
                    "gap or overlap between segments at {} / {}",
                    pair[0].t1, pair[1].t0
                )));
            }
        }
        for seg in &segments {
            if seg.dim() != m || seg.d0.len() != m || seg.d1.len() != m || seg.y1.len() != m {
                return Err(SddError::ShapeMismatch { expected: m, got: seg.dim() });
            }
            if !(seg.t1 > seg.t0) {
                return Err(SddError::InvalidParameter("segment with non-positive length".into()));
            }
        }
        Ok(Self { r, anchor, segments })
    }

    /// Constant history `φ(θ) ≡ c` on `[-r, 0]` (anchor 0).
    pub fn constant(r: f64, c: &[f64]) -> Self {
        let z = vec![0.0; c.len()];
        Self {
            r,
            anchor: 0.0,
            segments: vec![Segment::new(-r, 0.0, c.to_vec(), c.to_vec(), z.clone(), z)],
        }
    }

    pub fn view(&self) -> HistoryView<'_> {
        HistoryView { segments: &self.segments, start: self.anchor - self.r, end: self.anchor, energy_prefix: None }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn into_segments(self) -> Vec<Segment> {
        self.segments
    }

    pub fn eval(&self, s: f64) -> Result<CoeffVec> {
        self.view().eval(s)
    }

    pub fn eval_deriv(&self, s: f64) -> Result<CoeffVec> {
        self.view().eval_deriv(s)
    }

    pub fn head_value(&self) -> Vec<f64> {
        self.segments.last().expect("non-empty").y1.clone()
    }

    pub fn head_deriv(&self) -> Vec<f64> {
        self.segments.last().expect("non-empty").d1.clone()
    }

    pub fn norm_c_minus_half(&self, basis: &SpectralBasis) -> f64 {
        self.view().norm_c_minus_half(basis)
    }

    pub fn norm_h(&self, basis: &SpectralBasis) -> f64 {
        self.view().norm_h(basis)
    }

    pub fn norm_l(&self, basis: &SpectralBasis) -> f64 {
        self.view().norm_l(basis)
    }

    pub fn norm_x(&self, basis: &SpectralBasis) -> f64 {
        self.view().norm_x(basis)
    }

    pub fn lip_norm(&self, basis: &SpectralBasis) -> f64 {
        self.view().lip_norm(basis)
    }

    pub fn lipschitz_seminorm(&self, basis: &SpectralBasis, a: f64, b: f64) -> Result<f64> {
        self.view().lipschitz_seminorm(basis, a, b)
    }

    /// `|||φ|||` over the whole window.
    pub fn lipschitz_constant(&self, basis: &SpectralBasis) -> f64 {
        self.view().sup_power_norm_deriv_on(basis, -0.5, self.anchor - self.r, self.anchor)
    }

    /// Re-anchors the same function of θ at a new current time.
    pub fn shifted_to(&self, anchor: f64) -> Self {
        let shift = anchor - self.anchor;
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { t0: s.t0 + shift, t1: s.t1 + shift, ..s.clone() })
            .collect();
        Self { r: self.r, anchor, segments }
    }

    /// Pointwise combination `self(a+θ)·alpha + other(b+θ)·beta` in θ
    /// coordinates, anchored at `self.anchor()`. Knot sets are merged, so
    /// the result is exact for the two Hermite interpolants.
    pub fn combine(&self, alpha: f64, other: &HistoryBuffer, beta: f64) -> Result<HistoryBuffer> {
        if (self.r - other.r).abs() > window_eps(0.0, self.r) {
            return Err(SddError::InvalidParameter(format!(
                "windows differ: r = {} vs {}",
                self.r, other.r
            )));
        }
        if self.dim() != other.dim() {
            return Err(SddError::ShapeMismatch { expected: self.dim(), got: other.dim() });
        }
        let tol = 1e-11 * (1.0 + self.r);
        let mut knots: Vec<f64> = Vec::new();
        knots.push(-self.r);
        for s in &self.segments {
            knots.push(s.t1 - self.anchor);
        }
        for s in &other.segments {
            knots.push(s.t1 - other.anchor);
        }
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        let mut merged: Vec<f64> = Vec::with_capacity(knots.len());
        for k in knots {
            match merged.last() {
                Some(&last) if k - last <= tol => {}
                _ => merged.push(k),
            }
        }
        if let Some(last) = merged.last_mut() {
            *last = 0.0;
        }
        let mut segments = Vec::with_capacity(merged.len());
        for w in merged.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let sa = &self.segments[locate(&self.segments, self.anchor + mid)];
            let sb = &other.segments[locate(&other.segments, other.anchor + mid)];
            let pa = sa.restrict(self.anchor + a, self.anchor + b);
            let pb = sb.restrict(other.anchor + a, other.anchor + b);
            let lin = |x: &[f64], y: &[f64]| -> Vec<f64> {
                x.iter().zip(y).map(|(x, y)| alpha * x + beta * y).collect()
            };
            segments.push(Segment::new(
                self.anchor + a,
                self.anchor + b,
                lin(&pa.y0, &pb.y0),
                lin(&pa.y1, &pb.y1),
                lin(&pa.d0, &pb.d0),
                lin(&pa.d1, &pb.d1),
            ));
        }
        // keep the first knot exactly on the window start
        if let Some(first) = segments.first_mut() {
            first.t0 = self.anchor - self.r;
        }
        Ok(HistoryBuffer { r: self.r, anchor: self.anchor, segments })
    }

    /// Zero-padded (or truncated) to `m` modes.
    pub fn resized(&self, m: usize) -> HistoryBuffer {
        let fit = |v: &[f64]| padded(v, m).into_iter().take(m).collect::<Vec<f64>>();
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(s.t0, s.t1, fit(&s.y0), fit(&s.y1), fit(&s.d0), fit(&s.d1)))
            .collect();
        HistoryBuffer { r: self.r, anchor: self.anchor, segments }
    }

    /// `self - other` in θ coordinates.
    pub fn difference(&self, other: &HistoryBuffer) -> Result<HistoryBuffer> {
        self.combine(1.0, other, -1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.segments.iter().all(|s| {
            s.y0.iter().chain(&s.y1).chain(&s.d0).chain(&s.d1).all(|x| x.is_finite())
        })
    }

    /// Largest jump of the derivative across internal joins (∞-norm).
    pub fn max_derivative_jump(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|p| p[0].d1.iter().zip(&p[1].d0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Adds `β(θ)·v` for a cubic `β` given by its values/derivatives at the
    /// knots (`beta(θ) -> (β, β')`). Exact when β is cubic on every piece.
    pub(crate) fn add_profile(&mut self, v: &[f64], beta: impl Fn(f64) -> (f64, f64)) {
        let anchor = self.anchor;
        for seg in &mut self.segments {
            let (b0, db0) = beta(seg.t0 - anchor);
            let (b1, db1) = beta(seg.t1 - anchor);
            for k in 0..v.len() {
                seg.y0[k] += b0 * v[k];
                seg.d0[k] += db0 * v[k];
                seg.y1[k] += b1 * v[k];
                seg.d1[k] += db1 * v[k];
            }
        }
    }

    /// Inserts a knot at `θ` (no-op when it already is one).
    pub(crate) fn split_at(&mut self, theta: f64) {
        let s = self.anchor + theta;
        let idx = locate(&self.segments, s);
        let seg = &self.segments[idx];
        let eps = window_eps(self.anchor - self.r, self.anchor);
        if s - seg.t0 <= eps || seg.t1 - s <= eps {
            return;
        }
        let left = seg.restrict(seg.t0, s);
        let right = seg.restrict(s, seg.t1);
        self.segments.splice(idx..=idx, [left, right]);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_path_csv(&self.segments, w)
    }
}

/// Term `amplitude · sin(omega θ + phase)` of a trigonometric history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: Vec<f64>,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

/// One tabulated knot `(θ, φ(θ), φ̇(θ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedRow {
    pub theta: f64,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
}

/// Shape of an initial function `[-r, 0] → ℝ^m`. Coefficient vectors shorter
/// than `m` are zero-padded; longer ones are truncated (projection `P_m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialShape {
    /// `φ(θ) = Σ_j θ^j c_j`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    /// `φ(θ) = offset + Σ_j a_j sin(ω_j θ + p_j)`.
    Trig {
        #[serde(default)]
        offset: Vec<f64>,
        terms: Vec<TrigTerm>,
    },
    Tabulated { rows: Vec<TabulatedRow> },
}

fn padded(v: &[f64], m: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(m, 0.0);
    out
}

impl InitialShape {
    /// Value and derivative at θ (not for tabulated shapes).
    fn value_deriv(&self, theta: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; m];
        let mut d = vec![0.0; m];
        match self {
            InitialShape::Polynomial { coeffs } => {
                for (j, c) in coeffs.iter().enumerate() {
                    let p = theta.powi(j as i32);
                    let dp = if j == 0 { 0.0 } else { j as f64 * theta.powi(j as i32 - 1) };
                    for (k, ck) in c.iter().take(m).enumerate() {
                        y[k] += p * ck;
                        d[k] += dp * ck;
                    }
                }
            }
            InitialShape::Trig { offset, terms } => {
                for (k, o) in offset.iter().take(m).enumerate() {
                    y[k] += o;
                }
                for t in terms {
                    let (s, c) = (t.omega * theta + t.phase).sin_cos();
                    for (k, a) in t.amplitude.iter().take(m).enumerate() {
                        y[k] += a * s;
                        d[k] += a * t.omega * c;
                    }
                }
            }
            InitialShape::Tabulated { .. } => unreachable!("tabulated shapes are rendered from rows"),
        }
        (y, d)
    }

    /// Renders the shape as a Hermite buffer on `[-r, 0]` with `n_segments`
    /// equal pieces (tabulated shapes use their own rows as knots).
    pub fn render(&self, r: f64, m: usize, n_segments: usize) -> Result<HistoryBuffer> {
        if !(r > 0.0) {
            return Err(SddError::InvalidParameter(format!("delay bound r must be positive, got {r}")));
        }
        if let InitialShape::Tabulated { rows } = self {
            return render_tabulated(rows, r, m);
        }
        if n_segments == 0 {
            return Err(SddError::InvalidParameter("initial function needs at least one segment".into()));
        }
        let knots: Vec<f64> = (0..=n_segments)
            .map(|i| if i == n_segments { 0.0 } else { -r + r * i as f64 / n_segments as f64 })
            .collect();
        let data: Vec<(Vec<f64>, Vec<f64>)> = knots.iter().map(|&t| self.value_deriv(t, m)).collect();
        let segments = knots
            .windows(2)
            .zip(data.windows(2))
            .map(|(t, d)| Segment::new(t[0], t[1], d[0].0.clone(), d[1].0.clone(), d[0].1.clone(), d[1].1.clone()))
            .collect();
        let buf = HistoryBuffer::from_segments(r, segments)?;
        if !buf.is_finite() {
            return Err(SddError::InvalidParameter("initial function is not finite".into()));
        }
        Ok(buf)
    }
}

fn render_tabulated(rows: &[TabulatedRow], r: f64, m: usize) -> Result<HistoryBuffer> {
    if rows.len() < 2 {
        return Err(SddError::InvalidParameter("tabulated history needs at least two rows".into()));
    }
    let eps = window_eps(-r, 0.0);
    if (rows[0].theta + r).abs() > eps || rows[rows.len() - 1].theta.abs() > eps {
        return Err(SddError::InvalidParameter(format!(
            "tabulated history must span [-{r}, 0], got [{}, {}]",
            rows[0].theta,
            rows[rows.len() - 1].theta
        )));
    }
    for p in rows.windows(2) {
        if p[1].theta == p[0].theta {
            return Err(SddError::NotC1(format!("repeated knot θ = {} (jump)", p[0].theta)));
        }
        if p[1].theta < p[0].theta {
            return Err(SddError::InvalidParameter("tabulated knots must increase".into()));
        }
    }
    let n = rows.len();
    let segments = rows
        .windows(2)
        .enumerate()
        .map(|(i, p)| {
            let t0 = if i == 0 { -r } else { p[0].theta };
            let t1 = if i + 2 == n { 0.0 } else { p[1].theta };
            Segment::new(
                t0,
                t1,
                padded(&p[0].value, m),
                padded(&p[1].value, m),
                padded(&p[0].derivative, m),
                padded(&p[1].derivative, m),
            )
        })
        .collect();
    HistoryBuffer::from_segments(r, segments)
}

/// Shape plus the window it lives on and its knot density.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialFunction {
    pub shape: InitialShape,
    pub r: f64,
    pub n_segments: usize,
}

impl InitialFunction {
    pub fn new(shape: InitialShape, r: f64) -> Self {
        Self { shape, r, n_segments: 64 }
    }

    pub fn render(&self, m: usize) -> Result<HistoryBuffer> {
        self.shape.render(self.r, m, self.n_segments)
    }
}

/// Writes one row `t, g_1..g_m, ġ_1..ġ_m` per knot. A join whose two sides
/// disagree is written as two rows with the same `t` (left side first).
pub fn write_path_csv<W: Write>(segments: &[Segment], mut w: W) -> Result<()> {
    let m = segments.first().map(|s| s.dim()).unwrap_or(0);
    let mut header = String::from("t");
    for k in 1..=m {
        header.push_str(&format!(",g_{k}"));
    }
    for k in 1..=m {
        header.push_str(&format!(",dg_{k}"));
    }
    writeln!(w, "{header}")?;
    let row = |w: &mut W, t: f64, y: &[f64], d: &[f64]| -> Result<()> {
        let mut line = format!("{t:e}");
        for x in y.iter().chain(d) {
            line.push_str(&format!(",{x:e}"));
        }
        writeln!(w, "{line}")?;
        Ok(())
    };
    for (i, seg) in segments.iter().enumerate() {
        if i == 0 {
            row(&mut w, seg.t0, &seg.y0, &seg.d0)?;
        } else {
            let prev = &segments[i - 1];
            if prev.y1 != seg.y0 || prev.d1 != seg.d0 {
                row(&mut w, seg.t0, &seg.y0, &seg.d0)?;
            }
        }
        let next_same = segments.get(i + 1).map(|n| n.y0 == seg.y1 && n.d0 == seg.d1).unwrap_or(false);
        if next_same {
            row(&mut w, seg.t1, &seg.y1, &seg.d1)?;
        } else {
            row(&mut w, seg.t1, &seg.y1, &seg.d1)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_path_csv`] back into Hermite pieces.
pub fn read_path_csv<R: BufRead>(r: R) -> Result<Vec<Segment>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| SddError::Csv("empty file".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || (cols.len() - 1) % 2 != 0 {
        return Err(SddError::Csv(format!("unexpected header '{header}'")));
    }
    let m = (cols.len() - 1) / 2;
    let mut rows: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SddError::Csv(format!("line {}: {e}", ln + 2)))?;
        if vals.len() != 2 * m + 1 {
            return Err(SddError::Csv(format!("line {}: expected {} columns, got {}", ln + 2, 2 * m + 1, vals.len())));
        }
        rows.push((vals[0], vals[1..=m].to_vec(), vals[m + 1..].to_vec()));
    }
    let mut segments = Vec::new();
    for p in rows.windows(2) {
        if p[1].0 == p[0].0 {
            continue;
        }
        if p[1].0 < p[0].0 {
            return Err(SddError::Csv("time column must be non-decreasing".into()));
        }
        segments.push(Segment::new(p[0].0, p[1].0, p[0].1.clone(), p[1].1.clone(), p[0].2.clone(), p[1].2.clone()));
    }
    if segments.is_empty() {
        return Err(SddError::Csv("need at least two distinct time rows".into()));
    }
    Ok(segments)
}

/// Snapshot of `[t - r, t]` from a contiguous path.
pub fn snapshot_of(segments: &[Segment], t: f64, r: f64) -> Result<HistoryBuffer> {
    let first = segments.first().ok_or_else(|| SddError::InvalidParameter("empty path".into()))?;
    let last = segments.last().expect("non-empty");
    let eps = window_eps(t - r, t);
    if t - r < first.t0 - eps || t > last.t1 + eps {
        return Err(SddError::Window { s: t, start: first.t0 + r, end: last.t1 });
    }
    let view = HistoryView::new(segments, (t - r).max(first.t0), t.min(last.t1));
    let mut buf = view.to_buffer();
    buf.r = r;
    buf.anchor = t;
    if let Some(f) = buf.segments.first_mut() {
        if (f.t0 - (t - r)).abs() <= eps {
            f.t0 = t - r;
        }
    }
    if let Some(l) = buf.segments.last_mut() {
        if (l.t1 - t).abs() <= eps {
            l.t1 = t;
        }
    }
    Ok(buf)
}
