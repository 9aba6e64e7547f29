//! Exponential time stepping of the Galerkin delay system
//! `ġ_k = −(λ_k + d) g_k + ⟨F₁(u_t), e_k⟩`.
//!
//! Each step is an exponential trapezoidal rule: the linear part is
//! integrated exactly and the forcing is interpolated linearly between the
//! step ends,
//!
//! `g(t+h) = e^{−z} g(t) + h [φ₁(z) F(t) + φ₂(z) (F(t+h) − F(t))]`, `z = (λ_k+d)h`.
//!
//! `F(t+h)` depends on the segment being built (through η and, for short
//! delays, through the delayed point), so it is found by fixed-point
//! iteration started from linear extrapolation. Constant forcing is
//! integrated exactly; for smooth forcing the rule is second order.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::history::{snapshot_of, write_path_csv, HistoryBuffer, HistoryView, InitialFunction, Segment};
use crate::rhs::SddRightHandSide;
use crate::spectral::{CoeffVec, SpectralBasis};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    /// Integration length; the run covers `[t0, t0 + t_final]`.
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_max_iter")]
    pub fp_max_iter: usize,
}

fn default_fp_tol() -> f64 {
    1e-10
}

fn default_fp_max_iter() -> usize {
    50
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self { dt, t_final, fp_tol: default_fp_tol(), fp_max_iter: default_fp_max_iter() }
    }

    pub fn with_final_time(self, t_final: f64) -> Self {
        Self { t_final, ..self }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    /// Checks the step-size contract against the delay functional.
    pub fn validate(&self, rhs: &SddRightHandSide) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SddError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SddError::InvalidParameter(format!("T must be non-negative, got {}", self.t_final)));
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(SddError::InvalidParameter("fp_tol must be positive and fp_max_iter at least 1".into()));
        }
        let r = rhs.r();
        let constant_ok = rhs.delay().constant_value().map(|tau| tau >= self.dt).unwrap_or(false);
        if self.dt > r && !constant_ok {
            return Err(SddError::InvalidParameter(format!(
                "dt = {} exceeds the delay bound r = {r}; only a constant delay τ₀ ≥ dt allows this",
                self.dt
            )));
        }
        Ok(())
    }

    /// Step nodes `t0 + i·dt`, with a shortened last step.
    fn grid(&self, t0: f64) -> Vec<f64> {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(0.0) as usize;
        let end = t0 + self.t_final;
        let mut ts: Vec<f64> = (0..n).map(|i| t0 + i as f64 * self.dt).collect();
        if self.t_final > 0.0 || ts.is_empty() {
            ts.push(end);
        }
        if ts.len() >= 2 && ts[ts.len() - 1] <= ts[ts.len() - 2] {
            ts.remove(ts.len() - 2);
        }
        ts
    }
}

/// `φ₁(z) = (1 − e^{−z})/z`, `φ₂(z) = (z − 1 + e^{−z})/z²`.
pub fn phi_functions(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        let phi1 = 1.0 - z / 2.0 + z2 / 6.0 - z2 * z / 24.0 + z2 * z2 / 120.0 - z2 * z2 * z / 720.0;
        let phi2 = 0.5 - z / 6.0 + z2 / 24.0 - z2 * z / 120.0 + z2 * z2 / 720.0 - z2 * z2 * z / 5040.0;
        return (phi1, phi2);
    }
    let em = (-z).exp_m1();
    (-em / z, (z + em) / (z * z))
}

/// Per-mode propagators for one step length.
struct Propagator {
    h: f64,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl Propagator {
    fn new(rates: &[f64], h: f64) -> Self {
        let mut decay = Vec::with_capacity(rates.len());
        let mut phi1 = Vec::with_capacity(rates.len());
        let mut phi2 = Vec::with_capacity(rates.len());
        for &a in rates {
            let z = a * h;
            let (p1, p2) = phi_functions(z);
            decay.push((-z).exp());
            phi1.push(p1);
            phi2.push(p2);
        }
        Self { h, decay, phi1, phi2 }
    }
}

/// Solution path on `[t0 − r, T]` with its step grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    basis: SpectralBasis,
    r: f64,
    segments: Vec<Segment>,
    /// Running `∫‖A^{-1/2}u‖²` over `segments` (one more entry than segments).
    prefix: Vec<f64>,
    inv_eigen: Vec<f64>,
    initial_segments: usize,
    times: Vec<f64>,
    fp_iterations: Vec<usize>,
}

impl Trajectory {
    fn new(basis: &SpectralBasis, initial: &HistoryBuffer) -> Self {
        let inv_eigen: Vec<f64> = basis.eigenvalues().iter().map(|l| 1.0 / l).collect();
        let mut t = Self {
            basis: basis.clone(),
            r: initial.r(),
            segments: Vec::new(),
            prefix: vec![0.0],
            inv_eigen,
            initial_segments: initial.segments().len(),
            times: vec![initial.anchor()],
            fp_iterations: Vec::new(),
        };
        for s in initial.segments() {
            t.push(s.clone());
        }
        t
    }

    fn push(&mut self, seg: Segment) {
        let e = seg.weighted_sq_integral(&self.inv_eigen, seg.t0, seg.t1);
        let last = *self.prefix.last().expect("prefix is never empty");
        self.prefix.push(last + e);
        self.segments.push(seg);
    }

    fn pop(&mut self) {
        self.segments.pop();
        self.prefix.pop();
    }

    fn live_view(&self, t: f64) -> HistoryView<'_> {
        HistoryView::with_energy_prefix(&self.segments, &self.prefix, t - self.r, t)
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    /// Step nodes `t_0, …, t_N`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// All pieces, including the initial history.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Pieces produced by the integrator (one per step).
    pub fn step_segments(&self) -> &[Segment] {
        &self.segments[self.initial_segments..]
    }

    /// `g(t_i)`.
    pub fn state(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.segments[self.initial_segments - 1].y1
        } else {
            &self.segments[self.initial_segments + i - 1].y1
        }
    }

    /// `ġ(t_i)` from the equation (right derivative at `t_0`).
    pub fn derivative(&self, i: usize) -> &[f64] {
        let steps = self.step_segments();
        if steps.is_empty() {
            return &self.segments[self.initial_segments - 1].d1;
        }
        if i < steps.len() {
            &steps[i].d0
        } else {
            &steps[i - 1].d1
        }
    }

    pub fn final_state(&self) -> CoeffVec {
        CoeffVec(self.segments.last().expect("non-empty").y1.clone())
    }

    /// Fixed-point iterations used by each step.
    pub fn fp_iterations(&self) -> &[usize] {
        &self.fp_iterations
    }

    /// `u(t)` for `t ∈ [t0 − r, T]`.
    pub fn eval(&self, t: f64) -> Result<CoeffVec> {
        HistoryView::new(&self.segments, self.segments[0].t0, self.final_time()).eval(t)
    }

    pub fn eval_deriv(&self, t: f64) -> Result<CoeffVec> {
        HistoryView::new(&self.segments, self.segments[0].t0, self.final_time()).eval_deriv(t)
    }

    /// `u_t` as an owned buffer (the semigroup `S_t` applied to the data).
    pub fn snapshot(&self, t: f64) -> Result<HistoryBuffer> {
        snapshot_of(&self.segments, t, self.r)
    }

    /// Borrowed `u_t`.
    pub fn view(&self, t: f64) -> Result<HistoryView<'_>> {
        let start = self.segments[0].t0;
        let eps = 1e-12 * (1.0 + t.abs());
        if t - self.r < start - eps || t > self.final_time() + eps {
            return Err(SddError::Window { s: t, start: start + self.r, end: self.final_time() });
        }
        Ok(self.live_view(t.min(self.final_time())))
    }

    /// `|||u|||_{[a,b]}` over the whole path (derivative sup).
    pub fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        HistoryView::new(&self.segments, self.segments[0].t0, self.final_time())
            .sup_power_norm_deriv_on(&self.basis, -0.5, a, b)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        write_path_csv(&self.segments, w)
    }
}

/// `‖A^{-1/2}(φ̇(0) + (A + d)φ(0) − F₁(φ))‖`.
pub fn check_manifold(h: &HistoryView<'_>, rhs: &SddRightHandSide) -> Result<f64> {
    let mut field = vec![0.0; rhs.order()];
    rhs.vector_field_into(h, &mut field)?;
    let resid: Vec<f64> = h.head_deriv().iter().zip(&field).map(|(a, b)| a - b).collect();
    Ok(rhs.basis().power_norm(-0.5, &resid))
}

/// Width of the endpoint blend used by [`make_manifold_initial`].
pub fn blend_width(r: f64) -> f64 {
    (r / 8.0).min(0.1)
}

/// Renders `shape` and corrects `φ̇` near `θ = 0` by a C¹ cubic blend so
/// that `φ̇(0) = F₁(φ) − (A + d)φ(0)`.
pub fn make_manifold_initial(shape: &InitialFunction, rhs: &SddRightHandSide) -> Result<HistoryBuffer> {
    let buf = shape.render(rhs.order())?;
    manifold_from_buffer(buf, rhs)
}

/// Same as [`make_manifold_initial`] for an already rendered buffer.
pub fn manifold_from_buffer(mut buf: HistoryBuffer, rhs: &SddRightHandSide) -> Result<HistoryBuffer> {
    if buf.max_derivative_jump() > 1e-12 * (1.0 + buf.lipschitz_constant(rhs.basis())) {
        return Err(SddError::NotC1("derivative jumps between pieces".into()));
    }
    let r = buf.r();
    let delta = blend_width(r);
    if delta > r {
        return Err(SddError::InvalidParameter(format!("blend width {delta} exceeds r = {r}")));
    }
    buf.split_at(-delta);
    // β(θ) = θ(1 + θ/δ)² on [−δ, 0], zero before: β(0) = 0, β'(0) = 1.
    let beta = move |th: f64| -> (f64, f64) {
        if th <= -delta {
            return (0.0, 0.0);
        }
        let u = 1.0 + th / delta;
        (th * u * u, u * u + 2.0 * th * u / delta)
    };
    let m = rhs.order();
    let mut field = vec![0.0; m];
    for _ in 0..200 {
        rhs.vector_field_into(&buf.view(), &mut field)?;
        let head = buf.head_deriv();
        let v: Vec<f64> = field.iter().zip(&head).map(|(f, d)| f - d).collect();
        let size = rhs.basis().power_norm(-0.5, &v);
        if size <= 1e-14 * (1.0 + rhs.basis().power_norm(-0.5, &field)) {
            return Ok(buf);
        }
        buf.add_profile(&v, beta);
    }
    let resid = check_manifold(&buf.view(), rhs)?;
    if resid <= 1e-12 {
        return Ok(buf);
    }
    Err(SddError::InvalidParameter(format!(
        "manifold correction did not settle (residual {resid:e})"
    )))
}

/// Integrates from `initial` (anchored at its own time) for `cfg.t_final`.
pub fn solve(initial: &HistoryBuffer, rhs: &SddRightHandSide, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate(rhs)?;
    if initial.dim() != rhs.order() {
        return Err(SddError::ShapeMismatch { expected: rhs.order(), got: initial.dim() });
    }
    if (initial.r() - rhs.r()).abs() > 1e-12 * (1.0 + rhs.r()) {
        return Err(SddError::InvalidParameter(format!(
            "initial window r = {} differs from the delay bound r = {}",
            initial.r(),
            rhs.r()
        )));
    }
    if !initial.is_finite() {
        return Err(SddError::NonFinite { t: initial.anchor() });
    }
    let m = rhs.order();
    let rates: Vec<f64> = rhs.basis().eigenvalues().iter().map(|l| l + rhs.d()).collect();
    let grid = cfg.grid(initial.anchor());
    let mut traj = Trajectory::new(rhs.basis(), initial);
    traj.times = vec![grid[0]];
    let single_eval = rhs.delay().constant_value().map(|tau| tau >= cfg.dt).unwrap_or(false);

    let mut f0 = vec![0.0; m];
    rhs.eval_f1_into(&traj.live_view(grid[0]), &mut f0)?;
    let mut f_prev = f0.clone();
    let mut prop = Propagator::new(&rates, cfg.dt);
    let mut g1 = vec![0.0; m];
    let mut d1 = vec![0.0; m];
    let mut f1 = vec![0.0; m];
    let mut f_new = vec![0.0; m];

    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        if (h - prop.h).abs() > 1e-14 * prop.h {
            prop = Propagator::new(&rates, h);
        }
        let g0 = traj.segments.last().expect("non-empty").y1.clone();
        let d0: Vec<f64> = (0..m).map(|k| -rates[k] * g0[k] + f0[k]).collect();
        for k in 0..m {
            f1[k] = 2.0 * f0[k] - f_prev[k];
        }
        let build = |f1: &[f64], g1: &mut [f64], d1: &mut [f64]| {
            for k in 0..m {
                g1[k] = prop.decay[k] * g0[k] + h * (prop.phi1[k] * f0[k] + prop.phi2[k] * (f1[k] - f0[k]));
                d1[k] = -rates[k] * g1[k] + f1[k];
            }
        };
        let mut trace = Vec::new();
        let mut iterations = 0;
        loop {
            iterations += 1;
            build(&f1, &mut g1, &mut d1);
            traj.push(Segment::new(t0, t1, g0.clone(), g1.clone(), d0.clone(), d1.clone()));
            let res = rhs.eval_f1_into(&traj.live_view(t1), &mut f_new);
            traj.pop();
            res.map_err(|e| match e {
                SddError::Window { .. } => SddError::FixedPoint { t: t1, trace: trace.clone() },
                other => other,
            })?;
            let diff: Vec<f64> = f_new.iter().zip(&f1).map(|(a, b)| a - b).collect();
            let change = rhs.basis().power_norm(-0.5, &diff);
            trace.push(change);
            f1.copy_from_slice(&f_new);
            if single_eval || change < cfg.fp_tol {
                break;
            }
            if iterations >= cfg.fp_max_iter || !change.is_finite() {
                return Err(SddError::FixedPoint { t: t1, trace });
            }
        }
        build(&f1, &mut g1, &mut d1);
        if !g1.iter().chain(&d1).all(|x| x.is_finite()) {
            return Err(SddError::NonFinite { t: t1 });
        }
        traj.push(Segment::new(t0, t1, g0, g1.clone(), d0, d1.clone()));
        traj.times.push(t1);
        traj.fp_iterations.push(iterations);
        f_prev.copy_from_slice(&f0);
        f0.copy_from_slice(&f1);
    }
    Ok(traj)
}
