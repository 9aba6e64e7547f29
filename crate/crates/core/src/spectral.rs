//! Dirichlet Laplacian eigenbasis on an interval.
//!
//! `A = -d²/dx²` on `Ω = (0, L)` with homogeneous Dirichlet conditions has
//! eigenpairs `λ_k = (kπ/L)²`, `e_k(x) = sqrt(2/L) sin(kπx/L)`. Fractional
//! powers of `A` are diagonal in Galerkin coordinates. Physical-space data
//! lives on the `n_grid` equispaced interior nodes `x_i = iL/(n_grid+1)`
//! with trapezoid weights; on these nodes the sine vectors are exactly
//! orthogonal (the DST-I identity), so projection after evaluation is the
//! identity for every `m <= n_grid`.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Ω = (0, length).
    pub length: f64,
    /// Number of interior collocation/quadrature nodes.
    pub n_grid: usize,
}

impl DomainSpec {
    pub fn new(length: f64, n_grid: usize) -> Result<Self> {
        let d = Self { length, n_grid };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(SddError::InvalidParameter(format!(
                "domain length must be positive, got {}",
                self.length
            )));
        }
        if self.n_grid < 2 {
            return Err(SddError::InvalidParameter("n_grid must be at least 2".into()));
        }
        Ok(())
    }

    /// |Ω|.
    pub fn measure(&self) -> f64 {
        self.length
    }
}

/// Galerkin coordinates `(g_1, …, g_m)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffVec(pub Vec<f64>);

/// Samples of a function on the interior grid nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridVec(pub Vec<f64>);

macro_rules! vec_newtype {
    ($t:ty) => {
        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}
vec_newtype!(CoeffVec);
vec_newtype!(GridVec);

impl CoeffVec {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Unit vector along `e_{k+1}` (zero-based `k`).
    pub fn unit(m: usize, k: usize) -> Self {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        Self(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Zero-pads or truncates to `m` entries (truncation is `P_m`).
    pub fn resized(&self, m: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(m, 0.0);
        Self(v)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralBasis {
    domain: DomainSpec,
    eigenvalues: Vec<f64>,
    nodes: Vec<f64>,
    /// Row `k` holds `e_{k+1}` at every node (m × n_grid, row-major).
    node_matrix: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(domain: DomainSpec, m: usize) -> Result<Self> {
        domain.validate()?;
        if m < 1 {
            return Err(SddError::InvalidParameter("basis order m must be at least 1".into()));
        }
        if domain.n_grid < 2 * m {
            return Err(SddError::AntiAliasing { n_grid: domain.n_grid, m });
        }
        let l = domain.length;
        let n = domain.n_grid;
        let h = l / (n as f64 + 1.0);
        let eigenvalues = (1..=m).map(|k| (k as f64 * PI / l).powi(2)).collect();
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let amp = (2.0 / l).sqrt();
        let mut node_matrix = vec![0.0; m * n];
        for k in 0..m {
            for i in 0..n {
                // sin(kπ i/(n+1)) evaluated from the integer phase for exact symmetry
                let phase = ((k + 1) * (i + 1)) % (2 * (n + 1));
                node_matrix[k * n + i] = amp * (PI * phase as f64 / (n as f64 + 1.0)).sin();
            }
        }
        Ok(Self { domain, eigenvalues, nodes, node_matrix, quad_weights: vec![h; n] })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_grid(&self) -> usize {
        self.nodes.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// `e_{k+1}` at every grid node.
    pub fn node_row(&self, k: usize) -> &[f64] {
        let n = self.n_grid();
        &self.node_matrix[k * n..(k + 1) * n]
    }

    /// `e_{k+1}(x)` (zero-based `k`), evaluated analytically.
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        let l = self.domain.length;
        (2.0 / l).sqrt() * ((k + 1) as f64 * PI * x / l).sin()
    }

    pub fn eigenfunction_deriv(&self, k: usize, x: f64) -> f64 {
        let l = self.domain.length;
        let w = (k + 1) as f64 * PI / l;
        (2.0 / l).sqrt() * w * (w * x).cos()
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(SddError::ShapeMismatch { expected, got });
        }
        Ok(())
    }

    /// `A^alpha v` for `alpha ∈ [-1, 1]`.
    pub fn apply_power(&self, alpha: f64, v: &CoeffVec) -> Result<CoeffVec> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(SddError::InvalidParameter(format!(
                "fractional power must lie in [-1, 1], got {alpha}"
            )));
        }
        self.check_len(v.len(), self.order())?;
        Ok(CoeffVec(
            v.iter().zip(&self.eigenvalues).map(|(g, l)| l.powf(alpha) * g).collect(),
        ))
    }

    /// `‖A^alpha v‖` for the leading `v.len()` modes. No range restriction.
    pub fn power_norm(&self, alpha: f64, v: &[f64]) -> f64 {
        self.power_norm_sq(alpha, v).sqrt()
    }

    pub fn power_norm_sq(&self, alpha: f64, v: &[f64]) -> f64 {
        debug_assert!(v.len() <= self.order());
        let e = 2.0 * alpha;
        if e == 0.0 {
            return v.iter().map(|g| g * g).sum();
        }
        if e == 1.0 {
            return v.iter().zip(&self.eigenvalues).map(|(g, l)| l * g * g).sum();
        }
        if e == -1.0 {
            return v.iter().zip(&self.eigenvalues).map(|(g, l)| g * g / l).sum();
        }
        v.iter().zip(&self.eigenvalues).map(|(g, l)| l.powf(e) * g * g).sum()
    }

    /// `Σ_k g_k e_k(x_i)` at every node.
    pub fn to_grid(&self, v: &CoeffVec) -> Result<GridVec> {
        self.check_len(v.len(), self.order())?;
        let n = self.n_grid();
        let mut w = vec![0.0; n];
        for (k, g) in v.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            for (wi, e) in w.iter_mut().zip(self.node_row(k)) {
                *wi += g * e;
            }
        }
        Ok(GridVec(w))
    }

    /// Quadrature projection `⟨w, e_k⟩_h`, k = 1..m.
    pub fn from_grid(&self, w: &GridVec) -> Result<CoeffVec> {
        self.check_len(w.len(), self.n_grid())?;
        let mut out = vec![0.0; self.order()];
        self.project_into(w, &mut out);
        Ok(CoeffVec(out))
    }

    pub(crate) fn project_into(&self, w: &[f64], out: &mut [f64]) {
        let h = self.quad_weights[0];
        for (k, o) in out.iter_mut().enumerate() {
            *o = h * self.node_row(k).iter().zip(w).map(|(e, x)| e * x).sum::<f64>();
        }
    }

    /// Discrete `L²(Ω)` norm of grid samples.
    pub fn grid_l2_norm(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.quad_weights).map(|(x, q)| q * x * x).sum::<f64>().sqrt()
    }
}
