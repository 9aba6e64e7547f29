//! The non-local operator `[Bv](x) = ∫_Ω v(y) f(x−y) ℓ(y) dy`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::quadrature::gauss_legendre;
use crate::spectral::SpectralBasis;

/// Convolution profile `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `exp(−z²/σ²)`.
    Gaussian { sigma: f64 },
    /// `f ≡ value`.
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_power() -> i32 {
    3
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Gaussian { sigma: 0.2 }
    }
}

impl Profile {
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Profile::Gaussian { sigma } => (-(z * z) / (sigma * sigma)).exp(),
            Profile::Constant { value } => value,
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        match *self {
            Profile::Gaussian { sigma } => -2.0 * z / (sigma * sigma) * self.value(z),
            Profile::Constant { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Profile::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                SddError::InvalidParameter(format!("gaussian width must be positive, got {sigma}")),
            ),
            Profile::Constant { value } if !value.is_finite() => {
                Err(SddError::InvalidParameter("constant profile must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Polynomial bump `amplitude·(1 − ((x−c)/w)²)^power` on `|x−c| < w`.
///
/// `center` and `half_width` default to `L/2` and `L/4`. With `power ≥ 3`
/// the bump and its first two derivatives vanish at the support boundary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_power")]
    pub power: i32,
}

impl Bump {
    pub fn standard() -> Self {
        Self { center: None, half_width: None, amplitude: 1.0, power: 3 }
    }

    /// `(c, w)` on a domain of the given length.
    pub fn support(&self, length: f64) -> (f64, f64) {
        (self.center.unwrap_or(0.5 * length), self.half_width.unwrap_or(0.25 * length))
    }
}

/// Bump evaluated on a fixed domain.
#[derive(Clone, Copy, Debug)]
struct BumpOn {
    c: f64,
    w: f64,
    amplitude: f64,
    power: i32,
}

impl BumpOn {
    fn value(&self, x: f64) -> f64 {
        let u = (x - self.c) / self.w;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - u * u).powi(self.power)
    }

    fn deriv(&self, x: f64) -> f64 {
        let u = (x - self.c) / self.w;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let p = self.power as f64;
        self.amplitude * p * (1.0 - u * u).powi(self.power - 1) * (-2.0 * u / self.w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub f: Profile,
    #[serde(default = "Bump::standard")]
    pub ell: Bump,
    /// Gauss nodes per integral; defaults to `4·n_grid`.
    #[serde(default)]
    pub quadrature: Option<usize>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { f: Profile::default(), ell: Bump::standard(), quadrature: None }
    }
}

impl KernelSpec {
    fn bump_on(&self, length: f64) -> Result<BumpOn> {
        let (c, w) = self.ell.support(length);
        if !(w > 0.0) || c - w <= 0.0 || c + w >= length {
            return Err(SddError::SupportViolation { lo: c - w, hi: c + w, length });
        }
        if self.ell.power < 1 || !self.ell.amplitude.is_finite() {
            return Err(SddError::InvalidParameter(format!(
                "bump needs a finite amplitude and power >= 1, got {} and {}",
                self.ell.amplitude, self.ell.power
            )));
        }
        Ok(BumpOn { c, w, amplitude: self.ell.amplitude, power: self.ell.power })
    }
}

/// Galerkin matrix, grid table and Lipschitz constant of `B`.
#[derive(Clone, Debug)]
pub struct NonlocalOperator {
    m: usize,
    n_grid: usize,
    /// `B_{jk} = ⟨B e_k, e_j⟩`, row-major m × m.
    matrix: Vec<f64>,
    /// `[B e_k](x_i)`, row-major n_grid × m.
    grid_table: Vec<f64>,
    l_b: f64,
    drift: f64,
}

struct Tables {
    matrix: Vec<f64>,
    grid_table: Vec<f64>,
}

fn tables(basis: &SpectralBasis, f: &Profile, ell: BumpOn, q: usize, exec: Execution) -> Tables {
    let m = basis.order();
    let length = basis.domain().length;
    let (ys, wy) = gauss_legendre(q, ell.c - ell.w, ell.c + ell.w);
    // e_k(y)·ℓ(y)·w_y, q × m
    let mut ey = vec![0.0; q * m];
    for (j, (&y, &w)) in ys.iter().zip(&wy).enumerate() {
        let lw = ell.value(y) * w;
        for k in 0..m {
            ey[j * m + k] = basis.eigenfunction(k, y) * lw;
        }
    }
    let apply_at = |x: f64| -> Vec<f64> {
        let mut row = vec![0.0; m];
        for (j, &y) in ys.iter().enumerate() {
            let fx = f.value(x - y);
            if fx == 0.0 {
                continue;
            }
            for (r, e) in row.iter_mut().zip(&ey[j * m..(j + 1) * m]) {
                *r += fx * e;
            }
        }
        row
    };
    let grid_rows = exec.map(basis.nodes(), |&x| apply_at(x));
    let grid_table = grid_rows.concat();

    let (xs, wx) = gauss_legendre(q, 0.0, length);
    let x_rows = exec.map(&xs, |&x| apply_at(x));
    let mut matrix = vec![0.0; m * m];
    for ((x, w), row) in xs.iter().zip(&wx).zip(&x_rows) {
        for j in 0..m {
            let ej = basis.eigenfunction(j, *x) * w;
            for k in 0..m {
                matrix[j * m + k] += ej * row[k];
            }
        }
    }
    Tables { matrix, grid_table }
}

/// `(∫_Ω ‖A^{1/2}(f(·−x)ℓ(·))‖² dx)^{1/2}`.
///
/// The inner function vanishes at ∂Ω, so `‖A^{1/2}g‖ = ‖g'‖`; both
/// integrals are Gauss rules on smooth integrands.
fn lipschitz_constant(length: f64, f: &Profile, ell: BumpOn, q: usize, exec: Execution) -> f64 {
    let (ys, wy) = gauss_legendre(q, ell.c - ell.w, ell.c + ell.w);
    let (xs, wx) = gauss_legendre(q, 0.0, length);
    let inner = exec.map(&xs, |&x| {
        ys.iter()
            .zip(&wy)
            .map(|(&y, &w)| {
                let g = f.deriv(y - x) * ell.value(y) + f.value(y - x) * ell.deriv(y);
                w * g * g
            })
            .sum::<f64>()
    });
    inner.iter().zip(&wx).map(|(v, w)| v * w).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl NonlocalOperator {
    /// Assembles `B` by tensor Gauss quadrature and checks resolution by
    /// doubling the node count; the finer tables are kept.
    pub fn assemble(spec: &KernelSpec, basis: &SpectralBasis, exec: Execution) -> Result<Self> {
        spec.f.validate()?;
        let length = basis.domain().length;
        let ell = spec.bump_on(length)?;
        let min_q = 4 * basis.n_grid();
        let q = spec.quadrature.unwrap_or(min_q);
        if q < min_q {
            return Err(SddError::InvalidParameter(format!(
                "kernel quadrature {q} is below 4·n_grid = {min_q}"
            )));
        }
        let (coarse, fine) = exec.join(
            || tables(basis, &spec.f, ell, q, exec),
            || tables(basis, &spec.f, ell, 2 * q, exec),
        );
        let drift = max_abs_diff(&coarse.matrix, &fine.matrix)
            .max(max_abs_diff(&coarse.grid_table, &fine.grid_table));
        if !(drift <= 1e-6) {
            return Err(SddError::UnderResolved { drift });
        }
        let l_b = lipschitz_constant(length, &spec.f, ell, 2 * q, exec);
        Ok(Self {
            m: basis.order(),
            n_grid: basis.n_grid(),
            matrix: fine.matrix,
            grid_table: fine.grid_table,
            l_b,
            drift,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Entry `⟨B e_{k+1}, e_{j+1}⟩`.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.matrix[j * self.m + k]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn l_b(&self) -> f64 {
        self.l_b
    }

    /// Largest change observed when the quadrature was doubled.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `P_m B v` in coefficients.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|j| self.matrix[j * self.m..(j + 1) * self.m].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `[B v](x_i)` on the grid, without projecting onto the basis first.
    pub fn apply_on_grid_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_grid);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.grid_table[i * self.m..(i + 1) * self.m].iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}
