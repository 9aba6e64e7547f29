//! Right-hand side `F₁(u_t)(x) = b([B u(t−η(u_t))](x))` and its constants.

pub mod delay;
pub mod kernel;
pub mod nonlinearity;

pub use delay::{DelayFunctional, DelaySpec};
pub use kernel::{Bump, KernelSpec, NonlocalOperator, Profile};
pub use nonlinearity::Nonlinearity;

use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::HistoryView;
use crate::spectral::{CoeffVec, GridVec, SpectralBasis};

/// `L_b L_B √2 max{1, ℓ L_η max{1, √r}}`.
pub fn lipschitz_f1(l_b: f64, l_big_b: f64, l_eta: f64, r: f64, ell: f64) -> f64 {
    l_b * l_big_b * std::f64::consts::SQRT_2 * f64::max(1.0, ell * l_eta * f64::max(1.0, r.sqrt()))
}

#[derive(Clone, Debug)]
pub struct SddRightHandSide {
    basis: SpectralBasis,
    operator: NonlocalOperator,
    b: Nonlinearity,
    delay: DelayFunctional,
    d: f64,
}

impl SddRightHandSide {
    pub fn new(
        basis: SpectralBasis,
        kernel: &KernelSpec,
        b: Nonlinearity,
        delay: DelayFunctional,
        d: f64,
        exec: Execution,
    ) -> Result<Self> {
        let operator = NonlocalOperator::assemble(kernel, &basis, exec)?;
        Self::from_parts(basis, operator, b, delay, d)
    }

    pub fn from_parts(
        basis: SpectralBasis,
        operator: NonlocalOperator,
        b: Nonlinearity,
        delay: DelayFunctional,
        d: f64,
    ) -> Result<Self> {
        b.validate()?;
        if !(d >= 0.0 && d.is_finite()) {
            return Err(SddError::InvalidParameter(format!("damping d must be non-negative, got {d}")));
        }
        if operator.order() != basis.order() {
            return Err(SddError::ShapeMismatch { expected: basis.order(), got: operator.order() });
        }
        Ok(Self { basis, operator, b, delay, d })
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn operator(&self) -> &NonlocalOperator {
        &self.operator
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.b
    }

    pub fn delay(&self) -> &DelayFunctional {
        &self.delay
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn r(&self) -> f64 {
        self.delay.r()
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn m_b(&self) -> f64 {
        self.b.m_b()
    }

    /// `L_F₁[ℓ]` for this right-hand side.
    pub fn lipschitz_f1(&self, ell: f64) -> f64 {
        lipschitz_f1(self.b.l_b(), self.operator.l_b(), self.delay.l_eta(), self.r(), ell)
    }

    /// `M_b |Ω|^{1/2}`, the uniform bound on `‖F₁‖`.
    pub fn f1_bound(&self) -> f64 {
        self.m_b() * self.basis.domain().measure().sqrt()
    }

    pub fn eta(&self, h: &HistoryView<'_>) -> f64 {
        self.delay.eval(h, &self.basis)
    }

    /// `b([B u(t−τ)](x_i))` at the grid nodes; returns the samples and τ.
    pub fn f1_on_grid(&self, h: &HistoryView<'_>) -> Result<(GridVec, f64)> {
        let tau = self.eta(h);
        let mut grid = vec![0.0; self.basis.n_grid()];
        if self.b.is_constant() {
            let c = self.b.eval(0.0);
            grid.iter_mut().for_each(|x| *x = c);
            return Ok((GridVec(grid), tau));
        }
        let w = h.eval(h.anchor() - tau)?;
        self.operator.apply_on_grid_into(&w, &mut grid);
        for x in grid.iter_mut() {
            *x = self.b.eval(*x);
        }
        Ok((GridVec(grid), tau))
    }

    /// `P_m F₁(φ)`; returns the delay used.
    pub fn eval_f1_into(&self, h: &HistoryView<'_>, out: &mut [f64]) -> Result<f64> {
        if out.len() != self.order() {
            return Err(SddError::ShapeMismatch { expected: self.order(), got: out.len() });
        }
        let (grid, tau) = self.f1_on_grid(h)?;
        self.basis.project_into(&grid, out);
        Ok(tau)
    }

    pub fn eval_f1(&self, h: &HistoryView<'_>) -> Result<CoeffVec> {
        let mut out = vec![0.0; self.order()];
        self.eval_f1_into(h, &mut out)?;
        Ok(CoeffVec(out))
    }

    /// `−(λ_k + d)φ_k(0) + F₁(φ)_k`, the Galerkin vector field.
    pub fn vector_field_into(&self, h: &HistoryView<'_>, out: &mut [f64]) -> Result<f64> {
        let tau = self.eval_f1_into(h, out)?;
        let head = h.head_value();
        for ((o, g), l) in out.iter_mut().zip(&head).zip(self.basis.eigenvalues()) {
            *o -= (l + self.d) * g;
        }
        Ok(tau)
    }
}
