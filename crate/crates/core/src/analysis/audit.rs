//! Randomized audits of the structural inequalities: the Lipschitz estimate
//! for `F₁`, the (H.B) bound for the non-local operator, and the Lipschitz
//! condition on the delay functional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::EstimateReport;
use crate::error::Result;
use crate::exec::Execution;
use crate::history::{HistoryBuffer, InitialShape};
use crate::rhs::SddRightHandSide;

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Independent generator for sample `i` of a seeded audit.
pub fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Random cubic-in-θ history with coefficients decaying like `(k+1)^{-3/2}`.
pub fn random_history<R: Rng>(rng: &mut R, m: usize, r: f64, amp: f64) -> HistoryBuffer {
    let coeffs: Vec<Vec<f64>> = (0..4)
        .map(|p| {
            (0..m)
                .map(|k| amp * rng.gen_range(-1.0..1.0) / ((k + 1) as f64).powf(1.5) / (1.0 + p as f64))
                .collect()
        })
        .collect();
    InitialShape::Polynomial { coeffs }.render(r, m, 16).expect("polynomial histories render")
}

fn random_pair(rng: &mut ChaCha8Rng, m: usize, r: f64) -> (HistoryBuffer, HistoryBuffer) {
    let amp = 10f64.powf(rng.gen_range(-1.0..0.5));
    let phi = random_history(rng, m, r, amp);
    let psi = if rng.gen_bool(0.5) {
        let small = amp * 10f64.powf(rng.gen_range(-4.0..-1.0));
        phi.combine(1.0, &random_history(rng, m, r, small), 1.0).expect("same window")
    } else {
        let other = 10f64.powf(rng.gen_range(-1.0..0.5));
        random_history(rng, m, r, other)
    };
    (phi, psi)
}

/// Observed/bound ratio of the F₁ Lipschitz estimate for one pair.
pub fn lemma1_ratio(rhs: &SddRightHandSide, phi: &HistoryBuffer, psi: &HistoryBuffer) -> Result<f64> {
    let basis = rhs.basis();
    let (fa, _) = rhs.f1_on_grid(&phi.view())?;
    let (fb, _) = rhs.f1_on_grid(&psi.view())?;
    let diff: Vec<f64> = fa.iter().zip(fb.iter()).map(|(a, b)| a - b).collect();
    let lhs = basis.grid_l2_norm(&diff);
    let delta = phi.difference(psi)?;
    let ell = phi.lipschitz_constant(basis);
    let rhs_value = rhs.lipschitz_f1(ell)
        * (rhs.delay().q() * delta.view().head_energy_norm(basis) + delta.norm_c_minus_half(basis));
    Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs_value })
}

fn ratio_report(id: &str, ratios: &[f64], seed: u64) -> EstimateReport {
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let mut report = EstimateReport::new(id, 1.0, worst, 0.0)
        .with("samples", ratios.len())
        .with("seed", seed)
        .with("worst_ratio", worst);
    if !(worst < 1.0) {
        report = report.fail("observed/bound ratio reached 1");
    }
    report
}

/// `‖F₁(φ)−F₁(ψ)‖ ≤ L_F₁[|||φ|||](q‖A^{1/2}(φ−ψ)(0)‖ + ‖A^{-1/2}(φ−ψ)‖_C)`
/// on `n_samples` random pairs; passes iff every ratio is below one.
pub fn audit_lemma1(rhs: &SddRightHandSide, n_samples: usize, seed: u64, exec: Execution) -> Result<EstimateReport> {
    let ratios = exec.map_range(n_samples, |i| {
        let mut rng = sample_rng(seed, i as u64);
        let (phi, psi) = random_pair(&mut rng, rhs.order(), rhs.r());
        lemma1_ratio(rhs, &phi, &psi)
    });
    let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_>>()?;
    Ok(ratio_report("lemma1", &ratios, seed)
        .with("l_f1_at_zero", rhs.lipschitz_f1(0.0))
        .with("l_b", rhs.nonlinearity().l_b())
        .with("l_big_b", rhs.operator().l_b())
        .with("l_eta", rhs.delay().l_eta())
        .with("q", rhs.delay().q()))
}

/// `‖Bv‖ ≤ L_B‖A^{-1/2}v‖` for random coefficient vectors.
pub fn audit_hb(rhs: &SddRightHandSide, n_samples: usize, seed: u64, exec: Execution) -> EstimateReport {
    let basis = rhs.basis();
    let m = rhs.order();
    let l_b = rhs.operator().l_b();
    let ratios = exec.map_range(n_samples, |i| {
        let mut rng = sample_rng(seed ^ 0x4842, i as u64);
        let decay = rng.gen_range(0.0..2.0);
        let v: Vec<f64> = (0..m).map(|k| rng.gen_range(-1.0..1.0) / ((k + 1) as f64).powf(decay)).collect();
        let mut grid = vec![0.0; basis.n_grid()];
        rhs.operator().apply_on_grid_into(&v, &mut grid);
        let num = basis.grid_l2_norm(&grid);
        let den = l_b * basis.power_norm(-0.5, &v);
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    });
    ratio_report("hb", &ratios, seed).with("l_big_b", l_b)
}

/// `|η(φ)−η(ψ)| ≤ L_η (q‖A^{1/2}(φ−ψ)(0)‖² + ∫‖A^{-1/2}(φ−ψ)‖²)^{1/2}`.
pub fn audit_eta(rhs: &SddRightHandSide, n_samples: usize, seed: u64, exec: Execution) -> Result<EstimateReport> {
    let basis = rhs.basis();
    let l_eta = rhs.delay().l_eta();
    let q = rhs.delay().q();
    let ratios = exec.map_range(n_samples, |i| -> Result<f64> {
        let mut rng = sample_rng(seed ^ 0x4554, i as u64);
        let (phi, psi) = random_pair(&mut rng, rhs.order(), rhs.r());
        let lhs = (rhs.eta(&phi.view()) - rhs.eta(&psi.view())).abs();
        let delta = phi.difference(&psi)?;
        let dv = delta.view();
        let size = (q * basis.power_norm_sq(0.5, &dv.head_value()) + dv.neg_half_energy_integral(basis)).sqrt();
        Ok(if lhs == 0.0 { 0.0 } else { lhs / (l_eta * size) })
    });
    let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_>>()?;
    Ok(ratio_report("eta", &ratios, seed).with("l_eta", l_eta).with("q", q))
}
