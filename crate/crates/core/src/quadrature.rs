//! Gauss-Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// 4-point rule on [0, 1]; exact for degree 7, so for squared cubics.
pub(crate) const GAUSS4_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
pub(crate) const GAUSS4_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre(n, -0.5, 2.0);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = (2f64.powi(deg as i32 + 1) - (-0.5f64).powi(deg as i32 + 1))
                    / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-12 * exact.abs().max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn four_point_table_matches_generator() {
        let (x, w) = gauss_legendre(4, 0.0, 1.0);
        for i in 0..4 {
            assert!((x[i] - GAUSS4_NODES[i]).abs() < 1e-15);
            assert!((w[i] - GAUSS4_WEIGHTS[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_integrand_converges() {
        let (x, w) = gauss_legendre(30, 0.0, PI);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (x.sin() * x.cos().exp())).sum();
        // closed form: e - 1/e
        assert!((q - (1f64.exp() - (-1f64).exp())).abs() < 1e-14);
    }
}
