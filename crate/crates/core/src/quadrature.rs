//! Quadrature rules shared by the basis assembly and the closed-form model.

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` points, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, refined by Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
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
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrate `f` over `[a, b]` split into `pieces` equal panels.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        pieces: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Double-exponential (exp-sinh) rule for `∫₀^∞ f(t) dt`.
///
/// The substitution `t = exp(π/2 · sinh τ)` handles integrable endpoint
/// singularities at 0 and algebraic or exponential decay at infinity.
pub fn exp_sinh<F: FnMut(f64) -> f64>(mut f: F, step: f64, tau_max: f64) -> f64 {
    let n = (tau_max / step).ceil() as i64;
    let mut sum = 0.0;
    for i in -n..=n {
        let tau = i as f64 * step;
        let t = (FRAC_PI_2 * tau.sinh()).exp();
        if t == 0.0 || !t.is_finite() {
            continue;
        }
        let w = FRAC_PI_2 * tau.cosh() * t;
        let v = f(t);
        if v != 0.0 {
            sum += w * v;
        }
    }
    sum * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(6);
        for deg in 0..=11 {
            let got = rule.integrate(0.0, 2.0, |x| x.powi(deg));
            let want = 2f64.powi(deg + 1) / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-12 * want, "degree {deg}");
        }
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_sinh_handles_singular_endpoint() {
        // ∫ t^{-1/2} e^{-t} dt = √π
        let got = exp_sinh(|t| t.powf(-0.5) * (-t).exp(), 1.0 / 32.0, 6.0);
        assert!((got - PI.sqrt()).abs() < 1e-13);
    }
}
