//! B-spline basis on a graded knot sequence with Dirichlet conditions at both
//! ends of the box.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quadrature::GaussLegendre;

/// Placement of the interior breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum KnotLayout {
    Uniform,
    /// Uniform spacing on `[r_min, r_switch]` holding `inner_fraction` of the
    /// intervals, geometric growth from there to `r_max` with the spacing
    /// continuous at `r_switch`.
    Graded {
        r_switch: f64,
        inner_fraction: f64,
    },
}

/// Discretization parameters for the radial problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    /// Inner wall in bohr, `u(r_min) = 0`.
    pub r_min: f64,
    /// Outer wall in bohr, `u(r_max) = 0`.
    pub r_max: f64,
    /// Number of basis functions after removing the two boundary splines.
    pub size: usize,
    /// Spline order (polynomial degree + 1).
    pub order: usize,
    pub layout: KnotLayout,
    /// Radii that must coincide with a breakpoint (potential kinks).
    pub breakpoints: Vec<f64>,
    /// Gauss-Legendre points per knot interval.
    pub quad_points: usize,
}

pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_QUAD_POINTS: usize = 12;

impl BasisSpec {
    pub fn uniform(r_min: f64, r_max: f64, size: usize) -> Self {
        Self {
            r_min,
            r_max,
            size,
            order: DEFAULT_ORDER,
            layout: KnotLayout::Uniform,
            breakpoints: Vec::new(),
            quad_points: DEFAULT_QUAD_POINTS,
        }
    }

    pub fn graded(r_min: f64, r_max: f64, size: usize, r_switch: f64, inner_fraction: f64) -> Self {
        Self {
            layout: KnotLayout::Graded {
                r_switch,
                inner_fraction,
            },
            ..Self::uniform(r_min, r_max, size)
        }
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn with_r_max(&self, r_max: f64) -> Self {
        Self {
            r_max,
            ..self.clone()
        }
    }

    pub fn with_size(&self, size: usize) -> Self {
        Self {
            size,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min >= 0.0 && self.r_max > self.r_min) || !self.r_max.is_finite() {
            return Err(Error::Config(format!(
                "basis box must satisfy 0 <= r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.size < 10 {
            return Err(Error::Config(format!(
                "basis size must be >= 10, got {}",
                self.size
            )));
        }
        if self.order < 4 {
            return Err(Error::Config(format!(
                "spline order must be >= 4, got {}",
                self.order
            )));
        }
        if self.size + 3 <= self.order {
            return Err(Error::Config(
                "basis size too small for the spline order".into(),
            ));
        }
        if self.quad_points < self.order {
            return Err(Error::Config(format!(
                "need at least {} quadrature points per interval",
                self.order
            )));
        }
        if let KnotLayout::Graded {
            r_switch,
            inner_fraction,
        } = self.layout
        {
            if !(inner_fraction > 0.0 && inner_fraction <= 1.0) {
                return Err(Error::Config(format!(
                    "inner_fraction must be in (0, 1], got {inner_fraction}"
                )));
            }
            if !(r_switch > self.r_min) {
                return Err(Error::Config(format!(
                    "r_switch {r_switch} must exceed r_min {}",
                    self.r_min
                )));
            }
        }
        Ok(())
    }

    pub fn intervals(&self) -> usize {
        self.size + 3 - self.order
    }

    /// Breakpoints `r_min = x₀ < x₁ < … < x_m = r_max`.
    pub fn breakpoint_sequence(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let m = self.intervals();
        let (a, b) = (self.r_min, self.r_max);
        let uniform = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..=n)
                .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                .collect()
        };
        let mut x = match self.layout {
            KnotLayout::Uniform => uniform(a, b, m),
            KnotLayout::Graded {
                r_switch,
                inner_fraction,
            } => graded_sequence(a, b, m, r_switch, inner_fraction),
        };
        for &p in &self.breakpoints {
            if p <= a || p >= b {
                continue;
            }
            let i = (1..m)
                .min_by(|&i, &j| (x[i] - p).abs().total_cmp(&(x[j] - p).abs()))
                .ok_or_else(|| Error::Config("no interior breakpoint to align".into()))?;
            x[i] = p;
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "breakpoints collapsed; increase basis size".into(),
            ));
        }
        Ok(x)
    }
}

fn graded_sequence(a: f64, b: f64, m: usize, r_switch: f64, inner_fraction: f64) -> Vec<f64> {
    let uniform =
        |n: usize| -> Vec<f64> { (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect() };
    if r_switch >= b {
        return uniform(m);
    }
    let n1 = ((inner_fraction * m as f64).round() as usize).clamp(1, m);
    let n2 = m - n1;
    let h = (r_switch - a) / n1 as f64;
    let rest = b - r_switch;
    if n2 == 0 || h * n2 as f64 >= rest {
        return uniform(m);
    }
    // h Σ_{i=1..n2} q^i = rest, q > 1
    let total = |q: f64| h * q * (q.powi(n2 as i32) - 1.0) / (q - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    while total(hi) < rest {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < rest {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let mut x: Vec<f64> = (0..=n1).map(|i| a + h * i as f64).collect();
    let mut step = h;
    let mut r = r_switch;
    for _ in 0..n2 {
        step *= q;
        r += step;
        x.push(r);
    }
    x[m] = b;
    x
}

/// Assembled B-spline basis with per-interval quadrature tables.
///
/// Cloning is cheap; states solved on one basis share it, which is what
/// makes transition integrals between them well defined.
#[derive(Debug, Clone)]
pub struct BSplineBasis {
    inner: Arc<BasisData>,
}

#[derive(Debug)]
struct BasisData {
    spec: BasisSpec,
    order: usize,
    breaks: Vec<f64>,
    knots: Vec<f64>,
    size: usize,
    quad_x: Vec<f64>,
    quad_w: Vec<f64>,
    // per quadrature point: values and derivatives of the `order` splines
    // that are non-zero on its interval
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl PartialEq for BSplineBasis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.order == other.inner.order && self.inner.knots == other.inner.knots)
    }
}

impl BSplineBasis {
    pub fn new(spec: &BasisSpec) -> Result<Self> {
        let breaks = spec.breakpoint_sequence()?;
        let k = spec.order;
        let m = breaks.len() - 1;
        let mut knots = Vec::with_capacity(m + 2 * k - 1);
        knots.extend(std::iter::repeat_n(breaks[0], k - 1));
        knots.extend(breaks.iter().copied());
        knots.extend(std::iter::repeat_n(breaks[m], k - 1));
        let rule = GaussLegendre::new(spec.quad_points);
        let nq = spec.quad_points;
        let mut quad_x = Vec::with_capacity(m * nq);
        let mut quad_w = Vec::with_capacity(m * nq);
        let mut values = Vec::with_capacity(m * nq * k);
        let mut derivs = Vec::with_capacity(m * nq * k);
        let mut vals = vec![0.0; k];
        let mut ders = vec![0.0; k];
        for iv in 0..m {
            let (lo, hi) = (breaks[iv], breaks[iv + 1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let x = mid + half * t;
                quad_x.push(x);
                quad_w.push(w * half);
                eval_nonzero(&knots, k, iv + k - 1, x, &mut vals, &mut ders);
                values.extend_from_slice(&vals);
                derivs.extend_from_slice(&ders);
            }
        }
        let size = m + k - 3;
        debug_assert_eq!(size, spec.size);
        Ok(Self {
            inner: Arc::new(BasisData {
                spec: spec.clone(),
                order: k,
                breaks,
                knots,
                size,
                quad_x,
                quad_w,
                values,
                derivs,
            }),
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.inner.spec
    }

    pub fn size(&self) -> usize {
        self.inner.size
    }

    pub fn order(&self) -> usize {
        self.inner.order
    }

    pub fn r_min(&self) -> f64 {
        self.inner.breaks[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.inner.breaks.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.inner.breaks
    }

    pub fn intervals(&self) -> usize {
        self.inner.breaks.len() - 1
    }

    pub fn quad_points_per_interval(&self) -> usize {
        self.inner.spec.quad_points
    }

    /// Quadrature abscissae and weights over the whole box.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.inner.quad_x, &self.inner.quad_w)
    }

    /// For quadrature point `q`: index of the first basis function touching
    /// it (may be -1 for the dropped boundary spline) and the spline values
    /// and derivatives.
    #[inline]
    pub(crate) fn at_quad(&self, q: usize) -> (isize, &[f64], &[f64]) {
        let k = self.inner.order;
        let iv = q / self.inner.spec.quad_points;
        let first = iv as isize - 1;
        (
            first,
            &self.inner.values[q * k..(q + 1) * k],
            &self.inner.derivs[q * k..(q + 1) * k],
        )
    }

    /// Evaluates `Σ cᵢ Bᵢ(r)`; zero outside the box.
    pub fn eval(&self, coeffs: &[f64], r: f64) -> f64 {
        self.eval_with_derivative(coeffs, r).0
    }

    pub fn eval_with_derivative(&self, coeffs: &[f64], r: f64) -> (f64, f64) {
        let d = &self.inner;
        if !(r >= d.breaks[0] && r <= self.r_max()) {
            return (0.0, 0.0);
        }
        let k = d.order;
        let m = d.breaks.len() - 1;
        let iv = match d.breaks.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(m - 1),
            Err(i) => (i - 1).min(m - 1),
        };
        let mut vals = vec![0.0; k];
        let mut ders = vec![0.0; k];
        eval_nonzero(&d.knots, k, iv + k - 1, r, &mut vals, &mut ders);
        let mut u = 0.0;
        let mut du = 0.0;
        for a in 0..k {
            let idx = iv as isize - 1 + a as isize;
            if idx < 0 || idx as usize >= d.size {
                continue;
            }
            u += coeffs[idx as usize] * vals[a];
            du += coeffs[idx as usize] * ders[a];
        }
        (u, du)
    }
}

/// Values and first derivatives of the `k` B-splines that are non-zero on
/// knot span `span` (`t[span] ≤ x < t[span+1]`).
fn eval_nonzero(t: &[f64], k: usize, span: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    let p = k - 1;
    // ndu table as in the standard derivative algorithm; only first
    // derivatives are needed.
    let mut ndu = vec![vec![0.0; k]; k];
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        vals[j] = ndu[j][p];
    }
    // first derivative: p * (N_{j,p-1}/(t_{i+p}-t_i) - N_{j+1,p-1}/(...))
    for r in 0..=p {
        let mut d = 0.0;
        if r >= 1 {
            d += ndu[r - 1][p - 1] / ndu[p][r - 1];
        }
        if r < p {
            d -= ndu[r][p - 1] / ndu[p][r];
        }
        ders[r] = d * p as f64;
    }
}

pub(crate) fn check_inside(basis: &BSplineBasis, wall: f64) -> Result<()> {
    if basis.r_min() + 1e-12 * basis.r_min().abs().max(1.0) < wall {
        return domain(format!(
            "basis starts at {} inside the inner wall at {wall}",
            basis.r_min()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_derivative() {
        let spec = BasisSpec::graded(0.0, 50.0, 40, 10.0, 0.6);
        let b = BSplineBasis::new(&spec).unwrap();
        let d = &b.inner;
        let k = d.order;
        for &x in &[0.3, 3.7, 9.99, 10.0, 17.2, 49.0] {
            let m = d.breaks.len() - 1;
            let iv = d.breaks.iter().rposition(|&v| v <= x).unwrap().min(m - 1);
            let mut v = vec![0.0; k];
            let mut dv = vec![0.0; k];
            eval_nonzero(&d.knots, k, iv + k - 1, x, &mut v, &mut dv);
            let s: f64 = v.iter().sum();
            let ds: f64 = dv.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "sum = {s} at {x}");
            assert!(ds.abs() < 1e-10, "dsum = {ds} at {x}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let spec = BasisSpec::uniform(1.0, 9.0, 20);
        let b = BSplineBasis::new(&spec).unwrap();
        let coeffs: Vec<f64> = (0..20).map(|i| ((i as f64) * 0.7).cos()).collect();
        let x = 4.321;
        let h = 1e-6;
        let fd = (b.eval(&coeffs, x + h) - b.eval(&coeffs, x - h)) / (2.0 * h);
        let (_, d) = b.eval_with_derivative(&coeffs, x);
        assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0));
        // Dirichlet boundaries
        assert!(b.eval(&coeffs, 1.0).abs() < 1e-15);
        assert!(b.eval(&coeffs, 9.0).abs() < 1e-15);
    }

    #[test]
    fn graded_layout_properties() {
        let spec = BasisSpec::graded(3.0, 3.0e5, 400, 100.0, 0.65);
        let x = spec.breakpoint_sequence().unwrap();
        assert_eq!(x.len(), spec.intervals() + 1);
        assert_eq!(x[0], 3.0);
        assert_eq!(*x.last().unwrap(), 3.0e5);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        let below = x.iter().filter(|&&r| r < 100.0).count() as f64 / x.len() as f64;
        assert!(below >= 0.6, "fraction below 100 bohr = {below}");
    }

    #[test]
    fn breakpoints_are_honoured() {
        let spec = BasisSpec::uniform(0.0, 10.0, 30).with_breakpoints([3.3]);
        let x = spec.breakpoint_sequence().unwrap();
        assert!(x.contains(&3.3));
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        assert!(matches!(
            BasisSpec::uniform(5.0, 1.0, 20).validate(),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            BasisSpec::uniform(0.0, 1.0, 5).validate(),
            Err(Error::Config(_))
        ));
    }
}
