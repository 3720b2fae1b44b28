//! Bound and trap-discretized states of the radial equation
//!
//! `[-1/(2μ) d²/dR² + J(J+1)/(2μR²) + V_int(R) + ½μω²R²] u = E u`
//!
//! expanded in B-splines on a finite box.

use crate::banded::{lowest_eigenpairs_by, BandedSym};
use crate::bspline::{check_inside, BSplineBasis, BasisSpec, KnotLayout};
use crate::error::{domain, Error, Result};
use crate::potentials::{PotentialCurve, TrapSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Bound,
    TrapInduced,
}

impl StateLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateLabel::Bound => "bound",
            StateLabel::TrapInduced => "trap_induced",
        }
    }
}

/// One eigenpair of the radial problem.
#[derive(Debug, Clone)]
pub struct VibrationalState {
    pub v: usize,
    /// Energy in hartree.
    pub energy: f64,
    pub j: u32,
    pub label: StateLabel,
    coeffs: Vec<f64>,
    basis: BSplineBasis,
}

impl VibrationalState {
    /// Reduced radial wave function `u(R)`, normalized to `∫u² dR = 1`.
    pub fn eval(&self, r: f64) -> f64 {
        self.basis.eval(&self.coeffs, r)
    }

    pub fn eval_with_derivative(&self, r: f64) -> (f64, f64) {
        self.basis.eval_with_derivative(&self.coeffs, r)
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `u` at every quadrature abscissa of the basis.
    pub fn on_quadrature(&self) -> Vec<f64> {
        let (xs, _) = self.basis.quadrature();
        (0..xs.len())
            .map(|q| {
                let (first, vals, _) = self.basis.at_quad(q);
                combine(&self.coeffs, first, vals)
            })
            .collect()
    }

    /// `∫ u(R) f(R) w(R) dR` with the assembly quadrature, for another state
    /// `w` on the same basis.
    pub fn overlap_with<F: Fn(f64) -> f64>(
        &self,
        other: &VibrationalState,
        weight: F,
    ) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::Config(
                "states live on different bases; solve them on a shared box".into(),
            ));
        }
        let (xs, ws) = self.basis.quadrature();
        let mut sum = 0.0;
        for q in 0..xs.len() {
            let (first, vals, _) = self.basis.at_quad(q);
            let a = combine(&self.coeffs, first, vals);
            let b = combine(&other.coeffs, first, vals);
            sum += ws[q] * a * b * weight(xs[q]);
        }
        Ok(sum)
    }

    /// `(R, u(R))` at the given radii.
    pub fn sample(&self, radii: &[f64]) -> Vec<(f64, f64)> {
        radii.iter().map(|&r| (r, self.eval(r))).collect()
    }
}

#[inline]
fn combine(coeffs: &[f64], first: isize, vals: &[f64]) -> f64 {
    let n = coeffs.len() as isize;
    let mut s = 0.0;
    for (a, &v) in vals.iter().enumerate() {
        let i = first + a as isize;
        if i >= 0 && i < n {
            s += coeffs[i as usize] * v;
        }
    }
    s
}

/// Hamiltonian and overlap matrices of the radial problem on `basis`.
pub fn assemble(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    basis: &BSplineBasis,
) -> Result<(BandedSym, BandedSym)> {
    check_inside(basis, curve.inner_wall())?;
    let n = basis.size();
    let k = basis.order();
    let mut h = BandedSym::zeros(n, k - 1);
    let mut s = BandedSym::zeros(n, k - 1);
    let kin = 0.5 / sys.mu;
    let (xs, ws) = basis.quadrature();
    for q in 0..xs.len() {
        let (first, vals, ders) = basis.at_quad(q);
        let v = curve.effective_value(sys, xs[q]);
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "effective potential is not finite at R = {} inside the box",
                xs[q]
            )));
        }
        let w = ws[q];
        for a in 0..k {
            let i = first + a as isize;
            if i < 0 || i as usize >= n {
                continue;
            }
            for b in 0..=a {
                let j = first + b as isize;
                if j < 0 || j as usize >= n {
                    continue;
                }
                let bb = vals[a] * vals[b];
                h.add(
                    i as usize,
                    j as usize,
                    w * (kin * ders[a] * ders[b] + v * bb),
                );
                s.add(i as usize, j as usize, w * bb);
            }
        }
    }
    Ok((h, s))
}

/// The `count` lowest states of `curve` in the trap `sys` on a basis built
/// from `spec`.
pub fn solve_radial(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    spec: &BasisSpec,
    count: usize,
) -> Result<Vec<VibrationalState>> {
    let basis = BSplineBasis::new(spec)?;
    solve_on_basis(curve, sys, &basis, count)
}

/// As [`solve_radial`] on an existing basis; states from different curves
/// solved on one basis can be combined in transition integrals.
pub fn solve_on_basis(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    basis: &BSplineBasis,
    count: usize,
) -> Result<Vec<VibrationalState>> {
    if count > basis.size() {
        return domain(format!(
            "requested {count} states from a basis of {} functions",
            basis.size()
        ));
    }
    solve_selected(curve, sys, basis, |_| count)
}

/// All states below threshold (`E < 0`) plus the `extra` lowest states
/// above it.
pub fn solve_bound_plus(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    basis: &BSplineBasis,
    extra: usize,
) -> Result<Vec<VibrationalState>> {
    solve_selected(curve, sys, basis, |values| {
        values.iter().filter(|&&e| e < 0.0).count() + extra
    })
}

fn solve_selected<F: FnOnce(&[f64]) -> usize>(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    basis: &BSplineBasis,
    pick: F,
) -> Result<Vec<VibrationalState>> {
    let (h, s) = assemble(curve, sys, basis)?;
    let (values, vectors) = lowest_eigenpairs_by(&h, &s, pick)?;
    let mut states: Vec<VibrationalState> = values
        .into_iter()
        .zip(vectors)
        .map(|(energy, coeffs)| VibrationalState {
            v: 0,
            energy,
            j: sys.j,
            label: label_for(energy),
            coeffs,
            basis: basis.clone(),
        })
        .collect();
    for st in states.iter_mut() {
        fix_sign(st);
    }
    order_states(&mut states);
    Ok(states)
}

fn label_for(energy: f64) -> StateLabel {
    if energy < 0.0 {
        StateLabel::Bound
    } else {
        StateLabel::TrapInduced
    }
}

/// Energy order, ties (relative gap below 1e-12) broken by node count.
fn order_states(states: &mut [VibrationalState]) {
    let nodes: Vec<usize> = states.iter().map(count_nodes).collect();
    let mut idx: Vec<usize> = (0..states.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ea, eb) = (states[a].energy, states[b].energy);
        let scale = ea.abs().max(eb.abs()).max(f64::MIN_POSITIVE);
        if (ea - eb).abs() <= 1e-12 * scale {
            nodes[a].cmp(&nodes[b])
        } else {
            ea.total_cmp(&eb)
        }
    });
    let sorted: Vec<VibrationalState> = idx.iter().map(|&i| states[i].clone()).collect();
    for (v, (slot, mut st)) in states.iter_mut().zip(sorted).enumerate() {
        st.v = v;
        *slot = st;
    }
}

/// Makes the first lobe (from the inner wall outward) positive.
fn fix_sign(state: &mut VibrationalState) {
    let u = state.on_quadrature();
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = u.iter().find(|v| v.abs() > 1e-6 * max) {
        if *first < 0.0 {
            state.coeffs.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Lobes of `u` whose peak is below this fraction of `max|u|` do not count;
/// they are discretization ripples in classically forbidden regions.
pub const NODE_AMPLITUDE_FLOOR: f64 = 1e-6;

/// Sign changes of `u` inside the box between lobes above
/// [`NODE_AMPLITUDE_FLOOR`] of `max|u|`.
pub fn count_nodes(state: &VibrationalState) -> usize {
    node_positions(state).len()
}

/// Approximate radii of the nodes of `u`, from the inner wall outward.
pub fn node_positions(state: &VibrationalState) -> Vec<f64> {
    let (xs, _) = state.basis.quadrature();
    let u = state.on_quadrature();
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = NODE_AMPLITUDE_FLOOR * max;
    // (sign, first x, last x) of every lobe with a significant peak
    let mut lobes: Vec<(f64, f64, f64)> = Vec::new();
    let mut current: Option<(f64, f64, f64, f64)> = None;
    for (&x, &val) in xs.iter().zip(&u) {
        if val == 0.0 {
            continue;
        }
        match current.as_mut() {
            Some(c) if c.0 == val.signum() => {
                c.2 = x;
                c.3 = c.3.max(val.abs());
            }
            _ => {
                if let Some(c) = current.take() {
                    if c.3 > floor {
                        lobes.push((c.0, c.1, c.2));
                    }
                }
                current = Some((val.signum(), x, x, val.abs()));
            }
        }
    }
    if let Some(c) = current {
        if c.3 > floor {
            lobes.push((c.0, c.1, c.2));
        }
    }
    lobes
        .windows(2)
        .filter(|w| w[0].0 != w[1].0)
        .map(|w| refine_node(state, w[0].2, w[1].1))
        .collect()
}

fn refine_node(state: &VibrationalState, mut lo: f64, mut hi: f64) -> f64 {
    let flo = state.eval(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = state.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Labels for a solved list and the index of the first trap-induced state.
///
/// Bound means `E < 0` relative to the dissociation threshold. Without a trap
/// the non-bound states are the box-discretized continuum and carry the same
/// label.
pub fn classify_states(states: &[VibrationalState]) -> (Vec<StateLabel>, Option<usize>) {
    let labels: Vec<StateLabel> = states.iter().map(|s| label_for(s.energy)).collect();
    let first = labels.iter().position(|l| *l == StateLabel::TrapInduced);
    (labels, first)
}

/// Largest `R` in `[r_lo, r_hi]` with `V_eff(R) = E`, refined by bisection
/// to `1e-10` relative.
pub fn outer_turning_point_in(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    energy: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<f64> {
    let lo = r_lo.max(curve.inner_wall()).max(1e-8);
    if !(r_hi > lo) {
        return domain(format!("empty search range [{lo}, {r_hi}]"));
    }
    let g = |r: f64| curve.effective_value(sys, r) - energy;
    // scan downward on a geometric grid
    let steps = 4000;
    let ratio = (r_hi / lo).powf(1.0 / steps as f64);
    let mut upper = r_hi;
    let mut g_upper = g(upper);
    for _ in 0..steps {
        let lower = (upper / ratio).max(lo);
        let g_lower = g(lower);
        if g_upper > 0.0 && g_lower <= 0.0 {
            let (mut a, mut b) = (lower, upper);
            while (b - a) > 1e-10 * b {
                let m = 0.5 * (a + b);
                if g(m) > 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        upper = lower;
        g_upper = g_lower;
        if lower <= lo {
            break;
        }
    }
    Err(Error::Numeric(format!(
        "no outer turning point for E = {energy:e} in [{lo}, {r_hi}]"
    )))
}

/// Outer classical turning point of energy `E`, searched up to a radius
/// where the effective potential is safely above `E`.
pub fn outer_turning_point(curve: &PotentialCurve, sys: &TrapSystem, energy: f64) -> Result<f64> {
    let mut hi = 10.0f64.max(curve.inner_wall() * 2.0);
    let g = |r: f64| curve.effective_value(sys, r) - energy;
    // grow until the potential rises above E (trap) or we run out of room
    while g(hi) <= 0.0 || hi < 1e3 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!(
                "effective potential stays below E = {energy:e}; no outer turning point"
            )));
        }
    }
    outer_turning_point_in(curve, sys, energy, curve.inner_wall().max(1e-6), hi)
}

/// Box and knot layout for a trapped problem: `R_max = max(8 a_ho, 3 R_out)`
/// where `R_out` is the outer turning point at `e_max`, with
/// `inner_fraction` of the knots packed below `r_switch`.
pub fn default_basis(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    e_max: f64,
    size: usize,
    r_switch: f64,
    inner_fraction: f64,
) -> Result<BasisSpec> {
    let a_ho = sys.a_ho()?;
    let r_out = outer_turning_point(curve, sys, e_max)?;
    let r_max = (8.0 * a_ho).max(3.0 * r_out);
    let r_min = curve.inner_wall();
    let layout = if r_switch >= r_max {
        KnotLayout::Uniform
    } else {
        KnotLayout::Graded {
            r_switch,
            inner_fraction,
        }
    };
    let mut spec = BasisSpec::uniform(r_min, r_max, size);
    spec.layout = layout;
    spec.breakpoints = curve.kinks();
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oscillator(j: u32) -> Vec<VibrationalState> {
        let sys = TrapSystem::new(1.0, j, 1.0).unwrap();
        let spec = BasisSpec::uniform(0.0, 14.0, 160);
        solve_radial(&PotentialCurve::free(), &sys, &spec, 12).unwrap()
    }

    #[test]
    fn oscillator_s_and_p_levels() {
        for j in [0u32, 1] {
            let st = oscillator(j);
            for (n, s) in st.iter().enumerate() {
                let exact = 2.0 * n as f64 + j as f64 + 1.5;
                assert!(
                    ((s.energy - exact) / exact).abs() < 1e-9,
                    "J={j} n={n}: {}",
                    s.energy
                );
            }
        }
    }

    #[test]
    fn oscillator_nodes_and_sign() {
        let st = oscillator(0);
        for s in &st {
            assert_eq!(count_nodes(s), s.v);
            assert!(s.eval(0.3) > 0.0, "first lobe positive");
            assert_eq!(s.label, StateLabel::TrapInduced);
        }
        let (_, first) = classify_states(&st);
        assert_eq!(first, Some(0));
    }

    #[test]
    fn particle_in_box() {
        let sys = TrapSystem::new(2.0, 0, 0.0).unwrap();
        let l = 5.0;
        let st = solve_radial(
            &PotentialCurve::free(),
            &sys,
            &BasisSpec::uniform(0.0, l, 60),
            6,
        )
        .unwrap();
        for (n, s) in st.iter().enumerate() {
            let k = (n + 1) as f64 * PI / l;
            let exact = k * k / (2.0 * 2.0);
            assert!(((s.energy - exact) / exact).abs() < 1e-10);
        }
    }

    #[test]
    fn states_are_orthonormal() {
        let st = oscillator(0);
        for a in &st {
            for b in &st {
                let o = a.overlap_with(b, |_| 1.0).unwrap();
                let want = if a.v == b.v { 1.0 } else { 0.0 };
                assert!((o - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn turning_point_of_pure_trap() {
        let sys = TrapSystem::new(3.0, 0, 0.5).unwrap();
        let e = 1.5 * sys.omega;
        let r = outer_turning_point(&PotentialCurve::free(), &sys, e).unwrap();
        let want = (3.0 / (sys.mu * sys.omega)).sqrt();
        assert!(((r - want) / want).abs() < 1e-9);
        let r2 = outer_turning_point(&PotentialCurve::free(), &sys, 2.0 * e).unwrap();
        assert!(r2 > r);
    }

    #[test]
    fn too_many_states_is_domain_error() {
        let sys = TrapSystem::new(1.0, 0, 1.0).unwrap();
        let spec = BasisSpec::uniform(0.0, 10.0, 20);
        assert!(matches!(
            solve_radial(&PotentialCurve::free(), &sys, &spec, 21),
            Err(Error::Domain(_))
        ));
    }
}
