//! Interaction potentials and the effective radial potential of a trapped
//! atom pair.
//!
//! A [`PotentialCurve`] is a short-range representation (sampled table or
//! analytic model) joined to a dispersion tail `-Σ Cₙ/Rⁿ` at a match radius.
//! The effective potential adds the centrifugal barrier and the isotropic
//! harmonic trap seen by the relative coordinate.

use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::interp::{parse_two_columns, CubicSpline};

/// Default relative mismatch allowed where a short-range representation
/// meets its dispersion tail.
pub const DEFAULT_JOIN_TOLERANCE: f64 = 1e-3;

/// One `-Cₙ/Rⁿ` term of a long-range tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionTerm {
    pub n: u32,
    /// Coefficient in hartree·bohrⁿ; positive means attractive.
    pub coeff: f64,
}

impl DispersionTerm {
    pub fn new(n: u32, coeff: f64) -> Result<Self> {
        if n < 3 {
            return domain(format!("dispersion power must be >= 3, got {n}"));
        }
        if !coeff.is_finite() {
            return domain("dispersion coefficient must be finite");
        }
        Ok(Self { n, coeff })
    }

    fn value(&self, r: f64) -> f64 {
        -self.coeff / r.powi(self.n as i32)
    }
}

/// Short-range part of a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum ShortRange {
    /// No short-range part: the tail (possibly empty) applies everywhere.
    None,
    /// Sampled values joined smoothly by a cubic spline.
    Table(CubicSpline),
    /// `D [ (1 - e^{-α(R - Rₑ)})² - 1 ]`, minimum `-D` at `Rₑ`.
    Morse { depth: f64, r_eq: f64, alpha: f64 },
    /// `A/R¹²` wall added to the dispersion tail at every `R`.
    LennardJones { repulsion: f64 },
    /// `-V₀` for `R < σ`, zero outside.
    SquareWell { depth: f64, width: f64 },
}

/// Interaction potential `V_int(R)` in hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    short_range: ShortRange,
    tail: Vec<DispersionTerm>,
    /// `None`: the short-range expression is used at every `R`.
    match_radius: Option<f64>,
    /// Hard wall: `u(R) = 0` for `R <= inner_wall`.
    inner_wall: f64,
}

fn tail_value(tail: &[DispersionTerm], r: f64) -> f64 {
    tail.iter().map(|t| t.value(r)).sum()
}

impl PotentialCurve {
    /// Joins a short-range representation to a tail at `match_radius`,
    /// failing if the two disagree by more than `join_tolerance` (relative).
    pub fn with_join_tolerance(
        short_range: ShortRange,
        mut tail: Vec<DispersionTerm>,
        match_radius: Option<f64>,
        join_tolerance: f64,
    ) -> Result<Self> {
        tail.sort_by_key(|t| t.n);
        let inner_wall = match &short_range {
            ShortRange::Table(s) => s.x_min(),
            _ => 0.0,
        };
        match &short_range {
            ShortRange::Morse { depth, r_eq, alpha } => {
                if !(*depth > 0.0 && *r_eq > 0.0 && *alpha > 0.0) {
                    return domain("Morse parameters must be positive");
                }
            }
            ShortRange::LennardJones { repulsion } => {
                if !(*repulsion > 0.0) {
                    return domain("Lennard-Jones repulsion must be positive");
                }
                if match_radius.is_some() {
                    return domain(
                        "Lennard-Jones curves carry their tail at every R; no match radius",
                    );
                }
            }
            ShortRange::SquareWell { width, .. } => {
                if !(*width > 0.0) {
                    return domain("square-well width must be positive");
                }
            }
            ShortRange::Table(s) => {
                let rm = match match_radius {
                    Some(rm) => rm,
                    None => return domain("tabulated curves need a match radius"),
                };
                if rm < s.x_min() || rm > s.x_max() {
                    return domain(format!(
                        "match radius {rm} outside table range [{}, {}]",
                        s.x_min(),
                        s.x_max()
                    ));
                }
            }
            ShortRange::None => {}
        }
        let curve = Self {
            short_range,
            tail,
            match_radius,
            inner_wall,
        };
        if let Some(rm) = curve.match_radius {
            if !(rm > 0.0) {
                return domain(format!("match radius must be positive, got {rm}"));
            }
            curve.check_join(rm, join_tolerance)?;
        }
        Ok(curve)
    }

    pub fn new(
        short_range: ShortRange,
        tail: Vec<DispersionTerm>,
        match_radius: Option<f64>,
    ) -> Result<Self> {
        Self::with_join_tolerance(short_range, tail, match_radius, DEFAULT_JOIN_TOLERANCE)
    }

    fn check_join(&self, rm: f64, tol: f64) -> Result<()> {
        let inner = self.short_value(rm);
        let outer = tail_value(&self.tail, rm);
        let scale = if self.tail.is_empty() {
            match &self.short_range {
                ShortRange::Table(s) => s.knots().1.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                ShortRange::Morse { depth, .. } => *depth,
                _ => 1.0,
            }
        } else {
            outer.abs()
        };
        if (inner - outer).abs() > tol * scale {
            return Err(Error::Config(format!(
                "short-range value {inner:.6e} and tail value {outer:.6e} disagree at R_m = {rm} \
                 beyond relative tolerance {tol:e}"
            )));
        }
        Ok(())
    }

    /// Zero potential everywhere.
    pub fn free() -> Self {
        Self {
            short_range: ShortRange::None,
            tail: Vec::new(),
            match_radius: None,
            inner_wall: 0.0,
        }
    }

    /// Pure dispersion curve. Needs an inner wall before it can be solved.
    pub fn tail_only(tail: Vec<DispersionTerm>) -> Self {
        let mut tail = tail;
        tail.sort_by_key(|t| t.n);
        Self {
            short_range: ShortRange::None,
            tail,
            match_radius: None,
            inner_wall: 0.0,
        }
    }

    pub fn hard_sphere(radius: f64) -> Result<Self> {
        Self::free().with_inner_wall(radius)
    }

    pub fn morse(depth: f64, r_eq: f64, alpha: f64) -> Result<Self> {
        Self::new(ShortRange::Morse { depth, r_eq, alpha }, Vec::new(), None)
    }

    pub fn square_well(depth: f64, width: f64) -> Result<Self> {
        Self::new(ShortRange::SquareWell { depth, width }, Vec::new(), None)
    }

    /// `A/R¹² - Σ Cₙ/Rⁿ`.
    pub fn lennard_jones(repulsion: f64, tail: Vec<DispersionTerm>) -> Result<Self> {
        if tail.is_empty() {
            return domain("Lennard-Jones curve needs at least one dispersion term");
        }
        Self::new(ShortRange::LennardJones { repulsion }, tail, None)
    }

    /// `A/R¹² - C/Rⁿ` with the minimum `-depth` placed at `r_eq`.
    pub fn lennard_jones_from_minimum(n: u32, depth: f64, r_eq: f64) -> Result<Self> {
        if !(depth > 0.0 && r_eq > 0.0) || n >= 12 {
            return domain("need depth > 0, r_eq > 0 and n < 12");
        }
        let nf = n as f64;
        let coeff = depth * r_eq.powi(n as i32) * 12.0 / (12.0 - nf);
        let repulsion = nf * coeff * r_eq.powi(12 - n as i32) / 12.0;
        Self::lennard_jones(repulsion, vec![DispersionTerm::new(n, coeff)?])
    }

    /// `A/R¹² - C/Rⁿ` with the given `C` and the minimum placed at `r_eq`.
    pub fn lennard_jones_tail(n: u32, coeff: f64, r_eq: f64) -> Result<Self> {
        if !(coeff > 0.0 && r_eq > 0.0) || n >= 12 {
            return domain("need C > 0, r_eq > 0 and n < 12");
        }
        let repulsion = n as f64 * coeff * r_eq.powi(12 - n as i32) / 12.0;
        Self::lennard_jones(repulsion, vec![DispersionTerm::new(n, coeff)?])
    }

    /// Tabulated short-range curve joined to `tail` at `match_radius`.
    pub fn from_table(
        r: Vec<f64>,
        v: Vec<f64>,
        tail: Vec<DispersionTerm>,
        match_radius: f64,
    ) -> Result<Self> {
        let spline = CubicSpline::new(r, v)?;
        Self::new(ShortRange::Table(spline), tail, Some(match_radius))
    }

    /// Reads a two-column `R V` table (bohr, hartree).
    pub fn load_table(
        path: impl AsRef<Path>,
        tail: Vec<DispersionTerm>,
        match_radius: f64,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let (r, v) = parse_two_columns(&text)?;
        Self::from_table(r, v, tail, match_radius)
    }

    /// Places a hard wall at `radius`; the wave function vanishes there.
    pub fn with_inner_wall(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return domain(format!("inner wall must be non-negative, got {radius}"));
        }
        self.inner_wall = radius;
        Ok(self)
    }

    pub fn inner_wall(&self) -> f64 {
        self.inner_wall
    }

    pub fn tail(&self) -> &[DispersionTerm] {
        &self.tail
    }

    pub fn short_range(&self) -> &ShortRange {
        &self.short_range
    }

    pub fn match_radius(&self) -> Option<f64> {
        self.match_radius
    }

    /// Leading (smallest `n`) dispersion term.
    pub fn leading_term(&self) -> Option<DispersionTerm> {
        self.tail.first().copied()
    }

    /// Radii where the potential is not smooth; useful as basis breakpoints.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = Vec::new();
        if let ShortRange::SquareWell { width, .. } = self.short_range {
            k.push(width);
        }
        if let Some(rm) = self.match_radius {
            k.push(rm);
        }
        if self.inner_wall > 0.0 {
            k.push(self.inner_wall);
        }
        k
    }

    /// Characteristic length of the leading tail term,
    /// `(2μCₙ)^{1/(n-2)}` (β₆ for a van der Waals tail).
    pub fn tail_length(&self, mu: f64) -> Option<f64> {
        self.leading_term()
            .filter(|t| t.coeff > 0.0)
            .map(|t| (2.0 * mu * t.coeff).powf(1.0 / (t.n as f64 - 2.0)))
    }

    fn short_value(&self, r: f64) -> f64 {
        match &self.short_range {
            ShortRange::None => tail_value(&self.tail, r),
            ShortRange::Table(s) => s.eval(r),
            ShortRange::Morse { depth, r_eq, alpha } => {
                let e = 1.0 - (-alpha * (r - r_eq)).exp();
                depth * (e * e - 1.0)
            }
            ShortRange::LennardJones { repulsion } => {
                repulsion / r.powi(12) + tail_value(&self.tail, r)
            }
            ShortRange::SquareWell { depth, width } => {
                if r < *width {
                    -depth
                } else {
                    0.0
                }
            }
        }
    }

    /// `V_int(R)` without argument checks. Inside the inner wall the value
    /// is `+∞`.
    pub(crate) fn value(&self, r: f64) -> f64 {
        if r < self.inner_wall {
            return f64::INFINITY;
        }
        match self.match_radius {
            Some(rm) if r >= rm => tail_value(&self.tail, r),
            _ => self.short_value(r),
        }
    }

    /// Interaction potential at `r` (bohr), in hartree.
    pub fn eval_potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return domain(format!("potential needs R > 0, got {r}"));
        }
        Ok(self.value(r))
    }

    /// `V_int(R) + J(J+1)/(2μR²) + ½μω²R²`.
    pub fn effective_potential(&self, sys: &TrapSystem, r: f64) -> Result<f64> {
        Ok(self.eval_potential(r)? + sys.centrifugal(r) + sys.trap(r))
    }

    pub(crate) fn effective_value(&self, sys: &TrapSystem, r: f64) -> f64 {
        self.value(r) + sys.centrifugal(r) + sys.trap(r)
    }
}

/// Relative-motion parameters of the trapped pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapSystem {
    /// Reduced mass in electron masses.
    pub mu: f64,
    /// Rotational quantum number.
    pub j: u32,
    /// Trap angular frequency in atomic units; zero means no trap.
    pub omega: f64,
}

impl TrapSystem {
    pub fn new(mu: f64, j: u32, omega: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return domain(format!("reduced mass must be positive, got {mu}"));
        }
        if !(omega >= 0.0) || !omega.is_finite() {
            return domain(format!("trap frequency must be non-negative, got {omega}"));
        }
        Ok(Self { mu, j, omega })
    }

    /// Trap length `sqrt(1/(μω))`; undefined without a trap.
    pub fn a_ho(&self) -> Result<f64> {
        if self.omega > 0.0 {
            Ok(crate::units::harmonic_length(self.mu, self.omega))
        } else {
            domain("harmonic length undefined for omega = 0")
        }
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.mu, self.j, omega)
    }

    pub fn with_j(&self, j: u32) -> Self {
        Self { j, ..*self }
    }

    pub fn centrifugal(&self, r: f64) -> f64 {
        if self.j == 0 {
            0.0
        } else {
            let jj = self.j as f64 * (self.j as f64 + 1.0);
            jj / (2.0 * self.mu * r * r)
        }
    }

    pub fn trap(&self, r: f64) -> f64 {
        0.5 * self.mu * self.omega * self.omega * r * r
    }
}

/// `mu0 · factor`; the interaction curve is left untouched, so this tunes
/// the scattering length through the kinetic term only.
pub fn scale_mass(mu0: f64, factor: f64) -> Result<f64> {
    if !(factor > 0.0) || !factor.is_finite() {
        return domain(format!("mass scale factor must be positive, got {factor}"));
    }
    if !(mu0 > 0.0) {
        return domain(format!("reduced mass must be positive, got {mu0}"));
    }
    Ok(mu0 * factor)
}

/// Radius where the trap energy `½μω²R²` equals `Cₙ/Rⁿ`:
/// `R_c = (2Cₙ/(μω²))^{1/(n+2)}`.
pub fn trap_crossing_radius(coeff: f64, n: u32, sys: &TrapSystem) -> Result<f64> {
    if !(coeff > 0.0) {
        return domain(format!("crossing radius needs C_n > 0, got {coeff}"));
    }
    if !(sys.omega > 0.0) {
        return domain("no crossing radius without a trap (omega = 0)");
    }
    Ok((2.0 * coeff / (sys.mu * sys.omega * sys.omega)).powf(1.0 / (n as f64 + 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::omega_from_khz;

    const MU_LI6: f64 = 5482.0;

    #[test]
    fn tail_only_value() {
        let c = PotentialCurve::tail_only(vec![DispersionTerm::new(6, 1.0).unwrap()]);
        assert!((c.eval_potential(10.0).unwrap() + 1e-6).abs() < 1e-20);
        assert!(c.eval_potential(0.0).is_err());
        assert!(c.eval_potential(-1.0).is_err());
    }

    #[test]
    fn table_reproduces_knots() {
        let r: Vec<f64> = (0..20).map(|i| 4.0 + 0.5 * i as f64).collect();
        let v: Vec<f64> = r
            .iter()
            .map(|x| 1e4 / x.powi(12) - 1393.0 / x.powi(6))
            .collect();
        let rm = r[19];
        let tail = vec![DispersionTerm::new(6, 1393.0).unwrap()];
        let c = PotentialCurve::from_table(r.clone(), v.clone(), tail, rm).unwrap();
        for (x, y) in r.iter().zip(&v).take(19) {
            assert!((c.eval_potential(*x).unwrap() - y).abs() <= 1e-15 * y.abs().max(1e-300));
        }
        assert_eq!(c.inner_wall(), 4.0);
        assert_eq!(c.eval_potential(3.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn table_join_mismatch_fails_loudly() {
        let r = vec![5.0, 6.0, 7.0, 8.0];
        let v = vec![-1e-3, -2e-3, -1e-3, -5e-4];
        let tail = vec![DispersionTerm::new(6, 1393.0).unwrap()];
        let err = PotentialCurve::from_table(r, v, tail, 8.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn morse_minimum() {
        let c = PotentialCurve::morse(0.01, 5.0, 0.9).unwrap();
        assert!((c.eval_potential(5.0).unwrap() + 0.01).abs() < 1e-16);
    }

    #[test]
    fn lennard_jones_minimum_placement() {
        let c = PotentialCurve::lennard_jones_from_minimum(6, 2.5e-3, 8.0).unwrap();
        assert!((c.eval_potential(8.0).unwrap() + 2.5e-3).abs() < 1e-15);
        let h = 1e-5;
        let d =
            (c.eval_potential(8.0 + h).unwrap() - c.eval_potential(8.0 - h).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-10);
        // far out only the tail survives
        let t = c.leading_term().unwrap();
        let far = c.eval_potential(200.0).unwrap();
        assert!(((far + t.coeff / 200f64.powi(6)) / far).abs() < 1e-8);
    }

    #[test]
    fn effective_potential_pure_trap() {
        let sys = TrapSystem::new(1.0, 0, 1.0).unwrap();
        let v = PotentialCurve::free()
            .effective_potential(&sys, 2.0)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn effective_potential_reduces_without_trap_and_rotation() {
        let c = PotentialCurve::lennard_jones_from_minimum(6, 2.5e-3, 8.0).unwrap();
        let sys = TrapSystem::new(MU_LI6, 0, 0.0).unwrap();
        for &r in &[4.0, 8.0, 30.0, 1000.0] {
            assert_eq!(
                c.effective_potential(&sys, r).unwrap(),
                c.eval_potential(r).unwrap()
            );
        }
    }

    #[test]
    fn trap_dominates_c6_tail_beyond_crossing() {
        let c = PotentialCurve::tail_only(vec![DispersionTerm::new(6, 1393.0).unwrap()]);
        let sys = TrapSystem::new(MU_LI6, 0, omega_from_khz(10.0)).unwrap();
        let rc = trap_crossing_radius(1393.0, 6, &sys).unwrap();
        assert!((rc - 825.0).abs() < 0.01 * 825.0, "R_c = {rc}");
        let tail = |r: f64| c.eval_potential(r).unwrap().abs();
        assert!(sys.trap(0.98 * rc) < tail(0.98 * rc));
        assert!(sys.trap(1.02 * rc) > tail(1.02 * rc));
    }

    #[test]
    fn crossing_radius_c3() {
        let sys = TrapSystem::new(MU_LI6, 0, omega_from_khz(10.0)).unwrap();
        let rc = trap_crossing_radius(11.0, 3, &sys).unwrap();
        assert!((rc - 1.77e4).abs() < 0.01 * 1.77e4, "R_c = {rc}");
    }

    #[test]
    fn crossing_radius_scaling_and_errors() {
        let s1 = TrapSystem::new(MU_LI6, 0, 1e-12).unwrap();
        let s4 = s1.with_omega(4e-12).unwrap();
        let r1 = trap_crossing_radius(1393.0, 6, &s1).unwrap();
        let r4 = trap_crossing_radius(1393.0, 6, &s4).unwrap();
        assert!((r4 / r1 - 0.5f64.sqrt()).abs() < 1e-12);
        let s0 = s1.with_omega(0.0).unwrap();
        assert!(trap_crossing_radius(1393.0, 6, &s0).is_err());
    }

    #[test]
    fn mass_scaling() {
        assert_eq!(scale_mass(5482.0, 1.0).unwrap(), 5482.0);
        assert!((scale_mass(5482.0, 1.003).unwrap() - 5498.446).abs() < 1e-9);
        assert!((scale_mass(5482.0, 0.82).unwrap() - 4495.24).abs() < 1e-9);
        assert!(scale_mass(5482.0, 0.0).is_err());
        assert!(scale_mass(5482.0, -1.0).is_err());
    }

    #[test]
    fn system_validation() {
        assert!(TrapSystem::new(0.0, 0, 1.0).is_err());
        assert!(TrapSystem::new(1.0, 0, -1.0).is_err());
        assert!(TrapSystem::new(1.0, 0, 0.0).unwrap().a_ho().is_err());
    }
}
