//! Trap-free s-wave scattering: scattering length from box-discretized
//! continuum states, phase shifts by outward integration, and the
//! energy-dependent scattering length.

use rayon::prelude::*;

use crate::bspline::BasisSpec;
use crate::error::{domain, Error, Result};
use crate::potentials::{PotentialCurve, TrapSystem};
use crate::pseudo;
use crate::radial::solve_radial;

/// One point of the `a_sc` convergence history.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SchedulePoint {
    pub r_max: f64,
    /// Lowest positive box energy, hartree.
    pub e0: f64,
    /// `R_max - π/k`, bohr.
    pub a_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScatteringResult {
    /// Extrapolated scattering length, bohr.
    pub a_sc: f64,
    pub history: Vec<SchedulePoint>,
    /// Wave number of the probe state in the largest box, 1/bohr.
    pub k: f64,
}

/// Default relative tolerance for [`scattering_length`].
pub const DEFAULT_TOLERANCE: f64 = 5e-3;

/// Length below which an absolute scattering length counts as zero when
/// testing convergence.
fn length_floor(curve: &PotentialCurve, mu: f64) -> f64 {
    let mut s = curve.inner_wall();
    for k in curve.kinks() {
        s = s.max(k);
    }
    if let Some(t) = curve.tail_length(mu) {
        s = s.max(t);
    }
    s.max(1.0)
}

/// `a_sc` from the lowest positive-energy state of the trap-free problem in
/// boxes of increasing size.
///
/// Each `R_max` of `schedule` gives `a = R_max - π/√(2μE₀)`. The estimates
/// are extrapolated in `1/R_max`, first removing the quadratic and then the
/// cubic term; the result is accepted once the extrapolation moves the last
/// estimate by less than `tol` relative.
pub fn scattering_length(
    curve: &PotentialCurve,
    mu: f64,
    basis: &BasisSpec,
    schedule: &[f64],
    tol: f64,
) -> Result<ScatteringResult> {
    if schedule.is_empty() {
        return domain("empty R_max schedule");
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("R_max schedule must be strictly increasing");
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let sys = TrapSystem::new(mu, 0, 0.0)?;
    let history = schedule
        .par_iter()
        .map(|&r_max| box_estimate(curve, &sys, &basis.with_r_max(r_max)))
        .collect::<Result<Vec<_>>>()?;

    let est: Vec<f64> = history.iter().map(|p| p.a_estimate).collect();
    let radii: Vec<f64> = history.iter().map(|p| p.r_max).collect();
    let a = extrapolate(&radii, &est);
    let last = *est.last().unwrap();
    let floor = length_floor(curve, mu);
    let k = (2.0 * mu * history.last().unwrap().e0).sqrt();
    let converged = a.is_finite() && (a - last).abs() <= tol * a.abs().max(floor);
    if !converged || est.len() < 2 {
        return Err(Error::NotConverged {
            msg: format!(
                "scattering length not stable to {tol} over the R_max schedule \
                 (last estimate {last:.6e}, extrapolated {a:.6e}); |a_sc| may be comparable \
                 to the box, i.e. close to a threshold resonance"
            ),
            history: history.iter().map(|p| (p.r_max, p.a_estimate)).collect(),
        });
    }
    Ok(ScatteringResult {
        a_sc: a,
        history,
        k,
    })
}

fn box_estimate(
    curve: &PotentialCurve,
    sys: &TrapSystem,
    spec: &BasisSpec,
) -> Result<SchedulePoint> {
    let states = solve_radial(curve, sys, spec, spec.size)?;
    let e0 = states
        .iter()
        .map(|s| s.energy)
        .find(|&e| e > 0.0)
        .ok_or_else(|| {
            Error::Numeric(format!(
                "no positive-energy state in box R_max = {}",
                spec.r_max
            ))
        })?;
    let k = (2.0 * sys.mu * e0).sqrt();
    Ok(SchedulePoint {
        r_max: spec.r_max,
        e0,
        a_estimate: spec.r_max - std::f64::consts::PI / k,
    })
}

/// Richardson extrapolation in `1/R`: one sweep removing `R⁻²`, a second
/// removing `R⁻³`, applied to the last points available.
fn extrapolate(radii: &[f64], est: &[f64]) -> f64 {
    let step = |r: &[f64], e: &[f64], p: i32| -> Vec<f64> {
        (0..e.len() - 1)
            .map(|i| {
                let q = (r[i + 1] / r[i]).powi(p);
                (q * e[i + 1] - e[i]) / (q - 1.0)
            })
            .collect()
    };
    match est.len() {
        1 => est[0],
        2 => step(radii, est, 2)[0],
        n => {
            let r = &radii[n - 3..];
            let first = step(r, &est[n - 3..], 2);
            step(&r[1..], &first, 3)[0]
        }
    }
}

/// Outward Numerov integration of the trap-free s-wave equation from the
/// inner wall. Returns `u` at `r1` and `r2`, both on the grid.
fn integrate_outward(
    curve: &PotentialCurve,
    mu: f64,
    energy: f64,
    r1: f64,
    r2: f64,
) -> Result<(f64, f64, f64, f64)> {
    let r0 = curve.inner_wall();
    // deepest point sets the shortest local wavelength
    let samples = 20_000;
    let mut v_min = 0.0f64;
    let lo = r0.max(1e-3 * r1);
    for i in 0..=samples {
        let r = lo * (r2 / lo).powf(i as f64 / samples as f64);
        let v = curve.value(r);
        if v.is_finite() {
            v_min = v_min.min(v);
        }
    }
    let k_max = (2.0 * mu * (energy - v_min)).sqrt();
    let mut h = (2.0 * std::f64::consts::PI / k_max / 200.0).min((r2 - r0) / 4000.0);
    // put the first kink on the grid
    if let Some(kink) = curve
        .kinks()
        .into_iter()
        .filter(|&k| k > r0 && k < r1)
        .reduce(f64::min)
    {
        let n = ((kink - r0) / h).ceil();
        h = (kink - r0) / n;
    }
    let n1 = ((r1 - r0) / h).round() as usize;
    let n2 = ((r2 - r0) / h).round() as usize;
    if n2 > 50_000_000 {
        return Err(Error::Numeric(format!(
            "phase-shift integration needs {n2} steps; energy or range too large"
        )));
    }
    let kinks = curve.kinks();
    let g = |r: f64| -> f64 {
        let v = if kinks.iter().any(|&k| (k - r).abs() < 1e-9 * k) {
            0.5 * (curve.value(r * (1.0 - 1e-12)) + curve.value(r * (1.0 + 1e-12)))
        } else {
            curve.value(r)
        };
        2.0 * mu * (v - energy)
    };
    let c = h * h / 12.0;
    let mut u = h;
    let mut w_prev = 0.0;
    let mut w = (1.0 - c * g(r0 + h)) * u;
    let mut at1 = None;
    for i in 1..n2 {
        let r = r0 + i as f64 * h;
        let gi = g(r);
        if !gi.is_finite() {
            return Err(Error::Numeric(format!("potential not finite at R = {r}")));
        }
        // w = (1 - c g) u form of Numerov
        let w_next = 2.0 * w - w_prev + h * h * gi * u;
        let r_next = r + h;
        let u_next = w_next / (1.0 - c * g(r_next));
        u = u_next;
        w_prev = w;
        w = w_next;
        if u.abs() > 1e150 {
            u /= 1e150;
            w /= 1e150;
            w_prev /= 1e150;
            if let Some((ra, ua)) = at1 {
                at1 = Some((ra, ua / 1e150));
            }
        }
        if i + 1 == n1 {
            at1 = Some((r_next, u));
        }
    }
    let (ra, ua) = at1.ok_or_else(|| Error::Numeric("matching radius not reached".into()))?;
    Ok((ra, ua, r0 + n2 as f64 * h, u))
}

/// Matching radii: well beyond the interaction scale.
fn matching_radii(curve: &PotentialCurve, mu: f64, k: f64) -> (f64, f64) {
    let mut r1 = 3.0 * length_floor(curve, mu);
    if let Some(t) = curve.tail_length(mu) {
        r1 = r1.max(40.0 * t);
    }
    let r2 = r1 + (0.5 * std::f64::consts::PI / k).min(r1);
    (r1, r2)
}

fn tan_delta(curve: &PotentialCurve, mu: f64, energy: f64) -> Result<(f64, f64, f64)> {
    if !(energy > 1e-300) || !energy.is_finite() {
        return domain(format!("phase shift needs E > 0, got {energy:e}"));
    }
    let k = (2.0 * mu * energy).sqrt();
    let (r1, r2) = matching_radii(curve, mu, k);
    let (ra, ua, rb, ub) = integrate_outward(curve, mu, energy, r1, r2)?;
    let num = ua * (k * rb).sin() - ub * (k * ra).sin();
    let den = ub * (k * ra).cos() - ua * (k * rb).cos();
    Ok((num, den, k))
}

/// s-wave phase shift at energy `E` (hartree), reduced to `(-π/2, π/2]`.
pub fn phase_shift(curve: &PotentialCurve, mu: f64, energy: f64) -> Result<f64> {
    let (num, den, _) = tan_delta(curve, mu, energy)?;
    let mut d = (num / den).atan();
    if den == 0.0 {
        d = std::f64::consts::FRAC_PI_2;
    }
    if d <= -std::f64::consts::FRAC_PI_2 {
        d += std::f64::consts::PI;
    }
    Ok(d)
}

/// Energy-dependent scattering length `a_E = -tan δ₀(E)/k`, bohr.
pub fn energy_dependent_a(curve: &PotentialCurve, mu: f64, energy: f64) -> Result<f64> {
    let (num, den, k) = tan_delta(curve, mu, energy)?;
    if den.abs() <= 1e-13 * num.abs() {
        return Err(Error::Resonance(format!(
            "δ₀ ≈ π/2 at E = {energy:e}; a_E diverges"
        )));
    }
    Ok(-(num / den) / k)
}

/// Zero-energy limit of [`energy_dependent_a`], evaluated where `k` times
/// the interaction length is `1e-4`.
pub fn threshold_a(curve: &PotentialCurve, mu: f64) -> Result<f64> {
    let k = 1e-4 / length_floor(curve, mu);
    energy_dependent_a(curve, mu, k * k / (2.0 * mu))
}

/// Mass factor `s` in `[lo, hi]` for which `curve` with reduced mass
/// `s·μ₀` has scattering length `target` (bohr).
///
/// Solves `1/a(s) = 1/target` (or `a(s) = 0`), which is smooth across the
/// poles of `a`; the bracket must hold exactly one solution.
pub fn tune_mass_factor(
    curve: &PotentialCurve,
    mu0: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return domain(format!(
            "mass-factor bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        ));
    }
    let g = |s: f64| -> f64 {
        match threshold_a(curve, mu0 * s) {
            Ok(a) if target == 0.0 => a,
            Ok(a) => 1.0 / a - 1.0 / target,
            // on a pole 1/a = 0
            Err(Error::Resonance(_)) if target != 0.0 => -1.0 / target,
            Err(_) => f64::NAN,
        }
    };
    crate::rootfind::brent(g, lo, hi, 1e-13 * hi)
}

/// Scattering length that places the trap ground state of the contact model
/// at `E_ground`.
pub fn self_consistent_a_e(e_ground: f64, sys: &TrapSystem) -> Result<f64> {
    let a_ho = sys.a_ho()?;
    let x = e_ground / sys.omega;
    Ok(a_ho * pseudo::xi_from_energy(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_well_a(depth: f64, width: f64, mu: f64) -> f64 {
        let ks = (2.0 * mu * depth).sqrt() * width;
        width * (1.0 - ks.tan() / ks)
    }

    #[test]
    fn free_particle_has_zero_length() {
        let spec = BasisSpec::uniform(0.0, 100.0, 40);
        let r = scattering_length(
            &PotentialCurve::free(),
            1.0,
            &spec,
            &[100.0, 200.0, 400.0],
            1e-3,
        )
        .unwrap();
        for p in &r.history {
            assert!(p.a_estimate.abs() < 1e-6 * p.r_max);
        }
        assert!(r.a_sc.abs() < 1e-4);
    }

    #[test]
    fn hard_sphere_length_and_phase() {
        let c = PotentialCurve::hard_sphere(2.0).unwrap();
        let spec = BasisSpec::uniform(2.0, 100.0, 60);
        let r = scattering_length(&c, 1.0, &spec, &[100.0, 200.0, 400.0], 1e-3).unwrap();
        assert!((r.a_sc - 2.0).abs() < 1e-3, "{}", r.a_sc);
        let e: f64 = 0.02;
        let k = (2.0 * e).sqrt();
        assert!((phase_shift(&c, 1.0, e).unwrap() + k * 2.0).abs() < 1e-7);
        let ae = energy_dependent_a(&c, 1.0, e).unwrap();
        assert!((ae - (k * 2.0).tan() / k).abs() < 1e-6);
    }

    #[test]
    fn square_well_phase_shift() {
        let (v0, s, mu): (f64, f64, f64) = (0.8, 3.0, 1.0);
        let c = PotentialCurve::square_well(v0, s).unwrap();
        let e: f64 = 0.05;
        let k = (2.0 * mu * e).sqrt();
        let q = (2.0 * mu * (e + v0)).sqrt();
        let exact = ((k / q) * (q * s).tan()).atan() - k * s;
        let mut d = phase_shift(&c, mu, e).unwrap();
        let mut want = exact;
        while want <= -std::f64::consts::FRAC_PI_2 {
            want += std::f64::consts::PI;
        }
        while want > std::f64::consts::FRAC_PI_2 {
            want -= std::f64::consts::PI;
        }
        if (d - want).abs() > 3.0 {
            d -= std::f64::consts::PI * (d - want).signum();
        }
        assert!((d - want).abs() < 1e-6, "{d} vs {want}");
        let a0 = energy_dependent_a(&c, mu, 1e-10).unwrap();
        assert!((a0 - square_well_a(v0, s, mu)).abs() < 1e-4 * a0.abs());
    }

    #[test]
    fn square_well_box_extraction() {
        let (v0, s, mu) = (0.1, 3.0, 1.0);
        let c = PotentialCurve::square_well(v0, s).unwrap();
        let spec = BasisSpec::graded(0.0, 200.0, 120, 2.0 * s, 0.5).with_breakpoints([s]);
        let r = scattering_length(&c, mu, &spec, &[200.0, 400.0, 800.0], 5e-3).unwrap();
        let want = square_well_a(v0, s, mu);
        assert!(
            ((r.a_sc - want) / want).abs() < 5e-3,
            "{} vs {want}",
            r.a_sc
        );
    }

    #[test]
    fn non_positive_energy_rejected() {
        assert!(matches!(
            phase_shift(&PotentialCurve::free(), 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }
}
