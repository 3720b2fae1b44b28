//! End-to-end photoassociation runs: initial and final curves solved on one
//! basis, the spectrum from the first trap-induced initial state, and the
//! `g_c` surface over trap frequency and mass factor.

use rayon::prelude::*;

use crate::bspline::{BSplineBasis, BasisSpec};
use crate::error::{domain, Error, Result};
use crate::potentials::{scale_mass, PotentialCurve, TrapSystem};
use crate::radial::{solve_bound_plus, solve_on_basis, VibrationalState};
use crate::scattering::threshold_a;
use crate::spectra::{
    build_spectrum, constant_regime, enhancement_g, DipoleFunction, SpectrumTable,
};

/// Two electronic curves and the transition between them.
#[derive(Debug, Clone)]
pub struct Photoassociation {
    pub initial: PotentialCurve,
    pub fin: PotentialCurve,
    pub dipole: DipoleFunction,
    pub j_initial: u32,
    pub j_final: u32,
    pub laser_intensity: f64,
}

#[derive(Debug, Clone)]
pub struct Run {
    /// First trap-induced state of the initial curve.
    pub initial: VibrationalState,
    pub finals: Vec<VibrationalState>,
    pub table: SpectrumTable,
}

/// Graded box reaching `10 a_ho` of the loosest trap; uniform knots below
/// `r_switch` hold `inner_fraction` of the intervals.
pub fn pipeline_basis(
    mu: f64,
    omega_min: f64,
    r_min: f64,
    size: usize,
    r_switch: f64,
    inner_fraction: f64,
) -> Result<BSplineBasis> {
    let a_ho = TrapSystem::new(mu, 0, omega_min)?.a_ho()?;
    BSplineBasis::new(&BasisSpec::graded(
        r_min,
        10.0 * a_ho,
        size,
        r_switch,
        inner_fraction,
    ))
}

impl Photoassociation {
    /// Spectrum at `(μ, ω)`. With `final_count = None` every bound final
    /// level is included, otherwise the `n` lowest final levels whatever
    /// their energy (to keep the indexing of a reference run).
    pub fn run(
        &self,
        mu: f64,
        omega: f64,
        basis: &BSplineBasis,
        final_count: Option<usize>,
    ) -> Result<Run> {
        let sys_i = TrapSystem::new(mu, self.j_initial, omega)?;
        let sys_f = TrapSystem::new(mu, self.j_final, omega)?;
        let (states, finals) = rayon::join(
            || solve_bound_plus(&self.initial, &sys_i, basis, 1),
            || match final_count {
                None => solve_bound_plus(&self.fin, &sys_f, basis, 0),
                Some(n) => solve_on_basis(&self.fin, &sys_f, basis, n),
            },
        );
        let initial = states?
            .pop()
            .ok_or_else(|| Error::Numeric("initial curve produced no states".into()))?;
        let finals = finals?;
        if finals.is_empty() {
            return domain("final curve has no bound levels in this box");
        }
        let table = build_spectrum(
            &initial,
            &finals,
            &self.fin,
            &sys_f,
            &self.dipole,
            self.laser_intensity,
        )?;
        Ok(Run {
            initial,
            finals,
            table,
        })
    }
}

/// One point of the `g_c(ω, a_sc)` surface.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SurfacePoint {
    pub omega: f64,
    pub mass_factor: f64,
    pub a_sc: f64,
    /// `g` at `v = 0`.
    pub g_c: f64,
    pub plateau_median: f64,
    pub v_break: Option<usize>,
}

/// Reference of a `g` surface: `(ω_ref, μ₀·s_ref)` with `a_sc(s_ref) ≈ 0`.
#[derive(Debug, Clone)]
pub struct SurfaceReference {
    pub run: Run,
    pub omega: f64,
    pub mass_factor: f64,
}

impl Photoassociation {
    pub fn reference(
        &self,
        mu0: f64,
        omega_ref: f64,
        mass_factor_ref: f64,
        basis: &BSplineBasis,
    ) -> Result<SurfaceReference> {
        let mu = scale_mass(mu0, mass_factor_ref)?;
        Ok(SurfaceReference {
            run: self.run(mu, omega_ref, basis, None)?,
            omega: omega_ref,
            mass_factor: mass_factor_ref,
        })
    }

    /// `g_c` at one grid point against `reference`.
    pub fn surface_point(
        &self,
        mu0: f64,
        omega: f64,
        mass_factor: f64,
        reference: &SurfaceReference,
        basis: &BSplineBasis,
    ) -> Result<SurfacePoint> {
        let mu = scale_mass(mu0, mass_factor)?;
        let n = reference.run.finals.len();
        let run = self.run(mu, omega, basis, Some(n))?;
        let g = enhancement_g(&run.table, &reference.run.table)?;
        let r_out: Vec<Option<f64>> = run.table.rows.iter().map(|r| r.r_out).collect();
        let regime = constant_regime(&g, &r_out, &run.initial, &reference.run.initial, 1e-3)?;
        Ok(SurfacePoint {
            omega,
            mass_factor,
            a_sc: threshold_a(&self.initial, mu)?,
            g_c: regime.f_c,
            plateau_median: regime.plateau_median,
            v_break: regime.v_break_empirical,
        })
    }

    /// Row-major `omegas × mass_factors` grid, evaluated in parallel and
    /// returned in grid order.
    pub fn surface(
        &self,
        mu0: f64,
        omegas: &[f64],
        mass_factors: &[f64],
        reference: &SurfaceReference,
        basis: &BSplineBasis,
    ) -> Result<Vec<SurfacePoint>> {
        let grid: Vec<(f64, f64)> = omegas
            .iter()
            .flat_map(|&w| mass_factors.iter().map(move |&s| (w, s)))
            .collect();
        grid.par_iter()
            .map(|&(w, s)| self.surface_point(mu0, w, s, reference, basis))
            .collect()
    }
}
