//! JSON run configuration. Every dimensional key carries its unit in the
//! name; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use trapspec::bspline::{BSplineBasis, BasisSpec, KnotLayout, DEFAULT_ORDER, DEFAULT_QUAD_POINTS};
use trapspec::pipeline::Photoassociation;
use trapspec::potentials::{DispersionTerm, PotentialCurve, TrapSystem};
use trapspec::spectra::DipoleFunction;
use trapspec::units::{omega_from_khz, reduced_mass_identical};
use trapspec::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    #[serde(default)]
    pub potentials: Option<PotentialsBlock>,
    #[serde(default)]
    pub trap: Option<TrapBlock>,
    #[serde(default)]
    pub dipole: Option<DipoleBlock>,
    #[serde(default)]
    pub solver: Option<SolverBlock>,
    #[serde(default)]
    pub outputs: OutputsBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub scatlen: Option<ScatlenBlock>,
    #[serde(default)]
    pub pseudo: Option<PseudoBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    /// Atomic mass of one of the two identical atoms.
    #[serde(default)]
    pub mass_u: Option<f64>,
    /// Reduced mass given directly.
    #[serde(default)]
    pub mu_me: Option<f64>,
    #[serde(default = "one")]
    pub mass_factor: f64,
    #[serde(default)]
    pub j_initial: u32,
    #[serde(default)]
    pub j_final: u32,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsBlock {
    pub initial: CurveConfig,
    #[serde(default, rename = "final")]
    pub fin: Option<CurveConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailTerm {
    pub n: u32,
    #[serde(rename = "C_au")]
    pub c_au: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    Free {
        #[serde(default)]
        inner_wall_bohr: f64,
    },
    HardSphere {
        radius_bohr: f64,
    },
    SquareWell {
        depth_hartree: f64,
        width_bohr: f64,
    },
    Morse {
        depth_hartree: f64,
        r_eq_bohr: f64,
        alpha_per_bohr: f64,
        #[serde(default)]
        inner_wall_bohr: f64,
    },
    /// `C12/R¹² - Σ Cₙ/Rⁿ`.
    LennardJones {
        #[serde(rename = "C12_au")]
        c12_au: f64,
        tail: Vec<TailTerm>,
        inner_wall_bohr: f64,
    },
    /// `A/R¹² - C/Rⁿ` with the minimum `-depth` at `r_eq`.
    LennardJonesMinimum {
        n: u32,
        depth_hartree: f64,
        r_eq_bohr: f64,
        inner_wall_bohr: f64,
    },
    /// `C12/R¹² - Cₙ/Rⁿ` with the minimum at `r_eq`.
    LennardJonesTail {
        n: u32,
        #[serde(rename = "C_au")]
        c_au: f64,
        r_eq_bohr: f64,
        inner_wall_bohr: f64,
    },
    Table {
        path: PathBuf,
        tail: Vec<TailTerm>,
        match_radius_bohr: f64,
        inner_wall_bohr: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapBlock {
    #[serde(default, rename = "nu_kHz")]
    pub nu_khz: Vec<f64>,
    #[serde(default)]
    pub omega_au: Vec<f64>,
    /// Reference frequency for enhancement factors.
    #[serde(default, rename = "nu_ref_kHz")]
    pub nu_ref_khz: Option<f64>,
}

/// Either `constant_au`, or `path` to an `R D` table with `asymptote_au`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleBlock {
    #[serde(default)]
    pub constant_au: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub asymptote_au: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub r_min_bohr: f64,
    /// Outer wall; defaults to `r_max_a_ho` trap lengths of the loosest trap.
    #[serde(default)]
    pub r_max_bohr: Option<f64>,
    #[serde(default = "default_r_max_a_ho")]
    pub r_max_a_ho: f64,
    pub size: usize,
    #[serde(default)]
    pub r_switch_bohr: Option<f64>,
    #[serde(default = "default_inner_fraction")]
    pub inner_fraction: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_quad")]
    pub quad_points: usize,
    /// States to report in `solve`.
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_r_max_a_ho() -> f64 {
    10.0
}
fn default_inner_fraction() -> f64 {
    0.6
}
fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_quad() -> usize {
    DEFAULT_QUAD_POINTS
}
fn default_count() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub wavefunctions: bool,
    /// Radii for wave-function dumps: `[start, stop, count]` on a uniform grid.
    #[serde(default)]
    pub wavefunction_grid_bohr: Option<(f64, f64, usize)>,
    #[serde(default)]
    pub sum_rule: bool,
}

impl Default for OutputsBlock {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            wavefunctions: false,
            wavefunction_grid_bohr: None,
            sum_rule: false,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// `g_c` surface: trap frequencies × mass factors. Mass factors are given
/// directly or as target scattering lengths tuned inside `mass_bracket`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(rename = "nu_kHz")]
    pub nu_khz: Vec<f64>,
    #[serde(default)]
    pub mass_factors: Vec<f64>,
    #[serde(default)]
    pub a_targets_bohr: Vec<f64>,
    #[serde(default)]
    pub mass_bracket: Option<(f64, f64)>,
    #[serde(default)]
    pub reference_mass_factor: Option<f64>,
    #[serde(default)]
    pub reference_a_bohr: Option<f64>,
    #[serde(default)]
    pub reference_bracket: Option<(f64, f64)>,
    #[serde(rename = "nu_ref_kHz", default = "one")]
    pub nu_ref_khz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatlenBlock {
    pub schedule_bohr: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_which")]
    pub curve: String,
}

fn default_tol() -> f64 {
    trapspec::scattering::DEFAULT_TOLERANCE
}
fn default_which() -> String {
    "initial".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoBlock {
    #[serde(default)]
    pub xi: Vec<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub a_bohr: Vec<f64>,
    #[serde(default)]
    pub series_order: Option<usize>,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parses `text`; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<(Self, serde_json::Value)> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let mut cfg: RunConfig = serde_json::from_value(value.clone())
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok((cfg, value))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.potentials.as_mut() {
            if let CurveConfig::Table { path, .. } = &mut p.initial {
                fix(path);
            }
            if let Some(CurveConfig::Table { path, .. }) = p.fin.as_mut() {
                fix(path);
            }
        }
        if let Some(path) = self.dipole.as_mut().and_then(|d| d.path.as_mut()) {
            fix(path);
        }
    }

    fn validate(&self) -> Result<()> {
        match (self.system.mass_u, self.system.mu_me) {
            (Some(_), Some(_)) => {
                return cfg_err("give either system.mass_u or system.mu_me, not both")
            }
            (None, None) => return cfg_err("system needs mass_u or mu_me"),
            _ => {}
        }
        if let Some(t) = &self.trap {
            if !t.nu_khz.is_empty() && !t.omega_au.is_empty() {
                return cfg_err("give trap.nu_kHz or trap.omega_au, not both");
            }
        }
        for path in self.referenced_files() {
            if !path.exists() {
                return cfg_err(format!("referenced file {} does not exist", path.display()));
            }
        }
        Ok(())
    }

    fn referenced_files(&self) -> Vec<PathBuf> {
        let mut v = Vec::new();
        if let Some(p) = &self.potentials {
            if let CurveConfig::Table { path, .. } = &p.initial {
                v.push(path.clone());
            }
            if let Some(CurveConfig::Table { path, .. }) = &p.fin {
                v.push(path.clone());
            }
        }
        if let Some(path) = self.dipole.as_ref().and_then(|d| d.path.as_ref()) {
            v.push(path.clone());
        }
        v
    }

    /// Unscaled reduced mass `μ₀`.
    pub fn mu0(&self) -> Result<f64> {
        let mu = match (self.system.mass_u, self.system.mu_me) {
            (Some(m), None) => reduced_mass_identical(m),
            (None, Some(mu)) => mu,
            _ => unreachable!("validated"),
        };
        if !(mu > 0.0) {
            return cfg_err(format!("reduced mass must be positive, got {mu}"));
        }
        Ok(mu)
    }

    /// `μ₀` times `system.mass_factor`.
    pub fn mu(&self) -> Result<f64> {
        trapspec::potentials::scale_mass(self.mu0()?, self.system.mass_factor)
    }

    /// Trap frequencies in a.u., in config order.
    pub fn omegas(&self) -> Result<Vec<f64>> {
        let t = self
            .trap
            .as_ref()
            .ok_or_else(|| Error::Config("missing trap block".into()))?;
        let w: Vec<f64> = if t.omega_au.is_empty() {
            t.nu_khz.iter().map(|&nu| omega_from_khz(nu)).collect()
        } else {
            t.omega_au.clone()
        };
        if w.is_empty() {
            return cfg_err("trap block lists no frequencies");
        }
        Ok(w)
    }

    pub fn curves(&self) -> Result<&PotentialsBlock> {
        self.potentials
            .as_ref()
            .ok_or_else(|| Error::Config("missing potentials block".into()))
    }

    pub fn initial_curve(&self) -> Result<PotentialCurve> {
        self.curves()?.initial.build()
    }

    pub fn final_curve(&self) -> Result<PotentialCurve> {
        self.curves()?
            .fin
            .as_ref()
            .ok_or_else(|| Error::Config("missing potentials.final".into()))?
            .build()
    }

    pub fn dipole(&self) -> Result<DipoleFunction> {
        let Some(d) = &self.dipole else {
            return Ok(DipoleFunction::Constant(1.0));
        };
        match (d.constant_au, &d.path, d.asymptote_au) {
            (Some(c), None, None) => Ok(DipoleFunction::Constant(c)),
            (None, Some(path), Some(at)) => DipoleFunction::load_table(path, at),
            _ => cfg_err("dipole needs either constant_au, or path together with asymptote_au"),
        }
    }

    pub fn photoassociation(&self) -> Result<Photoassociation> {
        Ok(Photoassociation {
            initial: self.initial_curve()?,
            fin: self.final_curve()?,
            dipole: self.dipole()?,
            j_initial: self.system.j_initial,
            j_final: self.system.j_final,
            laser_intensity: 1.0,
        })
    }

    pub fn solver(&self) -> Result<&SolverBlock> {
        self.solver
            .as_ref()
            .ok_or_else(|| Error::Config("missing solver block".into()))
    }

    /// Basis spec for reduced mass `mu` whose box holds the trap of
    /// frequency `omega_min` (zero: `r_max_bohr` is required).
    pub fn basis_spec(&self, mu: f64, omega_min: f64) -> Result<BasisSpec> {
        let s = self.solver()?;
        let r_max = match s.r_max_bohr {
            Some(r) => r,
            None if omega_min > 0.0 => s.r_max_a_ho * TrapSystem::new(mu, 0, omega_min)?.a_ho()?,
            None => return cfg_err("solver.r_max_bohr is required without a trap"),
        };
        self.basis_spec_at(r_max)
    }

    /// Basis spec with an explicit outer wall.
    pub fn basis_spec_at(&self, r_max: f64) -> Result<BasisSpec> {
        let s = self.solver()?;
        let mut spec = BasisSpec::uniform(s.r_min_bohr, r_max, s.size);
        spec.order = s.order;
        spec.quad_points = s.quad_points;
        if let Some(rs) = s.r_switch_bohr {
            if rs < r_max {
                spec.layout = KnotLayout::Graded {
                    r_switch: rs,
                    inner_fraction: s.inner_fraction,
                };
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Basis with a breakpoint on every kink of `curves`.
    pub fn basis(
        &self,
        mu: f64,
        omega_min: f64,
        curves: &[&PotentialCurve],
    ) -> Result<BSplineBasis> {
        let kinks: Vec<f64> = curves.iter().flat_map(|c| c.kinks()).collect();
        BSplineBasis::new(&self.basis_spec(mu, omega_min)?.with_breakpoints(kinks))
    }
}

fn tail(terms: &[TailTerm]) -> Result<Vec<DispersionTerm>> {
    terms
        .iter()
        .map(|t| DispersionTerm::new(t.n, t.c_au))
        .collect()
}

impl CurveConfig {
    pub fn build(&self) -> Result<PotentialCurve> {
        match self {
            CurveConfig::Free { inner_wall_bohr } => {
                PotentialCurve::free().with_inner_wall(*inner_wall_bohr)
            }
            CurveConfig::HardSphere { radius_bohr } => PotentialCurve::hard_sphere(*radius_bohr),
            CurveConfig::SquareWell {
                depth_hartree,
                width_bohr,
            } => PotentialCurve::square_well(*depth_hartree, *width_bohr),
            CurveConfig::Morse {
                depth_hartree,
                r_eq_bohr,
                alpha_per_bohr,
                inner_wall_bohr,
            } => PotentialCurve::morse(*depth_hartree, *r_eq_bohr, *alpha_per_bohr)?
                .with_inner_wall(*inner_wall_bohr),
            CurveConfig::LennardJones {
                c12_au,
                tail: t,
                inner_wall_bohr,
            } => {
                PotentialCurve::lennard_jones(*c12_au, tail(t)?)?.with_inner_wall(*inner_wall_bohr)
            }
            CurveConfig::LennardJonesMinimum {
                n,
                depth_hartree,
                r_eq_bohr,
                inner_wall_bohr,
            } => PotentialCurve::lennard_jones_from_minimum(*n, *depth_hartree, *r_eq_bohr)?
                .with_inner_wall(*inner_wall_bohr),
            CurveConfig::LennardJonesTail {
                n,
                c_au,
                r_eq_bohr,
                inner_wall_bohr,
            } => PotentialCurve::lennard_jones_tail(*n, *c_au, *r_eq_bohr)?
                .with_inner_wall(*inner_wall_bohr),
            CurveConfig::Table {
                path,
                tail: t,
                match_radius_bohr,
                inner_wall_bohr,
            } => PotentialCurve::load_table(path, tail(t)?, *match_radius_bohr)?
                .with_inner_wall(*inner_wall_bohr),
        }
    }
}
