//! Photoassociation transition strengths, sum rule, enhancement factors and
//! spectral structure (constant regime, photoassociation window).

use std::path::Path;

use rayon::prelude::*;

use crate::bspline::BSplineBasis;
use crate::error::{domain, Error, Result};
use crate::interp::{parse_two_columns, CubicSpline};
use crate::potentials::{PotentialCurve, TrapSystem};
use crate::radial::{node_positions, outer_turning_point_in, StateLabel, VibrationalState};

/// Electronic transition dipole `D(R)` in atomic units.
#[derive(Debug, Clone, PartialEq)]
pub enum DipoleFunction {
    Constant(f64),
    /// Interpolated on the table range, `asymptote` beyond its last knot and
    /// the first tabulated value inside its first knot.
    Table {
        spline: CubicSpline,
        asymptote: f64,
    },
}

impl DipoleFunction {
    pub fn table(r: Vec<f64>, d: Vec<f64>, asymptote: f64) -> Result<Self> {
        if !asymptote.is_finite() {
            return domain("dipole asymptote must be finite");
        }
        Ok(Self::Table {
            spline: CubicSpline::new(r, d)?,
            asymptote,
        })
    }

    pub fn load_table(path: &Path, asymptote: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (r, d) = parse_two_columns(&text)?;
        Self::table(r, d, asymptote)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant(d) => *d,
            Self::Table { spline, asymptote } => {
                if r >= spline.x_max() {
                    *asymptote
                } else if r <= spline.x_min() {
                    spline.knots().1[0]
                } else {
                    spline.eval(r)
                }
            }
        }
    }

    /// `D_at`, the large-`R` value.
    pub fn asymptote(&self) -> f64 {
        match self {
            Self::Constant(d) => *d,
            Self::Table { asymptote, .. } => *asymptote,
        }
    }
}

/// `I = |∫ u_i(R) D(R) u_f(R) dR|²` with the solver's quadrature.
pub fn transition_moment(
    initial: &VibrationalState,
    fin: &VibrationalState,
    d: &DipoleFunction,
) -> Result<f64> {
    Ok(initial.overlap_with(fin, |r| d.eval(r))?.powi(2))
}

/// An external initial wave function (e.g. a pseudopotential state)
/// tabulated on the quadrature abscissae of `basis`.
pub fn sample_on_quadrature<F: Fn(f64) -> Result<f64>>(
    basis: &BSplineBasis,
    initial: F,
) -> Result<Vec<f64>> {
    basis.quadrature().0.iter().map(|&r| initial(r)).collect()
}

/// As [`transition_moment`] for an initial wave function given by its
/// values from [`sample_on_quadrature`] on the final state's basis.
pub fn transition_moment_sampled(
    initial: &[f64],
    fin: &VibrationalState,
    d: &DipoleFunction,
) -> Result<f64> {
    let (xs, ws) = fin.basis().quadrature();
    if initial.len() != xs.len() {
        return Err(Error::Config(format!(
            "initial wave function has {} samples, basis has {} quadrature points",
            initial.len(),
            xs.len()
        )));
    }
    let u = fin.on_quadrature();
    let sum: f64 = (0..xs.len())
        .map(|q| ws[q] * initial[q] * d.eval(xs[q]) * u[q])
        .sum();
    Ok(sum * sum)
}

/// `Γ = 4π² 𝓘 I`.
pub fn rate(i: f64, laser_intensity: f64) -> Result<f64> {
    if !(laser_intensity >= 0.0) {
        return domain(format!(
            "laser intensity must be >= 0, got {laser_intensity}"
        ));
    }
    Ok(4.0 * std::f64::consts::PI.powi(2) * laser_intensity * i)
}

/// Both sides of `Σ_v I^v = ⟨Ψ_i|D²|Ψ_i⟩`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SumRule {
    pub sum: f64,
    pub integral: f64,
    pub defect: f64,
    /// Whether `states` covered the whole basis.
    pub complete: bool,
}

pub fn sum_rule(
    initial: &VibrationalState,
    d: &DipoleFunction,
    states: &[VibrationalState],
) -> Result<SumRule> {
    let terms = states
        .par_iter()
        .map(|s| transition_moment(initial, s, d))
        .collect::<Result<Vec<f64>>>()?;
    let sum: f64 = terms.iter().sum();
    let integral = initial.overlap_with(initial, |r| d.eval(r).powi(2))?;
    Ok(SumRule {
        sum,
        integral,
        defect: sum - integral,
        complete: states.len() == initial.basis().size(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumRow {
    pub v: usize,
    pub energy: f64,
    pub label: StateLabel,
    /// Outer classical turning point of the final level, if it has one
    /// inside the box.
    pub r_out: Option<f64>,
    pub i_v: f64,
    pub gamma_v: f64,
    pub f_v: Option<f64>,
    pub g_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumMeta {
    pub omega: f64,
    pub mu: f64,
    pub a_sc: Option<f64>,
    pub laser_intensity: f64,
    pub initial_v: usize,
    pub initial_energy: f64,
    pub dipole_asymptote: f64,
}

/// Transition strengths from one initial state to a set of final levels.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumTable {
    pub meta: SpectrumMeta,
    pub rows: Vec<SpectrumRow>,
}

/// Builds the table row by row (in parallel over final levels).
pub fn build_spectrum(
    initial: &VibrationalState,
    finals: &[VibrationalState],
    final_curve: &PotentialCurve,
    final_sys: &TrapSystem,
    d: &DipoleFunction,
    laser_intensity: f64,
) -> Result<SpectrumTable> {
    let r_lo = final_curve.inner_wall().max(initial.basis().r_min());
    let r_hi = initial.basis().r_max();
    let rows = finals
        .par_iter()
        .map(|f| {
            let i_v = transition_moment(initial, f, d)?;
            Ok(SpectrumRow {
                v: f.v,
                energy: f.energy,
                label: f.label,
                r_out: outer_turning_point_in(final_curve, final_sys, f.energy, r_lo, r_hi).ok(),
                i_v,
                gamma_v: rate(i_v, laser_intensity)?,
                f_v: None,
                g_v: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable {
        meta: SpectrumMeta {
            omega: final_sys.omega,
            mu: final_sys.mu,
            a_sc: None,
            laser_intensity,
            initial_v: initial.v,
            initial_energy: initial.energy,
            dipole_asymptote: d.asymptote(),
        },
        rows,
    })
}

impl SpectrumTable {
    pub fn intensities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.i_v).collect()
    }

    /// Only the rows of levels below threshold.
    pub fn bound_only(&self) -> SpectrumTable {
        SpectrumTable {
            meta: self.meta.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.label == StateLabel::Bound)
                .cloned()
                .collect(),
        }
    }

    pub fn set_f(&mut self, ratios: &[Option<f64>]) {
        for (row, f) in self.rows.iter_mut().zip(ratios) {
            row.f_v = *f;
        }
    }

    pub fn set_g(&mut self, ratios: &[Option<f64>]) {
        for (row, g) in self.rows.iter_mut().zip(ratios) {
            row.g_v = *g;
        }
    }

    /// CSV with the fixed column set; every line of `header` is emitted as a
    /// `#` comment first.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(CSV_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.v,
                fmt_f64(r.energy),
                r.label.as_str(),
                fmt_opt(r.r_out),
                fmt_f64(r.i_v),
                fmt_f64(r.gamma_v),
                fmt_opt(r.f_v),
                fmt_opt(r.g_v)
            ));
        }
        out
    }
}

impl SpectrumTable {
    /// Reads the rows written by [`SpectrumTable::to_csv`]; comment lines
    /// are skipped and the metadata is left empty.
    pub fn from_csv(text: &str) -> Result<SpectrumTable> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_COLUMNS => {}
            Some((i, _)) => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected header `{CSV_COLUMNS}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "empty spectrum file".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(err(format!("expected 8 fields, got {}", f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| err(format!("bad number `{s}`: {e}")))
            };
            let opt = |s: &str| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            let label = match f[2] {
                "bound" => StateLabel::Bound,
                "trap_induced" => StateLabel::TrapInduced,
                other => return Err(err(format!("unknown label `{other}`"))),
            };
            rows.push(SpectrumRow {
                v: f[0]
                    .parse()
                    .map_err(|e| err(format!("bad index `{}`: {e}", f[0])))?,
                energy: num(f[1])?,
                label,
                r_out: opt(f[3])?,
                i_v: num(f[4])?,
                gamma_v: num(f[5])?,
                f_v: opt(f[6])?,
                g_v: opt(f[7])?,
            });
        }
        Ok(SpectrumTable {
            meta: SpectrumMeta {
                omega: f64::NAN,
                mu: f64::NAN,
                a_sc: None,
                laser_intensity: f64::NAN,
                initial_v: 0,
                initial_energy: f64::NAN,
                dipole_asymptote: f64::NAN,
            },
            rows,
        })
    }
}

/// Column header of the spectrum CSV.
pub const CSV_COLUMNS: &str = "v,E_v_hartree,label,R_out_bohr,I_v,Gamma_v,f_v,g_v";

/// Fixed scientific formatting used for every emitted float.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Ratios `I^v(ω)/I^v(ω_ref)`; `None` where the reference intensity is zero.
/// Both tables must list the same levels.
pub fn enhancement_f(spec: &SpectrumTable, reference: &SpectrumTable) -> Result<Vec<Option<f64>>> {
    if spec.rows.len() != reference.rows.len() {
        return Err(Error::Config(format!(
            "spectra list different numbers of levels ({} vs {}); compare bound levels of one curve",
            spec.rows.len(),
            reference.rows.len()
        )));
    }
    Ok(spec
        .rows
        .iter()
        .zip(&reference.rows)
        .map(|(a, b)| {
            if b.i_v > 0.0 && b.i_v.is_finite() {
                Some(a.i_v / b.i_v)
            } else {
                None
            }
        })
        .collect())
}

/// `g^v = I^v(ω, a)/I^v(ω_ref, a_ref)` with the reference computed for an
/// interaction tuned to `a_ref ≈ 0`; the arithmetic is that of
/// [`enhancement_f`].
pub fn enhancement_g(spec: &SpectrumTable, reference: &SpectrumTable) -> Result<Vec<Option<f64>>> {
    enhancement_f(spec, reference)
}

/// Empirical plateau of an enhancement table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Plateau {
    /// `f` at `v = 0`.
    pub f_c: f64,
    /// Median of `f` over the plateau.
    pub median: f64,
    /// `f_c` and the plateau median differ by more than 2 %.
    pub warning: bool,
    /// First `v` with `|f^v/f_c - 1| >` [`PLATEAU_TOLERANCE`] (or an
    /// undefined ratio).
    pub v_break: Option<usize>,
}

/// Relative deviation from `f_c` that ends the empirical plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.1;

pub fn plateau(ratios: &[Option<f64>]) -> Result<Plateau> {
    let f_c = match ratios.first() {
        Some(Some(f)) if *f > 0.0 && f.is_finite() => *f,
        _ => {
            return Err(Error::Numeric(
                "no constant regime: f at v = 0 is undefined".into(),
            ))
        }
    };
    let v_break = ratios
        .iter()
        .position(|f| f.is_none_or(|f| (f / f_c - 1.0).abs() > PLATEAU_TOLERANCE));
    let values: Vec<f64> = ratios[..v_break.unwrap_or(ratios.len())]
        .iter()
        .map(|f| f.unwrap())
        .collect();
    let median = median(&values);
    Ok(Plateau {
        f_c,
        median,
        warning: ((median - f_c) / f_c).abs() > 0.02,
        v_break,
    })
}

/// Plateau analysis plus the `Δ(R)` prediction of where it ends.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConstantRegime {
    pub f_c: f64,
    pub plateau_median: f64,
    pub warning: bool,
    /// First `R` where `|√f_c Ψ(R; ω_ref) - Ψ(R; ω)|` exceeds the threshold.
    pub r0: Option<f64>,
    /// First `v` whose outer turning point lies beyond `r0`.
    pub v_break_predicted: Option<usize>,
    /// As [`Plateau::v_break`].
    pub v_break_empirical: Option<usize>,
}

pub fn constant_regime(
    ratios: &[Option<f64>],
    r_out: &[Option<f64>],
    initial: &VibrationalState,
    initial_ref: &VibrationalState,
    threshold: f64,
) -> Result<ConstantRegime> {
    let p = plateau(ratios)?;
    let r0 = delta_radius(p.f_c, initial, initial_ref, threshold);
    let v_pred = r0.and_then(|r0| r_out.iter().position(|r| r.is_none_or(|r| r > r0)));
    Ok(ConstantRegime {
        f_c: p.f_c,
        plateau_median: p.median,
        warning: p.warning,
        r0,
        v_break_predicted: v_pred,
        v_break_empirical: p.v_break,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `R₀` of the `Δ(R)` rule, scanned on a grid fine enough to resolve both
/// wave functions and refined by bisection.
pub fn delta_radius(
    f_c: f64,
    initial: &VibrationalState,
    initial_ref: &VibrationalState,
    threshold: f64,
) -> Option<f64> {
    let c = f_c.sqrt();
    let delta = |r: f64| (c * initial_ref.eval(r) - initial.eval(r)).abs();
    let lo = initial.basis().r_min().max(initial_ref.basis().r_min());
    let hi = initial.basis().r_max().min(initial_ref.basis().r_max());
    // quadrature abscissae of both bases resolve both functions
    let mut grid: Vec<f64> = initial
        .basis()
        .quadrature()
        .0
        .iter()
        .chain(initial_ref.basis().quadrature().0)
        .copied()
        .filter(|&r| r > lo && r < hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    let mut prev = lo;
    for &r in &grid {
        if delta(r) > threshold {
            let (mut a, mut b) = (prev, r);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if delta(m) > threshold {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Some(b);
        }
        prev = r;
    }
    None
}

/// Dips of a spectrum and the outer node of the initial state.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Window {
    /// Indices `v` of local minima of `log₁₀ I^v` at least one decade below
    /// both neighbours.
    pub dips: Vec<usize>,
    /// Depth in decades for each dip (smaller neighbour minus the dip).
    pub depths: Vec<f64>,
    /// Largest node of the initial state beyond `r_molecular`.
    pub r_x: Option<f64>,
}

pub fn find_window(intensities: &[f64], initial: &VibrationalState, r_molecular: f64) -> Window {
    let logs: Vec<f64> = intensities
        .iter()
        .map(|&i| {
            if i > 0.0 {
                i.log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut dips = Vec::new();
    let mut depths = Vec::new();
    for v in 1..logs.len().saturating_sub(1) {
        let depth = logs[v - 1].min(logs[v + 1]) - logs[v];
        if depth >= 1.0 {
            dips.push(v);
            depths.push(depth);
        }
    }
    let r_x = node_positions(initial)
        .into_iter()
        .filter(|&r| r > r_molecular)
        .reduce(f64::max);
    Window { dips, depths, r_x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::BasisSpec;
    use crate::radial::solve_on_basis;

    fn oscillator_states() -> Vec<VibrationalState> {
        let sys = TrapSystem::new(1.0, 0, 1.0).unwrap();
        let basis = BSplineBasis::new(&BasisSpec::uniform(0.0, 12.0, 60)).unwrap();
        solve_on_basis(&PotentialCurve::free(), &sys, &basis, 60).unwrap()
    }

    #[test]
    fn self_and_orthogonal_moments() {
        let st = oscillator_states();
        let one = DipoleFunction::Constant(1.0);
        assert!((transition_moment(&st[0], &st[0], &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(transition_moment(&st[0], &st[3], &one).unwrap() < 1e-20);
        let d =
            DipoleFunction::table(vec![0.0, 2.0, 5.0, 9.0], vec![0.5, 0.8, 1.1, 1.2], 1.2).unwrap();
        let a = transition_moment(&st[1], &st[4], &d).unwrap();
        let b = transition_moment(&st[4], &st[1], &d).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn closure_with_unit_and_constant_dipole() {
        let st = oscillator_states();
        let r = sum_rule(&st[2], &DipoleFunction::Constant(1.0), &st).unwrap();
        assert!(r.complete && r.defect.abs() < 1e-10);
        let r = sum_rule(&st[2], &DipoleFunction::Constant(3.3), &st).unwrap();
        assert!((r.sum - 3.3 * 3.3).abs() < 1e-9 && (r.integral - 3.3 * 3.3).abs() < 1e-9);
        let partial = sum_rule(&st[2], &DipoleFunction::Constant(1.0), &st[..2]).unwrap();
        assert!(!partial.complete && partial.defect < -0.9);
    }

    #[test]
    fn rate_is_linear() {
        assert_eq!(rate(0.0, 5.0).unwrap(), 0.0);
        let g = rate(1.0, 1.0 / (4.0 * std::f64::consts::PI.powi(2))).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert!((rate(0.3, 2.0).unwrap() - 2.0 * rate(0.3, 1.0).unwrap()).abs() < 1e-15);
        assert!(rate(1.0, -1.0).is_err());
    }

    #[test]
    fn table_dipole_asymptote() {
        let d = DipoleFunction::table(vec![1.0, 2.0, 3.0], vec![2.0, 2.5, 2.9], 3.0).unwrap();
        assert_eq!(d.eval(10.0), 3.0);
        assert_eq!(d.eval(0.5), 2.0);
        assert!((d.eval(2.0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn identical_tables_give_unit_ratios() {
        let st = oscillator_states();
        let sys = TrapSystem::new(1.0, 0, 1.0).unwrap();
        let t = build_spectrum(
            &st[0],
            &st[..6],
            &PotentialCurve::free(),
            &sys,
            &DipoleFunction::Constant(1.0),
            1.0,
        )
        .unwrap();
        let f = enhancement_f(&t, &t).unwrap();
        assert!(f[0].is_some());
        assert!(f[1].is_none() || f[1].unwrap().is_finite());
        let regime =
            constant_regime(&[Some(1.0); 5], &[Some(1.0); 5], &st[0], &st[0], 1e-3).unwrap();
        assert_eq!(regime.f_c, 1.0);
        assert_eq!(regime.r0, None);
        assert_eq!(regime.v_break_empirical, None);
        assert_eq!(regime.v_break_predicted, None);
    }

    #[test]
    fn csv_is_stable() {
        let st = oscillator_states();
        let sys = TrapSystem::new(1.0, 0, 1.0).unwrap();
        let t = build_spectrum(
            &st[0],
            &st[..3],
            &PotentialCurve::free(),
            &sys,
            &DipoleFunction::Constant(1.0),
            0.5,
        )
        .unwrap();
        let a = t.to_csv("config abc");
        assert_eq!(a, t.clone().to_csv("config abc"));
        assert!(
            a.starts_with("# config abc\nv,E_v_hartree,label,R_out_bohr,I_v,Gamma_v,f_v,g_v\n0,")
        );
        assert_eq!(a.lines().count(), 5);
        let back = SpectrumTable::from_csv(&a).unwrap();
        assert_eq!(back.rows.len(), 3);
        assert_eq!(back.to_csv("config abc"), a);
        assert!(SpectrumTable::from_csv("v,E\n").is_err());
    }

    #[test]
    fn dips_are_detected() {
        let st = oscillator_states();
        let w = find_window(&[1.0, 0.5, 1e-3, 0.4, 0.3, 0.2, 1e-2, 0.25], &st[2], 0.0);
        assert_eq!(w.dips, vec![2, 6]);
        // oscillator n = 2 has two nodes
        assert!(w.r_x.is_some());
        let none = find_window(&[1.0, 0.9, 0.8], &st[0], 0.0);
        assert!(none.dips.is_empty() && none.r_x.is_none());
    }
}
