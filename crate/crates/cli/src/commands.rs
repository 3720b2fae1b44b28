use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::mpsc;

use rayon::prelude::*;
use trapspec::potentials::{scale_mass, PotentialCurve, TrapSystem};
use trapspec::pseudo::{
    energy_series, f_c_ho, f_c_pseudo, f_c_series, pseudo_states, roots_for_xi, xi_from_energy,
    PseudoModel,
};
use trapspec::radial::{count_nodes, outer_turning_point_in, solve_on_basis};
use trapspec::scattering::{scattering_length, threshold_a, tune_mass_factor};
use trapspec::spectra::{
    constant_regime, enhancement_f, enhancement_g, fmt_f64, plateau, sum_rule, SpectrumTable,
};
use trapspec::units::{khz_from_omega, omega_from_khz};
use trapspec::{Error, Result};

use crate::config::RunConfig;
use crate::output::{Emitter, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Initial,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    F,
    G,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn min_positive(w: &[f64]) -> f64 {
    w.iter()
        .copied()
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min)
}

fn write_spectrum(em: &Emitter, stem: &str, table: &SpectrumTable, extra: &[String]) -> Result<()> {
    match em.format {
        Format::Csv => em.raw(&format!("{stem}.csv"), &table.to_csv(&em.header(extra)))?,
        Format::Json => {
            let data = serde_json::to_value(table).map_err(|e| Error::Numeric(e.to_string()))?;
            em.json(stem, extra, data)?
        }
    };
    Ok(())
}

pub fn solve(cfg: &RunConfig, em: &Emitter, which: Which, count: Option<usize>) -> Result<()> {
    let mu = cfg.mu()?;
    let (curve, j) = match which {
        Which::Initial => (cfg.initial_curve()?, cfg.system.j_initial),
        Which::Final => (cfg.final_curve()?, cfg.system.j_final),
    };
    let omegas = if cfg.trap.is_some() {
        cfg.omegas()?
    } else {
        vec![0.0]
    };
    let w_min = min_positive(&omegas);
    let basis = cfg.basis(mu, if w_min.is_finite() { w_min } else { 0.0 }, &[&curve])?;
    let count = count.unwrap_or(cfg.solver()?.count).min(basis.size());

    let solved = omegas
        .par_iter()
        .map(|&w| {
            let sys = TrapSystem::new(mu, j, w)?;
            Ok((w, sys, solve_on_basis(&curve, &sys, &basis, count)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (w, sys, states) in &solved {
        for s in states {
            let r_out =
                outer_turning_point_in(&curve, sys, s.energy, basis.r_min(), basis.r_max()).ok();
            rows.push(vec![
                fmt_f64(khz_from_omega(*w)),
                fmt_f64(*w),
                s.v.to_string(),
                fmt_f64(s.energy),
                if *w > 0.0 {
                    fmt_f64(s.energy / w)
                } else {
                    String::new()
                },
                s.label.as_str().to_string(),
                count_nodes(s).to_string(),
                opt(r_out),
            ]);
        }
    }
    let extra = vec![
        format!(
            "curve={}",
            if which == Which::Initial {
                "initial"
            } else {
                "final"
            }
        ),
        format!("mu_me={}", fmt_f64(mu)),
        format!("j={j}"),
        format!("basis_size={}", basis.size()),
        format!("r_max_bohr={}", fmt_f64(basis.r_max())),
    ];
    em.table(
        "solve",
        &[
            "nu_kHz",
            "omega_au",
            "v",
            "E_v_hartree",
            "E_over_omega",
            "label",
            "nodes",
            "R_out_bohr",
        ],
        &rows,
        &extra,
    )?;

    if cfg.outputs.wavefunctions {
        let radii: Vec<f64> = match cfg.outputs.wavefunction_grid_bohr {
            Some((a, b, n)) if n >= 2 && b > a => (0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect(),
            Some(_) => {
                return Err(Error::Config(
                    "wavefunction_grid_bohr needs start < stop and count >= 2".into(),
                ))
            }
            None => basis.breakpoints().to_vec(),
        };
        for (k, (w, _, states)) in solved.iter().enumerate() {
            let mut columns = vec!["R_bohr".to_string()];
            columns.extend(states.iter().map(|s| format!("u_v{}", s.v)));
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = radii
                .iter()
                .map(|&r| {
                    let mut row = vec![fmt_f64(r)];
                    row.extend(states.iter().map(|s| fmt_f64(s.eval(r))));
                    row
                })
                .collect();
            let mut ex = extra.clone();
            ex.push(format!("omega_au={}", fmt_f64(*w)));
            em.table(&format!("wavefunctions_{k:02}"), &cols, &rows, &ex)?;
        }
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, em: &Emitter) -> Result<()> {
    let pa = cfg.photoassociation()?;
    let mu = cfg.mu()?;
    let omegas = cfg.omegas()?;
    let omega_ref = cfg
        .trap
        .as_ref()
        .and_then(|t| t.nu_ref_khz)
        .map(omega_from_khz);
    let mut all = omegas.clone();
    all.extend(omega_ref);
    let basis = cfg.basis(mu, min_positive(&all), &[&pa.initial, &pa.fin])?;
    let a_sc = threshold_a(&pa.initial, mu).ok();

    let reference = omega_ref.map(|w| pa.run(mu, w, &basis, None)).transpose()?;
    for (k, &w) in omegas.iter().enumerate() {
        let run = pa.run(mu, w, &basis, reference.as_ref().map(|r| r.finals.len()))?;
        let mut table = run.table;
        table.meta.a_sc = a_sc;
        let mut extra = vec![
            format!("nu_kHz={}", fmt_f64(khz_from_omega(w))),
            format!("omega_au={}", fmt_f64(w)),
            format!("mu_me={}", fmt_f64(mu)),
            format!("a_sc_bohr={}", opt(a_sc)),
            format!("initial_v={}", run.initial.v),
            format!("initial_E_hartree={}", fmt_f64(run.initial.energy)),
            format!("laser_intensity_au={}", fmt_f64(table.meta.laser_intensity)),
            format!(
                "dipole_asymptote_au={}",
                fmt_f64(table.meta.dipole_asymptote)
            ),
        ];
        if let (Some(r), Some(w_ref)) = (&reference, omega_ref) {
            let f = enhancement_f(&table, &r.table)?;
            table.set_f(&f);
            extra.push(format!("nu_ref_kHz={}", fmt_f64(khz_from_omega(w_ref))));
            let r_out: Vec<Option<f64>> = table.rows.iter().map(|r| r.r_out).collect();
            match constant_regime(&f, &r_out, &run.initial, &r.initial, 1e-3) {
                Ok(c) => {
                    extra.push(format!("f_c={}", fmt_f64(c.f_c)));
                    extra.push(format!("plateau_median={}", fmt_f64(c.plateau_median)));
                    extra.push(format!("plateau_warning={}", c.warning));
                    extra.push(format!("R0_bohr={}", opt(c.r0)));
                    extra.push(format!(
                        "v_break_predicted={}",
                        opt_usize(c.v_break_predicted)
                    ));
                    extra.push(format!(
                        "v_break_empirical={}",
                        opt_usize(c.v_break_empirical)
                    ));
                }
                Err(e) => {
                    log::warn!("omega {w}: {e}");
                    extra.push(format!("f_c_error={e}"));
                }
            }
        }
        if cfg.outputs.sum_rule {
            let sys_f = TrapSystem::new(mu, pa.j_final, w)?;
            let states = solve_on_basis(&pa.fin, &sys_f, &basis, basis.size())?;
            let sr = sum_rule(&run.initial, &pa.dipole, &states)?;
            extra.push(format!("sum_rule_sum={}", fmt_f64(sr.sum)));
            extra.push(format!("sum_rule_integral={}", fmt_f64(sr.integral)));
            extra.push(format!("sum_rule_defect={}", fmt_f64(sr.defect)));
        }
        write_spectrum(em, &format!("spectrum_{k:02}"), &table, &extra)?;
    }
    Ok(())
}

pub fn scatlen(cfg: &RunConfig, em: &Emitter) -> Result<()> {
    let sb = cfg
        .scatlen
        .as_ref()
        .ok_or_else(|| Error::Config("missing scatlen block".into()))?;
    let curve: PotentialCurve = match sb.curve.as_str() {
        "initial" => cfg.initial_curve()?,
        "final" => cfg.final_curve()?,
        other => {
            return Err(Error::Config(format!(
                "scatlen.curve must be initial or final, got {other}"
            )))
        }
    };
    let mu = cfg.mu()?;
    let first = *sb
        .schedule_bohr
        .first()
        .ok_or_else(|| Error::Config("scatlen.schedule_bohr is empty".into()))?;
    let spec = cfg.basis_spec_at(first)?.with_breakpoints(curve.kinks());
    let columns = ["R_max_bohr", "E0_hartree", "a_estimate_bohr"];
    let threshold = threshold_a(&curve, mu).ok();
    match scattering_length(&curve, mu, &spec, &sb.schedule_bohr, sb.tolerance) {
        Ok(res) => {
            let rows: Vec<Vec<String>> = res
                .history
                .iter()
                .map(|p| vec![fmt_f64(p.r_max), fmt_f64(p.e0), fmt_f64(p.a_estimate)])
                .collect();
            let extra = vec![
                "status=converged".to_string(),
                format!("a_sc_bohr={}", fmt_f64(res.a_sc)),
                format!("k_per_bohr={}", fmt_f64(res.k)),
                format!("a_threshold_bohr={}", opt(threshold)),
                format!("tolerance={}", fmt_f64(sb.tolerance)),
            ];
            em.table("scatlen", &columns, &rows, &extra)?;
            Ok(())
        }
        Err(Error::NotConverged { msg, history }) => {
            let rows: Vec<Vec<String>> = history
                .iter()
                .map(|(r, a)| vec![fmt_f64(*r), String::new(), fmt_f64(*a)])
                .collect();
            let extra = vec![
                "status=not_converged".to_string(),
                format!("a_threshold_bohr={}", opt(threshold)),
                format!("tolerance={}", fmt_f64(sb.tolerance)),
            ];
            em.table("scatlen", &columns, &rows, &extra)?;
            Err(Error::NotConverged { msg, history })
        }
        Err(e) => Err(e),
    }
}

pub struct PseudoArgs {
    pub xi: Vec<f64>,
    pub count: Option<usize>,
    pub order: Option<usize>,
    pub a_bohr: Vec<f64>,
}

pub fn pseudo(cfg: Option<&RunConfig>, em: &Emitter, args: &PseudoArgs) -> Result<()> {
    let block = cfg.and_then(|c| c.pseudo.clone()).unwrap_or_default();
    let mut xis = if args.xi.is_empty() {
        block.xi.clone()
    } else {
        args.xi.clone()
    };
    let a_list = if args.a_bohr.is_empty() {
        block.a_bohr.clone()
    } else {
        args.a_bohr.clone()
    };
    if xis.is_empty() && a_list.is_empty() {
        xis.push(0.0);
    }
    let count = args.count.or(block.count).unwrap_or(3);
    let order = args.order.or(block.series_order).unwrap_or(6);

    // Oscillator units: μ = ω = 1, so a_ho = 1 and energies are x = E/ω.
    let unit = TrapSystem::new(1.0, 0, 1.0)?;
    let mut roots = Vec::new();
    let mut series = Vec::new();
    for &xi in &xis {
        let model = PseudoModel::from_xi(xi, unit)?;
        for s in pseudo_states(&model, count)? {
            // ξ recovered from the root (the a_E inversion); infinite at unitarity.
            let back = xi_from_energy(s.x)
                .map(fmt_f64)
                .unwrap_or_else(|_| "inf".into());
            roots.push(vec![
                fmt_f64(xi),
                s.n_t.to_string(),
                fmt_f64(s.x),
                fmt_f64(s.nu),
                fmt_f64(s.a2),
                back,
            ]);
        }
        if xi.is_finite() {
            let exact = roots_for_xi(xi, if xi > 0.0 { 2 } else { 1 })?;
            let exact = *exact.last().unwrap();
            let sv = energy_series(xi, order)?;
            series.push(vec![
                fmt_f64(xi),
                order.to_string(),
                fmt_f64(sv.value),
                fmt_f64(exact),
                fmt_f64((sv.value - exact).abs()),
                sv.unreliable.to_string(),
            ]);
        }
    }
    let extra = vec![format!("count={count}"), format!("series_order={order}")];
    em.table(
        "pseudo_roots",
        &["xi", "n_t", "x", "nu", "A2_a_ho3", "xi_from_x"],
        &roots,
        &extra,
    )?;
    em.table(
        "pseudo_series",
        &[
            "xi",
            "order",
            "x_series",
            "x_exact",
            "abs_error",
            "unreliable",
        ],
        &series,
        &extra,
    )?;

    if a_list.is_empty() {
        return Ok(());
    }
    let cfg = cfg.ok_or_else(|| {
        Error::Config("--a-bohr needs a config with system and trap blocks".into())
    })?;
    let mu = cfg.mu()?;
    let omegas = cfg.omegas()?;
    let nu_ref = cfg
        .trap
        .as_ref()
        .and_then(|t| t.nu_ref_khz)
        .ok_or_else(|| Error::Config("f_c needs trap.nu_ref_kHz".into()))?;
    let w_ref = omega_from_khz(nu_ref);
    let a_ho_ref = TrapSystem::new(mu, 0, w_ref)?.a_ho()?;
    let mut rows = Vec::new();
    for &a in &a_list {
        for &w in &omegas {
            let a_ho = TrapSystem::new(mu, 0, w)?.a_ho()?;
            let xi = a / a_ho;
            let s = f_c_series(xi, a / a_ho_ref, w, w_ref, order)?;
            rows.push(vec![
                fmt_f64(a),
                fmt_f64(khz_from_omega(w)),
                fmt_f64(xi),
                fmt_f64(f_c_pseudo(a, mu, w, w_ref)?),
                fmt_f64(f_c_ho(w, w_ref)?),
                fmt_f64(s.value),
                s.unreliable.to_string(),
            ]);
        }
    }
    let mut ex = extra;
    ex.push(format!("mu_me={}", fmt_f64(mu)));
    ex.push(format!("nu_ref_kHz={}", fmt_f64(nu_ref)));
    em.table(
        "pseudo_fc",
        &[
            "a_bohr",
            "nu_kHz",
            "xi",
            "f_c_pseudo",
            "f_c_ho",
            "f_c_series",
            "unreliable",
        ],
        &rows,
        &ex,
    )?;
    Ok(())
}

fn read_spectrum(path: &Path) -> Result<SpectrumTable> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read spectrum {}: {e}", path.display())))?;
    SpectrumTable::from_csv(&text)
}

pub fn compare(em: &Emitter, spectrum: &Path, reference: &Path, kind: Kind) -> Result<()> {
    let mut table = read_spectrum(spectrum)?;
    let reference = read_spectrum(reference)?;
    let ratios = match kind {
        Kind::F => enhancement_f(&table, &reference)?,
        Kind::G => enhancement_g(&table, &reference)?,
    };
    match kind {
        Kind::F => table.set_f(&ratios),
        Kind::G => table.set_g(&ratios),
    }
    let p = plateau(&ratios)?;
    let name = if kind == Kind::F { "f" } else { "g" };
    let extra = vec![
        format!("spectrum={}", spectrum.display()),
        format!("reference={}", reference_name(&reference)),
        format!("kind={name}"),
        format!("{name}_c={}", fmt_f64(p.f_c)),
        format!("plateau_median={}", fmt_f64(p.median)),
        format!("plateau_warning={}", p.warning),
        format!("v_break_empirical={}", opt_usize(p.v_break)),
    ];
    write_spectrum(em, "compare", &table, &extra)
}

fn reference_name(t: &SpectrumTable) -> String {
    format!("omega_au:{}", fmt_f64(t.meta.omega))
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "nu_kHz",
    "omega_au",
    "mass_factor",
    "a_sc_bohr",
    "g_c",
    "plateau_median",
    "v_break",
];

const CHECKPOINT: &str = "sweep.partial";

/// Rows already finished by an interrupted run with the same configuration.
fn load_checkpoint(path: &Path, hash: &str, points: usize) -> BTreeMap<usize, Vec<String>> {
    let mut done = BTreeMap::new();
    let Ok(text) = fs::read_to_string(path) else {
        return done;
    };
    let mut lines = text.lines();
    if lines.next() != Some(&format!("# config_sha256={hash}")) {
        log::warn!(
            "ignoring checkpoint {} from a different configuration",
            path.display()
        );
        return done;
    }
    for line in lines {
        let mut cells = line.split(',');
        let Some(idx) = cells.next().and_then(|i| i.parse::<usize>().ok()) else {
            continue;
        };
        let row: Vec<String> = cells.map(str::to_string).collect();
        if idx < points && row.len() == SWEEP_COLUMNS.len() {
            done.insert(idx, row);
        }
    }
    done
}

pub fn sweep(cfg: &RunConfig, em: &Emitter) -> Result<()> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing sweep block".into()))?;
    let pa = cfg.photoassociation()?;
    let mu0 = cfg.mu()?;
    if sw.nu_khz.is_empty() {
        return Err(Error::Config("sweep.nu_kHz is empty".into()));
    }

    let mut factors = sw.mass_factors.clone();
    if !sw.a_targets_bohr.is_empty() {
        let (lo, hi) = sw
            .mass_bracket
            .ok_or_else(|| Error::Config("sweep.a_targets_bohr needs sweep.mass_bracket".into()))?;
        for &a in &sw.a_targets_bohr {
            factors.push(tune_mass_factor(&pa.initial, mu0, a, lo, hi)?);
        }
    }
    if factors.is_empty() {
        return Err(Error::Config(
            "sweep needs mass_factors or a_targets_bohr".into(),
        ));
    }
    let factor_ref = match (sw.reference_mass_factor, sw.reference_a_bohr) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give sweep.reference_mass_factor or sweep.reference_a_bohr, not both".into(),
            ))
        }
        (Some(s), None) => s,
        (None, Some(a)) => {
            let (lo, hi) = sw.reference_bracket.or(sw.mass_bracket).ok_or_else(|| {
                Error::Config(
                    "sweep.reference_a_bohr needs reference_bracket or mass_bracket".into(),
                )
            })?;
            tune_mass_factor(&pa.initial, mu0, a, lo, hi)?
        }
        (None, None) => 1.0,
    };

    let omegas: Vec<f64> = sw.nu_khz.iter().map(|&nu| omega_from_khz(nu)).collect();
    let omega_ref = omega_from_khz(sw.nu_ref_khz);
    let mut all = omegas.clone();
    all.push(omega_ref);
    let smallest = factors
        .iter()
        .copied()
        .chain([factor_ref])
        .fold(f64::INFINITY, f64::min);
    let basis = cfg.basis(
        scale_mass(mu0, smallest)?,
        min_positive(&all),
        &[&pa.initial, &pa.fin],
    )?;

    let grid: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&w| factors.iter().map(move |&s| (w, s)))
        .collect();
    let partial = em.path(CHECKPOINT);
    let done = load_checkpoint(&partial, &em.hash, grid.len());
    if !done.is_empty() {
        log::info!(
            "resuming sweep: {} of {} points done",
            done.len(),
            grid.len()
        );
    }
    let todo: Vec<usize> = (0..grid.len()).filter(|i| !done.contains_key(i)).collect();

    let mut results = done;
    if !todo.is_empty() {
        let reference = pa.reference(mu0, omega_ref, factor_ref, &basis)?;
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&partial)?;
        if results.is_empty() {
            file.set_len(0)?;
            writeln!(file, "# config_sha256={}", em.hash)?;
        }
        let (tx, rx) = mpsc::channel::<(usize, Vec<String>)>();
        let writer = std::thread::spawn(move || -> std::io::Result<Vec<(usize, Vec<String>)>> {
            let mut got = Vec::new();
            for (idx, row) in rx {
                writeln!(file, "{idx},{}", row.join(","))?;
                file.flush()?;
                got.push((idx, row));
            }
            Ok(got)
        });
        let outcome: Vec<(usize, Result<()>)> = todo
            .par_iter()
            .map_with(tx, |tx, &idx| {
                let (w, s) = grid[idx];
                let r = pa.surface_point(mu0, w, s, &reference, &basis).map(|p| {
                    let row = vec![
                        fmt_f64(khz_from_omega(p.omega)),
                        fmt_f64(p.omega),
                        fmt_f64(p.mass_factor),
                        fmt_f64(p.a_sc),
                        fmt_f64(p.g_c),
                        fmt_f64(p.plateau_median),
                        opt_usize(p.v_break),
                    ];
                    let _ = tx.send((idx, row));
                });
                (idx, r)
            })
            .collect();
        let written = writer
            .join()
            .map_err(|_| Error::Numeric("checkpoint writer panicked".into()))??;
        results.extend(written);
        if let Some((idx, Err(e))) = outcome.into_iter().find(|(_, r)| r.is_err()) {
            log::error!(
                "sweep point {idx} failed; finished points are kept in {}",
                partial.display()
            );
            return Err(e);
        }
    }

    let rows: Vec<Vec<String>> = results.into_values().collect();
    let extra = vec![
        format!("nu_ref_kHz={}", fmt_f64(sw.nu_ref_khz)),
        format!("reference_mass_factor={}", fmt_f64(factor_ref)),
        format!("mu0_me={}", fmt_f64(mu0)),
    ];
    em.table("sweep", &SWEEP_COLUMNS, &rows, &extra)?;
    fs::remove_file(&partial).ok();
    Ok(())
}
