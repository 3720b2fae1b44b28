//! Two atoms in an isotropic harmonic trap interacting through a
//! regularized contact potential.
//!
//! Lengths are measured in `a_ho = (μω)^{-1/2}` and energies in `ω`:
//! `ξ = a/a_ho`, `x = E/ω`. The spectrum is given by
//!
//! `Γ(3/4 - x/2) / Γ(1/4 - x/2) = 1/(2ξ)`,
//!
//! which reproduces the first-order shift `Δx = (2/√π) ξ`. Solving for `ξ`
//! gives the closed form `ξ(x) = Γ(1/4 - x/2) / (2 Γ(3/4 - x/2))`.
//!
//! The reduced radial eigenfunction with `ν = x/2 - 3/4` is
//!
//! `u(R) = N R̄ e^{-R̄²/2} Γ(-ν) U(-ν, 3/2, R̄²)`, `N² = (2/π) ξ² (dx/dξ) / a_ho`,
//!
//! and the 3D amplitude constant `A` of `Ψ = ½π^{-3/2} A R e^{-R̄²/2} Γ(-ν) U`
//! satisfies `A² = 2π ξ² (dx/dξ) / a_ho³`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::potentials::TrapSystem;
use crate::rootfind::brent;
use crate::special::{
    digamma, digamma_half_difference, gamma, gamma_ratio, gamma_tricomi, ln_gamma,
    ln_gamma_half_ratio,
};

/// Contact-interaction model: scattering length `a` (bohr) in the trap `sys`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoModel {
    pub a: f64,
    pub sys: TrapSystem,
}

impl PseudoModel {
    /// `a` may be `±∞` (unitarity).
    pub fn new(a: f64, sys: TrapSystem) -> Result<Self> {
        sys.a_ho()?;
        if a.is_nan() {
            return domain("scattering length is NaN");
        }
        Ok(Self { a, sys })
    }

    pub fn from_xi(xi: f64, sys: TrapSystem) -> Result<Self> {
        Self::new(xi * sys.a_ho()?, sys)
    }

    pub fn a_ho(&self) -> f64 {
        (1.0 / (self.sys.mu * self.sys.omega)).sqrt()
    }

    pub fn xi(&self) -> f64 {
        self.a / self.a_ho()
    }
}

/// One eigenstate of the contact model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PseudoState {
    /// Index in energy order; for `ξ > 0` index 0 is the molecular state.
    pub n_t: usize,
    /// `E/ω`
    pub x: f64,
    /// `x/2 - 3/4`
    pub nu: f64,
    /// `A²` in bohr⁻³; see [`normalization`].
    pub a2: f64,
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.floor()
}

/// `ξ(x) = Γ(1/4 - x/2) / (2Γ(3/4 - x/2))`: the scattering length (in units
/// of `a_ho`) that puts a level at `x = E/ω`.
///
/// At the unitarity points `x = 1/2 + 2n` the result is infinite and a
/// resonance error is returned.
pub fn xi_from_energy(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("scaled energy must be finite, got {x}"));
    }
    let p = 0.25 - 0.5 * x;
    if is_nonpositive_integer(p) {
        return Err(Error::Resonance(format!(
            "x = {x} is a unitarity point; the scattering length is infinite"
        )));
    }
    if p >= 20.0 {
        return Ok(0.5 * (-ln_gamma_half_ratio(p)).exp());
    }
    Ok(0.5 * gamma_ratio(p, 0.75 - 0.5 * x)?)
}

/// `ψ(1/4 - x/2) - ψ(3/4 - x/2)`
fn digamma_gap(x: f64) -> f64 {
    let a = 0.25 - 0.5 * x;
    if a >= 20.0 {
        -digamma_half_difference(a)
    } else {
        digamma(a) - digamma(a + 0.5)
    }
}

/// `1/ξ(x) = 2Γ(3/4 - x/2)/Γ(1/4 - x/2)`, zero at the unitarity points.
fn inverse_xi(x: f64) -> Result<f64> {
    Ok(2.0 * gamma_ratio(0.75 - 0.5 * x, 0.25 - 0.5 * x)?)
}

/// `dx/dξ` as a function of `x`:
/// `F(x) = -4 Γ(3/4 - x/2) / (Γ(1/4 - x/2) [ψ(1/4 - x/2) - ψ(3/4 - x/2)])`.
///
/// The pole of `Γ(3/4 - x/2)` at `x = 3/2 + 2n` cancels against the digamma
/// pole; there the limit `-4(-1)ⁿ/(n! Γ(-1/2 - n))` is returned
/// (`F(3/2) = 2/√π`). At the unitarity points `F = 0`.
pub fn dx_dxi(x: f64) -> f64 {
    let a = 0.25 - 0.5 * x;
    let b = 0.75 - 0.5 * x;
    if is_nonpositive_integer(a) {
        return 0.0;
    }
    if is_nonpositive_integer(b) {
        let n = (-b) as i32;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let fact = gamma(n as f64 + 1.0);
        return -4.0 * sign / (fact * gamma(a));
    }
    let ratio = if a >= 20.0 {
        ln_gamma_half_ratio(a).exp()
    } else {
        gamma_ratio(b, a).unwrap_or(0.0)
    };
    -4.0 * ratio / digamma_gap(x)
}

/// Lowest `count` roots `x = E/ω` for a given `ξ`.
///
/// `ξ = 0` gives the oscillator levels `2n + 3/2`; `ξ = ±∞` the unitarity
/// levels `2n + 1/2`. For finite `ξ` each root is bracketed between
/// consecutive unitarity points (plus the molecular branch `x < 1/2` when
/// `ξ > 0`) and refined with Brent's method.
pub fn roots_for_xi(xi: f64, count: usize) -> Result<Vec<f64>> {
    if xi.is_nan() {
        return domain("ξ is NaN");
    }
    if count == 0 {
        return domain("need at least one root");
    }
    if xi == 0.0 {
        return Ok((0..count).map(|n| 2.0 * n as f64 + 1.5).collect());
    }
    if xi.is_infinite() {
        return Ok((0..count).map(|n| 2.0 * n as f64 + 0.5).collect());
    }
    let mut roots = Vec::with_capacity(count);
    if xi > 0.0 {
        roots.push(molecular_root(xi)?);
    }
    let mut branch = 1usize;
    while roots.len() < count {
        let lo = 0.5 + 2.0 * (branch - 1) as f64;
        roots.push(trap_root(xi, lo)?);
        branch += 1;
    }
    Ok(roots)
}

fn xtol(x: f64) -> f64 {
    1e-15 * x.abs().max(1.0)
}

/// Root on the branch `(lo, lo + 2)` between two unitarity points.
fn trap_root(xi: f64, lo: f64) -> Result<f64> {
    let hi = lo + 2.0;
    let zero = lo + 1.0; // ξ(zero) = 0
    let eps = 1e-7;
    if xi.abs() <= 1.0 {
        let f = |x: f64| xi_from_energy(x).map(|v| v - xi).unwrap_or(f64::NAN);
        brent(f, lo + eps, hi - eps, xtol(hi))
    } else {
        let target = 1.0 / xi;
        let f = |x: f64| inverse_xi(x).map(|v| v - target).unwrap_or(f64::NAN);
        if xi > 0.0 {
            brent(f, zero + eps, hi, xtol(hi))
        } else {
            brent(f, lo, zero - eps, xtol(hi))
        }
    }
}

/// The single root below `x = 1/2`, present for `ξ > 0`.
fn molecular_root(xi: f64) -> Result<f64> {
    // ξ(x) ≈ 1/√(2|x|) far down the branch
    let mut lower = -(0.5 / (xi * xi)).max(1.0) * 2.0 - 2.0;
    let xi_at = |x: f64| xi_from_energy(x).unwrap_or(f64::NAN);
    while xi_at(lower) >= xi {
        lower *= 2.0;
        if lower < -1e300 {
            return Err(Error::Numeric(format!(
                "no molecular root bracket for ξ = {xi}"
            )));
        }
    }
    let eps = 1e-7;
    if xi <= 1.0 {
        brent(|x| xi_at(x) - xi, lower, 0.5 - eps, xtol(lower))
    } else {
        let target = 1.0 / xi;
        brent(
            |x| inverse_xi(x).map(|v| v - target).unwrap_or(f64::NAN),
            lower,
            0.5,
            xtol(lower),
        )
    }
}

/// `count` lowest scaled energies of `model`.
pub fn energy_roots(model: &PseudoModel, count: usize) -> Result<Vec<f64>> {
    roots_for_xi(model.xi(), count)
}

/// `A²` (bohr⁻³) for the state at scaled energy `x`.
///
/// For `ξ = 0` the Busch form degenerates; the returned value is then the
/// squared constant `N²` of the 3D oscillator function
/// `N e^{-R̄²/2} L_n^{(1/2)}(R̄²)`, i.e. `π^{-3/2} a_ho^{-3}` for the ground
/// state.
pub fn normalization(model: &PseudoModel, state: &PseudoState) -> Result<f64> {
    amplitude_squared(model.xi(), state.x, state.n_t, model.a_ho())
}

fn amplitude_squared(xi: f64, x: f64, n_t: usize, a_ho: f64) -> Result<f64> {
    if xi == 0.0 {
        let n = n_t as f64;
        return Ok((ln_gamma(n + 1.0) - ln_gamma(n + 1.5)).exp() / (2.0 * PI * a_ho.powi(3)));
    }
    if xi.is_infinite() {
        return Err(Error::Resonance(
            "A² at unitarity needs the limiting form; use a large finite ξ".into(),
        ));
    }
    Ok(2.0 * PI * xi * xi * dx_dxi(x) / a_ho.powi(3))
}

/// The `count` lowest states of `model` with their normalization.
pub fn pseudo_states(model: &PseudoModel, count: usize) -> Result<Vec<PseudoState>> {
    let xi = model.xi();
    let a_ho = model.a_ho();
    roots_for_xi(xi, count)?
        .into_iter()
        .enumerate()
        .map(|(n_t, x)| {
            Ok(PseudoState {
                n_t,
                x,
                nu: 0.5 * x - 0.75,
                a2: amplitude_squared(xi, x, n_t, a_ho)?,
            })
        })
        .collect()
}

/// Reduced radial amplitude `u(R)` (bohr^{-1/2}) with `∫₀^∞ u² dR = 1`.
///
/// `u(0) = √(2ξ² x'/a_ho) > 0` for `ξ ≠ 0`; the oscillator form is used for
/// `ξ = 0`.
pub fn pseudo_wavefunction(state: &PseudoState, model: &PseudoModel, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("wave function needs R >= 0, got {r}"));
    }
    let a_ho = model.a_ho();
    let xi = model.xi();
    let rb = r / a_ho;
    if xi == 0.0 {
        let n = state.n_t;
        let norm =
            (2.0 * (ln_gamma(n as f64 + 1.0) - ln_gamma(n as f64 + 1.5)).exp() / a_ho).sqrt();
        return Ok(norm * rb * (-0.5 * rb * rb).exp() * laguerre_half(n, rb * rb));
    }
    let n2 = 2.0 * xi * xi * dx_dxi(state.x) / (PI * a_ho);
    let core = if r == 0.0 {
        PI.sqrt()
    } else {
        rb * gamma_tricomi(-state.nu, 1.5, rb * rb)?
    };
    Ok(n2.sqrt() * (-0.5 * rb * rb).exp() * core)
}

/// Generalized Laguerre polynomial `L_n^{(1/2)}(z)`.
fn laguerre_half(n: usize, z: f64) -> f64 {
    let alpha = 0.5;
    let (mut l0, mut l1) = (1.0, 1.0 + alpha - z);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - z) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// `(ω/ω_ref)^{3/2}`: ratio of squared oscillator ground states at `R = 0`.
pub fn f_c_ho(omega: f64, omega_ref: f64) -> Result<f64> {
    if !(omega > 0.0 && omega_ref > 0.0) {
        return domain("trap frequencies must be positive");
    }
    Ok((omega / omega_ref).powf(1.5))
}

/// Lowest state on a trap branch (`x > 1/2`), i.e. the state continuously
/// connected to the oscillator ground state through `ξ = 0`.
pub fn trap_ground_state(model: &PseudoModel) -> Result<PseudoState> {
    let states = pseudo_states(model, 2)?;
    let idx = if model.xi() > 0.0 && model.xi().is_finite() {
        1
    } else {
        0
    };
    Ok(states[idx])
}

/// Contact-model enhancement factor `[A(ω)/A(ω_ref)]² ω_ref/ω` for the
/// trap ground state, i.e. `u(0; ω)² / u(0; ω_ref)²`.
pub fn f_c_pseudo(a: f64, mu: f64, omega: f64, omega_ref: f64) -> Result<f64> {
    if a == 0.0 {
        return f_c_ho(omega, omega_ref);
    }
    let m = PseudoModel::new(a, TrapSystem::new(mu, 0, omega)?)?;
    let r = PseudoModel::new(a, TrapSystem::new(mu, 0, omega_ref)?)?;
    let sm = trap_ground_state(&m)?;
    let sr = trap_ground_state(&r)?;
    Ok((sm.a2 / sr.a2) * (omega_ref / omega))
}

/// `[u(R; ω)/u(R; ω_ref)]²` for the trap ground states at a fixed radius.
/// In the region `R ≪ a_ho` this is independent of `R` and equals
/// [`f_c_pseudo`].
pub fn f_c_at_radius(a: f64, mu: f64, omega: f64, omega_ref: f64, r: f64) -> Result<f64> {
    let m = PseudoModel::new(a, TrapSystem::new(mu, 0, omega)?)?;
    let rm = PseudoModel::new(a, TrapSystem::new(mu, 0, omega_ref)?)?;
    let um = pseudo_wavefunction(&trap_ground_state(&m)?, &m, r)?;
    let ur = pseudo_wavefunction(&trap_ground_state(&rm)?, &rm, r)?;
    Ok((um / ur).powi(2))
}

/// Highest series order supported by [`energy_series`] and [`f_c_series`].
pub const MAX_SERIES_ORDER: usize = 12;

/// `|ξ|` beyond which truncated series are flagged; the expansion of
/// `x(ξ)` converges only for `|ξ| ≲ 0.6`.
pub const SERIES_GUARD: f64 = 0.5;

struct SeriesTables {
    /// `F⁽ᵏ⁾(3/2)/k!`
    f_taylor: Vec<f64>,
    /// `x(ξ) = 3/2 + Σ_{m≥1} c_m ξ^m`, index `m`.
    x_coeffs: Vec<f64>,
}

static TABLES: OnceLock<SeriesTables> = OnceLock::new();

fn tables() -> &'static SeriesTables {
    TABLES.get_or_init(|| {
        let f_taylor = taylor_of_f(MAX_SERIES_ORDER + 1);
        let x_coeffs = series_from_ode(&f_taylor, MAX_SERIES_ORDER + 1);
        SeriesTables { f_taylor, x_coeffs }
    })
}

/// Taylor coefficients of `F` at `x = 3/2` from a Chebyshev interpolant on
/// `[1, 2]`. An even node count keeps the removable singularity at `3/2`
/// off the grid.
fn taylor_of_f(count: usize) -> Vec<f64> {
    let n = 32usize;
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let t = (PI * (j as f64 + 0.5) / n as f64).cos();
            dx_dxi(1.5 + 0.5 * t)
        })
        .collect();
    let mut cheb: Vec<f64> = (0..n)
        .map(|k| {
            let s: f64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            2.0 * s / n as f64
        })
        .collect();
    cheb[0] *= 0.5;
    let scale = cheb.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while cheb.len() > 1 && cheb.last().unwrap().abs() < 1e-16 * scale {
        cheb.pop();
    }
    // monomial coefficients in t = 2(x - 3/2)
    let deg = cheb.len();
    let mut mono = vec![0.0; deg];
    let mut t_prev = vec![0.0; deg + 1];
    let mut t_cur = vec![0.0; deg + 1];
    t_prev[0] = 1.0; // T_0
    t_cur[1] = 1.0; // T_1
    for (k, &c) in cheb.iter().enumerate() {
        let tk = if k == 0 { &t_prev } else { &t_cur };
        for i in 0..deg {
            mono[i] += c * tk[i];
        }
        if k >= 1 {
            let mut next = vec![0.0; deg + 1];
            for i in 0..deg {
                next[i + 1] += 2.0 * t_cur[i];
            }
            for i in 0..=deg {
                next[i] -= t_prev[i];
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    (0..count)
        .map(|k| mono.get(k).copied().unwrap_or(0.0) * 2f64.powi(k as i32))
        .collect()
}

/// Power series of `y(ξ) = x(ξ) - 3/2` from `y' = Σ_k F_k y^k`, `y(0) = 0`.
fn series_from_ode(f: &[f64], terms: usize) -> Vec<f64> {
    let mut c = vec![0.0; terms + 1];
    for m in 0..terms {
        // [Σ_k F_k y^k]_m with y known through order m
        let mut rhs = vec![0.0; m + 1];
        let mut power = vec![0.0; m + 1];
        power[0] = 1.0;
        for fk in f {
            for i in 0..=m {
                rhs[i] += fk * power[i];
            }
            let mut next = vec![0.0; m + 1];
            for i in 0..=m {
                if power[i] == 0.0 {
                    continue;
                }
                for j in 1..=m - i {
                    next[i + j] += power[i] * c[j];
                }
            }
            power = next;
        }
        c[m + 1] = rhs[m] / (m as f64 + 1.0);
    }
    c
}

/// `F⁽ᵏ⁾(3/2)/k!` for `k = 0 ..= MAX_SERIES_ORDER`.
pub fn f_taylor_coefficients() -> &'static [f64] {
    &tables().f_taylor
}

/// `c_m` of `x(ξ) = 3/2 + Σ c_m ξ^m`, index `m`, with `c_0 = 0`.
pub fn energy_series_coefficients() -> &'static [f64] {
    &tables().x_coeffs
}

/// A truncated-series value with a flag when `|ξ|` is outside the range
/// where the series can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub unreliable: bool,
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_SERIES_ORDER {
        return domain(format!(
            "series order {order} above the supported maximum {MAX_SERIES_ORDER}"
        ));
    }
    Ok(())
}

/// `x(ξ)` truncated after the `ξ^order` term; order 0 gives `3/2`.
pub fn energy_series(xi: f64, order: usize) -> Result<SeriesValue> {
    check_order(order)?;
    let c = energy_series_coefficients();
    let value = 1.5 + (1..=order).rev().fold(0.0, |acc, m| (acc + c[m]) * xi);
    Ok(SeriesValue {
        value,
        unreliable: !(xi.abs() < SERIES_GUARD),
    })
}

/// `dx/dξ` truncated after the `ξ^order` term.
pub fn slope_series(xi: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    let c = energy_series_coefficients();
    Ok((0..=order)
        .rev()
        .fold(0.0, |acc, m| acc * xi + (m as f64 + 1.0) * c[m + 1]))
}

/// Series estimate of the enhancement factor,
/// `[x'(ξ)/x'(ξ_ref)] (ω/ω_ref)^{3/2}` with both slopes truncated after
/// `ξ^order`. Passing `ξ̃_ref = a_ref/a_ho,ref` for `xi_ref` gives `g_c`.
pub fn f_c_series(
    xi: f64,
    xi_ref: f64,
    omega: f64,
    omega_ref: f64,
    order: usize,
) -> Result<SeriesValue> {
    let scale = f_c_ho(omega, omega_ref)?;
    let num = slope_series(xi, order)?;
    let den = slope_series(xi_ref, order)?;
    Ok(SeriesValue {
        value: num / den * scale,
        unreliable: !(xi.abs() < SERIES_GUARD && xi_ref.abs() < SERIES_GUARD),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    // F⁽ᵏ⁾(3/2)/k! and c_m from a 40-digit evaluation
    const F_REF: [f64; 10] = [
        std::f64::consts::FRAC_2_SQRT_PI,
        0.692_492_657_641_357_3,
        -2.819_034_094_302_712,
        -2.289_021_588_985_556_7,
        2.188_991_273_787_672_7,
        3.193_541_907_858_332_7,
        0.005_784_694_876_813_306,
        -2.604_608_213_571_161_5,
        -1.477_890_866_000_900_7,
        1.277_536_372_340_403,
    ];
    const C_REF: [f64; 12] = [
        std::f64::consts::FRAC_2_SQRT_PI,
        0.390_697_144_124_556_3,
        -1.106_250_261_051_728_2,
        -1.635_067_103_658_427_7,
        1.121_575_801_790_265,
        5.476_980_508_997_147,
        2.346_956_266_241_014_6,
        -14.528_240_578_142_738,
        -23.535_458_658_001_09,
        22.831_030_594_353_997,
        107.925_832_581_654_1,
        42.867_642_140_860_49,
    ];

    fn sys() -> TrapSystem {
        TrapSystem::new(1.0, 0, 1.0).unwrap()
    }

    #[test]
    fn closed_form_zeros_and_poles() {
        assert!(xi_from_energy(1.5).unwrap().abs() < 1e-16);
        assert!(xi_from_energy(3.5).unwrap().abs() < 1e-16);
        assert!(matches!(xi_from_energy(0.5), Err(Error::Resonance(_))));
        assert!(matches!(xi_from_energy(2.5), Err(Error::Resonance(_))));
    }

    #[test]
    fn roots_match_high_precision_values() {
        let cases = [
            (0.01, 1.511_321_738_902_092),
            (0.3, 1.836_664_189_382_368_8),
            (-0.5, 1.083_898_122_276_312_7),
            (2.0, 2.357_338_208_578_384_3),
        ];
        for (xi, want) in cases {
            let r = roots_for_xi(xi, 3).unwrap();
            let got = if xi > 0.0 { r[1] } else { r[0] };
            assert!((got - want).abs() < 1e-12, "ξ = {xi}: {got}");
        }
    }

    #[test]
    fn roots_interlace_unitarity_points() {
        for &xi in &[-3.0, -0.2, 0.05, 0.7, 4.0] {
            let r = roots_for_xi(xi, 6).unwrap();
            let trap: Vec<f64> = r.iter().copied().filter(|&x| x > 0.5).collect();
            for (n, x) in trap.iter().enumerate() {
                assert!(*x > 0.5 + 2.0 * n as f64 && *x < 2.5 + 2.0 * n as f64);
            }
            if xi > 0.0 {
                assert!(r[0] < 0.5);
            }
        }
    }

    #[test]
    fn molecular_branch_deep_binding() {
        // x ≈ -1/(2ξ²) for small positive ξ
        let r = roots_for_xi(0.02, 1).unwrap()[0];
        assert!(((r + 1.0 / (2.0 * 0.02 * 0.02)) / r).abs() < 1e-3, "{r}");
        assert!((xi_from_energy(r).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn slope_at_three_halves() {
        assert!((dx_dxi(1.5) - 2.0 / PI.sqrt()).abs() < 1e-14);
        let h = 1e-6;
        let fd = (dx_dxi(1.5 + h) - dx_dxi(1.5 - h)) / (2.0 * h);
        assert!((fd - F_REF[1]).abs() < 1e-7);
    }

    #[test]
    fn taylor_tables_match_reference() {
        let f = f_taylor_coefficients();
        for (k, want) in F_REF.iter().enumerate() {
            let tol = 1e-12 * 10f64.powi(k as i32);
            assert!((f[k] - want).abs() < tol, "F_{k}: {} vs {want}", f[k]);
        }
        let c = energy_series_coefficients();
        for (i, want) in C_REF.iter().enumerate() {
            let m = i + 1;
            let tol = 1e-12 * 10f64.powi(m as i32);
            assert!((c[m] - want).abs() < tol, "c_{m}: {} vs {want}", c[m]);
        }
    }

    #[test]
    fn series_order_zero_and_limit() {
        assert_eq!(energy_series(0.3, 0).unwrap().value, 1.5);
        assert!(energy_series(0.7, 3).unwrap().unreliable);
        assert!(energy_series(13.0, 13).is_err());
        let f = f_c_series(0.0, 0.0, 4.0, 1.0, 6).unwrap();
        assert!((f.value - 8.0).abs() < 1e-14);
    }

    fn norm_integral(model: &PseudoModel, st: &PseudoState) -> f64 {
        let a_ho = model.a_ho();
        let gl = GaussLegendre::new(24);
        // geometric panels from the molecular scale to far outside the trap
        let size = if st.x < 0.0 {
            (1.0 / (2.0 * -st.x).sqrt()).min(1.0)
        } else {
            1.0
        };
        let outer = ((2.0 * st.x.max(0.0) + 3.0).sqrt() + 8.0) * a_ho;
        let lo = 1e-4 * size * a_ho;
        let mut edges = vec![0.0, lo];
        while *edges.last().unwrap() < outer {
            let e = edges.last().unwrap() * 1.1;
            edges.push(e.min(outer));
        }
        edges
            .windows(2)
            .map(|w| {
                gl.integrate(w[0], w[1], |r| {
                    pseudo_wavefunction(st, model, r).unwrap().powi(2)
                })
            })
            .sum()
    }

    #[test]
    fn states_are_normalized() {
        for &xi in &[-1.5, -0.3, 0.0, 0.4, 2.0] {
            let m = PseudoModel::from_xi(xi, TrapSystem::new(3.0, 0, 0.2).unwrap()).unwrap();
            for st in pseudo_states(&m, 3).unwrap() {
                let n = norm_integral(&m, &st);
                assert!((n - 1.0).abs() < 1e-9, "ξ = {xi}, n_t = {}: {n}", st.n_t);
            }
        }
    }

    #[test]
    fn oscillator_limit_of_amplitude() {
        let m = PseudoModel::new(0.0, sys()).unwrap();
        let s = pseudo_states(&m, 1).unwrap()[0];
        assert!((s.a2 - PI.powf(-1.5)).abs() < 1e-15);
        // small ξ approaches the oscillator function away from the origin
        let m2 = PseudoModel::from_xi(-1e-7, sys()).unwrap();
        let s2 = pseudo_states(&m2, 1).unwrap()[0];
        let u0 = pseudo_wavefunction(&s, &m, 1.3).unwrap();
        let u2 = pseudo_wavefunction(&s2, &m2, 1.3).unwrap();
        assert!((u0 - u2).abs() < 1e-6);
    }

    #[test]
    fn wavefunction_finite_at_origin() {
        let m = PseudoModel::from_xi(-0.4, sys()).unwrap();
        let s = pseudo_states(&m, 1).unwrap()[0];
        let u0 = pseudo_wavefunction(&s, &m, 0.0).unwrap();
        let u_small = pseudo_wavefunction(&s, &m, 1e-7).unwrap();
        assert!(u0 > 0.0 && (u0 - u_small).abs() < 1e-6 * u0);
    }

    #[test]
    fn enhancement_limits() {
        assert!((f_c_ho(10.0, 1.0).unwrap() - 31.622_776_601_683_793).abs() < 1e-12);
        assert!((f_c_pseudo(-50.0, 5000.0, 1e-10, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        let tiny = f_c_pseudo(1e-9, 5000.0, 1e-10, 1e-12).unwrap();
        assert!((tiny / 1000.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn radius_form_agrees_near_origin() {
        let (a, mu, w, w0) = (-300.0, 5000.0, 4e-11, 4e-13);
        let f0 = f_c_pseudo(a, mu, w, w0).unwrap();
        let f1 = f_c_at_radius(a, mu, w, w0, 1e-3).unwrap();
        assert!(((f1 - f0) / f0).abs() < 1e-6);
    }
}
