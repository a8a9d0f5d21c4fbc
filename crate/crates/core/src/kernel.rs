//! Moment integrals of the semigroup kernel `K̂(ξ, t) = e^{−t|ξ|²g(|ξ|)}`
//! and the scaling ratios built from them.
//!
//! Fourier convention: `ĥ(ξ) = ∫ e^{−ix·ξ} h(x) dx` with `(2π)^{−2}` on the
//! inverse, so `K̂(0) = 1` and for constant `g = 1` the kernel is the heat
//! kernel `(4πt)^{−1} e^{−|x|²/4t}`.

use rayon::prelude::*;
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::PI;

use crate::admissibility::{compute_c, solve_a, Verdict};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::spectral::{Grid, ScalarField};
use crate::symbols::SymbolSpec;
use crate::util::spread;

/// Acceptance threshold on ratio spreads over a time grid.
pub const SPREAD_CAP: f64 = 50.0;

/// Tolerance used by the scans and by the derived kernel norms.
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_SHELLS: usize = 400;

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive and finite, got {t}")))
    }
}

fn check_sk(s: f64, k: f64) -> Result<()> {
    if !(s.is_finite() && k.is_finite() && k >= 0.0) {
        return Err(Error::Precondition(format!("need finite s and k >= 0, got s = {s}, k = {k}")));
    }
    if s <= k - 1.0 {
        return Err(Error::Precondition(format!("moment integral needs s > k - 1, got s = {s}, k = {k}")));
    }
    Ok(())
}

/// Upper bound for `2π ∫_R^∞ r^{2s+1} g^k e^{−2tr²g} dr`, using `g(r) ≥ g(R)`
/// and, for `k > 0`, `x^k e^{−x} ≤ k^k e^{−k}` with `x = t r² g`.
fn tail_bound(spec: &SymbolSpec, s: f64, k: f64, t: f64, radius: f64) -> f64 {
    let g_r = spec.g_unchecked(radius);
    let (scale, beta) = if k == 0.0 {
        (1.0, 2.0 * t * g_r)
    } else {
        (k.powf(k) * (-k).exp() * t.powf(-k), t * g_r)
    };
    if !(beta > 0.0) {
        return f64::INFINITY;
    }
    let a = s - k + 1.0;
    PI * scale * beta.powf(-a) * gamma(a) * gamma_ur(a, beta * radius * radius)
}

/// `I(s, k, t) = 2π ∫_0^∞ r^{2s+1} g(r)^k e^{−2t r² g(r)} dr`, the integral of
/// `|ξ|^{2s} g^k |K̂|²` over the plane. `tol` is relative.
pub fn moment_integral(spec: &SymbolSpec, s: f64, k: f64, t: f64, tol: f64) -> Result<f64> {
    check_t(t)?;
    check_sk(s, k)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Precondition(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let a_t = solve_a(spec, t)?;
    let integrand = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let g = spec.g_unchecked(r);
        let mut ln_f = (2.0 * s + 1.0) * r.ln() - 2.0 * t * r * r * g;
        if k != 0.0 {
            ln_f += k * g.ln();
        }
        ln_f.exp()
    };
    let rough = integrate_with_breaks(integrand, &[0.0, a_t, 2.0 * a_t], QuadOptions::relative(1e-3))?.value;
    let lower = 2.0 * PI * rough;
    let mut breaks = vec![0.0, a_t];
    let mut radius = a_t;
    let mut tail = f64::INFINITY;
    for _ in 0..MAX_SHELLS {
        radius *= 2.0;
        breaks.push(radius);
        tail = tail_bound(spec, s, k, t, radius);
        if tail <= 0.25 * tol * lower || !radius.is_finite() {
            break;
        }
    }
    let opts = QuadOptions::relative(0.5 * tol);
    let q = integrate_with_breaks(integrand, &breaks, opts)?;
    let value = 2.0 * PI * q.value;
    let error = 2.0 * PI * q.error + tail;
    if !(value > 0.0) || !(error <= tol * value) {
        return Err(Error::Tolerance {
            estimate: value,
            achieved: error,
            requested: tol * value,
        });
    }
    Ok(value)
}

/// One row of a scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEntry {
    pub t: f64,
    pub s: f64,
    pub k: f64,
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelScalingReport {
    pub spec_id: String,
    pub s: f64,
    pub k: f64,
    pub entries: Vec<KernelEntry>,
    pub ratio_spread: f64,
    pub spread_cap: f64,
    pub passed: bool,
}

/// Checks that a time grid is log-spaced with at least 8 points over at
/// least 4 decades.
pub fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 8 {
        return Err(Error::Precondition(format!("time grid needs at least 8 points, got {}", t_grid.len())));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Precondition("time grid values must be positive and finite".into()));
    }
    let logs: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let step = (logs[logs.len() - 1] - logs[0]) / (logs.len() - 1) as f64;
    if !(step > 0.0) || logs.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step.abs()) {
        return Err(Error::Precondition("time grid must be increasing and log-spaced".into()));
    }
    if logs[logs.len() - 1] - logs[0] < 4.0 * 10f64.ln() * (1.0 - 1e-9) {
        return Err(Error::Precondition("time grid must span at least 4 decades".into()));
    }
    Ok(())
}

/// `I(s,k,t) · t^{s+1} · g(A_t)^{s−k+1}` for one time.
pub fn lemma21_ratio(spec: &SymbolSpec, s: f64, k: f64, t: f64, tol: f64) -> Result<KernelEntry> {
    let integral = moment_integral(spec, s, k, t, tol)?;
    let g_a = spec.g_unchecked(solve_a(spec, t)?);
    let ratio = integral * t.powf(s + 1.0) * g_a.powf(s - k + 1.0);
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::Domain(format!("ratio at t = {t} is not positive and finite: {ratio}")));
    }
    Ok(KernelEntry { t, s, k, integral, ratio })
}

pub fn lemma21_ratio_scan(spec: &SymbolSpec, s: f64, k: f64, t_grid: &[f64]) -> Result<KernelScalingReport> {
    lemma21_ratio_scan_with_tol(spec, s, k, t_grid, DEFAULT_TOL)
}

pub fn lemma21_ratio_scan_with_tol(
    spec: &SymbolSpec,
    s: f64,
    k: f64,
    t_grid: &[f64],
    tol: f64,
) -> Result<KernelScalingReport> {
    check_sk(s, k)?;
    check_time_grid(t_grid)?;
    let entries = t_grid
        .par_iter()
        .map(|&t| lemma21_ratio(spec, s, k, t, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
    let ratio_spread = spread(&ratios);
    Ok(KernelScalingReport {
        spec_id: spec.to_string(),
        s,
        k,
        entries,
        ratio_spread,
        spread_cap: SPREAD_CAP,
        passed: ratio_spread <= SPREAD_CAP,
    })
}

/// `‖K(t)‖_{Ḣˢ} = (2π)^{−1} I(s, 0, t)^{1/2}`.
pub fn kernel_hs_norm(spec: &SymbolSpec, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Precondition(format!("kernel Sobolev index must be nonnegative, got {s}")));
    }
    Ok(moment_integral(spec, s, 0.0, t, DEFAULT_TOL)?.sqrt() / (2.0 * PI))
}

/// `K(0, t) = ‖K(t)‖_{L∞} = (2π)^{−1} ∫_0^∞ r e^{−t r² g(r)} dr`.
pub fn kernel_linf_exact(spec: &SymbolSpec, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(moment_integral(spec, 0.0, 0.0, 0.5 * t, DEFAULT_TOL)? / (4.0 * PI * PI))
}

/// `(2π)^{−1}‖ĥ‖_{L¹} / (‖h‖_{L²}^{1/2} ‖h‖_{Ḣ²}^{1/2})` from the discrete
/// spectral sums; independent of the box length.
pub fn hat_l1_interpolation_ratio(grid: &Grid, h: &ScalarField) -> Result<f64> {
    if h.n() != grid.n() {
        return Err(Error::GridMismatch(format!("field has n = {}, grid has n = {}", h.n(), grid.n())));
    }
    let (mut l1, mut l2, mut h2) = (0.0, 0.0, 0.0);
    for (idx, c) in h.coeffs().iter().enumerate() {
        let (i, j) = grid.mode_index(idx);
        let k2 = (i * i + j * j) as f64;
        l1 += c.norm();
        l2 += c.norm_sqr();
        h2 += k2 * k2 * c.norm_sqr();
    }
    if l2 == 0.0 {
        return Err(Error::ZeroField("interpolation ratio of the zero field".into()));
    }
    if h2 == 0.0 {
        return Err(Error::ZeroField("interpolation ratio of a constant field (zero H2 seminorm)".into()));
    }
    Ok(l1 / (l2.powf(0.25) * h2.powf(0.25)))
}

/// Both sides of the time-integrated kernel identity
/// `∫_0^T t^{−1} g(A_t)^{−1} dt = 2C_T + g(A_T)^{−1} − g(∞)^{−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma24Check {
    pub horizon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub g_inf_inv: f64,
    pub note: String,
}

impl Lemma24Check {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

/// `ln A_t` from `2y + ln g(e^y) = −ln t`, bisected in log space from a
/// bracket grown upward from `y0` (valid for `ln t ≤ ln T`).
fn log_threshold(spec: &SymbolSpec, ln_t: f64, y0: f64) -> f64 {
    let h = |y: f64| 2.0 * y + spec.ln_g_at_log(y) + ln_t;
    let mut lo = y0;
    while h(lo) > 0.0 {
        lo -= 1.0 + lo.abs();
    }
    let mut step = 1.0;
    let mut hi = lo + step;
    while h(hi) < 0.0 {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn lemma24_time_integral_check(spec: &SymbolSpec, horizon: f64, tol: f64) -> Result<Lemma24Check> {
    let growth = compute_c(spec, horizon, tol)?;
    let c_t = match (growth.verdict, growth.value.finite()) {
        (Verdict::Admissible, Some(c)) => c,
        _ => {
            return Err(Error::Precondition(format!(
                "{spec} is not admissible at T = {horizon} (verdict {})",
                growth.verdict
            )))
        }
    };
    let a_t = growth.a_t;
    let g_inf_inv = spec.sup_value().map_or(0.0, |g| 1.0 / g);
    let rhs = 2.0 * c_t + horizon * a_t * a_t - g_inf_inv;
    let rhs_error = 2.0 * growth.error_estimate;

    // With t = T e^{−v} the integrand t^{−1} g(A_t)^{−1} dt becomes g(A_t)^{−1} dv.
    let ln_horizon = horizon.ln();
    let y0 = a_t.ln();
    let f = |v: f64| (-spec.ln_g_at_log(log_threshold(spec, ln_horizon - v, y0))).exp();
    let shell_opts = QuadOptions::relative(0.25 * tol);
    let mut lhs = integrate(f, 0.0, 1.0, shell_opts)?;
    let mut v_max = 1.0f64;
    let mut note = String::from("g(inf)^-1 = 0 (unbounded symbol)");
    if g_inf_inv > 0.0 {
        note = format!("g(inf)^-1 = {g_inf_inv:e} from the supremum of g");
    }
    loop {
        let shell = integrate(f, v_max, 2.0 * v_max, shell_opts)?;
        lhs.value += shell.value;
        lhs.error += shell.error;
        v_max *= 2.0;
        let (f_half, f_end) = (f(0.5 * v_max), f(v_max));
        let tail = if f_end == 0.0 {
            0.0
        } else {
            let p = (f_half / f_end).ln() / 2f64.ln();
            if p > 1.05 {
                f_end * v_max / (p - 1.0)
            } else {
                f64::INFINITY
            }
        };
        if tail <= 0.5 * tol * lhs.value {
            lhs.value += tail;
            lhs.error += tail;
            break;
        }
        if v_max > 1e18 {
            return Err(Error::Tolerance {
                estimate: lhs.value,
                achieved: tail,
                requested: 0.5 * tol * lhs.value,
            });
        }
    }
    Ok(Lemma24Check {
        horizon,
        lhs: lhs.value,
        rhs,
        lhs_error: lhs.error,
        rhs_error,
        g_inf_inv,
        note,
    })
}

/// Ingredients of the Hessian-kernel bound at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma23Components {
    pub t: f64,
    pub l2_part: f64,
    pub hess_part: f64,
    pub product_ratio: f64,
}

pub fn lemma23_bound_components(spec: &SymbolSpec, t: f64) -> Result<Lemma23Components> {
    check_t(t)?;
    let i = |s: f64, k: f64| moment_integral(spec, s, k, t, DEFAULT_TOL);
    let l2_part = i(2.0, 0.0)?.sqrt();
    let hess_part = (i(0.0, 0.0)? + 4.0 * t * t * i(2.0, 2.0)? + 4.0 * t.powi(4) * i(4.0, 4.0)?).sqrt();
    let g_a = spec.g_unchecked(solve_a(spec, t)?);
    Ok(Lemma23Components {
        t,
        l2_part,
        hess_part,
        product_ratio: (l2_part * hess_part).sqrt() * t * g_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::log_space;
    use proptest::prelude::*;

    fn gaussian_moment(s: f64, t: f64) -> f64 {
        PI * gamma(s + 1.0) * (2.0 * t).powf(-(s + 1.0))
    }

    fn one() -> SymbolSpec {
        SymbolSpec::Constant { c: 1.0 }
    }

    #[test]
    fn constant_symbol_matches_gamma_closed_form() {
        assert!((moment_integral(&one(), 0.0, 0.0, 1.0, 1e-10).unwrap() - PI / 2.0).abs() < 1e-9);
        assert!((moment_integral(&one(), 1.0, 0.0, 1.0, 1e-10).unwrap() - PI / 4.0).abs() < 1e-9);
        for s in [0.0, 0.5, 1.0, 2.0, 4.0] {
            for t in [0.1, 1.0, 10.0] {
                let got = moment_integral(&one(), s, 0.0, t, 1e-8).unwrap();
                let want = gaussian_moment(s, t);
                assert!((got - want).abs() <= 1e-7 * want, "s={s} t={t}: {got} vs {want}");
            }
        }
        // g = c scales ξ by sqrt(c).
        let c = SymbolSpec::Constant { c: 3.0 };
        let got = moment_integral(&c, 2.0, 1.0, 0.5, 1e-9).unwrap();
        let want = 3.0 * gaussian_moment(2.0, 1.5);
        assert!((got - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn power_symbol_matches_substitution_oracle() {
        // g = r: substitute x = 2t r³ to get (2π/3)(2t)^{-(2s+k+2)/3} Γ((2s+k+2)/3).
        let spec = SymbolSpec::Power { mu1: 1.0 };
        for (s, k) in [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (4.0, 4.0), (-0.5, 0.0)] {
            for t in [1e-3f64, 1.0, 1e3] {
                let a = (2.0 * s + k + 2.0) / 3.0;
                let want = 2.0 * PI / 3.0 * (2.0 * t).powf(-a) * gamma(a);
                let got = moment_integral(&spec, s, k, t, 1e-9).unwrap();
                assert!((got - want).abs() <= 1e-8 * want, "s={s} k={k} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn moment_integral_preconditions() {
        assert!(matches!(moment_integral(&one(), 0.0, 1.0, 1.0, 1e-8), Err(Error::Precondition(_))));
        assert!(matches!(moment_integral(&one(), 1.0, -1.0, 1.0, 1e-8), Err(Error::Precondition(_))));
        assert!(matches!(moment_integral(&one(), 1.0, 0.0, 0.0, 1e-8), Err(Error::Domain(_))));
        assert!(moment_integral(&one(), 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn tail_bound_dominates_the_true_tail() {
        let spec = SymbolSpec::Power { mu1: 1.0 };
        for (s, k) in [(0.0, 0.0), (2.0, 1.0), (4.0, 4.0)] {
            let t = 0.7;
            let r0 = 3.0;
            let f = |r: f64| r.powf(2.0 * s + 1.0) * r.powf(k) * (-2.0 * t * r.powi(3)).exp();
            let tail = 2.0 * PI * integrate(f, r0, 40.0, QuadOptions::relative(1e-12)).unwrap().value;
            assert!(tail <= tail_bound(&spec, s, k, t, r0));
        }
    }

    #[test]
    fn ratio_scan_examples() {
        let grid = log_space(1e-3, 1e3, 9);
        let rep = lemma21_ratio_scan(&one(), 1.0, 0.0, &grid).unwrap();
        assert!((rep.ratio_spread - 1.0).abs() < 1e-7);
        for e in &rep.entries {
            assert!((e.ratio - PI / 4.0).abs() < 1e-7);
        }
        assert!(rep.passed);
        let p = SymbolSpec::Power { mu1: 1.0 };
        for (s, k) in [(0.0, 0.0), (2.0, 1.0)] {
            let rep = lemma21_ratio_scan(&p, s, k, &grid).unwrap();
            assert!(rep.entries.iter().all(|e| e.ratio.is_finite() && e.integral > 0.0));
            assert!(rep.ratio_spread >= 1.0 && rep.ratio_spread <= SPREAD_CAP);
        }
        assert!(lemma21_ratio_scan(&p, 0.0, 0.0, &log_space(1.0, 10.0, 9)).is_err());
        assert!(lemma21_ratio_scan(&p, 0.0, 0.0, &log_space(1e-3, 1e3, 5)).is_err());
        let mut uneven = grid.clone();
        uneven[3] *= 1.5;
        assert!(lemma21_ratio_scan(&p, 0.0, 0.0, &uneven).is_err());
    }

    #[test]
    fn kernel_norms() {
        let v = kernel_hs_norm(&one(), 0.0, 1.0).unwrap();
        assert!((v - (PI / 2.0).sqrt() / (2.0 * PI)).abs() < 1e-9);
        let v = kernel_hs_norm(&one(), 2.0, 1.0).unwrap();
        assert!((v - (PI * 2.0 / 8.0).sqrt() / (2.0 * PI)).abs() < 1e-9);
        for t in [0.1, 1.0, 10.0] {
            let v = kernel_linf_exact(&one(), t).unwrap();
            let want = 1.0 / (4.0 * PI * t);
            assert!((v - want).abs() <= 1e-9 * want);
        }
        let p = SymbolSpec::Power { mu1: 1.0 };
        let ts = log_space(1e-2, 1e2, 9);
        let linf: Vec<f64> = ts.iter().map(|&t| kernel_linf_exact(&p, t).unwrap()).collect();
        let hs: Vec<f64> = ts.iter().map(|&t| kernel_hs_norm(&p, 1.0, t).unwrap()).collect();
        assert!(linf.windows(2).all(|w| w[1] < w[0]));
        assert!(hs.windows(2).all(|w| w[1] < w[0]));
        let scaled: Vec<f64> = ts
            .iter()
            .zip(&linf)
            .map(|(&t, &k)| k * t * p.g(solve_a(&p, t).unwrap()).unwrap())
            .collect();
        assert!(spread(&scaled) < SPREAD_CAP);
    }

    #[test]
    fn semigroup_property_of_the_symbol() {
        let p = SymbolSpec::LogPower { mu2: 2.0 };
        for r in log_space(1e-3, 1e3, 200) {
            let m = p.multiplier(r).unwrap();
            for (t1, t2) in [(0.1, 0.3), (1.0, 2.5), (0.01, 0.07)] {
                let lhs = (-t1 * m).exp() * (-t2 * m).exp();
                let rhs = (-(t1 + t2) * m).exp();
                assert!((lhs - rhs).abs() <= 1e-14, "r={r} t1={t1} t2={t2}");
            }
        }
    }

    #[test]
    fn interpolation_ratio_gaussian_and_modes() {
        // Continuum value 2π / (2π²)^{1/4} for any Gaussian width.
        let want = 2.0 * PI / (2.0 * PI * PI).powf(0.25);
        let grid = Grid::new(128, 40.0).unwrap();
        for sigma in [1.0, 1.5, 2.0] {
            let h = grid.sample(|x, y| (-((x - 20.0).powi(2) + (y - 20.0).powi(2)) / (2.0 * sigma * sigma)).exp());
            let r = hat_l1_interpolation_ratio(&grid, &h).unwrap();
            assert!((r - want).abs() < 1e-6, "sigma {sigma}: {r} vs {want}");
            assert!(r <= 4.0);
        }
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let h = g.sample(|x, _| x.cos());
        assert!((hat_l1_interpolation_ratio(&g, &h).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let h = g.sample(|x, y| (2.0 * x + 3.0 * y).cos());
        assert!((hat_l1_interpolation_ratio(&g, &h).unwrap() - 2f64.sqrt() / 13f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            hat_l1_interpolation_ratio(&g, &ScalarField::zeros(32)),
            Err(Error::ZeroField(_))
        ));
        assert!(hat_l1_interpolation_ratio(&g, &g.sample(|_, _| 2.0)).is_err());
    }

    #[test]
    fn interpolation_ratio_on_random_fields() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        for seed in 0..50 {
            let h = g.random_band_scalar(1 + seed as usize % 16, 1.5, seed);
            let r = hat_l1_interpolation_ratio(&g, &h).unwrap();
            assert!(r > 0.0 && r <= 4.0, "seed {seed}: {r}");
        }
    }

    #[test]
    fn lemma24_power_closed_forms() {
        for (mu, horizon, want) in [(1.0, 1.0, 3.0), (1.0, 8.0, 6.0), (2.0, 16.0, 8.0)] {
            let spec = SymbolSpec::Power { mu1: mu };
            let c = lemma24_time_integral_check(&spec, horizon, 1e-8).unwrap();
            assert!((c.lhs - want).abs() <= 1e-6 * want, "lhs {} vs {want}", c.lhs);
            assert!((c.rhs - want).abs() <= 1e-6 * want, "rhs {} vs {want}", c.rhs);
            assert_eq!(c.g_inf_inv, 0.0);
        }
    }

    #[test]
    fn lemma24_logpower_and_preconditions() {
        let spec = SymbolSpec::LogPower { mu2: 2.0 };
        let c = lemma24_time_integral_check(&spec, 1.0, 1e-6).unwrap();
        assert!(c.relative_gap() <= 1e-4, "{c:?}");
        assert!(matches!(
            lemma24_time_integral_check(&one(), 1.0, 1e-6),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            lemma24_time_integral_check(&SymbolSpec::LogPower { mu2: 1.0 }, 1.0, 1e-6),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lemma23_components() {
        // Gaussian oracle: I(s,k,t) = π Γ(s+1) (2t)^{-(s+1)} for g = 1.
        for t in [0.1, 1.0, 10.0] {
            let c = lemma23_bound_components(&one(), t).unwrap();
            let l2 = gaussian_moment(2.0, t).sqrt();
            let hess = (gaussian_moment(0.0, t)
                + 4.0 * t * t * gaussian_moment(2.0, t)
                + 4.0 * t.powi(4) * gaussian_moment(4.0, t))
            .sqrt();
            assert!((c.l2_part - l2).abs() <= 1e-8 * l2);
            assert!((c.hess_part - hess).abs() <= 1e-8 * hess);
            let want = (l2 * hess).sqrt() * t;
            assert!((c.product_ratio - want).abs() <= 1e-8 * want);
            // Closed form is t-independent: (π²·2·(1/2 + 1 + 6))^{1/4}/2^{...}
            let at_one = lemma23_bound_components(&one(), 1.0).unwrap().product_ratio;
            assert!((c.product_ratio - at_one).abs() <= 1e-7 * at_one);
            assert!(c.hess_part >= gaussian_moment(0.0, t).sqrt());
        }
        let p = SymbolSpec::Power { mu1: 1.0 };
        let ratios: Vec<f64> = log_space(1e-2, 1e2, 9)
            .iter()
            .map(|&t| lemma23_bound_components(&p, t).unwrap().product_ratio)
            .collect();
        assert!(spread(&ratios) <= SPREAD_CAP);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn moment_integral_decreases_in_t(t in 1e-2f64..1e2, factor in 1.1f64..10.0, mu in 0.5f64..3.0) {
            let spec = SymbolSpec::Power { mu1: mu };
            let a = moment_integral(&spec, 1.0, 0.0, t, 1e-8).unwrap();
            let b = moment_integral(&spec, 1.0, 0.0, t * factor, 1e-8).unwrap();
            prop_assert!(b < a);
        }
    }
}
