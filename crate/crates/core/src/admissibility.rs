//! Horizon threshold `A_T` (root of `x² g(x) = 1/T`) and the growth integral
//! `C_T = ∫_{A_T}^∞ dr / (r g(r))` that decides admissibility of a symbol.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::symbols::{check_mikhlin_with_cap, check_shape, MikhlinReport, ShapeReport, SymbolSpec, DEFAULT_MIKHLIN_CAP};

/// Largest substituted tail length tried before giving up.
const MAX_TAIL_LENGTH: f64 = 1.125_899_906_842_624e15; // 2^50
const INITIAL_TAIL_LENGTH: f64 = 8.0;
const MAX_BRACKET_STEPS: usize = 2200;

/// Residual of `x² g(x) T − 1`, falling back to log space when the product
/// leaves the normal f64 range.
fn root_residual(spec: &SymbolSpec, x: f64, horizon: f64) -> f64 {
    let v = x * x * spec.g_unchecked(x) * horizon;
    if v.is_finite() && v >= f64::MIN_POSITIVE {
        v - 1.0
    } else {
        2.0 * x.ln() + spec.ln_g_at_log(x.ln()) + horizon.ln()
    }
}

/// Solves `x² g(x) = 1/T` by geometric bracket expansion from `x = 1` and
/// bisection down to adjacent floating-point numbers.
pub fn solve_a(spec: &SymbolSpec, horizon: f64) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    spec.validate()?;
    let f = |x: f64| root_residual(spec, x, horizon);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let f1 = f(1.0);
    if f1.is_nan() {
        return Err(Error::Domain("symbol evaluates to NaN at x = 1".into()));
    }
    if f1 == 0.0 {
        return Ok(1.0);
    }
    let mut steps = 0;
    if f1 < 0.0 {
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
                return Err(Error::Domain(format!("no upper bracket for x^2 g(x) = 1/{horizon}")));
            }
        }
    } else {
        while f(lo) > 0.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > MAX_BRACKET_STEPS || lo == 0.0 {
                return Err(Error::Domain(format!("no lower bracket for x^2 g(x) = 1/{horizon}")));
            }
        }
    }
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Domain(format!("symbol evaluates to NaN at x = {mid}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Value of the growth integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthValue {
    Finite(f64),
    Divergent,
}

impl GrowthValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            GrowthValue::Finite(v) => Some(*v),
            GrowthValue::Divergent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Admissible,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Admissible => "Admissible",
            Verdict::Divergent => "Divergent",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Outcome of [`compute_c`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthIntegral {
    pub a_t: f64,
    pub value: GrowthValue,
    /// Substituted upper limit `U` (integration ran over `u ∈ [0, U]`).
    pub tail_truncation: f64,
    pub error_estimate: f64,
    /// `Divergent` or `Inconclusive` when the value could not be certified.
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Bounds on `∫_U^∞ du / g(A e^u)`, written in terms of `x = ln A + U`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Tail {
    Bracket(f64, f64),
    Divergent,
    NotYet,
}

fn divergent_by_family(spec: &SymbolSpec) -> bool {
    match spec {
        SymbolSpec::Constant { .. } => true,
        SymbolSpec::LogPower { mu2 } => *mu2 <= 1.0,
        SymbolSpec::LogLogLog { mu5 } => *mu5 <= 1.0,
        _ => false,
    }
}

/// `g(A e^u)` is flat across two decades of `u` beyond the current length.
fn tail_saturates(spec: &SymbolSpec, ln_a: f64, u: f64) -> bool {
    let l1 = spec.ln_g_at_log(ln_a + u);
    let l2 = spec.ln_g_at_log(ln_a + 10.0 * u);
    let l3 = spec.ln_g_at_log(ln_a + 100.0 * u);
    (l3 - l1).abs() <= 1e-12 * l1.abs().max(1.0) && (l2 - l1).abs() <= 1e-12 * l1.abs().max(1.0)
}

fn tail_bracket(spec: &SymbolSpec, ln_a: f64, u: f64) -> Tail {
    let x = ln_a + u;
    // ln(1 + e^x) and e^x / (1 + e^x), both safe for large x.
    let l = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    let p = 1.0 / (1.0 + (-x).exp());
    match spec {
        SymbolSpec::Power { mu1 } => {
            let t = (-spec.ln_g_at_log(x)).exp() / mu1;
            Tail::Bracket(t, t)
        }
        SymbolSpec::PowerLog { mu3, .. } => Tail::Bracket(0.0, (-spec.ln_g_at_log(x)).exp() / mu3),
        SymbolSpec::LogPower { mu2 } => {
            if x <= 0.0 {
                return Tail::NotYet;
            }
            let base = l.powf(1.0 - mu2) / (mu2 - 1.0);
            Tail::Bracket(base, base / p)
        }
        SymbolSpec::LogLogLog { mu5 } => {
            if x <= 0.0 {
                return Tail::NotYet;
            }
            let m = l.ln_1p();
            let base = m.powf(1.0 - mu5) / (mu5 - 1.0);
            Tail::Bracket(base, base * (1.0 + 1.0 / l) / p)
        }
        SymbolSpec::Constant { .. } => Tail::Divergent,
        SymbolSpec::Tabulated(t) => {
            let last = t.knots()[t.knots().len() - 1].0;
            if x < last.ln() {
                return Tail::NotYet;
            }
            if tail_saturates(spec, ln_a, u) {
                return Tail::Divergent;
            }
            let v = (-spec.ln_g_at_log(x)).exp() / t.upper_slope();
            Tail::Bracket(v, v)
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-2).contains(&tol) {
        return Err(Error::Precondition(format!("tolerance must lie in [1e-12, 1e-2], got {tol}")));
    }
    Ok(())
}

/// Evaluates `C_T` through `r = A_T e^u`, i.e. `∫_0^∞ du / g(A_T e^u)`.
///
/// The tail beyond the truncation `U` is enclosed by family-specific bounds
/// and the truncation grows until the enclosure is narrower than the
/// tolerance. The tolerance applies to `max(1, C_T)`.
pub fn compute_c(spec: &SymbolSpec, horizon: f64, tol: f64) -> Result<GrowthIntegral> {
    check_tol(tol)?;
    let a_t = solve_a(spec, horizon)?;
    if divergent_by_family(spec) {
        return Ok(GrowthIntegral {
            a_t,
            value: GrowthValue::Divergent,
            tail_truncation: 0.0,
            error_estimate: 0.0,
            verdict: Verdict::Divergent,
            note: Some(format!("{} is bounded or grows too slowly for a finite integral", spec.family_name())),
        });
    }
    let ln_a = a_t.ln();
    let mut u = INITIAL_TAIL_LENGTH;
    let (tail_lo, tail_hi) = loop {
        match tail_bracket(spec, ln_a, u) {
            Tail::Divergent => {
                return Ok(GrowthIntegral {
                    a_t,
                    value: GrowthValue::Divergent,
                    tail_truncation: u,
                    error_estimate: 0.0,
                    verdict: Verdict::Divergent,
                    note: Some("g saturates: integrand does not decay".into()),
                })
            }
            Tail::Bracket(lo, hi) if 0.5 * (hi - lo) <= 0.5 * tol * lo.max(1.0) => break (lo, hi),
            _ => {}
        }
        u *= 2.0;
        if u > MAX_TAIL_LENGTH {
            return Ok(GrowthIntegral {
                a_t,
                value: GrowthValue::Finite(f64::NAN),
                tail_truncation: u,
                error_estimate: f64::INFINITY,
                verdict: Verdict::Inconclusive,
                note: Some("tail enclosure did not tighten within the length budget".into()),
            });
        }
    };

    let mut breaks = vec![0.0];
    let mut b = 1.0;
    while b < u {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(u);
    let integrand = |s: f64| (-spec.ln_g_at_log(ln_a + s)).exp();
    let opts = QuadOptions {
        abs_tol: 0.5 * tol,
        rel_tol: 0.5 * tol,
        max_evals: 4_000_000,
    };
    let tail_mid = 0.5 * (tail_lo + tail_hi);
    let tail_err = 0.5 * (tail_hi - tail_lo);
    match integrate_with_breaks(integrand, &breaks, opts) {
        Ok(q) => {
            let value = q.value + tail_mid;
            let error = q.error + tail_err;
            let certified = error <= tol * value.max(1.0);
            Ok(GrowthIntegral {
                a_t,
                value: GrowthValue::Finite(value),
                tail_truncation: u,
                error_estimate: error,
                verdict: if certified { Verdict::Admissible } else { Verdict::Inconclusive },
                note: (!certified).then(|| "error estimate above tolerance".to_string()),
            })
        }
        Err(Error::Tolerance { estimate, achieved, .. }) => Ok(GrowthIntegral {
            a_t,
            value: GrowthValue::Finite(estimate + tail_mid),
            tail_truncation: u,
            error_estimate: achieved + tail_err,
            verdict: Verdict::Inconclusive,
            note: Some("quadrature budget exhausted".into()),
        }),
        Err(e) => Err(e),
    }
}

/// Grid used for the Mikhlin and shape checks of a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityOptions {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub mikhlin_cap: f64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self {
            r_min: 1e-6,
            r_max: 1e6,
            points: 1024,
            mikhlin_cap: DEFAULT_MIKHLIN_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub horizon: f64,
    pub a_t: f64,
    pub c_t: GrowthValue,
    pub tail_truncation: f64,
    pub quadrature_error_estimate: f64,
    pub verdict: Verdict,
    pub mikhlin: MikhlinReport,
    pub shape: ShapeReport,
    pub note: Option<String>,
}

/// One report per horizon. The verdict is `Admissible` only when the growth
/// integral is certified finite and the sampled Mikhlin and shape checks pass.
pub fn admissibility_report(
    spec: &SymbolSpec,
    horizons: &[f64],
    tol: f64,
) -> Result<Vec<Result<AdmissibilityReport>>> {
    admissibility_report_with(spec, horizons, tol, AdmissibilityOptions::default())
}

pub fn admissibility_report_with(
    spec: &SymbolSpec,
    horizons: &[f64],
    tol: f64,
    opts: AdmissibilityOptions,
) -> Result<Vec<Result<AdmissibilityReport>>> {
    if horizons.is_empty() {
        return Err(Error::Precondition("horizon list is empty".into()));
    }
    check_tol(tol)?;
    let mikhlin = check_mikhlin_with_cap(spec, opts.r_min, opts.r_max, opts.points, opts.mikhlin_cap)?;
    let shape = check_shape(spec, opts.r_min, opts.r_max, opts.points)?;
    Ok(horizons
        .par_iter()
        .map(|&horizon| {
            let growth = compute_c(spec, horizon, tol)?;
            let mut note = growth.note.clone();
            let verdict = match growth.verdict {
                Verdict::Admissible if !mikhlin.passed => {
                    note = Some(format!(
                        "Mikhlin constants ({:.3e}, {:.3e}) exceed cap {}",
                        mikhlin.c_tilde_order1, mikhlin.c_tilde_order2, mikhlin.cap
                    ));
                    Verdict::Inconclusive
                }
                Verdict::Admissible if !shape.ok() => {
                    note = Some("g is not positive and non-decreasing on the sample grid".into());
                    Verdict::Inconclusive
                }
                v => v,
            };
            Ok(AdmissibilityReport {
                horizon,
                a_t: growth.a_t,
                c_t: growth.value,
                tail_truncation: growth.tail_truncation,
                quadrature_error_estimate: growth.error_estimate,
                verdict,
                mikhlin: mikhlin.clone(),
                shape: shape.clone(),
                note,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::symbols::Tabulated;
    use proptest::prelude::*;

    fn power(mu1: f64) -> SymbolSpec {
        SymbolSpec::Power { mu1 }
    }

    #[test]
    fn root_examples() {
        assert!((solve_a(&power(1.0), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((solve_a(&power(1.0), 8.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((solve_a(&SymbolSpec::Constant { c: 1.0 }, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(solve_a(&power(1.0), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn root_residual_is_tiny_for_all_families() {
        let specs = [
            power(0.5),
            power(3.0),
            SymbolSpec::LogPower { mu2: 2.0 },
            SymbolSpec::PowerLog { mu3: 1.0, mu4: 1.0 },
            SymbolSpec::LogLogLog { mu5: 2.0 },
            SymbolSpec::Constant { c: 0.2 },
        ];
        for spec in &specs {
            for &t in &[1e-6, 1e-3, 0.5, 1.0, 7.0, 1e3, 1e6] {
                let a = solve_a(spec, t).unwrap();
                let res = (a * a * spec.g(a).unwrap() * t - 1.0).abs();
                assert!(res <= 1e-12, "{spec} T={t}: residual {res}");
            }
        }
    }

    #[test]
    fn growth_integral_examples() {
        let c = compute_c(&power(1.0), 1.0, 1e-10).unwrap();
        assert!((c.value.finite().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(c.verdict, Verdict::Admissible);
        let c = compute_c(&power(1.0), 8.0, 1e-10).unwrap();
        assert!((c.value.finite().unwrap() - 2.0).abs() < 1e-9);
        for t in [0.1, 1.0, 50.0] {
            let c = compute_c(&SymbolSpec::Constant { c: 1.0 }, t, 1e-8).unwrap();
            assert_eq!(c.value, GrowthValue::Divergent);
            assert_eq!(c.verdict, Verdict::Divergent);
        }
    }

    #[test]
    fn logpower_growth_matches_direct_quadrature() {
        // Oracle: integrate 1/(r ln(1+r)^2) directly in r over [A, R] and add
        // the exact antiderivative bound for the remainder, R ln(...) huge.
        let spec = SymbolSpec::LogPower { mu2: 2.0 };
        let c = compute_c(&spec, 1.0, 1e-10).unwrap();
        assert_eq!(c.verdict, Verdict::Admissible);
        let a = c.a_t;
        let r_max = 1e12;
        let mut breaks = vec![a];
        while *breaks.last().unwrap() * 4.0 < r_max {
            let b = breaks.last().unwrap() * 4.0;
            breaks.push(b);
        }
        breaks.push(r_max);
        let head = crate::quadrature::integrate_with_breaks(
            |r: f64| 1.0 / (r * r.ln_1p().powi(2)),
            &breaks,
            QuadOptions::relative(1e-13),
        )
        .unwrap()
        .value;
        // ∫_R^∞ dr/(r ln(1+r)^2) = 1/ln(1+R) up to a relative 1/R correction.
        let tail = 1.0 / r_max.ln_1p();
        assert!((c.value.finite().unwrap() - head - tail).abs() < 1e-9, "{:?} vs {}", c, head + tail);
    }

    #[test]
    fn logpower_unit_exponent_diverges() {
        let spec = SymbolSpec::LogPower { mu2: 1.0 };
        let c = compute_c(&spec, 1.0, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
        // Partial sums over growing U keep increasing by ~ln 2 per doubling.
        let a = c.a_t;
        let partial = |u: f64| {
            integrate(|s: f64| 1.0 / (a * s.exp()).ln_1p(), 0.0, u, QuadOptions::relative(1e-10))
                .unwrap()
                .value
        };
        let (p1, p2, p3) = (partial(50.0), partial(100.0), partial(200.0));
        assert!(p2 - p1 > 0.6 && p3 - p2 > 0.6);
    }

    #[test]
    fn logloglog_converges_with_two_sided_tail() {
        let c = compute_c(&SymbolSpec::LogLogLog { mu5: 2.0 }, 1.0, 1e-6).unwrap();
        assert_eq!(c.verdict, Verdict::Admissible, "{c:?}");
        assert!(c.value.finite().unwrap() > 0.0);
        let c = compute_c(&SymbolSpec::LogLogLog { mu5: 1.0 }, 1.0, 1e-6).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
    }

    #[test]
    fn tabulated_saturation_and_power_tail() {
        let flat = SymbolSpec::Tabulated(Tabulated::new(vec![(0.5, 1.0), (2.0, 2.0), (4.0, 2.0)]).unwrap());
        assert_eq!(compute_c(&flat, 1.0, 1e-8).unwrap().verdict, Verdict::Divergent);

        // A table sampled from g(r) = r reproduces the Power(1) value exactly
        // because it extrapolates with unit log-log slope.
        let lin = SymbolSpec::Tabulated(Tabulated::new(vec![(0.25, 0.25), (1.0, 1.0), (3.0, 3.0)]).unwrap());
        let c = compute_c(&lin, 8.0, 1e-10).unwrap();
        assert!((c.value.finite().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn tolerance_range_is_enforced() {
        assert!(matches!(compute_c(&power(1.0), 1.0, 1e-14), Err(Error::Precondition(_))));
        assert!(matches!(compute_c(&power(1.0), 1.0, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_batch() {
        let reps = admissibility_report(&power(1.0), &[1.0, 8.0], 1e-10).unwrap();
        let vals: Vec<f64> = reps.iter().map(|r| r.as_ref().unwrap().c_t.finite().unwrap()).collect();
        assert!((vals[0] - 1.0).abs() < 1e-9 && (vals[1] - 2.0).abs() < 1e-9);
        assert!(reps.iter().all(|r| r.as_ref().unwrap().verdict == Verdict::Admissible));

        let rep = admissibility_report(&SymbolSpec::LogPower { mu2: 2.0 }, &[1.0], 1e-8).unwrap();
        assert_eq!(rep[0].as_ref().unwrap().verdict, Verdict::Admissible);
        let rep = admissibility_report(&SymbolSpec::LogPower { mu2: 1.0 }, &[1.0], 1e-8).unwrap();
        assert_eq!(rep[0].as_ref().unwrap().verdict, Verdict::Divergent);

        // Bad horizons fail per entry without aborting the batch.
        let rep = admissibility_report(&power(1.0), &[1.0, -2.0, 8.0], 1e-8).unwrap();
        assert!(rep[0].is_ok() && rep[1].is_err() && rep[2].is_ok());
        assert!(admissibility_report(&power(1.0), &[], 1e-8).is_err());

        let steep = admissibility_report(&power(12.0), &[1.0], 1e-8).unwrap();
        assert_eq!(steep[0].as_ref().unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn power_scaling_laws() {
        for &mu in &[0.5, 1.0, 2.0, 3.0] {
            for &t in &[0.01, 1.0, 8.0, 1000.0, 1e5] {
                let c = compute_c(&power(mu), t, 1e-11).unwrap();
                let a_exact = t.powf(-1.0 / (2.0 + mu));
                let c_exact = t.powf(mu / (2.0 + mu)) / mu;
                assert!((c.a_t - a_exact).abs() <= 1e-10 * a_exact);
                let v = c.value.finite().unwrap();
                assert!((v - c_exact).abs() <= 1e-8 * c_exact, "mu={mu} T={t}: {v} vs {c_exact}");
            }
        }
    }

    #[test]
    fn threshold_tends_to_zero() {
        for spec in [power(1.0), SymbolSpec::LogPower { mu2: 2.0 }] {
            let a: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&t| solve_a(&spec, t).unwrap()).collect();
            assert!(a[0] > a[1] && a[1] > a[2]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_horizon(t1 in 1e-2f64..1e3, f in 1.01f64..50.0, which in 0usize..3) {
            let spec = [power(1.5), SymbolSpec::LogPower { mu2: 2.5 }, SymbolSpec::PowerLog { mu3: 0.5, mu4: 1.0 }][which].clone();
            let t2 = t1 * f;
            let c1 = compute_c(&spec, t1, 1e-9).unwrap();
            let c2 = compute_c(&spec, t2, 1e-9).unwrap();
            prop_assert!(c1.a_t >= c2.a_t);
            prop_assert!(c1.value.finite().unwrap() <= c2.value.finite().unwrap() + 1e-9);
        }
    }
}
