//! Dissipation symbols `g(|ξ|)` and the full multiplier `m(ξ) = |ξ|² g(|ξ|)`.
//!
//! Every closed-form family is positive and non-decreasing on `(0, ∞)`. The
//! tabulated family interpolates linearly between knots, which keeps it
//! monotone by construction, and extrapolates with the log-log slope of the
//! outermost segment on either side.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::log_space;

/// Default cap applied to the sampled Mikhlin constants.
pub const DEFAULT_MIKHLIN_CAP: f64 = 64.0;

/// Relative finite-difference step used for tabulated derivatives.
const TABULATED_FD_STEP: f64 = 1e-5;

/// A radial dissipation symbol family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    /// `g(r) = r^μ1`
    Power { mu1: f64 },
    /// `g(r) = ln(1+r)^μ2`
    LogPower { mu2: f64 },
    /// `g(r) = r^μ3 ln(1+r)^μ4`
    PowerLog { mu3: f64, mu4: f64 },
    /// `g(r) = ln(1+r) · ln(1 + ln(1+r))^μ5`
    LogLogLog { mu5: f64 },
    /// `g(r) = c`, the plain Laplacian scaled by `c`.
    Constant { c: f64 },
    /// Piecewise-linear table of `(r, g(r))` knots.
    Tabulated(Tabulated),
}

/// Validated knot table for [`SymbolSpec::Tabulated`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    knots: Vec<(f64, f64)>,
    slope_lo: f64,
    slope_hi: f64,
}

impl Tabulated {
    /// Builds a table from `(r, g)` pairs. Radii must be positive and strictly
    /// increasing, values positive and non-decreasing.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Parameter(format!(
                "tabulated symbol needs at least 2 knots, got {}",
                knots.len()
            )));
        }
        for (i, &(r, g)) in knots.iter().enumerate() {
            if !(r.is_finite() && g.is_finite()) || r <= 0.0 || g <= 0.0 {
                return Err(Error::Parameter(format!(
                    "knot {i} = ({r}, {g}) must have positive finite r and g"
                )));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::Parameter(format!(
                    "knot radii must be strictly increasing (knot {})",
                    i + 1
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Parameter(format!(
                    "knot values must be non-decreasing (knot {})",
                    i + 1
                )));
            }
        }
        let log_slope = |a: (f64, f64), b: (f64, f64)| (b.1 / a.1).ln() / (b.0 / a.0).ln();
        let slope_lo = log_slope(knots[0], knots[1]);
        let last = knots.len() - 1;
        let slope_hi = log_slope(knots[last - 1], knots[last]);
        Ok(Self {
            knots,
            slope_lo,
            slope_hi,
        })
    }

    /// Reads a two-column CSV with header `r,g`.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "g" {
            return Err(Error::Format(format!(
                "tabulated symbol CSV must have header \"r,g\", found {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut knots = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
            };
            knots.push((parse(&record[0])?, parse(&record[1])?));
        }
        Self::new(knots)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Log-log slope used above the last knot.
    pub fn upper_slope(&self) -> f64 {
        self.slope_hi
    }

    fn eval(&self, r: f64) -> f64 {
        let (r0, g0) = self.knots[0];
        let (rn, gn) = self.knots[self.knots.len() - 1];
        if r <= r0 {
            if r == 0.0 {
                return if self.slope_lo > 0.0 { 0.0 } else { g0 };
            }
            return g0 * (r / r0).powf(self.slope_lo);
        }
        if r >= rn {
            return gn * (r / rn).powf(self.slope_hi);
        }
        let i = self.knots.partition_point(|&(x, _)| x <= r);
        let (xa, ya) = self.knots[i - 1];
        let (xb, yb) = self.knots[i];
        if r == xa {
            return ya;
        }
        ya + (yb - ya) * (r - xa) / (xb - xa)
    }

    fn ln_eval_at_log(&self, x: f64) -> f64 {
        let (r0, g0) = self.knots[0];
        let (rn, gn) = self.knots[self.knots.len() - 1];
        if x <= r0.ln() {
            g0.ln() + self.slope_lo * (x - r0.ln())
        } else if x >= rn.ln() {
            gn.ln() + self.slope_hi * (x - rn.ln())
        } else {
            self.eval(x.exp()).ln()
        }
    }
}

/// `ln(1 + e^x)` without overflow for large `x`.
fn ln1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl SymbolSpec {
    /// Checks the family parameters against their ranges.
    ///
    /// `LogPower` and `LogLogLog` accept exponents in `(0, 1]`: such symbols
    /// satisfy positivity and monotonicity but fail the growth condition, and
    /// the admissibility module reports them as divergent.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            SymbolSpec::Power { mu1 } => positive("mu1", *mu1),
            SymbolSpec::LogPower { mu2 } => positive("mu2", *mu2),
            SymbolSpec::PowerLog { mu3, mu4 } => {
                positive("mu3", *mu3)?;
                if mu4.is_finite() && *mu4 >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("mu4 must be nonnegative, got {mu4}")))
                }
            }
            SymbolSpec::LogLogLog { mu5 } => positive("mu5", *mu5),
            SymbolSpec::Constant { c } => positive("c", *c),
            SymbolSpec::Tabulated(_) => Ok(()),
        }
    }

    /// Evaluates `g(r)`; `r = 0` returns the right limit.
    pub fn g(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain(format!("g evaluated at r = {r}")));
        }
        self.validate()?;
        Ok(self.g_unchecked(r))
    }

    /// `g(r)` for validated specs and `r ≥ 0`.
    pub(crate) fn g_unchecked(&self, r: f64) -> f64 {
        match self {
            SymbolSpec::Power { mu1 } => r.powf(*mu1),
            SymbolSpec::LogPower { mu2 } => r.ln_1p().powf(*mu2),
            SymbolSpec::PowerLog { mu3, mu4 } => r.powf(*mu3) * r.ln_1p().powf(*mu4),
            SymbolSpec::LogLogLog { mu5 } => {
                let l = r.ln_1p();
                l * l.ln_1p().powf(*mu5)
            }
            SymbolSpec::Constant { c } => *c,
            SymbolSpec::Tabulated(t) => t.eval(r),
        }
    }

    /// `ln g(e^x)`, usable for radii far beyond the f64 range.
    pub fn ln_g_at_log(&self, x: f64) -> f64 {
        match self {
            SymbolSpec::Power { mu1 } => mu1 * x,
            SymbolSpec::LogPower { mu2 } => mu2 * ln1p_exp(x).ln(),
            SymbolSpec::PowerLog { mu3, mu4 } => {
                if *mu4 == 0.0 {
                    mu3 * x
                } else {
                    mu3 * x + mu4 * ln1p_exp(x).ln()
                }
            }
            SymbolSpec::LogLogLog { mu5 } => {
                let l = ln1p_exp(x);
                l.ln() + mu5 * l.ln_1p().ln()
            }
            SymbolSpec::Constant { c } => c.ln(),
            SymbolSpec::Tabulated(t) => t.ln_eval_at_log(x),
        }
    }

    /// `m(r) = r² g(r)`, with `m(0) = 0`.
    pub fn multiplier(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            self.validate()?;
            return Ok(0.0);
        }
        Ok(r * r * self.g(r)?)
    }

    pub(crate) fn multiplier_unchecked(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            r * r * self.g_unchecked(r)
        }
    }

    /// `(g′(r), g″(r))`.
    pub fn derivatives(&self, r: f64) -> Result<(f64, f64)> {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::Domain(format!("derivatives evaluated at r = {r}")));
        }
        self.validate()?;
        Ok(self.derivatives_unchecked(r))
    }

    fn derivatives_unchecked(&self, r: f64) -> (f64, f64) {
        match self {
            SymbolSpec::Power { mu1 } => {
                let mu = *mu1;
                (mu * r.powf(mu - 1.0), mu * (mu - 1.0) * r.powf(mu - 2.0))
            }
            SymbolSpec::Constant { .. } => (0.0, 0.0),
            SymbolSpec::Tabulated(t) => {
                let h = TABULATED_FD_STEP * r;
                let (gm, g0, gp) = (t.eval(r - h), t.eval(r), t.eval(r + h));
                ((gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h))
            }
            _ => {
                // g′ = g φ′ and g″ = g (φ″ + φ′²) with φ = ln g.
                let (d1, d2) = self.log_derivatives(r);
                let g = self.g_unchecked(r);
                (g * d1, g * (d2 + d1 * d1))
            }
        }
    }

    /// First and second derivatives of `ln g` for the logarithmic families.
    fn log_derivatives(&self, r: f64) -> (f64, f64) {
        let l = r.ln_1p();
        let dl = 1.0 / (1.0 + r);
        let ddl = -dl * dl;
        match self {
            SymbolSpec::LogPower { mu2 } => {
                let d1 = mu2 * dl / l;
                let d2 = mu2 * (ddl * l - dl * dl) / (l * l);
                (d1, d2)
            }
            SymbolSpec::PowerLog { mu3, mu4 } => {
                let d1 = mu3 / r + mu4 * dl / l;
                let d2 = -mu3 / (r * r) + mu4 * (ddl * l - dl * dl) / (l * l);
                (d1, d2)
            }
            SymbolSpec::LogLogLog { mu5 } => {
                let m = l.ln_1p();
                let dm = dl / (1.0 + l);
                let ddm = (ddl * (1.0 + l) - dl * dl) / ((1.0 + l) * (1.0 + l));
                let d1 = dl / l + mu5 * dm / m;
                let d2 = (ddl * l - dl * dl) / (l * l) + mu5 * (ddm * m - dm * dm) / (m * m);
                (d1, d2)
            }
            _ => unreachable!("log derivatives requested for a non-logarithmic family"),
        }
    }

    /// `lim_{r→∞} g(r)` when finite.
    pub fn sup_value(&self) -> Option<f64> {
        match self {
            SymbolSpec::Constant { c } => Some(*c),
            SymbolSpec::Tabulated(t) if t.upper_slope() == 0.0 => {
                Some(t.knots()[t.knots().len() - 1].1)
            }
            _ => None,
        }
    }

    /// Short family name as used in config files.
    pub fn family_name(&self) -> &'static str {
        match self {
            SymbolSpec::Power { .. } => "power",
            SymbolSpec::LogPower { .. } => "logpower",
            SymbolSpec::PowerLog { .. } => "powerlog",
            SymbolSpec::LogLogLog { .. } => "logloglog",
            SymbolSpec::Constant { .. } => "constant",
            SymbolSpec::Tabulated(_) => "tabulated",
        }
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolSpec::Power { mu1 } => write!(f, "power(mu1={mu1})"),
            SymbolSpec::LogPower { mu2 } => write!(f, "logpower(mu2={mu2})"),
            SymbolSpec::PowerLog { mu3, mu4 } => write!(f, "powerlog(mu3={mu3},mu4={mu4})"),
            SymbolSpec::LogLogLog { mu5 } => write!(f, "logloglog(mu5={mu5})"),
            SymbolSpec::Constant { c } => write!(f, "constant(c={c})"),
            SymbolSpec::Tabulated(t) => write!(f, "tabulated({} knots)", t.knots().len()),
        }
    }
}

pub fn eval_g(spec: &SymbolSpec, r: f64) -> Result<f64> {
    spec.g(r)
}

pub fn eval_multiplier(spec: &SymbolSpec, r: f64) -> Result<f64> {
    spec.multiplier(r)
}

pub fn eval_g_derivatives(spec: &SymbolSpec, r: f64) -> Result<(f64, f64)> {
    spec.derivatives(r)
}

/// Sampled Mikhlin–Hörmander constants of a symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinReport {
    /// `sup |r g′(r) / g(r)|` over the grid.
    pub c_tilde_order1: f64,
    /// `sup |r² g″(r) / g(r)|` over the grid.
    pub c_tilde_order2: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub cap: f64,
    pub passed: bool,
}

impl MikhlinReport {
    pub fn grid_description(&self) -> String {
        format!(
            "log-spaced, {} points in [{:e}, {:e}]",
            self.points, self.r_min, self.r_max
        )
    }
}

pub fn check_mikhlin(spec: &SymbolSpec, r_min: f64, r_max: f64, points: usize) -> Result<MikhlinReport> {
    check_mikhlin_with_cap(spec, r_min, r_max, points, DEFAULT_MIKHLIN_CAP)
}

pub fn check_mikhlin_with_cap(
    spec: &SymbolSpec,
    r_min: f64,
    r_max: f64,
    points: usize,
    cap: f64,
) -> Result<MikhlinReport> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::Precondition(format!(
            "Mikhlin grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if points < 16 {
        return Err(Error::Precondition(format!(
            "Mikhlin grid needs at least 16 points, got {points}"
        )));
    }
    spec.validate()?;
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    for r in log_space(r_min, r_max, points) {
        let g = spec.g(r)?;
        let (d1, d2) = spec.derivatives(r)?;
        c1 = c1.max((r * d1 / g).abs());
        c2 = c2.max((r * r * d2 / g).abs());
    }
    Ok(MikhlinReport {
        c_tilde_order1: c1,
        c_tilde_order2: c2,
        r_min,
        r_max,
        points,
        cap,
        passed: c1.max(c2) <= cap,
    })
}

/// Outcome of sampling positivity and monotonicity of `g` on a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub positive: bool,
    pub non_decreasing: bool,
    pub multiplier_increasing: bool,
}

impl ShapeReport {
    pub fn ok(&self) -> bool {
        self.positive && self.non_decreasing && self.multiplier_increasing
    }
}

pub fn check_shape(spec: &SymbolSpec, r_min: f64, r_max: f64, points: usize) -> Result<ShapeReport> {
    spec.validate()?;
    let grid = log_space(r_min, r_max, points);
    let g: Vec<f64> = grid.iter().map(|&r| spec.g_unchecked(r)).collect();
    let m: Vec<f64> = grid.iter().map(|&r| spec.multiplier_unchecked(r)).collect();
    Ok(ShapeReport {
        positive: g.iter().all(|&v| v > 0.0),
        non_decreasing: g.windows(2).all(|w| w[0] <= w[1]),
        multiplier_increasing: m.windows(2).all(|w| w[0] < w[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn families() -> Vec<SymbolSpec> {
        vec![
            SymbolSpec::Power { mu1: 1.0 },
            SymbolSpec::Power { mu1: 0.3 },
            SymbolSpec::LogPower { mu2: 2.0 },
            SymbolSpec::PowerLog { mu3: 1.0, mu4: 1.0 },
            SymbolSpec::LogLogLog { mu5: 2.0 },
            SymbolSpec::Constant { c: 3.0 },
            SymbolSpec::Tabulated(
                Tabulated::new(vec![(0.1, 0.5), (1.0, 1.0), (10.0, 1.0), (100.0, 4.0)]).unwrap(),
            ),
        ]
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(eval_g(&SymbolSpec::Power { mu1: 1.0 }, 2.0).unwrap(), 2.0);
        let v = eval_g(&SymbolSpec::LogPower { mu2: 2.0 }, std::f64::consts::E - 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(eval_g(&SymbolSpec::Constant { c: 3.0 }, 7.0).unwrap(), 3.0);
    }

    #[test]
    fn multiplier_values() {
        assert_eq!(eval_multiplier(&SymbolSpec::Power { mu1: 2.0 }, 0.5).unwrap(), 1.0 / 16.0);
        assert_eq!(eval_multiplier(&SymbolSpec::Constant { c: 1.0 }, 3.0).unwrap(), 9.0);
        for spec in families() {
            assert_eq!(eval_multiplier(&spec, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn derivative_values() {
        assert_eq!(eval_g_derivatives(&SymbolSpec::Power { mu1: 1.0 }, 5.0).unwrap(), (1.0, 0.0));
        assert_eq!(eval_g_derivatives(&SymbolSpec::Power { mu1: 2.0 }, 3.0).unwrap(), (6.0, 2.0));
        assert_eq!(eval_g_derivatives(&SymbolSpec::Constant { c: 2.5 }, 0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for spec in families().into_iter().filter(|s| !matches!(s, SymbolSpec::Tabulated(_))) {
            for &r in &[1e-3, 0.2, 1.0, 3.7, 250.0] {
                let (d1, d2) = spec.derivatives(r).unwrap();
                let h = 1e-4 * r;
                let (gm, g0, gp) = (spec.g_unchecked(r - h), spec.g_unchecked(r), spec.g_unchecked(r + h));
                let fd1 = (gp - gm) / (2.0 * h);
                let fd2 = (gp - 2.0 * g0 + gm) / (h * h);
                let scale1 = d1.abs().max(g0 / r);
                let scale2 = d2.abs().max(g0 / (r * r));
                assert!((d1 - fd1).abs() <= 1e-6 * scale1, "{spec} g' at {r}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() <= 1e-4 * scale2, "{spec} g'' at {r}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn log_space_evaluation_agrees() {
        for spec in families() {
            for &r in &[1e-4, 0.05, 0.5, 1.0, 20.0, 1e5] {
                let direct = spec.g_unchecked(r).ln();
                let via_log = spec.ln_g_at_log(r.ln());
                assert!((direct - via_log).abs() <= 1e-12 * direct.abs().max(1.0), "{spec} at {r}");
            }
        }
    }

    #[test]
    fn domain_and_parameter_errors() {
        assert!(matches!(eval_g(&SymbolSpec::Power { mu1: 1.0 }, -1.0), Err(Error::Domain(_))));
        assert!(matches!(eval_g(&SymbolSpec::Power { mu1: -1.0 }, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(
            eval_g(&SymbolSpec::PowerLog { mu3: 1.0, mu4: -0.5 }, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(eval_g(&SymbolSpec::Constant { c: 0.0 }, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(
            eval_g_derivatives(&SymbolSpec::Power { mu1: 1.0 }, 0.0),
            Err(Error::Domain(_))
        ));
        assert_eq!(eval_g(&SymbolSpec::Power { mu1: 1.0 }, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn mikhlin_power_is_exact() {
        for &mu in &[0.5, 1.0, 2.0, 3.5] {
            let rep = check_mikhlin(&SymbolSpec::Power { mu1: mu }, 1e-3, 1e3, 64).unwrap();
            assert!((rep.c_tilde_order1 - mu).abs() <= 1e-10 * mu);
            let expect2 = (mu * (mu - 1.0)).abs();
            assert!((rep.c_tilde_order2 - expect2).abs() <= 1e-10 * expect2.max(1e-300) + 1e-14);
        }
        let rep = check_mikhlin(&SymbolSpec::Power { mu1: 1.0 }, 1e-3, 1e3, 64).unwrap();
        assert_eq!(rep.c_tilde_order2, 0.0);
    }

    #[test]
    fn mikhlin_constant_and_logpower() {
        let rep = check_mikhlin(&SymbolSpec::Constant { c: 2.0 }, 1e-3, 1e3, 32).unwrap();
        assert_eq!((rep.c_tilde_order1, rep.c_tilde_order2), (0.0, 0.0));
        assert!(rep.passed);

        // Dense-grid oracle of the analytic ratios μ r / ((1+r) ln(1+r)) etc.
        let spec = SymbolSpec::LogPower { mu2: 2.0 };
        let rep = check_mikhlin(&spec, 1e-3, 1e3, 512).unwrap();
        let mut o1: f64 = 0.0;
        let mut o2: f64 = 0.0;
        for r in log_space(1e-3, 1e3, 20_000) {
            let l = r.ln_1p();
            let a = 2.0 * r / ((1.0 + r) * l);
            let b = 2.0 * r * r / ((1.0 + r) * (1.0 + r) * l * l) - 2.0 * r * r / ((1.0 + r) * (1.0 + r) * l);
            o1 = o1.max(a.abs());
            o2 = o2.max(b.abs());
        }
        assert!(rep.c_tilde_order1 <= 8.0 && rep.c_tilde_order2 <= 8.0);
        assert!((rep.c_tilde_order1 - o1).abs() < 1e-3);
        assert!((rep.c_tilde_order2 - o2).abs() < 1e-3);
        assert!(rep.passed);
    }

    #[test]
    fn mikhlin_preconditions() {
        let spec = SymbolSpec::Power { mu1: 1.0 };
        assert!(matches!(check_mikhlin(&spec, 1.0, 0.5, 32), Err(Error::Precondition(_))));
        assert!(matches!(check_mikhlin(&spec, 0.1, 10.0, 8), Err(Error::Precondition(_))));
        let rep = check_mikhlin_with_cap(&SymbolSpec::Power { mu1: 10.0 }, 0.1, 10.0, 32, 64.0).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn shape_invariants_on_wide_grid() {
        for spec in families() {
            let rep = check_shape(&spec, 1e-6, 1e6, 1024).unwrap();
            assert!(rep.ok(), "{spec}: {rep:?}");
        }
    }

    #[test]
    fn tabulated_reproduces_knots_and_extrapolates() {
        let knots = vec![(0.5, 1.0), (1.0, 2.0), (4.0, 3.0), (8.0, 6.0)];
        let t = Tabulated::new(knots.clone()).unwrap();
        let spec = SymbolSpec::Tabulated(t);
        for &(r, g) in &knots {
            assert_eq!(spec.g(r).unwrap(), g);
        }
        // last segment doubles g over a doubling of r: slope 1 beyond it
        assert!((spec.g(16.0).unwrap() - 12.0).abs() < 1e-12);
        assert!((spec.g(0.25).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(spec.g(0.0).unwrap(), 0.0);
        assert!((spec.g(2.5).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn tabulated_validation_and_csv() {
        assert!(Tabulated::new(vec![(1.0, 1.0)]).is_err());
        assert!(Tabulated::new(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(Tabulated::new(vec![(1.0, 2.0), (2.0, 1.0)]).is_err());
        assert!(Tabulated::new(vec![(1.0, 0.0), (2.0, 1.0)]).is_err());
        let t = Tabulated::from_csv_str("r,g\n1,1\n2,2\n3,2.5\n").unwrap();
        assert_eq!(t.knots().len(), 3);
        assert!(matches!(Tabulated::from_csv_str("x,y\n1,1\n2,2\n"), Err(Error::Format(_))));
        assert!(matches!(Tabulated::from_csv_str("r,g\n1,abc\n2,2\n"), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn multiplier_strictly_increasing(a in 1e-5f64..1e5, f in 1.0001f64..10.0, which in 0usize..7) {
            let spec = &families()[which];
            let b = a * f;
            prop_assert!(spec.multiplier(a).unwrap() < spec.multiplier(b).unwrap());
            prop_assert!(spec.g(a).unwrap() <= spec.g(b).unwrap());
        }
    }
}
