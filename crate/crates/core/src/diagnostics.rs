//! Run diagnostics: the energy ledger, the discrete cancellation identities,
//! the vorticity–current formulation and the monitored norms.

use std::fmt::Write as _;
use std::path::Path;

use crate::admissibility::AdmissibilityReport;
use crate::error::{Error, Result};
use crate::spectral::{Grid, ScalarField, VectorField};
use crate::symbols::SymbolSpec;

/// Exact ledger CSV header.
pub const LEDGER_HEADER: &str = "t,l2u2,l2b2,dissrate,dissint,eres,om2,j2,dissj,blinf,omlinf,jlinf,gjlinf,hsu,hsb,divu,divb";

/// Default Sobolev index for the `hsu`/`hsb` columns.
pub const DEFAULT_HS_INDEX: f64 = 3.0;

/// One sampled time of a run. `grad_b_linf` is kept in memory for the
/// monitor but is not part of the CSV layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub l2_u_sq: f64,
    pub l2_b_sq: f64,
    pub diss_rate: f64,
    pub diss_integral: f64,
    pub energy_residual: f64,
    pub omega_l2_sq: f64,
    pub j_l2_sq: f64,
    pub diss_rate_j: f64,
    pub b_linf: f64,
    pub omega_linf: f64,
    pub j_linf: f64,
    pub grad_j_linf: f64,
    pub hs_u: f64,
    pub hs_b: f64,
    pub div_residual_u: f64,
    pub div_residual_b: f64,
    pub grad_b_linf: f64,
}

impl LedgerRow {
    fn csv_values(&self) -> [f64; 17] {
        [
            self.t,
            self.l2_u_sq,
            self.l2_b_sq,
            self.diss_rate,
            self.diss_integral,
            self.energy_residual,
            self.omega_l2_sq,
            self.j_l2_sq,
            self.diss_rate_j,
            self.b_linf,
            self.omega_linf,
            self.j_linf,
            self.grad_j_linf,
            self.hs_u,
            self.hs_b,
            self.div_residual_u,
            self.div_residual_b,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    /// Set when the optional spectral filter was active.
    pub filtered: bool,
}

impl EnergyLedger {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.rows.len() * 17 * 24);
        out.push_str(LEDGER_HEADER);
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.csv_values().iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?;
        if header.iter().collect::<Vec<_>>().join(",") != LEDGER_HEADER {
            return Err(Error::Format("ledger header mismatch".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            rows.push(LedgerRow {
                t: v[0],
                l2_u_sq: v[1],
                l2_b_sq: v[2],
                diss_rate: v[3],
                diss_integral: v[4],
                energy_residual: v[5],
                omega_l2_sq: v[6],
                j_l2_sq: v[7],
                diss_rate_j: v[8],
                b_linf: v[9],
                omega_linf: v[10],
                j_linf: v[11],
                grad_j_linf: v[12],
                hs_u: v[13],
                hs_b: v[14],
                div_residual_u: v[15],
                div_residual_b: v[16],
                grad_b_linf: f64::NAN,
            });
        }
        Ok(Self { rows, filtered: false })
    }
}

/// Pointwise max of `|∇f|` for a scalar field.
fn grad_linf(grid: &Grid, f: &ScalarField) -> f64 {
    grid.vector_linf(&grid.gradient(f))
}

/// Pointwise max of the Frobenius norm of `∇v`.
fn jacobian_linf(grid: &Grid, v: &VectorField) -> f64 {
    let parts = [
        grid.inverse(&grid.derivative(&v.0, 0)),
        grid.inverse(&grid.derivative(&v.0, 1)),
        grid.inverse(&grid.derivative(&v.1, 0)),
        grid.inverse(&grid.derivative(&v.1, 1)),
    ];
    (0..parts[0].len())
        .map(|i| parts.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Samples every ledger column for the fields `(u, b)` at time `t`.
/// `initial_energy` is `‖u₀‖² + ‖b₀‖²`.
#[allow(clippy::too_many_arguments)]
pub fn ledger_row(
    grid: &Grid,
    spec: &SymbolSpec,
    u: &VectorField,
    b: &VectorField,
    t: f64,
    diss_integral: f64,
    initial_energy: f64,
    hs_index: f64,
) -> LedgerRow {
    let omega = grid.curl_unchecked(u);
    let j = grid.curl_unchecked(b);
    let l2_u_sq = grid.vector_l2_sq(u);
    let l2_b_sq = grid.vector_l2_sq(b);
    let total = l2_u_sq + l2_b_sq + 2.0 * diss_integral;
    let gap = (total - initial_energy).abs();
    let energy_residual = if initial_energy > 0.0 { gap / initial_energy } else { gap };
    LedgerRow {
        t,
        l2_u_sq,
        l2_b_sq,
        diss_rate: grid.vector_lhalf_sq(b, spec),
        diss_integral,
        energy_residual,
        omega_l2_sq: grid.l2_norm(&omega).powi(2),
        j_l2_sq: grid.l2_norm(&j).powi(2),
        diss_rate_j: grid.lhalf_diss_norm(&j, spec).powi(2),
        b_linf: grid.vector_linf(b),
        omega_linf: grid.linf_norm(&omega),
        j_linf: grid.linf_norm(&j),
        grad_j_linf: grad_linf(grid, &j),
        hs_u: grid.vector_hs_norm(u, hs_index),
        hs_b: grid.vector_hs_norm(b, hs_index),
        div_residual_u: grid.divergence_defect(u),
        div_residual_b: grid.divergence_defect(b),
        grad_b_linf: jacobian_linf(grid, b),
    }
}

/// Largest energy residual over the ledger.
pub fn energy_identity_residual(ledger: &EnergyLedger) -> Result<f64> {
    if ledger.rows.len() < 2 {
        return Err(Error::Precondition(format!(
            "energy residual needs at least 2 ledger rows, got {}",
            ledger.rows.len()
        )));
    }
    Ok(ledger.rows.iter().map(|r| r.energy_residual).fold(0.0, f64::max))
}

/// `(v·∇)w` with dealiased products.
pub fn advect(grid: &Grid, v: &VectorField, w: &VectorField) -> VectorField {
    let v1 = grid.inverse(&v.0);
    let v2 = grid.inverse(&v.1);
    let comp = |f: &ScalarField| {
        let d1 = grid.inverse(&grid.derivative(f, 0));
        let d2 = grid.inverse(&grid.derivative(f, 1));
        let mut out = grid.masked_product_phys(&v1, &d1);
        out.add_scaled(&grid.masked_product_phys(&v2, &d2), 1.0);
        out
    };
    VectorField(comp(&w.0), comp(&w.1))
}

/// `(v·∇)f` for a scalar `f`.
pub fn advect_scalar(grid: &Grid, v: &VectorField, f: &ScalarField) -> ScalarField {
    let d1 = grid.inverse(&grid.derivative(f, 0));
    let d2 = grid.inverse(&grid.derivative(f, 1));
    let mut out = grid.masked_product_phys(&grid.inverse(&v.0), &d1);
    out.add_scaled(&grid.masked_product_phys(&grid.inverse(&v.1), &d2), 1.0);
    out
}

fn vector_inner(grid: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    grid.inner(&a.0, &b.0) + grid.inner(&a.1, &b.1)
}

fn check_pair(grid: &Grid, u: &VectorField, b: &VectorField) -> Result<()> {
    for f in [&u.0, &u.1, &b.0, &b.1] {
        if f.n() != grid.n() {
            return Err(Error::GridMismatch(format!("field has n = {}, grid has n = {}", f.n(), grid.n())));
        }
    }
    Ok(())
}

/// `|∫(b·∇)b·u + ∫(b·∇)u·b| / (‖b‖²_{L²}‖∇u‖_{L∞} + ε)`.
pub fn cancellation_check(grid: &Grid, u: &VectorField, b: &VectorField) -> Result<f64> {
    check_pair(grid, u, b)?;
    let s = vector_inner(grid, &advect(grid, b, b), u) + vector_inner(grid, &advect(grid, b, u), b);
    let scale = grid.vector_l2_sq(b) * jacobian_linf(grid, u) + f64::MIN_POSITIVE;
    Ok(s.abs() / scale)
}

/// `|∫(b·∇j)ω + ∫(b·∇ω)j| / (‖b‖_{L∞}‖∇j‖_{L²}‖ω‖_{L²} + ε)` with
/// `ω = curl u`, `j = curl b`.
pub fn vorticity_cancellation_check(grid: &Grid, u: &VectorField, b: &VectorField) -> Result<f64> {
    check_pair(grid, u, b)?;
    let omega = grid.curl_unchecked(u);
    let j = grid.curl_unchecked(b);
    let s = grid.inner(&advect_scalar(grid, b, &j), &omega) + grid.inner(&advect_scalar(grid, b, &omega), &j);
    let scale = grid.vector_linf(b) * grid.hdot_norm(&j, 1.0) * grid.l2_norm(&omega) + f64::MIN_POSITIVE;
    Ok(s.abs() / scale)
}

/// `T(∇u, ∇b) = 2∂₁b₁(∂₂u₁ + ∂₁u₂) − 2∂₁u₁(∂₂b₁ + ∂₁b₂)`.
pub fn t_term(grid: &Grid, u: &VectorField, b: &VectorField) -> ScalarField {
    let d = |f: &ScalarField, axis| grid.inverse(&grid.derivative(f, axis));
    let b11 = d(&b.0, 0);
    let u11 = d(&u.0, 0);
    let su: Vec<f64> = d(&u.0, 1).iter().zip(d(&u.1, 0)).map(|(x, y)| x + y).collect();
    let sb: Vec<f64> = d(&b.0, 1).iter().zip(d(&b.1, 0)).map(|(x, y)| x + y).collect();
    let mut out = grid.masked_product_phys(&b11, &su).scaled(2.0);
    out.add_scaled(&grid.masked_product_phys(&u11, &sb), -2.0);
    out
}

/// Relative mismatch between `curl(−(u·∇)b + (b·∇)u)` and
/// `(b·∇)ω − (u·∇)j + T(∇u, ∇b)`; absolute when the latter vanishes.
pub fn vorticity_current_residual(grid: &Grid, u: &VectorField, b: &VectorField) -> Result<f64> {
    check_pair(grid, u, b)?;
    let mut induction = advect(grid, b, u);
    induction.add_scaled(&advect(grid, u, b), -1.0);
    let a = grid.curl_unchecked(&induction);
    let omega = grid.curl_unchecked(u);
    let j = grid.curl_unchecked(b);
    let mut rhs = advect_scalar(grid, b, &omega);
    rhs.add_scaled(&advect_scalar(grid, u, &j), -1.0);
    rhs.add_scaled(&t_term(grid, u, b), 1.0);
    let mut diff = a;
    diff.add_scaled(&rhs, -1.0);
    let denom = grid.l2_norm(&rhs);
    let num = grid.l2_norm(&diff);
    Ok(if denom > 0.0 { num / denom } else { num })
}

/// `‖∇b‖_{L∞} / (‖∇b‖_{L²}^{1/2} ‖∇j‖_{L∞}^{1/2})`.
pub fn gradient_interpolation_ratio(grid: &Grid, b: &VectorField) -> Result<f64> {
    check_pair(grid, b, b)?;
    let j = grid.curl_unchecked(b);
    let grad_b_l2 = (grid.vector_l2_sq(&grid.gradient(&b.0)) + grid.vector_l2_sq(&grid.gradient(&b.1))).sqrt();
    let denom = (grad_b_l2 * grad_linf(grid, &j)).sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroField("interpolation ratio needs a non-constant field".into()));
    }
    Ok(jacobian_linf(grid, b) / denom)
}

/// One monitored quantity: its final value, its running series and the
/// growth flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoredQuantity {
    pub name: &'static str,
    pub value: f64,
    pub series: Vec<(f64, f64)>,
    /// Final value at least twice the value at three quarters of the run.
    pub growth_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSummary {
    pub quantities: Vec<MonitoredQuantity>,
    pub verdict: Option<String>,
}

impl MonitorSummary {
    pub fn get(&self, name: &str) -> Option<&MonitoredQuantity> {
        self.quantities.iter().find(|q| q.name == name)
    }
}

fn running_sup(ts: &[f64], v: &[f64]) -> Vec<(f64, f64)> {
    let mut m: f64 = 0.0;
    ts.iter().zip(v).map(|(&t, &x)| {
        m = m.max(x);
        (t, m)
    }).collect()
}

fn running_integral(ts: &[f64], v: &[f64], sqrt: bool) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    for i in 0..ts.len() {
        if i > 0 {
            acc += 0.5 * (ts[i] - ts[i - 1]) * (v[i] + v[i - 1]);
        }
        out.push((ts[i], if sqrt { acc.sqrt() } else { acc }));
    }
    out
}

fn growth_flag(series: &[(f64, f64)]) -> bool {
    let Some(&(t_end, v_end)) = series.last() else { return false };
    let cut = series[0].0 + 0.75 * (t_end - series[0].0);
    let v_cut = series.iter().rev().find(|(t, _)| *t <= cut).map_or(0.0, |p| p.1);
    if v_end == 0.0 {
        return false;
    }
    v_end >= 2.0 * v_cut
}

/// The five norms controlled by the a-priori estimates: `sup_t ‖b‖_{L∞}`,
/// `(∫‖j‖²_{L∞})^{1/2}`, `∫‖∇j‖_{L∞}`, `sup_t ‖ω‖_{L∞}`, `(∫‖∇b‖²_{L∞})^{1/2}`.
pub fn apriori_monitor(ledger: &EnergyLedger, report: Option<&AdmissibilityReport>) -> MonitorSummary {
    let ts: Vec<f64> = ledger.rows.iter().map(|r| r.t).collect();
    let col = |f: fn(&LedgerRow) -> f64| ledger.rows.iter().map(f).collect::<Vec<f64>>();
    let sq = |f: fn(&LedgerRow) -> f64| ledger.rows.iter().map(|r| f(r).powi(2)).collect::<Vec<f64>>();
    let build = |name, series: Vec<(f64, f64)>| MonitoredQuantity {
        name,
        value: series.last().map_or(0.0, |p| p.1),
        growth_flag: growth_flag(&series),
        series,
    };
    let quantities = vec![
        build("b_linf_sup", running_sup(&ts, &col(|r| r.b_linf))),
        build("j_linf_l2t", running_integral(&ts, &sq(|r| r.j_linf), true)),
        build("grad_j_linf_l1t", running_integral(&ts, &col(|r| r.grad_j_linf), false)),
        build("omega_linf_sup", running_sup(&ts, &col(|r| r.omega_linf))),
        build("grad_b_linf_l2t", running_integral(&ts, &sq(|r| r.grad_b_linf), true)),
    ];
    MonitorSummary {
        quantities,
        verdict: report.map(|r| r.verdict.to_string()),
    }
}

/// Side-by-side table of two monitor summaries.
pub fn comparison_table(left: (&str, &MonitorSummary), right: (&str, &MonitorSummary)) -> String {
    let mut out = format!("quantity,{},{},ratio\n", left.0, right.0);
    for q in &left.1.quantities {
        let other = right.1.get(q.name).map_or(f64::NAN, |p| p.value);
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", q.name, q.value, other, q.value / other).unwrap();
    }
    out
}
