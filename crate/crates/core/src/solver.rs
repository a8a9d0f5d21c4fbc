//! Integrating-factor RK4 for the MHD system with inviscid velocity and
//! multiplier diffusion of the magnetic field.
//!
//! The magnetic field is advanced in the variable `w = e^{t m(k)} b̂`, so the
//! linear part is integrated exactly by the semigroup `e^{−τ m(k)}`; only
//! decaying exponentials are ever evaluated. The dissipation integral
//! `∫‖L^{1/2}b‖²` is carried as an extra RK4 component.

use std::path::Path;

use crate::diagnostics::{ledger_row, EnergyLedger, DEFAULT_HS_INDEX};
use crate::error::{Error, Result};
use crate::spectral::{read_snapshot, write_snapshot, Grid, ScalarField, VectorField};
use crate::symbols::SymbolSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// `dt = cfl·Δx / (max|u| + max|b|)`, re-evaluated every step.
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid,
    pub symbol: SymbolSpec,
    pub dt: TimeStep,
    pub t_end: f64,
    pub cfl: f64,
    pub nonlinear_enabled: bool,
    pub filter_enabled: bool,
    pub diagnostics_stride: usize,
    pub hs_index: f64,
    pub max_steps: u64,
}

impl SolverConfig {
    pub fn new(grid: Grid, symbol: SymbolSpec, t_end: f64) -> Self {
        Self {
            grid,
            symbol,
            dt: TimeStep::Auto,
            t_end,
            cfl: 0.4,
            nonlinear_enabled: true,
            filter_enabled: false,
            diagnostics_stride: 1,
            hs_index: DEFAULT_HS_INDEX,
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.symbol.validate()?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Precondition(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.cfl.is_finite() && self.cfl > 0.0) {
            return Err(Error::Precondition(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.diagnostics_stride == 0 {
            return Err(Error::Precondition("diagnostics stride must be at least 1".into()));
        }
        if !(self.hs_index >= 0.0) {
            return Err(Error::Precondition(format!("Sobolev index must be nonnegative, got {}", self.hs_index)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: VectorField,
    pub b: VectorField,
    pub t: f64,
    pub step_count: u64,
    /// `∫_0^t ‖L^{1/2}b‖² dτ`.
    pub diss_integral: f64,
}

impl SolverState {
    /// Projects and masks the initial fields; the clock starts at 0.
    pub fn new(grid: &Grid, u: VectorField, b: VectorField) -> Result<Self> {
        for f in [&u.0, &u.1, &b.0, &b.1] {
            if f.n() != grid.n() {
                return Err(Error::GridMismatch(format!("field has n = {}, grid has n = {}", f.n(), grid.n())));
            }
        }
        let mut state = Self {
            u,
            b,
            t: 0.0,
            step_count: 0,
            diss_integral: 0.0,
        };
        for v in [&mut state.u, &mut state.b] {
            grid.apply_mask(&mut v.0);
            grid.apply_mask(&mut v.1);
            grid.leray_in_place(v);
        }
        Ok(state)
    }

    pub fn energy(&self, grid: &Grid) -> f64 {
        grid.vector_l2_sq(&self.u) + grid.vector_l2_sq(&self.b)
    }

    pub fn is_finite(&self) -> bool {
        [&self.u.0, &self.u.1, &self.b.0, &self.b.1]
            .iter()
            .all(|f| f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// Named initial conditions, scaled to the box.
pub const PRESETS: [&str; 3] = ["orszag-tang", "taylor-green", "random-band"];

pub fn preset(grid: &Grid, name: &str, seed: u64) -> Result<(VectorField, VectorField)> {
    let kappa = 2.0 * std::f64::consts::PI / grid.box_length();
    match name {
        "orszag-tang" => Ok((
            grid.sample_vector(|x, y| (-(kappa * y).sin(), (kappa * x).sin())),
            grid.sample_vector(|x, y| (-(kappa * y).sin(), (2.0 * kappa * x).sin())),
        )),
        "taylor-green" => {
            let u = grid.sample_vector(|x, y| {
                let (x, y) = (kappa * x, kappa * y);
                (-x.sin() * y.cos(), x.cos() * y.sin())
            });
            let b = u.scaled(0.5);
            Ok((u, b))
        }
        "random-band" => {
            let band = (grid.n() / 8).max(2);
            let target = 0.5 * grid.measure();
            let normalize = |v: VectorField| {
                let e = grid.vector_l2_sq(&v);
                v.scaled((target / e).sqrt())
            };
            Ok((
                normalize(grid.random_band_divfree(band, 1.0, seed)),
                normalize(grid.random_band_divfree(band, 1.0, seed ^ 0x9e37_79b9_7f4a_7c15)),
            ))
        }
        other => Err(Error::Parameter(format!("unknown preset '{other}', expected one of {PRESETS:?}"))),
    }
}

/// Reads a snapshot with four components `(u₁, u₂, b₁, b₂)`.
pub fn state_from_snapshot(grid: &Grid, path: impl AsRef<Path>) -> Result<SolverState> {
    let snap = read_snapshot(path)?;
    if snap.n != grid.n() || snap.box_length != grid.box_length() {
        return Err(Error::GridMismatch(format!(
            "snapshot grid n = {}, L = {} differs from configured n = {}, L = {}",
            snap.n,
            snap.box_length,
            grid.n(),
            grid.box_length()
        )));
    }
    if snap.components.len() != 4 {
        return Err(Error::Format(format!("state snapshot needs 4 components, found {}", snap.components.len())));
    }
    let mut c = snap.components.into_iter();
    let mut next = || c.next().unwrap();
    let u = VectorField(next(), next());
    let b = VectorField(next(), next());
    // Solver output is restored bit-for-bit; anything else is projected.
    let clean = |v: &VectorField| {
        let mut masked = v.clone();
        grid.apply_mask(&mut masked.0);
        grid.apply_mask(&mut masked.1);
        masked == *v && grid.divergence_defect(v) <= 1e-12
    };
    if clean(&u) && clean(&b) {
        return Ok(SolverState {
            u,
            b,
            t: 0.0,
            step_count: 0,
            diss_integral: 0.0,
        });
    }
    SolverState::new(grid, u, b)
}

pub fn write_state_snapshot(grid: &Grid, state: &SolverState, path: impl AsRef<Path>) -> Result<()> {
    write_snapshot(path, grid, &[&state.u.0, &state.u.1, &state.b.0, &state.b.1])
}

/// `e^{−τm}` with the rounding error of the product `τm` compensated, so
/// repeated application tracks the semigroup to a few ulps.
fn decay(tau: f64, m: f64) -> f64 {
    let x = tau * m;
    let remainder = tau.mul_add(m, -x);
    (-x).exp() * (1.0 - remainder)
}

/// Precomputed per-mode data for one `(grid, symbol)` pair, with the
/// exponentials cached for the last step size.
pub struct Stepper {
    grid: Grid,
    mult: Vec<f64>,
    filter: Option<Vec<f64>>,
    cached_dt: f64,
    exp_half: Vec<f64>,
    exp_full: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Grid, symbol: &SymbolSpec, filter_enabled: bool) -> Result<Self> {
        symbol.validate()?;
        let nn = grid.n() * grid.n();
        let mult: Vec<f64> = (0..nn)
            .map(|idx| {
                let (k1, k2) = grid.wavevector(idx);
                symbol.multiplier_unchecked(k1.hypot(k2))
            })
            .collect();
        let filter = filter_enabled.then(|| {
            let kmax = grid.dealias_max() as f64;
            (0..nn)
                .map(|idx| {
                    let (i, j) = grid.mode_index(idx);
                    let rho = (i.abs().max(j.abs()) as f64) / kmax;
                    (-36.0 * rho.powi(36)).exp()
                })
                .collect()
        });
        Ok(Self {
            grid: grid.clone(),
            mult,
            filter,
            cached_dt: f64::NAN,
            exp_half: vec![1.0; nn],
            exp_full: vec![1.0; nn],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Per-mode multiplier `m(|k|)`.
    pub fn multipliers(&self) -> &[f64] {
        &self.mult
    }

    fn prepare(&mut self, dt: f64) {
        if dt == self.cached_dt {
            return;
        }
        for ((h, f), m) in self.exp_half.iter_mut().zip(self.exp_full.iter_mut()).zip(&self.mult) {
            *h = decay(0.5 * dt, *m);
            *f = decay(dt, *m);
        }
        self.cached_dt = dt;
    }

    fn dissipation(&self, b: &VectorField) -> f64 {
        let weighted = |f: &ScalarField| f.coeffs().iter().zip(&self.mult).map(|(c, m)| m * c.norm_sqr()).sum::<f64>();
        self.grid.measure() * (weighted(&b.0) + weighted(&b.1))
    }

    /// Projected nonlinear terms `(N_u, N_b)` in conservative form:
    /// `N_u = P ∇·(b⊗b − u⊗u)`, `N_b = P ∇^⊥(u₁b₂ − u₂b₁)`, products dealiased.
    pub fn rhs_nonlinear(&self, u: &VectorField, b: &VectorField) -> (VectorField, VectorField) {
        let g = &self.grid;
        let u1 = g.inverse(&u.0);
        let u2 = g.inverse(&u.1);
        let b1 = g.inverse(&b.0);
        let b2 = g.inverse(&b.1);
        let combine = |f: &dyn Fn(usize) -> f64| {
            let phys: Vec<f64> = (0..u1.len()).map(f).collect();
            let mut s = g.forward(&phys);
            g.apply_mask(&mut s);
            s
        };
        let t11 = combine(&|i| b1[i] * b1[i] - u1[i] * u1[i]);
        let t12 = combine(&|i| b1[i] * b2[i] - u1[i] * u2[i]);
        let t22 = combine(&|i| b2[i] * b2[i] - u2[i] * u2[i]);
        let e = combine(&|i| u1[i] * b2[i] - u2[i] * b1[i]);

        let mut nu = VectorField::zeros(g.n());
        let mut nb = VectorField::zeros(g.n());
        let iu = num_complex::Complex64::new(0.0, 1.0);
        for idx in 0..g.n() * g.n() {
            let (k1, k2) = g.wavevector(idx);
            let (a11, a12, a22, ee) = (t11.coeffs()[idx], t12.coeffs()[idx], t22.coeffs()[idx], e.coeffs()[idx]);
            nu.0.coeffs_mut()[idx] = iu * (a11 * k1 + a12 * k2);
            nu.1.coeffs_mut()[idx] = iu * (a12 * k1 + a22 * k2);
            nb.0.coeffs_mut()[idx] = iu * (ee * k2);
            nb.1.coeffs_mut()[idx] = -iu * (ee * k1);
        }
        g.leray_in_place(&mut nu);
        g.leray_in_place(&mut nb);
        (nu, nb)
    }

    fn scale_modes(v: &VectorField, factors: &[f64]) -> VectorField {
        let mut out = v.clone();
        for f in [&mut out.0, &mut out.1] {
            for (c, s) in f.coeffs_mut().iter_mut().zip(factors) {
                *c *= *s;
            }
        }
        out
    }

    /// CFL step `cfl·Δx / (max|u| + max|b|)`; `None` for a zero state.
    pub fn cfl_dt(&self, state: &SolverState, cfl: f64) -> Option<f64> {
        let speed = self.grid.vector_linf(&state.u) + self.grid.vector_linf(&state.b);
        (speed > 0.0).then(|| cfl * self.grid.spacing() / speed)
    }

    /// One IF-RK4 step of size `dt`.
    pub fn step(&mut self, state: &SolverState, dt: f64, nonlinear: bool) -> SolverState {
        self.prepare(dt);
        let (un, bn) = (&state.u, &state.b);
        let mut next = if nonlinear {
            let eh = self.exp_half.clone();
            let ef = self.exp_full.clone();
            let f1 = self.dissipation(bn);
            let (k1u, k1b) = self.rhs_nonlinear(un, bn);

            let mut ua = un.clone();
            ua.add_scaled(&k1u, 0.5 * dt);
            let mut ba = bn.clone();
            ba.add_scaled(&k1b, 0.5 * dt);
            let ba = Self::scale_modes(&ba, &eh);
            let f2 = self.dissipation(&ba);
            let (k2u, k2b) = self.rhs_nonlinear(&ua, &ba);

            let bn_h = Self::scale_modes(bn, &eh);
            let mut ub = un.clone();
            ub.add_scaled(&k2u, 0.5 * dt);
            let mut bb = bn_h.clone();
            bb.add_scaled(&k2b, 0.5 * dt);
            let f3 = self.dissipation(&bb);
            let (k3u, k3b) = self.rhs_nonlinear(&ub, &bb);

            let bn_f = Self::scale_modes(bn, &ef);
            let mut uc = un.clone();
            uc.add_scaled(&k3u, dt);
            let mut bc = bn_f.clone();
            bc.add_scaled(&Self::scale_modes(&k3b, &eh), dt);
            let f4 = self.dissipation(&bc);
            let (k4u, k4b) = self.rhs_nonlinear(&uc, &bc);

            let mut u = un.clone();
            u.add_scaled(&k1u, dt / 6.0);
            u.add_scaled(&k2u, dt / 3.0);
            u.add_scaled(&k3u, dt / 3.0);
            u.add_scaled(&k4u, dt / 6.0);

            let mut mid = k2b;
            mid.add_scaled(&k3b, 1.0);
            let mut b = bn_f;
            b.add_scaled(&Self::scale_modes(&k1b, &ef), dt / 6.0);
            b.add_scaled(&Self::scale_modes(&mid, &eh), dt / 3.0);
            b.add_scaled(&k4b, dt / 6.0);

            SolverState {
                u,
                b,
                t: state.t + dt,
                step_count: state.step_count + 1,
                diss_integral: state.diss_integral + dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4),
            }
        } else {
            // Exact increment: ∫_0^dt m e^{−2τm} dτ = (1 − e^{−2 dt m}) / 2 per mode.
            let weights: Vec<f64> = self.mult.iter().map(|m| -0.5 * (-2.0 * dt * m).exp_m1()).collect();
            let weighted = |f: &ScalarField| f.coeffs().iter().zip(&weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>();
            let increment = self.grid.measure() * (weighted(&bn.0) + weighted(&bn.1));
            SolverState {
                u: un.clone(),
                b: Self::scale_modes(bn, &self.exp_full),
                t: state.t + dt,
                step_count: state.step_count + 1,
                diss_integral: state.diss_integral + increment,
            }
        };
        if let Some(filter) = &self.filter {
            next.u = Self::scale_modes(&next.u, filter);
            next.b = Self::scale_modes(&next.b, filter);
        }
        self.grid.leray_in_place(&mut next.u);
        self.grid.leray_in_place(&mut next.b);
        next
    }
}

/// Convenience wrapper around [`Stepper::rhs_nonlinear`].
pub fn rhs_nonlinear(grid: &Grid, symbol: &SymbolSpec, state: &SolverState) -> Result<(VectorField, VectorField)> {
    Ok(Stepper::new(grid, symbol, false)?.rhs_nonlinear(&state.u, &state.b))
}

/// Convenience wrapper around [`Stepper::step`].
pub fn step_ifrk4(state: &SolverState, dt: f64, config: &SolverConfig) -> Result<SolverState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    let mut stepper = Stepper::new(&config.grid, &config.symbol, config.filter_enabled)?;
    Ok(stepper.step(state, dt, config.nonlinear_enabled))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Non-finite values or energy above twice its initial value; the
    /// returned state is the last healthy one.
    Unstable { t: f64, step: u64, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    pub state: SolverState,
    pub status: RunStatus,
}

/// Advances `initial` to `t_end`, sampling the ledger every
/// `diagnostics_stride` steps and at the final time.
pub fn run(config: &SolverConfig, initial: SolverState) -> Result<RunOutcome> {
    config.validate()?;
    let grid = &config.grid;
    let mut stepper = Stepper::new(grid, &config.symbol, config.filter_enabled)?;
    let e0 = initial.energy(grid) + 2.0 * initial.diss_integral;
    let t_end = initial.t + config.t_end;
    let row = |s: &SolverState| ledger_row(grid, &config.symbol, &s.u, &s.b, s.t, s.diss_integral, e0, config.hs_index);
    let mut ledger = EnergyLedger {
        rows: vec![row(&initial)],
        filtered: config.filter_enabled,
    };
    let t0 = initial.t;
    // Fixed steps count from t0 so the clock carries no summation drift.
    let fixed_steps = match config.dt {
        TimeStep::Fixed(dt) => Some(((t_end - t0) / dt - 1e-9).ceil().max(0.0) as u64),
        TimeStep::Auto => None,
    };
    let mut state = initial;
    let mut steps = 0u64;
    while state.t < t_end && fixed_steps.is_none_or(|total| steps < total) {
        let remaining = t_end - state.t;
        let (dt, last) = match (config.dt, fixed_steps) {
            (TimeStep::Fixed(dt), Some(total)) => {
                let last = steps + 1 == total;
                let tail = (t_end - t0) - (total - 1) as f64 * dt;
                (if last && (tail - dt).abs() > 1e-9 * dt { tail } else { dt }, last)
            }
            _ => {
                let dt = stepper.cfl_dt(&state, config.cfl).unwrap_or(remaining);
                // Land exactly on t_end instead of leaving a sliver.
                if dt >= remaining * (1.0 - 1e-9) {
                    (remaining, true)
                } else {
                    (dt, false)
                }
            }
        };
        let mut next = stepper.step(&state, dt, config.nonlinear_enabled);
        if last {
            next.t = t_end;
        } else if let TimeStep::Fixed(dt) = config.dt {
            next.t = t0 + (steps + 1) as f64 * dt;
        }
        steps += 1;
        let energy = next.energy(grid);
        if !next.is_finite() || !energy.is_finite() || energy > 2.0 * e0 + f64::MIN_POSITIVE && e0 > 0.0 {
            let reason = if next.is_finite() {
                format!("energy {energy:e} exceeds twice the initial {e0:e}")
            } else {
                "non-finite field values".to_string()
            };
            return Ok(RunOutcome {
                ledger,
                status: RunStatus::Unstable {
                    t: next.t,
                    step: next.step_count,
                    reason,
                },
                state,
            });
        }
        state = next;
        if steps.is_multiple_of(config.diagnostics_stride as u64) || state.t >= t_end {
            ledger.rows.push(row(&state));
        }
        if steps >= config.max_steps && state.t < t_end {
            return Err(Error::Precondition(format!("step budget {} exhausted at t = {}", config.max_steps, state.t)));
        }
    }
    Ok(RunOutcome {
        ledger,
        state,
        status: RunStatus::Completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{advect, energy_identity_residual};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
        a.0.coeffs()
            .iter()
            .chain(a.1.coeffs())
            .zip(b.0.coeffs().iter().chain(b.1.coeffs()))
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    fn power() -> SymbolSpec {
        SymbolSpec::Power { mu1: 1.0 }
    }

    #[test]
    fn conservative_form_matches_advective_form() {
        let g = grid(64);
        let st = Stepper::new(&g, &power(), false).unwrap();
        for seed in 0..5 {
            let u = g.random_band_divfree(g.dealias_max(), 1.0, seed);
            let b = g.random_band_divfree(g.dealias_max(), 1.0, seed + 100);
            let (nu, nb) = st.rhs_nonlinear(&u, &b);
            let mut au = advect(&g, &b, &b);
            au.add_scaled(&advect(&g, &u, &u), -1.0);
            let au = g.leray_project(&au);
            let mut ab = advect(&g, &b, &u);
            ab.add_scaled(&advect(&g, &u, &b), -1.0);
            let ab = g.leray_project(&ab);
            let scale = max_diff(&au, &VectorField::zeros(64)).max(1.0);
            assert!(max_diff(&nu, &au) < 1e-12 * scale);
            assert!(max_diff(&nb, &ab) < 1e-12 * scale);
        }
    }

    #[test]
    fn nonlinear_hand_examples() {
        let g = grid(32);
        let st = Stepper::new(&g, &power(), false).unwrap();
        let u = g.sample_vector(|_, y| (y.cos(), 0.0));
        let b = g.sample_vector(|x, _| (0.0, x.cos()));
        let (nu, nb) = st.rhs_nonlinear(&u, &b);
        let want = g.sample_vector(|x, y| (-x.cos() * y.sin(), x.sin() * y.cos()));
        assert!(max_diff(&nu, &VectorField::zeros(32)) < 1e-15);
        assert!(max_diff(&nb, &want) < 1e-15);

        let b = g.sample_vector(|x, y| (y.cos(), x.sin()));
        let (nu, nb) = st.rhs_nonlinear(&u, &b);
        let want = g.sample_vector(|x, y| (-x.sin() * y.sin(), -x.cos() * y.cos()));
        assert!(max_diff(&nu, &VectorField::zeros(32)) < 1e-15);
        assert!(max_diff(&nb, &want) < 1e-15);

        // u = b: the induction term vanishes.
        let v = g.random_band_divfree(8, 1.0, 3);
        let (_, nb) = st.rhs_nonlinear(&v, &v);
        assert!(max_diff(&nb, &VectorField::zeros(32)) < 1e-14);
        // b = 0: Euler nonlinearity.
        let (nu, nb) = st.rhs_nonlinear(&v, &VectorField::zeros(32));
        assert!(nb.is_zero());
        let euler = g.leray_project(&advect(&g, &v, &v).scaled(-1.0));
        assert!(max_diff(&nu, &euler) < 1e-13);
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let g = grid(32);
        let mut cfg = SolverConfig::new(g.clone(), power(), 0.5);
        cfg.dt = TimeStep::Fixed(0.1);
        let s0 = SolverState::new(&g, VectorField::zeros(32), VectorField::zeros(32)).unwrap();
        let out = run(&cfg, s0.clone()).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        assert!(out.state.u.is_zero() && out.state.b.is_zero());
        assert_eq!(energy_identity_residual(&out.ledger).unwrap(), 0.0);
        cfg.dt = TimeStep::Auto;
        assert!(run(&cfg, s0).unwrap().state.b.is_zero());
    }

    #[test]
    fn t_end_zero_gives_single_row() {
        let g = grid(32);
        let (u, b) = preset(&g, "orszag-tang", 0).unwrap();
        let cfg = SolverConfig::new(g.clone(), power(), 0.0);
        let out = run(&cfg, SolverState::new(&g, u, b).unwrap()).unwrap();
        assert_eq!(out.ledger.rows.len(), 1);
        assert_eq!(out.ledger.rows[0].t, 0.0);
    }

    #[test]
    fn linear_run_is_exact_semigroup() {
        let g = grid(32);
        let (u, b) = preset(&g, "random-band", 7).unwrap();
        let s0 = SolverState::new(&g, u, b).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), power(), 0.2);
        cfg.dt = TimeStep::Fixed(0.01);
        cfg.nonlinear_enabled = false;
        let out = run(&cfg, s0.clone()).unwrap();
        let st = Stepper::new(&g, &power(), false).unwrap();
        let t = out.state.t;
        let mut closed_diss = 0.0;
        for (idx, m) in st.multipliers().iter().enumerate() {
            let decay = (-t * m).exp();
            let (w1, w2) = (s0.b.0.coeffs()[idx] * decay, s0.b.1.coeffs()[idx] * decay);
            let err = (out.state.b.0.coeffs()[idx] - w1).norm().hypot((out.state.b.1.coeffs()[idx] - w2).norm());
            assert!(err <= 1e-13 * w1.norm().hypot(w2.norm()) + 1e-300);
            if *m > 0.0 {
                let b0_sq = s0.b.0.coeffs()[idx].norm_sqr() + s0.b.1.coeffs()[idx].norm_sqr();
                closed_diss += g.measure() * b0_sq * (1.0 - (-2.0 * t * m).exp()) / 2.0;
            }
        }
        assert!((out.state.diss_integral - closed_diss).abs() <= 1e-10 * closed_diss);
        assert!(energy_identity_residual(&out.ledger).unwrap() <= 1e-10);
        assert_eq!(out.state.u, s0.u);
    }

    #[test]
    fn kinetic_energy_conserved_without_magnetic_field() {
        let g = grid(32);
        let (u, _) = preset(&g, "random-band", 3).unwrap();
        let s0 = SolverState::new(&g, u, VectorField::zeros(32)).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), SymbolSpec::Constant { c: 5.0 }, 0.5);
        cfg.cfl = 0.2;
        let out = run(&cfg, s0.clone()).unwrap();
        let e0 = s0.energy(&g);
        assert!((out.state.energy(&g) - e0).abs() <= 1e-8 * e0);
    }

    #[test]
    fn runs_are_reproducible_and_divergence_free() {
        let g = grid(32);
        let (u, b) = preset(&g, "random-band", 11).unwrap();
        let s0 = SolverState::new(&g, u, b).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), power(), 0.3);
        cfg.diagnostics_stride = 3;
        let a = run(&cfg, s0.clone()).unwrap();
        let b = run(&cfg, s0).unwrap();
        assert_eq!(a.ledger.to_csv(), b.ledger.to_csv());
        for r in &a.ledger.rows {
            assert!(r.div_residual_u <= 1e-11 && r.div_residual_b <= 1e-11);
        }
        assert_eq!(a.ledger.rows.last().unwrap().t, 0.3);
    }

    #[test]
    fn temporal_self_convergence() {
        let g = grid(32);
        let (u, b) = preset(&g, "orszag-tang", 0).unwrap();
        let s0 = SolverState::new(&g, u, b).unwrap();
        let finals: Vec<SolverState> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| {
                let mut cfg = SolverConfig::new(g.clone(), power(), 0.2);
                cfg.dt = TimeStep::Fixed(dt);
                run(&cfg, s0.clone()).unwrap().state
            })
            .collect();
        let e1 = max_diff(&finals[0].u, &finals[1].u).max(max_diff(&finals[0].b, &finals[1].b));
        let e2 = max_diff(&finals[1].u, &finals[2].u).max(max_diff(&finals[1].b, &finals[2].b));
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "order {order}");
    }

    #[test]
    fn huge_step_is_reported_as_unstable() {
        let g = grid(32);
        let (u, b) = preset(&g, "orszag-tang", 0).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), SymbolSpec::Constant { c: 1e-3 }, 100.0);
        cfg.dt = TimeStep::Fixed(5.0);
        let out = run(&cfg, SolverState::new(&g, u, b).unwrap()).unwrap();
        assert!(matches!(out.status, RunStatus::Unstable { .. }));
        assert!(out.state.is_finite());
        assert!(!out.ledger.rows.is_empty());
    }

    #[test]
    fn snapshot_restart_round_trip() {
        let g = grid(16);
        let (u, b) = preset(&g, "taylor-green", 0).unwrap();
        let s0 = SolverState::new(&g, u, b).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        write_state_snapshot(&g, &s0, &path).unwrap();
        let back = state_from_snapshot(&g, &path).unwrap();
        assert_eq!(back.u, s0.u);
        assert_eq!(back.b, s0.b);
        assert!(state_from_snapshot(&grid(32), &path).is_err());
        assert!(preset(&g, "nope", 0).is_err());
    }
}
