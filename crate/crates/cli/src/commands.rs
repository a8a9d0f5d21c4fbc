use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gmhd_core::admissibility::{admissibility_report, GrowthValue, Verdict};
use gmhd_core::diagnostics::{apriori_monitor, energy_identity_residual};
use gmhd_core::kernel::{
    kernel_hs_norm, kernel_linf_exact, lemma21_ratio_scan_with_tol, lemma23_bound_components,
    lemma24_time_integral_check,
};
use gmhd_core::solver::{
    preset, run, state_from_snapshot, write_state_snapshot, RunStatus, SolverConfig, SolverState, TimeStep, PRESETS,
};
use gmhd_core::spectral::Grid;
use gmhd_core::util::log_space;
use gmhd_core::verify::run_suite;
use serde_json::{json, Value};

use crate::config::{symbol_json, DtSetting, FileConfig};
use crate::report::{sha256_hex, to_json_line, to_json_pretty, Manifest};
use crate::{
    AdmissibilityArgs, CliError, KernelArgs, Lemma, SimulateArgs, VerifyArgs, EXIT_CHECK_FAILED, EXIT_DIVERGENT,
    EXIT_INCONCLUSIVE, EXIT_OK, EXIT_UNSTABLE,
};

const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-8;

fn csv_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the stdout payload to `<out>/<name>` plus a manifest when an
/// output directory was requested.
fn emit_optional(
    out: Option<&Path>,
    manifest: Manifest,
    files: &[(&str, &str)],
) -> Result<(), CliError> {
    let Some(dir) = out else {
        return Ok(());
    };
    let mut manifest = manifest;
    for (name, body) in files {
        manifest.emit(&dir.join(name), body.as_bytes())?;
    }
    manifest.finish(dir)?;
    Ok(())
}

pub fn admissibility(args: &AdmissibilityArgs) -> Result<u8, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = args.symbol.resolve(&file)?;
    let horizons = if args.horizons.is_empty() {
        file.admissibility.horizons.clone().unwrap_or_default()
    } else {
        args.horizons.clone()
    };
    if horizons.is_empty() {
        return Err(CliError::usage("missing --T (or [admissibility] horizons in the config)"));
    }
    let tol = args.tol.or(file.admissibility.tol).unwrap_or(DEFAULT_ADMISSIBILITY_TOL);
    let reports = admissibility_report(&spec, &horizons, tol)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("T,A_T,C_T,verdict,err_estimate\n");
    for r in &reports {
        let c = match r.c_t {
            GrowthValue::Finite(v) => csv_value(v),
            GrowthValue::Divergent => "inf".into(),
        };
        writeln!(
            csv,
            "{},{},{c},{},{}",
            csv_value(r.horizon),
            csv_value(r.a_t),
            r.verdict,
            csv_value(r.quadrature_error_estimate)
        )
        .unwrap();
    }
    print!("{csv}");
    for r in reports.iter().filter(|r| r.note.is_some()) {
        eprintln!("note (T = {}): {}", r.horizon, r.note.as_deref().unwrap_or_default());
    }

    let config = json!({"symbol": symbol_json(&spec), "horizons": horizons, "tol": tol});
    emit_optional(
        args.out.as_deref(),
        Manifest::new("admissibility", config, None),
        &[("admissibility.csv", &csv)],
    )?;

    Ok(if reports.iter().any(|r| r.verdict == Verdict::Divergent) {
        EXIT_DIVERGENT
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}

pub fn kernel(args: &KernelArgs) -> Result<u8, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = args.symbol.resolve(&file)?;
    let t_grid = || -> Result<Vec<f64>, CliError> {
        if !(args.t_min > 0.0 && args.t_max > args.t_min && args.t_points >= 2) {
            return Err(CliError::usage(format!(
                "need 0 < --t-min < --t-max and --t-points >= 2, got [{}, {}] with {} points",
                args.t_min, args.t_max, args.t_points
            )));
        }
        Ok(log_space(args.t_min, args.t_max, args.t_points))
    };
    let mut config = json!({
        "lemma": format!("{:?}", args.lemma),
        "symbol": symbol_json(&spec),
    });
    let (csv, summary, passed) = match args.lemma {
        Lemma::MomentRatio => {
            let rep = lemma21_ratio_scan_with_tol(&spec, args.s, args.k, &t_grid()?, args.tol)?;
            let mut csv = String::from("t,I,ratio\n");
            for e in &rep.entries {
                writeln!(csv, "{},{},{}", csv_value(e.t), csv_value(e.integral), csv_value(e.ratio)).unwrap();
            }
            let summary = json!({
                "spec": rep.spec_id,
                "s": rep.s,
                "k": rep.k,
                "ratio_spread": rep.ratio_spread,
                "pass": rep.passed,
            });
            (csv, summary, rep.passed)
        }
        Lemma::HsNorm | Lemma::Linf => {
            let grid = t_grid()?;
            let (header, values) = if args.lemma == Lemma::HsNorm {
                ("t,hs_norm", grid.iter().map(|&t| kernel_hs_norm(&spec, args.s, t)).collect::<Result<Vec<_>, _>>()?)
            } else {
                ("t,linf", grid.iter().map(|&t| kernel_linf_exact(&spec, t)).collect::<Result<Vec<_>, _>>()?)
            };
            let mut csv = format!("{header}\n");
            for (t, v) in grid.iter().zip(&values) {
                writeln!(csv, "{},{}", csv_value(*t), csv_value(*v)).unwrap();
            }
            (csv, json!({"spec": spec.to_string(), "s": args.s, "points": grid.len()}), true)
        }
        Lemma::Hessian => {
            let grid = t_grid()?;
            let mut csv = String::from("t,l2_part,hess_part,product_ratio\n");
            let mut worst: f64 = 0.0;
            for &t in &grid {
                let c = lemma23_bound_components(&spec, t)?;
                worst = worst.max(c.product_ratio);
                writeln!(
                    csv,
                    "{},{},{},{}",
                    csv_value(c.t),
                    csv_value(c.l2_part),
                    csv_value(c.hess_part),
                    csv_value(c.product_ratio)
                )
                .unwrap();
            }
            (csv, json!({"spec": spec.to_string(), "max_product_ratio": worst}), true)
        }
        Lemma::TimeIntegral => {
            let c = lemma24_time_integral_check(&spec, args.horizon, args.tol)?;
            let gap = c.relative_gap();
            let pass = gap <= args.gap_tol;
            let mut text = format!("lhs={}\nrhs={}\ngap={}\n", csv_value(c.lhs), csv_value(c.rhs), csv_value(gap));
            text.push_str(if pass { "pass\n" } else { "fail\n" });
            print!("{text}");
            config["T"] = json!(args.horizon);
            config["tol"] = json!(args.tol);
            config["gap_tol"] = json!(args.gap_tol);
            let summary = json!({
                "spec": spec.to_string(),
                "T": c.horizon,
                "lhs": c.lhs,
                "rhs": c.rhs,
                "lhs_error": c.lhs_error,
                "rhs_error": c.rhs_error,
                "g_inf_inv": c.g_inf_inv,
                "gap": gap,
                "pass": pass,
                "note": c.note,
            });
            emit_optional(
                args.out.as_deref(),
                Manifest::new("kernel", config, None),
                &[("kernel_summary.json", &to_json_pretty(&summary))],
            )?;
            return Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED });
        }
    };
    print!("{csv}");
    println!("{}", to_json_line(&summary));
    config["s"] = json!(args.s);
    config["k"] = json!(args.k);
    config["t_grid"] = json!({"t_min": args.t_min, "t_max": args.t_max, "points": args.t_points});
    config["tol"] = json!(args.tol);
    emit_optional(
        args.out.as_deref(),
        Manifest::new("kernel", config, None),
        &[("kernel.csv", &csv), ("kernel_summary.json", &to_json_pretty(&summary))],
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

struct SimulationSetup {
    config: SolverConfig,
    initial: SolverState,
    resolved: Value,
    seed: Option<u64>,
}

fn simulation_setup(args: &SimulateArgs) -> Result<SimulationSetup, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = args.symbol.resolve(&file).or_else(|e| {
        if args.symbol.family.is_none() && file.symbol.family.is_none() {
            Ok(gmhd_core::SymbolSpec::Power { mu1: 1.0 })
        } else {
            Err(e)
        }
    })?;
    let n = file.grid.n.unwrap_or(64);
    let box_length = file.grid.box_length.unwrap_or(2.0 * std::f64::consts::PI);
    let grid = Grid::new(n, box_length)?;
    let t_end = args.t_end.or(file.time.t_end).unwrap_or(1.0);
    let mut cfg = SolverConfig::new(grid.clone(), spec.clone(), t_end);
    cfg.dt = match (args.dt, &file.time.dt) {
        (Some(dt), _) | (None, &Some(DtSetting::Fixed(dt))) => TimeStep::Fixed(dt),
        (None, Some(DtSetting::Named(s))) if s == "auto" => TimeStep::Auto,
        (None, Some(DtSetting::Named(s))) => {
            return Err(CliError::usage(format!("[time] dt must be a number or \"auto\", got \"{s}\"")))
        }
        (None, None) => TimeStep::Auto,
    };
    if let Some(c) = file.time.cfl {
        cfg.cfl = c;
    }
    if let Some(m) = file.time.max_steps {
        cfg.max_steps = m;
    }
    if let Some(s) = file.diagnostics.stride {
        cfg.diagnostics_stride = s;
    }
    if let Some(h) = file.diagnostics.hs_index {
        cfg.hs_index = h;
    }
    if let Some(f) = file.diagnostics.filter {
        cfg.filter_enabled = f;
    }
    if let Some(nl) = file.diagnostics.nonlinear {
        cfg.nonlinear_enabled = nl;
    }
    cfg.validate()?;

    let (initial, initial_json, seed) = match &args.snapshot_in {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
            let state = state_from_snapshot(&grid, path)?;
            (state, json!({"snapshot": path.display().to_string(), "sha256": sha256_hex(&bytes)}), None)
        }
        None => {
            let name = args.preset.clone().or(file.initial.preset.clone()).unwrap_or_else(|| "orszag-tang".into());
            if !PRESETS.contains(&name.as_str()) {
                return Err(CliError::usage(format!("unknown preset '{name}' (expected one of {})", PRESETS.join(", "))));
            }
            let seed = args.seed.or(file.initial.seed).unwrap_or(0);
            let (u, b) = preset(&grid, &name, seed)?;
            (SolverState::new(&grid, u, b)?, json!({"preset": name, "seed": seed}), Some(seed))
        }
    };
    let dt_json = match cfg.dt {
        TimeStep::Fixed(dt) => json!(dt),
        TimeStep::Auto => json!("auto"),
    };
    let resolved = json!({
        "grid": {"n": n, "box_length": box_length},
        "symbol": symbol_json(&spec),
        "time": {"t_end": t_end, "dt": dt_json, "cfl": cfg.cfl, "max_steps": cfg.max_steps},
        "diagnostics": {
            "stride": cfg.diagnostics_stride,
            "hs_index": cfg.hs_index,
            "filter": cfg.filter_enabled,
            "nonlinear": cfg.nonlinear_enabled,
        },
        "initial": initial_json,
    });
    Ok(SimulationSetup { config: cfg, initial, resolved, seed })
}

pub fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let setup = simulation_setup(args)?;
    let cfg = &setup.config;
    let mut manifest = Manifest::new("simulate", setup.resolved.clone(), setup.seed);
    let outcome = run(cfg, setup.initial)?;

    let ledger_path: PathBuf = args.ledger.clone().unwrap_or_else(|| args.out.join("ledger.csv"));
    manifest.emit(&ledger_path, outcome.ledger.to_csv().as_bytes())?;
    if let Some(path) = &args.snapshot_out {
        write_state_snapshot(&cfg.grid, &outcome.state, path)?;
        manifest.record_file(path)?;
    }

    let report = if cfg.t_end > 0.0 {
        admissibility_report(&cfg.symbol, &[cfg.t_end], DEFAULT_ADMISSIBILITY_TOL)
            .ok()
            .and_then(|mut v| v.pop())
            .and_then(Result::ok)
    } else {
        None
    };
    let monitor = apriori_monitor(&outcome.ledger, report.as_ref());
    let residual = energy_identity_residual(&outcome.ledger).ok();
    let (status, code) = match &outcome.status {
        RunStatus::Completed => (json!({"state": "completed"}), EXIT_OK),
        RunStatus::Unstable { t, step, reason } => (
            json!({"state": "unstable", "t": t, "step": step, "reason": reason}),
            EXIT_UNSTABLE,
        ),
    };
    let mut monitored = serde_json::Map::new();
    for q in &monitor.quantities {
        monitored.insert(q.name.into(), json!({"value": q.value, "growth_flag": q.growth_flag}));
    }
    let summary = json!({
        "run_id": manifest.run_id(),
        "status": status,
        "t_final": outcome.state.t,
        "steps": outcome.state.step_count,
        "ledger_rows": outcome.ledger.rows.len(),
        "filtered": outcome.ledger.filtered,
        "energy_residual": residual,
        "admissibility_verdict": monitor.verdict,
        "monitored": monitored,
    });
    manifest.emit(&args.out.join("summary.json"), to_json_pretty(&summary).as_bytes())?;
    manifest.finish(&args.out)?;

    println!("status={}", status["state"].as_str().unwrap_or_default());
    if let RunStatus::Unstable { t, step, reason } = &outcome.status {
        eprintln!("run became unstable at step {step} (t = {t}): {reason}");
    }
    println!("t={}", csv_value(outcome.state.t));
    println!("steps={}", outcome.state.step_count);
    if let Some(r) = residual {
        println!("energy_residual={}", csv_value(r));
    }
    for q in &monitor.quantities {
        println!("{}={}{}", q.name, csv_value(q.value), if q.growth_flag { " (growth)" } else { "" });
    }
    Ok(code)
}

pub fn verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let results = run_suite(args.only.as_deref(), args.inject_failure)?;
    let name_width = results.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    println!("{:<14} {:<name_width$} {:<6} detail", "group", "check", "result");
    for c in &results {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{:<14} {:<name_width$} {:<6} {}", c.group, c.name, mark, c.detail);
    }
    let passed = results.iter().filter(|c| c.passed).count();
    println!("verify: {passed} of {} checks passed", results.len());
    Ok(if passed == results.len() { EXIT_OK } else { EXIT_CHECK_FAILED })
}
