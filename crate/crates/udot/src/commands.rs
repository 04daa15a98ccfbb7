//! The four commands behind the `udot` binary.
//!
//! Exit codes: 0 success, 2 configuration problem (bad flags, unreadable or
//! missing files), 3 computation failure (the march aborted, the simplex ran
//! out of budget), 4 verification thresholds violated. An aborted solve
//! still writes the prefix it computed plus a report naming the failure, so
//! post-mortems have data to look at.
//!
//! All artifacts are deterministic functions of the resolved config: reruns
//! with the same config and seed produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};
use udot_core::geometry::LevelSetMesh;
use udot_core::operators::{ellipticity_constant, indifference_sets};
use udot_core::oracle::{discretize, duality_gap, solve_lp};
use udot_core::solver::{
    assemble_conjugate, jacobian_check, solve_ode, solve_with_initial, verify_nonlocal,
    verify_pushforward, PotentialSolution, SolverConfig, SolverError, TransportProblem,
};
use udot_core::surplus::{
    check_convexity, check_derivatives, check_enhanced_twist, check_nondegeneracy, MarginReport,
    SurplusError,
};
use udot_core::vec2::Vec2;

use crate::config::{BcMode, RunConfig};
use crate::output::{fmt_f, num, parse_cell, read_report, warn, write_csv, write_report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_COMPUTE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// Sample budget for the surplus margin scans.
const MARGIN_SCAN: usize = 2000;

/// Report warnings are capped so a pathological run cannot bloat the file.
const WARNING_CAP: usize = 64;

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

pub fn cmd_solve(cfg: &RunConfig) -> u8 {
    if let Err(code) = prepare_out_dir(cfg) {
        return code;
    }
    let preset = cfg.build_preset();
    let problem = match preset.problem() {
        Ok(p) => p,
        Err(e) => return write_failure_report(cfg, "solve", &format!("{e}")),
    };
    let sconf = SolverConfig { steps: cfg.ode_steps, cells: cfg.cells };
    let outcome = match cfg.bc_mode {
        BcMode::Initial => solve_with_initial(&problem, &sconf, cfg.initial_slope),
        BcMode::Nested | BcMode::PeriodicShooting => solve_ode(&problem, &sconf),
    };
    match outcome {
        Ok(solution) => {
            let max_res = solution.residual.iter().cloned().fold(0.0, f64::max);
            if let Err(e) = write_solve_outputs(cfg, &problem, &solution, None) {
                warn(&format!("cannot write outputs: {e}"));
                return EXIT_COMPUTE;
            }
            println!(
                "solve ok: {} nodes, max residual {:.3e}, outputs in {}",
                solution.y_grid.len(),
                max_res,
                cfg.out_dir.display()
            );
            EXIT_OK
        }
        Err(SolverError::Aborted { at_y, source, partial }) => {
            let reason = format!("{source}");
            if let Err(e) = write_solve_outputs(cfg, &problem, &partial, Some((at_y, &reason))) {
                warn(&format!("cannot write partial outputs: {e}"));
            }
            warn(&format!(
                "solve aborted at y = {at_y:.6}: {reason}; partial outputs in {}",
                cfg.out_dir.display()
            ));
            EXIT_COMPUTE
        }
        Err(e) => write_failure_report(cfg, "solve", &format!("{e}")),
    }
}

/// Emit solution.csv, levelsets.csv and report.json for a (possibly partial)
/// marched potential.
///
/// When the config convexifies the surplus, the march runs in the
/// transformed frame but the CSV and the per-node `k`/`v`/`q` entries are
/// mapped back: the transform adds `c·y` to the slope, `c·y²/2` to the
/// potential, and `c` to the curvature, while the indifference curves, the
/// operator value, and the residual are identical in both frames.
fn write_solve_outputs(
    cfg: &RunConfig,
    problem: &TransportProblem,
    solution: &PotentialSolution,
    abort: Option<(f64, &str)>,
) -> io::Result<()> {
    let c = cfg.convexify_coefficient;
    let y0 = problem.y_lo;
    let n = solution.y_grid.len();
    let original_k = |i: usize| solution.k[i] - c * solution.y_grid[i];
    let original_v =
        |i: usize| solution.v[i] - 0.5 * c * (solution.y_grid[i] * solution.y_grid[i] - y0 * y0);
    let original_q = |i: usize| solution.q_used[i] - c;

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(format!(
            "{},{},{},{},{}",
            fmt_f(solution.y_grid[i]),
            fmt_f(original_k(i)),
            fmt_f(original_v(i)),
            fmt_f(original_q(i)),
            fmt_f(solution.residual[i]),
        ));
    }
    write_csv(&cfg.out_dir.join("solution.csv"), "y,k,v,q_used,residual", &rows)?;

    // Trace every node once for component counts and ellipticity, and dump
    // the polylines of the sampled subset into levelsets.csv.
    let env = problem.env(cfg.cells);
    let sampled = spread_indices(n, cfg.levelset_count);
    let mut level_rows: Vec<String> = Vec::new();
    let mut per_node: Vec<Value> = Vec::with_capacity(n);
    let mut warnings: Vec<Value> = Vec::new();
    let mut lambda_min = f64::INFINITY;
    let mut theta_max = f64::NEG_INFINITY;
    for i in 0..n {
        let y = solution.y_grid[i];
        let (p, q) = (solution.k[i], solution.q_used[i]);
        let mut row = Map::new();
        row.insert("y".into(), num(y));
        row.insert("k".into(), num(original_k(i)));
        row.insert("v".into(), num(original_v(i)));
        row.insert("q".into(), num(original_q(i)));
        row.insert("residual".into(), num(solution.residual[i]));
        match indifference_sets(&env, y, p, q) {
            Ok((x1, x2)) => {
                row.insert("x1_components".into(), json!(x1.components));
                row.insert("x2_components".into(), json!(x2.components));
                for w in x1.tangency_warnings.iter().chain(x2.tangency_warnings.iter()) {
                    push_warning(
                        &mut warnings,
                        json!({
                            "kind": "tangency",
                            "y": num(y),
                            "x": [num(w.x), num(w.y)],
                            "message": "level curve nearly tangent to the region boundary",
                        }),
                    );
                }
                if sampled.contains(&i) {
                    append_mesh_rows(&mut level_rows, y, "x1", &x1);
                    append_mesh_rows(&mut level_rows, y, "x2", &x2);
                }
            }
            Err(e) => {
                row.insert("trace_error".into(), json!(format!("{e}")));
                push_warning(
                    &mut warnings,
                    json!({"kind": "trace", "y": num(y), "message": format!("{e}")}),
                );
            }
        }
        match ellipticity_constant(&env, y, p, q) {
            Ok(ell) => {
                row.insert("lambda".into(), num(ell.lambda));
                row.insert("theta".into(), num(ell.theta));
                row.insert("g2".into(), num(ell.g2));
                lambda_min = lambda_min.min(ell.lambda);
                theta_max = theta_max.max(ell.theta);
            }
            Err(e) => {
                push_warning(
                    &mut warnings,
                    json!({"kind": "ellipticity", "y": num(y), "message": format!("{e}")}),
                );
            }
        }
        per_node.push(Value::Object(row));
    }
    write_csv(
        &cfg.out_dir.join("levelsets.csv"),
        "y,set,component,x_start,y_start,x_end,y_end",
        &level_rows,
    )?;

    let margins = margins_block(problem, cfg.seed, &mut warnings);
    let max_residual = solution.residual.iter().cloned().fold(0.0, f64::max);

    let mut solve = Map::new();
    solve.insert("status".into(), json!(if abort.is_some() { "aborted" } else { "ok" }));
    if let Some((at_y, reason)) = abort {
        solve.insert("aborted_at".into(), num(at_y));
        solve.insert("abort_reason".into(), json!(reason));
    }
    solve.insert("nodes".into(), json!(n));
    solve.insert("periodic".into(), json!(solution.periodic));
    solve.insert("max_residual".into(), num(max_residual));
    if let Some(&balance) = solution.diagnostics.get("balance_integral") {
        solve.insert("balance_integral".into(), num(balance));
        solve.insert("mass_residual".into(), num((balance - 1.0).abs()));
    }
    solve.insert(
        "ellipticity".into(),
        json!({"lambda_min": num(lambda_min), "theta_max": num(theta_max)}),
    );
    solve.insert("margins".into(), margins);
    let diagnostics: Map<String, Value> =
        solution.diagnostics.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
    solve.insert("diagnostics".into(), Value::Object(diagnostics));
    solve.insert("per_node".into(), Value::Array(per_node));
    solve.insert("warnings".into(), Value::Array(warnings));

    let mut report = base_report(cfg, "solve");
    if c != 0.0 {
        report.insert(
            "frame".into(),
            json!({
                "convexify_coefficient": c,
                "note": "solved with the y-convexified surplus; k, v and q are mapped back to the original frame",
            }),
        );
    }
    report.insert("solve".into(), Value::Object(solve));
    write_report(&cfg.out_dir.join("report.json"), &Value::Object(report))
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

pub fn cmd_diagnose(cfg: &RunConfig) -> u8 {
    if let Err(code) = prepare_out_dir(cfg) {
        return code;
    }
    let preset = cfg.build_preset();
    let problem = match preset.problem() {
        Ok(p) => p,
        Err(e) => return write_failure_report(cfg, "diagnose", &format!("{e}")),
    };
    let env = problem.env(cfg.cells);
    let mut warnings: Vec<Value> = Vec::new();
    let margins = margins_block(&problem, cfg.seed, &mut warnings);

    // Component counts of the level curve and its active restriction over a
    // midpoint lattice in (y, slope, curvature), the slope and curvature
    // ranges being measured from the model itself.
    let span = problem.y_hi - problem.y_lo;
    let mut lattice: Vec<Value> = Vec::new();
    let mut x1_max = 0usize;
    let mut x2_max = 0usize;
    for iy in 0..cfg.diag_y {
        let y = problem.y_lo + (iy as f64 + 0.5) * span / cfg.diag_y as f64;
        let (plo, phi) = field_range(&problem, &|x| problem.model.d_y(x, y));
        let (qlo, qhi) = field_range(&problem, &|x| problem.model.d_yy(x, y));
        for p in lattice_points(plo, phi, cfg.diag_p) {
            for q in lattice_points(qlo, qhi, cfg.diag_q) {
                match indifference_sets(&env, y, p, q) {
                    Ok((x1, x2)) => {
                        x1_max = x1_max.max(x1.components);
                        x2_max = x2_max.max(x2.components);
                        for w in x1.tangency_warnings.iter().chain(x2.tangency_warnings.iter()) {
                            push_warning(
                                &mut warnings,
                                json!({
                                    "kind": "tangency",
                                    "y": num(y), "p": num(p), "q": num(q),
                                    "x": [num(w.x), num(w.y)],
                                    "message": "level curve nearly tangent to the region boundary",
                                }),
                            );
                        }
                        lattice.push(json!({
                            "y": num(y), "p": num(p), "q": num(q),
                            "x1": x1.components, "x2": x2.components,
                            "x1_length": num(x1.total_length),
                            "x2_length": num(x2.total_length),
                        }));
                    }
                    Err(e) => {
                        lattice.push(json!({
                            "y": num(y), "p": num(p), "q": num(q),
                            "error": format!("{e}"),
                        }));
                    }
                }
            }
        }
    }

    let mut block = Map::new();
    block.insert("margins".into(), margins);
    block.insert(
        "lattice_shape".into(),
        json!({"y": cfg.diag_y, "p": cfg.diag_p, "q": cfg.diag_q}),
    );
    block.insert("component_max".into(), json!({"x1": x1_max, "x2": x2_max}));
    block.insert("lattice".into(), Value::Array(lattice));
    block.insert("warnings".into(), Value::Array(warnings.clone()));

    let mut report = base_report(cfg, "diagnose");
    report.insert("diagnose".into(), Value::Object(block));
    if let Err(e) = write_report(&cfg.out_dir.join("report.json"), &Value::Object(report)) {
        warn(&format!("cannot write report: {e}"));
        return EXIT_COMPUTE;
    }
    println!(
        "diagnose ok: {} warnings, component counts up to {x1_max}/{x2_max}, report in {}",
        warnings.len(),
        cfg.out_dir.display()
    );
    EXIT_OK
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn cmd_verify(cfg: &RunConfig) -> u8 {
    let sol_path = cfg.out_dir.join("solution.csv");
    let rep_path = cfg.out_dir.join("report.json");
    if !sol_path.is_file() || !rep_path.is_file() {
        warn(&format!(
            "verify needs {} and {} from a previous solve",
            sol_path.display(),
            rep_path.display()
        ));
        return EXIT_CONFIG;
    }
    // The CSV is written in the original frame, so verification always runs
    // against the untransformed preset regardless of convexify_coefficient.
    let preset = cfg.build_plain_preset();
    let problem = match preset.problem() {
        Ok(p) => p,
        Err(e) => {
            warn(&format!("preset validation failed: {e}"));
            return EXIT_COMPUTE;
        }
    };
    let solution = match read_solution(&sol_path, problem.periodic) {
        Ok(s) => s,
        Err(msg) => {
            warn(&msg);
            return EXIT_CONFIG;
        }
    };

    let push = match verify_pushforward(&problem, &solution, cfg.samples, cfg.bins, cfg.seed) {
        Ok(r) => r,
        Err(e) => {
            warn(&format!("pushforward sampling failed: {e}"));
            return EXIT_COMPUTE;
        }
    };
    let deficit =
        verify_nonlocal(&problem, &solution, cfg.nonlocal_samples, cfg.seed.wrapping_add(1));
    let jacobian =
        match jacobian_check(&problem, &solution, cfg.jacobian_samples, cfg.seed.wrapping_add(2)) {
            Ok(r) => r,
            Err(e) => {
                warn(&format!("jacobian check failed: {e}"));
                return EXIT_COMPUTE;
            }
        };
    let (oracle_block, gap) = match oracle_gap(cfg, &problem, &solution) {
        Ok(pair) => pair,
        Err(msg) => {
            warn(&msg);
            return EXIT_COMPUTE;
        }
    };

    let th = &cfg.thresholds;
    let mut violations: Vec<String> = Vec::new();
    if push.tv > th.pushforward_tv {
        violations.push(format!("pushforward_tv: {:.6e} > {:.6e}", push.tv, th.pushforward_tv));
    }
    if deficit > th.nonlocal_deficit {
        violations.push(format!("nonlocal_deficit: {:.6e} > {:.6e}", deficit, th.nonlocal_deficit));
    }
    if jacobian.max_rel_error > th.jacobian_rel {
        violations.push(format!(
            "jacobian_rel: {:.6e} > {:.6e}",
            jacobian.max_rel_error, th.jacobian_rel
        ));
    }
    if gap > th.duality_gap {
        violations.push(format!("duality_gap: {:.6e} > {:.6e}", gap, th.duality_gap));
    }
    if gap < -1e-9 {
        violations.push(format!("duality_gap: {gap:.6e} is negative, reference duals are broken"));
    }

    let block = json!({
        "pushforward": {
            "tv": num(push.tv),
            "samples": push.samples,
            "bins": push.bins,
            "acceptance": num(push.acceptance),
        },
        "nonlocal_deficit": num(deficit),
        "jacobian": {
            "max_rel_error": num(jacobian.max_rel_error),
            "checked": jacobian.checked,
            "skipped": jacobian.skipped,
        },
        "oracle": oracle_block,
        "thresholds": {
            "pushforward_tv": num(th.pushforward_tv),
            "nonlocal_deficit": num(th.nonlocal_deficit),
            "jacobian_rel": num(th.jacobian_rel),
            "duality_gap": num(th.duality_gap),
        },
        "violations": violations,
        "pass": violations.is_empty(),
    });

    let mut report = match read_report(&rep_path) {
        Ok(Value::Object(map)) => map,
        Ok(_) => {
            warn(&format!("{}: not a JSON object", rep_path.display()));
            return EXIT_CONFIG;
        }
        Err(e) => {
            warn(&format!("cannot read {}: {e}", rep_path.display()));
            return EXIT_CONFIG;
        }
    };
    report.insert("verification".into(), block);
    if let Err(e) = write_report(&rep_path, &Value::Object(report)) {
        warn(&format!("cannot write report: {e}"));
        return EXIT_COMPUTE;
    }

    if violations.is_empty() {
        println!(
            "verify ok: tv {:.3e}, nonlocal deficit {:.3e}, jacobian {:.3e}, duality gap {:.3e}",
            push.tv, deficit, jacobian.max_rel_error, gap
        );
        EXIT_OK
    } else {
        for v in &violations {
            warn(&format!("threshold violated: {v}"));
        }
        EXIT_VERIFY
    }
}

/// Score the marched potential against the exact discrete optimum: the plan
/// value certifies from below, the marched dual pair from above.
fn oracle_gap(
    cfg: &RunConfig,
    problem: &TransportProblem,
    solution: &PotentialSolution,
) -> Result<(Value, f64), String> {
    let discrete = discretize(problem, cfg.oracle_nx, cfg.oracle_ny)
        .map_err(|e| format!("discretization failed: {e}"))?;
    let lp = solve_lp(&discrete).map_err(|e| format!("reference simplex failed: {e}"))?;
    let u: Vec<f64> = discrete
        .xs
        .iter()
        .map(|&x| assemble_conjugate(problem, solution, x).0)
        .collect();
    let v: Vec<f64> = discrete.ys.iter().map(|&y| solution.v_at(y)).collect();
    let gap = duality_gap(&discrete, &lp, &u, &v);
    let block = json!({
        "nx": cfg.oracle_nx,
        "ny": cfg.oracle_ny,
        "atoms_source": discrete.xs.len(),
        "atoms_target": discrete.ys.len(),
        "lp_value": num(lp.value),
        "pivots": lp.pivots,
        "marched_dual_value": num(lp.value + gap),
        "duality_gap": num(gap),
    });
    Ok((block, gap))
}

/// Rebuild a marched solution from solution.csv (original frame).
fn read_solution(path: &Path, periodic: bool) -> Result<PotentialSolution, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "y,k,v,q_used,residual" => {}
        _ => return Err(format!("{}: expected header `y,k,v,q_used,residual`", path.display())),
    }
    let mut y_grid = Vec::new();
    let mut k = Vec::new();
    let mut v = Vec::new();
    let mut q_used = Vec::new();
    let mut residual = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(format!("{}:{}: expected 5 columns", path.display(), idx + 1));
        }
        y_grid.push(parse_cell(cells[0], path, idx + 1)?);
        k.push(parse_cell(cells[1], path, idx + 1)?);
        v.push(parse_cell(cells[2], path, idx + 1)?);
        q_used.push(parse_cell(cells[3], path, idx + 1)?);
        residual.push(parse_cell(cells[4], path, idx + 1)?);
    }
    if y_grid.len() < 2 {
        return Err(format!("{}: need at least two data rows", path.display()));
    }
    Ok(PotentialSolution {
        y_grid,
        k,
        v,
        q_used,
        residual,
        periodic,
        diagnostics: BTreeMap::new(),
    })
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

pub fn cmd_oracle(cfg: &RunConfig) -> u8 {
    if let Err(code) = prepare_out_dir(cfg) {
        return code;
    }
    let preset = cfg.build_plain_preset();
    let problem = match preset.problem() {
        Ok(p) => p,
        Err(e) => return write_failure_report(cfg, "oracle", &format!("{e}")),
    };
    let discrete = match discretize(&problem, cfg.oracle_nx, cfg.oracle_ny) {
        Ok(d) => d,
        Err(e) => return write_failure_report(cfg, "oracle", &format!("discretization failed: {e}")),
    };
    let lp = match solve_lp(&discrete) {
        Ok(s) => s,
        Err(e) => return write_failure_report(cfg, "oracle", &format!("simplex failed: {e}")),
    };

    let mut rows = Vec::with_capacity(lp.plan.len());
    for &(i, j, mass) in &lp.plan {
        rows.push(format!(
            "{i},{j},{},{},{},{},{}",
            fmt_f(discrete.xs[i].x),
            fmt_f(discrete.xs[i].y),
            fmt_f(discrete.ys[j]),
            fmt_f(mass),
            fmt_f(discrete.s(i, j)),
        ));
    }
    if let Err(e) = write_csv(
        &cfg.out_dir.join("coupling.csv"),
        "i,j,x1,x2,y,mass,surplus",
        &rows,
    ) {
        warn(&format!("cannot write coupling.csv: {e}"));
        return EXIT_COMPUTE;
    }

    // Optimality certificate: marginals exhausted, duals feasible, support
    // arcs tight, primal and dual objectives equal.
    let (n, m) = (discrete.xs.len(), discrete.ys.len());
    let mut row_sum = vec![0.0f64; n];
    let mut col_sum = vec![0.0f64; m];
    let mut slack_on_support = 0.0f64;
    for &(i, j, mass) in &lp.plan {
        row_sum[i] += mass;
        col_sum[j] += mass;
        slack_on_support = slack_on_support.max((discrete.s(i, j) - lp.u[i] - lp.v[j]).abs());
    }
    let row_residual = row_sum
        .iter()
        .zip(&discrete.a)
        .map(|(s, a)| (s - a).abs())
        .fold(0.0f64, f64::max);
    let col_residual = col_sum
        .iter()
        .zip(&discrete.b)
        .map(|(s, b)| (s - b).abs())
        .fold(0.0f64, f64::max);
    let mut infeasibility = 0.0f64;
    for i in 0..n {
        for j in 0..m {
            infeasibility = infeasibility.max(discrete.s(i, j) - lp.u[i] - lp.v[j]);
        }
    }
    let dual_value: f64 = discrete.a.iter().zip(&lp.u).map(|(a, u)| a * u).sum::<f64>()
        + discrete.b.iter().zip(&lp.v).map(|(b, v)| b * v).sum::<f64>();
    let strong_duality = (dual_value - lp.value).abs();
    let own_gap = duality_gap(&discrete, &lp, &lp.u, &lp.v);

    let mut block = Map::new();
    block.insert("nx".into(), json!(cfg.oracle_nx));
    block.insert("ny".into(), json!(cfg.oracle_ny));
    block.insert("atoms_source".into(), json!(n));
    block.insert("atoms_target".into(), json!(m));
    block.insert("plan_arcs".into(), json!(lp.plan.len()));
    block.insert("value".into(), num(lp.value));
    block.insert("pivots".into(), json!(lp.pivots));
    block.insert("max_row_residual".into(), num(row_residual));
    block.insert("max_col_residual".into(), num(col_residual));
    block.insert("max_dual_infeasibility".into(), num(infeasibility.max(0.0)));
    block.insert("max_support_slackness".into(), num(slack_on_support));
    block.insert("strong_duality_residual".into(), num(strong_duality));
    block.insert("duality_gap".into(), num(own_gap));

    let mut report = base_report(cfg, "oracle");
    report.insert("oracle".into(), Value::Object(block));
    if let Err(e) = write_report(&cfg.out_dir.join("report.json"), &Value::Object(report)) {
        warn(&format!("cannot write report: {e}"));
        return EXIT_COMPUTE;
    }
    println!(
        "oracle ok: {n}x{m} atoms, value {:.6}, {} pivots, strong duality residual {:.3e}",
        lp.value, lp.pivots, strong_duality
    );
    EXIT_OK
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn prepare_out_dir(cfg: &RunConfig) -> Result<(), u8> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        warn(&format!("cannot create output directory {}: {e}", cfg.out_dir.display()));
        EXIT_CONFIG
    })
}

fn base_report(cfg: &RunConfig, command: &str) -> Map<String, Value> {
    let mut report = Map::new();
    report.insert("command".into(), json!(command));
    report.insert(
        "config".into(),
        json!({
            "preset": cfg.preset,
            "cells": cfg.cells,
            "ode_steps": cfg.ode_steps,
            "oracle_nx": cfg.oracle_nx,
            "oracle_ny": cfg.oracle_ny,
            "samples": cfg.samples,
            "bins": cfg.bins,
            "jacobian_samples": cfg.jacobian_samples,
            "nonlocal_samples": cfg.nonlocal_samples,
            "levelset_count": cfg.levelset_count,
            "diag_y": cfg.diag_y,
            "diag_p": cfg.diag_p,
            "diag_q": cfg.diag_q,
            "bc_mode": cfg.bc_mode.to_string(),
            "initial_slope": cfg.initial_slope,
            "convexify_coefficient": cfg.convexify_coefficient,
            "seed": cfg.seed,
            "out_dir": cfg.out_dir.display().to_string(),
        }),
    );
    report
}

fn write_failure_report(cfg: &RunConfig, command: &str, message: &str) -> u8 {
    let mut report = base_report(cfg, command);
    report.insert(command.into(), json!({"status": "failed", "error": message}));
    if let Err(e) = write_report(&cfg.out_dir.join("report.json"), &Value::Object(report)) {
        warn(&format!("cannot write report: {e}"));
    }
    warn(&format!("{command} failed: {message}"));
    EXIT_COMPUTE
}

/// Surplus health scans shared by `solve` and `diagnose`. A nonpositive
/// margin is reported as a warning, not an error: the march can still
/// proceed, it just loses the corresponding guarantee (slope monotonicity
/// for the twist scan, map injectivity for the pairwise scan). Periodic
/// targets always warn on the twist scan — the slope cannot be globally
/// monotone around a circle.
fn margins_block(problem: &TransportProblem, seed: u64, warnings: &mut Vec<Value>) -> Value {
    let nondegeneracy = checked_margin(
        "nondegeneracy",
        check_nondegeneracy(
            problem.model,
            problem.region,
            problem.y_lo,
            problem.y_hi,
            MARGIN_SCAN,
            seed,
        ),
        warnings,
    );
    let twist = checked_margin(
        "twist",
        check_convexity(
            problem.model,
            problem.region,
            problem.y_lo,
            problem.y_hi,
            MARGIN_SCAN,
            seed,
        ),
        warnings,
    );
    let enhanced_twist = checked_margin(
        "enhanced_twist",
        check_enhanced_twist(
            problem.model,
            problem.region,
            problem.y_lo,
            problem.y_hi,
            MARGIN_SCAN,
            seed,
        ),
        warnings,
    );
    let derivative_max_rel = check_derivatives(
        problem.model,
        problem.region,
        problem.y_lo,
        problem.y_hi,
        MARGIN_SCAN,
        seed,
    );
    json!({
        "nondegeneracy": nondegeneracy,
        "twist": twist,
        "enhanced_twist": enhanced_twist,
        "derivative_max_rel": num(derivative_max_rel),
    })
}

fn margin_json(r: &MarginReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("margin".into(), num(r.margin));
    m.insert("x".into(), json!([num(r.arg_x.x), num(r.arg_x.y)]));
    m.insert("y".into(), num(r.arg_y));
    if let Some(y_bar) = r.arg_y_bar {
        m.insert("y_bar".into(), num(y_bar));
    }
    m.insert("samples".into(), json!(r.samples));
    m
}

fn checked_margin(
    label: &str,
    result: Result<MarginReport, SurplusError>,
    warnings: &mut Vec<Value>,
) -> Value {
    match result {
        Ok(r) => Value::Object(margin_json(&r)),
        Err(SurplusError::ZeroMargin(r)) => {
            push_warning(
                warnings,
                json!({
                    "kind": label,
                    "message": "margin below the degeneracy floor",
                    "x": [num(r.arg_x.x), num(r.arg_x.y)],
                    "y": num(r.arg_y),
                }),
            );
            let mut m = margin_json(&r);
            m.insert("warning".into(), json!("below degeneracy floor"));
            Value::Object(m)
        }
        Err(e) => {
            push_warning(warnings, json!({"kind": label, "message": format!("{e}")}));
            json!({"error": format!("{e}")})
        }
    }
}

fn push_warning(warnings: &mut Vec<Value>, entry: Value) {
    if warnings.len() < WARNING_CAP {
        warnings.push(entry);
    } else if warnings.len() == WARNING_CAP {
        warnings.push(json!({
            "kind": "suppressed",
            "message": format!("further warnings suppressed after {WARNING_CAP}"),
        }));
    }
}

/// Up to `count` node indices spread evenly over `0..n`, endpoints included.
fn spread_indices(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n).max(1);
    let mut indices: Vec<usize> = (0..count)
        .map(|j| if count == 1 { 0 } else { j * (n - 1) / (count - 1) })
        .collect();
    indices.dedup();
    indices
}

fn append_mesh_rows(rows: &mut Vec<String>, y: f64, set: &str, mesh: &LevelSetMesh) {
    for seg in &mesh.segments {
        let a = mesh.nodes[seg.a];
        let b = mesh.nodes[seg.b];
        rows.push(format!(
            "{},{set},{},{},{},{},{}",
            fmt_f(y),
            seg.component,
            fmt_f(a.x),
            fmt_f(a.y),
            fmt_f(b.x),
            fmt_f(b.y),
        ));
    }
}

/// Range of a scalar field over the region, scanned on a bounding-box grid.
fn field_range(problem: &TransportProblem, field: &dyn Fn(Vec2) -> f64) -> (f64, f64) {
    const N: usize = 48;
    let bbox = problem.region.bbox();
    let ext = bbox.extent();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..N {
        for j in 0..N {
            let x = Vec2::new(
                bbox.lo.x + (i as f64 + 0.5) * ext.x / N as f64,
                bbox.lo.y + (j as f64 + 0.5) * ext.y / N as f64,
            );
            if !problem.region.contains(x) {
                continue;
            }
            let value = field(x);
            lo = lo.min(value);
            hi = hi.max(value);
        }
    }
    (lo, hi)
}

/// Midpoints of `count` equal cells over `[lo, hi]`; a degenerate range
/// collapses to the single value.
fn lattice_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi - lo < 1e-12 {
        return vec![lo];
    }
    (0..count)
        .map(|j| lo + (j as f64 + 0.5) * (hi - lo) / count as f64)
        .collect()
}
