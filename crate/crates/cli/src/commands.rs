use crate::config::{build_three_body, BogoliubovConfig, ExpandConfig, GpConfig, RunConfig, ScatterConfig};
use crate::output::{num, opt, Sink};
use crate::svg::{log_log, Series};
use crate::RunError;
use bec3_core::bogoliubov::{build_hessian_with, excitation_spectrum_with};
use bec3_core::dilute::{self, ExpansionQuery};
use bec3_core::gp::{droplet_search, minimize, stability_bound, GPOptions, GPProblem, GPSolution};
use bec3_core::potentials::make_metric_m;
use bec3_core::scattering::{b_modified, solve_radial_extrapolated, Profile, ScatteringSolution};
use rayon::prelude::*;
use serde_json::json;

pub fn scatter(cfg: &RunConfig, s: &ScatterConfig, sink: &mut Sink) -> Result<(), RunError> {
    let profile = s.potential.build(s.profile_dim(), &cfg.base)?;
    let (mut sol, integral) = match &s.three_body {
        Some(tb) => {
            let v = build_three_body(tb.kind, profile)?;
            let sol = b_modified(&v, &make_metric_m(), tb.method, &tb.options)?;
            (sol, v.integral())
        }
        None => {
            let r0 = profile.support_radius();
            let radii: Vec<f64> = s.truncation_radii.iter().map(|f| f * r0).collect();
            let integral = profile.integral();
            (solve_radial_extrapolated(s.dim, &profile, &radii, s.spacing * r0)?, Some(integral))
        }
    };
    let b = sol.best_b();
    let margin = integral.map(|i| i - b);

    let header = [
        "dim", "method", "b", "b_raw", "potential_integral", "bound_margin", "vf_integral", "residual", "iterations",
        "truncation_radius",
    ];
    let row = vec![
        sol.dim.to_string(),
        serde_json::to_value(sol.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        num(b),
        num(sol.b),
        opt(integral),
        opt(margin),
        num(sol.vf_integral),
        num(sol.residual),
        sol.iterations.to_string(),
        num(sol.truncation_radius),
    ];
    sink.csv("scatter.csv", &header, &[row])?;
    if let Some(ex) = &sol.extrapolation {
        let rows: Vec<Vec<String>> = ex.samples.iter().map(|(r, b)| vec![num(*r), num(*b)]).collect();
        sink.csv("truncation.csv", &["radius", "b"], &rows)?;
    }
    if let Profile::Radial { r, f } = &sol.profile {
        let rows: Vec<Vec<String>> = r.iter().zip(f).map(|(r, f)| vec![num(*r), num(*f)]).collect();
        sink.csv("profile.csv", &["r", "f"], &rows)?;
    }
    sol.profile = Profile::None;
    sink.json("scatter.json", &scatter_record(&sol, b, integral, margin))?;
    Ok(())
}

fn scatter_record(sol: &ScatteringSolution, b: f64, integral: Option<f64>, margin: Option<f64>) -> serde_json::Value {
    json!({
        "command": "scatter",
        "b": b,
        "potential_integral": integral,
        "bound_margin": margin,
        "solution": sol,
    })
}

fn solver_opts(solver: &GPOptions, seed: u64) -> GPOptions {
    GPOptions { seed, ..solver.clone() }
}

fn write_field(sink: &mut Sink, sol: &GPSolution) -> Result<(), RunError> {
    let bytes: Vec<u8> = sol.field.iter().flat_map(|x| x.to_le_bytes()).collect();
    sink.bytes("field.bin", &bytes)?;
    let n = sol.grid.points;
    sink.json(
        "field.json",
        &json!({
            "file": "field.bin",
            "dtype": "float64",
            "byte_order": "little",
            "order": "row_major",
            "shape": [n, n, n],
            "spacing": sol.grid.spacing(),
            "side": sol.grid.side,
            "boundary": sol.grid.boundary,
            "axis_origin": sol.grid.axis()[0],
        }),
    )?;
    Ok(())
}

fn solution_record(sol: &GPSolution) -> serde_json::Value {
    json!({
        "grid": sol.grid,
        "energy": sol.energy,
        "mu": sol.mu,
        "residual": sol.residual,
        "tolerance": sol.tolerance,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "seed": sol.seed,
        "min_evaluated_energy": sol.min_evaluated_energy,
        "participation_ratio": sol.participation_ratio(),
        "restarts": sol.restarts,
        "energy_spread": sol.energy_spread,
        "field_spread": sol.field_spread,
    })
}

pub fn gp(cfg: &RunConfig, g: &GpConfig, sink: &mut Sink) -> Result<(), RunError> {
    let opts = solver_opts(&g.solver, cfg.output.seed);
    let p = &g.problem;
    let bound = stability_bound(p.b1, p.b2);
    if let Some(d) = &g.droplet {
        let report = droplet_search(p.b1, p.b2, &d.boxes, &opts)?;
        let rows: Vec<Vec<String>> = report
            .runs
            .iter()
            .map(|r| {
                vec![
                    num(r.side),
                    r.points.to_string(),
                    num(r.energy),
                    num(r.participation_ratio),
                    num(r.residual),
                    r.converged.to_string(),
                    num(r.min_evaluated_energy),
                ]
            })
            .collect();
        let header = ["side", "points", "energy", "participation_ratio", "residual", "converged", "min_evaluated_energy"];
        sink.csv("droplet.csv", &header, &rows)?;
        sink.json(
            "gp.json",
            &json!({
                "command": "gp",
                "b1": p.b1,
                "b2": p.b2,
                "stability_bound": bound,
                "droplet": {
                    "runs": report.runs,
                    "relative_change": report.relative_change,
                    "localized": report.localized,
                },
                "solution": solution_record(&report.solution),
            }),
        )?;
        write_field(sink, &report.solution)?;
        if let Some(r) = report.runs.iter().find(|r| !r.converged) {
            return Err(bec3_core::Error::NotConverged { residual: r.residual, tolerance: opts.tolerance }.into());
        }
        return Ok(());
    }
    let sol = minimize(p, &opts)?;
    let rows: Vec<Vec<String>> =
        sol.trace.iter().map(|t| vec![t.iteration.to_string(), num(t.energy), num(t.residual)]).collect();
    sink.csv("trace.csv", &["iteration", "energy", "residual"], &rows)?;
    sink.json(
        "gp.json",
        &json!({
            "command": "gp",
            "b1": p.b1,
            "b2": p.b2,
            "stability_bound": bound,
            "solution": solution_record(&sol),
        }),
    )?;
    write_field(sink, &sol)?;
    if !sol.converged {
        // artifacts stay on disk for inspection
        return Err(bec3_core::Error::NotConverged { residual: sol.residual, tolerance: sol.tolerance }.into());
    }
    Ok(())
}

pub fn bogoliubov(cfg: &RunConfig, b: &BogoliubovConfig, sink: &mut Sink) -> Result<(), RunError> {
    let p: &GPProblem = &b.problem;
    let sol = minimize(p, &solver_opts(&b.solver, cfg.output.seed))?;
    let hess = build_hessian_with(&sol, p, b.convention)?;
    let spec = excitation_spectrum_with(&hess, b.modes, b.method, &b.iterative)?;
    let rows: Vec<Vec<String>> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| {
            vec![
                i.to_string(),
                num(*e),
                spec.multiplicities[i].to_string(),
                opt(spec.momenta_squared.as_ref().map(|m| m[i])),
            ]
        })
        .collect();
    sink.csv("spectrum.csv", &["index", "energy", "multiplicity", "momentum_squared"], &rows)?;
    let rows: Vec<Vec<String>> = spec.levels.iter().map(|l| vec![num(l.energy), l.multiplicity.to_string()]).collect();
    sink.csv("levels.csv", &["energy", "multiplicity"], &rows)?;
    sink.json(
        "bogoliubov.json",
        &json!({
            "command": "bogoliubov",
            "ground_state": solution_record(&sol),
            "spectrum": spec,
        }),
    )?;
    Ok(())
}

pub fn expand(e: &ExpandConfig, sink: &mut Sink) -> Result<(), RunError> {
    let d = &e.densities;
    let rho = dilute::log_space(d.min, d.max, d.count)?;
    // one point per task; collect keeps the input order
    let rows = rho
        .par_iter()
        .map(|r| dilute::sweep(&[*r], e.scattering_length, e.b_m).map(|mut v| v.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let e2 = |i: usize| opt(r.e2b.get(i).copied());
            vec![
                num(r.density),
                num(r.diluteness),
                num(r.e3b),
                e2(0),
                e2(1),
                e2(2),
                r.three_body_dominant.map(|b| b.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let header = ["rho", "diluteness", "e3b", "e2b_order0", "e2b_order1", "e2b_order2", "three_body_dominant"];
    sink.csv("sweep.csv", &header, &csv_rows)?;

    let conjectured = match &e.conjecture {
        Some(c) => {
            let recs = rho
                .iter()
                .map(|&r| {
                    dilute::conjectured_orders(&ExpansionQuery {
                        density: r,
                        b_m: e.b_m,
                        c_tl: c.c_tl,
                        c_gp: c.c_gp,
                        particles: c.particles,
                        gp_energy: c.gp_energy,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<Vec<String>> = recs
                .iter()
                .zip(&rho)
                .map(|(c, r)| vec![num(*r), num(c.thermodynamic), num(c.quartic_scale), num(c.scale_ratio)])
                .collect();
            sink.csv("conjectured.csv", &["rho", "thermodynamic_conjectural", "quartic_scale", "scale_ratio"], &rows)?;
            Some(json!({
                "label": recs[0].label,
                "c_tl": c.c_tl,
                "c_gp": c.c_gp,
                "gross_pitaevskii": recs[0].gross_pitaevskii,
            }))
        }
        None => None,
    };

    let coeffs = dilute::lhy_coefficients();
    let names = ["4*pi", "128/(15*sqrt(pi))", "8*(4*pi/3-sqrt(3))"];
    let table: Vec<serde_json::Value> = names
        .iter()
        .zip(coeffs)
        .map(|(n, c)| json!({ "expression": n, "value": c, "text": format!("{c:.15e}") }))
        .collect();
    let crossover = match e.scattering_length {
        Some(a) if a > 0.0 && e.b_m > 0.0 => Some(dilute::crossover_density(a, e.b_m)?),
        _ => None,
    };
    sink.json(
        "expand.json",
        &json!({
            "command": "expand",
            "b_m": e.b_m,
            "scattering_length": e.scattering_length,
            "lhy_coefficients": table,
            "crossover": crossover,
            "leading_error_order": "O(Y^nu)",
            "conjectured": conjectured,
            "points": rows.len(),
        }),
    )?;

    let mut series = vec![Series { label: "e3b".into(), points: rows.iter().map(|r| (r.density, r.e3b)).collect() }];
    if e.scattering_length.is_some() {
        for k in 0..3 {
            series.push(Series {
                label: format!("e2b order {k}"),
                points: rows.iter().map(|r| (r.density, r.e2b[k])).collect(),
            });
        }
    }
    sink.svg("sweep.svg", &log_log("Dilute energy densities", "rho", "energy density", &series))?;
    Ok(())
}
