use branchlab_core::branch::{frequency, leading_coefficient_fit, TwoValuedField};
use branchlab_core::math::{scale, Vec3};
use branchlab_core::spectral::frequency_value;

use super::{history_table, ConeProblem};
use crate::config::RunConfig;
use crate::output::{at, num, Output, Report, Table};
use crate::RunError;

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let p = ConeProblem::new(cfg)?;
    let sol = p.solve(cfg)?;
    out.csv("branch_history.csv", &history_table(&sol))?;
    if !sol.report.converged {
        return Err(RunError::Numerical(format!(
            "minimal surface Newton did not converge (last good epsilon {}, residual {:e})",
            sol.report.last_good, sol.report.final_residual
        )));
    }
    let tag = at(&p.level(cfg), cfg.f64("h")?, cfg.f64("tol")?);
    let mut report = Report::new(cfg);
    let u = &sol.field.values;
    let f = TwoValuedField::new(&p.cone, u, &p.tiling)?;
    let gamma = frequency_value(p.eigs[0].lambda);
    report.value("lambda_1", p.eigs[0].lambda, &tag);
    report.value("expected_origin_frequency", gamma, &tag);

    let radii = cfg.list("radii")?;
    let mut centers: Vec<(String, Vec3)> = vec![("origin".into(), [0.0; 3])];
    let t = cfg.f64("ray_center")?;
    for (k, d) in f.branch_directions().iter().enumerate() {
        centers.push((format!("ray{k}"), scale(*d, t)));
    }
    let mut freq = Table::new(&[
        "center",
        "x",
        "y",
        "z",
        "r",
        "frequency",
        "dirichlet",
        "boundary",
    ]);
    for (name, c) in &centers {
        let s = frequency(&f, *c, &radii)?;
        for i in 0..s.radii.len() {
            freq.push(vec![
                name.clone(),
                num(c[0]),
                num(c[1]),
                num(c[2]),
                num(s.radii[i]),
                num(s.n[i]),
                num(s.dirichlet[i]),
                num(s.boundary[i]),
            ]);
        }
        report.value(&format!("frequency_{name}_smallest_radius"), s.n[0], &tag);
        report.value(
            &format!("monotonicity_defect_{name}"),
            s.monotonicity_defect(),
            &tag,
        );
    }
    out.csv("branch_frequency.csv", &freq)?;

    let stations = cfg.list("stations")?;
    let (rho_min, rho_max) = (cfg.f64("rho_min")?, cfg.f64("rho_max")?);
    let mut fits = Table::new(&[
        "ray",
        "station",
        "exponent",
        "coefficient",
        "r_squared",
        "correlation",
    ]);
    for (k, d) in f.branch_directions().iter().enumerate() {
        let fit = leading_coefficient_fit(&f, *d, &stations, rho_min, rho_max)?;
        for i in 0..fit.stations.len() {
            fits.push(vec![
                k.to_string(),
                num(fit.stations[i]),
                num(fit.fits[i].slope),
                num(fit.coefficients[i]),
                num(fit.fits[i].r_squared),
                num(fit.correlation),
            ]);
        }
        report.value(&format!("ray{k}_exponent"), fit.exponent, &tag);
        report.value(&format!("ray{k}_correlation"), fit.correlation, &tag);
    }
    out.csv("branch_fit.csv", &fits)?;
    out.csv("branch_sheets.csv", &sheets(&f, cfg.usize("grid")?)?)?;
    out.text("branch_report.txt", report.as_str())
}

/// Both sheets of the two-valued field on a regular grid of the unit ball.
fn sheets(f: &TwoValuedField, n: usize) -> Result<Table, RunError> {
    if n < 2 {
        return Err(RunError::Usage(
            "grid needs at least 2 points per axis".into(),
        ));
    }
    let mut t = Table::new(&["x", "y", "z", "sheet_plus", "sheet_minus"]);
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [coord(i), coord(j), coord(k)];
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > 1.0 {
                    continue;
                }
                let v = f.eval(x)?.value;
                t.push(vec![num(x[0]), num(x[1]), num(x[2]), num(v), num(-v)]);
            }
        }
    }
    Ok(t)
}
