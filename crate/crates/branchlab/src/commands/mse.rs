use super::{harmonic::decay, history_table, ConeProblem};
use crate::config::RunConfig;
use crate::output::{at, Output, Report, VtkGrid};
use crate::RunError;

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let p = ConeProblem::new(cfg)?;
    let sol = p.solve(cfg)?;
    let r = &sol.report;
    let tol = cfg.f64("tol")?;
    let tag = at(&p.level(cfg), cfg.f64("h")?, tol);
    let mut report = Report::new(cfg);
    report.text("converged", &r.converged.to_string(), &tag);
    report.value("final_residual", r.final_residual, &tag);
    report.value("last_good_epsilon", r.last_good, &tag);
    report.count("continuation_levels", r.continuation.len(), &tag);
    report.count(
        "newton_steps",
        r.residual_history
            .iter()
            .map(|h| h.len().saturating_sub(1))
            .sum::<usize>(),
        &tag,
    );
    report.count("linear_iterations", r.linear_iterations, &tag);
    out.csv("mse_history.csv", &history_table(&sol))?;
    let u = &sol.field.values;
    if r.converged {
        let t = decay(&p, cfg, u, &mut report, &tag)?;
        out.csv("mse_decay.csv", &t)?;
    }
    let eps = r.last_good;
    let linear: Vec<f64> = p.harmonic.iter().map(|v| eps * v).collect();
    out.vtk(
        "mse.vtk",
        &VtkGrid::from_mesh(&p.cone),
        &[("u", u), ("linear", &linear)],
    )?;
    out.text("mse_report.txt", report.as_str())?;
    if !r.converged {
        return Err(RunError::Numerical(format!(
            "minimal surface Newton did not converge at epsilon {} (last good {eps}, residual {:e})",
            r.continuation.last().copied().unwrap_or(0.0),
            r.final_residual
        )));
    }
    Ok(())
}
