use branchlab_core::eigen::LanczosOptions;
use branchlab_core::harmonic::{radial_decay_fit, radial_rms};
use branchlab_core::spectral::frequency_value;

use super::ConeProblem;
use crate::config::RunConfig;
use crate::output::{at, num, Output, Report, Table, VtkGrid};
use crate::RunError;

/// Radial RMS profile table and power-law fit of a cone field.
pub fn decay(
    p: &ConeProblem,
    cfg: &RunConfig,
    values: &[f64],
    report: &mut Report,
    tag: &str,
) -> Result<Table, RunError> {
    let (r_min, r_max) = (cfg.f64("r_min")?, cfg.f64("r_max")?);
    let mut t = Table::new(&["r", "rms"]);
    for (r, v) in radial_rms(&p.cone, values, r_min, r_max) {
        t.push(vec![num(r), num(v)]);
    }
    let fit = radial_decay_fit(&p.cone, values, r_min, r_max)?;
    report.value("decay_exponent", fit.slope, tag);
    report.value("decay_r_squared", fit.r_squared, tag);
    let lowest = cfg
        .modes("data")?
        .iter()
        .filter(|t| t.1 != 0.0)
        .map(|t| t.0)
        .min()
        .unwrap_or(1);
    report.value(
        "expected_exponent",
        frequency_value(p.eigs[lowest - 1].lambda),
        tag,
    );
    Ok(t)
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let p = ConeProblem::new(cfg)?;
    let mut report = Report::new(cfg);
    let tag = at(
        &p.level(cfg),
        cfg.f64("h")?,
        LanczosOptions::default().residual_tol,
    );
    for (l, e) in p.eigs.iter().enumerate() {
        report.value(&format!("lambda_{}", l + 1), e.lambda, &tag);
    }
    let t = decay(&p, cfg, &p.harmonic, &mut report, &tag)?;
    out.csv("harmonic_decay.csv", &t)?;
    out.vtk(
        "harmonic.vtk",
        &VtkGrid::from_mesh(&p.cone),
        &[("u", &p.harmonic)],
    )?;
    out.text("harmonic_report.txt", report.as_str())
}
