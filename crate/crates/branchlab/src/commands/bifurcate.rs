use core::f64::consts::PI;

use branchlab_core::bifurcate::{
    amplitude_exponent, continue_branch, predicted_crossings, transversality, ContinuationOptions,
    Warp, WarpDomain, WarpModel,
};
use branchlab_core::mesh::{mesh_spherical_polytope, Mesh};
use branchlab_core::tiling::Tiling;

use crate::config::RunConfig;
use crate::output::{at, num, Output, Report, Table, VtkGrid};
use crate::RunError;

/// Length of the toy interval, so that its first Dirichlet eigenvalue is
/// `(3/2)²`.
pub const TOY_LENGTH: f64 = 2.0 * PI / 3.0;

/// Largest `|λ − λ*| / a²` at the end of the branch reported as vertical.
const VERTICAL_CURVATURE: f64 = 1e-3;

fn warp(cfg: &RunConfig) -> Result<Warp, RunError> {
    let c = cfg.f64("c")?;
    match cfg.str("warp") {
        "cos" => Ok(Warp::Cos),
        "quadratic" => Ok(Warp::Quadratic { c }),
        "gaussian" => Ok(Warp::Gaussian { c }),
        w => Err(RunError::Usage(format!(
            "warp: expected cos, quadratic or gaussian, got '{w}'"
        ))),
    }
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let warp = warp(cfg)?;
    let (dom, n, mesh, level): (WarpDomain, usize, Option<Mesh>, String) = match cfg.str("model") {
        "toy" => {
            let e = cfg.usize("elements")?;
            (
                WarpDomain::interval(TOY_LENGTH, e)?,
                1,
                None,
                format!("interval elements={e}"),
            )
        }
        "triangle" => {
            let t = Tiling::simplex(3)?;
            let m = mesh_spherical_polytope(t.base_cell(), cfg.f64("h")?, cfg.f64("grading")?)?;
            (
                WarpDomain::surface(&m)?,
                2,
                Some(m),
                format!("triangle grading={}", cfg.str("grading")),
            )
        }
        m => {
            return Err(RunError::Usage(format!(
                "model: expected toy or triangle, got '{m}'"
            )))
        }
    };
    let h = match &mesh {
        Some(m) => m.h(),
        None => TOY_LENGTH / cfg.usize("elements")? as f64,
    };
    let opts = ContinuationOptions {
        lambda_min: cfg.f64("lambda_min")?,
        lambda_max: cfg.f64("lambda_max")?,
        sweep_step: cfg.f64("sweep_step")?,
        step: cfg.f64("step")?,
        max_step: cfg.f64("max_step")?,
        tolerance: cfg.f64("tol")?,
        max_height: cfg.f64("max_height")?,
        min_warp: cfg.f64("min_warp")?,
        ..Default::default()
    };
    let tag = at(&level, h, opts.tolerance);
    let d = continue_branch(&dom, warp, n, &opts)?;
    let mut report = Report::new(cfg);

    let first = d
        .trivial
        .first()
        .ok_or_else(|| RunError::Numerical("empty trivial sweep".into()))?;
    let curvature = WarpModel::new(warp, n, first.lambda)?.curvature();
    // the trivial Hessian is K + n λ² f''(0) M, so its spectrum is an exact shift
    let mu0 = first.mu_min - n as f64 * first.lambda * first.lambda * curvature;
    let predicted = predicted_crossings(&[mu0], warp, n)?[0];
    report.value("mu_1_at_zero", mu0, &tag);
    report.value("predicted_crossing", predicted, &tag);
    report.value("detected_crossing", d.crossing, &tag);
    report.count("branch_points", d.branch.len(), &tag);
    report.count("step_failures", d.step_failures, &tag);
    let t = transversality(&dom, warp, n, d.crossing, &d.kernel, 1e-3)?;
    report.value("transversality_closed_form", t.closed_form, &tag);
    report.value("transversality_fd_slope", t.fd_slope, &tag);
    // a pitchfork has λ − λ* ≈ κ a²; κ ≈ 0 means the branch is vertical
    let kappa = d.branch.last().map_or(0.0, |p| {
        (p.lambda - d.crossing) / (p.amplitude * p.amplitude)
    });
    report.value("branch_curvature", kappa, &tag);
    if kappa.abs() < VERTICAL_CURVATURE {
        report.text("direction", "vertical", &tag);
        report.text("amplitude_exponent", "unavailable (vertical branch)", &tag);
    } else {
        report.text(
            "direction",
            if kappa > 0.0 {
                "supercritical"
            } else {
                "subcritical"
            },
            &tag,
        );
        match amplitude_exponent(&d.branch, d.crossing, cfg.f64("window")?) {
            Ok(fit) => report.value("amplitude_exponent", fit.slope, &tag),
            Err(e) => report.text("amplitude_exponent", &format!("unavailable ({e})"), &tag),
        }
    }

    let mut table = Table::new(&[
        "kind",
        "lambda",
        "amplitude",
        "stability_index",
        "mu_min",
        "residual",
    ]);
    for s in &d.trivial {
        table.push(vec![
            "trivial".into(),
            num(s.lambda),
            "0.0".into(),
            s.stability_index.to_string(),
            num(s.mu_min),
            String::new(),
        ]);
    }
    for p in &d.branch {
        table.push(vec![
            "branch".into(),
            num(p.lambda),
            num(p.amplitude),
            p.stability_index.to_string(),
            String::new(),
            num(p.residual),
        ]);
    }
    out.csv("bifurcation.csv", &table)?;

    let every = cfg.usize("snapshot_every")?.max(1);
    let grid = match &mesh {
        Some(m) => VtkGrid::from_mesh(m),
        None => VtkGrid::polyline(dom.coords().to_vec()),
    };
    for (i, p) in d.branch.iter().enumerate().filter(|(i, _)| i % every == 0) {
        out.vtk(&format!("branch_{i:04}.vtk"), &grid, &[("u", &p.field)])?;
    }
    out.text("bifurcate_report.txt", report.as_str())
}
