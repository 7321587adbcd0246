use branchlab_core::eigen::LanczosOptions;
use branchlab_core::mesh::{mesh_spherical_polytope, Mesh};
use branchlab_core::spectral::{
    dirichlet_eigs_with, fit_inner_radius, indicial_exponents, richardson, vertex_exponent,
    EigenPair,
};
use branchlab_core::tiling::{SphericalPolytope, Tiling};

use crate::config::RunConfig;
use crate::output::{at, num, Output, Report, Table, VtkGrid};
use crate::RunError;

fn domain(cfg: &RunConfig) -> Result<(SphericalPolytope, f64), RunError> {
    let (p, auto) = match cfg.str("domain") {
        "tetra-face" => (Tiling::simplex(3)?.base_cell().clone(), 2.0),
        "hemisphere" => (SphericalPolytope::hemisphere([0.0, 0.0, 1.0])?, 1.0),
        d => {
            return Err(RunError::Usage(format!(
                "domain: expected tetra-face or hemisphere, got '{d}'"
            )))
        }
    };
    let grading = match cfg.str("grading") {
        "auto" => auto,
        _ => cfg.f64("grading")?,
    };
    Ok((p, grading))
}

/// Vanishing order at polygon vertex 0, when the polygon has vertices.
fn exponent_at_vertex(mesh: &Mesh, pair: &EigenPair) -> String {
    match mesh.polytope() {
        Some(p) if !p.vertices().is_empty() => {
            vertex_exponent(mesh, &pair.phi, 0, fit_inner_radius(mesh.h()), 0.2)
                .map(|f| num(f.slope))
                .unwrap_or_default()
        }
        _ => String::new(),
    }
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let (poly, grading) = domain(cfg)?;
    let (h0, levels, count, tol) = (
        cfg.f64("h")?,
        cfg.usize("refine")?,
        cfg.usize("modes")?,
        cfg.f64("tol")?,
    );
    if levels == 0 || count == 0 {
        return Err(RunError::Usage(
            "refine and modes must be at least 1".into(),
        ));
    }
    let opts = LanczosOptions {
        residual_tol: tol,
        ..Default::default()
    };
    let mut report = Report::new(cfg);
    let mut table = Table::new(&[
        "level",
        "h",
        "l",
        "lambda",
        "gamma_minus",
        "gamma_plus",
        "vertex_exponent",
        "residual",
    ]);
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    let mut finest = None;
    for level in 0..levels {
        let h = h0 / f64::powi(2.0, level as i32);
        let mesh = mesh_spherical_polytope(&poly, h, grading)?;
        let pairs = dirichlet_eigs_with(&mesh, count, &opts)?;
        for p in &pairs {
            let g = indicial_exponents(p.lambda, 3, 0)?;
            table.push(vec![
                level.to_string(),
                num(h),
                p.index.to_string(),
                num(p.lambda),
                num(g.gamma_minus),
                num(g.gamma_plus),
                exponent_at_vertex(&mesh, p),
                num(p.residual),
            ]);
            report.value(
                &format!("lambda_{}", p.index),
                p.lambda,
                &at(&format!("level {level}"), h, tol),
            );
        }
        per_level.push(pairs.iter().map(|p| p.lambda).collect());
        finest = Some((mesh, pairs, h));
    }
    let h_fine = h0 / f64::powi(2.0, levels as i32 - 1);
    if levels == 3 {
        for l in 0..count {
            let ex = richardson(&[per_level[0][l], per_level[1][l], per_level[2][l]])?;
            let g = indicial_exponents(ex.value, 3, 0)?;
            table.push(vec![
                "richardson".into(),
                num(h_fine),
                (l + 1).to_string(),
                num(ex.value),
                num(g.gamma_minus),
                num(g.gamma_plus),
                String::new(),
                String::new(),
            ]);
            let tag = at("richardson levels 0-2", h_fine, tol);
            report.value(&format!("lambda_{}_extrapolated", l + 1), ex.value, &tag);
            report.value(&format!("lambda_{}_order", l + 1), ex.order, &tag);
        }
    } else {
        report.note("Richardson extrapolation needs refine = 3");
    }
    // P1 Dirichlet eigenvalues may only decrease under refinement
    let monotone = per_level
        .windows(2)
        .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| *b <= *a + 1e-8));
    report.text(
        "monotone_under_refinement",
        &monotone.to_string(),
        &at("all levels", h_fine, tol),
    );
    let (mesh, pairs, h) = finest.expect("at least one level");
    let min = pairs.iter().map(|p| p.lambda).fold(f64::INFINITY, f64::min);
    report.value(
        "min_lambda",
        min,
        &at(&format!("level {}", levels - 1), h, tol),
    );
    out.csv("eig.csv", &table)?;
    let k = cfg.usize("fields")?.min(pairs.len());
    let names: Vec<String> = (1..=k).map(|l| format!("phi_{l}")).collect();
    let fields: Vec<(&str, &[f64])> = names
        .iter()
        .zip(&pairs)
        .map(|(n, p)| (n.as_str(), p.phi.as_slice()))
        .collect();
    out.vtk("eig_fields.vtk", &VtkGrid::from_mesh(&mesh), &fields)?;
    out.text("eig_report.txt", report.as_str())
}
