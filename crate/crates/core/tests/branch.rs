use branchlab_core::branch::{
    face_gradient_jump, frequency, frequency_closed_form, leading_coefficient_fit, sheet_value,
    RayFrame, TwoValuedField,
};
use branchlab_core::harmonic::{
    direct_harmonic_solve, poisson_extend, MeshModes, ModalBoundaryData,
};
use branchlab_core::math::{dot, norm, scale, Vec3};
use branchlab_core::mesh::{
    cone_over, mesh_cone_with, mesh_spherical_polytope, ConeOptions, Mesh, Tag,
};
use branchlab_core::mse::{solve_mse, BoundaryData, MseOptions};
use branchlab_core::spectral::{dirichlet_eigs, frequency_value};
use branchlab_core::tiling::{SphericalPolytope, Tiling};
use branchlab_core::Error;

/// Cone with a fine radial direction, needed for frequency quotients.
fn fine_cone(p: &SphericalPolytope, h: f64) -> Mesh {
    let opts = ConeOptions {
        h_surface: h,
        grading_surface: 2.0,
        h_radial: 0.01,
        grading_radial: 1.5,
    };
    mesh_cone_with(p, &opts).unwrap()
}

fn cone_for(p: &SphericalPolytope, h: f64) -> (Mesh, Mesh) {
    let s = mesh_spherical_polytope(p, h, 2.0).unwrap();
    let c = cone_over(&s, h, 2.0).unwrap();
    (s, c)
}

/// Homogeneous harmonic extension `r^γ φ₁` of the ground state on the
/// cone over the tetrahedral cell, and the minimal surface solution with
/// the same cap data at amplitude 1.
struct Ground {
    tiling: Tiling,
    cone: Mesh,
    modal: Vec<f64>,
    solved: Vec<f64>,
    gamma: f64,
}

fn ground(h: f64) -> Ground {
    let tiling = Tiling::simplex(3).unwrap();
    let s = mesh_spherical_polytope(tiling.base_cell(), h, 2.0).unwrap();
    let cone = fine_cone(tiling.base_cell(), h);
    let eigs = dirichlet_eigs(&s, 1).unwrap();
    let modes = MeshModes::new(&s, &eigs).unwrap();
    let modal = poisson_extend(&modes, &ModalBoundaryData::single(1, 1.0), &cone)
        .unwrap()
        .values;
    let cap: Vec<f64> = (0..cone.nodes().len())
        .map(|i| {
            if cone.has_tag(i, Tag::Cap) {
                modal[i]
            } else {
                0.0
            }
        })
        .collect();
    let data = BoundaryData {
        values: cap,
        epsilon: 1.0,
        generator: "phi1".into(),
    };
    let sol = solve_mse(&cone, &data, &MseOptions::default()).unwrap();
    assert!(sol.report.converged);
    Ground {
        gamma: frequency_value(eigs[0].lambda),
        tiling,
        cone,
        modal,
        solved: sol.field.values,
    }
}

fn xyz(x: Vec3) -> (f64, Vec3) {
    (x[0] * x[1] * x[2], [x[1] * x[2], x[0] * x[2], x[0] * x[1]])
}

fn octant() -> Tiling {
    let p = SphericalPolytope::simplex(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    Tiling::from_simplex_cell(p).unwrap()
}

#[test]
fn closed_form_homogeneous_harmonics_have_constant_frequency() {
    let radii = [0.1, 0.4, 1.0];
    let s = frequency_closed_form(&xyz, [0.0; 3], &radii, 24).unwrap();
    for n in &s.n {
        assert!((n - 3.0).abs() < 1e-10, "{n}");
    }
    let quad = |x: Vec3| (x[0] * x[0] - x[1] * x[1], [2.0 * x[0], -2.0 * x[1], 0.0]);
    let s = frequency_closed_form(&quad, [0.0; 3], &radii, 24).unwrap();
    for n in &s.n {
        assert!((n - 2.0).abs() < 1e-10, "{n}");
    }
}

#[test]
fn octant_mesh_frequency_matches_closed_form() {
    let t = octant();
    let cone = fine_cone(t.base_cell(), 0.1);
    let u: Vec<f64> = cone.nodes().iter().map(|x| xyz(*x).0).collect();
    let f = TwoValuedField::new(&cone, &u, &t).unwrap();
    // odd reflection of xyz across coordinate planes is xyz itself
    for x in [[0.3, -0.2, 0.4], [-0.5, -0.1, -0.3], [0.1, 0.6, -0.2]] {
        assert!((f.eval(x).unwrap().value - xyz(x).0).abs() < 2e-3);
    }
    let radii = [0.2, 0.5, 0.9];
    let mesh = frequency(&f, [0.0; 3], &radii).unwrap();
    for n in &mesh.n {
        assert!((n - 3.0).abs() < 0.03, "{n}");
    }
    let c = [0.1, -0.2, 0.15];
    let mesh = frequency(&f, c, &[0.3]).unwrap();
    let exact = frequency_closed_form(&xyz, c, &[0.3], 24).unwrap();
    assert!(
        (mesh.n[0] - exact.n[0]).abs() < 0.02 * exact.n[0],
        "{} {}",
        mesh.n[0],
        exact.n[0]
    );
}

#[test]
fn extension_requires_vanishing_on_faces() {
    let t = Tiling::simplex(3).unwrap();
    let (_, cone) = cone_for(t.base_cell(), 0.2);
    let u = vec![1.0; cone.nodes().len()];
    assert!(TwoValuedField::new(&cone, &u, &t).is_err());
}

#[test]
fn zero_field_is_rejected_by_frequency() {
    let t = Tiling::simplex(3).unwrap();
    let (_, cone) = cone_for(t.base_cell(), 0.2);
    let u = vec![0.0; cone.nodes().len()];
    let f = TwoValuedField::new(&cone, &u, &t).unwrap();
    assert!(matches!(
        frequency(&f, [0.0; 3], &[0.5]),
        Err(Error::TrivialField)
    ));
}

#[test]
fn homogeneous_extension_frequency_is_the_exponent() {
    let g = ground(0.1);
    let f = TwoValuedField::new(&g.cone, &g.modal, &g.tiling).unwrap();
    let s = frequency(&f, [0.0; 3], &[0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
    for n in &s.n {
        assert!((n - g.gamma).abs() < 0.01 * g.gamma, "{n} vs {}", g.gamma);
    }
    // the discrete quotient of an exactly homogeneous field is nearly flat
    let spread =
        s.n.iter().copied().fold(f64::MIN, f64::max) - s.n.iter().copied().fold(f64::MAX, f64::min);
    assert!(spread < 1e-3, "{:?}", s.n);
}

#[test]
fn solved_field_frequency_is_monotone_and_sign_invariant() {
    let g = ground(0.1);
    let f = TwoValuedField::new(&g.cone, &g.solved, &g.tiling).unwrap();
    let neg: Vec<f64> = g.solved.iter().map(|v| -v).collect();
    let fneg = TwoValuedField::new(&g.cone, &neg, &g.tiling).unwrap();
    let ray = g.tiling.base_cell().vertex3(0);
    let radii: Vec<f64> = (4..=9).map(|i| 0.05 * i as f64).collect();
    let origin = frequency(&f, [0.0; 3], &radii).unwrap();
    let on_ray = frequency(&f, scale(ray, 0.5), &radii).unwrap();
    for s in [&origin, &on_ray] {
        let sn = frequency(&fneg, s.center, &radii).unwrap();
        assert_eq!(s.n, sn.n);
        assert!(s.monotonicity_defect() < 1e-4, "{:?}", s.n);
    }
    assert!(
        (origin.n[0] - g.gamma).abs() < 0.05 * g.gamma,
        "{:?}",
        origin.n
    );
    assert!(origin.n[0] > 1.5);
    assert!((on_ray.n[0] - 1.5).abs() < 0.05, "{:?}", on_ray.n);
}

/// `ρ^{3/2} sin(3θ/2)` around a branch ray times a cutoff in the angle to
/// the ray, equal to 1 for angles below 0.5 and 0 beyond 1.2 (the face
/// opposite the ray is about 2.19 rad away).
fn synthetic_ray_field(cone: &Mesh, frame: &RayFrame) -> Vec<f64> {
    let v = frame.direction;
    cone.nodes()
        .iter()
        .map(|x| {
            let r = norm(*x);
            if r < 1e-14 {
                return 0.0;
            }
            let a = dot(*x, frame.e1);
            let b = dot(*x, frame.e2);
            let rho = (a * a + b * b).sqrt();
            let mut theta = b.atan2(a);
            if theta < 0.0 {
                theta += 2.0 * core::f64::consts::PI;
            }
            let alpha = (dot(*x, v) / r).clamp(-1.0, 1.0).acos();
            let s = ((1.2 - alpha) / 0.7).clamp(0.0, 1.0);
            let cutoff = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
            let val = rho.powf(1.5) * (1.5 * theta).sin() * cutoff;
            if val.abs() < 1e-13 {
                0.0
            } else {
                val
            }
        })
        .collect()
}

#[test]
fn synthetic_ray_field_recovers_exponent_and_coefficient() {
    let t = Tiling::simplex(3).unwrap();
    let cone = fine_cone(t.base_cell(), 0.1);
    let v = t.base_cell().vertex3(0);
    let frame = RayFrame::new(&t, v).unwrap();
    assert_eq!(frame.cells.len(), 3);
    let u = synthetic_ray_field(&cone, &frame);
    let f = TwoValuedField::new(&cone, &u, &t).unwrap();
    let fit = leading_coefficient_fit(&f, v, &[0.4, 0.5, 0.6], 0.05, 0.15).unwrap();
    println!("{fit:?}");
    assert!((fit.exponent - 1.5).abs() < 0.01, "{}", fit.exponent);
    for c in &fit.coefficients {
        assert!((c - 1.0).abs() < 0.02, "{c}");
    }
    assert!(fit.correlation >= 0.99);
}

#[test]
fn solved_field_branches_like_three_halves() {
    let g = ground(0.1);
    let f = TwoValuedField::new(&g.cone, &g.solved, &g.tiling).unwrap();
    let neg: Vec<f64> = g.solved.iter().map(|v| -v).collect();
    let fneg = TwoValuedField::new(&g.cone, &neg, &g.tiling).unwrap();
    for k in 0..3 {
        let v = g.tiling.base_cell().vertex3(k);
        let fit = leading_coefficient_fit(&f, v, &[0.4, 0.5, 0.6], 0.05, 0.15).unwrap();
        assert!((1.4..=1.6).contains(&fit.exponent), "{}", fit.exponent);
        assert!(fit.correlation >= 0.99, "{}", fit.correlation);
        let fitn = leading_coefficient_fit(&fneg, v, &[0.4, 0.5, 0.6], 0.05, 0.15).unwrap();
        assert_eq!(fit.exponent, fitn.exponent);
    }
}

#[test]
fn sheet_continuation_flips_sign_after_one_turn() {
    let g = ground(0.1);
    let f = TwoValuedField::new(&g.cone, &g.modal, &g.tiling).unwrap();
    let v = g.tiling.base_cell().vertex3(1);
    let frame = RayFrame::new(&g.tiling, v).unwrap();
    // follow the sheet through a full turn in small steps: no jumps, and
    // the profile matches sin(3θ/2), which changes sign under θ → θ + 2π
    let n = 360;
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let theta = 2.0 * core::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            sheet_value(&f, &frame, frame.point(0.5, 0.1, theta)).unwrap()
        })
        .collect();
    let peak = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for w in vals.windows(2) {
        assert!((w[1] - w[0]).abs() < 0.05 * peak);
    }
    let profile: Vec<f64> = (0..n)
        .map(|j| (1.5 * 2.0 * core::f64::consts::PI * (j as f64 + 0.5) / n as f64).sin())
        .collect();
    let dot_vp: f64 = vals.iter().zip(&profile).map(|(a, b)| a * b).sum();
    let vv: f64 = vals.iter().map(|a| a * a).sum();
    let pp: f64 = profile.iter().map(|a| a * a).sum();
    assert!(dot_vp / (vv * pp).sqrt() > 0.99);
}

#[test]
fn face_gradient_jump_decreases_under_refinement() {
    let t = Tiling::simplex(3).unwrap();
    let fine = mesh_spherical_polytope(t.base_cell(), 0.05, 2.0).unwrap();
    let eigs = dirichlet_eigs(&fine, 1).unwrap();
    let modes = MeshModes::new(&fine, &eigs).unwrap();
    let coarse = mesh_spherical_polytope(t.base_cell(), 0.1, 2.0).unwrap();
    let mut cone = cone_over(&coarse, 0.1, 2.0).unwrap();
    let mut jumps = Vec::new();
    for _ in 0..2 {
        let ext = poisson_extend(&modes, &ModalBoundaryData::single(1, 1.0), &cone)
            .unwrap()
            .values;
        let cap: Vec<f64> = (0..cone.nodes().len())
            .map(|i| {
                if cone.has_tag(i, Tag::Cap) {
                    ext[i]
                } else {
                    0.0
                }
            })
            .collect();
        let u = direct_harmonic_solve(&cone, &cap).unwrap().values;
        jumps.push(face_gradient_jump(&cone, &u, 0.3, 0.9, 0.1).unwrap());
        cone = cone.refine();
    }
    assert!(jumps[1] <= 0.6 * jumps[0], "{jumps:?}");
}
