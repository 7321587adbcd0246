use branchlab_core::harmonic::{
    direct_harmonic_solve, evaluate_extension, odd_extension_defect, poisson_extend,
    poisson_extend_torus, radial_decay_fit, radial_profile_torus, AngularModes, MeshModes,
    ModalBoundaryData, ModalTerm, Phase, TorusGrid,
};
use branchlab_core::math::{norm, Vec3};
use branchlab_core::mesh::{cone_over, mesh_spherical_polytope, Mesh, Tag};
use branchlab_core::spectral::{dirichlet_eigs, frequency_value, EigenPair};
use branchlab_core::tiling::{SphericalPolytope, Tiling};
use branchlab_core::{Error, Result};
use core::f64::consts::PI;

fn tetra_setup(h: f64) -> (Mesh, Vec<EigenPair>, Mesh) {
    let p = Tiling::simplex(3).unwrap().cells()[0].polytope.clone();
    let s = mesh_spherical_polytope(&p, h, 2.0).unwrap();
    let eigs = dirichlet_eigs(&s, 3).unwrap();
    let c = cone_over(&s, h, 2.0).unwrap();
    (s, eigs, c)
}

// I_{3/2}(x) ∝ x^{-1/2} (cosh x − sinh x / x)
fn bessel_three_halves_ratio(k: f64, r: f64) -> f64 {
    let g = |x: f64| x.powf(-0.5) * (x.cosh() - x.sinh() / x);
    r.powf(-0.5) * g(k * r) / g(k)
}

#[test]
fn profile_closed_forms() {
    for r in [0.0, 0.1, 0.5, 1.0] {
        assert!((radial_profile_torus(2.0, 0.0, r).unwrap() - r).abs() < 1e-15);
    }
    for k in [0.5, 1.0, 5.0, 20.0] {
        assert!((radial_profile_torus(5.159, k, 1.0).unwrap() - 1.0).abs() < 1e-14);
        for r in [0.05, 0.3, 0.77] {
            let want = bessel_three_halves_ratio(k, r);
            let got = radial_profile_torus(2.0, k, r).unwrap();
            assert!(
                (got - want).abs() < 1e-11 * want,
                "k={k} r={r} {got} {want}"
            );
        }
    }
    assert!(matches!(
        radial_profile_torus(2.0, 1e4, 0.5),
        Err(Error::BesselRange(_))
    ));
    assert!(radial_profile_torus(0.0, 1.0, 0.5).is_err());
}

#[test]
fn profile_solves_radial_equation() {
    let (lambda, k) = (5.159, 1.0);
    let u = |r: f64| radial_profile_torus(lambda, k, r).unwrap();
    let d = 1e-3;
    for i in 1..20 {
        let r = 0.05 * i as f64;
        let (a, b, c, e, f) = (u(r - 2.0 * d), u(r - d), u(r), u(r + d), u(r + 2.0 * d));
        let d1 = (a - 8.0 * b + 8.0 * e - f) / (12.0 * d);
        let d2 = (-a + 16.0 * b - 30.0 * c + 16.0 * e - f) / (12.0 * d * d);
        let terms = [d2, 2.0 * d1 / r, -lambda * c / (r * r), -k * k * c];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        assert!(terms.iter().sum::<f64>().abs() < 1e-8 * scale, "r={r}");
    }
}

#[test]
fn single_mode_matches_cap_and_decays_at_frequency() {
    let (s, eigs, c) = tetra_setup(0.1);
    let modes = MeshModes::new(&s, &eigs).unwrap();
    let f = poisson_extend(&modes, &ModalBoundaryData::single(1, 1.0), &c).unwrap();
    let ns = s.nodes().len();
    for i in 0..c.nodes().len() {
        if c.has_tag(i, Tag::Cap) {
            // cap layer is the last copy of the surface nodes
            let si = (i - 1) % ns;
            assert!((f.values[i] - eigs[0].phi[si]).abs() < 1e-12);
        }
    }
    assert!(odd_extension_defect(&c, &f.values) < 1e-12);
    let fit = radial_decay_fit(&c, &f.values, 0.05, 0.5).unwrap();
    let gamma = frequency_value(eigs[0].lambda);
    assert!(
        (fit.slope - gamma).abs() < 0.02 * gamma,
        "{fit:?} vs {gamma}"
    );
    let zero = poisson_extend(&modes, &ModalBoundaryData::new(0), &c).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
    assert!(matches!(
        poisson_extend(&modes, &ModalBoundaryData::single(4, 1.0), &c),
        Err(Error::ModeOutOfRange(4))
    ));
}

#[test]
fn every_single_mode_decays_at_its_exponent() {
    let (s, eigs, c) = tetra_setup(0.1);
    let modes = MeshModes::new(&s, &eigs).unwrap();
    for l in 1..=3 {
        let f = poisson_extend(&modes, &ModalBoundaryData::single(l, 1.0), &c).unwrap();
        let fit = radial_decay_fit(&c, &f.values, 0.05, 0.5).unwrap();
        let gamma = frequency_value(eigs[l - 1].lambda);
        assert!((fit.slope - gamma).abs() < 0.02 * gamma);
    }
}

#[test]
fn extension_is_linear() {
    let (s, eigs, c) = tetra_setup(0.15);
    let modes = MeshModes::new(&s, &eigs).unwrap();
    let a = ModalBoundaryData::single(1, 0.7);
    let b = ModalBoundaryData::single(3, -1.3);
    let ab = a.combine(2.0, &b, -0.5).unwrap();
    let fa = poisson_extend(&modes, &a, &c).unwrap();
    let fb = poisson_extend(&modes, &b, &c).unwrap();
    let fab = poisson_extend(&modes, &ab, &c).unwrap();
    for i in 0..c.nodes().len() {
        assert!((fab.values[i] - (2.0 * fa.values[i] - 0.5 * fb.values[i])).abs() < 1e-12);
    }
}

#[test]
fn torus_extension_reduces_and_decays() {
    let (s, eigs, c) = tetra_setup(0.15);
    let modes = MeshModes::new(&s, &eigs).unwrap();
    let torus = TorusGrid::new(vec![4], 1.0).unwrap();
    let mut d0 = ModalBoundaryData::new(1);
    d0.push(ModalTerm {
        mode: 1,
        k: vec![0],
        phase: Phase::Cos,
        coefficient: 1.0,
    })
    .unwrap();
    let ft = poisson_extend_torus(&modes, &d0, &c, &torus).unwrap();
    let f = poisson_extend(&modes, &ModalBoundaryData::single(1, 1.0), &c).unwrap();
    for g in 0..4 {
        assert_eq!(ft.slice(g), &f.values[..]);
    }
    let mut d1 = ModalBoundaryData::new(1);
    d1.push(ModalTerm {
        mode: 1,
        k: vec![1],
        phase: Phase::Cos,
        coefficient: 1.0,
    })
    .unwrap();
    let ft = poisson_extend_torus(&modes, &d1, &c, &torus).unwrap();
    let fit = radial_decay_fit(&c, ft.slice(0), 0.05, 0.5).unwrap();
    assert!(
        fit.slope >= frequency_value(eigs[0].lambda) - 0.05,
        "{fit:?}"
    );
    assert!(d1
        .push(ModalTerm {
            mode: 1,
            k: vec![1, 2],
            phase: Phase::Sin,
            coefficient: 1.0
        })
        .is_err());
}

// Octant triangle: xyz restricted to the sphere is a Dirichlet
// eigenfunction with eigenvalue 12 (degree-3 spherical harmonic).
struct OctantMode;

impl AngularModes for OctantMode {
    fn count(&self) -> usize {
        1
    }
    fn eigenvalue(&self, _: usize) -> f64 {
        12.0
    }
    fn eval(&self, _: usize, y: Vec3) -> Result<f64> {
        Ok(y[0] * y[1] * y[2])
    }
}

#[test]
fn four_dimensional_difference_oracle() {
    let mut data = ModalBoundaryData::new(1);
    data.push(ModalTerm {
        mode: 1,
        k: vec![1],
        phase: Phase::Cos,
        coefficient: 1.0,
    })
    .unwrap();
    let (n, nt) = (22usize, 96usize);
    let a = 0.55;
    let hx = a / n as f64;
    let ht = 2.0 * PI / nt as f64;
    // odd reflection across the coordinate planes supplies ghost values
    let u = |i: i64, j: i64, k: i64, t: i64| -> f64 {
        let sign = [i, j, k].iter().map(|q| q.signum()).product::<i64>() as f64;
        if sign == 0.0 {
            return 0.0;
        }
        let x = [
            i.abs() as f64 * hx,
            j.abs() as f64 * hx,
            k.abs() as f64 * hx,
        ];
        let z = [t.rem_euclid(nt as i64) as f64 * ht];
        sign * evaluate_extension(&OctantMode, &data, 1.0, x, &z).unwrap()
    };
    let (mut res, mut scale) = (0.0, 0.0);
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            for k in 0..n as i64 {
                for t in 0..nt as i64 {
                    let c = u(i, j, k, t);
                    let dxx = (u(i + 1, j, k, t) - 2.0 * c + u(i - 1, j, k, t)) / (hx * hx);
                    let dyy = (u(i, j + 1, k, t) - 2.0 * c + u(i, j - 1, k, t)) / (hx * hx);
                    let dzz = (u(i, j, k + 1, t) - 2.0 * c + u(i, j, k - 1, t)) / (hx * hx);
                    let dtt = (u(i, j, k, t + 1) - 2.0 * c + u(i, j, k, t - 1)) / (ht * ht);
                    res += (dxx + dyy + dzz + dtt).powi(2);
                    scale += (dxx.abs() + dyy.abs() + dzz.abs() + dtt.abs()).powi(2);
                }
            }
        }
    }
    let rel = (res / scale).sqrt();
    assert!(rel < 1e-3, "relative residual {rel}");
}

fn mass_l2(c: &Mesh, a: &[f64]) -> f64 {
    let m = c.lumped_mass();
    a.iter().zip(&m).map(|(v, w)| v * v * w).sum::<f64>().sqrt()
}

fn direct_vs_modal(h: f64) -> f64 {
    let (s, eigs, c) = tetra_setup(h);
    let modes = MeshModes::new(&s, &eigs).unwrap();
    let f = poisson_extend(&modes, &ModalBoundaryData::single(1, 1.0), &c).unwrap();
    let cap: Vec<f64> = (0..c.nodes().len())
        .map(|i| {
            if c.has_tag(i, Tag::Cap) {
                f.values[i]
            } else {
                0.0
            }
        })
        .collect();
    let d = direct_harmonic_solve(&c, &cap).unwrap();
    let max_cap = cap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(d.values.iter().all(|v| v.abs() <= max_cap + 1e-8));
    let diff: Vec<f64> = d.values.iter().zip(&f.values).map(|(a, b)| a - b).collect();
    mass_l2(&c, &diff) / mass_l2(&c, &f.values)
}

#[test]
fn direct_solve_agrees_with_modal_extension() {
    let coarse = direct_vs_modal(0.1);
    let fine = direct_vs_modal(0.05);
    assert!(coarse < 1e-2, "{coarse}");
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn direct_solve_trivial_and_negative_control() {
    let (_, _, c) = tetra_setup(0.2);
    let zero = direct_harmonic_solve(&c, &vec![0.0; c.nodes().len()]).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
    // x₁ is harmonic but not odd under the reflections
    let x1: Vec<f64> = c.nodes().iter().map(|x| x[0]).collect();
    assert!(odd_extension_defect(&c, &x1) > 0.1);
    assert!(direct_harmonic_solve(&c, &x1).is_err());
    assert!(c.nodes().iter().all(|x| norm(*x) <= 1.0 + 1e-12));
}

#[test]
fn octant_tiling_mode_is_odd() {
    let base = SphericalPolytope::simplex(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    let s = mesh_spherical_polytope(&base, 0.05, 1.0).unwrap();
    let eigs = dirichlet_eigs(&s, 1).unwrap();
    assert!((eigs[0].lambda - 12.0).abs() < 0.05 * 12.0);
}
