use branchlab_core::bifurcate::{
    amplitude_exponent, continue_branch, jacobi_eigenpairs, predicted_crossings, solve_warped,
    stability_index, transversality, trivial_sample, warped_area, warped_jacobian, warped_residual,
    ContinuationOptions, Warp, WarpDomain, WarpModel, WarpedOptions,
};
use branchlab_core::mesh::mesh_spherical_polytope;
use branchlab_core::spectral::dirichlet_eigs;
use branchlab_core::tiling::Tiling;
use core::f64::consts::PI;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOY_LENGTH: f64 = 2.0 * PI / 3.0;

fn toy(elements: usize) -> WarpDomain {
    WarpDomain::interval(TOY_LENGTH, elements).unwrap()
}

fn triangle(h: f64) -> (WarpDomain, f64) {
    let t = Tiling::simplex(3).unwrap();
    let s = mesh_spherical_polytope(t.base_cell(), h, 2.0).unwrap();
    let mu = dirichlet_eigs(&s, 1).unwrap()[0].lambda;
    (WarpDomain::surface(&s).unwrap(), mu)
}

fn mode(dom: &WarpDomain, amp: f64) -> Vec<f64> {
    dom.coords()
        .iter()
        .map(|x| amp * (1.5 * x[0]).sin())
        .collect()
}

fn random_field(dom: &WarpDomain, rng: &mut ChaCha8Rng, amp: f64) -> Vec<f64> {
    let mut u = vec![0.0; dom.node_count()];
    for &i in dom.free() {
        u[i] = rng.gen_range(-amp..amp);
    }
    u
}

#[test]
fn predicted_crossings_follow_the_closed_form() {
    let l = predicted_crossings(&[2.25, 9.0], Warp::Cos, 1).unwrap();
    assert!((l[0] - 1.5).abs() < 1e-15 && (l[1] - 3.0).abs() < 1e-15);
    let l2 = predicted_crossings(&[5.159], Warp::Cos, 2).unwrap();
    assert!((l2[0] - (5.159f64 / 2.0).sqrt()).abs() < 1e-15);
    let a = predicted_crossings(&[4.0], Warp::Quadratic { c: 1.0 }, 2).unwrap()[0];
    let b = predicted_crossings(&[4.0], Warp::Quadratic { c: 2.0 }, 2).unwrap()[0];
    assert!((b * b - 0.5 * a * a).abs() < 1e-14);
    assert!(predicted_crossings(&[4.0], Warp::Quadratic { c: -1.0 }, 2).is_err());
}

#[test]
fn warp_model_is_validated() {
    assert!(WarpModel::new(Warp::Cos, 2, 1.2).is_ok());
    assert!(WarpModel::new(Warp::Cos, 2, 0.5).is_err());
    assert!(WarpModel::new(Warp::Cos, 0, 1.2).is_err());
    assert!(WarpModel::new(Warp::Quadratic { c: 0.0 }, 2, 1.2).is_err());
    assert!(WarpModel::new(Warp::Gaussian { c: 1.0 }, 1, 1.2).is_ok());
}

#[test]
fn slice_is_a_critical_point_for_every_dilation() {
    let (tri, _) = triangle(0.2);
    for (dom, n) in [(toy(50), 1), (tri, 2)] {
        for warp in [
            Warp::Cos,
            Warp::Quadratic { c: 1.5 },
            Warp::Gaussian { c: 0.7 },
        ] {
            for lam in [1.0, 1.7, 3.1] {
                let m = WarpModel::new(warp, n, lam).unwrap();
                let r = warped_residual(&dom, &m, &vec![0.0; dom.node_count()]).unwrap();
                assert!(r.iter().all(|v| v.abs() < 1e-15));
            }
        }
    }
}

#[test]
fn slab_is_enforced() {
    let dom = toy(20);
    let m = WarpModel::new(Warp::Cos, 1, 1.2).unwrap();
    let mut u = vec![0.0; dom.node_count()];
    u[5] = 1.0;
    assert!(warped_residual(&dom, &m, &u).is_err());
    // cos(λu) must stay positive: λu = 1.8·0.9 > π/2
    let m = WarpModel::new(Warp::Cos, 1, 1.8).unwrap();
    u[5] = 0.9;
    assert!(warped_area(&dom, &m, &u).is_err());
}

#[test]
fn residual_is_gradient_of_warped_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (tri, _) = triangle(0.15);
    for (dom, n) in [(toy(60), 1), (tri, 2)] {
        let m = WarpModel::new(Warp::Cos, n, 1.6).unwrap();
        let u = random_field(&dom, &mut rng, 0.3);
        let r = warped_residual(&dom, &m, &u).unwrap();
        for _ in 0..20 {
            let d = random_field(&dom, &mut rng, 1.0);
            let t = 1e-6;
            let shifted =
                |s: f64| -> Vec<f64> { u.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
            let fd = (warped_area(&dom, &m, &shifted(t)).unwrap()
                - warped_area(&dom, &m, &shifted(-t)).unwrap())
                / (2.0 * t);
            let exact: f64 = dom.free().iter().zip(&r).map(|(&i, v)| v * d[i]).sum();
            assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} {exact}");
        }
    }
}

#[test]
fn jacobian_matches_residual_differences_and_shifted_laplacian() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (tri, _) = triangle(0.15);
    for (dom, n) in [(toy(60), 1), (tri, 2)] {
        let lam = 1.7;
        let m = WarpModel::new(Warp::Gaussian { c: 1.3 }, n, lam).unwrap();
        let (k, mass) = dom.stiffness_mass();
        let j0 = warped_jacobian(&dom, &m, &vec![0.0; dom.node_count()]).unwrap();
        let expect = k.combine(1.0, &mass, n as f64 * lam * lam * -1.3);
        for i in 0..j0.n {
            for (c, v) in j0.row(i) {
                assert!((v - expect.get(i, c)).abs() < 1e-12 * (1.0 + v.abs()));
            }
        }
        let u = random_field(&dom, &mut rng, 0.3);
        let j = warped_jacobian(&dom, &m, &u).unwrap();
        for _ in 0..5 {
            let d = random_field(&dom, &mut rng, 1.0);
            let t = 1e-6;
            let shifted =
                |s: f64| -> Vec<f64> { u.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
            let rp = warped_residual(&dom, &m, &shifted(t)).unwrap();
            let rm = warped_residual(&dom, &m, &shifted(-t)).unwrap();
            let jd = j.mul_vec(&dom.gather(&d));
            let num: f64 = rp
                .iter()
                .zip(&rm)
                .zip(&jd)
                .map(|((a, b), c)| ((a - b) / (2.0 * t) - c).powi(2))
                .sum();
            let den: f64 = jd.iter().map(|c| c * c).sum();
            assert!((num / den).sqrt() < 1e-6);
        }
    }
}

#[test]
fn trivial_spectrum_is_an_exact_shift() {
    let (dom, mu0) = triangle(0.15);
    for lam in [1.0, 1.5, 2.2] {
        let m = WarpModel::new(Warp::Cos, 2, lam).unwrap();
        let eig = jacobi_eigenpairs(&dom, &m, &vec![0.0; dom.node_count()], 1).unwrap();
        let expect = mu0 - 2.0 * lam * lam;
        assert!(
            (eig.values[0] - expect).abs() < 1e-8 * mu0,
            "{} {expect}",
            eig.values[0]
        );
    }
}

#[test]
fn trivial_index_grows_by_one_at_each_simple_crossing() {
    let dom = toy(200);
    let idx = |l: f64| {
        trivial_sample(&dom, &WarpModel::new(Warp::Cos, 1, l).unwrap())
            .unwrap()
            .stability_index
    };
    assert_eq!(idx(1.45), 0);
    assert_eq!(idx(1.55), 1);
    assert_eq!(idx(2.95), 1);
    assert_eq!(idx(3.05), 2);
}

#[test]
fn subcritical_solves_return_to_the_slice() {
    let dom = toy(200);
    let m = WarpModel::new(Warp::Cos, 1, 1.35).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let guess = random_field(&dom, &mut rng, 0.05);
    let sol = solve_warped(&dom, &m, &guess, &WarpedOptions::default()).unwrap();
    assert!(sol.point.amplitude < 1e-9, "{}", sol.point.amplitude);
    assert_eq!(sol.point.stability_index, 0);
}

#[test]
fn supercritical_solve_finds_the_sign_symmetric_pair() {
    let dom = toy(200);
    let m = WarpModel::new(Warp::Gaussian { c: 1.0 }, 1, 1.6).unwrap();
    let up = solve_warped(&dom, &m, &mode(&dom, 0.1), &WarpedOptions::default()).unwrap();
    let down = solve_warped(&dom, &m, &mode(&dom, -0.1), &WarpedOptions::default()).unwrap();
    assert!(up.point.amplitude > 1e-3);
    assert_eq!(up.point.amplitude, down.point.amplitude);
    for (a, b) in up.point.field.iter().zip(&down.point.field) {
        assert_eq!(*a, -*b);
    }
    assert_eq!(up.point.stability_index, 0);
    // the slice is now unstable and has larger area
    let zero = vec![0.0; dom.node_count()];
    assert_eq!(stability_index(&dom, &m, &zero).unwrap(), 1);
    assert!(
        warped_area(&dom, &m, &up.point.field).unwrap() < warped_area(&dom, &m, &zero).unwrap()
    );
}

#[test]
fn toy_crossing_and_pitchfork_scaling() {
    let dom = toy(400);
    let opts = ContinuationOptions {
        lambda_min: 1.3,
        lambda_max: 1.8,
        step: 0.01,
        ..Default::default()
    };
    let cos = continue_branch(&dom, Warp::Cos, 1, &opts).unwrap();
    assert!((cos.crossing - 1.5).abs() < 1e-3);
    let gauss = continue_branch(&dom, Warp::Gaussian { c: 1.0 }, 1, &opts).unwrap();
    assert!((gauss.crossing - 1.5).abs() < 1e-3);
    let fit = amplitude_exponent(&gauss.branch, gauss.crossing, 0.01).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "{}", fit.slope);
    assert!(gauss
        .branch
        .iter()
        .all(|p| p.stability_index == 0 && p.lambda > gauss.crossing));
    assert!(gauss.branch.last().unwrap().lambda >= 1.8);
}

/// With `f = cos` and `n = 1` the warped strip is a round sphere of radius
/// `1/λ`, so at `λ = 3/2` every great circle through the two Dirichlet
/// points is a solution: `u = (2/3) atan(tan α · sin(3s/2))`.
#[test]
fn cosine_toy_branch_is_the_great_circle_family() {
    let great = |dom: &WarpDomain, alpha: f64| -> Vec<f64> {
        dom.coords()
            .iter()
            .map(|x| (2.0 / 3.0) * (alpha.tan() * (1.5 * x[0]).sin()).atan())
            .collect()
    };
    let m = WarpModel::new(Warp::Cos, 1, 1.5).unwrap();
    let res = |n: usize| {
        let dom = toy(n);
        let r = warped_residual(&dom, &m, &great(&dom, 0.6)).unwrap();
        r.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64
    };
    // nodal residual per unit length decays at second order
    let (a, b) = (res(100), res(200));
    assert!(b < 0.3 * a, "{a} {b}");
    let dom = toy(400);
    let opts = ContinuationOptions {
        lambda_min: 1.3,
        lambda_max: 1.8,
        step: 0.01,
        ..Default::default()
    };
    let d = continue_branch(&dom, Warp::Cos, 1, &opts).unwrap();
    assert!(d.branch.last().unwrap().amplitude > 0.5);
    assert!(d.branch.iter().all(|p| (p.lambda - 1.5).abs() < 1e-4));
}

#[test]
fn continuation_paths_agree_and_repeat() {
    let dom = toy(300);
    let warp = Warp::Gaussian { c: 1.0 };
    let base = ContinuationOptions {
        lambda_min: 1.3,
        lambda_max: 1.7,
        step: 0.01,
        ..Default::default()
    };
    let a = continue_branch(&dom, warp, 1, &base).unwrap();
    let b = continue_branch(
        &dom,
        warp,
        1,
        &ContinuationOptions {
            step: 0.0065,
            max_step: 0.03,
            ..base
        },
    )
    .unwrap();
    assert_eq!(a, continue_branch(&dom, warp, 1, &base).unwrap());
    let target = WarpModel::new(warp, 1, 1.6).unwrap();
    let nearest = |d: &[branchlab_core::bifurcate::BranchPoint]| {
        d.iter()
            .min_by(|p, q| (p.lambda - 1.6).abs().total_cmp(&(q.lambda - 1.6).abs()))
            .unwrap()
            .field
            .clone()
    };
    let ua = solve_warped(
        &dom,
        &target,
        &nearest(&a.branch),
        &WarpedOptions::default(),
    )
    .unwrap();
    let ub = solve_warped(
        &dom,
        &target,
        &nearest(&b.branch),
        &WarpedOptions::default(),
    )
    .unwrap();
    let diff = ua
        .point
        .field
        .iter()
        .zip(&ub.point.field)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
    assert!(ua.point.amplitude > 1e-2);
}

#[test]
fn triangle_crossing_and_transversality() {
    let (dom, mu0) = triangle(0.1);
    let opts = ContinuationOptions {
        lambda_min: 1.4,
        lambda_max: 1.75,
        step: 0.01,
        ..Default::default()
    };
    let d = continue_branch(&dom, Warp::Cos, 2, &opts).unwrap();
    let predicted = predicted_crossings(&[mu0], Warp::Cos, 2).unwrap()[0];
    assert!((d.crossing - predicted).abs() < 1e-8);
    assert!(d
        .branch
        .iter()
        .all(|p| p.stability_index == 0 && p.lambda > d.crossing));
    let t = transversality(&dom, Warp::Cos, 2, d.crossing, &d.kernel, 1e-3).unwrap();
    assert!((t.mass_norm_sq - 1.0).abs() < 1e-10);
    assert!(t.closed_form > 0.0);
    assert!((t.fd_slope - t.closed_form).abs() < 0.01 * t.closed_form);
}
