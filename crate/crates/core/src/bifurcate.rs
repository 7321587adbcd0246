//! Minimal graphs in warped products `S^n × (−1, 1)` with metric
//! `dt² + f(λt)² g_{S^n}`: predicted bifurcation values, Newton solves of
//! the warped minimal surface equation on a fundamental domain, branch
//! continuation and transversality.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::eigen::{smallest_eigenpairs, GeneralizedEigen, LanczosOptions};
use crate::error::{invalid, Error, Result};
use crate::fem::dot_vec;
use crate::math::{compensated_sum, dot, fit_power_law, solve_dense, LineFit, Vec3};
use crate::mesh::{basis_gradients, Mesh, MeshKind};
use crate::sparse::{CsrMatrix, EnvelopeLdl, TripletBuilder};

/// Even warping function with `f(0) = 1`, `f'(0) = 0`, `f''(0) < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warp {
    /// `f(t) = cos t`.
    Cos,
    /// `f(t) = 1 − c t²/2`, `c > 0`.
    Quadratic { c: f64 },
    /// `f(t) = exp(−c t²/2)`, `c > 0`.
    Gaussian { c: f64 },
}

impl Warp {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Warp::Cos => t.cos(),
            Warp::Quadratic { c } => 1.0 - 0.5 * c * t * t,
            Warp::Gaussian { c } => (-0.5 * c * t * t).exp(),
        }
    }

    pub fn first(&self, t: f64) -> f64 {
        match self {
            Warp::Cos => -t.sin(),
            Warp::Quadratic { c } => -c * t,
            Warp::Gaussian { c } => -c * t * (-0.5 * c * t * t).exp(),
        }
    }

    pub fn second(&self, t: f64) -> f64 {
        match self {
            Warp::Cos => -t.cos(),
            Warp::Quadratic { c } => -c,
            Warp::Gaussian { c } => c * (c * t * t - 1.0) * (-0.5 * c * t * t).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpModel {
    pub warp: Warp,
    /// Dimension of the sphere.
    pub n: usize,
    /// Dilation: the metric uses `f(λt)`.
    pub lambda: f64,
}

impl WarpModel {
    pub fn new(warp: Warp, n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sphere dimension must be at least 1"));
        }
        if !(lambda >= 1.0) {
            return Err(invalid("dilation must be at least 1"));
        }
        if !(warp.value(0.0) > 0.0) {
            return Err(invalid("warp must be positive at 0"));
        }
        let h = 1e-4;
        if (warp.value(h) - warp.value(-h)).abs() > 1e-12 {
            return Err(invalid("warp must be even"));
        }
        if !(warp.second(0.0) < 0.0) {
            return Err(invalid("warp must have f''(0) < 0"));
        }
        Ok(Self { warp, n, lambda })
    }

    pub fn at(&self, lambda: f64) -> Result<Self> {
        Self::new(self.warp, self.n, lambda)
    }

    /// `f''(0)` of the undilated warp.
    pub fn curvature(&self) -> f64 {
        self.warp.second(0.0)
    }
}

/// `λ_j = √(−μ_j(0)/(n f''(0)))` for the given Dirichlet eigenvalues, ascending.
pub fn predicted_crossings(mu: &[f64], warp: Warp, n: usize) -> Result<Vec<f64>> {
    let c = warp.second(0.0);
    if !(c < 0.0) {
        return Err(invalid("f''(0) must be negative"));
    }
    if n == 0 || mu.iter().any(|m| !(*m > 0.0)) {
        return Err(invalid("need n ≥ 1 and positive eigenvalues"));
    }
    let mut out: Vec<f64> = mu.iter().map(|m| (-m / (n as f64 * c)).sqrt()).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// P1 discretization of a fundamental domain with Dirichlet boundary:
/// an interval (the `n = 1` toy) or a spherical polygon mesh (`n = 2`).
#[derive(Debug, Clone)]
pub struct WarpDomain {
    dim: usize,
    coords: Vec<Vec3>,
    elements: Vec<[usize; 3]>,
    grads: Vec<[Vec3; 3]>,
    measure: Vec<f64>,
    free: Vec<usize>,
}

const INTERVAL_QUAD: [([f64; 3], f64); 2] = [
    ([0.788_675_134_594_812_9, 0.211_324_865_405_187_1, 0.0], 0.5),
    ([0.211_324_865_405_187_1, 0.788_675_134_594_812_9, 0.0], 0.5),
];
const TRIANGLE_QUAD: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

impl WarpDomain {
    /// Interval `[0, length]` with `elements` equal elements.
    pub fn interval(length: f64, elements: usize) -> Result<Self> {
        if !(length > 0.0) || elements < 2 {
            return Err(invalid(
                "interval needs positive length and at least 2 elements",
            ));
        }
        let h = length / elements as f64;
        let coords = (0..=elements).map(|i| [i as f64 * h, 0.0, 0.0]).collect();
        let g = [[-1.0 / h, 0.0, 0.0], [1.0 / h, 0.0, 0.0], [0.0; 3]];
        Ok(Self {
            dim: 1,
            coords,
            elements: (0..elements).map(|i| [i, i + 1, 0]).collect(),
            grads: vec![g; elements],
            measure: vec![h; elements],
            free: (1..elements).collect(),
        })
    }

    /// Surface mesh of a spherical polytope, Dirichlet on its boundary.
    pub fn surface(mesh: &Mesh) -> Result<Self> {
        if mesh.kind() != MeshKind::Surface {
            return Err(Error::WrongMeshKind {
                expected: "surface",
            });
        }
        let ne = mesh.element_count();
        let mut elements = Vec::with_capacity(ne);
        let mut grads = Vec::with_capacity(ne);
        let mut measure = Vec::with_capacity(ne);
        for e in 0..ne {
            let el = mesh.element(e);
            elements.push([el[0], el[1], el[2]]);
            let g = basis_gradients(mesh, e);
            grads.push([g[0], g[1], g[2]]);
            measure.push(mesh.element_measure(e).abs());
        }
        Ok(Self {
            dim: 2,
            coords: mesh.nodes().to_vec(),
            elements,
            grads,
            measure,
            free: mesh.free_nodes(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Full nodal vector from free values.
    pub fn scatter(&self, free_values: &[f64]) -> Vec<f64> {
        crate::fem::scatter(self.coords.len(), &self.free, free_values)
    }

    pub fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| u[i]).collect()
    }

    fn npe(&self) -> usize {
        self.dim + 1
    }

    fn quadrature(&self) -> &'static [([f64; 3], f64)] {
        if self.dim == 1 {
            &INTERVAL_QUAD
        } else {
            &TRIANGLE_QUAD
        }
    }

    fn free_map(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.coords.len()];
        for (k, &i) in self.free.iter().enumerate() {
            map[i] = k;
        }
        map
    }

    /// Stiffness and consistent mass restricted to free nodes.
    pub fn stiffness_mass(&self) -> (CsrMatrix, CsrMatrix) {
        let n = self.coords.len();
        let mut k = TripletBuilder::new(n);
        let mut m = TripletBuilder::new(n);
        let npe = self.npe();
        for (e, el) in self.elements.iter().enumerate() {
            let g = &self.grads[e];
            for a in 0..npe {
                for b in 0..npe {
                    k.add(el[a], el[b], self.measure[e] * dot(g[a], g[b]));
                    // consistent P1 mass: (1 + δ_ab)·|e|/6 on segments, /12 on triangles
                    let denom = if self.dim == 1 { 6.0 } else { 12.0 };
                    let mab = if a == b { 2.0 } else { 1.0 };
                    m.add(el[a], el[b], self.measure[e] * mab / denom);
                }
            }
        }
        (
            k.build().restrict(&self.free),
            m.build().restrict(&self.free),
        )
    }

    fn check(&self, model: &WarpModel, u: &[f64]) -> Result<()> {
        if u.len() != self.coords.len() {
            return Err(invalid("field length does not match the domain"));
        }
        let big = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(big < 1.0)
            || u.iter()
                .any(|v| !(model.warp.value(model.lambda * v) > 0.0))
        {
            return Err(Error::SlabViolation(big));
        }
        Ok(())
    }
}

/// Area density `F(u, |∇u|²) = a^{n−1} √(a² + w)`, `a = f(λu)`, and its
/// derivatives in `u` and `w`.
struct Density {
    f: f64,
    fu: f64,
    fw: f64,
    fuu: f64,
    fuw: f64,
    fww: f64,
}

fn density(model: &WarpModel, u: f64, w: f64) -> Density {
    let lam = model.lambda;
    let n = model.n as i32;
    let a = model.warp.value(lam * u);
    let a1 = lam * model.warp.first(lam * u);
    let a2 = lam * lam * model.warp.second(lam * u);
    let s = (a * a + w).sqrt();
    let nm = (n - 1) as f64;
    let p = a.powi(n - 1);
    let pu = nm * a.powi(n - 2) * a1;
    let puu = nm * (nm - 1.0) * a.powi(n - 3) * a1 * a1 + nm * a.powi(n - 2) * a2;
    let su = a * a1 / s;
    let suu = (a1 * a1 + a * a2) / s - (a * a1) * (a * a1) / (s * s * s);
    Density {
        f: p * s,
        fu: pu * s + p * su,
        fw: p / (2.0 * s),
        fuu: puu * s + 2.0 * pu * su + p * suu,
        fuw: pu / (2.0 * s) - p * a * a1 / (2.0 * s * s * s),
        fww: -p / (4.0 * s * s * s),
    }
}

/// Evaluates quadrature point data for element `e`: `(weight, shape, u, ∇u)`.
fn element_points<'a>(
    dom: &'a WarpDomain,
    e: usize,
    u: &'a [f64],
) -> impl Iterator<Item = (f64, [f64; 3], f64, Vec3)> + 'a {
    let el = dom.elements[e];
    let npe = dom.npe();
    let mut g = [0.0; 3];
    for a in 0..npe {
        for d in 0..3 {
            g[d] += u[el[a]] * dom.grads[e][a][d];
        }
    }
    dom.quadrature().iter().map(move |(bary, w)| {
        let uq: f64 = (0..npe).map(|a| bary[a] * u[el[a]]).sum();
        (w * dom.measure[e], *bary, uq, g)
    })
}

/// Discrete warped area `𝒜(u) = ∫ f(λu)^{n−1} √(f(λu)² + |∇u|²)`.
pub fn warped_area(dom: &WarpDomain, model: &WarpModel, u: &[f64]) -> Result<f64> {
    dom.check(model, u)?;
    let mut terms = Vec::with_capacity(dom.elements.len() * 3);
    for e in 0..dom.elements.len() {
        for (w, _, uq, g) in element_points(dom, e, u) {
            terms.push(w * density(model, uq, dot(g, g)).f);
        }
    }
    Ok(compensated_sum(terms))
}

/// Gradient of [`warped_area`] at free nodes.
pub fn warped_residual(dom: &WarpDomain, model: &WarpModel, u: &[f64]) -> Result<Vec<f64>> {
    dom.check(model, u)?;
    let map = dom.free_map();
    let npe = dom.npe();
    let mut r = vec![0.0; dom.free.len()];
    for e in 0..dom.elements.len() {
        let el = dom.elements[e];
        for (w, bary, uq, g) in element_points(dom, e, u) {
            let d = density(model, uq, dot(g, g));
            for a in 0..npe {
                let i = map[el[a]];
                if i != usize::MAX {
                    r[i] += w * (d.fu * bary[a] + 2.0 * d.fw * dot(g, dom.grads[e][a]));
                }
            }
        }
    }
    Ok(r)
}

/// Hessian of [`warped_area`] on free nodes; `−` the discrete Jacobi operator.
pub fn warped_jacobian(dom: &WarpDomain, model: &WarpModel, u: &[f64]) -> Result<CsrMatrix> {
    dom.check(model, u)?;
    let map = dom.free_map();
    let npe = dom.npe();
    let mut b = TripletBuilder::new(dom.free.len());
    for e in 0..dom.elements.len() {
        let el = dom.elements[e];
        let gr = &dom.grads[e];
        for (w, bary, uq, g) in element_points(dom, e, u) {
            let d = density(model, uq, dot(g, g));
            for a in 0..npe {
                let i = map[el[a]];
                if i == usize::MAX {
                    continue;
                }
                let ga = dot(g, gr[a]);
                for c in 0..npe {
                    let j = map[el[c]];
                    if j == usize::MAX {
                        continue;
                    }
                    let gc = dot(g, gr[c]);
                    let v = d.fuu * bary[a] * bary[c]
                        + 2.0 * d.fuw * (gc * bary[a] + ga * bary[c])
                        + 2.0 * d.fw * dot(gr[a], gr[c])
                        + 4.0 * d.fww * ga * gc;
                    b.add(i, j, w * v);
                }
            }
        }
    }
    Ok(b.build())
}

/// `∂R/∂λ` by central differences.
fn residual_lambda(dom: &WarpDomain, model: &WarpModel, u: &[f64]) -> Result<Vec<f64>> {
    let d = 1e-6 * model.lambda;
    let rp = warped_residual(
        dom,
        &WarpModel {
            lambda: model.lambda + d,
            ..*model
        },
        u,
    )?;
    let rm = warped_residual(
        dom,
        &WarpModel {
            lambda: model.lambda - d,
            ..*model
        },
        u,
    )?;
    Ok(rp
        .iter()
        .zip(&rm)
        .map(|(a, b)| (a - b) / (2.0 * d))
        .collect())
}

fn mass_norm(m: &CsrMatrix, x: &[f64]) -> f64 {
    dot_vec(x, &m.mul_vec(x)).max(0.0).sqrt()
}

/// Smallest shift `σ ≥ 0` from the sequence `0, s, 2s, 4s, …` making
/// `H + σM` positive definite.
fn definite_shift(h: &CsrMatrix, m: &CsrMatrix, start: f64) -> Result<f64> {
    if EnvelopeLdl::factor(h)
        .map(|f| f.is_positive_definite())
        .unwrap_or(false)
    {
        return Ok(0.0);
    }
    let mut s = start.max(1e-8);
    for _ in 0..60 {
        if EnvelopeLdl::factor(&h.combine(1.0, m, s))
            .map(|f| f.is_positive_definite())
            .unwrap_or(false)
        {
            return Ok(s);
        }
        s *= 2.0;
    }
    Err(invalid("could not shift the Hessian to definiteness"))
}

/// Smallest eigenvalues `μ` of `H x = μ M x` for the Hessian at `u`
/// (free-node eigenvectors, M-orthonormal).
pub fn jacobi_eigenpairs(
    dom: &WarpDomain,
    model: &WarpModel,
    u: &[f64],
    count: usize,
) -> Result<GeneralizedEigen> {
    let h = warped_jacobian(dom, model, u)?;
    let (_, m) = dom.stiffness_mass();
    let start = model.n as f64 * model.lambda * model.lambda * model.curvature().abs();
    let s = 2.0 * definite_shift(&h, &m, start)? + 1.0;
    let mut eig = smallest_eigenpairs(
        &h.combine(1.0, &m, s),
        &m,
        count,
        &LanczosOptions::default(),
    )?;
    eig.values.iter_mut().for_each(|v| *v -= s);
    eig.shift -= s;
    Ok(eig)
}

/// Number of negative eigenvalues of the Hessian (inertia of `LDLᵀ`).
pub fn stability_index(dom: &WarpDomain, model: &WarpModel, u: &[f64]) -> Result<usize> {
    Ok(EnvelopeLdl::factor(&warped_jacobian(dom, model, u)?)?.negative_pivots())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    /// `√(uᵀ M u)`.
    pub amplitude: f64,
    /// Nodal values on the whole domain.
    pub field: Vec<f64>,
    pub stability_index: usize,
    pub residual: f64,
}

fn branch_point(
    dom: &WarpDomain,
    model: &WarpModel,
    u: Vec<f64>,
    residual: f64,
) -> Result<BranchPoint> {
    let (_, m) = dom.stiffness_mass();
    Ok(BranchPoint {
        lambda: model.lambda,
        amplitude: mass_norm(&m, &dom.gather(&u)),
        stability_index: stability_index(dom, model, &u)?,
        field: u,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedOptions {
    /// Required Euclidean norm of the free residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for WarpedOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedSolution {
    pub point: BranchPoint,
    pub history: Vec<f64>,
}

/// Newton's method for `∇𝒜 = 0` at fixed `λ`.
///
/// Where the Hessian is indefinite it is shifted by a multiple of the
/// mass matrix and steps must decrease the area, so iterates descend to a
/// local minimizer; otherwise steps must decrease the residual norm.
/// Every step is damped to stay inside the slab.
pub fn solve_warped(
    dom: &WarpDomain,
    model: &WarpModel,
    guess: &[f64],
    opts: &WarpedOptions,
) -> Result<WarpedSolution> {
    if guess.len() != dom.node_count() {
        return Err(invalid("guess length does not match the domain"));
    }
    // Dirichlet values are zero
    let mut u = dom.scatter(&dom.gather(guess));
    let (_, m) = dom.stiffness_mass();
    let start = model.n as f64 * model.lambda * model.lambda * model.curvature().abs();
    let mut history = Vec::new();
    for _ in 0..opts.max_iterations {
        let r = warped_residual(dom, model, &u)?;
        let rn = dot_vec(&r, &r).sqrt();
        history.push(rn);
        if rn <= opts.tolerance {
            return Ok(WarpedSolution {
                point: branch_point(dom, model, u, rn)?,
                history,
            });
        }
        let h = warped_jacobian(dom, model, &u)?;
        let shift = definite_shift(&h, &m, start)?;
        let fact = EnvelopeLdl::factor(&if shift > 0.0 {
            h.combine(1.0, &m, shift)
        } else {
            h
        })?;
        let step: Vec<f64> = fact.solve(&r).iter().map(|v| -v).collect();
        let slope = dot_vec(&r, &step);
        let e0 = warped_area(dom, model, &u)?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            for (k, &i) in dom.free.iter().enumerate() {
                trial[i] += alpha * step[k];
            }
            if dom.check(model, &trial).is_ok() {
                let ok = if shift > 0.0 {
                    warped_area(dom, model, &trial)? <= e0 + 1e-4 * alpha * slope + 1e-15 * e0.abs()
                } else {
                    let rt = warped_residual(dom, model, &trial)?;
                    dot_vec(&rt, &rt).sqrt() < rn
                };
                if ok {
                    u = trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NotConverged {
        what: "warped Newton",
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialSample {
    pub lambda: f64,
    /// Smallest eigenvalue of the Hessian at `u = 0`.
    pub mu_min: f64,
    pub stability_index: usize,
}

pub fn trivial_sample(dom: &WarpDomain, model: &WarpModel) -> Result<TrivialSample> {
    let zero = vec![0.0; dom.node_count()];
    let eig = jacobi_eigenpairs(dom, model, &zero, 1)?;
    Ok(TrivialSample {
        lambda: model.lambda,
        mu_min: eig.values[0],
        stability_index: stability_index(dom, model, &zero)?,
    })
}

/// Bisection on the sign change of the smallest trivial-branch Hessian
/// eigenvalue in `[lo, hi]`.
pub fn locate_crossing(
    dom: &WarpDomain,
    warp: Warp,
    n: usize,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let mu =
        |l: f64| -> Result<f64> { Ok(trivial_sample(dom, &WarpModel::new(warp, n, l)?)?.mu_min) };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (mu(a)?, mu(b)?);
    if !(fa > 0.0 && fb < 0.0) {
        return Err(invalid("interval does not bracket a crossing"));
    }
    while b - a > tol {
        let c = 0.5 * (a + b);
        if mu(c)? > 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Spacing of the trivial-branch sweep used to bracket the crossing.
    pub sweep_step: f64,
    /// Initial pseudo-arclength step.
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Residual tolerance of the corrector.
    pub tolerance: f64,
    pub max_corrector: usize,
    /// Largest `max |u|` accepted on the branch.
    pub max_height: f64,
    /// Continuation stops once `min f(λu) / f(0)` falls below this; the
    /// warped metric degenerates where `f(λu) = 0`.
    pub min_warp: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            lambda_min: 1.0,
            lambda_max: 2.0,
            sweep_step: 0.05,
            step: 0.02,
            min_step: 1e-5,
            max_step: 0.05,
            tolerance: 1e-11,
            max_corrector: 12,
            max_height: 0.9,
            min_warp: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDiagram {
    pub trivial: Vec<TrivialSample>,
    pub crossing: f64,
    /// Kernel direction at the crossing, nodal, M-normalized.
    pub kernel: Vec<f64>,
    pub branch: Vec<BranchPoint>,
    pub step_failures: usize,
}

/// Newton corrector for `R(u, λ) = 0` bordered by one linear constraint
/// `⟨c_u, u⟩ + c_λ λ = rhs`, with dense solves.
fn bordered_newton(
    dom: &WarpDomain,
    model: &WarpModel,
    u0: &[f64],
    lambda0: f64,
    c_u: &[f64],
    c_l: f64,
    rhs: f64,
    opts: &ContinuationOptions,
) -> Result<(Vec<f64>, f64, f64)> {
    let nf = dom.free.len();
    let n1 = nf + 1;
    let mut u = u0.to_vec();
    let mut lam = lambda0;
    for _ in 0..opts.max_corrector {
        let mdl = model.at(lam)?;
        let r = warped_residual(dom, &mdl, &u)?;
        let uf = dom.gather(&u);
        let g = dot_vec(c_u, &uf) + c_l * lam - rhs;
        let rn = dot_vec(&r, &r).sqrt();
        if rn <= opts.tolerance && g.abs() <= opts.tolerance {
            return Ok((u, lam, rn));
        }
        let h = warped_jacobian(dom, &mdl, &u)?;
        let rl = residual_lambda(dom, &mdl, &u)?;
        let mut a = vec![0.0; n1 * n1];
        for i in 0..nf {
            for (j, v) in h.row(i) {
                a[i * n1 + j] = v;
            }
            a[i * n1 + nf] = rl[i];
            a[nf * n1 + i] = c_u[i];
        }
        a[nf * n1 + nf] = c_l;
        let mut b: Vec<f64> = r.iter().map(|v| -v).collect();
        b.push(-g);
        let d = solve_dense(&a, &b, n1)?;
        for (k, &i) in dom.free.iter().enumerate() {
            u[i] += d[k];
        }
        lam += d[nf];
        if !(lam >= 1.0) {
            return Err(invalid("corrector left λ ≥ 1"));
        }
    }
    Err(Error::NotConverged {
        what: "bordered corrector",
        iterations: opts.max_corrector,
        residual: f64::NAN,
    })
}

/// Sweeps the trivial branch, brackets and bisects the first crossing,
/// switches onto the bifurcating branch along the kernel direction, and
/// follows it by pseudo-arclength continuation up to `lambda_max`.
pub fn continue_branch(
    dom: &WarpDomain,
    warp: Warp,
    n: usize,
    opts: &ContinuationOptions,
) -> Result<BranchDiagram> {
    if !(opts.lambda_max > opts.lambda_min && opts.sweep_step > 0.0 && opts.step > 0.0) {
        return Err(invalid("bad continuation range or step"));
    }
    if !(0.0..1.0).contains(&opts.min_warp) {
        return Err(invalid("min_warp must lie in [0, 1)"));
    }
    let count = ((opts.lambda_max - opts.lambda_min) / opts.sweep_step).round() as usize;
    let mut trivial = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let l =
            opts.lambda_min + (opts.lambda_max - opts.lambda_min) * k as f64 / count.max(1) as f64;
        trivial.push(trivial_sample(dom, &WarpModel::new(warp, n, l)?)?);
    }
    let k = trivial
        .windows(2)
        .position(|w| w[0].mu_min > 0.0 && w[1].mu_min <= 0.0)
        .ok_or_else(|| invalid("range does not straddle a crossing"))?;
    let crossing = locate_crossing(
        dom,
        warp,
        n,
        trivial[k].lambda,
        trivial[k + 1].lambda,
        1e-12,
    )?;
    let model = WarpModel::new(warp, n, crossing)?;
    let zero = vec![0.0; dom.node_count()];
    let phi = jacobi_eigenpairs(dom, &model, &zero, 1)?.vectors.remove(0);
    let (_, m) = dom.stiffness_mass();
    let mphi = m.mul_vec(&phi);

    // amplitude-parameterized start: ⟨Mφ, u⟩ = s
    let mut branch: Vec<BranchPoint> = Vec::new();
    let mut xs: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in [opts.step, 2.0 * opts.step] {
        let guess = dom.scatter(&phi.iter().map(|v| s * v).collect::<Vec<_>>());
        let lam0 = xs.last().map_or(crossing, |x| x.1);
        let (u, lam, rn) = bordered_newton(dom, &model, &guess, lam0, &mphi, 0.0, s, opts)?;
        xs.push((u.clone(), lam));
        branch.push(branch_point(dom, &model.at(lam)?, u, rn)?);
    }

    let f0 = warp.value(0.0);
    let admissible = |u: &[f64], lam: f64| {
        u.iter()
            .all(|v| v.abs() < opts.max_height && warp.value(lam * v) >= opts.min_warp * f0)
    };
    let mut ds = opts.step;
    let mut failures = 0;
    while branch.last().is_some_and(|p| p.lambda < opts.lambda_max) {
        let (u1, l1) = &xs[xs.len() - 1];
        let (u0, l0) = &xs[xs.len() - 2];
        let du: Vec<f64> = dom
            .gather(u1)
            .iter()
            .zip(dom.gather(u0))
            .map(|(a, b)| a - b)
            .collect();
        let dl = l1 - l0;
        let norm = (dot_vec(&du, &m.mul_vec(&du)) + dl * dl).sqrt();
        let tu: Vec<f64> = du.iter().map(|v| v / norm).collect();
        let tl = dl / norm;
        let mtu = m.mul_vec(&tu);
        let pred_f: Vec<f64> = dom
            .gather(u1)
            .iter()
            .zip(&tu)
            .map(|(a, t)| a + ds * t)
            .collect();
        let pred = dom.scatter(&pred_f);
        let pl = l1 + ds * tl;
        let rhs = dot_vec(&mtu, &pred_f) + tl * pl;
        let result = model
            .at(pl.max(1.0))
            .and_then(|_| bordered_newton(dom, &model, &pred, pl, &mtu, tl, rhs, opts));
        match result {
            Ok((u, lam, rn)) if admissible(&u, lam) => {
                xs.push((u.clone(), lam));
                branch.push(branch_point(dom, &model.at(lam)?, u, rn)?);
                ds = (ds * 1.25).min(opts.max_step);
            }
            Ok(_) => break,
            Err(_) => {
                failures += 1;
                ds *= 0.5;
                if ds < opts.min_step {
                    return Err(Error::NotConverged {
                        what: "pseudo-arclength continuation",
                        iterations: branch.len(),
                        residual: ds,
                    });
                }
            }
        }
    }
    Ok(BranchDiagram {
        trivial,
        crossing,
        kernel: dom.scatter(&phi),
        branch,
        step_failures: failures,
    })
}

/// Least-squares fit `amplitude ∝ (λ − λ*)^p` over branch points with
/// `0 < λ − λ* ≤ window`.
pub fn amplitude_exponent(branch: &[BranchPoint], crossing: f64, window: f64) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = branch
        .iter()
        .filter(|p| p.lambda - crossing > 0.0 && p.lambda - crossing <= window && p.amplitude > 0.0)
        .map(|p| (p.lambda - crossing, p.amplitude))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Fit("fewer than 3 branch points near onset".into()));
    }
    fit_power_law(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversality {
    /// `−2 n λ₁ f''(0) ‖φ₁‖²_M`.
    pub closed_form: f64,
    /// Central difference of `−μ₁(λ)` across `λ₁`, `μ₁` the smallest
    /// trivial-branch Hessian eigenvalue.
    pub fd_slope: f64,
    pub mass_norm_sq: f64,
}

/// Crossing speed of the first Jacobi eigenvalue. Eigenvalues of the
/// Jacobi operator `L_λ` are `−μ`, so both numbers are positive for
/// `f''(0) < 0`.
pub fn transversality(
    dom: &WarpDomain,
    warp: Warp,
    n: usize,
    lambda1: f64,
    phi: &[f64],
    delta: f64,
) -> Result<Transversality> {
    let (_, m) = dom.stiffness_mass();
    let pf = dom.gather(phi);
    let nrm = dot_vec(&pf, &m.mul_vec(&pf));
    let closed_form = -2.0 * n as f64 * lambda1 * warp.second(0.0) * nrm;
    let up = trivial_sample(dom, &WarpModel::new(warp, n, lambda1 + delta)?)?.mu_min;
    let dn = trivial_sample(dom, &WarpModel::new(warp, n, lambda1 - delta)?)?.mu_min;
    Ok(Transversality {
        closed_form,
        fd_slope: -(up - dn) / (2.0 * delta),
        mass_norm_sq: nrm,
    })
}
