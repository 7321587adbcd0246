//! Dirichlet eigenproblem of the Laplace–Beltrami operator on a spherical
//! polygon, indicial exponents, and vertex vanishing-order fits.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::eigen::{smallest_eigenpairs, LanczosOptions};
use crate::error::{invalid, Error, Result};
use crate::fem::{scatter, stiffness_mass};
use crate::math::{
    add, cross, dot, fit_power_law, geodesic_distance, normalize, scale, sub, LineFit, Vec3,
};
use crate::mesh::{interpolate, Locator, Mesh, MeshKind};
use crate::sparse::CsrMatrix;
use crate::tiling::Tiling;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Nodal values on the whole surface mesh, zero on Dirichlet nodes.
    pub phi: Vec<f64>,
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    /// `‖Kφ − λMφ‖ / λ` on the free nodes.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicialExponents {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub ambient_dim: usize,
    pub stratum_dim: usize,
}

/// P1 stiffness and mass matrices of a surface mesh (no boundary
/// conditions applied).
pub fn assemble(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix)> {
    if mesh.kind() != MeshKind::Surface {
        return Err(Error::WrongMeshKind {
            expected: "surface",
        });
    }
    Ok(stiffness_mass(mesh))
}

/// The `count` smallest Dirichlet eigenpairs, ascending.
pub fn dirichlet_eigs(mesh: &Mesh, count: usize) -> Result<Vec<EigenPair>> {
    dirichlet_eigs_with(mesh, count, &LanczosOptions::default())
}

pub fn dirichlet_eigs_with(
    mesh: &Mesh,
    count: usize,
    opts: &LanczosOptions,
) -> Result<Vec<EigenPair>> {
    let (k, m) = assemble(mesh)?;
    let free = mesh.free_nodes();
    if free.len() == mesh.nodes().len() {
        return Err(invalid("mesh has no Dirichlet boundary"));
    }
    if count > free.len() {
        return Err(Error::ModeOutOfRange(count));
    }
    let sol = smallest_eigenpairs(&k.restrict(&free), &m.restrict(&free), count, opts)?;
    Ok(sol
        .values
        .iter()
        .zip(&sol.vectors)
        .zip(&sol.residuals)
        .enumerate()
        .map(|(i, ((&lambda, v), &residual))| EigenPair {
            lambda,
            phi: scatter(mesh.nodes().len(), &free, v),
            index: i + 1,
            residual,
        })
        .collect())
}

/// Roots of `γ(γ + n − m − 2) = λ`.
pub fn indicial_exponents(lambda: f64, n: usize, m: usize) -> Result<IndicialExponents> {
    if m + 2 > n + 1 {
        return Err(invalid("stratum dimension too large for ambient dimension"));
    }
    let a = n as f64 - m as f64 - 2.0;
    let disc = a * a + 4.0 * lambda;
    if disc < 0.0 {
        return Err(Error::Oscillatory(disc));
    }
    let root = 0.5 * disc.sqrt();
    Ok(IndicialExponents {
        gamma_minus: -0.5 * a - root,
        gamma_plus: -0.5 * a + root,
        ambient_dim: n,
        stratum_dim: m,
    })
}

/// Homogeneity `ν` of the harmonic cone function `r^ν φ` over a face with
/// Dirichlet eigenvalue `λ`: the positive root of `ν(ν+1) = λ`.
pub fn frequency_value(lambda: f64) -> f64 {
    -0.5 + (0.25 + lambda).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Estimated convergence order in the halving parameter.
    pub order: f64,
    pub raw: Vec<f64>,
}

/// Richardson extrapolation of three values computed at parameters
/// `h, h/2, h/4`. The order is estimated from the data and falls back to
/// 2 when the differences do not contract.
pub fn richardson(values: &[f64]) -> Result<Extrapolation> {
    if values.len() != 3 {
        return Err(invalid(
            "Richardson extrapolation needs exactly three levels",
        ));
    }
    let (d1, d2) = (values[0] - values[1], values[1] - values[2]);
    let mut p = (d1 / d2).log2();
    if !p.is_finite() || !(0.5..=4.0).contains(&p) {
        p = 2.0;
    }
    let value = values[2] + (values[2] - values[1]) / (2f64.powf(p) - 1.0);
    Ok(Extrapolation {
        value,
        order: p,
        raw: values.to_vec(),
    })
}

/// Local tangent frame at polygon vertex `k`: the first axis runs along
/// the arc toward vertex `k+1`, the second points into the polygon.
fn vertex_frame(mesh: &Mesh, k: usize) -> Result<(Vec3, Vec3, Vec3, f64)> {
    let p = mesh
        .polytope()
        .ok_or_else(|| invalid("mesh carries no polytope"))?;
    let n = p.vertices().len();
    let v = p.vertex3(k);
    let tangent = |x: Vec3| normalize(sub(x, scale(v, dot(x, v))));
    let e1 = tangent(p.vertex3((k + 1) % n));
    let tc = tangent(p.center3());
    let e2 = normalize(sub(tc, scale(e1, dot(tc, e1))));
    Ok((v, e1, e2, p.vertex_angle(k)))
}

/// Point at geodesic polar coordinates `(ρ, θ)` around polygon vertex `k`.
pub fn vertex_polar_point(mesh: &Mesh, k: usize, rho: f64, theta: f64) -> Result<Vec3> {
    let (v, e1, e2, _) = vertex_frame(mesh, k)?;
    let dir = add(scale(e1, theta.cos()), scale(e2, theta.sin()));
    Ok(add(scale(v, rho.cos()), scale(dir, rho.sin())))
}

/// Root-mean-square of the field over geodesic circles around vertex
/// `k`, fitted as `ρ^a` on geometric radii in `[rho_min, rho_max]`.
pub fn vertex_exponent(
    mesh: &Mesh,
    values: &[f64],
    k: usize,
    rho_min: f64,
    rho_max: f64,
) -> Result<LineFit> {
    if !(rho_min > 0.0 && rho_max > rho_min) {
        return Err(invalid("need 0 < rho_min < rho_max"));
    }
    let (_, _, _, alpha) = vertex_frame(mesh, k)?;
    let loc = Locator::new(mesh);
    let (nr, nt) = (12, 48);
    let mut rhos = Vec::with_capacity(nr);
    let mut amps = Vec::with_capacity(nr);
    for i in 0..nr {
        let rho = rho_min * (rho_max / rho_min).powf(i as f64 / (nr - 1) as f64);
        let mut sum = 0.0;
        for j in 0..nt {
            let theta = alpha * (j as f64 + 0.5) / nt as f64;
            let y = vertex_polar_point(mesh, k, rho, theta)?;
            let l = loc
                .locate(y, 1e-8)
                .ok_or_else(|| invalid("sample point outside mesh"))?;
            let f = interpolate(mesh, &l, values);
            sum += f * f;
        }
        rhos.push(rho);
        amps.push((sum / nt as f64).sqrt());
    }
    fit_power_law(&rhos, &amps)
}

/// Inner radius of the vertex exponent fit for nominal mesh size `h`.
pub fn fit_inner_radius(h: f64) -> f64 {
    (4.0 * h).min(0.1)
}

/// Distance from polygon vertex `k` to the nearest other mesh node.
pub fn vertex_spacing(mesh: &Mesh, k: usize) -> Result<f64> {
    let (v, ..) = vertex_frame(mesh, k)?;
    Ok(mesh
        .nodes()
        .iter()
        .map(|x| geodesic_distance(*x, v))
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min))
}

/// Evaluates the odd reflection extension of a field on the base cell of
/// a tiling at any point of the sphere.
pub struct OddExtension<'a> {
    mesh: &'a Mesh,
    values: &'a [f64],
    tiling: &'a Tiling,
    locator: Locator,
}

impl<'a> OddExtension<'a> {
    pub fn new(mesh: &'a Mesh, values: &'a [f64], tiling: &'a Tiling) -> Result<Self> {
        if mesh.kind() != MeshKind::Surface || tiling.dim() != 3 {
            return Err(Error::WrongMeshKind {
                expected: "surface",
            });
        }
        Ok(Self {
            mesh,
            values,
            tiling,
            locator: Locator::new(mesh),
        })
    }

    pub fn eval(&self, y: Vec3) -> Result<f64> {
        let c = self.tiling.classify_point(&y)?;
        let g = &self.tiling.group()[c.element];
        let b = g.apply_inverse(&y);
        let l = self
            .locator
            .locate([b[0], b[1], b[2]], 1e-8)
            .ok_or_else(|| invalid("pulled-back point outside base mesh"))?;
        Ok(c.parity as f64 * interpolate(self.mesh, &l, self.values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantReport {
    /// Largest `|φ|` on face nodes; the odd extension is continuous iff 0.
    pub face_trace_max: f64,
    /// Largest jump of the odd extension sampled across cell faces.
    pub face_jump_max: f64,
    /// Fitted vanishing exponent at each polygon vertex.
    pub vertex_exponents: Vec<LineFit>,
}

/// Checks the odd reflection extension of an eigenfunction across the
/// faces of the tiling and fits its vanishing order at every vertex over
/// geodesic radii `[min(4h, 0.1), 0.2]`. Interpolation error relative to
/// the field grows like `h²/ρ` on graded meshes, so the inner radius
/// scales with the nominal size rather than the local spacing.
pub fn equivariant_check(
    mesh: &Mesh,
    pair: &EigenPair,
    tiling: &Tiling,
) -> Result<EquivariantReport> {
    let face_trace_max = (0..mesh.nodes().len())
        .filter(|&i| mesh.is_on_faces(i))
        .map(|i| pair.phi[i].abs())
        .fold(0.0, f64::max);
    let ext = OddExtension::new(mesh, &pair.phi, tiling)?;
    let p = mesh
        .polytope()
        .ok_or_else(|| invalid("mesh carries no polytope"))?;
    let nv = p.vertices().len();
    // straddle each arc at a few points: values on both sides must agree
    // with the trace, i.e. both tend to zero
    let mut face_jump_max: f64 = 0.0;
    for k in 0..nv {
        let (a, b) = (p.vertex3(k), p.vertex3((k + 1) % nv));
        let normal = normalize(cross(a, b));
        for s in [0.25, 0.5, 0.75] {
            let x = normalize(add(scale(a, 1.0 - s), scale(b, s)));
            let d = 1e-9;
            let inside = ext.eval(normalize(add(x, scale(normal, d))))?;
            let outside = ext.eval(normalize(add(x, scale(normal, -d))))?;
            face_jump_max = face_jump_max.max((inside - outside).abs());
        }
    }
    let mut vertex_exponents = Vec::with_capacity(nv);
    let rho_min = fit_inner_radius(mesh.h());
    for k in 0..nv {
        vertex_exponents.push(vertex_exponent(mesh, &pair.phi, k, rho_min, 0.2)?);
    }
    Ok(EquivariantReport {
        face_trace_max,
        face_jump_max,
        vertex_exponents,
    })
}
