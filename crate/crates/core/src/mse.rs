//! Minimal surface equation `div(∇u / √(1+|∇u|²)) = 0` on a tetrahedral
//! mesh: weak residual, area functional, Newton solver with amplitude
//! continuation, barrier and decay diagnostics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fem::{dot_vec, stiffness_mass};
use crate::harmonic::VolumeField;
use crate::math::{
    add, compensated_sum, dot, fit_power_law, norm, normalize, scale, sub, LineFit, Vec3,
};
use crate::mesh::{basis_gradients, element_centroid, Mesh, MeshKind, Tag};
use crate::sparse::{pcg, CsrMatrix};

/// Per-element basis gradients and volumes plus the CSR slot of every
/// local matrix entry, shared by all assemblies on one mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    grads: Vec<[Vec3; 4]>,
    vols: Vec<f64>,
    conn: Vec<[usize; 4]>,
    pattern: CsrMatrix,
    slots: Vec<[usize; 16]>,
    free: Vec<usize>,
    dirichlet: Vec<bool>,
}

impl Assembler {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        if mesh.kind() != MeshKind::Volume {
            return Err(Error::WrongMeshKind { expected: "volume" });
        }
        let (pattern, _) = stiffness_mass(mesh);
        let ne = mesh.element_count();
        let mut grads = Vec::with_capacity(ne);
        let mut vols = Vec::with_capacity(ne);
        let mut conn = Vec::with_capacity(ne);
        let mut slots = Vec::with_capacity(ne);
        for e in 0..ne {
            let el = mesh.element(e);
            let c = [el[0], el[1], el[2], el[3]];
            grads.push(basis_gradients(mesh, e));
            vols.push(mesh.element_measure(e).abs());
            let mut s = [0usize; 16];
            for a in 0..4 {
                let row = &pattern.col_idx[pattern.row_ptr[c[a]]..pattern.row_ptr[c[a] + 1]];
                for b in 0..4 {
                    s[a * 4 + b] =
                        pattern.row_ptr[c[a]] + row.binary_search(&c[b]).expect("pattern slot");
                }
            }
            conn.push(c);
            slots.push(s);
        }
        let dirichlet: Vec<bool> = (0..mesh.nodes().len())
            .map(|i| mesh.is_dirichlet(i))
            .collect();
        Ok(Self {
            grads,
            vols,
            conn,
            pattern,
            slots,
            free: mesh.free_nodes(),
            dirichlet,
        })
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    fn gradient(&self, e: usize, u: &[f64]) -> Vec3 {
        let mut g = [0.0; 3];
        for a in 0..4 {
            g = add(g, scale(self.grads[e][a], u[self.conn[e][a]]));
        }
        g
    }

    /// Discrete area `Σ_e |e| √(1 + |∇u|²)`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        // compensated so that finite differences of the area stay accurate
        compensated_sum((0..self.vols.len()).map(|e| {
            let g = self.gradient(e, u);
            self.vols[e] * (1.0 + dot(g, g)).sqrt()
        }))
    }

    /// Weak residual `R_i = Σ_e |e| ∇u·∇φ_i / W`, zero on Dirichlet rows.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; u.len()];
        for e in 0..self.vols.len() {
            let g = self.gradient(e, u);
            let w = self.vols[e] / (1.0 + dot(g, g)).sqrt();
            for a in 0..4 {
                r[self.conn[e][a]] += w * dot(g, self.grads[e][a]);
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if *d {
                r[i] = 0.0;
            }
        }
        r
    }

    /// Jacobian of the unconstrained residual (symmetric positive definite
    /// on the free rows).
    pub fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        let mut j = self.pattern.clone();
        j.vals.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.vols.len() {
            let g = self.gradient(e, u);
            let w2 = 1.0 + dot(g, g);
            let w = w2.sqrt();
            let (c1, c3) = (self.vols[e] / w, self.vols[e] / (w * w2));
            let gd: [f64; 4] = core::array::from_fn(|a| dot(g, self.grads[e][a]));
            for a in 0..4 {
                for b in 0..4 {
                    j.vals[self.slots[e][a * 4 + b]] +=
                        c1 * dot(self.grads[e][a], self.grads[e][b]) - c3 * gd[a] * gd[b];
                }
            }
        }
        j
    }

    fn free_norm(&self, r: &[f64]) -> f64 {
        self.free.iter().map(|&i| r[i] * r[i]).sum::<f64>().sqrt()
    }
}

/// Weak residual of the minimal surface operator at nodal field `u`.
pub fn mse_residual(mesh: &Mesh, u: &[f64]) -> Result<Vec<f64>> {
    Ok(Assembler::new(mesh)?.residual(u))
}

/// Discrete area functional.
pub fn area_functional(mesh: &Mesh, u: &[f64]) -> Result<f64> {
    Ok(Assembler::new(mesh)?.energy(u))
}

/// Dirichlet data: nodal values (used on tagged nodes) times an amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub generator: String,
}

impl BoundaryData {
    /// Checks that the data vanishes on face, edge and apex nodes of a cone
    /// mesh.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.nodes().len() {
            return Err(invalid("boundary data must be a full nodal vector"));
        }
        if !self.epsilon.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        for i in 0..mesh.nodes().len() {
            if mesh.is_on_faces(i) && self.values[i].abs() > 1e-10 {
                return Err(invalid("boundary data must vanish on flat faces and edges"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseOptions {
    /// Target Euclidean norm of the free-row weak residual.
    pub tolerance: f64,
    pub max_newton: usize,
    /// Amplitude increment between continuation levels.
    pub step: f64,
}

impl Default for MseOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_newton: 40,
            step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// Amplitudes of the continuation levels attempted.
    pub continuation: Vec<f64>,
    /// Residual norm after each Newton step, per level.
    pub residual_history: Vec<Vec<f64>>,
    /// Line-search factors accepted, per level.
    pub damping: Vec<Vec<f64>>,
    pub linear_iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Amplitude of the last converged level.
    pub last_good: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseSolution {
    pub field: VolumeField,
    pub report: SolveReport,
}

/// Solves the minimal surface equation with `u = ε g` on Dirichlet nodes by
/// damped Newton, ramping the amplitude from 0 to `ε` in increments of
/// `opts.step`. On failure the last converged level is returned with
/// `report.converged == false`.
pub fn solve_mse(mesh: &Mesh, data: &BoundaryData, opts: &MseOptions) -> Result<MseSolution> {
    if mesh.polytope().is_some() {
        data.validate(mesh)?;
    } else if data.values.len() != mesh.nodes().len() {
        return Err(invalid("boundary data must be a full nodal vector"));
    }
    if !(opts.step > 0.0) || !(opts.tolerance > 0.0) {
        return Err(invalid("continuation step and tolerance must be positive"));
    }
    let asm = Assembler::new(mesh)?;
    let n = mesh.nodes().len();
    let target = data.epsilon;
    let levels = if target == 0.0 {
        1
    } else {
        ((target.abs() / opts.step).ceil() as usize).max(1)
    };
    let mut report = SolveReport::default();
    let mut u = vec![0.0; n];
    let mut prev = (0.0, vec![0.0; n]);
    for level in 1..=levels {
        let eps = target * level as f64 / levels as f64;
        report.continuation.push(eps);
        // secant predictor from the last two levels
        let mut trial: Vec<f64> = if prev.0 != 0.0 {
            u.iter()
                .zip(&prev.1)
                .map(|(a, b)| a + (a - b) * (eps - report.last_good) / (report.last_good - prev.0))
                .collect()
        } else if report.last_good != 0.0 {
            u.iter().map(|a| a * eps / report.last_good).collect()
        } else {
            u.clone()
        };
        for i in 0..n {
            if asm.dirichlet[i] {
                trial[i] = eps * data.values[i];
            }
        }
        if report.last_good == 0.0 && !harmonic_predictor(&asm, &mut trial) {
            report.final_residual = asm.free_norm(&asm.residual(&u));
            return Ok(MseSolution {
                field: field(u),
                report,
            });
        }
        let (ok, hist, damp, lin) = newton(&asm, &mut trial, opts);
        report.residual_history.push(hist);
        report.damping.push(damp);
        report.linear_iterations += lin;
        if !ok {
            report.final_residual = asm.free_norm(&asm.residual(&u));
            report.converged = false;
            return Ok(MseSolution {
                field: field(u),
                report,
            });
        }
        prev = (report.last_good, core::mem::replace(&mut u, trial));
        report.last_good = eps;
    }
    report.final_residual = asm.free_norm(&asm.residual(&u));
    report.converged = true;
    Ok(MseSolution {
        field: field(u),
        report,
    })
}

fn field(values: Vec<f64>) -> VolumeField {
    let nodes = values.len();
    VolumeField {
        values,
        nodes,
        torus_points: Vec::new(),
        origin: "solve_mse",
    }
}

/// Replaces the free values of `u` by the discrete harmonic extension of
/// its Dirichlet values (the linearization of the equation at 0).
fn harmonic_predictor(asm: &Assembler, u: &mut [f64]) -> bool {
    let mut d = u.to_vec();
    for &i in &asm.free {
        d[i] = 0.0;
    }
    if d.iter().all(|v| *v == 0.0) {
        return true;
    }
    let k = asm.jacobian(&vec![0.0; u.len()]);
    let kd = k.mul_vec(&d);
    let rhs: Vec<f64> = asm.free.iter().map(|&i| -kd[i]).collect();
    let mut x = vec![0.0; rhs.len()];
    if pcg(
        &k.restrict(&asm.free),
        &rhs,
        &mut x,
        LINEAR_TOL,
        20 * rhs.len() + 200,
    )
    .is_err()
    {
        return false;
    }
    for (&i, v) in asm.free.iter().zip(x) {
        u[i] = v;
    }
    true
}

/// Relative tolerance of the inner conjugate gradient solves.
const LINEAR_TOL: f64 = 1e-8;

fn newton(asm: &Assembler, u: &mut [f64], opts: &MseOptions) -> (bool, Vec<f64>, Vec<f64>, usize) {
    let mut r = asm.residual(u);
    let mut rn = asm.free_norm(&r);
    let mut hist = vec![rn];
    let mut damp = Vec::new();
    let mut lin = 0;
    for _ in 0..opts.max_newton {
        if rn <= opts.tolerance {
            return (true, hist, damp, lin);
        }
        let j = asm.jacobian(u).restrict(&asm.free);
        let rhs: Vec<f64> = asm.free.iter().map(|&i| -r[i]).collect();
        let mut du = vec![0.0; rhs.len()];
        // Loose inner solves leave high-frequency errors that can tilt tiny
        // graded elements toward vertical, where the Jacobian degenerates;
        // a tight fixed forcing term avoids that.
        let rhs_norm = crate::math::norm_slice(&rhs);
        let eta = LINEAR_TOL
            .max(0.01 * opts.tolerance / rhs_norm.max(1e-300))
            .min(1e-2);
        match pcg(&j, &rhs, &mut du, eta, 20 * rhs.len() + 200) {
            Ok(st) => lin += st.iterations,
            Err(_) => return (false, hist, damp, lin),
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut cand = u.to_vec();
            for (k, &i) in asm.free.iter().enumerate() {
                cand[i] += t * du[k];
            }
            let rc = asm.residual(&cand);
            let cn = asm.free_norm(&rc);
            if cn < rn {
                u.copy_from_slice(&cand);
                r = rc;
                rn = cn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (rn <= opts.tolerance, hist, damp, lin);
        }
        damp.push(t);
        hist.push(rn);
    }
    (rn <= opts.tolerance, hist, damp, lin)
}

/// Fraction of the dihedral angle added to the barrier sector.
pub const BARRIER_EPS_FRACTION: f64 = 0.05;
/// Default radius of the barrier neighborhood around an edge.
pub const BARRIER_RADIUS: f64 = 0.3;

/// Cylindrical coordinates `(t, ρ, θ)` around cone edge `k`: `t` along the
/// edge, `ρ` distance to it, `θ` angle from the bisector of the two faces.
pub fn edge_coordinates(mesh: &Mesh, k: usize, x: Vec3) -> Result<(f64, f64, f64)> {
    let p = mesh
        .polytope()
        .ok_or_else(|| invalid("mesh carries no polytope"))?;
    let nv = p.vertices().len();
    if k >= nv {
        return Err(invalid("edge index out of range"));
    }
    let v = p.vertex3(k);
    let perp = |y: Vec3| normalize(sub(y, scale(v, dot(y, v))));
    let wa = perp(p.vertex3((k + 1) % nv));
    let wb = perp(p.vertex3((k + nv - 1) % nv));
    let bis = normalize(add(wa, wb));
    let side = normalize(sub(wa, scale(bis, dot(wa, bis))));
    let t = dot(x, v);
    let q = sub(x, scale(v, t));
    let rho = norm(q);
    // on the edge itself the angle is noise; use the bisector
    let theta = if rho < 1e-12 {
        0.0
    } else {
        dot(q, side).atan2(dot(q, bis))
    };
    Ok((t, rho, theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierReport {
    pub passed: bool,
    /// Smallest `v − |u|` over checked nodes.
    pub margin: f64,
    pub nodes_checked: usize,
}

fn barrier_value(rho: f64, theta: f64, beta: f64, gamma: f64, b: f64) -> f64 {
    let eps = BARRIER_EPS_FRACTION * beta;
    b * rho.powf(gamma) * (core::f64::consts::PI * theta / (beta + eps)).cos()
}

fn check_barrier_exponent(beta: f64, gamma: f64) -> Result<()> {
    if !(beta > 0.0 && beta < core::f64::consts::PI) {
        return Err(invalid("dihedral angle must lie in (0, π)"));
    }
    if !(gamma > 1.0 && gamma < core::f64::consts::PI / beta) {
        return Err(invalid("barrier exponent must lie in (1, π/β)"));
    }
    Ok(())
}

/// Compares `|u|` with `v = B ρ^γ cos(πθ/(β+ε))` on nodes within `ρ ≤ r0`
/// of cone edge `k`.
pub fn barrier_check(
    mesh: &Mesh,
    u: &[f64],
    k: usize,
    beta: f64,
    gamma: f64,
    b: f64,
    r0: f64,
) -> Result<BarrierReport> {
    check_barrier_exponent(beta, gamma)?;
    let mut margin = f64::INFINITY;
    let mut count = 0;
    for (i, x) in mesh.nodes().iter().enumerate() {
        let (t, rho, theta) = edge_coordinates(mesh, k, *x)?;
        if t <= 0.0 || rho > r0 {
            continue;
        }
        count += 1;
        margin = margin.min(barrier_value(rho, theta, beta, gamma, b) - u[i].abs());
    }
    if count == 0 {
        return Err(invalid("no nodes near the edge"));
    }
    Ok(BarrierReport {
        passed: margin >= -1e-12,
        margin,
        nodes_checked: count,
    })
}

/// Smallest barrier amplitude dominating `|u|` on the outer band
/// `ρ ∈ [r0/2, r0]` around edge `k`.
pub fn barrier_amplitude(
    mesh: &Mesh,
    u: &[f64],
    k: usize,
    beta: f64,
    gamma: f64,
    r0: f64,
) -> Result<f64> {
    check_barrier_exponent(beta, gamma)?;
    let mut b: f64 = 0.0;
    for (i, x) in mesh.nodes().iter().enumerate() {
        let (t, rho, theta) = edge_coordinates(mesh, k, *x)?;
        if t > 0.0 && rho >= 0.5 * r0 && rho <= r0 {
            b = b.max(u[i].abs() / barrier_value(rho, theta, beta, gamma, 1.0));
        }
    }
    Ok(b)
}

/// Fit `|∇u| ~ d^α` against distance `d` to cone edge `k`, over elements
/// with centroid in `d ∈ [d_min, d_max]` and edge coordinate
/// `t ∈ [0.3, 0.8]` (away from the apex and the cap).
pub fn gradient_decay_fit(
    mesh: &Mesh,
    u: &[f64],
    k: usize,
    d_min: f64,
    d_max: f64,
) -> Result<LineFit> {
    if !(d_min > 0.0 && d_max > d_min) {
        return Err(invalid("need 0 < d_min < d_max"));
    }
    let bins = 10;
    let mut acc = vec![(0.0, 0.0, 0.0); bins];
    for e in 0..mesh.element_count() {
        let c = element_centroid(mesh, e);
        let (t, d, _) = edge_coordinates(mesh, k, c)?;
        if !(0.3..=0.8).contains(&t) || d < d_min || d > d_max {
            continue;
        }
        let g = crate::mesh::element_gradient(mesh, e, u);
        let w = mesh.element_measure(e).abs();
        let b = (((d / d_min).ln() / (d_max / d_min).ln()) * bins as f64).floor() as usize;
        let s = &mut acc[b.min(bins - 1)];
        s.0 += w;
        s.1 += w * d.ln();
        s.2 += w * dot(g, g);
    }
    let (ds, gs): (Vec<f64>, Vec<f64>) = acc
        .iter()
        .filter(|s| s.0 > 0.0)
        .map(|s| ((s.1 / s.0).exp(), (s.2 / s.0).sqrt()))
        .unzip();
    if ds.len() < 3 {
        return Err(Error::Fit("too few samples near the edge".into()));
    }
    fit_power_law(&ds, &gs)
}

/// `‖a − b‖` in the lumped-mass L² norm.
pub fn mass_distance(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let m = mesh.lumped_mass();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    dot_vec(&d, &m).sqrt()
}

/// Nodes on the cap of a cone mesh that are not on a face.
pub fn cap_interior_nodes(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.nodes().len())
        .filter(|&i| mesh.has_tag(i, Tag::Cap) && !mesh.is_on_faces(i))
        .collect()
}
