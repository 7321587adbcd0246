//! Harmonic extension of modal boundary data into the cone `C₁(P)` and
//! into the cylinder `C₁(P) × T^N`, plus a direct finite element solve used
//! to cross-check the modal construction.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fem::stiffness_mass;
use crate::math::{fit_power_law, norm, scale, LineFit, Vec3};
use crate::mesh::{interpolate, Locator, Mesh, MeshKind, Tag};
use crate::sparse::pcg;
use crate::spectral::{frequency_value, EigenPair};

/// Angular factor of a torus Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalTerm {
    /// 1-based eigenmode index on the polygon.
    pub mode: usize,
    /// Torus frequency; empty when there is no torus factor.
    pub k: Vec<i64>,
    pub phase: Phase,
    pub coefficient: f64,
}

/// Finite modal expansion of boundary data on the cap (times the torus).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalBoundaryData {
    torus_dim: usize,
    terms: Vec<ModalTerm>,
}

impl ModalBoundaryData {
    pub fn new(torus_dim: usize) -> Self {
        Self {
            torus_dim,
            terms: Vec::new(),
        }
    }

    /// Single cone mode `a φ_ℓ` without torus dependence.
    pub fn single(mode: usize, coefficient: f64) -> Self {
        let mut d = Self::new(0);
        d.terms.push(ModalTerm {
            mode,
            k: Vec::new(),
            phase: Phase::Cos,
            coefficient,
        });
        d
    }

    pub fn push(&mut self, term: ModalTerm) -> Result<()> {
        if term.k.len() != self.torus_dim {
            return Err(invalid("torus frequency has wrong dimension"));
        }
        if term.mode == 0 {
            return Err(Error::ModeOutOfRange(0));
        }
        if !term.coefficient.is_finite() {
            return Err(invalid("coefficient must be finite"));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    pub fn terms(&self) -> &[ModalTerm] {
        &self.terms
    }

    /// `α self + β other`, term by term.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.torus_dim != other.torus_dim {
            return Err(invalid("torus dimensions differ"));
        }
        let mut out = Self::new(self.torus_dim);
        for (t, s) in self
            .terms
            .iter()
            .map(|t| (t, alpha))
            .chain(other.terms.iter().map(|t| (t, beta)))
        {
            out.terms.push(ModalTerm {
                coefficient: s * t.coefficient,
                ..t.clone()
            });
        }
        Ok(out)
    }
}

/// Nodal field on a cone mesh, optionally times a torus grid. Values are
/// stored torus-point major: `values[g * nodes + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub values: Vec<f64>,
    pub nodes: usize,
    /// Points per torus factor; empty without a torus.
    pub torus_points: Vec<usize>,
    /// Operation that produced the field.
    pub origin: &'static str,
}

impl VolumeField {
    pub fn slice(&self, g: usize) -> &[f64] {
        &self.values[g * self.nodes..(g + 1) * self.nodes]
    }
}

/// Eigenmodes on the polygon, evaluated at directions `y ∈ S²`.
pub trait AngularModes {
    fn count(&self) -> usize;
    /// Eigenvalue of 1-based mode `l`.
    fn eigenvalue(&self, l: usize) -> f64;
    fn eval(&self, l: usize, y: Vec3) -> Result<f64>;
}

/// Finite element eigenpairs interpolated on their surface mesh.
pub struct MeshModes<'a> {
    mesh: &'a Mesh,
    eigs: &'a [EigenPair],
    locator: Locator,
}

impl<'a> MeshModes<'a> {
    pub fn new(mesh: &'a Mesh, eigs: &'a [EigenPair]) -> Result<Self> {
        if mesh.kind() != MeshKind::Surface {
            return Err(Error::WrongMeshKind {
                expected: "surface",
            });
        }
        Ok(Self {
            mesh,
            eigs,
            locator: Locator::new(mesh),
        })
    }
}

impl AngularModes for MeshModes<'_> {
    fn count(&self) -> usize {
        self.eigs.len()
    }

    fn eigenvalue(&self, l: usize) -> f64 {
        self.eigs[l - 1].lambda
    }

    fn eval(&self, l: usize, y: Vec3) -> Result<f64> {
        let loc = self
            .locator
            .locate(y, 1e-8)
            .ok_or_else(|| invalid("direction outside the polygon mesh"))?;
        Ok(interpolate(self.mesh, &loc, &self.eigs[l - 1].phi))
    }
}

/// Largest supported `|k| r` in the torus profile.
pub const BESSEL_ARGUMENT_LIMIT: f64 = 500.0;

/// `Σ_j (x²/4)^j / (j! (ν+1)_j)`, the entire part of `I_ν(x) (x/2)^{-ν} Γ(ν+1)`.
fn bessel_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    loop {
        j += 1.0;
        term *= q / (j * (nu + j));
        sum += term;
        if term < 1e-17 * sum && j > 0.5 * x {
            return sum;
        }
    }
}

/// Regular solution of `u'' + 2u'/r − λu/r² − |k|²u = 0` normalized to
/// `u(1) = 1`: `r^{γ⁺}` for `k = 0`, otherwise
/// `r^{-1/2} I_ν(|k| r) / I_ν(|k|)` with `ν = √(λ + 1/4)`.
pub fn radial_profile_torus(lambda: f64, k_norm: f64, r: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid("eigenvalue must be positive"));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid("radius must lie in [0, 1]"));
    }
    let gamma = frequency_value(lambda);
    if k_norm == 0.0 {
        return Ok(r.powf(gamma));
    }
    if !(k_norm > 0.0) || k_norm > BESSEL_ARGUMENT_LIMIT {
        return Err(Error::BesselRange(k_norm));
    }
    let nu = (lambda + 0.25).sqrt();
    Ok(r.powf(gamma) * bessel_series(nu, k_norm * r) / bessel_series(nu, k_norm))
}

/// Flat torus `(ℝ / 2π s ℤ)^N` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    pub points: Vec<usize>,
    /// Period of each factor is `2π · scale`.
    pub scale: f64,
}

impl TorusGrid {
    pub fn new(points: Vec<usize>, scale: f64) -> Result<Self> {
        if points.is_empty() || points.contains(&0) || !(scale > 0.0) {
            return Err(invalid("torus grid needs positive point counts and scale"));
        }
        Ok(Self { points, scale })
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of flattened grid point `g` (first factor slowest).
    pub fn point(&self, mut g: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.points.len()];
        for d in (0..self.points.len()).rev() {
            let n = self.points[d];
            z[d] = 2.0 * core::f64::consts::PI * self.scale * (g % n) as f64 / n as f64;
            g /= n;
        }
        z
    }
}

fn check_modes(modes: &dyn AngularModes, data: &ModalBoundaryData) -> Result<()> {
    for t in data.terms() {
        if t.mode == 0 || t.mode > modes.count() {
            return Err(Error::ModeOutOfRange(t.mode));
        }
    }
    Ok(())
}

/// Value of the modal extension at `x` in the cone and torus point `z`.
pub fn evaluate_extension(
    modes: &dyn AngularModes,
    data: &ModalBoundaryData,
    torus_scale: f64,
    x: Vec3,
    z: &[f64],
) -> Result<f64> {
    check_modes(modes, data)?;
    let r = norm(x);
    if r == 0.0 {
        return Ok(0.0);
    }
    if r > 1.0 + 1e-12 {
        return Err(invalid("point outside the unit ball"));
    }
    let y = scale(x, 1.0 / r);
    let r = r.min(1.0);
    let mut sum = 0.0;
    for t in data.terms() {
        let kz: f64 =
            t.k.iter()
                .zip(z)
                .map(|(k, z)| *k as f64 * z / torus_scale)
                .sum();
        let kn =
            t.k.iter()
                .map(|k| (*k as f64 / torus_scale).powi(2))
                .sum::<f64>()
                .sqrt();
        let phase = match t.phase {
            Phase::Cos => kz.cos(),
            Phase::Sin => kz.sin(),
        };
        sum += t.coefficient
            * radial_profile_torus(modes.eigenvalue(t.mode), kn, r)?
            * phase
            * modes.eval(t.mode, y)?;
    }
    Ok(sum)
}

/// Nodal evaluation of `Σ a_ℓ r^{γ_ℓ⁺} φ_ℓ(y)` on a cone mesh.
pub fn poisson_extend(
    modes: &dyn AngularModes,
    data: &ModalBoundaryData,
    cone: &Mesh,
) -> Result<VolumeField> {
    if data.torus_dim() != 0 {
        return Err(invalid(
            "data carries torus frequencies; use the torus extension",
        ));
    }
    if cone.kind() != MeshKind::Volume {
        return Err(Error::WrongMeshKind { expected: "volume" });
    }
    check_modes(modes, data)?;
    let values = cone
        .nodes()
        .iter()
        .map(|x| evaluate_extension(modes, data, 1.0, *x, &[]))
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeField {
        values,
        nodes: cone.nodes().len(),
        torus_points: Vec::new(),
        origin: "poisson_extend",
    })
}

/// Nodal evaluation of the modal extension on `C₁(P) × T^N`.
pub fn poisson_extend_torus(
    modes: &dyn AngularModes,
    data: &ModalBoundaryData,
    cone: &Mesh,
    torus: &TorusGrid,
) -> Result<VolumeField> {
    if data.torus_dim() != torus.points.len() {
        return Err(invalid("torus grid and data dimensions differ"));
    }
    if cone.kind() != MeshKind::Volume {
        return Err(Error::WrongMeshKind { expected: "volume" });
    }
    check_modes(modes, data)?;
    let n = cone.nodes().len();
    let mut values = Vec::with_capacity(n * torus.len());
    for g in 0..torus.len() {
        let z = torus.point(g);
        for x in cone.nodes() {
            values.push(evaluate_extension(modes, data, torus.scale, *x, &z)?);
        }
    }
    Ok(VolumeField {
        values,
        nodes: n,
        torus_points: torus.points.clone(),
        origin: "poisson_extend_torus",
    })
}

/// Relative residual target of the direct solve.
pub const DIRECT_SOLVE_TOL: f64 = 1e-10;

/// P1 harmonic function on a cone mesh with zero on faces, edges and apex
/// and the given nodal values on the cap.
pub fn direct_harmonic_solve(cone: &Mesh, cap_data: &[f64]) -> Result<VolumeField> {
    if cone.kind() != MeshKind::Volume {
        return Err(Error::WrongMeshKind { expected: "volume" });
    }
    let n = cone.nodes().len();
    if cap_data.len() != n {
        return Err(invalid("cap data must be a full nodal vector"));
    }
    let mut u = vec![0.0; n];
    for i in 0..n {
        if cone.has_tag(i, Tag::Cap) {
            if cone.is_on_faces(i) {
                if cap_data[i].abs() > 1e-8 {
                    return Err(invalid(
                        "cap data must vanish where the cap meets a flat face",
                    ));
                }
            } else {
                u[i] = cap_data[i];
            }
        }
    }
    let (k, _) = stiffness_mass(cone);
    let free = cone.free_nodes();
    let ku = k.mul_vec(&u);
    let rhs: Vec<f64> = free.iter().map(|&i| -ku[i]).collect();
    let kf = k.restrict(&free);
    let mut x = vec![0.0; free.len()];
    if rhs.iter().any(|v| *v != 0.0) {
        pcg(&kf, &rhs, &mut x, DIRECT_SOLVE_TOL, 20 * free.len() + 100)?;
    }
    for (&i, v) in free.iter().zip(x) {
        u[i] = v;
    }
    Ok(VolumeField {
        values: u,
        nodes: n,
        torus_points: Vec::new(),
        origin: "direct_harmonic_solve",
    })
}

/// Largest `|u|` on face, edge and apex nodes. The odd reflection of `u`
/// across the faces is continuous exactly when this vanishes.
pub fn odd_extension_defect(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.nodes().len())
        .filter(|&i| mesh.is_on_faces(i))
        .map(|i| values[i].abs())
        .fold(0.0, f64::max)
}

/// Groups nodes into radial shells: exact layers when the mesh has few
/// distinct radii, geometric bins otherwise. Returns `(radius, rms)` for
/// shells inside `[r_min, r_max]`, RMS weighted by lumped mass.
pub fn radial_rms(mesh: &Mesh, values: &[f64], r_min: f64, r_max: f64) -> Vec<(f64, f64)> {
    let mass = mesh.lumped_mass();
    let mut idx: Vec<(f64, usize)> = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, x)| (norm(*x), i))
        .filter(|(r, _)| *r >= r_min * (1.0 - 1e-9) && *r <= r_max * (1.0 + 1e-9))
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shells: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NAN;
    for (r, i) in &idx {
        if (r - last).abs() <= 1e-9 * r.max(1e-300) {
            shells.last_mut().unwrap().push(*i);
        } else {
            shells.push(vec![*i]);
            last = *r;
        }
    }
    if shells.len() > 400 {
        let bins = 16;
        shells = vec![Vec::new(); bins];
        for (r, i) in &idx {
            let t = ((r / r_min).ln() / (r_max / r_min).ln() * bins as f64).floor() as usize;
            shells[t.min(bins - 1)].push(*i);
        }
        shells.retain(|s| !s.is_empty());
    }
    shells
        .iter()
        .map(|s| {
            let w: f64 = s.iter().map(|&i| mass[i]).sum();
            let lr: f64 = s
                .iter()
                .map(|&i| mass[i] * norm(mesh.node(i)).ln())
                .sum::<f64>()
                / w;
            let ms: f64 = s
                .iter()
                .map(|&i| mass[i] * values[i] * values[i])
                .sum::<f64>()
                / w;
            (lr.exp(), ms.sqrt())
        })
        .collect()
}

/// Power-law fit `rms(r) ~ r^a` of a nodal field over `[r_min, r_max]`.
pub fn radial_decay_fit(mesh: &Mesh, values: &[f64], r_min: f64, r_max: f64) -> Result<LineFit> {
    let shells = radial_rms(mesh, values, r_min, r_max);
    let (rs, amps): (Vec<f64>, Vec<f64>) = shells.into_iter().unzip();
    fit_power_law(&rs, &amps)
}
