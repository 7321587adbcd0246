//! Two-valued fields obtained by odd reflection of a fundamental-cell
//! solution, Almgren frequency, and branch-ray asymptotics.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::harmonic::odd_extension_defect;
use crate::math::{
    add, cross, dot, fit_power_law, gauss_legendre, norm, normalize, scale, sub, LineFit, Vec3,
};
use crate::mesh::{element_gradient, interpolate, Locator, Mesh, MeshKind, Tag};
use crate::tiling::{GroupElement, Tiling};

fn to3(v: &[f64]) -> Vec3 {
    [v[0], v[1], v[2]]
}

fn apply_inverse(g: &GroupElement, x: Vec3) -> Vec3 {
    to3(&g.apply_inverse(&x))
}

/// Result of evaluating a two-valued field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub cell: usize,
    pub parity: i8,
    /// The point lies on the branch locus (odd skeleton or apex).
    pub on_branch: bool,
}

/// A solution on the cone over the base cell of a tiling, extended to the
/// unit ball by odd reflection: `ũ(x) = parity(g) u(g⁻¹x)`.
pub struct TwoValuedField<'a> {
    mesh: &'a Mesh,
    values: &'a [f64],
    tiling: &'a Tiling,
    locator: Locator,
    branch_dirs: Vec<Vec3>,
    cap_sagitta: f64,
}

impl<'a> TwoValuedField<'a> {
    pub fn new(mesh: &'a Mesh, values: &'a [f64], tiling: &'a Tiling) -> Result<Self> {
        if mesh.kind() != MeshKind::Volume || tiling.dim() != 3 {
            return Err(Error::WrongMeshKind { expected: "volume" });
        }
        if values.len() != mesh.nodes().len() {
            return Err(invalid("field length does not match the mesh"));
        }
        if odd_extension_defect(mesh, values) > 1e-10 {
            return Err(invalid("field must vanish on the flat faces"));
        }
        let branch_dirs = tiling
            .odd_skeleton()
            .iter()
            .filter(|f| f.vertices.len() == 1)
            .map(|f| to3(&tiling.vertices()[f.vertices[0]]))
            .collect();
        // largest gap between the cap chords and the unit sphere
        let mut chord: f64 = 0.0;
        for el in mesh.elements() {
            for a in 0..4 {
                for b in a + 1..4 {
                    if mesh.has_tag(el[a], Tag::Cap) && mesh.has_tag(el[b], Tag::Cap) {
                        chord = chord.max(norm(sub(mesh.node(el[a]), mesh.node(el[b]))));
                    }
                }
            }
        }
        let cap_sagitta = 0.125 * chord * chord;
        Ok(Self {
            mesh,
            values,
            tiling,
            locator: Locator::new(mesh),
            branch_dirs,
            cap_sagitta,
        })
    }

    pub fn tiling(&self) -> &Tiling {
        self.tiling
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        self.values
    }

    /// Directions of the branch rays (odd-skeleton vertices).
    pub fn branch_directions(&self) -> &[Vec3] {
        &self.branch_dirs
    }

    pub fn eval(&self, x: Vec3) -> Result<Evaluation> {
        let r = norm(x);
        if r > 1.0 + 1e-12 {
            return Err(invalid("point outside the unit ball"));
        }
        if r < 1e-14 {
            return Ok(Evaluation {
                value: 0.0,
                cell: self.tiling.base_cell_index(),
                parity: 1,
                on_branch: true,
            });
        }
        let y = scale(x, 1.0 / r);
        let c = self.tiling.classify_point(&y)?;
        if self.branch_dirs.iter().any(|d| norm(sub(*d, y)) < 1e-12) {
            return Ok(Evaluation {
                value: 0.0,
                cell: c.cell,
                parity: c.parity,
                on_branch: true,
            });
        }
        let g = &self.tiling.group()[c.element];
        let b = apply_inverse(g, scale(y, r.min(1.0)));
        // points between a cap chord and the sphere use the radial
        // projection onto the mesh
        let step = 0.25 * self.cap_sagitta;
        let l = (0..=8)
            .find_map(|k| self.locator.locate(scale(b, 1.0 - step * k as f64), 1e-8))
            .ok_or_else(|| invalid("pulled-back point outside the cone mesh"))?;
        Ok(Evaluation {
            value: c.parity as f64 * interpolate(self.mesh, &l, self.values),
            cell: c.cell,
            parity: c.parity,
            on_branch: false,
        })
    }
}

/// Almgren frequency samples around one center.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub center: Vec3,
    pub radii: Vec<f64>,
    pub n: Vec<f64>,
    pub dirichlet: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl FrequencySample {
    /// Largest decrease between consecutive radii (0 when nondecreasing).
    pub fn monotonicity_defect(&self) -> f64 {
        self.n
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Subdivision depth for tetrahedra cut by the sphere.
pub const BALL_SUBDIVISION_DEPTH: usize = 3;
/// Gauss–Legendre points in the polar direction of sphere quadrature; the
/// azimuth uses twice as many uniform points.
pub const SPHERE_QUADRATURE_ORDER: usize = 32;

/// Volume of the part of tetrahedron `t` inside `B_r(c)`, refined where
/// the boundary sphere cuts it.
fn ball_tet_volume(t: [Vec3; 4], c: Vec3, r: f64, depth: usize) -> f64 {
    let vol = crate::math::det3(sub(t[1], t[0]), sub(t[2], t[0]), sub(t[3], t[0])).abs() / 6.0;
    let dmax = t.iter().map(|p| norm(sub(*p, c))).fold(0.0, f64::max);
    if dmax <= r {
        return vol;
    }
    let cen = scale(add(add(t[0], t[1]), add(t[2], t[3])), 0.25);
    let rad = t.iter().map(|p| norm(sub(*p, cen))).fold(0.0, f64::max);
    if norm(sub(cen, c)) - rad >= r {
        return 0.0;
    }
    if depth == 0 {
        let phi: [f64; 4] = core::array::from_fn(|i| r - norm(sub(t[i], c)));
        return vol * linear_positive_fraction(phi);
    }
    let m = |a: usize, b: usize| scale(add(t[a], t[b]), 0.5);
    let (ab, ac, ad, bc, bd, cd) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
    let kids = [
        [t[0], ab, ac, ad],
        [ab, t[1], bc, bd],
        [ac, bc, t[2], cd],
        [ad, bd, cd, t[3]],
        [ab, cd, ac, ad],
        [ab, cd, ad, bd],
        [ab, cd, bd, bc],
        [ab, cd, bc, ac],
    ];
    kids.iter()
        .map(|k| ball_tet_volume(*k, c, r, depth - 1))
        .sum()
}

/// Fraction of a tetrahedron where the linear interpolant of the vertex
/// values `phi` is positive: the third divided difference of `t₊³`.
fn linear_positive_fraction(mut phi: [f64; 4]) -> f64 {
    let scale = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    // separate (near-)coincident values; the fraction is continuous in phi
    let delta = 1e-7 * scale;
    for i in 1..4 {
        for j in 0..i {
            if (phi[i] - phi[j]).abs() < delta {
                phi[i] = phi[j] + delta * (1.0 + i as f64);
            }
        }
    }
    let mut f = 0.0;
    for i in 0..4 {
        if phi[i] > 0.0 {
            let mut d = 1.0;
            for j in 0..4 {
                if j != i {
                    d *= phi[i] - phi[j];
                }
            }
            f += phi[i].powi(3) / d;
        }
    }
    f.clamp(0.0, 1.0)
}

/// Product Gauss rule on the unit sphere: `(direction, weight)`.
pub fn sphere_quadrature(order: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = gauss_legendre(order);
    let nphi = 2 * order;
    let dphi = 2.0 * core::f64::consts::PI / nphi as f64;
    let mut out = Vec::with_capacity(order * nphi);
    for (ct, wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            out.push(([st * phi.cos(), st * phi.sin(), *ct], wt * dphi));
        }
    }
    out
}

fn check_radii(center: Vec3, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(invalid("no radii given"));
    }
    for r in radii {
        if !(*r > 0.0) || norm(center) + r > 1.0 + 1e-12 {
            return Err(invalid("every ball B_r(center) must lie in the unit ball"));
        }
    }
    Ok(())
}

/// `N(r) = r ∫_{B_r}|∇ũ|² / ∫_{∂B_r} ũ²` for the two-valued field.
pub fn frequency(f: &TwoValuedField, center: Vec3, radii: &[f64]) -> Result<FrequencySample> {
    check_radii(center, radii)?;
    let mesh = f.mesh;
    let group = f.tiling.group();
    let pulled: Vec<Vec3> = f
        .tiling
        .cells()
        .iter()
        .map(|c| apply_inverse(&group[c.element], center))
        .collect();
    let ne = mesh.element_count();
    let grads2: Vec<f64> = (0..ne)
        .map(|e| {
            let g = element_gradient(mesh, e, f.values);
            dot(g, g)
        })
        .collect();
    let quad = sphere_quadrature(SPHERE_QUADRATURE_ORDER);
    let mut out = FrequencySample {
        center,
        radii: radii.to_vec(),
        n: Vec::new(),
        dirichlet: Vec::new(),
        boundary: Vec::new(),
    };
    for &r in radii {
        let mut d = 0.0;
        for e in 0..ne {
            if grads2[e] == 0.0 {
                continue;
            }
            let el = mesh.element(e);
            let t = [
                mesh.node(el[0]),
                mesh.node(el[1]),
                mesh.node(el[2]),
                mesh.node(el[3]),
            ];
            for c in &pulled {
                d += grads2[e] * ball_tet_volume(t, *c, r, BALL_SUBDIVISION_DEPTH);
            }
        }
        let mut b = 0.0;
        for (y, w) in &quad {
            let v = f.eval(add(center, scale(*y, r)))?.value;
            b += w * v * v * r * r;
        }
        if b <= 0.0 {
            return Err(Error::TrivialField);
        }
        out.dirichlet.push(d);
        out.boundary.push(b);
        out.n.push(r * d / b);
    }
    Ok(out)
}

/// Frequency of a closed-form single-valued field given with its gradient,
/// using product Gauss quadrature on balls. Serves as an oracle for
/// [`frequency`].
pub fn frequency_closed_form(
    f: &dyn Fn(Vec3) -> (f64, Vec3),
    center: Vec3,
    radii: &[f64],
    order: usize,
) -> Result<FrequencySample> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.is_empty() {
        return Err(invalid("radii must be positive"));
    }
    let quad = sphere_quadrature(order);
    let (xr, wr) = gauss_legendre(order);
    let mut out = FrequencySample {
        center,
        radii: radii.to_vec(),
        n: Vec::new(),
        dirichlet: Vec::new(),
        boundary: Vec::new(),
    };
    for &r in radii {
        let mut d = 0.0;
        for (s, ws) in xr.iter().zip(&wr) {
            let rho = 0.5 * r * (s + 1.0);
            let wrho = 0.5 * r * ws * rho * rho;
            for (y, w) in &quad {
                let (_, g) = f(add(center, scale(*y, rho)));
                d += wrho * w * dot(g, g);
            }
        }
        let mut b = 0.0;
        for (y, w) in &quad {
            let (v, _) = f(add(center, scale(*y, r)));
            b += w * v * v * r * r;
        }
        if b <= 0.0 {
            return Err(Error::TrivialField);
        }
        out.dirichlet.push(d);
        out.boundary.push(b);
        out.n.push(r * d / b);
    }
    Ok(out)
}

/// Polar frame in the plane normal to a branch ray. `θ = 0` lies on a flat
/// face through the ray; the cells around the ray are listed in the order
/// `θ` sweeps through them.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFrame {
    pub direction: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub cells: Vec<usize>,
}

impl RayFrame {
    pub fn new(tiling: &Tiling, direction: Vec3) -> Result<Self> {
        let v = normalize(direction);
        let idx = tiling
            .vertices()
            .iter()
            .position(|p| norm(sub(to3(p), v)) < 1e-9)
            .ok_or_else(|| invalid("direction is not a tiling vertex"))?;
        let star = tiling
            .skeleton(0)
            .iter()
            .find(|f| f.vertices == [idx])
            .ok_or_else(|| invalid("vertex missing from the 0-skeleton"))?;
        // a neighbor along a tiling edge fixes the θ = 0 face
        let edge = tiling
            .skeleton(1)
            .iter()
            .find(|f| f.vertices.contains(&idx))
            .ok_or_else(|| invalid("no tiling edge at this vertex"))?;
        let other = if edge.vertices[0] == idx {
            edge.vertices[1]
        } else {
            edge.vertices[0]
        };
        let w = to3(&tiling.vertices()[other]);
        let e1 = normalize(sub(w, scale(v, dot(w, v))));
        let e2 = cross(v, e1);
        let angle = |p: Vec3| {
            let a = dot(p, e2).atan2(dot(p, e1));
            if a < 0.0 {
                a + 2.0 * core::f64::consts::PI
            } else {
                a
            }
        };
        let mut cells: Vec<(f64, usize)> = star
            .cells
            .iter()
            .map(|&c| (angle(tiling.cells()[c].polytope.center3()), c))
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            direction: v,
            e1,
            e2,
            cells: cells.into_iter().map(|c| c.1).collect(),
        })
    }

    /// Point at distance `t` along the ray and polar `(ρ, θ)` around it.
    pub fn point(&self, t: f64, rho: f64, theta: f64) -> Vec3 {
        add(
            scale(self.direction, t),
            add(
                scale(self.e1, rho * theta.cos()),
                scale(self.e2, rho * theta.sin()),
            ),
        )
    }
}

/// Value of the sheet obtained by continuing the field from the first cell
/// around the ray: every face crossing flips the sign relative to the
/// group transport, so a full turn returns `−1` times the start when the
/// number of cells is odd.
pub fn sheet_value(f: &TwoValuedField, frame: &RayFrame, x: Vec3) -> Result<f64> {
    let e = f.eval(x)?;
    let j = frame
        .cells
        .iter()
        .position(|&c| c == e.cell)
        .ok_or_else(|| invalid("point not in a cell around the ray"))?;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * e.parity as f64 * e.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_fraction_matches_closed_cases() {
        assert_eq!(linear_positive_fraction([1.0, 2.0, 3.0, 4.0]), 1.0);
        assert_eq!(linear_positive_fraction([-1.0, -2.0, -3.0, -4.0]), 0.0);
        // corner cut: plane x + y + z = s in the unit corner tet has volume s³
        let s = 0.3;
        let f = linear_positive_fraction([s, s - 1.0, s - 1.0, s - 1.0]);
        assert!((f - s * s * s).abs() < 1e-6);
        // plane x = 1/2 cuts off a corner of scale 1/2
        let f = linear_positive_fraction([-0.5, 0.5, -0.5, -0.5]);
        assert!((f - 0.125).abs() < 1e-6);
        // two-two split by x + y = 1/2 halves the reference tet
        let f = linear_positive_fraction([-0.5, 0.5, 0.5, -0.5]);
        assert!((f - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ball_volume_converges() {
        let t = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        // ball around the right-angle corner: one eighth of the ball
        let r: f64 = 0.5;
        let exact = core::f64::consts::PI * r.powi(3) / 6.0;
        let err: Vec<f64> = (1..=4)
            .map(|d| (ball_tet_volume(t, [0.0; 3], r, d) - exact).abs() / exact)
            .collect();
        for w in err.windows(2) {
            assert!(w[1] < 0.3 * w[0], "{err:?}");
        }
        assert!(err[3] < 1e-2, "{err:?}");
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadingFit {
    /// Mean exponent over stations.
    pub exponent: f64,
    pub stations: Vec<f64>,
    /// Per-station power-law fit of the `sin(kθ/2)` projection.
    pub fits: Vec<LineFit>,
    /// Per-station leading coefficient `c(t)` from the fit.
    pub coefficients: Vec<f64>,
    /// Smallest cosine similarity between sampled sheet profiles and
    /// `sin(kθ/2)` over stations and radii.
    pub correlation: f64,
}

/// Fits `c(t) ρ^e sin(kθ/2)` around a branch ray, `k` the number of cells
/// around it (3 for simplicial tilings of `S²`).
pub fn leading_coefficient_fit(
    f: &TwoValuedField,
    direction: Vec3,
    stations: &[f64],
    rho_min: f64,
    rho_max: f64,
) -> Result<LeadingFit> {
    if !(rho_min > 0.0 && rho_max > rho_min) {
        return Err(invalid("need 0 < rho_min < rho_max"));
    }
    let frame = RayFrame::new(f.tiling, direction)?;
    let k = frame.cells.len() as f64;
    let (nr, nt) = (10, 96);
    let mut fits = Vec::new();
    let mut coefficients = Vec::new();
    let mut correlation: f64 = 1.0;
    for &t in stations {
        if !(t > 0.0) || t + rho_max > 1.0 {
            return Err(invalid("station disk leaves the unit ball"));
        }
        let mut rhos = Vec::with_capacity(nr);
        let mut amps = Vec::with_capacity(nr);
        for i in 0..nr {
            let rho = rho_min * (rho_max / rho_min).powf(i as f64 / (nr - 1) as f64);
            let (mut fs, mut ff, mut ss) = (0.0, 0.0, 0.0);
            for j in 0..nt {
                let theta = 2.0 * core::f64::consts::PI * (j as f64 + 0.5) / nt as f64;
                let v = sheet_value(f, &frame, frame.point(t, rho, theta))?;
                let s = (0.5 * k * theta).sin();
                fs += v * s;
                ff += v * v;
                ss += s * s;
            }
            if ff == 0.0 {
                return Err(Error::TrivialField);
            }
            correlation = correlation.min(fs / (ff * ss).sqrt());
            rhos.push(rho);
            amps.push((fs / ss).abs());
        }
        let fit = fit_power_law(&rhos, &amps)?;
        if !fit.slope.is_finite() || fit.r_squared < 0.9 {
            return Err(Error::Fit("ill-conditioned ray fit".into()));
        }
        coefficients.push(fit.intercept.exp());
        fits.push(fit);
    }
    let exponent = fits.iter().map(|f| f.slope).sum::<f64>() / fits.len() as f64;
    Ok(LeadingFit {
        exponent,
        stations: stations.to_vec(),
        fits,
        coefficients,
        correlation,
    })
}

/// Root-mean-square jump of recovered gradients across the flat faces.
///
/// Odd reflection maps the gradient `G` on one side of a face to `S G`
/// transported with a sign flip, so the jump at a face node is twice the
/// in-face component of the recovered (volume-averaged) gradient there.
/// The normal component is continuous by construction. Nodes with
/// `|x| ∈ [r_min, r_max]` at distance at least `edge_gap` from every cone
/// edge are used, weighted by lumped mass.
pub fn face_gradient_jump(
    mesh: &Mesh,
    values: &[f64],
    r_min: f64,
    r_max: f64,
    edge_gap: f64,
) -> Result<f64> {
    let p = mesh
        .polytope()
        .ok_or_else(|| invalid("mesh carries no polytope"))?;
    let normals = crate::mesh::facet_normals(p);
    let n = mesh.nodes().len();
    let mut acc = vec![[0.0; 3]; n];
    let mut wsum = vec![0.0; n];
    for e in 0..mesh.element_count() {
        let g = element_gradient(mesh, e, values);
        let w = mesh.element_measure(e).abs();
        for &i in mesh.element(e) {
            acc[i] = add(acc[i], scale(g, w));
            wsum[i] += w;
        }
    }
    let mass = mesh.lumped_mass();
    let nv = p.vertices().len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let faces: Vec<usize> = mesh
            .tags(i)
            .iter()
            .filter_map(|t| {
                if let crate::mesh::Tag::FlatFace(k) = t {
                    Some(*k)
                } else {
                    None
                }
            })
            .collect();
        if faces.len() != 1 || mesh.tags(i).len() != 1 {
            continue;
        }
        let x = mesh.node(i);
        let r = norm(x);
        if r < r_min || r > r_max {
            continue;
        }
        let near_edge = (0..nv).any(|k| {
            let v = p.vertex3(k);
            norm(sub(x, scale(v, dot(x, v)))) < edge_gap
        });
        if near_edge {
            continue;
        }
        let g = scale(acc[i], 1.0 / wsum[i]);
        let nrm = normals[faces[0]];
        let tangential = sub(g, scale(nrm, dot(g, nrm)));
        num += mass[i] * 4.0 * dot(tangential, tangential);
        den += mass[i];
    }
    if den == 0.0 {
        return Err(invalid("no face nodes in the sampling region"));
    }
    Ok((num / den).sqrt())
}
