//! Graded simplicial meshes of a spherical polygon on `S²` and of the unit
//! cone `C₁(P)` over it, with stratum tags.
//!
//! Surface meshes fan the polygon from its center, split every fan triangle
//! at its chord midpoint so each piece has exactly one polygon corner, and
//! lay out points in layers `t_j = (j/k)^β` toward that corner. Points are
//! placed on the flat triangle and projected radially, so boundary chords
//! land on great-circle arcs. Elements stay affine; the geometric error of
//! the projected triangles is `O(h²)`.
//!
//! Cone meshes stack copies of the surface mesh on spheres of radius
//! `r_j = (j/K)^β` and split each prism into three tetrahedra with a
//! diagonal rule keyed on global node ids, which keeps shared faces
//! conforming.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::math::{add, cross, det3, dot, norm, normalize, scale, solve_dense, sub, Vec3};
use crate::tiling::SphericalPolytope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    /// Outer spherical cap `r = 1` of a cone mesh.
    Cap,
    /// Boundary arc `k` of the polygon, or the flat face `C₁(F_k)`.
    FlatFace(usize),
    /// Cone edge over polygon vertex `k`.
    Edge(usize),
    /// Apex of the cone.
    ConeVertex,
    /// Polygon vertex `k` on a surface mesh.
    PolytopeVertex(usize),
    /// Generic outer boundary of a validation mesh.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Surface,
    Volume,
}

/// Radial structure of a cone mesh built from a surface mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeLayers {
    pub radii: Vec<f64>,
    /// `(surface node, layer)` for every cone node except the apex.
    pub origin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    kind: MeshKind,
    nodes: Vec<Vec3>,
    conn: Vec<usize>,
    tags: Vec<Vec<Tag>>,
    grading: f64,
    h: f64,
    polytope: Option<SphericalPolytope>,
    layers: Option<ConeLayers>,
}

impl Mesh {
    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Vec3 {
        self.nodes[i]
    }

    pub fn nodes_per_element(&self) -> usize {
        match self.kind {
            MeshKind::Surface => 3,
            MeshKind::Volume => 4,
        }
    }

    pub fn element_count(&self) -> usize {
        self.conn.len() / self.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element();
        &self.conn[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.conn.chunks_exact(self.nodes_per_element())
    }

    pub fn tags(&self, i: usize) -> &[Tag] {
        &self.tags[i]
    }

    pub fn has_tag(&self, i: usize, t: Tag) -> bool {
        self.tags[i].contains(&t)
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn polytope(&self) -> Option<&SphericalPolytope> {
        self.polytope.as_ref()
    }

    pub fn layers(&self) -> Option<&ConeLayers> {
        self.layers.as_ref()
    }

    /// Nodes carrying a Dirichlet condition: polygon boundary on surface
    /// meshes; cap, faces, edges and apex on cone meshes.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        !self.tags[i].is_empty()
    }

    /// Nodes on a flat face, cone edge or apex (homogeneous data).
    pub fn is_on_faces(&self, i: usize) -> bool {
        self.tags[i].iter().any(|t| {
            matches!(
                t,
                Tag::FlatFace(_) | Tag::Edge(_) | Tag::ConeVertex | Tag::PolytopeVertex(_)
            )
        })
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| !self.is_dirichlet(i))
            .collect()
    }

    /// Signed measure of element `e` (area for triangles, volume for tets).
    pub fn element_measure(&self, e: usize) -> f64 {
        let v = self.element(e);
        match self.kind {
            MeshKind::Surface => {
                let (a, b, c) = (self.nodes[v[0]], self.nodes[v[1]], self.nodes[v[2]]);
                let n = cross(sub(b, a), sub(c, a));
                0.5 * norm(n) * dot(n, add(add(a, b), c)).signum()
            }
            MeshKind::Volume => {
                let a = self.nodes[v[0]];
                det3(
                    sub(self.nodes[v[1]], a),
                    sub(self.nodes[v[2]], a),
                    sub(self.nodes[v[3]], a),
                ) / 6.0
            }
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.element_count())
            .map(|e| self.element_measure(e))
            .sum()
    }

    /// Sum of exact spherical-triangle areas of the projected elements.
    pub fn spherical_area(&self) -> f64 {
        assert_eq!(self.kind, MeshKind::Surface);
        self.elements()
            .map(|v| {
                crate::tiling::spherical_triangle_area(
                    self.nodes[v[0]],
                    self.nodes[v[1]],
                    self.nodes[v[2]],
                )
            })
            .sum()
    }

    /// Lumped (row-sum) mass per node.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        let k = self.nodes_per_element() as f64;
        for e in 0..self.element_count() {
            let w = self.element_measure(e).abs() / k;
            for &i in self.element(e) {
                m[i] += w;
            }
        }
        m
    }

    /// Circumradius over inradius for every element.
    pub fn shape_ratios(&self) -> Vec<f64> {
        (0..self.element_count())
            .map(|e| {
                let v: Vec<Vec3> = self.element(e).iter().map(|&i| self.nodes[i]).collect();
                match self.kind {
                    MeshKind::Surface => triangle_ratio(v[0], v[1], v[2]),
                    MeshKind::Volume => tet_ratio(v[0], v[1], v[2], v[3]),
                }
            })
            .collect()
    }

    /// Checks that every facet is shared by one (boundary) or two
    /// (interior) elements and returns the boundary facets.
    pub fn check_conformity(&self) -> Result<Vec<Vec<usize>>> {
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let k = self.nodes_per_element();
        for el in self.elements() {
            for skip in 0..k {
                let mut f: Vec<usize> = (0..k).filter(|&i| i != skip).map(|i| el[i]).collect();
                f.sort_unstable();
                *count.entry(f).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        for (f, c) in count {
            match c {
                1 => boundary.push(f),
                2 => {}
                _ => return Err(invalid("facet shared by more than two elements")),
            }
        }
        Ok(boundary)
    }

    /// Every boundary facet must lie on a single tagged stratum.
    pub fn boundary_facets_tagged(&self) -> Result<bool> {
        let bf = self.check_conformity()?;
        Ok(bf.iter().all(|f| {
            self.tags[f[0]].iter().any(|t| {
                matches!(t, Tag::Cap | Tag::FlatFace(_) | Tag::Boundary)
                    && f.iter().all(|&i| self.tags[i].contains(t))
            })
        }))
    }

    /// Largest deviation of tagged nodes from their stratum.
    pub fn tag_consistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let Some(p) = &self.polytope else { return 0.0 };
        let normals = facet_normals(p);
        for (i, x) in self.nodes.iter().enumerate() {
            for t in &self.tags[i] {
                let d = match *t {
                    Tag::Cap => (norm(*x) - 1.0).abs(),
                    Tag::FlatFace(k) => dot(*x, normals[k]).abs(),
                    Tag::Edge(k) => {
                        let v = p.vertex3(k);
                        norm(sub(*x, scale(v, dot(*x, v))))
                    }
                    Tag::PolytopeVertex(k) => norm(sub(*x, p.vertex3(k))),
                    Tag::ConeVertex => norm(*x),
                    Tag::Boundary => 0.0,
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Uniform red refinement: triangles into 4, tetrahedra into 8. Edge
    /// midpoints inherit the tags shared by both endpoints; midpoints on
    /// the sphere (surface meshes, cap edges) are projected back to it.
    pub fn refine(&self) -> Mesh {
        let mut nodes = self.nodes.clone();
        let mut tags = self.tags.clone();
        let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let surface = self.kind == MeshKind::Surface;
        let mut midpoint =
            |a: usize, b: usize, nodes: &mut Vec<Vec3>, tags: &mut Vec<Vec<Tag>>| -> usize {
                let key = if a < b { (a, b) } else { (b, a) };
                if let Some(&m) = mids.get(&key) {
                    return m;
                }
                let shared: Vec<Tag> = tags[a]
                    .iter()
                    .copied()
                    .filter(|t| {
                        tags[b].contains(t)
                            && matches!(
                                t,
                                Tag::Cap | Tag::FlatFace(_) | Tag::Edge(_) | Tag::Boundary
                            )
                    })
                    .collect();
                let mut x = scale(add(nodes[a], nodes[b]), 0.5);
                if surface || shared.contains(&Tag::Cap) {
                    x = normalize(x);
                }
                nodes.push(x);
                tags.push(shared);
                let id = nodes.len() - 1;
                mids.insert(key, id);
                id
            };
        let mut conn = Vec::with_capacity(self.conn.len() * if surface { 4 } else { 8 });
        for el in self.conn.chunks_exact(self.nodes_per_element()) {
            if surface {
                let (a, b, c) = (el[0], el[1], el[2]);
                let ab = midpoint(a, b, &mut nodes, &mut tags);
                let bc = midpoint(b, c, &mut nodes, &mut tags);
                let ca = midpoint(c, a, &mut nodes, &mut tags);
                conn.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
            } else {
                let (a, b, c, d) = (el[0], el[1], el[2], el[3]);
                let ab = midpoint(a, b, &mut nodes, &mut tags);
                let ac = midpoint(a, c, &mut nodes, &mut tags);
                let ad = midpoint(a, d, &mut nodes, &mut tags);
                let bc = midpoint(b, c, &mut nodes, &mut tags);
                let bd = midpoint(b, d, &mut nodes, &mut tags);
                let cd = midpoint(c, d, &mut nodes, &mut tags);
                conn.extend_from_slice(&[
                    a, ab, ac, ad, ab, b, bc, bd, ac, bc, c, cd, ad, bd, cd, d,
                ]);
                // inner octahedron split along its shortest diagonal
                let diags = [(ab, cd), (ac, bd), (ad, bc)];
                let (p, q) = diags
                    .iter()
                    .copied()
                    .min_by(|x, y| {
                        norm(sub(nodes[x.0], nodes[x.1]))
                            .total_cmp(&norm(sub(nodes[y.0], nodes[y.1])))
                    })
                    .unwrap();
                let ring: [usize; 4] = if (p, q) == (ab, cd) {
                    [ac, ad, bd, bc]
                } else if (p, q) == (ac, bd) {
                    [ab, ad, cd, bc]
                } else {
                    [ab, ac, cd, bd]
                };
                for i in 0..4 {
                    conn.extend_from_slice(&[p, q, ring[i], ring[(i + 1) % 4]]);
                }
            }
        }
        let mut m = Mesh {
            kind: self.kind,
            nodes,
            conn,
            tags,
            grading: self.grading,
            h: self.h * 0.5,
            polytope: self.polytope.clone(),
            layers: None,
        };
        m.orient();
        m
    }

    fn orient(&mut self) {
        let k = self.nodes_per_element();
        for e in 0..self.element_count() {
            if self.element_measure(e) < 0.0 {
                self.conn.swap(e * k, e * k + 1);
            }
        }
    }

    /// Smallest element measure relative to `h^dim`.
    pub fn min_relative_measure(&self) -> f64 {
        let dim = match self.kind {
            MeshKind::Surface => 2,
            MeshKind::Volume => 3,
        };
        let hd = self.h.powi(dim);
        (0..self.element_count())
            .map(|e| self.element_measure(e) / hd)
            .fold(f64::INFINITY, f64::min)
    }
}

fn triangle_ratio(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let (la, lb, lc) = (norm(sub(b, c)), norm(sub(c, a)), norm(sub(a, b)));
    let area = 0.5 * norm(cross(sub(b, a), sub(c, a)));
    let circ = la * lb * lc / (4.0 * area);
    let inr = 2.0 * area / (la + lb + lc);
    circ / inr
}

fn tet_ratio(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let vol = det3(sub(b, a), sub(c, a), sub(d, a)).abs() / 6.0;
    let fa = |p: Vec3, q: Vec3, r: Vec3| 0.5 * norm(cross(sub(q, p), sub(r, p)));
    let s = fa(b, c, d) + fa(a, c, d) + fa(a, b, d) + fa(a, b, c);
    let inr = 3.0 * vol / s;
    // circumcenter x solves 2 (p_i - a)·x = |p_i|² - |a|²
    let rows = [sub(b, a), sub(c, a), sub(d, a)];
    let m: Vec<f64> = rows
        .iter()
        .flat_map(|r| [2.0 * r[0], 2.0 * r[1], 2.0 * r[2]])
        .collect();
    let rhs = [
        dot(b, b) - dot(a, a),
        dot(c, c) - dot(a, a),
        dot(d, d) - dot(a, a),
    ];
    match solve_dense(&m, &rhs, 3) {
        Ok(x) => norm(sub([x[0], x[1], x[2]], a)) / inr,
        Err(_) => f64::INFINITY,
    }
}

/// Unit normals of the great-circle planes through each polygon arc.
pub fn facet_normals(p: &SphericalPolytope) -> Vec<Vec3> {
    let k = p.vertices().len();
    (0..k)
        .map(|i| normalize(cross(p.vertex3(i), p.vertex3((i + 1) % k))))
        .collect()
}

/// Merges coincident points through a hashed grid.
struct PointMerger {
    cell: f64,
    tol: f64,
    map: BTreeMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vec3>,
}

impl PointMerger {
    fn new(tol: f64) -> Self {
        Self {
            cell: 1e-7,
            tol,
            map: BTreeMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, x: Vec3) -> (i64, i64, i64) {
        (
            (x[0] / self.cell).floor() as i64,
            (x[1] / self.cell).floor() as i64,
            (x[2] / self.cell).floor() as i64,
        )
    }

    fn insert(&mut self, x: Vec3) -> usize {
        let (i, j, k) = self.key(x);
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(ids) = self.map.get(&(i + di, j + dj, k + dk)) {
                        for &id in ids {
                            if norm(sub(self.points[id], x)) < self.tol {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(x);
        self.map.entry((i, j, k)).or_default().push(id);
        id
    }
}

fn check_params(h: f64, grading: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(invalid("mesh size h must lie in (0, 0.5]"));
    }
    if !(grading >= 1.0) {
        return Err(invalid("grading exponent must be >= 1"));
    }
    Ok(())
}

/// Graded surface mesh of a spherical polygon on `S²`.
pub fn mesh_spherical_polytope(p: &SphericalPolytope, h: f64, grading: f64) -> Result<Mesh> {
    check_params(h, grading)?;
    if p.dim() != 3 {
        return Err(invalid("surface meshing supports polygons on S^2 only"));
    }
    let c = p.center3();
    let k = p.vertices().len();
    let mut merger = PointMerger::new(1e-10);
    let mut conn = Vec::new();
    for i in 0..k {
        let vi = p.vertex3(i);
        let vj = p.vertex3((i + 1) % k);
        let mid = scale(add(vi, vj), 0.5);
        for (corner, other) in [(vi, vj), (vj, vi)] {
            let _ = other;
            // corner O, chord midpoint A, center B
            let d = crate::math::geodesic_distance(corner, c);
            let layers = ((d / h).ceil() as usize).max(1);
            let t: Vec<f64> = (0..=layers)
                .map(|j| (j as f64 / layers as f64).powf(grading))
                .collect();
            let mut ids: Vec<Vec<usize>> = Vec::with_capacity(layers + 1);
            for (j, tj) in t.iter().enumerate() {
                let row: Vec<usize> = (0..=j)
                    .map(|m| {
                        let s = if j == 0 { 0.0 } else { m as f64 / j as f64 };
                        let dir = add(scale(sub(mid, corner), 1.0 - s), scale(sub(c, corner), s));
                        merger.insert(normalize(add(corner, scale(dir, *tj))))
                    })
                    .collect();
                ids.push(row);
            }
            for j in 0..layers {
                for m in 0..=j {
                    conn.extend_from_slice(&[ids[j][m], ids[j + 1][m], ids[j + 1][m + 1]]);
                    if m < j {
                        conn.extend_from_slice(&[ids[j][m], ids[j + 1][m + 1], ids[j][m + 1]]);
                    }
                }
            }
        }
    }
    let nodes = merger.points;
    let normals = facet_normals(p);
    let tags = nodes
        .iter()
        .map(|x| {
            let mut t = Vec::new();
            for (f, n) in normals.iter().enumerate() {
                if dot(*x, *n).abs() < 1e-12 {
                    t.push(Tag::FlatFace(f));
                }
            }
            for v in 0..k {
                if norm(sub(*x, p.vertex3(v))) < 1e-12 {
                    t.push(Tag::PolytopeVertex(v));
                }
            }
            t
        })
        .collect();
    let mut m = Mesh {
        kind: MeshKind::Surface,
        nodes,
        conn,
        tags,
        grading,
        h,
        polytope: Some(p.clone()),
        layers: None,
    };
    m.orient();
    Ok(m)
}

/// Resolution controls for [`mesh_cone_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOptions {
    pub h_surface: f64,
    pub grading_surface: f64,
    pub h_radial: f64,
    pub grading_radial: f64,
}

/// Tetrahedral mesh of the unit cone `C₁(P)`.
pub fn mesh_cone(p: &SphericalPolytope, h: f64, grading: f64) -> Result<Mesh> {
    mesh_cone_with(
        p,
        &ConeOptions {
            h_surface: h,
            grading_surface: grading,
            h_radial: h,
            grading_radial: grading,
        },
    )
}

pub fn mesh_cone_with(p: &SphericalPolytope, o: &ConeOptions) -> Result<Mesh> {
    check_params(o.h_radial, o.grading_radial)?;
    let surf = mesh_spherical_polytope(p, o.h_surface, o.grading_surface)?;
    cone_over(&surf, o.h_radial, o.grading_radial)
}

/// Cone mesh over an existing surface mesh (shared node directions).
pub fn cone_over(surf: &Mesh, h_radial: f64, grading: f64) -> Result<Mesh> {
    if surf.kind != MeshKind::Surface {
        return Err(Error::WrongMeshKind {
            expected: "surface",
        });
    }
    let layers = ((1.0 / h_radial).ceil() as usize).max(1);
    let radii: Vec<f64> = (0..=layers)
        .map(|j| (j as f64 / layers as f64).powf(grading))
        .collect();
    let ns = surf.nodes.len();
    // node 0 is the apex; layer j >= 1 node s has id 1 + (j-1) ns + s
    let id = |j: usize, s: usize| if j == 0 { 0 } else { 1 + (j - 1) * ns + s };
    let mut nodes = vec![[0.0; 3]];
    let k = surf
        .polytope
        .as_ref()
        .map(|p| p.vertices().len())
        .unwrap_or(0);
    let mut tags = vec![(0..k)
        .map(Tag::FlatFace)
        .chain([Tag::ConeVertex])
        .collect::<Vec<_>>()];
    for (j, r) in radii.iter().enumerate().skip(1) {
        for s in 0..ns {
            nodes.push(scale(surf.nodes[s], *r));
            let mut t: Vec<Tag> = surf.tags[s]
                .iter()
                .map(|t| match *t {
                    Tag::PolytopeVertex(v) => Tag::Edge(v),
                    other => other,
                })
                .collect();
            if j == layers {
                t.insert(0, Tag::Cap);
            }
            tags.push(t);
        }
    }
    let rank = symmetric_rank(surf);
    let mut conn = Vec::new();
    for tri in surf.elements() {
        conn.extend_from_slice(&[0, id(1, tri[0]), id(1, tri[1]), id(1, tri[2])]);
        for j in 1..layers {
            let mut v = [tri[0], tri[1], tri[2]];
            v.sort_unstable_by_key(|&s| rank[s]);
            let (b0, b1, b2) = (id(j, v[0]), id(j, v[1]), id(j, v[2]));
            let (t0, t1, t2) = (id(j + 1, v[0]), id(j + 1, v[1]), id(j + 1, v[2]));
            conn.extend_from_slice(&[b0, b1, b2, t2, b0, b1, t1, t2, b0, t0, t1, t2]);
        }
    }
    let mut m = Mesh {
        kind: MeshKind::Volume,
        nodes,
        conn,
        tags,
        grading,
        h: h_radial,
        polytope: surf.polytope.clone(),
        layers: Some(ConeLayers { radii, origin: 0 }),
    };
    m.orient();
    Ok(m)
}

/// Total order on surface nodes that is invariant under rotations of a
/// regular polygon about its center: nodes are ranked by distance to the
/// center, then by angle modulo `2π / vertices`. The prism diagonals
/// chosen from this order make the cone mesh share the rotational
/// symmetry of the surface mesh.
fn symmetric_rank(surf: &Mesh) -> Vec<usize> {
    let ns = surf.nodes.len();
    let Some(p) = &surf.polytope else {
        return (0..ns).collect();
    };
    let c = p.center3();
    let nv = p.vertices().len();
    let e1 = normalize(sub(p.vertex3(0), scale(c, dot(p.vertex3(0), c))));
    let e2 = cross(c, e1);
    let sector = 2.0 * core::f64::consts::PI / nv as f64;
    let q = |x: f64| (x * 1e9).round() as i64;
    let period = q(sector);
    let keys: Vec<(i64, i64)> = surf
        .nodes
        .iter()
        .map(|x| {
            let d = crate::math::geodesic_distance(*x, c);
            let a = dot(*x, e2).atan2(dot(*x, e1));
            let a = a - sector * (a / sector).floor();
            (q(d), q(a).rem_euclid(period))
        })
        .collect();
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by_key(|&s| (keys[s], s));
    let mut rank = vec![0; ns];
    for (r, &s) in order.iter().enumerate() {
        rank[s] = r;
    }
    rank
}

/// Kuhn-triangulated cube `[0,1]³` with `n` divisions per side; every
/// boundary node carries [`Tag::Boundary`].
pub fn mesh_cube(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(invalid("cube needs at least one division"));
    }
    let id = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * (n + 1) + k;
    let mut nodes = Vec::new();
    let mut tags = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                nodes.push([
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64,
                ]);
                let on = [i, j, k].iter().any(|&q| q == 0 || q == n);
                tags.push(if on { vec![Tag::Boundary] } else { Vec::new() });
            }
        }
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut conn = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for p in perms {
                    let mut c = [i, j, k];
                    let mut tet = [id(c[0], c[1], c[2]); 4];
                    for (s, axis) in p.iter().enumerate() {
                        c[*axis] += 1;
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    conn.extend_from_slice(&tet);
                }
            }
        }
    }
    let mut m = Mesh {
        kind: MeshKind::Volume,
        nodes,
        conn,
        tags,
        grading: 1.0,
        h: 1.0 / n as f64,
        polytope: None,
        layers: None,
    };
    m.orient();
    Ok(m)
}

/// Bucket grid over element bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct Locator {
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
    inverse: Vec<[f64; 9]>,
    origin: Vec<Vec3>,
    kind: MeshKind,
}

/// Element and barycentric weights of a located point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub element: usize,
    pub weights: [f64; 4],
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Self {
        let ne = mesh.element_count();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut boxes = Vec::with_capacity(ne);
        let mut mean_size = 0.0;
        for el in mesh.elements() {
            let mut blo = [f64::INFINITY; 3];
            let mut bhi = [f64::NEG_INFINITY; 3];
            for &i in el {
                for d in 0..3 {
                    blo[d] = blo[d].min(mesh.nodes[i][d]);
                    bhi[d] = bhi[d].max(mesh.nodes[i][d]);
                }
            }
            if mesh.kind == MeshKind::Surface {
                // the radial shadow of a chord triangle bulges by its sagitta
                let diam = norm(sub(bhi, blo));
                let pad = diam * diam / 4.0 + 1e-12;
                for d in 0..3 {
                    blo[d] -= pad;
                    bhi[d] += pad;
                }
            }
            mean_size += norm(sub(bhi, blo));
            for d in 0..3 {
                lo[d] = lo[d].min(blo[d]);
                hi[d] = hi[d].max(bhi[d]);
            }
            boxes.push((blo, bhi));
        }
        mean_size /= ne.max(1) as f64;
        let extent = norm(sub(hi, lo)).max(1e-12);
        let cell = mean_size.max(extent / 200.0);
        let dims = [0, 1, 2].map(|d| (((hi[d] - lo[d]) / cell).ceil() as usize).max(1));
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let idx =
            |d: usize, x: f64| (((x - lo[d]) / cell).floor().max(0.0) as usize).min(dims[d] - 1);
        for (e, (blo, bhi)) in boxes.iter().enumerate() {
            for i in idx(0, blo[0])..=idx(0, bhi[0]) {
                for j in idx(1, blo[1])..=idx(1, bhi[1]) {
                    for k in idx(2, blo[2])..=idx(2, bhi[2]) {
                        buckets[(i * dims[1] + j) * dims[2] + k].push(e as u32);
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(ne);
        let mut origin = Vec::with_capacity(ne);
        for el in mesh.elements() {
            let (o, cols) = match mesh.kind {
                // ray test: y = s (w0 a + w1 b + w2 c)
                MeshKind::Surface => (
                    [0.0; 3],
                    [mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]],
                ),
                MeshKind::Volume => {
                    let a = mesh.nodes[el[0]];
                    (
                        a,
                        [
                            sub(mesh.nodes[el[1]], a),
                            sub(mesh.nodes[el[2]], a),
                            sub(mesh.nodes[el[3]], a),
                        ],
                    )
                }
            };
            let m = [
                cols[0][0], cols[1][0], cols[2][0], cols[0][1], cols[1][1], cols[2][1], cols[0][2],
                cols[1][2], cols[2][2],
            ];
            inverse.push(invert3(&m));
            origin.push(o);
        }
        Self {
            lo,
            cell,
            dims,
            buckets,
            inverse,
            origin,
            kind: mesh.kind,
        }
    }

    fn weights(&self, e: usize, x: Vec3) -> [f64; 4] {
        let m = &self.inverse[e];
        let y = sub(x, self.origin[e]);
        let c = [
            m[0] * y[0] + m[1] * y[1] + m[2] * y[2],
            m[3] * y[0] + m[4] * y[1] + m[5] * y[2],
            m[6] * y[0] + m[7] * y[1] + m[8] * y[2],
        ];
        match self.kind {
            MeshKind::Surface => {
                let s = c[0] + c[1] + c[2];
                [c[0] / s, c[1] / s, c[2] / s, 0.0]
            }
            MeshKind::Volume => [1.0 - c[0] - c[1] - c[2], c[0], c[1], c[2]],
        }
    }

    /// Element containing `x` (a direction for surface meshes). Points
    /// slightly outside the mesh snap to the nearest candidate within
    /// `tol` in barycentric terms.
    pub fn locate(&self, x: Vec3, tol: f64) -> Option<Location> {
        let q = match self.kind {
            MeshKind::Surface => normalize(x),
            MeshKind::Volume => x,
        };
        let idx = |d: usize| ((q[d] - self.lo[d]) / self.cell).floor();
        let (i, j, k) = (idx(0), idx(1), idx(2));
        if i < 0.0 || j < 0.0 || k < 0.0 {
            return None;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
            return None;
        }
        let mut best: Option<(f64, Location)> = None;
        for &e in &self.buckets[(i * self.dims[1] + j) * self.dims[2] + k] {
            let e = e as usize;
            if self.kind == MeshKind::Surface {
                let m = &self.inverse[e];
                let s = (m[0] + m[3] + m[6]) * q[0]
                    + (m[1] + m[4] + m[7]) * q[1]
                    + (m[2] + m[5] + m[8]) * q[2];
                if s <= 0.0 {
                    continue;
                }
            }
            let w = self.weights(e, q);
            let n = if self.kind == MeshKind::Surface { 3 } else { 4 };
            let worst = w[..n].iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some(Location {
                    element: e,
                    weights: w,
                });
            }
            if worst >= -tol && best.is_none_or(|b| worst > b.0) {
                best = Some((
                    worst,
                    Location {
                        element: e,
                        weights: w,
                    },
                ));
            }
        }
        best.map(|(_, l)| l)
    }
}

fn invert3(m: &[f64; 9]) -> [f64; 9] {
    let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6]);
    let inv_det = 1.0 / det;
    [
        (m[4] * m[8] - m[5] * m[7]) * inv_det,
        (m[2] * m[7] - m[1] * m[8]) * inv_det,
        (m[1] * m[5] - m[2] * m[4]) * inv_det,
        (m[5] * m[6] - m[3] * m[8]) * inv_det,
        (m[0] * m[8] - m[2] * m[6]) * inv_det,
        (m[2] * m[3] - m[0] * m[5]) * inv_det,
        (m[3] * m[7] - m[4] * m[6]) * inv_det,
        (m[1] * m[6] - m[0] * m[7]) * inv_det,
        (m[0] * m[4] - m[1] * m[3]) * inv_det,
    ]
}

/// Interpolates nodal `values` at a located point.
pub fn interpolate(mesh: &Mesh, loc: &Location, values: &[f64]) -> f64 {
    mesh.element(loc.element)
        .iter()
        .zip(loc.weights.iter())
        .map(|(&i, w)| w * values[i])
        .sum()
}

/// Gradients of the P1 basis functions of element `e` (tangential to the
/// flat triangle for surface meshes).
pub fn basis_gradients(mesh: &Mesh, e: usize) -> [Vec3; 4] {
    let el = mesh.element(e);
    match mesh.kind {
        MeshKind::Surface => {
            let (a, b, c) = (mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]);
            let n = cross(sub(b, a), sub(c, a));
            let n2 = dot(n, n);
            let g = |p: Vec3, q: Vec3| scale(cross(n, sub(q, p)), 1.0 / n2);
            [g(b, c), g(c, a), g(a, b), [0.0; 3]]
        }
        MeshKind::Volume => {
            let a = mesh.nodes[el[0]];
            let (e1, e2, e3) = (
                sub(mesh.nodes[el[1]], a),
                sub(mesh.nodes[el[2]], a),
                sub(mesh.nodes[el[3]], a),
            );
            let det = det3(e1, e2, e3);
            let g1 = scale(cross(e2, e3), 1.0 / det);
            let g2 = scale(cross(e3, e1), 1.0 / det);
            let g3 = scale(cross(e1, e2), 1.0 / det);
            let g0 = scale(add(add(g1, g2), g3), -1.0);
            [g0, g1, g2, g3]
        }
    }
}

/// Constant gradient of a P1 field on element `e`.
pub fn element_gradient(mesh: &Mesh, e: usize, values: &[f64]) -> Vec3 {
    let g = basis_gradients(mesh, e);
    let mut out = [0.0; 3];
    for (k, &i) in mesh.element(e).iter().enumerate() {
        out = add(out, scale(g[k], values[i]));
    }
    out
}

pub fn element_centroid(mesh: &Mesh, e: usize) -> Vec3 {
    let el = mesh.element(e);
    let mut c = [0.0; 3];
    for &i in el {
        c = add(c, mesh.nodes[i]);
    }
    scale(c, 1.0 / el.len() as f64)
}
