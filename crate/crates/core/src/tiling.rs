//! Reflection tilings of `S^{n-1}`: the spherical projection of the regular
//! `n`-simplex (the tetrahedral tiling when `n = 3`) and a generic
//! constructor for simplicial cells whose facet reflections generate a
//! finite group.
//!
//! Group elements are explicit orthogonal matrices found by breadth-first
//! search over words in the generating reflections, so the BFS depth of an
//! element is its shortest word length and its parity is `det`.
//! Only the simplex family is built in; the Platonic tilings (octahedral,
//! icosahedral) can be fed through [`Tiling::from_simplex_cell`] when their
//! fundamental cell is a simplex.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::math::{det_dense, solve_dense};

const UNIT_TOL: f64 = 1e-12;
const SAME_POINT: f64 = 1e-8;
const MAX_GROUP: usize = 50_000;

/// Closed convex spherical polytope in `S^{n-1} ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPolytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Vec<usize>>,
    center: Vec<f64>,
}

impl SphericalPolytope {
    /// Spherical simplex spanned by `n` unit vectors in `ℝⁿ`; facet `k`
    /// omits vertex `k`.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        if dim < 2 || vertices.len() != dim || vertices.iter().any(|v| v.len() != dim) {
            return Err(invalid(
                "a spherical simplex in R^n needs n vertices of length n",
            ));
        }
        check_unit(&vertices)?;
        let flat: Vec<f64> = vertices.iter().flatten().copied().collect();
        if det_dense(&flat, dim).abs() < 1e-12 {
            return Err(invalid("simplex vertices are linearly dependent"));
        }
        let center = normalized(&sum_rows(&vertices));
        if vertices.iter().any(|v| dot(v, &center) <= 1e-12) {
            return Err(invalid("polytope is not inside an open hemisphere"));
        }
        let facets = (0..dim)
            .map(|k| (0..dim).filter(|&i| i != k).collect())
            .collect();
        Ok(Self {
            dim,
            vertices,
            facets,
            center,
        })
    }

    /// Convex spherical polygon on `S²` with vertices in boundary order and
    /// a chosen interior `center` used for fan triangulation.
    pub fn polygon(vertices: Vec<[f64; 3]>, center: [f64; 3]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(invalid("polygon needs at least 3 vertices"));
        }
        let verts: Vec<Vec<f64>> = vertices.iter().map(|v| v.to_vec()).collect();
        check_unit(&verts)?;
        let c = normalized(&center);
        if verts.iter().any(|v| dot(v, &c) < -UNIT_TOL) {
            return Err(invalid(
                "polygon is not inside a closed hemisphere about its center",
            ));
        }
        let k = verts.len();
        let facets = (0..k).map(|i| vec![i, (i + 1) % k]).collect();
        Ok(Self {
            dim: 3,
            vertices: verts,
            facets,
            center: c,
        })
    }

    /// Upper hemisphere about `pole`, described as the polygon on four
    /// equator points (its corners are straight angles).
    pub fn hemisphere(pole: [f64; 3]) -> Result<Self> {
        let p = normalized(&pole);
        let a = if p[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let e1 = normalized(&sub(&a, &scale(&p, dot(&a, &p))));
        let e2 = vec![
            p[1] * e1[2] - p[2] * e1[1],
            p[2] * e1[0] - p[0] * e1[2],
            p[0] * e1[1] - p[1] * e1[0],
        ];
        let to3 = |v: Vec<f64>| [v[0], v[1], v[2]];
        let verts = vec![
            to3(e1.clone()),
            to3(e2.clone()),
            to3(scale(&e1, -1.0)),
            to3(scale(&e2, -1.0)),
        ];
        Self::polygon(verts, to3(p))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn is_simplex(&self) -> bool {
        self.vertices.len() == self.dim
    }

    pub fn vertex3(&self, i: usize) -> [f64; 3] {
        let v = &self.vertices[i];
        [v[0], v[1], v[2]]
    }

    pub fn center3(&self) -> [f64; 3] {
        [self.center[0], self.center[1], self.center[2]]
    }

    /// Measure in `S^{n-1}` (arc length for `n = 2`, area for `n = 3`).
    pub fn measure(&self) -> Option<f64> {
        match self.dim {
            2 => Some(angle(&self.vertices[0], &self.vertices[1])),
            3 => {
                let c = self.center3();
                let k = self.vertices.len();
                if k == 3 {
                    return Some(spherical_triangle_area(
                        self.vertex3(0),
                        self.vertex3(1),
                        self.vertex3(2),
                    ));
                }
                Some(
                    (0..k)
                        .map(|i| {
                            spherical_triangle_area(c, self.vertex3(i), self.vertex3((i + 1) % k))
                        })
                        .sum(),
                )
            }
            _ => None,
        }
    }

    /// Interior angle at vertex `i` of a polygon on `S²`.
    pub fn vertex_angle(&self, i: usize) -> f64 {
        let k = self.vertices.len();
        let p = self.vertex3(i);
        let a = self.vertex3((i + k - 1) % k);
        let b = self.vertex3((i + 1) % k);
        let ta = crate::math::normalize(crate::math::sub(
            a,
            crate::math::scale(p, crate::math::dot(a, p)),
        ));
        let tb = crate::math::normalize(crate::math::sub(
            b,
            crate::math::scale(p, crate::math::dot(b, p)),
        ));
        crate::math::dot(ta, tb).clamp(-1.0, 1.0).acos()
    }
}

/// Exact area of the spherical triangle with unit-vector corners.
pub fn spherical_triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    use crate::math::{det3, dot};
    let num = det3(a, b, c).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// Orthogonal `n x n` matrix with the parity of its shortest reflection word.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub matrix: Vec<f64>,
    pub parity: i8,
    pub word_length: usize,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1.0;
        }
        Self {
            matrix,
            parity: 1,
            word_length: 0,
        }
    }

    pub fn dim(&self) -> usize {
        (self.matrix.len() as f64).sqrt().round() as usize
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix, x)
    }

    /// Applies the inverse (transpose).
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.matrix[i * n + j] * x[i]).sum())
            .collect()
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            matrix: mat_mul(&self.matrix, &other.matrix),
            parity: self.parity * other.parity,
            word_length: self.word_length + other.word_length,
        }
    }

    pub fn distance(&self, other: &GroupElement) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn determinant(&self) -> f64 {
        det_dense(&self.matrix, self.dim())
    }
}

/// A face of the tiling: sorted global vertex ids and incident cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub vertices: Vec<usize>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub polytope: SphericalPolytope,
    /// Global ids, ordered so that base vertex `i` maps to `vertex_ids[i]`.
    pub vertex_ids: Vec<usize>,
    /// Group element carrying the base cell onto this one.
    pub element: usize,
    inverse_frame: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tiling {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Cell>,
    group: Vec<GroupElement>,
    generators: Vec<usize>,
    skeleta: BTreeMap<usize, Vec<Face>>,
}

/// Result of [`Tiling::classify_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub cell: usize,
    pub element: usize,
    pub parity: i8,
}

/// Reflections around an `(n-3)`-face, walked once around the cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleWitness {
    pub cells: Vec<usize>,
    pub steps: usize,
    pub sign: i8,
    /// Product of the face reflections along the cycle.
    pub holonomy: Vec<f64>,
    pub returns_to_start: bool,
}

impl Tiling {
    /// Tiling of `S^{n-1}` by spherical projections of the facets of the
    /// regular `n`-simplex; the group is the full symmetric group `S_{n+1}`.
    pub fn simplex(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("simplex tiling needs n >= 2, got {n}")));
        }
        let verts = regular_simplex_vertices(n);
        // base cell: the facet opposite vertex 0
        Self::from_simplex_cell(SphericalPolytope::simplex(verts[1..].to_vec())?)
    }

    /// Builds the tiling generated by reflections across the facets of a
    /// simplicial base cell. Fails if the group is not finite (within the
    /// search cap) or the images do not tile the sphere combinatorially.
    pub fn from_simplex_cell(base: SphericalPolytope) -> Result<Self> {
        if !base.is_simplex() {
            return Err(invalid("base cell must be a spherical simplex"));
        }
        let n = base.dim();
        let mut group = vec![GroupElement::identity(n)];
        let reflections: Vec<GroupElement> = base
            .facets()
            .iter()
            .map(|f| {
                let pts: Vec<Vec<f64>> = f.iter().map(|&i| base.vertices()[i].clone()).collect();
                let normal = hyperplane_normal(&pts, n);
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * normal[i] * normal[j];
                    }
                }
                GroupElement {
                    matrix: m,
                    parity: -1,
                    word_length: 1,
                }
            })
            .collect();
        let mut generators = Vec::new();
        let mut head = 0;
        while head < group.len() {
            let g = group[head].clone();
            for s in &reflections {
                let h = g.compose(s);
                match group.iter().position(|e| e.distance(&h) < SAME_POINT) {
                    Some(idx) => {
                        if head == 0 && !generators.contains(&idx) && idx != 0 {
                            generators.push(idx);
                        }
                    }
                    None => {
                        if head == 0 {
                            generators.push(group.len());
                        }
                        group.push(h);
                        if group.len() > MAX_GROUP {
                            return Err(invalid(
                                "reflection group is not finite (search cap reached)",
                            ));
                        }
                    }
                }
            }
            head += 1;
        }
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut cells: Vec<Cell> = Vec::new();
        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (gi, g) in group.iter().enumerate() {
            let ids: Vec<usize> = base
                .vertices()
                .iter()
                .map(|v| {
                    let w = g.apply(v);
                    match vertices.iter().position(|u| dist(u, &w) < SAME_POINT) {
                        Some(i) => i,
                        None => {
                            vertices.push(w);
                            vertices.len() - 1
                        }
                    }
                })
                .collect();
            let mut key = ids.clone();
            key.sort_unstable();
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key, cells.len());
            let verts: Vec<Vec<f64>> = ids.iter().map(|&i| vertices[i].clone()).collect();
            let polytope = SphericalPolytope::simplex(verts.clone())?;
            cells.push(Cell {
                polytope,
                vertex_ids: ids,
                element: gi,
                inverse_frame: frame_inverse(&verts, n)?,
            });
        }
        let mut skeleta = BTreeMap::new();
        for l in 0..n {
            let mut faces: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for (ci, c) in cells.iter().enumerate() {
                let mut ids = c.vertex_ids.clone();
                ids.sort_unstable();
                for subset in subsets(&ids, l + 1) {
                    faces.entry(subset).or_default().push(ci);
                }
            }
            skeleta.insert(
                l,
                faces
                    .into_iter()
                    .map(|(vertices, cells)| Face { vertices, cells })
                    .collect(),
            );
        }
        Ok(Self {
            dim: n,
            vertices,
            cells,
            group,
            generators,
            skeleta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn group(&self) -> &[GroupElement] {
        &self.group
    }

    /// Indices (into [`Tiling::group`]) of the generating facet reflections.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn base_cell_index(&self) -> usize {
        0
    }

    pub fn base_cell(&self) -> &SphericalPolytope {
        &self.cells[0].polytope
    }

    /// Faces of dimension `l` (`l + 1` vertices), `0 <= l <= n-1`.
    pub fn skeleton(&self, l: usize) -> &[Face] {
        self.skeleta.get(&l).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `(n-3)`-faces lying in an odd number of cells: the branching strata.
    pub fn odd_skeleton(&self) -> Vec<Face> {
        if self.dim < 3 {
            return Vec::new();
        }
        self.skeleton(self.dim - 3)
            .iter()
            .filter(|f| f.cells.len() % 2 == 1)
            .cloned()
            .collect()
    }

    /// Locates `y` on the sphere: lowest-index containing cell, the group
    /// element carrying the base cell onto it, and that element's parity.
    pub fn classify_point(&self, y: &[f64]) -> Result<Classification> {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if y.len() != self.dim || (r - 1.0).abs() > 1e-10 {
            return Err(Error::NotOnSphere(r - 1.0));
        }
        let mut best: Option<(usize, f64)> = None;
        for (ci, c) in self.cells.iter().enumerate() {
            let bary = mat_vec(&c.inverse_frame, y);
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                let e = c.element;
                return Ok(Classification {
                    cell: ci,
                    element: e,
                    parity: self.group[e].parity,
                });
            }
            if best.is_none_or(|b| worst > b.1) {
                best = Some((ci, worst));
            }
        }
        // numerically on a face but outside every cell by rounding
        let (ci, _) = best.ok_or_else(|| invalid("tiling has no cells"))?;
        let e = self.cells[ci].element;
        Ok(Classification {
            cell: ci,
            element: e,
            parity: self.group[e].parity,
        })
    }

    /// Reflection taking cell `a` to the adjacent cell `b` across their
    /// shared facet.
    pub fn facet_reflection(&self, a: usize, b: usize) -> Option<GroupElement> {
        let shared: Vec<usize> = self.cells[a]
            .vertex_ids
            .iter()
            .copied()
            .filter(|v| self.cells[b].vertex_ids.contains(v))
            .collect();
        if shared.len() + 1 != self.dim {
            return None;
        }
        let pts: Vec<Vec<f64>> = shared.iter().map(|&i| self.vertices[i].clone()).collect();
        let normal = hyperplane_normal(&pts, self.dim);
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * normal[i] * normal[j];
            }
        }
        Some(GroupElement {
            matrix: m,
            parity: -1,
            word_length: 1,
        })
    }

    /// Walks once around `face` through the cells containing it, reflecting
    /// across each shared facet, and reports the accumulated sign.
    pub fn cycle_witness(&self, face: &Face) -> Result<CycleWitness> {
        let around = &face.cells;
        let start = *around
            .iter()
            .min()
            .ok_or_else(|| invalid("face has no cells"))?;
        let mut path = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        let n = self.dim;
        let mut holonomy = GroupElement::identity(n);
        loop {
            let next = around
                .iter()
                .copied()
                .filter(|&c| c != cur && c != prev && self.facet_reflection(cur, c).is_some())
                .min();
            let next = match next {
                Some(c) => c,
                // two cells: the walk returns straight to the start
                None if path.len() == 2 => start,
                None => return Err(invalid("cells around the face do not form a cycle")),
            };
            let refl = self
                .facet_reflection(cur, next)
                .expect("adjacent cells share a facet");
            holonomy = refl.compose(&holonomy);
            prev = cur;
            cur = next;
            if cur == start {
                break;
            }
            path.push(cur);
            if path.len() > around.len() {
                return Err(invalid("cycle walk did not close"));
            }
        }
        let steps = path.len();
        // the holonomy must carry the start cell onto itself
        let start_cell = &self.cells[start];
        let returns_to_start = start_cell.vertex_ids.iter().all(|&v| {
            let w = holonomy.apply(&self.vertices[v]);
            start_cell
                .vertex_ids
                .iter()
                .any(|&u| dist(&self.vertices[u], &w) < SAME_POINT)
        });
        let sign = if det_dense(&holonomy.matrix, n) < 0.0 {
            -1
        } else {
            1
        };
        Ok(CycleWitness {
            cells: path,
            steps,
            sign,
            holonomy: holonomy.matrix,
            returns_to_start,
        })
    }

    /// Checks closure, parity multiplicativity, orthogonality and the
    /// incidence rule that each `(l-1)`-face lies in at least two `l`-faces.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        for g in &self.group {
            let gtg = mat_mul(&transpose(&g.matrix, n), &g.matrix);
            let id = GroupElement::identity(n);
            if gtg
                .iter()
                .zip(&id.matrix)
                .any(|(a, b)| (a - b).abs() > 1e-12)
            {
                return Err(invalid("group element is not orthogonal"));
            }
            if (g.determinant() - g.parity as f64).abs() > 1e-10 {
                return Err(invalid("parity disagrees with determinant"));
            }
        }
        for a in &self.group {
            for b in &self.group {
                let c = a.compose(b);
                let hit = self.group.iter().find(|e| e.distance(&c) < 1e-10);
                match hit {
                    None => return Err(invalid("group is not closed")),
                    Some(e) if e.parity != a.parity * b.parity => {
                        return Err(invalid("parity is not a homomorphism"))
                    }
                    _ => {}
                }
            }
        }
        for l in 1..n.saturating_sub(1) {
            for f in self.skeleton(l - 1) {
                let containing = self
                    .skeleton(l)
                    .iter()
                    .filter(|g| f.vertices.iter().all(|v| g.vertices.contains(v)))
                    .count();
                if containing < 2 {
                    return Err(invalid(format!(
                        "{}-face lies in fewer than two {l}-faces",
                        l - 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Isotropy subgroup (indices) of a point on the sphere.
    pub fn isotropy(&self, y: &[f64]) -> Vec<usize> {
        (0..self.group.len())
            .filter(|&i| dist(&self.group[i].apply(y), y) < SAME_POINT)
            .collect()
    }
}

impl fmt::Display for Tiling {
    /// Plain-text dump: vertices, cells, group matrices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "tiling dim {} vertices {} cells {} group {}",
            self.dim,
            self.vertices.len(),
            self.cells.len(),
            self.group.len()
        )?;
        for (i, v) in self.vertices.iter().enumerate() {
            write!(f, "vertex {i}")?;
            for x in v {
                write!(f, " {x:.15e}")?;
            }
            writeln!(f)?;
        }
        for (i, c) in self.cells.iter().enumerate() {
            write!(f, "cell {i} element {}", c.element)?;
            for v in &c.vertex_ids {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        for (i, g) in self.group.iter().enumerate() {
            write!(f, "element {i} parity {} word {}", g.parity, g.word_length)?;
            for x in &g.matrix {
                write!(f, " {x:.15e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Unit vertices `v_0..v_n` of the regular simplex in `ℝⁿ` centred at 0.
pub fn regular_simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let m = n + 1;
    let c = 1.0 / m as f64;
    let pts: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 - c } else { -c }).collect())
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in pts.iter().take(n) {
        let mut v = p.clone();
        for b in &basis {
            let d = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= d * bi;
            }
        }
        basis.push(normalized(&v));
    }
    pts.iter()
        .map(|p| normalized(&basis.iter().map(|b| dot(p, b)).collect::<Vec<_>>()))
        .collect()
}

fn hyperplane_normal(pts: &[Vec<f64>], n: usize) -> Vec<f64> {
    // generalized cross product of n-1 vectors via cofactors
    let mut normal = vec![0.0; n];
    for (i, ni) in normal.iter_mut().enumerate() {
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for p in pts {
            for (j, x) in p.iter().enumerate() {
                if j != i {
                    minor.push(*x);
                }
            }
        }
        let d = if n == 1 {
            1.0
        } else {
            det_dense(&minor, n - 1)
        };
        *ni = if i % 2 == 0 { d } else { -d };
    }
    normalized(&normal)
}

fn frame_inverse(verts: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    // columns are vertices; invert column by column
    let mut a = vec![0.0; n * n];
    for (j, v) in verts.iter().enumerate() {
        for i in 0..n {
            a[i * n + j] = v[i];
        }
    }
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve_dense(&a, &e, n)?;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

fn check_unit(vertices: &[Vec<f64>]) -> Result<()> {
    for v in vertices {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotOnSphere(r - 1.0));
        }
    }
    Ok(())
}

pub(crate) fn mat_vec(m: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| m[i * n + j] * x[j]).sum())
        .collect()
}

pub(crate) fn mat_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = (a.len() as f64).sqrt().round() as usize;
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

fn sum_rows(v: &[Vec<f64>]) -> Vec<f64> {
    let n = v[0].len();
    (0..n).map(|j| v.iter().map(|r| r[j]).sum()).collect()
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

/// Human-readable label for a face, e.g. `{0,2}`.
pub fn face_label(face: &Face) -> String {
    let mut s = String::from("{");
    for (i, v) in face.vertices.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!("{v}"));
    }
    s.push('}');
    s
}
