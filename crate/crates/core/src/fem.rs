//! P1 finite element assembly on triangle and tetrahedron meshes.

use alloc::vec::Vec;

use crate::math::dot;
use crate::mesh::{basis_gradients, Mesh, MeshKind};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Stiffness and consistent mass matrices over all nodes.
pub fn stiffness_mass(mesh: &Mesh) -> (CsrMatrix, CsrMatrix) {
    let n = mesh.nodes().len();
    let mut k = TripletBuilder::new(n);
    let mut m = TripletBuilder::new(n);
    let npe = mesh.nodes_per_element();
    let denom = match mesh.kind() {
        MeshKind::Surface => 12.0,
        MeshKind::Volume => 20.0,
    };
    for e in 0..mesh.element_count() {
        let el = mesh.element(e);
        let vol = mesh.element_measure(e).abs();
        let g = basis_gradients(mesh, e);
        for a in 0..npe {
            for b in 0..npe {
                k.add(el[a], el[b], vol * dot(g[a], g[b]));
                m.add(el[a], el[b], vol / denom * if a == b { 2.0 } else { 1.0 });
            }
        }
    }
    (k.build(), m.build())
}

/// Scatters values given on `free` nodes into a full nodal vector.
pub fn scatter(n: usize, free: &[usize], values: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    for (&i, &v) in free.iter().zip(values) {
        out[i] = v;
    }
    out
}

/// `xᵀ A y` for a sparse symmetric matrix.
pub fn bilinear(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    dot_vec(x, &a.mul_vec(y))
}

pub(crate) fn dot_vec(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
