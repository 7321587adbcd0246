use branchlab_core::tiling::{SphericalPolytope, Tiling};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn reflection(n: [f64; 3]) -> [f64; 9] {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let n = [n[0] / r, n[1] / r, n[2] / r];
    let mut m = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            m[i * 3 + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * n[i] * n[j];
        }
    }
    m
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; 9];
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
            }
        }
    }
    c
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Shortest word length of `target` in the facet reflections of the base
/// cell, by breadth-first search over words.
fn bfs_word_length(t: &Tiling, target: &[f64]) -> usize {
    let base = t.base_cell();
    let v = base.vertices();
    let gens: Vec<[f64; 9]> = [(1, 2), (0, 2), (0, 1)]
        .iter()
        .map(|&(i, j)| reflection(cross(&v[i], &v[j])))
        .collect();
    let id = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let mut frontier = vec![id.clone()];
    let mut seen = vec![id];
    for len in 0..32 {
        if frontier.iter().any(|m| close(m, target)) {
            return len;
        }
        let mut next = Vec::new();
        for m in &frontier {
            for g in &gens {
                let w = mul(m, g);
                if !seen.iter().any(|s| close(s, &w)) {
                    seen.push(w.clone());
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    panic!("element not reached");
}

fn centroid(p: &SphericalPolytope) -> Vec<f64> {
    let c = p.center();
    c.to_vec()
}

#[test]
fn tetrahedral_tiling_counts() {
    let t = Tiling::simplex(3).unwrap();
    assert_eq!(t.cells().len(), 4);
    assert_eq!(t.vertices().len(), 4);
    assert_eq!(t.group().len(), 24);
    t.validate().unwrap();
    for f in t.skeleton(0) {
        assert_eq!(f.cells.len(), 3);
    }
    for f in t.skeleton(1) {
        assert_eq!(f.cells.len(), 2);
    }
    let odd = t.odd_skeleton();
    assert_eq!(odd.len(), 4);
}

#[test]
fn circle_tiling_is_three_arcs() {
    let t = Tiling::simplex(2).unwrap();
    assert_eq!(t.cells().len(), 3);
    assert_eq!(t.group().len(), 6);
    for c in t.cells() {
        let len = c.polytope.measure().unwrap();
        assert!((len - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
    assert!(t.odd_skeleton().is_empty());
}

#[test]
fn higher_simplex_tiling() {
    let t = Tiling::simplex(4).unwrap();
    assert_eq!(t.cells().len(), 5);
    assert_eq!(t.group().len(), 120);
    assert!(t.odd_skeleton().iter().all(|f| f.cells.len() == 3));
    assert_eq!(t.odd_skeleton().len(), 10);
}

#[test]
fn rejects_small_dimension() {
    assert!(Tiling::simplex(1).is_err());
}

#[test]
fn cell_areas_equal_and_cover_sphere() {
    let t = Tiling::simplex(3).unwrap();
    let areas: Vec<f64> = t
        .cells()
        .iter()
        .map(|c| c.polytope.measure().unwrap())
        .collect();
    for a in &areas {
        assert!((a - areas[0]).abs() < 1e-10);
    }
    assert!((areas.iter().sum::<f64>() - 4.0 * std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn octant_tiling_has_even_vertices() {
    let base = SphericalPolytope::simplex(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    let t = Tiling::from_simplex_cell(base).unwrap();
    assert_eq!(t.group().len(), 8);
    assert_eq!(t.cells().len(), 8);
    for f in t.skeleton(0) {
        assert_eq!(f.cells.len(), 4);
    }
    assert!(t.odd_skeleton().is_empty());
    for f in t.skeleton(0) {
        let w = t.cycle_witness(f).unwrap();
        assert_eq!(w.sign, 1);
        assert_eq!(w.steps, 4);
    }
}

#[test]
fn vertex_isotropy_has_order_six() {
    let t = Tiling::simplex(3).unwrap();
    for v in t.vertices() {
        assert_eq!(t.isotropy(v).len(), 6);
    }
}

#[test]
fn cycle_around_odd_vertex_flips_sign() {
    let t = Tiling::simplex(3).unwrap();
    for f in t.odd_skeleton() {
        let w = t.cycle_witness(&f).unwrap();
        assert_eq!(w.steps, 3);
        assert_eq!(w.sign, -1);
        assert!(w.returns_to_start);
    }
}

#[test]
fn classify_base_centroid_and_single_reflection() {
    let t = Tiling::simplex(3).unwrap();
    let c = centroid(t.base_cell());
    let k = t.classify_point(&c).unwrap();
    assert_eq!((k.cell, k.element, k.parity), (0, 0, 1));
    for &gi in t.generators() {
        let g = &t.group()[gi];
        let y = g.apply(&c);
        let k = t.classify_point(&y).unwrap();
        assert_ne!(k.cell, 0);
        assert_eq!(k.element, gi);
        assert_eq!(k.parity, -1);
    }
}

#[test]
fn classify_rejects_points_off_sphere() {
    let t = Tiling::simplex(3).unwrap();
    assert!(t.classify_point(&[0.5, 0.0, 0.0]).is_err());
}

#[test]
fn classify_parity_matches_bfs_word_length() {
    let t = Tiling::simplex(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < 1e-3 {
            continue;
        }
        let y: Vec<f64> = v.iter().map(|x| x / r).collect();
        let k = t.classify_point(&y).unwrap();
        let g = &t.group()[k.element];
        let len = bfs_word_length(&t, &g.matrix);
        assert_eq!(k.parity as i32, if len.is_multiple_of(2) { 1 } else { -1 });
        // the element really carries the base cell onto the classified cell
        let back = g.apply_inverse(&y);
        let kb = t.classify_point(&back).unwrap();
        assert_eq!(kb.cell, 0);
    }
}

#[test]
fn face_points_go_to_lowest_index_cell() {
    let t = Tiling::simplex(3).unwrap();
    let v = &t.vertices()[0];
    let k = t.classify_point(v).unwrap();
    let lowest = t
        .skeleton(0)
        .iter()
        .find(|f| f.vertices == vec![0])
        .unwrap()
        .cells[0];
    assert_eq!(k.cell, lowest);
}

#[test]
fn plain_text_dump_lists_every_element() {
    let t = Tiling::simplex(3).unwrap();
    let s = t.to_string();
    assert_eq!(s.lines().filter(|l| l.starts_with("element ")).count(), 24);
    assert!(s.starts_with("tiling dim 3 vertices 4 cells 4 group 24"));
}
