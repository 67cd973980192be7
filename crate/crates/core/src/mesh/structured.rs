use super::grid::{PolyMesh, Rect};
use crate::geometry::Point2;

/// Tensor-product quadrilateral mesh on the given coordinate lines.
pub fn tensor_polymesh(xs: &[f64], ys: &[f64]) -> PolyMesh {
    assert!(xs.len() >= 2 && ys.len() >= 2);
    assert!(xs.windows(2).all(|w| w[1] > w[0]) && ys.windows(2).all(|w| w[1] > w[0]));
    let nx = xs.len();
    let nodes = ys.iter().flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y))).collect();
    let mut cells = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let n = j * nx + i;
            cells.push(vec![n, n + 1, n + 1 + nx, n + nx]);
        }
    }
    PolyMesh { nodes, cells }
}

fn lines(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 }).collect()
}

/// Uniform `nx` by `ny` quadrilateral mesh.
pub fn cartesian_polymesh(domain: &Rect, nx: usize, ny: usize) -> PolyMesh {
    tensor_polymesh(&lines(domain.xmin, domain.xmax, nx), &lines(domain.ymin, domain.ymax, ny))
}

/// Uniform mesh with every square split into two triangles along alternating diagonals.
pub fn cartesian_triangles(domain: &Rect, nx: usize, ny: usize) -> PolyMesh {
    let quads = cartesian_polymesh(domain, nx, ny);
    let mut cells = Vec::with_capacity(2 * quads.cells.len());
    for (k, q) in quads.cells.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        if (i + j) % 2 == 0 {
            cells.push(vec![q[0], q[1], q[2]]);
            cells.push(vec![q[0], q[2], q[3]]);
        } else {
            cells.push(vec![q[0], q[1], q[3]]);
            cells.push(vec![q[1], q[2], q[3]]);
        }
    }
    PolyMesh { nodes: quads.nodes, cells }
}
