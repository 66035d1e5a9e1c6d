//! Built-in refinement families on an axis-aligned box.
//!
//! Both families halve the mesh size per level. The triangular family
//! splits each square of a `2^level x 2^level` grid along the lower-left
//! to upper-right diagonal. The nonconvex family splits each square into
//! an L-shaped hexagon covering three quadrants plus the remaining small
//! square; the small-square quadrant alternates in a checkerboard so that
//! neighboring cells always share whole facets (no hanging endpoints).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geometry::{Point, Rect};
use crate::mesh::PolyMesh;

fn check_domain(domain: &Rect) {
    assert!(
        domain.width() > 0.0 && domain.height() > 0.0,
        "domain box must have positive extent"
    );
}

/// Uniform triangular grid: `2^level x 2^level` squares, each split into
/// two triangles by the diagonal from lower-left to upper-right.
pub fn generate_triangular(level: u32, domain: Rect) -> PolyMesh {
    check_domain(&domain);
    assert!(level <= 14, "refinement level out of range");
    let n = 1usize << level;
    let dx = domain.width() / n as f64;
    let dy = domain.height() / n as f64;

    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(
                domain.xmin + i as f64 * dx,
                domain.ymin + j as f64 * dy,
            ));
        }
    }

    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            cells.push(alloc::vec![v00, v10, v11]);
            cells.push(alloc::vec![v00, v11, v01]);
        }
    }

    PolyMesh::from_cells(vertices, cells).expect("generated triangular mesh is valid")
}

/// Nonconvex polygonal grid: each square of a `2^level x 2^level` grid
/// becomes one L-shaped hexagon (three quadrants) and one small square
/// (the remaining quadrant). Requires `level >= 1`.
pub fn generate_nonconvex_polygonal(level: u32, domain: Rect) -> PolyMesh {
    check_domain(&domain);
    assert!(
        (1..=14).contains(&level),
        "nonconvex polygonal family requires 1 <= level <= 14"
    );
    let n = 1usize << level;
    // Vertices live on the half-step lattice; dedup through integer keys so
    // shared facet endpoints are bit-identical.
    let hx = domain.width() / (2 * n) as f64;
    let hy = domain.height() / (2 * n) as f64;
    let mut vertex_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut vertex = |key: (usize, usize), vertices: &mut Vec<Point>| -> usize {
        *vertex_ids.entry(key).or_insert_with(|| {
            let id = vertices.len();
            vertices.push(Point::new(
                domain.xmin + key.0 as f64 * hx,
                domain.ymin + key.1 as f64 * hy,
            ));
            id
        })
    };

    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (2 * i, 2 * j);
            let ll = vertex((x0, y0), &mut vertices);
            let lr = vertex((x0 + 2, y0), &mut vertices);
            let ur = vertex((x0 + 2, y0 + 2), &mut vertices);
            let ul = vertex((x0, y0 + 2), &mut vertices);
            let center = vertex((x0 + 1, y0 + 1), &mut vertices);
            if (i + j) % 2 == 0 {
                // Small square in the NE quadrant.
                let rm = vertex((x0 + 2, y0 + 1), &mut vertices);
                let tm = vertex((x0 + 1, y0 + 2), &mut vertices);
                cells.push(alloc::vec![ll, lr, rm, center, tm, ul]);
                cells.push(alloc::vec![center, rm, ur, tm]);
            } else {
                // Small square in the SW quadrant.
                let bm = vertex((x0 + 1, y0), &mut vertices);
                let lm = vertex((x0, y0 + 1), &mut vertices);
                cells.push(alloc::vec![bm, lr, ur, ul, lm, center]);
                cells.push(alloc::vec![ll, bm, center, lm]);
            }
        }
    }

    PolyMesh::from_cells(vertices, cells).expect("generated polygonal mesh is valid")
}
