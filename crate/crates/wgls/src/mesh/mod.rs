//! Polytopal mesh data model: vertices, facets with per-cell outward
//! normals, polygonal cells (possibly nonconvex), and inflow-boundary
//! classification.
//!
//! Meshes are immutable after construction and safe to share across
//! threads. Connectivity is derived from per-cell vertex loops; facets are
//! never stored in input files.

mod boundary;
mod generate;

pub use boundary::{classify_boundary, BoundaryClassification};
pub use generate::{generate_nonconvex_polygonal, generate_triangular};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::geometry::{Point, Vec2};

/// Marker for the unused cell slot of a boundary facet.
const NO_CELL: usize = usize::MAX;

/// An edge of the mesh. Interior facets join exactly two cells, boundary
/// facets one. The vertex pair is stored with the lower id first; facet
/// polynomials are always parametrized in that direction so that both
/// adjacent cells see the same trace basis.
#[derive(Debug, Clone)]
pub struct Facet {
    pub id: usize,
    pub vertices: (usize, usize),
    pub length: f64,
    pub midpoint: Point,
    cells: [usize; 2],
    normals: [Vec2; 2],
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.cells[1] == NO_CELL
    }

    /// Adjacent cell ids (one for boundary facets, two for interior).
    pub fn cells(&self) -> &[usize] {
        if self.is_boundary() {
            &self.cells[..1]
        } else {
            &self.cells[..]
        }
    }

    /// Outward unit normal of `cell` on this facet.
    pub fn outward_normal(&self, cell: usize) -> Option<Vec2> {
        self.cells()
            .iter()
            .position(|&c| c == cell)
            .map(|slot| self.normals[slot])
    }

    pub fn other_cell(&self, cell: usize) -> Option<usize> {
        if self.is_boundary() {
            None
        } else if self.cells[0] == cell {
            Some(self.cells[1])
        } else if self.cells[1] == cell {
            Some(self.cells[0])
        } else {
            None
        }
    }
}

/// A polygonal cell with counterclockwise vertex loop.
#[derive(Debug, Clone)]
pub struct Cell {
    pub id: usize,
    /// CCW vertex loop (no repeated closing vertex).
    pub vertices: Vec<usize>,
    /// Facet ids aligned with the edges `(vertices[i], vertices[i+1])`.
    pub facets: Vec<usize>,
    /// Cell diameter: maximum pairwise vertex distance.
    pub diameter: f64,
    pub centroid: Point,
    pub area: f64,
}

/// Immutable polytopal mesh (2D).
#[derive(Debug, Clone)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    facets: Vec<Facet>,
    cells: Vec<Cell>,
    boundary_facets: Vec<usize>,
    h: f64,
}

impl PolyMesh {
    /// Build a mesh from vertex coordinates and per-cell vertex loops.
    ///
    /// Loops may be given in either orientation; they are normalized to
    /// counterclockwise. Facets and boundary information are derived.
    pub fn from_cells(vertices: Vec<Point>, cell_loops: Vec<Vec<usize>>) -> Result<Self, Error> {
        for (i, p) in vertices.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        if cell_loops.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }

        let mut cells = Vec::with_capacity(cell_loops.len());
        let mut facets: Vec<Facet> = Vec::new();
        let mut facet_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();

        for (cell_id, mut loop_ids) in cell_loops.into_iter().enumerate() {
            if loop_ids.len() < 3 {
                return Err(Error::InvalidMesh(format!(
                    "cell {cell_id} has fewer than 3 vertices"
                )));
            }
            for &v in &loop_ids {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "cell {cell_id} references missing vertex {v}"
                    )));
                }
            }
            {
                let mut sorted = loop_ids.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidMesh(format!(
                        "cell {cell_id} repeats a vertex"
                    )));
                }
            }

            let signed = signed_area(&vertices, &loop_ids);
            if signed < 0.0 {
                loop_ids.reverse();
            }
            let area = signed.abs();
            if area <= 0.0 || !area.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "cell {cell_id} has non-positive area"
                )));
            }
            if !is_simple_polygon(&vertices, &loop_ids) {
                return Err(Error::InvalidMesh(format!(
                    "cell {cell_id} is self-intersecting"
                )));
            }

            let n = loop_ids.len();
            let mut cell_facets = Vec::with_capacity(n);
            for e in 0..n {
                let a = loop_ids[e];
                let b = loop_ids[(e + 1) % n];
                let key = (a.min(b), a.max(b));
                let pa = vertices[a];
                let pb = vertices[b];
                let tangent = pb - pa;
                if tangent.norm() == 0.0 {
                    return Err(Error::InvalidMesh(format!(
                        "cell {cell_id} has a zero-length edge"
                    )));
                }
                let outward = tangent.perp_cw().normalized();
                let fid = match facet_ids.get(&key) {
                    Some(&fid) => {
                        let facet = &mut facets[fid];
                        if facet.cells[1] != NO_CELL {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({},{}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        facet.cells[1] = cell_id;
                        facet.normals[1] = outward;
                        fid
                    }
                    None => {
                        let fid = facets.len();
                        facet_ids.insert(key, fid);
                        let (lo, hi) = key;
                        facets.push(Facet {
                            id: fid,
                            vertices: key,
                            length: vertices[lo].distance(vertices[hi]),
                            midpoint: vertices[lo].midpoint(vertices[hi]),
                            cells: [cell_id, NO_CELL],
                            normals: [outward, Vec2::default()],
                        });
                        fid
                    }
                };
                cell_facets.push(fid);
            }

            let diameter = max_pairwise_distance(&vertices, &loop_ids);
            let centroid = polygon_centroid(&vertices, &loop_ids, area);
            cells.push(Cell {
                id: cell_id,
                vertices: loop_ids,
                facets: cell_facets,
                diameter,
                centroid,
                area,
            });
        }

        let boundary_facets: Vec<usize> = facets
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| f.id)
            .collect();
        let h = cells.iter().map(|c| c.diameter).fold(0.0f64, f64::max);

        let mesh = Self {
            vertices,
            facets,
            cells,
            boundary_facets,
            h,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facet(&self, i: usize) -> &Facet {
        &self.facets[i]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    /// Ids of boundary facets, ascending.
    pub fn boundary_facets(&self) -> &[usize] {
        &self.boundary_facets
    }

    pub const fn dimension(&self) -> usize {
        2
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// Coordinates of a cell's vertex loop.
    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    /// Whether the cell polygon is convex (collinear vertices allowed).
    pub fn cell_is_convex(&self, cell: usize) -> bool {
        let pts = self.cell_points(cell);
        let n = pts.len();
        let tol = 1e-12 * self.cells[cell].diameter * self.cells[cell].diameter;
        (0..n).all(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let c = pts[(i + 2) % n];
            (b - a).cross(c - b) >= -tol
        })
    }

    /// Check the structural invariants. Called by [`PolyMesh::from_cells`];
    /// also useful after deserializing a mesh built elsewhere.
    pub fn validate(&self) -> Result<(), Error> {
        for cell in &self.cells {
            for (&fid, e) in cell.facets.iter().zip(0..) {
                let facet = &self.facets[fid];
                if !facet.cells().contains(&cell.id) {
                    return Err(Error::InvalidMesh(format!(
                        "cell {} lists facet {fid} which does not point back",
                        cell.id
                    )));
                }
                let a = cell.vertices[e];
                let b = cell.vertices[(e + 1) % cell.vertices.len()];
                if facet.vertices != (a.min(b), a.max(b)) {
                    return Err(Error::InvalidMesh(format!(
                        "cell {} edge {e} does not match facet {fid}",
                        cell.id
                    )));
                }
            }
        }
        for facet in &self.facets {
            for &cid in facet.cells() {
                if !self.cells[cid].facets.contains(&facet.id) {
                    return Err(Error::InvalidMesh(format!(
                        "facet {} lists cell {cid} which does not point back",
                        facet.id
                    )));
                }
            }
            for slot in 0..facet.cells().len() {
                let n = facet.normals[slot].norm();
                if (n - 1.0).abs() > 1e-14 {
                    return Err(Error::InvalidMesh(format!(
                        "facet {} normal is not unit length",
                        facet.id
                    )));
                }
            }
            if !facet.is_boundary() {
                let sum = facet.normals[0] + facet.normals[1];
                if sum.norm() > 1e-14 {
                    return Err(Error::InvalidMesh(format!(
                        "facet {} interior normals do not cancel",
                        facet.id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn signed_area(vertices: &[Point], loop_ids: &[usize]) -> f64 {
    let n = loop_ids.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = vertices[loop_ids[i]];
        let q = vertices[loop_ids[(i + 1) % n]];
        acc += p.x * q.y - q.x * p.y;
    }
    0.5 * acc
}

fn max_pairwise_distance(vertices: &[Point], loop_ids: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for (i, &a) in loop_ids.iter().enumerate() {
        for &b in &loop_ids[i + 1..] {
            best = best.max(vertices[a].distance(vertices[b]));
        }
    }
    best
}

fn polygon_centroid(vertices: &[Point], loop_ids: &[usize], area: f64) -> Point {
    let n = loop_ids.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = vertices[loop_ids[i]];
        let q = vertices[loop_ids[(i + 1) % n]];
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point::new(cx / (6.0 * area), cy / (6.0 * area))
}

/// Proper segment intersection test for the simplicity check. Shared
/// endpoints of adjacent edges do not count as intersections.
fn is_simple_polygon(vertices: &[Point], loop_ids: &[usize]) -> bool {
    let n = loop_ids.len();
    let seg = |i: usize| {
        (
            vertices[loop_ids[i]],
            vertices[loop_ids[(i + 1) % n]],
        )
    };
    for i in 0..n {
        for j in (i + 1)..n {
            // Adjacent edges share a vertex by construction.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        (q - p).cross(r - p) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn unit_square_mesh() -> PolyMesh {
        let vertices = alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn single_square_metrics() {
        let mesh = unit_square_mesh();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.n_facets(), 4);
        let cell = mesh.cell(0);
        assert!((cell.area - 1.0).abs() < 1e-15);
        assert!((cell.diameter - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((cell.centroid.x - 0.5).abs() < 1e-15);
        assert!((cell.centroid.y - 0.5).abs() < 1e-15);
        assert_eq!(mesh.boundary_facets().len(), 4);
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let vertices = alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let mesh = PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![3, 2, 1, 0]]).unwrap();
        assert!(signed_area(mesh.vertices(), &mesh.cell(0).vertices) > 0.0);
    }

    #[test]
    fn missing_vertex_is_rejected() {
        let vertices = alloc::vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let err = PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![0, 1, 7]]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn self_intersecting_loop_is_rejected() {
        // Bowtie quadrilateral.
        let vertices = alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let err = PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn interior_facet_normals_cancel() {
        let mesh = generate_triangular(2, Rect::BIUNIT);
        for facet in mesh.facets() {
            if !facet.is_boundary() {
                let cells = facet.cells();
                let n0 = facet.outward_normal(cells[0]).unwrap();
                let n1 = facet.outward_normal(cells[1]).unwrap();
                assert!((n0 + n1).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn nonconvex_cell_detection() {
        // L-shaped hexagon with one reflex corner.
        let vertices = alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ];
        let mesh =
            PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![0, 1, 2, 3, 4, 5]]).unwrap();
        assert!(!mesh.cell_is_convex(0));
        let square = unit_square_mesh();
        assert!(square.cell_is_convex(0));
    }
}
