//! Quadrature rules on polygonal cells and straight facets.
//!
//! Cell rules are built by triangulating the polygon (centroid fan for
//! convex cells, ear clipping for nonconvex ones) and placing a collapsed
//! tensor Gauss rule of the requested exactness on every sub-triangle.
//! Facet rules are mapped Gauss-Legendre rules.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::geometry::Point;
use crate::mesh::{Cell, Facet, PolyMesh};

/// Positive-weight quadrature rule, exact for polynomials of total degree
/// at most `exactness` on its domain.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of the weights: the measure of the integration domain.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrate a scalar function.
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on a straight facet with `ceil((q+1)/2)` points;
/// weights include the length Jacobian.
pub fn facet_quadrature(mesh: &PolyMesh, facet: &Facet, q: u32) -> QuadratureRule {
    let n = ((q as usize) + 2) / 2;
    let (nodes, gl_weights) = gauss_legendre(n);
    let a = mesh.vertex(facet.vertices.0);
    let b = mesh.vertex(facet.vertices.1);
    let mid = facet.midpoint;
    let half = (b - a) * 0.5;
    let jac = 0.5 * facet.length;
    let points = nodes.iter().map(|&t| mid + half * t).collect();
    let weights = gl_weights.iter().map(|&w| w * jac).collect();
    QuadratureRule {
        points,
        weights,
        exactness: q,
    }
}

/// Rule of exactness `q` on a single triangle via the collapsed
/// (Duffy-type) tensor Gauss rule. All weights are positive.
fn triangle_rule(a: Point, b: Point, c: Point, q: u32) -> Result<(Vec<Point>, Vec<f64>), Error> {
    let area2 = (b - a).cross(c - a); // twice the signed area
    if area2 <= 0.0 || !area2.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "sub-triangle with signed area {:e}",
            0.5 * area2
        )));
    }
    // Reference map (u,v) in [0,1]^2 -> (x, y(1-x)) soaks up one extra
    // degree in u from the Jacobian.
    let nu = ((q as usize) + 3) / 2;
    let nv = ((q as usize) + 2) / 2;
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (&u01m, &wa) in xu.iter().zip(&wu) {
        let u = 0.5 * (u01m + 1.0);
        for (&v01m, &wb) in xv.iter().zip(&wv) {
            let v = 0.5 * (v01m + 1.0);
            // Barycentric-style coordinates on the reference triangle.
            let r = u;
            let s = v * (1.0 - u);
            let x = a.x + (b.x - a.x) * r + (c.x - a.x) * s;
            let y = a.y + (b.y - a.y) * r + (c.y - a.y) * s;
            let w = wa * wb * 0.25 * (1.0 - u) * area2;
            points.push(Point::new(x, y));
            weights.push(w);
        }
    }
    Ok((points, weights))
}

/// Quadrature of exactness `q` on a polygonal cell.
///
/// Triangles are used directly; other convex cells are fanned from the
/// centroid; nonconvex cells are ear-clipped with a deterministic
/// lowest-index-ear rule.
pub fn cell_quadrature(mesh: &PolyMesh, cell: &Cell, q: u32) -> Result<QuadratureRule, Error> {
    let pts = mesh.cell_points(cell.id);
    let tris = triangulate(mesh, cell, &pts)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (a, b, c) in tris {
        let (p, w) = triangle_rule(a, b, c, q)?;
        points.extend(p);
        weights.extend(w);
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: q,
    })
}

fn triangulate(
    mesh: &PolyMesh,
    cell: &Cell,
    pts: &[Point],
) -> Result<Vec<(Point, Point, Point)>, Error> {
    let n = pts.len();
    if n == 3 {
        return Ok(alloc::vec![(pts[0], pts[1], pts[2])]);
    }
    if mesh.cell_is_convex(cell.id) {
        let c = cell.centroid;
        return Ok((0..n).map(|i| (c, pts[i], pts[(i + 1) % n])).collect());
    }
    ear_clip(pts, cell.diameter)
}

/// Ear clipping for simple polygons. Ears are searched in vertex order and
/// the lowest-index ear is clipped first, so the triangulation (and hence
/// the quadrature point set) is reproducible.
fn ear_clip(pts: &[Point], diameter: f64) -> Result<Vec<(Point, Point, Point)>, Error> {
    let mut ids: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len() - 2);
    let area_tol = 1e-14 * diameter * diameter;
    while ids.len() > 3 {
        let m = ids.len();
        let mut clipped = false;
        for k in 0..m {
            let prev = pts[ids[(k + m - 1) % m]];
            let curr = pts[ids[k]];
            let next = pts[ids[(k + 1) % m]];
            let cross = (curr - prev).cross(next - curr);
            if cross <= area_tol {
                continue; // reflex or degenerate corner
            }
            let mut blocked = false;
            for j in 0..m {
                if j == k || j == (k + m - 1) % m || j == (k + 1) % m {
                    continue;
                }
                if point_in_triangle(pts[ids[j]], prev, curr, next) {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                tris.push((prev, curr, next));
                ids.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::DegenerateGeometry(
                "ear clipping found no ear; polygon is degenerate".into(),
            ));
        }
    }
    tris.push((pts[ids[0]], pts[ids[1]], pts[ids[2]]));
    Ok(tris)
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
}

/// Arc-length coordinate of `p` on `facet`, in `[-1, 1]`, oriented from
/// the lower vertex id to the higher.
pub fn facet_coordinate(mesh: &PolyMesh, facet: &Facet, p: Point) -> f64 {
    let a = mesh.vertex(facet.vertices.0);
    let b = mesh.vertex(facet.vertices.1);
    let dir = (b - a).normalized();
    2.0 * (p - facet.midpoint).dot(dir) / facet.length
}
