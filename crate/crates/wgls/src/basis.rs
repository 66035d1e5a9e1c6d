//! Scaled monomial bases on cells and facets.
//!
//! Cell bases are centroid-centered, diameter-scaled monomials
//! `((x-x_T)/h_T)^a ((y-y_T)/h_T)^b` ordered by total degree; facet bases
//! are powers of the arc-length coordinate `s in [-1,1]` oriented from the
//! lower to the higher vertex id, so both adjacent cells evaluate the same
//! trace functions. An optional L2-orthonormalized variant exists for
//! badly conditioned cells.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::geometry::Point;
use crate::linalg::DenseMatrix;
use crate::mesh::{Cell, Facet, PolyMesh};
use crate::quadrature::{facet_coordinate, QuadratureRule};

/// Number of bivariate monomials of total degree at most `r`.
pub const fn poly_space_dim(r: u32) -> usize {
    ((r as usize + 1) * (r as usize + 2)) / 2
}

/// Exponent pairs `(a, b)` of the degree-`<= r` monomials, ordered by
/// total degree, then by increasing `b`.
pub fn monomial_exponents(r: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(poly_space_dim(r));
    for d in 0..=r {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Scaled monomial basis of `P_r` on one cell.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub cell_id: usize,
    pub degree: u32,
    centroid: Point,
    diameter: f64,
    exponents: Vec<(u32, u32)>,
    /// Optional change of basis: function i = sum_j comb[(j, i)] * monomial_j.
    combination: Option<DenseMatrix>,
}

impl CellBasis {
    pub fn new(cell: &Cell, degree: u32) -> Self {
        Self {
            cell_id: cell.id,
            degree,
            centroid: cell.centroid,
            diameter: cell.diameter,
            exponents: monomial_exponents(degree),
            combination: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Values of all basis functions at the given points; row per point,
    /// column per basis function.
    pub fn eval(&self, points: &[Point]) -> DenseMatrix {
        let raw = self.eval_monomials(points);
        self.apply_combination(raw)
    }

    /// Gradients with the `1/h_T` chain-rule factor; returns the pair of
    /// x- and y-derivative matrices with the same layout as [`Self::eval`].
    pub fn eval_grad(&self, points: &[Point]) -> (DenseMatrix, DenseMatrix) {
        let n = points.len();
        let dim = self.dim();
        let mut gx = DenseMatrix::zeros(n, dim);
        let mut gy = DenseMatrix::zeros(n, dim);
        let inv_h = 1.0 / self.diameter;
        for (row, &p) in points.iter().enumerate() {
            let xs = (p.x - self.centroid.x) * inv_h;
            let ys = (p.y - self.centroid.y) * inv_h;
            let px = powers(xs, self.degree);
            let py = powers(ys, self.degree);
            for (col, &(a, b)) in self.exponents.iter().enumerate() {
                if a > 0 {
                    gx[(row, col)] =
                        a as f64 * px[(a - 1) as usize] * py[b as usize] * inv_h;
                }
                if b > 0 {
                    gy[(row, col)] =
                        b as f64 * px[a as usize] * py[(b - 1) as usize] * inv_h;
                }
            }
        }
        (
            self.apply_combination(gx),
            self.apply_combination(gy),
        )
    }

    fn eval_monomials(&self, points: &[Point]) -> DenseMatrix {
        let n = points.len();
        let dim = self.dim();
        let mut m = DenseMatrix::zeros(n, dim);
        let inv_h = 1.0 / self.diameter;
        for (row, &p) in points.iter().enumerate() {
            let xs = (p.x - self.centroid.x) * inv_h;
            let ys = (p.y - self.centroid.y) * inv_h;
            let px = powers(xs, self.degree);
            let py = powers(ys, self.degree);
            for (col, &(a, b)) in self.exponents.iter().enumerate() {
                m[(row, col)] = px[a as usize] * py[b as usize];
            }
        }
        m
    }

    fn apply_combination(&self, raw: DenseMatrix) -> DenseMatrix {
        match &self.combination {
            None => raw,
            Some(c) => raw.matmul(c),
        }
    }

    /// L2-orthonormalized variant of this basis: the Cholesky factor of the
    /// monomial mass matrix is inverted into a change of basis, after which
    /// the mass matrix is the identity. Fallback for cells where the plain
    /// monomial Gram matrix is numerically rank-deficient.
    pub fn orthonormalized(mut self, rule: &QuadratureRule) -> Result<Self, Error> {
        self.combination = None;
        let mass = mass_matrix_cell(&self, rule);
        let chol = mass.cholesky()?;
        // comb = L^{-T}: solve L C = I then transpose-free use: we need
        // basis_new = basis_raw * L^{-T}, i.e. comb solves L^T comb = I.
        let dim = self.dim();
        let mut comb = DenseMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut col = alloc::vec![0.0; dim];
            col[j] = 1.0;
            chol.solve_transposed_in_place(&mut col);
            for i in 0..dim {
                comb[(i, j)] = col[i];
            }
        }
        self.combination = Some(comb);
        Ok(self)
    }
}

fn powers(x: f64, r: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(r as usize + 1);
    let mut acc = 1.0;
    out.push(1.0);
    for _ in 0..r {
        acc *= x;
        out.push(acc);
    }
    out
}

/// Monomial basis `1, s, ..., s^k` in the facet arc-length coordinate.
#[derive(Debug, Clone)]
pub struct FacetBasis {
    pub facet_id: usize,
    pub degree: u32,
}

impl FacetBasis {
    pub fn new(facet: &Facet, degree: u32) -> Self {
        Self {
            facet_id: facet.id,
            degree,
        }
    }

    pub fn dim(&self) -> usize {
        self.degree as usize + 1
    }

    /// Values at physical points lying on the facet.
    pub fn eval(&self, mesh: &PolyMesh, facet: &Facet, points: &[Point]) -> DenseMatrix {
        debug_assert_eq!(facet.id, self.facet_id);
        let mut m = DenseMatrix::zeros(points.len(), self.dim());
        for (row, &p) in points.iter().enumerate() {
            let s = facet_coordinate(mesh, facet, p);
            let ps = powers(s, self.degree);
            for (col, v) in ps.iter().enumerate() {
                m[(row, col)] = *v;
            }
        }
        m
    }
}

/// Mass matrix of a cell basis under the given rule. Symmetric by
/// construction; SPD whenever the rule has exactness >= 2*degree.
pub fn mass_matrix_cell(basis: &CellBasis, rule: &QuadratureRule) -> DenseMatrix {
    debug_assert!(rule.exactness >= 2 * basis.degree);
    let values = basis.eval(&rule.points);
    weighted_gram(&values, &rule.weights)
}

/// Mass matrix of a facet basis under the given rule.
pub fn mass_matrix_facet(
    mesh: &PolyMesh,
    facet: &Facet,
    basis: &FacetBasis,
    rule: &QuadratureRule,
) -> DenseMatrix {
    debug_assert!(rule.exactness >= 2 * basis.degree);
    let values = basis.eval(mesh, facet, &rule.points);
    weighted_gram(&values, &rule.weights)
}

/// `G_ij = sum_q w_q v[(q, i)] v[(q, j)]`, exactly symmetric.
pub fn weighted_gram(values: &DenseMatrix, weights: &[f64]) -> DenseMatrix {
    let dim = values.cols();
    let mut m = DenseMatrix::zeros(dim, dim);
    for (q, &w) in weights.iter().enumerate() {
        let row = values.row(q);
        for i in 0..dim {
            let wi = w * row[i];
            if wi == 0.0 {
                continue;
            }
            for j in i..dim {
                m[(i, j)] += wi * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}
