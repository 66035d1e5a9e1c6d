//! Inflow boundary classification.
//!
//! A boundary facet belongs to the inflow set when the convection field at
//! its midpoint points strictly into the domain, `beta . n < 0`. Facets
//! where `beta . n` vanishes (characteristic facets) carry no data and are
//! classified with the outflow ones.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{Point, Vec2};
use crate::mesh::PolyMesh;

/// Partition of the boundary facets into inflow and non-inflow sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryClassification {
    inflow: Vec<usize>,
    nonin: Vec<usize>,
}

impl BoundaryClassification {
    /// Inflow facet ids, ascending.
    pub fn inflow_facets(&self) -> &[usize] {
        &self.inflow
    }

    /// Non-inflow (outflow or characteristic) facet ids, ascending.
    pub fn nonin_facets(&self) -> &[usize] {
        &self.nonin
    }

    pub fn is_inflow(&self, facet: usize) -> bool {
        self.inflow.binary_search(&facet).is_ok()
    }
}

/// Classify the boundary facets of `mesh` for the convection field `beta`.
///
/// `beta` is sampled at each boundary facet midpoint, keyed by the unique
/// adjacent cell so piecewise-defined fields are well posed. A facet is
/// inflow iff `beta . n < -eps` with `eps = 1e-12 * sup |beta|` over the
/// sampled values; this keeps characteristic facets (`beta . n = 0`) out
/// of the inflow set and makes the partition invariant under positive
/// scaling of `beta`.
pub fn classify_boundary(
    mesh: &PolyMesh,
    beta: impl Fn(usize, Point) -> Vec2,
) -> BoundaryClassification {
    let mut samples = Vec::with_capacity(mesh.boundary_facets().len());
    let mut sup = 0.0f64;
    for &fid in mesh.boundary_facets() {
        let facet = mesh.facet(fid);
        let cell = facet.cells()[0];
        let normal = facet.outward_normal(cell).unwrap();
        let b = beta(cell, facet.midpoint);
        sup = sup.max(b.x.abs().max(b.y.abs()));
        samples.push((fid, b.dot(normal)));
    }
    let eps = 1e-12 * sup;

    let mut inflow = Vec::new();
    let mut nonin = Vec::new();
    for (fid, dot) in samples {
        if dot < -eps {
            inflow.push(fid);
        } else {
            nonin.push(fid);
        }
    }
    BoundaryClassification { inflow, nonin }
}
