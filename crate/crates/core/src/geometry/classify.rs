//! Classification of `∂V` against the obstacle boundaries.
//!
//! Every positive-length edge of `∂V` must lie on `∂O1` with the same outward
//! normal or on `∂O2` with the opposite one; junction vertices between the two
//! kinds are reported as zero-length corners.

use serde::Serialize;

use super::polygon::{point_segment_distance, Edge, Point, PolygonalSet, Vec2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeTag {
    SameAsO1,
    OppositeOfO2,
    Corner,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeClassification {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub tag: EdgeTag,
    /// Outward unit normal of `V` (for corners, the normalised mean of the
    /// two adjacent edge normals).
    pub normal: [f64; 2],
    /// `ν_V · ν_O` for the matched obstacle edge (0 for corners).
    pub normal_dot: f64,
}

impl EdgeClassification {
    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryClassification {
    pub edges: Vec<EdgeClassification>,
    pub same_as_o1_length: f64,
    pub opposite_of_o2_length: f64,
    pub untagged_length: f64,
}

impl BoundaryClassification {
    pub fn tagged_fraction(&self) -> f64 {
        let total = self.same_as_o1_length + self.opposite_of_o2_length + self.untagged_length;
        if total == 0.0 {
            1.0
        } else {
            (self.same_as_o1_length + self.opposite_of_o2_length) / total
        }
    }
}

/// `Some(dot)` when `edge` lies on some edge of `set`, with `dot = ν_edge · ν_set`.
fn match_on_boundary(edge: &Edge, set: &PolygonalSet, tol: f64) -> Option<f64> {
    let n = edge.outward_normal();
    let m = edge.midpoint();
    let mut best: Option<f64> = None;
    for o in set.edges() {
        if point_segment_distance(&edge.a, &o.a, &o.b) <= tol
            && point_segment_distance(&edge.b, &o.a, &o.b) <= tol
            && point_segment_distance(&m, &o.a, &o.b) <= tol
        {
            let dot = n.dot(&o.outward_normal());
            // prefer the candidate closest to exactly parallel
            if best.map_or(true, |b| (dot.abs() - 1.0).abs() < (b.abs() - 1.0).abs()) {
                best = Some(dot);
            }
        }
    }
    best
}

/// Tags every edge of `∂V`. Fails if a positive-length edge lies on neither
/// obstacle boundary with the expected normal relation.
pub fn classify_boundary(v: &PolygonalSet, o1: &PolygonalSet, o2: &PolygonalSet) -> Result<BoundaryClassification> {
    let eps = v.eps().max(o1.eps()).max(o2.eps());
    let tol = 8.0 * eps;
    let mut out = BoundaryClassification {
        edges: Vec::new(),
        same_as_o1_length: 0.0,
        opposite_of_o2_length: 0.0,
        untagged_length: 0.0,
    };
    for ring in v.rings() {
        let n = ring.len();
        let mut ring_tags: Vec<(EdgeTag, Vec2)> = Vec::with_capacity(n);
        for edge in ring.edges() {
            let len = edge.length();
            // endpoint perturbations of size eps tilt a short edge by eps/len
            let dot_tol = 1e-12_f64.max(4.0 * eps / len);
            let normal = edge.outward_normal();
            let same = match_on_boundary(&edge, o1, tol).filter(|d| (d - 1.0).abs() <= dot_tol);
            let opposite = match_on_boundary(&edge, o2, tol).filter(|d| (d + 1.0).abs() <= dot_tol);
            let (tag, dot) = match (same, opposite) {
                (Some(d), _) => (EdgeTag::SameAsO1, d),
                (None, Some(d)) => (EdgeTag::OppositeOfO2, d),
                (None, None) => {
                    return Err(Error::Geometry(format!(
                        "edge ({:.9}, {:.9}) -> ({:.9}, {:.9}) of length {len:.3e} lies on neither ∂O1 (same normal) nor ∂O2 (opposite normal)",
                        edge.a.x, edge.a.y, edge.b.x, edge.b.y
                    )));
                }
            };
            match tag {
                EdgeTag::SameAsO1 => out.same_as_o1_length += len,
                _ => out.opposite_of_o2_length += len,
            }
            ring_tags.push((tag, normal));
            out.edges.push(EdgeClassification {
                a: [edge.a.x, edge.a.y],
                b: [edge.b.x, edge.b.y],
                tag,
                normal: [normal.x, normal.y],
                normal_dot: dot,
            });
        }
        // junctions where the tag changes
        for i in 0..n {
            let prev = (i + n - 1) % n;
            if ring_tags[prev].0 != ring_tags[i].0 {
                let p: Point = ring.vertices()[i];
                let mut nrm = ring_tags[prev].1 + ring_tags[i].1;
                if nrm.norm() > 0.0 {
                    nrm /= nrm.norm();
                }
                out.edges.push(EdgeClassification {
                    a: [p.x, p.y],
                    b: [p.x, p.y],
                    tag: EdgeTag::Corner,
                    normal: [nrm.x, nrm.y],
                    normal_dot: 0.0,
                });
            }
        }
    }
    Ok(out)
}
