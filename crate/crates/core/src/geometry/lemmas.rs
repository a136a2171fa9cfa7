//! Instance-level checks of the set-theoretic lemmas behind the uniqueness
//! argument, evaluated on polygonal data.

use serde::Serialize;

use super::boolean::{difference, intersection};
use super::classify::classify_boundary;
use super::polygon::{point_segment_distance, Edge, PolygonalSet};
use super::sets::{compute_g0, compute_v, tag_roles};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum LemmaInstance {
    /// `A ⊂ B` connected with `∂A ⊂ ∂B`; conclusion `A = B`.
    BoundaryInclusion { a: PolygonalSet, b: PolygonalSet },
    /// Shared reduced boundary of `E` and `F`; normals agree or are opposite.
    SharedNormals { e: PolygonalSet, f: PolygonalSet },
    /// A two-obstacle scene; checks the `G0` / `V` lemmas.
    Scene {
        omega: PolygonalSet,
        o1: PolygonalSet,
        o2: PolygonalSet,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    pub instance: usize,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn lies_on(edge: &Edge, set: &PolygonalSet, tol: f64) -> bool {
    let m = edge.midpoint();
    set.edges().any(|o| {
        point_segment_distance(&edge.a, &o.a, &o.b) <= tol
            && point_segment_distance(&edge.b, &o.a, &o.b) <= tol
            && point_segment_distance(&m, &o.a, &o.b) <= tol
    })
}

/// Runs every applicable lemma on every instance. A failed hypothesis is a
/// precondition error; a failed conclusion is a [`Error::LemmaViolation`].
pub fn check_appendix_lemmas(instances: &[LemmaInstance]) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for (k, inst) in instances.iter().enumerate() {
        match inst {
            LemmaInstance::BoundaryInclusion { a, b } => report.checks.push(boundary_inclusion(k, a, b)?),
            LemmaInstance::SharedNormals { e, f } => report.checks.push(shared_normals(k, e, f)?),
            LemmaInstance::Scene { omega, o1, o2 } => report.checks.extend(scene_lemmas(k, omega, o1, o2)?),
        }
    }
    if let Some(bad) = report.checks.iter().find(|c| !c.holds) {
        return Err(Error::LemmaViolation(format!(
            "{} fails on instance {}: {}",
            bad.lemma, bad.instance, bad.detail
        )));
    }
    Ok(report)
}

fn boundary_inclusion(k: usize, a: &PolygonalSet, b: &PolygonalSet) -> Result<LemmaCheck> {
    let eps = a.eps().max(b.eps());
    let tol = 8.0 * eps;
    if a.components().len() != 1 || b.components().len() != 1 {
        return Err(Error::Precondition(format!("instance {k}: A and B must be connected")));
    }
    if difference(a, b)?.area() > eps * a.perimeter() {
        return Err(Error::Precondition(format!("instance {k}: A ⊄ B")));
    }
    if !a.edges().all(|e| lies_on(&e, b, tol)) {
        return Err(Error::Precondition(format!("instance {k}: ∂A ⊄ ∂B")));
    }
    let gap = difference(b, a)?.area();
    Ok(LemmaCheck {
        lemma: "A.1",
        instance: k,
        holds: gap <= eps * b.perimeter(),
        detail: format!("|B \\ A| = {gap:.3e}"),
    })
}

fn shared_normals(k: usize, e: &PolygonalSet, f: &PolygonalSet) -> Result<LemmaCheck> {
    let eps = e.eps().max(f.eps());
    let tol = 8.0 * eps;
    let (mut same, mut opposite, mut other) = (0.0, 0.0, 0.0);
    for edge in e.edges() {
        for o in f.edges() {
            // overlap of two collinear edges, measured along `edge`
            let d = edge.b - edge.a;
            let len = d.norm();
            if point_segment_distance(&o.a, &edge.a, &edge.b) > tol
                && point_segment_distance(&o.b, &edge.a, &edge.b) > tol
                && point_segment_distance(&edge.a, &o.a, &o.b) > tol
            {
                continue;
            }
            let on_line = |p: &super::polygon::Point| super::polygon::cross(&d, &(p - edge.a)).abs() / len <= tol;
            if !(on_line(&o.a) && on_line(&o.b)) {
                continue;
            }
            let u = d / len;
            let t0 = (o.a - edge.a).dot(&u);
            let t1 = (o.b - edge.a).dot(&u);
            let overlap = (t0.max(t1).min(len) - t0.min(t1).max(0.0)).max(0.0);
            if overlap <= tol {
                continue;
            }
            let dot = edge.outward_normal().dot(&o.outward_normal());
            if (dot - 1.0).abs() <= 1e-9 {
                same += overlap;
            } else if (dot + 1.0).abs() <= 1e-9 {
                opposite += overlap;
            } else {
                other += overlap;
            }
        }
    }
    let disjoint = intersection(e, f)?.area() <= eps * (e.perimeter() + f.perimeter());
    let holds = other == 0.0 && (!disjoint || same == 0.0);
    Ok(LemmaCheck {
        lemma: "A.2",
        instance: k,
        holds,
        detail: format!(
            "shared length: same normal {same:.6}, opposite {opposite:.6}, neither {other:.3e}; disjoint = {disjoint}"
        ),
    })
}

fn scene_lemmas(k: usize, omega: &PolygonalSet, o1: &PolygonalSet, o2: &PolygonalSet) -> Result<Vec<LemmaCheck>> {
    let (omega, o1, o2) = tag_roles(omega, o1, o2);
    let eps = omega.eps();
    let tol = 8.0 * eps;
    let g0 = compute_g0(&omega, &o1, &o2)?;
    let v = compute_v(&omega, &g0, &o1, &o2)?;
    let mut checks = Vec::new();

    // ∂G0 ∩ (∂O1 \ ∂O2) ≠ ∅
    let witness: f64 = g0
        .edges()
        .filter(|e| lies_on(e, &o1, tol) && !lies_on(e, &o2, tol))
        .map(|e| e.length())
        .sum();
    checks.push(LemmaCheck {
        lemma: "2.1",
        instance: k,
        holds: witness > 0.0,
        detail: format!("length of ∂G0 on ∂O1 \\ ∂O2: {witness:.6}"),
    });

    // points just outside O1 next to ∂G0 ∩ (∂O1 \ ∂O2) belong to G0
    let mut probes = 0usize;
    let mut misses = 0usize;
    for e in g0.edges().filter(|e| lies_on(e, &o1, tol) && !lies_on(e, &o2, tol)) {
        // ∂G0 edges keep G0 on their left, i.e. outside O1
        let delta = (1e-3 * e.length()).max(100.0 * eps);
        let p = e.midpoint() - e.outward_normal() * delta;
        probes += 1;
        if !g0.contains(&p) {
            misses += 1;
        }
    }
    checks.push(LemmaCheck {
        lemma: "2.2",
        instance: k,
        holds: misses == 0,
        detail: format!("{misses} of {probes} collar probes outside G0"),
    });

    // ∅ ≠ ∂V \ ∂O2 ⊂ ∂G0 ∩ ∂O1
    let mut free_len = 0.0;
    let mut bad_len = 0.0;
    for e in v.edges() {
        if lies_on(&e, &o2, tol) {
            continue;
        }
        free_len += e.length();
        if !(lies_on(&e, &g0, tol) && lies_on(&e, &o1, tol)) {
            bad_len += e.length();
        }
    }
    checks.push(LemmaCheck {
        lemma: "2.4",
        instance: k,
        holds: free_len > 0.0 && bad_len == 0.0,
        detail: format!("|∂V \\ ∂O2| = {free_len:.6}, outside ∂G0 ∩ ∂O1: {bad_len:.3e}"),
    });

    let perimeter_v = v.perimeter();
    let bound = o1.perimeter() + o2.perimeter();
    checks.push(LemmaCheck {
        lemma: "3.1",
        instance: k,
        holds: perimeter_v <= bound * (1.0 + 1e-12),
        detail: format!("per(V) = {perimeter_v:.6} ≤ per(O1) + per(O2) = {bound:.6}"),
    });

    let classes = classify_boundary(&v, &o1, &o2)?;
    checks.push(LemmaCheck {
        lemma: "3.3",
        instance: k,
        holds: classes.untagged_length == 0.0,
        detail: format!(
            "same-as-O1 {:.6}, opposite-of-O2 {:.6}",
            classes.same_as_o1_length, classes.opposite_of_o2_length
        ),
    });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon::{BoundarySource, Point};
    use crate::geometry::shapes::{disk, rectangle};

    #[test]
    fn identical_sets_satisfy_boundary_inclusion() {
        let a = disk(Point::new(0.0, 0.0), 0.4, 64, BoundarySource::Free).unwrap();
        let r = check_appendix_lemmas(&[LemmaInstance::BoundaryInclusion { a: a.clone(), b: a }]).unwrap();
        assert!(r.all_hold());
    }

    #[test]
    fn disjoint_shared_edge_has_opposite_normals() {
        let e = rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), BoundarySource::Free).unwrap();
        let f = rectangle(Point::new(1.0, 0.25), Point::new(2.0, 0.75), BoundarySource::Free).unwrap();
        let r = check_appendix_lemmas(&[LemmaInstance::SharedNormals { e, f }]).unwrap();
        assert!(r.checks[0].detail.contains("opposite 0.500000"));
    }

    #[test]
    fn overlapping_disk_scene() {
        let omega = rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), BoundarySource::Omega).unwrap();
        let o1 = disk(Point::new(-0.15, 0.0), 0.4, 128, BoundarySource::Obstacle1).unwrap();
        let o2 = disk(Point::new(0.2, 0.05), 0.35, 128, BoundarySource::Obstacle2).unwrap();
        let r = check_appendix_lemmas(&[LemmaInstance::Scene { omega, o1, o2 }]).unwrap();
        assert_eq!(r.checks.len(), 5);
        assert!(r.all_hold());
    }
}
