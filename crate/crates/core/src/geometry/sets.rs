//! The reachable region `G0` and the contradiction set `V`.
//!
//! `G0` is the component of `Ω \ (O1 ∪ O2)` whose boundary contains `∂Ω`.
//! `V` is a component of `(Ω \ G0) \ O2` whose boundary meets `∂G0`.

use std::cmp::Ordering;

use super::boolean::{difference, union};
use super::polygon::{BoundarySource, Point, PolygonalSet};
use crate::error::{Error, Result};

/// Relabels obstacle / domain sets so that provenance reflects their role.
pub(crate) fn tag_roles(
    omega: &PolygonalSet,
    o1: &PolygonalSet,
    o2: &PolygonalSet,
) -> (PolygonalSet, PolygonalSet, PolygonalSet) {
    let omega = if omega.edges().all(|e| e.provenance.source.is_exterior()) {
        omega.clone()
    } else {
        omega.with_source(BoundarySource::Omega)
    };
    (
        omega,
        o1.with_source(BoundarySource::Obstacle1),
        o2.with_source(BoundarySource::Obstacle2),
    )
}

/// Checks `O ⊂⊂ Ω` and that `Ω \ O` is connected.
pub fn check_obstacle(omega: &PolygonalSet, obstacle: &PolygonalSet, name: &str) -> Result<()> {
    if obstacle.is_empty() {
        return Ok(());
    }
    let eps = omega.eps().max(obstacle.eps());
    for v in obstacle.vertices() {
        if !omega.contains(v) || omega.distance_to_boundary(v) <= 10.0 * eps {
            return Err(Error::Precondition(format!(
                "{name} is not compactly contained in Ω (vertex ({:.6}, {:.6}))",
                v.x, v.y
            )));
        }
    }
    let outside = difference(obstacle, omega)?;
    if outside.area() > eps * obstacle.perimeter() {
        return Err(Error::Precondition(format!("{name} leaves Ω")));
    }
    let rest = difference(omega, obstacle)?;
    let n = rest.components().len();
    if n != 1 {
        return Err(Error::Precondition(format!(
            "Ω \\ {name} has {n} components, expected 1"
        )));
    }
    Ok(())
}

/// The component of `Ω \ (O1 ∪ O2)` whose boundary contains `∂Ω`.
pub fn compute_g0(omega: &PolygonalSet, o1: &PolygonalSet, o2: &PolygonalSet) -> Result<PolygonalSet> {
    let (omega, o1, o2) = tag_roles(omega, o1, o2);
    check_obstacle(&omega, &o1, "O1")?;
    check_obstacle(&omega, &o2, "O2")?;
    let obstacles = union(&o1, &o2)?;
    let free = difference(&omega, &obstacles)?;
    let outer_len = omega.perimeter();
    let tol = 1e-9 * outer_len.max(1.0);
    for comp in free.components() {
        let exterior: f64 = comp
            .edges()
            .filter(|e| e.provenance.source.is_exterior())
            .map(|e| e.length())
            .sum();
        if (exterior - outer_len).abs() <= tol {
            return Ok(comp);
        }
    }
    Err(Error::Precondition(
        "no component of Ω \\ (O1 ∪ O2) has all of ∂Ω on its boundary".into(),
    ))
}

/// A component of `(Ω \ G0) \ O2` whose boundary meets `∂G0`; the largest one
/// when several qualify, ties broken by the lexicographically smallest
/// leftmost vertex.
pub fn compute_v(
    omega: &PolygonalSet,
    g0: &PolygonalSet,
    o1: &PolygonalSet,
    o2: &PolygonalSet,
) -> Result<PolygonalSet> {
    let (omega, o1, o2) = tag_roles(omega, o1, o2);
    let eps = omega.eps();
    let o1_minus_o2 = difference(&o1, &o2)?;
    if o1_minus_o2.area() <= eps * o1.perimeter().max(1.0) {
        return Err(Error::Precondition("O1 ⊂ O2: no admissible component V".into()));
    }
    let unreachable = difference(&omega, g0)?;
    let candidates = difference(&unreachable, &o2)?;
    let touch = 8.0 * eps;
    let mut qualified: Vec<PolygonalSet> = candidates
        .components()
        .into_iter()
        .filter(|c| c.vertices().any(|v| g0.distance_to_boundary(v) <= touch))
        .collect();
    if qualified.is_empty() {
        return Err(Error::Precondition(
            "no component of (Ω \\ G0) \\ O2 touches ∂G0".into(),
        ));
    }
    qualified.sort_by(|a, b| {
        b.area()
            .partial_cmp(&a.area())
            .unwrap_or(Ordering::Equal)
            .then_with(|| cmp_point(&leftmost(a), &leftmost(b)))
    });
    Ok(qualified.swap_remove(0))
}

fn leftmost(s: &PolygonalSet) -> Point {
    *s.vertices().min_by(|a, b| cmp_point(a, b)).expect("nonempty set")
}

fn cmp_point(a: &Point, b: &Point) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
}
