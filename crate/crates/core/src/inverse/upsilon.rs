//! The class `Υ_{A,c}` of obstacles whose boundary is everywhere tangent to
//! the rigid velocity field `c + Ax`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::RigidMotion;
use crate::geometry::polygon::PolygonalSet;
use crate::geometry::shapes::DEFAULT_CIRCLE_SEGMENTS;

#[derive(Clone, Debug)]
pub struct UpsilonQuery {
    pub obstacle: PolygonalSet,
    pub rigid: RigidMotion,
    pub tolerance: f64,
}

impl UpsilonQuery {
    /// Query with [`upsilon_default_tolerance`].
    pub fn new(obstacle: PolygonalSet, rigid: RigidMotion) -> Self {
        let tolerance = upsilon_default_tolerance(&obstacle, &rigid);
        UpsilonQuery {
            obstacle,
            rigid,
            tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UpsilonResult {
    pub member: bool,
    /// `max |(c + Ax)·ν_O|` over the boundary samples.
    pub residual: f64,
    pub tolerance: f64,
}

/// The residual of a regular 128-gon inscribed in a member disk:
/// `max_{∂O} |c + Ax| · sin(π/128)`.
pub fn upsilon_default_tolerance(obstacle: &PolygonalSet, rigid: &RigidMotion) -> f64 {
    let speed = obstacle
        .vertices()
        .map(|p| rigid.velocity(p).norm())
        .fold(0.0f64, f64::max);
    (speed * (PI / DEFAULT_CIRCLE_SEGMENTS as f64).sin() * (1.0 + 1e-9)).max(f64::MIN_POSITIVE)
}

/// Samples every edge of `∂O` at its endpoints and midpoint against that
/// edge's outward normal.
pub fn upsilon_membership(q: &UpsilonQuery) -> Result<UpsilonResult> {
    if !(q.tolerance > 0.0) {
        return Err(Error::Invalid(format!(
            "Υ tolerance must be positive, got {}",
            q.tolerance
        )));
    }
    if q.obstacle.is_empty() {
        return Err(Error::Invalid("Υ query on an empty obstacle".into()));
    }
    let mut residual = 0.0f64;
    for e in q.obstacle.edges() {
        let n = e.outward_normal();
        for p in [e.a, e.midpoint(), e.b] {
            residual = residual.max(q.rigid.velocity(&p).dot(&n).abs());
        }
    }
    Ok(UpsilonResult {
        member: residual <= q.tolerance,
        residual,
        tolerance: q.tolerance,
    })
}

/// True when `|c| > M = max_Ω |Ax|`, which rules out every nonempty member
/// of `Υ_{A,c}` inside `Ω`.
pub fn upsilon_empty_certificate(rigid: &RigidMotion, omega: &PolygonalSet) -> bool {
    let m = omega
        .vertices()
        .map(|p| rigid.omega.abs() * p.coords.norm())
        .fold(0.0f64, f64::max);
    rigid.c[0].hypot(rigid.c[1]) > m
}
