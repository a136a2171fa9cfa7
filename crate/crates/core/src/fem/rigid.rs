//! Rigid motions `c + Ax` with `A` skew-symmetric, and least-squares fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::polygon::{Point, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RigidMotion {
    pub c: [f64; 2],
    /// `A = [[0, −ω], [ω, 0]]`.
    pub omega: f64,
}

impl RigidMotion {
    pub fn new(c: [f64; 2], omega: f64) -> Self {
        RigidMotion { c, omega }
    }

    /// Rotation by `ω` about `p`, i.e. `c = −Ap`.
    pub fn about(p: Point, omega: f64) -> Self {
        RigidMotion {
            c: [omega * p.y, -omega * p.x],
            omega,
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.omega], [self.omega, 0.0]]
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [self.c[0] - self.omega * y, self.c[1] + self.omega * x]
    }

    pub fn velocity(&self, p: &Point) -> Vec2 {
        let v = self.eval(p.x, p.y);
        Vec2::new(v[0], v[1])
    }

    /// Centre of rotation `p` with `c = −Ap`, when `ω ≠ 0`.
    pub fn center(&self) -> Option<Point> {
        (self.omega != 0.0).then(|| Point::new(-self.c[1] / self.omega, self.c[0] / self.omega))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RigidFit {
    pub motion: RigidMotion,
    /// Largest nodal deviation `max |u_i − c − A x_i|`.
    pub residual: f64,
    /// `max |x_i − x̄|` over the fitted nodes.
    pub radius: f64,
}

/// Least-squares rigid motion through the pairs `(x_i, u_i)`.
pub fn fit_rigid_motion(points: &[Point], u: &[[f64; 2]]) -> Result<RigidFit> {
    if points.len() != u.len() {
        return Err(Error::Invalid("point and field counts differ".into()));
    }
    let n = points.len();
    if n < 3 {
        return Err(Error::Precondition("rigid fit needs at least three nodes".into()));
    }
    let inv = 1.0 / n as f64;
    let xbar = points.iter().fold(Vec2::zeros(), |a, p| a + p.coords) * inv;
    let ubar = u.iter().fold(Vec2::zeros(), |a, v| a + Vec2::new(v[0], v[1])) * inv;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    let mut num = 0.0;
    let mut radius = 0.0f64;
    for (p, v) in points.iter().zip(u) {
        let d = p.coords - xbar;
        let w = Vec2::new(v[0], v[1]) - ubar;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
        // (A d) = ω (−d_y, d_x)
        num += -d.y * w.x + d.x * w.y;
        radius = radius.max(d.norm());
    }
    let den = sxx + syy;
    let spread = (sxx * syy - sxy * sxy).max(0.0).sqrt();
    if !(spread > 1e-12 * den) {
        return Err(Error::Precondition("rigid fit needs three non-collinear nodes".into()));
    }
    let omega = num / den;
    let c = ubar - Vec2::new(-omega * xbar.y, omega * xbar.x);
    let motion = RigidMotion { c: [c.x, c.y], omega };
    let mut residual = 0.0f64;
    for (p, v) in points.iter().zip(u) {
        let r = motion.eval(p.x, p.y);
        residual = residual.max(((v[0] - r[0]).powi(2) + (v[1] - r[1]).powi(2)).sqrt());
    }
    Ok(RigidFit {
        motion,
        residual,
        radius,
    })
}
