//! Constructors for the shapes used by scenes and experiments.

use std::f64::consts::TAU;

use super::polygon::{BoundarySource, Point, Polygon, PolygonalSet};
use crate::error::{Error, Result};

/// Segment count used for circles unless a scene says otherwise.
pub const DEFAULT_CIRCLE_SEGMENTS: usize = 128;

/// Regular `n`-gon inscribed in the circle `(center, radius)`, first vertex at
/// angle `phase`.
pub fn regular_polygon(center: Point, radius: f64, n: usize, phase: f64, source: BoundarySource) -> Result<Polygon> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::Geometry(format!("circle radius must be positive, got {radius}")));
    }
    if n < 3 {
        return Err(Error::Geometry(format!("circle needs at least 3 segments, got {n}")));
    }
    let vertices = (0..n)
        .map(|k| {
            let t = phase + TAU * k as f64 / n as f64;
            Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
        })
        .collect();
    Polygon::new(vertices, source)
}

pub fn disk(center: Point, radius: f64, n: usize, source: BoundarySource) -> Result<PolygonalSet> {
    Ok(PolygonalSet::from_polygon(regular_polygon(
        center, radius, n, 0.0, source,
    )?))
}

pub fn rectangle(min: Point, max: Point, source: BoundarySource) -> Result<PolygonalSet> {
    let ring = Polygon::new(
        vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)],
        source,
    )?;
    Ok(PolygonalSet::from_polygon(ring))
}

/// Star-shaped polygon with vertices at `center + r(θ_k)(cos θ_k, sin θ_k)`.
pub fn star_polygon(
    center: Point,
    n: usize,
    source: BoundarySource,
    radius: impl Fn(f64) -> f64,
) -> Result<PolygonalSet> {
    let mut vertices = Vec::with_capacity(n);
    for k in 0..n {
        let t = TAU * k as f64 / n as f64;
        let r = radius(t);
        if !(r > 0.0) {
            return Err(Error::Geometry(format!(
                "star radius must stay positive (r({t:.3}) = {r})"
            )));
        }
        vertices.push(Point::new(center.x + r * t.cos(), center.y + r * t.sin()));
    }
    Ok(PolygonalSet::from_polygon(Polygon::new(vertices, source)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_polygon_area_matches_formula() {
        let n = 128;
        let p = regular_polygon(Point::new(0.2, -0.1), 0.5, n, 0.0, BoundarySource::Free).unwrap();
        let exact = 0.5 * n as f64 * 0.25 * (TAU / n as f64).sin();
        assert!((p.signed_area() - exact).abs() < 1e-14);
        assert!(p.is_ccw());
    }

    #[test]
    fn star_rejects_nonpositive_radius() {
        assert!(star_polygon(Point::origin(), 64, BoundarySource::Free, |t| 0.1 + 0.2 * t.cos()).is_err());
        let s = star_polygon(Point::origin(), 64, BoundarySource::Free, |t| {
            0.3 + 0.05 * (3.0 * t).cos()
        })
        .unwrap();
        assert!(s.area() > 0.0);
    }
}
