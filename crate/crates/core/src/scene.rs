//! JSON scene descriptions: the domain `Ω`, the measured arc `Γ`, obstacles
//! and Lamé parameters.
//!
//! ```json
//! {
//!   "name": "pair",
//!   "omega": { "circle": { "center": [0, 0], "radius": 1 } },
//!   "gamma": [0.0, 3.14159],
//!   "obstacles": [
//!     { "name": "small", "circle": { "center": [0, 0], "radius": 0.2 } },
//!     { "name": "box", "polygon": [[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]] }
//!   ],
//!   "lame": { "mu": "1", "lambda": "1" },
//!   "f": "x",
//!   "h": 0.0625
//! }
//! ```

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::LameField;
use crate::geometry::polygon::{BoundarySource, Point, Polygon, PolygonalSet, Provenance};
use crate::geometry::shapes::{disk, DEFAULT_CIRCLE_SEGMENTS};
use crate::mesh::{Arc, Mesh};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct CircleSpec {
    pub center: [f64; 2],
    pub radius: f64,
    /// Vertex count of the polygonal model used by the geometry routines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Circle(CircleSpec),
    Polygon(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub name: String,
    #[serde(flatten)]
    pub shape: ShapeSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LameSpec {
    pub mu: String,
    pub lambda: String,
}

impl Default for LameSpec {
    fn default() -> Self {
        LameSpec {
            mu: "1".into(),
            lambda: "1".into(),
        }
    }
}

impl LameSpec {
    pub fn field(&self, mesh: &Mesh) -> Result<LameField> {
        let mu = Expr::parse(&self.mu)?;
        let lambda = Expr::parse(&self.lambda)?;
        LameField::sample(mesh, |x, y| (mu.eval(x, y), lambda.eval(x, y)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub name: String,
    pub omega: ShapeSpec,
    /// Polar angles `[a, b]` (radians, counterclockwise from `a` to `b`) of
    /// the measured arc on a circular `Ω`. Absent: all of `∂Ω`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 2]>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub lame: LameSpec,
    /// Default boundary datum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Default mesh size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

/// An obstacle shape; disks remember their circle so that meshes can track it.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
        segments: usize,
    },
    Polygon(PolygonalSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub name: String,
    pub shape: Shape,
}

/// Vertex count for a circle of radius `r` meshed at size `h`: edges of
/// length about `h`, a multiple of 8, at least 16.
pub fn circle_segments(r: f64, h: f64) -> usize {
    let n = (TAU * r / h).ceil() as usize;
    n.div_ceil(8).max(2) * 8
}

impl Obstacle {
    pub fn disk(name: &str, center: Point, radius: f64) -> Self {
        Obstacle {
            name: name.into(),
            shape: Shape::Disk {
                center,
                radius,
                segments: DEFAULT_CIRCLE_SEGMENTS,
            },
        }
    }

    pub fn polygon(name: &str, set: PolygonalSet) -> Self {
        Obstacle {
            name: name.into(),
            shape: Shape::Polygon(set),
        }
    }

    /// Polygonal model for geometry and `Υ` queries.
    pub fn set(&self) -> Result<PolygonalSet> {
        match &self.shape {
            Shape::Disk {
                center,
                radius,
                segments,
            } => disk(*center, *radius, *segments, BoundarySource::Obstacle1),
            Shape::Polygon(s) => Ok(s.clone()),
        }
    }

    /// Polygonal model for meshing at size `h`.
    pub fn mesh_set(&self, h: f64) -> Result<PolygonalSet> {
        match &self.shape {
            Shape::Disk { center, radius, .. } => {
                disk(*center, *radius, circle_segments(*radius, h), BoundarySource::Obstacle1)
            }
            Shape::Polygon(s) => Ok(s.clone()),
        }
    }

    pub fn arc(&self) -> Option<Arc> {
        match &self.shape {
            Shape::Disk { center, radius, .. } => Some(Arc::new(*center, *radius)),
            Shape::Polygon(_) => None,
        }
    }
}

fn polygon_set(vertices: &[[f64; 2]], source: BoundarySource) -> Result<PolygonalSet> {
    let pts = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    Ok(PolygonalSet::from_polygon(Polygon::new(pts, source)?))
}

fn check_circle(c: &CircleSpec, what: &str) -> Result<()> {
    if !(c.radius > 0.0) || !c.radius.is_finite() || !c.center.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid(format!("{what}: circle needs a finite positive radius")));
    }
    if matches!(c.segments, Some(n) if n < 8) {
        return Err(Error::Invalid(format!("{what}: circles need at least 8 segments")));
    }
    Ok(())
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.omega {
            ShapeSpec::Circle(c) => check_circle(c, "omega")?,
            ShapeSpec::Polygon(v) => {
                polygon_set(v, BoundarySource::Omega)?;
                if self.gamma.is_some() {
                    return Err(Error::Invalid(
                        "gamma angles are only supported for a circular omega".into(),
                    ));
                }
            }
        }
        if let Some([a, b]) = self.gamma {
            let span = b - a;
            if !(span > 0.0 && span < TAU) {
                return Err(Error::Invalid(format!(
                    "gamma must satisfy a < b < a + 2π, got [{a}, {b}]"
                )));
            }
        }
        for o in &self.obstacles {
            match &o.shape {
                ShapeSpec::Circle(c) => check_circle(c, &o.name)?,
                ShapeSpec::Polygon(v) => {
                    polygon_set(v, BoundarySource::Obstacle1)?;
                }
            }
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(Error::Invalid(format!("default h must be positive, got {h}")));
            }
        }
        Expr::parse(&self.lame.mu)?;
        Expr::parse(&self.lame.lambda)?;
        Ok(())
    }

    pub fn obstacles(&self) -> Vec<Obstacle> {
        self.obstacles
            .iter()
            .map(|o| match &o.shape {
                ShapeSpec::Circle(c) => Obstacle {
                    name: o.name.clone(),
                    shape: Shape::Disk {
                        center: Point::new(c.center[0], c.center[1]),
                        radius: c.radius,
                        segments: c.segments.unwrap_or(DEFAULT_CIRCLE_SEGMENTS),
                    },
                },
                ShapeSpec::Polygon(v) => {
                    Obstacle::polygon(&o.name, polygon_set(v, BoundarySource::Obstacle1).expect("validated"))
                }
            })
            .collect()
    }

    pub fn obstacle(&self, name: &str) -> Result<Obstacle> {
        self.obstacles()
            .into_iter()
            .find(|o| o.name == name)
            .ok_or_else(|| Error::Invalid(format!("scene `{}` has no obstacle `{name}`", self.name)))
    }

    pub fn omega_arc(&self) -> Option<Arc> {
        match &self.omega {
            ShapeSpec::Circle(c) => Some(Arc::new(Point::new(c.center[0], c.center[1]), c.radius)),
            ShapeSpec::Polygon(_) => None,
        }
    }

    /// `Ω` as a polygon for meshing at size `h` (or, with `h = None`, with the
    /// scene's own vertex count); edges on `Γ` carry the `Gamma` source.
    pub fn omega_set(&self, h: Option<f64>) -> Result<PolygonalSet> {
        match &self.omega {
            ShapeSpec::Polygon(v) => polygon_set(v, BoundarySource::Omega),
            ShapeSpec::Circle(c) => {
                let n = match h {
                    Some(h) => circle_segments(c.radius, h),
                    None => c.segments.unwrap_or(DEFAULT_CIRCLE_SEGMENTS),
                };
                circle_with_gamma(c, n, self.gamma)
            }
        }
    }

    /// Centre used for polar angles: the circle centre or the polygon
    /// vertex mean.
    pub fn omega_center(&self) -> Point {
        match &self.omega {
            ShapeSpec::Circle(c) => Point::new(c.center[0], c.center[1]),
            ShapeSpec::Polygon(v) => {
                let n = v.len() as f64;
                Point::new(
                    v.iter().map(|p| p[0]).sum::<f64>() / n,
                    v.iter().map(|p| p[1]).sum::<f64>() / n,
                )
            }
        }
    }
}

/// Circle polygon with vertices at `a` and `b` and `Gamma` provenance on the
/// arc between them.
fn circle_with_gamma(c: &CircleSpec, n: usize, gamma: Option<[f64; 2]>) -> Result<PolygonalSet> {
    let center = Point::new(c.center[0], c.center[1]);
    let Some([a, b]) = gamma else {
        return disk(center, c.radius, n, BoundarySource::Omega);
    };
    let span = b - a;
    let n_gamma = ((n as f64 * span / TAU).round() as usize).max(2);
    let n_rest = n.saturating_sub(n_gamma).max(2);
    let mut vertices = Vec::with_capacity(n_gamma + n_rest);
    let mut prov = Vec::with_capacity(n_gamma + n_rest);
    let at = |t: f64| Point::new(center.x + c.radius * t.cos(), center.y + c.radius * t.sin());
    for k in 0..n_gamma {
        vertices.push(at(a + span * k as f64 / n_gamma as f64));
        prov.push(Provenance::new(BoundarySource::Gamma));
    }
    for k in 0..n_rest {
        vertices.push(at(b + (TAU - span) * k as f64 / n_rest as f64));
        prov.push(Provenance::new(BoundarySource::Omega));
    }
    Ok(PolygonalSet::from_polygon(Polygon::with_provenance(vertices, prov)?))
}
