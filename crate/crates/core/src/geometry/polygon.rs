use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;

/// Snapping tolerance relative to the bounding-box diameter.
pub const EPS_GEOM_REL: f64 = 1e-9;

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of the triangle `abc` (positive when counterclockwise).
#[inline]
pub fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    cross(&(b - a), &(c - a))
}

/// Unit normal to the right of the directed segment `a → b`.
///
/// For a ring that keeps its interior on the left this is the outward normal.
#[inline]
pub fn right_normal(a: &Point, b: &Point) -> Vec2 {
    let d = b - a;
    Vec2::new(d.y, -d.x) / d.norm()
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Which input boundary an edge was cut from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySource {
    Omega,
    Gamma,
    Obstacle1,
    Obstacle2,
    Free,
}

impl BoundarySource {
    /// `∂Ω`, including the measured arc.
    pub fn is_exterior(self) -> bool {
        matches!(self, BoundarySource::Omega | BoundarySource::Gamma)
    }
}

/// Source boundary of an edge and whether its direction was flipped relative to
/// the source region's own counterclockwise orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source: BoundarySource,
    pub reversed: bool,
}

impl Provenance {
    pub fn new(source: BoundarySource) -> Self {
        Provenance {
            source,
            reversed: false,
        }
    }

    pub fn flipped(self) -> Self {
        Provenance {
            reversed: !self.reversed,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: Point,
    pub b: Point,
    pub provenance: Provenance,
}

impl Edge {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn midpoint(&self) -> Point {
        Point::from((self.a.coords + self.b.coords) * 0.5)
    }

    pub fn outward_normal(&self) -> Vec2 {
        right_normal(&self.a, &self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn include(&mut self, p: &Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn merge(&self, o: &BBox) -> BBox {
        let mut b = *self;
        b.include(&o.min);
        b.include(&o.max);
        b
    }

    pub fn diameter(&self) -> f64 {
        if self.min.x > self.max.x {
            0.0
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn overlaps(&self, o: &BBox, pad: f64) -> bool {
        self.min.x <= o.max.x + pad
            && o.min.x <= self.max.x + pad
            && self.min.y <= o.max.y + pad
            && o.min.y <= self.max.y + pad
    }
}

/// A closed polygonal ring. Counterclockwise rings bound material on their
/// left; clockwise rings are holes.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    provenance: Vec<Provenance>,
}

impl Polygon {
    /// Builds a validated ring whose edges all come from `source`.
    pub fn new(vertices: Vec<Point>, source: BoundarySource) -> Result<Self> {
        let n = vertices.len();
        Self::with_provenance(vertices, vec![Provenance::new(source); n])
    }

    pub fn with_provenance(vertices: Vec<Point>, provenance: Vec<Provenance>) -> Result<Self> {
        if vertices.len() != provenance.len() {
            return Err(Error::Geometry("one provenance tag per edge required".into()));
        }
        let p = Polygon { vertices, provenance };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Point>, provenance: Vec<Provenance>) -> Self {
        debug_assert_eq!(vertices.len(), provenance.len());
        Polygon { vertices, provenance }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("ring has {n} vertices, need at least 3")));
        }
        if self.vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry("non-finite vertex".into()));
        }
        let eps = EPS_GEOM_REL * self.bbox().diameter();
        for i in 0..n {
            if (self.vertices[(i + 1) % n] - self.vertices[i]).norm() <= eps {
                return Err(Error::Geometry(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        if self.signed_area().abs() <= eps * self.perimeter() {
            return Err(Error::Geometry("ring has zero signed area".into()));
        }
        if let Some((i, j)) = self.first_self_intersection(eps) {
            return Err(Error::Geometry(format!(
                "ring is not simple: edges {i} and {j} intersect"
            )));
        }
        Ok(())
    }

    fn first_self_intersection(&self, eps: f64) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let boxes: Vec<BBox> = (0..n)
            .map(|i| {
                let mut b = BBox::empty();
                b.include(&self.vertices[i]);
                b.include(&self.vertices[(i + 1) % n]);
                b
            })
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !boxes[i].overlaps(&boxes[j], eps) {
                    continue;
                }
                let (a0, a1) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let (b0, b1) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let (shared, other_a, other_b) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                    let da = other_a - shared;
                    let db = other_b - shared;
                    if cross(&da, &db).abs() <= eps * da.norm().max(db.norm()) && da.dot(&db) > 0.0 {
                        return Some((i, j));
                    }
                    continue;
                }
                if segments_touch(&a0, &a1, &b0, &b1, eps) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> Edge {
        let n = self.vertices.len();
        Edge {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
            provenance: self.provenance[i],
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x * b.y - a.y * b.x;
        }
        0.5 * s
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|e| e.length()).sum()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Same ring traversed in the opposite direction; provenance flags flip.
    pub fn reversed(&self) -> Polygon {
        let n = self.vertices.len();
        let mut vertices = Vec::with_capacity(n);
        let mut provenance = Vec::with_capacity(n);
        // edge i (v_i -> v_{i+1}) becomes (v_{i+1} -> v_i)
        vertices.push(self.vertices[0]);
        for k in (1..n).rev() {
            vertices.push(self.vertices[k]);
        }
        for k in 0..n {
            // new edge k runs vertices[k] -> vertices[k+1] = old edge (n - 1 - k)
            provenance.push(self.provenance[(n - 1 - k) % n].flipped());
        }
        Polygon { vertices, provenance }
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty();
        for p in &self.vertices {
            b.include(p);
        }
        b
    }

    /// Winding number of the ring around `p` (points on the ring give an
    /// unspecified but deterministic answer).
    pub fn winding_number(&self, p: &Point) -> i32 {
        let n = self.vertices.len();
        let mut w = 0;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            if a.y <= p.y {
                if b.y > p.y && orient(a, b, p) > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && orient(a, b, p) < 0.0 {
                w -= 1;
            }
        }
        w
    }

    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        self.edges()
            .map(|e| point_segment_distance(p, &e.a, &e.b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let c = p.x * q.y - q.x * p.y;
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }
}

/// True when the closed segments `a0a1` and `b0b1` meet (within `eps`).
pub fn segments_touch(a0: &Point, a1: &Point, b0: &Point, b1: &Point, eps: f64) -> bool {
    if point_segment_distance(a0, b0, b1) <= eps
        || point_segment_distance(a1, b0, b1) <= eps
        || point_segment_distance(b0, a0, a1) <= eps
        || point_segment_distance(b1, a0, a1) <= eps
    {
        return true;
    }
    let d1 = orient(a0, a1, b0);
    let d2 = orient(a0, a1, b1);
    let d3 = orient(b0, b1, a0);
    let d4 = orient(b0, b1, a1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// A region of the plane bounded by non-crossing rings.
///
/// Material lies to the left of every ring, so outer boundaries run
/// counterclockwise and holes clockwise. Membership is decided by the total
/// winding number.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolygonalSet {
    rings: Vec<Polygon>,
}

impl PolygonalSet {
    pub fn empty() -> Self {
        PolygonalSet { rings: Vec::new() }
    }

    /// Region bounded by a single simple ring, reoriented counterclockwise.
    pub fn from_polygon(p: Polygon) -> Self {
        let p = if p.is_ccw() { p } else { p.reversed() };
        PolygonalSet { rings: vec![p] }
    }

    /// Assembles a set from already-oriented rings (outer CCW, holes CW).
    pub fn from_rings(rings: Vec<Polygon>) -> Result<Self> {
        for r in &rings {
            r.validate()?;
        }
        Ok(PolygonalSet { rings })
    }

    pub(crate) fn from_rings_unchecked(rings: Vec<Polygon>) -> Self {
        PolygonalSet { rings }
    }

    pub fn rings(&self) -> &[Polygon] {
        &self.rings
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.rings.iter().map(|r| r.signed_area()).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings.iter().map(|r| r.perimeter()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.rings.iter().flat_map(|r| r.edges())
    }

    pub fn edge_count(&self) -> usize {
        self.rings.iter().map(|r| r.len()).sum()
    }

    pub fn bbox(&self) -> BBox {
        self.rings.iter().fold(BBox::empty(), |b, r| b.merge(&r.bbox()))
    }

    /// Snapping tolerance `ε_geom` for operations on this set.
    pub fn eps(&self) -> f64 {
        EPS_GEOM_REL * self.bbox().diameter()
    }

    pub fn winding_number(&self, p: &Point) -> i32 {
        self.rings.iter().map(|r| r.winding_number(p)).sum()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.winding_number(p) != 0
    }

    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        self.rings
            .iter()
            .map(|r| r.distance_to_boundary(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Splits the set into connected components: each counterclockwise ring
    /// with the holes it directly contains.
    pub fn components(&self) -> Vec<PolygonalSet> {
        let outers: Vec<usize> = (0..self.rings.len()).filter(|&i| self.rings[i].is_ccw()).collect();
        let mut groups: Vec<Vec<Polygon>> = outers.iter().map(|&i| vec![self.rings[i].clone()]).collect();
        for (hi, hole) in self.rings.iter().enumerate() {
            if hole.is_ccw() {
                continue;
            }
            let probe = hole_probe(hole);
            let parent = outers
                .iter()
                .enumerate()
                .filter(|(_, &oi)| self.rings[oi].winding_number(&probe) != 0)
                .min_by(|a, b| {
                    self.rings[*a.1]
                        .signed_area()
                        .partial_cmp(&self.rings[*b.1].signed_area())
                        .unwrap()
                })
                .map(|(k, _)| k);
            match parent {
                Some(k) => groups[k].push(hole.clone()),
                None => debug_assert!(false, "hole ring {hi} has no enclosing outer ring"),
            }
        }
        groups.into_iter().map(PolygonalSet::from_rings_unchecked).collect()
    }

    pub fn translated(&self, d: Vec2) -> PolygonalSet {
        PolygonalSet {
            rings: self
                .rings
                .iter()
                .map(|r| {
                    Polygon::from_parts_unchecked(r.vertices.iter().map(|p| p + d).collect(), r.provenance.clone())
                })
                .collect(),
        }
    }

    /// Copy of the set with every edge relabelled to `source`.
    pub fn with_source(&self, source: BoundarySource) -> PolygonalSet {
        PolygonalSet {
            rings: self
                .rings
                .iter()
                .map(|r| {
                    Polygon::from_parts_unchecked(
                        r.vertices.clone(),
                        r.provenance
                            .iter()
                            .map(|p| Provenance {
                                source,
                                reversed: p.reversed,
                            })
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point> + '_ {
        self.rings.iter().flat_map(|r| r.vertices.iter())
    }
}

/// A point on a hole ring away from its vertices, used to find the enclosing
/// outer ring.
fn hole_probe(hole: &Polygon) -> Point {
    let i = (0..hole.len())
        .max_by(|&a, &b| hole.edge(a).length().partial_cmp(&hole.edge(b).length()).unwrap())
        .unwrap();
    hole.edge(i).midpoint()
}
