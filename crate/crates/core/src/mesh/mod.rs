//! Conforming P1 triangulations of multiply-connected polygonal domains.

pub mod cache;
pub mod vtk;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::Serialize;
use spade::{ConstrainedDelaunayTriangulation, Point2 as SpadePoint, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::polygon::{point_segment_distance, right_normal, BoundarySource, Point, PolygonalSet, Vec2};

/// Smallest interior angle accepted by [`Mesh::validate`], in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;
const SPADE_ANGLE_DEG: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryTag {
    Outer,
    Gamma,
    Obstacle,
}

/// Per-node classification; junctions take the strongest tag
/// (`Obstacle` > `Gamma` > `Outer`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Interior,
    Outer,
    Gamma,
    Obstacle,
}

/// A circle that some input edges approximate. Refinement places new
/// boundary nodes of those edges on the circle itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arc {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Arc {
    pub fn new(center: Point, radius: f64) -> Self {
        Arc {
            center: [center.x, center.y],
            radius,
        }
    }

    fn c(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    fn holds(&self, p: &Point, tol: f64) -> bool {
        ((p - self.c()).norm() - self.radius).abs() <= tol
    }

    fn project(&self, p: &Point) -> Point {
        let d = p - self.c();
        self.c() + d * (self.radius / d.norm())
    }

    fn angle(&self, p: &Point) -> f64 {
        let d = p - self.c();
        d.y.atan2(d.x)
    }

    fn at(&self, t: f64) -> Point {
        self.c() + Vec2::new(t.cos(), t.sin()) * self.radius
    }
}

/// An input boundary segment after pre-splitting.
#[derive(Clone, Debug, Serialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub tag: BoundaryTag,
    pub source: BoundarySource,
    pub arc: Option<Arc>,
}

impl Segment {
    pub fn a(&self) -> Point {
        Point::new(self.a[0], self.a[1])
    }

    pub fn b(&self) -> Point {
        Point::new(self.b[0], self.b[1])
    }

    /// Parameter of the projection of `p` onto the segment, in `[0, 1]`.
    pub fn parameter(&self, p: &Point) -> f64 {
        let d = self.b() - self.a();
        ((p - self.a()).dot(&d) / d.norm_squared()).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryEdge {
    /// Ordered so that the domain lies to the left.
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub segment: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshStats {
    pub nodes: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub boundary_loops: usize,
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    segments: Vec<Segment>,
    kinds: Vec<NodeKind>,
    /// Outward unit normal of the domain at each boundary node (zero inside).
    normals: Vec<Vec2>,
    obstacle_nodes: Vec<usize>,
    h: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MeshOptions {
    pub arcs: Vec<Arc>,
}

pub fn triangulate(domain: &PolygonalSet, h: f64) -> Result<Mesh> {
    triangulate_with(domain, h, &MeshOptions::default())
}

fn tag_for(source: BoundarySource, hole: bool) -> BoundaryTag {
    match source {
        BoundarySource::Gamma => BoundaryTag::Gamma,
        _ if hole => BoundaryTag::Obstacle,
        _ => BoundaryTag::Outer,
    }
}

pub fn triangulate_with(domain: &PolygonalSet, h: f64, options: &MeshOptions) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Mesh(format!("mesh size must be positive, got {h}")));
    }
    if domain.is_empty() {
        return Err(Error::Mesh("empty domain".into()));
    }
    for ring in domain.rings() {
        ring.validate()?;
    }
    let shortest = domain.edges().map(|e| e.length()).fold(f64::INFINITY, f64::min);
    if h >= 4.0 * shortest {
        return Err(Error::Precondition(format!(
            "h = {h} must be below 4 × shortest input edge ({:.6})",
            4.0 * shortest
        )));
    }
    let eps = domain.eps();
    let arc_tol = 1e3 * eps;

    // pre-split long input edges; points go on the arc when the edge follows one
    let mut points: Vec<Point> = Vec::new();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    for ring in domain.rings() {
        let hole = !ring.is_ccw();
        let start = points.len();
        let mut owner = Vec::new();
        for (i, edge) in ring.edges().enumerate() {
            let src = ring.provenance()[i].source;
            let arc = options
                .arcs
                .iter()
                .find(|c| c.holds(&edge.a, arc_tol) && c.holds(&edge.b, arc_tol))
                .copied();
            let (t0, dt) = match arc {
                Some(c) => {
                    let t0 = c.angle(&edge.a);
                    let d = c.angle(&edge.b) - t0;
                    (t0, (d + PI).rem_euclid(TAU) - PI)
                }
                None => (0.0, 0.0),
            };
            let len = if arc.is_some() {
                dt.abs() * arc.unwrap().radius
            } else {
                edge.length()
            };
            let k = (len / h).ceil().max(1.0) as usize;
            for j in 0..k {
                let s = j as f64 / k as f64;
                let p = match arc {
                    _ if j == 0 => edge.a,
                    Some(c) => c.at(t0 + s * dt),
                    None => edge.a + (edge.b - edge.a) * s,
                };
                points.push(p);
                owner.push((tag_for(src, hole), src, arc));
            }
        }
        let end = points.len();
        for p in start..end {
            let q = if p + 1 == end { start } else { p + 1 };
            let (tag, source, arc) = owner[p - start];
            constraints.push([p, q]);
            segments.push(Segment {
                a: [points[p].x, points[p].y],
                b: [points[q].x, points[q].y],
                tag,
                source,
                arc,
            });
        }
    }

    let spade_points: Vec<SpadePoint<f64>> = points.iter().map(|p| SpadePoint::new(p.x, p.y)).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<SpadePoint<f64>>::bulk_load_cdt(spade_points, constraints)
        .map_err(|e| Error::Mesh(format!("constrained triangulation failed: {e:?}")))?;
    let budget = (50.0 * domain.area() / (h * h)) as usize + 20 * points.len() + 1000;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(spade::AngleLimit::from_deg(SPADE_ANGLE_DEG))
        .with_max_allowed_area(0.3 * h * h)
        .exclude_outer_faces(true)
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Mesh(
            "quality refinement did not finish within the vertex budget".into(),
        ));
    }
    let excluded: std::collections::HashSet<_> = result.excluded_faces.into_iter().collect();

    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let mut tri = [0usize; 3];
        for (k, v) in face.vertices().iter().enumerate() {
            let id = v.fix().index();
            tri[k] = *index.entry(id).or_insert_with(|| {
                let p = v.position();
                nodes.push(Point::new(p.x, p.y));
                nodes.len() - 1
            });
        }
        triangles.push(tri);
    }
    // deterministic node order: input vertices keep their identity, Steiner
    // points follow spade's handle order
    let mut order: Vec<(usize, usize)> = index.into_iter().collect();
    order.sort_unstable();
    let mut renumber = vec![0usize; nodes.len()];
    let mut sorted_nodes = Vec::with_capacity(nodes.len());
    for (new, (_, old)) in order.iter().enumerate() {
        renumber[*old] = new;
        sorted_nodes.push(nodes[*old]);
    }
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = renumber[*v];
        }
    }
    triangles.sort_unstable_by_key(|t| {
        let mut s = *t;
        s.sort_unstable();
        s
    });

    let mut mesh = Mesh {
        nodes: sorted_nodes,
        triangles,
        boundary_edges: Vec::new(),
        segments,
        kinds: Vec::new(),
        normals: Vec::new(),
        obstacle_nodes: Vec::new(),
        h,
    };
    mesh.orient_triangles();
    mesh.attach_boundary(eps)?;
    mesh.snap_to_arcs();
    mesh.finish()?;
    mesh.validate()?;
    Ok(mesh)
}

impl Mesh {
    /// Assembles a mesh from raw parts; boundary edges are found from the
    /// triangles and matched against `segments`.
    pub fn from_parts(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, segments: Vec<Segment>, h: f64) -> Result<Mesh> {
        let mut bb = crate::geometry::polygon::BBox::empty();
        for p in &nodes {
            bb.include(p);
        }
        let mut mesh = Mesh {
            nodes,
            triangles,
            boundary_edges: Vec::new(),
            segments,
            kinds: Vec::new(),
            normals: Vec::new(),
            obstacle_nodes: Vec::new(),
            h,
        };
        mesh.orient_triangles();
        mesh.attach_boundary(crate::geometry::polygon::EPS_GEOM_REL * bb.diameter())?;
        mesh.finish()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Outward unit normal of the domain at a boundary node.
    pub fn node_normal(&self, node: usize) -> Vec2 {
        self.normals[node]
    }

    /// Obstacle boundary nodes in increasing order.
    pub fn obstacle_nodes(&self) -> &[usize] {
        &self.obstacle_nodes
    }

    /// Nodes carrying Dirichlet data (outer boundary and `Γ`).
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.kinds[i], NodeKind::Outer | NodeKind::Gamma))
            .collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * crate::geometry::polygon::orient(&a, &b, &c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        Point::from((a.coords + b.coords + c.coords) / 3.0)
    }

    fn orient_triangles(&mut self) {
        for t in &mut self.triangles {
            let (a, b, c) = (self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]);
            if crate::geometry::polygon::orient(&a, &b, &c) < 0.0 {
                t.swap(1, 2);
            }
        }
    }

    /// Boundary edges in triangle order, each matched to its input segment.
    fn attach_boundary(&mut self, eps: f64) -> Result<()> {
        let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        let mut order = Vec::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                let e = count.entry(key).or_insert_with(|| {
                    order.push(key);
                    (0, [i, j])
                });
                e.0 += 1;
            }
        }
        let grid = SegmentGrid::new(&self.segments);
        let tol = 1e3 * eps;
        let mut edges = Vec::new();
        for key in order {
            let (n, dir) = count[&key];
            if n != 1 {
                continue;
            }
            let (p, q) = (self.nodes[dir[0]], self.nodes[dir[1]]);
            let m = Point::from((p.coords + q.coords) * 0.5);
            let seg = grid
                .candidates(&m)
                .filter(|&s| {
                    let sg = &self.segments[s];
                    let (a, b) = (sg.a(), sg.b());
                    let slack = tol + sg.arc.map_or(0.0, |c| sagitta(&a, &b, c.radius));
                    point_segment_distance(&p, &a, &b) <= slack
                        && point_segment_distance(&q, &a, &b) <= slack
                        && point_segment_distance(&m, &a, &b) <= slack
                })
                .min_by(|&s1, &s2| {
                    let d1 = point_segment_distance(&m, &self.segments[s1].a(), &self.segments[s1].b());
                    let d2 = point_segment_distance(&m, &self.segments[s2].a(), &self.segments[s2].b());
                    d1.total_cmp(&d2)
                })
                .ok_or_else(|| {
                    Error::Mesh(format!(
                        "boundary edge at ({:.6}, {:.6}) matches no input segment",
                        m.x, m.y
                    ))
                })?;
            edges.push(BoundaryEdge {
                nodes: dir,
                tag: self.segments[seg].tag,
                segment: seg,
            });
        }
        self.boundary_edges = edges;
        Ok(())
    }

    /// Moves Steiner points that spade inserted on arc segments onto the arc.
    fn snap_to_arcs(&mut self) {
        let mut moved = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            let seg = &self.segments[e.segment];
            if let Some(arc) = seg.arc {
                for &n in &e.nodes {
                    if !moved[n] {
                        let p = self.nodes[n];
                        if p != seg.a() && p != seg.b() {
                            self.nodes[n] = arc.project(&p);
                        }
                        moved[n] = true;
                    }
                }
            }
        }
    }

    /// Node kinds, node normals and the obstacle node list.
    fn finish(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let mut kinds = vec![NodeKind::Interior; n];
        let mut acc = vec![Vec2::zeros(); n];
        // circle through both incident edges, if they share one
        let mut arcs: Vec<Option<Option<Arc>>> = vec![None; n];
        for e in &self.boundary_edges {
            let [i, j] = e.nodes;
            let nrm = right_normal(&self.nodes[i], &self.nodes[j]);
            let arc = self.segments[e.segment].arc;
            for v in [i, j] {
                arcs[v] = Some(match arcs[v] {
                    None => arc,
                    Some(prev) if prev == arc => arc,
                    Some(_) => None,
                });
            }
            let kind = match e.tag {
                BoundaryTag::Outer => NodeKind::Outer,
                BoundaryTag::Gamma => NodeKind::Gamma,
                BoundaryTag::Obstacle => NodeKind::Obstacle,
            };
            for v in [i, j] {
                acc[v] += nrm;
                kinds[v] = stronger(kinds[v], kind);
            }
        }
        let mut normals = vec![Vec2::zeros(); n];
        for i in 0..n {
            if kinds[i] != NodeKind::Interior {
                let len = acc[i].norm();
                if !(len > 0.0) {
                    return Err(Error::Mesh(format!("degenerate normal at boundary node {i}")));
                }
                normals[i] = acc[i] / len;
                if let Some(Some(arc)) = arcs[i] {
                    let radial = (self.nodes[i] - arc.c()).normalize();
                    normals[i] = if radial.dot(&acc[i]) >= 0.0 { radial } else { -radial };
                }
            }
        }
        self.obstacle_nodes = (0..n).filter(|&i| kinds[i] == NodeKind::Obstacle).collect();
        self.kinds = kinds;
        self.normals = normals;
        Ok(())
    }

    pub fn boundary_loops(&self) -> usize {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary_edges {
            next.insert(e.nodes[0], e.nodes[1]);
        }
        let mut seen = std::collections::HashSet::new();
        let mut loops = 0;
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            loops += 1;
            let mut v = s;
            while seen.insert(v) {
                v = next[&v];
            }
        }
        loops
    }

    pub fn edge_count(&self) -> usize {
        let mut set = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                set.insert((i.min(j), i.max(j)));
            }
        }
        set.len()
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = crate::geometry::polygon::cross(&u, &v).atan2(u.dot(&v));
                best = best.min(ang.to_degrees());
            }
        }
        best
    }

    pub fn max_edge(&self) -> f64 {
        let mut best: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                best = best.max((p[(k + 1) % 3] - p[k]).norm());
            }
        }
        best
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            nodes: self.nodes.len(),
            triangles: self.triangles.len(),
            boundary_edges: self.boundary_edges.len(),
            boundary_loops: self.boundary_loops(),
            min_angle_deg: self.min_angle_deg(),
            max_edge: self.max_edge(),
            h: self.h,
        }
    }

    /// Orientation, Euler relation, angle and edge bounds, unit normals and
    /// presence of every input vertex.
    pub fn validate(&self) -> Result<()> {
        self.validate_topology()?;
        let min_angle = self.min_angle_deg();
        if min_angle < MIN_ANGLE_DEG {
            return Err(Error::Mesh(format!(
                "minimum angle {min_angle:.2}° below {MIN_ANGLE_DEG}°"
            )));
        }
        let max_edge = self.max_edge();
        if max_edge > 2.0 * self.h * (1.0 + 1e-9) {
            return Err(Error::Mesh(format!(
                "edge of length {max_edge:.6} exceeds 2h = {:.6}",
                2.0 * self.h
            )));
        }
        Ok(())
    }

    /// The structural part of [`Mesh::validate`] (no quality bounds).
    pub fn validate_topology(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} is not positively oriented")));
            }
        }
        let v = self.nodes.len() as i64;
        let e = self.edge_count() as i64;
        let f = self.triangles.len() as i64;
        let b = self.boundary_loops() as i64;
        if v - e + f != 2 - b {
            return Err(Error::Mesh(format!(
                "Euler relation fails: V - E + F = {} but 2 - b = {}",
                v - e + f,
                2 - b
            )));
        }
        for &i in &self.obstacle_nodes {
            if (self.normals[i].norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Mesh(format!("normal at obstacle node {i} is not unit")));
            }
        }
        let mut present = std::collections::HashSet::new();
        for p in &self.nodes {
            present.insert((p.x.to_bits(), p.y.to_bits()));
        }
        for s in &self.segments {
            if !present.contains(&(s.a[0].to_bits(), s.a[1].to_bits())) {
                return Err(Error::Mesh(format!(
                    "input vertex ({}, {}) missing from mesh",
                    s.a[0], s.a[1]
                )));
            }
        }
        Ok(())
    }

    /// Uniform refinement: every triangle is split into four at its edge
    /// midpoints; new boundary nodes follow their segment (or its arc).
    pub fn refine(&self) -> Result<Mesh> {
        let mut nodes = self.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut bmap: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let [i, j] = e.nodes;
            bmap.insert((i.min(j), i.max(j)), k);
        }
        let mut midpoint = |i: usize, j: usize, nodes: &mut Vec<Point>| -> usize {
            let key = (i.min(j), i.max(j));
            if let Some(&m) = mid.get(&key) {
                return m;
            }
            let mut p = Point::from((nodes[i].coords + nodes[j].coords) * 0.5);
            if let Some(&k) = bmap.get(&key) {
                if let Some(arc) = self.segments[self.boundary_edges[k].segment].arc {
                    p = arc.project(&p);
                }
            }
            nodes.push(p);
            mid.insert(key, nodes.len() - 1);
            nodes.len() - 1
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [i, j] = e.nodes;
            let m = mid[&(i.min(j), i.max(j))];
            boundary_edges.push(BoundaryEdge { nodes: [i, m], ..*e });
            boundary_edges.push(BoundaryEdge { nodes: [m, j], ..*e });
        }
        let mut out = Mesh {
            nodes,
            triangles,
            boundary_edges,
            segments: self.segments.clone(),
            kinds: Vec::new(),
            normals: Vec::new(),
            obstacle_nodes: Vec::new(),
            h: 0.5 * self.h,
        };
        out.finish()?;
        out.validate()?;
        Ok(out)
    }

    /// Same connectivity with moved nodes; fails if a triangle inverts.
    pub fn with_nodes(&self, nodes: Vec<Point>) -> Result<Mesh> {
        if nodes.len() != self.nodes.len() {
            return Err(Error::Mesh("node count mismatch".into()));
        }
        let mut out = Mesh { nodes, ..self.clone() };
        for t in 0..out.triangles.len() {
            if !(out.triangle_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} inverted")));
            }
        }
        out.finish()?;
        Ok(out)
    }

    /// Boundary edges with the given tag, as `(from, to)` node pairs.
    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Lumped boundary mass (half the incident edge lengths) of every node on
    /// edges with the given tag.
    pub fn lumped_boundary_mass(&self, tag: BoundaryTag) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for e in self.edges_with_tag(tag) {
            let [i, j] = e.nodes;
            let len = (self.nodes[j] - self.nodes[i]).norm();
            m[i] += 0.5 * len;
            m[j] += 0.5 * len;
        }
        m
    }
}

fn stronger(a: NodeKind, b: NodeKind) -> NodeKind {
    fn rank(k: NodeKind) -> u8 {
        match k {
            NodeKind::Interior => 0,
            NodeKind::Outer => 1,
            NodeKind::Gamma => 2,
            NodeKind::Obstacle => 3,
        }
    }
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn sagitta(a: &Point, b: &Point, r: f64) -> f64 {
    let half = 0.5 * (b - a).norm();
    r - (r * r - half * half).max(0.0).sqrt()
}

/// Uniform bucket grid over segment bounding boxes.
struct SegmentGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SegmentGrid {
    fn new(segments: &[Segment]) -> Self {
        let mut bb = crate::geometry::polygon::BBox::empty();
        let mut total = 0.0;
        for s in segments {
            bb.include(&s.a());
            bb.include(&s.b());
            total += (s.b() - s.a()).norm();
        }
        let cell = (total / segments.len().max(1) as f64).max(1e-12) * 2.0;
        let pad = cell;
        let origin = Point::new(bb.min.x - pad, bb.min.y - pad);
        let nx = (((bb.max.x - bb.min.x) + 2.0 * pad) / cell).ceil() as usize + 1;
        let ny = (((bb.max.y - bb.min.y) + 2.0 * pad) / cell).ceil() as usize + 1;
        let mut grid = SegmentGrid {
            origin,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (k, s) in segments.iter().enumerate() {
            let (a, b) = (s.a(), s.b());
            let (i0, j0) = grid.cell_of(&Point::new(a.x.min(b.x) - 0.25 * cell, a.y.min(b.y) - 0.25 * cell));
            let (i1, j1) = grid.cell_of(&Point::new(a.x.max(b.x) + 0.25 * cell, a.y.max(b.y) + 0.25 * cell));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    grid.buckets[j * nx + i].push(k);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let i = (((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    fn candidates(&self, p: &Point) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.cell_of(p);
        self.buckets[j * self.nx + i].iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boolean::difference;
    use crate::geometry::shapes::{disk, rectangle};

    fn annulus(n_out: usize, n_in: usize) -> PolygonalSet {
        let o = disk(Point::origin(), 1.0, n_out, BoundarySource::Omega).unwrap();
        let i = disk(Point::origin(), 0.3, n_in, BoundarySource::Obstacle1).unwrap();
        difference(&o, &i).unwrap()
    }

    #[test]
    fn unit_square_euler() {
        let sq = rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), BoundarySource::Omega).unwrap();
        let m = triangulate(&sq, 0.5).unwrap();
        let (v, e, f) = (m.node_count() as i64, m.edge_count() as i64, m.triangles().len() as i64);
        assert_eq!(v - e + f, 1);
        assert_eq!(m.boundary_loops(), 1);
        assert!(m.obstacle_nodes().is_empty());
        assert!((m.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn annulus_tags_and_normals() {
        let n = 64;
        let m = triangulate(&annulus(128, n), 1.0 / 16.0).unwrap();
        assert_eq!(m.boundary_loops(), 2);
        for e in m.boundary_edges() {
            let r = m.nodes()[e.nodes[0]].coords.norm();
            if r < 0.5 {
                assert_eq!(e.tag, BoundaryTag::Obstacle);
            } else {
                assert_eq!(e.tag, BoundaryTag::Outer);
            }
        }
        for &i in m.obstacle_nodes() {
            let p = m.nodes()[i];
            let inward = -p.coords / p.coords.norm();
            let ang = m.node_normal(i).dot(&inward).clamp(-1.0, 1.0).acos();
            assert!(ang <= std::f64::consts::TAU / n as f64, "angle {ang}");
        }
    }

    #[test]
    fn refine_quadruples_and_halves() {
        let m = triangulate(&annulus(64, 32), 0.125).unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.triangles().len(), 4 * m.triangles().len());
        assert!(r.max_edge() <= 0.5 * m.max_edge() * (1.0 + 1e-9));
        assert!(r.validate().is_ok());
    }

    #[test]
    fn arcs_put_refined_nodes_on_the_circle() {
        let opts = MeshOptions {
            arcs: vec![Arc::new(Point::origin(), 1.0), Arc::new(Point::origin(), 0.3)],
        };
        let m = triangulate_with(&annulus(64, 32), 0.125, &opts).unwrap();
        let r = m.refine().unwrap().refine().unwrap();
        for e in r.boundary_edges() {
            let p = r.nodes()[e.nodes[0]];
            let rad = if e.tag == BoundaryTag::Obstacle { 0.3 } else { 1.0 };
            assert!((p.coords.norm() - rad).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse_h_is_rejected() {
        let err = triangulate(&annulus(128, 128), 0.25).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
