//! Boolean operations on polygonal sets by edge overlay.
//!
//! Every edge of both operands is split at all mutual intersection points,
//! each piece is classified against the other operand (inside, outside, or
//! shared with the same / opposite orientation), the pieces required by the
//! operation are kept and the survivors are chained back into rings. Pieces
//! keep the provenance tag of the edge they were cut from, so the result
//! records which input boundary every output edge lies on.

use std::collections::HashMap;

use super::polygon::{
    cross, orient, point_segment_distance, BBox, Point, Polygon, PolygonalSet, Provenance, Vec2, EPS_GEOM_REL,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BooleanOp {
    Union,
    Intersection,
    Difference,
}

pub fn union(a: &PolygonalSet, b: &PolygonalSet) -> Result<PolygonalSet> {
    boolean_op(a, b, BooleanOp::Union)
}

pub fn intersection(a: &PolygonalSet, b: &PolygonalSet) -> Result<PolygonalSet> {
    boolean_op(a, b, BooleanOp::Intersection)
}

pub fn difference(a: &PolygonalSet, b: &PolygonalSet) -> Result<PolygonalSet> {
    boolean_op(a, b, BooleanOp::Difference)
}

/// `A op B` with the default snapping tolerance `ε_geom = 1e-9 · diam`.
pub fn boolean_op(a: &PolygonalSet, b: &PolygonalSet, op: BooleanOp) -> Result<PolygonalSet> {
    let diam = a.bbox().merge(&b.bbox()).diameter();
    boolean_op_with_eps(a, b, op, EPS_GEOM_REL * diam)
}

pub fn boolean_op_with_eps(a: &PolygonalSet, b: &PolygonalSet, op: BooleanOp, eps: f64) -> Result<PolygonalSet> {
    use BooleanOp::*;
    if a.is_empty() || b.is_empty() {
        return Ok(match op {
            Union => {
                if a.is_empty() {
                    b.clone()
                } else {
                    a.clone()
                }
            }
            Intersection => PolygonalSet::empty(),
            Difference => a.clone(),
        });
    }
    if !a.bbox().overlaps(&b.bbox(), eps) {
        return Ok(match op {
            Union => {
                let mut rings = a.rings().to_vec();
                rings.extend_from_slice(b.rings());
                PolygonalSet::from_rings_unchecked(rings)
            }
            Intersection => PolygonalSet::empty(),
            Difference => a.clone(),
        });
    }
    Overlay::new(a, b, eps).run(op)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Inside,
    Outside,
    SharedSame,
    SharedOpposite,
}

struct InputEdge {
    a: Point,
    b: Point,
    provenance: Provenance,
    operand: usize,
    /// Split points as (parameter along the edge, location).
    splits: Vec<(f64, Point)>,
}

struct Piece {
    from: usize,
    to: usize,
    raw_a: Point,
    raw_b: Point,
    provenance: Provenance,
    operand: usize,
}

/// Vertex pool that merges points closer than `eps`.
struct SnapPool {
    points: Vec<Point>,
    cells: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
    eps: f64,
}

impl SnapPool {
    fn new(eps: f64) -> Self {
        SnapPool {
            points: Vec::new(),
            cells: HashMap::new(),
            cell: eps.max(f64::MIN_POSITIVE) * 4.0,
            eps,
        }
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(&p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = (self.points[id] - p).norm();
                        if d <= self.eps && best.map_or(true, |(bd, bid)| d < bd || (d == bd && id < bid)) {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        if let Some((_, id)) = best {
            return id;
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry((kx, ky)).or_default().push(id);
        id
    }
}

struct Overlay<'a> {
    operands: [&'a PolygonalSet; 2],
    edges: Vec<InputEdge>,
    eps: f64,
}

impl<'a> Overlay<'a> {
    fn new(a: &'a PolygonalSet, b: &'a PolygonalSet, eps: f64) -> Self {
        let mut edges = Vec::with_capacity(a.edge_count() + b.edge_count());
        for (operand, set) in [a, b].into_iter().enumerate() {
            for e in set.edges() {
                edges.push(InputEdge {
                    a: e.a,
                    b: e.b,
                    provenance: e.provenance,
                    operand,
                    splits: vec![(0.0, e.a), (1.0, e.b)],
                });
            }
        }
        Overlay {
            operands: [a, b],
            edges,
            eps,
        }
    }

    fn run(mut self, op: BooleanOp) -> Result<PolygonalSet> {
        self.find_intersections();
        let mut pool = SnapPool::new(self.eps);
        // original vertices first so that they win as snap targets
        for e in &self.edges {
            pool.insert(e.a);
        }
        let pieces = self.split_edges(&mut pool);
        let sides = self.classify(&pieces, &pool);

        let mut kept: Vec<Piece> = Vec::new();
        for (piece, side) in pieces.into_iter().zip(sides) {
            let keep = match (op, piece.operand, side) {
                (BooleanOp::Union, _, Side::Outside) => Some(false),
                (BooleanOp::Union, 0, Side::SharedSame) => Some(false),
                (BooleanOp::Intersection, _, Side::Inside) => Some(false),
                (BooleanOp::Intersection, 0, Side::SharedSame) => Some(false),
                (BooleanOp::Difference, 0, Side::Outside) => Some(false),
                (BooleanOp::Difference, 0, Side::SharedOpposite) => Some(false),
                (BooleanOp::Difference, 1, Side::Inside) => Some(true),
                _ => None,
            };
            match keep {
                Some(false) => kept.push(piece),
                Some(true) => kept.push(Piece {
                    from: piece.to,
                    to: piece.from,
                    raw_a: piece.raw_b,
                    raw_b: piece.raw_a,
                    provenance: piece.provenance.flipped(),
                    operand: piece.operand,
                }),
                None => {}
            }
        }

        let snapped_area: f64 = kept
            .iter()
            .map(|p| 0.5 * cross(&pool.points[p.from].coords, &pool.points[p.to].coords))
            .sum();
        let raw_area: f64 = kept.iter().map(|p| 0.5 * cross(&p.raw_a.coords, &p.raw_b.coords)).sum();
        let perimeter = self.operands[0].perimeter() + self.operands[1].perimeter();
        if (snapped_area - raw_area).abs() > 10.0 * self.eps * perimeter {
            return Err(Error::Geometry(format!(
                "snapping changed the area by {:.3e} (limit {:.3e})",
                (snapped_area - raw_area).abs(),
                10.0 * self.eps * perimeter
            )));
        }

        let rings = chain_rings(&kept, &pool.points)?;
        let rings = rings
            .into_iter()
            .filter(|r| r.signed_area().abs() > self.eps * r.perimeter())
            .collect();
        Ok(PolygonalSet::from_rings_unchecked(rings))
    }

    fn find_intersections(&mut self) {
        let eps = self.eps;
        let boxes: Vec<BBox> = self
            .edges
            .iter()
            .map(|e| {
                let mut b = BBox::empty();
                b.include(&e.a);
                b.include(&e.b);
                b
            })
            .collect();
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&i, &j| boxes[i].min.x.partial_cmp(&boxes[j].min.x).unwrap().then(i.cmp(&j)));

        let mut found: Vec<(usize, f64, Point)> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        for &i in &order {
            let xmin = boxes[i].min.x - eps;
            active.retain(|&j| boxes[j].max.x >= xmin);
            for &j in &active {
                if !boxes[i].overlaps(&boxes[j], eps) {
                    continue;
                }
                let (ei, ej) = (&self.edges[i], &self.edges[j]);
                for (ti, tj, p) in segment_intersections(&ei.a, &ei.b, &ej.a, &ej.b, eps) {
                    found.push((i, ti, p));
                    found.push((j, tj, p));
                }
            }
            active.push(i);
        }
        for (i, t, p) in found {
            self.edges[i].splits.push((t, p));
        }
    }

    fn split_edges(&mut self, pool: &mut SnapPool) -> Vec<Piece> {
        let mut pieces = Vec::new();
        for e in &mut self.edges {
            e.splits.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let mut ids: Vec<(usize, Point)> = Vec::with_capacity(e.splits.len());
            for &(_, p) in &e.splits {
                let id = pool.insert(p);
                if ids.last().map_or(true, |&(last, _)| last != id) {
                    ids.push((id, p));
                }
            }
            for w in ids.windows(2) {
                pieces.push(Piece {
                    from: w[0].0,
                    to: w[1].0,
                    raw_a: w[0].1,
                    raw_b: w[1].1,
                    provenance: e.provenance,
                    operand: e.operand,
                });
            }
        }
        pieces
    }

    fn classify(&self, pieces: &[Piece], pool: &SnapPool) -> Vec<Side> {
        let mut by_key: [HashMap<(usize, usize), usize>; 2] = [HashMap::new(), HashMap::new()];
        for (k, p) in pieces.iter().enumerate() {
            by_key[p.operand].entry((p.from, p.to)).or_insert(k);
        }
        pieces
            .iter()
            .map(|p| {
                let other = 1 - p.operand;
                if by_key[other].contains_key(&(p.from, p.to)) {
                    return Side::SharedSame;
                }
                if by_key[other].contains_key(&(p.to, p.from)) {
                    return Side::SharedOpposite;
                }
                let a = pool.points[p.from];
                let b = pool.points[p.to];
                let m = Point::from((a.coords + b.coords) * 0.5);
                let set = self.operands[other];
                let near = 8.0 * self.eps;
                if set.distance_to_boundary(&m) > near {
                    return if set.contains(&m) { Side::Inside } else { Side::Outside };
                }
                // the piece runs along the other boundary without a matching
                // split; decide from both sides of it
                let d = b - a;
                let left = Vec2::new(-d.y, d.x) / d.norm();
                let delta = (0.25 * d.norm()).min(64.0 * self.eps);
                let l = set.contains(&(m + left * delta));
                let r = set.contains(&(m - left * delta));
                match (l, r) {
                    (true, true) => Side::Inside,
                    (false, false) => Side::Outside,
                    (true, false) => Side::SharedSame,
                    (false, true) => Side::SharedOpposite,
                }
            })
            .collect()
    }
}

/// Intersections of segments `p0p1` and `q0q1` as (param on p, param on q, point).
fn segment_intersections(p0: &Point, p1: &Point, q0: &Point, q1: &Point, eps: f64) -> Vec<(f64, f64, Point)> {
    let mut out = Vec::new();
    let d = p1 - p0;
    let e = q1 - q0;
    let dl2 = d.norm_squared();
    let el2 = e.norm_squared();
    let param = |x: &Point, o: &Point, dir: &Vec2, l2: f64| ((x - o).dot(dir) / l2).clamp(0.0, 1.0);

    // endpoints lying on the other segment (covers touching and collinear overlap)
    for (pt, tq) in [(q0, 0.0), (q1, 1.0)] {
        if point_segment_distance(pt, p0, p1) <= eps {
            out.push((param(pt, p0, &d, dl2), tq, *pt));
        }
    }
    for (pt, tp) in [(p0, 0.0), (p1, 1.0)] {
        if point_segment_distance(pt, q0, q1) <= eps {
            out.push((tp, param(pt, q0, &e, el2), *pt));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let denom = cross(&d, &e);
    if denom.abs() <= f64::EPSILON * (dl2 * el2).sqrt() {
        return out;
    }
    // proper crossing: strict sign changes on both segments
    let s1 = orient(p0, p1, q0);
    let s2 = orient(p0, p1, q1);
    let s3 = orient(q0, q1, p0);
    let s4 = orient(q0, q1, p1);
    if s1 * s2 < 0.0 && s3 * s4 < 0.0 {
        let w = q0 - p0;
        let t = (cross(&w, &e) / denom).clamp(0.0, 1.0);
        let s = (cross(&w, &d) / denom).clamp(0.0, 1.0);
        out.push((t, s, p0 + d * t));
    }
    out
}

/// Chains directed pieces into closed rings. At vertices with several
/// outgoing pieces the sharpest left turn is taken, which keeps the traced
/// face tight and separates components that only touch at a point.
fn chain_rings(pieces: &[Piece], points: &[Point]) -> Result<Vec<Polygon>> {
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, p) in pieces.iter().enumerate() {
        outgoing.entry(p.from).or_default().push(k);
    }
    let mut used = vec![false; pieces.len()];
    let mut rings = Vec::new();
    for start in 0..pieces.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut verts = vec![points[pieces[start].from]];
        let mut provs = vec![pieces[start].provenance];
        let mut current = start;
        loop {
            let v = pieces[current].to;
            let d_in = points[v] - points[pieces[current].from];
            let mut best: Option<(f64, usize)> = None;
            let candidates = outgoing.get(&v).map(|c| c.as_slice()).unwrap_or(&[]);
            for &c in candidates {
                if used[c] && c != start {
                    continue;
                }
                let d_out = points[pieces[c].to] - points[v];
                let mut turn = cross(&d_in, &d_out).atan2(d_in.dot(&d_out));
                if turn >= std::f64::consts::PI - 1e-15 {
                    // immediate reversal is the least preferred continuation
                    turn = -std::f64::consts::PI;
                }
                if best.map_or(true, |(bt, bc)| turn > bt || (turn == bt && c < bc)) {
                    best = Some((turn, c));
                }
            }
            let Some((_, next)) = best else {
                return Err(Error::Geometry("open boundary chain in boolean overlay".into()));
            };
            if next == start {
                break;
            }
            used[next] = true;
            verts.push(points[pieces[next].from]);
            provs.push(pieces[next].provenance);
            current = next;
        }
        if verts.len() >= 3 {
            rings.push(Polygon::from_parts_unchecked(verts, provs));
        }
    }
    Ok(rings)
}
