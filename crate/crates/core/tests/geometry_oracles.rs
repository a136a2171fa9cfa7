//! Geometry checked against pixel-grid and direct-construction oracles.

use std::f64::consts::TAU;

use signorini_lab::geometry::{
    classify_boundary, compute_g0, compute_v, difference, disk, intersection, rectangle, star_polygon, union,
    BoundarySource, Point, PolygonalSet,
};

fn inside(poly: &[Point], p: (f64, f64)) -> bool {
    let mut c = false;
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        if (a.y > p.1) != (b.y > p.1) && p.0 < a.x + (p.1 - a.y) * (b.x - a.x) / (b.y - a.y) {
            c = !c;
        }
    }
    c
}

fn ngon(c: (f64, f64), r: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            Point::new(c.0 + r * t.cos(), c.1 + r * t.sin())
        })
        .collect()
}

/// Pixel count of `pred` over the box `[x0, x1] × [y0, y1]` at `n × n`.
fn pixel_area(n: usize, (x0, x1, y0, y1): (f64, f64, f64, f64), pred: impl Fn((f64, f64)) -> bool) -> f64 {
    let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let count: usize = (0..n)
        .map(|i| {
            let y = y0 + (i as f64 + 0.5) * dy;
            (0..n).filter(|&j| pred((x0 + (j as f64 + 0.5) * dx, y))).count()
        })
        .sum();
    count as f64 * dx * dy
}

#[test]
fn overlapping_disks_area_matches_pixel_count() {
    let (ca, cb) = ((-0.3, 0.0), (0.3, 0.0));
    let a = disk(Point::new(ca.0, ca.1), 0.5, 64, BoundarySource::Obstacle1).unwrap();
    let b = disk(Point::new(cb.0, cb.1), 0.5, 64, BoundarySource::Obstacle2).unwrap();
    let (pa, pb) = (ngon(ca, 0.5, 64), ngon(cb, 0.5, 64));
    let bbox = (-0.85, 0.85, -0.55, 0.55);

    let inter = intersection(&a, &b).unwrap().area();
    let oracle = pixel_area(4096, bbox, |p| inside(&pa, p) && inside(&pb, p));
    assert!(
        (inter - oracle).abs() / oracle < 1e-3,
        "intersection {inter} vs {oracle}"
    );

    let uni = union(&a, &b).unwrap().area();
    let oracle = pixel_area(2048, bbox, |p| inside(&pa, p) || inside(&pb, p));
    assert!((uni - oracle).abs() / oracle < 1e-3, "union {uni} vs {oracle}");

    let diff = difference(&a, &b).unwrap().area();
    let oracle = pixel_area(2048, bbox, |p| inside(&pa, p) && !inside(&pb, p));
    assert!((diff - oracle).abs() / oracle < 1e-3, "difference {diff} vs {oracle}");
}

/// Two C-shaped obstacles whose union encloses a pocket.
fn crescents() -> (PolygonalSet, PolygonalSet, Vec<Point>, Vec<Point>) {
    let arc = |c: (f64, f64), from: f64, span: f64| -> Vec<Point> {
        let n = 48;
        let mut v = Vec::new();
        for k in 0..=n {
            let t = from + span * k as f64 / n as f64;
            v.push(Point::new(c.0 + 0.5 * t.cos(), c.1 + 0.5 * t.sin()));
        }
        for k in (0..=n).rev() {
            let t = from + span * k as f64 / n as f64;
            v.push(Point::new(c.0 + 0.35 * t.cos(), c.1 + 0.35 * t.sin()));
        }
        v
    };
    // left C opens to the right, right C opens to the left; they overlap at top and bottom
    let left = arc((-0.1, 0.0), 0.19 * TAU, 0.62 * TAU);
    let right = arc((0.1, 0.0), -0.31 * TAU, 0.62 * TAU);
    let make =
        |v: &Vec<Point>, s| PolygonalSet::from_polygon(signorini_lab::geometry::Polygon::new(v.clone(), s).unwrap());
    (
        make(&left, BoundarySource::Obstacle1),
        make(&right, BoundarySource::Obstacle2),
        left,
        right,
    )
}

#[test]
fn pocket_is_excluded_from_g0() {
    let omega = rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), BoundarySource::Omega).unwrap();
    let (o1, o2, p1, p2) = crescents();
    let g0 = compute_g0(&omega, &o1, &o2).unwrap();
    let free_area = omega.area() - union(&o1, &o2).unwrap().area();
    assert!(g0.area() < free_area - 0.1, "the pocket must not belong to G0");
    // centre of the pocket
    assert!(!g0.contains(&Point::new(0.0, 0.0)));
    assert!(g0.contains(&Point::new(0.9, 0.9)));

    // pixel flood fill from the frame
    let n = 1024;
    let px = |i: usize| -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
    let free: Vec<bool> = (0..n * n)
        .map(|k| {
            let p = (px(k % n), px(k / n));
            !inside(&p1, p) && !inside(&p2, p)
        })
        .collect();
    let mut seen = vec![false; n * n];
    let mut stack: Vec<usize> = (0..n)
        .flat_map(|i| [i, (n - 1) * n + i, i * n, i * n + n - 1])
        .filter(|&k| free[k])
        .collect();
    for &k in &stack {
        seen[k] = true;
    }
    while let Some(k) = stack.pop() {
        let (r, c) = (k / n, k % n);
        let mut nb = Vec::new();
        if r > 0 {
            nb.push(k - n);
        }
        if r + 1 < n {
            nb.push(k + n);
        }
        if c > 0 {
            nb.push(k - 1);
        }
        if c + 1 < n {
            nb.push(k + 1);
        }
        for q in nb {
            if free[q] && !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    let oracle = seen.iter().filter(|&&s| s).count() as f64 * (2.0 / n as f64).powi(2);
    assert!(
        (g0.area() - oracle).abs() / oracle < 5e-3,
        "G0 area {} vs flood fill {oracle}",
        g0.area()
    );

    let v = compute_v(&omega, &g0, &o1, &o2).unwrap();
    assert!(v.area() > 0.0);
    let c = classify_boundary(&v, &o1, &o2).unwrap();
    assert_eq!(c.untagged_length, 0.0);
}

/// Length of the part of the segment `a→b` lying outside the polygon `poly`,
/// found by splitting at every crossing with `poly`'s edges.
fn length_outside(a: Point, b: Point, poly: &[Point]) -> f64 {
    let mut ts = vec![0.0, 1.0];
    let d = b - a;
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let e = q - p;
        let den = d.x * e.y - d.y * e.x;
        if den.abs() < 1e-15 {
            continue;
        }
        let w = p - a;
        let t = (w.x * e.y - w.y * e.x) / den;
        let s = (w.x * d.y - w.y * d.x) / den;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .filter(|w| {
            let m = a + d * (0.5 * (w[0] + w[1]));
            !inside(poly, (m.x, m.y))
        })
        .map(|w| (w[1] - w[0]) * d.norm())
        .sum()
}

#[test]
fn classification_lengths_match_provenance_oracle() {
    let (ca, cb) = ((-0.3, 0.0), (0.3, 0.1));
    let omega = rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), BoundarySource::Omega).unwrap();
    let o1 = disk(Point::new(ca.0, ca.1), 0.5, 64, BoundarySource::Obstacle1).unwrap();
    let o2 = disk(Point::new(cb.0, cb.1), 0.45, 96, BoundarySource::Obstacle2).unwrap();
    let (p1, p2) = (ngon(ca, 0.5, 64), ngon(cb, 0.45, 96));
    let g0 = compute_g0(&omega, &o1, &o2).unwrap();
    let v = compute_v(&omega, &g0, &o1, &o2).unwrap();
    let c = classify_boundary(&v, &o1, &o2).unwrap();

    let on_o1: f64 = (0..p1.len())
        .map(|k| length_outside(p1[k], p1[(k + 1) % p1.len()], &p2))
        .sum();
    let o2_in_o1: f64 = (0..p2.len())
        .map(|k| {
            let (a, b) = (p2[k], p2[(k + 1) % p2.len()]);
            (b - a).norm() - length_outside(a, b, &p1)
        })
        .sum();
    assert!(
        (c.same_as_o1_length - on_o1).abs() < 1e-9,
        "{} vs {on_o1}",
        c.same_as_o1_length
    );
    assert!(
        (c.opposite_of_o2_length - o2_in_o1).abs() < 1e-9,
        "{} vs {o2_in_o1}",
        c.opposite_of_o2_length
    );
    assert_eq!(c.untagged_length, 0.0);
}

#[test]
fn star_difference_area_matches_pixel_count() {
    let a = star_polygon(Point::new(0.0, 0.0), 80, BoundarySource::Obstacle1, |t| {
        0.5 + 0.15 * (3.0 * t).cos()
    })
    .unwrap();
    let b = disk(Point::new(0.25, 0.1), 0.3, 48, BoundarySource::Obstacle2).unwrap();
    let pa: Vec<Point> = a.vertices().copied().collect();
    let pb = ngon((0.25, 0.1), 0.3, 48);
    let area = difference(&a, &b).unwrap().area();
    let oracle = pixel_area(2048, (-0.7, 0.7, -0.7, 0.7), |p| inside(&pa, p) && !inside(&pb, p));
    assert!((area - oracle).abs() / oracle < 1e-3, "{area} vs {oracle}");
}
