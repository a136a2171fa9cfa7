use std::sync::OnceLock;

use proptest::prelude::*;

use signorini_lab::expr::{Expr, VectorExpr};
use signorini_lab::fem::{
    fit_rigid_motion, gap, Bound, BoundQp, BoundaryMeasurement, CsrMatrix, PdasOptions, PgsOptions, Quantity,
};
use signorini_lab::geometry::{difference, disk, intersection, star_polygon, union, BoundarySource, Point};
use signorini_lab::mesh::{triangulate, BoundaryTag, Mesh};

fn unit_disk_mesh() -> &'static Mesh {
    static MESH: OnceLock<Mesh> = OnceLock::new();
    MESH.get_or_init(|| triangulate(&disk(Point::origin(), 1.0, 48, BoundarySource::Omega).unwrap(), 0.2).unwrap())
}

fn measure(f: impl Fn(f64, f64) -> [f64; 2]) -> BoundaryMeasurement {
    let mesh = unit_disk_mesh();
    BoundaryMeasurement::from_nodes(mesh, BoundaryTag::Outer, Quantity::Traction, |i| {
        let p = mesh.nodes()[i];
        f(p.x, p.y)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boolean_areas_are_additive(
        cx in -0.6f64..0.6, cy in -0.6f64..0.6, r in 0.15f64..0.7,
        a1 in -0.3f64..0.3, k in 2u32..6,
    ) {
        let a = star_polygon(Point::origin(), 60, BoundarySource::Obstacle1, |t| 0.5 + a1 * 0.5 * (k as f64 * t).cos())
            .unwrap();
        let b = disk(Point::new(cx, cy), r, 40, BoundarySource::Obstacle2).unwrap();
        let (aa, ab) = (a.area(), b.area());
        let i = intersection(&a, &b).unwrap().area();
        let u = union(&a, &b).unwrap().area();
        let d = difference(&a, &b).unwrap().area();
        prop_assert!((u + i - aa - ab).abs() < 1e-9, "union {u} + inter {i} vs {aa} + {ab}");
        prop_assert!((d + i - aa).abs() < 1e-9, "diff {d} + inter {i} vs {aa}");
        prop_assert!(i <= aa.min(ab) + 1e-12);
    }

    #[test]
    fn rigid_fit_recovers_motion(
        c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, w in -1.0f64..1.0,
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
    ) {
        let points: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let spread = points.iter().map(|p| (p - points[0]).norm()).fold(0.0, f64::max);
        prop_assume!(spread > 0.1);
        let u: Vec<[f64; 2]> = points.iter().map(|p| [c0 - w * p.y, c1 + w * p.x]).collect();
        let fit = fit_rigid_motion(&points, &u).unwrap();
        prop_assert!(fit.residual < 1e-10);
        prop_assert!((fit.motion.c[0] - c0).abs() < 1e-9 && (fit.motion.c[1] - c1).abs() < 1e-9);
        prop_assert!((fit.motion.omega - w).abs() < 1e-9);
    }

    #[test]
    fn gap_is_a_symmetric_distance(a in -1.0f64..1.0, b in -1.0f64..1.0, s in 0.5f64..3.0) {
        let p = measure(|x, y| [a * x, b * y * y]);
        let q = measure(|x, y| [x * y, a + b * x]);
        let spacing = 0.01;
        let (l2, linf) = gap(&p, &q, spacing).unwrap();
        let (l2r, linfr) = gap(&q, &p, spacing).unwrap();
        prop_assert!((l2 - l2r).abs() <= 1e-12 * l2.max(1.0));
        prop_assert!((linf - linfr).abs() <= 1e-12 * linf.max(1.0));
        prop_assert!(l2 <= linf * (2.0 * std::f64::consts::PI).sqrt() * 1.01);
        prop_assert_eq!(gap(&p, &p, spacing).unwrap(), (0.0, 0.0));
        let (l2s, _) = gap(&p.scaled(s), &q.scaled(s), spacing).unwrap();
        prop_assert!((l2s - s * l2).abs() <= 1e-9 * l2s.max(1.0));
    }

    #[test]
    fn expressions_match_closures(a in -5.0f64..5.0, b in -5.0f64..5.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let e = Expr::parse(&format!("{a}*x^2 - sin({b}*y) / (1 + exp(x)) + sqrt(abs(x*y))")).unwrap();
        let want = a * x * x - (b * y).sin() / (1.0 + x.exp()) + (x * y).abs().sqrt();
        prop_assert!((e.eval(x, y) - want).abs() <= 1e-12 * want.abs().max(1.0));
        let v = VectorExpr::parse(&format!("-({a})*y, cos(pi*x) - {b}")).unwrap();
        let got = v.eval(x, y);
        prop_assert!((got[0] + a * y).abs() < 1e-12);
        prop_assert!((got[1] - ((std::f64::consts::PI * x).cos() - b)).abs() < 1e-12);
        prop_assert_eq!(Expr::parse(&format!("{a} + 2*{b}")).unwrap().as_constant().is_some(), true);
    }

    #[test]
    fn pdas_and_pgs_agree_on_random_qps(
        n in 3usize..24,
        seed in prop::collection::vec(-1.0f64..1.0, 24 * 24),
        rhs in prop::collection::vec(-2.0f64..2.0, 24),
        kinds in prop::collection::vec(0u8..3, 24),
    ) {
        // K = BᵀB + I, dense SPD
        let b = |i: usize, j: usize| seed[i * 24 + j];
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| b(k, i) * b(k, j)).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                triplets.push((i, j, v));
            }
        }
        let bounds = kinds[..n]
            .iter()
            .map(|k| match k {
                0 => Bound::Free,
                1 => Bound::NonNegative,
                _ => Bound::NonPositive,
            })
            .collect();
        let qp = BoundQp { k: CsrMatrix::from_triplets(n, &triplets), rhs: rhs[..n].to_vec(), bounds };
        let p = qp.solve_pdas(PdasOptions::default()).unwrap();
        let g = qp.solve_pgs(PgsOptions::default()).unwrap();
        prop_assert!(qp.is_feasible(&p.x, 1e-12));
        prop_assert!(p.complementarity < 1e-10 && p.stationarity < 1e-9);
        let diff = p.x.iter().zip(&g.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = p.x.iter().map(|a| a.abs()).fold(1.0, f64::max);
        prop_assert!(diff < 1e-8 * scale, "PDAS vs PGS {diff:.3e}");
        prop_assert!((qp.objective(&p.x) - qp.objective(&g.x)).abs() < 1e-10 * scale * scale);
    }
}
