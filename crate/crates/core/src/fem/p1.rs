//! Linear triangle kernels.

use crate::geometry::polygon::{Point, Vec2};

/// Barycentric gradients and area of a positively oriented triangle.
pub fn gradients(p: &[Point; 3]) -> ([Vec2; 3], f64) {
    let d = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    let area = 0.5 * d;
    let g = [
        Vec2::new(p[1].y - p[2].y, p[2].x - p[1].x) / d,
        Vec2::new(p[2].y - p[0].y, p[0].x - p[2].x) / d,
        Vec2::new(p[0].y - p[1].y, p[1].x - p[0].x) / d,
    ];
    (g, area)
}

pub fn laplace_local(p: &[Point; 3]) -> [[f64; 3]; 3] {
    let (g, area) = gradients(p);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * g[a].dot(&g[b]);
        }
    }
    k
}

pub fn gradient(p: &[Point; 3], u: [f64; 3]) -> Vec2 {
    let (g, _) = gradients(p);
    g[0] * u[0] + g[1] * u[1] + g[2] * u[2]
}

/// Strain `[εxx, εyy, εxy]` of a P1 displacement on one triangle.
pub fn strain(p: &[Point; 3], u: [[f64; 2]; 3]) -> [f64; 3] {
    let (g, _) = gradients(p);
    let mut e = [0.0; 3];
    for a in 0..3 {
        e[0] += g[a].x * u[a][0];
        e[1] += g[a].y * u[a][1];
        e[2] += 0.5 * (g[a].y * u[a][0] + g[a].x * u[a][1]);
    }
    e
}

/// `σ = 2με + λ tr(ε) I` as `[σxx, σyy, σxy]`.
pub fn stress(e: [f64; 3], mu: f64, lambda: f64) -> [f64; 3] {
    let tr = e[0] + e[1];
    [
        2.0 * mu * e[0] + lambda * tr,
        2.0 * mu * e[1] + lambda * tr,
        2.0 * mu * e[2],
    ]
}

pub fn traction(s: [f64; 3], n: Vec2) -> Vec2 {
    Vec2::new(s[0] * n.x + s[2] * n.y, s[2] * n.x + s[1] * n.y)
}

/// Element stiffness for DOF order `(u0x, u0y, u1x, u1y, u2x, u2y)`.
pub fn elastic_local(p: &[Point; 3], mu: f64, lambda: f64) -> [[f64; 6]; 6] {
    let (g, area) = gradients(p);
    // rows of B: εxx, εyy, 2εxy
    let mut b = [[0.0; 6]; 3];
    for a in 0..3 {
        b[0][2 * a] = g[a].x;
        b[1][2 * a + 1] = g[a].y;
        b[2][2 * a] = g[a].y;
        b[2][2 * a + 1] = g[a].x;
    }
    let d = [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ];
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let mut s = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    s += b[r][i] * d[r][c] * b[c][j];
                }
            }
            k[i][j] = area * s;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_of_reference_triangle() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let (g, a) = gradients(&p);
        assert_eq!(a, 0.5);
        assert_eq!(g[1], Vec2::new(1.0, 0.0));
        assert_eq!(g[2], Vec2::new(0.0, 1.0));
        let k = laplace_local(&p);
        assert!((k[0][0] - 1.0).abs() < 1e-15 && (k[1][2]).abs() < 1e-15);
    }

    #[test]
    fn rigid_modes_are_in_the_kernel() {
        let p = [Point::new(0.1, 0.0), Point::new(1.0, 0.2), Point::new(0.3, 0.9)];
        let k = elastic_local(&p, 1.3, 0.7);
        let modes: [[f64; 6]; 3] = [
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            [-p[0].y, p[0].x, -p[1].y, p[1].x, -p[2].y, p[2].x],
        ];
        for m in &modes {
            for row in &k {
                let s: f64 = row.iter().zip(m).map(|(a, b)| a * b).sum();
                assert!(s.abs() < 1e-13);
            }
        }
    }
}
