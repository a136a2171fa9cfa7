//! Frictionless elastic contact: `div σ(u) = 0` in the domain, `u = f` on the
//! outer boundary and `u_ν ≤ 0, σ_ν ≤ 0, u_ν σ_ν = 0, σ_τ = 0` on the
//! obstacle boundary, with `ν` the outward normal of the body.

use serde::Serialize;

use super::measurement::{BoundaryMeasurement, Quantity};
use super::p1;
use super::qp::{Bound, BoundQp, Method, PdasOptions, PgsOptions};
use super::scalar::boundary_edge_triangles;
use super::sparse::{assemble, CsrMatrix};
use crate::error::{Error, Result};
use crate::geometry::polygon::{right_normal, Vec2};
use crate::mesh::{BoundaryTag, Mesh, NodeKind};
use crate::par::Exec;

/// Piecewise-constant Lamé parameters, one pair per triangle.
#[derive(Clone, Debug, Serialize)]
pub struct LameField {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl LameField {
    pub fn constant(mesh: &Mesh, mu: f64, lambda: f64) -> Result<Self> {
        let n = mesh.triangles().len();
        let f = LameField {
            mu: vec![mu; n],
            lambda: vec![lambda; n],
        };
        f.validate(mesh)?;
        Ok(f)
    }

    /// Samples `(μ, λ)` at triangle centroids.
    pub fn sample(mesh: &Mesh, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let (mut mu, mut lambda) = (Vec::new(), Vec::new());
        for t in 0..mesh.triangles().len() {
            let c = mesh.centroid(t);
            let (m, l) = f(c.x, c.y);
            mu.push(m);
            lambda.push(l);
        }
        let out = LameField { mu, lambda };
        out.validate(mesh)?;
        Ok(out)
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.triangles().len();
        if self.mu.len() != n || self.lambda.len() != n {
            return Err(Error::Invalid("Lamé field does not match the mesh".into()));
        }
        for t in 0..n {
            if !(self.mu[t] > 0.0 && self.lambda[t] > 0.0) || !self.mu[t].is_finite() || !self.lambda[t].is_finite() {
                return Err(Error::Invalid(format!(
                    "Lamé parameters must be positive (triangle {t}: μ = {}, λ = {})",
                    self.mu[t], self.lambda[t]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ElasticOptions {
    pub method: Option<Method>,
    pub pdas: Option<PdasOptions>,
    pub pgs: Option<PgsOptions>,
    pub exec: Exec,
}

#[derive(Clone, Debug, Serialize)]
pub struct ElasticSolution {
    pub u: Vec<[f64; 2]>,
    /// Obstacle nodes with `u·ν = 0` at the solution.
    pub active_set: Vec<usize>,
    /// Nodal reaction `(Ku)_i` at each obstacle node, in
    /// [`Mesh::obstacle_nodes`] order.
    pub reactions: Vec<[f64; 2]>,
    /// Normal contact pressure `r·ν / m_i` (non-positive in contact).
    pub pressure: Vec<f64>,
    pub iterations: usize,
    /// Complementarity residual `max |min(−u·ν, −r·ν)|` over obstacle nodes.
    pub residual: f64,
    pub stationarity: f64,
    pub energy: f64,
    pub method: Method,
}

pub struct ElasticSystem {
    /// Stiffness in Cartesian DOFs `(2i, 2i+1)`.
    pub k: CsrMatrix,
    /// Rotation block `[ν τ]` for obstacle nodes.
    pub frames: Vec<Option<[[f64; 2]; 2]>>,
    /// DOFs (in the rotated basis) that are unknowns.
    pub unknowns: Vec<usize>,
    pub lifted: Vec<f64>,
    pub qp: BoundQp,
}

pub fn assemble_elasticity(mesh: &Mesh, lame: &LameField, exec: Exec) -> CsrMatrix {
    let tris = mesh.triangles();
    assemble::<6, _>(exec, 2 * mesh.node_count(), tris.len(), |t| {
        let [a, b, c] = tris[t];
        let dofs = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1, 2 * c, 2 * c + 1];
        (
            dofs,
            p1::elastic_local(&mesh.triangle_points(t), lame.mu[t], lame.lambda[t]),
        )
    })
}

fn frame(n: Vec2) -> [[f64; 2]; 2] {
    // columns ν and τ = (−ν_y, ν_x)
    [[n.x, -n.y], [n.y, n.x]]
}

pub fn elastic_system(
    mesh: &Mesh,
    lame: &LameField,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    exec: Exec,
) -> Result<ElasticSystem> {
    lame.validate(mesh)?;
    let n = mesh.node_count();
    let mut lifted = vec![0.0; 2 * n];
    let mut unknowns = Vec::new();
    let mut bounds = Vec::new();
    let mut frames = vec![None; n];
    let mut dirichlet = 0;
    for i in 0..n {
        match mesh.kind(i) {
            NodeKind::Outer | NodeKind::Gamma => {
                let p = mesh.nodes()[i];
                let v = f(p.x, p.y);
                if !v[0].is_finite() || !v[1].is_finite() {
                    return Err(Error::Invalid(format!(
                        "boundary datum is not finite at ({:.6}, {:.6})",
                        p.x, p.y
                    )));
                }
                lifted[2 * i] = v[0];
                lifted[2 * i + 1] = v[1];
                dirichlet += 1;
            }
            NodeKind::Obstacle => {
                frames[i] = Some(frame(mesh.node_normal(i)));
                unknowns.extend([2 * i, 2 * i + 1]);
                bounds.extend([Bound::NonPositive, Bound::Free]);
            }
            NodeKind::Interior => {
                unknowns.extend([2 * i, 2 * i + 1]);
                bounds.extend([Bound::Free, Bound::Free]);
            }
        }
    }
    if dirichlet < 2 {
        return Err(Error::Precondition(
            "Dirichlet boundary too small: stiffness is singular".into(),
        ));
    }
    let k = assemble_elasticity(mesh, lame, exec);
    let rotated = k.rotate_pairs(&frames);
    let (kr, coupling) = rotated.split(&unknowns, &lifted);
    let rhs = coupling.iter().map(|c| -c).collect();
    Ok(ElasticSystem {
        k,
        frames,
        unknowns,
        lifted,
        qp: BoundQp { k: kr, rhs, bounds },
    })
}

impl ElasticSystem {
    /// Cartesian nodal displacements from a vector of unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<[f64; 2]> {
        let mut r = self.lifted.clone();
        for (k, &d) in self.unknowns.iter().enumerate() {
            r[d] = x[k];
        }
        (0..r.len() / 2)
            .map(|i| match self.frames[i] {
                Some(b) => [
                    b[0][0] * r[2 * i] + b[0][1] * r[2 * i + 1],
                    b[1][0] * r[2 * i] + b[1][1] * r[2 * i + 1],
                ],
                None => [r[2 * i], r[2 * i + 1]],
            })
            .collect()
    }
}

pub fn solve_elastic(mesh: &Mesh, lame: &LameField, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Result<ElasticSolution> {
    solve_elastic_with(mesh, lame, f, &ElasticOptions::default())
}

pub fn solve_elastic_with(
    mesh: &Mesh,
    lame: &LameField,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    opts: &ElasticOptions,
) -> Result<ElasticSolution> {
    let sys = elastic_system(mesh, lame, f, opts.exec)?;
    let method = opts.method.unwrap_or(Method::Pdas);
    let q = match method {
        Method::Pdas => sys.qp.solve_pdas(opts.pdas.unwrap_or_default())?,
        Method::Pgs => sys.qp.solve_pgs(opts.pgs.unwrap_or_default())?,
    };
    let u = sys.expand(&q.x);
    let flat: Vec<f64> = u.iter().flat_map(|v| [v[0], v[1]]).collect();
    let ku = sys.k.mul_vec(&flat);
    let mass = mesh.lumped_boundary_mass(BoundaryTag::Obstacle);
    let mut reactions = Vec::new();
    let mut pressure = Vec::new();
    for &i in mesh.obstacle_nodes() {
        let r = [ku[2 * i], ku[2 * i + 1]];
        let nrm = mesh.node_normal(i);
        reactions.push(r);
        pressure.push((r[0] * nrm.x + r[1] * nrm.y) / mass[i]);
    }
    let active_set = sys
        .unknowns
        .iter()
        .enumerate()
        .filter(|(k, _)| sys.qp.bounds[*k] != Bound::Free && q.active[*k])
        .map(|(_, &d)| d / 2)
        .collect();
    let energy = 0.5 * ku.iter().zip(&flat).map(|(a, b)| a * b).sum::<f64>();
    Ok(ElasticSolution {
        u,
        active_set,
        reactions,
        pressure,
        iterations: q.iterations,
        residual: q.complementarity,
        stationarity: q.stationarity,
        energy,
        method,
    })
}

/// Elementwise stress `[σxx, σyy, σxy]`.
pub fn stresses(mesh: &Mesh, lame: &LameField, u: &[[f64; 2]]) -> Vec<[f64; 3]> {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.triangles()[t];
            let e = p1::strain(&mesh.triangle_points(t), [u[a], u[b], u[c]]);
            p1::stress(e, lame.mu[t], lame.lambda[t])
        })
        .collect()
}

pub fn elastic_energy(mesh: &Mesh, lame: &LameField, u: &[[f64; 2]]) -> f64 {
    let k = assemble_elasticity(mesh, lame, Exec::Sequential);
    let flat: Vec<f64> = u.iter().flat_map(|v| [v[0], v[1]]).collect();
    0.5 * k.quadratic_form(&flat)
}

/// Traction `σ(u)n` on a tagged boundary. Obstacle: nodal reaction divided
/// by the lumped boundary mass. Outer boundary and `Γ`: elementwise `σn`,
/// averaged at nodes with edge-length weights.
pub fn recover_traction(
    sol: &ElasticSolution,
    mesh: &Mesh,
    lame: &LameField,
    tag: BoundaryTag,
) -> Result<BoundaryMeasurement> {
    if mesh.edges_with_tag(tag).next().is_none() {
        return Err(Error::Invalid(format!("mesh has no {tag:?} boundary")));
    }
    let n = mesh.node_count();
    let mut value = vec![[0.0; 2]; n];
    match tag {
        BoundaryTag::Obstacle => {
            let mass = mesh.lumped_boundary_mass(tag);
            for (k, &i) in mesh.obstacle_nodes().iter().enumerate() {
                value[i] = [sol.reactions[k][0] / mass[i], sol.reactions[k][1] / mass[i]];
            }
        }
        _ => {
            let sig = stresses(mesh, lame, &sol.u);
            let owner = boundary_edge_triangles(mesh);
            let mut weight = vec![0.0; n];
            for (k, e) in mesh.boundary_edges().iter().enumerate() {
                if e.tag != tag {
                    continue;
                }
                let [i, j] = e.nodes;
                let (p, q) = (mesh.nodes()[i], mesh.nodes()[j]);
                let len = (q - p).norm();
                let tr = p1::traction(sig[owner[k]], right_normal(&p, &q));
                for v in [i, j] {
                    value[v][0] += len * tr.x;
                    value[v][1] += len * tr.y;
                    weight[v] += len;
                }
            }
            for v in 0..n {
                if weight[v] > 0.0 {
                    value[v] = [value[v][0] / weight[v], value[v][1] / weight[v]];
                }
            }
        }
    }
    BoundaryMeasurement::from_nodes(mesh, tag, Quantity::Traction, |i| value[i])
}

/// Normal and tangential parts `(t·ν, t·τ)` of the obstacle traction at each
/// obstacle node.
pub fn contact_split(sol: &ElasticSolution, mesh: &Mesh) -> Vec<(f64, f64)> {
    let mass = mesh.lumped_boundary_mass(BoundaryTag::Obstacle);
    mesh.obstacle_nodes()
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let nrm = mesh.node_normal(i);
            let r = Vec2::new(sol.reactions[k][0], sol.reactions[k][1]) / mass[i];
            (r.dot(&nrm), r.dot(&Vec2::new(-nrm.y, nrm.x)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon::{BoundarySource, Point};
    use crate::geometry::shapes::disk;
    use crate::mesh::triangulate;

    #[test]
    fn affine_stretch_is_reproduced() {
        let d = disk(Point::origin(), 1.0, 64, BoundarySource::Omega).unwrap();
        let m = triangulate(&d, 0.15).unwrap();
        let lame = LameField::constant(&m, 1.0, 1.0).unwrap();
        let s = solve_elastic(&m, &lame, &|x, _| [0.1 * x, 0.0]).unwrap();
        for (p, v) in m.nodes().iter().zip(&s.u) {
            assert!((v[0] - 0.1 * p.x).abs() < 1e-12 && v[1].abs() < 1e-12);
        }
        // σ = diag(0.3, 0.1)
        let t = recover_traction(&s, &m, &lame, BoundaryTag::Outer).unwrap();
        assert!(t.samples.iter().all(|x| x.value[0].abs() <= 0.3 + 1e-10));
    }

    #[test]
    fn nonpositive_lame_is_rejected() {
        let d = disk(Point::origin(), 1.0, 32, BoundarySource::Omega).unwrap();
        let m = triangulate(&d, 0.3).unwrap();
        assert!(LameField::constant(&m, 1.0, 0.0).is_err());
    }
}
