//! Scalar thin-obstacle problem: `Δu = 0` in the domain, `u = f` on the outer
//! boundary and Signorini conditions `u ≥ 0, ∂_ν u ≥ 0, u ∂_ν u = 0` on the
//! obstacle boundary, discretised with P1 elements and nodal constraints.

use serde::Serialize;

use super::measurement::{BoundaryMeasurement, Quantity};
use super::p1;
use super::qp::{Bound, BoundQp, Method, PdasOptions, PgsOptions};
use super::sparse::{assemble, CsrMatrix};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, NodeKind};
use crate::par::Exec;

#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarOptions {
    pub method: Option<Method>,
    pub pdas: Option<PdasOptions>,
    pub pgs: Option<PgsOptions>,
    pub exec: Exec,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarSolution {
    pub u: Vec<f64>,
    /// Obstacle nodes with `u = 0` at the solution.
    pub active_set: Vec<usize>,
    /// `(Ku)_i` at each obstacle node, in [`Mesh::obstacle_nodes`] order.
    pub reactions: Vec<f64>,
    pub iterations: usize,
    /// Complementarity residual `max |min(u_i, λ_i)|` on the obstacle.
    pub residual: f64,
    /// `max |(Ku)_i|` over interior unknowns.
    pub stationarity: f64,
    pub energy: f64,
    pub method: Method,
}

/// Stiffness matrix and constraint data of the discrete problem.
pub struct ScalarSystem {
    pub k: CsrMatrix,
    /// Mesh nodes that are unknowns, in increasing order.
    pub unknowns: Vec<usize>,
    /// Full nodal vector holding the Dirichlet values (zero elsewhere).
    pub lifted: Vec<f64>,
    pub qp: BoundQp,
}

pub fn assemble_laplace(mesh: &Mesh, exec: Exec) -> CsrMatrix {
    let tris = mesh.triangles();
    assemble::<3, _>(exec, mesh.node_count(), tris.len(), |t| {
        (tris[t], p1::laplace_local(&mesh.triangle_points(t)))
    })
}

pub fn scalar_system(mesh: &Mesh, f: &dyn Fn(f64, f64) -> f64, exec: Exec) -> Result<ScalarSystem> {
    let n = mesh.node_count();
    let mut lifted = vec![0.0; n];
    let mut unknowns = Vec::new();
    let mut dirichlet = 0;
    for i in 0..n {
        match mesh.kind(i) {
            NodeKind::Outer | NodeKind::Gamma => {
                let p = mesh.nodes()[i];
                let v = f(p.x, p.y);
                if !v.is_finite() {
                    return Err(Error::Invalid(format!(
                        "boundary datum is not finite at ({:.6}, {:.6})",
                        p.x, p.y
                    )));
                }
                lifted[i] = v;
                dirichlet += 1;
            }
            _ => unknowns.push(i),
        }
    }
    if dirichlet == 0 {
        return Err(Error::Precondition(
            "no Dirichlet boundary: stiffness is singular".into(),
        ));
    }
    let k = assemble_laplace(mesh, exec);
    let (kr, coupling) = k.split(&unknowns, &lifted);
    let rhs: Vec<f64> = coupling.iter().map(|c| -c).collect();
    let bounds = unknowns
        .iter()
        .map(|&i| {
            if mesh.kind(i) == NodeKind::Obstacle {
                Bound::NonNegative
            } else {
                Bound::Free
            }
        })
        .collect();
    Ok(ScalarSystem {
        k,
        unknowns,
        lifted,
        qp: BoundQp { k: kr, rhs, bounds },
    })
}

pub fn solve_scalar(mesh: &Mesh, f: &dyn Fn(f64, f64) -> f64) -> Result<ScalarSolution> {
    solve_scalar_with(mesh, f, &ScalarOptions::default())
}

pub fn solve_scalar_with(mesh: &Mesh, f: &dyn Fn(f64, f64) -> f64, opts: &ScalarOptions) -> Result<ScalarSolution> {
    let sys = scalar_system(mesh, f, opts.exec)?;
    let method = opts.method.unwrap_or(Method::Pdas);
    let q = match method {
        Method::Pdas => sys.qp.solve_pdas(opts.pdas.unwrap_or_default())?,
        Method::Pgs => sys.qp.solve_pgs(opts.pgs.unwrap_or_default())?,
    };
    let mut u = sys.lifted.clone();
    for (k, &i) in sys.unknowns.iter().enumerate() {
        u[i] = q.x[k];
    }
    let ku = sys.k.mul_vec(&u);
    let reactions: Vec<f64> = mesh.obstacle_nodes().iter().map(|&i| ku[i]).collect();
    let active_set = sys
        .unknowns
        .iter()
        .enumerate()
        .filter(|(k, _)| sys.qp.bounds[*k] != Bound::Free && q.active[*k])
        .map(|(_, &i)| i)
        .collect();
    let energy = 0.5 * ku.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    Ok(ScalarSolution {
        u,
        active_set,
        reactions,
        iterations: q.iterations,
        residual: q.complementarity,
        stationarity: q.stationarity,
        energy,
        method,
    })
}

pub fn energy(mesh: &Mesh, u: &[f64]) -> f64 {
    let k = assemble_laplace(mesh, Exec::Sequential);
    0.5 * k.quadratic_form(u)
}

/// Elementwise gradients of a nodal field.
pub fn gradients(mesh: &Mesh, u: &[f64]) -> Vec<crate::geometry::polygon::Vec2> {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.triangles()[t];
            p1::gradient(&mesh.triangle_points(t), [u[a], u[b], u[c]])
        })
        .collect()
}

/// Triangle containing each boundary edge, in [`Mesh::boundary_edges`] order.
pub(crate) fn boundary_edge_triangles(mesh: &Mesh) -> Vec<usize> {
    let mut owner = std::collections::HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            owner.insert((tri[k], tri[(k + 1) % 3]), t);
        }
    }
    mesh.boundary_edges()
        .iter()
        .map(|e| owner[&(e.nodes[0], e.nodes[1])])
        .collect()
}

/// Normal derivative on a tagged boundary. Obstacle: reaction divided by the
/// lumped boundary mass. Outer boundary and `Γ`: elementwise `∇u·n`, averaged
/// at nodes with edge-length weights. `n` is the outward normal of the
/// computational domain in both cases.
pub fn recover_flux(sol: &ScalarSolution, mesh: &Mesh, tag: BoundaryTag) -> Result<BoundaryMeasurement> {
    if mesh.edges_with_tag(tag).next().is_none() {
        return Err(Error::Invalid(format!("mesh has no {tag:?} boundary")));
    }
    let n = mesh.node_count();
    let mut value = vec![0.0; n];
    match tag {
        BoundaryTag::Obstacle => {
            let mass = mesh.lumped_boundary_mass(tag);
            for (k, &i) in mesh.obstacle_nodes().iter().enumerate() {
                value[i] = sol.reactions[k] / mass[i];
            }
        }
        _ => {
            let grads = gradients(mesh, &sol.u);
            let owner = boundary_edge_triangles(mesh);
            let mut weight = vec![0.0; n];
            for (k, e) in mesh.boundary_edges().iter().enumerate() {
                if e.tag != tag {
                    continue;
                }
                let [i, j] = e.nodes;
                let (p, q) = (mesh.nodes()[i], mesh.nodes()[j]);
                let len = (q - p).norm();
                let normal = crate::geometry::polygon::right_normal(&p, &q);
                let flux = grads[owner[k]].dot(&normal);
                for v in [i, j] {
                    value[v] += len * flux;
                    weight[v] += len;
                }
            }
            for v in 0..n {
                if weight[v] > 0.0 {
                    value[v] /= weight[v];
                }
            }
        }
    }
    BoundaryMeasurement::from_nodes(mesh, tag, Quantity::Flux, |i| [value[i], 0.0])
}
