//! Gauss–Newton reconstruction of a star-shaped obstacle from a boundary
//! measurement.
//!
//! All trial shapes share one reference mesh whose nodes are moved radially,
//! so the discrete forward map is smooth in the shape parameters.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{experiment_mesh, forward_on_mesh, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fem::BoundaryMeasurement;
use crate::geometry::polygon::{BoundarySource, Point};
use crate::geometry::shapes::star_polygon;
use crate::mesh::Mesh;
use crate::par;
use crate::scene::{circle_segments, Obstacle, Shape};

/// `r(θ) = r₀ + Σ_{k=1..K} a_k cos kθ + b_k sin kθ` about a fixed centre.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarShape {
    pub center: [f64; 2],
    pub r0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl StarShape {
    pub fn disk(center: Point, r0: f64, modes: usize) -> Self {
        StarShape {
            center: [center.x, center.y],
            r0,
            cos: vec![0.0; modes],
            sin: vec![0.0; modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    /// `[r₀, a₁, b₁, …, a_K, b_K]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.r0];
        for k in 0..self.modes() {
            p.push(self.cos[k]);
            p.push(self.sin[k]);
        }
        p
    }

    pub fn with_params(&self, p: &[f64]) -> Self {
        let k = (p.len() - 1) / 2;
        StarShape {
            center: self.center,
            r0: p[0],
            cos: (0..k).map(|i| p[1 + 2 * i]).collect(),
            sin: (0..k).map(|i| p[2 + 2 * i]).collect(),
        }
    }

    pub fn radius(&self, t: f64) -> f64 {
        let mut r = self.r0;
        for k in 0..self.modes() {
            let kt = (k + 1) as f64 * t;
            r += self.cos[k] * kt.cos() + self.sin[k] * kt.sin();
        }
        r
    }

    /// `(min, max)` of `r(θ)` over 720 angles.
    pub fn radius_range(&self) -> (f64, f64) {
        (0..720)
            .map(|i| self.radius(TAU * i as f64 / 720.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)))
    }

    /// A disk for `K = 0` (tracked as a circle by the mesher), otherwise a
    /// star polygon with edges of length about `h`.
    pub fn obstacle(&self, name: &str, h: f64) -> Result<Obstacle> {
        if self.cos.iter().chain(&self.sin).all(|&c| c == 0.0) {
            return Ok(Obstacle::disk(name, self.center(), self.r0));
        }
        let n = circle_segments(self.radius_range().1, h);
        let set = star_polygon(self.center(), n, BoundarySource::Obstacle1, |t| self.radius(t))?;
        Ok(Obstacle {
            name: name.into(),
            shape: Shape::Polygon(set),
        })
    }
}

/// Moves the nodes of `reference` (built around `from`) so that its obstacle
/// becomes `to`: radial shift `Δ(θ)(R_b − ρ)/(R_b − r_from(θ))` for `ρ < R_b`.
pub fn morph_mesh(reference: &Mesh, from: &StarShape, to: &StarShape, r_b: f64) -> Result<Mesh> {
    let c = from.center();
    let nodes = reference
        .nodes()
        .iter()
        .map(|p| {
            let d = p - c;
            let rho = d.norm();
            if rho >= r_b || rho == 0.0 {
                return *p;
            }
            let t = d.y.atan2(d.x);
            let rf = from.radius(t);
            let shift = (to.radius(t) - rf) * (r_b - rho) / (r_b - rf);
            c + d * ((rho + shift) / rho)
        })
        .collect();
    reference.with_nodes(nodes)
}

#[derive(Clone, Copy, Debug)]
pub struct ReconstructionOptions {
    pub max_iter: usize,
    /// Finite-difference step relative to the initial `r₀`.
    pub fd_step: f64,
    pub max_rejections: usize,
    /// Stop when the misfit falls below `tol × ‖target‖`.
    pub tol: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            max_iter: 60,
            fd_step: 1e-4,
            max_rejections: 20,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReconstructionStatus {
    Converged,
    /// The measurement does not respond to the shape parameters.
    Stagnated,
    MaxIterations,
    /// Too many consecutive rejected steps.
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    pub shape: StarShape,
    /// `‖m(p) − target‖_{L²(Γ)}` after each accepted step, starting with the
    /// initial guess.
    pub misfit_history: Vec<f64>,
    pub iterations: usize,
    pub rejected_steps: usize,
    pub status: ReconstructionStatus,
}

struct Problem<'a> {
    config: &'a ExperimentConfig,
    reference: Mesh,
    init: StarShape,
    r_b: f64,
    grid: Vec<(f64, f64)>,
    target: Vec<[f64; 2]>,
}

impl Problem<'_> {
    fn admissible(&self, s: &StarShape) -> bool {
        let (lo, hi) = s.radius_range();
        lo > 0.05 * self.r_b && hi < 0.95 * self.r_b
    }

    /// Weighted residual `√w_j (m(t_j) − target_j)`, or `None` when the shape
    /// is inadmissible.
    fn residual(&self, s: &StarShape) -> Result<Option<DVector<f64>>> {
        if !self.admissible(s) {
            return Ok(None);
        }
        let mesh = match morph_mesh(&self.reference, &self.init, s, self.r_b) {
            Ok(m) => m,
            Err(Error::Mesh(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let m = forward_on_mesh(self.config, &mesh)?;
        let mut r = Vec::with_capacity(2 * self.grid.len());
        for (k, &(t, w)) in self.grid.iter().enumerate() {
            let v = m.at(t);
            r.push(w * (v[0] - self.target[k][0]));
            r.push(w * (v[1] - self.target[k][1]));
        }
        Ok(Some(DVector::from_vec(r)))
    }
}

/// Gauss–Newton with a finite-difference Jacobian and step halving. The
/// misfit history is non-increasing by construction.
pub fn reconstruct(
    config: &ExperimentConfig,
    target: &BoundaryMeasurement,
    init: &StarShape,
    opts: &ReconstructionOptions,
) -> Result<Reconstruction> {
    if init.modes() > 4 {
        return Err(Error::Invalid(format!(
            "at most 4 Fourier modes are supported, got {}",
            init.modes()
        )));
    }
    if target.tag != config.gamma_tag() {
        return Err(Error::Invalid("target was not measured on the configured arc".into()));
    }
    let omega = config.scene.omega_set(Some(config.h))?;
    let r_b = 0.9 * omega.distance_to_boundary(&init.center());
    if !omega.contains(&init.center()) {
        return Err(Error::Invalid("reconstruction centre lies outside Ω".into()));
    }
    let reference = experiment_mesh(&config.scene, &init.obstacle("init", config.h)?, config.h)?;
    let length = target.length();
    let n = ((length / (0.5 * config.h)).ceil() as usize).max(1);
    let ds = length / n as f64;
    let grid: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            (k as f64 / n as f64, (w * ds).sqrt())
        })
        .collect();
    let target_values = grid.iter().map(|&(t, _)| target.at(t)).collect();
    let problem = Problem {
        config,
        reference,
        init: init.clone(),
        r_b,
        grid,
        target: target_values,
    };
    let target_norm = target.l2();
    let scale = target_norm.max(config.datum_scale()? * length.sqrt());

    let mut shape = init.clone();
    let mut r = problem
        .residual(&shape)?
        .ok_or_else(|| Error::Reconstruction("initial shape is not admissible".into()))?;
    let mut history = vec![r.norm()];
    let step = opts.fd_step * init.r0;
    let mut rejected = 0usize;
    let mut status = ReconstructionStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if r.norm() <= opts.tol * scale {
            status = ReconstructionStatus::Converged;
            break;
        }
        iterations += 1;
        let p = shape.params();
        let columns = par::map_range(config.exec, p.len(), |k| {
            let mut q = p.clone();
            q[k] += step;
            problem.residual(&shape.with_params(&q))
        });
        let mut jac = DMatrix::zeros(r.len(), p.len());
        let mut response = 0.0f64;
        for (k, col) in columns.into_iter().enumerate() {
            let col =
                col?.ok_or_else(|| Error::Reconstruction("finite-difference probe left the admissible set".into()))?;
            let d = (col - &r) / step;
            response = response.max(d.norm() * step);
            jac.set_column(k, &d);
        }
        if response <= 1e-9 * scale {
            status = ReconstructionStatus::Stagnated;
            break;
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let delta = -svd
            .solve(&r, cutoff)
            .map_err(|e| Error::Reconstruction(format!("pseudo-inverse failed: {e}")))?;
        if delta.norm() <= 1e-12 * init.r0 {
            status = ReconstructionStatus::Converged;
            break;
        }
        let mut alpha = 1.0;
        let mut consecutive = 0;
        let accepted = loop {
            let q: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + alpha * d).collect();
            let trial = shape.with_params(&q);
            if let Some(rt) = problem.residual(&trial)? {
                if rt.norm() < r.norm() {
                    break Some((trial, rt));
                }
            }
            rejected += 1;
            consecutive += 1;
            if consecutive >= opts.max_rejections {
                break None;
            }
            alpha *= 0.5;
        };
        let Some((trial, rt)) = accepted else {
            status = if r.norm() <= 1e-6 * scale {
                ReconstructionStatus::Converged
            } else {
                ReconstructionStatus::Failed
            };
            break;
        };
        let decrease = r.norm() - rt.norm();
        shape = trial;
        r = rt;
        history.push(r.norm());
        if decrease <= 1e-12 * history[0] {
            status = ReconstructionStatus::Converged;
            break;
        }
    }
    Ok(Reconstruction {
        shape,
        misfit_history: history,
        iterations,
        rejected_steps: rejected,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::{forward_map, Datum};
    use crate::scene::Scene;

    fn config() -> ExperimentConfig {
        let scene = Scene::from_json(
            r#"{"name": "d", "omega": {"circle": {"center": [0, 0], "radius": 1}}, "gamma": [0, 3.14159]}"#,
        )
        .unwrap();
        ExperimentConfig::new(scene, Datum::parse("x").unwrap(), 1.0 / 8.0)
    }

    #[test]
    fn morph_moves_obstacle_nodes_onto_new_circle() {
        let cfg = config();
        let a = StarShape::disk(Point::origin(), 0.3, 0);
        let mesh = experiment_mesh(&cfg.scene, &a.obstacle("a", cfg.h).unwrap(), cfg.h).unwrap();
        let b = a.with_params(&[0.25]);
        let m = morph_mesh(&mesh, &a, &b, 0.9).unwrap();
        for &i in m.obstacle_nodes() {
            assert!((m.nodes()[i].coords.norm() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_target_is_a_fixed_point() {
        let cfg = config();
        let s = StarShape::disk(Point::origin(), 0.3, 0);
        let target = forward_map(&cfg, &s.obstacle("t", cfg.h).unwrap()).unwrap();
        let r = reconstruct(&cfg, &target, &s, &ReconstructionOptions::default()).unwrap();
        assert_eq!(r.misfit_history[0], 0.0);
        assert_eq!(r.status, ReconstructionStatus::Converged);
    }
}
