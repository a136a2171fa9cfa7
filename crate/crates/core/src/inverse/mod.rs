//! Forward maps, distinguishability experiments, the rigid obstruction class
//! `Υ_{A,c}` and shape reconstruction.

mod reconstruct;
mod upsilon;

pub use reconstruct::{
    morph_mesh, reconstruct, Reconstruction, ReconstructionOptions, ReconstructionStatus, StarShape,
};
pub use upsilon::{
    upsilon_default_tolerance, upsilon_empty_certificate, upsilon_membership, UpsilonQuery, UpsilonResult,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, VectorExpr};
use crate::fem::{
    fit_rigid_motion, gap, recover_flux, recover_traction, solve_elastic_with, solve_scalar_with, BoundaryMeasurement,
    ElasticOptions, RigidMotion, ScalarOptions,
};
use crate::geometry::boolean::difference;
use crate::geometry::polygon::{BoundarySource, Point};
use crate::mesh::{triangulate_with, BoundaryTag, Mesh, MeshOptions};
use crate::par::{self, Exec};
use crate::scene::{Obstacle, Scene};

/// Distinguishability threshold: the gap must exceed this many discretisation
/// error estimates.
pub const GAP_FACTOR: f64 = 10.0;

/// Below this multiple of the datum scale a measurement or gap is treated as
/// exactly zero (round-off of the linear solves).
pub const EXACTNESS_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum Datum {
    Scalar(Expr),
    Elastic(VectorExpr),
}

impl Datum {
    /// Scalar for a single expression, elastic for `fx, fy`.
    pub fn parse(src: &str) -> Result<Self> {
        if src.contains(',') {
            Ok(Datum::Elastic(VectorExpr::parse(src)?))
        } else {
            Ok(Datum::Scalar(Expr::parse(src)?))
        }
    }

    pub fn source(&self) -> String {
        match self {
            Datum::Scalar(e) => e.source().to_string(),
            Datum::Elastic(v) => v.source(),
        }
    }

    pub fn is_elastic(&self) -> bool {
        matches!(self, Datum::Elastic(_))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scene: Scene,
    pub datum: Datum,
    pub h: f64,
    pub levels: usize,
    pub seed: u64,
    /// Synthetic targets are generated on meshes of size `h/√2`.
    pub crime_free: bool,
    pub exec: Exec,
}

impl ExperimentConfig {
    pub fn new(scene: Scene, datum: Datum, h: f64) -> Self {
        ExperimentConfig {
            scene,
            datum,
            h,
            levels: 1,
            seed: 0,
            crime_free: false,
            exec: Exec::default(),
        }
    }

    /// The measured boundary: `Γ` when the scene names one, else `∂Ω`.
    pub fn gamma_tag(&self) -> BoundaryTag {
        if self.scene.gamma.is_some() {
            BoundaryTag::Gamma
        } else {
            BoundaryTag::Outer
        }
    }

    /// Largest `|f|` over the vertices of `∂Ω`; the scale for exactness floors.
    pub fn datum_scale(&self) -> Result<f64> {
        let omega = self.scene.omega_set(None)?;
        let mut m = 0.0f64;
        for p in omega.vertices() {
            m = m.max(match &self.datum {
                Datum::Scalar(e) => e.eval(p.x, p.y).abs(),
                Datum::Elastic(v) => {
                    let f = v.eval(p.x, p.y);
                    f[0].hypot(f[1])
                }
            });
        }
        Ok(m.max(f64::MIN_POSITIVE))
    }

    /// `Some(motion)` when the elastic datum is a rigid motion on `∂Ω`.
    pub fn rigid_datum(&self) -> Result<Option<RigidMotion>> {
        let Datum::Elastic(v) = &self.datum else {
            return Ok(None);
        };
        let omega = self.scene.omega_set(None)?;
        let pts: Vec<Point> = omega.vertices().copied().collect();
        let vals: Vec<[f64; 2]> = pts.iter().map(|p| v.eval(p.x, p.y)).collect();
        let fit = fit_rigid_motion(&pts, &vals)?;
        let scale = self.datum_scale()?;
        Ok((fit.residual <= 1e-12 * scale.max(1.0)).then_some(fit.motion))
    }
}

/// Mesh of `Ω \ O` at size `h`, tracking every circular boundary.
pub fn experiment_mesh(scene: &Scene, obstacle: &Obstacle, h: f64) -> Result<Mesh> {
    let omega = scene.omega_set(Some(h))?;
    let hole = obstacle.mesh_set(h)?.with_source(BoundarySource::Obstacle1);
    crate::geometry::sets::check_obstacle(&omega, &hole, &obstacle.name)?;
    let domain = difference(&omega, &hole)?;
    let arcs = scene.omega_arc().into_iter().chain(obstacle.arc()).collect();
    triangulate_with(&domain, h, &MeshOptions { arcs })
}

/// Solve on a given mesh and recover the measurement on the configured arc.
pub fn forward_on_mesh(config: &ExperimentConfig, mesh: &Mesh) -> Result<BoundaryMeasurement> {
    let tag = config.gamma_tag();
    match &config.datum {
        Datum::Scalar(f) => {
            let opts = ScalarOptions {
                exec: config.exec,
                ..Default::default()
            };
            let sol = solve_scalar_with(mesh, &|x, y| f.eval(x, y), &opts)?;
            recover_flux(&sol, mesh, tag)
        }
        Datum::Elastic(f) => {
            let lame = config.scene.lame.field(mesh)?;
            let opts = ElasticOptions {
                exec: config.exec,
                ..Default::default()
            };
            let sol = solve_elastic_with(mesh, &lame, &|x, y| f.eval(x, y), &opts)?;
            recover_traction(&sol, mesh, &lame, tag)
        }
    }
}

/// Flux (scalar) or traction (elastic) on `Γ` for the obstacle `O`, at the
/// configured mesh size.
pub fn forward_map(config: &ExperimentConfig, obstacle: &Obstacle) -> Result<BoundaryMeasurement> {
    let mesh = experiment_mesh(&config.scene, obstacle, config.h)?;
    forward_on_mesh(config, &mesh)
}

/// Synthetic data for `obstacle`: generated at `h`, or at `h/√2` in
/// crime-free mode so that data and inversion use different meshes.
pub fn synthetic_data(config: &ExperimentConfig, obstacle: &Obstacle) -> Result<BoundaryMeasurement> {
    let h = if config.crime_free {
        config.h / std::f64::consts::SQRT_2
    } else {
        config.h
    };
    let mesh = experiment_mesh(&config.scene, obstacle, h)?;
    forward_on_mesh(config, &mesh)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Distinguished,
    Obstructed,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub h: f64,
    pub gap_l2: f64,
    pub gap_linf: f64,
    /// `max_i ‖m_i(h) − m_i(h/2)‖_{L²(Γ)}` over the two obstacles.
    pub error_estimate: f64,
    /// `‖m_i(h)‖_{L²(Γ)}` for each obstacle.
    pub norms: [f64; 2],
    /// `‖m_i(h/2)‖_{L∞(Γ)}` for each obstacle.
    pub refined_linf: [f64; 2],
    /// Absolute level below which values count as zero.
    pub floor: f64,
    /// Why the datum obstructs uniqueness, if it does.
    pub obstruction: Option<String>,
    pub verdict: Verdict,
}

impl GapReport {
    /// `gap ≤ 10 × estimate`, with the exactness floor.
    pub fn gap_within_estimate(&self) -> bool {
        self.gap_l2 <= GAP_FACTOR * self.error_estimate + self.floor
    }
}

struct Trace {
    coarse: BoundaryMeasurement,
    fine: BoundaryMeasurement,
}

fn traces(config: &ExperimentConfig, obstacle: &Obstacle) -> Result<Trace> {
    let mesh = experiment_mesh(&config.scene, obstacle, config.h)?;
    let fine_mesh = mesh.refine()?;
    let (coarse, fine) = par::join(
        config.exec,
        || forward_on_mesh(config, &mesh),
        || forward_on_mesh(config, &fine_mesh),
    );
    Ok(Trace {
        coarse: coarse?,
        fine: fine?,
    })
}

fn obstruction(config: &ExperimentConfig, o1: &Obstacle, o2: &Obstacle) -> Result<Option<String>> {
    match &config.datum {
        Datum::Scalar(f) => Ok(match f.as_constant() {
            Some(c) if c >= 0.0 => Some(format!("f ≡ {c} is a nonnegative constant: u ≡ f for every obstacle")),
            _ => None,
        }),
        Datum::Elastic(_) => {
            let Some(motion) = config.rigid_datum()? else {
                return Ok(None);
            };
            for o in [o1, o2] {
                let q = UpsilonQuery::new(o.set()?, motion);
                if !upsilon_membership(&q)?.member {
                    return Ok(None);
                }
            }
            Ok(Some(format!(
                "f is the rigid motion c = ({:.6}, {:.6}), ω = {:.6} and both obstacles are in Υ",
                motion.c[0], motion.c[1], motion.omega
            )))
        }
    }
}

/// Compares the forward maps of two obstacles at mesh size `h`, with an error
/// estimate from one uniform refinement.
pub fn distinguishability(config: &ExperimentConfig, o1: &Obstacle, o2: &Obstacle) -> Result<GapReport> {
    let (t1, t2) = par::join(config.exec, || traces(config, o1), || traces(config, o2));
    let (t1, t2) = (t1?, t2?);
    let spacing = 0.5 * config.h;
    let (gap_l2, gap_linf) = gap(&t1.coarse, &t2.coarse, spacing)?;
    let e1 = gap(&t1.coarse, &t1.fine, spacing)?.0;
    let e2 = gap(&t2.coarse, &t2.fine, spacing)?.0;
    let scale = config.datum_scale()?;
    let floor = EXACTNESS_FLOOR * scale * t1.coarse.length().sqrt();
    let error_estimate = e1.max(e2);
    let obstruction = obstruction(config, o1, o2)?;
    let verdict = if obstruction.is_some() {
        Verdict::Obstructed
    } else if gap_l2 > GAP_FACTOR * error_estimate + floor {
        Verdict::Distinguished
    } else {
        Verdict::Inconclusive
    };
    Ok(GapReport {
        h: config.h,
        gap_l2,
        gap_linf,
        error_estimate,
        norms: [t1.coarse.l2(), t2.coarse.l2()],
        refined_linf: [t1.fine.linf(), t2.fine.linf()],
        floor,
        obstruction,
        verdict,
    })
}

/// Parses `c` for an `Υ` query: `"-Ap"` (rotation about `p`) or `"cx, cy"`.
pub fn parse_translation(src: &str, omega: f64, p: Point) -> Result<[f64; 2]> {
    let s = src.replace(' ', "");
    if s == "-Ap" {
        return Ok(RigidMotion::about(p, omega).c);
    }
    let v = VectorExpr::parse(src)?;
    match (v.x.as_constant(), v.y.as_constant()) {
        (Some(a), Some(b)) => Ok([a, b]),
        _ => Err(Error::Invalid(format!("translation `{src}` must be constant or `-Ap`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(gamma: bool) -> Scene {
        let g = if gamma { r#""gamma": [0.0, 3.14159],"# } else { "" };
        Scene::from_json(&format!(
            r#"{{"name": "t", "omega": {{"circle": {{"center": [0, 0], "radius": 1}}}}, {g}
               "obstacles": [{{"name": "a", "circle": {{"center": [0, 0], "radius": 0.2}}}},
                             {{"name": "b", "circle": {{"center": [0, 0], "radius": 0.3}}}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn radial_forward_map_matches_closed_form() {
        let s = scene(false);
        let cfg = ExperimentConfig::new(s.clone(), Datum::parse("-1").unwrap(), 1.0 / 16.0);
        let m = forward_map(&cfg, &s.obstacle("b").unwrap()).unwrap();
        let beta = -1.0 / (10.0f64 / 3.0).ln();
        for x in &m.samples {
            assert!((x.value[0] - beta).abs() < 0.03, "{}", x.value[0]);
        }
    }

    #[test]
    fn nonnegative_constant_is_obstructed_and_symmetric() {
        let s = scene(true);
        let cfg = ExperimentConfig::new(s.clone(), Datum::parse("0.5").unwrap(), 1.0 / 8.0);
        let (a, b) = (s.obstacle("a").unwrap(), s.obstacle("b").unwrap());
        let r = distinguishability(&cfg, &a, &b).unwrap();
        assert_eq!(r.verdict, Verdict::Obstructed);
        assert!(r.gap_l2 < 1e-8);
        let r2 = distinguishability(&cfg, &b, &a).unwrap();
        assert_eq!(r.gap_l2, r2.gap_l2);
        assert_eq!(r.error_estimate, r2.error_estimate);
    }

    #[test]
    fn crime_free_data_uses_a_different_mesh() {
        let s = scene(true);
        let mut cfg = ExperimentConfig::new(s.clone(), Datum::parse("x").unwrap(), 1.0 / 8.0);
        let b = s.obstacle("b").unwrap();
        let same = synthetic_data(&cfg, &b).unwrap();
        assert_eq!(same, forward_map(&cfg, &b).unwrap());
        cfg.crime_free = true;
        let other = synthetic_data(&cfg, &b).unwrap();
        assert_ne!(other.samples.len(), same.samples.len());
        let (l2, _) = gap(&same, &other, 1.0 / 32.0).unwrap();
        assert!(l2 < 0.1 * same.l2(), "{l2}");
    }
}
