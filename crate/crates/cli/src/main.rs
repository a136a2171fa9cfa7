//! `signorini`: command-line driver for the Signorini laboratory.
//!
//! Every run writes into `<out>/<command>-<hash>/`, where the hash covers the
//! command, its resolved parameters and the scene contents. The directory
//! holds the outputs plus a `manifest.json`.

mod run;

use std::f64::consts::SQRT_2;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use signorini_lab::expr::{Expr, VectorExpr};
use signorini_lab::fem::{
    gauss_green_check_elastic, gauss_green_check_scalar, recover_flux, solve_elastic_with, solve_scalar_with, stresses,
    BoundaryMeasurement, ElasticOptions, Method, PdasOptions, PgsOptions, RigidMotion, ScalarOptions,
};
use signorini_lab::geometry::{
    check_appendix_lemmas, classify_boundary, compute_g0, compute_v, disk, BoundarySource, LemmaInstance, Point,
    PolygonalSet,
};
use signorini_lab::inverse::{
    distinguishability, experiment_mesh, forward_map, reconstruct, synthetic_data, upsilon_default_tolerance,
    upsilon_empty_certificate, upsilon_membership, Datum, ExperimentConfig, ReconstructionOptions,
    ReconstructionStatus, StarShape, UpsilonQuery, EXACTNESS_FLOOR,
};
use signorini_lab::mesh::cache::MeshCache;
use signorini_lab::mesh::vtk::{self, CellData, PointData};
use signorini_lab::mesh::{BoundaryTag, Mesh};
use signorini_lab::scene::{circle_segments, Obstacle, Scene, Shape};

use run::{Failure, Run};

const DEFAULT_H: f64 = 1.0 / 16.0;

#[derive(Parser)]
#[command(
    name = "signorini",
    version,
    about = "Scalar and elastic Signorini problems, G0/V geometry and inverse-obstacle experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    /// Boundary datum: `expr` (scalar) or `expr, expr` (elastic). Defaults to the scene's `f`.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Target mesh size. Defaults to the scene's `h`, else 1/16.
    #[arg(long)]
    h: Option<f64>,
    /// Number of mesh levels (h, h/2, ...) for refinement studies.
    #[arg(long)]
    levels: Option<usize>,
    /// Parent directory of the per-run output directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Seed for randomized parts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance override (solver, Υ residual or reconstruction misfit).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Pdas,
    Pgs,
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "pdas")]
    method: MethodArg,
    /// Cap on PDAS iterations or PGS sweeps.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar Signorini problem on Ω \ O.
    SolveScalar {
        #[command(flatten)]
        common: Common,
        /// Obstacle name (default: the first obstacle).
        #[arg(long)]
        obstacle: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Frictionless elastic Signorini problem on Ω \ O.
    SolveElastic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        obstacle: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// G0, V, ∂V classification and lemma checks for an obstacle pair.
    Geometry {
        #[command(flatten)]
        common: Common,
        /// Two obstacle names `a,b` (default: the first two).
        #[arg(long)]
        pair: Option<String>,
        /// Random probe points classified by region.
        #[arg(long, default_value_t = 1000)]
        probes: usize,
    },
    /// Forward-map gap between two obstacles with a refinement error estimate.
    Distinguish {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pair: Option<String>,
    },
    /// Rigid-motion datum: traction on Γ under refinement and the obstructed verdict.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pair: Option<String>,
    },
    /// Membership of an obstacle in Υ for the rigid motion c + A x.
    Upsilon {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        obstacle: Option<String>,
        /// Rotation rate ω of A = [[0, −ω], [ω, 0]].
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        /// Translation `cx, cy`, or `-Ap` for a rotation about the obstacle centre p.
        #[arg(long, allow_hyphen_values = true)]
        c: String,
    },
    /// Gauss–Green residual on V under uniform refinement of Ω \ O2.
    GaussGreen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pair: Option<String>,
    },
    /// Star-shaped reconstruction of an obstacle from its synthetic data.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Obstacle that generates the data (default: the first obstacle).
        #[arg(long)]
        target: Option<String>,
        /// Initial radius r₀.
        #[arg(long, default_value_t = 0.35)]
        init: f64,
        /// Fourier modes K of the star-shaped parametrization.
        #[arg(long, default_value_t = 0)]
        modes: usize,
        /// Star centre `x, y` (default: the centre of Ω).
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Generate the data on meshes of size h/√2.
        #[arg(long)]
        crime_free: bool,
    },
    /// Refinement study of one forward problem, with the radial closed form when it applies.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        obstacle: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 64,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(report) => {
            println!("{}", run::to_json(&report));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> Result<Value, Failure> {
    match command {
        Command::SolveScalar {
            common,
            obstacle,
            solver,
        } => solve_scalar(&common, obstacle, solver),
        Command::SolveElastic {
            common,
            obstacle,
            solver,
        } => solve_elastic(&common, obstacle, solver),
        Command::Geometry { common, pair, probes } => geometry(&common, pair, probes),
        Command::Distinguish { common, pair } => distinguish(&common, pair),
        Command::Counterexample { common, pair } => counterexample(&common, pair),
        Command::Upsilon {
            common,
            obstacle,
            omega,
            c,
        } => upsilon(&common, obstacle, omega, &c),
        Command::GaussGreen { common, pair } => gauss_green(&common, pair),
        Command::Reconstruct {
            common,
            target,
            init,
            modes,
            center,
            crime_free,
        } => reconstruction(&common, target, init, modes, center, crime_free),
        Command::Convergence { common, obstacle } => convergence(&common, obstacle),
    }
}

struct Setup {
    scene: Scene,
    h: f64,
}

fn setup(common: &Common) -> Result<Setup, Failure> {
    let scene = Scene::load(&common.scene).map_err(|e| Failure::invalid(format!("{}: {e}", common.scene.display())))?;
    let h = common.h.or(scene.h).unwrap_or(DEFAULT_H);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Failure::invalid(format!("--h must be positive, got {h}")));
    }
    if let Some(t) = common.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::invalid(format!("--tol must be positive, got {t}")));
        }
    }
    Ok(Setup { scene, h })
}

impl Setup {
    fn datum_source(&self, common: &Common) -> Result<String, Failure> {
        common
            .f
            .clone()
            .or_else(|| self.scene.f.clone())
            .ok_or_else(|| Failure::invalid("no boundary datum: pass --f or set `f` in the scene"))
    }

    fn datum(&self, common: &Common) -> Result<Datum, Failure> {
        Ok(Datum::parse(&self.datum_source(common)?)?)
    }

    fn obstacle(&self, name: Option<&str>) -> Result<Obstacle, Failure> {
        match name {
            Some(n) => Ok(self.scene.obstacle(n)?),
            None => self
                .scene
                .obstacles()
                .into_iter()
                .next()
                .ok_or_else(|| Failure::invalid("the scene has no obstacles")),
        }
    }

    fn pair(&self, pair: Option<&str>) -> Result<(Obstacle, Obstacle), Failure> {
        match pair {
            Some(p) => {
                let names: Vec<&str> = p.split(',').map(str::trim).collect();
                let [a, b] = names[..] else {
                    return Err(Failure::invalid(format!("--pair expects `a,b`, got `{p}`")));
                };
                Ok((self.scene.obstacle(a)?, self.scene.obstacle(b)?))
            }
            None => {
                let mut obs = self.scene.obstacles().into_iter();
                match (obs.next(), obs.next()) {
                    (Some(a), Some(b)) => Ok((a, b)),
                    _ => Err(Failure::invalid("the scene needs two obstacles (or pass --pair)")),
                }
            }
        }
    }

    fn config(&self, datum: Datum, h: f64, common: &Common) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.scene.clone(), datum, h);
        c.seed = common.seed;
        c
    }

    fn mesh(&self, cache: &MeshCache, obstacle: &Obstacle, h: f64) -> Result<Mesh, Failure> {
        let key = run::mesh_key(&self.scene, &obstacle.name, h);
        Ok(cache.get_or_build(&key, || experiment_mesh(&self.scene, obstacle, h))?)
    }

    fn run(&self, common: &Common, command: &'static str, params: Value) -> Result<Run, Failure> {
        let scene = serde_json::to_value(&self.scene).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(Run::new(
            &common.out,
            command,
            json!({ "params": params, "scene": scene }),
        )?)
    }
}

fn levels(common: &Common, default: usize) -> Result<usize, Failure> {
    let l = common.levels.unwrap_or(default);
    if l == 0 || l > 8 {
        return Err(Failure::invalid(format!("--levels must be in 1..=8, got {l}")));
    }
    Ok(l)
}

type SolverChoice = (Method, Option<PdasOptions>, Option<PgsOptions>);

fn solver(common: &Common, args: SolverArgs) -> SolverChoice {
    let mut pdas = PdasOptions::default();
    let mut pgs = PgsOptions::default();
    if let Some(n) = args.max_iter {
        pdas.max_iter = n;
        pgs.max_sweeps = n;
    }
    if let Some(tol) = common.tol {
        pgs.tol = tol;
    }
    let method = match args.method {
        MethodArg::Pdas => Method::Pdas,
        MethodArg::Pgs => Method::Pgs,
    };
    (method, Some(pdas), Some(pgs))
}

fn measurement_rows(m: &BoundaryMeasurement) -> Vec<Vec<String>> {
    m.samples
        .iter()
        .map(|s| {
            let mut row = vec![run::num(s.s), run::num(s.x[0]), run::num(s.x[1]), run::num(s.value[0])];
            if m.quantity.components() == 2 {
                row.push(run::num(s.value[1]));
            }
            row
        })
        .collect()
}

fn measurement_summary(m: &BoundaryMeasurement) -> Value {
    json!({ "tag": format!("{:?}", m.tag), "length": m.length(), "l2": m.l2(), "linf": m.linf(), "samples": m.samples.len() })
}

fn mesh_summary(mesh: &Mesh) -> Value {
    json!({ "nodes": mesh.node_count(), "triangles": mesh.triangles().len(), "obstacle_nodes": mesh.obstacle_nodes().len(), "min_angle_deg": mesh.min_angle_deg(), "max_edge": mesh.max_edge() })
}

fn solve_scalar(common: &Common, obstacle: Option<String>, args: SolverArgs) -> Result<Value, Failure> {
    let s = setup(common)?;
    let src = s.datum_source(common)?;
    let f = Expr::parse(&src)?;
    let o = s.obstacle(obstacle.as_deref())?;
    let mut run = s.run(
        common,
        "solve-scalar",
        json!({ "f": src, "h": s.h, "obstacle": o.name, "method": format!("{:?}", args.method), "max_iter": args.max_iter, "tol": common.tol }),
    )?;
    let cache = run.mesh_cache()?;
    let mesh = run.time("mesh", || s.mesh(&cache, &o, s.h))?;
    let (method, pdas, pgs) = solver(common, args);
    let opts = ScalarOptions {
        method: Some(method),
        pdas,
        pgs,
        ..Default::default()
    };
    let sol = run.time("solve", || solve_scalar_with(&mesh, &|x, y| f.eval(x, y), &opts))?;
    let tag = if s.scene.gamma.is_some() {
        BoundaryTag::Gamma
    } else {
        BoundaryTag::Outer
    };
    let flux = recover_flux(&sol, &mesh, tag)?;
    let contact = recover_flux(&sol, &mesh, BoundaryTag::Obstacle)?;
    run.csv("flux.csv", &["s", "x", "y", "flux"], measurement_rows(&flux))?;
    run.csv(
        "obstacle_flux.csv",
        &["s", "x", "y", "flux"],
        measurement_rows(&contact),
    )?;
    let active: Vec<f64> = (0..mesh.node_count())
        .map(|i| f64::from(u8::from(sol.active_set.binary_search(&i).is_ok())))
        .collect();
    run.text(
        "solution.vtk",
        &vtk::to_string(
            &mesh,
            "scalar Signorini solution",
            &[PointData::Scalar("u", &sol.u), PointData::Scalar("active", &active)],
            &[],
        ),
    )?;
    let mut report = json!({
        "scene": s.scene.name, "obstacle": o.name, "f": src, "h": s.h,
        "mesh": mesh_summary(&mesh),
        "method": sol.method, "iterations": sol.iterations,
        "complementarity": sol.residual, "stationarity": sol.stationarity, "energy": sol.energy,
        "active_nodes": sol.active_set.len(),
        "flux": measurement_summary(&flux),
        "obstacle_flux": measurement_summary(&contact),
    });
    if let Some(c) = f.as_constant() {
        let dev = sol.u.iter().map(|u| (u - c).abs()).fold(0.0, f64::max);
        report["constant_datum"] = json!({ "value": c, "max_abs_u_minus_f": dev });
    }
    run.finish(report)
}

fn solve_elastic(common: &Common, obstacle: Option<String>, args: SolverArgs) -> Result<Value, Failure> {
    let s = setup(common)?;
    let src = s.datum_source(common)?;
    let f = VectorExpr::parse(&src)?;
    let o = s.obstacle(obstacle.as_deref())?;
    let mut run = s.run(
        common,
        "solve-elastic",
        json!({ "f": src, "h": s.h, "obstacle": o.name, "method": format!("{:?}", args.method), "max_iter": args.max_iter, "tol": common.tol }),
    )?;
    let cache = run.mesh_cache()?;
    let mesh = run.time("mesh", || s.mesh(&cache, &o, s.h))?;
    let lame = s.scene.lame.field(&mesh)?;
    let (method, pdas, pgs) = solver(common, args);
    let opts = ElasticOptions {
        method: Some(method),
        pdas,
        pgs,
        ..Default::default()
    };
    let sol = run.time("solve", || {
        solve_elastic_with(&mesh, &lame, &|x, y| f.eval(x, y), &opts)
    })?;
    let tag = if s.scene.gamma.is_some() {
        BoundaryTag::Gamma
    } else {
        BoundaryTag::Outer
    };
    let traction = signorini_lab::fem::recover_traction(&sol, &mesh, &lame, tag)?;
    run.csv(
        "traction.csv",
        &["s", "x", "y", "tx", "ty"],
        measurement_rows(&traction),
    )?;
    let obstacle_nodes = mesh.obstacle_nodes();
    run.csv(
        "contact.csv",
        &["node", "x", "y", "active", "pressure", "rx", "ry"],
        obstacle_nodes.iter().enumerate().map(|(k, &i)| {
            let p = mesh.nodes()[i];
            vec![
                i.to_string(),
                run::num(p.x),
                run::num(p.y),
                sol.active_set.binary_search(&i).is_ok().to_string(),
                run::num(sol.pressure[k]),
                run::num(sol.reactions[k][0]),
                run::num(sol.reactions[k][1]),
            ]
        }),
    )?;
    let sigma = stresses(&mesh, &lame, &sol.u);
    run.text(
        "solution.vtk",
        &vtk::to_string(
            &mesh,
            "elastic Signorini solution",
            &[PointData::Vector("displacement", &sol.u)],
            &[CellData::Tensor("stress", &sigma)],
        ),
    )?;
    let report = json!({
        "scene": s.scene.name, "obstacle": o.name, "f": src, "h": s.h,
        "mesh": mesh_summary(&mesh),
        "method": sol.method, "iterations": sol.iterations,
        "complementarity": sol.residual, "stationarity": sol.stationarity, "energy": sol.energy,
        "active_nodes": sol.active_set.len(),
        "min_pressure": sol.pressure.iter().copied().fold(f64::INFINITY, f64::min),
        "traction": measurement_summary(&traction),
    });
    run.finish(report)
}

/// Polygonal model of `o` with `segments(r)` vertices for disks, tagged `source`.
fn obstacle_polygon(
    o: &Obstacle,
    source: BoundarySource,
    segments: impl Fn(f64) -> usize,
) -> Result<PolygonalSet, Failure> {
    Ok(match &o.shape {
        Shape::Disk { center, radius, .. } => disk(*center, *radius, segments(*radius), source)?,
        Shape::Polygon(p) => p.with_source(source),
    })
}

fn geometry(common: &Common, pair: Option<String>, probes: usize) -> Result<Value, Failure> {
    let s = setup(common)?;
    let (a, b) = s.pair(pair.as_deref())?;
    let mut run = s.run(
        common,
        "geometry",
        json!({ "pair": [a.name, b.name], "probes": probes, "seed": common.seed }),
    )?;
    let omega = s.scene.omega_set(None)?;
    let o1 = a.set()?.with_source(BoundarySource::Obstacle1);
    let o2 = b.set()?.with_source(BoundarySource::Obstacle2);
    let g0 = run.time("g0", || compute_g0(&omega, &o1, &o2))?;
    let v = run.time("v", || compute_v(&omega, &g0, &o1, &o2))?;
    let c = classify_boundary(&v, &o1, &o2)?;
    let lemmas = run.time("lemmas", || {
        check_appendix_lemmas(&[LemmaInstance::Scene {
            omega: omega.clone(),
            o1: o1.clone(),
            o2: o2.clone(),
        }])
    })?;
    run.csv(
        "edges.csv",
        &["ax", "ay", "bx", "by", "tag", "length", "nx", "ny", "normal_dot"],
        c.edges.iter().map(|e| {
            vec![
                run::num(e.a[0]),
                run::num(e.a[1]),
                run::num(e.b[0]),
                run::num(e.b[1]),
                run::tag(&e.tag),
                run::num(e.length()),
                run::num(e.normal[0]),
                run::num(e.normal[1]),
                run::num(e.normal_dot),
            ]
        }),
    )?;
    let outline = |set: &PolygonalSet| -> Vec<Vec<String>> {
        set.rings()
            .iter()
            .enumerate()
            .flat_map(|(k, r)| {
                r.vertices()
                    .iter()
                    .chain(r.vertices().first())
                    .map(move |p| vec![k.to_string(), run::num(p.x), run::num(p.y)])
            })
            .collect()
    };
    run.csv("g0.csv", &["ring", "x", "y"], outline(&g0))?;
    run.csv("v.csv", &["ring", "x", "y"], outline(&v))?;

    let bb = omega.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let (mut in_g0, mut in_v, mut in_obstacles) = (0usize, 0usize, 0usize);
    let mut rows = Vec::with_capacity(probes);
    let mut inside = 0usize;
    while inside < probes {
        let p = Point::new(rng.gen_range(bb.min.x..bb.max.x), rng.gen_range(bb.min.y..bb.max.y));
        if !omega.contains(&p) {
            continue;
        }
        inside += 1;
        let region = if g0.contains(&p) {
            in_g0 += 1;
            "g0"
        } else if v.contains(&p) {
            in_v += 1;
            "v"
        } else if o1.contains(&p) || o2.contains(&p) {
            in_obstacles += 1;
            "obstacle"
        } else {
            "other"
        };
        rows.push(vec![run::num(p.x), run::num(p.y), region.to_string()]);
    }
    run.csv("probes.csv", &["x", "y", "region"], rows)?;
    let report = json!({
        "scene": s.scene.name, "pair": [a.name, b.name],
        "area": { "omega": omega.area(), "o1": o1.area(), "o2": o2.area(), "g0": g0.area(), "v": v.area() },
        "v_components": v.components().len(),
        "classification": {
            "edges": c.edges.len(),
            "same_as_o1_length": c.same_as_o1_length,
            "opposite_of_o2_length": c.opposite_of_o2_length,
            "untagged_length": c.untagged_length,
            "tagged_fraction": c.tagged_fraction(),
        },
        "lemmas": { "all_hold": lemmas.all_hold(), "checks": lemmas.checks },
        "probes": { "total": probes, "g0": in_g0, "v": in_v, "obstacles": in_obstacles, "other": probes - in_g0 - in_v - in_obstacles },
    });
    run.finish(report)
}

fn gap_row(h: f64, r: &signorini_lab::inverse::GapReport) -> Vec<String> {
    vec![
        run::num(h),
        run::num(r.gap_l2),
        run::num(r.gap_linf),
        run::num(r.error_estimate),
        run::tag(&r.verdict),
    ]
}

fn distinguish(common: &Common, pair: Option<String>) -> Result<Value, Failure> {
    let s = setup(common)?;
    let datum = s.datum(common)?;
    let (a, b) = s.pair(pair.as_deref())?;
    let n = levels(common, 1)?;
    let mut run = s.run(
        common,
        "distinguish",
        json!({ "f": datum.source(), "h": s.h, "levels": n, "pair": [a.name, b.name] }),
    )?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for k in 0..n {
        let h = s.h / f64::from(1u32 << k);
        let cfg = s.config(datum.clone(), h, common);
        let r = run.time(&format!("level{k}"), || distinguishability(&cfg, &a, &b))?;
        rows.push(gap_row(h, &r));
        if k == 0 {
            let (ma, mb) = (forward_map(&cfg, &a)?, forward_map(&cfg, &b)?);
            let header: &[&str] = if datum.is_elastic() {
                &["s", "x", "y", "tx", "ty"]
            } else {
                &["s", "x", "y", "flux"]
            };
            run.csv(&format!("trace_{}.csv", a.name), header, measurement_rows(&ma))?;
            run.csv(&format!("trace_{}.csv", b.name), header, measurement_rows(&mb))?;
        }
        reports.push(r);
    }
    run.csv(
        "gap_vs_h.csv",
        &["h", "gap_l2", "gap_linf", "error_estimate", "verdict"],
        rows,
    )?;
    run.text(
        "gap_vs_h.gp",
        &run::gnuplot_loglog("gap_vs_h", "h", "L2 gap on Γ", &[(2, "gap"), (4, "error estimate")]),
    )?;
    let first = &reports[0];
    let report = json!({
        "scene": s.scene.name, "f": datum.source(), "pair": [a.name, b.name],
        "verdict": first.verdict, "gap_within_estimate": first.gap_within_estimate(),
        "levels": reports,
    });
    run.finish(report)
}

fn counterexample(common: &Common, pair: Option<String>) -> Result<Value, Failure> {
    let s = setup(common)?;
    let datum = s.datum(common)?;
    if !datum.is_elastic() {
        return Err(Failure::invalid("counterexample needs an elastic datum `fx, fy`"));
    }
    let (a, b) = s.pair(pair.as_deref())?;
    let n = levels(common, 3)?;
    let mut run = s.run(
        common,
        "counterexample",
        json!({ "f": datum.source(), "h": s.h, "levels": n, "pair": [a.name, b.name] }),
    )?;
    let cfg = s.config(datum.clone(), s.h, common);
    let rigid = cfg.rigid_datum()?;
    let scale = cfg.datum_scale()?;
    let mut rows = Vec::new();
    let mut levels_out = Vec::new();
    for k in 0..n {
        let h = s.h / f64::from(1u32 << k);
        let c = s.config(datum.clone(), h, common);
        let (ta, tb) = run.time(&format!("level{k}"), || -> Result<(f64, f64), Failure> {
            Ok((forward_map(&c, &a)?.linf(), forward_map(&c, &b)?.linf()))
        })?;
        rows.push(vec![run::num(h), run::num(ta), run::num(tb)]);
        levels_out.push(json!({ "h": h, "traction_linf": [ta, tb] }));
    }
    run.csv(
        "traction_vs_h.csv",
        &["h", "traction_linf_o1", "traction_linf_o2"],
        rows,
    )?;
    run.text(
        "traction_vs_h.gp",
        &run::gnuplot_loglog(
            "traction_vs_h",
            "h",
            "sup |σ(u)ν| on Γ",
            &[(2, a.name.as_str()), (3, b.name.as_str())],
        ),
    )?;
    let r = run.time("distinguish", || distinguishability(&cfg, &a, &b))?;
    let report = json!({
        "scene": s.scene.name, "f": datum.source(), "pair": [a.name, b.name],
        "rigid_motion": rigid.map(|m| json!({ "c": m.c, "omega": m.omega })),
        "datum_scale": scale, "exactness_floor": EXACTNESS_FLOOR * scale,
        "levels": levels_out,
        "distinguishability": r, "verdict": r.verdict, "gap_within_estimate": r.gap_within_estimate(),
    });
    run.finish(report)
}

fn obstacle_center(o: &Obstacle) -> Result<Point, Failure> {
    Ok(match &o.shape {
        Shape::Disk { center, .. } => *center,
        Shape::Polygon(p) => {
            let a = p.area();
            let mut c = Point::origin();
            for r in p.rings() {
                let w = r.signed_area() / a;
                c += r.centroid().coords * w;
            }
            c
        }
    })
}

fn upsilon(common: &Common, obstacle: Option<String>, omega: f64, c: &str) -> Result<Value, Failure> {
    let s = setup(common)?;
    let o = s.obstacle(obstacle.as_deref())?;
    if !omega.is_finite() {
        return Err(Failure::invalid("--omega must be finite"));
    }
    let p = obstacle_center(&o)?;
    let t = signorini_lab::inverse::parse_translation(c, omega, p)?;
    let run = s.run(
        common,
        "upsilon",
        json!({ "obstacle": o.name, "omega": omega, "c": c, "tol": common.tol }),
    )?;
    let rigid = RigidMotion::new(t, omega);
    let set = o.set()?;
    let mut q = UpsilonQuery::new(set.clone(), rigid);
    if let Some(tol) = common.tol {
        q.tolerance = tol;
    }
    let r = upsilon_membership(&q)?;
    let omega_set = s.scene.omega_set(None)?;
    let report = json!({
        "scene": s.scene.name, "obstacle": o.name, "center": [p.x, p.y],
        "rigid_motion": { "c": t, "omega": omega },
        "member": r.member, "residual": r.residual, "tolerance": r.tolerance,
        "default_tolerance": upsilon_default_tolerance(&set, &rigid),
        "empty_certificate": upsilon_empty_certificate(&rigid, &omega_set),
    });
    run.finish(report)
}

fn gauss_green(common: &Common, pair: Option<String>) -> Result<Value, Failure> {
    let s = setup(common)?;
    let datum = s.datum(common)?;
    let (a, b) = s.pair(pair.as_deref())?;
    let n = levels(common, 3)?;
    let mut run = s.run(
        common,
        "gauss-green",
        json!({ "f": datum.source(), "h": s.h, "levels": n, "pair": [a.name, b.name] }),
    )?;
    let cache = run.mesh_cache()?;
    let mut mesh = s.mesh(&cache, &b, s.h)?;
    let omega = s.scene.omega_set(None)?;
    let lame_spec = &s.scene.lame;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for k in 0..n {
        if k > 0 {
            mesh = mesh.refine()?;
        }
        let h = s.h / f64::from(1u32 << k);
        // ∂O2 follows the wall polygon of this mesh level
        let seg = |r: f64| circle_segments(r, s.h) << k;
        let o1 = obstacle_polygon(&a, BoundarySource::Obstacle1, seg)?;
        let o2 = obstacle_polygon(&b, BoundarySource::Obstacle2, seg)?;
        let g0 = compute_g0(&omega, &o1, &o2)?;
        let v = compute_v(&omega, &g0, &o1, &o2)?;
        let rep = run.time(&format!("level{k}"), || -> Result<_, Failure> {
            Ok(match &datum {
                Datum::Scalar(f) => {
                    let sol = solve_scalar_with(&mesh, &|x, y| f.eval(x, y), &ScalarOptions::default())?;
                    gauss_green_check_scalar(&sol, &v, &mesh)?
                }
                Datum::Elastic(f) => {
                    let lame = lame_spec.field(&mesh)?;
                    let sol = solve_elastic_with(&mesh, &lame, &|x, y| f.eval(x, y), &ElasticOptions::default())?;
                    gauss_green_check_elastic(&sol, &v, &mesh, &lame)?
                }
            })
        })?;
        rows.push(vec![
            run::num(h),
            run::num(rep.residual),
            run::num(rep.boundary),
            run::num(rep.volume),
            run::num(rep.closure),
        ]);
        out.push(json!({ "h": h, "report": rep }));
    }
    run.csv(
        "gauss_green.csv",
        &["h", "residual", "boundary", "volume", "closure"],
        rows,
    )?;
    run.text(
        "gauss_green.gp",
        &run::gnuplot_loglog("gauss_green", "h", "Gauss-Green residual", &[(2, "residual")]),
    )?;
    let residuals: Vec<f64> = out
        .iter()
        .map(|l| l["report"]["residual"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let report = json!({
        "scene": s.scene.name, "f": datum.source(), "pair": [a.name, b.name],
        "levels": out, "ratios": residuals.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>(),
    });
    run.finish(report)
}

fn parse_point(src: &str) -> Result<Point, Failure> {
    let v = VectorExpr::parse(src)?;
    match (v.x.as_constant(), v.y.as_constant()) {
        (Some(x), Some(y)) => Ok(Point::new(x, y)),
        _ => Err(Failure::invalid(format!("`{src}` is not a constant point `x, y`"))),
    }
}

fn reconstruction(
    common: &Common,
    target: Option<String>,
    init: f64,
    modes: usize,
    center: Option<String>,
    crime_free: bool,
) -> Result<Value, Failure> {
    let s = setup(common)?;
    let datum = s.datum(common)?;
    let o = s.obstacle(target.as_deref())?;
    let center = match &center {
        Some(c) => parse_point(c)?,
        None => s.scene.omega_center(),
    };
    if !(init > 0.0) {
        return Err(Failure::invalid(format!("--init must be positive, got {init}")));
    }
    let mut run = s.run(
        common,
        "reconstruct",
        json!({
            "f": datum.source(), "h": s.h, "target": o.name, "init": init, "modes": modes,
            "center": [center.x, center.y], "crime_free": crime_free, "tol": common.tol,
        }),
    )?;
    let mut cfg = s.config(datum.clone(), s.h, common);
    cfg.crime_free = crime_free;
    let data = run.time("data", || synthetic_data(&cfg, &o))?;
    let mut opts = ReconstructionOptions::default();
    if let Some(t) = common.tol {
        opts.tol = t;
    }
    let start = StarShape::disk(center, init, modes);
    let rec = run.time("reconstruct", || reconstruct(&cfg, &data, &start, &opts))?;
    run.csv(
        "misfit.csv",
        &["iteration", "misfit"],
        rec.misfit_history
            .iter()
            .enumerate()
            .map(|(k, m)| vec![k.to_string(), run::num(*m)]),
    )?;
    run.text(
        "misfit.gp",
        &run::gnuplot_semilogy("misfit", "iteration", "misfit on Γ", 2),
    )?;
    let n = 256;
    run.csv(
        "shape.csv",
        &["theta", "x", "y", "r"],
        (0..=n).map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let r = rec.shape.radius(t);
            vec![
                run::num(t),
                run::num(center.x + r * t.cos()),
                run::num(center.y + r * t.sin()),
                run::num(r),
            ]
        }),
    )?;
    let truth = match &o.shape {
        Shape::Disk { center: c, radius, .. } => Some(json!({ "center": [c.x, c.y], "radius": radius })),
        Shape::Polygon(_) => None,
    };
    let converged = rec.status == ReconstructionStatus::Converged;
    let report = json!({
        "scene": s.scene.name, "f": datum.source(), "target": o.name, "truth": truth,
        "crime": if crime_free { "crime-free (data at h/√2)" } else { "inverse crime (same mesh family)" },
        "data_h": if crime_free { s.h / SQRT_2 } else { s.h },
        "reconstruction": rec,
    });
    if !converged {
        return Err(Failure::not_converged(format!(
            "reconstruction ended with status {:?} (report in {})",
            rec.status,
            run.finish(report)?["run_dir"]
        )));
    }
    run.finish(report)
}

/// `u = c ln(r/a) / ln(R/a)` when Ω and O are concentric disks and f ≡ c.
fn radial_solution(scene: &Scene, o: &Obstacle, f: &Datum) -> Option<impl Fn(f64, f64) -> f64> {
    let Datum::Scalar(e) = f else { return None };
    let c = e.as_constant()?;
    let arc = scene.omega_arc()?;
    let Shape::Disk { center, radius, .. } = &o.shape else {
        return None;
    };
    let (p, big, a) = (Point::new(arc.center[0], arc.center[1]), arc.radius, *radius);
    if (p - center).norm() > 1e-12 || c > 0.0 {
        return None;
    }
    Some(move |x: f64, y: f64| c * ((x - p.x).hypot(y - p.y) / a).ln() / (big / a).ln())
}

fn l2_error(mesh: &Mesh, uh: &[f64], exact: &dyn Fn(f64, f64) -> f64) -> f64 {
    let mut e = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let m = mesh.nodes()[i] + (mesh.nodes()[j] - mesh.nodes()[i]) * 0.5;
            let d = 0.5 * (uh[i] + uh[j]) - exact(m.x, m.y);
            e += area / 3.0 * d * d;
        }
    }
    e.sqrt()
}

fn convergence(common: &Common, obstacle: Option<String>) -> Result<Value, Failure> {
    let s = setup(common)?;
    let datum = s.datum(common)?;
    let o = s.obstacle(obstacle.as_deref())?;
    let n = levels(common, 3)?;
    let mut run = s.run(
        common,
        "convergence",
        json!({ "f": datum.source(), "h": s.h, "levels": n, "obstacle": o.name }),
    )?;
    let cache = run.mesh_cache()?;
    let mut mesh = s.mesh(&cache, &o, s.h)?;
    let cfg = s.config(datum.clone(), s.h, common);
    let oracle = radial_solution(&s.scene, &o, &datum);
    let mut traces = Vec::new();
    let mut out = Vec::new();
    for k in 0..n {
        if k > 0 {
            mesh = mesh.refine()?;
        }
        let h = s.h / f64::from(1u32 << k);
        let (m, err) = run.time(&format!("level{k}"), || -> Result<_, Failure> {
            let m = signorini_lab::inverse::forward_on_mesh(&cfg, &mesh)?;
            let err = match (&oracle, &datum) {
                (Some(exact), Datum::Scalar(f)) => {
                    let sol = solve_scalar_with(&mesh, &|x, y| f.eval(x, y), &ScalarOptions::default())?;
                    Some(l2_error(&mesh, &sol.u, exact))
                }
                _ => None,
            };
            Ok((m, err))
        })?;
        out.push(
            json!({ "h": h, "nodes": mesh.node_count(), "measurement": measurement_summary(&m), "l2_error": err }),
        );
        traces.push((h, m, err));
    }
    let mut rows = Vec::new();
    for (k, (h, m, err)) in traces.iter().enumerate() {
        let diff = match traces.get(k + 1) {
            Some((_, next, _)) => signorini_lab::fem::gap(m, next, 0.25 * h)?.0,
            None => f64::NAN,
        };
        out[k]["difference_to_next"] = if diff.is_nan() { Value::Null } else { json!(diff) };
        rows.push(vec![
            run::num(*h),
            run::num(m.l2()),
            run::num(diff),
            err.map(run::num).unwrap_or_default(),
        ]);
    }
    run.csv(
        "convergence.csv",
        &["h", "measurement_l2", "difference_to_next", "l2_error"],
        rows,
    )?;
    let mut series = vec![(3, "successive difference")];
    if oracle.is_some() {
        series.push((4, "L2 error vs closed form"));
    }
    run.text(
        "convergence.gp",
        &run::gnuplot_loglog("convergence", "h", "error", &series),
    )?;
    let errors: Vec<f64> = traces.iter().filter_map(|t| t.2).collect();
    let report = json!({
        "scene": s.scene.name, "f": datum.source(), "obstacle": o.name,
        "radial_oracle": oracle.is_some(),
        "levels": out,
        "l2_rates": errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect::<Vec<_>>(),
    });
    run.finish(report)
}
