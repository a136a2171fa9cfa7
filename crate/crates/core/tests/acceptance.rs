//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.
//!
//! `cargo test --release --test acceptance -- 4 7` runs a subset.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signorini_lab::fem::{
    fit_rigid_motion, gauss_green_check_elastic, gauss_green_check_scalar, recover_flux, solve_elastic,
    solve_elastic_with, solve_scalar, solve_scalar_with, ElasticOptions, LameField, Method, RigidMotion, ScalarOptions,
};
use signorini_lab::geometry::{
    check_appendix_lemmas, classify_boundary, compute_g0, compute_v, difference, disk, rectangle, star_polygon,
    BoundarySource, LemmaInstance, Point, PolygonalSet,
};
use signorini_lab::inverse::{
    distinguishability, experiment_mesh, forward_map, reconstruct, upsilon_empty_certificate, upsilon_membership,
    Datum, ExperimentConfig, ReconstructionOptions, StarShape, UpsilonQuery, Verdict, EXACTNESS_FLOOR,
};
use signorini_lab::mesh::{triangulate_with, BoundaryTag, Mesh, MeshOptions};
use signorini_lab::scene::{circle_segments, Scene};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn scene(name: &str) -> Scene {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "scenes",
        &format!("{name}.json"),
    ]
    .iter()
    .collect();
    Scene::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn config(scene: &Scene, datum: &str, h: f64) -> ExperimentConfig {
    ExperimentConfig::new(scene.clone(), Datum::parse(datum).expect("datum"), h)
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn fmt_ratio(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ")
}

/// Edge-midpoint quadrature of `∫(u_h − u)²` and `∫u²`.
fn l2_error(mesh: &Mesh, uh: &[f64], exact: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let (mut err, mut norm) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.triangle_area(t) / 3.0;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let m = nalgebra::center(&mesh.nodes()[a], &mesh.nodes()[b]);
            let e = exact(m.x, m.y);
            err += w * (0.5 * (uh[a] + uh[b]) - e).powi(2);
            norm += w * e * e;
        }
    }
    (err.sqrt(), norm.sqrt())
}

// 1. radial benchmark
fn criterion_1() -> Outcome {
    let s = scene("annulus");
    let inner = s.obstacle("inner")?;
    let rho: f64 = 0.3;
    let exact = move |x: f64, y: f64| -1.0 + x.hypot(y).ln() / rho.ln();
    let flux = -1.0 / (rho * rho.ln());
    let mut mesh = experiment_mesh(&s, &inner, 1.0 / 16.0)?;
    let mut errors = Vec::new();
    let mut flux_dev = 0.0f64;
    for level in 0..3 {
        if level > 0 {
            mesh = mesh.refine()?;
        }
        let sol = solve_scalar(&mesh, &|_, _| -1.0)?;
        let (e, n) = l2_error(&mesh, &sol.u, exact);
        errors.push(e / n);
        if level == 2 {
            let m = recover_flux(&sol, &mesh, BoundaryTag::Obstacle)?;
            flux_dev = m
                .samples
                .iter()
                .map(|p| (p.value[0] - flux).abs() / flux)
                .fold(0.0, f64::max);
        }
    }
    let r = ratios(&errors);
    let pass = errors[2] < 0.02 && r.iter().all(|&q| q >= 1.8) && flux_dev <= 0.02;
    Ok((
        pass,
        format!(
            "rel L2 error {} (h = 1/16, 1/32, 1/64), ratios {}, obstacle flux max deviation {:.2}% from {flux:.4}",
            fmt(&errors),
            fmt_ratio(&r),
            100.0 * flux_dev
        ),
    ))
}

// 2. nonnegative constant datum: u ≡ f and zero flux
fn criterion_2() -> Outcome {
    let pair = scene("pair");
    let obstacles = [
        scene("annulus").obstacle("inner")?,
        scene("crescents").obstacle("left")?,
        scene("ball").obstacle("square")?,
    ];
    let (mut dev, mut flux) = (0.0f64, 0.0f64);
    for o in &obstacles {
        let mesh = experiment_mesh(&pair, o, 1.0 / 32.0)?;
        let sol = solve_scalar(&mesh, &|_, _| 0.5)?;
        dev = dev.max(sol.u.iter().map(|u| (u - 0.5).abs()).fold(0.0, f64::max));
        flux = flux.max(recover_flux(&sol, &mesh, BoundaryTag::Gamma)?.linf());
    }
    Ok((
        dev < 1e-10 && flux < 1e-8,
        format!("max |u - 0.5| = {dev:.2e}, max |flux on Γ| = {flux:.2e} over 3 obstacles"),
    ))
}

// 3. scalar concentric disks
fn criterion_3() -> Outcome {
    let s = scene("pair");
    let cfg = config(&s, "-1", 1.0 / 32.0);
    let r = distinguishability(&cfg, &s.obstacle("small")?, &s.obstacle("large")?)?;
    Ok((
        r.verdict == Verdict::Distinguished,
        format!(
            "{:?}: gap {:.3e}, estimate {:.3e}",
            r.verdict, r.gap_l2, r.error_estimate
        ),
    ))
}

// 4. elastic rigid rotation: zero traction and an obstructed verdict
fn criterion_4() -> Outcome {
    let s = scene("rotation");
    let datum = s.f.clone().expect("rotation datum");
    let cfg = config(&s, &datum, 1.0 / 16.0);
    let scale = cfg.datum_scale()?;
    let floor = EXACTNESS_FLOOR * scale;
    let mut traction = Vec::new();
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    for &h in &hs {
        let c = config(&s, &datum, h);
        let t = ["small", "large"]
            .iter()
            .map(|n| forward_map(&c, &s.obstacle(n).unwrap()).map(|m| m.linf()))
            .collect::<Result<Vec<_>, _>>()?;
        traction.push(t[0].max(t[1]));
    }
    let bounded = traction.iter().zip(&hs).all(|(t, h)| *t <= scale * h);
    let decreasing = traction.windows(2).all(|w| w[1] <= floor || w[0] / w[1] >= 1.8);
    let r = distinguishability(&cfg, &s.obstacle("small")?, &s.obstacle("large")?)?;
    let pass = bounded && decreasing && r.verdict == Verdict::Obstructed && r.gap_within_estimate();
    Ok((
        pass,
        format!(
            "traction L∞ {} (bound C·h with C = {scale:.3}, exactness floor {floor:.1e}); {:?}: gap {:.2e} ≤ 10 × {:.2e} + {:.1e}",
            fmt(&traction),
            r.verdict,
            r.gap_l2,
            r.error_estimate,
            r.floor
        ),
    ))
}

// 5. elastic uniaxial stretch separates the same pair
fn criterion_5() -> Outcome {
    let s = scene("rotation");
    let cfg = config(&s, "0.1*x, 0", 1.0 / 64.0);
    let r = distinguishability(&cfg, &s.obstacle("small")?, &s.obstacle("large")?)?;
    Ok((
        r.verdict == Verdict::Distinguished,
        format!(
            "{:?} at h = 1/64: gap {:.3e}, estimate {:.3e}",
            r.verdict, r.gap_l2, r.error_estimate
        ),
    ))
}

// 6. Υ membership and the empty certificate
fn criterion_6() -> Outcome {
    let s = scene("ball");
    let ball = s.obstacle("ball")?.set()?;
    let (p, radius, omega) = (Point::new(0.3, -0.2), 0.15, 0.1);
    let rigid = RigidMotion::about(p, omega);
    let bound = omega * radius * (PI / 128.0).sin() * (1.0 + 1e-9);
    let member = upsilon_membership(&UpsilonQuery::new(ball, rigid))?;
    let ok_member = member.member && member.residual <= bound;

    let shifted = RigidMotion::new([1.0, 0.0], omega);
    let certificate = upsilon_empty_certificate(&shifted, &s.omega_set(None)?);
    let mut suite = Vec::new();
    for name in ["annulus", "ball", "crescents", "pair", "rotation"] {
        suite.extend(scene(name).obstacles());
    }
    let mut worst_margin = f64::INFINITY;
    let mut none_member = true;
    for o in &suite {
        let set = o.set()?;
        let m = set.vertices().map(|v| omega * v.coords.norm()).fold(0.0, f64::max);
        let res = upsilon_membership(&UpsilonQuery::new(set, shifted))?;
        none_member &= !res.member && res.residual >= 1.0 - m;
        worst_margin = worst_margin.min(res.residual - (1.0 - m));
    }
    Ok((
        ok_member && certificate && none_member,
        format!(
            "ball residual {:.3e} ≤ {bound:.3e}: {}; certificate for c = (1, 0): {certificate}; {} suite obstacles rejected: {none_member} (min residual − (|c| − M) = {worst_margin:.3e})",
            member.residual,
            member.member,
            suite.len()
        ),
    ))
}

// 7. geometry against a raster flood-fill oracle
const GRID: usize = 2048;

struct Star {
    center: [f64; 2],
    radius: f64,
    amp: f64,
    k: f64,
    phase: f64,
}

impl Star {
    fn random(rng: &mut ChaCha8Rng, center: [f64; 2]) -> Self {
        Star {
            center,
            radius: rng.gen_range(0.2..0.35),
            amp: if rng.gen_bool(0.5) {
                0.0
            } else {
                rng.gen_range(0.1..0.4)
            },
            k: rng.gen_range(2..6) as f64,
            phase: rng.gen_range(0.0..TAU),
        }
    }

    fn vertices(&self) -> Vec<[f64; 2]> {
        (0..64)
            .map(|j| {
                let t = TAU * j as f64 / 64.0;
                let r = self.r(t);
                [self.center[0] + r * t.cos(), self.center[1] + r * t.sin()]
            })
            .collect()
    }

    fn r(&self, t: f64) -> f64 {
        self.radius * (1.0 + self.amp * (self.k * t + self.phase).cos())
    }

    fn set(&self, source: BoundarySource) -> PolygonalSet {
        star_polygon(Point::new(self.center[0], self.center[1]), 64, source, |t| self.r(t)).expect("star")
    }
}

fn pixel_center(i: usize) -> f64 {
    -1.0 + (i as f64 + 0.5) * 2.0 / GRID as f64
}

/// Even-odd scanline fill of a closed polygon.
fn raster(poly: &[[f64; 2]]) -> Vec<bool> {
    let mut out = vec![false; GRID * GRID];
    for row in 0..GRID {
        let y = pixel_center(row);
        let mut xs = Vec::new();
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            if (a[1] > y) != (b[1] > y) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks(2) {
            for col in 0..GRID {
                let x = pixel_center(col);
                if x > span[0] && x < span[1] {
                    out[row * GRID + col] = true;
                }
            }
        }
    }
    out
}

fn flood(mask: &[bool], seeds: impl Iterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; mask.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        if mask[s] && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(p) = queue.pop_front() {
        let (r, c) = (p / GRID, p % GRID);
        let mut push = |q: usize| {
            if mask[q] && !seen[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        };
        if r > 0 {
            push(p - GRID);
        }
        if r + 1 < GRID {
            push(p + GRID);
        }
        if c > 0 {
            push(p - 1);
        }
        if c + 1 < GRID {
            push(p + 1);
        }
    }
    seen
}

/// `(G0, V)` by flood fill: `G0` is the free region reachable from the frame,
/// `V` the largest component of the rest outside `O2` adjacent to `G0`.
fn oracle(o1: &[bool], o2: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let free: Vec<bool> = (0..GRID * GRID).map(|p| !o1[p] && !o2[p]).collect();
    let frame = (0..GRID).flat_map(|i| [i, (GRID - 1) * GRID + i, i * GRID, i * GRID + GRID - 1]);
    let g0 = flood(&free, frame);
    let rest: Vec<bool> = (0..GRID * GRID).map(|p| !g0[p] && !o2[p]).collect();
    let mut label = vec![usize::MAX; GRID * GRID];
    let mut best: Option<(usize, usize)> = None;
    for start in 0..GRID * GRID {
        if !rest[start] || label[start] != usize::MAX {
            continue;
        }
        let comp = flood(&rest, std::iter::once(start));
        let mut size = 0;
        let mut touches = false;
        for p in (0..GRID * GRID).filter(|&p| comp[p]) {
            label[p] = start;
            size += 1;
            let (r, c) = (p / GRID, p % GRID);
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                if rr >= 0
                    && cc >= 0
                    && (rr as usize) < GRID
                    && (cc as usize) < GRID
                    && g0[rr as usize * GRID + cc as usize]
                {
                    touches = true;
                }
            }
        }
        if touches && best.map_or(true, |(_, s)| size > s) {
            best = Some((start, size));
        }
    }
    let v = match best {
        Some((id, _)) => label.iter().map(|&l| l == id).collect(),
        None => vec![false; GRID * GRID],
    };
    (g0, v)
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn near(p: [f64; 2], poly: &[[f64; 2]], band: f64) -> bool {
    (0..poly.len()).any(|k| segment_distance(p, poly[k], poly[(k + 1) % poly.len()]) < band)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let omega = rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), BoundarySource::Omega)?;
    let band = 2.0 * 2.0 / GRID as f64;
    let (mut scenes, mut draws, mut probes, mut mismatches) = (0, 0, 0usize, 0usize);
    let (mut tagged, mut lemma_checks) = (0, 0);
    let mut in_v = 0usize;
    let mut failures = Vec::new();
    while scenes < 20 {
        draws += 1;
        if draws > 200 {
            return Ok((false, format!("only {scenes} admissible scenes in {draws} draws")));
        }
        let c1 = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let s1 = Star::random(&mut rng, c1);
        let dir = rng.gen_range(0.0..TAU);
        let dist = rng.gen_range(0.2..0.55);
        let s2 = Star::random(&mut rng, [c1[0] + dist * dir.cos(), c1[1] + dist * dir.sin()]);
        let (p1, p2) = (s1.vertices(), s2.vertices());
        if p1.iter().chain(&p2).any(|v| v[0].abs().max(v[1].abs()) > 0.95) {
            continue;
        }
        let (o1, o2) = (s1.set(BoundarySource::Obstacle1), s2.set(BoundarySource::Obstacle2));
        let Ok(g0) = compute_g0(&omega, &o1, &o2) else { continue };
        let Ok(v) = compute_v(&omega, &g0, &o1, &o2) else {
            continue;
        };
        scenes += 1;

        let (g0_px, v_px) = oracle(&raster(&p1), &raster(&p2));
        let mut bad = 0;
        let mut taken = 0;
        while taken < 10_000 {
            let p: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if p[0].abs().max(p[1].abs()) > 1.0 - band || near(p, &p1, band) || near(p, &p2, band) {
                continue;
            }
            taken += 1;
            let col = (((p[0] + 1.0) / 2.0 * GRID as f64) as usize).min(GRID - 1);
            let row = (((p[1] + 1.0) / 2.0 * GRID as f64) as usize).min(GRID - 1);
            let q = Point::new(p[0], p[1]);
            in_v += usize::from(v_px[row * GRID + col]);
            if g0.contains(&q) != g0_px[row * GRID + col] || v.contains(&q) != v_px[row * GRID + col] {
                bad += 1;
            }
        }
        probes += taken;
        mismatches += bad;

        let classes = classify_boundary(&v, &o1, &o2);
        if matches!(&classes, Ok(c) if c.tagged_fraction() == 1.0 && c.untagged_length == 0.0) {
            tagged += 1;
        } else {
            failures.push(format!("scene {scenes}: untagged ∂V"));
        }

        let unreachable = difference(&difference(&omega, &g0)?, &o2)?;
        let host = unreachable
            .components()
            .into_iter()
            .max_by(|a, b| {
                let ia = signorini_lab::geometry::intersection(a, &v)
                    .map(|s| s.area())
                    .unwrap_or(0.0);
                let ib = signorini_lab::geometry::intersection(b, &v)
                    .map(|s| s.area())
                    .unwrap_or(0.0);
                ia.total_cmp(&ib)
            })
            .expect("V lies in (Ω \\ G0) \\ O2");
        let instances = [
            LemmaInstance::Scene {
                omega: omega.clone(),
                o1: o1.clone(),
                o2: o2.clone(),
            },
            LemmaInstance::BoundaryInclusion { a: v.clone(), b: host },
            LemmaInstance::SharedNormals {
                e: v.clone(),
                f: o1.clone(),
            },
            LemmaInstance::SharedNormals {
                e: v.clone(),
                f: o2.clone(),
            },
        ];
        match check_appendix_lemmas(&instances) {
            Ok(r) => lemma_checks += r.checks.len(),
            Err(e) => failures.push(format!("scene {scenes}: {e}")),
        }
        if bad > 0 {
            failures.push(format!("scene {scenes}: {bad} probe mismatches"));
        }
    }
    Ok((
        mismatches == 0 && failures.is_empty(),
        format!(
            "{scenes} scenes ({draws} draws), {probes} probes ({in_v} in V), {mismatches} mismatches vs {GRID}² flood fill; ∂V fully tagged in {tagged}/20; {lemma_checks} lemma checks hold{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    ))
}

// 8. Gauss–Green identity on V
fn crescent_v(s: &Scene, segments: impl Fn(f64) -> usize) -> Result<PolygonalSet, Box<dyn std::error::Error>> {
    let omega = s.omega_set(None)?;
    let (c1, r1, c2, r2) = (Point::new(-0.15, 0.0), 0.4, Point::new(0.2, 0.05), 0.35);
    let o1 = disk(c1, r1, segments(r1), BoundarySource::Obstacle1)?;
    let o2 = disk(c2, r2, segments(r2), BoundarySource::Obstacle2)?;
    let g0 = compute_g0(&omega, &o1, &o2)?;
    Ok(compute_v(&omega, &g0, &o1, &o2)?)
}

fn criterion_8() -> Outcome {
    let s = scene("crescents");
    let right = s.obstacle("right")?;
    let h0 = 1.0 / 16.0;
    let mut mesh = experiment_mesh(&s, &right, h0)?;
    let (mut scalar, mut elastic) = (Vec::new(), Vec::new());
    let mut exact = 0.0f64;
    for level in 0..5 {
        if level > 0 {
            mesh = mesh.refine()?;
        }
        // ∂O2 modelled by the polygon the mesh wall follows at this level
        let v = crescent_v(&s, |r| circle_segments(r, h0) << level)?;
        let lame = LameField::constant(&mesh, 1.0, 1.0)?;
        if level == 0 {
            let c = solve_scalar(&mesh, &|_, _| 0.5)?;
            exact = exact.max(gauss_green_check_scalar(&c, &v, &mesh)?.residual);
            let rigid = RigidMotion::about(Point::new(0.2, 0.05), 0.1);
            let r = solve_elastic(&mesh, &lame, &|x, y| rigid.eval(x, y))?;
            let rep = gauss_green_check_elastic(&r, &v, &mesh, &lame)?;
            exact = exact.max(rep.residual).max(rep.boundary.abs());
        }
        if level < 2 {
            continue;
        }
        let su = solve_scalar(&mesh, &|x, _| x)?;
        scalar.push(gauss_green_check_scalar(&su, &v, &mesh)?.residual);
        let eu = solve_elastic(&mesh, &lame, &|x, y| [-0.05 * x, -0.05 * y])?;
        elastic.push(gauss_green_check_elastic(&eu, &v, &mesh, &lame)?.residual);
    }
    let v = crescent_v(&s, |_| 128)?;

    // constant stress on Ω without obstacles
    let free = triangulate_with(
        &s.omega_set(Some(1.0 / 16.0))?,
        1.0 / 16.0,
        &MeshOptions {
            arcs: s.omega_arc().into_iter().collect(),
        },
    )?;
    let lame = LameField::constant(&free, 1.0, 2.0)?;
    let b = [[0.1, 0.05], [0.02, -0.03]];
    let u = solve_elastic(&free, &lame, &|x, y| {
        [b[0][0] * x + b[0][1] * y, b[1][0] * x + b[1][1] * y]
    })?;
    let rep = gauss_green_check_elastic(&u, &v, &free, &lame)?;
    let (exx, eyy, exy) = (b[0][0], b[1][1], 0.5 * (b[0][1] + b[1][0]));
    let tr = exx + eyy;
    let density = 2.0 * (exx * exx + eyy * eyy + 2.0 * exy * exy) + 2.0 * tr * tr;
    exact = exact.max(rep.residual).max((rep.boundary - density * v.area()).abs());

    let (rs, re) = (ratios(&scalar), ratios(&elastic));
    let pass = rs.iter().chain(&re).all(|&q| q >= 1.8) && exact <= 1e-12;
    Ok((
        pass,
        format!(
            "h = 1/64, 1/128, 1/256: scalar (f = x) residuals {} (ratios {}), elastic compression {} (ratios {}); rigid / constant cases {exact:.2e}",
            fmt(&scalar),
            fmt_ratio(&rs),
            fmt(&elastic),
            fmt_ratio(&re)
        ),
    ))
}

// 9. complementarity and PDAS vs PGS on the suite problems
fn criterion_9() -> Outcome {
    let h = 1.0 / 16.0;
    let scalar_cases = [
        ("annulus", "inner", "-1"),
        ("crescents", "left", "x"),
        ("crescents", "right", "x*y - 1"),
        ("pair", "small", "x"),
        ("ball", "square", "x - 0.3"),
    ];
    let elastic_cases = [
        ("annulus", "inner", "-0.05*x, -0.05*y"),
        ("rotation", "small", "-0.1*(y - 0.05), 0.1*(x - 0.1)"),
        ("rotation", "large", "0.1*x, 0"),
        ("ball", "ball", "-0.1*(y + 0.2), 0.1*(x - 0.3)"),
        ("ball", "square", "-0.05*x, -0.05*y"),
    ];
    let (mut compl, mut diff, mut iters) = (0.0f64, 0.0f64, 0usize);
    let mut n = 0;
    for (sc, ob, f) in scalar_cases {
        let s = scene(sc);
        let mesh = experiment_mesh(&s, &s.obstacle(ob)?, h)?;
        let Datum::Scalar(e) = Datum::parse(f)? else {
            unreachable!()
        };
        let a = solve_scalar(&mesh, &|x, y| e.eval(x, y))?;
        let b = solve_scalar_with(
            &mesh,
            &|x, y| e.eval(x, y),
            &ScalarOptions {
                method: Some(Method::Pgs),
                ..Default::default()
            },
        )?;
        compl = compl.max(a.residual).max(b.residual);
        iters = iters.max(a.iterations);
        diff = diff.max(a.u.iter().zip(&b.u).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
        n += 1;
    }
    for (sc, ob, f) in elastic_cases {
        let s = scene(sc);
        let mesh = experiment_mesh(&s, &s.obstacle(ob)?, h)?;
        let lame = s.lame.field(&mesh)?;
        let Datum::Elastic(e) = Datum::parse(f)? else {
            unreachable!()
        };
        let a = solve_elastic(&mesh, &lame, &|x, y| e.eval(x, y))?;
        let b = solve_elastic_with(
            &mesh,
            &lame,
            &|x, y| e.eval(x, y),
            &ElasticOptions {
                method: Some(Method::Pgs),
                ..Default::default()
            },
        )?;
        compl = compl.max(a.residual).max(b.residual);
        iters = iters.max(a.iterations);
        diff = diff.max(
            a.u.iter()
                .zip(&b.u)
                .map(|(p, q)| (p[0] - q[0]).abs().max((p[1] - q[1]).abs()))
                .fold(0.0, f64::max),
        );
        n += 1;
    }
    Ok((
        compl < 1e-10 && diff <= 1e-8 && iters <= 30,
        format!("{n} problems: complementarity {compl:.2e}, PDAS vs PGS L∞ {diff:.2e}, max PDAS iterations {iters}"),
    ))
}

// 10. reconstruction of a disk from scalar flux data
fn criterion_10() -> Outcome {
    let s = scene("pair");
    let cfg = config(&s, "x", 1.0 / 32.0);
    let truth = StarShape::disk(Point::origin(), 0.25, 0);
    let target = forward_map(&cfg, &truth.obstacle("target", cfg.h)?)?;
    let init = StarShape::disk(Point::origin(), 0.35, 0);
    let rec = reconstruct(&cfg, &target, &init, &ReconstructionOptions::default())?;
    let err = (rec.shape.r0 - 0.25).abs() / 0.25;
    let monotone = rec.misfit_history.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        err < 0.05 && monotone,
        format!(
            "r = {:.5} (error {:.3}%), {:?} after {} iterations, misfit {:.2e} -> {:.2e}, non-increasing: {monotone}",
            rec.shape.r0,
            100.0 * err,
            rec.status,
            rec.iterations,
            rec.misfit_history[0],
            rec.misfit_history.last().copied().unwrap_or(f64::NAN)
        ),
    ))
}

// 11. rigid-motion fit
fn criterion_11() -> Outcome {
    let s = scene("annulus");
    let mesh = experiment_mesh(&s, &s.obstacle("inner")?, 1.0 / 16.0)?;
    let pts: Vec<Point> = mesh.nodes().to_vec();
    let rigid = RigidMotion::new([0.3, -0.1], 0.25);
    let u: Vec<[f64; 2]> = pts.iter().map(|p| rigid.eval(p.x, p.y)).collect();
    let fit = fit_rigid_motion(&pts, &u)?;
    let err = (fit.motion.c[0] - 0.3)
        .abs()
        .max((fit.motion.c[1] + 0.1).abs())
        .max((fit.motion.omega - 0.25).abs())
        .max(fit.residual);

    let b: [[f64; 2]; 2] = [[0.2, 0.1], [0.1, -0.05]];
    let norm = {
        let (tr, det) = (b[0][0] + b[1][1], b[0][0] * b[1][1] - b[0][1] * b[1][0]);
        let disc = (0.25 * tr * tr - det).sqrt();
        (0.5 * tr).abs() + disc
    };
    let sym: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| [b[0][0] * p.x + b[0][1] * p.y, b[1][0] * p.x + b[1][1] * p.y])
        .collect();
    let sfit = fit_rigid_motion(&pts, &sym)?;
    let bound = 0.9 * norm * sfit.radius;
    Ok((
        err <= 1e-12 && sfit.residual >= bound,
        format!(
            "rigid recovery error {err:.2e}; symmetric B residual {:.4} ≥ 0.9 ‖B‖ radius = {bound:.4}",
            sfit.residual
        ),
    ))
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(usize, &str, Criterion); 11] = [
        (1, "radial benchmark", criterion_1),
        (2, "nonnegative constant datum", criterion_2),
        (3, "scalar concentric disks", criterion_3),
        (4, "elastic rigid rotation", criterion_4),
        (5, "elastic uniaxial stretch", criterion_5),
        (6, "Υ membership", criterion_6),
        (7, "geometry oracle", criterion_7),
        (8, "Gauss–Green on V", criterion_8),
        (9, "complementarity and PGS cross-check", criterion_9),
        (10, "reconstruction", criterion_10),
        (11, "rigid-motion fit", criterion_11),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(run) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} ({name}): {}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
