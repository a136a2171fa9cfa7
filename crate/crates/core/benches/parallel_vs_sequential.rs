//! Sequential against rayon execution for stiffness assembly, a full scalar
//! solve and a distinguishability run. Without the `parallel` feature both
//! variants take the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use signorini_lab::fem::elastic::assemble_elasticity;
use signorini_lab::fem::scalar::assemble_laplace;
use signorini_lab::fem::{solve_scalar_with, LameField, ScalarOptions};
use signorini_lab::inverse::{distinguishability, experiment_mesh, Datum, ExperimentConfig};
use signorini_lab::par::Exec;
use signorini_lab::scene::Scene;

const SCENE: &str = r#"{
  "name": "bench",
  "omega": { "circle": { "center": [0, 0], "radius": 1 } },
  "gamma": [0.0, 3.141592653589793],
  "obstacles": [
    { "name": "small", "circle": { "center": [0, 0], "radius": 0.2 } },
    { "name": "large", "circle": { "center": [0.05, 0], "radius": 0.3 } }
  ]
}"#;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn assembly(c: &mut Criterion) {
    let scene = Scene::from_json(SCENE).unwrap();
    let mesh = experiment_mesh(&scene, &scene.obstacle("large").unwrap(), 1.0 / 64.0).unwrap();
    let lame = LameField::constant(&mesh, 1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("assembly");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("laplace", name), &exec, |b, &e| {
            b.iter(|| assemble_laplace(&mesh, e))
        });
        g.bench_with_input(BenchmarkId::new("elasticity", name), &exec, |b, &e| {
            b.iter(|| assemble_elasticity(&mesh, &lame, e))
        });
    }
    g.finish();
}

fn scalar_solve(c: &mut Criterion) {
    let scene = Scene::from_json(SCENE).unwrap();
    let mesh = experiment_mesh(&scene, &scene.obstacle("large").unwrap(), 1.0 / 32.0).unwrap();
    let mut g = c.benchmark_group("scalar_solve");
    g.sample_size(20);
    for (name, exec) in MODES {
        let opts = ScalarOptions {
            exec,
            ..Default::default()
        };
        g.bench_function(name, |b| b.iter(|| solve_scalar_with(&mesh, &|x, _| x, &opts).unwrap()));
    }
    g.finish();
}

fn distinguish(c: &mut Criterion) {
    let scene = Scene::from_json(SCENE).unwrap();
    let (a, b) = (scene.obstacle("small").unwrap(), scene.obstacle("large").unwrap());
    let mut g = c.benchmark_group("distinguishability");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = ExperimentConfig::new(scene.clone(), Datum::parse("x").unwrap(), 1.0 / 16.0);
        cfg.exec = exec;
        g.bench_function(name, |bench| bench.iter(|| distinguishability(&cfg, &a, &b).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, assembly, scalar_solve, distinguish);
criterion_main!(benches);
