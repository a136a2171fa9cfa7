//! Per-run output directories, manifests and file writers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use signorini_lab::mesh::cache::MeshCache;
use signorini_lab::scene::Scene;

/// A failed command: exit code 1 for invalid input, 2 for non-convergence.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn invalid(message: impl fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    pub fn not_converged(message: impl fmt::Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<signorini_lab::Error> for Failure {
    fn from(e: signorini_lab::Error) -> Self {
        if e.is_convergence_failure() {
            Failure::not_converged(e)
        } else {
            Failure::invalid(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::invalid(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::invalid(e)
    }
}

/// Pretty JSON; object keys come out sorted because `serde_json::Map` is a
/// `BTreeMap`.
pub fn to_json(v: &impl Serialize) -> String {
    let v = serde_json::to_value(v).expect("serializable");
    serde_json::to_string_pretty(&v).expect("serializable")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Mesh-cache key: scene contents, obstacle name and the bits of `h`.
pub fn mesh_key(scene: &Scene, obstacle: &str, h: f64) -> String {
    let text = serde_json::to_string(&json!({ "scene": scene, "obstacle": obstacle, "h": h.to_bits() }))
        .expect("serializable");
    format!("{obstacle}-{}", &sha256_hex(text.as_bytes())[..24])
}

/// Shortest round-trip formatting; scientific notation outside `[1e-4, 1e6)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// The serialized name of a unit enum variant.
pub fn tag(v: &impl Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn gnuplot_header(stem: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "# run `gnuplot {stem}.gp` inside the run directory\n\
         set terminal pngcairo size 900,600\n\
         set output {}\n\
         set datafile separator ','\n\
         set xlabel {}\n\
         set ylabel {}\n\
         set grid\n",
        quote(&format!("{stem}.png")),
        quote(xlabel),
        quote(ylabel)
    )
}

/// Log–log plot of the given `(column, title)` series of `<stem>.csv` against
/// its first column.
pub fn gnuplot_loglog(stem: &str, xlabel: &str, ylabel: &str, series: &[(usize, &str)]) -> String {
    let mut s = gnuplot_header(stem, xlabel, ylabel);
    s.push_str("set logscale xy\nset key left top\n");
    let plots: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(k, (col, title))| {
            let file = if k == 0 {
                quote(&format!("{stem}.csv"))
            } else {
                "''".into()
            };
            format!("{file} every ::1 using 1:{col} with linespoints title {}", quote(title))
        })
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Semi-log plot of column `col` of `<stem>.csv` against its first column.
pub fn gnuplot_semilogy(stem: &str, xlabel: &str, ylabel: &str, col: usize) -> String {
    let mut s = gnuplot_header(stem, xlabel, ylabel);
    s.push_str(&format!(
        "set logscale y\nplot {} every ::1 using 1:{col} with linespoints notitle\n",
        quote(&format!("{stem}.csv"))
    ));
    s
}

pub struct Run {
    dir: PathBuf,
    root: PathBuf,
    command: &'static str,
    hash: String,
    config: Value,
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
    start: Instant,
}

impl Run {
    /// Creates `<out>/<command>-<hash16>`, hashing the command, `config` and
    /// the crate version.
    pub fn new(out: &Path, command: &'static str, config: Value) -> std::io::Result<Run> {
        let canonical = serde_json::to_string(&json!({
            "command": command,
            "config": config,
            "version": signorini_lab::VERSION,
        }))
        .expect("serializable");
        let hash = sha256_hex(canonical.as_bytes());
        let dir = out.join(format!("{command}-{}", &hash[..16]));
        std::fs::create_dir_all(&dir)?;
        Ok(Run {
            dir,
            root: out.to_path_buf(),
            command,
            hash,
            config,
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            start: Instant::now(),
        })
    }

    /// The mesh cache shared by all runs under the same `--out`.
    pub fn mesh_cache(&self) -> Result<MeshCache, Failure> {
        Ok(MeshCache::new(self.root.join(".mesh-cache"))?)
    }

    pub fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.timings.insert(label.to_string(), t.elapsed().as_secs_f64());
        v
    }

    fn record(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), Failure> {
        let path = self.record(name);
        std::fs::write(path, content)?;
        Ok(())
    }

    /// RFC-4180 CSV: header row, CRLF line endings, quoting as needed.
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), Failure> {
        let path = self.record(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json` and `manifest.json`; returns the report with the
    /// run directory added.
    pub fn finish(mut self, report: Value) -> Result<Value, Failure> {
        self.text("report.json", &format!("{}\n", to_json(&report)))?;
        let mut outputs = self.outputs.clone();
        outputs.sort();
        let manifest = json!({
            "command": self.command,
            "config_hash": self.hash,
            "config": self.config,
            "versions": {
                "signorini-lab": signorini_lab::VERSION,
                "signorini-cli": env!("CARGO_PKG_VERSION"),
            },
            "outputs": outputs,
            "timings_s": self.timings,
            "wall_clock_s": self.start.elapsed().as_secs_f64(),
        });
        std::fs::write(self.dir.join("manifest.json"), format!("{}\n", to_json(&manifest)))?;
        let mut report = report;
        if let Value::Object(m) = &mut report {
            m.insert("run_dir".into(), json!(self.dir.display().to_string()));
        }
        Ok(report)
    }
}
