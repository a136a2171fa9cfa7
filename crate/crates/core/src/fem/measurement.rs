//! Boundary traces sampled along tagged boundary chains.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::polygon::Point;
use crate::mesh::{BoundaryTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// Scalar normal derivative `∂_n u`.
    Flux,
    /// Traction vector `σ(u)n`.
    Traction,
}

impl Quantity {
    pub fn components(self) -> usize {
        match self {
            Quantity::Flux => 1,
            Quantity::Traction => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    /// Arc length from the start of the chain.
    pub s: f64,
    pub x: [f64; 2],
    /// Second entry is zero for scalar quantities.
    pub value: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryMeasurement {
    pub quantity: Quantity,
    pub tag: BoundaryTag,
    pub samples: Vec<Sample>,
}

/// Node sequences of the boundary chains carrying `tag`, each oriented with
/// the domain on the left. Closed loops repeat their first node at the end
/// and start at the rightmost (then lowest) node; chains are ordered by their
/// starting point.
pub fn boundary_chains(mesh: &Mesh, tag: BoundaryTag) -> Vec<Vec<usize>> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut has_prev: HashMap<usize, bool> = HashMap::new();
    for e in mesh.edges_with_tag(tag) {
        next.insert(e.nodes[0], e.nodes[1]);
        has_prev.insert(e.nodes[1], true);
        has_prev.entry(e.nodes[0]).or_insert(false);
    }
    let nodes = mesh.nodes();
    let key = |i: usize| (-nodes[i].x, nodes[i].y, i);
    let mut starts: Vec<usize> = has_prev.iter().filter(|(_, p)| !**p).map(|(i, _)| *i).collect();
    starts.sort_by(|a, b| key(*a).partial_cmp(&key(*b)).unwrap());
    let mut seen = std::collections::HashSet::new();
    let mut chains = Vec::new();
    for s in starts {
        let mut chain = vec![s];
        seen.insert(s);
        let mut v = s;
        while let Some(&w) = next.get(&v) {
            chain.push(w);
            seen.insert(w);
            v = w;
        }
        chains.push(chain);
    }
    // closed loops
    let mut rest: Vec<usize> = next.keys().copied().filter(|v| !seen.contains(v)).collect();
    while !rest.is_empty() {
        rest.sort_by(|a, b| key(*a).partial_cmp(&key(*b)).unwrap());
        let s = rest[0];
        let mut chain = vec![s];
        seen.insert(s);
        let mut v = next[&s];
        while v != s {
            chain.push(v);
            seen.insert(v);
            v = next[&v];
        }
        chain.push(s);
        chains.push(chain);
        rest.retain(|v| !seen.contains(v));
    }
    chains.sort_by(|a, b| key(a[0]).partial_cmp(&key(b[0])).unwrap());
    chains
}

impl BoundaryMeasurement {
    /// Samples `value(node)` at every node of the `tag` chains.
    pub fn from_nodes(
        mesh: &Mesh,
        tag: BoundaryTag,
        quantity: Quantity,
        value: impl Fn(usize) -> [f64; 2],
    ) -> Result<Self> {
        let chains = boundary_chains(mesh, tag);
        if chains.is_empty() {
            return Err(Error::Invalid(format!("mesh has no {tag:?} boundary")));
        }
        let mut samples = Vec::new();
        let mut s = 0.0f64;
        for chain in chains {
            let mut prev: Option<Point> = None;
            for &v in &chain {
                let p = mesh.nodes()[v];
                if let Some(q) = prev {
                    s += (p - q).norm();
                } else if !samples.is_empty() {
                    // separate chains by a zero-width gap in the parameter
                    s += f64::EPSILON * s.max(1.0);
                }
                prev = Some(p);
                samples.push(Sample {
                    s,
                    x: [p.x, p.y],
                    value: value(v),
                });
            }
        }
        Ok(BoundaryMeasurement { quantity, tag, samples })
    }

    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().map(|s| norm(s.value)).fold(0.0, f64::max)
    }

    /// Trapezoidal `L²` norm along the arc length.
    pub fn l2(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.samples.windows(2) {
            let ds = w[1].s - w[0].s;
            acc += 0.5 * ds * (norm2(w[0].value) + norm2(w[1].value));
        }
        acc.sqrt()
    }

    /// Piecewise-linear interpolation at normalised arc length `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let s = t.clamp(0.0, 1.0) * self.length();
        let k = self.samples.partition_point(|x| x.s < s);
        if k == 0 {
            return self.samples[0].value;
        }
        if k >= self.samples.len() {
            return self.samples[self.samples.len() - 1].value;
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        let w = if b.s > a.s { (s - a.s) / (b.s - a.s) } else { 1.0 };
        [
            a.value[0] + w * (b.value[0] - a.value[0]),
            a.value[1] + w * (b.value[1] - a.value[1]),
        ]
    }

    /// Values on a uniform grid of the normalised arc length with physical
    /// spacing at most `spacing`.
    pub fn resample(&self, spacing: f64, length: f64) -> Vec<[f64; 2]> {
        let n = ((length / spacing).ceil() as usize).max(1);
        (0..=n).map(|k| self.at(k as f64 / n as f64)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.value = [s.value[0] * factor, s.value[1] * factor];
        }
        out
    }
}

/// `L²` and `L∞` distances between two traces of the same boundary arc,
/// compared on a common grid of spacing `spacing`.
pub fn gap(a: &BoundaryMeasurement, b: &BoundaryMeasurement, spacing: f64) -> Result<(f64, f64)> {
    if a.quantity != b.quantity {
        return Err(Error::Invalid("cannot compare flux with traction".into()));
    }
    let la = a.length();
    let lb = b.length();
    if (la - lb).abs() > 1e-2 * la.max(lb) {
        return Err(Error::Invalid(format!(
            "measurement arcs differ in length ({la:.6} vs {lb:.6})"
        )));
    }
    let length = 0.5 * (la + lb);
    let va = a.resample(spacing, length);
    let vb = b.resample(spacing, length);
    let n = va.len() - 1;
    let ds = length / n as f64;
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for k in 0..=n {
        let d = [va[k][0] - vb[k][0], va[k][1] - vb[k][1]];
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        l2 += w * ds * norm2(d);
        linf = linf.max(norm(d));
    }
    Ok((l2.sqrt(), linf))
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn norm(v: [f64; 2]) -> f64 {
    norm2(v).sqrt()
}
