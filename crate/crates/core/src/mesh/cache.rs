//! On-disk mesh cache keyed by an opaque string (scene hash and `h`).

use std::path::{Path, PathBuf};

use super::{Arc, BoundaryEdge, BoundaryTag, Mesh, Segment};
use crate::error::{Error, Result};
use crate::geometry::polygon::{BoundarySource, Point};

const MAGIC: &[u8; 8] = b"SGMESH01";

pub struct MeshCache {
    dir: PathBuf,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Mesh("truncated mesh cache entry".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

fn tag_code(t: BoundaryTag) -> u8 {
    match t {
        BoundaryTag::Outer => 0,
        BoundaryTag::Gamma => 1,
        BoundaryTag::Obstacle => 2,
    }
}

fn tag_from(c: u8) -> Result<BoundaryTag> {
    Ok(match c {
        0 => BoundaryTag::Outer,
        1 => BoundaryTag::Gamma,
        2 => BoundaryTag::Obstacle,
        _ => return Err(Error::Mesh(format!("bad tag {c} in mesh cache"))),
    })
}

fn source_code(s: BoundarySource) -> u8 {
    match s {
        BoundarySource::Omega => 0,
        BoundarySource::Gamma => 1,
        BoundarySource::Obstacle1 => 2,
        BoundarySource::Obstacle2 => 3,
        BoundarySource::Free => 4,
    }
}

fn source_from(c: u8) -> Result<BoundarySource> {
    Ok(match c {
        0 => BoundarySource::Omega,
        1 => BoundarySource::Gamma,
        2 => BoundarySource::Obstacle1,
        3 => BoundarySource::Obstacle2,
        4 => BoundarySource::Free,
        _ => return Err(Error::Mesh(format!("bad source {c} in mesh cache"))),
    })
}

pub fn encode(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::new();
    let u = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
    let f = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_bits().to_le_bytes());
    out.extend_from_slice(MAGIC);
    f(&mut out, mesh.h);
    u(&mut out, mesh.nodes.len() as u64);
    for p in &mesh.nodes {
        f(&mut out, p.x);
        f(&mut out, p.y);
    }
    u(&mut out, mesh.triangles.len() as u64);
    for t in &mesh.triangles {
        for &v in t {
            u(&mut out, v as u64);
        }
    }
    u(&mut out, mesh.segments.len() as u64);
    for s in &mesh.segments {
        for v in [s.a[0], s.a[1], s.b[0], s.b[1]] {
            f(&mut out, v);
        }
        out.push(tag_code(s.tag));
        out.push(source_code(s.source));
        match s.arc {
            Some(a) => {
                out.push(1);
                f(&mut out, a.center[0]);
                f(&mut out, a.center[1]);
                f(&mut out, a.radius);
            }
            None => out.push(0),
        }
    }
    u(&mut out, mesh.boundary_edges.len() as u64);
    for e in &mesh.boundary_edges {
        u(&mut out, e.nodes[0] as u64);
        u(&mut out, e.nodes[1] as u64);
        out.push(tag_code(e.tag));
        u(&mut out, e.segment as u64);
    }
    out
}

pub fn decode(buf: &[u8]) -> Result<Mesh> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Mesh("not a mesh cache entry".into()));
    }
    let h = r.f64()?;
    let n = r.u64()? as usize;
    let mut nodes = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        nodes.push(Point::new(r.f64()?, r.f64()?));
    }
    let nt = r.u64()? as usize;
    let mut triangles = Vec::with_capacity(nt.min(1 << 24));
    for _ in 0..nt {
        let t = [r.u64()? as usize, r.u64()? as usize, r.u64()? as usize];
        if t.iter().any(|&v| v >= n) {
            return Err(Error::Mesh("node index out of range in mesh cache".into()));
        }
        triangles.push(t);
    }
    let ns = r.u64()? as usize;
    let mut segments = Vec::with_capacity(ns.min(1 << 24));
    for _ in 0..ns {
        let a = [r.f64()?, r.f64()?];
        let b = [r.f64()?, r.f64()?];
        let tag = tag_from(r.u8()?)?;
        let source = source_from(r.u8()?)?;
        let arc = match r.u8()? {
            0 => None,
            _ => Some(Arc {
                center: [r.f64()?, r.f64()?],
                radius: r.f64()?,
            }),
        };
        segments.push(Segment { a, b, tag, source, arc });
    }
    let nb = r.u64()? as usize;
    let mut boundary_edges = Vec::with_capacity(nb.min(1 << 24));
    for _ in 0..nb {
        let nodes_ = [r.u64()? as usize, r.u64()? as usize];
        let tag = tag_from(r.u8()?)?;
        let segment = r.u64()? as usize;
        if nodes_.iter().any(|&v| v >= n) || segment >= ns {
            return Err(Error::Mesh("index out of range in mesh cache".into()));
        }
        boundary_edges.push(BoundaryEdge {
            nodes: nodes_,
            tag,
            segment,
        });
    }
    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        segments,
        kinds: Vec::new(),
        normals: Vec::new(),
        obstacle_nodes: Vec::new(),
        h,
    };
    mesh.finish()?;
    mesh.validate_topology()?;
    Ok(mesh)
}

impl MeshCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(MeshCache { dir })
    }

    fn path(&self, key: &str) -> PathBuf {
        let safe: String = key
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.dir.join(format!("{safe}.mesh"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, key: &str) -> Option<Mesh> {
        let bytes = std::fs::read(self.path(key)).ok()?;
        decode(&bytes).ok()
    }

    pub fn put(&self, key: &str, mesh: &Mesh) -> Result<()> {
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, encode(mesh))?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn get_or_build(&self, key: &str, build: impl FnOnce() -> Result<Mesh>) -> Result<Mesh> {
        if let Some(m) = self.get(key) {
            return Ok(m);
        }
        let m = build()?;
        self.put(key, &m)?;
        Ok(m)
    }
}
