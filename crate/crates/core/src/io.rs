//! File formats: DGF1 field files, LPATH1 path files, tree and report JSON.
//!
//! Every writer goes through a temporary file in the target directory and
//! an atomic rename, so readers never observe a partial file.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgff::FieldSample;
use crate::error::{LfppError, Result};
use crate::hierarchy::{LatticePath, PathTree, Point};
use crate::lattice::{BoxGeometry, Vertex};

pub const FIELD_MAGIC: &[u8; 4] = b"DGF1";
pub const PATH_HEADER: &str = "LPATH1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LfppError::Format(msg.into()))
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| LfppError::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Serialises a field on `V_{fN}`: magic, `u32` side, `u32` margin factor,
/// `u64` seed, then `side²` little-endian `f64` values, y-major.
pub fn encode_field(field: &FieldSample, margin: u32) -> Vec<u8> {
    let side = field.geometry.side;
    let mut out = Vec::with_capacity(20 + 8 * side * side);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(side as u32).to_le_bytes());
    out.extend_from_slice(&margin.to_le_bytes());
    out.extend_from_slice(&field.seed.to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Geometry of `V_{fN}` for a stored side and margin factor `f`: the box
/// `[−(f−1)/2·N, (f+1)/2·N)²`.
pub fn margin_geometry(side: usize, margin: u32) -> Result<BoxGeometry> {
    let f = margin as usize;
    if f == 0 || f % 2 == 0 || side % f != 0 {
        return format_err(format!("side {side} is not an odd multiple {margin} of N"));
    }
    let n = (side / f) as i64;
    let off = -((f as i64 - 1) / 2) * n;
    BoxGeometry::new(Vertex::new(off, off), side)
}

pub fn decode_field(bytes: &[u8]) -> Result<(FieldSample, u32)> {
    if bytes.len() < 20 || &bytes[..4] != FIELD_MAGIC {
        return format_err("missing DGF1 header");
    }
    let side = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let margin = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let want = 20 + 8 * side * side;
    if bytes.len() != want {
        return format_err(format!("expected {want} bytes for side {side}, found {}", bytes.len()));
    }
    let geometry = margin_geometry(side, margin)?;
    let values = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((FieldSample { geometry, values, seed }, margin))
}

pub fn write_field(path: &Path, field: &FieldSample, margin: u32) -> Result<()> {
    write_atomic(path, &encode_field(field, margin))
}

pub fn read_field(path: &Path) -> Result<FieldSample> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes).map(|f| f.0)
}

pub fn encode_path(path: &LatticePath) -> String {
    let mut s = String::from(PATH_HEADER);
    s.push('\n');
    for p in path.points() {
        s.push_str(&format!("{} {}\n", p.x, p.y));
    }
    s
}

pub fn decode_path<R: BufRead>(reader: R) -> Result<LatticePath> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == PATH_HEADER => {}
        _ => return format_err("missing LPATH1 header"),
    }
    let mut pts = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => pts.push(Point::new(x, y)),
            _ => return format_err(format!("line {}: expected two reals, got {t:?}", i + 2)),
        }
    }
    LatticePath::new(pts)
}

pub fn write_path(path: &Path, lp: &LatticePath) -> Result<()> {
    write_atomic(path, encode_path(lp).as_bytes())
}

pub fn read_path(path: &Path) -> Result<LatticePath> {
    decode_path(BufReader::new(fs::File::open(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub level: u32,
    pub d: usize,
    pub tame: Option<bool>,
    pub norm: f64,
    #[serde(rename = "flow-num")]
    pub flow_num: u64,
    #[serde(rename = "flow-den")]
    pub flow_den: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub big_k: u64,
    pub k: u32,
    pub m: u32,
    pub n: usize,
    pub kappa: f64,
    pub depth: u32,
    pub near_ties: usize,
    pub nodes: Vec<TreeNodeRecord>,
}

impl TreeRecord {
    pub fn from_tree(tree: &PathTree) -> Self {
        let p = tree.params();
        Self {
            big_k: p.scales.big_k() as u64,
            k: p.scales.k,
            m: p.m(),
            n: p.n(),
            kappa: p.kappa,
            depth: tree.depth(),
            near_ties: tree.near_ties(),
            nodes: tree
                .nodes()
                .iter()
                .map(|u| TreeNodeRecord {
                    id: u.id,
                    parent: u.parent,
                    level: u.level,
                    d: u.d(),
                    tame: u.tame(),
                    norm: u.norm,
                    flow_num: 1,
                    flow_den: u.flow_den,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgff::sample_dgff;

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let f = sample_dgff(BoxGeometry::v_5n(4).unwrap(), 9).unwrap();
        let p = dir.path().join("f.dgf");
        write_field(&p, &f, 5).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"DGF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 20);
        let g = read_field(&p).unwrap();
        assert_eq!(g, f);
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn path_roundtrip() {
        let lp = LatticePath::new(vec![Point::new(0.25, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
        let s = encode_path(&lp);
        assert!(s.starts_with("LPATH1\n"));
        assert_eq!(decode_path(s.as_bytes()).unwrap(), lp);
        assert!(decode_path("LPATH0\n0 0\n".as_bytes()).is_err());
        assert!(decode_path("LPATH1\n0 0\n1 1\n".as_bytes()).is_err());
    }
}
