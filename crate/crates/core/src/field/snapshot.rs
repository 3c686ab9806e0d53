//! Binary field snapshots with a JSON sidecar.
//!
//! Layout (little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `TRIO` |
//! | 4     | version (u32) |
//! | 4, 4  | nodes along x and y (u32) |
//! | 8     | spacing (f64) |
//! | 8     | half-extent (f64) |
//! | 4     | potential tag (u32) |
//! | 24 n² | row-major `(u₁, u₂, u₃)` triples (f64) |

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{PotentialForm, TripleWellSpec};
use crate::Vec3;

use super::{GridField, RelaxReport, TubeParams};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"TRIO";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 4;

/// Sidecar metadata written next to every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub version: String,
    pub config_hash: String,
    pub n: usize,
    pub spacing: f64,
    pub extent: f64,
    pub potential: TripleWellSpec,
    pub ray_angles: [f64; 3],
    pub tube: TubeParams,
    pub residual_norm: f64,
    /// Observed `sup |u|`.
    pub field_bound: f64,
    /// Observed `sup |∇u|` over the nodes.
    pub gradient_bound: f64,
    pub relax: Option<RelaxReport>,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_snapshot(path: &Path, field: &GridField, meta: &SnapshotMeta) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 24 * field.values.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(field.n as u32).to_le_bytes());
    buf.extend_from_slice(&(field.n as u32).to_le_bytes());
    buf.extend_from_slice(&field.spacing.to_le_bytes());
    buf.extend_from_slice(&field.extent().to_le_bytes());
    buf.extend_from_slice(&field.spec.form.tag().to_le_bytes());
    for v in &field.values {
        for c in v.iter() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(sidecar(path), json + "\n")?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(GridField, SnapshotMeta)> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing TRIO header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (nx, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    if nx != ny || nx < 3 {
        return Err(bad(format!("unsupported grid {nx}×{ny}")));
    }
    let spacing = f64_at(16);
    let extent = f64_at(24);
    let tag = u32_at(32);
    if bytes.len() != HEADER_LEN + 24 * nx * ny {
        return Err(bad("payload length does not match the header".into()));
    }
    let meta_path = sidecar(path);
    let meta: SnapshotMeta = serde_json::from_slice(&std::fs::read(&meta_path).map_err(|_| Error::Dependency {
        path: meta_path.clone(),
        stage: "relax",
    })?)?;
    if PotentialForm::from_tag(tag) != Some(meta.potential.form) || meta.n != nx || meta.spacing != spacing {
        return Err(bad("sidecar metadata disagrees with the header".into()));
    }
    let values: Vec<Vec3> = (0..nx * ny)
        .map(|k| {
            let o = HEADER_LEN + 24 * k;
            Vec3::new(f64_at(o), f64_at(o + 8), f64_at(o + 16))
        })
        .collect();
    let field = GridField {
        n: nx,
        spacing,
        values,
        spec: meta.potential.clone(),
        residual_norm: meta.residual_norm,
    };
    if (field.extent() - extent).abs() > 1e-12 * extent.max(1.0) {
        return Err(bad("extent does not match n and spacing".into()));
    }
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 7, 0.3, |x, y| Vec3::new(x.sin(), y * 1e-7, x * y)).unwrap();
        let meta = SnapshotMeta {
            version: crate::VERSION.into(),
            config_hash: "abc".into(),
            n: f.n,
            spacing: f.spacing,
            extent: f.extent(),
            potential: spec.clone(),
            ray_angles: [0.0, 2.0, 4.0],
            tube: TubeParams::default(),
            residual_norm: f.residual_norm,
            field_bound: f.sup_norm(),
            gradient_bound: 0.0,
            relax: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("field.bin");
        write_snapshot(&p, &f, &meta).unwrap();
        let raw = std::fs::read(&p).unwrap();
        assert_eq!(&raw[..4], b"TRIO");
        assert_eq!(raw.len(), HEADER_LEN + 24 * 49);
        let (g, m) = read_snapshot(&p).unwrap();
        assert_eq!(g, f);
        assert_eq!(m, meta);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        std::fs::write(&p, b"NOPE0000").unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Format { .. })));
    }
}
