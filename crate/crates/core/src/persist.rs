//! Checkpoints, manifests, and atomic file writes.
//!
//! Parameter checkpoints are a pair of files: a little-endian `f64` blob in
//! the flat tensor order plus a JSON manifest carrying shapes, metadata, and
//! a SHA-256 of the blob. Round trips are bit-exact and the hash is verified
//! on load. All writes go through a temp-file-then-rename so output files
//! appear atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoders::EncoderMode;
use crate::policy::{NetConfig, PolicyParams};

/// Checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Manifest {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: corrupt checkpoint: {reason}")]
    Corrupt { path: String, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io { path: path.display().to_string(), source }
}

/// Write bytes to `path` atomically (same-directory temp file + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Snapshot identity and provenance stored next to the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub snapshot_id: u64,
    pub source_role: String,
    pub generation: u32,
    pub creation_step: u64,
    pub encoder_mode: EncoderMode,
    /// Hash of the run configuration that produced this snapshot.
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub net: NetConfig,
    pub meta: SnapshotMeta,
    pub shapes: Vec<TensorShape>,
    pub param_count: usize,
    pub blob_sha256: String,
}

fn params_to_le_bytes(params: &PolicyParams) -> Vec<u8> {
    let flat = params.flatten();
    let mut bytes = Vec::with_capacity(flat.len() * 8);
    for v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Save parameters + metadata; returns the manifest path.
///
/// Layout: `<dir>/<stem>.manifest.json` and `<dir>/<stem>.bin`.
pub fn save_checkpoint(
    dir: &Path,
    stem: &str,
    params: &PolicyParams,
    meta: &SnapshotMeta,
) -> Result<PathBuf, PersistError> {
    let blob = params_to_le_bytes(params);
    let manifest = CheckpointManifest {
        version: CHECKPOINT_VERSION,
        net: params.cfg,
        meta: meta.clone(),
        shapes: params
            .tensors()
            .iter()
            .map(|(name, rows, cols, _)| TensorShape { name: (*name).into(), rows: *rows, cols: *cols })
            .collect(),
        param_count: params.flat_len(),
        blob_sha256: sha256_hex(&blob),
    };

    let bin_path = dir.join(format!("{stem}.bin"));
    atomic_write(&bin_path, &blob).map_err(io_err(&bin_path))?;

    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    let manifest_json =
        serde_json::to_vec_pretty(&manifest).expect("manifest serialization cannot fail");
    atomic_write(&manifest_path, &manifest_json).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// Load a checkpoint from its manifest path, verifying sizes and the blob
/// hash.
pub fn load_checkpoint(
    manifest_path: &Path,
) -> Result<(PolicyParams, SnapshotMeta), PersistError> {
    let display = manifest_path.display().to_string();
    let manifest_bytes = fs::read(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: CheckpointManifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|source| PersistError::Manifest { path: display.clone(), source })?;
    if manifest.version != CHECKPOINT_VERSION {
        return Err(PersistError::Corrupt {
            path: display,
            reason: format!("unsupported version {}", manifest.version),
        });
    }

    let bin_path = manifest_path
        .to_string_lossy()
        .strip_suffix(".manifest.json")
        .map(|s| PathBuf::from(format!("{s}.bin")))
        .unwrap_or_else(|| manifest_path.with_extension("bin"));
    let blob = fs::read(&bin_path).map_err(io_err(&bin_path))?;

    if blob.len() != manifest.param_count * 8 {
        return Err(PersistError::Corrupt {
            path: bin_path.display().to_string(),
            reason: format!(
                "blob length {} does not match {} parameters",
                blob.len(),
                manifest.param_count
            ),
        });
    }
    let got_hash = sha256_hex(&blob);
    if got_hash != manifest.blob_sha256 {
        return Err(PersistError::Corrupt {
            path: bin_path.display().to_string(),
            reason: format!("hash mismatch: manifest {} blob {}", manifest.blob_sha256, got_hash),
        });
    }

    let mut flat = Vec::with_capacity(manifest.param_count);
    for chunk in blob.chunks_exact(8) {
        flat.push(f64::from_le_bytes(chunk.try_into().expect("chunks_exact yields 8 bytes")));
    }
    let mut params = PolicyParams::init(manifest.net, 0);
    params.assign_flat(&flat).map_err(|_| PersistError::Corrupt {
        path: display,
        reason: "parameter count does not match network shape".into(),
    })?;
    Ok((params, manifest.meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params(seed: u64) -> PolicyParams {
        let cfg = NetConfig {
            mode: EncoderMode::Qs,
            char_rows: 3,
            skill_rows: 5,
            embed_width: 4,
            hidden: 8,
        };
        PolicyParams::init(cfg, seed)
    }

    fn meta() -> SnapshotMeta {
        SnapshotMeta {
            snapshot_id: 3,
            source_role: "main".into(),
            generation: 2,
            creation_step: 12345,
            encoder_mode: EncoderMode::Qs,
            config_hash: "deadbeef".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let params = tiny_params(1);
        let path = save_checkpoint(dir.path(), "snap_3", &params, &meta()).unwrap();
        let (loaded, loaded_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(params.flatten(), loaded.flatten());
        assert_eq!(loaded_meta, meta());
    }

    #[test]
    fn truncated_blob_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let params = tiny_params(2);
        let path = save_checkpoint(dir.path(), "snap", &params, &meta()).unwrap();
        let bin = dir.path().join("snap.bin");
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(PersistError::Corrupt { .. })));
    }

    #[test]
    fn flipped_byte_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let params = tiny_params(3);
        let path = save_checkpoint(dir.path(), "snap", &params, &meta()).unwrap();
        let bin = dir.path().join("snap.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[40] ^= 0xff;
        fs::write(&bin, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(PersistError::Corrupt { .. })));
    }

    /// The blob is pinned little-endian: a fixture built byte-by-byte loads
    /// to the same values on any host.
    #[test]
    fn endianness_pinned_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let params = tiny_params(4);
        let n = params.flat_len();
        let values: Vec<f64> = (0..n).map(|i| (i as f64) * 0.5 - 3.0).collect();

        let mut blob = Vec::new();
        for v in &values {
            let be = v.to_be_bytes();
            // Construct little-endian bytes by explicitly reversing big-endian,
            // without going through to_le_bytes.
            let mut le = be;
            le.reverse();
            blob.extend_from_slice(&le);
        }
        let manifest = CheckpointManifest {
            version: CHECKPOINT_VERSION,
            net: params.cfg,
            meta: meta(),
            shapes: params
                .tensors()
                .iter()
                .map(|(name, rows, cols, _)| TensorShape {
                    name: (*name).into(),
                    rows: *rows,
                    cols: *cols,
                })
                .collect(),
            param_count: n,
            blob_sha256: sha256_hex(&blob),
        };
        fs::write(dir.path().join("fix.bin"), &blob).unwrap();
        fs::write(
            dir.path().join("fix.manifest.json"),
            serde_json::to_vec(&manifest).unwrap(),
        )
        .unwrap();
        let (loaded, _) = load_checkpoint(&dir.path().join("fix.manifest.json")).unwrap();
        assert_eq!(loaded.flatten(), values);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert!(!dir.path().join(".out.txt.tmp").exists());
    }
}
