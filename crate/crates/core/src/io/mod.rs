//! Checkpoint container, PNG codec and run configuration files.

mod checkpoint;
mod config;
mod png;

pub use checkpoint::{
    affine_from_bytes, affine_to_bytes, generator_from_bytes, generator_to_bytes, load_affine,
    load_checkpoint, save_affine, save_checkpoint, FORMAT_VERSION, MAGIC,
};
pub use config::{OutputPaths, RunConfig};
pub use png::{decode_png, encode_png, export_image, from_u8, import_image, load_png_dir, to_u8};

use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
