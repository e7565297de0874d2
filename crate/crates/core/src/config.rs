//! Loading coil geometry descriptions from TOML or JSON, named presets, and
//! content hashing for calibration provenance.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::coil::CoilGeometry;
use crate::error::{Error, Result};

/// Hex-encoded SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Stable content hash of a geometry: SHA-256 of its canonical JSON form.
/// Calibrations record this to detect decode-time geometry mismatches.
pub fn geometry_hash(g: &CoilGeometry) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(g)?.as_bytes()))
}

/// The built-in geometries addressable by name.
pub fn geometry_preset(name: &str) -> Option<CoilGeometry> {
    match name {
        "vertical_coil" => Some(CoilGeometry::vertical_preset()),
        "horizontal_coil" => Some(CoilGeometry::horizontal_preset()),
        _ => None,
    }
}

/// Parses a geometry from TOML or JSON text.
pub fn parse_geometry(text: &str, format: GeometryFormat) -> Result<CoilGeometry> {
    let g: CoilGeometry = match format {
        GeometryFormat::Toml => toml::from_str(text)
            .map_err(|e| Error::Serialization(format!("geometry TOML: {e}")))?,
        GeometryFormat::Json => serde_json::from_str(text)
            .map_err(|e| Error::Serialization(format!("geometry JSON: {e}")))?,
    };
    g.validate()?;
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryFormat {
    Toml,
    Json,
}

/// Loads a geometry file, choosing the parser by extension (`.toml` or
/// `.json`).
pub fn load_geometry(path: &Path) -> Result<CoilGeometry> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => GeometryFormat::Toml,
        Some("json") => GeometryFormat::Json,
        other => {
            return Err(Error::Domain(format!(
                "unsupported geometry file extension {:?} for {} (expected .toml or .json)",
                other.unwrap_or(""),
                path.display()
            )))
        }
    };
    let text = std::fs::read_to_string(path)?;
    parse_geometry(&text, format)
}
