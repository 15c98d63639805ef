//! Output files. Each one opens with provenance: tool version, a hash of the
//! inputs that produced it, and the constants-table version. CSV files carry
//! it as `#` comment lines, JSON reports as a `provenance` object. Nothing
//! time- or host-dependent is written, so equal inputs give equal bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::constants::CONSTANTS_VERSION;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("ionlink ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    /// SHA-256 over the inputs, hex.
    pub config_hash: String,
    pub constants_version: String,
}

impl Provenance {
    /// Hash `parts` in order, each length-prefixed so that boundaries count.
    pub fn from_inputs<I, B>(parts: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[u8]>,
    {
        let mut h = Sha256::new();
        for part in parts {
            let b = part.as_ref();
            h.update((b.len() as u64).to_le_bytes());
            h.update(b);
        }
        let config_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            tool_version: TOOL_VERSION.to_owned(),
            config_hash,
            constants_version: CONSTANTS_VERSION.to_owned(),
        }
    }

    pub fn comment_header(&self) -> String {
        format!(
            "# tool_version: {}\n# config_hash: {}\n# constants_version: {}\n",
            self.tool_version, self.config_hash, self.constants_version
        )
    }
}

/// CSV body prefixed by the provenance comment and any extra `key: value`
/// comment lines.
pub fn csv_document(prov: &Provenance, extra: &[(String, String)], body: &[u8]) -> Vec<u8> {
    let mut out = prov.comment_header().into_bytes();
    for (k, v) in extra {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    out.extend_from_slice(body);
    out
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    report: &'a T,
}

/// Pretty JSON object with `provenance` followed by the fields of `report`
/// (which must serialize as a map).
pub fn json_document<T: Serialize>(prov: &Provenance, report: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(&JsonDocument { provenance: prov, report })
        .map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Write `bytes` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_boundaries() {
        let a = Provenance::from_inputs(["ab", "c"]);
        let b = Provenance::from_inputs(["a", "bc"]);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a, Provenance::from_inputs(["ab", "c"]));
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn csv_header_lines() {
        let p = Provenance::from_inputs(["x"]);
        let doc = String::from_utf8(csv_document(&p, &[("splitting_Hz".into(), "1".into())], b"a,b\n1,2\n")).unwrap();
        let lines: Vec<&str> = doc.lines().collect();
        assert!(lines[0].starts_with("# tool_version: ionlink "));
        assert!(lines[1].starts_with("# config_hash: "));
        assert_eq!(lines[2], format!("# constants_version: {CONSTANTS_VERSION}"));
        assert_eq!(lines[3], "# splitting_Hz: 1");
        assert_eq!(lines[4], "a,b");
    }

    #[test]
    fn json_has_provenance() {
        let p = Provenance::from_inputs(["x"]);
        let v: serde_json::Value =
            serde_json::from_slice(&json_document(&p, &serde_json::json!({"k": 1})).unwrap()).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["provenance"]["constants_version"], CONSTANTS_VERSION);
    }
}
