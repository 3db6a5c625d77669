//! Report emission: every file carries the crate version and a hash of the
//! resolved configuration. No timestamps are written, so identical inputs
//! give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub version: String,
    pub schema_version: u32,
    pub config_hash: String,
}

impl Meta {
    /// Hash the canonical JSON form of `config`.
    pub fn for_config<C: Serialize>(config: &C) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Self {
            version: VERSION.to_string(),
            schema_version: SCHEMA_VERSION,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    /// Comment lines placed before a CSV header.
    pub fn csv_preamble(&self, schema: &str) -> String {
        format!(
            "# version={}\n# schema={schema}/{}\n# config_hash={}\n",
            self.version, self.schema_version, self.config_hash
        )
    }
}

#[derive(Serialize)]
struct Envelope<'a, B: Serialize> {
    schema: String,
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a B,
}

/// Render a report as pretty JSON with the schema tag and metadata block.
pub fn to_json<B: Serialize>(schema: &str, meta: &Meta, body: &B) -> String {
    let env = Envelope {
        schema: format!("{schema}/{}", meta.schema_version),
        meta,
        body,
    };
    serde_json::to_string_pretty(&env).expect("report serializes")
}

/// Where output files go: a path prefix, with the directory overridable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputTarget {
    prefix: PathBuf,
}

impl OutputTarget {
    /// `prefix` from the config, `dir_override` from the environment. With
    /// neither, nothing is written.
    pub fn resolve(prefix: Option<&str>, dir_override: Option<&str>) -> Option<Self> {
        match (prefix, dir_override) {
            (None, None) => None,
            (p, Some(dir)) => {
                let name = p
                    .and_then(|p| Path::new(p).file_name())
                    .map(|s| s.to_owned())
                    .unwrap_or_else(|| "lohe".into());
                Some(Self { prefix: Path::new(dir).join(name) })
            }
            (Some(p), None) => Some(Self { prefix: PathBuf::from(p) }),
        }
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        let mut s = self.prefix.as_os_str().to_owned();
        s.push(format!("_{suffix}"));
        PathBuf::from(s)
    }

    /// Write `contents` to `<prefix>_<suffix>`, creating parent directories.
    pub fn write(&self, suffix: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.path(suffix);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut f = fs::File::create(&path)?;
        f.write_all(contents)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Meta::for_config(&vec![1.0, 2.0]);
        let b = Meta::for_config(&vec![1.0, 2.0]);
        let c = Meta::for_config(&vec![1.0, 2.5]);
        assert_eq!(a, b);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn output_resolution() {
        assert!(OutputTarget::resolve(None, None).is_none());
        let t = OutputTarget::resolve(Some("runs/a"), None).unwrap();
        assert_eq!(t.path("x.json"), PathBuf::from("runs/a_x.json"));
        let t = OutputTarget::resolve(Some("runs/a"), Some("/tmp/o")).unwrap();
        assert_eq!(t.path("x.json"), PathBuf::from("/tmp/o/a_x.json"));
        let t = OutputTarget::resolve(None, Some("/tmp/o")).unwrap();
        assert_eq!(t.path("x.csv"), PathBuf::from("/tmp/o/lohe_x.csv"));
    }

    #[test]
    fn json_envelope() {
        #[derive(Serialize)]
        struct Body {
            x: f64,
        }
        let m = Meta::for_config(&1);
        let s = to_json("demo", &m, &Body { x: 1.5 });
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], "demo/1");
        assert_eq!(v["x"], 1.5);
        assert_eq!(v["meta"]["version"], VERSION);
    }
}
