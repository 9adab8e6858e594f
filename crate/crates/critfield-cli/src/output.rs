//! Output helpers: provenance headers, CSV assembly and atomic writes.

use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::Ctx;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Write atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// CSV document with the standard provenance header: comma separation,
/// `.` decimal point, LF line endings, header row mandatory.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(ctx: &Ctx, extra_comments: &[String], header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!("# critfield v{}\n", env!("CARGO_PKG_VERSION")));
        buf.push_str(&format!("# config_sha256={}\n", ctx.config_sha256));
        buf.push_str(&format!("# seed={}\n", ctx.provenance_seed()));
        for line in extra_comments {
            buf.push_str(&format!("# {line}\n"));
        }
        buf.push_str(header);
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(self, path: &Path) -> io::Result<()> {
        atomic_write(path, self.buf.as_bytes())
    }
}

/// Shortest-roundtrip float formatting: deterministic and re-parseable.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Provenance object embedded in every JSON report.
pub fn provenance_json(ctx: &Ctx) -> serde_json::Value {
    serde_json::json!({
        "tool": "critfield",
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": ctx.config_sha256,
        "seed": ctx.seed,
    })
}

/// Pretty-printed JSON with trailing newline, written atomically.
pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    atomic_write(path, text.as_bytes())
}
