//! Deterministic file emission: comma-separated tables with `#` metadata
//! preambles, and an indented key/value summary record.
//!
//! Numeric table cells are always written with [`sci`], so identical
//! configurations produce byte-identical tables. The summary carries a
//! timestamp and is the one file that is not byte-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

/// 17 significant digits, scientific notation; round-trips f64 exactly.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutputDir {
    dir: PathBuf,
    version: &'static str,
}

impl OutputDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION"),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn preamble(&self, config: &RunConfig, extra: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dfrt {}", self.version);
        let _ = writeln!(s, "# mode: {}", config.mode.name());
        for (k, v) in &config.echo {
            let _ = writeln!(s, "# config {k} = {v}");
        }
        for (k, v) in extra {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }

    /// Write one table: `#` preamble, one header row, then data rows.
    /// Cells arrive pre-formatted; use [`sci`] for numbers.
    pub fn table(
        &self,
        name: &str,
        config: &RunConfig,
        extra: &[(String, String)],
        header: &[&str],
        rows: &[Vec<String>],
    ) -> io::Result<PathBuf> {
        let mut s = self.preamble(config, extra);
        let _ = writeln!(s, "{}", header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let _ = writeln!(s, "{}", row.join(","));
        }
        let path = self.dir.join(name);
        fs::write(&path, s)?;
        Ok(path)
    }

    /// Write the run summary: `key: value` lines nested by two-space
    /// indentation, with config echo and provenance.
    pub fn summary(
        &self,
        config: &RunConfig,
        status: &str,
        sections: &[(&str, Vec<(String, String)>)],
    ) -> io::Result<PathBuf> {
        let mut s = String::new();
        let _ = writeln!(s, "run:");
        let _ = writeln!(s, "  tool: dfrt {}", self.version);
        let _ = writeln!(s, "  mode: {}", config.mode.name());
        let _ = writeln!(s, "  status: {status}");
        let _ = writeln!(
            s,
            "  timestamp: {}",
            chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ")
        );
        let _ = writeln!(s, "config:");
        for (k, v) in &config.echo {
            let _ = writeln!(s, "  {k}: {v}");
        }
        if config.echo.is_empty() {
            let _ = writeln!(s, "  (all defaults)");
        }
        for (name, entries) in sections {
            let _ = writeln!(s, "{name}:");
            for (k, v) in entries {
                let _ = writeln!(s, "  {k}: {v}");
            }
        }
        let path = self.dir.join("summary.txt");
        fs::write(&path, s)?;
        Ok(path)
    }
}

/// File-name fragment for an angle: 0.27 -> "0p27".
pub fn theta_tag(theta: f64) -> String {
    format!("{theta}").replace('.', "p").replace('-', "m")
}
