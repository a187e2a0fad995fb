use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::svg::Plot;

/// Output directory; records every file written so the run summary can list
/// them.
pub struct OutDir {
    dir: PathBuf,
    svg: bool,
    pub files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path, svg: bool) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), svg, files: vec![] })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.display().to_string());
        p
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &serde_json::Value) -> CliResult<()> {
        let path = self.path(name);
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    /// Writes the plot only when SVG output was requested.
    pub fn svg(&mut self, name: &str, plot: &Plot) -> CliResult<()> {
        if self.svg {
            self.svg_always(name, plot)?;
        }
        Ok(())
    }

    pub fn svg_always(&mut self, name: &str, plot: &Plot) -> CliResult<()> {
        let path = self.path(name);
        fs::write(path, plot.to_svg())?;
        Ok(())
    }
}

/// Shortest round-trip formatting, so repeated runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Label used in per-time file names, e.g. `2.900`.
pub fn time_tag(t: f64) -> String {
    format!("{t:.3}")
}

/// JSON number, with non-finite values as strings.
pub fn jnum(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(num(x))
    }
}
