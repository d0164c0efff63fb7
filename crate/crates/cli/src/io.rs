//! Inputs (families, polygons) and outputs (CSV tables, JSON summaries).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flexspec_core::families::{four_bar, make_bricard1, make_flex_polygon, make_steffen, rigid_cube};
use flexspec_core::surface::shapes;
use flexspec_core::tent::TentConstruction;
use flexspec_core::FlexFamily;
use serde::{Deserialize, Serialize};

pub const BUILTIN_FAMILIES: [&str; 6] = ["four-bar", "hexagon", "bricard", "steffen", "cube", "square"];
pub const BUILTIN_POLYGONS: [&str; 4] = ["square", "l-shape", "unit-l", "rectangle"];

/// A family, or a tent construction together with its modified family.
pub enum FamilySource {
    Family(FlexFamily),
    Tent(Box<TentConstruction>),
}

impl FamilySource {
    pub fn family(&self) -> &FlexFamily {
        match self {
            FamilySource::Family(f) => f,
            FamilySource::Tent(t) => &t.family,
        }
    }
}

fn builtin_family(name: &str) -> Result<FlexFamily> {
    Ok(match name {
        "four-bar" => four_bar(),
        "hexagon" => make_flex_polygon(&[1.0; 6])?,
        "bricard" => make_bricard1(),
        "steffen" => make_steffen(),
        "cube" => rigid_cube(),
        "square" => FlexFamily::rigid("square", &shapes::unit_square())?,
        _ => bail!("unknown builtin family {name:?} (known: {})", BUILTIN_FAMILIES.join(", ")),
    })
}

/// `builtin:<name>`, a family JSON file, or a tent construction JSON file.
pub fn load_family(source: &str) -> Result<FamilySource> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return Ok(FamilySource::Family(builtin_family(name)?));
    }
    let text = fs::read_to_string(source).with_context(|| format!("reading {source}"))?;
    if let Ok(t) = serde_json::from_str::<TentConstruction>(&text) {
        return Ok(FamilySource::Tent(Box::new(t)));
    }
    Ok(FamilySource::Family(FlexFamily::from_json(&text).with_context(|| format!("parsing family {source}"))?))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolygonFile {
    Loop(Vec<[f64; 2]>),
    Object { vertices: Vec<[f64; 2]> },
}

/// `builtin:<name>` or a JSON vertex loop (`[[x, y], …]` or `{"vertices": …}`).
pub fn load_polygon(source: &str) -> Result<Vec<[f64; 2]>> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return Ok(match name {
            "square" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            "l-shape" => vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            "unit-l" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0]],
            "rectangle" => vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
            _ => bail!("unknown builtin polygon {name:?} (known: {})", BUILTIN_POLYGONS.join(", ")),
        });
    }
    let text = fs::read_to_string(source).with_context(|| format!("reading {source}"))?;
    let p: PolygonFile = serde_json::from_str(&text).with_context(|| format!("parsing polygon {source}"))?;
    Ok(match p {
        PolygonFile::Loop(v) => v,
        PolygonFile::Object { vertices } => vertices,
    })
}

/// CSV file whose first line is `# <title> config=<hash>`, then a header row
/// with units.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, title: &str, hash: &str, header: &[String]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(file, "# {title} config={hash}")?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

/// Fixed `{:.15e}` formatting so equal runs give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.15e}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
