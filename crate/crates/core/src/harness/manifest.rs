//! Annotation manifest: one CSV row per eye image.
//!
//! Required columns are `sample_id, eye, gender, image_path, mask_path,
//! pupil_cx, pupil_cy, pupil_r, iris_cx, iris_cy, iris_r`. An optional
//! `subject_id` column groups several images of one person; without it every
//! sample is its own subject. Relative paths resolve against the manifest's
//! directory and an empty `mask_path` means no occlusion.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{load_gray, BitMask, Circle, GrayImage};
use crate::normalize::{Eye, Gender, IrisAnnotation};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub subject_id: String,
    pub eye: Eye,
    pub gender: Gender,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    pub pupil: Circle,
    pub iris: Circle,
}

impl ManifestEntry {
    /// Reads the image and mask and builds the annotation.
    pub fn load(&self) -> Result<(GrayImage, IrisAnnotation)> {
        let image = load_gray(&self.image_path)?;
        let occlusion = match &self.mask_path {
            Some(p) => {
                let m = BitMask::from_gray(&load_gray(p)?);
                if !m.same_dims(image.width(), image.height()) {
                    return Err(Error::Manifest(format!(
                        "{}: mask {}x{} does not match image {}x{}",
                        self.sample_id,
                        m.width(),
                        m.height(),
                        image.width(),
                        image.height()
                    )));
                }
                m
            }
            None => BitMask::filled(image.width(), image.height(), false)?,
        };
        let ann = IrisAnnotation::new(self.pupil, self.iris, occlusion)?;
        Ok((image, ann))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub source_name: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    sample_id: String,
    #[serde(default)]
    subject_id: Option<String>,
    eye: String,
    gender: String,
    image_path: String,
    #[serde(default)]
    mask_path: Option<String>,
    pupil_cx: f64,
    pupil_cy: f64,
    pupil_r: f64,
    iris_cx: f64,
    iris_cy: f64,
    iris_r: f64,
}

impl DatasetManifest {
    pub fn new(source_name: impl Into<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self {
            source_name: source_name.into(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    /// Unique sample ids, and one gender per subject.
    pub fn validate(&self) -> Result<()> {
        let mut genders: BTreeMap<&str, Gender> = BTreeMap::new();
        let mut ids = std::collections::BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.sample_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate sample_id {:?}", e.sample_id)));
            }
            match genders.insert(&e.subject_id, e.gender) {
                Some(g) if g != e.gender => {
                    return Err(Error::Manifest(format!(
                        "subject {:?} is labelled both {g} and {}",
                        e.subject_id, e.gender
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut entries = Vec::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let ctx = |e: Error| Error::Manifest(format!("{} row {}: {e}", path.display(), line + 1));
        let pupil = Circle::new(row.pupil_cx, row.pupil_cy, row.pupil_r).map_err(ctx)?;
        let iris = Circle::new(row.iris_cx, row.iris_cy, row.iris_r).map_err(ctx)?;
        entries.push(ManifestEntry {
            subject_id: row
                .subject_id
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| row.sample_id.clone()),
            eye: row.eye.parse().map_err(ctx)?,
            gender: row.gender.parse().map_err(ctx)?,
            image_path: resolve(&base, &row.image_path),
            mask_path: row.mask_path.filter(|s| !s.is_empty()).map(|s| resolve(&base, &s)),
            sample_id: row.sample_id,
            pupil,
            iris,
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    DatasetManifest::new(name, entries)
}

/// Writes a manifest with `subject_id`; paths under the manifest's
/// directory are stored relative to it.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let rel = |p: &Path| {
        p.strip_prefix(base)
            .unwrap_or(p)
            .to_string_lossy()
            .replace('\\', "/")
    };
    let mut buf = Vec::new();
    for c in comments {
        writeln!(buf, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for e in &manifest.entries {
            w.serialize(Row {
                sample_id: e.sample_id.clone(),
                subject_id: Some(e.subject_id.clone()),
                eye: e.eye.to_string(),
                gender: e.gender.to_string(),
                image_path: rel(&e.image_path),
                mask_path: e.mask_path.as_deref().map(rel),
                pupil_cx: e.pupil.cx,
                pupil_cy: e.pupil.cy,
                pupil_r: e.pupil.r,
                iris_cx: e.iris.cx,
                iris_cy: e.iris.cy,
                iris_r: e.iris.r,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
