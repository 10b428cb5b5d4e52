//! Per-object depth from dense per-pixel depth maps produced by an external
//! monocular predictor, and agreement scoring of the derived relative
//! depths.
//!
//! Two aggregations are computed over an object's bounding box: the plain
//! pixel average and a radially weighted average that trusts pixels near the
//! box centroid more than boundary pixels (which often straddle the object
//! edge). Aggregates are rescaled per image onto the 1..=100 annotation
//! scale before thresholding.
//!
//! Depth-map grid file: first line `width height`, then `height` lines of
//! `width` whitespace-separated real values. A manifest file maps image ids
//! to grid files, one `image_id path` pair per line, paths relative to the
//! manifest.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use crate::dataset::{filter_valid, generate_pairs, DepthThreshold, ImageRecord, RelClass};
use crate::error::{Error, Result};
use crate::evaluation::ConfusionMatrix;
use crate::geometry::BoundingBox;
use crate::Real;

/// Dense per-pixel depth (or disparity) grid for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<R> {
    width: u32,
    height: u32,
    values: Vec<R>,
    /// Whether a larger raw value means nearer (true for disparity outputs,
    /// which is what monocular predictors typically emit).
    pub invert: bool,
}

impl<R: Real> DepthMap<R> {
    pub fn new(width: u32, height: u32, values: Vec<R>, invert: bool) -> Result<DepthMap<R>> {
        if width == 0 || height == 0 {
            return Err(Error::DepthMap {
                path: None,
                message: format!("dimensions must be positive, got {width}x{height}"),
            });
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::DepthMap {
                path: None,
                message: format!(
                    "expected {} values for {width}x{height}, got {}",
                    (width as usize) * (height as usize),
                    values.len()
                ),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DepthMap {
                path: None,
                message: format!("non-finite value at index {i}"),
            });
        }
        Ok(DepthMap {
            width,
            height,
            values,
            invert,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn value(&self, x: u32, y: u32) -> R {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Whether the map has the same dimensions as an annotated image.
    pub fn matches_dims(&self, rec: &ImageRecord) -> bool {
        self.width == rec.dims.width() && self.height == rec.dims.height()
    }

    fn check_box(&self, box_: &BoundingBox) -> Result<()> {
        if box_.x_max() > self.width || box_.y_max() > self.height {
            return Err(Error::DepthMap {
                path: None,
                message: format!(
                    "box ({},{},{},{}) exceeds map {}x{}",
                    box_.x_min(),
                    box_.y_min(),
                    box_.x_max(),
                    box_.y_max(),
                    self.width,
                    self.height
                ),
            });
        }
        Ok(())
    }
}

/// Parse the grid format from a reader.
pub fn read_depth_map<R: Real>(r: impl BufRead, invert: bool) -> Result<DepthMap<R>> {
    let map_err = |message: String| Error::DepthMap {
        path: None,
        message,
    };
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    if tokens.len() < 2 {
        return Err(map_err("missing 'width height' header".into()));
    }
    let width: u32 = tokens[0]
        .parse()
        .map_err(|e| map_err(format!("bad width '{}': {e}", tokens[0])))?;
    let height: u32 = tokens[1]
        .parse()
        .map_err(|e| map_err(format!("bad height '{}': {e}", tokens[1])))?;
    let expected = (width as usize) * (height as usize);
    let rest = &tokens[2..];
    if rest.len() != expected {
        return Err(map_err(format!(
            "header says {width}x{height} ({expected} values) but {} follow",
            rest.len()
        )));
    }
    let mut values = Vec::with_capacity(expected);
    for t in rest {
        let v: f64 = t
            .parse()
            .map_err(|e| map_err(format!("bad value '{t}': {e}")))?;
        if !v.is_finite() {
            return Err(map_err(format!("non-finite value '{t}'")));
        }
        values.push(R::from_f64_lossy(v));
    }
    DepthMap::new(width, height, values, invert)
}

/// Load a grid file; `invert` marks the values as disparities.
pub fn load_depth_map<R: Real>(path: impl AsRef<Path>, invert: bool) -> Result<DepthMap<R>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_depth_map(std::io::BufReader::new(file), invert).map_err(|e| match e {
        Error::DepthMap { message, .. } => Error::DepthMap {
            path: Some(path.display().to_string()),
            message,
        },
        other => other,
    })
}

/// Parse a manifest of `image_id path` lines; blank lines and `#` comments
/// are skipped and relative paths resolve against the manifest location.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rel) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::DepthMap {
                path: Some(path.display().to_string()),
                message: format!("manifest line {}: expected 'image_id path'", ln + 1),
            })?;
        let rel = rel.trim();
        let mapped = PathBuf::from(rel);
        let resolved = if mapped.is_absolute() {
            mapped
        } else {
            base.join(mapped)
        };
        entries.push((id.to_string(), resolved));
    }
    Ok(entries)
}

/// Pixel-weighting scheme for the radially weighted average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialWeight {
    /// `w = 1 / (1 + r)`: strictly positive, so boundary pixels still
    /// contribute.
    #[default]
    InverseDistance,
    /// `w = (r_max - r + 1) / (r_max + 1)`: linear falloff, available for
    /// sensitivity checks.
    LinearTaper,
}

/// Mean and radially weighted depth of one object's box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectDepthEstimate<R> {
    pub mean_depth: R,
    pub rwa_depth: R,
    pub pixel_count: usize,
}

/// Arithmetic mean of the grid values inside the half-open box.
pub fn mean_depth<R: Real>(dm: &DepthMap<R>, box_: &BoundingBox) -> Result<R> {
    dm.check_box(box_)?;
    let mut sum = R::zero();
    for y in box_.y_min()..box_.y_max() {
        for x in box_.x_min()..box_.x_max() {
            sum = sum + dm.value(x, y);
        }
    }
    Ok(sum / R::from_u64(box_.area()).unwrap())
}

fn radius_to_centroid<R: Real>(box_: &BoundingBox, x: u32, y: u32) -> R {
    let half = R::from_f64_lossy(0.5);
    let (cx, cy) = box_.rect::<R>().centroid();
    let px = R::from_u32(x).unwrap() + half;
    let py = R::from_u32(y).unwrap() + half;
    (px - cx).hypot(py - cy)
}

/// Radially weighted mean with the given weighting scheme. Pixels are
/// sampled at cell centers; `r` is the distance from the pixel center to the
/// box centroid.
pub fn rwa_depth_weighted<R: Real>(
    dm: &DepthMap<R>,
    box_: &BoundingBox,
    weight: RadialWeight,
) -> Result<R> {
    dm.check_box(box_)?;
    let one = R::one();
    let r_max = match weight {
        RadialWeight::InverseDistance => R::zero(),
        RadialWeight::LinearTaper => {
            // The farthest pixel center from the centroid is at a corner.
            let mut m = R::zero();
            for (x, y) in [
                (box_.x_min(), box_.y_min()),
                (box_.x_max() - 1, box_.y_min()),
                (box_.x_min(), box_.y_max() - 1),
                (box_.x_max() - 1, box_.y_max() - 1),
            ] {
                m = m.max(radius_to_centroid(box_, x, y));
            }
            m
        }
    };
    let mut num = R::zero();
    let mut den = R::zero();
    for y in box_.y_min()..box_.y_max() {
        for x in box_.x_min()..box_.x_max() {
            let r = radius_to_centroid(box_, x, y);
            let w = match weight {
                RadialWeight::InverseDistance => one / (one + r),
                RadialWeight::LinearTaper => (r_max - r + one) / (r_max + one),
            };
            num = num + w * dm.value(x, y);
            den = den + w;
        }
    }
    Ok(num / den)
}

/// Radially weighted mean with the default inverse-distance weighting.
pub fn rwa_depth<R: Real>(dm: &DepthMap<R>, box_: &BoundingBox) -> Result<R> {
    rwa_depth_weighted(dm, box_, RadialWeight::InverseDistance)
}

/// Both aggregates for one box.
pub fn estimate_object_depth<R: Real>(
    dm: &DepthMap<R>,
    box_: &BoundingBox,
    weight: RadialWeight,
) -> Result<ObjectDepthEstimate<R>> {
    Ok(ObjectDepthEstimate {
        mean_depth: mean_depth(dm, box_)?,
        rwa_depth: rwa_depth_weighted(dm, box_, weight)?,
        pixel_count: box_.area() as usize,
    })
}

/// Smallest relative span of per-object aggregates that counts as a real
/// depth ordering; anything below is rounding noise from the aggregation
/// sums (a constant map can yield per-object values a few ulps apart).
const DEGENERATE_SPAN_EPS: f64 = 1e-9;

/// Affine min-max map of one image's per-object aggregates onto the human
/// annotation scale [1, 100]. `invert` flips the ordering first (for
/// disparity inputs where larger means nearer). A single estimate — or a set
/// of estimates with no meaningful spread — maps to the midpoint 50.
pub fn rescale_per_image<R: Real>(values: &[R], invert: bool) -> Vec<R> {
    let oriented: Vec<R> = values
        .iter()
        .map(|&v| if invert { -v } else { v })
        .collect();
    let lo = oriented.iter().copied().fold(R::infinity(), R::min);
    let hi = oriented.iter().copied().fold(R::neg_infinity(), R::max);
    let fifty = R::from_f64_lossy(50.0);
    let degenerate_span =
        hi - lo <= R::from_f64_lossy(DEGENERATE_SPAN_EPS) * lo.abs().max(hi.abs());
    if oriented.is_empty() || lo >= hi || degenerate_span {
        return vec![fifty; oriented.len()];
    }
    let one = R::one();
    let span = R::from_f64_lossy(99.0);
    oriented
        .into_iter()
        .map(|v| one + span * (v - lo) / (hi - lo))
        .collect()
}

/// The threshold rule of the annotation pipeline applied to rescaled real
/// depths: equal within the tolerance, otherwise the smaller value is in
/// front.
pub fn relative_from_continuous<R: Real>(d1: R, d2: R, t: DepthThreshold) -> RelClass {
    let tol = R::from_u8(t.0).unwrap();
    let diff = d1 - d2;
    if diff.abs() <= tol {
        RelClass::Equal
    } else if diff < R::zero() {
        RelClass::InFront
    } else {
        RelClass::Behind
    }
}

/// Agreement between two aligned relative depth labelings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgreementScore {
    pub accuracy: f64,
    pub pair_count: usize,
    pub confusion: ConfusionMatrix,
}

/// Fraction of aligned pairs on which the two labelings agree.
pub fn agreement(a: &[RelClass], b: &[RelClass]) -> Result<AgreementScore> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            context: "agreement label lists",
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Config("agreement of empty label lists".into()));
    }
    let ai: Vec<usize> = a.iter().map(|c| c.index()).collect();
    let bi: Vec<usize> = b.iter().map(|c| c.index()).collect();
    let confusion = crate::evaluation::confusion(&ai, &bi)?;
    Ok(AgreementScore {
        accuracy: confusion.accuracy()?,
        pair_count: a.len(),
        confusion,
    })
}

/// Relative depth classes of every valid pair of the covered images, from
/// three sources: the human scores and the two depth-map aggregations.
/// `row_indices` gives each pair's position in the dataset-wide valid-pair
/// ordering (the one `encoding::pair_rows` uses), so the lists can be
/// aligned with model predictions.
#[derive(Debug, Clone)]
pub struct PairClassSets {
    pub row_indices: Vec<usize>,
    pub human: Vec<RelClass>,
    pub from_mean: Vec<RelClass>,
    pub from_rwa: Vec<RelClass>,
    /// Images that had no depth map in the collection.
    pub uncovered_images: Vec<String>,
}

/// Derive pair classes at one threshold for every image with a depth map.
pub fn pair_class_sets<R: Real>(
    records: &[ImageRecord],
    maps: &BTreeMap<String, DepthMap<R>>,
    t: DepthThreshold,
    weight: RadialWeight,
) -> Result<PairClassSets> {
    let mut out = PairClassSets {
        row_indices: Vec::new(),
        human: Vec::new(),
        from_mean: Vec::new(),
        from_rwa: Vec::new(),
        uncovered_images: Vec::new(),
    };
    let mut row = 0usize;
    for rec in records {
        let valid = filter_valid(generate_pairs(rec));
        let Some(dm) = maps.get(&rec.image_id) else {
            out.uncovered_images.push(rec.image_id.clone());
            row += valid.len();
            continue;
        };
        if !dm.matches_dims(rec) {
            return Err(Error::DepthMap {
                path: None,
                message: format!(
                    "map for image '{}' is {}x{} but the annotation says {}x{}",
                    rec.image_id,
                    dm.width(),
                    dm.height(),
                    rec.dims.width(),
                    rec.dims.height()
                ),
            });
        }
        // Rescale over all annotated objects of the image, keyed by id.
        let mut ids = Vec::with_capacity(rec.objects.len());
        let mut means = Vec::with_capacity(rec.objects.len());
        let mut rwas = Vec::with_capacity(rec.objects.len());
        for obj in &rec.objects {
            let est = estimate_object_depth(dm, &obj.box_, weight)?;
            ids.push(obj.object_id.as_str());
            means.push(est.mean_depth);
            rwas.push(est.rwa_depth);
        }
        let means = rescale_per_image(&means, dm.invert);
        let rwas = rescale_per_image(&rwas, dm.invert);
        let scaled_of = |id: &str, scaled: &[R]| {
            let i = ids.iter().position(|&o| o == id).expect("object id exists");
            scaled[i]
        };
        for (a, b) in valid {
            out.row_indices.push(row);
            row += 1;
            out.human.push(crate::dataset::derive_class(
                a.depth.unwrap(),
                b.depth.unwrap(),
                t,
            ));
            out.from_mean.push(relative_from_continuous(
                scaled_of(&a.object_id, &means),
                scaled_of(&b.object_id, &means),
                t,
            ));
            out.from_rwa.push(relative_from_continuous(
                scaled_of(&a.object_id, &rwas),
                scaled_of(&b.object_id, &rwas),
                t,
            ));
        }
    }
    Ok(out)
}

/// Agreement of the two aggregation paths with the human labels at one
/// threshold.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DepthAgreementRow {
    pub threshold: u8,
    pub mean_agreement: f64,
    pub rwa_agreement: f64,
    pub pair_count: usize,
}

/// Table of agreement scores across thresholds (human labels vs depth-map
/// derived labels).
pub fn agreement_with_annotations<R: Real>(
    records: &[ImageRecord],
    maps: &BTreeMap<String, DepthMap<R>>,
    thresholds: &[DepthThreshold],
    weight: RadialWeight,
) -> Result<Vec<DepthAgreementRow>> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let sets = pair_class_sets(records, maps, t, weight)?;
        let mean = agreement(&sets.human, &sets.from_mean)?;
        let rwa = agreement(&sets.human, &sets.from_rwa)?;
        rows.push(DepthAgreementRow {
            threshold: t.0,
            mean_agreement: mean.accuracy,
            rwa_agreement: rwa.accuracy,
            pair_count: sets.human.len(),
        });
    }
    Ok(rows)
}
