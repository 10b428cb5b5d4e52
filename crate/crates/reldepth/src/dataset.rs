//! Annotated-image ingestion, ordered pair generation and 3-way relative
//! depth class derivation.
//!
//! Depth annotations are integers on a 1..=100 scale where 1 is the nearest
//! foreground and 100 the farthest background, or unspecified. The class of
//! an ordered pair compares the two depth scores under a tolerance
//! threshold.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, ImageDims};

/// Smallest valid depth score (nearest foreground).
pub const DEPTH_MIN: u8 = 1;
/// Largest valid depth score (farthest background).
pub const DEPTH_MAX: u8 = 100;

/// A smaller depth score means nearer to the camera, so the object with the
/// smaller score is in front. Kept as one constant so the polarity can be
/// flipped if a data source disagrees.
pub const SMALLER_DEPTH_IS_NEARER: bool = true;

/// 3-way relative depth relation of an ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelClass {
    /// Object 1 is in front of object 2.
    InFront = 0,
    /// The two objects are within the tolerance threshold of each other.
    Equal = 1,
    /// Object 1 is behind object 2.
    Behind = 2,
}

/// Number of relative depth classes.
pub const CLASS_COUNT: usize = 3;

impl RelClass {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<RelClass> {
        match i {
            0 => Some(RelClass::InFront),
            1 => Some(RelClass::Equal),
            2 => Some(RelClass::Behind),
            _ => None,
        }
    }

    /// The class of the same pair in the opposite order.
    pub fn mirrored(self) -> RelClass {
        match self {
            RelClass::InFront => RelClass::Behind,
            RelClass::Equal => RelClass::Equal,
            RelClass::Behind => RelClass::InFront,
        }
    }
}

impl fmt::Display for RelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelClass::InFront => "in_front",
            RelClass::Equal => "equal",
            RelClass::Behind => "behind",
        };
        f.write_str(s)
    }
}

/// Tolerance on the absolute depth difference within which a pair counts as
/// equal-depth.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct DepthThreshold(pub u8);

impl fmt::Display for DepthThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One annotated object in an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAnnotation {
    pub object_id: String,
    pub label: String,
    pub box_: BoundingBox,
    /// Depth score in [1, 100]; `None` when annotated as unspecified.
    pub depth: Option<u8>,
    pub pose: String,
    pub occluded: bool,
    pub truncated: bool,
    pub difficult: bool,
}

/// One annotated image with its objects and precomputed scene category.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub dims: ImageDims,
    pub objects: Vec<ObjectAnnotation>,
    pub scene_label: String,
    pub scene_confidence: Option<f64>,
}

/// Ordered object pair with its derived relative depth class.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInstance {
    pub image_id: String,
    pub obj1: ObjectAnnotation,
    pub obj2: ObjectAnnotation,
    pub relative_class: RelClass,
}

/// Parsing behavior toggles.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept a depth score of 0 and clamp it to 1 instead of rejecting the
    /// object. Each clamp is logged.
    pub lenient_depth: bool,
}

// Raw serde mirror of the annotation document; validated into domain types
// after deserialization so error messages can carry image/object context.
#[derive(Deserialize)]
struct RawDataset {
    images: Vec<RawImage>,
}

#[derive(Deserialize)]
struct RawImage {
    id: String,
    width: u32,
    height: u32,
    scene_label: String,
    #[serde(default)]
    scene_confidence: Option<f64>,
    objects: Vec<RawObject>,
}

#[derive(Deserialize)]
struct RawObject {
    id: String,
    label: String,
    #[serde(rename = "box")]
    box_: RawBox,
    depth: RawDepth,
    pose: String,
    occluded: bool,
    truncated: bool,
    difficult: bool,
}

#[derive(Deserialize)]
struct RawBox {
    x_min: u32,
    y_min: u32,
    x_max: u32,
    y_max: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDepth {
    Score(i64),
    Text(String),
}

fn annotation_error(
    image_id: &str,
    object_id: Option<&str>,
    field: &'static str,
    message: String,
) -> Error {
    Error::Annotation {
        image_id: image_id.to_string(),
        object_id: object_id.map(str::to_string),
        field,
        message,
    }
}

/// Parse and validate an annotation file (see the crate README for the
/// document schema). Objects whose depth is annotated `"Unspecified"` are
/// kept with `depth = None`.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<Vec<ImageRecord>> {
    parse_annotations_with(path, ParseOptions::default())
}

pub fn parse_annotations_with(
    path: impl AsRef<Path>,
    opts: ParseOptions,
) -> Result<Vec<ImageRecord>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_annotations_str(&text, opts)
}

pub fn parse_annotations_str(text: &str, opts: ParseOptions) -> Result<Vec<ImageRecord>> {
    let raw: RawDataset = serde_json::from_str(text)?;
    let mut records = Vec::with_capacity(raw.images.len());
    for img in raw.images {
        records.push(validate_image(img, opts)?);
    }
    Ok(records)
}

fn validate_image(img: RawImage, opts: ParseOptions) -> Result<ImageRecord> {
    let dims = ImageDims::new(img.width, img.height)
        .map_err(|e| annotation_error(&img.id, None, "width/height", e.to_string()))?;
    if img.objects.is_empty() {
        return Err(annotation_error(
            &img.id,
            None,
            "objects",
            "image has no objects".into(),
        ));
    }
    if let Some(c) = img.scene_confidence {
        if !(0.0..=1.0).contains(&c) {
            return Err(annotation_error(
                &img.id,
                None,
                "scene_confidence",
                format!("must lie in [0,1], got {c}"),
            ));
        }
    }
    let mut objects = Vec::with_capacity(img.objects.len());
    for obj in img.objects {
        let box_ = BoundingBox::new(
            obj.box_.x_min,
            obj.box_.y_min,
            obj.box_.x_max,
            obj.box_.y_max,
        )
        .map_err(|e| annotation_error(&img.id, Some(&obj.id), "box", e.to_string()))?;
        if !box_.fits_within(dims) {
            return Err(annotation_error(
                &img.id,
                Some(&obj.id),
                "box",
                format!(
                    "box ({},{},{},{}) exceeds image {}x{}",
                    box_.x_min(),
                    box_.y_min(),
                    box_.x_max(),
                    box_.y_max(),
                    img.width,
                    img.height
                ),
            ));
        }
        let depth = validate_depth(&obj.depth, &img.id, &obj.id, opts)?;
        if obj.label.is_empty() {
            return Err(annotation_error(
                &img.id,
                Some(&obj.id),
                "label",
                "label must be non-empty".into(),
            ));
        }
        objects.push(ObjectAnnotation {
            object_id: obj.id,
            label: obj.label,
            box_,
            depth,
            pose: obj.pose,
            occluded: obj.occluded,
            truncated: obj.truncated,
            difficult: obj.difficult,
        });
    }
    Ok(ImageRecord {
        image_id: img.id,
        dims,
        objects,
        scene_label: img.scene_label,
        scene_confidence: img.scene_confidence,
    })
}

fn validate_depth(
    raw: &RawDepth,
    image_id: &str,
    object_id: &str,
    opts: ParseOptions,
) -> Result<Option<u8>> {
    match raw {
        RawDepth::Text(s) if s == "Unspecified" => Ok(None),
        RawDepth::Text(s) => Err(annotation_error(
            image_id,
            Some(object_id),
            "depth",
            format!("expected an integer in [1,100] or \"Unspecified\", got \"{s}\""),
        )),
        RawDepth::Score(0) if opts.lenient_depth => {
            log::warn!("image '{image_id}' object '{object_id}': depth 0 clamped to 1");
            Ok(Some(DEPTH_MIN))
        }
        RawDepth::Score(v) if (i64::from(DEPTH_MIN)..=i64::from(DEPTH_MAX)).contains(v) => {
            Ok(Some(*v as u8))
        }
        RawDepth::Score(v) => Err(annotation_error(
            image_id,
            Some(object_id),
            "depth",
            format!("depth {v} outside [1,100]"),
        )),
    }
}

/// All ordered pairs of distinct objects: `n * (n - 1)` pairs for `n`
/// objects. Objects are visited sorted by id, first element in the outer
/// loop, so the order is reproducible.
pub fn generate_pairs(rec: &ImageRecord) -> Vec<(&ObjectAnnotation, &ObjectAnnotation)> {
    let mut sorted: Vec<&ObjectAnnotation> = rec.objects.iter().collect();
    sorted.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    let mut pairs = Vec::with_capacity(sorted.len() * sorted.len().saturating_sub(1));
    for a in &sorted {
        for b in &sorted {
            if a.object_id != b.object_id {
                pairs.push((*a, *b));
            }
        }
    }
    pairs
}

/// Keep only the pairs in which both objects carry a specified depth.
pub fn filter_valid<'a>(
    pairs: Vec<(&'a ObjectAnnotation, &'a ObjectAnnotation)>,
) -> Vec<(&'a ObjectAnnotation, &'a ObjectAnnotation)> {
    pairs
        .into_iter()
        .filter(|(a, b)| a.depth.is_some() && b.depth.is_some())
        .collect()
}

/// Relative depth class of an ordered pair of depth scores under a
/// threshold: equal when within the tolerance, otherwise the object with the
/// smaller score is in front.
pub fn derive_class(d1: u8, d2: u8, t: DepthThreshold) -> RelClass {
    debug_assert!((DEPTH_MIN..=DEPTH_MAX).contains(&d1));
    debug_assert!((DEPTH_MIN..=DEPTH_MAX).contains(&d2));
    let diff = i16::from(d1) - i16::from(d2);
    let tol = i16::from(t.0);
    if diff.abs() <= tol {
        RelClass::Equal
    } else if (diff < 0) == SMALLER_DEPTH_IS_NEARER {
        RelClass::InFront
    } else {
        RelClass::Behind
    }
}

/// Valid labeled pairs of one image at the given threshold.
pub fn labeled_pairs(rec: &ImageRecord, t: DepthThreshold) -> Vec<PairInstance> {
    filter_valid(generate_pairs(rec))
        .into_iter()
        .map(|(a, b)| PairInstance {
            image_id: rec.image_id.clone(),
            obj1: a.clone(),
            obj2: b.clone(),
            relative_class: derive_class(a.depth.unwrap(), b.depth.unwrap(), t),
        })
        .collect()
}

/// Per-class counts and fractions of a label list.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; CLASS_COUNT],
    /// `None` when the list was empty.
    pub fractions: Option<[f64; CLASS_COUNT]>,
    pub total: usize,
}

pub fn class_distribution(classes: impl IntoIterator<Item = RelClass>) -> ClassDistribution {
    let mut counts = [0usize; CLASS_COUNT];
    let mut total = 0usize;
    for c in classes {
        counts[c.index()] += 1;
        total += 1;
    }
    let fractions = (total > 0).then(|| {
        let mut f = [0.0; CLASS_COUNT];
        for (fi, ci) in f.iter_mut().zip(counts.iter()) {
            *fi = *ci as f64 / total as f64;
        }
        f
    });
    ClassDistribution {
        counts,
        fractions,
        total,
    }
}
