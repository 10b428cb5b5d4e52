//! Bounding-box primitives and the geometric feature family for an ordered
//! object pair.
//!
//! Boxes are half-open integer rectangles: a box `(x_min, y_min, x_max,
//! y_max)` covers the pixel grid cells with `x_min <= x < x_max` and
//! `y_min <= y < y_max`, so `width = x_max - x_min`. Feature math runs on
//! real-valued [`Rect`]s so the same code serves integer annotation boxes and
//! the continuous rectangles used by scale-invariance checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    width: u32,
    height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }
}

/// Axis-aligned pixel rectangle with strictly positive width and height,
/// half-open on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    x_min: u32,
    y_min: u32,
    x_max: u32,
    y_max: u32,
}

impl BoundingBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self> {
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::Geometry(format!(
                "degenerate box ({x_min},{y_min},{x_max},{y_max}): width and height must be positive"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> u32 {
        self.x_min
    }

    pub fn y_min(&self) -> u32 {
        self.y_min
    }

    pub fn x_max(&self) -> u32 {
        self.x_max
    }

    pub fn y_max(&self) -> u32 {
        self.y_max
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Whether the box lies fully inside an image of the given dimensions.
    pub fn fits_within(&self, dims: ImageDims) -> bool {
        self.x_max <= dims.width && self.y_max <= dims.height
    }

    /// Whether the pixel at integer coordinates (x, y) lies inside the box.
    pub fn contains_pixel(&self, x: u32, y: u32) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn rect<R: Real>(&self) -> Rect<R> {
        Rect {
            x_min: R::from_u32(self.x_min).unwrap(),
            y_min: R::from_u32(self.y_min).unwrap(),
            x_max: R::from_u32(self.x_max).unwrap(),
            y_max: R::from_u32(self.y_max).unwrap(),
        }
    }
}

/// Real-valued axis-aligned rectangle. Carries the same half-open reading as
/// [`BoundingBox`]; callers must keep `x_max > x_min` and `y_max > y_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<R> {
    pub x_min: R,
    pub y_min: R,
    pub x_max: R,
    pub y_max: R,
}

impl<R: Real> Rect<R> {
    pub fn width(&self) -> R {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> R {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> R {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> (R, R) {
        let two = R::from_f64_lossy(2.0);
        (
            (self.x_min + self.x_max) / two,
            (self.y_min + self.y_max) / two,
        )
    }

    pub fn diagonal(&self) -> R {
        self.width().hypot(self.height())
    }

    /// Uniformly scale all coordinates by a positive factor.
    pub fn scaled(&self, factor: R) -> Rect<R> {
        Rect {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }
}

/// Overlap area of two rectangles; zero when disjoint.
pub fn rect_intersection_area<R: Real>(a: &Rect<R>, b: &Rect<R>) -> R {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(R::zero());
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(R::zero());
    w * h
}

/// Smallest rectangle enclosing both inputs.
pub fn enclosing_rect<R: Real>(a: &Rect<R>, b: &Rect<R>) -> Rect<R> {
    Rect {
        x_min: a.x_min.min(b.x_min),
        y_min: a.y_min.min(b.y_min),
        x_max: a.x_max.max(b.x_max),
        y_max: a.y_max.max(b.y_max),
    }
}

/// Euclidean distance between the closest points of two rectangles treated
/// as solid regions; zero when they intersect or touch.
pub fn rect_distance<R: Real>(a: &Rect<R>, b: &Rect<R>) -> R {
    let dx = (b.x_min - a.x_max).max(a.x_min - b.x_max).max(R::zero());
    let dy = (b.y_min - a.y_max).max(a.y_min - b.y_max).max(R::zero());
    dx.hypot(dy)
}

/// Overlap area of two boxes in square pixels.
pub fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    rect_intersection_area(&a.rect::<f64>(), &b.rect::<f64>())
}

/// Smallest axis-aligned box containing both inputs.
pub fn union_box(a: &BoundingBox, b: &BoundingBox) -> BoundingBox {
    BoundingBox {
        x_min: a.x_min.min(b.x_min),
        y_min: a.y_min.min(b.y_min),
        x_max: a.x_max.max(b.x_max),
        y_max: a.y_max.max(b.y_max),
    }
}

/// Euclidean distance in pixels between the closest points of two boxes.
pub fn min_box_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    rect_distance(&a.rect::<f64>(), &b.rect::<f64>())
}

/// How a feature responds when the two objects of the pair are swapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapRule {
    /// Value is unchanged.
    Invariant,
    /// Value moves to the feature at the given catalog index (and vice versa).
    Exchange(usize),
    /// Value becomes its reciprocal.
    Invert,
    /// Value is negated.
    Negate,
}

/// Catalog entry for one geometric feature.
#[derive(Debug, Clone, Copy)]
pub struct FeatureDef {
    pub name: &'static str,
    pub swap: SwapRule,
    /// Guaranteed to lie in [0, 1] for any valid input pair.
    pub in_unit_interval: bool,
    /// Unchanged when boxes and image are uniformly scaled by a positive
    /// factor. The two min-limit ratios carry a +1 pixel offset and are the
    /// only exceptions.
    pub scale_invariant: bool,
}

const fn def(
    name: &'static str,
    swap: SwapRule,
    in_unit_interval: bool,
    scale_invariant: bool,
) -> FeatureDef {
    FeatureDef {
        name,
        swap,
        in_unit_interval,
        scale_invariant,
    }
}

use SwapRule::{Exchange, Invariant, Invert, Negate};

/// Fixed enumeration of the geometric features, in output order.
pub const FEATURES: [FeatureDef; 32] = [
    def("area1_over_image", Exchange(1), true, true),
    def("area2_over_image", Exchange(0), true, true),
    def("area1_over_union_box", Exchange(3), true, true),
    def("area2_over_union_box", Exchange(2), true, true),
    def("overlap_over_min_area", Invariant, true, true),
    def("overlap_over_image", Invariant, true, true),
    def("overlap_over_total_area", Invariant, true, true),
    def("overlap_over_union_box", Invariant, true, true),
    def("aspect1", Exchange(9), false, true),
    def("aspect2", Exchange(8), false, true),
    def("centroid_dist_over_image_diag", Invariant, true, true),
    def("centroid_dist_over_union_diag", Invariant, true, true),
    def("centroid_dist_over_union_width", Invariant, false, true),
    def("centroid_dist_over_union_height", Invariant, false, true),
    def("centroid_dist_over_diag1", Exchange(15), false, true),
    def("centroid_dist_over_diag2", Exchange(14), false, true),
    def("box_dist_over_sqrt_union_area", Invariant, false, true),
    def("box_dist_over_sqrt_image_area", Invariant, false, true),
    def("x_min_ratio", Invert, false, false),
    def("y_min_ratio", Invert, false, false),
    def("x_max_ratio", Invert, false, true),
    def("y_max_ratio", Invert, false, true),
    def("area_max_over_min", Invariant, false, true),
    def("area1_over_area2", Invert, false, true),
    def("dx_sign", Negate, false, true),
    def("dy_sign", Negate, false, true),
    def("dx_over_image_width", Negate, false, true),
    def("dy_over_image_height", Negate, false, true),
    def("dx_over_union_width", Negate, false, true),
    def("dy_over_union_height", Negate, false, true),
    def("unit_dx", Negate, false, true),
    def("unit_dy", Negate, false, true),
];

/// Number of geometric features per pair.
pub const FEATURE_COUNT: usize = FEATURES.len();

/// Geometric feature vector for one ordered pair, in [`FEATURES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricFeatures<R> {
    values: Vec<R>,
}

impl<R: Real> GeometricFeatures<R> {
    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<R> {
        FEATURES
            .iter()
            .position(|d| d.name == name)
            .map(|i| self.values[i])
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        FEATURES.iter().map(|d| d.name)
    }
}

fn sign_of<R: Real>(v: R) -> R {
    if v > R::zero() {
        R::one()
    } else if v < R::zero() {
        -R::one()
    } else {
        R::zero()
    }
}

/// Compute the full geometric feature vector for an ordered pair of boxes
/// inside an image.
pub fn extract_geometric_features<R: Real>(
    obj1: &BoundingBox,
    obj2: &BoundingBox,
    img: ImageDims,
) -> Result<GeometricFeatures<R>> {
    for (idx, b) in [obj1, obj2].into_iter().enumerate() {
        if !b.fits_within(img) {
            return Err(Error::Geometry(format!(
                "object {} box ({},{},{},{}) exceeds image {}x{}",
                idx + 1,
                b.x_min,
                b.y_min,
                b.x_max,
                b.y_max,
                img.width,
                img.height
            )));
        }
    }
    let w = R::from_u32(img.width).unwrap();
    let h = R::from_u32(img.height).unwrap();
    Ok(features_from_rects(&obj1.rect(), &obj2.rect(), w, h))
}

/// Real-valued core of [`extract_geometric_features`]. The rectangles must be
/// non-degenerate and lie inside the `img_w` x `img_h` frame.
pub fn features_from_rects<R: Real>(
    r1: &Rect<R>,
    r2: &Rect<R>,
    img_w: R,
    img_h: R,
) -> GeometricFeatures<R> {
    let one = R::one();
    let area1 = r1.area();
    let area2 = r2.area();
    let img_area = img_w * img_h;
    let img_diag = img_w.hypot(img_h);

    let union = enclosing_rect(r1, r2);
    let union_area = union.area();
    let union_w = union.width();
    let union_h = union.height();
    let union_diag = union.diagonal();

    let overlap = rect_intersection_area(r1, r2);

    let (c1x, c1y) = r1.centroid();
    let (c2x, c2y) = r2.centroid();
    let dx = c1x - c2x;
    let dy = c1y - c2y;
    let dist = dx.hypot(dy);

    let box_dist = rect_distance(r1, r2);

    let (unit_dx, unit_dy) = if dist > R::zero() {
        (dx / dist, dy / dist)
    } else {
        // Coincident centroids: the direction is undefined, encode as (0,0).
        (R::zero(), R::zero())
    };

    let values = vec![
        area1 / img_area,
        area2 / img_area,
        area1 / union_area,
        area2 / union_area,
        overlap / area1.min(area2),
        overlap / img_area,
        overlap / (area1 + area2),
        overlap / union_area,
        r1.width() / r1.height(),
        r2.width() / r2.height(),
        dist / img_diag,
        dist / union_diag,
        dist / union_w,
        dist / union_h,
        dist / r1.diagonal(),
        dist / r2.diagonal(),
        box_dist / union_area.sqrt(),
        box_dist / img_area.sqrt(),
        (r1.x_min + one) / (r2.x_min + one),
        (r1.y_min + one) / (r2.y_min + one),
        r1.x_max / r2.x_max,
        r1.y_max / r2.y_max,
        area1.max(area2) / area1.min(area2),
        area1 / area2,
        sign_of(dx),
        sign_of(dy),
        dx / img_w,
        dy / img_h,
        dx / union_w,
        dy / union_h,
        unit_dx,
        unit_dy,
    ];
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    GeometricFeatures { values }
}
