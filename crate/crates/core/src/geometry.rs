//! Planar primitives shared by the whole pipeline.
//!
//! Coordinates are image coordinates: x grows rightward, y grows downward.
//! "Clockwise" always means clockwise on screen. In this frame a
//! screen-clockwise ring has positive signed area under the shoelace
//! formula, so the two notions can be checked against each other cheaply.

use thiserror::Error;

/// Points closer than this to a polygon edge are classified as on-boundary.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("polygon is degenerate (fewer than 3 vertices or zero area)")]
    DegeneratePolygon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Perp-dot product. Positive means `o` is clockwise (on screen) of `self`.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(self, o: Point2) -> f64 {
        self.sub(o).norm_sq()
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn mid(self, o: Point2) -> Point2 {
        Point2::new((self.x + o.x) / 2.0, (self.y + o.y) / 2.0)
    }
}

/// Orientation of the turn a->b->c: positive for a clockwise turn on screen.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// A simple polygon given by its vertex ring.
///
/// Rings produced by this module are ordered with positive signed area,
/// i.e. clockwise on screen.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; positive for screen-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            acc += v[i].cross(v[j]);
        }
        acc / 2.0
    }

    /// True for point/segment degenerations and for zero-area rings.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3 || self.signed_area().abs() <= f64::EPSILON * area_scale(&self.vertices)
    }
}

fn area_scale(pts: &[Point2]) -> f64 {
    let mut m = 1.0f64;
    for p in pts {
        m = m.max(p.x.abs()).max(p.y.abs());
    }
    m * m * pts.len() as f64
}

/// Convex hull by monotone chain.
///
/// Returns the hull ring ordered clockwise on screen (positive signed area).
/// Collinear interior points are dropped. Degenerate inputs collapse to a
/// single point or a two-point segment; callers can detect this through
/// [`Polygon::is_degenerate`].
pub fn convex_hull(points: &[Point2]) -> Result<Polygon, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite coordinates"));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);

    if pts.len() == 1 {
        return Ok(Polygon::new(pts));
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
    // Lower chain, then upper chain over the reversed order.
    for &p in pts.iter() {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(Polygon::new(hull))
}

/// Minimum-area oriented bounding box.
///
/// `axis` is the unit direction of the long side; `length >= width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Point2,
    pub axis: Point2,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Corner points of the box ring.
    pub fn corners(&self) -> [Point2; 4] {
        let u = self.axis.scale(self.length / 2.0);
        let v = Point2::new(-self.axis.y, self.axis.x).scale(self.width / 2.0);
        [
            self.center.add(u).add(v),
            self.center.add(u).sub(v),
            self.center.sub(u).sub(v),
            self.center.sub(u).add(v),
        ]
    }
}

/// Minimum-area oriented bounding box via the rotating-calipers property:
/// some side of the optimum is collinear with a hull edge, so it suffices to
/// scan hull-edge directions.
///
/// Projections are kept unnormalized while scanning so that scaling all
/// inputs by a power of two scales every compared quantity exactly and the
/// chosen edge never changes.
pub fn ombb(points: &[Point2]) -> Result<OrientedBox, GeometryError> {
    let hull = convex_hull(points)?;
    let h = hull.vertices();

    if h.len() == 1 {
        return Ok(OrientedBox { center: h[0], axis: Point2::new(1.0, 0.0), length: 0.0, width: 0.0 });
    }
    if h.len() == 2 {
        let d = h[1].sub(h[0]);
        let len = d.norm();
        return Ok(OrientedBox { center: h[0].mid(h[1]), axis: d.scale(1.0 / len), length: len, width: 0.0 });
    }

    // Best edge so far, compared by area without dividing: the raw extents
    // carry a factor |edge|^2, so areas are compared cross-multiplied.
    let mut best: Option<(usize, f64, f64)> = None; // (edge, raw area, |edge|^2)
    let mut best_spans = (0.0, 0.0, 0.0, 0.0);
    for i in 0..h.len() {
        let p0 = h[i];
        let u = h[(i + 1) % h.len()].sub(p0);
        let len2 = u.norm_sq();
        if len2 == 0.0 {
            continue;
        }
        let v = Point2::new(-u.y, u.x);
        let (mut smin, mut smax, mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &q in h {
            let d = q.sub(p0);
            let s = d.dot(u);
            let t = d.dot(v);
            smin = smin.min(s);
            smax = smax.max(s);
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        let raw_area = (smax - smin) * (tmax - tmin);
        let better = match best {
            None => true,
            Some((_, ba, bl2)) => raw_area * bl2 < ba * len2,
        };
        if better {
            best = Some((i, raw_area, len2));
            best_spans = (smin, smax, tmin, tmax);
        }
    }

    let (i, _, len2) = best.expect("non-degenerate hull has edges");
    let p0 = h[i];
    let u = h[(i + 1) % h.len()].sub(p0);
    let v = Point2::new(-u.y, u.x);
    let (smin, smax, tmin, tmax) = best_spans;
    let inv_len = 1.0 / len2.sqrt();
    let center = p0
        .add(u.scale((smin + smax) / (2.0 * len2)))
        .add(v.scale((tmin + tmax) / (2.0 * len2)));
    let mut length = (smax - smin) * inv_len;
    let mut width = (tmax - tmin) * inv_len;
    let mut axis = u.scale(inv_len);
    if width > length {
        std::mem::swap(&mut length, &mut width);
        axis = Point2::new(-axis.y, axis.x);
    }
    // Canonical axis sign so equal boxes compare equal.
    if axis.x < 0.0 || (axis.x == 0.0 && axis.y < 0.0) {
        axis = axis.scale(-1.0);
    }
    Ok(OrientedBox { center, axis, length, width })
}

/// Width-to-length ratio of a box, always in (0, 1].
///
/// Degenerate boxes stay scale-free: a coincident point set reports 1 and a
/// collinear one reports 0. An absolute floor on the width would tie the
/// ratio to pixel units and break the exact invariance of signatures under
/// coordinate rescaling.
pub fn aspect_ratio(b: &OrientedBox) -> f64 {
    if b.length == 0.0 {
        return 1.0;
    }
    b.width / b.length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    Outside,
    OnBoundary,
}

fn dist_sq_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.dist_sq(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist_sq(a.add(ab.scale(t)))
}

/// Even-odd point-in-polygon test with a tolerant boundary band.
///
/// Points within [`EDGE_TOLERANCE`] of some edge report on-boundary; all
/// others are classified exactly by ray casting. The polygon may be concave
/// but must be non-degenerate.
pub fn point_in_polygon(p: Point2, poly: &Polygon) -> Result<PointLocation, GeometryError> {
    if poly.is_degenerate() {
        return Err(GeometryError::DegeneratePolygon);
    }
    let v = poly.vertices();
    let tol2 = EDGE_TOLERANCE * EDGE_TOLERANCE;
    for i in 0..v.len() {
        let j = (i + 1) % v.len();
        if dist_sq_to_segment(p, v[i], v[j]) <= tol2 {
            return Ok(PointLocation::OnBoundary);
        }
    }
    let mut inside = false;
    for i in 0..v.len() {
        let j = (i + 1) % v.len();
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    Ok(if inside { PointLocation::Inside } else { PointLocation::Outside })
}
