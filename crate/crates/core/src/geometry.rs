//! Exact planar primitives: points, segments, axis-aligned boxes, the
//! closest-point computations between them, and closed-form tube volumes.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Error;

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector at angle `theta` (radians, counterclockwise from +x).
    pub fn polar(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// A closed segment; `a == b` is a degenerate (point) segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Nearest point of the segment to `p`.
    pub fn closest_point(&self, p: Point) -> Point {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn translate(&self, t: Point) -> Segment {
        Segment::new(self.a + t, self.b + t)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisBox {
    pub min: Point,
    pub max: Point,
}

impl AxisBox {
    /// Builds a box, rejecting inverted or non-finite corners.
    pub fn new(min: Point, max: Point) -> Result<Self, Error> {
        if !min.is_finite() || !max.is_finite() || min.x > max.x || min.y > max.y {
            return Err(Error::InvalidInput(format!(
                "box corners must be finite with min <= max, got ({}, {})..({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(AxisBox { min, max })
    }

    pub fn square(center: Point, half: f64) -> Self {
        AxisBox {
            min: Point::new(center.x - half, center.y - half),
            max: Point::new(center.x + half, center.y + half),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        (self.min + self.max) * 0.5
    }

    pub fn diameter(&self) -> f64 {
        self.min.dist(self.max)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, o: &AxisBox) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
    }

    pub fn pad(&self, r: f64) -> AxisBox {
        AxisBox {
            min: Point::new(self.min.x - r, self.min.y - r),
            max: Point::new(self.max.x + r, self.max.y + r),
        }
    }

    pub fn union(&self, o: &AxisBox) -> AxisBox {
        AxisBox {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn closest_point(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }

    pub fn edges(&self) -> [Segment; 4] {
        let c = self.corners();
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }

    pub fn translate(&self, t: Point) -> AxisBox {
        AxisBox {
            min: self.min + t,
            max: self.max + t,
        }
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn dist_point(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }
}

/// One piece of a stitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Segment(Segment),
    Box(AxisBox),
}

impl Component {
    pub fn translate(&self, t: Point) -> Component {
        match self {
            Component::Segment(s) => Component::Segment(s.translate(t)),
            Component::Box(b) => Component::Box(b.translate(t)),
        }
    }

    pub fn bbox(&self) -> AxisBox {
        match self {
            Component::Segment(s) => AxisBox {
                min: Point::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y)),
                max: Point::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y)),
            },
            Component::Box(b) => *b,
        }
    }

    /// Extreme points whose convex hull is the component.
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Component::Segment(s) => vec![s.a, s.b],
            Component::Box(b) => b.corners().to_vec(),
        }
    }

    pub fn closest_point(&self, p: Point) -> Point {
        match self {
            Component::Segment(s) => s.closest_point(p),
            Component::Box(b) => b.closest_point(p),
        }
    }

    pub fn dist_point(&self, p: Point) -> f64 {
        match self {
            Component::Segment(s) => dist_point_segment(p, s),
            Component::Box(b) => b.dist_point(p),
        }
    }
}

/// Distance from `p` to the closed segment `s`.
pub fn dist_point_segment(p: Point, s: &Segment) -> f64 {
    p.dist(s.closest_point(p))
}

/// A nearest pair between two sets: `(distance, point on first, point on second)`.
pub type ClosestPair = (f64, Point, Point);

fn segment_segment(s1: &Segment, s2: &Segment) -> ClosestPair {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let denom = d1.cross(d2);
    if denom != 0.0 {
        let w = s2.a - s1.a;
        let s = w.cross(d2) / denom;
        let t = w.cross(d1) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            let p = s1.a + d1 * s;
            return (0.0, p, p);
        }
    }
    let mut best: ClosestPair = (f64::INFINITY, s1.a, s2.a);
    for (p, on_first) in [(s1.a, true), (s1.b, true), (s2.a, false), (s2.b, false)] {
        let (q, d) = if on_first {
            let q = s2.closest_point(p);
            (q, p.dist(q))
        } else {
            let q = s1.closest_point(p);
            (q, p.dist(q))
        };
        if d < best.0 {
            best = if on_first { (d, p, q) } else { (d, q, p) };
        }
    }
    best
}

fn segment_box(s: &Segment, b: &AxisBox) -> ClosestPair {
    for p in [s.a, s.b] {
        if b.contains(p) {
            return (0.0, p, p);
        }
    }
    let mut best: ClosestPair = (f64::INFINITY, s.a, b.min);
    for e in b.edges() {
        let cand = segment_segment(s, &e);
        if cand.0 < best.0 {
            best = cand;
        }
    }
    best
}

fn box_box(a: &AxisBox, b: &AxisBox) -> ClosestPair {
    fn axis(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> (f64, f64) {
        if hi1 < lo2 {
            (hi1, lo2)
        } else if hi2 < lo1 {
            (lo1, hi2)
        } else {
            let c = lo1.max(lo2);
            (c, c)
        }
    }
    let (ax, bx) = axis(a.min.x, a.max.x, b.min.x, b.max.x);
    let (ay, by) = axis(a.min.y, a.max.y, b.min.y, b.max.y);
    let pa = Point::new(ax, ay);
    let pb = Point::new(bx, by);
    (pa.dist(pb), pa, pb)
}

/// Exact nearest pair between two components.
pub fn closest_pair(a: &Component, b: &Component) -> ClosestPair {
    match (a, b) {
        (Component::Segment(s1), Component::Segment(s2)) => segment_segment(s1, s2),
        (Component::Segment(s), Component::Box(bx)) => segment_box(s, bx),
        (Component::Box(bx), Component::Segment(s)) => {
            let (d, p, q) = segment_box(s, bx);
            (d, q, p)
        }
        (Component::Box(b1), Component::Box(b2)) => box_box(b1, b2),
    }
}

/// Exact nearest pair between two finite unions of components.
pub fn closest_pair_sets(a: &[Component], b: &[Component]) -> ClosestPair {
    let mut best: ClosestPair = (f64::INFINITY, Point::ORIGIN, Point::ORIGIN);
    for ca in a {
        for cb in b {
            let cand = closest_pair(ca, cb);
            if cand.0 < best.0 {
                best = cand;
                if best.0 == 0.0 {
                    return best;
                }
            }
        }
    }
    best
}

/// Set distance `min |z - z'|` between two finite unions of components.
pub fn dist_set_set(a: &[Component], b: &[Component]) -> f64 {
    closest_pair_sets(a, b).0
}

/// Nearest point of a union of components to `p`, with its distance.
pub fn closest_point_set(set: &[Component], p: Point) -> (f64, Point) {
    let mut best = (f64::INFINITY, p);
    for c in set {
        let q = c.closest_point(p);
        let d = p.dist(q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best
}

pub fn dist_point_set(set: &[Component], p: Point) -> f64 {
    set.iter()
        .map(|c| c.dist_point(p))
        .fold(f64::INFINITY, f64::min)
}

/// Largest distance between two points of the union (the diameter of its hull).
pub fn set_diameter(set: &[Component]) -> f64 {
    let verts: Vec<Point> = set.iter().flat_map(|c| c.vertices()).collect();
    let mut d: f64 = 0.0;
    for (i, p) in verts.iter().enumerate() {
        for q in &verts[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

pub fn set_bbox(set: &[Component]) -> AxisBox {
    let mut it = set.iter().map(|c| c.bbox());
    let first = it.next().expect("nonempty component list");
    it.fold(first, |acc, b| acc.union(&b))
}

/// Volume of the unit ball in dimension `n`, with the convention `omega(0) = 2`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            // omega_n = omega_{n-2} * 2 pi / n
            unit_ball_volume(n - 2) * 2.0 * PI / n as f64
        }
    }
}

/// Volume `omega_N eps^N + omega_{N-1} eps^{N-1} L` of the eps-tube around a
/// segment of length `length` in dimension `dim`.
pub fn tube_volume(length: f64, eps: f64, dim: usize) -> Result<f64, Error> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tube radius must be positive, got {eps}"
        )));
    }
    if !(length >= 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!(
            "segment length must be nonnegative, got {length}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!(
            "tube volume supports dimensions 1..=3, got {dim}"
        )));
    }
    let n = dim as i32;
    Ok(unit_ball_volume(dim) * eps.powi(n) + unit_ball_volume(dim - 1) * eps.powi(n - 1) * length)
}
