//! Planar norms: closed-form built-ins and polygon gauges (Minkowski
//! functionals of origin-symmetric convex polygons), with the comparison
//! constants against the Euclidean norm.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::{Error, Result};

/// Polygon gauge `F(v) = inf{t > 0 : v/t ∈ P}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    vertices: Vec<Point>,
    /// Per edge: outward normal scaled so that `F(v) = max(normal · v)`.
    facets: Vec<Point>,
}

impl Gauge {
    /// Gauge of an origin-symmetric convex polygon given counterclockwise.
    pub fn new(vertices: Vec<Point>) -> Result<Gauge> {
        let g = Gauge::from_ccw(vertices)?;
        let scale = g.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for v in &g.vertices {
            let m = -*v;
            if !g
                .vertices
                .iter()
                .any(|w| w.dist(m) <= 1e-12 * scale.max(1.0))
            {
                return Err(Error::InvalidInput(format!(
                    "gauge polygon is not origin-symmetric: no vertex opposite ({}, {})",
                    v.x, v.y
                )));
            }
        }
        Ok(g)
    }

    /// Gauge of the convex hull of `points` (no symmetry requirement).
    pub fn hull_of(points: &[Point]) -> Result<Gauge> {
        Gauge::from_ccw(convex_hull(points))
    }

    fn from_ccw(vertices: Vec<Point>) -> Result<Gauge> {
        let n = vertices.len();
        if n < 3 || vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "gauge polygon needs at least 3 finite vertices".into(),
            ));
        }
        let mut facets = Vec::with_capacity(n);
        for k in 0..n {
            let a = vertices[k];
            let b = vertices[(k + 1) % n];
            let c = vertices[(k + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::InvalidInput(
                    "gauge polygon must be strictly convex and counterclockwise".into(),
                ));
            }
            let e = b - a;
            let normal = Point::new(e.y, -e.x);
            let offset = normal.dot(a);
            if !(offset > 0.0) {
                return Err(Error::InvalidInput(
                    "gauge polygon must contain the origin in its interior".into(),
                ));
            }
            facets.push(normal * (1.0 / offset));
        }
        Ok(Gauge { vertices, facets })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn eval(&self, v: Point) -> f64 {
        self.facets.iter().map(|f| f.dot(v)).fold(0.0, f64::max)
    }

    /// The edge `(k, k+1)` whose cone contains direction `v`.
    pub fn facet_of(&self, v: Point) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, f) in self.facets.iter().enumerate() {
            let s = f.dot(v);
            if s > best.0 {
                best = (s, k);
            }
        }
        best.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    Euclidean,
    /// `(|x| + |y|) / divisor`.
    ScaledL1 {
        divisor: f64,
    },
    /// `(|x| + |y|) / 3`.
    FPlus,
    /// `(|x| + |y|) / 2`.
    FT,
    /// `2√2 min(|x|/3, |y|/3) + 2 ||x|/3 - |y|/3|`: a regular octagon of radius 3/2.
    FSquare,
    Gauge(Gauge),
}

impl NormSpec {
    /// Parses `euclidean`, `f_plus`, `f_T`, `f_square` or `scaled_l1:<divisor>`.
    pub fn parse(s: &str) -> Result<NormSpec> {
        match s {
            "euclidean" => Ok(NormSpec::Euclidean),
            "f_plus" => Ok(NormSpec::FPlus),
            "f_T" => Ok(NormSpec::FT),
            "f_square" => Ok(NormSpec::FSquare),
            _ => match s.strip_prefix("scaled_l1:") {
                Some(d) => {
                    let divisor: f64 = d
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad scaled_l1 divisor `{d}`")))?;
                    NormSpec::scaled_l1(divisor)
                }
                None => Err(Error::InvalidInput(format!("unknown norm `{s}`"))),
            },
        }
    }

    pub fn scaled_l1(divisor: f64) -> Result<NormSpec> {
        if !(divisor > 0.0) || !divisor.is_finite() {
            return Err(Error::InvalidInput(format!(
                "divisor must be positive, got {divisor}"
            )));
        }
        Ok(NormSpec::ScaledL1 { divisor })
    }

    pub fn name(&self) -> String {
        match self {
            NormSpec::Euclidean => "euclidean".into(),
            NormSpec::ScaledL1 { divisor } => format!("scaled_l1:{divisor}"),
            NormSpec::FPlus => "f_plus".into(),
            NormSpec::FT => "f_T".into(),
            NormSpec::FSquare => "f_square".into(),
            NormSpec::Gauge(_) => "polygon_gauge".into(),
        }
    }

    pub fn eval(&self, v: Point) -> f64 {
        match self {
            NormSpec::Euclidean => v.norm(),
            NormSpec::ScaledL1 { divisor } => (v.x.abs() + v.y.abs()) / divisor,
            NormSpec::FPlus => (v.x.abs() + v.y.abs()) / 3.0,
            NormSpec::FT => (v.x.abs() + v.y.abs()) / 2.0,
            NormSpec::FSquare => {
                let (a, b) = (v.x.abs() / 3.0, v.y.abs() / 3.0);
                2.0 * SQRT_2 * a.min(b) + 2.0 * (a - b).abs()
            }
            NormSpec::Gauge(g) => g.eval(v),
        }
    }

    /// Exact unit-ball polygon for polygonal norms; `None` for the Euclidean norm.
    pub fn exact_polygon(&self) -> Option<Vec<Point>> {
        let diamond = |r: f64| {
            vec![
                Point::new(r, 0.0),
                Point::new(0.0, r),
                Point::new(-r, 0.0),
                Point::new(0.0, -r),
            ]
        };
        match self {
            NormSpec::Euclidean => None,
            NormSpec::ScaledL1 { divisor } => Some(diamond(*divisor)),
            NormSpec::FPlus => Some(diamond(3.0)),
            NormSpec::FT => Some(diamond(2.0)),
            NormSpec::FSquare => Some(
                (0..8)
                    .map(|k| Point::polar(k as f64 * PI / 4.0) * 1.5)
                    .collect(),
            ),
            NormSpec::Gauge(g) => Some(g.vertices().to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormStats {
    /// `max F(u)` over unit vectors: the Lipschitz constant of `F`.
    pub dil: f64,
    /// `max |v| / F(v)`.
    pub lambda: f64,
    /// `max(dil, lambda)`: `|v|/κ <= F(v) <= κ|v|`.
    pub kappa: f64,
    /// Perimeter of the unit level set.
    pub alpha: f64,
    pub unit_area: f64,
}

pub fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|k| p[k].cross(p[(k + 1) % n])).sum::<f64>()
}

pub fn polygon_perimeter(p: &[Point]) -> f64 {
    let n = p.len();
    (0..n).map(|k| p[k].dist(p[(k + 1) % n])).sum()
}

/// Exact constants (closed form for the Euclidean norm, polygon geometry
/// otherwise). `angular_resolution` must be at least 360; it is used only by
/// [`sampled_stats`].
pub fn norm_stats(f: &NormSpec, angular_resolution: usize) -> Result<NormStats> {
    if angular_resolution < 360 {
        return Err(Error::InvalidInput(format!(
            "angular resolution must be >= 360, got {angular_resolution}"
        )));
    }
    let Some(poly) = f.exact_polygon() else {
        return Ok(NormStats {
            dil: 1.0,
            lambda: 1.0,
            kappa: 1.0,
            alpha: 2.0 * PI,
            unit_area: PI,
        });
    };
    let n = poly.len();
    // F is 1/(distance to the supporting line) on each edge cone.
    let inradius = (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a.cross(b).abs() / a.dist(b)
        })
        .fold(f64::INFINITY, f64::min);
    let dil = 1.0 / inradius;
    let lambda = poly.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(NormStats {
        dil,
        lambda,
        kappa: dil.max(lambda),
        alpha: polygon_perimeter(&poly),
        unit_area: polygon_area(&poly),
    })
}

/// Constants estimated from `n` equally spaced directions (inscribed polygon).
pub fn sampled_stats(f: &NormSpec, n: usize) -> NormStats {
    let poly = unit_ball_points(f, n);
    let dil = (0..n)
        .map(|k| f.eval(Point::polar(2.0 * PI * k as f64 / n as f64)))
        .fold(0.0, f64::max);
    let lambda = poly.iter().map(|v| v.norm()).fold(0.0, f64::max);
    NormStats {
        dil,
        lambda,
        kappa: dil.max(lambda),
        alpha: polygon_perimeter(&poly),
        unit_area: polygon_area(&poly),
    }
}

fn unit_ball_points(f: &NormSpec, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let u = Point::polar(2.0 * PI * k as f64 / n as f64);
            u * (1.0 / f.eval(u))
        })
        .collect()
}

/// Boundary points `u_i / F(u_i)` for `n` equally spaced directions.
pub fn unit_ball_polygon(f: &NormSpec, n: usize) -> Result<Vec<Point>> {
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 directions, got {n}"
        )));
    }
    Ok(unit_ball_points(f, n))
}

/// Checks that the level set `F = R` has perimeter `α R`.
pub fn level_set_scaling_check(f: &NormSpec, r: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "level must be positive, got {r}"
        )));
    }
    let stats = norm_stats(f, 360)?;
    let perimeter = match f.exact_polygon() {
        Some(p) => polygon_perimeter(&p.iter().map(|v| *v * r).collect::<Vec<_>>()),
        None => 2.0 * PI * r,
    };
    Ok((perimeter - stats.alpha * r).abs() <= 1e-9 * perimeter.max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBounds {
    /// `κ^{2N} ω_N R^N`.
    pub mass_bound: f64,
    /// `κ^{N-1} α R^{N-1}`.
    pub boundary_mass_bound: f64,
    /// Actual area of the ball `F <= R`.
    pub mass: f64,
    /// Actual perimeter of the sphere `F = R`.
    pub boundary_mass: f64,
}

pub fn normed_ball_mass_bounds(f: &NormSpec, r: f64) -> Result<MassBounds> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {r}"
        )));
    }
    let s = norm_stats(f, 360)?;
    Ok(MassBounds {
        mass_bound: s.kappa.powi(4) * PI * r * r,
        boundary_mass_bound: s.kappa * s.alpha * r,
        mass: s.unit_area * r * r,
        boundary_mass: s.alpha * r,
    })
}

/// Convex hull, counterclockwise, without collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// A fitted gauge as written by `normfit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeFile {
    pub name: String,
    pub norm: String,
    pub vertices: Vec<[f64; 2]>,
    pub scale: f64,
    pub directions: usize,
}

impl GaugeFile {
    pub fn to_norm(&self) -> Result<NormSpec> {
        if self.norm != "polygon_gauge" {
            return Err(Error::InvalidInput(format!(
                "expected a polygon_gauge, got `{}`",
                self.norm
            )));
        }
        Ok(NormSpec::Gauge(Gauge::new(
            self.vertices.iter().map(|v| Point::from(*v)).collect(),
        )?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Shoelace and perimeter straight from the vertex lists, computed by hand.
    #[test]
    fn diamond_constants() {
        let s = norm_stats(&NormSpec::FPlus, 360).unwrap();
        assert!(close(s.dil, SQRT_2 / 3.0, 1e-12));
        assert!(close(s.lambda, 3.0, 1e-12));
        assert!(close(s.kappa, 3.0, 1e-12));
        assert!(close(s.unit_area, 18.0, 1e-12));
        assert!(close(s.alpha, 12.0 * SQRT_2, 1e-12));
        let t = norm_stats(&NormSpec::FT, 720).unwrap();
        assert!(close(t.dil, SQRT_2 / 2.0, 1e-12));
        assert!(close(t.lambda, 2.0, 1e-12));
        assert!(close(t.unit_area, 8.0, 1e-12));
        assert!(close(t.alpha, 8.0 * SQRT_2, 1e-12));
        let e = norm_stats(&NormSpec::Euclidean, 360).unwrap();
        assert_eq!((e.dil, e.lambda, e.kappa), (1.0, 1.0, 1.0));
        assert!(close(e.alpha, 2.0 * PI, 1e-15) && close(e.unit_area, PI, 1e-15));
        assert!(norm_stats(&NormSpec::FT, 100).is_err());
    }

    #[test]
    fn sampled_constants_approach_exact() {
        for f in [NormSpec::FPlus, NormSpec::FT, NormSpec::FSquare] {
            let exact = norm_stats(&f, 360).unwrap();
            let s = sampled_stats(&f, 360 * 8);
            assert!(close(s.dil, exact.dil, 1e-9), "{f:?}");
            assert!(close(s.lambda, exact.lambda, 1e-9), "{f:?}");
            assert!(close(s.unit_area, exact.unit_area, 1e-9));
            assert!(close(s.alpha, exact.alpha, 1e-9));
        }
    }

    #[test]
    fn evaluation_examples() {
        assert!(close(
            NormSpec::FPlus.eval(Point::new(3.0, 0.0)),
            1.0,
            1e-15
        ));
        let t = 3.0 / (2.0 * SQRT_2);
        assert!(close(NormSpec::FSquare.eval(Point::new(t, t)), 1.0, 1e-15));
        for f in [
            NormSpec::Euclidean,
            NormSpec::FPlus,
            NormSpec::FT,
            NormSpec::FSquare,
        ] {
            assert_eq!(f.eval(Point::ORIGIN), 0.0);
        }
    }

    #[test]
    fn octagon_from_formula() {
        let poly = unit_ball_polygon(&NormSpec::FSquare, 8).unwrap();
        let c = 3.0 / (2.0 * SQRT_2);
        let expected = [
            (1.5, 0.0),
            (c, c),
            (0.0, 1.5),
            (-c, c),
            (-1.5, 0.0),
            (-c, -c),
            (0.0, -1.5),
            (c, -c),
        ];
        for (p, (x, y)) in poly.iter().zip(expected) {
            assert!(close(p.x, x, 1e-12) && close(p.y, y, 1e-12), "{p:?}");
        }
        let s = norm_stats(&NormSpec::FSquare, 360).unwrap();
        assert!(close(s.lambda, 1.5, 1e-12));
        assert!(close(s.dil, 1.0 / (1.5 * (PI / 8.0).cos()), 1e-12));
        assert!(close(s.unit_area, 2.0 * SQRT_2 * 2.25, 1e-12));
        assert!(close(s.alpha, 16.0 * 1.5 * (PI / 8.0).sin(), 1e-12));
    }

    #[test]
    fn unit_ball_samples() {
        let p = unit_ball_polygon(&NormSpec::FPlus, 8).unwrap();
        assert!(p
            .iter()
            .any(|v| close(v.x, 3.0, 1e-12) && close(v.y, 0.0, 1e-12)));
        assert!(p
            .iter()
            .any(|v| close(v.x, 1.5, 1e-12) && close(v.y, 1.5, 1e-12)));
        for v in unit_ball_polygon(&NormSpec::Euclidean, 16).unwrap() {
            assert!(close(v.norm(), 1.0, 1e-15));
        }
        assert!(unit_ball_polygon(&NormSpec::FPlus, 4).is_err());
    }

    #[test]
    fn level_sets_and_mass() {
        assert!(level_set_scaling_check(&NormSpec::FPlus, 2.0).unwrap());
        assert!(level_set_scaling_check(&NormSpec::FT, 0.5).unwrap());
        assert!(level_set_scaling_check(&NormSpec::Euclidean, 1.0).unwrap());
        let e = normed_ball_mass_bounds(&NormSpec::Euclidean, 1.0).unwrap();
        assert!(close(e.mass_bound, PI, 1e-15) && close(e.boundary_mass_bound, 2.0 * PI, 1e-15));
        let f = normed_ball_mass_bounds(&NormSpec::FPlus, 1.0).unwrap();
        assert!(close(f.mass_bound, 81.0 * PI, 1e-9));
        assert!(close(f.boundary_mass_bound, 36.0 * SQRT_2, 1e-9));
        let f2 = normed_ball_mass_bounds(&NormSpec::FPlus, 2.0).unwrap();
        assert!(close(f2.mass_bound, 4.0 * f.mass_bound, 1e-9));
        assert!(close(
            f2.boundary_mass_bound,
            2.0 * f.boundary_mass_bound,
            1e-9
        ));
    }

    #[test]
    fn gauge_matches_builtin() {
        let g = NormSpec::Gauge(Gauge::new(NormSpec::FSquare.exact_polygon().unwrap()).unwrap());
        for k in 0..100 {
            let v = Point::polar(k as f64 * 0.37) * (1.0 + k as f64 * 0.1);
            assert!(close(g.eval(v), NormSpec::FSquare.eval(v), 1e-12));
        }
    }

    #[test]
    fn gauge_validation() {
        let tri = vec![
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, -1.0),
        ];
        assert!(Gauge::new(tri.clone()).is_err());
        assert!(Gauge::hull_of(&tri).is_ok());
        let off = vec![
            Point::new(1.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(1.0, 2.0),
        ];
        assert!(Gauge::hull_of(&off).is_err());
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 1.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(polygon_area(&h) > 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn norms() -> Vec<NormSpec> {
            vec![
                NormSpec::Euclidean,
                NormSpec::FPlus,
                NormSpec::FT,
                NormSpec::FSquare,
                NormSpec::scaled_l1(1.7).unwrap(),
                NormSpec::Gauge(
                    Gauge::hull_of(&unit_ball_polygon(&NormSpec::FSquare, 24).unwrap()).unwrap(),
                ),
            ]
        }

        fn pt() -> impl Strategy<Value = Point> {
            (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(x, y)| Point::new(x, y))
        }

        proptest! {
            #[test]
            fn norm_axioms(u in pt(), v in pt()) {
                for f in norms() {
                    prop_assert!(f.eval(u + v) <= f.eval(u) + f.eval(v) + 1e-12);
                    for t in [-2.0, -1.0, 0.5] {
                        prop_assert!((f.eval(u * t) - t.abs() * f.eval(u)).abs() <= 1e-12 * (1.0 + f.eval(u)));
                    }
                    let s = norm_stats(&f, 360).unwrap();
                    prop_assert!(f.eval(u) <= s.dil * u.norm() + 1e-12);
                    prop_assert!(u.norm() <= s.lambda * f.eval(u) + 1e-12);
                    prop_assert!(s.dil * s.lambda >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauge_of_samples_converges() {
        let dirs: Vec<Point> = (0..720)
            .map(|k| Point::polar(k as f64 * PI / 360.0 + 0.01))
            .collect();
        let err = |n: usize| {
            let g = Gauge::hull_of(&unit_ball_polygon(&NormSpec::Euclidean, n).unwrap()).unwrap();
            dirs.iter()
                .map(|u| (g.eval(*u) - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!(e32 < e16 && e64 < e32);
        let area = |n: usize| sampled_stats(&NormSpec::Euclidean, n).unit_area;
        assert!(area(16) < area(32) && area(32) < area(64) && area(64) < PI);
    }
}
