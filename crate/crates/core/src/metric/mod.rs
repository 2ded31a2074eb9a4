//! The smocked pseudometric: stitches are traversed for free, so a distance is
//! a shortest path over straight jumps between stitches.
//!
//! - [`solver`]: exact Dijkstra over the stitches that can matter for a pair.
//! - [`oracle`]: layered dynamic program over jump counts (test oracle).
//! - [`field`]: exact single-source field, for rasterizing `ρ_x`.
//! - [`far`]: two-sided bounds at large range for single-generator lattices.

pub mod far;
pub mod field;
pub mod oracle;
pub mod solver;
mod weights;

use serde::Serialize;

use crate::geometry::{AxisBox, Point};
use crate::pattern::{PatternSpec, Placed};
use crate::{Error, Result};

pub use far::FarField;
pub use field::SourceField;
pub use oracle::layered_oracle;
pub use solver::{distance_to_stitch, smocked_distance, smocked_distance_widened, stitch_distance};

/// Relative margin by which a path through stitches must beat the straight
/// segment to be preferred; keeps Euclidean ties exact.
pub const TIE_MARGIN: f64 = 1e-12;

/// Factor `β = 1 + L_max/δ`: a chain of jumps costing `c` displaces by at most
/// `β c`, so a stitch on an optimal `v → w` path satisfies
/// `dist(v, I) + dist(I, w) <= β d̄(v, w)`.
pub fn reach_factor(spec: &PatternSpec) -> f64 {
    let delta = spec.separation();
    if delta.is_finite() {
        1.0 + spec.lengths().1 / delta
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hop {
    /// `None` for a terminal (the query points themselves).
    pub stitch: Option<String>,
    pub entry: Point,
    pub exit: Point,
}

/// An optimal jump sequence: terminal, stitches, terminal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathWitness {
    pub total: f64,
    pub hops: Vec<Hop>,
    pub segment_lengths: Vec<f64>,
}

impl PathWitness {
    pub fn direct(v: Point, w: Point) -> Self {
        let d = v.dist(w);
        PathWitness {
            total: d,
            hops: vec![
                Hop {
                    stitch: None,
                    entry: v,
                    exit: v,
                },
                Hop {
                    stitch: None,
                    entry: w,
                    exit: w,
                },
            ],
            segment_lengths: vec![d],
        }
    }

    /// Number of stitches visited.
    pub fn jumps(&self) -> usize {
        self.hops.iter().filter(|h| h.stitch.is_some()).count()
    }

    /// Recomputes the jump lengths from the hop points.
    pub fn replay(&self) -> f64 {
        self.hops
            .windows(2)
            .map(|p| p[0].exit.dist(p[1].entry))
            .sum()
    }
}

/// Two-sided bound on a distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Bracket { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn scale(&self, s: f64) -> Self {
        Bracket {
            lo: self.lo * s,
            hi: self.hi * s,
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// `ρ_x(v) = d̄(x0, v)`. A source on a stitch is the whole stitch automatically,
/// since reaching that stitch costs nothing.
pub fn rho(spec: &PatternSpec, x0: Point, v: Point) -> f64 {
    smocked_distance(spec, x0, v).0
}

/// The pattern scaled down by `R`: `d_R(x, y) = d̄(Rx, Ry) / R`.
#[derive(Debug, Clone)]
pub struct RescaledMetric {
    pub base: PatternSpec,
    pub scale: f64,
}

impl RescaledMetric {
    pub fn new(base: PatternSpec, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(RescaledMetric { base, scale })
    }
}

pub fn rescaled_distance(metric: &RescaledMetric, x: Point, y: Point) -> f64 {
    let r = metric.scale;
    smocked_distance(&metric.base, x * r, y * r).0 / r
}

/// Best available two-sided distance: exact for point stitches and short
/// pairs, far-field bounds otherwise.
#[derive(Debug, Clone)]
pub struct DistanceEngine {
    spec: PatternSpec,
    far: Option<FarField>,
    euclidean: bool,
    exact_limit: f64,
}

impl DistanceEngine {
    pub fn new(spec: &PatternSpec) -> Self {
        let euclidean = spec.lengths().1 == 0.0;
        let far = if euclidean {
            None
        } else {
            FarField::new(spec).ok()
        };
        DistanceEngine {
            spec: spec.clone(),
            far,
            euclidean,
            exact_limit: 12.0,
        }
    }

    /// Pairs closer than `limit` are solved exactly.
    pub fn with_exact_limit(mut self, limit: f64) -> Self {
        self.exact_limit = limit;
        self
    }

    pub fn spec(&self) -> &PatternSpec {
        &self.spec
    }

    pub fn far(&self) -> Option<&FarField> {
        self.far.as_ref()
    }

    /// True when every answer is exact.
    pub fn is_exact_everywhere(&self) -> bool {
        self.euclidean
    }

    pub fn bracket(&self, x: Point, y: Point) -> Bracket {
        if self.euclidean {
            return Bracket::exact(x.dist(y));
        }
        match &self.far {
            Some(f) if x.dist(y) > self.exact_limit => f.bracket(x, y),
            _ => Bracket::exact(smocked_distance(&self.spec, x, y).0),
        }
    }

    /// Bounds on the collapsed distance `d(I, J)` between two stitches.
    pub fn stitch_bracket(&self, a: &Placed, b: &Placed) -> Bracket {
        if a == b {
            return Bracket::exact(0.0);
        }
        if self.euclidean {
            // point stitches: no shortcut can beat the straight jump
            return Bracket::exact(crate::geometry::dist_set_set(
                &self.spec.components(a),
                &self.spec.components(b),
            ));
        }
        match &self.far {
            Some(f) => f.cell_bracket(b.i - a.i, b.j - a.j),
            None => Bracket::exact(stitch_distance(&self.spec, a, b)),
        }
    }

    /// Bounds on `d_R(x, y) = d̄(Rx, Ry)/R`.
    pub fn rescaled_bracket(&self, scale: f64, x: Point, y: Point) -> Bracket {
        self.bracket(x * scale, y * scale).scale(1.0 / scale)
    }

    /// A field of bounds on `ρ_{x0}` over `region`.
    pub fn source(&self, x0: Point, region: &AxisBox) -> Result<SourceBounds<'_>> {
        if self.euclidean {
            return Ok(SourceBounds::Euclidean(x0));
        }
        let reach = region
            .corners()
            .iter()
            .map(|c| c.dist(x0))
            .fold(0.0, f64::max);
        match &self.far {
            Some(f) if reach > self.exact_limit * 2.0 => Ok(SourceBounds::Far(f.source(x0))),
            _ => Ok(SourceBounds::Exact(SourceField::new(
                &self.spec, x0, reach,
            )?)),
        }
    }
}

/// Bounds on `ρ_{x0}(X)` for many `X`.
pub enum SourceBounds<'a> {
    Euclidean(Point),
    Exact(SourceField),
    Far(far::FarSource<'a>),
}

impl SourceBounds<'_> {
    pub fn bracket(&self, x: Point) -> Bracket {
        match self {
            SourceBounds::Euclidean(x0) => Bracket::exact(x0.dist(x)),
            SourceBounds::Exact(f) => Bracket::exact(f.eval(x)),
            SourceBounds::Far(f) => f.bracket(x),
        }
    }
}

/// Stitch id helper used by the witness: resolves a user-supplied id.
pub fn lookup_stitch(spec: &PatternSpec, id: &str) -> Result<Placed> {
    spec.parse_id(id)
}

/// Worst ratios `d̄(p, q)/|p - q|` over sampled pairs in `window` off `T_r(S)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_bound: f64,
    pub pairs: usize,
    pub ok: bool,
}

/// Off the `r`-tube of the stitches the smocked distance is within
/// `[min(r/diam, 1), 1]` times the Euclidean one.
pub fn bilipschitz_sandwich_check(
    spec: &PatternSpec,
    window: &AxisBox,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<SandwichReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tube radius must be positive, got {r}"
        )));
    }
    let index = spec.stitch_index(window);
    let mut pts = Vec::with_capacity(2 * samples);
    let mut k: u64 = 0;
    let budget = 200 * (samples as u64 + 1);
    while pts.len() < 2 * samples && k < budget {
        let p = crate::sampling::point_in(seed, k, window);
        k += 1;
        if index.distance(p) > r {
            pts.push(p);
        }
    }
    if pts.len() < 2 * samples {
        return Err(Error::Precondition(
            "window lies (almost) entirely inside the stitch tube".into(),
        ));
    }
    let lower_bound = (r / window.diameter()).min(1.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for pair in pts.chunks(2) {
        let e = pair[0].dist(pair[1]);
        if e == 0.0 {
            continue;
        }
        let ratio = smocked_distance(spec, pair[0], pair[1]).0 / e;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let ok = hi <= 1.0 + 1e-12 && lo >= lower_bound - 1e-12;
    Ok(SandwichReport {
        min_ratio: lo,
        max_ratio: hi,
        lower_bound,
        pairs: samples,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dist_point_set, dist_set_set};
    use crate::sampling;

    fn pat(name: &str) -> PatternSpec {
        PatternSpec::builtin(name).unwrap()
    }

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Floyd–Warshall over every stitch meeting a generous box, no pruning.
    fn brute(spec: &PatternSpec, v: Point, w: Point) -> f64 {
        let region = AxisBox::new(p(v.x.min(w.x), v.y.min(w.y)), p(v.x.max(w.x), v.y.max(w.y)))
            .unwrap()
            .pad(v.dist(w) + 2.0);
        let comps: Vec<_> = spec
            .placed_near(&region)
            .iter()
            .map(|s| spec.components(s))
            .collect();
        let n = comps.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
            for j in 0..i {
                let x = dist_set_set(&comps[i], &comps[j]);
                d[i][j] = x;
                d[j][i] = x;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let x = d[i][k] + d[k][j];
                    if x < d[i][j] {
                        d[i][j] = x;
                    }
                }
            }
        }
        let dv: Vec<f64> = comps.iter().map(|c| dist_point_set(c, v)).collect();
        let dw: Vec<f64> = comps.iter().map(|c| dist_point_set(c, w)).collect();
        let mut best = v.dist(w);
        for i in 0..n {
            for j in 0..n {
                best = best.min(dv[i] + d[i][j] + dw[j]);
            }
        }
        best
    }

    #[test]
    fn worked_examples() {
        let l = pat("lattice_2x1");
        assert_eq!(smocked_distance(&l, p(0.0, 0.0), p(1.0, 0.0)).0, 0.0);
        assert_eq!(smocked_distance(&l, p(0.0, 0.0), p(2.0, 0.0)).0, 1.0);
        assert_eq!(smocked_distance(&l, p(0.0, 0.0), p(3.0, 0.0)).0, 1.0);
        assert_eq!(smocked_distance(&l, p(0.0, 0.0), p(0.0, 1.0)).0, 1.0);
        assert_eq!(smocked_distance(&l, p(0.0, 0.0), p(7.0, 0.0)).0, 3.0);
        let t = pat("two_segments");
        let (d, w) = smocked_distance(&t, p(0.0, 0.0), p(4.0, 0.0));
        assert_eq!(d, 2.0);
        assert_eq!(w.jumps(), 2);
        assert_eq!(w.replay(), d);
        let (d, _) = smocked_distance(&t, p(-1.0, 0.0), p(5.0, 0.0));
        assert_eq!(d, 4.0);
        // off the line, shortcuts no longer help
        let (d, w) = smocked_distance(&t, p(0.0, 5.0), p(4.0, 5.0));
        assert_eq!(d, 4.0);
        assert_eq!(w.hops.len(), 2);
        let pl = pat("point_lattice");
        let (d, _) = smocked_distance(&pl, p(0.3, 0.2), p(5.7, -3.1));
        assert_eq!(d, p(0.3, 0.2).dist(p(5.7, -3.1)));
    }

    #[test]
    fn distance_to_stitch_examples() {
        let t = pat("two_segments");
        assert_eq!(distance_to_stitch(&t, p(0.5, 0.0), "2").unwrap().0, 2.0);
        assert_eq!(distance_to_stitch(&t, p(-2.0, 0.0), "2").unwrap().0, 4.0);
        assert!(distance_to_stitch(&t, p(0.0, 0.0), "9").is_err());
        let l = pat("lattice_2x1");
        assert_eq!(
            distance_to_stitch(&l, p(0.0, 0.0), "s[3,0]").unwrap().0,
            3.0
        );
    }

    #[test]
    fn solver_matches_oracles() {
        for name in [
            "lattice_2x1",
            "x_plus",
            "x_T",
            "x_square",
            "two_segments",
            "box_stitch",
        ] {
            let spec = pat(name);
            let region = AxisBox::new(p(-4.0, -4.0), p(6.0, 6.0)).unwrap();
            for k in 0..40 {
                let (v, w) = sampling::pair_in(17, k, &region);
                let (d, wit) = smocked_distance(&spec, v, w);
                let b = brute(&spec, v, w);
                let o = layered_oracle(&spec, v, w, 64);
                assert!(
                    (d - b).abs() <= 1e-9,
                    "{name} {v:?} {w:?}: {d} vs brute {b}"
                );
                assert!((d - o).abs() <= 1e-9, "{name}: {d} vs layered {o}");
                assert!((wit.replay() - d).abs() <= 1e-9);
                assert!(d <= v.dist(w));
            }
        }
    }

    #[test]
    fn thin_filter_counterexample() {
        // a stitch that is only useful when reached far outside the v–w ellipse
        let src = r#"{"name":"hook","dimension":2,"generators":[
            {"id":"A","segments":[[[0,0],[10,0]]]},
            {"id":"I","segments":[[[10.5,0],[10.5,4.5]]]}],"lattice":null}"#;
        let spec = PatternSpec::from_json(src).unwrap();
        let (v, w) = (p(0.0, 0.1), p(10.0, 5.0));
        let d = smocked_distance(&spec, v, w).0;
        assert!((d - brute(&spec, v, w)).abs() < 1e-12);
        // v → A, A → I, top of I → w
        assert!((d - (0.1 + 0.5 + 0.5f64.sqrt())).abs() < 1e-12, "{d}");
    }

    #[test]
    fn symmetry_is_exact() {
        let spec = pat("x_plus");
        let region = AxisBox::new(p(-5.0, -5.0), p(5.0, 5.0)).unwrap();
        for k in 0..50 {
            let (v, w) = sampling::pair_in(5, k, &region);
            assert_eq!(
                smocked_distance(&spec, v, w).0,
                smocked_distance(&spec, w, v).0
            );
        }
    }

    #[test]
    fn source_field_matches_solver() {
        let spec = pat("lattice_2x1");
        let x0 = p(0.3, 0.4);
        let f = SourceField::new(&spec, x0, 6.0).unwrap();
        let region = AxisBox::square(x0, 4.0);
        for k in 0..200 {
            let x = sampling::point_in(9, k, &region);
            assert!((f.eval(x) - rho(&spec, x0, x)).abs() <= 1e-12);
        }
        assert!(SourceField::new(&spec, x0, -1.0).is_err());
    }

    #[test]
    fn far_field_brackets_exact_values() {
        let spec = pat("lattice_2x1");
        let eng = DistanceEngine::new(&spec);
        let far = eng.far().unwrap();
        let region = AxisBox::square(Point::ORIGIN, 14.0);
        for k in 0..25 {
            let (x, y) = sampling::pair_in(23, k, &region);
            let exact = smocked_distance(&spec, x, y).0;
            let b = far.bracket(x, y);
            assert!(
                b.lo <= exact + 1e-9 && exact <= b.hi + 1e-9,
                "{x:?} {y:?}: {exact} ∉ [{}, {}]",
                b.lo,
                b.hi
            );
            assert!(b.hi <= x.dist(y));
        }
        for (i, j) in [(13, 0), (0, 29), (9, 17), (-20, 6)] {
            let exact = stitch_distance(
                &spec,
                &Placed { gen: 0, i: 0, j: 0 },
                &Placed { gen: 0, i, j },
            );
            let b = far.cell_bracket(i, j);
            assert!(
                b.lo <= exact + 1e-9 && exact <= b.hi + 1e-9,
                "({i},{j}): {exact} ∉ [{}, {}]",
                b.lo,
                b.hi
            );
        }
        assert!(FarField::new(&pat("two_segments")).is_err());
    }

    #[test]
    fn far_field_is_tight_at_range() {
        let eng = DistanceEngine::new(&pat("lattice_2x1"));
        let b = eng.bracket(p(0.25, 0.25), p(300.0, 170.0));
        assert!(b.width() <= 0.02 * b.hi, "[{}, {}]", b.lo, b.hi);
    }

    #[test]
    fn sandwich_holds() {
        let spec = pat("lattice_2x1");
        let w = AxisBox::new(p(0.0, 0.0), p(6.0, 6.0)).unwrap();
        let r = bilipschitz_sandwich_check(&spec, &w, 0.3, 100, 1).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(r.max_ratio <= 1.0 && r.min_ratio < 1.0);
    }

    #[test]
    fn rescaled_is_scaled() {
        let spec = pat("lattice_2x1");
        let m = RescaledMetric::new(spec.clone(), 4.0).unwrap();
        let (x, y) = (p(0.1, 0.2), p(1.3, 0.7));
        assert_eq!(
            rescaled_distance(&m, x, y),
            smocked_distance(&spec, x * 4.0, y * 4.0).0 / 4.0
        );
        assert!(RescaledMetric::new(spec, 0.0).is_err());
    }
}
