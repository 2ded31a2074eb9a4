//! Smocking patterns: finite or lattice-periodic families of compact stitches,
//! their windowed materialization, and the pattern invariants (separation,
//! depth, lengths, niceness, cover radius).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    closest_pair, dist_point_set, dist_set_set, set_bbox, set_diameter, AxisBox, Component, Point,
    Segment,
};
use crate::raster::VolumeBracket;
use crate::sampling;
use crate::{Error, Result};

/// Two components closer than this are considered touching.
pub const CONNECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Stitch {
    pub id: String,
    pub components: Vec<Component>,
    pub anchor: Point,
}

impl Stitch {
    pub fn diameter(&self) -> f64 {
        set_diameter(&self.components)
    }

    pub fn bbox(&self) -> AxisBox {
        set_bbox(&self.components)
    }

    pub fn dist_point(&self, p: Point) -> f64 {
        dist_point_set(&self.components, p)
    }

    pub fn is_segments_only(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c, Component::Segment(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub a: Point,
    pub b: Point,
}

impl Lattice {
    pub fn det(&self) -> f64 {
        self.a.cross(self.b)
    }

    pub fn vector(&self, i: i64, j: i64) -> Point {
        self.a * i as f64 + self.b * j as f64
    }

    /// Real coefficients `(s, t)` with `p = s a + t b`.
    pub fn coords(&self, p: Point) -> (f64, f64) {
        let d = self.det();
        (p.cross(self.b) / d, self.a.cross(p) / d)
    }

    /// Integer coefficient ranges covering every lattice vector in `b`.
    pub fn index_range(&self, b: &AxisBox) -> ((i64, i64), (i64, i64)) {
        let (mut s0, mut s1, mut t0, mut t1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for c in b.corners() {
            let (s, t) = self.coords(c);
            s0 = s0.min(s);
            s1 = s1.max(s);
            t0 = t0.min(t);
            t1 = t1.max(t);
        }
        let eps = 1e-9;
        (
            ((s0 - eps).floor() as i64, (s1 + eps).ceil() as i64),
            ((t0 - eps).floor() as i64, (t1 + eps).ceil() as i64),
        )
    }

    /// Integer coefficients of all lattice vectors with `|v| <= radius`.
    pub fn ball(&self, radius: f64) -> Vec<(i64, i64)> {
        let ((i0, i1), (j0, j1)) = self.index_range(&AxisBox::square(Point::ORIGIN, radius));
        let mut out = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                if self.vector(i, j).norm() <= radius {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// A validated smocking pattern.
#[derive(Debug, Clone)]
pub struct PatternSpec {
    pub name: String,
    pub dimension: usize,
    pub generators: Vec<Stitch>,
    pub lattice: Option<Lattice>,
    pub note: Option<String>,
    separation: f64,
    lengths: (f64, f64),
}

/// One materialized stitch: generator `gen` translated by lattice cell `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placed {
    pub gen: usize,
    pub i: i64,
    pub j: i64,
}

// ---- file format -------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    name: String,
    dimension: usize,
    generators: Vec<RawStitch>,
    #[serde(default)]
    lattice: Option<RawLattice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStitch {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchor: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    segments: Vec<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    boxes: Vec<[[f64; 2]; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    vectors: [[f64; 2]; 2],
}

const BUILTINS: &[(&str, &str)] = &[
    ("lattice_2x1", include_str!("../patterns/lattice_2x1.json")),
    (
        "point_lattice",
        include_str!("../patterns/point_lattice.json"),
    ),
    (
        "two_segments",
        include_str!("../patterns/two_segments.json"),
    ),
    ("box_stitch", include_str!("../patterns/box_stitch.json")),
    ("x_plus", include_str!("../patterns/x_plus.json")),
    ("x_T", include_str!("../patterns/x_T.json")),
    ("x_square", include_str!("../patterns/x_square.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

impl PatternSpec {
    pub fn builtin(name: &str) -> Result<PatternSpec> {
        let (_, src) = BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Pattern(format!("no builtin pattern named `{name}`")))?;
        PatternSpec::from_json(src)
    }

    pub fn from_json(src: &str) -> Result<PatternSpec> {
        let raw: RawPattern =
            serde_json::from_str(src).map_err(|e| Error::Pattern(e.to_string()))?;
        let mut gens = Vec::with_capacity(raw.generators.len());
        for g in raw.generators {
            let mut comps = Vec::new();
            for [a, b] in g.segments {
                comps.push(Component::Segment(Segment::new(a.into(), b.into())));
            }
            for [lo, hi] in g.boxes {
                let bx = AxisBox::new(lo.into(), hi.into())
                    .map_err(|e| Error::Pattern(format!("stitch `{}`: {e}", g.id)))?;
                comps.push(Component::Box(bx));
            }
            let anchor = match (g.anchor, comps.first()) {
                (Some(a), _) => Point::from(a),
                (None, Some(Component::Segment(s))) => s.a,
                (None, Some(Component::Box(b))) => b.min,
                (None, None) => Point::ORIGIN,
            };
            gens.push(Stitch {
                id: g.id,
                components: comps,
                anchor,
            });
        }
        let lattice = raw.lattice.map(|l| Lattice {
            a: l.vectors[0].into(),
            b: l.vectors[1].into(),
        });
        PatternSpec::new(raw.name, raw.dimension, gens, lattice, raw.note)
    }

    pub fn from_file(path: &std::path::Path) -> Result<PatternSpec> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        PatternSpec::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        let raw = RawPattern {
            name: self.name.clone(),
            dimension: self.dimension,
            generators: self
                .generators
                .iter()
                .map(|g| RawStitch {
                    id: g.id.clone(),
                    anchor: Some(g.anchor.into()),
                    segments: g
                        .components
                        .iter()
                        .filter_map(|c| match c {
                            Component::Segment(s) => Some([s.a.into(), s.b.into()]),
                            _ => None,
                        })
                        .collect(),
                    boxes: g
                        .components
                        .iter()
                        .filter_map(|c| match c {
                            Component::Box(b) => Some([b.min.into(), b.max.into()]),
                            _ => None,
                        })
                        .collect(),
                })
                .collect(),
            lattice: self.lattice.map(|l| RawLattice {
                vectors: [l.a.into(), l.b.into()],
            }),
            note: self.note.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("pattern serializes")
    }

    /// Validates and builds a pattern.
    pub fn new(
        name: String,
        dimension: usize,
        generators: Vec<Stitch>,
        lattice: Option<Lattice>,
        note: Option<String>,
    ) -> Result<PatternSpec> {
        if dimension != 2 {
            return Err(Error::Pattern(format!(
                "only planar patterns are supported, got dimension {dimension}"
            )));
        }
        if generators.is_empty() {
            return Err(Error::Pattern("pattern has no stitches".into()));
        }
        for (k, g) in generators.iter().enumerate() {
            if g.id.is_empty() {
                return Err(Error::Pattern(format!("stitch #{k} has an empty id")));
            }
            if generators[..k].iter().any(|h| h.id == g.id) {
                return Err(Error::Pattern(format!("duplicate stitch id `{}`", g.id)));
            }
            if g.components.is_empty() {
                return Err(Error::Pattern(format!(
                    "stitch `{}` has no segments or boxes",
                    g.id
                )));
            }
            if !g.anchor.is_finite()
                || g.components
                    .iter()
                    .flat_map(|c| c.vertices())
                    .any(|p| !p.is_finite())
            {
                return Err(Error::Pattern(format!(
                    "stitch `{}` has non-finite coordinates",
                    g.id
                )));
            }
            if !is_connected(&g.components) {
                return Err(Error::Pattern(format!(
                    "stitch `{}` is not connected",
                    g.id
                )));
            }
            if g.dist_point(g.anchor) > CONNECT_TOL {
                return Err(Error::Pattern(format!(
                    "anchor of stitch `{}` does not lie on it",
                    g.id
                )));
            }
        }
        if let Some(l) = lattice {
            if !l.a.is_finite()
                || !l.b.is_finite()
                || l.det().abs() <= 1e-12 * l.a.norm() * l.b.norm()
                || l.det() == 0.0
            {
                return Err(Error::DegenerateLattice(l.a.into(), l.b.into()));
            }
        }
        let lengths = generators
            .iter()
            .map(|g| g.diameter())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            });
        let mut spec = PatternSpec {
            name,
            dimension,
            generators,
            lattice,
            note,
            separation: f64::INFINITY,
            lengths,
        };
        spec.separation = spec.compute_separation();
        if !(spec.separation > 0.0) {
            return Err(Error::Pattern(
                "stitches overlap or touch (separation is 0)".into(),
            ));
        }
        Ok(spec)
    }

    pub fn is_periodic(&self) -> bool {
        self.lattice.is_some()
    }

    /// Stitch separation δ; `+∞` for a pattern with a single stitch.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// `(L_min, L_max)`: extreme stitch diameters.
    pub fn lengths(&self) -> (f64, f64) {
        self.lengths
    }

    pub fn segments_only(&self) -> bool {
        self.generators.iter().all(|g| g.is_segments_only())
    }

    fn offset(&self, p: &Placed) -> Point {
        match self.lattice {
            Some(l) => l.vector(p.i, p.j),
            None => Point::ORIGIN,
        }
    }

    pub fn placed_id(&self, p: &Placed) -> String {
        let g = &self.generators[p.gen].id;
        if self.is_periodic() {
            format!("{g}[{},{}]", p.i, p.j)
        } else {
            g.clone()
        }
    }

    /// Parses ids of the form `gen` or `gen[i,j]`.
    pub fn parse_id(&self, id: &str) -> Result<Placed> {
        let unknown = || Error::UnknownStitch(id.to_string());
        let (name, cell) = match id.find('[') {
            Some(k) if self.is_periodic() && id.ends_with(']') => {
                let inner = &id[k + 1..id.len() - 1];
                let (a, b) = inner.split_once(',').ok_or_else(unknown)?;
                let i = a.trim().parse::<i64>().map_err(|_| unknown())?;
                let j = b.trim().parse::<i64>().map_err(|_| unknown())?;
                (&id[..k], (i, j))
            }
            None if !self.is_periodic() => (id, (0, 0)),
            _ => return Err(unknown()),
        };
        let gen = self
            .generators
            .iter()
            .position(|g| g.id == name)
            .ok_or_else(unknown)?;
        Ok(Placed {
            gen,
            i: cell.0,
            j: cell.1,
        })
    }

    pub fn components(&self, p: &Placed) -> Vec<Component> {
        let t = self.offset(p);
        self.generators[p.gen]
            .components
            .iter()
            .map(|c| c.translate(t))
            .collect()
    }

    pub fn anchor(&self, p: &Placed) -> Point {
        self.generators[p.gen].anchor + self.offset(p)
    }

    pub fn placed_bbox(&self, p: &Placed) -> AxisBox {
        self.generators[p.gen].bbox().translate(self.offset(p))
    }

    pub fn materialize(&self, p: &Placed) -> Stitch {
        Stitch {
            id: self.placed_id(p),
            components: self.components(p),
            anchor: self.anchor(p),
        }
    }

    /// Stitches whose bounding boxes meet `window`, ordered by `(gen, i, j)`.
    pub fn placed_near(&self, window: &AxisBox) -> Vec<Placed> {
        let mut out = Vec::new();
        for (gen, g) in self.generators.iter().enumerate() {
            let gb = g.bbox();
            match self.lattice {
                None => {
                    if gb.intersects(window) {
                        out.push(Placed { gen, i: 0, j: 0 });
                    }
                }
                Some(l) => {
                    let tbox = AxisBox {
                        min: window.min - gb.max,
                        max: window.max - gb.min,
                    };
                    let ((i0, i1), (j0, j1)) = l.index_range(&tbox);
                    for i in i0..=i1 {
                        for j in j0..=j1 {
                            if gb.translate(l.vector(i, j)).intersects(window) {
                                out.push(Placed { gen, i, j });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Stitches meeting the closed window, with deterministic ids and order.
    pub fn instantiate(&self, window: &AxisBox) -> Vec<Stitch> {
        let wcomp = [Component::Box(*window)];
        self.placed_near(window)
            .into_iter()
            .filter(|p| dist_set_set(&self.components(p), &wcomp) == 0.0)
            .map(|p| self.materialize(&p))
            .collect()
    }

    fn compute_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        let n = self.generators.len();
        match self.lattice {
            None => {
                for a in 0..n {
                    for b in a + 1..n {
                        best = best.min(dist_set_set(
                            &self.generators[a].components,
                            &self.generators[b].components,
                        ));
                    }
                }
            }
            Some(l) => {
                // Translates farther than 2E + max(|a|, |b|) cannot beat the
                // nearest translate of a generator by a single lattice vector.
                let c = self
                    .generators
                    .iter()
                    .map(|g| g.bbox())
                    .reduce(|x, y| x.union(&y))
                    .unwrap()
                    .center();
                let ext = self
                    .generators
                    .iter()
                    .flat_map(|g| g.components.iter().flat_map(|c| c.vertices()))
                    .map(|p| p.dist(c))
                    .fold(0.0, f64::max);
                let radius = 2.0 * ext + l.a.norm().max(l.b.norm()) + 1e-9;
                let cells = l.ball(radius);
                for a in 0..n {
                    for b in 0..n {
                        for &(i, j) in &cells {
                            if a == b && i == 0 && j == 0 {
                                continue;
                            }
                            if a > b && i == 0 && j == 0 {
                                continue;
                            }
                            let pb = Placed { gen: b, i, j };
                            let d =
                                dist_set_set(&self.generators[a].components, &self.components(&pb));
                            best = best.min(d);
                        }
                    }
                }
            }
        }
        best
    }

    /// Index for nearest-stitch queries at points of `region`.
    pub fn stitch_index(&self, region: &AxisBox) -> StitchIndex {
        let pad = match self.lattice {
            Some(l) => l.a.norm() + l.b.norm(),
            None => 0.0,
        };
        StitchIndex::build(self, &region.pad(pad))
    }

    /// Bracket `[lo, hi]` of the depth `h = sup D(x)`, with `hi - lo <= tol`.
    /// Finite patterns need a search window.
    pub fn depth(&self, tol: f64, window: Option<&AxisBox>) -> Result<(f64, f64)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "depth tolerance must be positive, got {tol}"
            )));
        }
        let domain = match (self.lattice, window) {
            (_, Some(w)) => *w,
            (Some(l), None) => fundamental_bbox(&l, self.generators[0].anchor),
            (None, None) => return Err(Error::WindowRequired),
        };
        let index = self.stitch_index(&domain);
        Ok(max_lipschitz(&domain, tol, |p| index.distance(p)))
    }

    /// Samples `D(x)` over the fundamental domain (or `window`) and checks
    /// `D(x) <= h_hi + L_max`. Returns `(ok, worst D, worst point)`.
    pub fn cover_radius_check(
        &self,
        depth_hi: f64,
        samples: usize,
        seed: u64,
        window: Option<&AxisBox>,
    ) -> Result<(bool, f64, Point)> {
        let domain = match (self.lattice, window) {
            (_, Some(w)) => *w,
            (Some(l), None) => fundamental_bbox(&l, self.generators[0].anchor),
            (None, None) => return Err(Error::WindowRequired),
        };
        let index = self.stitch_index(&domain);
        let mut worst = (0.0, domain.min);
        for k in 0..samples {
            let p = sampling::point_in(seed, k as u64, &domain);
            let d = index.distance(p);
            if d > worst.0 {
                worst = (d, p);
            }
        }
        Ok((worst.0 <= depth_hi + self.lengths.1, worst.0, worst.1))
    }

    /// Bracketed areas of `T_eps(S) ∩ window` along a decreasing schedule.
    pub fn niceness_report(
        &self,
        window: &AxisBox,
        eps_schedule: &[f64],
        cells_per_side: usize,
        threshold: f64,
    ) -> Result<NicenessReport> {
        if eps_schedule.is_empty() {
            return Err(Error::InvalidInput("empty epsilon schedule".into()));
        }
        if eps_schedule.iter().any(|e| !(*e > 0.0)) || eps_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::InvalidInput(
                "epsilon schedule must be positive and strictly decreasing".into(),
            ));
        }
        let index = self.stitch_index(window);
        let values = crate::raster::distance_grid(window, cells_per_side, |p| index.distance(p));
        let volumes: Vec<VolumeBracket> = eps_schedule
            .iter()
            .map(|&e| crate::raster::sublevel_bracket(&values, window, cells_per_side, e))
            .collect();
        let last = volumes.last().unwrap();
        let verdict = if last.hi < threshold {
            Verdict::Nice
        } else if last.lo >= threshold
            && volumes.len() >= 2
            && volumes[volumes.len() - 2].lo - last.lo <= 0.1 * last.lo
        {
            Verdict::NotNice
        } else {
            Verdict::Inconclusive
        };
        Ok(NicenessReport {
            eps: eps_schedule.to_vec(),
            volumes,
            threshold,
            verdict,
            analytic_nice: self.segments_only(),
        })
    }

    /// A window covering a few periods (periodic) or the padded stitches (finite).
    pub fn default_window(&self) -> AxisBox {
        let gb = self
            .generators
            .iter()
            .map(|g| g.bbox())
            .reduce(|x, y| x.union(&y))
            .unwrap();
        match self.lattice {
            Some(l) => {
                let side = 2.0 * l.a.norm().max(l.b.norm());
                AxisBox {
                    min: gb.min,
                    max: gb.min + Point::new(side, side),
                }
            }
            None => gb.pad(1.0),
        }
    }
}

fn fundamental_bbox(l: &Lattice, origin: Point) -> AxisBox {
    let pts = [origin, origin + l.a, origin + l.b, origin + l.a + l.b];
    let mut b = AxisBox {
        min: pts[0],
        max: pts[0],
    };
    for p in &pts[1..] {
        b = b.union(&AxisBox { min: *p, max: *p });
    }
    b
}

fn is_connected(comps: &[Component]) -> bool {
    let n = comps.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(k) = stack.pop() {
        for m in 0..n {
            if !seen[m] && closest_pair(&comps[k], &comps[m]).0 <= CONNECT_TOL {
                seen[m] = true;
                stack.push(m);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nice,
    NotNice,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Nice => "NICE",
            Verdict::NotNice => "NOT_NICE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NicenessReport {
    pub eps: Vec<f64>,
    pub volumes: Vec<VolumeBracket>,
    pub threshold: f64,
    pub verdict: Verdict,
    /// Segment-only patterns have tubes of area O(eps) per stitch, hence are nice.
    pub analytic_nice: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct PatternInvariants {
    pub separation: f64,
    pub depth: (f64, f64),
    pub length_min: f64,
    pub length_max: f64,
    pub cover_radius_ok: bool,
}

pub fn invariants(
    spec: &PatternSpec,
    tol: f64,
    window: Option<&AxisBox>,
    seed: u64,
) -> Result<PatternInvariants> {
    let depth = spec.depth(tol, window)?;
    let (ok, _, _) = spec.cover_radius_check(depth.1, 4096, seed, window)?;
    let (lmin, lmax) = spec.lengths();
    Ok(PatternInvariants {
        separation: spec.separation(),
        depth,
        length_min: lmin,
        length_max: lmax,
        cover_radius_ok: ok,
    })
}

// ---- maximizing a 1-Lipschitz function --------------------------------------

struct Cell {
    center: Point,
    half: Point,
    upper: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.upper == o.upper
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

/// Branch and bound for `sup f` over `domain`, `f` 1-Lipschitz:
/// returns `[lo, hi]` with `hi - lo <= tol`.
pub fn max_lipschitz(domain: &AxisBox, tol: f64, f: impl Fn(Point) -> f64) -> (f64, f64) {
    let mut heap = BinaryHeap::new();
    let mut lo = f64::NEG_INFINITY;
    let n = 8;
    let half = Point::new(
        domain.width() / (2 * n) as f64,
        domain.height() / (2 * n) as f64,
    );
    for i in 0..n {
        for j in 0..n {
            let center = Point::new(
                domain.min.x + (2 * i + 1) as f64 * half.x,
                domain.min.y + (2 * j + 1) as f64 * half.y,
            );
            let v = f(center);
            lo = lo.max(v);
            heap.push(Cell {
                center,
                half,
                upper: v + half.norm(),
            });
        }
    }
    loop {
        let cell = heap.pop().expect("nonempty");
        if cell.upper - lo <= tol {
            return (lo, cell.upper.max(lo));
        }
        let h = cell.half * 0.5;
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            let center = Point::new(cell.center.x + sx * h.x, cell.center.y + sy * h.y);
            let v = f(center);
            lo = lo.max(v);
            heap.push(Cell {
                center,
                half: h,
                upper: v + h.norm(),
            });
        }
    }
}

// ---- nearest-stitch index ---------------------------------------------------

/// Bucket grid over the components of all stitches meeting a region.
#[derive(Debug, Clone)]
pub struct StitchIndex {
    region: AxisBox,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    comps: Vec<(Component, u32)>,
    stitches: Vec<Placed>,
}

impl StitchIndex {
    pub fn build(spec: &PatternSpec, region: &AxisBox) -> StitchIndex {
        let stitches = spec.placed_near(region);
        let mut comps = Vec::new();
        for (k, p) in stitches.iter().enumerate() {
            for c in spec.components(p) {
                comps.push((c, k as u32));
            }
        }
        let area = region.area().max(1e-12);
        let cell = (area / comps.len().max(1) as f64)
            .sqrt()
            .max(region.width().max(region.height()) / 512.0)
            .max(1e-9);
        let nx = ((region.width() / cell).ceil() as usize).max(1);
        let ny = ((region.height() / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, (c, _)) in comps.iter().enumerate() {
            let b = c.bbox();
            let (i0, j0) = Self::clamp_cell(region, cell, nx, ny, b.min);
            let (i1, j1) = Self::clamp_cell(region, cell, nx, ny, b.max);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        StitchIndex {
            region: *region,
            cell,
            nx,
            ny,
            buckets,
            comps,
            stitches,
        }
    }

    fn clamp_cell(region: &AxisBox, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p.x - region.min.x) / cell)
            .floor()
            .clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((p.y - region.min.y) / cell)
            .floor()
            .clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn stitches(&self) -> &[Placed] {
        &self.stitches
    }

    /// Distance from `p` to the nearest indexed stitch, with its index.
    pub fn nearest(&self, p: Point) -> Option<(f64, usize)> {
        if self.comps.is_empty() {
            return None;
        }
        if !self.region.contains(p) {
            return self.brute(p);
        }
        let (ci, cj) = Self::clamp_cell(&self.region, self.cell, self.nx, self.ny, p);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            // every component in a bucket at Chebyshev ring `ring` is at least this far
            let reach = (ring as f64 - 1.0).max(0.0) * self.cell;
            if let Some((d, _)) = best {
                if d <= reach {
                    break;
                }
            }
            let (i0, i1) = (ci as i64 - ring as i64, ci as i64 + ring as i64);
            let (j0, j1) = (cj as i64 - ring as i64, cj as i64 + ring as i64);
            for j in j0..=j1 {
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                let on_edge_row = j == j0 || j == j1;
                let step = if on_edge_row {
                    1
                } else {
                    (i1 - i0).max(1) as usize
                };
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < self.nx as i64 {
                        for &k in &self.buckets[j as usize * self.nx + i as usize] {
                            let (c, s) = &self.comps[k as usize];
                            let d = c.dist_point(p);
                            if best.is_none_or(|(b, _)| d < b) {
                                best = Some((d, *s as usize));
                            }
                        }
                    }
                    i += step as i64;
                }
            }
        }
        best.or_else(|| self.brute(p))
    }

    fn brute(&self, p: Point) -> Option<(f64, usize)> {
        self.comps
            .iter()
            .map(|(c, s)| (c.dist_point(p), *s as usize))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// `D(p)`: distance to the nearest stitch (`+∞` if none is indexed).
    pub fn distance(&self, p: Point) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |(d, _)| d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn lattice() -> PatternSpec {
        PatternSpec::builtin("lattice_2x1").unwrap()
    }

    // Exhaustive nearest-stitch distance over a generous block of translates.
    fn brute_d(spec: &PatternSpec, p: Point) -> f64 {
        spec.placed_near(&AxisBox::square(p, 6.0))
            .iter()
            .map(|s| dist_point_set(&spec.components(s), p))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn builtins_parse() {
        for name in builtin_names() {
            let p = PatternSpec::builtin(name).unwrap();
            assert_eq!(p.name, name);
            assert!(p.separation() > 0.0);
        }
        assert!(PatternSpec::builtin("nope").is_err());
    }

    #[test]
    fn instantiate_closed_window() {
        let p = lattice();
        let w = AxisBox::new(Point::new(0.0, 0.0), Point::new(4.0, 2.0)).unwrap();
        let s = p.instantiate(&w);
        // left endpoints (2i, j) with i in {0,1,2}, j in {0,1,2}; the i = 2
        // column only touches the window at x = 4
        assert_eq!(s.len(), 9);
        let mut lefts: Vec<(f64, f64)> = s.iter().map(|t| (t.anchor.x, t.anchor.y)).collect();
        lefts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                expect.push((2.0 * i as f64, j as f64));
            }
        }
        assert_eq!(lefts, expect);
        assert_eq!(s, p.instantiate(&w));
        assert_eq!(s[0].id, "s[0,0]");
        let open = AxisBox::new(Point::new(0.0, 0.0), Point::new(3.9, 1.9)).unwrap();
        assert_eq!(p.instantiate(&open).len(), 4);
    }

    #[test]
    fn instantiate_finite() {
        let p = PatternSpec::builtin("two_segments").unwrap();
        let all = AxisBox::new(Point::new(-1.0, -1.0), Point::new(5.0, 1.0)).unwrap();
        assert_eq!(p.instantiate(&all).len(), 2);
        let none = AxisBox::new(Point::new(10.0, 10.0), Point::new(11.0, 11.0)).unwrap();
        assert!(p.instantiate(&none).is_empty());
    }

    #[test]
    fn separation_examples() {
        assert_eq!(lattice().separation(), 1.0);
        assert_eq!(
            PatternSpec::builtin("two_segments").unwrap().separation(),
            2.0
        );
        assert_eq!(
            PatternSpec::builtin("point_lattice").unwrap().separation(),
            1.0
        );
        assert_eq!(
            PatternSpec::builtin("box_stitch").unwrap().separation(),
            f64::INFINITY
        );
        // brute force over a block of translates
        let p = lattice();
        let s0 = p.components(&Placed { gen: 0, i: 0, j: 0 });
        let mut best = f64::INFINITY;
        for i in -5..=5 {
            for j in -5..=5 {
                if (i, j) != (0, 0) {
                    best = best.min(dist_set_set(&s0, &p.components(&Placed { gen: 0, i, j })));
                }
            }
        }
        assert_eq!(best, 1.0);
    }

    #[test]
    fn lengths_examples() {
        assert_eq!(lattice().lengths(), (1.0, 1.0));
        assert_eq!(
            PatternSpec::builtin("point_lattice").unwrap().lengths(),
            (0.0, 0.0)
        );
        let mixed = r#"{"name":"m","dimension":2,"generators":[
            {"id":"a","segments":[[[0,0],[1,0]]]},
            {"id":"b","segments":[[[0,3],[2,3]]]}],"lattice":null}"#;
        assert_eq!(PatternSpec::from_json(mixed).unwrap().lengths(), (1.0, 2.0));
        assert!((PatternSpec::builtin("box_stitch").unwrap().lengths().1 - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn depth_examples() {
        let (lo, hi) = lattice().depth(1e-3, None).unwrap();
        assert!(hi - lo <= 1e-3);
        assert!(
            lo <= SQRT_2 / 2.0 + 1e-12 && SQRT_2 / 2.0 <= hi + 1e-12,
            "[{lo}, {hi}]"
        );
        // dense grid oracle over the fundamental domain [0,2] x [0,1]
        let p = lattice();
        let mut m: f64 = 0.0;
        for a in 0..=400 {
            for b in 0..=200 {
                m = m.max(brute_d(&p, Point::new(a as f64 / 200.0, b as f64 / 200.0)));
            }
        }
        assert!((m - SQRT_2 / 2.0).abs() < 1e-12);
        let (lo, hi) = PatternSpec::builtin("point_lattice")
            .unwrap()
            .depth(1e-3, None)
            .unwrap();
        assert!(lo <= SQRT_2 / 2.0 + 1e-12 && SQRT_2 / 2.0 <= hi + 1e-12);
        let bx = PatternSpec::builtin("box_stitch").unwrap();
        let w = AxisBox::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let (lo, hi) = bx.depth(1e-3, Some(&w)).unwrap();
        assert!(lo == 0.0 && hi <= 1e-3);
        assert!(matches!(bx.depth(1e-3, None), Err(Error::WindowRequired)));
    }

    #[test]
    fn cover_radius_examples() {
        let p = lattice();
        let (ok, worst, _) = p
            .cover_radius_check(SQRT_2 / 2.0 + 1e-3, 2000, 3, None)
            .unwrap();
        assert!(ok && worst <= SQRT_2 / 2.0 + 1e-12 && worst > 0.6);
        let q = PatternSpec::builtin("point_lattice").unwrap();
        let (ok, worst, _) = q
            .cover_radius_check(SQRT_2 / 2.0 + 1e-3, 2000, 3, None)
            .unwrap();
        assert!(ok && worst <= SQRT_2 / 2.0 + 1e-12);
        let bx = PatternSpec::builtin("box_stitch").unwrap();
        let w = AxisBox::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let (ok, worst, _) = bx.cover_radius_check(0.0, 100, 3, Some(&w)).unwrap();
        assert!(ok && worst == 0.0);
    }

    #[test]
    fn index_matches_brute_force_and_is_periodic() {
        let p = lattice();
        let region = AxisBox::new(Point::new(-3.0, -3.0), Point::new(7.0, 5.0)).unwrap();
        let idx = p.stitch_index(&region);
        for k in 0..500 {
            let x = sampling::point_in(11, k, &region);
            let d = idx.distance(x);
            assert!((d - brute_d(&p, x)).abs() < 1e-12);
            let shifted = idx.distance(x + Point::new(2.0, 1.0));
            assert!((shifted - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn niceness_examples() {
        let p = lattice();
        let w = AxisBox::new(Point::new(0.0, 0.0), Point::new(4.0, 4.0)).unwrap();
        let r = p
            .niceness_report(&w, &[0.2, 0.1, 0.05, 0.01], 1024, 0.4)
            .unwrap();
        assert!(r.volumes.windows(2).all(|v| v[1].hi < v[0].hi));
        assert_eq!(r.verdict, Verdict::Nice);
        assert!(r.analytic_nice);
        let b = PatternSpec::builtin("box_stitch").unwrap();
        let w = AxisBox::new(Point::new(-1.0, -1.0), Point::new(2.0, 2.0)).unwrap();
        let r = b
            .niceness_report(&w, &[0.2, 0.1, 0.05, 0.02, 0.01], 512, 0.4)
            .unwrap();
        assert_eq!(r.verdict, Verdict::NotNice);
        assert!(!r.analytic_nice);
        assert!(r
            .volumes
            .last()
            .unwrap()
            .contains(1.0 + 0.04 + std::f64::consts::PI * 1e-4));
        assert!(b.niceness_report(&w, &[], 64, 0.4).is_err());
        assert!(b.niceness_report(&w, &[0.1, 0.2], 64, 0.4).is_err());
    }

    #[test]
    fn rejects_bad_patterns() {
        let cases = [
            // unknown key
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","segments":[[[0,0],[1,0]]]}],"lattice":null,"extra":1}"#,
            // parallel lattice vectors
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","segments":[[[0,0],[1,0]]]}],"lattice":{"vectors":[[2,0],[4,0]]}}"#,
            // overlapping stitches
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","segments":[[[0,0],[2,0]]]},{"id":"b","segments":[[[1,-1],[1,1]]]}],"lattice":null}"#,
            // translates overlap
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","segments":[[[0,0],[3,0]]]}],"lattice":{"vectors":[[2,0],[0,1]]}}"#,
            // disconnected stitch
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","segments":[[[0,0],[1,0]],[[2,0],[3,0]]]}],"lattice":null}"#,
            // anchor off the stitch
            r#"{"name":"x","dimension":2,"generators":[{"id":"a","anchor":[0,1],"segments":[[[0,0],[1,0]]]}],"lattice":null}"#,
            // dimension
            r#"{"name":"x","dimension":3,"generators":[{"id":"a","segments":[[[0,0],[1,0]]]}],"lattice":null}"#,
            // empty stitch
            r#"{"name":"x","dimension":2,"generators":[{"id":"a"}],"lattice":null}"#,
        ];
        for c in cases {
            assert!(PatternSpec::from_json(c).is_err(), "{c}");
        }
    }

    #[test]
    fn json_round_trip_and_ids() {
        let p = lattice();
        let q = PatternSpec::from_json(&p.to_json()).unwrap();
        assert_eq!(q.generators, p.generators);
        assert_eq!(q.lattice, p.lattice);
        let pl = p.parse_id("s[3,-2]").unwrap();
        assert_eq!((pl.i, pl.j), (3, -2));
        assert_eq!(p.placed_id(&pl), "s[3,-2]");
        assert!(p.parse_id("s").is_err());
        assert!(p.parse_id("t[0,0]").is_err());
        let f = PatternSpec::builtin("two_segments").unwrap();
        assert_eq!(f.parse_id("2").unwrap().gen, 1);
        assert!(f.parse_id("3").is_err());
    }
}
