//! Two-sided distance bounds at large range for lattices with one generator.
//!
//! Collapsed stitches form a translation-invariant metric on lattice cells:
//! `T(t) = d(S_0, S_t)`. A path `S_0 → S_t` is a sum of jumps `s_k` costing
//! `w(s_k) = dist(S_0, S_{s_k})`, hence
//!
//! - lower: `T(t) >= G(t)`, `G` the gauge of `conv{ s / w(s) }` (subadditivity);
//!   jumps longer than `ρ` are covered by a polygon around their possible
//!   directions `|s| / (|s| - width(ŝ))`;
//! - upper: `T(t) <= n1 T(t1) + n2 T(t2) + T(rest)` for the two table cells
//!   spanning the hull facet of `{ t_k / T(t_k) }` that contains `t`; a
//!   remainder outside the table is bounded by splitting it in halves.
//!
//! Between points, `d̄(x, X) >= G(X - x) - L_max` and
//! `d̄(x, X) <= dist(x, I) + T(t_J - t_I) + dist(J, X)` for nearby `I, J`.

use std::f64::consts::PI;

use crate::geometry::{dist_set_set, AxisBox, Component, Point};
use crate::norm::{convex_hull, Gauge};
use crate::pattern::{Lattice, PatternSpec, Placed};
use crate::{Error, Result};

use super::{reach_factor, Bracket};

/// Exact table radius (in distance units).
const TABLE_CAP: f64 = 24.0;
/// Jumps up to this length enter the lower gauge individually.
const JUMP_RADIUS: f64 = 96.0;
const TAIL_DIRECTIONS: usize = 2048;
/// Facet steps given back when decomposing a long offset.
const BACKOFF: i64 = 2;
/// Halving levels for remainders outside the table.
const SPLIT_DEPTH: u32 = 4;

#[derive(Debug, Clone)]
pub struct FarField {
    spec: PatternSpec,
    lattice: Lattice,
    lmax: f64,
    span_i: i64,
    span_j: i64,
    table: Vec<f64>,
    hull: Vec<HullVertex>,
    lower: Gauge,
    near_pad: f64,
    cover: f64,
}

#[derive(Debug, Clone, Copy)]
struct HullVertex {
    angle: f64,
    cell: (i64, i64),
    cost: f64,
}

impl FarField {
    pub fn new(spec: &PatternSpec) -> Result<FarField> {
        let lattice = spec
            .lattice
            .ok_or_else(|| Error::Precondition("far-field bounds need a lattice pattern".into()))?;
        if spec.generators.len() != 1 {
            return Err(Error::Precondition(
                "far-field bounds need a single generator".into(),
            ));
        }
        let lmax = spec.lengths().1;
        let gen = &spec.generators[0].components;
        let jump = |i: i64, j: i64| dist_set_set(gen, &spec.components(&Placed { gen: 0, i, j }));

        // Exact table by Dijkstra over the cells within β · cap.
        let beta = reach_factor(spec);
        let reach = beta * TABLE_CAP;
        let cells: Vec<(i64, i64)> = lattice
            .ball(reach + 2.0 * lmax + 1e-9)
            .into_iter()
            .filter(|&(i, j)| (i, j) == (0, 0) || jump(i, j) <= reach)
            .collect();
        let span_i = cells.iter().map(|c| c.0.abs()).max().unwrap_or(0);
        let span_j = cells.iter().map(|c| c.1.abs()).max().unwrap_or(0);
        let wi = (4 * span_i + 1) as usize;
        let wj = (4 * span_j + 1) as usize;
        let mut wcache = vec![f64::NAN; wi * wj];
        let mut w = |di: i64, dj: i64| {
            let k = ((di + 2 * span_i) as usize) * wj + (dj + 2 * span_j) as usize;
            if wcache[k].is_nan() {
                wcache[k] = jump(di, dj);
            }
            wcache[k]
        };
        let n = cells.len();
        let mut dist = vec![f64::INFINITY; n];
        let origin = cells
            .iter()
            .position(|&c| c == (0, 0))
            .expect("origin cell");
        dist[origin] = 0.0;
        let mut done = vec![false; n];
        loop {
            let mut u = usize::MAX;
            let mut du = f64::INFINITY;
            for k in 0..n {
                if !done[k] && dist[k] < du {
                    du = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX || du > TABLE_CAP {
                break;
            }
            done[u] = true;
            let (ui, uj) = cells[u];
            for k in 0..n {
                if !done[k] {
                    let nd = du + w(cells[k].0 - ui, cells[k].1 - uj);
                    if nd < dist[k] {
                        dist[k] = nd;
                    }
                }
            }
        }
        let tw = (2 * span_j + 1) as usize;
        let mut table = vec![f64::NAN; (2 * span_i + 1) as usize * tw];
        let mut ratio_pts = Vec::new();
        for k in 0..n {
            if done[k] && dist[k] <= TABLE_CAP {
                let (i, j) = cells[k];
                table[((i + span_i) as usize) * tw + (j + span_j) as usize] = dist[k];
                if (i, j) != (0, 0) {
                    ratio_pts.push((lattice.vector(i, j) * (1.0 / dist[k]), (i, j), dist[k]));
                }
            }
        }
        let hull_pts = convex_hull(&ratio_pts.iter().map(|r| r.0).collect::<Vec<_>>());
        if hull_pts.len() < 3 {
            return Err(Error::Precondition(
                "too few reachable cells for far-field bounds".into(),
            ));
        }
        let mut hull: Vec<HullVertex> = hull_pts
            .iter()
            .map(|p| {
                let r = ratio_pts
                    .iter()
                    .find(|r| r.0 == *p)
                    .expect("hull point from input");
                HullVertex {
                    angle: p.y.atan2(p.x),
                    cell: r.1,
                    cost: r.2,
                }
            })
            .collect();
        hull.sort_by(|a, b| a.angle.total_cmp(&b.angle));

        // Lower gauge: individual short jumps plus a cover of all long ones.
        let mut pts: Vec<Point> = lattice
            .ball(JUMP_RADIUS)
            .into_iter()
            .filter(|&c| c != (0, 0))
            .map(|(i, j)| lattice.vector(i, j) * (1.0 / jump(i, j)))
            .collect();
        let verts: Vec<Point> = gen.iter().flat_map(|c| c.vertices()).collect();
        let width = |u: Point| {
            let proj: Vec<f64> = verts.iter().map(|v| v.dot(u)).collect();
            let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        };
        let dt = 2.0 * PI / TAIL_DIRECTIONS as f64;
        for k in 0..TAIL_DIRECTIONS {
            let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
            let wmax = width(Point::polar(0.5 * (a + b))) + lmax * dt / 2.0;
            let r = JUMP_RADIUS / (JUMP_RADIUS - wmax) / (dt / 2.0).cos();
            pts.push(Point::polar(a) * r);
            pts.push(Point::polar(b) * r);
        }
        let lower = Gauge::hull_of(&pts)?;
        let (a, b) = (lattice.a.norm(), lattice.b.norm());
        Ok(FarField {
            spec: spec.clone(),
            lattice,
            lmax,
            span_i,
            span_j,
            table,
            hull,
            lower,
            near_pad: 0.5 * a.max(b),
            cover: a + b,
        })
    }

    fn table_get(&self, i: i64, j: i64) -> Option<f64> {
        if i.abs() > self.span_i || j.abs() > self.span_j {
            return None;
        }
        let tw = (2 * self.span_j + 1) as usize;
        let v = self.table[((i + self.span_i) as usize) * tw + (j + self.span_j) as usize];
        (!v.is_nan()).then_some(v)
    }

    /// Lower gauge `G` with `G(t) <= d(S_0, S_t)` and `G <= |·|`.
    pub fn lower_gauge(&self) -> &Gauge {
        &self.lower
    }

    /// Bounds on `d(S_0, S_(i,j))`.
    pub fn cell_bracket(&self, i: i64, j: i64) -> Bracket {
        if let Some(t) = self.table_get(i, j) {
            return Bracket::exact(t);
        }
        let lo = self.lower.eval(self.lattice.vector(i, j));
        Bracket {
            lo,
            hi: self.cell_upper(i, j).max(lo),
        }
    }

    fn cell_upper(&self, i: i64, j: i64) -> f64 {
        if (i, j) == (0, 0) {
            return 0.0;
        }
        if let Some(t) = self.table_get(i, j) {
            return t;
        }
        let v = self.lattice.vector(i, j);
        let theta = v.y.atan2(v.x);
        let h = &self.hull;
        let k = match h.iter().rposition(|p| p.angle <= theta) {
            Some(k) => k,
            None => h.len() - 1,
        };
        let (p, q) = (h[k], h[(k + 1) % h.len()]);
        let (ta, tb) = (
            self.lattice.vector(p.cell.0, p.cell.1),
            self.lattice.vector(q.cell.0, q.cell.1),
        );
        let det = ta.cross(tb);
        let (mut n1, mut n2) = (0i64, 0i64);
        if det.abs() > 1e-12 {
            n1 = (v.cross(tb) / det).floor().max(0.0) as i64;
            n2 = (ta.cross(v) / det).floor().max(0.0) as i64;
        }
        // back off a few facet steps so the remainder lands in the table
        let mut best = self.jump_cost(i, j);
        for b1 in 0..=BACKOFF.min(n1) {
            for b2 in 0..=BACKOFF.min(n2) {
                let (m1, m2) = (n1 - b1, n2 - b2);
                let (ri, rj) = (
                    i - m1 * p.cell.0 - m2 * q.cell.0,
                    j - m1 * p.cell.1 - m2 * q.cell.1,
                );
                let rest = self.split_upper(ri, rj, SPLIT_DEPTH);
                best = best.min(m1 as f64 * p.cost + m2 as f64 * q.cost + rest);
            }
        }
        best
    }

    /// Table value, or the cheaper of a direct jump and two halves.
    fn split_upper(&self, i: i64, j: i64, depth: u32) -> f64 {
        if let Some(t) = self.table_get(i, j) {
            return t;
        }
        let direct = self.jump_cost(i, j);
        if depth == 0 {
            return direct;
        }
        let (hi, hj) = (i / 2, j / 2);
        direct
            .min(self.split_upper(hi, hj, depth - 1) + self.split_upper(i - hi, j - hj, depth - 1))
    }

    fn jump_cost(&self, i: i64, j: i64) -> f64 {
        if (i, j) == (0, 0) {
            return 0.0;
        }
        dist_set_set(
            &self.spec.generators[0].components,
            &self.spec.components(&Placed { gen: 0, i, j }),
        )
    }

    /// Nearby stitches of `x` with their distances, plus `D(x)`.
    fn near(&self, x: Point) -> (Vec<(Placed, f64)>, f64) {
        let probe = self
            .spec
            .placed_near(&AxisBox::square(x, self.cover + self.lmax));
        let mut with_d: Vec<(Placed, f64)> = probe
            .into_iter()
            .map(|p| {
                let d = crate::geometry::dist_point_set(&self.spec.components(&p), x);
                (p, d)
            })
            .collect();
        let d0 = with_d.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        if d0 == 0.0 {
            with_d.retain(|e| e.1 == 0.0);
        } else {
            with_d.retain(|e| e.1 <= d0 + self.near_pad);
        }
        (with_d, d0)
    }

    pub fn bracket(&self, x: Point, y: Point) -> Bracket {
        let (nx, dx) = self.near(x);
        self.bracket_with(x, &nx, dx, y)
    }

    fn bracket_with(&self, x: Point, nx: &[(Placed, f64)], dx: f64, y: Point) -> Bracket {
        let direct = x.dist(y);
        let (ny, dy) = self.near(y);
        let mut hi = direct;
        for (pi, di) in nx {
            for (pj, dj) in &ny {
                let c = di + self.cell_upper(pj.i - pi.i, pj.j - pi.j) + dj;
                if c < hi {
                    hi = c;
                }
            }
        }
        let lo = direct
            .min(dx + dy)
            .max(self.lower.eval(y - x) - self.lmax)
            .max(0.0)
            .min(hi);
        Bracket { lo, hi }
    }

    /// Bounds from a fixed source, reusing its neighbourhood.
    pub fn source(&self, x0: Point) -> FarSource<'_> {
        let (near, d0) = self.near(x0);
        FarSource {
            far: self,
            x0,
            near,
            d0,
        }
    }
}

pub struct FarSource<'a> {
    far: &'a FarField,
    x0: Point,
    near: Vec<(Placed, f64)>,
    d0: f64,
}

impl FarSource<'_> {
    pub fn bracket(&self, y: Point) -> Bracket {
        self.far.bracket_with(self.x0, &self.near, self.d0, y)
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn f<T: Send + Sync>() {}
    f::<FarField>();
    f::<Component>();
}
