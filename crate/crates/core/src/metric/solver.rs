//! Exact smocked distance by Dijkstra over stitch super-nodes.
//!
//! Candidate stitches are those inside the "reach ellipse"
//! `dist(v, I) + dist(I, w) <= β · UB` where `UB` is any upper bound on the
//! answer. A first pass with the straight-line bound `UB = |v - w|` and a thin
//! ellipse yields a (usually much) better `UB`; the second pass is exact.

use crate::geometry::{dist_set_set, set_bbox, AxisBox, Component, Point, Segment};
use crate::pattern::{PatternSpec, Placed};
use crate::Result;

use super::weights::{jump, jump_from, Weights};
use super::{reach_factor, Hop, PathWitness, TIE_MARGIN};

#[derive(Debug, Clone)]
enum End {
    Point(Point),
    Stitch(Placed, Vec<Component>),
}

impl End {
    fn set(&self) -> Vec<Component> {
        match self {
            End::Point(p) => vec![Component::Segment(Segment::new(*p, *p))],
            End::Stitch(_, c) => c.clone(),
        }
    }
}

/// Exact `d̄(v, w)` with an optimal witness.
pub fn smocked_distance(spec: &PatternSpec, v: Point, w: Point) -> (f64, PathWitness) {
    smocked_distance_widened(spec, v, w, 0.0)
}

/// As [`smocked_distance`] but with the candidate ellipse widened by `slack`;
/// the answer must not change.
pub fn smocked_distance_widened(
    spec: &PatternSpec,
    v: Point,
    w: Point,
    slack: f64,
) -> (f64, PathWitness) {
    if v == w {
        return (0.0, PathWitness::direct(v, w));
    }
    // Solve in a canonical direction so that d̄(v, w) and d̄(w, v) agree bitwise.
    let swap = (w.x, w.y) < (v.x, v.y);
    let (a, b) = if swap { (w, v) } else { (v, w) };
    let (d, mut wit) = solve(spec, &End::Point(a), &End::Point(b), slack);
    if swap {
        wit.hops.reverse();
        for h in &mut wit.hops {
            std::mem::swap(&mut h.entry, &mut h.exit);
        }
        wit.segment_lengths.reverse();
    }
    (d, wit)
}

/// `d̄` from `v` to the point that stitch `id` is collapsed to.
pub fn distance_to_stitch(spec: &PatternSpec, v: Point, id: &str) -> Result<(f64, PathWitness)> {
    let p = spec.parse_id(id)?;
    let comps = spec.components(&p);
    Ok(solve(spec, &End::Point(v), &End::Stitch(p, comps), 0.0))
}

/// `d(I, J)` between two collapsed stitches.
pub fn stitch_distance(spec: &PatternSpec, a: &Placed, b: &Placed) -> f64 {
    if a == b {
        return 0.0;
    }
    let src = End::Stitch(*a, spec.components(a));
    let dst = End::Stitch(*b, spec.components(b));
    solve(spec, &src, &dst, 0.0).0
}

/// Stitches `I` with `dist(src, I) + dist(I, dst) <= bound`, excluding the
/// endpoint stitches, in `(gen, i, j)` order; with their endpoint distances.
pub(crate) fn reach_candidates(
    spec: &PatternSpec,
    src: &[Component],
    dst: &[Component],
    bound: f64,
    exclude: &[Placed],
) -> (Vec<Placed>, Vec<f64>, Vec<f64>) {
    let window: AxisBox = set_bbox(src).union(&set_bbox(dst)).pad(bound / 2.0);
    let mut cands = Vec::new();
    let mut ds = Vec::new();
    let mut dt = Vec::new();
    for p in spec.placed_near(&window) {
        if exclude.contains(&p) {
            continue;
        }
        let comps = spec.components(&p);
        let a = dist_set_set(src, &comps);
        if a > bound {
            continue;
        }
        let b = dist_set_set(&comps, dst);
        if a + b <= bound {
            cands.push(p);
            ds.push(a);
            dt.push(b);
        }
    }
    (cands, ds, dt)
}

fn solve(spec: &PatternSpec, src: &End, dst: &End, slack: f64) -> (f64, PathWitness) {
    let sset = src.set();
    let tset = dst.set();
    let direct = dist_set_set(&sset, &tset);
    let beta = reach_factor(spec);
    let exclude: Vec<Placed> = [src, dst]
        .iter()
        .filter_map(|e| match e {
            End::Stitch(p, _) => Some(*p),
            End::Point(_) => None,
        })
        .collect();
    let mut bound = direct;
    if beta > 1.0 {
        let (c, s, t) = reach_candidates(spec, &sset, &tset, direct * (1.0 + 1e-12), &exclude);
        let (ub, _) = dijkstra(spec, &c, &s, &t, direct, beta);
        bound = beta * ub.unwrap_or(direct);
    }
    let bound = bound * (1.0 + 1e-12) + 1e-12 + slack;
    let (cands, ds, dt) = reach_candidates(spec, &sset, &tset, bound, &exclude);
    let (best, path) = dijkstra(spec, &cands, &ds, &dt, direct, beta);
    match best {
        Some(val) if val < direct - TIE_MARGIN * direct.max(1.0) => {
            let wit = witness(spec, src, dst, &sset, &tset, &cands, &path);
            (wit.total, wit)
        }
        _ => {
            let wit = match (src, dst) {
                (End::Point(v), End::Point(w)) => PathWitness::direct(*v, *w),
                _ => {
                    let (d, p, q) = crate::geometry::closest_pair_sets(&sset, &tset);
                    PathWitness {
                        total: d,
                        hops: vec![end_hop(spec, src, p), end_hop(spec, dst, q)],
                        segment_lengths: vec![d],
                    }
                }
            };
            (direct, wit)
        }
    }
}

/// Dense Dijkstra from the source set through `cands` to the target set.
/// Returns the best stitch path value and its node sequence.
fn dijkstra(
    spec: &PatternSpec,
    cands: &[Placed],
    ds: &[f64],
    dt: &[f64],
    direct: f64,
    beta: f64,
) -> (Option<f64>, Vec<usize>) {
    let n = cands.len();
    if n == 0 {
        return (None, Vec::new());
    }
    let mut weights = Weights::new(spec, cands);
    let mut dist = ds.to_vec();
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut best = f64::INFINITY;
    let mut best_node = usize::MAX;
    let limit = |best: f64| best.min(direct);
    loop {
        let mut u = usize::MAX;
        let mut du = f64::INFINITY;
        for i in 0..n {
            if !done[i] && dist[i] < du {
                du = dist[i];
                u = i;
            }
        }
        if u == usize::MAX || du >= limit(best) {
            break;
        }
        done[u] = true;
        let through = du + dt[u];
        if through < best {
            best = through;
            best_node = u;
        }
        // Any continuation from u costs at least dt[u]/β more.
        if du + dt[u] / beta >= limit(best) {
            continue;
        }
        for k in 0..n {
            if done[k] {
                continue;
            }
            let nd = du + weights.get(cands, u, k);
            if nd < dist[k] {
                dist[k] = nd;
                pred[k] = u;
            }
        }
    }
    if best_node == usize::MAX {
        return (None, Vec::new());
    }
    let mut path = vec![best_node];
    while pred[*path.last().unwrap()] != usize::MAX {
        path.push(pred[*path.last().unwrap()]);
    }
    path.reverse();
    (Some(best), path)
}

fn end_hop(spec: &PatternSpec, e: &End, p: Point) -> Hop {
    match e {
        End::Point(_) => Hop {
            stitch: None,
            entry: p,
            exit: p,
        },
        End::Stitch(s, _) => Hop {
            stitch: Some(spec.placed_id(s)),
            entry: p,
            exit: p,
        },
    }
}

fn witness(
    spec: &PatternSpec,
    src: &End,
    dst: &End,
    sset: &[Component],
    tset: &[Component],
    cands: &[Placed],
    path: &[usize],
) -> PathWitness {
    let mut hops = Vec::with_capacity(path.len() + 2);
    let mut lengths = Vec::with_capacity(path.len() + 1);
    let first = &cands[path[0]];
    let (d0, p0, q0) = jump_from(sset, spec, first);
    hops.push(end_hop(spec, src, p0));
    lengths.push(d0);
    let mut entry = q0;
    for w in path.windows(2) {
        let (d, p, q) = jump(spec, &cands[w[0]], &cands[w[1]]);
        hops.push(Hop {
            stitch: Some(spec.placed_id(&cands[w[0]])),
            entry,
            exit: p,
        });
        lengths.push(d);
        entry = q;
    }
    let last = &cands[*path.last().unwrap()];
    let (d1, q1, p1) = jump_from(tset, spec, last);
    hops.push(Hop {
        stitch: Some(spec.placed_id(last)),
        entry,
        exit: p1,
    });
    hops.push(end_hop(spec, dst, q1));
    lengths.push(d1);
    let total = lengths.iter().sum();
    PathWitness {
        total,
        hops,
        segment_lengths: lengths,
    }
}
