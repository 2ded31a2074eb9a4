//! Exact single-source field `X ↦ d̄(x0, X)` for `|X - x0| <= reach`.
//!
//! The last stitch on a path to `X` is some `I` with `d̄(x0, I) <= reach`, and
//! every stitch on a path of cost `c` lies within `β c` of `x0`, so settling
//! the stitches within `β · reach` is enough.

use crate::geometry::{dist_set_set, AxisBox, Component, Point, Segment};
use crate::pattern::{PatternSpec, Placed};
use crate::{Error, Result};

use super::weights::Weights;
use super::{reach_factor, TIE_MARGIN};

#[derive(Debug, Clone)]
pub struct SourceField {
    x0: Point,
    reach: f64,
    /// Settled stitches sorted by their distance from the source.
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
struct Node {
    dist: f64,
    bbox: AxisBox,
    comps: Vec<Component>,
}

impl SourceField {
    pub fn new(spec: &PatternSpec, x0: Point, reach: f64) -> Result<Self> {
        if !(reach >= 0.0) || !reach.is_finite() {
            return Err(Error::InvalidInput(format!(
                "field reach must be finite and nonnegative, got {reach}"
            )));
        }
        let beta = reach_factor(spec);
        let radius = beta * reach * (1.0 + 1e-12) + 1e-12;
        let src = [Component::Segment(Segment::new(x0, x0))];
        let mut cands: Vec<Placed> = Vec::new();
        let mut ds = Vec::new();
        for p in spec.placed_near(&AxisBox::square(x0, radius)) {
            let d = dist_set_set(&src, &spec.components(&p));
            if d <= radius {
                cands.push(p);
                ds.push(d);
            }
        }
        let n = cands.len();
        let mut weights = Weights::new(spec, &cands);
        let mut dist = ds;
        let mut done = vec![false; n];
        loop {
            let mut u = usize::MAX;
            let mut du = f64::INFINITY;
            for i in 0..n {
                if !done[i] && dist[i] < du {
                    du = dist[i];
                    u = i;
                }
            }
            if u == usize::MAX || du > reach {
                break;
            }
            done[u] = true;
            for k in 0..n {
                if !done[k] {
                    let nd = du + weights.get(&cands, u, k);
                    if nd < dist[k] {
                        dist[k] = nd;
                    }
                }
            }
        }
        let mut nodes: Vec<Node> = (0..n)
            .filter(|&i| done[i])
            .map(|i| Node {
                dist: dist[i],
                bbox: spec.placed_bbox(&cands[i]),
                comps: spec.components(&cands[i]),
            })
            .collect();
        nodes.sort_by(|a, b| a.dist.total_cmp(&b.dist));
        Ok(SourceField { x0, reach, nodes })
    }

    pub fn source(&self) -> Point {
        self.x0
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Number of stitches settled within reach.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `d̄(x0, x)`; exact whenever `|x - x0| <= reach`.
    pub fn eval(&self, x: Point) -> f64 {
        let direct = self.x0.dist(x);
        let mut best = f64::INFINITY;
        let cut = |best: f64| best.min(direct);
        for n in &self.nodes {
            if n.dist >= cut(best) {
                break;
            }
            if n.dist + n.bbox.dist_point(x) >= cut(best) {
                continue;
            }
            for c in &n.comps {
                let v = n.dist + c.dist_point(x);
                if v < best {
                    best = v;
                }
            }
        }
        if best < direct - TIE_MARGIN * direct.max(1.0) {
            best
        } else {
            direct
        }
    }
}
