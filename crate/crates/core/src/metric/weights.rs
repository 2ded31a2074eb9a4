//! Exact jump costs between materialized stitches. For lattice patterns the
//! cost depends only on the generator pair and the cell offset, so it is
//! memoized per offset.

use crate::geometry::{closest_pair_sets, dist_set_set, ClosestPair, Component};
use crate::pattern::{PatternSpec, Placed};

pub(crate) struct Weights<'a> {
    spec: &'a PatternSpec,
    kind: Kind,
}

enum Kind {
    Lattice {
        ngen: usize,
        span_i: i64,
        span_j: i64,
        width_j: usize,
        tables: Vec<Vec<f64>>,
    },
    Finite {
        n: usize,
        matrix: Vec<f64>,
    },
}

impl<'a> Weights<'a> {
    pub fn new(spec: &'a PatternSpec, cands: &[Placed]) -> Self {
        let kind = if spec.is_periodic() {
            let (mut i0, mut i1, mut j0, mut j1) = (0i64, 0i64, 0i64, 0i64);
            if let Some(first) = cands.first() {
                (i0, i1, j0, j1) = (first.i, first.i, first.j, first.j);
            }
            for p in cands {
                i0 = i0.min(p.i);
                i1 = i1.max(p.i);
                j0 = j0.min(p.j);
                j1 = j1.max(p.j);
            }
            let (span_i, span_j) = (i1 - i0, j1 - j0);
            let width_i = (2 * span_i + 1) as usize;
            let width_j = (2 * span_j + 1) as usize;
            let ngen = spec.generators.len();
            Kind::Lattice {
                ngen,
                span_i,
                span_j,
                width_j,
                tables: vec![vec![f64::NAN; width_i * width_j]; ngen * ngen],
            }
        } else {
            let n = cands.len();
            Kind::Finite {
                n,
                matrix: vec![f64::NAN; n * n],
            }
        };
        Weights { spec, kind }
    }

    /// Set distance between candidates `a` and `b` (by position in `cands`).
    pub fn get(&mut self, cands: &[Placed], a: usize, b: usize) -> f64 {
        if a == b {
            return f64::INFINITY;
        }
        let spec = self.spec;
        match &mut self.kind {
            Kind::Lattice {
                ngen,
                span_i,
                span_j,
                width_j,
                tables,
            } => {
                let (pa, pb) = (cands[a], cands[b]);
                let di = pb.i - pa.i;
                let dj = pb.j - pa.j;
                let slot = ((di + *span_i) as usize) * *width_j + (dj + *span_j) as usize;
                let table = &mut tables[pa.gen * *ngen + pb.gen];
                let v = table[slot];
                if !v.is_nan() {
                    return v;
                }
                let rel = Placed {
                    gen: pb.gen,
                    i: di,
                    j: dj,
                };
                let d = dist_set_set(&spec.generators[pa.gen].components, &spec.components(&rel));
                table[slot] = d;
                d
            }
            Kind::Finite { n, matrix } => {
                let v = matrix[a * *n + b];
                if !v.is_nan() {
                    return v;
                }
                let d = dist_set_set(&spec.components(&cands[a]), &spec.components(&cands[b]));
                matrix[a * *n + b] = d;
                matrix[b * *n + a] = d;
                d
            }
        }
    }
}

/// Realizing points of the jump between two materialized stitches.
pub(crate) fn jump(spec: &PatternSpec, a: &Placed, b: &Placed) -> ClosestPair {
    closest_pair_sets(&spec.components(a), &spec.components(b))
}

/// Realizing points of the jump between an endpoint set and a stitch.
pub(crate) fn jump_from(set: &[Component], spec: &PatternSpec, b: &Placed) -> ClosestPair {
    closest_pair_sets(set, &spec.components(b))
}
