//! Brute-force reference: `min_{k <= k_max} d_k(v, w)` where `d_k` jumps to
//! and between exactly `k` stitches, adjacent ones distinct. Layer `k` holds,
//! per stitch, the cheapest arrival using exactly `k` stitches.

use crate::geometry::Point;
use crate::pattern::PatternSpec;

use super::reach_factor;
use super::solver::reach_candidates;
use super::weights::Weights;
use crate::geometry::{Component, Segment};

pub fn layered_oracle(spec: &PatternSpec, v: Point, w: Point, k_max: usize) -> f64 {
    let direct = v.dist(w);
    if k_max == 0 || v == w {
        return direct;
    }
    let beta = reach_factor(spec);
    // Own upper bound first (thin ellipse), then the sound candidate set.
    let thin = layers(spec, v, w, k_max, direct * (1.0 + 1e-12), direct, beta);
    if beta == 1.0 {
        return thin;
    }
    layers(
        spec,
        v,
        w,
        k_max,
        beta * thin * (1.0 + 1e-12) + 1e-12,
        direct,
        beta,
    )
}

fn layers(
    spec: &PatternSpec,
    v: Point,
    w: Point,
    k_max: usize,
    bound: f64,
    direct: f64,
    beta: f64,
) -> f64 {
    let src = [Component::Segment(Segment::new(v, v))];
    let dst = [Component::Segment(Segment::new(w, w))];
    let (cands, ds, dt) = reach_candidates(spec, &src, &dst, bound, &[]);
    let n = cands.len();
    if n == 0 {
        return direct;
    }
    let mut wt = Weights::new(spec, &cands);
    let mut matrix = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            matrix[a * n + b] = wt.get(&cands, a, b);
        }
    }
    let mut ans = direct;
    let mut cur = ds.clone();
    let mut next = vec![f64::INFINITY; n];
    for k in 1..=k_max {
        let mut layer_min = f64::INFINITY;
        for j in 0..n {
            layer_min = layer_min.min(cur[j]);
            ans = ans.min(cur[j] + dt[j]);
        }
        // Every further layer adds at least one nonnegative jump.
        if k == k_max || layer_min >= ans {
            break;
        }
        next.iter_mut().for_each(|x| *x = f64::INFINITY);
        for i in 0..n {
            let di = cur[i];
            if di + dt[i] / beta >= ans {
                continue;
            }
            let row = &matrix[i * n..(i + 1) * n];
            for (nx, wij) in next.iter_mut().zip(row) {
                let c = di + wij;
                if c < *nx {
                    *nx = c;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    ans
}
