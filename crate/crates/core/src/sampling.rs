//! Counter-based sampling: sample `i` of a run depends only on `(seed, i)`,
//! so results are independent of evaluation order and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{AxisBox, Point};

/// A generator dedicated to sample `index` of the run seeded with `seed`.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn uniform_in<R: Rng>(rng: &mut R, b: &AxisBox) -> Point {
    let x = if b.width() > 0.0 {
        rng.gen_range(b.min.x..=b.max.x)
    } else {
        b.min.x
    };
    let y = if b.height() > 0.0 {
        rng.gen_range(b.min.y..=b.max.y)
    } else {
        b.min.y
    };
    Point::new(x, y)
}

/// Pair number `index` drawn uniformly from `b × b`.
pub fn pair_in(seed: u64, index: u64, b: &AxisBox) -> (Point, Point) {
    let mut rng = rng_for(seed, index);
    let p = uniform_in(&mut rng, b);
    let q = uniform_in(&mut rng, b);
    (p, q)
}

pub fn point_in(seed: u64, index: u64, b: &AxisBox) -> Point {
    uniform_in(&mut rng_for(seed, index), b)
}
