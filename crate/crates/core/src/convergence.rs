//! Quantitative convergence of rescaled balls to the tangent norm: the
//! constants `K` and `C`, a fitted limit norm, the Gromov–Hausdorff rate
//! `δ_R = H + K/R` and the intrinsic-flat mass bound `M_R`.
//!
//! Every distance enters through a [`Bracket`], so all reported bounds are
//! conservative even where the far-field estimates are used.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{AxisBox, Point};
use crate::metric::{Bracket, DistanceEngine};
use crate::norm::{convex_hull, norm_stats, Gauge, NormSpec, NormStats};
use crate::pattern::{PatternSpec, Placed};
use crate::raster::{rasterize_rescaled, write_file, VolumeBracket};
use crate::sampling;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "R,K_over_R,H,delta_R,vol_U1_lo,vol_U1_hi,vol_U2_lo,vol_U2_hi,M_R,distortion";

/// Largest sampled `|d̄(x, x') - F(x - x')|`: a lower estimate of `K`.
#[derive(Debug, Clone, Serialize)]
pub struct KEstimate {
    pub value: f64,
    pub witness: (Point, Point),
    pub sample_box: AxisBox,
    pub samples: usize,
    pub seed: u64,
}

/// The deviation certainly attained by a bracketed distance.
fn certain_gap(b: Bracket, f: f64) -> f64 {
    (b.lo - f).max(f - b.hi).max(0.0)
}

/// The largest deviation compatible with a bracketed distance.
fn possible_gap(b: Bracket, f: f64) -> f64 {
    (b.hi - f).max(f - b.lo).max(0.0)
}

/// Samples `samples` pairs uniformly in `sample_box`. Where only bounds on
/// `d̄` are available the certified part of the deviation is used, so the
/// result never exceeds the true supremum.
pub fn estimate_k(
    engine: &DistanceEngine,
    f: &NormSpec,
    sample_box: &AxisBox,
    samples: usize,
    seed: u64,
) -> Result<KEstimate> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let devs: Vec<(f64, Point, Point)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let (x, y) = sampling::pair_in(seed, k, sample_box);
            (certain_gap(engine.bracket(x, y), f.eval(y - x)), x, y)
        })
        .collect();
    let mut best = (0.0, devs[0].1, devs[0].2);
    for d in devs {
        if d.0 > best.0 {
            best = d;
        }
    }
    Ok(KEstimate {
        value: best.0,
        witness: (best.1, best.2),
        sample_box: *sample_box,
        samples,
        seed,
    })
}

/// `max |d(I, J) - F(j - j')|` over pairs of stitches meeting `window`,
/// measured between anchors. For lattices only the relative cell matters, so
/// each offset is evaluated once. Bounds are used conservatively.
pub fn estimate_c(engine: &DistanceEngine, f: &NormSpec, window: &AxisBox) -> f64 {
    let spec = engine.spec();
    let placed = spec.placed_near(window);
    let placed: Vec<Placed> = placed
        .into_iter()
        .filter(|p| spec.placed_bbox(p).intersects(window))
        .collect();
    let mut pairs: BTreeSet<(Placed, Placed)> = BTreeSet::new();
    for (k, a) in placed.iter().enumerate() {
        for b in &placed[k + 1..] {
            let key = if spec.is_periodic() {
                (
                    Placed {
                        gen: a.gen,
                        i: 0,
                        j: 0,
                    },
                    Placed {
                        gen: b.gen,
                        i: b.i - a.i,
                        j: b.j - a.j,
                    },
                )
            } else {
                (*a, *b)
            };
            pairs.insert(key);
        }
    }
    let pairs: Vec<(Placed, Placed)> = pairs.into_iter().collect();
    pairs
        .par_iter()
        .map(|(a, b)| {
            possible_gap(
                engine.stitch_bracket(a, b),
                f.eval(spec.anchor(b) - spec.anchor(a)),
            )
        })
        .reduce(|| 0.0, f64::max)
}

/// `2h + C + 2 dil(F) (h + L)`: an upper bound on `K`.
pub fn lemma_2_21_bound(h: f64, c: f64, dil: f64, l: f64) -> Result<f64> {
    if [h, c, dil, l].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput(
            "bound inputs must be nonnegative".into(),
        ));
    }
    Ok(2.0 * h + c + 2.0 * dil * (h + l))
}

/// Polygon gauge from `n` radial samples `u · R / d̄(0, R u)`, symmetrized and
/// convexified. The upper distance bound is used, so the fitted ball never
/// overshoots the sampled one.
pub fn fit_norm(engine: &DistanceEngine, scale: f64, n: usize) -> Result<NormSpec> {
    if n < 16 {
        return Err(Error::InvalidInput(format!(
            "need at least 16 directions, got {n}"
        )));
    }
    let spec = engine.spec();
    let floor = 100.0 * spec.separation().min(1.0);
    if !(scale >= floor) || !scale.is_finite() {
        return Err(Error::InvalidInput(format!(
            "fit scale must be at least {floor}, got {scale}"
        )));
    }
    let radial: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let u = Point::polar(2.0 * PI * k as f64 / n as f64);
            let d = engine.bracket(Point::ORIGIN, u * scale).hi;
            if !(d > 0.0) {
                return Err(Error::Precondition(format!(
                    "zero distance along direction {k}"
                )));
            }
            Ok(scale / d)
        })
        .collect();
    let radial = radial.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut pts = Vec::with_capacity(2 * n);
    if n.is_multiple_of(2) {
        // opposite directions share the smaller radius
        for k in 0..n / 2 {
            let p = Point::polar(2.0 * PI * k as f64 / n as f64) * radial[k].min(radial[k + n / 2]);
            pts.push(p);
            pts.push(-p);
        }
    } else {
        for (k, r) in radial.iter().enumerate() {
            let p = Point::polar(2.0 * PI * k as f64 / n as f64) * *r;
            pts.push(p);
            pts.push(-p);
        }
    }
    Ok(NormSpec::Gauge(Gauge::new(convex_hull(&pts))?))
}

/// `H = √(8 λ r (K/R) + (K/R)²)`.
pub fn gh_height(r: f64, scale: f64, k: f64, lambda: f64) -> f64 {
    let q = k / scale;
    (8.0 * lambda * r * q + q * q).sqrt()
}

/// `δ_R = H + K/R`.
pub fn gh_bound(r: f64, scale: f64, k: f64, lambda: f64) -> f64 {
    gh_height(r, scale, k, lambda) + k / scale
}

/// Checks `√(H² + a²) >= a + K/R` on `samples` values of `a` in `[0, 4λr]`.
pub fn height_guarantee_check(r: f64, scale: f64, k: f64, lambda: f64, samples: usize) -> bool {
    let h = gh_height(r, scale, k, lambda);
    let q = k / scale;
    (0..=samples).all(|i| {
        let a = 4.0 * lambda * r * i as f64 / samples.max(1) as f64;
        (h * h + a * a).sqrt() >= a + q - 1e-12
    })
}

/// Sampled points of the norm ball `F <= r` (rejection from its bounding square).
fn norm_ball_points(f: &NormSpec, lambda: f64, r: f64, count: usize, seed: u64) -> Vec<Point> {
    let b = AxisBox::square(Point::ORIGIN, lambda * r);
    let mut out = Vec::with_capacity(count);
    let mut k = 0u64;
    while out.len() < count && k < 100 * count as u64 + 100 {
        let p = sampling::point_in(seed, k, &b);
        k += 1;
        if f.eval(p) <= r {
            out.push(p);
        }
    }
    out
}

/// Half the largest possible `|d_R(v, w) - F(v - w)|` over sampled pairs of
/// the norm ball: the distortion of the identity correspondence.
pub fn gh_distortion_bound(
    engine: &DistanceEngine,
    f: &NormSpec,
    r: f64,
    scale: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let lambda = norm_stats(f, 360)?.lambda;
    let pts = norm_ball_points(f, lambda, r, 2 * samples, seed);
    let worst = pts
        .par_chunks(2)
        .filter(|c| c.len() == 2)
        .map(|c| {
            possible_gap(
                engine.rescaled_bracket(scale, c[0], c[1]),
                f.eval(c[1] - c[0]),
            )
        })
        .reduce(|| 0.0, f64::max);
    Ok(0.5 * worst)
}

/// Areas of `U_1 = {F > r, d_R(0, ·) < r}` and `U_2 = {F < r, d_R(0, ·) > r}`,
/// and how far their certain cells reach out of the level `F = r`.
#[derive(Debug, Clone, Serialize)]
pub struct SwifRegions {
    pub vol_u1: VolumeBracket,
    pub vol_u2: VolumeBracket,
    /// `F(center) - r` minus the grid slack, for each certain cell of `U_1`.
    pub u1_excess: Vec<f64>,
    /// `r - F(center)` minus the grid slack, for each certain cell of `U_2`.
    pub u2_excess: Vec<f64>,
    pub grid_slack: f64,
}

impl SwifRegions {
    /// Certain cells outside the bands `r < F < r + K/R` and `r - K/R < F < r`.
    pub fn violations(&self, k_over_r: f64) -> usize {
        self.u1_excess
            .iter()
            .chain(&self.u2_excess)
            .filter(|&&e| e > k_over_r)
            .count()
    }

    pub fn containment_ok(&self, k_over_r: f64) -> bool {
        self.violations(k_over_r) == 0
    }
}

pub fn swif_regions(
    engine: &DistanceEngine,
    f: &NormSpec,
    r: f64,
    scale: f64,
    window: &AxisBox,
    n: usize,
) -> Result<SwifRegions> {
    let stats = norm_stats(f, 360)?;
    let need = 2.0 * stats.lambda * r;
    if window.dist_point(Point::ORIGIN) > 0.0
        || window.min.x > -need
        || window.min.y > -need
        || window.max.x < need
        || window.max.y < need
    {
        return Err(Error::Precondition(format!(
            "window must contain the square of half-side {need}"
        )));
    }
    let raster = rasterize_rescaled(engine, scale, Point::ORIGIN, window, n)?;
    let g = raster.grid;
    let hd = g.half_diag();
    let fd = stats.dil * hd;
    let grid_slack = stats.dil.max(1.0) * 2.0 * hd;
    let (mut u1, mut u2) = ([0usize; 2], [0usize; 2]);
    let (mut e1, mut e2) = (Vec::new(), Vec::new());
    let (mut edge1, mut edge2) = (false, false);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let fc = f.eval(g.center(i, j));
            let (dlo, dhi) = (raster.lo[k] - hd, raster.hi[k] + hd);
            let on_edge = i == 0 || j == 0 || i + 1 == n || j + 1 == n;
            if fc + fd > r && dlo < r {
                u1[1] += 1;
                edge1 |= on_edge;
                if fc - fd > r && dhi < r {
                    u1[0] += 1;
                    e1.push(fc - r - grid_slack);
                }
            }
            if fc - fd < r && dhi > r {
                u2[1] += 1;
                edge2 |= on_edge;
                if fc + fd < r && dlo > r {
                    u2[0] += 1;
                    e2.push(r - fc - grid_slack);
                }
            }
        }
    }
    let a = g.cell_area();
    let vb = |c: [usize; 2], edge: bool| VolumeBracket {
        lo: c[0] as f64 * a,
        hi: c[1] as f64 * a,
        cell_area: a,
        boundary_cells: c[1] - c[0],
        touches_edge: edge,
    };
    Ok(SwifRegions {
        vol_u1: vb(u1, edge1),
        vol_u2: vb(u2, edge2),
        u1_excess: e1,
        u2_excess: e2,
        grid_slack,
    })
}

/// Area of the band `r - K/R < F < r + K/R`, which contains `U_1 ∪ U_2`
/// whenever `K` is a true bound.
pub fn band_area(stats: &NormStats, r: f64, scale: f64, k: f64) -> f64 {
    let q = k / scale;
    stats.unit_area * ((r + q).powi(2) - (r - q).max(0.0).powi(2))
}

/// `Vol(U_1) + Vol(U_2) + H α r + H λ² π r²`, with the region volumes capped
/// by the band that contains them.
pub fn swif_bound(
    r: f64,
    scale: f64,
    k: f64,
    stats: &NormStats,
    vol_u1: &VolumeBracket,
    vol_u2: &VolumeBracket,
) -> f64 {
    let h = gh_height(r, scale, k, stats.lambda);
    let vols = (vol_u1.hi + vol_u2.hi).min(band_area(stats, r, scale, k));
    vols + h * stats.alpha * r + h * stats.lambda * stats.lambda * PI * r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KMode {
    /// The principled upper bound `2h + C + 2 dil (h + L)`.
    LemmaBound,
    /// The sampled lower estimate, for tightness experiments only.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct TableSettings {
    pub r: f64,
    pub scales: Vec<f64>,
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
    pub k_mode: KMode,
    /// Box for sampling `K̂`.
    pub k_box: AxisBox,
    /// Window of stitch pairs for `C`.
    pub c_window: AxisBox,
}

impl TableSettings {
    pub fn new(r: f64, scales: Vec<f64>, grid: usize, samples: usize, seed: u64) -> Self {
        let b = AxisBox::square(Point::ORIGIN, 20.0);
        TableSettings {
            r,
            scales,
            grid,
            samples,
            seed,
            k_mode: KMode::LemmaBound,
            k_box: b,
            c_window: b,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub scale: f64,
    pub k_over_r: f64,
    pub h: f64,
    pub delta_r: f64,
    pub vol_u1: VolumeBracket,
    pub vol_u2: VolumeBracket,
    pub m_r: f64,
    pub distortion: f64,
    /// Certain region cells outside the bands for the `K` in use.
    pub violations: usize,
    /// The same count with `K̂` in place of `K`.
    pub sampled_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub pattern: String,
    pub norm: String,
    pub stats: NormStats,
    pub k_hat: KEstimate,
    pub c: f64,
    pub depth: (f64, f64),
    pub k_lemma: f64,
    /// `Some(0)` when `d̄` and `F` provably coincide.
    pub k_exact: Option<f64>,
    pub k_used: f64,
    pub k_mode: KMode,
    pub rows: Vec<ConvergenceRow>,
    pub monotone_gh: bool,
    pub monotone_swif: bool,
}

impl ConvergenceReport {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.monotone_gh {
            out.push("MONOTONE_GH");
        }
        if self.monotone_swif {
            out.push("MONOTONE_SWIF");
        }
        out
    }

    pub fn containment_ok(&self) -> bool {
        self.rows.iter().all(|r| r.violations == 0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let vals = [
                r.scale,
                r.k_over_r,
                r.h,
                r.delta_r,
                r.vol_u1.lo,
                r.vol_u1.hi,
                r.vol_u2.lo,
                r.vol_u2.hi,
                r.m_r,
                r.distortion,
            ];
            let cells: Vec<String> = vals.iter().map(|v| format!("{v:.8e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0])
}

pub fn convergence_table(
    spec: &PatternSpec,
    f: &NormSpec,
    settings: &TableSettings,
) -> Result<ConvergenceReport> {
    let s = settings;
    if s.scales.is_empty()
        || s.scales.windows(2).any(|w| !(w[1] > w[0]))
        || s.scales.iter().any(|r| !(*r > 0.0))
    {
        return Err(Error::InvalidInput(
            "scale schedule must be positive and increasing".into(),
        ));
    }
    if !(s.r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {}",
            s.r
        )));
    }
    let engine = DistanceEngine::new(spec);
    let stats = norm_stats(f, 360)?;
    let k_hat = estimate_k(&engine, f, &s.k_box, s.samples, s.seed)?;
    let c = estimate_c(&engine, f, &s.c_window);
    let depth = if spec.is_periodic() {
        spec.depth(1e-3, None)?
    } else {
        spec.depth(1e-3, Some(&s.c_window))?
    };
    let lmax = spec.lengths().1;
    let k_lemma = lemma_2_21_bound(depth.1, c, stats.dil, lmax)?;
    // point stitches leave the Euclidean distance untouched
    let k_exact = (lmax == 0.0 && matches!(f, NormSpec::Euclidean)).then_some(0.0);
    let k_used = match (k_exact, s.k_mode) {
        (Some(k), _) => k,
        (None, KMode::LemmaBound) => k_lemma,
        (None, KMode::Sampled) => k_hat.value,
    };
    let window = AxisBox::square(Point::ORIGIN, 2.0 * stats.lambda * s.r);
    let rows: Vec<Result<ConvergenceRow>> = s
        .scales
        .par_iter()
        .map(|&scale| {
            let h = gh_height(s.r, scale, k_used, stats.lambda);
            let regions = swif_regions(&engine, f, s.r, scale, &window, s.grid)?;
            let m_r = swif_bound(s.r, scale, k_used, &stats, &regions.vol_u1, &regions.vol_u2);
            let distortion = gh_distortion_bound(&engine, f, s.r, scale, s.samples, s.seed)?;
            Ok(ConvergenceRow {
                scale,
                k_over_r: k_used / scale,
                h,
                delta_r: h + k_used / scale,
                vol_u1: regions.vol_u1,
                vol_u2: regions.vol_u2,
                m_r,
                distortion,
                violations: regions.violations(k_used / scale),
                sampled_violations: regions.violations(k_hat.value / scale),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let gh: Vec<f64> = rows.iter().map(|r| r.delta_r).collect();
    let sw: Vec<f64> = rows.iter().map(|r| r.m_r).collect();
    Ok(ConvergenceReport {
        pattern: spec.name.clone(),
        norm: f.name(),
        stats,
        k_hat,
        c,
        depth,
        k_lemma,
        k_exact,
        k_used,
        k_mode: s.k_mode,
        monotone_gh: strictly_decreasing(&gh),
        monotone_swif: strictly_decreasing(&sw),
        rows,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(name: &str) -> PatternSpec {
        PatternSpec::builtin(name).unwrap()
    }

    #[test]
    fn height_examples() {
        assert_eq!(gh_height(1.0, 10.0, 0.0, 3.0), 0.0);
        assert_eq!(gh_bound(1.0, 10.0, 0.0, 3.0), 0.0);
        // 8·3·1·0.01 + 0.01² = 0.2401
        assert!((gh_height(1.0, 100.0, 1.0, 3.0) - 0.49).abs() < 1e-12);
        assert!((gh_bound(1.0, 100.0, 1.0, 3.0) - 0.5).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for r in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
            let h = gh_height(1.5, r, 4.0, 2.0);
            assert!(h <= last);
            last = h;
            assert!(height_guarantee_check(1.5, r, 4.0, 2.0, 1000));
        }
    }

    #[test]
    fn lemma_bound_examples() {
        assert_eq!(lemma_2_21_bound(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        let (c, dil, l) = (0.3, 1.2, 1.0);
        let a = lemma_2_21_bound(0.5, c, dil, l).unwrap();
        let b = lemma_2_21_bound(1.0, c, dil, l).unwrap();
        assert!((b - a - 2.0 * 0.5 * (1.0 + dil)).abs() < 1e-12);
        assert!(lemma_2_21_bound(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn calibration_constants_vanish() {
        let spec = pat("point_lattice");
        let eng = DistanceEngine::new(&spec);
        let b = AxisBox::square(Point::ORIGIN, 20.0);
        let k = estimate_k(&eng, &NormSpec::Euclidean, &b, 2000, 3).unwrap();
        assert!(k.value <= 1e-12);
        assert!(
            estimate_c(
                &eng,
                &NormSpec::Euclidean,
                &AxisBox::square(Point::ORIGIN, 5.0)
            ) <= 1e-12
        );
        assert!(estimate_k(&eng, &NormSpec::Euclidean, &b, 1, 3).is_err());
    }

    #[test]
    fn sampled_k_is_append_only() {
        let spec = pat("lattice_2x1");
        let eng = DistanceEngine::new(&spec);
        let f = NormSpec::Gauge(
            Gauge::new(vec![
                Point::new(2.0, -1.0),
                Point::new(2.0, 1.0),
                Point::new(-2.0, 1.0),
                Point::new(-2.0, -1.0),
            ])
            .unwrap(),
        );
        let b = AxisBox::square(Point::ORIGIN, 6.0);
        let mut last = 0.0;
        for n in [50, 100, 200, 400] {
            let k = estimate_k(&eng, &f, &b, n, 8).unwrap();
            assert!(k.value >= last);
            last = k.value;
        }
        // identical points contribute nothing
        let point = AxisBox {
            min: Point::new(0.3, 0.3),
            max: Point::new(0.3, 0.3),
        };
        assert_eq!(estimate_k(&eng, &f, &point, 10, 8).unwrap().value, 0.0);
    }

    #[test]
    fn c_examples() {
        let spec = pat("lattice_2x1");
        let eng = DistanceEngine::new(&spec);
        // F(x, y) = max(|x|/2, |y|)
        let f = NormSpec::Gauge(
            Gauge::new(vec![
                Point::new(2.0, -1.0),
                Point::new(2.0, 1.0),
                Point::new(-2.0, 1.0),
                Point::new(-2.0, -1.0),
            ])
            .unwrap(),
        );
        // the stitches at (0,0) and (2,0): gap 1, F((2,0)) = 1
        let w = AxisBox::new(Point::new(0.0, -0.1), Point::new(3.0, 0.1)).unwrap();
        assert_eq!(spec.instantiate(&w).len(), 2);
        assert!(estimate_c(&eng, &f, &w).abs() < 1e-12);
        let single = AxisBox::new(Point::new(0.2, -0.1), Point::new(0.8, 0.1)).unwrap();
        assert_eq!(estimate_c(&eng, &f, &single), 0.0);
    }

    #[test]
    fn fitted_norms() {
        let eng = DistanceEngine::new(&pat("point_lattice"));
        let NormSpec::Gauge(g) = fit_norm(&eng, 100.0, 32).unwrap() else {
            panic!()
        };
        assert_eq!(g.vertices().len(), 32);
        assert!(g.vertices().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(fit_norm(&eng, 100.0, 8).is_err());
        assert!(fit_norm(&eng, 1.0, 32).is_err());

        let eng = DistanceEngine::new(&pat("lattice_2x1"));
        let f = fit_norm(&eng, 1000.0, 64).unwrap();
        assert!((f.eval(Point::new(1.0, 0.0)) - 0.5).abs() < 1e-2);
        assert!((f.eval(Point::new(0.0, 1.0)) - 1.0).abs() < 1e-2);
        // the unit ball sits inside the ellipse (x/2)² + y² = 1 and near it
        let NormSpec::Gauge(g) = &f else { panic!() };
        for v in g.vertices() {
            let e = (v.x / 2.0).powi(2) + v.y * v.y;
            assert!((0.85..=1.01).contains(&e), "{v:?}: {e}");
        }
    }

    #[test]
    fn regions_and_mass() {
        let eng = DistanceEngine::new(&pat("point_lattice"));
        let f = NormSpec::Euclidean;
        let w = AxisBox::square(Point::ORIGIN, 2.0);
        let reg = swif_regions(&eng, &f, 1.0, 10.0, &w, 128).unwrap();
        assert_eq!((reg.vol_u1.lo, reg.vol_u2.lo), (0.0, 0.0));
        assert!(reg.containment_ok(0.0));
        let stats = norm_stats(&f, 360).unwrap();
        assert_eq!(
            swif_bound(1.0, 10.0, 0.0, &stats, &reg.vol_u1, &reg.vol_u2),
            0.0
        );
        assert!(swif_regions(
            &eng,
            &f,
            1.0,
            10.0,
            &AxisBox::square(Point::ORIGIN, 1.0),
            64
        )
        .is_err());
        // band area of a disk annulus
        let a = band_area(&stats, 1.0, 10.0, 1.0);
        assert!((a - PI * (1.21 - 0.81)).abs() < 1e-12);
    }

    #[test]
    fn tables() {
        let spec = pat("point_lattice");
        let s = TableSettings::new(1.0, vec![10.0, 100.0, 1000.0], 64, 200, 1);
        let rep = convergence_table(&spec, &NormSpec::Euclidean, &s).unwrap();
        assert_eq!(rep.k_used, 0.0);
        for r in &rep.rows {
            assert_eq!((r.h, r.delta_r, r.m_r), (0.0, 0.0, 0.0));
            assert!(r.distortion <= 1e-12);
        }
        assert!(rep.flags().is_empty());
        let csv = rep.to_csv();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("1.00000000e1,"));

        let one = TableSettings::new(1.0, vec![10.0], 64, 200, 1);
        let rep = convergence_table(&spec, &NormSpec::Euclidean, &one).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(!rep.monotone_gh && !rep.monotone_swif);
        let bad = TableSettings::new(1.0, vec![100.0, 10.0], 64, 200, 1);
        assert!(convergence_table(&spec, &NormSpec::Euclidean, &bad).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
