//! Grid rasters of `ρ_x` and of the stitch distance `D`, with certified
//! inner/outer area brackets from the 1-Lipschitz property: a cell whose
//! center value is at least half a diagonal below (above) a level lies
//! entirely inside (outside) the sublevel set.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{AxisBox, Component, Point};
use crate::metric::{Bracket, DistanceEngine, SourceField};
use crate::pattern::PatternSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeBracket {
    pub lo: f64,
    pub hi: f64,
    /// Area of one cell.
    pub cell_area: f64,
    pub boundary_cells: usize,
    /// Some non-outside cell touches the window edge: the set may be clipped.
    pub touches_edge: bool,
}

impl VolumeBracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, o: &VolumeBracket) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Inside,
    Boundary,
    Outside,
}

/// Cell grid geometry shared by all rasters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub window: AxisBox,
    pub n: usize,
}

impl Grid {
    pub fn new(window: AxisBox, n: usize) -> Result<Grid> {
        if n < 1 || !(window.width() > 0.0) || !(window.height() > 0.0) {
            return Err(Error::InvalidInput(
                "raster needs a nonempty window and at least one cell".into(),
            ));
        }
        Ok(Grid { window, n })
    }

    pub fn cell_size(&self) -> Point {
        Point::new(
            self.window.width() / self.n as f64,
            self.window.height() / self.n as f64,
        )
    }

    pub fn half_diag(&self) -> f64 {
        let c = self.cell_size();
        0.5 * c.x.hypot(c.y)
    }

    pub fn cell_area(&self) -> f64 {
        let c = self.cell_size();
        c.x * c.y
    }

    /// Center of cell `(i, j)`; `i` counts columns, `j` rows from the bottom.
    pub fn center(&self, i: usize, j: usize) -> Point {
        let c = self.cell_size();
        Point::new(
            self.window.min.x + (i as f64 + 0.5) * c.x,
            self.window.min.y + (j as f64 + 0.5) * c.y,
        )
    }

    pub fn cell_box(&self, i: usize, j: usize) -> AxisBox {
        let c = self.cell_size();
        let min = Point::new(
            self.window.min.x + i as f64 * c.x,
            self.window.min.y + j as f64 * c.y,
        );
        AxisBox { min, max: min + c }
    }

    fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n
    }

    /// Evaluates `f` at every cell center, row-major from the bottom row.
    pub fn evaluate<T: Send>(&self, f: impl Fn(Point) -> T + Sync) -> Vec<T> {
        (0..self.n * self.n)
            .into_par_iter()
            .map(|k| f(self.center(k % self.n, k / self.n)))
            .collect()
    }
}

/// `f` at the centers of an `n × n` grid over `window`.
pub fn distance_grid(window: &AxisBox, n: usize, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
    Grid { window: *window, n }.evaluate(f)
}

/// Area bracket of `{f <= level}` from center values of a 1-Lipschitz `f`.
pub fn sublevel_bracket(values: &[f64], window: &AxisBox, n: usize, level: f64) -> VolumeBracket {
    let g = Grid { window: *window, n };
    classify_sum(&g, |k| classify(values[k], values[k], level, g.half_diag()))
}

fn classify(lo: f64, hi: f64, r: f64, hd: f64) -> CellClass {
    if hi <= r - hd {
        CellClass::Inside
    } else if lo >= r + hd {
        CellClass::Outside
    } else {
        CellClass::Boundary
    }
}

fn classify_sum(g: &Grid, class: impl Fn(usize) -> CellClass) -> VolumeBracket {
    let (mut inside, mut boundary, mut edge) = (0usize, 0usize, false);
    for k in 0..g.n * g.n {
        let c = class(k);
        if c != CellClass::Outside && g.on_edge(k % g.n, k / g.n) {
            edge = true;
        }
        match c {
            CellClass::Inside => inside += 1,
            CellClass::Boundary => boundary += 1,
            CellClass::Outside => {}
        }
    }
    let a = g.cell_area();
    VolumeBracket {
        lo: inside as f64 * a,
        hi: (inside + boundary) as f64 * a,
        cell_area: a,
        boundary_cells: boundary,
        touches_edge: edge,
    }
}

/// Per-cell bounds on `ρ_{x0}` (equal bounds when computed exactly).
#[derive(Debug, Clone)]
pub struct BallRaster {
    pub grid: Grid,
    pub center: Point,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BallRaster {
    pub fn window(&self) -> AxisBox {
        self.grid.window
    }

    pub fn cells_per_side(&self) -> usize {
        self.grid.n
    }

    /// Cell-center value (midpoint of the bounds if not exact).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let k = j * self.grid.n + i;
        0.5 * (self.lo[k] + self.hi[k])
    }

    pub fn class(&self, i: usize, j: usize, r: f64) -> CellClass {
        let k = j * self.grid.n + i;
        classify(self.lo[k], self.hi[k], r, self.grid.half_diag())
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

/// Exact `ρ_{x0}` at every cell center of an `n × n` grid.
pub fn rasterize_rho(
    spec: &PatternSpec,
    x0: Point,
    window: &AxisBox,
    n: usize,
) -> Result<BallRaster> {
    if n < 16 {
        return Err(Error::InvalidInput(format!(
            "raster needs at least 16 cells per side, got {n}"
        )));
    }
    let grid = Grid::new(*window, n)?;
    let reach = window
        .corners()
        .iter()
        .map(|c| c.dist(x0))
        .fold(0.0, f64::max);
    let field = SourceField::new(spec, x0, reach)?;
    let vals = grid.evaluate(|p| field.eval(p));
    Ok(BallRaster {
        grid,
        center: x0,
        lo: vals.clone(),
        hi: vals,
    })
}

/// Bounds on `d_R(0-scaled x0, ·) = d̄(R x0, R ·)/R` over a grid, using the best
/// engine available (exact, or far-field brackets at large range).
pub fn rasterize_rescaled(
    engine: &DistanceEngine,
    scale: f64,
    x0: Point,
    window: &AxisBox,
    n: usize,
) -> Result<BallRaster> {
    let grid = Grid::new(*window, n)?;
    let big = AxisBox {
        min: window.min * scale,
        max: window.max * scale,
    };
    let src = engine.source(x0 * scale, &big)?;
    let vals: Vec<Bracket> = grid.evaluate(|p| src.bracket(p * scale).scale(1.0 / scale));
    Ok(BallRaster {
        grid,
        center: x0,
        lo: vals.iter().map(|b| b.lo).collect(),
        hi: vals.iter().map(|b| b.hi).collect(),
    })
}

/// `[inside area, inside + boundary area]` of `U_r = {ρ <= r}`.
pub fn ball_volume(raster: &BallRaster, r: f64) -> VolumeBracket {
    let hd = raster.grid.half_diag();
    classify_sum(&raster.grid, |k| {
        classify(raster.lo[k], raster.hi[k], r, hd)
    })
}

/// Bracketed area of `{x ∈ window : D(x) <= eps}`.
pub fn tube_raster_volume(
    spec: &PatternSpec,
    eps: f64,
    window: &AxisBox,
    n: usize,
) -> Result<VolumeBracket> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tube radius must be positive, got {eps}"
        )));
    }
    Grid::new(*window, n)?;
    let index = spec.stitch_index(window);
    let vals = distance_grid(window, n, |p| index.distance(p));
    Ok(sublevel_bracket(&vals, window, n, eps))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartVolumes {
    /// `A_0 = U ∩ {D >= 1}`, `A_k = U ∩ {1/(k+1) <= D < 1/k}`.
    pub pieces: Vec<VolumeBracket>,
    /// `U ∩ {D < 1/(k_max+1)}`.
    pub tail: VolumeBracket,
    /// Bracket of `Vol(U)` implied by the truncated series and the tail.
    pub total: VolumeBracket,
    /// Partial sums of the lower and upper piece bounds.
    pub partial_sums: Vec<(f64, f64)>,
}

/// Volumes of the chart pieces of `U_r` cut by distance bands to the stitches.
pub fn chart_decomposition_volumes(
    raster: &BallRaster,
    spec: &PatternSpec,
    r: f64,
    k_max: usize,
) -> Result<ChartVolumes> {
    if k_max < 1 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let g = raster.grid;
    let index = spec.stitch_index(&g.window);
    let dvals = g.evaluate(|p| index.distance(p));
    let hd = g.half_diag();
    let in_u = |k: usize| classify(raster.lo[k], raster.hi[k], r, hd);
    // band k covers D in [lo_k, hi_k)
    let band = |k: usize| -> (f64, f64) {
        if k == 0 {
            (1.0, f64::INFINITY)
        } else {
            (1.0 / (k as f64 + 1.0), 1.0 / k as f64)
        }
    };
    let piece = |lo_d: f64, hi_d: f64| {
        classify_sum(&g, |k| {
            let u = in_u(k);
            if u == CellClass::Outside {
                return CellClass::Outside;
            }
            let (a, b) = (dvals[k] - hd, dvals[k] + hd);
            let certain_band = a >= lo_d && b < hi_d;
            let possible_band = b >= lo_d && a < hi_d;
            match (u, certain_band, possible_band) {
                (_, _, false) => CellClass::Outside,
                (CellClass::Inside, true, _) => CellClass::Inside,
                _ => CellClass::Boundary,
            }
        })
    };
    let pieces: Vec<VolumeBracket> = (0..=k_max).map(|k| piece(band(k).0, band(k).1)).collect();
    let tail = piece(f64::NEG_INFINITY, 1.0 / (k_max as f64 + 1.0));
    let mut partial_sums = Vec::with_capacity(pieces.len());
    let (mut slo, mut shi) = (0.0, 0.0);
    for p in &pieces {
        slo += p.lo;
        shi += p.hi;
        partial_sums.push((slo, shi));
    }
    let total = VolumeBracket {
        lo: slo,
        hi: shi + tail.hi,
        cell_area: g.cell_area(),
        boundary_cells: pieces.iter().map(|p| p.boundary_cells).sum::<usize>()
            + tail.boundary_cells,
        touches_edge: pieces.iter().any(|p| p.touches_edge) || tail.touches_edge,
    };
    Ok(ChartVolumes {
        pieces,
        tail,
        total,
        partial_sums,
    })
}

/// Length of the level curve `ρ = r` by marching squares over cell centers,
/// and a slack-widened upper value. Evidence only: not a certified bracket.
pub fn perimeter_bracket(raster: &BallRaster, r: f64) -> (f64, f64) {
    let g = raster.grid;
    let n = g.n;
    let c = g.cell_size();
    let v = |i: usize, j: usize| raster.value(i, j) - r;
    let mut total = 0.0;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            // corners counterclockwise from bottom-left
            let corner = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let f: Vec<f64> = corner.iter().map(|&(a, b)| v(a, b)).collect();
            let p: Vec<Point> = corner.iter().map(|&(a, b)| g.center(a, b)).collect();
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (fa, fb) = (f[e], f[(e + 1) % 4]);
                if (fa <= 0.0) != (fb <= 0.0) {
                    let t = fa / (fa - fb);
                    cuts.push(p[e] + (p[(e + 1) % 4] - p[e]) * t);
                }
            }
            match cuts.len() {
                2 => total += cuts[0].dist(cuts[1]),
                4 => {
                    // saddle: pair crossings by the sign of the center average
                    let center_inside = f.iter().sum::<f64>() / 4.0 <= 0.0;
                    let bl_inside = f[0] <= 0.0;
                    if center_inside == bl_inside {
                        total += cuts[0].dist(cuts[1]) + cuts[2].dist(cuts[3]);
                    } else {
                        total += cuts[0].dist(cuts[3]) + cuts[1].dist(cuts[2]);
                    }
                }
                _ => {}
            }
        }
    }
    let slack = 4.0 * std::f64::consts::PI * c.x.max(c.y);
    (total, total + slack)
}

pub fn write_csv(raster: &BallRaster, path: &Path) -> Result<()> {
    let mut s = String::from("x,y,rho\n");
    let g = raster.grid;
    for j in 0..g.n {
        for i in 0..g.n {
            let p = g.center(i, j);
            let _ = writeln!(s, "{:.9e},{:.9e},{:.9e}", p.x, p.y, raster.value(i, j));
        }
    }
    write_file(path, &s)
}

pub(crate) fn write_file(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// SVG with inside/boundary cells filled and the stitches drawn on top.
pub fn svg_export(raster: &BallRaster, spec: &PatternSpec, r: f64, path: &Path) -> Result<()> {
    let g = raster.grid;
    let w = g.window;
    let c = g.cell_size();
    let unit = 800.0 / w.width().max(w.height());
    let (width, height) = (w.width() * unit, w.height() * unit);
    let sx = |x: f64| (x - w.min.x) * unit;
    let sy = |y: f64| (w.max.y - y) * unit;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{width:.3}" height="{height:.3}" fill="#ffffff"/>"##
    );
    for j in 0..g.n {
        for i in 0..g.n {
            let fill = match raster.class(i, j, r) {
                CellClass::Inside => "#3b6fb6",
                CellClass::Boundary => "#f0a830",
                CellClass::Outside => continue,
            };
            let b = g.cell_box(i, j);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                sx(b.min.x),
                sy(b.max.y),
                c.x * unit,
                c.y * unit
            );
        }
    }
    for st in spec.instantiate(&w) {
        for comp in &st.components {
            match comp {
                Component::Segment(sg) => {
                    let _ = writeln!(
                        s,
                        r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#c0392b" stroke-width="2"/>"##,
                        sx(sg.a.x),
                        sy(sg.a.y),
                        sx(sg.b.x),
                        sy(sg.b.y)
                    );
                }
                Component::Box(b) => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#c0392b" stroke-width="2"/>"##,
                        sx(b.min.x),
                        sy(b.max.y),
                        b.width() * unit,
                        b.height() * unit
                    );
                }
            }
        }
    }
    s.push_str("</svg>\n");
    write_file(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pat(name: &str) -> PatternSpec {
        PatternSpec::builtin(name).unwrap()
    }

    #[test]
    fn euclidean_disk_area() {
        let x0 = Point::new(0.3, 0.2);
        let w = AxisBox::square(x0, 1.5);
        let r = rasterize_rho(&pat("point_lattice"), x0, &w, 256).unwrap();
        assert!(r.is_exact());
        let v = ball_volume(&r, 1.0);
        assert!(v.contains(PI), "[{}, {}]", v.lo, v.hi);
        assert!(v.width() < 0.15);
        assert!(!v.touches_edge);
        let (est, up) = perimeter_bracket(&r, 1.0);
        assert!((est - 2.0 * PI).abs() < 1e-2 && up >= 2.0 * PI);
    }

    #[test]
    fn stadium_around_the_source_stitch() {
        // the whole first stitch is at distance zero from a point on it
        let spec = pat("two_segments");
        let x0 = Point::new(0.5, 0.0);
        let w = AxisBox::new(Point::new(-1.0, -1.0), Point::new(2.0, 1.0)).unwrap();
        let r = rasterize_rho(&spec, x0, &w, 512).unwrap();
        let v = ball_volume(&r, 0.5);
        assert!(v.contains(1.0 + PI * 0.25), "[{}, {}]", v.lo, v.hi);
        assert!(rasterize_rho(&spec, x0, &w, 8).is_err());
    }

    #[test]
    fn rescaled_raster_is_consistent() {
        let spec = pat("lattice_2x1");
        let eng = DistanceEngine::new(&spec);
        let w = AxisBox::square(Point::ORIGIN, 1.0);
        let r = rasterize_rescaled(&eng, 2.0, Point::ORIGIN, &w, 32).unwrap();
        let exact = rasterize_rho(
            &spec,
            Point::ORIGIN,
            &AxisBox::square(Point::ORIGIN, 2.0),
            32,
        )
        .unwrap();
        for k in 0..32 * 32 {
            assert!((r.lo[k] * 2.0 - exact.lo[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn tube_area() {
        let spec = pat("two_segments");
        let w = AxisBox::new(Point::new(-1.0, -1.0), Point::new(5.0, 1.0)).unwrap();
        let v = tube_raster_volume(&spec, 0.3, &w, 1024).unwrap();
        let exact = 2.0 * (0.6 + PI * 0.09);
        assert!(v.contains(exact), "[{}, {}] vs {exact}", v.lo, v.hi);
        assert!(tube_raster_volume(&spec, 0.0, &w, 16).is_err());
    }

    #[test]
    fn chart_pieces_add_up() {
        let spec = pat("lattice_2x1");
        let x0 = Point::new(0.5, 0.5);
        let w = AxisBox::square(x0, 3.0);
        let r = rasterize_rho(&spec, x0, &w, 256).unwrap();
        let vol = ball_volume(&r, 1.5);
        let c = chart_decomposition_volumes(&r, &spec, 1.5, 8).unwrap();
        assert!(c.total.overlaps(&vol));
        assert!(c.total.lo <= vol.lo + 1e-12 && vol.hi <= c.total.hi + 1e-12);
        // D <= sqrt(2)/2 < 1 everywhere, so the first piece is empty
        assert_eq!(c.pieces[0].hi, 0.0);
        assert_eq!(c.partial_sums.len(), 9);
        assert!(chart_decomposition_volumes(&r, &spec, 1.5, 0).is_err());
    }

    #[test]
    fn outputs_are_written() {
        let spec = pat("lattice_2x1");
        let w = AxisBox::square(Point::ORIGIN, 1.0);
        let r = rasterize_rho(&spec, Point::ORIGIN, &w, 16).unwrap();
        let dir = std::env::temp_dir().join(format!("raster-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        write_csv(&r, &dir.join("b.csv")).unwrap();
        svg_export(&r, &spec, 0.5, &dir.join("b.svg")).unwrap();
        let csv = std::fs::read_to_string(dir.join("b.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 256);
        assert!(csv.starts_with("x,y,rho\n"));
        let svg = std::fs::read_to_string(dir.join("b.svg")).unwrap();
        assert!(svg.contains("<svg") && svg.contains("<line"));
        assert!(write_csv(&r, &dir.join("missing/b.csv")).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
