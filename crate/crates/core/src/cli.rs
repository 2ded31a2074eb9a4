//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::convergence::{self, KMode, TableSettings};
use crate::geometry::{AxisBox, Point};
use crate::metric::{reach_factor, smocked_distance, DistanceEngine};
use crate::norm::{norm_stats, GaugeFile, NormSpec};
use crate::pattern::PatternSpec;
use crate::raster::{self, write_file};
use crate::Error;

const EXIT_CODES: &str = "\
Exit codes:
  0  success, all certified checks passed
  1  usage or other error
  2  malformed or unknown pattern (or gauge file)
  3  bad coordinates
  4  a certified check failed (bracket, containment, bound)
  5  file could not be read or written

Output: numbers are fixed-format and locale independent.
tangent CSV columns: R,K_over_R,H,delta_R,vol_U1_lo,vol_U1_hi,vol_U2_lo,vol_U2_hi,M_R,distortion
ball CSV columns: x,y,rho (cell centers, row by row from the bottom)

Environment: SMOCKLAB_THREADS=<n> caps the worker threads.";

#[derive(Parser, Debug)]
#[command(name = "smocklab", version, about = "Distances, balls and tangent cones of smocked planes", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct PatternArg {
    /// Pattern JSON file or builtin name (lattice_2x1, point_lattice, two_segments, box_stitch, x_plus, x_T, x_square)
    #[arg(long)]
    pattern: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KChoice {
    Lemma,
    Sampled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smocked distance between two points, with an optimal jump sequence
    Dist {
        #[command(flatten)]
        pattern: PatternArg,
        /// Start point `x,y`
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// End point `x,y`
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Separation, depth bracket, stitch lengths and niceness verdict
    Invariants {
        #[command(flatten)]
        pattern: PatternArg,
        /// Depth tolerance
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Grid for the niceness tube areas
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Also sample the cover-radius check with this seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rasterize the ball of radius r around a point (SVG + CSV)
    Ball {
        #[command(flatten)]
        pattern: PatternArg,
        /// Center `x,y`
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// SVG path; the CSV goes next to it with extension .csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Area of the eps-tube around the stitches in the default window
    Tube {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Convergence table of rescaled balls toward the tangent norm
    Tangent {
        #[command(flatten)]
        pattern: PatternArg,
        /// Ball radius r
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Increasing scales `R1,R2,...`
        #[arg(long, default_value = "10,100,1000,10000")]
        scales: String,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Norm name, gauge JSON file, or `fit` (default: euclidean for point stitches, else fit)
        #[arg(long)]
        norm: Option<String>,
        /// Which K drives the bounds
        #[arg(long, value_enum, default_value_t = KChoice::Lemma)]
        k: KChoice,
        /// CSV output path (printed to stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the tangent norm as a polygon gauge
    Normfit {
        #[command(flatten)]
        pattern: PatternArg,
        /// Fit scale R
        #[arg(long, default_value = "1000")]
        scales: String,
        /// Number of directions
        #[arg(long, default_value_t = 64)]
        directions: usize,
        /// Gauge JSON output path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled lower estimate and principled upper bound on K
    Kbound {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Half-side of the sampling box around the origin
        #[arg(long, default_value_t = 20.0)]
        radius: f64,
        #[arg(long)]
        norm: Option<String>,
    },
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Coordinates(String),
    Check(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Coordinates(_) => 3,
            Failure::Check(_) => 4,
            Failure::Lib(e) => match e {
                Error::Pattern(_)
                | Error::DegenerateLattice(..)
                | Error::UnknownStitch(_)
                | Error::Json(_) => 2,
                Error::Io { .. } => 5,
                _ => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Coordinates(m) | Failure::Check(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    run_with(std::env::args_os())
}

pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message());
        return f.code();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var("SMOCKLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Usage(format!(
            "SMOCKLAB_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    // a pool may already exist when embedded; keep it
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn load_pattern(arg: &PatternArg) -> Result<PatternSpec, Failure> {
    let path = Path::new(&arg.pattern);
    if path.exists() {
        return Ok(PatternSpec::from_file(path)?);
    }
    if arg.pattern.ends_with(".json") {
        return Err(Error::Io {
            path: arg.pattern.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        }
        .into());
    }
    Ok(PatternSpec::builtin(&arg.pattern)?)
}

fn parse_point(s: &str) -> Result<Point, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::Coordinates(format!("expected `x,y` with finite numbers, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    Ok(Point::new(x, y))
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Failure::Usage(format!("bad scale `{t}` in `{s}`")))
        })
        .collect()
}

fn check_grid(n: usize) -> CliResult {
    if n.is_power_of_two() && (16..=4096).contains(&n) {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "grid must be a power of two between 16 and 4096, got {n}"
        )))
    }
}

fn positive(name: &str, v: f64) -> CliResult {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// `fit` (or no choice for a pattern with extended stitches) fits a gauge.
fn resolve_norm(choice: Option<&str>, engine: &DistanceEngine) -> Result<NormSpec, Failure> {
    let fit = || -> Result<NormSpec, Failure> { Ok(convergence::fit_norm(engine, 1000.0, 64)?) };
    match choice {
        None if engine.spec().lengths().1 == 0.0 => Ok(NormSpec::Euclidean),
        None | Some("fit") => fit(),
        Some(s) if Path::new(s).exists() => {
            let src = std::fs::read_to_string(s).map_err(|source| Error::Io {
                path: s.into(),
                source,
            })?;
            let g: GaugeFile = serde_json::from_str(&src).map_err(Error::from)?;
            Ok(g.to_norm()?)
        }
        Some(s) => Ok(NormSpec::parse(s)?),
    }
}

fn fmt_point(p: Point) -> String {
    format!("({:.12},{:.12})", p.x, p.y)
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Dist { pattern, from, to } => {
            let spec = load_pattern(&pattern)?;
            let (v, w) = (parse_point(&from)?, parse_point(&to)?);
            let (d, wit) = smocked_distance(&spec, v, w);
            println!("{d:.12}");
            for (k, h) in wit.hops.iter().enumerate() {
                let id = match (&h.stitch, k) {
                    (Some(s), _) => s.clone(),
                    (None, 0) => "start".into(),
                    (None, _) => "end".into(),
                };
                let len = if k == 0 {
                    0.0
                } else {
                    wit.segment_lengths[k - 1]
                };
                println!(
                    "hop {id} {}→{} {len:.12}",
                    fmt_point(h.entry),
                    fmt_point(h.exit)
                );
            }
            Ok(())
        }
        Command::Invariants {
            pattern,
            tol,
            grid,
            seed,
        } => {
            check_grid(grid)?;
            positive("tol", tol)?;
            let spec = load_pattern(&pattern)?;
            let window = spec.default_window();
            let depth_window = (!spec.is_periodic()).then_some(window);
            let (h_lo, h_hi) = spec.depth(tol, depth_window.as_ref())?;
            let (lmin, lmax) = spec.lengths();
            println!("pattern {}", spec.name);
            if let Some(n) = &spec.note {
                println!("note {n}");
            }
            println!("separation {:.12}", spec.separation());
            println!("depth [{h_lo:.12}, {h_hi:.12}]");
            println!("length_min {lmin:.12}");
            println!("length_max {lmax:.12}");
            let nice = spec.niceness_report(&window, &[0.2, 0.1, 0.05, 0.02, 0.01], grid, 0.2)?;
            for (e, v) in nice.eps.iter().zip(&nice.volumes) {
                println!("tube eps={e:.3} area [{:.9}, {:.9}]", v.lo, v.hi);
            }
            println!("niceness {}", nice.verdict);
            if let Some(seed) = seed {
                let (ok, worst, at) =
                    spec.cover_radius_check(h_hi, 4096, seed, depth_window.as_ref())?;
                println!(
                    "cover_radius max_D {worst:.12} at {} {}",
                    fmt_point(at),
                    if ok { "OK" } else { "FAIL" }
                );
                if !ok {
                    return Err(Failure::Check(
                        "sampled stitch distance exceeds depth + L_max".into(),
                    ));
                }
            }
            Ok(())
        }
        Command::Ball {
            pattern,
            from,
            radius,
            grid,
            out,
        } => {
            check_grid(grid)?;
            positive("radius", radius)?;
            let spec = load_pattern(&pattern)?;
            let x0 = parse_point(&from)?;
            // a path of cost r moves at most β r plus one stitch
            let half = reach_factor(&spec) * radius + spec.lengths().1 + 0.5;
            let window = AxisBox::square(x0, half);
            let r = raster::rasterize_rho(&spec, x0, &window, grid)?;
            let v = raster::ball_volume(&r, radius);
            let (p_lo, p_hi) = raster::perimeter_bracket(&r, radius);
            println!(
                "window [{:.6},{:.6}]x[{:.6},{:.6}]",
                window.min.x, window.max.x, window.min.y, window.max.y
            );
            println!("volume [{:.12}, {:.12}]", v.lo, v.hi);
            println!("boundary_cells {}", v.boundary_cells);
            println!("perimeter_estimate {p_lo:.9} (upper {p_hi:.9})");
            if let Some(svg) = out {
                raster::svg_export(&r, &spec, radius, &svg)?;
                raster::write_csv(&r, &svg.with_extension("csv"))?;
                println!(
                    "wrote {} and {}",
                    svg.display(),
                    svg.with_extension("csv").display()
                );
            }
            if v.touches_edge {
                return Err(Failure::Check("ball reaches the raster window edge".into()));
            }
            Ok(())
        }
        Command::Tube {
            pattern,
            radius,
            grid,
        } => {
            check_grid(grid)?;
            positive("radius", radius)?;
            let spec = load_pattern(&pattern)?;
            let window = spec.default_window();
            let v = raster::tube_raster_volume(&spec, radius, &window, grid)?;
            println!(
                "window [{:.6},{:.6}]x[{:.6},{:.6}]",
                window.min.x, window.max.x, window.min.y, window.max.y
            );
            println!("tube_area [{:.12}, {:.12}]", v.lo, v.hi);
            Ok(())
        }
        Command::Tangent {
            pattern,
            radius,
            scales,
            grid,
            samples,
            seed,
            norm,
            k,
            out,
        } => {
            check_grid(grid)?;
            positive("radius", radius)?;
            let spec = load_pattern(&pattern)?;
            let scales = parse_list(&scales)?;
            let engine = DistanceEngine::new(&spec);
            let f = resolve_norm(norm.as_deref(), &engine)?;
            let mut settings = TableSettings::new(radius, scales, grid, samples, seed);
            settings.k_mode = match k {
                KChoice::Lemma => KMode::LemmaBound,
                KChoice::Sampled => KMode::Sampled,
            };
            let rep = convergence::convergence_table(&spec, &f, &settings)?;
            match &out {
                Some(p) => rep.write_csv(p)?,
                None => print!("{}", rep.to_csv()),
            }
            eprintln!(
                "norm {} lambda {:.9} dil {:.9}",
                rep.norm, rep.stats.lambda, rep.stats.dil
            );
            eprintln!(
                "K_hat {:.9} C {:.9} depth_hi {:.9} K_lemma {:.9} K_used {:.9}",
                rep.k_hat.value, rep.c, rep.depth.1, rep.k_lemma, rep.k_used
            );
            eprintln!("flags {}", rep.flags().join(" "));
            let bad: usize = rep.rows.iter().map(|r| r.violations).sum();
            if bad > 0 {
                return Err(Failure::Check(format!(
                    "{bad} region cells lie outside the K/R bands"
                )));
            }
            Ok(())
        }
        Command::Normfit {
            pattern,
            scales,
            directions,
            out,
        } => {
            let spec = load_pattern(&pattern)?;
            let s = parse_list(&scales)?;
            let [scale] = s[..] else {
                return Err(Failure::Usage("normfit takes a single scale".into()));
            };
            let engine = DistanceEngine::new(&spec);
            let f = convergence::fit_norm(&engine, scale, directions)?;
            let NormSpec::Gauge(g) = &f else {
                unreachable!("fit_norm returns a gauge")
            };
            let file = GaugeFile {
                name: spec.name.clone(),
                norm: f.name(),
                vertices: g.vertices().iter().map(|v| [v.x, v.y]).collect(),
                scale,
                directions,
            };
            let json = serde_json::to_string_pretty(&file).map_err(Error::from)? + "\n";
            match out {
                Some(p) => write_file(&p, &json)?,
                None => print!("{json}"),
            }
            Ok(())
        }
        Command::Kbound {
            pattern,
            samples,
            seed,
            radius,
            norm,
        } => {
            positive("radius", radius)?;
            let spec = load_pattern(&pattern)?;
            let engine = DistanceEngine::new(&spec);
            let f = resolve_norm(norm.as_deref(), &engine)?;
            let stats = norm_stats(&f, 360)?;
            let b = AxisBox::square(Point::ORIGIN, radius);
            let k_hat = convergence::estimate_k(&engine, &f, &b, samples, seed)?;
            let c = convergence::estimate_c(&engine, &f, &b);
            let depth = if spec.is_periodic() {
                spec.depth(1e-3, None)?
            } else {
                spec.depth(1e-3, Some(&b))?
            };
            let bound = convergence::lemma_2_21_bound(depth.1, c, stats.dil, spec.lengths().1)?;
            println!("norm {}", f.name());
            println!("K_hat {:.12}", k_hat.value);
            println!(
                "witness {} {}",
                fmt_point(k_hat.witness.0),
                fmt_point(k_hat.witness.1)
            );
            println!("C {c:.12}");
            println!("depth_hi {:.12}", depth.1);
            println!("dil {:.12}", stats.dil);
            println!("K_bound {bound:.12}");
            if k_hat.value > bound {
                return Err(Failure::Check("sampled K exceeds the upper bound".into()));
            }
            Ok(())
        }
    }
}
