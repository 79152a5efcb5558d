//! `vcm`: build, compare and render visibility color maps from the shell.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vcm_core::builder::cells_for_space;
use vcm_core::config::RunConfig;
use vcm_core::experiment::{sweep, write_sweep_csv, SweepParam};
use vcm_core::render::write_pgm;
use vcm_core::scene::{
    demo_obstacles, generate, generate_for, ingest, read_obstacles, write_obstacles, Scene,
};
use vcm_core::{
    baseline_vcm, build_vcm, error_bound, measured_error, precompute_360, viewer_centric_setup,
    Approximation, BaselineGrid, ColorMap, Distribution2D, ErrorMode, NearPointPolicy, Point,
    QuerySpace, Target, Variant, VcMap, ViewerOrientation,
};

#[derive(Parser, Debug)]
#[command(
    name = "vcm",
    version,
    about = "Visibility color maps over rectangular obstacles"
)]
struct Cli {
    #[command(flatten)]
    params: Params,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Run parameters; anything left out keeps its default.
#[derive(Args, Debug)]
struct Params {
    /// Angular resolution in arcminutes [4]
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Multiplier on the minimum block side [1]
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Query-space area, percent of the dataspace [0.15]
    #[arg(long, global = true)]
    aq: Option<f64>,
    /// Field of view in degrees [120]
    #[arg(long, global = true)]
    fov: Option<f64>,
    /// Target length, percent of the dataspace side [0.15]
    #[arg(long, global = true)]
    lt: Option<f64>,
    /// Near-point distance [100]
    #[arg(long, global = true)]
    d0: Option<f64>,
    /// Gaze direction in degrees, counter-clockwise from +x [90]
    #[arg(long, global = true)]
    gaze: Option<f64>,
    /// Dataspace side [10000]
    #[arg(long, global = true)]
    span: Option<f64>,
    /// R-tree page size in bytes [1024]
    #[arg(long, global = true)]
    page_size: Option<usize>,
    /// Random seed; overrides VCM_SEED
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Color of points nearer than d0: clamp or zero
    #[arg(long, global = true)]
    inside_nearpoint: Option<NearPointPolicy>,
    /// Explicit target endpoints x1,y1,x2,y2 instead of the centered default
    #[arg(long, global = true, value_parser = parse_target)]
    target: Option<Target>,
}

#[derive(Args, Debug)]
struct SceneArg {
    /// Obstacle CSV; the built-in demo scene when omitted
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MapOut {
    /// Write the map as CSV
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a PGM image
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    px: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MapKind {
    Exact,
    Mbr,
    Tangent,
    Baseline,
}

impl FromStr for MapKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(MapKind::Baseline),
            other => match other.parse::<Variant>().map_err(|e| e.to_string())? {
                Variant::Exact => Ok(MapKind::Exact),
                Variant::Mbr => Ok(MapKind::Mbr),
                Variant::Tangential => Ok(MapKind::Tangent),
            },
        }
    }
}

impl MapKind {
    fn variant(self) -> Option<Variant> {
        match self {
            MapKind::Exact => Some(Variant::Exact),
            MapKind::Mbr => Some(Variant::Mbr),
            MapKind::Tangent => Some(Variant::Tangential),
            MapKind::Baseline => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Reference {
    Oracle,
    Exact,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Read an obstacle CSV (2D or 3D rows) and normalize it to the dataspace
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Keep the input coordinates
        #[arg(long)]
        no_normalize: bool,
    },
    /// Draw a synthetic obstacle scene
    Generate {
        #[arg(short, long, default_value_t = 5000)]
        n: usize,
        /// uniform or zipf
        #[arg(long, default_value = "uniform")]
        dist: Distribution2D,
        /// Place obstacles inside the query space instead of the whole dataspace
        #[arg(long)]
        local: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Equi-visible cells, minimum block side and approximation bounds
    Partition {
        /// Write the cells as CSV
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build one map
    Vcm {
        #[command(flatten)]
        scene: SceneArg,
        /// exact, mbr, tangent or baseline
        #[arg(long, default_value = "exact")]
        variant: MapKind,
        /// Cells per side of the baseline grid
        #[arg(long, default_value_t = 32)]
        grid_n: usize,
        #[command(flatten)]
        out: MapOut,
    },
    /// Map around a viewer position instead of a target
    Viewer {
        #[command(flatten)]
        scene: SceneArg,
        /// Viewer position x,y
        #[arg(long, value_parser = parse_point)]
        at: Point,
        /// Distance at which the stand-in target fades out
        #[arg(long, default_value_t = 1000.0)]
        dmax: f64,
        /// perpendicular or parallel to the gaze
        #[arg(long, default_value = "perpendicular")]
        orientation: ViewerOrientation,
        #[arg(long, default_value = "exact")]
        variant: Variant,
        #[command(flatten)]
        out: MapOut,
    },
    /// Precompute a full circle of view, then answer gaze changes incrementally
    Gaze {
        #[command(flatten)]
        scene: SceneArg,
        /// Report the precomputation stats
        #[arg(long)]
        precompute: bool,
        /// Gaze direction to apply, in order; repeatable
        #[arg(long = "set", value_name = "DEG")]
        set: Vec<f64>,
        #[arg(long, default_value = "exact")]
        variant: Variant,
        /// Write one CSV per gaze into this directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Measure the error of a map against a reference
    Compare {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, value_enum, default_value = "oracle")]
        reference: Reference,
        /// Map under test: exact, mbr, tangent or baseline
        #[arg(long, default_value = "exact")]
        variant: MapKind,
        #[arg(long, default_value_t = 32)]
        grid_n: usize,
        /// Cells per side of the oracle grid
        #[arg(long, default_value_t = 1024)]
        oracle_n: usize,
        /// abs or signed
        #[arg(long, default_value = "abs")]
        mode: ErrorMode,
    },
    /// Write a map as a PGM image
    Render {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value = "exact")]
        variant: MapKind,
        #[arg(long, default_value_t = 32)]
        grid_n: usize,
        #[arg(long, default_value_t = 512)]
        px: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time, node accesses and error across one parameter's range
    Sweep {
        #[command(flatten)]
        scene: SceneArg,
        /// mu, theta, aq, fov, lt or ds
        #[arg(long)]
        param: SweepParam,
        #[arg(long, default_value = "exact")]
        variant: Variant,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!(
            "expected {n} comma-separated numbers, got {}",
            v.len()
        ));
    }
    Ok(v)
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let v = parse_numbers(s, 2)?;
    Ok(Point::new(v[0], v[1]))
}

fn parse_target(s: &str) -> std::result::Result<Target, String> {
    let v = parse_numbers(s, 4)?;
    Target::from_endpoints(Point::new(v[0], v[1]), Point::new(v[2], v[3]))
        .map_err(|e| e.to_string())
}

struct Ctx {
    cfg: RunConfig,
    target: Option<Target>,
}

impl Ctx {
    fn new(p: &Params) -> Result<Self> {
        let mut cfg = RunConfig::default().with_seed_env()?;
        macro_rules! set {
            ($($field:ident <- $opt:expr),*) => { $(if let Some(v) = $opt { cfg.$field = v; })* };
        }
        set!(
            mu_arcmin <- p.mu,
            theta_multiplier <- p.theta,
            area_fraction <- p.aq,
            fov_deg <- p.fov,
            target_length_fraction <- p.lt,
            d0 <- p.d0,
            gaze_deg <- p.gaze,
            span <- p.span,
            page_size <- p.page_size,
            seed <- p.seed,
            near_point <- p.inside_nearpoint
        );
        if p.target.is_none() {
            cfg.validate()?;
        } else {
            cfg.vision_params()?;
        }
        Ok(Self {
            cfg,
            target: p.target,
        })
    }

    fn with(&self, cfg: RunConfig) -> Self {
        Self {
            cfg,
            target: self.target,
        }
    }

    fn target(&self) -> Result<Target> {
        Ok(match self.target {
            Some(t) => t,
            None => self.cfg.target()?,
        })
    }

    fn space(&self) -> Result<QuerySpace> {
        Ok(self.cfg.query_space(&self.target()?)?)
    }

    fn obstacles(&self, arg: &SceneArg) -> Result<Vec<vcm_core::ObstacleRect>> {
        match &arg.scene {
            Some(path) => {
                let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Ok(read_obstacles(f).with_context(|| format!("reading {}", path.display()))?)
            }
            None => Ok(demo_obstacles(&self.cfg, 20)?),
        }
    }

    fn scene(&self, arg: &SceneArg) -> Result<Scene> {
        Ok(Scene::new(
            self.obstacles(arg)?,
            self.target()?,
            self.space()?,
            self.cfg.page_size,
        )?)
    }

    fn vcm(&self, scene: &Scene, variant: Variant) -> Result<VcMap> {
        let cfg = RunConfig {
            variant,
            ..self.cfg
        };
        Ok(build_vcm(
            &scene.space,
            &scene.target,
            &cfg.vision_params()?,
            scene.index.as_ref(),
            &cfg.build_options(),
        )?)
    }

    fn baseline(&self, scene: &Scene, n: usize) -> Result<BaselineGrid> {
        Ok(baseline_vcm(
            &scene.space,
            &scene.target,
            &self.cfg.vision_params()?,
            &scene.rects(),
            n,
        )?)
    }
}

enum AnyMap {
    Quad(Box<VcMap>),
    Grid(BaselineGrid),
}

impl AnyMap {
    fn build(ctx: &Ctx, scene: &Scene, kind: MapKind, grid_n: usize) -> Result<(Self, f64)> {
        let clock = Instant::now();
        let m = match kind.variant() {
            Some(v) => AnyMap::Quad(Box::new(ctx.vcm(scene, v)?)),
            None => AnyMap::Grid(ctx.baseline(scene, grid_n)?),
        };
        Ok((m, clock.elapsed().as_secs_f64()))
    }

    fn as_color_map(&self) -> &dyn DynColorMap {
        match self {
            AnyMap::Quad(m) => m.as_ref(),
            AnyMap::Grid(g) => g,
        }
    }

    fn write_csv(&self, w: impl Write) -> Result<()> {
        match self {
            AnyMap::Quad(m) => m.write_csv(w)?,
            AnyMap::Grid(g) => g.write_csv(w)?,
        }
        Ok(())
    }

    fn write_pgm(&self, w: impl Write, px: usize) -> Result<()> {
        match self {
            AnyMap::Quad(m) => write_pgm(w, m.as_ref(), px)?,
            AnyMap::Grid(g) => write_pgm(w, g, px)?,
        }
        Ok(())
    }
}

/// Object-safe view of a [`ColorMap`] for error reporting.
trait DynColorMap {
    fn error_against(
        &self,
        reference: &AnyMap,
        mode: ErrorMode,
    ) -> vcm_core::Result<vcm_core::ErrorReport>;
}

impl<T: ColorMap> DynColorMap for T {
    fn error_against(
        &self,
        reference: &AnyMap,
        mode: ErrorMode,
    ) -> vcm_core::Result<vcm_core::ErrorReport> {
        match reference {
            AnyMap::Quad(r) => measured_error(r.as_ref(), self, mode),
            AnyMap::Grid(r) => measured_error(r, self, mode),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn kv(out: &mut impl Write, key: &str, value: impl std::fmt::Display) -> io::Result<()> {
    writeln!(out, "{key}={value}")
}

fn write_map_outputs(map: &AnyMap, out: &MapOut) -> Result<()> {
    if let Some(p) = &out.output {
        let mut w = create(p)?;
        map.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &out.pgm {
        let mut w = create(p)?;
        map.write_pgm(&mut w, out.px)?;
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.params)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.cmd {
        Cmd::Ingest {
            input,
            output,
            no_normalize,
        } => {
            let span = (!no_normalize).then_some(ctx.cfg.span);
            let obs =
                ingest(&input, span).with_context(|| format!("ingesting {}", input.display()))?;
            if let Some(p) = output {
                let mut w = create(&p)?;
                write_obstacles(&mut w, &obs)?;
                w.flush()?;
            } else {
                write_obstacles(&mut out, &obs)?;
                return Ok(());
            }
            kv(&mut out, "obstacles", obs.len())?;
        }
        Cmd::Generate {
            n,
            dist,
            local,
            output,
        } => {
            if n == 0 {
                bail!("n must be at least 1");
            }
            let target = ctx.target()?;
            let area = if local {
                ctx.space()?.bounds
            } else {
                vcm_core::Rect::from_coords(0.0, 0.0, ctx.cfg.span, ctx.cfg.span)?
            };
            let obs = if ctx.target.is_none() && !local {
                generate_for(&ctx.cfg, n, dist)?
            } else {
                generate(n, dist, ctx.cfg.seed, &area, Some(&target.geom))?
            };
            match output {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_obstacles(&mut w, &obs)?;
                    w.flush()?;
                    kv(&mut out, "obstacles", obs.len())?;
                    kv(&mut out, "distribution", dist)?;
                    kv(&mut out, "seed", ctx.cfg.seed)?;
                }
                None => write_obstacles(&mut out, &obs)?,
            }
        }
        Cmd::Partition { output } => {
            let space = ctx.space()?;
            let (cs, theta) = cells_for_space(
                &space,
                &ctx.target()?,
                &ctx.cfg.vision_params()?,
                ctx.cfg.theta_multiplier,
            )?;
            if let Some(p) = output {
                let mut w = create(&p)?;
                cs.write_csv(&mut w)?;
                w.flush()?;
            }
            kv(&mut out, "cells", cs.cells.len())?;
            kv(&mut out, "rings", cs.rings.len())?;
            kv(&mut out, "theta", format!("{theta:.6}"))?;
            kv(&mut out, "d_max", format!("{:.6}", cs.d_max))?;
            kv(
                &mut out,
                "e_mbr",
                format!(
                    "{:.6}",
                    error_bound(&cs, Approximation::Mbr, Some(&space.bounds))
                ),
            )?;
            kv(
                &mut out,
                "e_tangent",
                format!(
                    "{:.6}",
                    error_bound(&cs, Approximation::Tangential, Some(&space.bounds))
                ),
            )?;
        }
        Cmd::Vcm {
            scene,
            variant,
            grid_n,
            out: files,
        } => {
            let scene = ctx.scene(&scene)?;
            let (map, secs) = AnyMap::build(&ctx, &scene, variant, grid_n)?;
            write_map_outputs(&map, &files)?;
            match &map {
                AnyMap::Quad(m) => {
                    kv(&mut out, "variant", m.variant)?;
                    kv(&mut out, "leaves", m.tree.leaf_count())?;
                    write!(out, "{}", m.stats)?;
                    kv(
                        &mut out,
                        "elapsed_total_s",
                        format!("{:.6}", m.stats.total_s()),
                    )?;
                }
                AnyMap::Grid(g) => {
                    kv(&mut out, "variant", "baseline")?;
                    kv(&mut out, "grid_n", g.n)?;
                    kv(&mut out, "elapsed_total_s", format!("{secs:.6}"))?;
                }
            }
        }
        Cmd::Viewer {
            scene,
            at,
            dmax,
            orientation,
            variant,
            out: files,
        } => {
            let vp = ctx.cfg.vision_params()?;
            let q = viewer_centric_setup(at, &vp, dmax, orientation)?;
            let obstacles = ctx.obstacles(&scene)?;
            let scene = Scene::new(obstacles, q.target, q.space, ctx.cfg.page_size)?;
            let map = ctx.vcm(&scene, variant)?;
            write_map_outputs(&AnyMap::Quad(Box::new(map.clone())), &files)?;
            kv(&mut out, "viewer", format!("{},{}", at.x, at.y))?;
            kv(&mut out, "d_max", format!("{:.6}", q.d_max))?;
            kv(&mut out, "target_length", format!("{:.6}", q.target.length))?;
            kv(&mut out, "leaves", map.tree.leaf_count())?;
            write!(out, "{}", map.stats)?;
        }
        Cmd::Gaze {
            scene,
            precompute,
            set,
            variant,
            out_dir,
        } => {
            if !precompute && set.is_empty() {
                bail!("nothing to do: pass --precompute and/or --set DEG");
            }
            let scene = ctx.scene(&scene)?;
            let cfg = RunConfig { variant, ..ctx.cfg };
            let mut session = precompute_360(
                &scene.space,
                &scene.target,
                &cfg.vision_params()?,
                scene.index.as_ref(),
                &cfg.build_options(),
            )?;
            if precompute {
                kv(&mut out, "phase", "precompute")?;
                write!(out, "{}", session.precompute_stats())?;
            }
            for g in set {
                let map = session.set_gaze(g, cfg.fov_deg)?;
                kv(&mut out, "phase", "gaze")?;
                kv(&mut out, "gaze", g)?;
                kv(&mut out, "leaves", map.tree.leaf_count())?;
                write!(out, "{}", map.stats)?;
                if let Some(dir) = &out_dir {
                    let mut w = create(&dir.join(format!("gaze_{g}.csv")))?;
                    map.write_csv(&mut w)?;
                    w.flush()?;
                }
            }
        }
        Cmd::Compare {
            scene,
            reference,
            variant,
            grid_n,
            oracle_n,
            mode,
        } => {
            let scene = ctx.scene(&scene)?;
            let reference_map = match reference {
                Reference::Oracle => AnyMap::Grid(ctx.baseline(&scene, oracle_n)?),
                Reference::Exact => AnyMap::Quad(Box::new(ctx.vcm(&scene, Variant::Exact)?)),
            };
            let (candidate, _) = AnyMap::build(&ctx, &scene, variant, grid_n)?;
            let report = candidate
                .as_color_map()
                .error_against(&reference_map, mode)?;
            kv(
                &mut out,
                "reference",
                match reference {
                    Reference::Oracle => "oracle",
                    Reference::Exact => "exact",
                },
            )?;
            kv(
                &mut out,
                "candidate",
                match variant.variant() {
                    Some(v) => v.to_string(),
                    None => "baseline".into(),
                },
            )?;
            write!(out, "{report}")?;
        }
        Cmd::Render {
            scene,
            variant,
            grid_n,
            px,
            output,
        } => {
            let scene = ctx.scene(&scene)?;
            let (map, _) = AnyMap::build(&ctx, &scene, variant, grid_n)?;
            let mut w = create(&output)?;
            map.write_pgm(&mut w, px)?;
            w.flush()?;
            kv(&mut out, "image", output.display())?;
            kv(&mut out, "px", px)?;
        }
        Cmd::Sweep {
            scene,
            param,
            variant,
            repeats,
            output,
        } => {
            let ctx = ctx.with(RunConfig { variant, ..ctx.cfg });
            let obstacles = ctx.obstacles(&scene)?;
            let rows = sweep(param, &ctx.cfg, &obstacles, repeats)?;
            match output {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_sweep_csv(&mut w, &rows)?;
                    w.flush()?;
                    kv(&mut out, "param", param)?;
                    kv(&mut out, "rows", rows.len())?;
                }
                None => write_sweep_csv(&mut out, &rows)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let closed = e
            .chain()
            .filter_map(|c| c.downcast_ref::<io::Error>())
            .any(|io| io.kind() == io::ErrorKind::BrokenPipe);
        if closed {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
