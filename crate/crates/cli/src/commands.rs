use std::io::Write;
use std::path::{Path, PathBuf};

use avatar_core::avatar::Avatar;
use avatar_core::losses::{gradient_suite, image_losses};
use avatar_core::mesh::{load_obj, write_obj};
use avatar_core::primitives;
use avatar_core::refine::{emboss_mesh, optimize_template, RefineConfig};
use avatar_core::render::{bake_motion_textures, render_image, Scene, DEFAULT_TEXTURE_RESOLUTION, WINDOW_FRAMES};
use avatar_core::scene::{FieldSpec, SceneSpec};
use avatar_core::tensor::Tensor;
use avatar_core::utts::{build_index, collision_csv, collision_ratio, collision_study, map_batch, BandSamples};
use avatar_core::{fsutil, Error, Point3, Result};
use clap::Args;
use serde_json::json;

use crate::io::{read_frame, render_rgba, write_png};

fn parse_points(t: &Tensor) -> Result<Vec<Point3>> {
    if t.dims().len() != 2 || t.dims()[1] != 3 {
        return Err(Error::InvalidArgument(format!("points tensor must be [N, 3], got {:?}", t.dims())));
    }
    Ok(t.to_f64().chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fsutil::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
    }
}

#[derive(Args, Debug)]
pub struct DeformArgs {
    /// Avatar manifest, or `demo`.
    #[arg(long, default_value = "demo")]
    pub avatar: PathBuf,
    /// Motion frame to pose.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Full pose vector overriding the motion frame.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pose: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn deform(a: &DeformArgs) -> Result<()> {
    let avatar = Avatar::load(&a.avatar)?;
    let pose = match &a.pose {
        Some(p) => p.clone(),
        None => avatar.frame_pose(a.frame)?,
    };
    let x = avatar.pose(&pose)?;
    write_obj(&a.out, &avatar.template, &x)
}

#[derive(Args, Debug)]
pub struct MapArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// `[N, 3]` query points.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub dmax: f64,
    /// `[N, 4]` output rows `(u_x, u_y, d̂, in_range)`.
    #[arg(long)]
    pub out: PathBuf,
    /// Collision report; defaults to the output path with a `.csv` extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn map(a: &MapArgs) -> Result<()> {
    positive("dmax", a.dmax)?;
    let mesh = load_obj::<f64>(&a.mesh)?;
    let points = parse_points(&Tensor::load(&a.points)?)?;
    let index = build_index(&mesh, mesh.vertices())?;
    let results = map_batch(&index, &points, a.dmax);
    let mut rows = Vec::with_capacity(points.len() * 4);
    for r in &results {
        let c = r.coords;
        rows.extend([c.u.x, c.u.y, c.d_hat, if r.out_of_range { 0.0 } else { 1.0 }]);
    }
    Tensor::from_f64(vec![points.len(), 4], &rows)?.save(&a.out)?;
    let csv_path = a.csv.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    let stats = collision_ratio(&index, &points, a.dmax)?;
    fsutil::write_atomic(csv_path, collision_csv(&[stats])?.as_bytes())
}

#[derive(Args, Debug)]
pub struct CollisionArgs {
    /// Template OBJ; a bent, bulging cylinder when omitted.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Band half-widths in meters.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.04,0.08")]
    pub dmax: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn collisions(a: &CollisionArgs) -> Result<()> {
    for &d in &a.dmax {
        positive("dmax", d)?;
    }
    if a.samples == 0 {
        return Err(Error::Empty("collision samples"));
    }
    let mesh = match &a.mesh {
        Some(p) => load_obj::<f64>(p)?,
        None => primitives::deformed_cylinder(32, 48),
    };
    let index = build_index(&mesh, mesh.vertices())?;
    let band = BandSamples::generate(&mesh, mesh.vertices(), a.samples, a.seed)?;
    let text = collision_csv(&collision_study(&index, &band, &a.dmax)?)?;
    match &a.out {
        Some(p) => fsutil::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Args, Debug)]
pub struct BakeArgs {
    #[arg(long, default_value = "demo")]
    pub avatar: PathBuf,
    /// Current frame; the window covers it and the two before it.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long, default_value_t = DEFAULT_TEXTURE_RESOLUTION)]
    pub resolution: usize,
    /// Multiplier applied to root-relative positions.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// `[R, R, 15]` texel rows: position, velocity, acceleration, uv,
    /// normal, coverage.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional preview of the normal map.
    #[arg(long)]
    pub preview: Option<PathBuf>,
}

pub fn bake_textures(a: &BakeArgs) -> Result<()> {
    positive("scale", a.scale)?;
    let avatar = Avatar::load(&a.avatar)?;
    let (frames, roots) = avatar.pose_window(a.frame, WINDOW_FRAMES)?;
    let tex = bake_motion_textures(&avatar.template, &frames, &roots, a.resolution, a.scale)?;
    let r = tex.resolution;
    Tensor::new(vec![r, r, 15], tex.to_channels())?.save(&a.out)?;
    if let Some(p) = &a.preview {
        let rgba = tex
            .normal
            .iter()
            .zip(&tex.mask)
            .flat_map(|(n, &m)| {
                let c = n.map(|v| ((v * 0.5 + 0.5) * 255.0).round() as u8);
                [c[0], c[1], c[2], if m { 255 } else { 0 }]
            })
            .collect();
        write_png(p, r, r, rgba)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `[H, W]` accumulated opacity.
    #[arg(long)]
    pub opacity: Option<PathBuf>,
    /// `[H, W]` expected depth, 0 where empty.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Overrides the scene's samples per ray.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Stratified jitter seed; evenly spaced samples when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn render(a: &RenderArgs) -> Result<()> {
    let mut s = SceneSpec::load_file(&a.scene)?;
    if let Some(n) = a.samples {
        s.settings.samples_per_ray = n;
    }
    if a.seed.is_some() {
        s.settings.jitter = a.seed;
    }
    let scene = Scene { mesh: &s.mesh, positions: &s.positions, field: &s.field, camera: &s.camera };
    let out = render_image(&scene, &s.settings)?;
    write_png(&a.out, out.width, out.height, render_rgba(&out))?;
    let dims = vec![out.height, out.width];
    if let Some(p) = &a.opacity {
        Tensor::from_f64(dims.clone(), &out.opacity)?.save(p)?;
    }
    if let Some(p) = &a.depth {
        let depth: Vec<f64> = out.depth.iter().map(|&d| if d.is_finite() { d } else { 0.0 }).collect();
        Tensor::from_f64(dims, &depth)?.save(p)?;
    }
    let t = out.timings;
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    eprintln!(
        "rendered {}x{}: {} samples, {} out of range; raster {:.1} ms, filter {:.1} ms, map {:.1} ms, field {:.1} ms, integrate {:.1} ms",
        out.width,
        out.height,
        out.samples,
        out.out_of_range,
        ms(t.raster),
        ms(t.filter),
        ms(t.map),
        ms(t.field),
        ms(t.integrate)
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Field description (JSON, same schema as a scene's `field`).
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss trace (JSON).
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = RefineConfig::default().emboss_iterations)]
    pub emboss: usize,
    #[arg(long, default_value_t = RefineConfig::default().optimize_iterations)]
    pub iterations: usize,
    #[arg(long, default_value_t = RefineConfig::default().step)]
    pub step: f64,
    /// Subdivide once before embossing.
    #[arg(long)]
    pub subdivide: bool,
}

pub fn refine(a: &RefineArgs) -> Result<()> {
    let config = RefineConfig {
        emboss_iterations: a.emboss,
        optimize_iterations: a.iterations,
        step: a.step,
        subdivide: a.subdivide,
        ..Default::default()
    };
    config.validate()?;
    let mesh = load_obj::<f64>(&a.mesh)?;
    let spec: FieldSpec = serde_json::from_str(&fsutil::read_to_string(&a.field)?)?;
    let base = a.field.parent().unwrap_or(Path::new(""));
    let field = spec.build(&mesh, mesh.vertices(), base)?;
    let embossed = emboss_mesh(&mesh, mesh.vertices(), &field, &config)?;
    let (positions, trace, converged) = if config.optimize_iterations > 0 {
        match optimize_template(&embossed.mesh, &embossed.positions, &field, &config) {
            Ok(o) => (o.positions, o.trace, o.converged),
            Err(e @ Error::Diverged { .. }) => {
                write_json(Some(&a.trace), &json!({ "error": e.to_string() }))?;
                return Err(e);
            }
            Err(e) => return Err(e),
        }
    } else {
        (embossed.positions.clone(), Vec::new(), false)
    };
    write_obj(&a.out, &embossed.mesh, &positions)?;
    write_json(
        Some(&a.trace),
        &json!({ "frozen": embossed.frozen, "converged": converged, "trace": trace }),
    )
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["check_gradients", "pred"])))]
pub struct LossArgs {
    /// Verify every loss gradient against central differences.
    #[arg(long)]
    pub check_gradients: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Predicted RGBA image.
    #[arg(long, requires = "gt")]
    pub pred: Option<PathBuf>,
    /// Ground-truth RGBA image.
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,
    /// JSON output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn losses(a: &LossArgs) -> Result<()> {
    if a.check_gradients {
        let entries = gradient_suite(a.seed)?;
        let failed: Vec<&str> = entries.iter().filter(|e| !e.passed).map(|e| e.name.as_str()).collect();
        write_json(a.out.as_deref(), &serde_json::to_value(&entries)?)?;
        if !failed.is_empty() {
            return Err(Error::InvalidArgument(format!("gradient check failed for {failed:?}")));
        }
        return Ok(());
    }
    let (pred, gt) = match (&a.pred, &a.gt) {
        (Some(p), Some(g)) => (read_frame(p)?, read_frame(g)?),
        _ => unreachable!("clap enforces both images"),
    };
    let l = image_losses(&pred, &gt)?;
    write_json(a.out.as_deref(), &json!({ "col": l.col, "mask": l.mask, "lappyr": l.lappyr }))
}

/// Flushes standard output, ignoring a closed pipe.
pub fn flush() {
    let _ = std::io::stdout().flush();
}
