use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use avatar_cli::commands::{self, BakeArgs, CollisionArgs, DeformArgs, LossArgs, MapArgs, RefineArgs, RenderArgs};
use avatar_cli::serve::{self, SessionAssets, DEFAULT_RENDER_SIZE};
use avatar_core::avatar::Avatar;
use avatar_core::render::RenderSettings;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "avatar", version, about = "Avatar geometry tools and steering server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pose an avatar template and write it as OBJ.
    Deform(DeformArgs),
    /// Map points into texture space.
    Map(MapArgs),
    /// Collision-prone fractions over several band heights.
    Collisions(CollisionArgs),
    /// Bake motion textures for one frame window.
    BakeTextures(BakeArgs),
    /// Volume-render a scene.
    Render(RenderArgs),
    /// Emboss and optimize a template against a field.
    Refine(RefineArgs),
    /// Evaluate image losses or verify loss gradients.
    Losses(LossArgs),
    /// Run the WebSocket steering server.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "demo")]
    avatar: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Default render edge in pixels.
    #[arg(long, default_value_t = DEFAULT_RENDER_SIZE)]
    size: usize,
    #[arg(long)]
    samples: Option<usize>,
    /// Static viewer bundle served at `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
}

fn run_serve(a: &ServeArgs) -> Result<(), String> {
    let avatar = Avatar::load(&a.avatar).map_err(|e| e.to_string())?;
    let mut settings = RenderSettings::default();
    if let Some(n) = a.samples {
        settings.samples_per_ray = n;
    }
    let assets = Arc::new(SessionAssets::new(avatar, settings, a.size).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let listener = serve::bind(SocketAddr::new(a.host, a.port)).await?;
        eprintln!("listening on ws://{}/ws", listener.local_addr()?);
        serve::serve(listener, assets, a.ui.clone()).await
    })
    .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 from here.
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Deform(a) => commands::deform(a).map_err(|e| e.to_string()),
        Command::Map(a) => commands::map(a).map_err(|e| e.to_string()),
        Command::Collisions(a) => commands::collisions(a).map_err(|e| e.to_string()),
        Command::BakeTextures(a) => commands::bake_textures(a).map_err(|e| e.to_string()),
        Command::Render(a) => commands::render(a).map_err(|e| e.to_string()),
        Command::Refine(a) => commands::refine(a).map_err(|e| e.to_string()),
        Command::Losses(a) => commands::losses(a).map_err(|e| e.to_string()),
        Command::Serve(a) => run_serve(a),
    };
    commands::flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
