//! `scratchpad` command line: generate, edit, render, inspect, bench and
//! serve.
//!
//! Exit codes: 0 success, 1 usage error, 2 pipeline failure (the failing
//! stage is named on stderr), 3 backend unreachable.

pub mod bench;

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, CommandFactory, Parser, Subcommand};
use scratchpad_agents::{sha256_hex, ScriptedBackend};
use scratchpad_core::render::output::write_render;
use scratchpad_core::{deserialize_scene, render, view_camera, RenderDesign, TransformTrs, Vec3, WorkspaceBounds};
use scratchpad_generation::EndpointsConfig;
use scratchpad_pipeline::{
    BackendKind, EditInput, Engine, Pipeline, PipelineError, RunConfig, RunOptions, Stage, StageStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;
pub const EXIT_UNAVAILABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "scratchpad", version, about = "Plan, render and generate images through a 3D layout scratchpad")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the four-stage pipeline for one prompt
    Generate(GenerateArgs),
    /// Edit a finished run with an instruction or manual deltas
    Edit(EditArgs),
    /// Render a scene file from a named view
    Render(RenderArgs),
    /// Show a run's manifest, stage states and transcripts
    Inspect(InspectArgs),
    /// Run every prompt in a file and write a CSV
    Bench(bench::BenchArgs),
    /// Start the HTTP service
    Serve(ServeArgs),
}

/// Backend selection shared by commands that execute the pipeline.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// mock (offline heuristic planner and mock generators) or live
    #[arg(long, default_value = "mock")]
    pub backend: BackendKind,
    /// Scripted chat fixtures (responses/<hash>.txt, rules.json); mock only
    #[arg(long, value_name = "DIR")]
    pub fixtures: Option<PathBuf>,
    /// TOML file with the model service endpoints; required for live
    #[arg(long, value_name = "FILE", env = "SCRATCHPAD_ENDPOINTS", hide_env_values = true)]
    pub endpoints: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ground-back-plane, ground-plane, ground-back-plane-rulers, ground-plane-rulers or grid-rulers
    #[arg(long, default_value = "ground-plane-rulers")]
    pub design: RenderDesign,
    /// Square image size in pixels
    #[arg(long, default_value_t = 1024)]
    pub size: u32,
    /// Vertical field of view in degrees
    #[arg(long, default_value_t = 50.0)]
    pub vfov: f64,
    /// Workspace half extents and height as X_HALF,Z_HALF,Y_MAX
    #[arg(long, default_value = "5,5,5", value_parser = parse_bounds)]
    pub bounds: WorkspaceBounds,
    /// Concurrent per-subject backend calls
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
}

impl RunArgs {
    pub fn config(&self, backend: BackendKind) -> RunConfig {
        RunConfig {
            seed: self.seed,
            design: self.design,
            width: self.size,
            height: self.size,
            vfov_deg: self.vfov,
            bounds: self.bounds,
            backend,
            concurrency: self.concurrency,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub prompt: String,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Directory holding run directories
    #[arg(long, default_value = "runs", env = "SCRATCHPAD_RUNS", hide_env_values = true)]
    pub out: PathBuf,
    /// Stop after this stage (1-4 or subjects, layout, orientation, camera)
    #[arg(long, value_name = "STAGE")]
    pub stop_after: Option<Stage>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("change").required(true).args(["instruction", "delta"])))]
pub struct EditArgs {
    #[arg(long = "run", value_name = "ID")]
    pub run_id: String,
    /// Text instruction, e.g. "move the lamp to the left"
    #[arg(long)]
    pub instruction: Option<String>,
    /// SUBJECT:TX,TY,TZ[:RX,RY,RZ[:S]]; repeatable
    #[arg(long, value_parser = parse_delta)]
    pub delta: Vec<(String, TransformTrs)>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value = "runs", env = "SCRATCHPAD_RUNS", hide_env_values = true)]
    pub runs: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene document (JSON)
    #[arg(long)]
    pub scene: PathBuf,
    /// front, left, right, top or proposal0..proposal4
    #[arg(long, default_value = "front")]
    pub view: String,
    #[arg(long, default_value = "ground-plane-rulers")]
    pub design: RenderDesign,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub size: u32,
    #[arg(long, default_value_t = 50.0)]
    pub vfov: f64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long = "run", value_name = "ID")]
    pub run_id: String,
    #[arg(long, default_value = "runs", env = "SCRATCHPAD_RUNS", hide_env_values = true)]
    pub runs: PathBuf,
    /// Print the raw manifest instead of a summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080, env = "SCRATCHPAD_PORT", hide_env_values = true)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1", env = "SCRATCHPAD_BIND", hide_env_values = true)]
    pub bind: IpAddr,
    #[arg(long, default_value = "runs", env = "SCRATCHPAD_RUNS", hide_env_values = true)]
    pub runs: PathBuf,
    /// TOML file with the model service endpoints; enables live runs
    #[arg(long, value_name = "FILE", env = "SCRATCHPAD_ENDPOINTS", hide_env_values = true)]
    pub endpoints: Option<PathBuf>,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(parts) {
        *slot = p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(v)
}

pub fn parse_bounds(s: &str) -> Result<WorkspaceBounds, String> {
    let [x_half, z_half, y_max] = parse_triple(s)?;
    let b = WorkspaceBounds { x_half, z_half, y_max };
    if [x_half, z_half, y_max].iter().any(|v| *v <= 0.0) {
        return Err("bounds must be positive".into());
    }
    Ok(b)
}

/// `lamp:1,0,0:0,0,0:1`; rotation and scale may be omitted.
pub fn parse_delta(s: &str) -> Result<(String, TransformTrs), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 2 || parts.len() > 4 || parts[0].is_empty() {
        return Err(format!("expected SUBJECT:TX,TY,TZ[:RX,RY,RZ[:S]], got {s:?}"));
    }
    let translation = Vec3::from(parse_triple(parts[1])?);
    let rotation = parts.get(2).map(|r| parse_triple(r)).transpose()?.map_or_else(Vec3::zero, Vec3::from);
    let scale = match parts.get(3) {
        Some(p) => p.trim().parse::<f64>().map_err(|e| format!("scale {p:?}: {e}"))?,
        None => 1.0,
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(format!("scale must be positive, got {scale}"));
    }
    Ok((parts[0].to_string(), TransformTrs { translation, rotation, scale }))
}

/// A failure with its exit code; the message goes to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn unavailable(message: impl Into<String>) -> Self {
        Self { code: EXIT_UNAVAILABLE, message: message.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_unavailable() {
            EXIT_UNAVAILABLE
        } else {
            match e {
                PipelineError::Config(_) | PipelineError::UnknownRun(_) | PipelineError::UnknownSubject(_) => EXIT_USAGE,
                _ => EXIT_PIPELINE,
            }
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_PIPELINE, message: e.to_string() }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Builds the engine for a command.
pub fn engine(args: &EngineArgs) -> Result<Engine, Failure> {
    match args.backend {
        BackendKind::Mock => match &args.fixtures {
            Some(dir) => {
                let chat = ScriptedBackend::load(dir).map_err(|e| Failure::usage(e.to_string()))?;
                Ok(Engine::scripted(chat))
            }
            None => Ok(Engine::mock()),
        },
        BackendKind::Live => {
            if args.fixtures.is_some() {
                return Err(Failure::usage("--fixtures only applies to the mock backend"));
            }
            let path = args.endpoints.as_ref().ok_or_else(|| Failure::unavailable("live backends need --endpoints"))?;
            let cfg = EndpointsConfig::load(path).map_err(|e| Failure::unavailable(e.to_string()))?;
            Engine::live(&cfg).map_err(|e| Failure::unavailable(e.to_string()))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn help_text() -> String {
    Cli::command().render_long_help().to_string()
}

pub fn subcommand_help(name: &str) -> Option<String> {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut(name).map(|c| c.render_long_help().to_string())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Generate(a) => generate(a, out),
        Command::Edit(a) => edit(a, out),
        Command::Render(a) => render_cmd(a, out),
        Command::Inspect(a) => inspect(a, out),
        Command::Bench(a) => bench::bench(a, out, err),
        Command::Serve(a) => serve(a, err),
    }
}

fn file_sha(path: &Path) -> Result<String, Failure> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let engine = engine(&a.engine)?;
    let pipeline = Pipeline::new(engine, &a.out);
    let run = pipeline.generate(&a.prompt, &a.run.config(a.engine.backend), &RunOptions { stop_after: a.stop_after })?;
    writeln!(out, "run {}", run.run_id)?;
    if run.manifest.is_finished() {
        let img = run.final_image();
        writeln!(out, "final {}", img.display())?;
        writeln!(out, "sha256 {}", file_sha(&img)?)?;
    } else {
        let next = run.manifest.next_stage().expect("unfinished run has a next stage");
        writeln!(out, "stopped before stage {next}")?;
    }
    Ok(())
}

fn edit(a: EditArgs, out: &mut dyn Write) -> CmdResult {
    let input = match a.instruction {
        Some(text) if !a.delta.is_empty() => {
            return Err(Failure::usage(format!("use either --instruction or --delta, not both ({text:?})")))
        }
        Some(text) => EditInput::Instruction(text),
        None => EditInput::Deltas(a.delta),
    };
    // the run's own backend choice wins over the flag
    let probe = Pipeline::new(Engine::mock(), &a.runs).load(&a.run_id)?;
    let mut engine_args = a.engine.clone();
    engine_args.backend = probe.manifest.config.backend;
    let pipeline = Pipeline::new(engine(&engine_args)?, &a.runs);
    let result = pipeline.edit(&a.run_id, &input, None)?;
    let dir = probe.dir.join(result.dir());
    writeln!(out, "edit {}", result.number)?;
    writeln!(out, "revision {}", result.revision)?;
    writeln!(out, "subjects {}", if result.subjects.is_empty() { "-".into() } else { result.subjects.join(",") })?;
    writeln!(out, "mask {}", dir.join("mask.png").display())?;
    writeln!(out, "final {}", dir.join("final.png").display())?;
    Ok(())
}

fn render_cmd(a: RenderArgs, out: &mut dyn Write) -> CmdResult {
    let bytes = std::fs::read(&a.scene).map_err(|e| Failure::usage(format!("{}: {e}", a.scene.display())))?;
    let scene = deserialize_scene(&bytes).map_err(|e| Failure::usage(format!("{}: {e}", a.scene.display())))?;
    let cam = view_camera(&scene, &a.view, a.vfov, a.size, a.size).map_err(|e| Failure::usage(e.to_string()))?;
    let output = render(&scene, &cam, a.design).map_err(|e| Failure { code: EXIT_PIPELINE, message: e.to_string() })?;
    let files =
        write_render(&output, &a.out, &a.view).map_err(|e| Failure { code: EXIT_PIPELINE, message: e.to_string() })?;
    for f in files {
        writeln!(out, "{}", f.display())?;
    }
    Ok(())
}

fn inspect(a: InspectArgs, out: &mut dyn Write) -> CmdResult {
    let pipeline = Pipeline::new(Engine::mock(), &a.runs);
    let run = pipeline.load(&a.run_id)?;
    let m = &run.manifest;
    if a.json {
        out.write_all(&m.to_json())?;
        return Ok(());
    }
    writeln!(out, "run       {}", m.run_id)?;
    writeln!(out, "prompt    {}", m.prompt)?;
    writeln!(
        out,
        "config    seed={} design={} size={}x{} vfov={} backend={:?}",
        m.config.seed,
        m.config.design.name(),
        m.config.width,
        m.config.height,
        m.config.vfov_deg,
        m.config.backend
    )?;
    writeln!(out, "fixtures  {}", m.fixture_set)?;
    writeln!(out, "stages")?;
    for s in &m.stages {
        let status = match s.status {
            StageStatus::Pending => "pending",
            StageStatus::Complete => "complete",
            StageStatus::Failed => "failed",
        };
        write!(out, "  {:<16} {:<9} {:>3} files", s.stage.to_string(), status, s.files.len())?;
        if let Some(e) = &s.error {
            write!(out, "  {e}")?;
        }
        writeln!(out)?;
    }
    if let Some(c) = m.chosen_camera {
        writeln!(out, "camera    proposal{c}")?;
    }
    writeln!(out, "revision  {}", m.revision)?;
    writeln!(out, "edits     {}", m.edits.len())?;
    for e in &m.edits {
        writeln!(out, "  #{} {:?} revision {} subjects [{}]", e.number, e.kind, e.revision, e.subjects.join(", "))?;
    }
    writeln!(out, "transcripts")?;
    let tdir = run.dir.join("transcripts");
    let mut names: Vec<PathBuf> = match std::fs::read_dir(&tdir) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    for p in names {
        let Ok(bytes) = std::fs::read(&p) else { continue };
        let Ok(t) = serde_json::from_slice::<scratchpad_agents::AgentTranscript>(&bytes) else { continue };
        writeln!(
            out,
            "  {:<28} backend={} retries={} parsed={}{}",
            p.file_name().unwrap_or_default().to_string_lossy(),
            t.backend,
            t.retries,
            if t.parsed.is_some() { "yes" } else { "no" },
            t.notes.first().map(|n| format!("  note: {n}")).unwrap_or_default()
        )?;
    }
    match pipeline.verify(&a.run_id) {
        Ok(_) => writeln!(out, "integrity ok")?,
        Err(e) => writeln!(out, "integrity FAILED: {e}")?,
    }
    writeln!(out, "chain     {}", m.chain)?;
    Ok(())
}

fn serve(a: ServeArgs, err: &mut dyn Write) -> CmdResult {
    let mock = Pipeline::new(Engine::mock(), &a.runs);
    let live = match &a.endpoints {
        Some(path) => {
            let cfg = EndpointsConfig::load(path).map_err(|e| Failure::unavailable(e.to_string()))?;
            Some(Pipeline::new(Engine::live(&cfg).map_err(|e| Failure::unavailable(e.to_string()))?, &a.runs))
        }
        None => None,
    };
    let state = Arc::new(scratchpad_service::AppState::new(mock, live, RunConfig::default()));
    let addr = SocketAddr::new(a.bind, a.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = scratchpad_service::bind(addr).await?;
        writeln!(err, "listening on http://{}", listener.local_addr()?)?;
        scratchpad_service::serve(listener, state).await
    })?;
    Ok(())
}
