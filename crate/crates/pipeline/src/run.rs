//! Run lifecycle: creation, stage driving, resume and loading.

use std::path::{Path, PathBuf};

use scratchpad_agents::sha256_hex;
use scratchpad_core::{serialize_scene, Scene};
use serde_json::json;

use crate::config::RunConfig;
use crate::engine::Engine;
use crate::error::PipelineError;
use crate::manifest::{digest, FileRef, Manifest, Stage};
use crate::stages::{self, StageCtx};
use crate::store::{RunDir, MANIFEST_FILE};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Stop once this stage is complete.
    pub stop_after: Option<Stage>,
}

/// A run directory and its manifest.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub run_id: String,
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunArtifacts {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn final_image(&self) -> PathBuf {
        self.path(stages::FINAL)
    }

    /// The most recent image: the last edit's output or the final image.
    pub fn latest_image(&self) -> String {
        latest_image_rel(&self.manifest)
    }
}

pub(crate) fn latest_image_rel(m: &Manifest) -> String {
    m.edits.last().map_or_else(|| stages::FINAL.to_string(), |e| format!("edits/{}/final.png", e.number))
}

/// Scene the latest image was generated from.
pub(crate) fn latest_image_scene_rel(m: &Manifest) -> String {
    m.edits.last().map_or_else(|| stages::SCENE_STAGE3.to_string(), |e| format!("edits/{}/scene.json", e.number))
}

/// Content-addressed id: 16 hex digits of the hash of prompt, config and
/// fixture set.
pub fn run_id(prompt: &str, config: &RunConfig, fixture_set: &str) -> String {
    let doc = json!({ "prompt": prompt, "config": config, "fixture_set": fixture_set });
    sha256_hex(&serde_json::to_vec(&doc).expect("config serializes"))[..16].to_string()
}

/// Runs the pipeline against a directory of run directories.
#[derive(Clone)]
pub struct Pipeline {
    pub engine: Engine,
    pub runs_root: PathBuf,
}

impl Pipeline {
    pub fn new(engine: Engine, runs_root: impl Into<PathBuf>) -> Self {
        Self { engine, runs_root: runs_root.into() }
    }

    pub fn run_id(&self, prompt: &str, config: &RunConfig) -> String {
        run_id(prompt, config, &self.engine.fixture_set)
    }

    pub fn run_dir(&self, run_id: &str) -> RunDir {
        RunDir::new(self.runs_root.join(run_id))
    }

    fn check_id(run_id: &str) -> Result<(), PipelineError> {
        if run_id.is_empty() || !run_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(PipelineError::UnknownRun(run_id.into()));
        }
        Ok(())
    }

    /// Writes a fresh manifest unless the run already exists. Returns the
    /// run id without executing any stage.
    pub fn create(&self, prompt: &str, config: &RunConfig) -> Result<String, PipelineError> {
        if prompt.trim().is_empty() {
            return Err(PipelineError::Config("prompt is empty".into()));
        }
        config.validate()?;
        let id = self.run_id(prompt, config);
        let dir = self.run_dir(&id);
        if dir.exists(MANIFEST_FILE) {
            let m = dir.read_manifest()?;
            if m.prompt != prompt || &m.config != config {
                return Err(PipelineError::Corrupt {
                    path: MANIFEST_FILE.into(),
                    message: format!("run {id} exists with different inputs"),
                });
            }
            return Ok(id);
        }
        let m = Manifest::new(id.clone(), prompt.to_string(), config.clone(), self.engine.fixture_set.clone());
        dir.write_manifest(&m)?;
        Ok(id)
    }

    /// Runs every stage, or continues an existing run with the same inputs.
    pub fn generate(&self, prompt: &str, config: &RunConfig, opts: &RunOptions) -> Result<RunArtifacts, PipelineError> {
        let id = self.create(prompt, config)?;
        self.resume(&id, opts)
    }

    /// Verifies completed stages and runs the remaining ones.
    pub fn resume(&self, run_id: &str, opts: &RunOptions) -> Result<RunArtifacts, PipelineError> {
        let dir = self.open(run_id)?;
        let mut m = dir.read_manifest()?;
        dir.verify(&m)?;
        while let Some(stage) = m.next_stage() {
            if opts.stop_after.is_some_and(|s| stage > s) {
                break;
            }
            log::info!("run {run_id}: stage {stage}");
            let ctx = StageCtx { engine: &self.engine, dir: &dir, manifest: &m };
            let result = match stage {
                Stage::Subjects => stages::stage_subjects(&ctx).map(|f| (f, None)),
                Stage::Layout => stages::stage_layout(&ctx).map(|f| (f, None)),
                Stage::Orientation => stages::stage_orientation(&ctx).map(|f| (f, None)),
                Stage::Camera => stages::stage_camera(&ctx).map(|(f, i)| (f, Some(i))),
            };
            match result {
                Ok((files, chosen)) => {
                    m.complete_stage(stage, files);
                    if let Some(i) = chosen {
                        m.chosen_camera = Some(i);
                        self.start_session(&dir, &mut m)?;
                    }
                    dir.write_manifest(&m)?;
                }
                Err(source) => {
                    m.fail_stage(stage, source.to_string());
                    dir.write_manifest(&m)?;
                    return Err(PipelineError::Stage { stage, source });
                }
            }
        }
        Ok(RunArtifacts { run_id: run_id.to_string(), dir: dir.root().to_path_buf(), manifest: m })
    }

    /// The editable scene starts as the stage-3 snapshot, revision 1.
    fn start_session(&self, dir: &RunDir, m: &mut Manifest) -> Result<(), PipelineError> {
        let bytes = dir.read(stages::SCENE_STAGE3)?;
        self.write_current(dir, m, &bytes)?;
        m.revision = 1;
        Ok(())
    }

    pub(crate) fn write_current(&self, dir: &RunDir, m: &mut Manifest, bytes: &[u8]) -> Result<(), PipelineError> {
        dir.write(stages::SCENE_CURRENT, bytes)?;
        m.current_scene = Some(FileRef { path: stages::SCENE_CURRENT.into(), sha256: digest(stages::SCENE_CURRENT, bytes) });
        Ok(())
    }

    pub(crate) fn open(&self, run_id: &str) -> Result<RunDir, PipelineError> {
        Self::check_id(run_id)?;
        let dir = self.run_dir(run_id);
        if !dir.exists(MANIFEST_FILE) {
            return Err(PipelineError::UnknownRun(run_id.into()));
        }
        Ok(dir)
    }

    /// Reads a run without verifying file digests.
    pub fn load(&self, run_id: &str) -> Result<RunArtifacts, PipelineError> {
        let dir = self.open(run_id)?;
        let manifest = dir.read_manifest()?;
        Ok(RunArtifacts { run_id: run_id.into(), dir: dir.root().to_path_buf(), manifest })
    }

    /// Reads a run and checks every tracked file.
    pub fn verify(&self, run_id: &str) -> Result<RunArtifacts, PipelineError> {
        let a = self.load(run_id)?;
        RunDir::new(&a.dir).verify(&a.manifest)?;
        Ok(a)
    }

    /// The editable scene and its revision. Before the run completes this
    /// is the newest snapshot at revision 0.
    pub fn current_scene(&self, run_id: &str) -> Result<(Scene, u64), PipelineError> {
        let dir = self.open(run_id)?;
        let m = dir.read_manifest()?;
        for rel in [stages::SCENE_CURRENT, stages::SCENE_STAGE3, stages::SCENE_STAGE2] {
            let tracked = rel == stages::SCENE_CURRENT && m.current_scene.is_some()
                || m.tracked_files().any(|(p, _)| p == rel);
            if tracked {
                return Ok((stages::load_scene(&dir, rel)?, m.revision));
            }
        }
        Err(PipelineError::Incomplete(run_id.into()))
    }

    pub fn runs(&self) -> Result<Vec<String>, PipelineError> {
        list_runs(&self.runs_root)
    }
}

pub(crate) fn scene_bytes(scene: &Scene) -> Vec<u8> {
    serialize_scene(scene)
}

fn list_runs(root: &Path) -> Result<Vec<String>, PipelineError> {
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut ids = Vec::new();
    for e in std::fs::read_dir(root).map_err(PipelineError::io(root))? {
        let p = e.map_err(PipelineError::io(root))?.path();
        if p.join(MANIFEST_FILE).is_file() {
            ids.extend(p.file_name().map(|n| n.to_string_lossy().into_owned()));
        }
    }
    ids.sort();
    Ok(ids)
}
