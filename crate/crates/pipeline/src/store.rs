//! Run directory I/O.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use scratchpad_agents::AgentTranscript;
use scratchpad_core::render::output::{render_file_names, write_render};
use scratchpad_core::RenderOutput;
use scratchpad_generation::codec::encode_png;

use crate::error::PipelineError;
use crate::manifest::{digest, is_transcript, Manifest};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    /// Writes through a temporary file and a rename.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<String, PipelineError> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
        }
        let tmp = path.with_extension("partial");
        fs::write(&tmp, bytes).map_err(PipelineError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(PipelineError::io(&path))?;
        Ok(digest(rel, bytes))
    }

    pub fn read(&self, rel: &str) -> Result<Vec<u8>, PipelineError> {
        let path = self.path(rel);
        fs::read(&path).map_err(PipelineError::io(path))
    }

    pub fn read_manifest(&self) -> Result<Manifest, PipelineError> {
        let bytes = self.read(MANIFEST_FILE)?;
        let m: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::Corrupt { path: MANIFEST_FILE.into(), message: e.to_string() })?;
        m.check_consistency().map_err(|message| PipelineError::Corrupt { path: MANIFEST_FILE.into(), message })?;
        Ok(m)
    }

    pub fn write_manifest(&self, m: &Manifest) -> Result<(), PipelineError> {
        self.write(MANIFEST_FILE, &m.to_json()).map(drop)
    }

    /// Re-hashes every file the manifest tracks.
    pub fn verify(&self, m: &Manifest) -> Result<(), PipelineError> {
        let tracked = m.tracked_files().chain(m.current_scene.as_ref().map(|f| (&f.path, &f.sha256)));
        for (rel, expected) in tracked {
            let actual = match fs::read(self.path(rel)) {
                Ok(bytes) => digest(rel, &bytes),
                Err(_) => "missing".into(),
            };
            if &actual != expected {
                return Err(PipelineError::Integrity { file: rel.clone(), expected: expected.clone(), actual });
            }
        }
        Ok(())
    }
}

/// Collects the digests of files written during one stage or edit.
pub struct Recorder<'a> {
    dir: &'a RunDir,
    pub files: BTreeMap<String, String>,
}

impl<'a> Recorder<'a> {
    pub fn new(dir: &'a RunDir) -> Self {
        Self { dir, files: BTreeMap::new() }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let d = self.dir.write(rel, bytes)?;
        self.files.insert(rel.to_string(), d);
        Ok(())
    }

    pub fn json<T: serde::Serialize>(&mut self, rel: &str, value: &T) -> Result<(), PipelineError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn png(&mut self, rel: &str, image: &RgbImage) -> Result<(), PipelineError> {
        self.write(rel, &encode_png(image))
    }

    pub fn transcript(&mut self, rel: &str, t: &AgentTranscript) -> Result<(), PipelineError> {
        self.write(rel, &t.to_json())
    }

    /// Writes `<dir>/<name>.{png,depth,depth.json,depth.png,ids.png}`.
    pub fn render(&mut self, dir: &str, name: &str, output: &RenderOutput) -> Result<(), PipelineError> {
        let abs = self.dir.path(dir);
        write_render(output, &abs, name).map_err(|e| PipelineError::Corrupt { path: dir.into(), message: e.to_string() })?;
        for file in render_file_names(name) {
            let rel = format!("{dir}/{file}");
            let bytes = self.dir.read(&rel)?;
            self.files.insert(rel.clone(), digest(&rel, &bytes));
        }
        Ok(())
    }
}

/// Every file under `root` keyed by relative path, with transcript
/// timestamps zeroed; two runs match when these maps are equal.
pub fn normalized_tree(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, PipelineError> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(PipelineError::io(&dir))? {
            let path = entry.map_err(PipelineError::io(&dir))?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            let bytes = fs::read(&path).map_err(PipelineError::io(&path))?;
            let bytes = if is_transcript(&rel) {
                match serde_json::from_slice::<AgentTranscript>(&bytes) {
                    Ok(t) => t.to_json_without_timestamp(),
                    Err(_) => bytes,
                }
            } else {
                bytes
            };
            out.insert(rel, bytes);
        }
    }
    Ok(out)
}
