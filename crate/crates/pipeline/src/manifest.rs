//! Run manifest: stage states, file digests and the hash chain over them.

use std::collections::BTreeMap;
use std::fmt;

use scratchpad_agents::{sha256_hex, AgentTranscript};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Subjects,
    Layout,
    Orientation,
    Camera,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Subjects, Stage::Layout, Stage::Orientation, Stage::Camera];

    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Subjects => "subjects",
            Stage::Layout => "layout",
            Stage::Orientation => "orientation",
            Stage::Camera => "camera",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.number(), self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s || st.number().to_string() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Pending,
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Relative path to content digest.
    pub files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Instruction,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub number: usize,
    pub kind: EditKind,
    /// Subjects whose pixels were regenerated.
    pub subjects: Vec<String>,
    pub revision: u64,
    pub files: BTreeMap<String, String>,
    pub chain: String,
}

/// Digest of a mutable file tracked outside the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub run_id: String,
    pub prompt: String,
    pub config: RunConfig,
    pub fixture_set: String,
    pub stages: Vec<StageRecord>,
    pub chosen_camera: Option<usize>,
    pub edits: Vec<EditRecord>,
    /// Scene revision; bumps on every committed mutation.
    pub revision: u64,
    pub current_scene: Option<FileRef>,
    /// Head of the hash chain over completed stages and edits.
    pub chain: String,
}

impl Manifest {
    pub fn new(run_id: String, prompt: String, config: RunConfig, fixture_set: String) -> Self {
        let chain = chain_root(&run_id);
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            run_id,
            prompt,
            config,
            fixture_set,
            stages: Stage::ALL
                .into_iter()
                .map(|stage| StageRecord {
                    stage,
                    status: StageStatus::Pending,
                    error: None,
                    files: BTreeMap::new(),
                    chain: None,
                })
                .collect(),
            chosen_camera: None,
            edits: Vec::new(),
            revision: 0,
            current_scene: None,
            chain,
        }
    }

    pub fn stage(&self, stage: Stage) -> &StageRecord {
        &self.stages[stage as usize]
    }

    pub fn is_complete(&self, stage: Stage) -> bool {
        self.stage(stage).status == StageStatus::Complete
    }

    pub fn is_finished(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Complete)
    }

    /// First stage not yet complete.
    pub fn next_stage(&self) -> Option<Stage> {
        self.stages.iter().find(|s| s.status != StageStatus::Complete).map(|s| s.stage)
    }

    pub fn complete_stage(&mut self, stage: Stage, files: BTreeMap<String, String>) {
        let chain = link(&self.chain, stage.name(), &files);
        let rec = &mut self.stages[stage as usize];
        rec.status = StageStatus::Complete;
        rec.error = None;
        rec.files = files;
        rec.chain = Some(chain.clone());
        self.chain = chain;
    }

    pub fn fail_stage(&mut self, stage: Stage, error: String) {
        let rec = &mut self.stages[stage as usize];
        rec.status = StageStatus::Failed;
        rec.error = Some(error);
    }

    pub fn push_edit(&mut self, number: usize, kind: EditKind, subjects: Vec<String>, files: BTreeMap<String, String>) {
        self.revision += 1;
        let chain = link(&self.chain, &format!("edit-{number}"), &files);
        self.edits.push(EditRecord { number, kind, subjects, revision: self.revision, files, chain: chain.clone() });
        self.chain = chain;
    }

    /// Checks stage ordering and recomputes the chain from the recorded
    /// digests.
    pub fn check_consistency(&self) -> Result<(), String> {
        if self.stages.len() != Stage::ALL.len() || self.stages.iter().zip(Stage::ALL).any(|(r, s)| r.stage != s) {
            return Err("stage list is malformed".into());
        }
        for w in self.stages.windows(2) {
            if w[1].status == StageStatus::Complete && w[0].status != StageStatus::Complete {
                return Err(format!("stage {} is complete but stage {} is not", w[1].stage, w[0].stage));
            }
        }
        let mut chain = chain_root(&self.run_id);
        for rec in self.stages.iter().filter(|r| r.status == StageStatus::Complete) {
            chain = link(&chain, rec.stage.name(), &rec.files);
            if rec.chain.as_deref() != Some(chain.as_str()) {
                return Err(format!("chain mismatch at stage {}", rec.stage));
            }
        }
        for e in &self.edits {
            chain = link(&chain, &format!("edit-{}", e.number), &e.files);
            if e.chain != chain {
                return Err(format!("chain mismatch at edit {}", e.number));
            }
        }
        if chain != self.chain {
            return Err("chain head does not match".into());
        }
        Ok(())
    }

    /// Every file recorded by completed stages and edits.
    pub fn tracked_files(&self) -> impl Iterator<Item = (&String, &String)> {
        self.stages
            .iter()
            .filter(|r| r.status == StageStatus::Complete)
            .flat_map(|r| r.files.iter())
            .chain(self.edits.iter().flat_map(|e| e.files.iter()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }
}

fn chain_root(run_id: &str) -> String {
    sha256_hex(format!("scratchpad-run\n{run_id}\n").as_bytes())
}

fn link(prev: &str, label: &str, files: &BTreeMap<String, String>) -> String {
    let mut s = format!("{prev}\n{label}\n");
    for (path, digest) in files {
        s.push_str(path);
        s.push(' ');
        s.push_str(digest);
        s.push('\n');
    }
    sha256_hex(s.as_bytes())
}

/// Content digest of a run file. Transcripts are hashed with their
/// timestamp zeroed so reruns produce the same digest.
pub fn digest(rel_path: &str, bytes: &[u8]) -> String {
    if is_transcript(rel_path) {
        if let Ok(t) = serde_json::from_slice::<AgentTranscript>(bytes) {
            return sha256_hex(&t.to_json_without_timestamp());
        }
    }
    sha256_hex(bytes)
}

pub fn is_transcript(rel_path: &str) -> bool {
    rel_path.starts_with("transcripts/") && rel_path.ends_with(".json")
}
