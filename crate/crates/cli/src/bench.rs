//! Prompt-file ingestion and batch runs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use clap::Args;
use scratchpad_pipeline::{Pipeline, RunOptions};

use crate::{engine, CmdResult, EngineArgs, Failure, RunArgs, EXIT_PIPELINE, EXIT_UNAVAILABLE};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// UTF-8 prompt list, one per line; blank lines and '#' comments are skipped
    #[arg(long)]
    pub prompts: PathBuf,
    /// Use only the first N prompts
    #[arg(long)]
    pub limit: Option<usize>,
    /// POST {prompt, run_id, image} here and record the returned score
    #[arg(long, value_name = "URL")]
    pub score_endpoint: Option<String>,
    /// Pipelines run in parallel
    #[arg(long, default_value_t = 2)]
    pub jobs: usize,
    /// Enqueue only: list run ids without executing
    #[arg(long)]
    pub dry_run: bool,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "runs", env = "SCRATCHPAD_RUNS", hide_env_values = true)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

/// Non-empty, non-comment lines, trimmed.
pub fn parse_prompts(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_prompts(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(parse_prompts(&text))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub prompt_index: usize,
    pub run_id: String,
    pub status: String,
    pub score: Option<f64>,
}

pub fn write_csv(rows: &[BenchRow], out: &mut dyn Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["prompt_index", "run_id", "status", "score"])?;
    for r in rows {
        let score = r.score.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([r.prompt_index.to_string(), r.run_id.clone(), r.status.clone(), score])?;
    }
    w.flush()?;
    Ok(())
}

struct Scorer {
    url: String,
    client: reqwest::blocking::Client,
}

impl Scorer {
    fn score(&self, prompt: &str, run_id: &str, image: &Path) -> Result<f64, String> {
        let bytes = std::fs::read(image).map_err(|e| e.to_string())?;
        let body = serde_json::json!({
            "prompt": prompt,
            "run_id": run_id,
            "image": base64::engine::general_purpose::STANDARD.encode(bytes),
        });
        let resp = self.client.post(&self.url).json(&body).send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("scoring endpoint returned {}", resp.status()));
        }
        let v: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        v.get("score").and_then(|s| s.as_f64()).ok_or_else(|| "reply has no numeric score".into())
    }
}

pub fn bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut prompts = load_prompts(&a.prompts)?;
    if let Some(n) = a.limit {
        prompts.truncate(n);
    }
    writeln!(err, "{} prompts loaded", prompts.len())?;
    if a.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let config = a.run.config(a.engine.backend);
    config.validate().map_err(Failure::from)?;
    let pipeline = Pipeline::new(engine(&a.engine)?, &a.out);

    let rows = if a.dry_run {
        prompts
            .iter()
            .enumerate()
            .map(|(i, p)| BenchRow { prompt_index: i, run_id: pipeline.run_id(p, &config), status: "queued".into(), score: None })
            .collect()
    } else {
        let scorer = a.score_endpoint.map(|url| Scorer {
            url,
            client: reqwest::blocking::Client::builder().timeout(Duration::from_secs(120)).build().expect("http client"),
        });
        execute(&pipeline, &prompts, &config, a.jobs, scorer.as_ref(), err)
    };

    let written = match &a.csv {
        Some(path) => write_csv(&rows, &mut std::fs::File::create(path)?),
        None => write_csv(&rows, out),
    };
    written.map_err(|e| Failure { code: EXIT_PIPELINE, message: format!("writing CSV: {e}") })?;
    let unavailable = rows.iter().any(|r| r.status == "unavailable");
    let failed = rows.iter().any(|r| r.status == "failed");
    if unavailable {
        Err(Failure { code: EXIT_UNAVAILABLE, message: "a backend was unreachable".into() })
    } else if failed {
        Err(Failure { code: EXIT_PIPELINE, message: "some runs failed".into() })
    } else {
        Ok(())
    }
}

fn execute(
    pipeline: &Pipeline,
    prompts: &[String],
    config: &scratchpad_pipeline::RunConfig,
    jobs: usize,
    scorer: Option<&Scorer>,
    err: &mut dyn Write,
) -> Vec<BenchRow> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<BenchRow>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
    let messages = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(prompts.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(prompt) = prompts.get(i) else { break };
                let run_id = pipeline.run_id(prompt, config);
                let (status, score) = match pipeline.generate(prompt, config, &RunOptions::default()) {
                    Ok(run) => match scorer.map(|sc| sc.score(prompt, &run.run_id, &run.final_image())) {
                        Some(Ok(v)) => ("complete", Some(v)),
                        Some(Err(e)) => {
                            messages.lock().unwrap().push(format!("prompt {i}: scoring failed: {e}"));
                            ("complete", None)
                        }
                        None => ("complete", None),
                    },
                    Err(e) => {
                        messages.lock().unwrap().push(format!("prompt {i}: {e}"));
                        (if e.is_unavailable() { "unavailable" } else { "failed" }, None)
                    }
                };
                *slots[i].lock().unwrap() = Some(BenchRow { prompt_index: i, run_id, status: status.into(), score });
            });
        }
    });
    for m in messages.into_inner().unwrap() {
        let _ = writeln!(err, "{m}");
    }
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every prompt processed")).collect()
}
