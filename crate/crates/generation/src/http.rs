//! Clients for remote model services.
//!
//! Every request is `multipart/form-data` with a JSON part named `request`
//! plus binary parts. Responses are PNG bytes, except image-to-3D which
//! returns OBJ text. Transport failures and non-2xx statuses are retried
//! with exponential backoff; an undecodable body fails immediately.

use std::time::Duration;

use image::{GrayImage, RgbImage};
use reqwest::blocking::multipart::{Form, Part};
use scratchpad_core::render::output::{encode_depth, id_image};
use scratchpad_core::TriMesh;
use serde_json::json;

use crate::backend::{check_mask, ComposeRequest, Compositor, ImageTo3D, Removal, TextToImage};
use crate::codec::{decode_png, encode_mask_png, encode_png};
use crate::error::{BackendError, GenerationError};

pub const DEFAULT_ATTEMPTS: u32 = 3;

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            timeout: Duration::from_secs(600),
            attempts: DEFAULT_ATTEMPTS,
            backoff: Duration::from_millis(500),
        }
    }
}

/// One named binary part.
pub struct BinaryPart {
    pub name: String,
    pub mime: &'static str,
    pub bytes: Vec<u8>,
}

impl BinaryPart {
    pub fn png(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { name: name.into(), mime: "image/png", bytes }
    }
}

pub struct HttpClient {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let client = reqwest::blocking::Client::builder().timeout(config.timeout).build().expect("http client builds");
        Self { config, client }
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    fn error(&self, attempt: u32, status: Option<u16>, cause: impl Into<String>) -> BackendError {
        BackendError { endpoint: self.config.endpoint.clone(), status, attempt, cause: cause.into() }
    }

    fn form(request: &serde_json::Value, parts: &[BinaryPart]) -> Form {
        let json = Part::text(request.to_string()).mime_str("application/json").expect("static mime");
        let mut form = Form::new().part("request", json);
        for p in parts {
            let part = Part::bytes(p.bytes.clone()).file_name(p.name.clone()).mime_str(p.mime).expect("static mime");
            form = form.part(p.name.clone(), part);
        }
        form
    }

    /// Posts the request, retrying per the config, and hands the body of
    /// the first successful response to `decode`.
    pub fn post<T>(
        &self,
        request: &serde_json::Value,
        parts: &[BinaryPart],
        decode: impl Fn(&[u8]) -> Result<T, String>,
    ) -> Result<T, BackendError> {
        let attempts = self.config.attempts.max(1);
        let mut delay = self.config.backoff;
        let mut attempt = 1;
        loop {
            let mut req = self.client.post(&self.config.endpoint).multipart(Self::form(request, parts));
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            let failure = match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let status = resp.status().as_u16();
                    let body = resp.bytes().map_err(|e| self.error(attempt, Some(status), e.to_string()))?;
                    return decode(&body).map_err(|e| self.error(attempt, Some(status), format!("decoding response: {e}")));
                }
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.text().unwrap_or_default();
                    self.error(attempt, Some(status), body.chars().take(200).collect::<String>())
                }
                Err(e) => self.error(attempt, None, e.to_string()),
            };
            if attempt >= attempts {
                return Err(failure);
            }
            log::warn!("{failure}; retrying in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
            attempt += 1;
        }
    }
}

fn png_decoder(body: &[u8]) -> Result<RgbImage, String> {
    decode_png(body).map_err(|e| e.to_string())
}

pub struct HttpTextToImage(pub HttpClient);

impl TextToImage for HttpTextToImage {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(&self, prompt: &str, seed: u64) -> Result<RgbImage, GenerationError> {
        if prompt.trim().is_empty() {
            return Err(GenerationError::EmptyPrompt);
        }
        Ok(self.0.post(&json!({ "prompt": prompt, "seed": seed }), &[], png_decoder)?)
    }
}

pub struct HttpImageTo3D(pub HttpClient);

impl ImageTo3D for HttpImageTo3D {
    fn name(&self) -> &str {
        "http"
    }

    fn reconstruct(&self, image: &RgbImage, prompt: &str) -> Result<TriMesh, GenerationError> {
        let parts = [BinaryPart::png("image", encode_png(image))];
        Ok(self.0.post(&json!({ "prompt": prompt }), &parts, |body| {
            let text = std::str::from_utf8(body).map_err(|e| e.to_string())?;
            scratchpad_core::obj::parse_obj("mesh", text).map_err(|e| e.to_string())
        })?)
    }
}

pub struct HttpCompositor(pub HttpClient);

/// JSON part and binary parts shared by compose and recompose.
pub fn compose_parts(mode: &str, req: &ComposeRequest) -> (serde_json::Value, Vec<BinaryPart>) {
    let request = json!({
        "mode": mode,
        "enhanced_prompt": req.enhanced_prompt,
        "seed": req.seed,
        "width": req.width,
        "height": req.height,
        "depth": req.sidecar,
        "subjects": req.subjects.iter().map(|s| json!({
            "index": s.index,
            "rect": s.rect,
            "identity_part": format!("identity_{}", s.index),
        })).collect::<Vec<_>>(),
    });
    let mut parts = vec![BinaryPart { name: "depth".into(), mime: "application/octet-stream", bytes: encode_depth(&req.depth) }];
    if !req.ids.is_empty() {
        let mut ids = Vec::new();
        id_image(req.width, req.height, &req.ids)
            .write_to(&mut std::io::Cursor::new(&mut ids), image::ImageFormat::Png)
            .expect("in-memory PNG encoding");
        parts.push(BinaryPart::png("ids", ids));
    }
    for s in &req.subjects {
        parts.push(BinaryPart::png(format!("identity_{}", s.index), encode_png(&s.identity)));
    }
    (request, parts)
}

impl Compositor for HttpCompositor {
    fn name(&self) -> &str {
        "http"
    }

    fn compose(&self, request: &ComposeRequest) -> Result<RgbImage, GenerationError> {
        request.validate()?;
        let (json, parts) = compose_parts("compose", request);
        Ok(self.0.post(&json, &parts, png_decoder)?)
    }

    fn recompose(&self, base: &RgbImage, mask: &GrayImage, request: &ComposeRequest) -> Result<RgbImage, GenerationError> {
        request.validate()?;
        check_mask(base, mask)?;
        let (json, mut parts) = compose_parts("recompose", request);
        parts.push(BinaryPart::png("base", encode_png(base)));
        parts.push(BinaryPart::png("mask", encode_mask_png(mask)));
        let out = self.0.post(&json, &parts, png_decoder)?;
        if out.dimensions() != base.dimensions() {
            return Err(GenerationError::InvalidInput("recomposed image changed size".into()));
        }
        // the contract holds whatever the service does outside the mask
        let mut merged = base.clone();
        for (x, y, m) in mask.enumerate_pixels() {
            if m.0[0] != 0 {
                merged.put_pixel(x, y, *out.get_pixel(x, y));
            }
        }
        Ok(merged)
    }
}

pub struct HttpRemoval(pub HttpClient);

impl Removal for HttpRemoval {
    fn name(&self) -> &str {
        "http"
    }

    fn remove(&self, image: &RgbImage, mask: &GrayImage) -> Result<RgbImage, GenerationError> {
        check_mask(image, mask)?;
        let parts = [BinaryPart::png("image", encode_png(image)), BinaryPart::png("mask", encode_mask_png(mask))];
        Ok(self.0.post(&json!({}), &parts, png_decoder)?)
    }
}
