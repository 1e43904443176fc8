//! Image encoding and a blocking client for an Ollama-style generation endpoint.

use std::io::Cursor;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::codecs::jpeg::JpegEncoder;
use image::imageops::FilterType;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{PriorError, Result};
use crate::sample::{parse_vlm_response, VlmSample};

pub const MAX_SIDE: u32 = 768;
pub const JPEG_QUALITY: u8 = 85;
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_BASE_SEED: u64 = 17;
pub const SEED_STRIDE: u64 = 101;

pub const SYSTEM_PROMPT: &str =
    "You analyze image recognizability and description stability. Return ONLY a JSON object.";

pub const USER_PROMPT: &str = r#"Respond with this JSON format:
{
  "caption": "1-2 sentences describing content",
  "objects": ["list of clearly identifiable objects"],
  "visibility": "clear | somewhat | unclear", "confidence": 0.0 - 1.0
}
If the image is blurry or unclear, set visibility="unclear" and keep the object list minimal."#;

/// Downscales so the longest side is at most 768 px, re-encodes as JPEG
/// (quality 85) and returns the raw JPEG bytes with their dimensions.
pub fn prepare_image(bytes: &[u8]) -> Result<(Vec<u8>, u32, u32)> {
    let img = image::load_from_memory(bytes).map_err(|e| PriorError::Decode(e.to_string()))?;
    let img = if img.width().max(img.height()) > MAX_SIDE {
        // `resize` keeps the aspect ratio within the bounding box.
        img.resize(MAX_SIDE, MAX_SIDE, FilterType::Triangle)
    } else {
        img
    };
    let rgb = img.to_rgb8();
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(Cursor::new(&mut out), JPEG_QUALITY)
        .encode_image(&rgb)
        .map_err(|e| PriorError::Encode(e.to_string()))?;
    Ok((out, rgb.width(), rgb.height()))
}

/// [`prepare_image`] followed by base64 for transport.
pub fn encode_image_for_prompt(bytes: &[u8]) -> Result<String> {
    let (jpeg, _, _) = prepare_image(bytes)?;
    Ok(STANDARD.encode(jpeg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VlmConfig {
    /// Full URL of the generate endpoint, e.g. `http://localhost:11434/api/generate`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub base_seed: u64,
    pub timeout_secs: u64,
}

impl Default for VlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:11434/api/generate".into(),
            model: "llava:7b".into(),
            temperature: DEFAULT_TEMPERATURE,
            base_seed: DEFAULT_BASE_SEED,
            timeout_secs: 120,
        }
    }
}

/// Seed of the `index`-th sample.
pub fn sample_seed(base_seed: u64, index: usize) -> u64 {
    base_seed + SEED_STRIDE * index as u64
}

pub fn request_body(config: &VlmConfig, image_b64: &str, seed: u64) -> Value {
    json!({
        "model": config.model,
        "system": SYSTEM_PROMPT,
        "prompt": USER_PROMPT,
        "images": [image_b64],
        "stream": false,
        "options": { "temperature": config.temperature, "seed": seed },
    })
}

/// Generated text from an endpoint reply: `response` (generate API),
/// `message.content` (chat API), or the body itself.
fn generated_text(body: &str) -> String {
    if let Ok(v) = serde_json::from_str::<Value>(body) {
        if let Some(s) = v.get("response").and_then(Value::as_str) {
            return s.to_string();
        }
        if let Some(s) = v.pointer("/message/content").and_then(Value::as_str) {
            return s.to_string();
        }
    }
    body.to_string()
}

pub struct VlmClient {
    config: VlmConfig,
    http: reqwest::blocking::Client,
}

impl VlmClient {
    pub fn new(config: VlmConfig) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| PriorError::InvalidInput(format!("http client: {e}")))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &VlmConfig {
        &self.config
    }

    fn generate(&self, image_b64: &str, seed: u64) -> std::result::Result<String, String> {
        let resp = self
            .http
            .post(&self.config.endpoint)
            .json(&request_body(&self.config, image_b64, seed))
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        let body = resp.text().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("HTTP {status}: {}", body.chars().take(200).collect::<String>()));
        }
        Ok(generated_text(&body))
    }

    /// Requests `k` samples sequentially with seeds `base + 101 * index`.
    ///
    /// A failed request yields the fallback sample for its index; only when
    /// every request fails is the provider reported unavailable.
    pub fn fetch_assessments(&self, image: &[u8], k: usize) -> Result<Vec<VlmSample>> {
        if k < 2 {
            return Err(PriorError::InvalidInput(format!("need at least 2 samples, got {k}")));
        }
        let encoded = encode_image_for_prompt(image)?;
        let mut samples = Vec::with_capacity(k);
        let mut failures = 0;
        let mut last_error = String::new();
        for index in 0..k {
            let seed = sample_seed(self.config.base_seed, index);
            match self.generate(&encoded, seed) {
                Ok(text) => samples.push(parse_vlm_response(&text)),
                Err(e) => {
                    tracing::warn!(seed, error = %e, "sample request failed; using fallback");
                    failures += 1;
                    last_error = e;
                    samples.push(VlmSample::fallback());
                }
            }
        }
        if failures == k {
            return Err(PriorError::ProviderUnavailable { attempts: k, last: last_error });
        }
        Ok(samples)
    }
}
