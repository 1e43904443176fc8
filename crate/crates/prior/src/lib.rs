//! Quality prior for ranking sessions, derived from how stable a
//! vision-language model's description of an image is across repeated,
//! stochastic samples.

pub mod client;
pub mod error;
pub mod mock;
pub mod sample;
pub mod score;

pub use client::{encode_image_for_prompt, prepare_image, VlmClient, VlmConfig};
pub use error::{PriorError, Result};
pub use mock::{mock_provider, mock_provider_with, MockOptions};
pub use sample::{parse_vlm_response, Visibility, VlmSample};
pub use score::{prior_score, semantic_consistency, PriorAssessment, PriorWeights};
