use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MAX_OBJECTS: usize = 8;
pub const MAX_CAPTION_CHARS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Unclear,
    Somewhat,
    Clear,
}

impl Visibility {
    pub const ALL: [Visibility; 3] = [Visibility::Unclear, Visibility::Somewhat, Visibility::Clear];

    pub fn value(self) -> f64 {
        match self {
            Visibility::Clear => 1.0,
            Visibility::Somewhat => 0.5,
            Visibility::Unclear => 0.0,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clear" => Some(Visibility::Clear),
            "somewhat" => Some(Visibility::Somewhat),
            "unclear" => Some(Visibility::Unclear),
            _ => None,
        }
    }
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::Clear => "clear",
            Visibility::Somewhat => "somewhat",
            Visibility::Unclear => "unclear",
        })
    }
}

/// One decoded model answer about an image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlmSample {
    pub caption: String,
    pub objects: Vec<String>,
    pub visibility: Visibility,
    pub confidence: f64,
}

impl VlmSample {
    /// What a failed or unparseable answer decodes to.
    pub fn fallback() -> Self {
        Self { caption: String::new(), objects: Vec::new(), visibility: Visibility::Unclear, confidence: 0.0 }
    }

    pub fn is_fallback(&self) -> bool {
        *self == Self::fallback()
    }
}

/// Decodes a model answer. Never fails: anything that does not satisfy the
/// response schema yields [`VlmSample::fallback`].
///
/// The JSON object may be surrounded by other text (code fences, chatter);
/// the span from the first `{` to the last `}` is used.
pub fn parse_vlm_response(raw: &str) -> VlmSample {
    try_parse(raw).unwrap_or_else(VlmSample::fallback)
}

fn try_parse(raw: &str) -> Option<VlmSample> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    if end < start {
        return None;
    }
    let value: Value = serde_json::from_str(&raw[start..=end]).ok()?;
    let obj = value.as_object()?;

    let caption = match obj.get("caption") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.trim().chars().take(MAX_CAPTION_CHARS).collect(),
        Some(_) => return None,
    };

    let mut objects: Vec<String> = Vec::new();
    match obj.get("objects") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let name = item.as_str()?.trim().to_lowercase();
                if !name.is_empty() && !objects.contains(&name) {
                    objects.push(name);
                }
            }
        }
        Some(_) => return None,
    }
    objects.truncate(MAX_OBJECTS);

    let visibility = Visibility::parse(obj.get("visibility")?.as_str()?)?;
    let confidence = obj.get("confidence")?.as_f64()?;
    if !(0.0..=1.0).contains(&confidence) {
        return None;
    }
    Some(VlmSample { caption, objects, visibility, confidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_answer_is_normalized() {
        let s = parse_vlm_response(
            r#"{"caption":"a cat","objects":["Cat","tree"],"visibility":"clear","confidence":0.9}"#,
        );
        assert_eq!(s.objects, vec!["cat", "tree"]);
        assert_eq!(s.visibility, Visibility::Clear);
        assert_eq!(s.caption, "a cat");
        assert_eq!(s.confidence, 0.9);
    }

    #[test]
    fn garbage_falls_back() {
        assert!(parse_vlm_response("not json").is_fallback());
        assert!(parse_vlm_response("").is_fallback());
        assert!(parse_vlm_response("} {").is_fallback());
        assert!(parse_vlm_response("[1, 2]").is_fallback());
    }

    #[test]
    fn objects_truncated_to_eight() {
        let names: Vec<String> = (0..12).map(|k| format!("\"thing{k}\"")).collect();
        let raw = format!(r#"{{"objects":[{}],"visibility":"somewhat","confidence":0.5}}"#, names.join(","));
        let s = parse_vlm_response(&raw);
        assert_eq!(s.objects.len(), 8);
        assert_eq!(s.objects[0], "thing0");
        assert_eq!(s.objects[7], "thing7");
    }

    #[test]
    fn surrounding_text_and_duplicates() {
        let raw = "Sure!\n```json\n{\"objects\":[\"Dog\",\"dog\",\" \"],\"visibility\":\"Unclear\",\"confidence\":0}\n```";
        let s = parse_vlm_response(raw);
        assert_eq!(s.objects, vec!["dog"]);
        assert_eq!(s.visibility, Visibility::Unclear);
        assert_eq!(s.caption, "");
    }

    #[test]
    fn schema_violations_fall_back() {
        for raw in [
            r#"{"objects":[],"visibility":"blurry","confidence":0.5}"#,
            r#"{"objects":[],"visibility":"clear","confidence":1.5}"#,
            r#"{"objects":[],"visibility":"clear"}"#,
            r#"{"objects":"cat","visibility":"clear","confidence":0.5}"#,
            r#"{"objects":[3],"visibility":"clear","confidence":0.5}"#,
            r#"{"caption":7,"objects":[],"visibility":"clear","confidence":0.5}"#,
        ] {
            assert!(parse_vlm_response(raw).is_fallback(), "{raw}");
        }
    }

    #[test]
    fn caption_truncated_by_chars() {
        let caption = "é".repeat(500);
        let raw = format!(r#"{{"caption":"{caption}","objects":[],"visibility":"clear","confidence":1}}"#);
        assert_eq!(parse_vlm_response(&raw).caption.chars().count(), MAX_CAPTION_CHARS);
    }
}
