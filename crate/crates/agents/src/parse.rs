//! Pulling structured answers out of free-form model replies.

use serde_json::Value;

/// Contents of every fenced code block, in order. The info string is
/// ignored, so both ```json and bare ``` fences count.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let Some(nl) = after.find('\n') else { break };
        let body = &after[nl + 1..];
        let Some(end) = body.find("```") else { break };
        out.push(&body[..end]);
        rest = &body[end + 3..];
    }
    out
}

/// Candidate JSON values, most preferred first: fenced blocks from last to
/// first, then the whole reply, then the outermost `{...}` span.
pub fn json_candidates(text: &str) -> Vec<Value> {
    let mut out: Vec<Value> =
        fenced_blocks(text).iter().rev().filter_map(|b| serde_json::from_str(b.trim()).ok()).collect();
    if out.is_empty() {
        if let Ok(v) = serde_json::from_str(text.trim()) {
            out.push(v);
        } else if let (Some(a), Some(b)) = (text.find('{'), text.rfind('}')) {
            if a < b {
                if let Ok(v) = serde_json::from_str(&text[a..=b]) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// First candidate accepted by `validate`. On failure returns the error for
/// the most preferred candidate.
pub fn parse_with<T>(text: &str, validate: impl Fn(&Value) -> Result<T, String>) -> Result<T, String> {
    let candidates = json_candidates(text);
    let mut first_err = None;
    for c in &candidates {
        match validate(c) {
            Ok(v) => return Ok(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| "no JSON object found in the reply".to_string()))
}

/// Integers appearing in `text`, in order. A leading '-' is kept only when
/// it is not preceded by an alphanumeric character.
pub fn integers(text: &str) -> Vec<i64> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            // skip decimals entirely
            if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                continue;
            }
            let negative = start > 0
                && bytes[start - 1] == b'-'
                && (start < 2 || !bytes[start - 2].is_ascii_alphanumeric());
            if let Ok(v) = text[start..i].parse::<i64>() {
                out.push(if negative { -v } else { v });
            }
        } else {
            i += 1;
        }
    }
    out
}
