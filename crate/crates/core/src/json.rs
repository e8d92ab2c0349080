use serde::Serialize;

/// Pretty-printed JSON with a trailing newline; the byte layout every
/// emitted artifact shares.
pub(crate) fn to_artifact_string<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types always serialize");
    text.push('\n');
    text
}
