use serde::Serialize;
use serde_json::{Map, Value};

use super::{ClientCommand, Envelope, Message, ServerEvent};

/// Longest accepted line, excluding the terminating newline.
pub const MAX_LINE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("line of {0} bytes exceeds the 64 KiB limit")]
    OversizedLine(usize),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("bad field type: {0}")]
    BadFieldType(String),
    #[error("cannot encode: {0}")]
    UnencodableField(String),
}

impl CodecError {
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::OversizedLine(_) => "OversizedLine",
            CodecError::MalformedJson(_) => "MalformedJson",
            CodecError::UnknownType(_) => "UnknownType",
            CodecError::MissingField(_) => "MissingField",
            CodecError::BadFieldType(_) => "BadFieldType",
            CodecError::UnencodableField(_) => "UnencodableField",
        }
    }
}

/// Serializes any value as one canonical line: keys sorted, no interior
/// newlines, `\n`-terminated.
pub fn encode_line<T: Serialize>(value: &T) -> Result<String, CodecError> {
    // serde_json::Value keeps object keys in a BTreeMap, so this sorts them.
    let value =
        serde_json::to_value(value).map_err(|e| CodecError::UnencodableField(e.to_string()))?;
    let mut line =
        serde_json::to_string(&value).map_err(|e| CodecError::UnencodableField(e.to_string()))?;
    line.push('\n');
    Ok(line)
}

pub fn encode(envelope: &Envelope) -> Result<String, CodecError> {
    let body = match &envelope.body {
        Message::Command(c) => serde_json::to_value(c),
        Message::Event(e) => serde_json::to_value(e),
    }
    .map_err(|e| CodecError::UnencodableField(e.to_string()))?;
    let Value::Object(mut map) = body else {
        return Err(CodecError::UnencodableField("message is not an object".into()));
    };
    map.entry("payload").or_insert_with(|| Value::Object(Map::new()));
    if let Some(seq) = envelope.seq {
        map.insert("seq".into(), Value::from(seq));
    }
    if let Some(id) = &envelope.id {
        map.insert("id".into(), Value::from(id.clone()));
    }
    encode_line(&Value::Object(map))
}

pub fn decode(line: &[u8]) -> Result<Envelope, CodecError> {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    if line.len() > MAX_LINE_BYTES {
        return Err(CodecError::OversizedLine(line.len()));
    }
    let text = std::str::from_utf8(line).map_err(|e| CodecError::MalformedJson(e.to_string()))?;
    let value: Value =
        serde_json::from_str(text).map_err(|e| CodecError::MalformedJson(e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(CodecError::MalformedJson("envelope is not an object".into()));
    };

    let kind = match map.remove("type") {
        None => return Err(CodecError::MissingField("type".into())),
        Some(Value::String(s)) => s,
        Some(_) => return Err(CodecError::BadFieldType("type".into())),
    };
    let seq = match map.remove("seq") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| CodecError::BadFieldType("seq".into()))?,
        ),
    };
    let id = match map.remove("id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(CodecError::BadFieldType("id".into())),
    };
    let payload = match map.remove("payload") {
        None | Some(Value::Null) => Value::Object(Map::new()),
        Some(v @ Value::Object(_)) => v,
        Some(_) => return Err(CodecError::BadFieldType("payload".into())),
    };

    let tagged = serde_json::json!({"type": kind, "payload": payload});
    let body = if ClientCommand::TYPES.contains(&kind.as_str()) {
        Message::Command(serde_json::from_value(tagged).map_err(field_error)?)
    } else if ServerEvent::TYPES.contains(&kind.as_str()) {
        Message::Event(serde_json::from_value(tagged).map_err(field_error)?)
    } else {
        return Err(CodecError::UnknownType(kind));
    };
    Ok(Envelope { seq, id, body })
}

fn field_error(e: serde_json::Error) -> CodecError {
    let msg = e.to_string();
    if msg.starts_with("missing field") {
        CodecError::MissingField(msg)
    } else {
        CodecError::BadFieldType(msg)
    }
}
