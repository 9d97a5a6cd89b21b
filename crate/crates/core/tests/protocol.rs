use std::path::PathBuf;

use miboard::protocol::{catalogue, decode, encode, ClientCommand, CodecError, Envelope, ServerEvent, MAX_LINE_BYTES};
use proptest::prelude::*;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/protocol.ndjson")
}

/// Set `MIBOARD_BLESS=1` to rewrite the golden file after an intended change.
#[test]
fn catalogue_matches_golden_lines() {
    let lines: String = catalogue().iter().map(|e| encode(e).unwrap()).collect();
    if std::env::var_os("MIBOARD_BLESS").is_some() {
        std::fs::write(golden_path(), &lines).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(lines, golden);
    for line in golden.lines() {
        let env = decode(line.as_bytes()).unwrap();
        assert_eq!(encode(&env).unwrap().trim_end(), line);
    }
}

#[test]
fn golden_covers_every_type() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    let types: Vec<String> = golden.lines().map(|l| decode(l.as_bytes()).unwrap().body.type_name()).collect();
    for t in ClientCommand::TYPES.iter().chain(ServerEvent::TYPES.iter()) {
        assert!(types.iter().any(|x| x == t), "{t} missing");
    }
}

#[test]
fn commands_carry_request_ids_and_events_carry_seq() {
    let line = encode(&Envelope::command(Some("a1".into()), ClientCommand::Roll {})).unwrap();
    assert_eq!(line, "{\"id\":\"a1\",\"payload\":{},\"type\":\"roll\"}\n");
    let line = encode(&Envelope::event(9, ServerEvent::RevoteStarted {})).unwrap();
    assert_eq!(line, "{\"payload\":{},\"seq\":9,\"type\":\"revote_started\"}\n");
    // Payload may be omitted for empty commands.
    assert_eq!(decode(b"{\"type\":\"roll\"}").unwrap(), Envelope::command(None, ClientCommand::Roll {}));
}

#[test]
fn oversized_and_non_utf8_lines_are_typed_errors() {
    let big = vec![b' '; MAX_LINE_BYTES + 1];
    assert!(matches!(decode(&big), Err(CodecError::OversizedLine(_))));
    assert!(matches!(decode(&[0xff, 0xfe]), Err(CodecError::MalformedJson(_))));
    assert!(matches!(decode(b"{\"type\":\"vote\",\"payload\":{\"strategy\":\"guessing\"}}"), Err(CodecError::BadFieldType(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = decode(&bytes);
    }

    #[test]
    fn arbitrary_json_objects_never_panic(ty in "[a-z_]{0,24}", key in "[a-z_]{1,12}", n in any::<i64>(), s in ".{0,20}") {
        let line = serde_json::json!({"type": ty, "payload": {key: n, "text": s}, "seq": n}).to_string();
        if let Ok(env) = decode(line.as_bytes()) {
            prop_assert_eq!(decode(encode(&env).unwrap().as_bytes()).unwrap(), env);
        }
    }

    #[test]
    fn chat_text_round_trips(text in any::<String>(), seq in any::<u64>()) {
        let env = Envelope::event(seq, ServerEvent::ChatRelayed { sender: "p1".into(), text });
        let line = encode(&env).unwrap();
        prop_assert!(line.ends_with('\n') && !line[..line.len() - 1].contains('\n'));
        prop_assert_eq!(decode(line.as_bytes()).unwrap(), env);
    }
}
