//! Wire envelopes: encoding, decoding, typed errors and per-player redaction.
//!
//!     cargo run --example codec

use std::sync::Arc;

use miboard::config::GameConfig;
use miboard::content::sample_pack;
use miboard::game::{GameState, PlayerId};
use miboard::protocol::{decode, encode, redact_for, ClientCommand, Envelope, ServerEvent};
use miboard::strategy::Strategy;

fn main() {
    let vote = Envelope::command(Some("r7".into()), ClientCommand::Vote { strategy: Strategy::Prediction });
    let line = encode(&vote).unwrap();
    print!("command: {line}");
    assert_eq!(decode(line.as_bytes()).unwrap(), vote);

    for bad in [&b"{\"type\":\"vote\""[..], b"{\"type\":\"fly\",\"payload\":{}}", b"{\"type\":\"vote\",\"payload\":{}}", b"[1,2]"] {
        let err = decode(bad).unwrap_err();
        println!("{:<40} -> {}", String::from_utf8_lossy(bad), err.code());
    }

    let roster: Vec<(PlayerId, String)> = ["p1", "p2", "p3"].iter().map(|p| (PlayerId::from(*p), p.to_string())).collect();
    let g = GameState::new(GameConfig::default(), Arc::new(sample_pack()), &roster, 1).unwrap();
    let turn = ServerEvent::TurnAssigned {
        reader_id: g.reader().player_id.clone(),
        target_view: g.target_view().unwrap(),
        stake: Some(g.turn.as_ref().unwrap().stake),
    };
    for who in ["p1", "p2"] {
        let seen = redact_for(&PlayerId::from(who), &turn, &g);
        print!("to {who}: {}", encode(&Envelope::event(1, seen)).unwrap());
    }
}
