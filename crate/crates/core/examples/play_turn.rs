//! Drives the rules engine by hand through one full reader turn.
//!
//!     cargo run --example play_turn

use std::sync::Arc;

use miboard::config::GameConfig;
use miboard::content::sample_pack;
use miboard::game::{Action, GameState, PlayerId};
use miboard::strategy::Strategy;

fn show(state: &mut GameState, action: Action) {
    println!("> {}", serde_json::to_string(&action).unwrap());
    match state.apply(&action) {
        Ok(events) => {
            for e in events {
                println!("    {}", serde_json::to_string(&e).unwrap());
            }
        }
        Err(e) => println!("    rejected: {} ({e})", e.code()),
    }
}

fn main() {
    let roster: Vec<(PlayerId, String)> = ["ana", "ben", "cho"]
        .iter()
        .map(|n| (PlayerId::from(*n), n.to_uppercase()))
        .collect();
    let mut g = GameState::new(GameConfig::default(), Arc::new(sample_pack()), &roster, 2024).unwrap();
    let view = g.target_view().unwrap();
    println!("reader {} reads: {:?}", g.reader().player_id, view.sentence);
    println!("assigned {:?}, stake {}", view.assigned_strategy, g.turn.as_ref().unwrap().stake);

    let ana = PlayerId::from("ana");
    let ben = PlayerId::from("ben");
    let cho = PlayerId::from("cho");

    // Spending with no points is refused and changes nothing.
    let before = g.digest();
    show(&mut g, Action::AlterStake { player: ana.clone() });
    assert_eq!(before, g.digest());

    show(&mut g, Action::SubmitSelfExplanation {
        player: ana.clone(),
        text: "So a cell has to get bigger before it can split.".into(),
    });
    show(&mut g, Action::Vote { player: ben.clone(), strategy: Strategy::Paraphrasing });
    show(&mut g, Action::Vote { player: cho.clone(), strategy: Strategy::Elaboration });
    println!("phase now {:?}", g.phase);
    if g.phase == miboard::game::Phase::Discussion {
        show(&mut g, Action::Ready { player: ana.clone() });
        show(&mut g, Action::Ready { player: ben.clone() });
        show(&mut g, Action::Ready { player: cho.clone() });
        show(&mut g, Action::Vote { player: ben, strategy: Strategy::Paraphrasing });
        show(&mut g, Action::Vote { player: cho, strategy: Strategy::Paraphrasing });
    }
    show(&mut g, Action::Roll { player: ana });
    for p in &g.players {
        println!("{} at {} with {} points", p.player_id, p.token_position, p.points);
    }
    println!("next reader {}, digest {}", g.reader().player_id, &g.digest()[..16]);
}
