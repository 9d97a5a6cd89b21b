//! Majority tally and stake awards for one set of votes.
//!
//!     cargo run --example tally

use std::collections::BTreeMap;

use miboard::config::GameConfig;
use miboard::game::scoring::{persuasion_awards, stake_deltas, tally_votes, Votes};
use miboard::game::PlayerId;
use miboard::strategy::Strategy;

fn main() {
    let cfg = GameConfig::default();
    let reader = PlayerId::from("ana");
    let players: Vec<PlayerId> = ["ana", "ben", "cho", "dev"].map(PlayerId::from).to_vec();
    let assigned = Strategy::Bridging;
    let stake = cfg.points_for(assigned);

    let round1: Votes = BTreeMap::from([
        ("ben".into(), Strategy::Bridging),
        ("cho".into(), Strategy::Elaboration),
        ("dev".into(), Strategy::Bridging),
    ]);
    let outcome = tally_votes(&round1, assigned, players.len());
    println!("assigned {assigned}, stake {stake}");
    println!("majority {:?}, reader in majority: {}", outcome.majority_strategy, outcome.reader_in_majority);
    let deltas = stake_deltas(&outcome, &reader, &round1, &players, stake, &cfg);
    for (p, d) in &deltas {
        println!("  {p}: {d:+}");
    }

    // cho comes round to the reader's reading in the re-vote.
    let mut round2 = round1.clone();
    round2.insert("cho".into(), Strategy::Bridging);
    let awards = persuasion_awards(&round1, &round2, Some((&reader, assigned)), cfg.persuasion_points).unwrap();
    println!("persuasion:");
    for (p, a) in awards.iter().filter(|(_, a)| **a > 0) {
        println!("  {p}: +{a}");
    }
}
