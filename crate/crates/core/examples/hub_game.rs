//! A bot game through the session hub on a virtual clock, printing what one
//! guesser actually received for the first turn.
//!
//!     cargo run --example hub_game

use miboard::bots::{play_hub_game, BotPolicy};
use miboard::config::GameConfig;
use miboard::content::sample_pack;
use miboard::server::replay;

fn main() {
    let game = play_hub_game(&GameConfig::default(), &[BotPolicy::UNIFORM; 3], &sample_pack(), 5);
    println!("lobby {} finished: {}", game.lobby_id, game.finished);
    println!("guesser {} saw:", game.players[1]);
    for line in game.transcripts[1].iter().skip_while(|l| !l.contains("\"turn_assigned\"")).take_while(|l| !l.contains("\"summary_revealed\"")) {
        print!("  {}", if line.len() > 140 { format!("{}...\n", &line[..140]) } else { line.clone() });
    }
    let report = replay(&game.log).unwrap();
    println!("replay digest matches: {}", report.digest == game.final_digest);
}
