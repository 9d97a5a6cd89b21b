//! Records a simulated game's session log, then rebuilds the game from it.
//!
//!     cargo run --example replay_log

use miboard::bots::{simulate, BotPolicy, SimOptions};
use miboard::config::GameConfig;
use miboard::content::sample_pack;
use miboard::server::{replay, ReplayError};

fn main() {
    let opts = SimOptions { keep_logs: true, ..SimOptions::default() };
    let out = simulate(&GameConfig::default(), &[BotPolicy::UNIFORM.greedy(); 3], &sample_pack(), 1, 99, &opts).unwrap();
    let log = &out.logs[0];
    println!("log: {} lines, {} bytes", log.lines().count(), log.len());
    for line in log.lines().skip(1).take(3) {
        println!("  {}", &line[..line.len().min(110)]);
    }

    let dir = std::env::temp_dir().join("miboard-replay-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("game.mblog");
    std::fs::write(&path, log).unwrap();
    let report = replay(&std::fs::read_to_string(&path).unwrap()).unwrap();
    println!(
        "replayed {} entries, {} checkpoints, winner {:?}, digest {}",
        report.entries, report.checkpoints, report.state.winner, report.digest
    );

    let cut = &log[..log.len() - 20];
    match replay(cut) {
        Err(ReplayError::CorruptLog(why)) => println!("truncated copy: {why}"),
        other => println!("unexpected: {other:?}"),
    }
}
