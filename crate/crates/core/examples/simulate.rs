//! Monte Carlo balance runs with different bot mixes.
//!
//!     cargo run --release --example simulate

use miboard::bots::{simulate, BotPolicy, SimOptions};
use miboard::config::GameConfig;
use miboard::content::sample_pack;

fn main() {
    let cfg = GameConfig::default();
    let pack = sample_pack();
    let mixes: [(&str, Vec<BotPolicy>); 4] = [
        ("uniform x4", vec![BotPolicy::UNIFORM; 4]),
        ("oracle:1 x4", vec![BotPolicy::oracle(1.0); 4]),
        ("oracle:0.6 x4", vec![BotPolicy::oracle(0.6); 4]),
        (
            "mixed",
            ["uniform+greedy", "stubborn", "swayed", "oracle:0.8"]
                .iter()
                .map(|s| s.parse().unwrap())
                .collect(),
        ),
    ];
    println!("{:<14} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7}", "mix", "mean", "p50", "p95", "unanim", "major", "discuss");
    for (label, policies) in mixes {
        let out = simulate(&cfg, &policies, &pack, 500, 7, &SimOptions::default()).unwrap();
        let r = &out.report;
        println!(
            "{label:<14} {:>6.1} {:>6} {:>6} {:>7.3} {:>7.3} {:>7.3}",
            r.mean_turns, r.p50_turns, r.p95_turns, r.unanimity_rate, r.majority_rate, r.discussion_rate
        );
    }
}
