//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//!     cargo test --release --test acceptance

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use miboard::bots::{bot_act, play_hub_game, simulate, BotPolicy, Observation, SimOptions, WireBot};
use miboard::config::GameConfig;
use miboard::content::{sample_pack, PackLibrary};
use miboard::game::cards::PowerCardKind;
use miboard::game::scoring::{persuasion_awards, stake_deltas, tally_votes, Votes};
use miboard::game::{Action, GameState, Phase, PlayerId};
use miboard::protocol::{catalogue, decode, encode, ClientCommand, Envelope, Message, ServerEvent};
use miboard::rng::{derive_seed, GameRng};
use miboard::server::log::command_action;
use miboard::server::{replay, Hub};
use miboard::strategy::Strategy;

type Check = Result<String, String>;

fn ids(n: usize) -> Vec<PlayerId> {
    (0..n).map(|i| PlayerId(format!("p{i}"))).collect()
}

fn random_strategy(rng: &mut GameRng) -> Strategy {
    Strategy::ALL[rng.below(5) as usize]
}

/// Count, threshold, uniqueness, written out longhand.
fn oracle_majority(votes: &[Strategy], assigned: Strategy, n: usize) -> (Option<Strategy>, bool) {
    let mut all = votes.to_vec();
    all.push(assigned);
    let threshold = n.div_ceil(2);
    let mut winners = Vec::new();
    for s in Strategy::ALL {
        if all.iter().filter(|v| **v == s).count() >= threshold {
            winners.push(s);
        }
    }
    let majority = if winners.len() == 1 { Some(winners[0]) } else { None };
    let unanimous = all.len() == n && all.iter().all(|v| *v == all[0]);
    (majority, unanimous)
}

fn tally_oracle() -> Check {
    let start = Instant::now();
    let mut cases = 0usize;
    for n in 2..=5usize {
        let guessers = ids(n)[1..].to_vec();
        let k = guessers.len();
        for code in 0..5usize.pow(k as u32) {
            let mut c = code;
            let vector: Vec<Strategy> = (0..k)
                .map(|_| {
                    let s = Strategy::ALL[c % 5];
                    c /= 5;
                    s
                })
                .collect();
            let votes: Votes = guessers.iter().cloned().zip(vector.iter().copied()).collect();
            for assigned in Strategy::ALL {
                cases += 1;
                let got = tally_votes(&votes, assigned, n);
                let (majority, unanimous) = oracle_majority(&vector, assigned, n);
                if got.majority_strategy != majority
                    || got.unanimous != unanimous
                    || got.reader_in_majority != (majority == Some(assigned))
                {
                    return Err(format!("n={n} votes={vector:?} assigned={assigned}: got {got:?}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("{cases} cases took {secs:.2}s"));
    }
    Ok(format!("{cases} cases match, {secs:.3}s"))
}

fn scoring_properties() -> Check {
    let cfg = GameConfig::default();
    let mut rng = GameRng::from_seed(0x5c0de);
    let mut seen = BTreeMap::<&str, usize>::new();
    for case in 0..10_000 {
        let n = 2 + rng.below(5) as usize;
        let players = ids(n);
        let reader = players[0].clone();
        let assigned = random_strategy(&mut rng);
        let base = cfg.points_for(assigned);
        let stake = if rng.chance(0.5) { base } else { base * cfg.stake_alter_multiplier };
        let votes: Votes = players[1..].iter().map(|p| (p.clone(), random_strategy(&mut rng))).collect();
        let outcome = tally_votes(&votes, assigned, n);
        let deltas = stake_deltas(&outcome, &reader, &votes, &players, stake, &cfg);
        let bonus = if outcome.unanimous { cfg.agreement_bonus as i64 } else { 0 };
        let fail = |what: &str| Err(format!("case {case}: {what} (stake {stake}, {outcome:?}, {deltas:?})"));
        let reader_delta = deltas[&reader] - bonus;
        if reader_delta != 0 && reader_delta != stake as i64 {
            return fail("reader delta not in {0, stake}");
        }
        match outcome.majority_strategy {
            None => {
                *seen.entry("no majority").or_default() += 1;
                if deltas.values().any(|d| *d != 0) {
                    return fail("no majority but non-zero deltas");
                }
            }
            Some(m) => {
                let half = (stake / 2) as i64;
                let excluded = (stake / cfg.minority_guesser_points_divisor) as i64;
                if outcome.reader_in_majority {
                    *seen.entry("reader in majority").or_default() += 1;
                } else {
                    *seen.entry("reader excluded").or_default() += 1;
                    if excluded >= half {
                        return fail("excluded share not smaller than half");
                    }
                }
                for (p, v) in &votes {
                    let d = deltas[p] - bonus;
                    let want = match (*v == m, outcome.reader_in_majority) {
                        (false, _) => 0,
                        (true, true) => half,
                        (true, false) => excluded,
                    };
                    if d != want {
                        return fail("guesser delta");
                    }
                }
                if outcome.unanimous {
                    *seen.entry("unanimous").or_default() += 1;
                    if deltas[&reader] != stake as i64 + bonus {
                        return fail("unanimous reader delta");
                    }
                }
            }
        }
    }
    Ok(format!("10000 cases, 0 violations, branches {seen:?}"))
}

fn persuasion() -> Check {
    let per = GameConfig::default().persuasion_points;
    let mut rng = GameRng::from_seed(0xfeed);
    let mut converts_total = 0usize;
    for case in 0..10_000 {
        let n = 2 + rng.below(5) as usize;
        let players = ids(n);
        let reader = players[0].clone();
        let assigned = random_strategy(&mut rng);
        let r1: Votes = players[1..].iter().map(|p| (p.clone(), random_strategy(&mut rng))).collect();
        let r2: Votes = r1
            .iter()
            .map(|(p, v)| (p.clone(), if rng.chance(0.4) { random_strategy(&mut rng) } else { *v }))
            .collect();
        let awards = persuasion_awards(&r1, &r2, Some((&reader, assigned)), per).map_err(|e| e.to_string())?;
        let total: u64 = awards.values().map(|v| *v as u64).sum();
        let mut expected = 0u64;
        for (g, v2) in &r2 {
            if r1[g] != *v2 {
                converts_total += 1;
                let holders = r1.values().filter(|v| *v == v2).count() + (assigned == *v2) as usize;
                expected += per as u64 * holders as u64;
            }
        }
        if total != expected {
            return Err(format!("case {case}: total {total} != {expected}"));
        }
        let same = persuasion_awards(&r1, &r1, Some((&reader, assigned)), per).map_err(|e| e.to_string())?;
        if same.values().any(|v| *v != 0) {
            return Err(format!("case {case}: equal rounds paid out"));
        }
    }
    Ok(format!("10000 cases, {converts_total} converts, totals match"))
}

struct BigRun {
    unanimity: f64,
    scored: u64,
}

fn termination_and_determinism() -> (Check, Option<BigRun>) {
    let cfg = GameConfig::default();
    let policies = [BotPolicy::UNIFORM; 4];
    let start = Instant::now();
    let a = simulate(&cfg, &policies, &sample_pack(), 1000, 2024, &SimOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let b = simulate(&cfg, &policies, &sample_pack(), 1000, 2024, &SimOptions { parallel: false, ..SimOptions::default() });
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (Err(e.to_string()), None),
    };
    let cap = 10 * cfg.board_length as u64;
    let max_turns = a.rows.iter().map(|r| r.turns).max().unwrap_or(0);
    let big = BigRun { unanimity: a.report.unanimity_rate, scored: a.report.scored_turns };
    let check = if a.report.capped_games != 0 || max_turns > cap {
        Err(format!("{} games hit the cap {cap}", a.report.capped_games))
    } else if a.report.to_json() != b.report.to_json() {
        Err("reports differ between runs".into())
    } else if a.log_digests != b.log_digests {
        Err("event logs differ between runs".into())
    } else if secs >= 60.0 {
        Err(format!("took {secs:.1}s"))
    } else {
        Ok(format!(
            "1000/1000 finished (max {max_turns} turns, cap {cap}), report and 1000 logs identical on rerun, {secs:.2}s"
        ))
    };
    (check, Some(big))
}

fn statistics(big: Option<BigRun>) -> Check {
    let cfg = GameConfig::default();
    let (mut rate, mut n) = match big {
        Some(b) => (b.unanimity, b.scored),
        None => (0.0, 0),
    };
    if n < 20_000 {
        let out = simulate(&cfg, &[BotPolicy::UNIFORM; 4], &sample_pack(), 1000, 77, &SimOptions::default())
            .map_err(|e| e.to_string())?;
        let total = n + out.report.scored_turns;
        rate = (rate * n as f64 + out.report.unanimity_rate * out.report.scored_turns as f64) / total as f64;
        n = total;
    }
    let p = 0.2f64.powi(3);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let z = (rate - p) / se;
    let oracle = simulate(&cfg, &[BotPolicy::oracle(1.0); 4], &sample_pack(), 300, 5, &SimOptions::default())
        .map_err(|e| e.to_string())?;
    if n < 20_000 || z.abs() > 3.0 {
        return Err(format!("unanimity {rate:.5} over {n} turns, z = {z:.2}"));
    }
    if oracle.report.discussion_rate != 0.0 || oracle.report.unanimity_rate != 1.0 {
        return Err(format!("oracle discussion_rate {}", oracle.report.discussion_rate));
    }
    Ok(format!(
        "unanimity {rate:.5} over {n} turns (expected {p:.3}, z = {z:+.2}); OracleBiased(1.0) discussion_rate 0 over {} turns",
        oracle.report.scored_turns
    ))
}

/// Random bot games plus adversarial sessions with junk commands,
/// disconnects, rejoins, timer expiries and rematches.
fn chaos_session(seed: u64) -> (String, String) {
    let mut rng = GameRng::from_seed(seed);
    let n = 2 + rng.below(4) as usize;
    let mut ent = GameRng::from_seed(derive_seed(seed, 1));
    let mut hub = Hub::new(GameConfig::default(), PackLibrary::with_sample(), move || {
        ((ent.next_u32() as u64) << 32) | ent.next_u32() as u64
    });
    let mut conns: Vec<Option<u64>> = (0..n).map(|_| Some(hub.connect())).collect();
    let mut bots: Vec<WireBot> = (0..n).map(|i| WireBot::new(BotPolicy::UNIFORM.greedy(), derive_seed(seed, 10 + i as u64))).collect();
    let mut now = 0u64;

    fn pump(out: Vec<miboard::server::Delivery>, conns: &[Option<u64>], bots: &mut [WireBot]) {
        for d in out {
            if let Some(seat) = conns.iter().position(|c| *c == Some(d.conn)) {
                if let Ok(Envelope { body: Message::Event(ev), .. }) = decode(d.line.as_bytes()) {
                    bots[seat].observe(&ev);
                }
            }
        }
    }
    let line = |c: ClientCommand| encode(&Envelope::command(None, c)).unwrap();
    let name = |i: usize| format!("n{i}");

    let out = hub.receive(conns[0].unwrap(), line(ClientCommand::Join { name: name(0), lobby: None }).as_bytes(), now);
    pump(out, &conns, &mut bots);
    let out = hub.receive(conns[0].unwrap(), line(ClientCommand::CreateLobby { config_overrides: serde_json::Value::Null, pack: None }).as_bytes(), now);
    pump(out, &conns, &mut bots);
    let lobby = hub.lobby_of(conns[0].unwrap()).unwrap().to_string();
    for i in 1..n {
        let out = hub.receive(conns[i].unwrap(), line(ClientCommand::Join { name: name(i), lobby: Some(lobby.clone()) }).as_bytes(), now);
        pump(out, &conns, &mut bots);
    }
    let out = hub.receive(conns[0].unwrap(), line(ClientCommand::StartGame {}).as_bytes(), now);
    pump(out, &conns, &mut bots);

    let mut rematched = false;
    for _ in 0..1500 {
        now += 1 + rng.below(50) as u64;
        let seat = rng.below(n as u32) as usize;
        let roll = rng.below(100);
        let out = if roll < 3 && seat != 0 {
            match conns[seat].take() {
                Some(c) => hub.disconnect(c, now),
                None => {
                    let c = hub.connect();
                    conns[seat] = Some(c);
                    hub.receive(c, line(ClientCommand::Join { name: name(seat), lobby: Some(lobby.clone()) }).as_bytes(), now)
                }
            }
        } else if roll < 8 {
            match hub.next_deadline() {
                Some(due) => {
                    now = now.max(due);
                    hub.tick(now)
                }
                None => Vec::new(),
            }
        } else if let Some(c) = conns[seat] {
            let junk = roll < 25;
            let command = if junk {
                let target = Some(PlayerId(format!("p{}", 1 + rng.below(n as u32 + 1))));
                match rng.below(10) {
                    0 => ClientCommand::Vote { strategy: random_strategy(&mut rng) },
                    1 => ClientCommand::Roll {},
                    2 => ClientCommand::Ready {},
                    3 => ClientCommand::AlterStake {},
                    4 => ClientCommand::SwapStrategy {},
                    5 => ClientCommand::PlayPowerCard { kind: PowerCardKind::ALL[rng.below(3) as usize], target },
                    6 => ClientCommand::SubmitSE { text: String::new() },
                    7 => ClientCommand::Chat { text: "hello".into() },
                    8 => ClientCommand::StartGame {},
                    _ => {
                        let out = hub.receive(c, b"{\"type\":\"vote\",\"payload\":{\"strategy\":7}}", now);
                        pump(out, &conns, &mut bots);
                        continue;
                    }
                }
            } else {
                match bots[seat].next_command() {
                    Some(c) => c,
                    None => continue,
                }
            };
            hub.receive(c, line(command).as_bytes(), now)
        } else {
            Vec::new()
        };
        pump(out, &conns, &mut bots);

        let phase = hub.session(&lobby).and_then(|s| s.game()).map(|g| g.phase);
        if phase == Some(Phase::Finished) {
            if rematched {
                break;
            }
            rematched = true;
            for c in conns.iter().flatten() {
                let out = hub.receive(*c, line(ClientCommand::Rematch {}).as_bytes(), now);
                pump(out, &conns, &mut bots);
            }
        }
    }
    let digest = hub.session(&lobby).and_then(|s| s.game()).map(GameState::digest).unwrap_or_default();
    hub.shutdown();
    let log = hub.take_logs().remove(&lobby).unwrap_or_default().concat();
    (log, digest)
}

fn replay_fidelity() -> Check {
    let mut ok = 0;
    let mut rng = GameRng::from_seed(0x7e91a4);
    let mixes = ["uniform", "uniform+greedy", "stubborn", "swayed+greedy", "oracle:0.7"];
    for i in 0..100u64 {
        let (log, live) = if i % 2 == 0 {
            let seats = 2 + rng.below(5) as usize;
            let policies: Vec<BotPolicy> = (0..seats).map(|_| mixes[rng.below(5) as usize].parse().unwrap()).collect();
            let g = play_hub_game(&GameConfig::default(), &policies, &sample_pack(), derive_seed(99, i));
            (g.log, g.final_digest)
        } else {
            chaos_session(derive_seed(7, i))
        };
        match replay(&log) {
            Ok(r) if r.digest == live && !live.is_empty() => ok += 1,
            Ok(_) => return Err(format!("session {i}: digest mismatch")),
            Err(e) => return Err(format!("session {i}: {e}")),
        }
    }
    Ok(format!("{ok}/100 sessions replay to the live digest (50 bot games, 50 adversarial)"))
}

fn mutate(rng: &mut GameRng, seed_lines: &[String]) -> Vec<u8> {
    let mut bytes = seed_lines[rng.below(seed_lines.len() as u32) as usize].clone().into_bytes();
    match rng.below(6) {
        0 => {
            for _ in 0..1 + rng.below(8) {
                if bytes.is_empty() {
                    break;
                }
                let i = rng.below(bytes.len() as u32) as usize;
                bytes[i] = rng.next_u32() as u8;
            }
        }
        1 => {
            let cut = rng.below(bytes.len() as u32 + 1) as usize;
            bytes.truncate(cut);
        }
        2 => {
            let i = rng.below(bytes.len() as u32 + 1) as usize;
            let junk: Vec<u8> = (0..1 + rng.below(16)).map(|_| rng.next_u32() as u8).collect();
            bytes.splice(i..i, junk);
        }
        3 => bytes = (0..rng.below(200)).map(|_| rng.next_u32() as u8).collect(),
        4 => {
            let names = ["type", "payload", "seq", "id", "strategy", "text", "kind", "round"];
            let values = ["null", "1", "-1", "\"x\"", "[]", "{}", "true", "1e999", "18446744073709551616"];
            let text = String::from_utf8_lossy(&bytes).into_owned();
            let key = names[rng.below(names.len() as u32) as usize];
            let value = values[rng.below(values.len() as u32) as usize];
            bytes = text.replacen(&format!("\"{key}\":"), &format!("\"{key}\":{value},\"_\":"), 1).into_bytes();
        }
        _ => bytes = vec![b'['; 1 + rng.below(70_000) as usize],
    }
    bytes
}

fn codec() -> Check {
    let lines: Vec<String> = catalogue().iter().map(|e| encode(e).unwrap()).collect();
    for (env, line) in catalogue().iter().zip(&lines) {
        let back = decode(line.as_bytes()).map_err(|e| format!("{line}: {e}"))?;
        if &back != env || &encode(&back).unwrap() != line {
            return Err(format!("round trip changed {line}"));
        }
    }
    let mut rng = GameRng::from_seed(0xf022);
    let mut codes = BTreeMap::<String, usize>::new();
    for i in 0..100_000 {
        let input = mutate(&mut rng, &lines);
        let result = catch_unwind(AssertUnwindSafe(|| decode(&input)));
        match result {
            Err(_) => return Err(format!("input {i} panicked: {:?}", String::from_utf8_lossy(&input))),
            Ok(Ok(env)) => {
                let again = encode(&env).map_err(|e| format!("input {i} decoded but does not re-encode: {e}"))?;
                if decode(again.as_bytes()).ok() != Some(env) {
                    return Err(format!("input {i} not stable"));
                }
                *codes.entry("ok".into()).or_default() += 1;
            }
            Ok(Err(e)) => *codes.entry(e.code().to_string()).or_default() += 1,
        }
    }
    Ok(format!("{} catalogue messages round-trip; 100000 fuzzed inputs, 0 panics, {codes:?}", lines.len()))
}

fn information_hiding() -> Check {
    let mut windows = 0usize;
    let mut rng = GameRng::from_seed(0x41d);
    for g in 0..100u64 {
        let seats = 3 + rng.below(4) as usize;
        let policies = vec![BotPolicy::UNIFORM.greedy(); seats];
        let game = play_hub_game(&GameConfig::default(), &policies, &sample_pack(), derive_seed(1234, g));
        if !game.finished {
            return Err(format!("game {g} did not finish"));
        }
        // Per turn k: who read, and every strategy they were assigned.
        let mut secrets: BTreeMap<usize, (PlayerId, Vec<Strategy>)> = BTreeMap::new();
        for lines in &game.transcripts {
            let mut k = 0usize;
            for line in lines {
                let Ok(Envelope { body: Message::Event(ev), .. }) = decode(line.as_bytes()) else { continue };
                match ev {
                    ServerEvent::TurnAssigned { reader_id, target_view, .. } => {
                        k += 1;
                        let entry = secrets.entry(k).or_insert((reader_id, Vec::new()));
                        entry.1.extend(target_view.assigned_strategy);
                    }
                    ServerEvent::StrategySwapped { strategy: Some(s), .. } => {
                        secrets.entry(k).or_insert((PlayerId::default(), Vec::new())).1.push(s);
                    }
                    _ => {}
                }
            }
        }
        for (seat, lines) in game.transcripts.iter().enumerate() {
            let me = &game.players[seat];
            let mut k = 0usize;
            let mut open = false;
            for line in lines {
                let ty = decode(line.as_bytes()).map(|e| e.body.type_name()).unwrap_or_default();
                if ty == "turn_assigned" {
                    k += 1;
                    open = true;
                    windows += 1;
                }
                if ty == "summary_revealed" || ty == "turn_voided" {
                    open = false;
                }
                let Some((reader, hidden)) = secrets.get(&k) else { continue };
                if !open || reader == me {
                    continue;
                }
                if hidden.is_empty() {
                    return Err(format!("game {g} turn {k}: assignment never reached the reader"));
                }
                for s in hidden {
                    if line.contains(s.name()) {
                        return Err(format!("game {g} turn {k}: {me} received `{}` early: {line}", s.name()));
                    }
                }
            }
        }
    }
    Ok(format!("100 networked games, {windows} guesser turn windows scanned, 0 leaks"))
}

fn points_floor() -> Check {
    let cfg = GameConfig::default();
    let mut rng = GameRng::from_seed(0xf100);
    let mut rejected = 0usize;
    let mut steps = 0usize;
    let policies = ["uniform+greedy", "oracle:0.9+greedy", "swayed+greedy", "stubborn"];
    for g in 0..200u64 {
        let n = 2 + rng.below(5) as usize;
        let roster: Vec<(PlayerId, String)> = ids(n).into_iter().map(|p| (p.clone(), p.0.clone())).collect();
        let mut state = GameState::new(cfg.clone(), Arc::new(sample_pack()), &roster, derive_seed(3, g)).unwrap();
        let seat_policies: Vec<BotPolicy> = (0..n).map(|i| policies[i % 4].parse().unwrap()).collect();
        let mut bot_rng = GameRng::from_seed(g);
        while state.phase != Phase::Finished && state.turns_completed < 400 {
            steps += 1;
            // Try a random spend from a random player on a copy first.
            let who = roster[rng.below(n as u32) as usize].0.clone();
            let target = Some(roster[rng.below(n as u32) as usize].0.clone());
            let spend = match rng.below(5) {
                0 => Action::AlterStake { player: who },
                1 => Action::SwapStrategy { player: who },
                k => {
                    let kind = PowerCardKind::ALL[(k - 2) as usize];
                    let target = if kind == PowerCardKind::FreezePlayer { target } else { None };
                    Action::PlayPowerCard { player: who, kind, target }
                }
            };
            let before = state.digest();
            let mut probe = state.clone();
            if probe.apply(&spend).is_err() {
                rejected += 1;
                if probe.digest() != before || probe != state {
                    return Err(format!("game {g}: rejected {spend:?} changed state"));
                }
            }
            let mut acted = false;
            for (i, p) in seat_policies.iter().enumerate() {
                let me = &roster[i].0;
                let obs = Observation::from_state(&state, me, p.is_oracle());
                if let Some(cmd) = bot_act(p, &obs, &mut bot_rng) {
                    if let Some(a) = command_action(me, &cmd) {
                        state.apply(&a).map_err(|e| format!("game {g}: bot move rejected: {e}"))?;
                    }
                    acted = true;
                    break;
                }
            }
            if !acted {
                return Err(format!("game {g}: no bot could move in {:?}", state.phase));
            }
            if state.players.iter().any(|p| (p.points as i64) < 0) {
                return Err(format!("game {g}: negative balance"));
            }
        }
    }
    Ok(format!("200 games, {steps} steps, {rejected} rejected spends all left state unchanged, no negative balance"))
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, check: Check| {
        match check {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    };
    report("tally oracle equivalence", tally_oracle());
    report("scoring formulas", scoring_properties());
    report("persuasion totals", persuasion());
    let (check, big) = termination_and_determinism();
    report("termination and determinism", check);
    report("statistical sanity", statistics(big));
    report("replay fidelity", replay_fidelity());
    report("codec round trip and fuzz", codec());
    report("information hiding", information_hiding());
    report("points floor", points_floor());
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
