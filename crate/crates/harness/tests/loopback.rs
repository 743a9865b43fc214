use std::net::TcpListener;
use std::thread;

use catan_core::log;
use catan_core::Rules;
use catan_dqn::{AgentConfig, DqnAgent};
use catan_harness::protocol::{self, RemoteLearner};
use catan_harness::seats::derive_seed;
use catan_harness::training::play_learner_game;
use catan_harness::PolicySpec;

fn config() -> AgentConfig {
    AgentConfig { anneal_steps: 3_000, ..AgentConfig::default() }
}

#[test]
fn remote_training_matches_in_process() {
    const GAMES: u64 = 6;
    const SEED: u64 = 17;
    let cfg = config();

    let mut local = DqnAgent::new(cfg.clone(), SEED).unwrap();
    let local_logs: Vec<String> = (0..GAMES)
        .map(|g| {
            let (record, _) =
                play_learner_game(&mut local, &cfg, &PolicySpec::Random, derive_seed(SEED, g), Rules::default()).unwrap();
            log::to_text(&record.events)
        })
        .collect();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server_cfg = cfg.clone();
    let server = thread::spawn(move || {
        let mut agent = DqnAgent::new(server_cfg, SEED).unwrap();
        let mut summaries = Vec::new();
        protocol::serve(&listener, &mut agent, Some(1), |_, r| summaries.push(*r.as_ref().unwrap())).unwrap();
        (agent, summaries)
    });

    let mut remote = RemoteLearner::connect(addr).unwrap();
    let remote_logs: Vec<String> = (0..GAMES)
        .map(|g| {
            let (record, _) =
                play_learner_game(&mut remote, &cfg, &PolicySpec::Random, derive_seed(SEED, g), Rules::default()).unwrap();
            log::to_text(&record.events)
        })
        .collect();
    assert_eq!(remote.episodes(), GAMES);
    remote.close().unwrap();
    let (served, summaries) = server.join().unwrap();

    assert_eq!(remote_logs, local_logs);
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].episodes, GAMES);
    assert_eq!(summaries[0].decisions, local.steps);
    assert_eq!(served.steps, local.steps);
    assert_eq!(served.net, local.net);
}

#[test]
fn server_survives_a_bad_client() {
    use std::io::{BufRead, BufReader, Write};
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let mut agent = DqnAgent::new(config(), 1).unwrap();
        let mut results = Vec::new();
        protocol::serve(&listener, &mut agent, Some(2), |_, r| results.push(r.is_ok())).unwrap();
        results
    });

    let mut bad = std::net::TcpStream::connect(addr).unwrap();
    writeln!(bad, "EPISODE 0").unwrap();
    let mut reply = String::new();
    BufReader::new(bad.try_clone().unwrap()).read_line(&mut reply).unwrap();
    assert!(reply.starts_with("ERROR"), "{reply}");
    drop(bad);

    let mut good = RemoteLearner::connect(addr).unwrap();
    let cfg = config();
    play_learner_game(&mut good, &cfg, &PolicySpec::Random, 5, Rules::default()).unwrap();
    good.close().unwrap();
    assert_eq!(server.join().unwrap(), vec![false, true]);
}
