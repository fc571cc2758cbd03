//! End-to-end session over a real TCP socket: harness accept loop on an
//! OS-assigned port, blocking client, full solve loop, then dump-vs-oracle.

use std::net::TcpListener;
use std::sync::Arc;

use tickcep_core::client::{run_session, SolveOptions};
use tickcep_core::datagen::{generate_events, GenConfig};
use tickcep_core::engine::{Engine, EngineConfig, Retention};
use tickcep_core::harness::{serve, Dataset, HarnessConfig, HarnessService};
use tickcep_core::oracle::{diff, oracle_run, OracleConfig};
use tickcep_core::wireproto::TcpApiClient;

#[test]
fn tcp_session_end_to_end() {
    let events = generate_events(&GenConfig {
        seed: 31,
        n_symbols: 50,
        days: 1,
        total_events: 20_000,
        ..GenConfig::default()
    })
    .expect("generate");
    let dataset = Arc::new(Dataset::from_events(&events, "mem"));
    let service = Arc::new(HarnessService::new(dataset, HarnessConfig::default()));

    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    {
        let service = Arc::clone(&service);
        std::thread::spawn(move || serve(listener, service));
    }

    let client = TcpApiClient::connect(addr).expect("connect");
    let mut engine = Engine::new(EngineConfig {
        retention: Retention::Full,
        ..EngineConfig::default()
    })
    .expect("engine");
    let summary = run_session(
        &client,
        &mut engine,
        &SolveOptions {
            batch_size: 1_000,
            ..SolveOptions::default()
        },
    )
    .expect("session");

    assert_eq!(summary.batches, 20);
    assert_eq!(summary.late_results, 0);
    assert!(summary.q1_latency.p90_ns > 0);

    // engine state built over TCP matches the oracle on the same events
    let dump = engine.dump_rows().expect("retention on");
    let oracle_out = oracle_run(&events, OracleConfig::default());
    let discrepancies = diff(&oracle_out, &dump);
    assert!(
        discrepancies.is_empty(),
        "first: {:?}",
        discrepancies.first()
    );
}

#[test]
fn connect_to_absent_harness_fails() {
    // bind then drop to get a port nothing is listening on
    let port = {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        listener.local_addr().expect("addr").port()
    };
    assert!(TcpApiClient::connect(("127.0.0.1", port)).is_err());
}
