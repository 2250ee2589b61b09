//! Conformance of the mock adapter and the core client against each other.

use std::time::Duration;

use pitl_core::victim::external::{external_handshake, Connection};
use pitl_core::victim::protocol::{encode_line, parse_estimate, Request};
use pitl_core::victim::ExternalVictim;
use pitl_core::{DepthEstimator, Error, RgbImage};

const MOCK: &str = env!("CARGO_BIN_EXE_pitl-mock-victim");
const TIMEOUT: Duration = Duration::from_secs(20);

fn mock(extra: &[&str]) -> Vec<String> {
    std::iter::once(MOCK)
        .chain(extra.iter().copied())
        .map(String::from)
        .collect()
}

#[test]
fn handshake_reports_capabilities() {
    let caps =
        external_handshake(&mock(&["--model", "probe", "--max-size", "64"]), TIMEOUT).unwrap();
    assert_eq!(caps.model, "probe");
    assert_eq!((caps.max_width, caps.max_height), (64, 64));
    assert_eq!(caps.protocol_version, 1);
}

#[test]
fn other_protocol_versions_are_refused() {
    let err = external_handshake(&mock(&["--protocol-version", "2"]), TIMEOUT).unwrap_err();
    assert!(
        matches!(
            err,
            Error::UnsupportedProtocol {
                found: 2,
                expected: 1
            }
        ),
        "{err}"
    );
}

#[test]
fn malformed_request_gets_an_error_reply_and_the_adapter_keeps_serving() {
    let mut conn = Connection::spawn(&mock(&["--constant", "2.5"]), TIMEOUT).unwrap();
    let reply = conn.round_trip("this is not json\n").unwrap();
    let value: serde_json::Value = serde_json::from_str(&reply).unwrap();
    assert_eq!(value["ok"], false);
    assert!(value["error"].as_str().unwrap().contains("bad request"));

    // A well-formed but inconsistent estimate request is also answered.
    let bad = r#"{"cmd":"estimate","width":2,"height":2,"pixels":[0.1]}"#;
    let reply = conn.round_trip(&format!("{bad}\n")).unwrap();
    assert!(matches!(
        parse_estimate(&reply, 2, 2),
        Err(Error::VictimFailure { .. })
    ));

    conn.handshake().unwrap();
    let img = RgbImage::filled(3, 2, [0.5; 3]).unwrap();
    let depth = conn.estimate(&img).unwrap();
    assert_eq!(depth.values, vec![2.5; 6]);
}

#[test]
fn estimate_round_trip_is_exact() {
    let mut conn = Connection::spawn(&mock(&["--constant", "0.1"]), TIMEOUT).unwrap();
    conn.handshake().unwrap();
    let pixels: Vec<f64> = (0..4 * 3 * 3).map(|i| (i as f64 * 0.137).fract()).collect();
    let img = RgbImage::new(4, 3, pixels).unwrap();
    let line = encode_line(&Request::estimate(&img)).unwrap();
    let reply = conn.round_trip(&line).unwrap();
    let depth = parse_estimate(&reply, 4, 3).unwrap();
    assert_eq!(depth.values, vec![0.1; 12]);
}

#[test]
fn adapter_death_surfaces_as_victim_failure_with_diagnostics() {
    let victim = ExternalVictim::spawn(&mock(&["--die-after", "1"]), TIMEOUT).unwrap();
    assert!(!victim.concurrency_safe());
    let img = RgbImage::filled(2, 2, [0.2; 3]).unwrap();
    victim.estimate(&img).unwrap();
    match victim.estimate(&img) {
        Err(Error::VictimFailure { diagnostics, .. }) => {
            assert!(
                diagnostics.iter().any(|l| l.contains("dying")),
                "{diagnostics:?}"
            );
        }
        other => panic!("expected a victim failure, got {other:?}"),
    }
}
