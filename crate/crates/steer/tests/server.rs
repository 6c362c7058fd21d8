use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use gne_steer::protocol::{decode_server, encode_client};
use gne_steer::{serve, ClientMessage, ServerMessage, ServerOptions, SessionDefaults, Transcript};
use tungstenite::Message;

#[test]
fn serves_a_session_over_websocket_and_records_it() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("session.json");
    let options = ServerOptions {
        defaults: SessionDefaults {
            preset: "scenario1".into(),
            alpha: 0.05,
        },
        record: Some(record.clone()),
        max_connections: Some(1),
    };
    let server = thread::spawn(move || serve(listener, options).unwrap());

    let (mut ws, _) = tungstenite::connect(format!("ws://127.0.0.1:{port}")).unwrap();
    ws.send(Message::Text(encode_client(&ClientMessage::Hello { config: None }))).unwrap();
    ws.send(Message::Text("garbage".into())).unwrap();
    let mut received = Vec::new();
    while received.iter().filter(|m| matches!(m, ServerMessage::Plan { .. })).count() < 3 {
        match ws.read().unwrap() {
            Message::Text(t) => received.push(decode_server(&t).unwrap()),
            _ => {}
        }
    }
    ws.send(Message::Text(encode_client(&ClientMessage::Pause))).unwrap();
    thread::sleep(Duration::from_millis(250));
    ws.close(None).unwrap();
    while ws.read().is_ok() {}
    server.join().unwrap();

    assert!(received.iter().any(|m| matches!(m, ServerMessage::Error { .. })));
    assert!(matches!(received.iter().find(|m| !matches!(m, ServerMessage::Error { .. })), Some(ServerMessage::Session { .. })));
    let transcript: Transcript = serde_json::from_str(&std::fs::read_to_string(record).unwrap()).unwrap();
    assert!(transcript.boundaries >= 3);
    assert!(matches!(transcript.events[0].message, ClientMessage::Hello { .. }));

    // Every state seen live reappears in the offline replay.
    let replayed = gne_steer::replay(&transcript);
    for m in received.iter().filter(|m| matches!(m, ServerMessage::State { .. })) {
        assert!(replayed.contains(m), "{m:?} missing from replay");
    }
}
