//! `gtp play` sessions driven over real websockets.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

use gtp_core::sim::{maps, parse_tile, scripted_playthrough, Direction, Policy};
use gtp_core::trace::{check_wellformed, read_trace_str};

struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(dir: &Path, extra: &[&str]) -> Server {
        let mut child = Command::new(env!("CARGO_BIN_EXE_gtp"))
            .current_dir(dir)
            .args(["play", "--map", "builtin:demo", "--port", "0", "--trace-dir", "traces"])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("unexpected banner `{line}`")).to_string();
        Server { child, addr }
    }

    fn interrupt(mut self) -> std::process::ExitStatus {
        let ok = Command::new("kill").args(["-INT", &self.child.id().to_string()]).status().unwrap();
        assert!(ok.success());
        let status = self.child.wait().unwrap();
        std::mem::forget(self);
        status
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn connect(addr: &str) -> (Socket, Value) {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let hello = recv(&mut ws).await;
    (ws, hello)
}

async fn recv(ws: &mut Socket) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("reply in time").unwrap().unwrap();
        if let Message::Text(t) = msg {
            let v: Value = serde_json::from_str(t.as_str()).unwrap();
            assert_eq!(v["protocol"], "gplay-1");
            return v;
        }
    }
}

async fn send(ws: &mut Socket, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

async fn step(ws: &mut Socket, dir: &str) -> Value {
    send(ws, json!({"protocol": "gplay-1", "command": "move", "direction": dir})).await;
    recv(ws).await
}

/// Returns the ack's file name and the snapshot that follows it.
async fn save(ws: &mut Socket) -> (PathBuf, Value) {
    send(ws, json!({"command": "save-trace"})).await;
    let ack = recv(ws).await;
    assert_eq!(ack["type"], "saved", "{ack}");
    let snap = recv(ws).await;
    assert_eq!(snap["type"], "snapshot");
    (PathBuf::from(ack["file"].as_str().unwrap()), snap)
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

#[test]
fn save_without_commands_writes_a_header_only_trace() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    runtime().block_on(async {
        let (mut ws, hello) = connect(&server.addr).await;
        assert_eq!(hello["type"], "snapshot");
        assert_eq!(hello["hero"], json!([1, 1]));
        assert_eq!(hello["step"], 0);
        assert_eq!(hello["map"]["tiles"].as_array().unwrap().len(), 12);
        assert_eq!(hello["hud"]["quests"].as_array().unwrap().len(), 2);
        assert!(hello["items"].as_array().unwrap().is_empty(), "nothing spawned before a quest starts");

        let (file, _) = save(&mut ws).await;
        let text = std::fs::read_to_string(dir.path().join(&file)).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(read_trace_str(&text).unwrap().steps.is_empty());

        // A second save is a second file.
        let (again, _) = save(&mut ws).await;
        assert_ne!(file, again);
    });
}

#[test]
fn snapshots_follow_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    runtime().block_on(async {
        let (mut ws, _) = connect(&server.addr).await;
        let wall = step(&mut ws, "up").await;
        assert_eq!((wall["hero"].clone(), wall["events"].clone(), wall["step"].clone()), (json!([1, 1]), json!([]), json!(0)));
        let moved = step(&mut ws, "right").await;
        assert_eq!(moved["hero"], json!([1, 2]));
        assert_eq!(moved["events"], json!([{"event": "move", "from": [1, 1], "to": [1, 2]}]));
        assert_eq!(moved["state"]["hero"], json!([1, 2]));

        send(&mut ws, json!({"protocol": "gplay-2", "command": "reset"})).await;
        let err = recv(&mut ws).await;
        assert_eq!(err["type"], "error");
        send(&mut ws, json!({"command": "jump"})).await;
        assert_eq!(recv(&mut ws).await["type"], "error");

        send(&mut ws, json!({"command": "reset"})).await;
        let ack = recv(&mut ws).await;
        assert_eq!((ack["type"].as_str(), ack["steps"].as_u64()), (Some("saved"), Some(1)));
        let fresh = recv(&mut ws).await;
        assert_eq!((fresh["hero"].clone(), fresh["step"].clone()), (json!([1, 1]), json!(0)));
    });
}

#[test]
fn two_sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    runtime().block_on(async {
        let (mut a, ha) = connect(&server.addr).await;
        let (mut b, hb) = connect(&server.addr).await;
        assert_ne!(ha["session"], hb["session"]);
        for _ in 0..3 {
            step(&mut a, "right").await;
        }
        let sb = step(&mut b, "down").await;
        assert_eq!(sb["hero"], json!([2, 1]));
        assert_eq!(sb["step"], 1);
        let (fa, _) = save(&mut a).await;
        let (fb, _) = save(&mut b).await;
        assert_ne!(fa, fb);
        let ta = read_trace_str(&std::fs::read_to_string(dir.path().join(fa)).unwrap()).unwrap();
        let tb = read_trace_str(&std::fs::read_to_string(dir.path().join(fb)).unwrap()).unwrap();
        assert_eq!(ta.steps.len(), 3);
        assert_eq!(tb.steps.len(), 1);
        assert_eq!(tb.steps[0].action.args, ["hero", "t-1-1", "t-2-1"]);
    });
}

/// Directions that replay the coverage play-through.
fn coverage_commands() -> Vec<&'static str> {
    let t = scripted_playthrough(&maps::demo(), Policy::Coverage).unwrap();
    t.steps
        .iter()
        .filter(|s| s.action.name == "move")
        .map(|s| {
            let (from, to) = (parse_tile(&s.action.args[1]).unwrap(), parse_tile(&s.action.args[2]).unwrap());
            match Direction::between(from, to).unwrap() {
                Direction::Up => "up",
                Direction::Down => "down",
                Direction::Left => "left",
                Direction::Right => "right",
            }
        })
        .collect()
}

#[test]
fn played_session_feeds_learning() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    runtime().block_on(async {
        let (mut ws, _) = connect(&server.addr).await;
        let mut last = Value::Null;
        for d in coverage_commands() {
            last = step(&mut ws, d).await;
        }
        assert_eq!(last["hud"]["all_done"], true);
        let (file, _) = save(&mut ws).await;
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        let trace = read_trace_str(&text).unwrap();
        assert!(check_wellformed(&trace).findings.is_empty());
    });
    let gtp = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_gtp")).current_dir(dir.path()).args(args).output().unwrap().status.code();
    assert_eq!(gtp(&["learn", "--traces", "traces", "--out", "d.pddl"]), Some(0));
    assert_eq!(gtp(&["check", "--domain", "d.pddl", "--traces", "traces", "--report", "c.json"]), Some(0));
}

#[test]
fn interrupt_flushes_open_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    let ws = runtime().block_on(async {
        let (mut ws, _) = connect(&server.addr).await;
        step(&mut ws, "right").await;
        step(&mut ws, "right").await;
        ws
    });
    let status = server.interrupt();
    drop(ws);
    assert!(status.success(), "{status:?}");
    let files: Vec<_> = std::fs::read_dir(dir.path().join("traces")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let t = read_trace_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(t.steps.len(), 2);
}

fn http_get(addr: &str, path: &str) -> String {
    let mut s = std::net::TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serves_the_ui_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path(), &[]);
    let page = http_get(&server.addr, "/");
    assert!(page.starts_with("HTTP/1.1 200"), "{page}");
    assert!(page.contains("gplay-1"));
    drop(server);

    std::fs::create_dir(dir.path().join("ui")).unwrap();
    std::fs::write(dir.path().join("ui/index.html"), "<html>bundle</html>").unwrap();
    std::fs::write(dir.path().join("ui/app.js"), "// app").unwrap();
    let server = Server::start(dir.path(), &["--ui", "ui"]);
    assert!(http_get(&server.addr, "/").contains("bundle"));
    assert!(http_get(&server.addr, "/app.js").contains("// app"));
    assert!(http_get(&server.addr, "/missing.js").starts_with("HTTP/1.1 404"));
}
