//! Interactive play over websockets, speaking the `gplay-1` protocol.
//!
//! Every accepted command is answered with a full snapshot, so a client
//! never has to reconstruct game state. Unsaved steps are written to the
//! trace directory when a game ends (reset, disconnect or shutdown).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use gtp_core::sim::{Direction, GameEvent, GameMap, ItemLocation, OverrideKind, Pos, QuestStatus, Session};
use gtp_core::trace::write_trace;

pub const PROTOCOL: &str = "gplay-1";

#[derive(Debug, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    Move { direction: Direction },
    Reset,
    SaveTrace,
}

#[derive(Debug, Deserialize)]
struct ClientMessage {
    #[serde(default)]
    protocol: Option<String>,
    #[serde(flatten)]
    command: Command,
}

struct Open {
    session: Session,
    /// Steps already written to some file.
    saved_steps: Option<usize>,
}

impl Open {
    fn new(map: &GameMap) -> Open {
        Open { session: Session::new(map), saved_steps: None }
    }

    fn unsaved(&self) -> bool {
        let n = self.session.trace.steps.len();
        n > 0 && self.saved_steps != Some(n)
    }
}

struct Shared {
    map: GameMap,
    trace_dir: PathBuf,
    next_id: AtomicU64,
    sessions: Mutex<BTreeMap<u64, Open>>,
}

impl Shared {
    /// Writes `open`'s trace to a file name no other save has used.
    fn save(&self, id: u64, open: &mut Open) -> std::io::Result<(PathBuf, usize)> {
        let (path, file) = (1..)
            .map(|n| self.trace_dir.join(format!("session-{id}-{n}.jsonl")))
            .find_map(|p| match fs::OpenOptions::new().write(true).create_new(true).open(&p) {
                Ok(f) => Some(Ok((p, f))),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => None,
                Err(e) => Some(Err(e)),
            })
            .expect("unbounded search")?;
        write_trace(&open.session.trace, std::io::BufWriter::new(file))?;
        let steps = open.session.trace.steps.len();
        open.saved_steps = Some(steps);
        log::info!("session {id}: saved {steps} steps to {}", path.display());
        Ok((path, steps))
    }

    fn end(&self, id: u64) {
        let open = self.sessions.lock().expect("session registry").remove(&id);
        if let Some(mut open) = open.filter(Open::unsaved) {
            if let Err(e) = self.save(id, &mut open) {
                log::error!("session {id}: cannot save trace: {e}");
            }
        }
    }

    fn flush_all(&self) -> usize {
        let open = std::mem::take(&mut *self.sessions.lock().expect("session registry"));
        let mut n = 0;
        for (id, mut o) in open.into_iter().filter(|(_, o)| o.unsaved()) {
            match self.save(id, &mut o) {
                Ok(_) => n += 1,
                Err(e) => log::error!("session {id}: cannot save trace: {e}"),
            }
        }
        n
    }
}

fn pos(p: Pos) -> Value {
    json!([p.0, p.1])
}

fn snapshot(map: &GameMap, id: u64, open: &Open, events: &[GameEvent]) -> Value {
    let gs = &open.session.state;
    let tiles: Vec<String> = (0..map.rows).map(|r| (0..map.cols).map(|c| if map.is_walkable((r, c)) { '.' } else { '#' }).collect()).collect();
    let overrides: Vec<Value> = map
        .source
        .overrides
        .iter()
        .map(|o| json!({"from": pos(o.from), "to": pos(o.to), "kind": if o.kind == OverrideKind::OneWay { "one-way" } else { "block" }}))
        .collect();
    let items: Vec<Value> = gs
        .items
        .iter()
        .filter_map(|(id, loc)| match loc {
            ItemLocation::Tile(t) => Some(json!({"id": id, "type": map.items[id].item_type, "tile": pos(*t)})),
            _ => None,
        })
        .collect();
    let npcs: Vec<Value> = map
        .npcs
        .iter()
        .map(|(id, tile)| {
            let quests: Vec<Value> = map.quests.iter().filter(|(_, q)| q.giver == *id).map(|(q, _)| json!({"id": q, "status": gs.quests[q]})).collect();
            json!({"id": id, "tile": pos(*tile), "quests": quests})
        })
        .collect();
    let hud: Vec<Value> = map
        .quests
        .iter()
        .map(|(id, q)| json!({"id": id, "giver": q.giver, "item_type": q.item_type, "have": gs.count(&q.item_type), "need": q.count, "status": gs.quests[id]}))
        .collect();
    json!({
        "protocol": PROTOCOL,
        "type": "snapshot",
        "session": id,
        "step": open.session.trace.steps.len(),
        "map": {"name": map.name, "rows": map.rows, "cols": map.cols, "tiles": tiles, "overrides": overrides},
        "hero": pos(gs.hero),
        "items": items,
        "npcs": npcs,
        "events": events,
        "hud": {
            "quests": hud,
            "inventory": gs.inventory,
            "all_done": gs.quests.values().all(|s| *s == QuestStatus::Done),
        },
        "state": gs,
    })
}

fn error(message: impl Into<String>) -> Value {
    json!({"protocol": PROTOCOL, "type": "error", "message": message.into()})
}

/// Replies to one client text frame.
fn handle(shared: &Shared, id: u64, text: &str) -> Vec<Value> {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return vec![error(format!("bad message: {e}"))],
    };
    if let Some(p) = msg.protocol.as_deref().filter(|p| *p != PROTOCOL) {
        return vec![error(format!("incompatible protocol `{p}`, this server speaks `{PROTOCOL}`"))];
    }
    let map = &shared.map;
    let mut sessions = shared.sessions.lock().expect("session registry");
    let Some(open) = sessions.get_mut(&id) else {
        return vec![error("session closed")];
    };
    match msg.command {
        Command::Move { direction } => {
            let events = open.session.command(map, direction);
            vec![snapshot(map, id, open, &events)]
        }
        Command::Reset => {
            let mut out = Vec::new();
            if open.unsaved() {
                match shared.save(id, open) {
                    Ok((file, steps)) => out.push(json!({"protocol": PROTOCOL, "type": "saved", "file": file, "steps": steps})),
                    Err(e) => out.push(error(format!("cannot save trace: {e}"))),
                }
            }
            *open = Open::new(map);
            out.push(snapshot(map, id, open, &[]));
            out
        }
        Command::SaveTrace => {
            let ack = match shared.save(id, open) {
                Ok((file, steps)) => json!({"protocol": PROTOCOL, "type": "saved", "file": file, "steps": steps}),
                Err(e) => error(format!("cannot save trace: {e}")),
            };
            vec![ack, snapshot(map, id, open, &[])]
        }
    }
}

async fn session(shared: Arc<Shared>, mut socket: WebSocket) {
    let id = shared.next_id.fetch_add(1, Ordering::Relaxed);
    let hello = {
        let mut sessions = shared.sessions.lock().expect("session registry");
        let open = sessions.entry(id).or_insert_with(|| Open::new(&shared.map));
        snapshot(&shared.map, id, open, &[])
    };
    log::info!("session {id} opened");
    if socket.send(Message::Text(hello.to_string().into())).await.is_ok() {
        while let Some(Ok(msg)) = socket.recv().await {
            let replies = match msg {
                Message::Text(t) => handle(&shared, id, t.as_str()),
                Message::Close(_) => break,
                Message::Binary(_) => vec![error("binary frames are not part of the protocol")],
                _ => continue,
            };
            let mut failed = false;
            for r in replies {
                failed |= socket.send(Message::Text(r.to_string().into())).await.is_err();
            }
            if failed {
                break;
            }
        }
    }
    shared.end(id);
    log::info!("session {id} closed");
}

async fn ws(State(shared): State<Arc<Shared>>, upgrade: WebSocketUpgrade) -> impl IntoResponse {
    upgrade.on_upgrade(move |socket| session(shared, socket))
}

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>gtp play</title></head>
<body><p>No UI bundle configured (start with <code>--ui DIR</code>).
Sessions speak <code>gplay-1</code> over the websocket at <code>/ws</code>.</p></body></html>
";

fn router(shared: Arc<Shared>, ui: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws)).with_state(shared);
    match ui {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

async fn interrupted() {
    #[cfg(unix)]
    {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()).expect("signal handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = tokio::signal::ctrl_c().await;
}

pub fn serve(map: GameMap, host: &str, port: u16, trace_dir: PathBuf, ui: Option<PathBuf>) -> Result<()> {
    fs::create_dir_all(&trace_dir).with_context(|| format!("cannot create {}", trace_dir.display()))?;
    if let Some(dir) = ui.as_deref().filter(|d| !Path::is_dir(d)) {
        anyhow::bail!("UI directory {} does not exist", dir.display());
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("cannot listen on {host}:{port}"))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        let shared = Arc::new(Shared { map, trace_dir, next_id: AtomicU64::new(1), sessions: Mutex::new(BTreeMap::new()) });
        tokio::select! {
            r = axum::serve(listener, router(shared.clone(), ui)) => r?,
            _ = interrupted() => {}
        }
        let n = shared.flush_all();
        eprintln!("shutting down; wrote {n} unsaved traces");
        Ok(())
    })
}
