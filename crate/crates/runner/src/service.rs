//! HTTP run-control service. Each session owns a benchmark on a dedicated
//! worker thread; handlers talk to it through a command channel and read an
//! incrementally maintained snapshot. Incremental updates are pushed to
//! clients as server-sent events.

use std::collections::{BTreeMap, HashMap};
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, oneshot};
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::StreamExt;

use slambench_core::api::{ParamValue, Parameter, TrackingStatus};
use slambench_core::metrics::TrajectorySample;

use crate::bench::{decimate, Benchmark, FrameStep, RunSpec};
use crate::overrides::describe_library;
use crate::report::{MetricRow, RunReport};
use crate::RunnerError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Running,
    Paused,
    Stepping,
    Done,
    Failed,
}

impl Mode {
    fn is_final(self) -> bool {
        matches!(self, Mode::Done | Mode::Failed)
    }
}

/// A live parameter change, stamped with the first frame it applies to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub frame: usize,
    pub algorithm: String,
    pub name: String,
    pub old: ParamValue,
    pub new: ParamValue,
}

/// `[t, x, y, z, qw, qx, qy, qz]`
pub fn trajectory_row(s: &TrajectorySample) -> [f64; 8] {
    let t = s.pose.translation();
    let [w, x, y, z] = s.pose.quaternion_wxyz();
    [s.timestamp.as_secs_f64(), t.x, t.y, t.z, w, x, y, z]
}

fn trajectory_rows(samples: &[TrajectorySample]) -> Vec<[f64; 8]> {
    samples.iter().map(trajectory_row).collect()
}

/// Libraries and datafiles advertised to clients besides those already
/// used by sessions.
#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    pub libraries: Vec<PathBuf>,
    pub datasets: Vec<PathBuf>,
}

struct SessionState {
    spec: RunSpec,
    mode: Mode,
    frame: usize,
    total_frames: usize,
    algorithms: Vec<String>,
    estimates: Vec<Vec<TrajectorySample>>,
    ground_truth: Vec<TrajectorySample>,
    rows: Vec<Vec<MetricRow>>,
    params: Vec<Vec<Parameter>>,
    maps: Vec<Vec<[f32; 3]>>,
    failures: Vec<Option<String>>,
    audit: Vec<AuditEntry>,
    diagnostic: Option<String>,
    reports: Option<Vec<RunReport>>,
    /// Sequence number of the last pushed message.
    seq: u64,
}

impl SessionState {
    fn snapshot(&self, id: u64) -> Value {
        let by_name = |f: &dyn Fn(usize) -> Value| -> Value {
            let map: serde_json::Map<String, Value> = self.algorithms.iter().enumerate().map(|(i, n)| (n.clone(), f(i))).collect();
            Value::Object(map)
        };
        json!({
            "id": id,
            "mode": self.mode,
            "frame": self.frame,
            "total_frames": self.total_frames,
            "seq": self.seq,
            "algorithms": self.algorithms,
            "trajectories": {
                "est": by_name(&|i| json!(trajectory_rows(&self.estimates[i]))),
                "gt": trajectory_rows(&self.ground_truth),
            },
            "rows": by_name(&|i| json!(self.rows[i])),
            "params": by_name(&|i| json!(self.params[i])),
            "maps": by_name(&|i| json!({
                "total": self.maps[i].len(),
                "seed": self.spec.seed,
                "points": decimate(&self.maps[i], self.spec.point_budget, self.spec.seed),
            })),
            "failures": by_name(&|i| json!(self.failures[i])),
            "audit": self.audit,
            "diagnostic": self.diagnostic,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ServiceEvent {
    pub kind: &'static str,
    pub data: Value,
}

type Reply<T> = oneshot::Sender<Result<T, String>>;

enum Command {
    Step(usize, Reply<Value>),
    Play(Reply<Value>),
    Pause(Reply<Value>),
    SetParam {
        algorithm: Option<String>,
        name: String,
        value: ParamValue,
        reply: Reply<AuditEntry>,
    },
    Stop,
}

struct Session {
    commands: Mutex<mpsc::Sender<Command>>,
    state: Arc<Mutex<SessionState>>,
    events: broadcast::Sender<ServiceEvent>,
}

struct Worker {
    bench: Option<Benchmark>,
    state: Arc<Mutex<SessionState>>,
    events: broadcast::Sender<ServiceEvent>,
    mode: Mode,
    budget: usize,
    step_reply: Option<Reply<Value>>,
}

impl Worker {
    fn ack(&self) -> Value {
        let s = self.state.lock().unwrap();
        json!({ "mode": s.mode, "frame": s.frame })
    }

    /// Pushes a message; the sequence number is assigned under the state
    /// lock so snapshots and messages order consistently.
    fn push(state: &mut SessionState, events: &broadcast::Sender<ServiceEvent>, kind: &'static str, mut data: Value) {
        state.seq += 1;
        data["seq"] = json!(state.seq);
        data["frame"] = json!(state.frame);
        let _ = events.send(ServiceEvent { kind, data });
    }

    fn set_mode(&mut self, mode: Mode) {
        if self.mode == mode {
            return;
        }
        self.mode = mode;
        let mut s = self.state.lock().unwrap();
        s.mode = mode;
        let data = json!({ "mode": mode, "diagnostic": s.diagnostic });
        Self::push(&mut s, &self.events, "status-changed", data);
    }

    fn finish_step_request(&mut self) {
        if let Some(reply) = self.step_reply.take() {
            let _ = reply.send(Ok(self.ack()));
        }
    }

    fn handle(&mut self, cmd: Command) -> bool {
        match cmd {
            Command::Step(n, reply) => {
                if self.mode.is_final() || n == 0 {
                    let _ = reply.send(Ok(self.ack()));
                } else {
                    // a newer step request supersedes an unfinished one
                    self.finish_step_request();
                    self.budget = n;
                    self.step_reply = Some(reply);
                    self.set_mode(Mode::Stepping);
                }
            }
            Command::Play(reply) => {
                if !self.mode.is_final() {
                    self.finish_step_request();
                    self.set_mode(Mode::Running);
                }
                let _ = reply.send(Ok(self.ack()));
            }
            Command::Pause(reply) => {
                if !self.mode.is_final() {
                    self.budget = 0;
                    self.set_mode(Mode::Paused);
                    self.finish_step_request();
                }
                let _ = reply.send(Ok(self.ack()));
            }
            Command::SetParam {
                algorithm,
                name,
                value,
                reply,
            } => {
                let _ = reply.send(self.set_param(algorithm, &name, &value));
            }
            Command::Stop => return false,
        }
        true
    }

    fn set_param(&mut self, algorithm: Option<String>, name: &str, value: &ParamValue) -> Result<AuditEntry, String> {
        let bench = self.bench.as_mut().ok_or("the session has finished")?;
        let names = bench.algorithm_names();
        let index = match &algorithm {
            Some(a) => names.iter().position(|n| n == a).ok_or_else(|| format!("no algorithm `{a}` in this session"))?,
            None if names.len() == 1 => 0,
            None => return Err(format!("several algorithms run in this session; name one of {names:?}")),
        };
        let (old, new) = bench.set_parameter(index, name, value).map_err(|e| e.to_string())?;
        let long_name = bench.runs()[index]
            .parameters()
            .into_iter()
            .find(|p| p.spec.matches(name))
            .map(|p| p.spec.long_name)
            .unwrap_or_else(|| name.to_string());
        let entry = AuditEntry {
            frame: bench.frame(),
            algorithm: names[index].clone(),
            name: long_name,
            old,
            new,
        };
        let params = bench.runs()[index].parameters();
        let mut s = self.state.lock().unwrap();
        s.params[index] = params;
        s.audit.push(entry.clone());
        let data = json!({ "mode": s.mode, "audit": entry });
        Self::push(&mut s, &self.events, "status-changed", data);
        Ok(entry)
    }

    fn record(&mut self, step: &FrameStep) {
        let bench = self.bench.as_ref().unwrap();
        let mut s = self.state.lock().unwrap();
        s.frame = bench.frame();
        let mut poses = serde_json::Map::new();
        let mut rows = serde_json::Map::new();
        let mut tracking = serde_json::Map::new();
        let mut failures = serde_json::Map::new();
        for (i, (a, run)) in step.algorithms.iter().zip(bench.runs()).enumerate() {
            let name = run.name().to_string();
            if !a.new_poses.is_empty() {
                poses.insert(name.clone(), json!(trajectory_rows(&a.new_poses)));
                s.estimates[i].extend_from_slice(&a.new_poses);
            }
            if let Some(row) = &a.row {
                rows.insert(name.clone(), json!(row));
                s.rows[i].push(row.clone());
            }
            if let Some(status) = a.status_changed {
                tracking.insert(name.clone(), json!(status));
            }
            if a.failure.is_some() && s.failures[i].is_none() {
                s.failures[i] = a.failure.clone();
                failures.insert(name.clone(), json!(a.failure));
            }
            let known = s.maps[i].len();
            if run.map().len() > known {
                s.maps[i].extend_from_slice(&run.map()[known..]);
            }
        }
        if !poses.is_empty() {
            Self::push(&mut s, &self.events, "pose-appended", json!({ "poses": poses }));
        }
        if !rows.is_empty() {
            Self::push(&mut s, &self.events, "row-appended", json!({ "rows": rows }));
        }
        if !tracking.is_empty() || !failures.is_empty() {
            let data = json!({ "mode": s.mode, "tracking": tracking, "failures": failures });
            Self::push(&mut s, &self.events, "status-changed", data);
        }
    }

    fn advance(&mut self) {
        let Some(bench) = self.bench.as_mut() else {
            return;
        };
        match bench.step() {
            Ok(Some(step)) => {
                self.record(&step);
                if self.mode == Mode::Stepping {
                    self.budget -= 1;
                    if self.budget == 0 {
                        self.set_mode(Mode::Paused);
                        self.finish_step_request();
                    }
                }
                if self.bench.as_ref().is_some_and(Benchmark::is_done) {
                    self.complete();
                }
            }
            Ok(None) => self.complete(),
            Err(e) => self.fail(e.to_string()),
        }
    }

    fn complete(&mut self) {
        let Some(bench) = self.bench.take() else {
            return;
        };
        let all_failed = bench.runs().iter().all(|r| r.failure().is_some());
        let reports = bench.finish();
        {
            let mut s = self.state.lock().unwrap();
            for (i, r) in reports.iter().enumerate() {
                s.failures[i] = r.metadata.failure.clone();
            }
            s.reports = Some(reports);
        }
        if all_failed {
            self.fail("every algorithm failed".into());
        } else {
            self.set_mode(Mode::Done);
        }
        self.finish_step_request();
    }

    fn fail(&mut self, diagnostic: String) {
        log::error!("session failed: {diagnostic}");
        self.bench = None;
        self.state.lock().unwrap().diagnostic = Some(diagnostic);
        self.set_mode(Mode::Failed);
        self.finish_step_request();
    }

    fn run(mut self, commands: mpsc::Receiver<Command>) {
        loop {
            let busy = matches!(self.mode, Mode::Running | Mode::Stepping);
            let cmd = if busy {
                match commands.try_recv() {
                    Ok(c) => Some(c),
                    Err(mpsc::TryRecvError::Empty) => None,
                    Err(mpsc::TryRecvError::Disconnected) => return,
                }
            } else {
                match commands.recv() {
                    Ok(c) => Some(c),
                    Err(_) => return,
                }
            };
            match cmd {
                Some(c) => {
                    if !self.handle(c) {
                        return;
                    }
                }
                None => self.advance(),
            }
        }
    }
}

fn start_session(spec: RunSpec) -> Result<Session, RunnerError> {
    let bench = Benchmark::new(spec.clone())?;
    let n = bench.runs().len();
    let failures: Vec<Option<String>> = bench.runs().iter().map(|r| r.failure().map(str::to_string)).collect();
    let all_failed = failures.iter().all(Option::is_some);
    let state = Arc::new(Mutex::new(SessionState {
        spec,
        mode: Mode::Paused,
        frame: 0,
        total_frames: bench.total_frames(),
        algorithms: bench.algorithm_names(),
        estimates: vec![Vec::new(); n],
        ground_truth: bench.ground_truth().to_vec(),
        rows: vec![Vec::new(); n],
        params: bench.runs().iter().map(|r| r.parameters()).collect(),
        maps: vec![Vec::new(); n],
        failures,
        audit: Vec::new(),
        diagnostic: None,
        reports: None,
        seq: 0,
    }));
    let (events, _) = broadcast::channel(4096);
    let (tx, rx) = mpsc::channel();
    let mut worker = Worker {
        bench: Some(bench),
        state: state.clone(),
        events: events.clone(),
        mode: Mode::Paused,
        budget: 0,
        step_reply: None,
    };
    if all_failed {
        worker.complete();
    }
    std::thread::Builder::new()
        .name("sb-session".into())
        .spawn(move || {
            let state = worker.state.clone();
            if std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| worker.run(rx))).is_err() {
                let mut s = state.lock().unwrap();
                s.mode = Mode::Failed;
                s.diagnostic = Some("session worker panicked".into());
            }
        })
        .map_err(|e| RunnerError::io("session worker", e))?;
    Ok(Session {
        commands: Mutex::new(tx),
        state,
        events,
    })
}

struct Inner {
    config: ServiceConfig,
    sessions: Mutex<HashMap<u64, Arc<Session>>>,
    next_id: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState(Arc::new(Inner {
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }))
    }

    /// Creates a session synchronously; used for the session a CLI run
    /// starts with.
    pub fn create_session(&self, spec: RunSpec) -> Result<u64, RunnerError> {
        let session = start_session(spec)?;
        let id = self.0.next_id.fetch_add(1, Ordering::Relaxed);
        self.0.sessions.lock().unwrap().insert(id, Arc::new(session));
        Ok(id)
    }

    fn session(&self, id: u64) -> Result<Arc<Session>, ApiFailure> {
        self.0
            .sessions
            .lock()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiFailure(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

impl Drop for Inner {
    fn drop(&mut self) {
        for s in self.sessions.get_mut().unwrap().values() {
            let _ = s.commands.lock().unwrap().send(Command::Stop);
        }
    }
}

struct ApiFailure(StatusCode, String);

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl Session {
    async fn request<T>(&self, make: impl FnOnce(Reply<T>) -> Command) -> Result<T, ApiFailure> {
        let (tx, rx) = oneshot::channel();
        self.commands
            .lock()
            .unwrap()
            .send(make(tx))
            .map_err(|_| ApiFailure(StatusCode::GONE, "session worker has stopped".into()))?;
        rx.await
            .map_err(|_| ApiFailure(StatusCode::GONE, "session worker has stopped".into()))?
            .map_err(|e| ApiFailure(StatusCode::CONFLICT, e))
    }
}

async fn create(State(app): State<AppState>, Json(spec): Json<RunSpec>) -> Result<impl IntoResponse, ApiFailure> {
    let created = tokio::task::spawn_blocking({
        let app = app.clone();
        move || app.create_session(spec)
    })
    .await
    .map_err(|e| ApiFailure(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let id = created.map_err(|e| ApiFailure(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn list(State(app): State<AppState>) -> Json<Value> {
    let sessions: Vec<(u64, Arc<Session>)> = app.0.sessions.lock().unwrap().iter().map(|(k, v)| (*k, v.clone())).collect();
    let mut out: Vec<Value> = sessions
        .iter()
        .map(|(id, s)| {
            let s = s.state.lock().unwrap();
            json!({ "id": id, "mode": s.mode, "frame": s.frame, "algorithms": s.algorithms })
        })
        .collect();
    out.sort_by_key(|v| v["id"].as_u64());
    Json(Value::Array(out))
}

#[derive(Deserialize)]
struct StepBody {
    #[serde(default = "one")]
    n: usize,
}

fn one() -> usize {
    1
}

async fn step(State(app): State<AppState>, Path(id): Path<u64>, body: Option<Json<StepBody>>) -> Result<Json<Value>, ApiFailure> {
    let n = body.map_or(1, |b| b.n);
    let session = app.session(id)?;
    session.request(|r| Command::Step(n, r)).await.map(Json)
}

async fn play(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiFailure> {
    app.session(id)?.request(Command::Play).await.map(Json)
}

async fn pause(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiFailure> {
    app.session(id)?.request(Command::Pause).await.map(Json)
}

#[derive(Deserialize)]
struct ParamBody {
    #[serde(default)]
    algorithm: Option<String>,
    name: String,
    value: ParamValue,
}

async fn set_param(State(app): State<AppState>, Path(id): Path<u64>, Json(body): Json<ParamBody>) -> Result<Json<AuditEntry>, ApiFailure> {
    let session = app.session(id)?;
    session
        .request(|reply| Command::SetParam {
            algorithm: body.algorithm,
            name: body.name,
            value: body.value,
            reply,
        })
        .await
        .map(Json)
}

async fn snapshot(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiFailure> {
    let session = app.session(id)?;
    let s = session.state.lock().unwrap();
    Ok(Json(s.snapshot(id)))
}

async fn reports(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<Vec<RunReport>>, ApiFailure> {
    let session = app.session(id)?;
    let s = session.state.lock().unwrap();
    s.reports
        .clone()
        .map(Json)
        .ok_or_else(|| ApiFailure(StatusCode::CONFLICT, "the session has not finished".into()))
}

async fn stream(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiFailure> {
    let session = app.session(id)?;
    let rx = session.events.subscribe();
    let events = BroadcastStream::new(rx).map(|msg| {
        Ok(match msg {
            Ok(ev) => Event::default().event(ev.kind).data(ev.data.to_string()),
            // the client fell behind; it has to fetch a fresh snapshot
            Err(_) => Event::default().event("lagged").data("{}"),
        })
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn remove(State(app): State<AppState>, Path(id): Path<u64>) -> Result<StatusCode, ApiFailure> {
    let session = app
        .0
        .sessions
        .lock()
        .unwrap()
        .remove(&id)
        .ok_or_else(|| ApiFailure(StatusCode::NOT_FOUND, format!("no session {id}")))?;
    let _ = session.commands.lock().unwrap().send(Command::Stop);
    Ok(StatusCode::NO_CONTENT)
}

/// Configured paths plus those used by sessions, without duplicates.
fn known_paths(app: &AppState, configured: &[PathBuf], from_spec: impl Fn(&RunSpec) -> Vec<PathBuf>) -> Vec<PathBuf> {
    let mut paths = configured.to_vec();
    for s in app.0.sessions.lock().unwrap().values() {
        paths.extend(from_spec(&s.state.lock().unwrap().spec));
    }
    let mut seen = std::collections::HashSet::new();
    paths.retain(|p| seen.insert(p.clone()));
    paths
}

async fn algorithms(State(app): State<AppState>) -> Result<Json<Value>, ApiFailure> {
    let libraries = known_paths(&app, &app.0.config.libraries, |s| s.algorithms.iter().map(|a| a.library.clone()).collect());
    let described = tokio::task::spawn_blocking(move || {
        libraries
            .iter()
            .map(|l| match describe_library(l) {
                Ok(d) => json!(d),
                Err(e) => json!({ "library": l, "error": e.to_string() }),
            })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(|e| ApiFailure(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(Value::Array(described)))
}

async fn datasets(State(app): State<AppState>) -> Result<Json<Value>, ApiFailure> {
    let files = known_paths(&app, &app.0.config.datasets, |s| vec![s.datafile.clone()]);
    let described = tokio::task::spawn_blocking(move || {
        files
            .iter()
            .map(|f| match crate::bench::describe_datafile(f) {
                Ok(d) => json!(d),
                Err(e) => json!({ "path": f, "error": e.to_string() }),
            })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(|e| ApiFailure(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(Value::Array(described)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", axum::routing::delete(remove))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/play", post(play))
        .route("/sessions/{id}/pause", post(pause))
        .route("/sessions/{id}/params", put(set_param))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/report", get(reports))
        .route("/sessions/{id}/stream", get(stream))
        .route("/algorithms", get(algorithms))
        .route("/datasets", get(datasets))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// A service running on its own runtime thread, stopped on drop.
pub struct BackgroundService {
    pub addr: SocketAddr,
    pub state: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundService {
    pub fn start(addr: SocketAddr, state: AppState) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(state.clone());
        let thread = std::thread::Builder::new().name("sb-service".into()).spawn(move || {
            runtime.block_on(async move {
                let server = axum::serve(listener, app).with_graceful_shutdown(async {
                    let _ = rx.await;
                });
                if let Err(e) = server.await {
                    log::error!("service stopped: {e}");
                }
            });
        })?;
        Ok(Self {
            addr,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for BackgroundService {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        // open event streams keep graceful shutdown waiting; do not block on them
        drop(self.thread.take());
    }
}

/// Name → status pairs as pushed in `status-changed` messages.
pub type TrackingMap = BTreeMap<String, TrackingStatus>;
