use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use nrts_core::{format_percent, SessionStats};
use nrts_server::{open_store, AppState, ErrorBody, GoldInstalled, ServerConfig, SystemClock, TraceAccepted};
use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::local::{load_gold, phase_lines};
use crate::Failure;

pub fn serve(
    listen: SocketAddr,
    store_dir: PathBuf,
    gold_dir: Option<PathBuf>,
    config: ServerConfig,
) -> Result<(), Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("NRTS_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let store = open_store(&store_dir).map_err(Failure::local)?;
    if let Some(dir) = gold_dir {
        let gold = load_gold(&dir)?;
        let rev = nrts_server::bootstrap_gold(&store, &gold).map_err(Failure::local)?;
        tracing::info!(revision = rev, "gold active");
    }
    let state = AppState::new(store, config, Arc::new(SystemClock));
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::local)?;
    runtime
        .block_on(async move {
            let shutdown = shutdown_signal()?;
            let listener = tokio::net::TcpListener::bind(listen).await?;
            println!("listening on http://{}", listener.local_addr()?);
            nrts_server::serve(listener, state, shutdown).await
        })
        .map_err(Failure::local)
}

/// SIGTERM or SIGINT. Handlers are installed on call, not on first poll.
#[cfg(unix)]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut term = signal(SignalKind::terminate())?;
    let mut int = signal(SignalKind::interrupt())?;
    Ok(async move {
        tokio::select! {
            _ = term.recv() => {}
            _ = int.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}

fn url(server: &str, path: &str) -> String {
    format!("{}/api/v1{path}", server.trim_end_matches('/'))
}

fn send<T: DeserializeOwned>(request: RequestBuilder) -> Result<T, Failure> {
    let resp = request.send().context("request failed").map_err(Failure::Remote)?;
    let status = resp.status();
    let bytes = resp.bytes().context("cannot read response").map_err(Failure::Remote)?;
    if !status.is_success() {
        let detail = match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => {
                if let Some(v) = &body.violations {
                    crate::local::report_violations(v);
                }
                format!("{} {}: {}", status.as_u16(), body.error_code, body.message)
            }
            Err(_) => format!("{status}: {}", String::from_utf8_lossy(&bytes)),
        };
        return Err(Failure::Remote(anyhow::anyhow!(detail)));
    }
    serde_json::from_slice(&bytes)
        .context("unexpected response body")
        .map_err(Failure::Remote)
}

pub fn submit(server: &str, traces: &[PathBuf], session_id: Option<String>, json: bool) -> Result<(), Failure> {
    let client = Client::new();
    let mut session = session_id;
    for path in traces {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(Failure::Local)?;
        let mut body: Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not JSON", path.display()))
            .map_err(Failure::Local)?;
        let Some(obj) = body.as_object_mut() else {
            return Err(Failure::Local(anyhow::anyhow!("{} is not a JSON object", path.display())));
        };
        if !obj.contains_key("session_id") {
            if let Some(id) = &session {
                obj.insert("session_id".into(), Value::String(id.clone()));
            }
        }
        let accepted: TraceAccepted = send(client.post(url(server, "/traces")).json(&body))
            .map_err(|f| match f {
                Failure::Remote(e) => Failure::Remote(e.context(path.display().to_string())),
                local => local,
            })?;
        session.get_or_insert_with(|| accepted.session_id.to_string());
        if json {
            println!("{}", serde_json::to_string(&accepted).unwrap());
        } else {
            println!(
                "{}: distance {:.4} ({}) session {} trace {}",
                path.display(),
                accepted.distance,
                format_percent(accepted.distance),
                accepted.session_id,
                accepted.trace_id
            );
            for line in phase_lines(&accepted.phase_report) {
                println!("  {line}");
            }
        }
    }
    Ok(())
}

pub fn stats(server: &str, session_id: &str, json: bool) -> Result<(), Failure> {
    let stats: SessionStats = send(Client::new().get(url(server, &format!("/sessions/{session_id}/stats"))))?;
    if json {
        println!("{}", serde_json::to_string(&stats).unwrap());
        return Ok(());
    }
    println!("session {}: {} trace(s)", stats.session_id, stats.trace_count);
    if stats.trace_count == 0 {
        println!("no traces yet");
        return Ok(());
    }
    let width = stats.per_group.iter().map(|g| g.group_id.len()).max().unwrap_or(0).max(5);
    println!("{:<width$}  traces  mean distance", "group");
    for g in &stats.per_group {
        println!(
            "{:<width$}  {:>6}  {:.4} ({})",
            g.group_id,
            g.traces,
            g.mean_distance,
            format_percent(g.mean_distance)
        );
    }
    if let Some(mean) = stats.session_mean_distance {
        println!("session mean  {mean:.4} ({})", format_percent(mean));
    }
    println!("mean duration per action (ms):");
    for (action, ms) in &stats.per_action_mean_duration_ms {
        println!("  {action:<28} {ms:.1}");
    }
    Ok(())
}

pub fn gold(server: &str, path: &Path, admin_token: Option<&str>) -> Result<(), Failure> {
    let bundle = load_gold(path)?.to_document();
    let mut request = Client::new().put(url(server, "/gold")).json(&bundle);
    if let Some(token) = admin_token {
        request = request.bearer_auth(token);
    }
    let installed: GoldInstalled = send(request)?;
    println!("installed gold revision {}", installed.revision);
    Ok(())
}
