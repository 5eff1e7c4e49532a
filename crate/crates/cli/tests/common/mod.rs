#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgraph"))
        .args(args)
        .env_remove("LLM_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

pub fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).expect("valid json")
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn concept_tsv(n: usize) -> String {
    (0..n).fold(String::new(), |mut out, i| {
        let _ = writeln!(out, "{i}\tconcept {i}");
        out
    })
}

/// Edges `i -> j` with `i < j`, each present with probability `density`.
pub fn random_dag_edges(n: usize, density: f64, seed: u64) -> BTreeSet<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

pub fn edge_tsv(edges: &BTreeSet<(usize, usize)>) -> String {
    edges.iter().fold(String::new(), |mut out, (a, b)| {
        let _ = writeln!(out, "{a}\t{b}");
        out
    })
}

pub fn parse_edge_tsv(text: &str) -> BTreeSet<(usize, usize)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut f = l.split('\t');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect()
}

/// A chain `concept 0 -> concept 1 -> ...` plus one isolated node.
pub fn chain_files(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let concepts = write(dir, "concepts.tsv", &concept_tsv(n + 1));
    let edges: BTreeSet<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    (concepts, write(dir, "edges.tsv", &edge_tsv(&edges)))
}

pub struct StubServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

/// Minimal HTTP/1.1 responder. `reply(hit_index, request_body)` returns
/// the status code and JSON body for each request.
pub fn stub_server<F>(reply: F) -> StubServer
where
    F: Fn(usize, &str) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let reply = Arc::new(reply);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let counter = counter.clone();
            let reply = reply.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let hit = counter.fetch_add(1, Ordering::SeqCst);
                let (status, text) = reply(hit, &String::from_utf8_lossy(&body));
                let response = format!(
                    "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
                let _ = stream.write_all(response.as_bytes());
            });
        }
    });
    StubServer { url, hits }
}

pub fn chat_reply(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

pub fn prompt_of(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    v["messages"][0]["content"].as_str().unwrap().to_string()
}

pub fn live_config(dir: &Path, url: &str) -> PathBuf {
    write(
        dir,
        "live.toml",
        &format!(
            "[oracle]\nendpoint = \"{url}\"\nmodel = \"stub\"\nmax_retries = 2\nbackoff_ms = 10\ntimeout_secs = 5\n"
        ),
    )
}
