#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use clap::Parser;
use serde_json::Value;
use sobench_cli::cli::Cli;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// Runs the CLI in-process and returns its standard output.
pub fn sobench(args: &[&str]) -> anyhow::Result<String> {
    let cli = Cli::try_parse_from(std::iter::once("sobench").chain(args.iter().copied()))?;
    let mut out = Vec::new();
    sobench_cli::run(cli, &mut out)?;
    Ok(String::from_utf8(out)?)
}

#[derive(Debug, Clone)]
pub struct Request {
    pub method: String,
    pub path: String,
    pub body: Value,
}

pub type Handler = dyn Fn(&Request) -> (u16, Value) + Send + Sync;

/// Minimal HTTP/1.1 server standing in for the generation gateway.
pub struct FakeGateway {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Request>>>,
}

impl FakeGateway {
    pub fn start(handler: impl Fn(&Request) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let log = requests.clone();
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (handler, log) = (handler.clone(), log.clone());
                thread::spawn(move || serve(stream, &*handler, &log));
            }
        });
        FakeGateway { url, requests }
    }

    /// Answers every `/generate` call with `n` numbered texts.
    pub fn echo() -> Self {
        Self::start(|req| match req.path.as_str() {
            "/health" => (200, serde_json::json!({"status": "ok", "model": "fake"})),
            _ => {
                let n = req.body["n"].as_u64().unwrap();
                let texts: Vec<Value> =
                    (0..n).map(|i| serde_json::json!({"text": format!("    return {i}\n")})).collect();
                (200, serde_json::json!({"completions": texts}))
            }
        })
    }

    pub fn generate_calls(&self) -> Vec<Request> {
        self.requests.lock().unwrap().iter().filter(|r| r.path == "/generate").cloned().collect()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<Request>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let mut parts = line.split_whitespace();
        let (method, path) = (parts.next().unwrap_or("").to_owned(), parts.next().unwrap_or("").to_owned());
        let mut length = 0usize;
        loop {
            let mut header = String::new();
            if reader.read_line(&mut header).unwrap_or(0) == 0 {
                return;
            }
            let header = header.trim_end();
            if header.is_empty() {
                break;
            }
            if let Some((name, value)) = header.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0u8; length];
        reader.read_exact(&mut body).unwrap();
        let body = if body.is_empty() { Value::Null } else { serde_json::from_slice(&body).unwrap() };
        let request = Request { method, path, body };
        log.lock().unwrap().push(request.clone());
        let (status, reply) = handler(&request);
        let payload = reply.to_string();
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}
