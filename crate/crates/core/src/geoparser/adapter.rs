//! Adapters for geoparsers running outside this process.
//!
//! Both speak the same JSON objects: a request `{"id", "text"}` and a
//! response `{"id", "toponyms": [...]}`. The process adapter exchanges one
//! line each over the child's stdin/stdout and keeps the child alive across
//! documents; the HTTP adapter POSTs the request to `<endpoint>/parse`.

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::{AdapterError, Geoparser, WireRequest, WireResponse, WireToponym};
use crate::corpus::Document;

fn request_line(doc: &Document) -> String {
    serde_json::to_string(&WireRequest {
        id: doc.id.clone(),
        text: doc.text.clone(),
    })
    .expect("requests serialize")
}

fn decode_response(doc: &Document, raw: &str) -> Result<Vec<WireToponym>, AdapterError> {
    let response: WireResponse = serde_json::from_str(raw.trim_end())
        .map_err(|e| AdapterError::protocol(format!("malformed response: {e}"), raw))?;
    if response.id != doc.id {
        return Err(AdapterError::protocol(
            format!(
                "response id {:?} does not match request id {:?}",
                response.id, doc.id
            ),
            raw,
        ));
    }
    Ok(response.toponyms)
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Running {
    fn stop(mut self) {
        drop(self.stdin);
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A resident child process answering one request line per document.
///
/// The child is started on first use. After a timeout or a broken pipe it
/// is killed and restarted on the next document.
pub struct ProcessAdapter {
    command: PathBuf,
    args: Vec<String>,
    timeout: Duration,
    running: Option<Running>,
}

impl ProcessAdapter {
    pub fn new(command: impl Into<PathBuf>, args: Vec<String>, timeout: Duration) -> Self {
        ProcessAdapter {
            command: command.into(),
            args,
            timeout,
            running: None,
        }
    }

    fn spawn(&self) -> Result<Running, AdapterError> {
        let mut child = Command::new(&self.command)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| {
                AdapterError::Unavailable(format!("cannot start {}: {e}", self.command.display()))
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines,
        })
    }

    fn exchange(&mut self, doc: &Document) -> Result<String, AdapterError> {
        if self.running.is_none() {
            self.running = Some(self.spawn()?);
        }
        let running = self.running.as_mut().expect("started above");
        let mut line = request_line(doc);
        line.push('\n');
        let written = running
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| running.stdin.flush());
        if let Err(e) = written {
            self.restart_later();
            return Err(AdapterError::protocol(
                format!("cannot write request: {e}"),
                "",
            ));
        }
        match running.lines.recv_timeout(self.timeout) {
            Ok(raw) => Ok(raw),
            Err(RecvTimeoutError::Timeout) => {
                self.restart_later();
                Err(AdapterError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.restart_later();
                Err(AdapterError::protocol("adapter closed its output", ""))
            }
        }
    }

    fn restart_later(&mut self) {
        if let Some(running) = self.running.take() {
            running.stop();
        }
    }
}

impl Geoparser for ProcessAdapter {
    fn parse_raw(&mut self, doc: &Document) -> Result<Vec<WireToponym>, AdapterError> {
        let raw = self.exchange(doc)?;
        decode_response(doc, &raw)
    }
}

impl Drop for ProcessAdapter {
    fn drop(&mut self) {
        self.restart_later();
    }
}

/// Posts each document to `<endpoint>/parse`.
pub struct HttpAdapter {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl HttpAdapter {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let endpoint = endpoint.into();
        let url = format!("{}/parse", endpoint.trim_end_matches('/'));
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpAdapter {
            url,
            timeout,
            agent,
        }
    }
}

impl Geoparser for HttpAdapter {
    fn parse_raw(&mut self, doc: &Document) -> Result<Vec<WireToponym>, AdapterError> {
        let result = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(request_line(doc).as_bytes());
        let mut response = match result {
            Ok(response) => response,
            Err(ureq::Error::Timeout(_)) => return Err(AdapterError::Timeout(self.timeout)),
            Err(e @ (ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                return Err(AdapterError::Unavailable(format!("{}: {e}", self.url)))
            }
            Err(ureq::Error::Io(e))
                if matches!(
                    e.kind(),
                    ErrorKind::ConnectionRefused
                        | ErrorKind::AddrNotAvailable
                        | ErrorKind::NotFound
                ) =>
            {
                return Err(AdapterError::Unavailable(format!("{}: {e}", self.url)))
            }
            Err(e) => return Err(AdapterError::protocol(format!("{}: {e}", self.url), "")),
        };
        let status = response.status().as_u16();
        let body = match response.body_mut().read_to_string() {
            Ok(body) => body,
            Err(ureq::Error::Timeout(_)) => return Err(AdapterError::Timeout(self.timeout)),
            Err(e) => return Err(AdapterError::protocol(format!("reading body: {e}"), "")),
        };
        if status != 200 {
            return Err(AdapterError::protocol(
                format!("HTTP status {status}"),
                body,
            ));
        }
        decode_response(doc, &body)
    }
}
