//! Client for victims hosted in a child process.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use log::debug;

use super::protocol::{self, Request};
use super::DepthEstimator;
use crate::error::{Error, Result};
use crate::raster::{CapturedImage, DepthMap};

const STDERR_TAIL: usize = 20;

/// What an adapter declares in its hello reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capabilities {
    pub model: String,
    pub max_width: usize,
    pub max_height: usize,
    pub protocol_version: u64,
}

/// A serial request/response channel to one adapter process.
pub struct Connection {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<VecDeque<String>>>,
    timeout: Duration,
    /// Set after a timeout or I/O failure; a late reply would desynchronize
    /// the stream, so the connection is unusable afterwards.
    broken: bool,
}

impl Connection {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty victim command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::victim(format!("cannot spawn '{program}': {e}")))?;

        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let stderr_pipe = child.stderr.take().expect("stderr is piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(VecDeque::new()));
        let tail = Arc::clone(&stderr);
        thread::spawn(move || {
            for line in BufReader::new(stderr_pipe).lines().map_while(|l| l.ok()) {
                let mut buf = tail.lock().unwrap_or_else(|p| p.into_inner());
                if buf.len() == STDERR_TAIL {
                    buf.pop_front();
                }
                buf.push_back(line);
            }
        });

        Ok(Self {
            child,
            stdin,
            lines,
            stderr,
            timeout,
            broken: false,
        })
    }

    fn failure(&mut self, message: String) -> Error {
        self.broken = true;
        // Give the stderr reader a moment to collect a dying process's last words.
        thread::sleep(Duration::from_millis(20));
        let diagnostics = self
            .stderr
            .lock()
            .map(|b| b.iter().cloned().collect())
            .unwrap_or_default();
        Error::VictimFailure {
            message,
            diagnostics,
        }
    }

    /// Sends one line and waits for one line back.
    pub fn round_trip(&mut self, line: &str) -> Result<String> {
        if self.broken {
            return Err(Error::victim("connection is no longer usable"));
        }
        let written = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::Error::other("stdin closed")),
        };
        if let Err(e) = written {
            return Err(self.failure(format!("cannot write request: {e}")));
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => Ok(reply),
            Ok(Err(e)) => Err(self.failure(format!("cannot read reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                let secs = self.timeout.as_secs_f64();
                Err(self.failure(format!("no reply within {secs} s")))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self
                    .child
                    .try_wait()
                    .ok()
                    .flatten()
                    .map(|s| format!(" ({s})"))
                    .unwrap_or_default();
                Err(self.failure(format!("victim process closed its output{status}")))
            }
        }
    }

    pub fn handshake(&mut self) -> Result<Capabilities> {
        let reply = self.round_trip(&protocol::encode_line(&Request::hello())?)?;
        let hello = protocol::parse_hello(&reply)?;
        Ok(Capabilities {
            model: hello.model,
            max_width: hello.max_width,
            max_height: hello.max_height,
            protocol_version: hello.version,
        })
    }

    pub fn estimate(&mut self, image: &CapturedImage) -> Result<DepthMap> {
        let line = protocol::encode_line(&Request::estimate(image))?;
        let reply = self.round_trip(&line)?;
        protocol::parse_estimate(&reply, image.width, image.height)
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        // Closing stdin asks a well-behaved adapter to exit.
        self.stdin.take();
        if matches!(self.child.try_wait(), Ok(None)) {
            thread::sleep(Duration::from_millis(10));
            if matches!(self.child.try_wait(), Ok(None)) {
                let _ = self.child.kill();
            }
        }
        let _ = self.child.wait();
    }
}

/// Spawns `command`, performs the hello exchange and returns the declared
/// capabilities. The process is shut down afterwards.
pub fn external_handshake(command: &[String], timeout: Duration) -> Result<Capabilities> {
    Connection::spawn(command, timeout)?.handshake()
}

/// A handshaken adapter usable as a [`DepthEstimator`]. Requests are
/// serialized through an internal lock.
pub struct ExternalVictim {
    conn: Mutex<Connection>,
    caps: Capabilities,
}

impl ExternalVictim {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let mut conn = Connection::spawn(command, timeout)?;
        let caps = conn.handshake()?;
        debug!(
            "external victim '{}' ready, max {}x{}",
            caps.model, caps.max_width, caps.max_height
        );
        Ok(Self {
            conn: Mutex::new(conn),
            caps,
        })
    }

    pub fn capabilities(&self) -> &Capabilities {
        &self.caps
    }
}

impl DepthEstimator for ExternalVictim {
    fn estimate(&self, image: &CapturedImage) -> Result<DepthMap> {
        if image.width > self.caps.max_width || image.height > self.caps.max_height {
            return Err(Error::Shape(format!(
                "image {}x{} exceeds the victim's {}x{} limit",
                image.width, image.height, self.caps.max_width, self.caps.max_height
            )));
        }
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| Error::victim("connection lock poisoned"))?;
        conn.estimate(image)
    }

    fn concurrency_safe(&self) -> bool {
        false
    }

    fn name(&self) -> &str {
        &self.caps.model
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::raster::RgbImage;

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    const HELLO_V1: &str = r#"{"ok":true,"version":1,"model":"fake","max_width":8,"max_height":8}"#;

    #[test]
    fn accepts_version_one() {
        let caps = external_handshake(
            &sh(&format!("read l; echo '{HELLO_V1}'")),
            Duration::from_secs(5),
        )
        .unwrap();
        assert_eq!(caps.model, "fake");
        assert_eq!(caps.protocol_version, 1);
    }

    #[test]
    fn rejects_version_two() {
        let v2 = HELLO_V1.replace("\"version\":1", "\"version\":2");
        let err = external_handshake(&sh(&format!("read l; echo '{v2}'")), Duration::from_secs(5))
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedProtocol { found: 2, .. }));
    }

    #[test]
    fn dead_process_is_a_victim_failure() {
        let err =
            external_handshake(&sh("echo dying >&2; exit 3"), Duration::from_secs(5)).unwrap_err();
        assert!(err.is_victim_failure(), "{err}");
        let err = external_handshake(
            &["/nonexistent/victim-binary".to_string()],
            Duration::from_secs(5),
        )
        .unwrap_err();
        assert!(err.is_victim_failure());
    }

    #[test]
    fn stderr_is_captured_as_diagnostics() {
        let err = external_handshake(
            &sh("echo 'cuda out of memory' >&2; exit 1"),
            Duration::from_secs(5),
        )
        .unwrap_err();
        match err {
            Error::VictimFailure { diagnostics, .. } => {
                assert!(
                    diagnostics.iter().any(|l| l.contains("out of memory")),
                    "{diagnostics:?}"
                )
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn silent_victim_times_out() {
        let err = external_handshake(&sh("sleep 5"), Duration::from_millis(200)).unwrap_err();
        match err {
            Error::VictimFailure { message, .. } => assert!(message.contains("no reply")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn estimate_through_shell_adapter() {
        let reply = r#"{"ok":true,"width":1,"height":1,"depth":[3.5]}"#;
        let victim = ExternalVictim::spawn(
            &sh(&format!(
                "read l; echo '{HELLO_V1}'; read l; echo '{reply}'; read l"
            )),
            Duration::from_secs(5),
        )
        .unwrap();
        let img = RgbImage::filled(1, 1, [0.5; 3]).unwrap();
        assert_eq!(victim.estimate(&img).unwrap().values, vec![3.5]);
        assert!(!victim.concurrency_safe());
        // The script has exited after its last read; the next request fails.
        let big = RgbImage::filled(9, 1, [0.5; 3]).unwrap();
        assert!(matches!(victim.estimate(&big), Err(Error::Shape(_))));
    }
}
