use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::messages::*;
use super::plan::batch_plan;
use crate::context::ConditioningContext;
use crate::error::{Error, Result};
use crate::scoring::{Scorer, ScorerDescriptor, StepDistribution, TextRole};
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct ClientOptions {
    pub handshake_timeout: Duration,
    /// `None` waits indefinitely for each response.
    pub request_timeout: Option<Duration>,
    /// Sent with every `next_logprobs` request; `None` lets the server pick.
    pub top_k: Option<usize>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self { handshake_timeout: Duration::from_secs(30), request_timeout: Some(Duration::from_secs(600)), top_k: None }
    }
}

struct Session {
    writer: Box<dyn Write + Send>,
    incoming: Receiver<std::io::Result<String>>,
    next_id: u64,
    lines_read: usize,
    broken: Option<String>,
}

impl Session {
    fn send(&mut self, bodies: Vec<RequestBody>) -> Result<Vec<u64>> {
        let mut ids = Vec::with_capacity(bodies.len());
        for body in bodies {
            let req = Request { id: self.next_id, body };
            self.next_id += 1;
            serde_json::to_writer(&mut self.writer, &req)?;
            self.writer.write_all(b"\n")?;
            ids.push(req.id);
        }
        self.writer.flush()?;
        Ok(ids)
    }

    fn receive(&mut self, expected: u64, timeout: Option<Duration>, what: &'static str) -> Result<ResponseBody> {
        let line = match timeout {
            Some(t) => match self.incoming.recv_timeout(t) {
                Ok(line) => line,
                Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout(what)),
                Err(RecvTimeoutError::Disconnected) => return Err(closed()),
            },
            None => self.incoming.recv().map_err(|_| closed())?,
        }?;
        self.lines_read += 1;
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedLine { line: self.lines_read, reason: e.to_string() })?;
        if value.get("id").is_none() {
            return Err(Error::MalformedLine { line: self.lines_read, reason: "missing id".into() });
        }
        let response: Response = serde_json::from_value(value)
            .map_err(|e| Error::MalformedLine { line: self.lines_read, reason: e.to_string() })?;
        if let ResponseBody::Error { error } = &response.body {
            if response.id.is_none() || response.id == Some(expected) {
                return Err(Error::Server { code: error.code.clone(), message: error.message.clone() });
            }
        }
        if response.id != Some(expected) {
            return Err(Error::Protocol(format!(
                "response id {} does not match request id {expected}",
                response.id.map_or("null".to_string(), |id| id.to_string())
            )));
        }
        Ok(response.body)
    }

    /// Sends all requests, then reads their responses in order.
    fn call(&mut self, bodies: Vec<RequestBody>, timeout: Option<Duration>, what: &'static str) -> Result<Vec<Result<ResponseBody>>> {
        if let Some(reason) = &self.broken {
            return Err(Error::Protocol(format!("session unusable after earlier failure: {reason}")));
        }
        let ids = self.send(bodies)?;
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
            match self.receive(id, remaining, what) {
                Err(e @ Error::Server { .. }) => out.push(Err(e)),
                Err(e) => {
                    self.broken = Some(e.to_string());
                    return Err(e);
                }
                Ok(body) => out.push(Ok(body)),
            }
        }
        Ok(out)
    }
}

fn closed() -> Error {
    Error::Protocol("server closed the connection".into())
}

fn unexpected(what: &str) -> Error {
    Error::Protocol(format!("unexpected response kind, wanted {what}"))
}

/// A [`Scorer`] backed by a protocol server.
pub struct RemoteScorer {
    session: Mutex<Session>,
    descriptor: ScorerDescriptor,
    options: ClientOptions,
    child: Option<Child>,
}

impl std::fmt::Debug for RemoteScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteScorer").field("descriptor", &self.descriptor).finish_non_exhaustive()
    }
}

impl RemoteScorer {
    /// Runs the handshake over an arbitrary byte stream pair.
    pub fn connect<R, W>(reader: R, writer: W, options: ClientOptions) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::start(reader, Box::new(writer), options, None)
    }

    /// Starts `command` through `sh -c` and talks to it over stdin/stdout.
    pub fn spawn(command: &str, options: ClientOptions) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Protocol(format!("cannot start scorer command {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::start(stdout, Box::new(stdin), options, Some(child))
    }

    pub fn connect_tcp<A: ToSocketAddrs>(addr: A, options: ClientOptions) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| Error::Protocol(format!("cannot connect: {e}")))?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        Self::start(reader, Box::new(stream), options, None)
    }

    /// Serves `scorer` on a background thread over in-memory pipes and
    /// connects to it. Useful for exercising the wire format without a
    /// second process.
    pub fn in_process<S: Scorer + 'static>(scorer: Arc<S>, options: ClientOptions) -> Result<Self> {
        let (server_in, client_out) = std::io::pipe()?;
        let (client_in, server_out) = std::io::pipe()?;
        std::thread::spawn(move || {
            let _ = super::server::serve(scorer.as_ref(), BufReader::new(server_in), server_out);
        });
        Self::connect(client_in, client_out, options)
    }

    fn start<R: Read + Send + 'static>(
        reader: R,
        writer: Box<dyn Write + Send>,
        options: ClientOptions,
        child: Option<Child>,
    ) -> Result<Self> {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        let mut session = Session { writer, incoming: rx, next_id: 1, lines_read: 0, broken: None };
        let mut answers = session.call(vec![RequestBody::Handshake], Some(options.handshake_timeout), "handshake")?;
        let handshake = match answers.remove(0)? {
            ResponseBody::Handshake(h) => h,
            _ => return Err(unexpected("handshake")),
        };
        if handshake.protocol_version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!("unsupported protocol version {}", handshake.protocol_version)));
        }
        let descriptor = handshake.descriptor()?;
        Ok(Self { session: Mutex::new(session), descriptor, options, child })
    }

    fn call(&self, bodies: Vec<RequestBody>) -> Result<Vec<Result<ResponseBody>>> {
        let mut session = self.session.lock().map_err(|_| Error::Protocol("session lock poisoned".into()))?;
        session.call(bodies, self.options.request_timeout, "response")
    }
}

impl Drop for RemoteScorer {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            if let Ok(session) = self.session.get_mut() {
                // Closing stdin asks the server to exit.
                session.writer = Box::new(std::io::sink());
            }
            let deadline = Instant::now() + Duration::from_secs(2);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Scorer for RemoteScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        self.batch_next_distributions(&[(ctx, prefix)])
            .map(|mut v| v.remove(0))
            .map_err(|e| match e {
                Error::BatchItem { source, .. } => *source,
                other => other,
            })
    }

    fn batch_next_distributions(&self, items: &[(&ConditioningContext, &[TokenId])]) -> Result<Vec<StepDistribution>> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let plan = batch_plan(items);
        let bodies = plan
            .requests
            .iter()
            .map(|r| RequestBody::NextLogprobs {
                context: ContextDescriptor::from(r.context),
                prefixes: r.prefixes.iter().map(|p| p.to_vec()).collect(),
                top_k: self.options.top_k,
            })
            .collect();
        let first_item = |req: usize| plan.slots.iter().position(|&(r, _)| r == req).unwrap_or(0);
        let size = self.descriptor.vocab.size;
        let mut answers = Vec::with_capacity(plan.requests.len());
        for (ri, answer) in self.call(bodies)?.into_iter().enumerate() {
            let wrap = |e: Error| Error::BatchItem { index: first_item(ri), source: Box::new(e) };
            let rows = match answer.map_err(wrap)? {
                ResponseBody::Logprobs { logprobs } => logprobs,
                _ => return Err(unexpected("logprobs")),
            };
            if rows.len() != plan.requests[ri].prefixes.len() {
                return Err(Error::Protocol(format!(
                    "asked for {} prefixes, got {} rows",
                    plan.requests[ri].prefixes.len(),
                    rows.len()
                )));
            }
            let dists = rows.iter().map(|row| row.densify(size)).collect::<Result<Vec<_>>>().map_err(wrap)?;
            answers.push(dists);
        }
        Ok(plan.fan_out(&answers))
    }

    fn tokenize(&self, text: &str, role: TextRole) -> Result<Vec<TokenId>> {
        match self.call(vec![RequestBody::Tokenize { text: text.into(), role }])?.remove(0)? {
            ResponseBody::Tokens { tokens } => Ok(tokens),
            _ => Err(unexpected("tokens")),
        }
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        match self.call(vec![RequestBody::Detokenize { tokens: tokens.to_vec() }])?.remove(0)? {
            ResponseBody::Text { text } => Ok(text),
            _ => Err(unexpected("text")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{StepDistribution, TableScorer};
    use crate::vocab::{LanguageCode, Vocabulary};

    fn lang(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    fn table() -> (Arc<TableScorer>, ConditioningContext) {
        let vocab = Vocabulary::with_default_specials(["hund", "katze"]).unwrap();
        let mut t = TableScorer::new(vocab).with_max_context_len(4);
        let ctx = ConditioningContext::new("dog", lang("en"), lang("de")).unwrap();
        t.insert(&ctx, vec![0], StepDistribution::new(vec![0.0, 0.1, 0.0, 0.0, 0.6, 0.3]).unwrap()).unwrap();
        (Arc::new(t), ctx)
    }

    #[test]
    fn loopback_matches_local() {
        let (local, ctx) = table();
        let remote = RemoteScorer::in_process(local.clone(), ClientOptions::default()).unwrap();
        assert_eq!(remote.descriptor(), local.descriptor());
        let other = ctx.with_target(lang("fr"));
        let p: &[TokenId] = &[0];
        let q: &[TokenId] = &[0, 4];
        let items = [(&ctx, p), (&other, p), (&ctx, q), (&ctx, p)];
        let got = remote.batch_next_distributions(&items).unwrap();
        let want = local.batch_next_distributions(&items).unwrap();
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.probs().iter().zip(w.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(remote.tokenize("hund katze", TextRole::Target).unwrap(), vec![4, 5]);
        assert_eq!(remote.detokenize(&[4, 5]).unwrap(), "hund katze");
    }

    #[test]
    fn server_errors_keep_session_alive() {
        let (local, ctx) = table();
        let remote = RemoteScorer::in_process(local, ClientOptions::default()).unwrap();
        let err = remote.next_distribution(&ctx, &[0, 4, 4, 4]).unwrap_err();
        assert!(matches!(&err, Error::Server { code, .. } if code == "context_overflow"), "{err}");
        let err = remote.batch_next_distributions(&[(&ctx, &[0][..]), (&ctx, &[0, 9][..])]).unwrap_err();
        assert!(matches!(err, Error::BatchItem { index: 0, .. }));
        assert!(remote.next_distribution(&ctx, &[0]).is_ok());
    }

    #[test]
    fn garbage_reply_is_malformed() {
        let (client_in, mut server_out) = std::io::pipe().unwrap();
        server_out.write_all(b"this is not json\n").unwrap();
        let err = RemoteScorer::connect(client_in, std::io::sink(), ClientOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }), "{err}");
    }

    #[test]
    fn wrong_id_rejected() {
        let (client_in, mut server_out) = std::io::pipe().unwrap();
        server_out.write_all(b"{\"id\":7,\"text\":\"x\"}\n").unwrap();
        let err = RemoteScorer::connect(client_in, std::io::sink(), ClientOptions::default()).unwrap_err();
        assert!(err.to_string().contains("does not match"), "{err}");
    }

    #[test]
    fn silent_server_times_out() {
        let (client_in, _server_out) = std::io::pipe().unwrap();
        let opts = ClientOptions { handshake_timeout: Duration::from_millis(50), ..ClientOptions::default() };
        let err = RemoteScorer::connect(client_in, std::io::sink(), opts).unwrap_err();
        assert!(matches!(err, Error::Timeout("handshake")));
    }

    #[test]
    fn closed_server_reported() {
        let (client_in, server_out) = std::io::pipe().unwrap();
        drop(server_out);
        let err = RemoteScorer::connect(client_in, std::io::sink(), ClientOptions::default()).unwrap_err();
        assert!(err.to_string().contains("closed"));
    }

    #[test]
    fn tcp_round_trip() {
        let (local, ctx) = table();
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let served = local.clone();
        std::thread::spawn(move || super::super::serve_listener(served, listener));
        let remote = RemoteScorer::connect_tcp(addr, ClientOptions { top_k: Some(2), ..ClientOptions::default() }).unwrap();
        let d = remote.next_distribution(&ctx, &[0]).unwrap();
        assert!((d.prob(4) - 0.6).abs() < 1e-9);
        assert!((d.prob(5) - 0.3).abs() < 1e-9);
        assert!((d.prob(1) - 0.025).abs() < 1e-9);
    }
}
