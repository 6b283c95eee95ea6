use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::Arc;

use super::messages::*;
use crate::context::ConditioningContext;
use crate::error::{Error, Result};
use crate::scoring::{Scorer, StepDistribution};
use crate::vocab::TokenId;

/// Answers requests read from `input` until end of stream.
///
/// Every request gets exactly one response line. Lines that cannot be parsed
/// get an error response with `id: null`; the session continues.
pub fn serve<S, R, W>(scorer: &S, input: R, output: W) -> Result<()>
where
    S: Scorer + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut out = BufWriter::new(output);
    let mut last_id = 0u64;
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Err(e) => error_response(None, "malformed", format!("line {}: {e}", n + 1)),
            Ok(req) if req.id <= last_id => error_response(
                Some(req.id),
                "bad_id",
                format!("request id {} is not greater than previous id {last_id}", req.id),
            ),
            Ok(req) => {
                last_id = req.id;
                let body = handle(scorer, req.body).unwrap_or_else(|e| ResponseBody::Error { error: error_payload(&e) });
                Response { id: Some(req.id), body }
            }
        };
        serde_json::to_writer(&mut out, &response)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}

fn handle<S: Scorer + ?Sized>(scorer: &S, body: RequestBody) -> Result<ResponseBody> {
    Ok(match body {
        RequestBody::Handshake => ResponseBody::Handshake(Handshake::from(scorer.descriptor())),
        RequestBody::Tokenize { text, role } => ResponseBody::Tokens { tokens: scorer.tokenize(&text, role)? },
        RequestBody::Detokenize { tokens } => ResponseBody::Text { text: scorer.detokenize(&tokens)? },
        RequestBody::NextLogprobs { context, prefixes, top_k } => {
            let ctx = ConditioningContext::try_from(context)?;
            let top_k = top_k.unwrap_or_else(|| default_top_k(scorer.descriptor().vocab.size));
            let items: Vec<(&ConditioningContext, &[TokenId])> = prefixes.iter().map(|p| (&ctx, p.as_slice())).collect();
            let dists: Vec<StepDistribution> = scorer.batch_next_distributions(&items)?;
            ResponseBody::Logprobs { logprobs: dists.iter().map(|d| LogprobRow::encode(d, top_k)).collect() }
        }
    })
}

fn error_response(id: Option<u64>, code: &str, message: String) -> Response {
    Response { id, body: ResponseBody::Error { error: ErrorPayload { code: code.into(), message } } }
}

fn error_payload(e: &Error) -> ErrorPayload {
    let root = match e {
        Error::BatchItem { source, .. } => source.as_ref(),
        other => other,
    };
    let code = match root {
        Error::ContextOverflow { .. } => "context_overflow",
        Error::TokenOutOfRange { .. } => "token_out_of_range",
        Error::InvalidContext(_) | Error::InvalidLanguage(_) => "invalid_context",
        _ => "scorer_error",
    };
    ErrorPayload { code: code.into(), message: e.to_string() }
}

/// Serves one scorer on a TCP address; each connection gets its own thread.
/// Returns only if accepting fails.
pub fn serve_tcp<S, A>(scorer: Arc<S>, addr: A) -> Result<()>
where
    S: Scorer + 'static,
    A: ToSocketAddrs,
{
    let listener = TcpListener::bind(addr)?;
    serve_listener(scorer, listener)
}

pub fn serve_listener<S: Scorer + 'static>(scorer: Arc<S>, listener: TcpListener) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let scorer = Arc::clone(&scorer);
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(r) => BufReader::new(r),
                Err(_) => return,
            };
            let _ = serve(scorer.as_ref(), reader, stream);
        });
    }
    Ok(())
}
