//! Decoding through the NDJSON protocol. The synthetic translator is served
//! on a background thread and reached only through the wire format.

use std::sync::Arc;

use contrastive_decoding::protocol::{serve, ClientOptions, RemoteScorer};
use contrastive_decoding::scoring::synthetic_corpus;
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let local = Arc::new(SyntheticTranslator::new(SyntheticConfig::default().with_hallucination_rate(0.3))?);

    let transcript = concat!(
        r#"{"id":1,"kind":"handshake"}"#, "\n",
        r#"{"id":2,"kind":"tokenize","text":"hello","role":"source"}"#, "\n",
    );
    let mut reply = Vec::new();
    serve(local.as_ref(), transcript.as_bytes(), &mut reply)?;
    print!("{}", String::from_utf8_lossy(&reply));

    let remote = RemoteScorer::in_process(local.clone(), ClientOptions::default())?;
    let (af, zu): (LanguageCode, LanguageCode) = ("af".parse()?, "zu".parse()?);
    let params = DecodeParams::default().with_max_len(40);
    for (source, _) in synthetic_corpus(&local, &af, &zu, 5, 1)? {
        let ctx = ConditioningContext::new(source, af.clone(), zu.clone())?;
        let objective = ContrastiveObjective::plain(ctx);
        let a = beam_search(local.as_ref(), &objective, &params)?.remove(0);
        let b = beam_search(&remote, &objective, &params)?.remove(0);
        println!("{} | identical: {}", remote.detokenize(b.output_tokens())?, a.tokens == b.tokens);
    }
    Ok(())
}
