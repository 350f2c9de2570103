//! Oracle backed by an HTTP chat-completion style endpoint.
//!
//! The request body carries the batch both as structured fields and as a
//! ready-made chat prompt:
//!
//! ```json
//! {"model": "...", "values": ["usa_837"], "types": ["country", ...],
//!  "few_shot": [{"input": "US-123", "output": "{country(US)}-123"}],
//!  "messages": [{"role": "system", "content": "..."}, {"role": "user", "content": "..."}]}
//! ```
//!
//! Accepted responses are `{"values": [...]}` or a chat completion whose
//! first choice content is a JSON array of strings, a `{"values": [...]}`
//! object, or one annotated value per line.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use super::{SemanticOracle, SemanticTypeList, DEFAULT_BATCH_SIZE};
use crate::{Error, Result};

const FEW_SHOT: [(&str, &str); 3] = [
    ("US-123", "{country(US)}-123"),
    ("u.k.-392", "{country(UK)}-392"),
    ("dark green 2", "{color(dark green)} 2"),
];

#[derive(Debug, Clone)]
pub struct HttpOracleConfig {
    pub url: String,
    pub key: Option<String>,
    pub model: Option<String>,
    pub batch: usize,
    /// Minimum spacing between two requests.
    pub min_interval: Duration,
    pub timeout: Duration,
}

impl HttpOracleConfig {
    /// Reads `ORACLE_URL` (required), `ORACLE_KEY` and `ORACLE_MODEL`.
    pub fn from_env() -> Result<Self> {
        let url = std::env::var("ORACLE_URL").map_err(|_| Error::Config("ORACLE_URL is not set".into()))?;
        Ok(HttpOracleConfig {
            url,
            key: std::env::var("ORACLE_KEY").ok().filter(|k| !k.is_empty()),
            model: std::env::var("ORACLE_MODEL").ok().filter(|m| !m.is_empty()),
            batch: DEFAULT_BATCH_SIZE,
            min_interval: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        })
    }
}

pub struct HttpOracle {
    config: HttpOracleConfig,
    agent: ureq::Agent,
    last_call: Mutex<Option<Instant>>,
}

#[derive(Serialize)]
struct Shot<'a> {
    input: &'a str,
    output: &'a str,
}

impl HttpOracle {
    pub fn new(config: HttpOracleConfig) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build().into();
        HttpOracle {
            config,
            agent,
            last_call: Mutex::new(None),
        }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(HttpOracleConfig::from_env()?))
    }

    fn wait_turn(&self) {
        let mut last = self.last_call.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = *last {
            let since = t.elapsed();
            if since < self.config.min_interval {
                std::thread::sleep(self.config.min_interval - since);
            }
        }
        *last = Some(Instant::now());
    }

    fn request_body(&self, values: &[String], types: &SemanticTypeList) -> Value {
        let shots: Vec<Shot<'_>> = FEW_SHOT.iter().map(|(i, o)| Shot { input: i, output: o }).collect();
        let system = format!(
            "You annotate spreadsheet column values. Wrap every substring that is an instance of one of these semantic types as {{type(normalized)}}, \
             where normalized is the canonical spelling of the substring. Leave all other characters unchanged. Types: {}. \
             Answer with a JSON array holding one string per input value, in order.",
            types.names().join(", ")
        );
        let mut examples = String::new();
        for (i, o) in FEW_SHOT {
            examples.push_str(&format!("{i} => {o}\n"));
        }
        let user = format!(
            "Examples:\n{examples}\nColumn:\n{}",
            serde_json::to_string(values).unwrap_or_default()
        );
        let mut body = json!({
            "values": values,
            "types": types.names(),
            "few_shot": shots,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        if let Some(m) = &self.config.model {
            body["model"] = json!(m);
        }
        body
    }
}

fn strings(v: &Value) -> Option<Vec<String>> {
    v.as_array()?.iter().map(|x| x.as_str().map(str::to_string)).collect()
}

/// Extracts the annotated values from a response body.
pub fn parse_response(body: &Value, expected: usize) -> Result<Vec<String>> {
    let bad = |m: &str| Error::Oracle(m.to_string());
    let values = if let Some(v) = body.get("values") {
        strings(v).ok_or_else(|| bad("`values` is not an array of strings"))?
    } else {
        let content = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("response has neither `values` nor `choices[0].message.content`"))?;
        let trimmed = content
            .trim()
            .trim_start_matches("```json")
            .trim_start_matches("```")
            .trim_end_matches("```")
            .trim();
        match serde_json::from_str::<Value>(trimmed) {
            Ok(v @ Value::Array(_)) => strings(&v).ok_or_else(|| bad("content array holds non-strings"))?,
            Ok(v) if v.get("values").is_some() => strings(&v["values"]).ok_or_else(|| bad("`values` is not an array of strings"))?,
            _ => trimmed.lines().map(str::to_string).collect(),
        }
    };
    if values.len() != expected {
        return Err(Error::Oracle(format!("expected {expected} values, got {}", values.len())));
    }
    Ok(values)
}

impl SemanticOracle for HttpOracle {
    fn max_batch(&self) -> usize {
        self.config.batch.max(1)
    }

    fn annotate(&self, values: &[String], types: &SemanticTypeList) -> Result<Vec<String>> {
        self.wait_turn();
        let body = self.request_body(values, types);
        let mut req = self.agent.post(&self.config.url).header("Content-Type", "application/json");
        if let Some(k) = &self.config.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::Oracle(e.to_string()))?;
        let parsed: Value = resp.body_mut().read_json().map_err(|e| Error::Oracle(e.to_string()))?;
        parse_response(&parsed, values.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn parses_response_shapes() {
        assert_eq!(parse_response(&json!({"values": ["a", "b"]}), 2).unwrap(), vec!["a", "b"]);
        let chat = json!({"choices": [{"message": {"content": "```json\n[\"{country(US)}-1\"]\n```"}}]});
        assert_eq!(parse_response(&chat, 1).unwrap(), vec!["{country(US)}-1"]);
        let lines = json!({"choices": [{"message": {"content": "x\ny"}}]});
        assert_eq!(parse_response(&lines, 2).unwrap(), vec!["x", "y"]);
        assert!(parse_response(&json!({"values": ["a"]}), 2).is_err());
        assert!(parse_response(&json!({}), 0).is_err());
    }

    /// Serves one request and returns the request body it received.
    fn serve_once(listener: TcpListener, reply: String) -> std::thread::JoinHandle<String> {
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.len(),
                reply
            )
            .unwrap();
            String::from_utf8(body).unwrap()
        })
    }

    #[test]
    fn round_trip_against_local_server() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat", listener.local_addr().unwrap());
        let server = serve_once(listener, json!({"values": ["{country(US)}_837"]}).to_string());
        let oracle = HttpOracle::new(HttpOracleConfig {
            url,
            key: Some("k".into()),
            model: None,
            batch: 10,
            min_interval: Duration::ZERO,
            timeout: Duration::from_secs(10),
        });
        let out = oracle.annotate(&["usa_837".into()], &SemanticTypeList::default()).unwrap();
        assert_eq!(out, vec!["{country(US)}_837"]);
        let sent: Value = serde_json::from_str(&server.join().unwrap()).unwrap();
        assert_eq!(sent["values"], json!(["usa_837"]));
        assert_eq!(sent["messages"][0]["role"], "system");
        assert!(sent["types"].as_array().unwrap().contains(&json!("country")));
    }
}
