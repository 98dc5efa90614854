//! Line-oriented canonical text form of transactions and history entries.
//!
//! Field order is fixed, integers are decimal and strings are JSON string
//! literals, so equal values always serialize to identical bytes:
//!
//! ```text
//! DELEGATE author=1 amount=10 pool="A" nonce=2
//! REVOKE author=1 nonce=1
//! REGISTER author=2 pool="B" params="margin=0.05"
//! MESSAGE author=1 body="hello"
//! COMPOUND | REVOKE author=1 nonce=1 | REGISTER author=2 pool="B" params="" | DELEGATE author=1 amount=10 pool="B" nonce=2
//! DISSOLVE pool="A"
//! ```
//!
//! Compound parts are written in application order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::state::HistoryEntry;
use super::tx::{
    Compound, Delegate, Nonce, PlainMessage, PlayerId, PoolName, Register, Revoke, Transaction,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty line")]
    Empty,
    #[error("unknown record kind `{0}`")]
    UnknownKind(String),
    #[error("malformed field `{0}`")]
    MalformedField(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("unexpected field `{0}`")]
    UnexpectedField(String),
    #[error("unterminated string")]
    UnterminatedString,
    #[error("bad compound: {0}")]
    BadCompound(String),
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn write_delegate(out: &mut String, d: &Delegate) {
    let _ = write!(
        out,
        "DELEGATE author={} amount={} pool={} nonce={}",
        d.author.0,
        d.amount,
        quote(d.pool.as_str()),
        d.nonce.0
    );
}

fn write_revoke(out: &mut String, r: &Revoke) {
    let _ = write!(out, "REVOKE author={} nonce={}", r.author.0, r.nonce.0);
}

fn write_register(out: &mut String, g: &Register) {
    let _ = write!(
        out,
        "REGISTER author={} pool={} params={}",
        g.author.0,
        quote(g.pool.as_str()),
        quote(&g.params)
    );
}

pub fn to_canonical(tx: &Transaction) -> String {
    let mut out = String::new();
    match tx {
        Transaction::Delegate(d) => write_delegate(&mut out, d),
        Transaction::Revoke(r) => write_revoke(&mut out, r),
        Transaction::Register(g) => write_register(&mut out, g),
        Transaction::PlainMessage(m) => {
            let _ = write!(out, "MESSAGE author={} body={}", m.author.0, quote(&m.body));
        }
        Transaction::Compound(c) => {
            out.push_str("COMPOUND");
            if let Some(r) = c.revoke() {
                out.push_str(" | ");
                write_revoke(&mut out, r);
            }
            if let Some(g) = c.register() {
                out.push_str(" | ");
                write_register(&mut out, g);
            }
            out.push_str(" | ");
            write_delegate(&mut out, c.delegate());
        }
    }
    out
}

pub fn entry_to_canonical(entry: &HistoryEntry) -> String {
    match entry {
        HistoryEntry::Applied { tx } => to_canonical(tx),
        HistoryEntry::Dissolved { pool } => format!("DISSOLVE pool={}", quote(pool.as_str())),
    }
}

/// One line per entry, each terminated by `\n`.
pub fn history_to_canonical(history: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for e in history {
        out.push_str(&entry_to_canonical(e));
        out.push('\n');
    }
    out
}

/// SHA-256 over the canonical history text, lowercase hex.
pub fn history_digest(history: &[HistoryEntry]) -> String {
    hex::encode(Sha256::digest(history_to_canonical(history).as_bytes()))
}

/// Splits on `sep` outside of string literals.
fn split_outside_quotes(s: &str, sep: char) -> Result<Vec<&str>, ParseError> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
        } else if c == '"' {
            in_str = true;
        } else if c == sep {
            parts.push(&s[start..i]);
            start = i + c.len_utf8();
        }
    }
    if in_str {
        return Err(ParseError::UnterminatedString);
    }
    parts.push(&s[start..]);
    Ok(parts)
}

enum Value {
    Int(u64),
    Str(String),
}

struct Record {
    kind: String,
    fields: BTreeMap<String, Value>,
}

impl Record {
    fn parse(s: &str) -> Result<Self, ParseError> {
        let mut words = split_outside_quotes(s.trim(), ' ')?
            .into_iter()
            .filter(|w| !w.is_empty());
        let kind = words.next().ok_or(ParseError::Empty)?.to_owned();
        let mut fields = BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| ParseError::MalformedField(w.to_owned()))?;
            let value = if v.starts_with('"') {
                Value::Str(
                    serde_json::from_str(v)
                        .map_err(|_| ParseError::MalformedField(w.to_owned()))?,
                )
            } else {
                Value::Int(
                    v.parse()
                        .map_err(|_| ParseError::MalformedField(w.to_owned()))?,
                )
            };
            if fields.insert(k.to_owned(), value).is_some() {
                return Err(ParseError::MalformedField(w.to_owned()));
            }
        }
        Ok(Record { kind, fields })
    }

    fn int(&mut self, key: &'static str) -> Result<u64, ParseError> {
        match self.fields.remove(key) {
            Some(Value::Int(v)) => Ok(v),
            Some(Value::Str(_)) => Err(ParseError::MalformedField(key.to_owned())),
            None => Err(ParseError::MissingField(key)),
        }
    }

    fn player(&mut self, key: &'static str) -> Result<PlayerId, ParseError> {
        let v = self.int(key)?;
        u32::try_from(v)
            .map(PlayerId)
            .map_err(|_| ParseError::MalformedField(key.to_owned()))
    }

    fn string(&mut self, key: &'static str) -> Result<String, ParseError> {
        match self.fields.remove(key) {
            Some(Value::Str(v)) => Ok(v),
            Some(Value::Int(_)) => Err(ParseError::MalformedField(key.to_owned())),
            None => Err(ParseError::MissingField(key)),
        }
    }

    fn finish<T>(self, value: T) -> Result<T, ParseError> {
        match self.fields.into_keys().next() {
            Some(extra) => Err(ParseError::UnexpectedField(extra)),
            None => Ok(value),
        }
    }

    fn into_transaction(mut self) -> Result<Transaction, ParseError> {
        let tx = match self.kind.as_str() {
            "DELEGATE" => Transaction::Delegate(Delegate {
                author: self.player("author")?,
                amount: self.int("amount")?,
                pool: PoolName(self.string("pool")?),
                nonce: Nonce(self.int("nonce")?),
            }),
            "REVOKE" => Transaction::Revoke(Revoke {
                author: self.player("author")?,
                nonce: Nonce(self.int("nonce")?),
            }),
            "REGISTER" => Transaction::Register(Register {
                author: self.player("author")?,
                pool: PoolName(self.string("pool")?),
                params: self.string("params")?,
            }),
            "MESSAGE" => Transaction::PlainMessage(PlainMessage {
                author: self.player("author")?,
                body: self.string("body")?,
            }),
            other => return Err(ParseError::UnknownKind(other.to_owned())),
        };
        self.finish(tx)
    }
}

pub fn parse_canonical(line: &str) -> Result<Transaction, ParseError> {
    let segments = split_outside_quotes(line.trim(), '|')?;
    if segments[0].trim() != "COMPOUND" {
        if segments.len() > 1 {
            return Err(ParseError::BadCompound("`|` outside a compound".into()));
        }
        return Record::parse(segments[0])?.into_transaction();
    }
    let (mut delegate, mut revoke, mut register) = (None, None, None);
    for seg in &segments[1..] {
        match Record::parse(seg)?.into_transaction()? {
            Transaction::Delegate(d) if delegate.is_none() => delegate = Some(d),
            Transaction::Revoke(r) if revoke.is_none() && delegate.is_none() => revoke = Some(r),
            Transaction::Register(g) if register.is_none() && delegate.is_none() => {
                register = Some(g)
            }
            other => {
                return Err(ParseError::BadCompound(format!(
                    "unexpected or out-of-order part {}",
                    other.kind().as_str()
                )))
            }
        }
    }
    let delegate = delegate.ok_or_else(|| ParseError::BadCompound("missing delegate".into()))?;
    Compound::new(delegate, revoke, register)
        .map(Transaction::Compound)
        .map_err(|e| ParseError::BadCompound(e.to_string()))
}
