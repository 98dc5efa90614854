//! The transaction language: delegation, revocation, pool registration,
//! plain messages and the compound form that bundles the first three.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Logical identity of a player. Stands in for a key pair: whoever is named
/// as the author of a transaction is taken to have signed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u32);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoolName(pub String);

impl PoolName {
    pub fn new(name: impl Into<String>) -> Self {
        PoolName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PoolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PoolName {
    fn from(s: &str) -> Self {
        PoolName(s.to_owned())
    }
}

/// Unique identifier carried by every delegation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nonce(pub u64);

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Stake is counted in indivisible units.
pub type Stake = u64;

/// "I delegate `amount` of my stake to pool `pool` || nonce".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Delegate {
    pub author: PlayerId,
    pub amount: Stake,
    pub pool: PoolName,
    pub nonce: Nonce,
}

/// "I revoke my delegation corresponding to nonce".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Revoke {
    pub author: PlayerId,
    pub nonce: Nonce,
}

/// "New pool with parameters ...". `params` is opaque to the ledger; the
/// reward model reads margin and cost out of it (see [`PoolParams`]).
///
/// [`PoolParams`]: crate::incentive::PoolParams
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Register {
    pub author: PlayerId,
    pub pool: PoolName,
    #[serde(default)]
    pub params: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlainMessage {
    pub author: PlayerId,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("inline revocation authored by {revoke} but delegation authored by {delegate}")]
    AuthorMismatch {
        delegate: PlayerId,
        revoke: PlayerId,
    },
}

/// A delegation bundled with an optional revocation of the same author's
/// earlier delegation and an optional pool registration certificate, which
/// may be authored by anyone.
///
/// Parts are applied revoke, then register, then delegate, all or nothing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "CompoundParts", into = "CompoundParts")]
pub struct Compound {
    delegate: Delegate,
    revoke: Option<Revoke>,
    register: Option<Register>,
}

impl Compound {
    pub fn new(
        delegate: Delegate,
        revoke: Option<Revoke>,
        register: Option<Register>,
    ) -> Result<Self, ComposeError> {
        if let Some(r) = &revoke {
            if r.author != delegate.author {
                return Err(ComposeError::AuthorMismatch {
                    delegate: delegate.author,
                    revoke: r.author,
                });
            }
        }
        Ok(Compound {
            delegate,
            revoke,
            register,
        })
    }

    pub fn delegate(&self) -> &Delegate {
        &self.delegate
    }

    pub fn revoke(&self) -> Option<&Revoke> {
        self.revoke.as_ref()
    }

    pub fn register(&self) -> Option<&Register> {
        self.register.as_ref()
    }

    pub fn into_parts(self) -> (Delegate, Option<Revoke>, Option<Register>) {
        (self.delegate, self.revoke, self.register)
    }
}

#[derive(Serialize, Deserialize)]
struct CompoundParts {
    delegate: Delegate,
    #[serde(default)]
    revoke: Option<Revoke>,
    #[serde(default)]
    register: Option<Register>,
}

impl TryFrom<CompoundParts> for Compound {
    type Error = ComposeError;

    fn try_from(p: CompoundParts) -> Result<Self, Self::Error> {
        Compound::new(p.delegate, p.revoke, p.register)
    }
}

impl From<Compound> for CompoundParts {
    fn from(c: Compound) -> Self {
        CompoundParts {
            delegate: c.delegate,
            revoke: c.revoke,
            register: c.register,
        }
    }
}

/// Builds the compound form of a delegation.
pub fn compose_compound(
    delegate: Delegate,
    revoke: Option<Revoke>,
    register: Option<Register>,
) -> Result<Transaction, ComposeError> {
    Compound::new(delegate, revoke, register).map(Transaction::Compound)
}

pub fn decompose_compound(c: &Compound) -> (Delegate, Option<Revoke>, Option<Register>) {
    c.clone().into_parts()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transaction {
    Delegate(Delegate),
    Revoke(Revoke),
    Register(Register),
    Compound(Compound),
    #[serde(rename = "message")]
    PlainMessage(PlainMessage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Delegate,
    Revoke,
    Register,
    Compound,
    Message,
}

impl TxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TxKind::Delegate => "delegate",
            TxKind::Revoke => "revoke",
            TxKind::Register => "register",
            TxKind::Compound => "compound",
            TxKind::Message => "message",
        }
    }
}

impl Transaction {
    /// The signer of the outer transaction.
    pub fn author(&self) -> PlayerId {
        match self {
            Transaction::Delegate(d) => d.author,
            Transaction::Revoke(r) => r.author,
            Transaction::Register(g) => g.author,
            Transaction::Compound(c) => c.delegate.author,
            Transaction::PlainMessage(m) => m.author,
        }
    }

    pub fn kind(&self) -> TxKind {
        match self {
            Transaction::Delegate(_) => TxKind::Delegate,
            Transaction::Revoke(_) => TxKind::Revoke,
            Transaction::Register(_) => TxKind::Register,
            Transaction::Compound(_) => TxKind::Compound,
            Transaction::PlainMessage(_) => TxKind::Message,
        }
    }

    /// The registration certificate this transaction carries, whether bare
    /// or compounded.
    pub fn registration(&self) -> Option<&Register> {
        match self {
            Transaction::Register(g) => Some(g),
            Transaction::Compound(c) => c.register.as_ref(),
            _ => None,
        }
    }

    pub fn revocation(&self) -> Option<&Revoke> {
        match self {
            Transaction::Revoke(r) => Some(r),
            Transaction::Compound(c) => c.revoke.as_ref(),
            _ => None,
        }
    }

    pub fn delegation(&self) -> Option<&Delegate> {
        match self {
            Transaction::Delegate(d) => Some(d),
            Transaction::Compound(c) => Some(&c.delegate),
            _ => None,
        }
    }
}

impl From<Delegate> for Transaction {
    fn from(d: Delegate) -> Self {
        Transaction::Delegate(d)
    }
}

impl From<Revoke> for Transaction {
    fn from(r: Revoke) -> Self {
        Transaction::Revoke(r)
    }
}

impl From<Register> for Transaction {
    fn from(g: Register) -> Self {
        Transaction::Register(g)
    }
}

impl From<PlainMessage> for Transaction {
    fn from(m: PlainMessage) -> Self {
        Transaction::PlainMessage(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(author: u32, amount: Stake, pool: &str, nonce: u64) -> Delegate {
        Delegate {
            author: PlayerId(author),
            amount,
            pool: pool.into(),
            nonce: Nonce(nonce),
        }
    }

    #[test]
    fn compose_allows_foreign_certificate() {
        let g = Register {
            author: PlayerId(2),
            pool: "B".into(),
            params: String::new(),
        };
        let r = Revoke {
            author: PlayerId(1),
            nonce: Nonce(1),
        };
        let tx = compose_compound(d(1, 10, "B", 2), Some(r.clone()), Some(g.clone())).unwrap();
        let Transaction::Compound(c) = tx else {
            panic!("expected compound")
        };
        assert_eq!(decompose_compound(&c), (d(1, 10, "B", 2), Some(r), Some(g)));
    }

    #[test]
    fn compose_rejects_foreign_revocation() {
        let r = Revoke {
            author: PlayerId(2),
            nonce: Nonce(1),
        };
        assert_eq!(
            compose_compound(d(1, 10, "A", 2), Some(r), None),
            Err(ComposeError::AuthorMismatch {
                delegate: PlayerId(1),
                revoke: PlayerId(2)
            })
        );
    }

    #[test]
    fn deserializing_checks_compound_authors() {
        let json = r#"{"kind":"compound",
            "delegate":{"author":1,"amount":5,"pool":"A","nonce":9},
            "revoke":{"author":3,"nonce":1}}"#;
        assert!(serde_json::from_str::<Transaction>(json).is_err());
        let ok = r#"{"kind":"compound","delegate":{"author":1,"amount":5,"pool":"A","nonce":9}}"#;
        let tx: Transaction = serde_json::from_str(ok).unwrap();
        assert_eq!(tx.kind(), TxKind::Compound);
    }
}
