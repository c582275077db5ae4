//! Structured-message digests for signed commit and reveal messages.
//!
//! Only the digest layout is modeled (`keccak256(0x19 0x01 ‖ domain ‖
//! struct)`); producing or checking signatures over it is left to the
//! caller's signing stack.

use super::commit::{keccak256, AgentId, Packing, RoundId};
use crate::scoring::ProbabilityBp;

pub const DOMAIN_TYPE: &str = "EIP712Domain(string name,string version,uint256 chainId,address verifyingContract)";
pub const COMMIT_TYPE: &str = "Commit(uint256 roundId,bytes32 commitHash,address agent,uint256 nonce,uint256 deadline)";
pub const REVEAL_TYPE: &str =
    "Reveal(uint256 roundId,bytes32 predictionsHash,bytes32 salt,address agent,uint256 nonce,uint256 deadline)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub version: String,
    pub chain_id: u64,
    pub verifying_contract: [u8; 20],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommitMessage {
    pub round_id: RoundId,
    pub commit_hash: [u8; 32],
    pub agent: AgentId,
    pub nonce: u64,
    pub deadline: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RevealMessage {
    pub round_id: RoundId,
    pub predictions_hash: [u8; 32],
    pub salt: [u8; 32],
    pub agent: AgentId,
    pub nonce: u64,
    pub deadline: u64,
}

fn word_u64(v: u64) -> [u8; 32] {
    *RoundId::from(v).as_bytes()
}

fn word_address(a: &[u8; 20]) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[12..].copy_from_slice(a);
    w
}

fn hash_words(words: &[[u8; 32]]) -> [u8; 32] {
    let mut buf = Vec::with_capacity(32 * words.len());
    for w in words {
        buf.extend_from_slice(w);
    }
    keccak256(&buf)
}

pub fn domain_separator(domain: &Domain) -> [u8; 32] {
    hash_words(&[
        keccak256(DOMAIN_TYPE.as_bytes()),
        keccak256(domain.name.as_bytes()),
        keccak256(domain.version.as_bytes()),
        word_u64(domain.chain_id),
        word_address(&domain.verifying_contract),
    ])
}

pub fn commit_struct_hash(m: &CommitMessage) -> [u8; 32] {
    hash_words(&[
        keccak256(COMMIT_TYPE.as_bytes()),
        *m.round_id.as_bytes(),
        m.commit_hash,
        word_address(&m.agent.0),
        word_u64(m.nonce),
        word_u64(m.deadline),
    ])
}

pub fn reveal_struct_hash(m: &RevealMessage) -> [u8; 32] {
    hash_words(&[
        keccak256(REVEAL_TYPE.as_bytes()),
        *m.round_id.as_bytes(),
        m.predictions_hash,
        m.salt,
        word_address(&m.agent.0),
        word_u64(m.nonce),
        word_u64(m.deadline),
    ])
}

/// Hash of the packed prediction words, using the same word layout as the
/// commitment preimage.
pub fn predictions_hash(predictions: &[ProbabilityBp], packing: Packing) -> [u8; 32] {
    let mut buf = Vec::with_capacity(2 * predictions.len());
    for p in predictions {
        match packing {
            Packing::LittleEndian => buf.extend_from_slice(&p.value().to_le_bytes()),
            Packing::BigEndian => buf.extend_from_slice(&p.value().to_be_bytes()),
        }
    }
    keccak256(&buf)
}

fn typed_digest(domain: &Domain, struct_hash: [u8; 32]) -> [u8; 32] {
    let mut buf = Vec::with_capacity(66);
    buf.extend_from_slice(&[0x19, 0x01]);
    buf.extend_from_slice(&domain_separator(domain));
    buf.extend_from_slice(&struct_hash);
    keccak256(&buf)
}

pub fn commit_digest(domain: &Domain, m: &CommitMessage) -> [u8; 32] {
    typed_digest(domain, commit_struct_hash(m))
}

pub fn reveal_digest(domain: &Domain, m: &RevealMessage) -> [u8; 32] {
    typed_digest(domain, reveal_struct_hash(m))
}
