//! Commitment hashing.
//!
//! Preimage layout, no padding between elements:
//!
//! ```text
//! round_id (32 bytes, big-endian) ‖ p_1 … p_k (2 bytes each) ‖ salt (32 bytes)
//! ```
//!
//! The two-byte prediction words default to little-endian. Standard tightly
//! packed EVM encoding would write them big-endian; [`Packing::BigEndian`]
//! selects that layout for interoperability checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Keccak256};

use super::ProtocolError;
use crate::scoring::ProbabilityBp;

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    Keccak256::digest(data).into()
}

/// Byte order of each packed prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub enum Packing {
    #[default]
    LittleEndian,
    BigEndian,
}

/// Unsigned 256-bit round identifier, stored big-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct RoundId(pub [u8; 32]);

impl RoundId {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl From<u64> for RoundId {
    fn from(v: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&v.to_be_bytes());
        RoundId(bytes)
    }
}

impl fmt::Display for RoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for RoundId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(RoundId(parse_fixed_hex(s)?))
    }
}

/// 20-byte participant identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct AgentId(pub [u8; 20]);

impl AgentId {
    /// Last 20 bytes of `keccak256(label)`.
    pub fn from_label(label: &str) -> Self {
        let digest = keccak256(label.as_bytes());
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&digest[12..]);
        AgentId(bytes)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for AgentId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(AgentId(parse_fixed_hex(s)?))
    }
}

fn parse_fixed_hex<const N: usize>(s: &str) -> Result<[u8; N], ProtocolError> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).map_err(|e| ProtocolError::Decode(format!("{e}: {s:?}")))?;
    Ok(out)
}

/// Exact bytes hashed by [`compute_commit_hash_with`].
pub fn commit_preimage(
    round_id: &RoundId,
    predictions: &[ProbabilityBp],
    salt: &[u8; 32],
    packing: Packing,
) -> Result<Vec<u8>, ProtocolError> {
    if predictions.is_empty() {
        return Err(ProtocolError::EmptyPredictions);
    }
    let mut buf = Vec::with_capacity(64 + 2 * predictions.len());
    buf.extend_from_slice(round_id.as_bytes());
    for p in predictions {
        let word = match packing {
            Packing::LittleEndian => p.value().to_le_bytes(),
            Packing::BigEndian => p.value().to_be_bytes(),
        };
        buf.extend_from_slice(&word);
    }
    buf.extend_from_slice(salt);
    Ok(buf)
}

pub fn compute_commit_hash_with(
    round_id: &RoundId,
    predictions: &[ProbabilityBp],
    salt: &[u8; 32],
    packing: Packing,
) -> Result<[u8; 32], ProtocolError> {
    Ok(keccak256(&commit_preimage(round_id, predictions, salt, packing)?))
}

/// Commitment over `(round_id, predictions, salt)` with the default packing.
pub fn compute_commit_hash(
    round_id: &RoundId,
    predictions: &[ProbabilityBp],
    salt: &[u8; 32],
) -> Result<[u8; 32], ProtocolError> {
    compute_commit_hash_with(round_id, predictions, salt, Packing::default())
}

/// Builds predictions from raw integers, rejecting values above 10000.
pub fn predictions_from_raw(raw: &[u32]) -> Result<Vec<ProbabilityBp>, ProtocolError> {
    raw.iter()
        .map(|&v| ProbabilityBp::new(v).map_err(|_| ProtocolError::PredictionOutOfRange(v)))
        .collect()
}
