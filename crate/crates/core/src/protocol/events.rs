//! Round event log.
//!
//! One event per line, four space-separated fields:
//!
//! ```text
//! <kind> <round_id: 64 hex> <agent: 40 hex | -> <payload: hex | ->
//! ```
//!
//! Lines starting with `#` are comments. Payload integers are big-endian;
//! `at` is the logical timestamp of the call.
//!
//! | kind         | payload                                                          |
//! |--------------|------------------------------------------------------------------|
//! | `create`     | commit_deadline u64, reveal_deadline u64, packing u8 (0 = LE, 1 = BE), count u16, then per market: id u64, label_len u8, label bytes |
//! | `open`       | empty                                                            |
//! | `commit`     | at u64, nonce u64, hash 32 bytes                                 |
//! | `benchmarks` | at u64, count u16, count × u16 bp                                |
//! | `reveal`     | at u64, count u16, count × u16 bp, salt 32 bytes                 |
//! | `outcomes`   | at u64, count u16, count × (numerator0 u64, numerator1 u64, denominator u64) |
//! | `score`      | empty                                                            |

use std::fmt::Write as _;

use super::{AgentId, Market, Packing, PayoutReport, ProtocolError, RoundId, Timestamp};
use crate::scoring::ProbabilityBp;

pub const EVENT_LOG_HEADER: &str = "# round event log v1: kind round_id agent payload";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Event {
    Create {
        round_id: RoundId,
        commit_deadline: Timestamp,
        reveal_deadline: Timestamp,
        packing: Packing,
        markets: Vec<Market>,
    },
    OpenCommits,
    Commit { agent: AgentId, hash: [u8; 32], nonce: u64, at: Timestamp },
    Benchmarks { prices: Vec<ProbabilityBp>, at: Timestamp },
    Reveal { agent: AgentId, predictions: Vec<ProbabilityBp>, salt: [u8; 32], at: Timestamp },
    Outcomes { reports: Vec<PayoutReport>, at: Timestamp },
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Create,
    Open,
    Commit,
    Benchmarks,
    Reveal,
    Outcomes,
    Score,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Create => "create",
            EventKind::Open => "open",
            EventKind::Commit => "commit",
            EventKind::Benchmarks => "benchmarks",
            EventKind::Reveal => "reveal",
            EventKind::Outcomes => "outcomes",
            EventKind::Score => "score",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "create" => EventKind::Create,
            "open" => EventKind::Open,
            "commit" => EventKind::Commit,
            "benchmarks" => EventKind::Benchmarks,
            "reveal" => EventKind::Reveal,
            "outcomes" => EventKind::Outcomes,
            "score" => EventKind::Score,
            _ => return None,
        })
    }
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::Create { .. } => EventKind::Create,
            Event::OpenCommits => EventKind::Open,
            Event::Commit { .. } => EventKind::Commit,
            Event::Benchmarks { .. } => EventKind::Benchmarks,
            Event::Reveal { .. } => EventKind::Reveal,
            Event::Outcomes { .. } => EventKind::Outcomes,
            Event::Score => EventKind::Score,
        }
    }

    fn agent(&self) -> Option<AgentId> {
        match self {
            Event::Commit { agent, .. } | Event::Reveal { agent, .. } => Some(*agent),
            _ => None,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Event::Create { commit_deadline, reveal_deadline, packing, markets, .. } => {
                out.extend_from_slice(&commit_deadline.to_be_bytes());
                out.extend_from_slice(&reveal_deadline.to_be_bytes());
                out.push(match packing {
                    Packing::LittleEndian => 0,
                    Packing::BigEndian => 1,
                });
                out.extend_from_slice(&(markets.len() as u16).to_be_bytes());
                for m in markets {
                    out.extend_from_slice(&m.id.to_be_bytes());
                    let label = m.category.as_bytes();
                    out.push(label.len() as u8);
                    out.extend_from_slice(label);
                }
            }
            Event::OpenCommits | Event::Score => {}
            Event::Commit { hash, nonce, at, .. } => {
                out.extend_from_slice(&at.to_be_bytes());
                out.extend_from_slice(&nonce.to_be_bytes());
                out.extend_from_slice(hash);
            }
            Event::Benchmarks { prices, at } => {
                out.extend_from_slice(&at.to_be_bytes());
                push_bps(&mut out, prices);
            }
            Event::Reveal { predictions, salt, at, .. } => {
                out.extend_from_slice(&at.to_be_bytes());
                push_bps(&mut out, predictions);
                out.extend_from_slice(salt);
            }
            Event::Outcomes { reports, at } => {
                out.extend_from_slice(&at.to_be_bytes());
                out.extend_from_slice(&(reports.len() as u16).to_be_bytes());
                for r in reports {
                    out.extend_from_slice(&r.numerators[0].to_be_bytes());
                    out.extend_from_slice(&r.numerators[1].to_be_bytes());
                    out.extend_from_slice(&r.denominator.to_be_bytes());
                }
            }
        }
        out
    }

    /// Encodes the event as one log line (no trailing newline).
    pub fn to_line(&self, round_id: &RoundId) -> String {
        let agent = self.agent().map_or_else(|| "-".to_string(), |a| a.to_string());
        let payload = self.payload();
        let payload = if payload.is_empty() { "-".to_string() } else { hex::encode(payload) };
        format!("{} {} {} {}", self.kind().name(), round_id, agent, payload)
    }

    /// Decodes one log line into its round id and event.
    pub fn from_line(line: &str) -> Result<(RoundId, Event), ProtocolError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [kind, round, agent, payload] = fields[..] else {
            return Err(ProtocolError::Decode(format!("expected 4 fields, got {}", fields.len())));
        };
        let kind = EventKind::parse(kind).ok_or_else(|| ProtocolError::Decode(format!("unknown kind {kind:?}")))?;
        let round_id: RoundId = round.parse()?;
        let agent: Option<AgentId> = if agent == "-" { None } else { Some(agent.parse()?) };
        let bytes = if payload == "-" {
            Vec::new()
        } else {
            hex::decode(payload).map_err(|e| ProtocolError::Decode(format!("payload: {e}")))?
        };
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        let need_agent = || agent.ok_or_else(|| ProtocolError::Decode(format!("{} event needs an agent", kind.name())));
        let event = match kind {
            EventKind::Create => {
                let commit_deadline = cur.u64()?;
                let reveal_deadline = cur.u64()?;
                let packing = match cur.u8()? {
                    0 => Packing::LittleEndian,
                    1 => Packing::BigEndian,
                    other => return Err(ProtocolError::Decode(format!("unknown packing {other}"))),
                };
                let count = cur.u16()? as usize;
                let mut markets = Vec::with_capacity(count);
                for _ in 0..count {
                    let id = cur.u64()?;
                    let len = cur.u8()? as usize;
                    let label = std::str::from_utf8(cur.take(len)?)
                        .map_err(|e| ProtocolError::Decode(format!("category label: {e}")))?;
                    markets.push(Market { id, category: label.to_string() });
                }
                Event::Create { round_id, commit_deadline, reveal_deadline, packing, markets }
            }
            EventKind::Open => Event::OpenCommits,
            EventKind::Commit => {
                let at = cur.u64()?;
                let nonce = cur.u64()?;
                let hash = cur.bytes32()?;
                Event::Commit { agent: need_agent()?, hash, nonce, at }
            }
            EventKind::Benchmarks => {
                let at = cur.u64()?;
                Event::Benchmarks { prices: cur.bps()?, at }
            }
            EventKind::Reveal => {
                let at = cur.u64()?;
                let predictions = cur.bps()?;
                let salt = cur.bytes32()?;
                Event::Reveal { agent: need_agent()?, predictions, salt, at }
            }
            EventKind::Outcomes => {
                let at = cur.u64()?;
                let count = cur.u16()? as usize;
                let mut reports = Vec::with_capacity(count);
                for _ in 0..count {
                    let n0 = cur.u64()?;
                    let n1 = cur.u64()?;
                    let denominator = cur.u64()?;
                    reports.push(PayoutReport { numerators: [n0, n1], denominator });
                }
                Event::Outcomes { reports, at }
            }
            EventKind::Score => Event::Score,
        };
        if cur.pos != bytes.len() {
            return Err(ProtocolError::Decode(format!("{} trailing payload bytes", bytes.len() - cur.pos)));
        }
        Ok((round_id, event))
    }
}

fn push_bps(out: &mut Vec<u8>, values: &[ProbabilityBp]) {
    out.extend_from_slice(&(values.len() as u16).to_be_bytes());
    for v in values {
        out.extend_from_slice(&v.value().to_be_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| ProtocolError::Decode("payload truncated".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes32(&mut self) -> Result<[u8; 32], ProtocolError> {
        Ok(self.take(32)?.try_into().expect("32 bytes"))
    }

    fn bps(&mut self) -> Result<Vec<ProbabilityBp>, ProtocolError> {
        let count = self.u16()? as usize;
        (0..count)
            .map(|_| {
                let v = u32::from(self.u16()?);
                ProbabilityBp::new(v).map_err(|_| ProtocolError::PredictionOutOfRange(v))
            })
            .collect()
    }
}

/// Serializes one round's events. The round id comes from the leading
/// create event.
pub fn write_event_log(events: &[Event]) -> String {
    let round_id = match events.first() {
        Some(Event::Create { round_id, .. }) => *round_id,
        _ => RoundId::default(),
    };
    let mut out = String::new();
    writeln!(out, "{EVENT_LOG_HEADER}").expect("write to string");
    for e in events {
        writeln!(out, "{}", e.to_line(&round_id)).expect("write to string");
    }
    out
}

/// Parses every event line, keeping the round id of each.
pub fn parse_event_lines(text: &str) -> Result<Vec<(RoundId, Event)>, ProtocolError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| Event::from_line(l).map_err(|e| ProtocolError::Decode(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Parses a single-round log; all lines must share one round id.
pub fn parse_event_log(text: &str) -> Result<Vec<Event>, ProtocolError> {
    let lines = parse_event_lines(text)?;
    let Some((first, _)) = lines.first() else {
        return Ok(Vec::new());
    };
    let first = *first;
    lines
        .into_iter()
        .map(|(id, e)| {
            if id != first {
                return Err(ProtocolError::Decode(format!("mixed round ids {first} and {id}")));
            }
            Ok(e)
        })
        .collect()
}
