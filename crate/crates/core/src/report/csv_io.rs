//! CSV snapshot format.
//!
//! ```text
//! # forecast-campaign v1
//! round_id,agent,market_idx,category,p_bp,b_bp,outcome,q
//! 1,truth-a,0,Crypto,6150,5870,1,0.6312084
//! ```
//!
//! The version comment is optional on input. `outcome` is `0`, `1`, or empty
//! for an unresolved market; `q` is empty when no latent probability is
//! known. Floats are written in shortest round-trip form, so reloading is
//! exact.

use std::fs;
use std::path::Path;

use super::{CampaignRecord, CampaignRow, ReportError};
use crate::scoring::{Outcome, ProbabilityBp};

pub const CSV_HEADER: [&str; 8] = ["round_id", "agent", "market_idx", "category", "p_bp", "b_bp", "outcome", "q"];
pub const CSV_VERSION: &str = "forecast-campaign v1";

pub fn to_csv_string(record: &CampaignRecord) -> Result<String, ReportError> {
    let mut out = format!("# {CSV_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(CSV_HEADER)?;
        for r in record.rows() {
            let outcome = r.outcome.value().map(|x| x.to_string()).unwrap_or_default();
            let q = r.q.map(|q| q.to_string()).unwrap_or_default();
            w.write_record([
                r.round_id.to_string().as_str(),
                &r.agent,
                &r.market_idx.to_string(),
                &r.category,
                &r.p_bp.value().to_string(),
                &r.b_bp.value().to_string(),
                &outcome,
                &q,
            ])?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

pub fn save_csv(record: &CampaignRecord, path: impl AsRef<Path>) -> Result<(), ReportError> {
    fs::write(path, to_csv_string(record)?)?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<CampaignRecord, ReportError> {
    from_csv_str(&fs::read_to_string(path)?)
}

pub fn from_csv_str(text: &str) -> Result<CampaignRecord, ReportError> {
    let (body, offset) = match text.strip_prefix('#') {
        Some(rest) => {
            let (comment, body) = rest.split_once('\n').unwrap_or((rest, ""));
            let comment = comment.trim();
            if comment != CSV_VERSION {
                return Err(ReportError::Version(comment.to_string()));
            }
            (body, 1)
        }
        None => (text, 0),
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(ReportError::Header { found: header.iter().collect::<Vec<_>>().join(",") });
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let rec = result?;
        let line = rec.position().map_or(0, |p| p.line()) + offset;
        rows.push(parse_row(&rec).map_err(|message| ReportError::Parse { line, message })?);
    }
    CampaignRecord::new(rows)
}

fn parse_row(rec: &csv::StringRecord) -> Result<CampaignRow, String> {
    let field = |i: usize| rec.get(i).unwrap_or("");
    let int = |i: usize| -> Result<u64, String> {
        field(i).parse::<u64>().map_err(|e| format!("{}: {e}: {:?}", CSV_HEADER[i], field(i)))
    };
    let bp = |i: usize| -> Result<ProbabilityBp, String> {
        let v = u32::try_from(int(i)?).map_err(|e| format!("{}: {e}", CSV_HEADER[i]))?;
        ProbabilityBp::new(v).map_err(|e| format!("{}: {e}", CSV_HEADER[i]))
    };
    let market_idx = u32::try_from(int(2)?).map_err(|e| format!("market_idx: {e}"))?;
    let outcome = match field(6) {
        "" => Outcome::Unresolved,
        "0" => Outcome::Resolved(0),
        "1" => Outcome::Resolved(1),
        other => return Err(format!("outcome must be 0, 1 or empty, got {other:?}")),
    };
    let q = match field(7) {
        "" => None,
        s => Some(s.parse::<f64>().map_err(|e| format!("q: {e}: {s:?}"))?),
    };
    Ok(CampaignRow {
        round_id: int(0)?,
        agent: field(1).to_string(),
        market_idx,
        category: field(3).to_string(),
        p_bp: bp(4)?,
        b_bp: bp(5)?,
        outcome,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
round_id,agent,market_idx,category,p_bp,b_bp,outcome,q
3,echo,0,Sports,6000,6000,1,0.625
3,echo,1,Sports,2500,2500,,
";

    #[test]
    fn parses_hand_written_fixture() {
        let rec = from_csv_str(FIXTURE).unwrap();
        let expected = vec![
            CampaignRow {
                round_id: 3,
                agent: "echo".into(),
                market_idx: 0,
                category: "Sports".into(),
                p_bp: ProbabilityBp::new(6000).unwrap(),
                b_bp: ProbabilityBp::new(6000).unwrap(),
                outcome: Outcome::Resolved(1),
                q: Some(0.625),
            },
            CampaignRow {
                round_id: 3,
                agent: "echo".into(),
                market_idx: 1,
                category: "Sports".into(),
                p_bp: ProbabilityBp::new(2500).unwrap(),
                b_bp: ProbabilityBp::new(2500).unwrap(),
                outcome: Outcome::Unresolved,
                q: None,
            },
        ];
        assert_eq!(rec.rows(), expected.as_slice());
    }

    #[test]
    fn round_trip_with_awkward_values() {
        let rec = CampaignRecord::new(vec![CampaignRow {
            round_id: u64::MAX,
            agent: "a, \"quoted\"".into(),
            market_idx: 9,
            category: "Geo politics".into(),
            p_bp: ProbabilityBp::new(10_000).unwrap(),
            b_bp: ProbabilityBp::new(0).unwrap(),
            outcome: Outcome::Resolved(0),
            q: Some(0.1 + 0.2),
        }])
        .unwrap();
        let text = to_csv_string(&rec).unwrap();
        assert!(text.starts_with("# forecast-campaign v1\nround_id,agent,market_idx,category,p_bp,b_bp,outcome,q\n"));
        assert_eq!(from_csv_str(&text).unwrap(), rec);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = format!("# {CSV_VERSION}\n{}", FIXTURE.replace("2500,2500,,", "2500,10001,,"));
        match from_csv_str(&bad) {
            Err(ReportError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("b_bp"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        match from_csv_str(&FIXTURE.replace(",1,0.625", ",2,0.625")) {
            Err(ReportError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header_version_and_duplicates() {
        assert!(matches!(from_csv_str(&FIXTURE.replace("market_idx", "market")), Err(ReportError::Header { .. })));
        assert!(matches!(from_csv_str(&format!("# other v9\n{FIXTURE}")), Err(ReportError::Version(_))));
        let dup = format!("{FIXTURE}3,echo,1,Sports,2500,2500,,\n");
        assert!(matches!(from_csv_str(&dup), Err(ReportError::DuplicateKey { .. })));
    }
}
