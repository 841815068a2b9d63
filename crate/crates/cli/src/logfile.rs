//! The `banditlog-v1` format: JSON lines, one header then one event per line.
//!
//! ```text
//! {"num_items":3,"format":"banditlog-v1"}
//! {"user_id":0,"views":[2,0,1],"action":1,"click":0,"propensity":0.3333333333333333}
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a written log
//! reproduces every propensity bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use banditfit_core::{ActionId, BanditEvent, Context, LogDataset};
use serde::{Deserialize, Serialize};

use crate::Error;

pub const FORMAT: &str = "banditlog-v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    num_items: usize,
    format: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    user_id: u64,
    views: Vec<u32>,
    action: usize,
    click: u8,
    propensity: f64,
}

pub fn write_log<W: Write>(data: &LogDataset, out: W) -> Result<(), Error> {
    fn line<W: Write, T: Serialize>(out: &mut W, value: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut *out, value)?;
        out.write_all(b"\n")
    }
    let mut out = out;
    let header = Header {
        num_items: data.num_items,
        format: FORMAT.to_owned(),
    };
    let io = |e| Error::io(Path::new("<log>"), e);
    line(&mut out, &header).map_err(io)?;
    for e in &data.events {
        let ev = EventLine {
            user_id: e.user_id,
            views: e.context.views().to_vec(),
            action: e.action.0,
            click: u8::from(e.click),
            propensity: e.propensity,
        };
        line(&mut out, &ev).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Parses and validates a log. Line numbers in errors are 1-based.
pub fn read_log<R: BufRead>(input: R) -> Result<LogDataset, Error> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, msg: String| Error::LogFormat { line, msg };
    let (_, first) = lines
        .next()
        .ok_or_else(|| bad(1, "missing header".into()))?;
    let first = first.map_err(|e| bad(1, e.to_string()))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| bad(1, e.to_string()))?;
    if header.format != FORMAT {
        return Err(bad(1, format!("unsupported format {:?}", header.format)));
    }
    let mut data = LogDataset::new(header.num_items);
    for (i, text) in lines {
        let n = i + 1;
        let text = text.map_err(|e| bad(n, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let ev: EventLine = serde_json::from_str(&text).map_err(|e| bad(n, e.to_string()))?;
        let click = match ev.click {
            0 => false,
            1 => true,
            c => return Err(bad(n, format!("click must be 0 or 1, got {c}"))),
        };
        data.events.push(BanditEvent {
            user_id: ev.user_id,
            context: Context::new(ev.views),
            action: ActionId(ev.action),
            click,
            propensity: ev.propensity,
        });
    }
    data.validate()?;
    Ok(data)
}

pub fn save_log(data: &LogDataset, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_log(data, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn load_log(path: &Path) -> Result<LogDataset, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_log(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LogDataset {
        LogDataset::with_events(
            3,
            vec![
                BanditEvent {
                    user_id: 7,
                    context: Context::new(vec![2, 0, 1]),
                    action: ActionId(2),
                    click: true,
                    propensity: 1.0 / 3.0,
                },
                BanditEvent {
                    user_id: 8,
                    context: Context::new(vec![0, 5, 0]),
                    action: ActionId(1),
                    click: false,
                    propensity: 0.1 + 0.2,
                },
            ],
        )
    }

    #[test]
    fn header_comes_first() {
        let mut buf = Vec::new();
        write_log(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"num_items":3,"format":"banditlog-v1"}"#
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let data = sample();
        let mut buf = Vec::new();
        write_log(&data, &mut buf).unwrap();
        let back = read_log(buf.as_slice()).unwrap();
        assert_eq!(back, data);
        for (a, b) in back.events.iter().zip(&data.events) {
            assert_eq!(a.propensity.to_bits(), b.propensity.to_bits());
        }
    }

    #[test]
    fn rejects_bad_click_and_wrong_format() {
        let text = "{\"num_items\":2,\"format\":\"banditlog-v1\"}\n\
                    {\"user_id\":0,\"views\":[1,0],\"action\":0,\"click\":2,\"propensity\":0.5}\n";
        let err = read_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::LogFormat { line: 2, .. }), "{err}");

        let text = "{\"num_items\":2,\"format\":\"banditlog-v0\"}\n";
        assert!(matches!(
            read_log(text.as_bytes()),
            Err(Error::LogFormat { line: 1, .. })
        ));
        assert!(matches!(
            read_log(&b""[..]),
            Err(Error::LogFormat { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_semantically_invalid_events() {
        let text = "{\"num_items\":2,\"format\":\"banditlog-v1\"}\n\
                    {\"user_id\":0,\"views\":[1,0],\"action\":3,\"click\":1,\"propensity\":0.5}\n";
        assert!(matches!(read_log(text.as_bytes()), Err(Error::Data(_))));
        let text = "{\"num_items\":2,\"format\":\"banditlog-v1\"}\n\
                    {\"user_id\":0,\"views\":[1,0],\"action\":1,\"click\":1,\"propensity\":0.0}\n";
        assert!(matches!(read_log(text.as_bytes()), Err(Error::Data(_))));
    }
}
