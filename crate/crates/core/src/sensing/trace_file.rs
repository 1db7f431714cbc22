//! On-disk channel traces.
//!
//! Packed layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CHTR"
//!      4     2  version (1)
//!      6     4  channel_id (u32)
//!     10     8  delta in seconds (f64)
//!     18     8  slot count (u64)
//!     26     *  ceil(count / 8) bytes; slot k is bit (k % 8) of byte k / 8
//! ```
//!
//! Text layout: a header line `# delta=<seconds> length=<n> channel=<id>`
//! followed by one `0` or `1` per line.

use std::io::{BufRead, Read, Write};

use super::ChannelTrace;
use crate::error::{Error, Result};

pub const TRACE_MAGIC: &[u8; 4] = b"CHTR";
const TRACE_VERSION: u16 = 1;
const HEADER_LEN: usize = 26;

pub fn write_packed<W: Write>(trace: &ChannelTrace, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + trace.len().div_ceil(8));
    buf.extend_from_slice(TRACE_MAGIC);
    buf.extend_from_slice(&TRACE_VERSION.to_le_bytes());
    buf.extend_from_slice(&trace.channel_id.to_le_bytes());
    buf.extend_from_slice(&trace.delta.to_le_bytes());
    buf.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    for chunk in trace.slots.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (bit, &s)| acc | (s << bit));
        buf.push(byte);
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_packed<R: Read>(mut input: R) -> Result<ChannelTrace> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedTrace(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != TRACE_MAGIC {
        return Err(Error::MalformedTrace("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TRACE_VERSION {
        return Err(Error::MalformedTrace(format!(
            "unsupported version {version}"
        )));
    }
    let channel_id = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let delta = f64::from_le_bytes(bytes[10..18].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[18..26].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count.div_ceil(8) {
        return Err(Error::MalformedTrace(format!(
            "expected {} payload bytes for {count} slots, found {}",
            count.div_ceil(8),
            body.len()
        )));
    }
    let slots = (0..count).map(|k| (body[k / 8] >> (k % 8)) & 1).collect();
    ChannelTrace::new(slots, delta, channel_id)
}

pub fn write_text<W: Write>(trace: &ChannelTrace, mut out: W) -> Result<()> {
    let mut buf = format!(
        "# delta={} length={} channel={}\n",
        trace.delta,
        trace.len(),
        trace.channel_id
    )
    .into_bytes();
    buf.reserve(trace.len() * 2);
    for &s in &trace.slots {
        buf.push(b'0' + s);
        buf.push(b'\n');
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<ChannelTrace> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedTrace("empty file".into()))??;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::MalformedTrace("missing `#` header line".into()))?;

    let (mut delta, mut length, mut channel) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::MalformedTrace(format!("bad header field `{field}`")))?;
        let bad = || Error::MalformedTrace(format!("bad value in `{field}`"));
        match key {
            "delta" => delta = Some(value.parse::<f64>().map_err(|_| bad())?),
            "length" => length = Some(value.parse::<usize>().map_err(|_| bad())?),
            "channel" => channel = Some(value.parse::<u32>().map_err(|_| bad())?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::MalformedTrace(format!("header lacks `{k}`"));
    let delta = delta.ok_or_else(|| missing("delta"))?;
    let length = length.ok_or_else(|| missing("length"))?;
    let channel = channel.ok_or_else(|| missing("channel"))?;

    let mut slots = Vec::with_capacity(length);
    for (i, line) in lines.enumerate() {
        let line = line?;
        match line.trim() {
            "0" => slots.push(0),
            "1" => slots.push(1),
            "" => continue,
            other => {
                return Err(Error::MalformedTrace(format!(
                    "line {}: `{other}` is not a slot value",
                    i + 2
                )))
            }
        }
    }
    if slots.len() != length {
        return Err(Error::MalformedTrace(format!(
            "header says {length} slots, found {}",
            slots.len()
        )));
    }
    ChannelTrace::new(slots, delta, channel)
}
