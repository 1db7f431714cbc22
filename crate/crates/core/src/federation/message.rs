//! Broadcast packet carrying a node's local parameters.
//!
//! Wire and file layout, little-endian throughout:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "P2FL"
//!      4     2  version (1)
//!      6     4  node_id (u32)
//!     10     4  channel_id (u32)
//!     14     2  m, input dimension (u16)
//!     16     2  P, first-layer units (u16)
//!     18     2  Q, second-layer units (u16)
//!     20     4  param_count (u32)
//!     24  4·n   parameters as f32, in ParamVector order
//! ```
//!
//! The dense head always has two outputs, so the header does not carry it.

use crate::error::{Error, Result};
use crate::neuralnet::{Architecture, ParamVector};

pub const MESSAGE_MAGIC: &[u8; 4] = b"P2FL";
pub const MESSAGE_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMessage {
    pub node_id: u32,
    pub channel_id: u32,
    pub arch: Architecture,
    payload: Vec<f32>,
}

impl ModelMessage {
    /// Quantizes `params` to 32-bit floats.
    pub fn new(node_id: u32, channel_id: u32, params: &ParamVector) -> Result<Self> {
        let arch = params.arch();
        check_header_arch(&arch)?;
        let payload: Vec<f32> = params.values().iter().map(|&v| v as f32).collect();
        if payload.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameter overflows 32-bit float"));
        }
        Ok(ModelMessage {
            node_id,
            channel_id,
            arch,
            payload,
        })
    }

    pub fn param_count(&self) -> usize {
        self.payload.len()
    }

    pub fn payload(&self) -> &[f32] {
        &self.payload
    }

    pub fn payload_bytes(&self) -> usize {
        self.payload.len() * 4
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload_bytes()
    }

    /// Parameters widened back to 64-bit.
    pub fn params(&self) -> ParamVector {
        let values = self.payload.iter().map(|&v| f64::from(v)).collect();
        ParamVector::new(self.arch, values).expect("payload length checked at construction")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_len());
        buf.extend_from_slice(MESSAGE_MAGIC);
        buf.extend_from_slice(&MESSAGE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.node_id.to_le_bytes());
        buf.extend_from_slice(&self.channel_id.to_le_bytes());
        for dim in [self.arch.input_dim, self.arch.p_units, self.arch.q_units] {
            buf.extend_from_slice(&(dim as u16).to_le_bytes());
        }
        buf.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        for v in &self.payload {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::MalformedMessage(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MESSAGE_MAGIC {
            return Err(Error::MalformedMessage("bad magic".into()));
        }
        let u16_at = |at: usize| u16::from_le_bytes([bytes[at], bytes[at + 1]]);
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());

        let version = u16_at(4);
        if version != MESSAGE_VERSION {
            return Err(Error::MalformedMessage(format!(
                "unsupported version {version}"
            )));
        }
        let node_id = u32_at(6);
        let channel_id = u32_at(10);
        let arch = Architecture::new(
            usize::from(u16_at(14)),
            usize::from(u16_at(16)),
            usize::from(u16_at(18)),
        );
        arch.validate()
            .map_err(|e| Error::MalformedMessage(e.to_string()))?;
        let count = u32_at(20) as usize;
        if count != arch.param_count() {
            return Err(Error::MalformedMessage(format!(
                "param_count {count} does not match architecture ({})",
                arch.param_count()
            )));
        }
        let body = &bytes[HEADER_LEN..];
        if body.len() != count * 4 {
            return Err(Error::MalformedMessage(format!(
                "expected {} payload bytes, found {}",
                count * 4,
                body.len()
            )));
        }
        let payload: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if payload.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedMessage("non-finite parameter".into()));
        }
        Ok(ModelMessage {
            node_id,
            channel_id,
            arch,
            payload,
        })
    }
}

fn check_header_arch(arch: &Architecture) -> Result<()> {
    arch.validate()?;
    if arch.output_dim != 2 {
        return Err(Error::ArchitectureMismatch(format!(
            "wire format fixes two outputs, got {}",
            arch.output_dim
        )));
    }
    let max = usize::from(u16::MAX);
    if arch.input_dim > max || arch.p_units > max || arch.q_units > max {
        return Err(Error::ArchitectureMismatch(format!(
            "dimensions exceed 16 bits: {arch:?}"
        )));
    }
    Ok(())
}

/// Encodes `params` as a broadcast packet from `node_id` on `channel_id`.
pub fn serialize(node_id: u32, channel_id: u32, params: &ParamVector) -> Result<Vec<u8>> {
    Ok(ModelMessage::new(node_id, channel_id, params)?.to_bytes())
}

pub fn deserialize(bytes: &[u8]) -> Result<ModelMessage> {
    ModelMessage::from_bytes(bytes)
}
