//! Bit-exact wire encoding.
//!
//! Header: magic "OKP1", version u8, source u16, dest u16, action u32,
//! flags u8 (bit 0 = rendezvous), payload length u64, all little-endian.
//! An inline message carries the payload bytes after the header; a rendezvous
//! message carries (region id u64, length u64) descriptors instead, the
//! payload staying behind in the sender's registered regions.

use crate::error::ParcelError;

pub const MAGIC: &[u8; 4] = b"OKP1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 2 + 2 + 4 + 1 + 8;
pub const FLAG_RENDEZVOUS: u8 = 0b1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Descriptor {
    pub region: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Inline(Vec<u8>),
    Handles {
        total_len: u64,
        descriptors: Vec<Descriptor>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parcel {
    pub source: u16,
    pub dest: u16,
    pub action: u32,
    pub body: Body,
}

impl Parcel {
    pub fn is_rendezvous(&self) -> bool {
        matches!(self.body, Body::Handles { .. })
    }

    pub fn payload_len(&self) -> u64 {
        match &self.body {
            Body::Inline(b) => b.len() as u64,
            Body::Handles { total_len, .. } => *total_len,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 32);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.source.to_le_bytes());
        out.extend_from_slice(&self.dest.to_le_bytes());
        out.extend_from_slice(&self.action.to_le_bytes());
        let flags = if self.is_rendezvous() {
            FLAG_RENDEZVOUS
        } else {
            0
        };
        out.push(flags);
        out.extend_from_slice(&self.payload_len().to_le_bytes());
        match &self.body {
            Body::Inline(b) => out.extend_from_slice(b),
            Body::Handles { descriptors, .. } => {
                for d in descriptors {
                    out.extend_from_slice(&d.region.to_le_bytes());
                    out.extend_from_slice(&d.len.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Parcel, ParcelError> {
        if buf.len() < HEADER_LEN {
            return Err(ParcelError::Malformed(format!(
                "short header: {} bytes",
                buf.len()
            )));
        }
        if &buf[0..4] != MAGIC {
            return Err(ParcelError::Malformed("bad magic".into()));
        }
        if buf[4] != VERSION {
            return Err(ParcelError::Malformed(format!(
                "version {} unsupported",
                buf[4]
            )));
        }
        let source = u16::from_le_bytes([buf[5], buf[6]]);
        let dest = u16::from_le_bytes([buf[7], buf[8]]);
        let action = u32::from_le_bytes([buf[9], buf[10], buf[11], buf[12]]);
        let flags = buf[13];
        let payload_len = u64::from_le_bytes(buf[14..22].try_into().unwrap());
        let rest = &buf[HEADER_LEN..];
        let body = if flags & FLAG_RENDEZVOUS != 0 {
            if rest.len() % 16 != 0 {
                return Err(ParcelError::Malformed(
                    "descriptor block not a multiple of 16".into(),
                ));
            }
            let descriptors = rest
                .chunks_exact(16)
                .map(|c| Descriptor {
                    region: u64::from_le_bytes(c[0..8].try_into().unwrap()),
                    len: u64::from_le_bytes(c[8..16].try_into().unwrap()),
                })
                .collect();
            Body::Handles {
                total_len: payload_len,
                descriptors,
            }
        } else {
            if rest.len() as u64 != payload_len {
                return Err(ParcelError::Malformed(format!(
                    "payload length {} but {} bytes follow",
                    payload_len,
                    rest.len()
                )));
            }
            Body::Inline(rest.to_vec())
        };
        Ok(Parcel {
            source,
            dest,
            action,
            body,
        })
    }
}
