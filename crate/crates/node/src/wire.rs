//! Framed messages between the client and the servers.
//!
//! ```text
//! len:u32  kind:u8  params_hash:[u8; 8]  payload:u64 * m
//! ```
//!
//! `len` counts the bytes after the prefix. Payloads are field symbols only;
//! the target file index never appears in a frame.

use pmpir_core::pm_codes::CodeParams;
use sha2::{Digest, Sha256};

use crate::error::{SimError, SimResult};

const BODY_HEADER: usize = 1 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Query = 1,
    Response = 2,
    RepairReq = 3,
    RepairSym = 4,
}

impl Kind {
    fn from_u8(b: u8) -> Option<Self> {
        match b {
            1 => Some(Kind::Query),
            2 => Some(Kind::Response),
            3 => Some(Kind::RepairReq),
            4 => Some(Kind::RepairSym),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMessage {
    pub kind: Kind,
    pub params_hash: [u8; 8],
    pub payload: Vec<u64>,
}

/// First 8 bytes of SHA-256 over the public parameters.
pub fn params_hash(params: &CodeParams) -> [u8; 8] {
    let g = params.geometry;
    let mut h = Sha256::new();
    h.update([g.family.code()]);
    for v in [g.n as u64, g.k as u64, g.d as u64, params.field.modulus()] {
        h.update(v.to_le_bytes());
    }
    for x in params.points().as_slice() {
        h.update(x.value().to_le_bytes());
    }
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

impl WireMessage {
    pub fn new(kind: Kind, params_hash: [u8; 8], payload: Vec<u64>) -> Self {
        WireMessage {
            kind,
            params_hash,
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = BODY_HEADER + 8 * self.payload.len();
        let mut out = Vec::with_capacity(4 + body);
        out.extend_from_slice(&(body as u32).to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.params_hash);
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> SimResult<Self> {
        let bad = |m: String| Err(SimError::MalformedFrame(m));
        if bytes.len() < 4 {
            return bad(format!("{} bytes, need a 4-byte length prefix", bytes.len()));
        }
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let body = &bytes[4..];
        if body.len() != len {
            return bad(format!("length prefix {len}, body has {} bytes", body.len()));
        }
        if len < BODY_HEADER || !(len - BODY_HEADER).is_multiple_of(8) {
            return bad(format!("body length {len} is not 9 + 8m"));
        }
        let Some(kind) = Kind::from_u8(body[0]) else {
            return bad(format!("unknown kind {}", body[0]));
        };
        let params_hash = body[1..9].try_into().unwrap();
        let payload = body[BODY_HEADER..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(WireMessage {
            kind,
            params_hash,
            payload,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_each_kind() {
        for kind in [Kind::Query, Kind::Response, Kind::RepairReq, Kind::RepairSym] {
            let m = WireMessage::new(kind, [1, 2, 3, 4, 5, 6, 7, 8], vec![0, 1, u64::MAX]);
            assert_eq!(WireMessage::decode(&m.encode()).unwrap(), m);
        }
        let empty = WireMessage::new(Kind::Query, [0; 8], vec![]);
        assert_eq!(WireMessage::decode(&empty.encode()).unwrap(), empty);
    }

    #[test]
    fn truncated_and_bad_frames() {
        let bytes = WireMessage::new(Kind::Response, [9; 8], vec![5, 6]).encode();
        for cut in 0..bytes.len() {
            assert!(matches!(
                WireMessage::decode(&bytes[..cut]),
                Err(SimError::MalformedFrame(_))
            ));
        }
        let mut bad_kind = bytes.clone();
        bad_kind[4] = 0;
        assert!(WireMessage::decode(&bad_kind).is_err());
        let mut bad_len = bytes;
        bad_len[0] ^= 1;
        assert!(WireMessage::decode(&bad_len).is_err());
    }
}
