//! Node-store files: one `node_<i>.bin` per server (1-based).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PMPR"  version:u16  family:u8  q n k d F S:u64
//! symbols:u64 * (F * S * alpha), ordered (file, stripe, column)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pmpir_core::pm_codes::{validate_params, CodeParams, Family, Geometry, NodeStore};
use pmpir_core::{Elem, Field};

use crate::error::{SimError, SimResult};

pub const MAGIC: &[u8; 4] = b"PMPR";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 6 * 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeHeader {
    pub family: Family,
    pub q: u64,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub files: usize,
    pub stripes: usize,
}

impl NodeHeader {
    pub fn new(params: &CodeParams, files: usize) -> Self {
        let g = params.geometry;
        NodeHeader {
            family: g.family,
            q: params.field.modulus(),
            n: g.n,
            k: g.k,
            d: g.d,
            files,
            stripes: g.stripes(),
        }
    }

    pub fn params(&self) -> SimResult<CodeParams> {
        Ok(validate_params(self.family, self.n, self.k, self.d, self.q)?)
    }

    pub fn geometry(&self) -> SimResult<Geometry> {
        Ok(Geometry::new(self.family, self.n, self.k, self.d)?)
    }

    fn to_bytes(self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.family.code());
        for v in [
            self.q,
            self.n as u64,
            self.k as u64,
            self.d as u64,
            self.files as u64,
            self.stripes as u64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn parse(bytes: &[u8]) -> SimResult<Self> {
        let corrupt = |m: &str| SimError::CorruptStore(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(corrupt("file shorter than header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let family = Family::from_code(bytes[6]).ok_or_else(|| corrupt("unknown family"))?;
        let mut words = bytes[7..HEADER_LEN]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()));
        let mut next = || words.next().unwrap();
        let q = next();
        let mut small = || usize::try_from(next()).map_err(|_| corrupt("header field overflows"));
        Ok(NodeHeader {
            family,
            q,
            n: small()?,
            k: small()?,
            d: small()?,
            files: small()?,
            stripes: small()?,
        })
    }
}

pub fn node_path(dir: &Path, server: usize) -> PathBuf {
    dir.join(format!("node_{}.bin", server + 1))
}

pub fn encode_node(header: &NodeHeader, symbols: &[Elem]) -> Vec<u8> {
    let mut out = header.to_bytes();
    out.reserve(symbols.len() * 8);
    for s in symbols {
        out.extend_from_slice(&s.value().to_le_bytes());
    }
    out
}

/// Parses one node file and checks its length against the header.
pub fn decode_node(bytes: &[u8]) -> SimResult<(NodeHeader, Vec<Elem>)> {
    let header = NodeHeader::parse(bytes)?;
    let g = header.geometry()?;
    if g.stripes() != header.stripes {
        return Err(SimError::CorruptStore("stripe count disagrees with geometry".into()));
    }
    let expected = g.share_len(header.files);
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected * 8 {
        return Err(SimError::CorruptStore(format!(
            "expected {expected} symbols, found {} bytes",
            body.len()
        )));
    }
    let field = Field::new(header.q)?;
    let mut symbols = Vec::with_capacity(expected);
    for c in body.chunks_exact(8) {
        let v = u64::from_le_bytes(c.try_into().unwrap());
        if v >= header.q {
            return Err(SimError::CorruptStore(format!("symbol {v} not reduced mod {}", header.q)));
        }
        symbols.push(field.elem(v));
    }
    Ok((header, symbols))
}

pub fn write_store(dir: &Path, params: &CodeParams, store: &NodeStore) -> SimResult<()> {
    fs::create_dir_all(dir)?;
    let header = NodeHeader::new(params, store.files());
    for (i, share) in store.shares().iter().enumerate() {
        let mut f = fs::File::create(node_path(dir, i))?;
        f.write_all(&encode_node(&header, share))?;
    }
    Ok(())
}

/// Reads every node file of a store. All headers must agree.
pub fn read_store(dir: &Path) -> SimResult<(CodeParams, NodeStore)> {
    let first = fs::read(node_path(dir, 0)).map_err(|e| {
        SimError::CorruptStore(format!("{}: {e}", node_path(dir, 0).display()))
    })?;
    let (header, share0) = decode_node(&first)?;
    let mut shares = vec![share0];
    for i in 1..header.n {
        let path = node_path(dir, i);
        let bytes = fs::read(&path)
            .map_err(|e| SimError::CorruptStore(format!("{}: {e}", path.display())))?;
        let (h, share) = decode_node(&bytes)?;
        if h != header {
            return Err(SimError::HeaderMismatch(format!(
                "{} disagrees with node_1.bin",
                path.display()
            )));
        }
        shares.push(share);
    }
    let params = header.params()?;
    let store = NodeStore::from_shares(params.geometry, header.files, shares)?;
    Ok((params, store))
}

/// Raw symbol files: a flat sequence of u64 LE values.
pub fn read_symbols(path: &Path, field: Field) -> SimResult<Vec<Elem>> {
    let q = field.modulus();
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(SimError::CorruptStore(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(8)
        .map(|c| {
            let v = u64::from_le_bytes(c.try_into().unwrap());
            if v >= q {
                Err(SimError::CorruptStore(format!("symbol {v} not reduced mod {q}")))
            } else {
                Ok(field.elem(v))
            }
        })
        .collect()
}

pub fn write_symbols(path: &Path, symbols: &[Elem]) -> SimResult<()> {
    let bytes: Vec<u8> = symbols.iter().flat_map(|s| s.value().to_le_bytes()).collect();
    fs::write(path, bytes)?;
    Ok(())
}
