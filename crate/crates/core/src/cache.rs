//! On-disk cache of C / C-hat coefficient tables.
//!
//! File layout: a header of `key value` lines ending with `---`, then a binary body with one
//! record per nonzero coefficient: the packed index (u128, little endian), a u16 whose top bit is
//! the sign and whose low 15 bits are the byte count, and the magnitude in little-endian bytes. Records appear in increasing index order. The
//! header records a sha256 of the body; files that fail any check are reported, removed and
//! recomputed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, Sign};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::series::{MultiSeries, TruncationBox};

const MAGIC: &str = "hyperbounds-series v1";
const EXT: &str = "hbs";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesKind {
    C,
    CHat,
    /// r-independent bucket sums of I0, indexed by |k|, followed by the C table size
    Sums,
}

impl SeriesKind {
    fn tag(self) -> &'static str {
        match self {
            SeriesKind::C => "C",
            SeriesKind::CHat => "Chat",
            SeriesKind::Sums => "S",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "C" => Some(SeriesKind::C),
            "Chat" => Some(SeriesKind::CHat),
            "S" => Some(SeriesKind::Sums),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CacheEntry {
    pub file: String,
    pub kind: String,
    pub n: usize,
    pub caps: Vec<u32>,
    pub total: Option<u32>,
    pub terms: usize,
    pub bytes: u64,
    pub sha256: String,
    pub valid: bool,
}

#[derive(Clone, Debug)]
pub struct SeriesCache {
    dir: PathBuf,
}

fn caps_string(caps: &[u32]) -> String {
    caps.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn total_string(t: Option<u32>) -> String {
    t.map_or("none".to_string(), |t| t.to_string())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Binary body, one record per nonzero coefficient in index order.
pub fn encode_body(s: &MultiSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len() * 28);
    for (key, c) in s.packed_terms() {
        let (sign, bytes) = c.to_bytes_le();
        let neg = if sign == Sign::Minus { 0x8000u16 } else { 0 };
        out.extend_from_slice(&key.to_le_bytes());
        out.extend_from_slice(&(bytes.len() as u16 | neg).to_le_bytes());
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn decode_body(body: &[u8], bx: &TruncationBox) -> Result<MultiSeries> {
    let corrupt = |reason: String| Error::CacheCorrupt { path: String::new(), reason };
    let mut terms: Vec<(u128, BigInt)> = Vec::with_capacity(body.len() / 20);
    let mut pos = 0;
    while pos < body.len() {
        let rec = terms.len() + 1;
        let head = body.get(pos..pos + 18).ok_or_else(|| corrupt(format!("record {rec}: truncated")))?;
        let key = u128::from_le_bytes(head[..16].try_into().expect("16 bytes"));
        let word = u16::from_le_bytes([head[16], head[17]]);
        let len = (word & 0x7fff) as usize;
        let sign = if word & 0x8000 != 0 { Sign::Minus } else { Sign::Plus };
        let bytes = body.get(pos + 18..pos + 18 + len).ok_or_else(|| corrupt(format!("record {rec}: truncated")))?;
        pos += 18 + len;
        if terms.last().is_some_and(|(k, _)| *k >= key) {
            return Err(corrupt(format!("record {rec}: indices out of order")));
        }
        if !bx.admits_packed(key) {
            return Err(corrupt(format!("record {rec}: index outside the box")));
        }
        if bytes.iter().all(|&b| b == 0) {
            return Err(corrupt(format!("record {rec}: zero coefficient")));
        }
        terms.push((key, BigInt::from_bytes_le(sign, bytes)));
    }
    Ok(MultiSeries::from_sorted_unchecked(bx.clone(), terms))
}

struct Header {
    kind: SeriesKind,
    n: usize,
    caps: Vec<u32>,
    total: Option<u32>,
    terms: usize,
    sha256: String,
}

fn split_file(bytes: &[u8]) -> std::result::Result<(Header, &[u8]), String> {
    const END: &[u8] = b"---\n";
    let at = bytes.windows(END.len()).position(|w| w == END).ok_or("missing header terminator")?;
    let head = std::str::from_utf8(&bytes[..at]).map_err(|_| "header is not text")?;
    let body = &bytes[at + END.len()..];
    let mut lines = head.lines();
    if lines.next() != Some(MAGIC) {
        return Err("unknown format tag".into());
    }
    let mut kind = None;
    let mut n = None;
    let mut caps = None;
    let mut total = None;
    let mut terms = None;
    let mut sha = None;
    for line in lines {
        let (key, val) = line.split_once(' ').ok_or("malformed header line")?;
        match key {
            "kind" => kind = SeriesKind::parse(val),
            "n" => n = val.parse().ok(),
            "caps" => {
                caps = if val.is_empty() {
                    Some(Vec::new())
                } else {
                    val.split(',').map(|c| c.parse().ok()).collect::<Option<Vec<u32>>>()
                }
            }
            "total" => total = if val == "none" { Some(None) } else { val.parse().ok().map(Some) },
            "terms" => terms = val.parse().ok(),
            "sha256" => sha = Some(val.to_string()),
            _ => {}
        }
    }
    let h = Header {
        kind: kind.ok_or("missing kind")?,
        n: n.ok_or("missing n")?,
        caps: caps.ok_or("missing caps")?,
        total: total.ok_or("missing total")?,
        terms: terms.ok_or("missing terms")?,
        sha256: sha.ok_or("missing checksum")?,
    };
    Ok((h, body))
}

impl SeriesCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SeriesCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, kind: SeriesKind, n: usize, bx: &TruncationBox) -> PathBuf {
        let caps = bx.caps().iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-");
        self.dir.join(format!("{}_n{}_caps{}_total{}.{EXT}", kind.tag(), n, caps, total_string(bx.total_cap())))
    }

    /// Reads a cached table. Missing files give `Ok(None)`; damaged ones are logged,
    /// deleted and also give `Ok(None)`.
    pub fn load(&self, kind: SeriesKind, n: usize, bx: &TruncationBox) -> Result<Option<MultiSeries>> {
        let path = self.path_for(kind, n, bx);
        let text = match fs::read(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                log::warn!("cache file {} unreadable ({e}); recomputing", path.display());
                let _ = fs::remove_file(&path);
                return Ok(None);
            }
        };
        match Self::decode(&text, kind, n, bx) {
            Ok(s) => Ok(Some(s)),
            Err(reason) => {
                log::warn!("cache file {} rejected: {reason}; recomputing", path.display());
                let _ = fs::remove_file(&path);
                Ok(None)
            }
        }
    }

    fn decode(text: &[u8], kind: SeriesKind, n: usize, bx: &TruncationBox) -> std::result::Result<MultiSeries, String> {
        let (h, body) = split_file(text)?;
        if h.kind != kind || h.n != n || h.caps != bx.caps() || h.total != bx.total_cap() {
            return Err("header does not match the requested table".into());
        }
        let digest = hex(&Sha256::digest(body));
        if digest != h.sha256 {
            return Err("checksum mismatch".into());
        }
        let s = decode_body(body, bx).map_err(|e| e.to_string())?;
        if s.len() != h.terms {
            return Err("term count mismatch".into());
        }
        Ok(s)
    }

    /// Writes a table atomically (temporary file in the cache directory, then rename).
    pub fn store(&self, kind: SeriesKind, n: usize, s: &MultiSeries) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let bx = s.truncation();
        let body = encode_body(s);
        let digest = hex(&Sha256::digest(&body));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        write!(
            tmp,
            "{MAGIC}\nkind {}\nn {}\nn_vars {}\ncaps {}\ntotal {}\nterms {}\nsha256 {}\n---\n",
            kind.tag(),
            n,
            bx.n_vars(),
            caps_string(bx.caps()),
            total_string(bx.total_cap()),
            s.len(),
            digest,
        )?;
        tmp.write_all(&body)?;
        tmp.flush()?;
        let path = self.path_for(kind, n, bx);
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        Ok(path)
    }

    /// Cached table if valid, otherwise `build()` followed by a store.
    pub fn get_or_build(
        &self,
        kind: SeriesKind,
        n: usize,
        bx: &TruncationBox,
        build: impl FnOnce() -> Result<MultiSeries>,
    ) -> Result<(MultiSeries, bool)> {
        if let Some(s) = self.load(kind, n, bx)? {
            return Ok((s, true));
        }
        let s = build()?;
        if let Err(e) = self.store(kind, n, &s) {
            log::warn!("could not write cache entry: {e}");
        }
        Ok((s, false))
    }

    pub fn entries(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        for ent in rd {
            let ent = ent?;
            let path = ent.path();
            if path.extension().and_then(|e| e.to_str()) != Some(EXT) {
                continue;
            }
            let bytes = ent.metadata()?.len();
            let file = path.file_name().unwrap().to_string_lossy().into_owned();
            let text = fs::read(&path).unwrap_or_default();
            let entry = match split_file(&text) {
                Ok((h, body)) => {
                    let valid = hex(&Sha256::digest(body)) == h.sha256;
                    CacheEntry {
                        file,
                        kind: h.kind.tag().into(),
                        n: h.n,
                        caps: h.caps,
                        total: h.total,
                        terms: h.terms,
                        bytes,
                        sha256: h.sha256,
                        valid,
                    }
                }
                Err(_) => CacheEntry {
                    file,
                    kind: "?".into(),
                    n: 0,
                    caps: Vec::new(),
                    total: None,
                    terms: 0,
                    bytes,
                    sha256: String::new(),
                    valid: false,
                },
            };
            out.push(entry);
        }
        out.sort_by(|a, b| a.file.cmp(&b.file));
        Ok(out)
    }

    /// Removes every cache file; returns how many were removed.
    pub fn purge(&self) -> Result<usize> {
        let mut removed = 0;
        for e in self.entries()? {
            fs::remove_file(self.dir.join(&e.file))?;
            removed += 1;
        }
        Ok(removed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{build_c, staircase_hull};

    #[test]
    fn round_trip_and_fault_injection() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SeriesCache::new(dir.path());
        let bx = staircase_hull(4, None).unwrap();
        let c = build_c(4, &bx).unwrap();
        assert!(cache.load(SeriesKind::C, 4, &bx).unwrap().is_none());
        let path = cache.store(SeriesKind::C, 4, &c).unwrap();
        assert_eq!(cache.load(SeriesKind::C, 4, &bx).unwrap().unwrap(), c);
        assert!(cache.load(SeriesKind::CHat, 4, &bx).unwrap().is_none());
        let entries = cache.entries().unwrap();
        assert_eq!(entries.len(), 1);
        assert!(entries[0].valid);
        assert_eq!(entries[0].terms, c.len());

        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 20]).unwrap();
        assert!(!cache.entries().unwrap()[0].valid);
        assert!(cache.load(SeriesKind::C, 4, &bx).unwrap().is_none());
        assert!(!path.exists());

        let (again, hit) = cache.get_or_build(SeriesKind::C, 4, &bx, || build_c(4, &bx)).unwrap();
        assert!(!hit);
        assert_eq!(again, c);
        let (_, hit) = cache.get_or_build(SeriesKind::C, 4, &bx, || unreachable!()).unwrap();
        assert!(hit);
        assert_eq!(cache.purge().unwrap(), 1);
        assert!(cache.entries().unwrap().is_empty());
    }

    #[test]
    fn body_format() {
        let bx = TruncationBox::new(vec![2, 2], Some(2)).unwrap();
        let s = MultiSeries::from_terms(bx.clone(), vec![(vec![0, 0], BigInt::from(1)), (vec![1, 1], BigInt::from(-7))]).unwrap();
        let body = encode_body(&s);
        assert_eq!(body.len(), 2 * 19);
        assert_eq!(body[18], 1);
        assert_eq!((body[36], body[37]), (0x80, 7));
        assert_eq!(decode_body(&body, &bx).unwrap(), s);
        assert!(decode_body(&body[..30], &bx).is_err());
        let mut swapped = body[19..].to_vec();
        swapped.extend_from_slice(&body[..19]);
        assert!(decode_body(&swapped, &bx).is_err());
        let mut outside = body.clone();
        outside[19] = 3;
        assert!(decode_body(&outside, &bx).is_err());
        let mut zero = body.clone();
        zero[18] = 0;
        assert!(decode_body(&zero, &bx).is_err());
        let big = BigInt::from(10).pow(60) * -3;
        let s = MultiSeries::from_terms(bx.clone(), vec![(vec![2, 0], big)]).unwrap();
        assert_eq!(decode_body(&encode_body(&s), &bx).unwrap(), s);
    }
}
