//! Bit sequences, sample sets and manifest-driven ingestion.
//!
//! A [`BitSequence`] stores bits packed eight per byte, most significant bit
//! first, with an explicit length. Padding bits in the final byte are always
//! zero so that byte-level equality implies bit-level equality.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BitSeqError {
    #[error("invalid character {ch:?} at byte offset {offset}")]
    InvalidCharacter { ch: char, offset: usize },
    #[error("input contains no bits")]
    EmptyInput,
    #[error("{path}: decoded {actual} bits, expected {expected}")]
    LengthMismatch {
        path: String,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate sample index {0}")]
    DuplicateIndex(u64),
    #[error("duplicate manifest path {0}")]
    DuplicatePath(String),
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("sample set is empty")]
    EmptySet,
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error("unknown encoding {0:?}")]
    UnknownEncoding(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    ManifestFormat {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// On-disk bit encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    /// Characters `0` and `1`; whitespace is ignored.
    #[serde(rename = "ascii01")]
    Ascii01,
    /// Eight bits per byte, most significant bit first.
    #[serde(rename = "packed-msb")]
    PackedMsb,
    /// Four bits per hex digit, most significant bit first.
    #[serde(rename = "hex")]
    Hex,
}

impl Encoding {
    /// Number of bits each encoded unit contributes; the largest amount of
    /// zero padding a stored sequence may carry is one less than this.
    pub fn granularity(self) -> usize {
        match self {
            Encoding::Ascii01 => 1,
            Encoding::PackedMsb => 8,
            Encoding::Hex => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Ascii01 => "ascii01",
            Encoding::PackedMsb => "packed-msb",
            Encoding::Hex => "hex",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = BitSeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ascii01" => Ok(Encoding::Ascii01),
            "packed-msb" => Ok(Encoding::PackedMsb),
            "hex" => Ok(Encoding::Hex),
            other => Err(BitSeqError::UnknownEncoding(other.to_string())),
        }
    }
}

/// An immutable, ordered sequence of bits with source metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bytes: Vec<u8>,
    len: usize,
    source_id: String,
    sample_index: u64,
    timestamp: Option<DateTime<Utc>>,
}

impl BitSequence {
    fn from_packed_unchecked(mut bytes: Vec<u8>, len: usize) -> Self {
        bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xFFu8 << (8 - len % 8);
            }
        }
        BitSequence {
            bytes,
            len,
            source_id: String::new(),
            sample_index: 0,
            timestamp: None,
        }
    }

    /// Builds a sequence from booleans, `true` meaning 1.
    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut bytes = Vec::new();
        let mut len = 0usize;
        for bit in bits {
            if len.is_multiple_of(8) {
                bytes.push(0);
            }
            if bit {
                let last = bytes.len() - 1;
                bytes[last] |= 0x80 >> (len % 8);
            }
            len += 1;
        }
        BitSequence::from_packed_unchecked(bytes, len)
    }

    /// Builds a sequence from a slice of 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Result<Self, BitSeqError> {
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(BitSeqError::NotABit(bad));
        }
        Ok(BitSequence::from_bools(bits.iter().map(|&b| b == 1)))
    }

    /// Builds a sequence from msb-first packed bytes, keeping the first `len`
    /// bits. Bits beyond `len` are cleared.
    ///
    /// # Panics
    /// If `bytes` holds fewer than `len` bits.
    pub fn from_packed(bytes: Vec<u8>, len: usize) -> Self {
        assert!(bytes.len() * 8 >= len, "packed buffer shorter than length");
        BitSequence::from_packed_unchecked(bytes, len)
    }

    /// Parses a string of `0`/`1` characters, ignoring whitespace.
    pub fn from_ascii(s: &str) -> Result<Self, BitSeqError> {
        parse_bits(s.as_bytes(), Encoding::Ascii01)
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn with_sample_index(mut self, sample_index: u64) -> Self {
        self.sample_index = sample_index;
        self
    }

    pub fn with_timestamp(mut self, timestamp: Option<DateTime<Utc>>) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn timestamp(&self) -> Option<DateTime<Utc>> {
        self.timestamp
    }

    /// The packed msb-first storage, zero padded to a whole byte.
    pub fn as_packed(&self) -> &[u8] {
        &self.bytes
    }

    /// Bit `i` as 0 or 1.
    ///
    /// # Panics
    /// If `i >= len()`.
    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.bytes[i / 8] >> (7 - i % 8)) & 1
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u8> + '_ {
        (0..self.len).map(move |i| (self.bytes[i / 8] >> (7 - i % 8)) & 1)
    }

    /// Unpacks into one byte per bit.
    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().collect()
    }

    /// Number of ones; padding is zero so a byte popcount is exact.
    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// The bits in reverse order, metadata preserved.
    pub fn reversed(&self) -> Self {
        let bits: Vec<bool> = (0..self.len).rev().map(|i| self.bit(i) == 1).collect();
        BitSequence::from_bools(bits)
            .with_source_id(self.source_id.clone())
            .with_sample_index(self.sample_index)
            .with_timestamp(self.timestamp)
    }

    /// Copies `len` bits starting at `start` into a fresh sequence.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len, "slice out of range");
        BitSequence::from_bools((start..start + len).map(|i| self.bit(i) == 1))
    }

    /// Serializes with the given encoding.
    pub fn encode(&self, encoding: Encoding) -> Vec<u8> {
        match encoding {
            Encoding::Ascii01 => self.iter().map(|b| b'0' + b).collect(),
            Encoding::PackedMsb => self.bytes.clone(),
            Encoding::Hex => {
                const DIGITS: &[u8; 16] = b"0123456789abcdef";
                let nibbles = self.len.div_ceil(4);
                (0..nibbles)
                    .map(|k| {
                        let byte = self.bytes[k / 2];
                        let nib = if k % 2 == 0 { byte >> 4 } else { byte & 0x0F };
                        DIGITS[nib as usize]
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Decodes a byte stream into a bit sequence, preserving stream order.
pub fn parse_bits(raw: &[u8], encoding: Encoding) -> Result<BitSequence, BitSeqError> {
    let seq = match encoding {
        Encoding::PackedMsb => BitSequence::from_packed_unchecked(raw.to_vec(), raw.len() * 8),
        Encoding::Ascii01 => {
            let mut bits = Vec::with_capacity(raw.len());
            for (offset, &c) in raw.iter().enumerate() {
                match c {
                    b'0' => bits.push(false),
                    b'1' => bits.push(true),
                    c if c.is_ascii_whitespace() => {}
                    c => {
                        return Err(BitSeqError::InvalidCharacter {
                            ch: c as char,
                            offset,
                        })
                    }
                }
            }
            BitSequence::from_bools(bits)
        }
        Encoding::Hex => {
            let mut bytes = Vec::with_capacity(raw.len() / 2 + 1);
            let mut nibbles = 0usize;
            for (offset, &c) in raw.iter().enumerate() {
                if c.is_ascii_whitespace() {
                    continue;
                }
                let v = (c as char)
                    .to_digit(16)
                    .ok_or(BitSeqError::InvalidCharacter {
                        ch: c as char,
                        offset,
                    })? as u8;
                if nibbles.is_multiple_of(2) {
                    bytes.push(v << 4);
                } else {
                    *bytes.last_mut().expect("pushed above") |= v;
                }
                nibbles += 1;
            }
            BitSequence::from_packed_unchecked(bytes, nibbles * 4)
        }
    };
    if seq.is_empty() {
        return Err(BitSeqError::EmptyInput);
    }
    Ok(seq)
}

/// Decodes and trims to a known length. Encodings with multi-bit units may
/// carry up to `granularity - 1` trailing zero padding bits, which are dropped.
pub fn parse_bits_with_len(
    raw: &[u8],
    encoding: Encoding,
    len: usize,
) -> Result<BitSequence, BitSeqError> {
    let seq = parse_bits(raw, encoding)?;
    let mismatch = || BitSeqError::LengthMismatch {
        path: String::new(),
        expected: len,
        actual: seq.len(),
    };
    if seq.len() == len {
        return Ok(seq);
    }
    if seq.len() < len || seq.len() - len >= encoding.granularity() {
        return Err(mismatch());
    }
    if (len..seq.len()).any(|i| seq.bit(i) == 1) {
        return Err(mismatch());
    }
    Ok(BitSequence::from_packed_unchecked(seq.bytes.clone(), len))
}

/// Same-source samples of a common length, ordered by sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    source_id: String,
    declared_length: usize,
    samples: Vec<BitSequence>,
}

impl SampleSet {
    /// Validates lengths and index uniqueness, sorts chronologically and
    /// stamps every member with the shared `source_id`.
    pub fn new(
        source_id: impl Into<String>,
        declared_length: usize,
        samples: Vec<BitSequence>,
    ) -> Result<Self, BitSeqError> {
        let source_id = source_id.into();
        let mut seen = HashSet::with_capacity(samples.len());
        let mut samples: Vec<BitSequence> = samples
            .into_iter()
            .map(|s| {
                if s.len() != declared_length {
                    return Err(BitSeqError::LengthMismatch {
                        path: format!("sample {}", s.sample_index()),
                        expected: declared_length,
                        actual: s.len(),
                    });
                }
                if !seen.insert(s.sample_index()) {
                    return Err(BitSeqError::DuplicateIndex(s.sample_index()));
                }
                Ok(s.with_source_id(source_id.clone()))
            })
            .collect::<Result<_, _>>()?;
        samples.sort_by_key(BitSequence::sample_index);
        Ok(SampleSet {
            source_id,
            declared_length,
            samples,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn declared_length(&self) -> usize {
        self.declared_length
    }

    pub fn samples(&self) -> &[BitSequence] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_bits(&self) -> usize {
        self.samples.len() * self.declared_length
    }
}

/// Joins all samples end to end in chronological order.
pub fn concat_chronological(set: &SampleSet) -> Result<BitSequence, BitSeqError> {
    let first = set.samples().first().ok_or(BitSeqError::EmptySet)?;
    let total = set.total_bits();
    let seq = if set.declared_length().is_multiple_of(8) {
        let mut bytes = Vec::with_capacity(total / 8);
        for s in set.samples() {
            bytes.extend_from_slice(s.as_packed());
        }
        BitSequence::from_packed_unchecked(bytes, total)
    } else {
        BitSequence::from_bools(set.samples().iter().flat_map(|s| s.iter().map(|b| b == 1)))
    };
    Ok(seq
        .with_source_id(set.source_id())
        .with_sample_index(first.sample_index())
        .with_timestamp(first.timestamp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub encoding: Encoding,
    pub sample_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

/// JSON index of the files making up one source's sample set. Relative entry
/// paths resolve against the manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub declared_length: usize,
    pub source_id: String,
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_path(path: &Path) -> Result<Self, BitSeqError> {
        let text = fs::read_to_string(path).map_err(|source| BitSeqError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut manifest =
            Manifest::from_json(&text).map_err(|source| BitSeqError::ManifestFormat {
                path: path.display().to_string(),
                source,
            })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf);
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        match &self.base_dir {
            Some(base) if entry.path.is_relative() => base.join(&entry.path),
            _ => entry.path.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), BitSeqError> {
        if self.entries.is_empty() {
            return Err(BitSeqError::EmptyManifest);
        }
        let mut paths = HashSet::new();
        let mut indices = HashSet::new();
        for e in &self.entries {
            if !paths.insert(&e.path) {
                return Err(BitSeqError::DuplicatePath(e.path.display().to_string()));
            }
            if !indices.insert(e.sample_index) {
                return Err(BitSeqError::DuplicateIndex(e.sample_index));
            }
        }
        Ok(())
    }
}

/// Reads and decodes every manifest entry into a chronologically ordered set.
pub fn load_sample_set(manifest: &Manifest) -> Result<SampleSet, BitSeqError> {
    manifest.validate()?;
    let samples = manifest
        .entries
        .iter()
        .map(|entry| {
            let path = manifest.resolve(entry);
            let raw = fs::read(&path).map_err(|source| BitSeqError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let seq = parse_bits_with_len(&raw, entry.encoding, manifest.declared_length).map_err(
                |e| match e {
                    BitSeqError::LengthMismatch {
                        expected, actual, ..
                    } => BitSeqError::LengthMismatch {
                        path: path.display().to_string(),
                        expected,
                        actual,
                    },
                    other => other,
                },
            )?;
            Ok(seq
                .with_sample_index(entry.sample_index)
                .with_timestamp(entry.timestamp))
        })
        .collect::<Result<Vec<_>, BitSeqError>>()?;
    SampleSet::new(
        manifest.source_id.clone(),
        manifest.declared_length,
        samples,
    )
}
