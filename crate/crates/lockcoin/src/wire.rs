//! Canonical tagged binary encoding.
//!
//! Every serialized artifact (keys, signatures, wire messages, transactions,
//! evidence) uses the same primitives: big-endian fixed-width integers and
//! 4-byte length-prefixed byte strings. Encodings are canonical: one value,
//! one byte sequence.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEof(usize),
    #[error("unexpected tag {got:#04x} (wanted {wanted:#04x}) at offset {at}")]
    BadTag { got: u8, wanted: u8, at: usize },
    #[error("unknown enum discriminant {0}")]
    BadDiscriminant(u8),
    #[error("non-canonical integer encoding (leading zero bytes)")]
    NonCanonicalInt,
    #[error("length {0} exceeds limit")]
    OversizedField(u32),
    #[error("trailing bytes after message")]
    TrailingBytes,
    #[error("integrity digest mismatch")]
    ChecksumMismatch,
}

/// Hard cap on any single length-prefixed field; suffices for 2048-bit keys
/// and padded log messages while bounding hostile allocations.
const MAX_FIELD: u32 = 1 << 20;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Writer {
        Writer::default()
    }

    pub fn put_u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn put_u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn put_u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn put_bytes(&mut self, b: &[u8]) -> &mut Self {
        assert!(b.len() <= MAX_FIELD as usize, "field too large to encode");
        self.put_u32(b.len() as u32);
        self.buf.extend_from_slice(b);
        self
    }

    /// Minimal big-endian magnitude with a length prefix; zero encodes as
    /// the empty string.
    pub fn put_biguint(&mut self, v: &BigUint) -> &mut Self {
        let bytes = v.to_bytes_be();
        if bytes == [0] {
            self.put_bytes(&[])
        } else {
            self.put_bytes(&bytes)
        }
    }

    pub fn put_raw(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::UnexpectedEof(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn get_u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn get_u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_bytes(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.get_u32()?;
        if len > MAX_FIELD {
            return Err(WireError::OversizedField(len));
        }
        self.take(len as usize)
    }

    pub fn get_biguint(&mut self) -> Result<BigUint, WireError> {
        let bytes = self.get_bytes()?;
        if bytes.first() == Some(&0) {
            return Err(WireError::NonCanonicalInt);
        }
        Ok(BigUint::from_bytes_be(bytes))
    }

    pub fn get_array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn expect_tag(&mut self, wanted: u8) -> Result<(), WireError> {
        let at = self.pos;
        let got = self.get_u8()?;
        if got != wanted {
            return Err(WireError::BadTag { got, wanted, at });
        }
        Ok(())
    }

    pub fn expect_end(&self) -> Result<(), WireError> {
        if self.remaining() != 0 {
            return Err(WireError::TrailingBytes);
        }
        Ok(())
    }
}

/// Anything with a canonical wire form.
pub trait WireEncode {
    fn encode(&self, w: &mut Writer);

    fn to_wire(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    fn to_hex(&self) -> String {
        hex::encode(self.to_wire())
    }
}

pub trait WireDecode: Sized {
    fn decode(r: &mut Reader<'_>) -> Result<Self, WireError>;

    fn from_wire(buf: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(buf);
        let v = Self::decode(&mut r)?;
        r.expect_end()?;
        Ok(v)
    }
}
