//! Little-endian primitives for the index containers.

use super::IndexError;

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and version, leaving the cursor after the header.
    pub fn open(buf: &'a [u8], magic: &[u8; 8], version: u32) -> Result<Self, IndexError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != magic {
            return Err(IndexError::Format("bad magic".into()));
        }
        let found = r.u32()?;
        if found != version {
            return Err(IndexError::Format(format!("unsupported format version {found} (expected {version})")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IndexError::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], IndexError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    /// A length prefix, sanity-checked against the bytes left so corrupt input
    /// cannot trigger huge allocations.
    pub fn len(&mut self, element_size: usize) -> Result<usize, IndexError> {
        let n = self.u64()? as usize;
        if n.saturating_mul(element_size) > self.buf.len() - self.pos {
            return Err(IndexError::Format(format!("length {n} exceeds remaining input")));
        }
        Ok(n)
    }

    pub fn i64(&mut self) -> Result<i64, IndexError> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64, IndexError> {
        Ok(f64::from_bits(u64::from_le_bytes(self.array()?)))
    }

    pub fn finish(self) -> Result<(), IndexError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(IndexError::Format(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}
