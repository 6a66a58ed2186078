//! Binary MPS container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic[16] | version u32 | n u32 | flags u32 | center u32
//! n × (dl u32, 2 u32, dr u32)
//! entries: (re f64, im f64) per element, sites in order, row-major
//! ```
//!
//! `flags` bit 0 marks a complex-valued state, bit 1 a recorded canonical
//! centre.

use std::path::Path;

use num_complex::Complex64 as C64;

use super::Mps;
use crate::error::{Error, Result};
use crate::linalg::DenseTensor;

pub const MPS_MAGIC: [u8; 16] = *b"BORN-MACHINE-MPS";
pub const MPS_VERSION: u32 = 1;

impl Mps {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 12 * self.n_sites() + 16 * self.entry_count());
        out.extend_from_slice(&MPS_MAGIC);
        out.extend_from_slice(&MPS_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_sites() as u32).to_le_bytes());
        let mut flags = 0u32;
        if self.complex_valued() {
            flags |= 1;
        }
        if self.canonical_center().is_some() {
            flags |= 2;
        }
        out.extend_from_slice(&flags.to_le_bytes());
        out.extend_from_slice(&(self.canonical_center().unwrap_or(0) as u32).to_le_bytes());
        for t in self.sites() {
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
        }
        for t in self.sites() {
            for z in t.data() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(16)? != MPS_MAGIC {
            return Err(Error::Format("not an MPS file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != MPS_VERSION {
            return Err(Error::Format(format!("unsupported MPS version {version}")));
        }
        let n = r.u32()? as usize;
        let flags = r.u32()?;
        let center = r.u32()? as usize;
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            shapes.push(vec![r.u32()? as usize, r.u32()? as usize, r.u32()? as usize]);
        }
        let mut sites = Vec::with_capacity(n);
        for sh in shapes {
            let count: usize = sh.iter().product();
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                data.push(C64::new(r.f64()?, r.f64()?));
            }
            sites.push(DenseTensor::new(sh, data)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after MPS payload".into()));
        }
        let mut mps = Mps::new(sites, flags & 1 != 0)?;
        if flags & 2 != 0 {
            if center >= n {
                return Err(Error::Format(format!("canonical centre {center} out of range")));
            }
            mps.canonical_center = Some(center);
        }
        Ok(mps)
    }
}

pub fn write_mps(path: &Path, mps: &Mps) -> Result<()> {
    crate::io::atomic_write(path, &mps.to_bytes())
}

pub fn read_mps(path: &Path) -> Result<Mps> {
    Mps::from_bytes(&std::fs::read(path)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.bytes.len() {
            return Err(Error::Format("truncated MPS file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
