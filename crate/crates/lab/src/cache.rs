//! Content-addressed cache for Burnett tables, the one expensive object
//! shared between experiments. Entries are raw little-endian f64, so a cached
//! table is bit-identical to a freshly built one.

use std::path::{Path, PathBuf};

use landau_core::chapman_enskog::{BurnettTable, TableSettings, TransportEntry};
use sha2::{Digest, Sha256};

use crate::{InModule, LabError};

const MAGIC: &[u8; 8] = b"LNDTAB01";

#[derive(Debug, Clone)]
pub struct Cache {
    root: Option<PathBuf>,
}

/// Where a table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSource {
    Built,
    Cached,
}

impl Cache {
    pub fn new(root: &Path) -> Self {
        Self { root: Some(root.to_path_buf()) }
    }

    pub fn disabled() -> Self {
        Self { root: None }
    }

    pub fn describe(&self) -> String {
        match &self.root {
            Some(r) => r.display().to_string(),
            None => "disabled".into(),
        }
    }

    /// Key over every input of the build, floats by bit pattern.
    pub fn table_key(thetas: &[f64], s: &TableSettings) -> String {
        let mut h = Sha256::new();
        h.update(MAGIC);
        h.update(landau_core::VERSION.as_bytes());
        for x in
            [s.hat_half_width, s.inversion.tol, s.inversion.micro_tol, s.operator.reg_radius_factor, s.operator.gram_tol.unwrap_or(-1.0)]
        {
            h.update(x.to_bits().to_le_bytes());
        }
        h.update((s.n as u64).to_le_bytes());
        h.update((s.inversion.max_iter as u64).to_le_bytes());
        for t in thetas {
            h.update(t.to_bits().to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }

    pub fn burnett_table(&self, thetas: &[f64], settings: TableSettings) -> Result<(BurnettTable, TableSource), LabError> {
        let Some(root) = &self.root else {
            return Ok((BurnettTable::build(thetas, settings).in_module("chapman_enskog")?, TableSource::Built));
        };
        let path = root.join(format!("burnett-{}.bin", Self::table_key(thetas, &settings)));
        if let Some(table) = std::fs::read(&path).ok().and_then(|b| decode(&b, settings)) {
            return Ok((table, TableSource::Cached));
        }
        let table = BurnettTable::build(thetas, settings).in_module("chapman_enskog")?;
        std::fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, encode(&table, settings)).map_err(|e| LabError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| LabError::io(&path, e))?;
        Ok((table, TableSource::Built))
    }
}

fn encode(table: &BurnettTable, s: TableSettings) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&s.hat_half_width.to_le_bytes());
    out.extend_from_slice(&(s.n as u64).to_le_bytes());
    out.extend_from_slice(&(table.entries().len() as u64).to_le_bytes());
    for e in table.entries() {
        for x in [e.theta, e.mu, e.kappa] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(e.iterations as u64).to_le_bytes());
        for r in e.ratios() {
            for x in r {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(out)
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn usize(&mut self) -> Option<usize> {
        usize::try_from(u64::from_le_bytes(self.take(8)?.try_into().ok()?)).ok()
    }
}

/// None on any mismatch; the caller then rebuilds.
fn decode(bytes: &[u8], s: TableSettings) -> Option<BurnettTable> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return None;
    }
    let hw = c.f64()?;
    let n = c.usize()?;
    if hw.to_bits() != s.hat_half_width.to_bits() || n != s.n {
        return None;
    }
    let count = c.usize()?;
    let len = n * n * n;
    let mut entries = Vec::with_capacity(count.min(256));
    for _ in 0..count {
        let (theta, mu, kappa) = (c.f64()?, c.f64()?, c.f64()?);
        let iterations = c.usize()?;
        let mut ratios: [Vec<f64>; 4] = Default::default();
        for r in ratios.iter_mut() {
            *r = c.take(8 * len)?.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
        }
        entries.push(TransportEntry::from_parts(theta, mu, kappa, ratios, iterations));
    }
    if c.pos != bytes.len() {
        return None;
    }
    BurnettTable::from_parts(hw, n, entries).ok()
}
