//! Memoized α tensors, shared between sweep workers and persisted as text.
//!
//! File layout: a header line `# slabsteady-alpha-cache v1`, then one record
//! per line: the hex key followed by 36 floats (the 9 entries of α_W then
//! the 9 entries of α_M, each as `re im`, row-major).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::RwLock;

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::alpha::{pair_tensors, AlphaTensors, QuadratureSpec, Sector};
use crate::error::{Error, Result};
use crate::optics::SlabSpec;

pub const HEADER: &str = "# slabsteady-alpha-cache v1";

/// Hash of everything `pair_tensors` depends on.
pub fn cache_key(omega: f64, delta: [f64; 2], z: f64, slab: &SlabSpec, quad: &QuadratureSpec) -> String {
    // Debug formatting of f64 is shortest round-trip, so the text is canonical.
    let text = format!("{omega:?}|{:?}|{:?}|{z:?}|{slab:?}|{quad:?}", delta[0], delta[1]);
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

#[derive(Debug, Default)]
pub struct AlphaCache {
    entries: RwLock<BTreeMap<String, AlphaTensors>>,
}

impl AlphaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<AlphaTensors> {
        self.entries.read().ok()?.get(key).copied()
    }

    pub fn insert(&self, key: String, value: AlphaTensors) {
        if let Ok(mut m) = self.entries.write() {
            m.insert(key, value);
        }
    }

    /// Returns the cached tensors or computes and stores them. The lock is
    /// not held during the quadrature, so two workers may race to fill the
    /// same entry; both compute the same value.
    pub fn pair_tensors(
        &self,
        delta: [f64; 2],
        z: f64,
        omega: f64,
        slab: &SlabSpec,
        quad: &QuadratureSpec,
    ) -> Result<AlphaTensors> {
        let key = cache_key(omega, delta, z, slab, quad);
        if let Some(t) = self.get(&key) {
            return Ok(t);
        }
        let t = pair_tensors(delta, z, omega, slab, quad, Sector::All)?;
        self.insert(key, t);
        Ok(t)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        let map = match self.entries.read() {
            Ok(m) => m,
            Err(p) => p.into_inner(),
        };
        for (key, t) in map.iter() {
            out.push_str(key);
            for tensor in [&t.w, &t.m] {
                for row in tensor {
                    for z in row {
                        let _ = write!(out, " {:e} {:e}", z.re, z.im);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == HEADER => {}
            other => {
                return Err(Error::Config(format!(
                    "alpha cache: expected header {HEADER:?}, found {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut map = BTreeMap::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Config(format!("alpha cache line {}: {msg}", lineno + 2));
            let mut fields = line.split_whitespace();
            let key = fields.next().ok_or_else(|| bad("missing key"))?.to_string();
            let nums: Vec<f64> = fields
                .map(|f| f.parse::<f64>().map_err(|_| bad(&format!("bad number {f:?}"))))
                .collect::<Result<_>>()?;
            if nums.len() != 36 {
                return Err(bad(&format!("expected 36 numbers, found {}", nums.len())));
            }
            let tensor = |offset: usize| {
                let mut t = [[C64::new(0.0, 0.0); 3]; 3];
                for (q, slot) in t.iter_mut().flatten().enumerate() {
                    *slot = C64::new(nums[offset + 2 * q], nums[offset + 2 * q + 1]);
                }
                t
            };
            map.insert(key, AlphaTensors { w: tensor(0), m: tensor(18) });
        }
        Ok(AlphaCache { entries: RwLock::new(map) })
    }

    /// Missing files give an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::from_text(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::PermittivityModel;

    fn slab() -> SlabSpec {
        SlabSpec { thickness: 1e-8, permittivity: PermittivityModel::sapphire(), temperature: 300.0 }
    }

    #[test]
    fn key_depends_on_every_input() {
        let s = slab();
        let q = QuadratureSpec::default();
        let base = cache_key(5e12, [1e-6, 0.0], 8e-6, &s, &q);
        assert_eq!(base.len(), 64);
        assert_ne!(base, cache_key(5.1e12, [1e-6, 0.0], 8e-6, &s, &q));
        assert_ne!(base, cache_key(5e12, [0.0, 1e-6], 8e-6, &s, &q));
        assert_ne!(base, cache_key(5e12, [1e-6, 0.0], 9e-6, &s, &q));
        let mut s2 = s.clone();
        s2.temperature = 5.0;
        assert_ne!(base, cache_key(5e12, [1e-6, 0.0], 8e-6, &s2, &q));
        assert_ne!(base, cache_key(5e12, [1e-6, 0.0], 8e-6, &s, &q.relaxed()));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let cache = AlphaCache::new();
        let mut t = AlphaTensors { w: [[C64::new(0.0, 0.0); 3]; 3], m: [[C64::new(0.0, 0.0); 3]; 3] };
        t.w[0][1] = C64::new(0.1 + 0.2, -1.0 / 3.0);
        t.m[2][2] = C64::new(1e-300, 7.123456789012345e10);
        cache.insert("abc".into(), t);
        let back = AlphaCache::from_text(&cache.to_text()).unwrap();
        assert_eq!(back.get("abc"), Some(t));
        assert!(AlphaCache::from_text("garbage\n").is_err());
        assert!(AlphaCache::from_text(&format!("{HEADER}\nkey 1 2 3\n")).is_err());
    }
}
