//! Versioned text cache for [`ExactMatrixSet`].
//!
//! Layout:
//!
//! ```text
//! dipole-exact-matrices 1 <parity> <K> <N>
//! [S1]
//! <row> <col> <numerator>/<denominator>      (lower triangle, row-major)
//! [T1]
//! ...
//! [V1]
//! ...
//! [L]
//! ...
//! [D]
//! <i> <i> <numerator>/<denominator>
//! checksum sha256 <hex digest of every preceding byte>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rug::{Integer, Rational};
use sha2::{Digest, Sha256};

use crate::assembly::{assemble, ExactMatrixSet, TriMatrix};
use crate::basis::{enumerate_basis, Parity};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "dipole-exact-matrices";
const SECTIONS: [&str; 5] = ["S1", "T1", "V1", "L", "D"];

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("unsupported cache format version '{found}' (expected {FORMAT_VERSION})")]
    Version { found: String },

    #[error("malformed cache file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("cache checksum mismatch")]
    Checksum,
}

fn malformed(line: usize, reason: impl Into<String>) -> CacheError {
    CacheError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn push_rational(out: &mut String, i: usize, j: usize, q: &Rational) {
    let _ = writeln!(out, "{i} {j} {}/{}", q.numer(), q.denom());
}

/// Serialize to the cache text format, checksum included.
pub fn to_cache_string(m: &ExactMatrixSet) -> String {
    let n = m.len();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION} {} {} {n}", m.parity, m.k);
    for (name, mat) in SECTIONS[..4].iter().zip([&m.s1, &m.t1, &m.v1, &m.l]) {
        let _ = writeln!(out, "[{name}]");
        for i in 0..n {
            for j in 0..=i {
                push_rational(&mut out, i, j, mat.lower(i, j));
            }
        }
    }
    out.push_str("[D]\n");
    for (i, d) in m.d.iter().enumerate() {
        push_rational(&mut out, i, i, d);
    }
    let digest = hex::encode(Sha256::digest(out.as_bytes()));
    let _ = writeln!(out, "checksum sha256 {digest}");
    out
}

pub fn save_cache(m: &ExactMatrixSet, path: &Path) -> Result<(), CacheError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, to_cache_string(m)).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn load_cache(path: &Path) -> Result<ExactMatrixSet, CacheError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    from_cache_str(&text)
}

fn parse_rational(tok: &str, line: usize) -> Result<Rational, CacheError> {
    let (num, den) = tok
        .split_once('/')
        .ok_or_else(|| malformed(line, format!("expected numerator/denominator, got '{tok}'")))?;
    let num: Integer = num.parse().map_err(|_| malformed(line, "bad numerator"))?;
    let den: Integer = den.parse().map_err(|_| malformed(line, "bad denominator"))?;
    if den <= 0 {
        return Err(malformed(line, "denominator must be positive"));
    }
    let q = Rational::from((num, den.clone()));
    if q.denom() != &den {
        return Err(malformed(line, "rational not in lowest terms"));
    }
    Ok(q)
}

pub fn from_cache_str(text: &str) -> Result<ExactMatrixSet, CacheError> {
    let header = text.lines().next().ok_or_else(|| malformed(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&MAGIC) {
        return Err(malformed(1, "not a dipole matrix cache"));
    }
    match fields.get(1) {
        Some(v) if *v == FORMAT_VERSION.to_string() => {}
        other => {
            return Err(CacheError::Version {
                found: other.unwrap_or(&"").to_string(),
            })
        }
    }
    if fields.len() != 5 {
        return Err(malformed(1, "header needs version, parity, K and N"));
    }
    let parity: Parity = fields[2].parse().map_err(|_| malformed(1, "bad parity"))?;
    let k: u32 = fields[3].parse().map_err(|_| malformed(1, "bad K"))?;
    let n: usize = fields[4].parse().map_err(|_| malformed(1, "bad N"))?;
    let basis = enumerate_basis(parity, k).map_err(|e| malformed(1, e.to_string()))?;
    if n == 0 || n > basis.len() {
        return Err(malformed(1, format!("N={n} inconsistent with K={k}")));
    }

    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|p| p + 1)
        .ok_or_else(|| malformed(1, "missing checksum"))?;
    let (body, tail) = text.split_at(body_end);
    let digest = tail
        .trim_end()
        .strip_prefix("checksum sha256 ")
        .ok_or_else(|| malformed(body.lines().count() + 1, "missing checksum line"))?;
    if hex::encode(Sha256::digest(body.as_bytes())) != digest {
        return Err(CacheError::Checksum);
    }

    let mut lines = body.lines().enumerate().skip(1).map(|(i, l)| (i + 1, l));
    let mut mats = Vec::with_capacity(4);
    let mut diag = Vec::new();
    for name in SECTIONS {
        let (no, l) = lines.next().ok_or_else(|| malformed(0, format!("missing [{name}]")))?;
        if l != format!("[{name}]") {
            return Err(malformed(no, format!("expected [{name}], got '{l}'")));
        }
        let count = if name == "D" { n } else { n * (n + 1) / 2 };
        let mut data = Vec::with_capacity(count);
        let (mut i, mut j) = (0usize, 0usize);
        for _ in 0..count {
            let (no, l) = lines
                .next()
                .ok_or_else(|| malformed(0, format!("section [{name}] is truncated")))?;
            let mut toks = l.split_whitespace();
            let row: Option<usize> = toks.next().and_then(|t| t.parse().ok());
            let col: Option<usize> = toks.next().and_then(|t| t.parse().ok());
            let (want_row, want_col) = if name == "D" { (i, i) } else { (i, j) };
            if row != Some(want_row) || col != Some(want_col) {
                return Err(malformed(no, format!("expected entry ({want_row}, {want_col})")));
            }
            let value = toks.next().ok_or_else(|| malformed(no, "missing value"))?;
            data.push(parse_rational(value, no)?);
            if toks.next().is_some() {
                return Err(malformed(no, "trailing tokens"));
            }
            if name == "D" || j == i {
                i += 1;
                j = 0;
            } else {
                j += 1;
            }
        }
        if name == "D" {
            diag = data;
        } else {
            mats.push(TriMatrix::from_packed(n, data));
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(malformed(no, "unexpected content after [D]"));
    }
    let mut mats = mats.into_iter();
    let mut next = || mats.next().expect("four packed sections");
    Ok(ExactMatrixSet {
        parity,
        k,
        basis: basis[..n].to_vec(),
        s1: next(),
        t1: next(),
        v1: next(),
        l: next(),
        d: diag,
    })
}

/// Cache file name for a full level inside `dir`.
pub fn cache_path(dir: &Path, parity: Parity, k: u32) -> PathBuf {
    dir.join(format!("{parity}-K{k}-v{FORMAT_VERSION}.txt"))
}

/// Load the level-`k` set from `dir`, assembling and saving it when absent.
pub fn load_or_assemble(dir: &Path, parity: Parity, k: u32) -> crate::Result<ExactMatrixSet> {
    let path = cache_path(dir, parity, k);
    match load_cache(&path) {
        Ok(m) => Ok(m),
        Err(CacheError::Io { source, .. }) if source.kind() == io::ErrorKind::NotFound => {
            let m = assemble(parity, k)?;
            save_cache(&m, &path)?;
            Ok(m)
        }
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let m = assemble(parity, 3).unwrap();
            let path = cache_path(dir.path(), parity, 3);
            save_cache(&m, &path).unwrap();
            assert_eq!(load_cache(&path).unwrap(), m);
        }
    }

    #[test]
    fn truncated_file_is_malformed() {
        let text = to_cache_string(&assemble(Parity::Even, 3).unwrap());
        let cut = &text[..text.len() / 2];
        assert!(matches!(from_cache_str(cut), Err(CacheError::Malformed { .. })));
        assert!(matches!(from_cache_str(""), Err(CacheError::Malformed { .. })));
    }

    #[test]
    fn wrong_version_is_reported() {
        let text = to_cache_string(&assemble(Parity::Even, 2).unwrap());
        let bumped = text.replacen("dipole-exact-matrices 1 ", "dipole-exact-matrices 7 ", 1);
        assert!(matches!(from_cache_str(&bumped), Err(CacheError::Version { found }) if found == "7"));
    }

    #[test]
    fn tampering_fails_checksum() {
        let text = to_cache_string(&assemble(Parity::Odd, 3).unwrap());
        let tampered = text.replacen("[T1]\n0 0 ", "[T1]\n0 0 9", 1);
        assert_ne!(tampered, text);
        assert!(matches!(from_cache_str(&tampered), Err(CacheError::Checksum)));
    }

    #[test]
    fn leading_block_round_trips() {
        let m = assemble(Parity::Even, 4).unwrap().leading(3).unwrap();
        assert_eq!(from_cache_str(&to_cache_string(&m)).unwrap(), m);
    }

    #[test]
    fn load_or_assemble_writes_once() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_assemble(dir.path(), Parity::Odd, 4).unwrap();
        let path = cache_path(dir.path(), Parity::Odd, 4);
        let first = fs::read(&path).unwrap();
        let b = load_or_assemble(dir.path(), Parity::Odd, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read(&path).unwrap(), first);
    }
}
