//! Flat binary field files, the on-disk Green's column cache, and CSV output.
//!
//! A field file is one line of JSON header followed by `length` little-endian
//! `f64` values:
//!
//! ```text
//! {"domain_hash":"…","kind":"interior","length":12868,"seed":7,"counter":0}\n<bytes>
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{GridPoint, LatticeDomain};
use crate::error::{Error, Result};
use crate::laplace::{BoundaryData, DirichletOperator, ScalarField};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub domain_hash: String,
    /// `interior`, `boundary` or `green`.
    pub kind: String,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counter: Option<u64>,
}

pub fn write_array(w: &mut impl Write, header: &FieldHeader, values: &[f64]) -> Result<()> {
    if header.length != values.len() {
        return Err(Error::DimensionMismatch { expected: header.length, got: values.len() });
    }
    serde_json::to_writer(&mut *w, header)?;
    w.write_all(b"\n")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_array(r: impl Read) -> Result<(FieldHeader, Vec<f64>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.length {
        return Err(Error::Format(format!("expected {} values, found {} bytes", header.length, bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, values))
}

fn check_header(header: &FieldHeader, domain: &LatticeDomain, kind: &str) -> Result<()> {
    if header.domain_hash != domain.hash() {
        return Err(Error::DomainMismatch);
    }
    if header.kind != kind {
        return Err(Error::Format(format!("expected kind {kind}, found {}", header.kind)));
    }
    Ok(())
}

pub fn save_field(path: &Path, field: &ScalarField, seed: Option<u64>, counter: Option<u64>) -> Result<()> {
    let header = FieldHeader {
        domain_hash: field.domain().hash().to_owned(),
        kind: "interior".into(),
        length: field.values().len(),
        seed,
        counter,
    };
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_array(&mut f, &header, field.values())?;
    f.flush()?;
    Ok(())
}

pub fn load_field(path: &Path, domain: &Arc<LatticeDomain>) -> Result<(FieldHeader, ScalarField)> {
    let (header, values) = read_array(fs::File::open(path)?)?;
    check_header(&header, domain, "interior")?;
    Ok((header, ScalarField::new(domain, values)?))
}

pub fn save_boundary(path: &Path, bd: &BoundaryData) -> Result<()> {
    let header = FieldHeader {
        domain_hash: bd.domain().hash().to_owned(),
        kind: "boundary".into(),
        length: bd.values().len(),
        seed: None,
        counter: None,
    };
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_array(&mut f, &header, bd.values())?;
    f.flush()?;
    Ok(())
}

pub fn load_boundary(path: &Path, domain: &Arc<LatticeDomain>) -> Result<BoundaryData> {
    let (header, values) = read_array(fs::File::open(path)?)?;
    check_header(&header, domain, "boundary")?;
    BoundaryData::new(domain, values)
}

/// Directory cache of Green's columns keyed by `(domain hash, vertex)`.
#[derive(Clone, Debug)]
pub struct GreenCache {
    dir: PathBuf,
}

impl GreenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn path(&self, domain: &LatticeDomain, z: GridPoint) -> PathBuf {
        self.dir.join(format!("{}_{}_{}.bin", domain.hash(), z.x, z.y))
    }

    /// Cached column if present, otherwise solve and store it.
    pub fn column(&self, op: &DirichletOperator, z: GridPoint) -> Result<ScalarField> {
        let path = self.path(op.domain(), z);
        if path.exists() {
            let (header, values) = read_array(fs::File::open(&path)?)?;
            check_header(&header, op.domain(), "green")?;
            return ScalarField::new(op.domain(), values);
        }
        let col = op.green_column(z)?;
        let header = FieldHeader {
            domain_hash: op.domain().hash().to_owned(),
            kind: "green".into(),
            length: col.values().len(),
            seed: None,
            counter: None,
        };
        // write to a temporary name first so readers never see a partial file
        let tmp = path.with_extension("tmp");
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        write_array(&mut f, &header, col.values())?;
        f.flush()?;
        drop(f);
        fs::rename(tmp, &path)?;
        Ok(col)
    }

    pub fn contains(&self, domain: &LatticeDomain, z: GridPoint) -> bool {
        self.path(domain, z).exists()
    }
}

/// Minimal CSV table: a header row and rows of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Shortest round-trip representation of a float (stable across runs).
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::DEFAULT_TOL;

    fn domain() -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::disk(1.0, 1.0 / 16.0).unwrap())
    }

    #[test]
    fn field_round_trip() {
        let dom = domain();
        let dir = tempfile::tempdir().unwrap();
        let f = ScalarField::from_fn(&dom, |p| p.re * 3.0 - p.im).unwrap();
        let path = dir.path().join("f.bin");
        save_field(&path, &f, Some(7), Some(3)).unwrap();
        let (h, g) = load_field(&path, &dom).unwrap();
        assert_eq!(h.seed, Some(7));
        assert_eq!(h.counter, Some(3));
        assert_eq!(f.values(), g.values());
        let other = Arc::new(LatticeDomain::disk(1.0, 1.0 / 8.0).unwrap());
        assert!(matches!(load_field(&path, &other), Err(Error::DomainMismatch)));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut buf = Vec::new();
        let h = FieldHeader { domain_hash: "x".into(), kind: "interior".into(), length: 2, seed: None, counter: None };
        write_array(&mut buf, &h, &[1.0, 2.0]).unwrap();
        buf.pop();
        assert!(matches!(read_array(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn green_cache_returns_identical_columns() {
        let dom = domain();
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cache = GreenCache::new(dir.path()).unwrap();
        let z = GridPoint::new(2, -1);
        assert!(!cache.contains(&dom, z));
        let a = cache.column(&op, z).unwrap();
        assert!(cache.contains(&dom, z));
        let b = cache.column(&op, z).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec![num(0.1), num(2.0)]);
        assert_eq!(t.to_csv(), "a,b\n0.1,2.0\n");
    }
}
