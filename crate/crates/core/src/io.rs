//! Matrix Market and CSV readers/writers, and the on-disk model bundle.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LassError, Result};
use crate::graph::SparseSimilarity;
use crate::lass::Diagnostics;
use crate::sparse::CsrMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Reads a real, integer or pattern coordinate matrix. Symmetric files are
/// expanded to both triangles.
pub fn read_matrix_market<R: Read>(reader: R) -> Result<CsrMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| LassError::parse("line 1", "empty Matrix Market file"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(LassError::parse("line 1", format!("unsupported header '{header}'")));
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(LassError::parse("line 1", format!("unsupported field '{other}'"))),
    };
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(LassError::parse("line 1", format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let loc = || format!("line {lineno}");
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(LassError::parse(loc(), "expected 'rows cols entries'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| LassError::parse(loc(), e.to_string()));
                size = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
            }
            Some((rows, cols, _)) => {
                let want = if pattern { 2 } else { 3 };
                if parts.len() != want {
                    return Err(LassError::parse(loc(), format!("expected {want} fields, found {}", parts.len())));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    let i = s.parse::<usize>().map_err(|e| LassError::parse(loc(), e.to_string()))?;
                    if i == 0 || i > bound {
                        return Err(LassError::parse(loc(), format!("index {i} outside 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let i = index(parts[0], rows)?;
                let j = index(parts[1], cols)?;
                let v = if pattern {
                    1.0
                } else {
                    parts[2].parse::<f64>().map_err(|e| LassError::parse(loc(), e.to_string()))?
                };
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    let (rows, cols, entries) = size.ok_or_else(|| LassError::parse("end of file", "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        triplets.len()
    };
    if stored != entries {
        return Err(LassError::parse("end of file", format!("size line declares {entries} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(rows, cols, triplets)
}

/// Writes a coordinate matrix with 17 significant digits. With `symmetric`
/// only the lower triangle is stored.
pub fn write_matrix_market<W: Write>(mut out: W, m: &CsrMatrix, symmetric: bool) -> Result<()> {
    let kind = if symmetric { "symmetric" } else { "general" };
    let entries: Vec<(usize, usize, f64)> = m.triplets().filter(|&(i, j, _)| !symmetric || i >= j).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_similarity(path: &Path) -> Result<SparseSimilarity> {
    let m = read_matrix_market(fs::File::open(path)?)?;
    SparseSimilarity::from_csr(m)
}

pub fn write_similarity(path: &Path, w: &SparseSimilarity) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_matrix_market(&mut f, w.matrix(), w.is_symmetric())?;
    f.flush()?;
    Ok(())
}

/// Dense numeric CSV without a header; `#` starts a comment line.
pub fn read_dense_csv<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LassError::parse(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(LassError::parse(
                    format!("line {line}"),
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                LassError::parse(format!("line {line}, column {}", c + 1), format!("'{field}' is not a number"))
            })?;
            if !v.is_finite() {
                return Err(LassError::parse(format!("line {line}, column {}", c + 1), "value is not finite"));
            }
            data.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width.unwrap_or(0)), data).map_err(|e| LassError::parse("end of file", e.to_string()))
}

pub fn read_dense_csv_file(path: &Path) -> Result<Array2<f64>> {
    read_dense_csv(fs::File::open(path)?)
}

/// Shortest representation that parses back to the same value.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_dense_csv<W: Write>(mut out: W, m: ArrayView2<'_, f64>) -> Result<()> {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Dense CSV or Matrix Market, chosen by the `.mtx` extension.
pub fn read_matrix_file(path: &Path) -> Result<Array2<f64>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")) {
        Ok(read_matrix_market(fs::File::open(path)?)?.to_dense())
    } else {
        read_dense_csv_file(path)
    }
}

fn short_hash(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Content hash of a similarity graph.
pub fn graph_fingerprint(w: &SparseSimilarity) -> String {
    let m = w.matrix();
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    for &p in m.indptr() {
        h.update((p as u64).to_le_bytes());
    }
    for &j in m.indices() {
        h.update((j as u64).to_le_bytes());
    }
    for &v in m.data() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format_version: u32,
    pub id: String,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    /// Penalty used for each component; `None` where no iteration ran.
    pub rho: Vec<Option<f64>>,
    pub graph_fingerprint: String,
    pub component_labels: Vec<usize>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub meta: ModelMeta,
    pub z: Array2<f64>,
    pub diagnostics: Diagnostics,
}

impl ModelBundle {
    /// Builds a bundle whose id is a hash of the serialized `z`.
    pub fn new(
        z: Array2<f64>,
        lambda: f64,
        graph_fingerprint: String,
        component_labels: Vec<usize>,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        if component_labels.len() != z.nrows() {
            return Err(LassError::dims("one component label per item is required"));
        }
        let mut csv = Vec::new();
        write_dense_csv(&mut csv, z.view())?;
        let meta = ModelMeta {
            format_version: MODEL_FORMAT_VERSION,
            id: short_hash(&csv),
            n: z.nrows(),
            k: z.ncols(),
            lambda,
            rho: diagnostics.components.iter().map(|c| c.rho).collect(),
            graph_fingerprint,
            component_labels,
            converged: diagnostics.converged,
        };
        Ok(ModelBundle { meta, z, diagnostics })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut z = std::io::BufWriter::new(fs::File::create(dir.join("z.csv"))?);
        write_dense_csv(&mut z, self.z.view())?;
        z.flush()?;
        fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&self.meta)?)?;
        fs::write(dir.join("diagnostics.json"), serde_json::to_vec_pretty(&self.diagnostics)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta_bytes = fs::read(dir.join("meta.json"))?;
        let version: serde_json::Value = serde_json::from_slice(&meta_bytes)?;
        match version.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => return Err(LassError::invalid(format!("unsupported model format version {v}"))),
            None => return Err(LassError::parse("meta.json", "missing format_version")),
        }
        let meta: ModelMeta = serde_json::from_slice(&meta_bytes)?;
        let z = read_dense_csv_file(&dir.join("z.csv")).map_err(|e| match e {
            LassError::Parse { location, message } => LassError::parse(format!("z.csv {location}"), message),
            other => other,
        })?;
        Self::from_parts(meta, z, serde_json::from_slice(&fs::read(dir.join("diagnostics.json"))?)?)
    }

    /// Checks that the pieces agree with each other.
    pub fn from_parts(meta: ModelMeta, z: Array2<f64>, diagnostics: Diagnostics) -> Result<Self> {
        if meta.format_version != MODEL_FORMAT_VERSION {
            return Err(LassError::invalid(format!("unsupported model format version {}", meta.format_version)));
        }
        if z.nrows() != meta.n || z.ncols() != meta.k {
            return Err(LassError::parse(
                "z.csv",
                format!("matrix is {}x{}, metadata says {}x{}", z.nrows(), z.ncols(), meta.n, meta.k),
            ));
        }
        Ok(ModelBundle { meta, z, diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let w = SparseSimilarity::from_edges(4, vec![(0, 1, 0.1), (1, 3, 1.0 / 3.0), (2, 3, 1e-300)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, w.matrix(), true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n4 4 3\n"));
        let back = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(&back, w.matrix());
    }

    #[test]
    fn matrix_market_general_and_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n% comment\n2 3 2\n1 3\n2 1\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), array![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn matrix_market_errors_have_lines() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read_matrix_market(text.as_bytes()) {
            Err(LassError::Parse { location, .. }) => assert_eq!(location, "line 3"),
            other => panic!("{other:?}"),
        }
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let z = array![[0.1, 1.0 / 3.0], [1e-20, 2.5e17], [0.0, -7.25]];
        let mut buf = Vec::new();
        write_dense_csv(&mut buf, z.view()).unwrap();
        assert_eq!(read_dense_csv(buf.as_slice()).unwrap(), z);
    }

    #[test]
    fn csv_errors_name_the_line() {
        match read_dense_csv("1,2\n3,x\n".as_bytes()) {
            Err(LassError::Parse { location, .. }) => assert_eq!(location, "line 2, column 2"),
            other => panic!("{other:?}"),
        }
        match read_dense_csv("# header\n1,2\n3\n".as_bytes()) {
            Err(LassError::Parse { location, .. }) => assert_eq!(location, "line 3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = SparseSimilarity::from_edges(3, vec![(0, 1, 1.0)]).unwrap();
        let b = SparseSimilarity::from_edges(3, vec![(0, 1, 0.5)]).unwrap();
        assert_ne!(graph_fingerprint(&a), graph_fingerprint(&b));
        assert_eq!(graph_fingerprint(&a), graph_fingerprint(&a.clone()));
    }
}
