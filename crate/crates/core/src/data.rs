//! Dataset ingestion, synthetic generators, row normalization and sharding.

use std::fmt::Write as _;
use std::io::{BufRead, Read};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sparse::{sorted_union, SparseVec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: SparseVec,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub dim: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        if let Some(s) = samples.iter().find(|s| s.features.dim() != dim) {
            return Err(Error::InvalidVector(format!(
                "sample of dim {} in dataset of dim {dim}",
                s.features.dim()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.samples.iter().map(|s| s.features.nnz()).sum()
    }
}

/// The rows held by one worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerShard {
    pub worker_id: usize,
    pub dim: usize,
    pub rows: Vec<Sample>,
    /// Union of the row supports, sorted.
    pub support: Vec<usize>,
}

impl WorkerShard {
    pub fn new(worker_id: usize, dim: usize, rows: Vec<Sample>) -> Self {
        let support = sorted_union(rows.iter().map(|r| r.features.indices()));
        WorkerShard {
            worker_id,
            dim,
            rows,
            support,
        }
    }
}

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).
///
/// `dim` overrides the inferred dimension (largest index seen) so that
/// train and test files can share one feature space.
pub fn parse_libsvm<R: Read>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<(f64, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let body = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let mut tokens = body.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("bad label {label_tok:?}")))?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            if idx == "qid" {
                continue;
            }
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(err("indices are 1-based; got 0".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value {val}")));
            }
            let idx = idx - 1;
            if let Some(&prev) = indices.last() {
                if idx <= prev {
                    return Err(err(format!(
                        "indices not increasing ({} then {})",
                        prev + 1,
                        idx + 1
                    )));
                }
            }
            max_index = max_index.max(idx + 1);
            if val != 0.0 {
                indices.push(idx);
                values.push(val);
            }
        }
        rows.push((label, indices, values));
    }
    if rows.is_empty() {
        return Err(Error::NoSamples);
    }
    let dim = match dim {
        Some(d) if d < max_index => {
            return Err(Error::Config(format!(
                "dim override {d} smaller than largest index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index.max(1),
    };
    let samples = rows
        .into_iter()
        .map(|(label, idx, val)| {
            Ok(Sample {
                features: SparseVec::new(dim, idx, val)?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new("libsvm", dim, samples)
}

pub fn load_libsvm(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut ds = parse_libsvm(file, dim)?;
    ds.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "libsvm".into());
    Ok(ds)
}

/// Writes LIBSVM text with 1-based indices; values use shortest round-trip
/// formatting.
pub fn to_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for s in &ds.samples {
        write!(out, "{}", s.label).unwrap();
        for (i, v) in s.features.iter() {
            write!(out, " {}:{}", i + 1, v).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Dense synthetic data: features uniform on [0,1), labels the sign of a
/// standard Gaussian draw (an exact zero maps to +1).
pub fn gen_dense(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(n >= 1 && d >= 1, "gen_dense needs n >= 1 and d >= 1");
    let mut rng = stream(seed, Purpose::Dataset, 0, 0);
    let samples = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let g: f64 = StandardNormal.sample(&mut rng);
            Sample {
                features: SparseVec::from_dense(&row),
                label: if g < 0.0 { -1.0 } else { 1.0 },
            }
        })
        .collect();
    Dataset {
        name: format!("gendense-{n}x{d}"),
        dim: d,
        samples,
    }
}

/// Sparse synthetic data: each row has `nnz_per_row` distinct coordinates
/// chosen uniformly, with standard Gaussian values; labels as in
/// [`gen_dense`].
pub fn gen_sparse(n: usize, d: usize, nnz_per_row: usize, seed: u64) -> Dataset {
    assert!(n >= 1 && d >= 1, "gen_sparse needs n >= 1 and d >= 1");
    assert!(
        (1..=d).contains(&nnz_per_row),
        "nnz_per_row must be in [1, d]"
    );
    let mut rng = stream(seed, Purpose::Dataset, 1, 0);
    let samples = (0..n)
        .map(|_| {
            let mut idx = index::sample(&mut rng, d, nnz_per_row).into_vec();
            idx.sort_unstable();
            let pairs: Vec<(usize, f64)> = idx
                .into_iter()
                .map(|i| (i, StandardNormal.sample(&mut rng)))
                .collect();
            let g: f64 = StandardNormal.sample(&mut rng);
            Sample {
                features: SparseVec::from_sorted_pairs(d, pairs),
                label: if g < 0.0 { -1.0 } else { 1.0 },
            }
        })
        .collect();
    Dataset {
        name: format!("sparse-{n}x{d}-{nnz_per_row}"),
        dim: d,
        samples,
    }
}

/// Scales every nonzero row to unit Euclidean norm.
pub fn normalize_rows(ds: &Dataset) -> Dataset {
    let samples = ds
        .samples
        .iter()
        .map(|s| {
            let n = s.features.norm();
            let features = if n > 0.0 {
                s.features.scaled(1.0 / n)
            } else {
                s.features.clone()
            };
            Sample {
                features,
                label: s.label,
            }
        })
        .collect();
    Dataset {
        name: ds.name.clone(),
        dim: ds.dim,
        samples,
    }
}

/// Splits samples into `m` contiguous blocks in file order. The first
/// `n mod m` shards get one extra row.
pub fn shard(ds: &Dataset, m: usize) -> Result<Vec<WorkerShard>> {
    let n = ds.len();
    if m == 0 || m > n {
        return Err(Error::Config(format!(
            "cannot shard {n} samples across {m} workers"
        )));
    }
    let (base, extra) = (n / m, n % m);
    let mut shards = Vec::with_capacity(m);
    let mut start = 0;
    for w in 0..m {
        let len = base + usize::from(w < extra);
        shards.push(WorkerShard::new(
            w,
            ds.dim,
            ds.samples[start..start + len].to_vec(),
        ));
        start += len;
    }
    Ok(shards)
}

#[derive(Serialize, Deserialize)]
struct EntryRow {
    row: usize,
    index: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    row: usize,
    label: f64,
}

/// Canonical dump: `features.csv` (`row,index,value`) and `labels.csv`
/// (`row,label`) under `dir`, plus the dimension in `dim.txt`.
pub fn write_csv_dump(ds: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("features.csv"))?;
    for (r, s) in ds.samples.iter().enumerate() {
        for (index, value) in s.features.iter() {
            w.serialize(EntryRow {
                row: r,
                index,
                value,
            })?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("labels.csv"))?;
    for (r, s) in ds.samples.iter().enumerate() {
        w.serialize(LabelRow {
            row: r,
            label: s.label,
        })?;
    }
    w.flush()?;
    std::fs::write(dir.join("dim.txt"), format!("{}\n", ds.dim))?;
    Ok(())
}

pub fn read_csv_dump(dir: &Path, name: &str) -> Result<Dataset> {
    let dim: usize = std::fs::read_to_string(dir.join("dim.txt"))?
        .trim()
        .parse()
        .map_err(|_| Error::Config("bad dim.txt".into()))?;
    let mut labels = Vec::new();
    for rec in csv::Reader::from_path(dir.join("labels.csv"))?.deserialize() {
        let r: LabelRow = rec?;
        if r.row != labels.len() {
            return Err(Error::Config(format!("labels.csv out of order at row {}", r.row)));
        }
        labels.push(r.label);
    }
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); labels.len()];
    for rec in csv::Reader::from_path(dir.join("features.csv"))?.deserialize() {
        let e: EntryRow = rec?;
        let slot = rows
            .get_mut(e.row)
            .ok_or_else(|| Error::Config(format!("feature row {} has no label", e.row)))?;
        slot.0.push(e.index);
        slot.1.push(e.value);
    }
    let samples = rows
        .into_iter()
        .zip(labels)
        .map(|((idx, val), label)| {
            Ok(Sample {
                features: SparseVec::new(dim, idx, val)?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(name, dim, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_line() {
        let ds = parse_libsvm("1 3:0.5 7:1.25".as_bytes(), None).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dim, 7);
        assert_eq!(ds.samples[0].label, 1.0);
        assert_eq!(ds.samples[0].features.indices(), &[2, 6]);
        assert_eq!(ds.samples[0].features.values(), &[0.5, 1.25]);
    }

    #[test]
    fn empty_input_is_no_samples() {
        let err = parse_libsvm("".as_bytes(), None).unwrap_err();
        assert_eq!(err.to_string(), "no samples");
        let err = parse_libsvm("# only a comment\n\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::NoSamples));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = parse_libsvm("1 1:2\n-1 4:1 2:3\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_libsvm("1 1:2\n\n+1 3-4\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_libsvm("x 1:2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 0:2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn comments_and_dim_override() {
        let text = "# header\n-1 2:1 # trailing\n+1 1:0.5 4:2\n";
        let ds = parse_libsvm(text.as_bytes(), Some(10)).unwrap();
        assert_eq!(ds.dim, 10);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[0].label, -1.0);
        assert!(parse_libsvm(text.as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn explicit_zero_values_are_dropped() {
        let ds = parse_libsvm("1 1:0 2:3\n".as_bytes(), None).unwrap();
        assert_eq!(ds.samples[0].features.indices(), &[1]);
    }

    #[test]
    fn gen_dense_ranges_and_determinism() {
        let a = gen_dense(50, 8, 3);
        let b = gen_dense(50, 8, 3);
        let c = gen_dense(50, 8, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for s in &a.samples {
            assert!(s.label == 1.0 || s.label == -1.0);
            assert!(s.features.values().iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn gen_dense_table_shape() {
        let ds = gen_dense(40000, 1000, 11);
        assert_eq!(ds.len(), 40000);
        assert_eq!(ds.dim, 1000);
    }

    #[test]
    fn gen_sparse_row_counts() {
        let ds = gen_sparse(100, 2000, 5, 1);
        assert!(ds.samples.iter().all(|s| s.features.nnz() == 5));
        assert_eq!(ds, gen_sparse(100, 2000, 5, 1));
    }

    #[test]
    fn normalize_examples() {
        let rows = vec![
            Sample {
                features: SparseVec::from_dense(&[3.0, 4.0]),
                label: 1.0,
            },
            Sample {
                features: SparseVec::zeros(2),
                label: -1.0,
            },
            Sample {
                features: SparseVec::from_dense(&[0.0, 1.0]),
                label: 1.0,
            },
        ];
        let ds = Dataset::new("t", 2, rows).unwrap();
        let nd = normalize_rows(&ds);
        let r0 = nd.samples[0].features.to_dense();
        assert!((r0[0] - 0.6).abs() < 1e-15 && (r0[1] - 0.8).abs() < 1e-15);
        assert!(nd.samples[1].features.is_zero());
        assert_eq!(nd.samples[2], ds.samples[2]);
    }

    #[test]
    fn shard_sizes() {
        let ds = gen_dense(10, 2, 0);
        let sizes: Vec<usize> = shard(&ds, 3).unwrap().iter().map(|s| s.rows.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let one = shard(&ds, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].rows, ds.samples);
        let all = shard(&ds, 10).unwrap();
        assert!(all.iter().all(|s| s.rows.len() == 1));
        assert!(shard(&ds, 11).is_err());
        assert!(shard(&ds, 0).is_err());
    }

    #[test]
    fn shard_support_is_union() {
        let ds = parse_libsvm("1 1:1 3:1\n1 2:1\n1 5:1\n".as_bytes(), None).unwrap();
        let sh = shard(&ds, 2).unwrap();
        assert_eq!(sh[0].support, vec![0, 1, 2]);
        assert_eq!(sh[1].support, vec![4]);
    }

    #[test]
    fn csv_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = gen_sparse(20, 30, 3, 9);
        write_csv_dump(&ds, dir.path()).unwrap();
        let back = read_csv_dump(dir.path(), &ds.name).unwrap();
        assert_eq!(back, ds);
    }
}
