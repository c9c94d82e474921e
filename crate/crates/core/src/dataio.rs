//! Binary classification datasets: LIBSVM/SVMlight text parsing,
//! feature scaling and a seeded Gaussian-blob generator.
//!
//! Grammar, one sample per nonempty line:
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ... [# comment]
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. Labels already
//! in {-1, +1} are kept; any other two-valued labelling maps the smaller raw
//! label to -1 and the larger to +1.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Row-sparse (CSR) design matrix with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from sparse rows of 0-based `(index, value)` pairs.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>, n_features: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        crate::error::check_dim(rows.len(), labels.len())?;
        if let Some(&label) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidLabel { label });
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (k, row) in rows.into_iter().enumerate() {
            let mut prev = None;
            for (j, v) in row {
                if j >= n_features {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("feature index {} exceeds dimension {n_features}", j + 1),
                    });
                }
                if prev.is_some_and(|p| j <= p) {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: "feature indices must be strictly increasing".into(),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("non-finite value {v}"),
                    });
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n_features,
            indptr,
            indices,
            values,
            labels,
        })
    }

    pub fn from_dense(x: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let d = x.first().map_or(0, Vec::len);
        let rows = x
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Self::from_rows(rows, labels, d)
    }

    /// Overrides the dimension, e.g. when trailing features are all zero.
    pub fn with_n_features(mut self, d: usize) -> Result<Self> {
        if let Some(&max) = self.indices.iter().max() {
            if max >= d {
                return Err(Error::DimensionMismatch {
                    expected: max + 1,
                    found: d,
                });
            }
        }
        self.n_features = d;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, k: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[k], self.indptr[k + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    #[inline]
    pub fn row_dot(&self, k: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(k);
        idx.iter().zip(val).map(|(&j, &v)| v * w[j]).sum()
    }

    pub fn dense_row(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        let (idx, val) = self.row(k);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] = v;
        }
        out
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses LIBSVM text. `d` is the largest feature index seen.
pub fn parse_libsvm(reader: impl BufRead) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut line_of_row = Vec::new();
    let mut n_features = 0usize;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_error(line_no, format!("unparseable label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_error(line_no, format!("non-finite label `{label_tok}`")));
        }

        let mut row = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("malformed token `{tok}`")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| parse_error(line_no, format!("unparseable index `{idx_str}`")))?;
            if idx == 0 {
                return Err(parse_error(line_no, "feature indices are 1-based"));
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| parse_error(line_no, format!("unparseable value `{val_str}`")))?;
            if !val.is_finite() {
                return Err(parse_error(line_no, format!("non-finite value `{val_str}`")));
            }
            if prev.is_some_and(|p| idx <= p) {
                return Err(parse_error(
                    line_no,
                    format!("index {idx} does not increase (previous {})", prev.unwrap()),
                ));
            }
            prev = Some(idx);
            n_features = n_features.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        raw_labels.push(label);
        line_of_row.push(line_no);
    }

    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let labels = map_labels(&raw_labels, &line_of_row)?;
    Dataset::from_rows(rows, labels, n_features)
}

fn map_labels(raw: &[f64], lines: &[usize]) -> Result<Vec<f64>> {
    if raw.iter().all(|&y| y == 1.0 || y == -1.0) {
        return Ok(raw.to_vec());
    }
    let mut distinct: Vec<f64> = Vec::new();
    for (&y, &line) in raw.iter().zip(lines) {
        if !distinct.contains(&y) {
            if distinct.len() == 2 {
                return Err(parse_error(line, format!("third distinct label {y}; data must be binary")));
            }
            distinct.push(y);
        }
    }
    if distinct.len() < 2 {
        return Err(parse_error(
            lines[0],
            format!("single label {} outside {{-1, +1}}; cannot infer the binary mapping", raw[0]),
        ));
    }
    let low = distinct[0].min(distinct[1]);
    Ok(raw.iter().map(|&y| if y == low { -1.0 } else { 1.0 }).collect())
}

/// Opens a LIBSVM file, transparently decompressing gzip input.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut file = BufReader::new(File::open(path)?);
    let gz = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        parse_libsvm(BufReader::new(GzDecoder::new(file)))
    } else {
        parse_libsvm(file)
    }
}

/// Writes the dataset back as LIBSVM text; values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_libsvm(ds: &Dataset, mut out: impl Write) -> io::Result<()> {
    for k in 0..ds.len() {
        write!(out, "{}", if ds.labels[k] > 0.0 { "+1" } else { "-1" })?;
        let (idx, val) = ds.row(k);
        for (&j, &v) in idx.iter().zip(val) {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// Every nonzero row scaled to unit Euclidean norm.
    L2Rows,
    /// Each feature mapped affinely so its min/max over all rows (implicit
    /// zeros included) become 0/1. Constant features become 0.
    Scale01,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "l2_rows" => Ok(Self::L2Rows),
            "scale01" => Ok(Self::Scale01),
            _ => Err(Error::Config(format!("unknown normalization `{s}`"))),
        }
    }
}

pub fn normalize(ds: &Dataset, mode: Normalization) -> Dataset {
    match mode {
        Normalization::None => ds.clone(),
        Normalization::L2Rows => {
            let mut out = ds.clone();
            for k in 0..out.len() {
                let (a, b) = (out.indptr[k], out.indptr[k + 1]);
                let n = crate::vector::norm(&out.values[a..b]);
                if n > 0.0 {
                    out.values[a..b].iter_mut().for_each(|v| *v /= n);
                }
            }
            out
        }
        Normalization::Scale01 => {
            let d = ds.n_features;
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            let mut count = vec![0usize; d];
            for (&j, &v) in ds.indices.iter().zip(&ds.values) {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
                count[j] += 1;
            }
            for j in 0..d {
                if count[j] < ds.len() {
                    lo[j] = lo[j].min(0.0);
                    hi[j] = hi[j].max(0.0);
                }
            }
            let map = |j: usize, v: f64| {
                let range = hi[j] - lo[j];
                if range > 0.0 {
                    (v - lo[j]) / range
                } else {
                    0.0
                }
            };
            let rows = (0..ds.len())
                .map(|k| {
                    let dense = ds.dense_row(k);
                    dense
                        .into_iter()
                        .enumerate()
                        .map(|(j, v)| (j, map(j, v)))
                        .filter(|&(_, v)| v != 0.0)
                        .collect()
                })
                .collect();
            Dataset::from_rows(rows, ds.labels.clone(), d).expect("scaling preserves validity")
        }
    }
}

/// Gaussian blobs `x = y·(s/2)·u + N(0, I)` around a random unit direction
/// `u`, with fair-coin labels. `separability = ∞` instead labels standard
/// normal points by `sign⟨u, x⟩`, which is linearly separable.
pub fn synthetic_classification(m: usize, d: usize, seed: u64, separability: f64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::NoRows);
    }
    if d == 0 || separability.is_nan() || separability < 0.0 {
        return Err(Error::Config("synthetic data needs d >= 1 and separability >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = crate::vector::norm(&u);
    u.iter_mut().for_each(|v| *v /= n);

    let mut x = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for _ in 0..m {
        let noise: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if separability.is_infinite() {
            let label = if crate::vector::dot(&u, &noise) >= 0.0 { 1.0 } else { -1.0 };
            x.push(noise);
            y.push(label);
        } else {
            let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let shift = label * separability / 2.0;
            x.push(noise.iter().zip(&u).map(|(z, ui)| z + shift * ui).collect());
            y.push(label);
        }
    }
    let rows = x
        .iter()
        .map(|r| r.iter().copied().enumerate().collect())
        .collect();
    Dataset::from_rows(rows, y, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Dataset> {
        parse_libsvm(s.as_bytes())
    }

    #[test]
    fn parses_a_single_line() {
        let ds = parse("+1 1:0.5 3:2").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.labels(), &[1.0]);
        assert_eq!(ds.row(0), (&[0usize, 2][..], &[0.5, 2.0][..]));
    }

    #[test]
    fn empty_input_has_no_rows() {
        assert!(matches!(parse(""), Err(Error::NoRows)));
        assert!(matches!(parse("\n  \n# only a comment\n"), Err(Error::NoRows)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("+1 1:1\n-1 2:1 2:3\n", 2),
            ("+1 1:1\n\n-1 3:1 x\n", 3),
            ("+1 1:abc\n", 1),
            ("foo 1:1\n", 1),
            ("+1 0:1\n", 1),
            ("+1 1:nan\n", 1),
            ("-1 2:1 1:1\n", 1),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn label_mapping() {
        assert_eq!(parse("2 1:1\n1 1:2\n2 2:1").unwrap().labels(), &[1.0, -1.0, 1.0]);
        assert_eq!(parse("0 1:1\n1 1:2").unwrap().labels(), &[-1.0, 1.0]);
        assert_eq!(parse("-1 1:1\n1 1:2").unwrap().labels(), &[-1.0, 1.0]);
        assert!(parse("0 1:1\n1 1:1\n2 1:1").is_err());
        assert!(parse("3 1:1").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let ds = parse("# header\n+1 1:1 # first\n\n-1 4:2\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_features(), 4);
    }

    #[test]
    fn dimension_override() {
        let ds = parse("+1 2:1").unwrap();
        assert_eq!(ds.clone().with_n_features(5).unwrap().n_features(), 5);
        assert!(ds.with_n_features(1).is_err());
    }

    #[test]
    fn gzip_input_is_transparent() {
        use flate2::{write::GzEncoder, Compression};
        let dir = std::env::temp_dir().join(format!("jaguar-gz-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.svm.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"+1 1:0.5 3:2\n-1 2:1\n").unwrap();
        enc.finish().unwrap();
        let ds = load_libsvm(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_features(), 3);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn normalization_modes() {
        let ds = parse("+1 1:3 2:4\n-1 2:-2\n+1 1:1").unwrap();
        let l2 = normalize(&ds, Normalization::L2Rows);
        for k in 0..l2.len() {
            assert!((crate::vector::norm(l2.row(k).1) - 1.0).abs() < 1e-15);
        }
        let s = normalize(&ds, Normalization::Scale01);
        assert_eq!((s.len(), s.n_features()), (ds.len(), ds.n_features()));
        // feature 1: {3, 0, 1} -> {1, 0, 1/3}; feature 2: {4, -2, 0} -> {1, 0, 1/3}
        assert_eq!(s.dense_row(0), vec![1.0, 1.0]);
        assert_eq!(s.dense_row(1), vec![0.0, 0.0]);
        assert!((s.dense_row(2)[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.dense_row(2)[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(normalize(&ds, Normalization::None), ds);
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = synthetic_classification(50, 4, 7, 2.0).unwrap();
        assert_eq!(a, synthetic_classification(50, 4, 7, 2.0).unwrap());
        assert_ne!(a, synthetic_classification(50, 4, 8, 2.0).unwrap());
    }

    #[test]
    fn synthetic_labels_are_balanced() {
        // P(|#pos - m/2| > 0.1 m) for Binomial(1000, 1/2) is below 1e-9
        for seed in 0..5 {
            let ds = synthetic_classification(1000, 3, seed, 1.0).unwrap();
            let pos = ds.labels().iter().filter(|&&y| y > 0.0).count() as f64;
            assert!((pos / 1000.0 - 0.5).abs() <= 0.1, "seed {seed}: {pos}");
        }
    }

    #[test]
    fn infinite_separability_is_linearly_separable() {
        let ds = synthetic_classification(200, 5, 3, f64::INFINITY).unwrap();
        // perceptron with bias converges in finitely many passes on separable data
        let mut w = vec![0.0; 6];
        let mut converged = false;
        for _ in 0..10_000 {
            let mut mistakes = 0;
            for k in 0..ds.len() {
                let mut x = ds.dense_row(k);
                x.push(1.0);
                let y = ds.labels()[k];
                if y * crate::vector::dot(&w, &x) <= 0.0 {
                    w.iter_mut().zip(&x).for_each(|(wi, xi)| *wi += y * xi);
                    mistakes += 1;
                }
            }
            if mistakes == 0 {
                converged = true;
                break;
            }
        }
        assert!(converged);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let row = prop::collection::btree_map(0usize..20, -1e6f64..1e6, 0..6);
        prop::collection::vec((row, any::<bool>()), 1..12).prop_map(|rows| {
            let labels = rows.iter().map(|(_, p)| if *p { 1.0 } else { -1.0 }).collect();
            let rows: Vec<Vec<(usize, f64)>> =
                rows.into_iter().map(|(r, _)| r.into_iter().collect()).collect();
            let d = rows.iter().flatten().map(|&(j, _)| j + 1).max().unwrap_or(0);
            Dataset::from_rows(rows, labels, d).unwrap()
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_round_trips(ds in arb_dataset()) {
            // all-positive or all-negative labels stay as they are
            let mut buf = Vec::new();
            write_libsvm(&ds, &mut buf).unwrap();
            let back = parse_libsvm(&buf[..]).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
