//! Schema inference, categorical encoding, CSV ingestion, and deterministic
//! splitting for an all-categorical CTR dataset.
//!
//! Every column is categorical. The label column holds the binary click
//! signal and is parsed strictly as `"0"` / `"1"`. Vocabularies are ordered
//! by first appearance so encodings stay stable across re-reads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One categorical feature: a name plus its ordered vocabulary.
///
/// The category code of a value is its position in `vocabulary`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub vocabulary: Vec<String>,
}

impl Feature {
    pub fn cardinality(&self) -> usize {
        self.vocabulary.len()
    }
}

/// Ordered categorical feature definitions plus the binary label column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<Feature>,
    label_name: String,
    /// Per-feature value → code lookup, kept in sync with `features`.
    lookup: Vec<HashMap<String, u32>>,
}

impl FeatureSchema {
    /// Build a schema from explicit features, validating the invariants:
    /// non-empty duplicate-free vocabularies, unique feature names, and a
    /// label name distinct from every feature name.
    pub fn new(features: Vec<Feature>, label_name: impl Into<String>) -> Result<Self> {
        let label_name = label_name.into();
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.clone()) {
                return Err(Error::Config(format!("duplicate feature name {:?}", f.name)));
            }
            if f.name == label_name {
                return Err(Error::Config(format!(
                    "label column {:?} collides with a feature name",
                    label_name
                )));
            }
            if f.vocabulary.is_empty() {
                return Err(Error::Config(format!("feature {:?} has empty vocabulary", f.name)));
            }
            let mut vocab_seen = std::collections::HashSet::new();
            for v in &f.vocabulary {
                if !vocab_seen.insert(v) {
                    return Err(Error::Config(format!(
                        "feature {:?} has duplicate category {:?}",
                        f.name, v
                    )));
                }
            }
        }
        let lookup = features
            .iter()
            .map(|f| {
                f.vocabulary
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), i as u32))
                    .collect()
            })
            .collect();
        Ok(Self { features, label_name, lookup })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    /// Vocabulary sizes in feature order.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(Feature::cardinality).collect()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Encode one raw value for feature `i`.
    pub fn encode_value(&self, i: usize, value: &str) -> Result<u32> {
        self.lookup[i].get(value).copied().ok_or_else(|| Error::UnknownCategory {
            feature: self.features[i].name.clone(),
            value: value.to_string(),
        })
    }

    /// Decode the category code of feature `i` back to its string value.
    pub fn decode_value(&self, i: usize, code: u32) -> &str {
        &self.features[i].vocabulary[code as usize]
    }

    /// Encode a full raw row (feature values in schema order).
    pub fn encode_row(&self, raw: &[&str], label: u8) -> Result<Row> {
        if raw.len() != self.features.len() {
            return Err(Error::RaggedRow {
                row: 0,
                expected: self.features.len(),
                got: raw.len(),
            });
        }
        let values = raw
            .iter()
            .enumerate()
            .map(|(i, v)| self.encode_value(i, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Row { values, label })
    }

    /// Decode a row back to raw strings (features only).
    pub fn decode_row<'a>(&'a self, row: &Row) -> Vec<&'a str> {
        row.values
            .iter()
            .enumerate()
            .map(|(i, &c)| self.decode_value(i, c))
            .collect()
    }
}

/// One encoded observation: category codes in schema feature order plus the
/// binary label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row {
    pub values: Vec<u32>,
    pub label: u8,
}

impl Row {
    pub fn new(values: Vec<u32>, label: u8) -> Self {
        Self { values, label }
    }

    /// Check the row against a schema: every code in range, label binary.
    pub fn is_valid(&self, schema: &FeatureSchema) -> bool {
        self.label <= 1
            && self.values.len() == schema.num_features()
            && self
                .values
                .iter()
                .zip(schema.features())
                .all(|(&c, f)| (c as usize) < f.cardinality())
    }
}

/// An encoded dataset: shared schema plus rows.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct TabularDataset {
    pub schema: Arc<FeatureSchema>,
    pub rows: Vec<Row>,
}

impl TabularDataset {
    pub fn new(schema: Arc<FeatureSchema>, rows: Vec<Row>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !row.is_valid(&schema) {
                return Err(Error::Shape(format!("row {i} violates schema")));
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Exact (positive, negative) label counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.rows.iter().filter(|r| r.label == 1).count();
        (pos, self.rows.len() - pos)
    }

    /// Deterministic shuffle-and-partition into (train, val, test).
    ///
    /// Ratios must be positive and sum to 1 within 1e-9. Val/test sizes are
    /// floor-based; remainder rows go to train.
    pub fn split(&self, ratios: (f64, f64, f64), seed: u64) -> Result<(Self, Self, Self)> {
        let (tr, va, te) = ratios;
        let sum = tr + va + te;
        if !(tr > 0.0 && va > 0.0 && te > 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadSplitRatios(sum));
        }
        let n = self.rows.len();
        let mut order: Vec<usize> = (0..n).collect();
        shuffle(&mut order, seed);

        let n_val = (va * n as f64).floor() as usize;
        let n_test = (te * n as f64).floor() as usize;
        let n_train = n - n_val - n_test;

        let take = |range: std::ops::Range<usize>| -> Self {
            Self {
                schema: Arc::clone(&self.schema),
                rows: order[range].iter().map(|&i| self.rows[i].clone()).collect(),
            }
        };
        Ok((
            take(0..n_train),
            take(n_train..n_train + n_val),
            take(n_train + n_val..n),
        ))
    }

    /// Write the dataset as a comma-delimited text file with a header row.
    ///
    /// When `provenance` is given it is appended as one extra trailing
    /// column (one flag string per row).
    pub fn write_csv(&self, path: &Path, provenance: Option<&[&str]>) -> Result<()> {
        let mut out = String::new();
        for f in self.schema.features() {
            out.push_str(&f.name);
            out.push(',');
        }
        out.push_str(self.schema.label_name());
        if provenance.is_some() {
            out.push_str(",provenance");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &code) in row.values.iter().enumerate() {
                out.push_str(self.schema.decode_value(j, code));
                out.push(',');
            }
            let _ = write!(out, "{}", row.label);
            if let Some(tags) = provenance {
                out.push(',');
                out.push_str(tags[i]);
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// In-place Fisher-Yates with a seed-derived ChaCha stream. Hand-rolled so
/// the permutation is stable regardless of rand's shuffle internals.
fn shuffle(order: &mut [usize], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

fn parse_label(token: &str, row: usize) -> Result<u8> {
    match token.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::LabelFormat { row, value: other.to_string() }),
    }
}

/// Infer a schema from raw rows of (feature strings, label string).
///
/// Vocabulary of feature `i` is the distinct values observed in column `i`,
/// in first-appearance order. Features are named `f0`, `f1`, … and the label
/// column `label`; use [`load_csv`] when real column names are available.
pub fn infer_schema<S: AsRef<str>>(raw_rows: &[(Vec<S>, S)]) -> Result<FeatureSchema> {
    let first = raw_rows.first().ok_or(Error::EmptyInput("no rows to infer schema from"))?;
    let arity = first.0.len();
    let names: Vec<String> = (0..arity).map(|i| format!("f{i}")).collect();
    infer_schema_named(&names, "label", raw_rows)
}

/// Schema inference with explicit column names (header-driven).
pub fn infer_schema_named<S: AsRef<str>>(
    feature_names: &[String],
    label_name: &str,
    raw_rows: &[(Vec<S>, S)],
) -> Result<FeatureSchema> {
    if raw_rows.is_empty() {
        return Err(Error::EmptyInput("no rows to infer schema from"));
    }
    let arity = feature_names.len();
    let mut vocabs: Vec<Vec<String>> = vec![Vec::new(); arity];
    let mut seen: Vec<HashMap<String, ()>> = vec![HashMap::new(); arity];
    for (r, (values, label)) in raw_rows.iter().enumerate() {
        if values.len() != arity {
            return Err(Error::RaggedRow { row: r, expected: arity, got: values.len() });
        }
        parse_label(label.as_ref(), r)?;
        for (i, v) in values.iter().enumerate() {
            let v = v.as_ref();
            if !seen[i].contains_key(v) {
                seen[i].insert(v.to_string(), ());
                vocabs[i].push(v.to_string());
            }
        }
    }
    let features = feature_names
        .iter()
        .zip(vocabs)
        .map(|(name, vocabulary)| Feature { name: name.clone(), vocabulary })
        .collect();
    FeatureSchema::new(features, label_name)
}

/// Load a comma-delimited text file with a header row, inferring the schema
/// from the observed values. `label_column` names the binary label.
///
/// The dialect is deliberately plain: UTF-8, comma separators, no quoting.
pub fn load_csv(path: &Path, label_column: &str) -> Result<TabularDataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or(Error::EmptyInput("csv file has no header"))?
        .split(',')
        .map(str::trim)
        .collect();
    let label_idx = header
        .iter()
        .position(|&h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut raw_rows: Vec<(Vec<&str>, &str)> = Vec::new();
    for (r, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::RaggedRow { row: r, expected: header.len(), got: cells.len() });
        }
        let label = cells[label_idx];
        let values: Vec<&str> = cells
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, &c)| c)
            .collect();
        raw_rows.push((values, label));
    }

    let schema = Arc::new(infer_schema_named(&feature_names, label_column, &raw_rows)?);
    let rows = raw_rows
        .iter()
        .enumerate()
        .map(|(r, (values, label))| {
            let label = parse_label(label, r)?;
            schema.encode_row(values, label)
        })
        .collect::<Result<Vec<_>>>()?;
    TabularDataset::new(schema, rows)
}

/// Load a CSV against an explicit schema. Columns outside the schema (for
/// example a `provenance` column) are ignored; values missing from a
/// vocabulary are an error.
pub fn load_csv_with_schema(path: &Path, schema: Arc<FeatureSchema>) -> Result<TabularDataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or(Error::EmptyInput("csv file has no header"))?
        .split(',')
        .map(str::trim)
        .collect();
    let label_idx = header
        .iter()
        .position(|&h| h == schema.label_name())
        .ok_or_else(|| Error::MissingColumn(schema.label_name().to_string()))?;
    let col_for_feature: Vec<usize> = schema
        .features()
        .iter()
        .map(|f| {
            header
                .iter()
                .position(|&h| h == f.name)
                .ok_or_else(|| Error::MissingColumn(f.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (r, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::RaggedRow { row: r, expected: header.len(), got: cells.len() });
        }
        let label = parse_label(cells[label_idx], r)?;
        let values = col_for_feature
            .iter()
            .enumerate()
            .map(|(i, &c)| schema.encode_value(i, cells[c]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row { values, label });
    }
    TabularDataset::new(schema, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(rows: &[(&[&str], &str)]) -> Vec<(Vec<String>, String)> {
        rows.iter()
            .map(|(vs, l)| (vs.iter().map(|s| s.to_string()).collect(), l.to_string()))
            .collect()
    }

    #[test]
    fn infer_schema_first_appearance_order() {
        let rows = toy(&[(&["a", "x"], "1"), (&["b", "x"], "0")]);
        let schema = infer_schema(&rows).unwrap();
        assert_eq!(schema.features()[0].vocabulary, vec!["a", "b"]);
        assert_eq!(schema.features()[1].vocabulary, vec!["x"]);
    }

    #[test]
    fn infer_schema_empty_input_errors() {
        let rows: Vec<(Vec<String>, String)> = Vec::new();
        assert!(matches!(infer_schema(&rows), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn infer_schema_dedups() {
        let rows = toy(&[(&["a"], "1"), (&["a"], "1")]);
        let schema = infer_schema(&rows).unwrap();
        assert_eq!(schema.features()[0].vocabulary, vec!["a"]);
    }

    #[test]
    fn infer_schema_ragged_rows_error() {
        let rows = toy(&[(&["a", "x"], "1"), (&["b"], "0")]);
        assert!(matches!(infer_schema(&rows), Err(Error::RaggedRow { row: 1, .. })));
    }

    #[test]
    fn infer_schema_bad_label_error() {
        let rows = toy(&[(&["a"], "2")]);
        assert!(matches!(infer_schema(&rows), Err(Error::LabelFormat { .. })));
    }

    #[test]
    fn load_csv_counts_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "user,item,click\nu1,i1,1\nu2,i1,0\n").unwrap();
        let ds = load_csv(&path, "click").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.class_counts(), (1, 1));
        assert_eq!(ds.schema.features()[0].name, "user");
        assert_eq!(ds.rows[0], Row::new(vec![0, 0], 1));
        assert_eq!(ds.rows[1], Row::new(vec![1, 0], 0));
    }

    #[test]
    fn load_csv_missing_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "user,item,click\nu1,i1,1\n").unwrap();
        assert!(matches!(load_csv(&path, "nope"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn load_csv_with_schema_rejects_unknown_value() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        std::fs::write(&a, "user,click\nu1,1\n").unwrap();
        std::fs::write(&b, "user,click\nu9,1\n").unwrap();
        let ds = load_csv(&a, "click").unwrap();
        let err = load_csv_with_schema(&b, Arc::clone(&ds.schema));
        assert!(matches!(err, Err(Error::UnknownCategory { .. })));
    }

    #[test]
    fn csv_round_trip_with_provenance_column_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "user,item,click\nu1,i1,1\nu2,i2,0\nu1,i2,1\n").unwrap();
        let ds = load_csv(&path, "click").unwrap();
        let out = dir.path().join("out.csv");
        ds.write_csv(&out, Some(&["original", "synthetic", "original"])).unwrap();
        let back = load_csv_with_schema(&out, Arc::clone(&ds.schema)).unwrap();
        assert_eq!(back.rows, ds.rows);
    }

    #[test]
    fn split_sizes_floor_with_remainder_to_train() {
        let rows = toy(&[(&["a"], "1"); 10]);
        let schema = Arc::new(infer_schema(&rows).unwrap());
        let ds = TabularDataset::new(
            schema,
            (0..10).map(|_| Row::new(vec![0], 1)).collect(),
        )
        .unwrap();
        let (tr, va, te) = ds.split((0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (8, 1, 1));
        let (tr, va, te) = ds.split((0.5, 0.3, 0.2), 7).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (5, 3, 2));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let rows = toy(&[(&["a"], "1"), (&["b"], "0"), (&["c"], "1"), (&["d"], "0")]);
        let schema = Arc::new(infer_schema(&rows).unwrap());
        let ds = TabularDataset::new(
            Arc::clone(&schema),
            (0..20u32).map(|i| Row::new(vec![i % 4], (i % 2) as u8)).collect(),
        )
        .unwrap();
        let (a1, b1, c1) = ds.split((0.6, 0.2, 0.2), 42).unwrap();
        let (a2, b2, c2) = ds.split((0.6, 0.2, 0.2), 42).unwrap();
        assert_eq!(a1.rows, a2.rows);
        assert_eq!(b1.rows, b2.rows);
        assert_eq!(c1.rows, c2.rows);

        // Union of the three parts is the original multiset.
        let mut merged: Vec<Row> = a1.rows.into_iter().chain(b1.rows).chain(c1.rows).collect();
        let mut original = ds.rows.clone();
        merged.sort();
        original.sort();
        assert_eq!(merged, original);
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let rows = toy(&[(&["a"], "1")]);
        let schema = Arc::new(infer_schema(&rows).unwrap());
        let ds = TabularDataset::new(schema, vec![Row::new(vec![0], 1)]).unwrap();
        assert!(matches!(ds.split((0.5, 0.2, 0.2), 1), Err(Error::BadSplitRatios(_))));
    }

    #[test]
    fn class_counts_basics() {
        let rows = toy(&[(&["a"], "1"), (&["a"], "0"), (&["a"], "0")]);
        let schema = Arc::new(infer_schema(&rows).unwrap());
        let ds = TabularDataset::new(
            schema.clone(),
            vec![Row::new(vec![0], 1), Row::new(vec![0], 0), Row::new(vec![0], 0)],
        )
        .unwrap();
        assert_eq!(ds.class_counts(), (1, 2));
        let empty = TabularDataset { schema, rows: vec![] };
        assert_eq!(empty.class_counts(), (0, 0));
    }

    #[test]
    fn encode_decode_identity() {
        let rows = toy(&[(&["a", "x"], "1"), (&["b", "y"], "0"), (&["c", "x"], "1")]);
        let schema = infer_schema(&rows).unwrap();
        for (values, label) in &rows {
            let raw: Vec<&str> = values.iter().map(String::as_str).collect();
            let row = schema.encode_row(&raw, if label == "1" { 1 } else { 0 }).unwrap();
            assert_eq!(schema.decode_row(&row), raw);
        }
        // decode∘encode on codes
        let row = Row::new(vec![2, 1], 0);
        let raw = schema.decode_row(&row);
        assert_eq!(schema.encode_row(&raw, 0).unwrap(), row);
    }
}
