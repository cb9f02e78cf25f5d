//! Group-annotated tabular datasets.
//!
//! A [`Dataset`] carries feature columns, binary labels (1 = positive class)
//! and one sensitive-group code per row. Group coding is binary: code 0 is the
//! privileged group and code 1 the unprivileged group of the schema.
//!
//! Files are read through a [`DatasetSchema`], which names the target and
//! sensitive columns, the feature columns and the tokens that mark a missing
//! cell. Schemas for the Adult, COMPAS and Framingham files ship built in and
//! can be overridden with a TOML schema file (see the repository README).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sensitive-group code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupCode(pub u16);

impl GroupCode {
    pub const PRIVILEGED: GroupCode = GroupCode(0);
    pub const UNPRIVILEGED: GroupCode = GroupCode(1);
}

impl fmt::Display for GroupCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Code → name table for the binary sensitive attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTable {
    attribute: String,
    names: [String; 2],
}

impl GroupTable {
    pub fn new(
        attribute: impl Into<String>,
        privileged: impl Into<String>,
        unprivileged: impl Into<String>,
    ) -> Self {
        Self {
            attribute: attribute.into(),
            names: [privileged.into(), unprivileged.into()],
        }
    }

    /// Name of the sensitive column the codes came from.
    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn name(&self, code: GroupCode) -> Option<&str> {
        self.names.get(code.0 as usize).map(String::as_str)
    }

    pub fn code(&self, name: &str) -> Option<GroupCode> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| GroupCode(i as u16))
    }

    pub fn contains(&self, code: GroupCode) -> bool {
        (code.0 as usize) < self.names.len()
    }

    pub fn privileged(&self) -> GroupCode {
        GroupCode::PRIVILEGED
    }

    pub fn unprivileged(&self) -> GroupCode {
        GroupCode::UNPRIVILEGED
    }

    pub fn codes(&self) -> impl Iterator<Item = GroupCode> {
        (0..self.names.len() as u16).map(GroupCode)
    }

    /// Display name, falling back to the numeric code for unknown codes.
    pub fn label(&self, code: GroupCode) -> String {
        self.name(code)
            .map_or_else(|| format!("group {code}"), str::to_string)
    }
}

/// One feature column before or after preprocessing. `None` marks a missing
/// cell awaiting imputation.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumn {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl FeatureColumn {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric(v) => v.len(),
            FeatureColumn::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureColumn::Numeric(_))
    }

    pub fn missing_count(&self) -> usize {
        match self {
            FeatureColumn::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            FeatureColumn::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn select(&self, idx: &[usize]) -> FeatureColumn {
        match self {
            FeatureColumn::Numeric(v) => {
                FeatureColumn::Numeric(idx.iter().map(|&i| v[i]).collect())
            }
            FeatureColumn::Categorical(v) => {
                FeatureColumn::Categorical(idx.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Where a row came from: a data row of the source file (0-based, after the
/// header) or a synthetic oversampled row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowOrigin {
    Source(usize),
    Synthetic { seed_row: usize, draw: usize },
}

/// Labeled, group-annotated tabular data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<FeatureColumn>,
    feature_names: Vec<String>,
    labels: Vec<u8>,
    groups: Vec<GroupCode>,
    group_table: GroupTable,
    origins: Vec<RowOrigin>,
    schema_name: String,
}

impl Dataset {
    /// Builds a dataset, checking the shape invariants. Rows get
    /// `RowOrigin::Source(i)` in order.
    pub fn new(
        columns: Vec<FeatureColumn>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        groups: Vec<GroupCode>,
        group_table: GroupTable,
        schema_name: impl Into<String>,
    ) -> Result<Self> {
        let origins = (0..labels.len()).map(RowOrigin::Source).collect();
        Self::with_origins(
            columns,
            feature_names,
            labels,
            groups,
            group_table,
            origins,
            schema_name,
        )
    }

    pub fn with_origins(
        columns: Vec<FeatureColumn>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        groups: Vec<GroupCode>,
        group_table: GroupTable,
        origins: Vec<RowOrigin>,
        schema_name: impl Into<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if columns.is_empty() {
            return Err(Error::InvalidInput(
                "a dataset needs at least one feature".into(),
            ));
        }
        if columns.len() != feature_names.len() {
            return Err(Error::LengthMismatch(format!(
                "{} columns but {} feature names",
                columns.len(),
                feature_names.len()
            )));
        }
        if groups.len() != n || origins.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{n} labels, {} groups, {} row origins",
                groups.len(),
                origins.len()
            )));
        }
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let FeatureColumn::Numeric(v) = col {
                if let Some(i) = v
                    .iter()
                    .position(|c| matches!(c, Some(x) if !x.is_finite()))
                {
                    return Err(Error::InvalidInput(format!(
                        "column `{name}` has a non-finite value at row {i}"
                    )));
                }
            }
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidInput(format!(
                "label {} at row {i} is not binary",
                labels[i]
            )));
        }
        if let Some(i) = groups.iter().position(|&g| !group_table.contains(g)) {
            return Err(Error::InvalidInput(format!(
                "group code {} at row {i} is not in the group table",
                groups[i]
            )));
        }
        Ok(Self {
            columns,
            feature_names,
            labels,
            groups,
            group_table,
            origins,
            schema_name: schema_name.into(),
        })
    }

    /// Dataset over a complete numeric feature matrix.
    pub fn from_matrix(
        features: &Matrix,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        groups: Vec<GroupCode>,
        group_table: GroupTable,
        schema_name: impl Into<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let columns = (0..features.ncols())
            .map(|j| FeatureColumn::Numeric(features.column(j).map(Some).collect()))
            .collect();
        Self::new(
            columns,
            feature_names,
            labels,
            groups,
            group_table,
            schema_name,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn groups(&self) -> &[GroupCode] {
        &self.groups
    }

    pub fn group_table(&self) -> &GroupTable {
        &self.group_table
    }

    pub fn origins(&self) -> &[RowOrigin] {
        &self.origins
    }

    pub fn schema_name(&self) -> &str {
        &self.schema_name
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - pos, pos]
    }

    /// Row indices of every (label, group) stratum, in row order.
    pub fn strata(&self) -> BTreeMap<(u8, GroupCode), Vec<usize>> {
        let mut strata: BTreeMap<(u8, GroupCode), Vec<usize>> = BTreeMap::new();
        for (i, (&y, &g)) in self.labels.iter().zip(&self.groups).enumerate() {
            strata.entry((y, g)).or_default().push(i);
        }
        strata
    }

    /// New dataset holding the given rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            feature_names: self.feature_names.clone(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            groups: idx.iter().map(|&i| self.groups[i]).collect(),
            group_table: self.group_table.clone(),
            origins: idx.iter().map(|&i| self.origins[i]).collect(),
            schema_name: self.schema_name.clone(),
        }
    }

    /// The features as a dense matrix. Fails while categorical columns or
    /// missing cells remain, i.e. before preprocessing.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let n = self.n_rows();
        let d = self.n_features();
        let mut data = vec![0.0; n * d];
        for (j, (name, col)) in self.feature_names.iter().zip(&self.columns).enumerate() {
            let FeatureColumn::Numeric(values) = col else {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` is categorical; encode it first"
                )));
            };
            for (i, v) in values.iter().enumerate() {
                data[i * d + j] = v.ok_or_else(|| {
                    Error::InvalidInput(format!("column `{name}` has a missing cell at row {i}"))
                })?;
            }
        }
        Matrix::new(n, d, data)
    }

    /// Order-independent SHA-256 digest of the row-origin set.
    pub fn row_set_hash(&self) -> String {
        let mut origins = self.origins.clone();
        origins.sort_unstable();
        let mut hasher = Sha256::new();
        for o in origins {
            match o {
                RowOrigin::Source(i) => {
                    hasher.update([0u8]);
                    hasher.update((i as u64).to_le_bytes());
                }
                RowOrigin::Synthetic { seed_row, draw } => {
                    hasher.update([1u8]);
                    hasher.update((seed_row as u64).to_le_bytes());
                    hasher.update((draw as u64).to_le_bytes());
                }
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Target column and its positive-class tokens. Any other non-missing value
/// encodes the negative class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub column: String,
    pub positive: Vec<String>,
}

/// Sensitive column with the privileged/unprivileged assignment. Rows whose
/// value is listed in `exclude` are dropped; any other value is a schema
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveSpec {
    pub column: String,
    pub privileged: String,
    pub unprivileged: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
}

/// Declarative description of a delimited dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub target: TargetSpec,
    pub sensitive: SensitiveSpec,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub missing: Vec<String>,
}

fn default_delimiter() -> char {
    ','
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl DatasetSchema {
    /// UCI Adult income (`adult.data` with a header row added), gender as the
    /// sensitive attribute.
    pub fn adult() -> Self {
        Self {
            name: "adult".into(),
            delimiter: ',',
            target: TargetSpec {
                column: "income".into(),
                positive: strings(&[">50K", ">50K."]),
            },
            sensitive: SensitiveSpec {
                column: "sex".into(),
                privileged: "Male".into(),
                unprivileged: strings(&["Female"]),
                exclude: Vec::new(),
            },
            numeric: strings(&[
                "age",
                "education-num",
                "capital-gain",
                "capital-loss",
                "hours-per-week",
            ]),
            categorical: strings(&[
                "workclass",
                "marital-status",
                "occupation",
                "relationship",
                "race",
                "native-country",
            ]),
            missing: strings(&["?", ""]),
        }
    }

    /// ProPublica COMPAS two-year recidivism, restricted to Caucasian
    /// (privileged) and African-American (unprivileged) defendants.
    pub fn compas() -> Self {
        Self {
            name: "compas".into(),
            delimiter: ',',
            target: TargetSpec {
                column: "two_year_recid".into(),
                positive: strings(&["1"]),
            },
            sensitive: SensitiveSpec {
                column: "race".into(),
                privileged: "Caucasian".into(),
                unprivileged: strings(&["African-American"]),
                exclude: strings(&["Hispanic", "Other", "Asian", "Native American"]),
            },
            numeric: strings(&[
                "age",
                "juv_fel_count",
                "juv_misd_count",
                "juv_other_count",
                "priors_count",
                "decile_score",
            ]),
            categorical: strings(&["sex", "age_cat", "c_charge_degree"]),
            missing: strings(&["", "NA", "N/A"]),
        }
    }

    /// Framingham ten-year coronary heart disease risk, gender as the
    /// sensitive attribute.
    pub fn framingham() -> Self {
        Self {
            name: "framingham".into(),
            delimiter: ',',
            target: TargetSpec {
                column: "Heart_ stroke".into(),
                positive: strings(&["yes", "Yes", "1"]),
            },
            sensitive: SensitiveSpec {
                column: "Gender".into(),
                privileged: "Male".into(),
                unprivileged: strings(&["Female"]),
                exclude: Vec::new(),
            },
            numeric: strings(&[
                "age",
                "cigsPerDay",
                "totChol",
                "sysBP",
                "diaBP",
                "BMI",
                "heartRate",
                "glucose",
            ]),
            categorical: strings(&[
                "education",
                "currentSmoker",
                "BPMeds",
                "prevalentStroke",
                "prevalentHyp",
                "diabetes",
            ]),
            missing: strings(&["", "NA"]),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "adult" => Some(Self::adult()),
            "compas" => Some(Self::compas()),
            "framingham" => Some(Self::framingham()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["adult", "compas", "framingham"]
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self =
            toml::from_str(text).map_err(|e| Error::Schema(format!("schema file: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes to TOML")
    }

    pub fn group_table(&self) -> GroupTable {
        GroupTable::new(
            &self.sensitive.column,
            &self.sensitive.privileged,
            self.sensitive.unprivileged.join("|"),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Schema(format!("schema `{}`: {m}", self.name)));
        if self.numeric.is_empty() && self.categorical.is_empty() {
            return fail("no feature columns declared".into());
        }
        if self.target.positive.is_empty() {
            return fail("target has no positive-class token".into());
        }
        if self.sensitive.unprivileged.is_empty() {
            return fail("no unprivileged value declared".into());
        }
        let s = &self.sensitive;
        if s.unprivileged.contains(&s.privileged) || s.exclude.contains(&s.privileged) {
            return fail(format!("value `{}` has more than one role", s.privileged));
        }
        if let Some(v) = s.unprivileged.iter().find(|v| s.exclude.contains(v)) {
            return fail(format!("value `{v}` is both unprivileged and excluded"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in self.numeric.iter().chain(&self.categorical) {
            if !seen.insert(c.as_str()) {
                return fail(format!("feature column `{c}` declared twice"));
            }
        }
        for special in [&self.target.column, &self.sensitive.column] {
            if seen.contains(special.as_str()) {
                return fail(format!(
                    "`{special}` is both a feature and a target/sensitive column"
                ));
            }
        }
        if self.target.column == self.sensitive.column {
            return fail("target and sensitive column are the same".into());
        }
        Ok(())
    }

    fn is_missing(&self, cell: &str) -> bool {
        self.missing.iter().any(|m| m == cell)
    }
}

enum CellKind {
    Numeric,
    Categorical,
}

/// Reads a delimited file with a header row.
///
/// Rows with a missing target or sensitive value are dropped, rows whose
/// sensitive value is in the schema's exclude list are dropped, and missing
/// feature cells are kept as `None` for later imputation. Row origins refer to
/// the data row in the file.
pub fn load_dataset<R: Read>(source: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    if !schema.delimiter.is_ascii() {
        return Err(Error::Schema(format!(
            "delimiter `{}` is not a single-byte character",
            schema.delimiter
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: format!("header: {e}"),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let target_idx = find(&schema.target.column)?;
    let sensitive_idx = find(&schema.sensitive.column)?;
    let mut features: Vec<(String, usize, CellKind)> = Vec::new();
    for name in &schema.numeric {
        features.push((name.clone(), find(name)?, CellKind::Numeric));
    }
    for name in &schema.categorical {
        features.push((name.clone(), find(name)?, CellKind::Categorical));
    }

    let mut columns: Vec<FeatureColumn> = features
        .iter()
        .map(|(_, _, kind)| match kind {
            CellKind::Numeric => FeatureColumn::Numeric(Vec::new()),
            CellKind::Categorical => FeatureColumn::Categorical(Vec::new()),
        })
        .collect();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut origins = Vec::new();

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: row + 1,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: row + 1,
                message: format!("{} fields, header has {}", record.len(), header.len()),
            });
        }
        let target = &record[target_idx];
        let sensitive = &record[sensitive_idx];
        if schema.is_missing(target) || schema.is_missing(sensitive) {
            continue;
        }
        let group = if sensitive == schema.sensitive.privileged {
            GroupCode::PRIVILEGED
        } else if schema.sensitive.unprivileged.iter().any(|u| u == sensitive) {
            GroupCode::UNPRIVILEGED
        } else if schema.sensitive.exclude.iter().any(|u| u == sensitive) {
            continue;
        } else {
            return Err(Error::Schema(format!(
                "unknown category `{sensitive}` in sensitive column `{}` at data row {}",
                schema.sensitive.column,
                row + 1
            )));
        };
        for ((name, idx, _), column) in features.iter().zip(columns.iter_mut()) {
            let cell = &record[*idx];
            let missing = schema.is_missing(cell);
            match column {
                FeatureColumn::Numeric(values) => {
                    if missing {
                        values.push(None);
                    } else {
                        let v: f64 = cell.parse().map_err(|_| Error::Parse {
                            row: row + 1,
                            message: format!("column `{name}`: `{cell}` is not a number"),
                        })?;
                        if !v.is_finite() {
                            return Err(Error::Parse {
                                row: row + 1,
                                message: format!("column `{name}`: non-finite value `{cell}`"),
                            });
                        }
                        values.push(Some(v));
                    }
                }
                FeatureColumn::Categorical(values) => {
                    values.push((!missing).then(|| cell.to_string()));
                }
            }
        }
        let positive = schema.target.positive.iter().any(|p| p == target);
        labels.push(u8::from(positive));
        groups.push(group);
        origins.push(RowOrigin::Source(row));
    }

    let names = features.into_iter().map(|(name, _, _)| name).collect();
    Dataset::with_origins(
        columns,
        names,
        labels,
        groups,
        schema.group_table(),
        origins,
        &schema.name,
    )
}

/// Opens and loads a dataset file.
pub fn load_dataset_file(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.as_ref().display()),
        ))
    })?;
    load_dataset(std::io::BufReader::new(file), schema)
}

/// Shuffle-then-cut split of every (label, group) stratum.
///
/// Each stratum contributes `round(test_fraction * size)` rows to the test
/// side. Both outputs keep the input row order. The generator is ChaCha8
/// seeded with `seed`; strata are visited in (label, group) order.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    let strata = d.strata();
    for (&(label, group), rows) in &strata {
        if rows.len() < 2 {
            return Err(Error::StratumTooSmall {
                label,
                group: d.group_table().label(group),
                size: rows.len(),
                required: 2,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(d.n_rows());
    let mut test = Vec::new();
    for mut rows in strata.into_values() {
        rows.shuffle(&mut rng);
        let n_test = (test_fraction * rows.len() as f64).round() as usize;
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

/// Stratified k-fold partition: the held-out row indices of each fold.
///
/// Every (label, group) stratum is shuffled and dealt round-robin over the
/// folds, continuing where the previous stratum stopped so fold sizes differ
/// by at most one. Each stratum must have at least `k` rows so that every
/// fold holds every stratum. Indices within a fold are ascending.
pub fn stratified_folds(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("{k} folds; need at least 2")));
    }
    let strata = d.strata();
    for (&(label, group), rows) in &strata {
        if rows.len() < k {
            return Err(Error::StratumTooSmall {
                label,
                group: d.group_table().label(group),
                size: rows.len(),
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for mut rows in strata.into_values() {
        rows.shuffle(&mut rng);
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Row indices not in `held_out` (which must be ascending).
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - held_out.len());
    let mut it = held_out.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
