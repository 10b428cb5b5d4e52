//! Model-ready feature matrices: row-major numeric data with named, group-
//! tagged columns and an aligned label vector, plus the CSV interchange
//! format used by the command-line tools.
//!
//! CSV layout: one header row of `group:column_name` tokens (group is one of
//! `geo`, `sem`, `per`, `scene`), optionally followed by a final
//! `label:class` column; then one row of numeric values per instance.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// The four base feature groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Geo,
    Sem,
    Per,
    Scene,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Geo,
        FeatureGroup::Sem,
        FeatureGroup::Per,
        FeatureGroup::Scene,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FeatureGroup::Geo => "geo",
            FeatureGroup::Sem => "sem",
            FeatureGroup::Per => "per",
            FeatureGroup::Scene => "scene",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geo" => Ok(FeatureGroup::Geo),
            "sem" => Ok(FeatureGroup::Sem),
            "per" => Ok(FeatureGroup::Per),
            "scene" => Ok(FeatureGroup::Scene),
            other => Err(Error::Config(format!(
                "unknown feature group '{other}' (expected geo, sem, per or scene)"
            ))),
        }
    }
}

/// A combination of feature groups, kept in the fixed Geo, Sem, Per, Scene
/// order regardless of how it was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSet {
    members: [bool; 4],
}

impl GroupSet {
    pub fn new(groups: &[FeatureGroup]) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Config("feature group set must be non-empty".into()));
        }
        let mut members = [false; 4];
        for g in groups {
            members[*g as usize] = true;
        }
        Ok(Self { members })
    }

    pub fn contains(&self, g: FeatureGroup) -> bool {
        self.members[g as usize]
    }

    /// Members in the fixed group order.
    pub fn iter(&self) -> impl Iterator<Item = FeatureGroup> + '_ {
        FeatureGroup::ALL.into_iter().filter(|g| self.contains(*g))
    }

    /// Remove one group; errors if the result would be empty.
    pub fn without(&self, g: FeatureGroup) -> Result<GroupSet> {
        let mut members = self.members;
        members[g as usize] = false;
        if members.iter().all(|m| !m) {
            return Err(Error::Config("feature group set must be non-empty".into()));
        }
        Ok(GroupSet { members })
    }

    /// The eight combinations the experiment grid runs by default.
    pub fn canonical_combinations() -> Vec<GroupSet> {
        use FeatureGroup::*;
        [
            vec![Geo],
            vec![Sem],
            vec![Per],
            vec![Scene],
            vec![Geo, Sem],
            vec![Geo, Sem, Per],
            vec![Geo, Sem, Scene],
            vec![Geo, Sem, Per, Scene],
        ]
        .into_iter()
        .map(|gs| GroupSet::new(&gs).unwrap())
        .collect()
    }

    pub fn is_canonical(&self) -> bool {
        Self::canonical_combinations().contains(self)
    }

    /// Parse a `+`- or `,`-separated token list such as `geo,sem`.
    pub fn parse(s: &str) -> Result<GroupSet> {
        let groups: Vec<FeatureGroup> = s
            .split([',', '+'])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(FeatureGroup::from_str)
            .collect::<Result<_>>()?;
        GroupSet::new(&groups)
    }
}

impl fmt::Display for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for g in self.iter() {
            if !first {
                f.write_str("+")?;
            }
            f.write_str(g.token())?;
            first = false;
        }
        Ok(())
    }
}

/// Name and group tag of one matrix column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub group: FeatureGroup,
}

/// Row-major numeric matrix with named columns and aligned class labels.
///
/// `labels` is either empty (unlabeled data) or exactly one entry per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<R> {
    data: Vec<R>,
    n_rows: usize,
    columns: Vec<Column>,
    labels: Vec<usize>,
}

impl<R: Real> FeatureMatrix<R> {
    /// Build a matrix, validating shape, column-name uniqueness, label
    /// alignment and entry finiteness.
    pub fn new(
        data: Vec<R>,
        n_rows: usize,
        columns: Vec<Column>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if data.len() != n_rows * columns.len() {
            return Err(Error::LengthMismatch {
                context: "matrix data vs rows x columns",
                left: data.len(),
                right: n_rows * columns.len(),
            });
        }
        if !labels.is_empty() && labels.len() != n_rows {
            return Err(Error::LengthMismatch {
                context: "labels vs rows",
                left: labels.len(),
                right: n_rows,
            });
        }
        let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate column names in matrix".into()));
        }
        let n_cols = columns.len();
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    column: columns[i % n_cols].name.clone(),
                    row: i / n_cols,
                });
            }
        }
        Ok(Self {
            data,
            n_rows,
            columns,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[R] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[R]> {
        self.data
            .chunks_exact(self.n_cols().max(1))
            .take(self.n_rows)
    }

    pub fn value(&self, row: usize, col: usize) -> R {
        self.data[row * self.n_cols() + col]
    }

    pub(crate) fn value_mut(&mut self, row: usize, col: usize) -> &mut R {
        let w = self.n_cols();
        &mut self.data[row * w + col]
    }

    /// Matrix restricted to the rows at `indices` (in the given order).
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix<R> {
        let w = self.n_cols();
        let mut data = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(if self.labels.is_empty() {
            0
        } else {
            indices.len()
        });
        for &i in indices {
            data.extend_from_slice(self.row(i));
            if !self.labels.is_empty() {
                labels.push(self.labels[i]);
            }
        }
        FeatureMatrix {
            data,
            n_rows: indices.len(),
            columns: self.columns.clone(),
            labels,
        }
    }

    /// Matrix restricted to the columns whose group is in `groups`.
    pub fn select_groups(&self, groups: &GroupSet) -> FeatureMatrix<R> {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| groups.contains(c.group))
            .map(|(i, _)| i)
            .collect();
        let mut data = Vec::with_capacity(self.n_rows * keep.len());
        for r in 0..self.n_rows {
            for &c in &keep {
                data.push(self.value(r, c));
            }
        }
        FeatureMatrix {
            data,
            n_rows: self.n_rows,
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Write the CSV interchange form; includes a `label:class` column when
    /// labels are present. Numeric values round-trip exactly.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.group.token(), c.name))
            .collect();
        if !self.labels.is_empty() {
            header.push("label:class".to_string());
        }
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.rows().enumerate() {
            let mut fields: Vec<String> = row.iter().map(|v| format!("{}", v.as_f64())).collect();
            if !self.labels.is_empty() {
                fields.push(self.labels[i].to_string());
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Parse the CSV interchange form.
    pub fn read_csv(r: impl BufRead) -> Result<FeatureMatrix<R>> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty feature CSV".into()))??;
        let mut columns = Vec::new();
        let mut has_label = false;
        for (i, tok) in header.split(',').enumerate() {
            let (group, name) = tok.split_once(':').ok_or_else(|| {
                Error::Config(format!(
                    "header token '{tok}' is not of the form group:name"
                ))
            })?;
            if group == "label" {
                has_label = true;
                continue;
            }
            if has_label {
                return Err(Error::Config(
                    "label column must be the last CSV column".into(),
                ));
            }
            columns.push(Column {
                name: name.to_string(),
                group: group.parse().map_err(|_| {
                    Error::Config(format!("unknown group '{group}' in CSV column {i}"))
                })?,
            });
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut n_rows = 0usize;
        let expected = columns.len() + usize::from(has_label);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected {
                return Err(Error::LengthMismatch {
                    context: "CSV row width vs header",
                    left: fields.len(),
                    right: expected,
                });
            }
            for f in &fields[..columns.len()] {
                let v: f64 = f
                    .parse()
                    .map_err(|e| Error::Config(format!("bad numeric field '{f}': {e}")))?;
                data.push(R::from_f64_lossy(v));
            }
            if has_label {
                let l: usize = fields[columns.len()]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad label field: {e}")))?;
                labels.push(l);
            }
            n_rows += 1;
        }
        FeatureMatrix::new(data, n_rows, columns, labels)
    }
}
