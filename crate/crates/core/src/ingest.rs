//! Delimited-text ingestion and serialization.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset, Variable, VariableKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub delimiter: char,
    /// Exact tokens (after trimming) that mark a missing cell. The first one
    /// is used when writing.
    pub missing_tokens: Vec<String>,
    pub header: bool,
    /// Categorical columns with more distinct labels than this produce a
    /// warning (likely identifiers or free text).
    pub categorical_threshold: usize,
    /// Replace variable names by `A`, `B`, ..., `Z`, `AA`, ...
    pub anonymize: bool,
    /// Columns removed before typing, by header name.
    pub drop_columns: Vec<String>,
    /// Forced kinds by header name.
    pub kind_overrides: BTreeMap<String, VariableKind>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            delimiter: ',',
            missing_tokens: vec!["NaN".into(), "NA".into(), String::new()],
            header: true,
            categorical_threshold: 12,
            anonymize: false,
            drop_columns: Vec::new(),
            kind_overrides: BTreeMap::new(),
        }
    }
}

impl IngestConfig {
    pub fn tsv() -> Self {
        IngestConfig {
            delimiter: '\t',
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.missing_tokens.is_empty() {
            return Err(Error::Config("missing_tokens must not be empty".into()));
        }
        let d = self.delimiter;
        if !(d == '\t' || (d.is_ascii_graphic() && d != '"')) {
            return Err(Error::Config(format!(
                "delimiter must be a single visible ASCII character or tab, got {d:?}"
            )));
        }
        Ok(())
    }

    fn delimiter_byte(&self) -> u8 {
        self.delimiter as u8
    }

    fn is_missing_token(&self, token: &str) -> bool {
        self.missing_tokens.iter().any(|t| t == token)
    }
}

/// Non-fatal observations made while typing columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestWarning {
    pub variable: String,
    pub message: String,
}

/// Spreadsheet-style column letters: 0 → A, 25 → Z, 26 → AA.
pub fn column_letters(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn parse_finite(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn parse_table<R: Read>(source: R, cfg: &IngestConfig) -> Result<Dataset> {
    parse_table_with_warnings(source, cfg).map(|(ds, _)| ds)
}

pub fn parse_table_with_warnings<R: Read>(
    source: R,
    cfg: &IngestConfig,
) -> Result<(Dataset, Vec<IngestWarning>)> {
    cfg.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter_byte())
        .has_headers(false)
        .flexible(true)
        .from_reader(source);

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        rows.push(record);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }

    let (names, body_offset): (Vec<String>, usize) = if cfg.header {
        (rows[0].iter().map(|h| h.trim().to_owned()).collect(), 1)
    } else {
        ((1..=rows[0].len()).map(|i| format!("V{i}")).collect(), 0)
    };
    let width = names.len();
    if width == 0 || (width == 1 && names[0].is_empty() && cfg.header) {
        return Err(Error::EmptyInput);
    }
    let mut seen = HashSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(Error::Parse {
                row: 1,
                message: "empty column name".into(),
            });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    for dropped in &cfg.drop_columns {
        if !names.contains(dropped) {
            return Err(Error::Config(format!("cannot drop unknown column `{dropped}`")));
        }
    }
    for key in cfg.kind_overrides.keys() {
        if !names.contains(key) {
            return Err(Error::Config(format!("kind override for unknown column `{key}`")));
        }
    }

    let body = &rows[body_offset..];
    for (i, row) in body.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Parse {
                row: body_offset + i + 1,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
    }

    let mut variables = Vec::new();
    let mut warnings = Vec::new();
    for (col, name) in names.iter().enumerate() {
        if cfg.drop_columns.contains(name) {
            continue;
        }
        let tokens: Vec<Option<&str>> = body
            .iter()
            .map(|row| {
                let t = row[col].trim();
                (!cfg.is_missing_token(t)).then_some(t)
            })
            .collect();
        let inferred = if tokens.iter().flatten().all(|t| parse_finite(t).is_some()) {
            VariableKind::Numeric
        } else {
            VariableKind::Categorical
        };
        let kind = cfg.kind_overrides.get(name).copied().unwrap_or(inferred);
        let variable = match kind {
            VariableKind::Numeric => {
                let mut values = Vec::with_capacity(tokens.len());
                for (i, t) in tokens.iter().enumerate() {
                    values.push(match t {
                        None => None,
                        Some(t) => Some(parse_finite(t).ok_or_else(|| Error::Parse {
                            row: body_offset + i + 1,
                            message: format!("`{t}` in numeric column `{name}` is not a finite number"),
                        })?),
                    });
                }
                Variable::numeric(name.clone(), values)
            }
            VariableKind::Categorical => Variable::categorical(name.clone(), tokens),
        };
        if variable.categories().len() > cfg.categorical_threshold {
            warnings.push(IngestWarning {
                variable: name.clone(),
                message: format!(
                    "{} distinct labels exceeds categorical threshold {}",
                    variable.categories().len(),
                    cfg.categorical_threshold
                ),
            });
        }
        variables.push(variable);
    }

    if cfg.anonymize {
        for (i, var) in variables.iter_mut().enumerate() {
            var.rename(column_letters(i));
        }
    }

    let ds = Dataset::with_items("", body.len(), variables)?;
    Ok((ds, warnings))
}

pub fn write_table<W: Write>(ds: &Dataset, cfg: &IngestConfig, sink: W) -> Result<()> {
    cfg.validate()?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(cfg.delimiter_byte())
        .from_writer(sink);
    if cfg.header {
        writer.write_record(ds.variables().iter().map(Variable::name))?;
    }
    let missing = cfg.missing_tokens[0].as_str();
    let mut record: Vec<String> = Vec::with_capacity(ds.n_variables());
    for item in 0..ds.n_items() {
        record.clear();
        for var in ds.variables() {
            record.push(match var.cell(item) {
                Cell::Number(x) => format!("{x}"),
                Cell::Label(l) => l.to_owned(),
                Cell::Missing => missing.to_owned(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_table_to_vec(ds: &Dataset, cfg: &IngestConfig) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_table(ds, cfg, &mut out)?;
    Ok(out)
}
