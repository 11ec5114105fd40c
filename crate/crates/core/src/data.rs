//! Columnar dataset model with first-class missingness.
//!
//! Numeric columns store missing cells as NaN internally; recorded numeric
//! payloads are always finite, so the encoding is unambiguous. Categorical
//! columns store a code per cell into a category list ordered by first
//! appearance.

use std::collections::HashSet;
use std::fmt;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MISSING_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Numeric,
    Categorical,
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariableKind::Numeric => f.write_str("numeric"),
            VariableKind::Categorical => f.write_str("categorical"),
        }
    }
}

impl std::str::FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" | "num" => Ok(VariableKind::Numeric),
            "categorical" | "cat" => Ok(VariableKind::Categorical),
            other => Err(Error::Config(format!("unknown variable kind `{other}`"))),
        }
    }
}

/// A single cell, borrowed from its column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Number(f64),
    Label(&'a str),
    Missing,
}

impl Cell<'_> {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone)]
enum Column {
    Numeric(Vec<f64>),
    Categorical { categories: Vec<String>, codes: Vec<u32> },
}

// NaN marks a missing cell, so two missing cells compare equal.
impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Column::Numeric(a), Column::Numeric(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| (x.is_nan() && y.is_nan()) || x == y)
            }
            (
                Column::Categorical { categories: ca, codes: a },
                Column::Categorical { categories: cb, codes: b },
            ) => ca == cb && a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    name: String,
    column: Column,
}

impl Variable {
    /// Builds a numeric variable. Non-finite values become missing.
    pub fn numeric(name: impl Into<String>, values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let values = values
            .into_iter()
            .map(|v| match v {
                Some(x) if x.is_finite() => x,
                _ => f64::NAN,
            })
            .collect();
        Variable {
            name: name.into(),
            column: Column::Numeric(values),
        }
    }

    /// Builds a categorical variable; categories are ordered by first appearance.
    pub fn categorical<S: AsRef<str>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = Option<S>>,
    ) -> Self {
        let mut categories: Vec<String> = Vec::new();
        let mut codes = Vec::new();
        for value in values {
            let code = match value {
                None => MISSING_CODE,
                Some(label) => {
                    let label = label.as_ref();
                    match categories.iter().position(|c| c == label) {
                        Some(pos) => pos as u32,
                        None => {
                            categories.push(label.to_owned());
                            (categories.len() - 1) as u32
                        }
                    }
                }
            };
            codes.push(code);
        }
        Variable {
            name: name.into(),
            column: Column::Categorical { categories, codes },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> VariableKind {
        match self.column {
            Column::Numeric(_) => VariableKind::Numeric,
            Column::Categorical { .. } => VariableKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.column {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, item: usize) -> Cell<'_> {
        match &self.column {
            Column::Numeric(v) => {
                let x = v[item];
                if x.is_nan() {
                    Cell::Missing
                } else {
                    Cell::Number(x)
                }
            }
            Column::Categorical { categories, codes } => match codes[item] {
                MISSING_CODE => Cell::Missing,
                code => Cell::Label(&categories[code as usize]),
            },
        }
    }

    pub fn is_missing(&self, item: usize) -> bool {
        match &self.column {
            Column::Numeric(v) => v[item].is_nan(),
            Column::Categorical { codes, .. } => codes[item] == MISSING_CODE,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    /// Raw numeric storage (NaN = missing), `None` for categorical variables.
    pub fn numeric_values(&self) -> Option<&[f64]> {
        match &self.column {
            Column::Numeric(v) => Some(v),
            Column::Categorical { .. } => None,
        }
    }

    /// Per-item category codes (`None` = missing), `None` for numeric variables.
    pub fn category_codes(&self) -> Option<impl Iterator<Item = Option<usize>> + '_> {
        match &self.column {
            Column::Numeric(_) => None,
            Column::Categorical { codes, .. } => Some(
                codes
                    .iter()
                    .map(|&c| (c != MISSING_CODE).then_some(c as usize)),
            ),
        }
    }

    pub fn categories(&self) -> &[String] {
        match &self.column {
            Column::Numeric(_) => &[],
            Column::Categorical { categories, .. } => categories,
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    pub fn recorded_count(&self) -> usize {
        self.len() - self.missing_count()
    }

    /// Finite min and max over recorded values of a numeric variable.
    pub fn numeric_range(&self) -> Option<(f64, f64)> {
        let values = self.numeric_values()?;
        values
            .iter()
            .filter(|x| !x.is_nan())
            .fold(None, |acc, &x| match acc {
                None => Some((x, x)),
                Some((lo, hi)) => Some((f64::min(lo, x), f64::max(hi, x))),
            })
    }

    pub(crate) fn set_missing(&mut self, item: usize) {
        match &mut self.column {
            Column::Numeric(v) => v[item] = f64::NAN,
            Column::Categorical { codes, .. } => codes[item] = MISSING_CODE,
        }
    }

    pub(crate) fn numeric_values_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.column {
            Column::Numeric(v) => Some(v),
            Column::Categorical { .. } => None,
        }
    }

    pub(crate) fn rename(&mut self, name: String) {
        self.name = name;
    }

    fn select(&self, items: &[usize]) -> Variable {
        match &self.column {
            Column::Numeric(v) => Variable {
                name: self.name.clone(),
                column: Column::Numeric(items.iter().map(|&i| v[i]).collect()),
            },
            Column::Categorical { categories, codes } => Variable {
                name: self.name.clone(),
                column: Column::Categorical {
                    categories: categories.clone(),
                    codes: items.iter().map(|&i| codes[i]).collect(),
                },
            },
        }
    }
}

/// Per-variable missingness bit vectors (`true` = missing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    n_items: usize,
    bits: Vec<BitVec<u64, Lsb0>>,
}

impl MissingMask {
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_variables(&self) -> usize {
        self.bits.len()
    }

    pub fn variable(&self, v: usize) -> &BitSlice<u64, Lsb0> {
        &self.bits[v]
    }

    pub fn is_missing(&self, v: usize, item: usize) -> bool {
        self.bits[v][item]
    }

    pub fn count(&self, v: usize) -> usize {
        self.bits[v].count_ones()
    }

    /// Number of items missing in both `a` and `b`.
    pub fn joint_count(&self, a: usize, b: usize) -> usize {
        self.bits[a]
            .as_raw_slice()
            .iter()
            .zip(self.bits[b].as_raw_slice())
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }

    pub fn total_missing(&self) -> usize {
        (0..self.bits.len()).map(|v| self.count(v)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n_items: usize,
    variables: Vec<Variable>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, variables: Vec<Variable>) -> Result<Self> {
        let n_items = variables.first().map_or(0, Variable::len);
        Self::with_items(name, n_items, variables)
    }

    /// Like [`Dataset::new`] but with an explicit item count, so zero-variable
    /// datasets keep their row count.
    pub fn with_items(name: impl Into<String>, n_items: usize, variables: Vec<Variable>) -> Result<Self> {
        let mut seen = HashSet::new();
        for var in &variables {
            if var.name.is_empty() {
                return Err(Error::InvalidDataset("variable names must be non-empty".into()));
            }
            if !seen.insert(var.name.as_str()) {
                return Err(Error::DuplicateColumn(var.name.clone()));
            }
            if var.len() != n_items {
                return Err(Error::InvalidDataset(format!(
                    "variable `{}` has {} values, expected {n_items}",
                    var.name,
                    var.len()
                )));
            }
        }
        Ok(Dataset {
            name: name.into(),
            n_items,
            variables,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: usize) -> Result<&Variable> {
        self.variables.get(v).ok_or(Error::IndexOutOfRange {
            index: v,
            count: self.variables.len(),
        })
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    pub fn cell(&self, v: usize, item: usize) -> Cell<'_> {
        self.variables[v].cell(item)
    }

    pub fn missing_mask(&self) -> MissingMask {
        let bits = self
            .variables
            .iter()
            .map(|var| match &var.column {
                Column::Numeric(values) => values.iter().map(|x| x.is_nan()).collect(),
                Column::Categorical { codes, .. } => codes.iter().map(|&c| c == MISSING_CODE).collect(),
            })
            .collect();
        MissingMask {
            n_items: self.n_items,
            bits,
        }
    }

    /// Total number of missing cells.
    pub fn missing_cell_count(&self) -> usize {
        self.variables.iter().map(Variable::missing_count).sum()
    }

    /// Missing cells over all `n_items * n_variables` cells; 0 for empty data.
    pub fn missing_fraction(&self) -> f64 {
        let cells = self.n_items * self.variables.len();
        if cells == 0 {
            0.0
        } else {
            self.missing_cell_count() as f64 / cells as f64
        }
    }

    /// The non-missing payloads of variable `v`, in item order.
    pub fn recorded_values(&self, v: usize) -> Result<Vec<Cell<'_>>> {
        let var = self.variable(v)?;
        Ok(var.cells().filter(|c| !c.is_missing()).collect())
    }

    /// Recorded values of a numeric variable (empty for categorical).
    pub fn recorded_numbers(&self, v: usize) -> Result<Vec<f64>> {
        let var = self.variable(v)?;
        Ok(var
            .numeric_values()
            .map(|vals| vals.iter().copied().filter(|x| !x.is_nan()).collect())
            .unwrap_or_default())
    }

    pub fn select_items<F>(&self, mut predicate: F) -> DatasetView<'_>
    where
        F: FnMut(usize) -> bool,
    {
        let items = (0..self.n_items).filter(|&i| predicate(i)).collect();
        DatasetView { source: self, items }
    }

    pub(crate) fn variable_mut(&mut self, v: usize) -> &mut Variable {
        &mut self.variables[v]
    }

    pub(crate) fn variables_mut(&mut self) -> &mut [Variable] {
        &mut self.variables
    }
}

/// Read-only row subset of a [`Dataset`].
#[derive(Debug, Clone)]
pub struct DatasetView<'a> {
    source: &'a Dataset,
    items: Vec<usize>,
}

impl<'a> DatasetView<'a> {
    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn source(&self) -> &'a Dataset {
        self.source
    }

    /// Source item indices exposed by this view.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn cell(&self, v: usize, row: usize) -> Cell<'a> {
        self.source.cell(v, self.items[row])
    }

    pub fn to_dataset(&self) -> Dataset {
        let variables = self
            .source
            .variables
            .iter()
            .map(|var| var.select(&self.items))
            .collect();
        Dataset {
            name: self.source.name.clone(),
            n_items: self.items.len(),
            variables,
        }
    }
}
