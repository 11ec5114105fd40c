//! Seeded missingness and noise injection with ground-truth manifests.
//!
//! A plan is a seed plus an ordered list of steps. One generator is created
//! from the seed and consumed by the steps in order, so the same plan applied
//! to the same dataset always removes the same cells.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, VariableKind};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const MCAR_RANGE: (f64, f64) = (0.0, 0.40);
pub const BASE_RANDOM_RANGE: (f64, f64) = (0.05, 0.10);
pub const CONDITIONAL_RANGE: (f64, f64) = (0.35, 0.70);
pub const NOISE_RANGE: (f64, f64) = (0.01, 0.15);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InjectionStep {
    /// Remove `round(rate * recorded)` cells of one variable uniformly.
    Mcar { variable: String, rate: f64 },
    /// Mcar at the same rate on every variable, in dataset order.
    BaseRandom { rate: f64 },
    /// Remove values of `x1` for items whose `x2` lies below Q1 or above Q3.
    ConditionalRemoval { x1: String, x2: String, rate: f64 },
    /// Add uniform noise on `[-a, a]` with `a = level * (max - min)` to every
    /// recorded numeric cell.
    UniformNoise { level: f64 },
}

impl InjectionStep {
    fn rate_and_range(&self) -> (f64, (f64, f64), &'static str) {
        match self {
            InjectionStep::Mcar { rate, .. } => (*rate, MCAR_RANGE, "mcar rate"),
            InjectionStep::BaseRandom { rate } => (*rate, BASE_RANDOM_RANGE, "base_random rate"),
            InjectionStep::ConditionalRemoval { rate, .. } => (*rate, CONDITIONAL_RANGE, "conditional_removal rate"),
            InjectionStep::UniformNoise { level } => (*level, NOISE_RANGE, "uniform_noise level"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub seed: u64,
    /// Accept rates outside the study ranges (still within [0, 1]).
    #[serde(default)]
    pub allow_out_of_range: bool,
    pub steps: Vec<InjectionStep>,
}

impl InjectionPlan {
    pub fn new(seed: u64, steps: Vec<InjectionStep>) -> Self {
        InjectionPlan {
            seed,
            allow_out_of_range: false,
            steps,
        }
    }

    pub fn allowing_out_of_range(mut self) -> Self {
        self.allow_out_of_range = true;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks rates and variable references against `ds` without applying anything.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate() {
            let (rate, (lo, hi), what) = step.rate_and_range();
            if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidPlan(format!("step {i}: {what} {rate} outside [0, 1]")));
            }
            if !self.allow_out_of_range && !(lo..=hi).contains(&rate) {
                return Err(Error::InvalidPlan(format!(
                    "step {i}: {what} {rate} outside [{lo}, {hi}] (set allow_out_of_range to override)"
                )));
            }
            match step {
                InjectionStep::Mcar { variable, .. } => {
                    ds.index_of(variable)
                        .map_err(|_| Error::InvalidPlan(format!("step {i}: unknown variable `{variable}`")))?;
                }
                InjectionStep::ConditionalRemoval { x1, x2, .. } => {
                    if x1 == x2 {
                        return Err(Error::InvalidPlan(format!("step {i}: x1 and x2 are both `{x1}`")));
                    }
                    for name in [x1, x2] {
                        ds.index_of(name)
                            .map_err(|_| Error::InvalidPlan(format!("step {i}: unknown variable `{name}`")))?;
                    }
                    let v2 = ds.index_of(x2)?;
                    if ds.variables()[v2].kind() != VariableKind::Numeric {
                        return Err(Error::InvalidPlan(format!("step {i}: x2 `{x2}` is not numeric")));
                    }
                }
                InjectionStep::BaseRandom { .. } | InjectionStep::UniformNoise { .. } => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub variable: String,
    pub item: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub step: InjectionStep,
    /// Cells that were recorded before this step and missing after it.
    pub removed: Vec<CellRef>,
    pub noised: Vec<CellRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quartiles: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

impl GroundTruthManifest {
    pub fn removed_cells(&self) -> impl Iterator<Item = (&StepRecord, &CellRef)> {
        self.steps.iter().flat_map(|s| s.removed.iter().map(move |c| (s, c)))
    }

    pub fn removed_count(&self) -> usize {
        self.steps.iter().map(|s| s.removed.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.iter().all(|s| s.removed.is_empty() && s.noised.is_empty())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `variable,item,step_index` lines for every removed cell.
    pub fn to_cell_list(&self) -> String {
        let mut out = String::from("variable,item,step_index\n");
        for (step, cell) in self.removed_cells() {
            let name = if cell.variable.contains([',', '"', '\n']) {
                format!("\"{}\"", cell.variable.replace('"', "\"\""))
            } else {
                cell.variable.clone()
            };
            let _ = writeln!(out, "{name},{},{}", cell.item, step.index);
        }
        out
    }
}

/// First and third quartiles by linear interpolation on the sorted values at
/// ranks `0.25 (n - 1)` and `0.75 (n - 1)`.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 4 {
        return Err(Error::InvalidPlan(format!(
            "quartiles need at least 4 values, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let rank = p * (sorted.len() - 1) as f64;
        let lo = rank.floor() as usize;
        let frac = rank - lo as f64;
        match sorted.get(lo + 1) {
            Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
            _ => sorted[lo],
        }
    };
    Ok((at(0.25), at(0.75)))
}

fn removal_count(rate: f64, pool: usize) -> usize {
    (rate * pool as f64).round_ties_even() as usize
}

pub fn apply_plan(ds: &Dataset, plan: &InjectionPlan) -> Result<(Dataset, GroundTruthManifest)> {
    plan.validate(ds)?;
    let mut out = ds.clone();
    let mut rng = SeededRng::new(plan.seed);
    let mut records = Vec::with_capacity(plan.steps.len());
    for (index, step) in plan.steps.iter().enumerate() {
        let mut record = StepRecord {
            index,
            step: step.clone(),
            removed: Vec::new(),
            noised: Vec::new(),
            quartiles: None,
            candidates: None,
            warnings: Vec::new(),
        };
        match step {
            InjectionStep::Mcar { variable, rate } => {
                let v = out.index_of(variable)?;
                remove_random(&mut out, v, *rate, &mut rng, &mut record);
            }
            InjectionStep::BaseRandom { rate } => {
                for v in 0..out.n_variables() {
                    remove_random(&mut out, v, *rate, &mut rng, &mut record);
                }
            }
            InjectionStep::ConditionalRemoval { x1, x2, rate } => {
                let (v1, v2) = (out.index_of(x1)?, out.index_of(x2)?);
                remove_conditional(&mut out, v1, v2, *rate, &mut rng, &mut record)
                    .map_err(|e| Error::InvalidPlan(format!("step {index}: {e}")))?;
            }
            InjectionStep::UniformNoise { level } => {
                add_noise(&mut out, *level, &mut rng, &mut record);
            }
        }
        records.push(record);
    }
    Ok((
        out,
        GroundTruthManifest {
            seed: plan.seed,
            steps: records,
        },
    ))
}

fn remove_cells(ds: &mut Dataset, v: usize, items: &[usize], record: &mut StepRecord) {
    let var = ds.variable_mut(v);
    for &item in items {
        var.set_missing(item);
    }
    let name = var.name().to_owned();
    record
        .removed
        .extend(items.iter().map(|&item| CellRef { variable: name.clone(), item }));
}

fn remove_random(ds: &mut Dataset, v: usize, rate: f64, rng: &mut SeededRng, record: &mut StepRecord) {
    let var = &ds.variables()[v];
    let mut pool: Vec<usize> = (0..ds.n_items()).filter(|&i| !var.is_missing(i)).collect();
    let k = removal_count(rate, pool.len());
    let chosen = rng.choose(&mut pool, k);
    remove_cells(ds, v, &chosen, record);
}

fn remove_conditional(
    ds: &mut Dataset,
    v1: usize,
    v2: usize,
    rate: f64,
    rng: &mut SeededRng,
    record: &mut StepRecord,
) -> Result<()> {
    let x2 = ds.variables()[v2].numeric_values().expect("validated numeric");
    let recorded: Vec<f64> = x2.iter().copied().filter(|x| !x.is_nan()).collect();
    let (q1, q3) = quartiles(&recorded)?;
    let candidates: Vec<usize> = (0..ds.n_items())
        .filter(|&i| !x2[i].is_nan() && (x2[i] < q1 || x2[i] > q3))
        .collect();
    let requested = removal_count(rate, candidates.len());
    let x1 = &ds.variables()[v1];
    let mut eligible: Vec<usize> = candidates.iter().copied().filter(|&i| !x1.is_missing(i)).collect();
    if eligible.len() < requested {
        record.warnings.push(format!(
            "shortfall: requested {requested} removals but only {} candidates have `{}` recorded",
            eligible.len(),
            x1.name()
        ));
    }
    record.quartiles = Some((q1, q3));
    record.candidates = Some(candidates.len());
    let chosen = rng.choose(&mut eligible, requested);
    remove_cells(ds, v1, &chosen, record);
    Ok(())
}

fn add_noise(ds: &mut Dataset, level: f64, rng: &mut SeededRng, record: &mut StepRecord) {
    for var in ds.variables_mut() {
        let Some((lo, hi)) = var.numeric_range() else {
            continue;
        };
        let amplitude = level * (hi - lo);
        if amplitude == 0.0 {
            continue;
        }
        let name = var.name().to_owned();
        let values = var.numeric_values_mut().expect("numeric");
        for (item, x) in values.iter_mut().enumerate() {
            if x.is_nan() {
                continue;
            }
            *x += amplitude * rng.symmetric();
            record.noised.push(CellRef {
                variable: name.clone(),
                item,
            });
        }
    }
}
