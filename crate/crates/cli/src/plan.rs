//! Command-line injection shorthands.

use missview_core::{Dataset, InjectionPlan, InjectionStep};

/// One `NAME=RATE` entry of an MCAR spec; `None` is the `*` wildcard.
#[derive(Debug, Clone, PartialEq)]
pub struct McarEntry {
    pub variable: Option<String>,
    pub rate: f64,
}

fn parse_rate(text: &str, context: &str) -> Result<f64, String> {
    let rate: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("{context}: `{text}` is not a number"))?;
    if !(0.0..=1.0).contains(&rate) {
        return Err(format!("{context}: rate {rate} outside [0, 1]"));
    }
    Ok(rate)
}

pub fn parse_mcar(spec: &str) -> Result<Vec<McarEntry>, String> {
    let mut entries: Vec<McarEntry> = Vec::new();
    for part in spec.split(',') {
        let (name, rate) = part
            .split_once('=')
            .ok_or_else(|| format!("--mcar: expected NAME=RATE, got `{part}`"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(format!("--mcar: missing variable name in `{part}`"));
        }
        let variable = (name != "*").then(|| name.to_owned());
        if entries.iter().any(|e| e.variable == variable) {
            return Err(format!("--mcar: `{name}` given twice"));
        }
        entries.push(McarEntry {
            variable,
            rate: parse_rate(rate, "--mcar")?,
        });
    }
    Ok(entries)
}

pub fn parse_cm(spec: &str) -> Result<InjectionStep, String> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [x1, x2, rate] = parts[..] else {
        return Err(format!("--cm: expected X1,X2,RATE, got `{spec}`"));
    };
    if x1.is_empty() || x2.is_empty() {
        return Err("--cm: variable names must not be empty".into());
    }
    Ok(InjectionStep::ConditionalRemoval {
        x1: x1.to_owned(),
        x2: x2.to_owned(),
        rate: parse_rate(rate, "--cm")?,
    })
}

/// MCAR steps in dataset variable order (explicit names win over `*`),
/// then the conditional step.
pub fn shorthand_plan(ds: &Dataset, seed: u64, mcar: &[McarEntry], cm: Option<InjectionStep>) -> Result<InjectionPlan, String> {
    for entry in mcar {
        if let Some(name) = &entry.variable {
            if ds.index_of(name).is_err() {
                return Err(format!("--mcar: unknown variable `{name}`"));
            }
        }
    }
    let wildcard = mcar.iter().find(|e| e.variable.is_none()).map(|e| e.rate);
    let mut steps = Vec::new();
    for var in ds.variables() {
        let explicit = mcar.iter().find(|e| e.variable.as_deref() == Some(var.name()));
        if let Some(rate) = explicit.map(|e| e.rate).or(wildcard) {
            steps.push(InjectionStep::Mcar {
                variable: var.name().to_owned(),
                rate,
            });
        }
    }
    steps.extend(cm);
    Ok(InjectionPlan::new(seed, steps).allowing_out_of_range())
}
