//! Amount missing (AM), joint missingness (JM), expected JM under fully
//! random missingness, and conditional-missingness (CM) histogram pairs.
//!
//! All fractions use the total item count as denominator: JM(a, b) is the
//! share of *all* items missing in both `a` and `b`, not a share of the
//! items missing in either variable.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MissingMask, VariableKind};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn check_index(ds: &Dataset, v: usize) -> Result<()> {
    ds.variable(v).map(|_| ())
}

/// Per-variable share of missing cells.
pub fn amount_missing(ds: &Dataset) -> Vec<f64> {
    let mask = ds.missing_mask();
    (0..ds.n_variables())
        .map(|v| fraction(mask.count(v), ds.n_items()))
        .collect()
}

/// Share of items missing in both `a` and `b`.
pub fn joint_missing(ds: &Dataset, a: usize, b: usize) -> Result<f64> {
    check_index(ds, a)?;
    check_index(ds, b)?;
    let (va, vb) = (&ds.variables()[a], &ds.variables()[b]);
    let count = (0..ds.n_items())
        .filter(|&i| va.is_missing(i) && vb.is_missing(i))
        .count();
    Ok(fraction(count, ds.n_items()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessSummary {
    pub names: Vec<String>,
    pub kinds: Vec<VariableKind>,
    pub n_items: usize,
    pub n_recorded: Vec<usize>,
    pub am: Vec<f64>,
    /// Symmetric; the diagonal equals `am`.
    pub jm: Vec<Vec<f64>>,
    pub expected_jm: Vec<Vec<f64>>,
    pub jm_deviation: Vec<Vec<f64>>,
}

impl MissingnessSummary {
    pub fn compute(ds: &Dataset) -> Self {
        Self::from_mask(ds, &ds.missing_mask())
    }

    pub fn from_mask(ds: &Dataset, mask: &MissingMask) -> Self {
        let m = ds.n_variables();
        let n = ds.n_items();
        let counts: Vec<usize> = (0..m).map(|v| mask.count(v)).collect();
        let am: Vec<f64> = counts.iter().map(|&c| fraction(c, n)).collect();
        let mut jm = vec![vec![0.0; m]; m];
        for a in 0..m {
            jm[a][a] = am[a];
            for b in a + 1..m {
                let value = fraction(mask.joint_count(a, b), n);
                jm[a][b] = value;
                jm[b][a] = value;
            }
        }
        let expected_jm: Vec<Vec<f64>> = am
            .iter()
            .map(|&pa| am.iter().map(|&pb| pa * pb).collect())
            .collect();
        let jm_deviation = jm
            .iter()
            .zip(&expected_jm)
            .map(|(row, exp)| row.iter().zip(exp).map(|(j, e)| j - e).collect())
            .collect();
        MissingnessSummary {
            names: ds.variables().iter().map(|v| v.name().to_owned()).collect(),
            kinds: ds.variables().iter().map(|v| v.kind()).collect(),
            n_items: n,
            n_recorded: counts.iter().map(|&c| n - c).collect(),
            am,
            jm,
            expected_jm,
            jm_deviation,
        }
    }

    pub fn n_variables(&self) -> usize {
        self.am.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    /// JM expected if missingness were random and independent: `am[a] * am[b]`.
    pub fn expected_joint_missing(&self, a: usize, b: usize) -> f64 {
        self.am[a] * self.am[b]
    }
}

pub fn expected_joint_missing(summary: &MissingnessSummary, a: usize, b: usize) -> f64 {
    summary.expected_joint_missing(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HistogramSpec {
    /// `k + 1` strictly increasing edges.
    Numeric { edges: Vec<f64> },
    Categorical { categories: Vec<String> },
}

impl HistogramSpec {
    pub fn bin_count(&self) -> usize {
        match self {
            HistogramSpec::Numeric { edges } => edges.len() - 1,
            HistogramSpec::Categorical { categories } => categories.len(),
        }
    }

    /// Bin of a numeric value: `edges[j] <= x < edges[j+1]`, last bin closed.
    pub fn numeric_bin(edges: &[f64], x: f64) -> Option<usize> {
        let k = edges.len() - 1;
        if x < edges[0] || x > edges[k] {
            return None;
        }
        // partition_point gives the count of edges <= x
        let j = edges.partition_point(|&e| e <= x);
        Some(j.saturating_sub(1).min(k - 1))
    }
}

pub fn histogram_spec(ds: &Dataset, v: usize, bins: usize) -> Result<HistogramSpec> {
    let var = ds.variable(v)?;
    match var.kind() {
        VariableKind::Categorical => {
            if var.recorded_count() == 0 {
                return Err(Error::NoRecordedData(var.name().to_owned()));
            }
            Ok(HistogramSpec::Categorical {
                categories: var.categories().to_vec(),
            })
        }
        VariableKind::Numeric => {
            if bins == 0 {
                return Err(Error::Config("bin count must be at least 1".into()));
            }
            let (lo, hi) = var
                .numeric_range()
                .ok_or_else(|| Error::NoRecordedData(var.name().to_owned()))?;
            if lo == hi {
                return Ok(HistogramSpec::Numeric {
                    edges: vec![lo, lo + 1.0],
                });
            }
            let width = (hi - lo) / bins as f64;
            let mut edges: Vec<f64> = (0..bins).map(|j| lo + width * j as f64).collect();
            edges.push(hi);
            // Spans tiny relative to magnitude can collapse neighbouring edges.
            edges.dedup();
            Ok(HistogramSpec::Numeric { edges })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramPair {
    pub spec: HistogramSpec,
    /// Counts over every recorded item of the target.
    pub grey: Vec<usize>,
    /// Counts over items missing in the selected variable and recorded in the target.
    pub red: Vec<usize>,
    pub grey_total: usize,
    pub red_total: usize,
}

/// Bins the recorded values of `target` whose item passes `include`.
fn bin_counts(ds: &Dataset, target: usize, spec: &HistogramSpec, include: impl Fn(usize) -> bool) -> Vec<usize> {
    let var = &ds.variables()[target];
    let mut counts = vec![0; spec.bin_count()];
    match (spec, var.numeric_values(), var.category_codes()) {
        (HistogramSpec::Numeric { edges }, Some(values), _) => {
            for (i, &x) in values.iter().enumerate() {
                if x.is_nan() || !include(i) {
                    continue;
                }
                if let Some(b) = HistogramSpec::numeric_bin(edges, x) {
                    counts[b] += 1;
                }
            }
        }
        (HistogramSpec::Categorical { categories }, _, Some(codes)) => {
            // Map the variable's own category codes onto the spec's ordering.
            let own = var.categories();
            let remap: Vec<Option<usize>> = own
                .iter()
                .map(|c| categories.iter().position(|s| s == c))
                .collect();
            for (i, code) in codes.enumerate() {
                if let Some(code) = code {
                    if include(i) {
                        if let Some(b) = remap[code] {
                            counts[b] += 1;
                        }
                    }
                }
            }
        }
        _ => {}
    }
    counts
}

/// Grey (all recorded items of `target`) and red (recorded in `target`,
/// missing in `selected`) histograms on the same bins.
pub fn histogram_pair(ds: &Dataset, target: usize, selected: usize, spec: &HistogramSpec) -> Result<HistogramPair> {
    check_index(ds, target)?;
    check_index(ds, selected)?;
    if target == selected {
        return Err(Error::SelfConditioning(ds.variables()[target].name().to_owned()));
    }
    let kind_matches = matches!(
        (spec, ds.variables()[target].kind()),
        (HistogramSpec::Numeric { .. }, VariableKind::Numeric) | (HistogramSpec::Categorical { .. }, VariableKind::Categorical)
    );
    if !kind_matches {
        return Err(Error::Config("histogram spec does not match target variable kind".into()));
    }
    let sel = &ds.variables()[selected];
    let grey = bin_counts(ds, target, spec, |_| true);
    let red = bin_counts(ds, target, spec, |i| sel.is_missing(i));
    Ok(HistogramPair {
        spec: spec.clone(),
        grey_total: grey.iter().sum(),
        red_total: red.iter().sum(),
        grey,
        red,
    })
}

/// Grey histogram only, for glyphs without a selection (or the selected glyph).
pub fn grey_histogram(ds: &Dataset, target: usize, spec: &HistogramSpec) -> Result<Vec<usize>> {
    check_index(ds, target)?;
    Ok(bin_counts(ds, target, spec, |_| true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmDivergence {
    /// Total-variation distance in [0, 1]; 0 when undefined.
    pub value: f64,
    /// False when either histogram is empty.
    pub defined: bool,
}

impl CmDivergence {
    pub fn as_option(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }
}

/// Total-variation distance between the normalized grey and red histograms.
pub fn cm_divergence(pair: &HistogramPair) -> CmDivergence {
    if pair.grey_total == 0 || pair.red_total == 0 {
        return CmDivergence {
            value: 0.0,
            defined: false,
        };
    }
    let (gt, rt) = (pair.grey_total as f64, pair.red_total as f64);
    let l1: f64 = pair
        .grey
        .iter()
        .zip(&pair.red)
        .map(|(&g, &r)| (g as f64 / gt - r as f64 / rt).abs())
        .sum();
    CmDivergence {
        value: (0.5 * l1).clamp(0.0, 1.0),
        defined: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub name: String,
    pub kind: VariableKind,
    pub am: f64,
    pub n_recorded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub jm: f64,
    pub expected_jm: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub selected: String,
    pub target: String,
    /// `None` (JSON null) when undefined.
    pub divergence: Option<f64>,
    pub defined: bool,
}

/// Serialized as `{variables, pairs, cm}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub variables: Vec<VariableReport>,
    pub pairs: Vec<PairReport>,
    pub cm: Vec<CmReport>,
}

impl RandomnessReport {
    /// Pairs sorted by absolute JM deviation, largest first.
    pub fn pairs_by_deviation(&self) -> Vec<&PairReport> {
        let mut pairs: Vec<&PairReport> = self.pairs.iter().collect();
        pairs.sort_by(|x, y| y.deviation.abs().total_cmp(&x.deviation.abs()));
        pairs
    }
}

/// AM per variable, JM and expected JM per unordered pair, and CM divergence
/// per ordered (selected, target) pair. With `selection`, CM entries are
/// restricted to that selected variable.
pub fn randomness_report(ds: &Dataset, bins: usize, selection: Option<usize>) -> Result<RandomnessReport> {
    let summary = MissingnessSummary::compute(ds);
    randomness_report_with(ds, &summary, bins, selection)
}

pub fn randomness_report_with(
    ds: &Dataset,
    summary: &MissingnessSummary,
    bins: usize,
    selection: Option<usize>,
) -> Result<RandomnessReport> {
    if bins == 0 {
        return Err(Error::Config("bin count must be at least 1".into()));
    }
    if let Some(s) = selection {
        check_index(ds, s)?;
    }
    let m = ds.n_variables();
    let variables = (0..m)
        .map(|v| VariableReport {
            name: summary.names[v].clone(),
            kind: summary.kinds[v],
            am: summary.am[v],
            n_recorded: summary.n_recorded[v],
        })
        .collect();
    let mut pairs = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            pairs.push(PairReport {
                a: summary.names[a].clone(),
                b: summary.names[b].clone(),
                jm: summary.jm[a][b],
                expected_jm: summary.expected_jm[a][b],
                deviation: summary.jm_deviation[a][b],
            });
        }
    }
    let specs: Vec<Option<HistogramSpec>> = (0..m).map(|v| histogram_spec(ds, v, bins).ok()).collect();
    let selected_vars: Vec<usize> = match selection {
        Some(s) => vec![s],
        None => (0..m).collect(),
    };
    let mut cm = Vec::new();
    for &sel in &selected_vars {
        for target in (0..m).filter(|&t| t != sel) {
            let divergence = match &specs[target] {
                Some(spec) => cm_divergence(&histogram_pair(ds, target, sel, spec)?),
                None => CmDivergence {
                    value: 0.0,
                    defined: false,
                },
            };
            cm.push(CmReport {
                selected: summary.names[sel].clone(),
                target: summary.names[target].clone(),
                divergence: divergence.as_option(),
                defined: divergence.defined,
            });
        }
    }
    Ok(RandomnessReport { variables, pairs, cm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;

    fn fig1() -> Dataset {
        // A, B, C with AM 0.3, 0.3, 0.2 and JM(A, C) = 0.1 over 10 items.
        let missing = |idx: &[usize]| -> Vec<Option<f64>> {
            (0..10).map(|i| if idx.contains(&i) { None } else { Some(i as f64) }).collect()
        };
        Dataset::new(
            "fig1",
            vec![
                Variable::numeric("A", missing(&[0, 1, 2])),
                Variable::numeric("B", missing(&[5, 6, 7])),
                Variable::numeric("C", missing(&[0, 9])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn amount_and_joint() {
        let ds = fig1();
        assert_eq!(amount_missing(&ds), vec![0.3, 0.3, 0.2]);
        assert_eq!(joint_missing(&ds, 0, 2).unwrap(), 0.1);
        assert_eq!(joint_missing(&ds, 2, 0).unwrap(), 0.1);
        assert_eq!(joint_missing(&ds, 0, 1).unwrap(), 0.0);
        assert_eq!(joint_missing(&ds, 0, 0).unwrap(), 0.3);
        assert!(joint_missing(&ds, 0, 7).is_err());
        let s = MissingnessSummary::compute(&ds);
        assert_eq!(s.jm[0][2], 0.1);
        assert_eq!(s.jm[1][1], s.am[1]);
    }

    #[test]
    fn complete_variable_has_zero_am() {
        let ds = Dataset::new("c", vec![Variable::numeric("a", [Some(1.0), Some(2.0)])]).unwrap();
        assert_eq!(amount_missing(&ds), vec![0.0]);
    }

    #[test]
    fn expected_jm_products() {
        let mut ds_values = vec![Variable::numeric("a", (0..4).map(|i| (i % 2 == 0).then_some(1.0)))];
        ds_values.push(Variable::numeric("b", (0..4).map(|i| (i < 2).then_some(1.0))));
        ds_values.push(Variable::numeric("c", (0..4).map(|_| Some(1.0))));
        let s = MissingnessSummary::compute(&Dataset::new("e", ds_values).unwrap());
        assert_eq!(expected_joint_missing(&s, 0, 1), 0.25);
        assert_eq!(expected_joint_missing(&s, 2, 0), 0.0);
        assert_eq!(expected_joint_missing(&s, 2, 1), 0.0);
        assert_eq!(0.85_f64 * 0.85, 0.7224999999999999);
    }

    #[test]
    fn zero_items() {
        let ds = Dataset::new("z", vec![Variable::numeric("a", std::iter::empty())]).unwrap();
        assert_eq!(amount_missing(&ds), vec![0.0]);
        let r = randomness_report(&ds, 10, None).unwrap();
        assert_eq!(r.variables[0].am, 0.0);
        assert!(r.pairs.is_empty());
    }

    #[test]
    fn spec_edges() {
        let ds = Dataset::new("s", vec![Variable::numeric("a", (0..=10).map(|i| Some(i as f64)))]).unwrap();
        let HistogramSpec::Numeric { edges } = histogram_spec(&ds, 0, 10).unwrap() else {
            panic!()
        };
        assert_eq!(edges, (0..=10).map(|i| i as f64).collect::<Vec<_>>());

        let constant = Dataset::new("k", vec![Variable::numeric("a", [Some(5.0); 4])]).unwrap();
        assert_eq!(
            histogram_spec(&constant, 0, 10).unwrap(),
            HistogramSpec::Numeric { edges: vec![5.0, 6.0] }
        );

        let cat = Dataset::new("c", vec![Variable::categorical("a", [Some("c"), Some("a"), Some("b")])]).unwrap();
        assert_eq!(
            histogram_spec(&cat, 0, 10).unwrap(),
            HistogramSpec::Categorical {
                categories: vec!["c".into(), "a".into(), "b".into()]
            }
        );

        let empty = Dataset::new("m", vec![Variable::numeric("a", [None, None])]).unwrap();
        assert!(matches!(histogram_spec(&empty, 0, 10), Err(Error::NoRecordedData(_))));
    }

    #[test]
    fn binning_rule() {
        let edges = [0.0, 1.0, 2.0];
        assert_eq!(HistogramSpec::numeric_bin(&edges, 0.0), Some(0));
        assert_eq!(HistogramSpec::numeric_bin(&edges, 0.999), Some(0));
        assert_eq!(HistogramSpec::numeric_bin(&edges, 1.0), Some(1));
        assert_eq!(HistogramSpec::numeric_bin(&edges, 2.0), Some(1));
        assert_eq!(HistogramSpec::numeric_bin(&edges, 2.5), None);
    }

    #[test]
    fn pair_with_complete_selection() {
        let ds = fig1();
        let spec = histogram_spec(&ds, 0, 5).unwrap();
        let complete = Dataset::new(
            "x",
            vec![
                ds.variables()[0].clone(),
                Variable::numeric("full", (0..10).map(|i| Some(i as f64))),
            ],
        )
        .unwrap();
        let pair = histogram_pair(&complete, 0, 1, &spec).unwrap();
        assert_eq!(pair.red_total, 0);
        assert!(pair.red.iter().all(|&r| r == 0));
        assert_eq!(pair.grey_total, 7);
        assert!(!cm_divergence(&pair).defined);
        assert!(matches!(histogram_pair(&ds, 0, 0, &spec), Err(Error::SelfConditioning(_))));
    }

    #[test]
    fn divergence_edge_cases() {
        let spec = HistogramSpec::Numeric { edges: vec![0.0, 1.0, 2.0] };
        let pair = |grey: Vec<usize>, red: Vec<usize>| HistogramPair {
            spec: spec.clone(),
            grey_total: grey.iter().sum(),
            red_total: red.iter().sum(),
            grey,
            red,
        };
        assert_eq!(cm_divergence(&pair(vec![10, 20], vec![1, 2])).value, 0.0);
        let disjoint = cm_divergence(&pair(vec![10, 0], vec![0, 5]));
        assert!(disjoint.defined);
        assert_eq!(disjoint.value, 1.0);
    }

    #[test]
    fn categorical_pair() {
        let ds = Dataset::new(
            "cat",
            vec![
                Variable::categorical("origin", [Some("eu"), Some("us"), Some("us"), Some("asia"), None]),
                Variable::numeric("x", [None, Some(1.0), None, Some(2.0), Some(3.0)]),
            ],
        )
        .unwrap();
        let spec = histogram_spec(&ds, 0, 10).unwrap();
        let pair = histogram_pair(&ds, 0, 1, &spec).unwrap();
        assert_eq!(pair.grey, vec![1, 2, 1]);
        assert_eq!(pair.red, vec![1, 1, 0]);
    }

    #[test]
    fn report_counts() {
        let ds = fig1();
        let r = randomness_report(&ds, 10, None).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert_eq!(r.cm.len(), 2 * r.pairs.len());
        let sel = randomness_report(&ds, 10, Some(2)).unwrap();
        assert_eq!(sel.cm.len(), 2);
        assert!(sel.cm.iter().all(|c| c.selected == "C"));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("variables").is_some() && json.get("pairs").is_some() && json.get("cm").is_some());
        assert_eq!(json["variables"][0]["kind"], "numeric");
    }

    #[test]
    fn complete_dataset_report_is_zero() {
        let ds = Dataset::new(
            "c",
            vec![
                Variable::numeric("a", (0..5).map(|i| Some(i as f64))),
                Variable::numeric("b", (0..5).map(|i| Some(i as f64))),
            ],
        )
        .unwrap();
        let r = randomness_report(&ds, 10, None).unwrap();
        assert!(r.variables.iter().all(|v| v.am == 0.0));
        assert!(r.pairs.iter().all(|p| p.jm == 0.0 && p.deviation == 0.0));
        assert!(r.cm.iter().all(|c| !c.defined && c.divergence.is_none()));
    }
}
