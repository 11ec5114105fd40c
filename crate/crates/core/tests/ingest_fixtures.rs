mod common;

use common::random_dataset;
use missview_core::ingest::{parse_table_with_warnings, write_table_to_vec};
use missview_core::rng::SeededRng;
use missview_core::{parse_table, Cell, Dataset, Error, IngestConfig, Variable, VariableKind};
use proptest::prelude::*;

/// Kamyr-shaped table: a date column plus 22 process variables over 301
/// observations with exactly 352 missing cells.
fn kamyr_like() -> String {
    let mut rng = SeededRng::new(4);
    let mut missing: Vec<usize> = (0..301 * 22).collect();
    let chosen = rng.choose(&mut missing, 352);
    let mut out = String::from("Observation");
    for v in 0..22 {
        out.push_str(&format!(",Var{}", v + 1));
    }
    out.push('\n');
    for i in 0..301 {
        out.push_str(&format!("1/{}/1998", 1 + i % 28));
        for v in 0..22 {
            if chosen.binary_search(&(i * 22 + v)).is_ok() {
                out.push_str(",NaN");
            } else {
                out.push_str(&format!(",{:.3}", 10.0 + rng.unit() * 90.0));
            }
        }
        out.push('\n');
    }
    out
}

fn cars_like() -> String {
    let mut rng = SeededRng::new(392);
    let origins = ["America", "Europe", "Asia"];
    let mut out = String::from("mpg,cylinders,displacement,horsepower,weight,acceleration,year,origin\n");
    for _ in 0..392 {
        out.push_str(&format!(
            "{:.1},{},{:.1},{},{},{:.1},{},{}\n",
            9.0 + rng.unit() * 37.6,
            [3, 4, 5, 6, 8][rng.below(5) as usize],
            68.0 + rng.unit() * 387.0,
            46 + rng.below(185),
            1613 + rng.below(3528),
            8.0 + rng.unit() * 16.8,
            70 + rng.below(13),
            origins[rng.below(3) as usize],
        ));
    }
    out
}

#[test]
fn kamyr_dimensions_and_missing_share() {
    let text = kamyr_like();
    let cfg = IngestConfig {
        drop_columns: vec!["Observation".into()],
        ..Default::default()
    };
    let ds = parse_table(text.as_bytes(), &cfg).unwrap();
    assert_eq!(ds.n_variables(), 22);
    assert_eq!(ds.n_items(), 301);
    assert!(ds.variables().iter().all(|v| v.kind() == VariableKind::Numeric));
    assert_eq!(ds.missing_cell_count(), 352);
    // 352 / (301 * 22); the published 5.6% matches a 21-column denominator instead
    assert!((ds.missing_fraction() - 352.0 / 6622.0).abs() < 1e-15);
    assert!((ds.missing_fraction() - 0.0532).abs() < 1e-4);

    let kept = parse_table(text.as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(kept.n_variables(), 23);
    assert_eq!(kept.variables()[0].kind(), VariableKind::Categorical);
}

#[test]
fn cars_origin_is_categorical() {
    let ds = parse_table(cars_like().as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(ds.n_items(), 392);
    let origin = ds.variable(ds.index_of("origin").unwrap()).unwrap();
    assert_eq!(origin.kind(), VariableKind::Categorical);
    assert_eq!(origin.categories().len(), 3);
    for name in ["mpg", "cylinders", "year"] {
        assert_eq!(ds.variables()[ds.index_of(name).unwrap()].kind(), VariableKind::Numeric);
    }
}

#[test]
fn small_table_reads_tokens() {
    let ds = parse_table("a,b\n1,NaN\n2,3".as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(ds.n_items(), 2);
    assert!(ds.cell(1, 0).is_missing());
    assert_eq!(ds.cell(1, 1), Cell::Number(3.0));
    assert!(ds.variables().iter().all(|v| v.kind() == VariableKind::Numeric));
}

#[test]
fn missing_tokens_are_exact_after_trim() {
    let ds = parse_table("a,b\n nan ,  NA \n1,2".as_bytes(), &IngestConfig::default()).unwrap();
    // `nan` is not a token and does not parse as finite, so column a is categorical
    assert_eq!(ds.variables()[0].kind(), VariableKind::Categorical);
    assert_eq!(ds.cell(0, 0), Cell::Label("nan"));
    assert!(ds.cell(1, 0).is_missing());
}

#[test]
fn infinite_tokens_make_a_column_categorical() {
    let ds = parse_table("a\ninf\n1".as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(ds.variables()[0].kind(), VariableKind::Categorical);
    let mut cfg = IngestConfig::default();
    cfg.kind_overrides.insert("a".into(), VariableKind::Numeric);
    assert!(matches!(parse_table("a\ninf\n1".as_bytes(), &cfg), Err(Error::Parse { row: 2, .. })));
}

#[test]
fn structural_errors() {
    let cfg = IngestConfig::default();
    assert!(matches!(
        parse_table("a,b\n1,2\n3\n".as_bytes(), &cfg),
        Err(Error::Parse { row: 3, .. })
    ));
    assert!(matches!(parse_table("".as_bytes(), &cfg), Err(Error::EmptyInput)));
    assert!(matches!(
        parse_table("a,a\n1,2\n".as_bytes(), &cfg),
        Err(Error::DuplicateColumn(name)) if name == "a"
    ));
    let bad = IngestConfig {
        delimiter: '"',
        ..Default::default()
    };
    assert!(matches!(parse_table("a\n1".as_bytes(), &bad), Err(Error::Config(_))));
    let no_tokens = IngestConfig {
        missing_tokens: vec![],
        ..Default::default()
    };
    assert!(matches!(parse_table("a\n1".as_bytes(), &no_tokens), Err(Error::Config(_))));
}

#[test]
fn tsv_anonymized_and_headerless() {
    let ds = parse_table("x\ty\n1\tu\n2\tv\n".as_bytes(), &IngestConfig {
        anonymize: true,
        ..IngestConfig::tsv()
    })
    .unwrap();
    let names: Vec<&str> = ds.variables().iter().map(|v| v.name()).collect();
    assert_eq!(names, ["A", "B"]);
    let ds = parse_table("1,2\n3,4\n".as_bytes(), &IngestConfig {
        header: false,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(ds.n_items(), 2);
    assert_eq!(ds.variables()[1].name(), "V2");
}

#[test]
fn wide_label_columns_warn_but_stay_categorical() {
    let mut text = String::from("id\n");
    for i in 0..20 {
        text.push_str(&format!("item{i}\n"));
    }
    let (ds, warnings) = parse_table_with_warnings(text.as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(ds.variables()[0].kind(), VariableKind::Categorical);
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].variable, "id");
}

#[test]
fn writing_uses_first_missing_token() {
    let ds = Dataset::new("w", vec![Variable::numeric("a", [Some(1.5), None])]).unwrap();
    let text = String::from_utf8(write_table_to_vec(&ds, &IngestConfig::default()).unwrap()).unwrap();
    assert_eq!(text, "a\n1.5\nNaN\n");
    let empty = Dataset::new("e", vec![Variable::numeric("a", []), Variable::numeric("b", [])]).unwrap();
    let text = String::from_utf8(write_table_to_vec(&empty, &IngestConfig::default()).unwrap()).unwrap();
    assert_eq!(text, "a,b\n");
}

fn labelled(seed: u64, n: usize) -> Dataset {
    let mut base = random_dataset(seed, 3, n, 0.4).variables().to_vec();
    let mut rng = SeededRng::new(seed);
    base.push(Variable::categorical(
        "label",
        (0..n).map(|_| match rng.below(4) {
            0 => None,
            k => Some(["red", "green", "blue"][k as usize - 1]),
        }),
    ));
    Dataset::with_items("rt", n, base).unwrap()
}

proptest! {
    #[test]
    fn write_then_parse_round_trips(seed in any::<u64>(), n in 1usize..60, tsv in any::<bool>()) {
        let ds = labelled(seed, n);
        let cfg = if tsv { IngestConfig::tsv() } else { IngestConfig::default() };
        let bytes = write_table_to_vec(&ds, &cfg).unwrap();
        let back = parse_table(bytes.as_slice(), &cfg).unwrap();
        prop_assert_eq!(back.n_items(), ds.n_items());
        for v in 0..ds.n_variables() {
            for i in 0..ds.n_items() {
                match (ds.cell(v, i), back.cell(v, i)) {
                    (Cell::Number(a), Cell::Number(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0)),
                    // an all-missing label column comes back numeric
                    (Cell::Missing, Cell::Missing) => {}
                    (Cell::Label(a), Cell::Label(b)) => prop_assert_eq!(a, b),
                    other => prop_assert!(false, "cell mismatch {:?}", other),
                }
            }
        }
    }
}
