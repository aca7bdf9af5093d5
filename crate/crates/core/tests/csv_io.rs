mod common;

use std::path::PathBuf;

use fairshare::forge::{gen_uniform_partition, load_csv, save_csv};
use fairshare::model::Instance;
use fairshare::num::ratio;
use fairshare::Error;
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn mixed_notation_parses_to_exact_values() {
    let inst = load_csv(data("mixed.csv")).unwrap();
    assert_eq!((inst.n(), inst.m()), (2, 3));
    assert_eq!(inst.value(0, 0), &ratio(1, 2));
    assert_eq!(inst.value(0, 1), &ratio(1, 4));
    assert_eq!(inst.value(0, 2), &ratio(3, 1));
    assert_eq!(inst.value(1, 2), &ratio(1, 3));
}

#[test]
fn canonical_output_matches_golden_file() {
    let inst = load_csv(data("mixed.csv")).unwrap();
    let golden = std::fs::read_to_string(data("mixed.canonical.csv")).unwrap();
    assert_eq!(inst.to_csv_string(), golden);
}

#[test]
fn generator_output_matches_golden_file() {
    let inst = gen_uniform_partition(3, 4, 20, 11).unwrap();
    let golden = std::fs::read_to_string(data("uniform_n3_m4_seed11.csv")).unwrap();
    assert_eq!(inst.to_csv_string(), golden);
}

#[test]
fn parse_errors_name_row_and_column() {
    match load_csv(data("bad_cell.csv")) {
        Err(Error::Parse { row: 3, column: 2, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(load_csv(data("short_row.csv")), Err(Error::Parse { row: 3, .. })));
    assert!(matches!(load_csv(data("negative.csv")), Err(Error::Parse { row: 2, column: 2, .. })));
    assert!(load_csv(data("missing.csv")).is_err());
}

proptest! {
    #[test]
    fn write_then_read_is_identity(rows in prop::collection::vec(prop::collection::vec((0i64..50, 1i64..9), 3), 1..5)) {
        let values = rows
            .iter()
            .map(|row| row.iter().map(|&(p, q)| ratio(p, q)).collect())
            .collect();
        let inst = Instance::new(values).unwrap();
        let back = Instance::read_csv(inst.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(&back, &inst);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.csv");
        save_csv(&inst, &path).unwrap();
        prop_assert_eq!(load_csv(&path).unwrap(), inst);
    }
}
