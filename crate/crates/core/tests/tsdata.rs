#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use kasba::tsdata::{load_tsv, write_tsv};
use kasba::{Dataset, Error, Split, TimeSeries};
use proptest::prelude::*;

fn rows() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..12, 1usize..10).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, m), n),
            prop::collection::vec(0usize..4, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn tsv_round_trip((values, labels) in rows()) {
        let dir = tempfile::tempdir().unwrap();
        let series: Vec<TimeSeries> = values.iter().map(|v| ts(v)).collect();
        let ds = Dataset::new("Round", series, Some(labels), Split::Train).unwrap();
        let path = dir.path().join("Round_TRAIN.tsv");
        write_tsv(&ds, &path).unwrap();
        let back = load_tsv(&path, true).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        prop_assert_eq!(back.name(), "Round");
        prop_assert_eq!(back.split(), Split::Train);
        for (a, b) in back.series().iter().zip(ds.series()) {
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
        // classes come back in first-appearance order, so compare partitions
        let (orig, got) = (ds.labels().unwrap(), back.labels().unwrap());
        for i in 0..orig.len() {
            for j in 0..orig.len() {
                prop_assert_eq!(orig[i] == orig[j], got[i] == got[j]);
            }
        }
    }

    #[test]
    fn z_normalised_has_zero_mean_unit_std(v in prop::collection::vec(-100.0f64..100.0, 2..40)) {
        let x = ts(&v).z_normalised();
        let spread = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(x.mean().abs() < 1e-9);
        if spread > 1e-6 {
            prop_assert!((x.std() - 1.0).abs() < 1e-9);
        } else {
            prop_assert!(x.iter().all(|&y| y == 0.0));
        }
    }

    #[test]
    fn z_normalisation_is_affine_invariant(v in prop::collection::vec(-10.0f64..10.0, 3..20), a in 0.5f64..5.0, b in -5.0f64..5.0) {
        let x = ts(&v);
        prop_assume!(x.std() > 1e-3);
        let y = ts(&v.iter().map(|t| a * t + b).collect::<Vec<_>>());
        for (p, q) in x.z_normalised().iter().zip(y.z_normalised().iter()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_series_normalise_to_zero() {
    assert!(ts(&[4.0; 6]).z_normalised().iter().all(|&v| v == 0.0));
}

#[test]
fn malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("Bad_TRAIN.tsv");
    std::fs::write(&ragged, "1\t0\t1\n2\t0\n").unwrap();
    assert!(matches!(load_tsv(&ragged, true), Err(Error::Format { line: 2, .. })));
    let text = dir.path().join("Txt_TRAIN.tsv");
    std::fs::write(&text, "1\t0\tabc\n").unwrap();
    assert!(matches!(load_tsv(&text, true), Err(Error::Parse { line: 1, .. })));
    let nan = dir.path().join("Nan_TRAIN.tsv");
    std::fs::write(&nan, "1\t0\tNaN\n").unwrap();
    assert!(load_tsv(&nan, true).is_err());
    let empty = dir.path().join("Empty_TRAIN.tsv");
    std::fs::write(&empty, "").unwrap();
    assert!(matches!(load_tsv(&empty, true), Err(Error::EmptyDataset(_))));
    assert!(matches!(
        load_tsv(dir.path().join("missing.tsv"), true),
        Err(Error::Io(_))
    ));
}

#[test]
fn combine_unifies_class_names() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("C_TRAIN.tsv");
    let test = dir.path().join("C_TEST.tsv");
    std::fs::write(&train, "a\t0\t1\nb\t1\t0\n").unwrap();
    std::fs::write(&test, "b\t1\t1\na\t0\t0\n").unwrap();
    let all = Dataset::combine(&load_tsv(&train, true).unwrap(), &load_tsv(&test, true).unwrap()).unwrap();
    assert_eq!(all.len(), 4);
    assert_eq!(all.labels().unwrap(), &[0, 1, 1, 0]);
    assert_eq!(all.split(), Split::Combined);
}
