use compgrad::data::{normalize_rows, parse_libsvm, read_csv_dump, shard, to_libsvm, write_csv_dump, Dataset, Sample};
use compgrad::sparse::SparseVec;
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..30, 1usize..25).prop_flat_map(|(d, n)| {
        let row = (
            proptest::collection::vec(proptest::option::weighted(0.4, -1e3f64..1e3), d),
            -1e3f64..1e3,
        );
        proptest::collection::vec(row, n).prop_map(move |rows| {
            let samples = rows
                .into_iter()
                .map(|(vals, label)| {
                    let dense: Vec<f64> = vals.into_iter().map(|v| v.unwrap_or(0.0)).collect();
                    Sample {
                        features: SparseVec::from_dense(&dense),
                        label,
                    }
                })
                .collect();
            Dataset::new("prop", d, samples).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn libsvm_round_trip(ds in dataset()) {
        let text = to_libsvm(&ds);
        let back = parse_libsvm(text.as_bytes(), Some(ds.dim)).unwrap();
        prop_assert_eq!(back.dim, ds.dim);
        prop_assert_eq!(&back.samples, &ds.samples);
        let again = parse_libsvm(to_libsvm(&back).as_bytes(), Some(ds.dim)).unwrap();
        prop_assert_eq!(again.samples, back.samples);
    }

    #[test]
    fn csv_dump_round_trip(ds in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        write_csv_dump(&ds, dir.path()).unwrap();
        let back = read_csv_dump(dir.path(), &ds.name).unwrap();
        prop_assert_eq!(back.dim, ds.dim);
        prop_assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn shards_partition_in_order(ds in dataset(), m_frac in 0.0f64..1.0) {
        let n = ds.len();
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let shards = shard(&ds, m).unwrap();
        prop_assert_eq!(shards.len(), m);
        let joined: Vec<Sample> = shards.iter().flat_map(|s| s.rows.clone()).collect();
        prop_assert_eq!(&joined, &ds.samples);
        let sizes: Vec<usize> = shards.iter().map(|s| s.rows.len()).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
        for (i, s) in shards.iter().enumerate() {
            prop_assert_eq!(s.worker_id, i);
        }
    }

    #[test]
    fn normalize_is_idempotent(ds in dataset()) {
        let once = normalize_rows(&ds);
        let twice = normalize_rows(&once);
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            prop_assert_eq!(a.features.indices(), b.features.indices());
            prop_assert_eq!(a.label, b.label);
            let norm = a.features.norm();
            for (x, y) in a.features.values().iter().zip(b.features.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * norm.max(1e-300));
            }
            if !a.features.is_zero() {
                prop_assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn shard_rejects_more_workers_than_rows() {
    let ds = Dataset::new(
        "two",
        1,
        vec![
            Sample {
                features: SparseVec::from_dense(&[1.0]),
                label: 0.0,
            };
            2
        ],
    )
    .unwrap();
    assert!(shard(&ds, 3).is_err());
    assert!(shard(&ds, 0).is_err());
}
