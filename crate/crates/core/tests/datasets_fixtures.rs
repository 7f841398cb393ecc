mod common;

use proptest::prelude::*;
use simpson_core::contingency::{detect_simpson, Event, JointTable, ParadoxStatus};
use simpson_core::datasets::{
    self, coarse_grain, coarse_grain_by_labels, load, partition_scan, reconstruct_joint, save, Format, LabeledTable,
    Labels, PublishedConditionals, ValueKind,
};
use simpson_core::Error;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn covid_fixture_reproduces_published_conditionals() {
    let table = load(&data_path("covid.json"), Format::Json).unwrap();
    let t = table.to_joint().unwrap();
    let agg = t.aggregate_conditionals().unwrap();
    let fine = t.fine_conditionals().unwrap();
    assert!(close(agg[0], 0.0608, 1e-4) && close(agg[1], 0.0760, 1e-4));
    for (got, want) in fine.iter().flatten().zip([0.0507, 0.150, 0.04900, 0.135]) {
        assert!(close(*got, want, 1e-4), "{got} vs {want}");
    }
    let nb = [t.conditional(&[Event::NotB], &[Event::A2]).unwrap(), t.conditional(&[Event::NotB], &[Event::NotA2]).unwrap()];
    assert!(close(nb[0], 0.1017, 1e-4) && close(nb[1], 0.3141, 1e-4));
    assert_eq!(detect_simpson(&t).unwrap().status, ParadoxStatus::ParadoxAggregateLess);
}

#[test]
fn smoking_full_marginals() {
    let table = load(&data_path("smoking_full.json"), Format::Json).unwrap();
    assert_eq!(table.b_levels(), 6);
    assert_eq!(table.kind(), ValueKind::Count);
    let marg = table.b_marginal();
    for (got, want) in marg.iter().zip([0.0946, 0.2272, 0.1859, 0.1681, 0.1908, 0.1334]) {
        assert!(close(*got, want, 5e-5), "{got} vs {want}");
    }
    assert!(close(marg.iter().sum::<f64>(), 1.0, 1e-12));
}

#[test]
fn coarse_graining_the_oldest_group() {
    let table = datasets::bundled("smoking_full").unwrap();
    let t = coarse_grain(&table, &[0, 1, 2, 3, 4]).unwrap();
    assert!(close(t.prob(&[Event::NotB]), 0.1334, 5e-5));
    let fine = t.fine_conditionals().unwrap();
    for (got, want) in fine.iter().flatten().zip([0.1820, 0.8056, 0.1206, 0.7829]) {
        assert!(close(*got, want, 1e-4), "{got} vs {want}");
    }
    assert!(detect_simpson(&t).unwrap().status.is_paradox());
    let by_label = coarse_grain_by_labels(&table, &["18-24", "25-34", "35-44", "45-54", "55-64"]).unwrap();
    assert_eq!(by_label, t);
}

#[test]
fn coarse_graining_preserves_margins() {
    let table = datasets::bundled("smoking_full").unwrap();
    let total = table.total();
    for levels in [&[0usize][..], &[1, 3], &[5], &[0, 2, 4]] {
        let t = coarse_grain(&table, levels).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let direct: f64 = (0..6).map(|j| table.value(i, k, j)).sum::<f64>() / total;
                assert!(close(t.cell(i, k, 0) + t.cell(i, k, 1), direct, 1e-15));
            }
        }
    }
}

#[test]
fn exactly_one_partition_gives_the_paradox() {
    let table = datasets::bundled("smoking_full").unwrap();
    let scan = partition_scan(&table).unwrap();
    assert_eq!(scan.len(), 31);
    let hits: Vec<_> = scan.iter().filter(|p| p.report.status.is_paradox()).collect();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].b_levels, vec![0, 1, 2, 3, 4]);
}

#[test]
fn invalid_partitions() {
    let table = datasets::bundled("smoking_full").unwrap();
    for levels in [&[][..], &[0, 1, 2, 3, 4, 5], &[6], &[1, 1]] {
        assert!(matches!(coarse_grain(&table, levels), Err(Error::InvalidPartition(_))));
    }
}

#[test]
fn smoking_reconstruction_by_hand() {
    let published = datasets::bundled("smoking_coarse").unwrap().published().unwrap().clone();
    let rec = reconstruct_joint(&published).unwrap();
    // 0.2214 = 0.1820 x + 0.8056 (1 − x)
    let x = (0.8056 - 0.2214) / (0.8056 - 0.1820);
    let y = (0.7829 - 0.2485) / (0.7829 - 0.1206);
    let p = (0.8666 - y) / (x - y);
    assert!(close(rec.b_given_a2[0], x, 1e-12) && close(x, 0.9368, 1e-4));
    assert!(close(rec.b_given_a2[1], y, 1e-12) && close(y, 0.8069, 1e-4));
    assert!(close(rec.p_a2, p, 1e-12) && close(p, 0.4596, 1e-4));
    assert_eq!(rec.table, common::smoking_coarse());
}

#[test]
fn covid_reconstruction_residuals() {
    let published = datasets::bundled("covid").unwrap().published().unwrap().clone();
    let rec = reconstruct_joint(&published).unwrap();
    let direct = (0.0507 * 0.8983 + 0.150 * 0.1017 - 0.0608f64).abs();
    let companion = (0.04900 * 0.6859 + 0.135 * 0.3141 - 0.0760f64).abs();
    assert!(direct < 1e-4 && companion < 1e-4);
    assert!(close(rec.residuals["total_probability_a2"], direct, 1e-15));
    assert!(close(rec.residuals["total_probability_not_a2"], companion, 1e-15));
    assert_eq!(rec.table, common::covid());
    for (given, value) in [(&[Event::A2][..], 0.0608), (&[Event::NotA2][..], 0.0760), (&[Event::A2, Event::B][..], 0.0507)] {
        assert!(close(rec.table.conditional(&[Event::A1], given).unwrap(), value, 1e-3));
    }
}

#[test]
fn perturbed_conditional_is_inconsistent() {
    let mut published = datasets::bundled("covid").unwrap().published().unwrap().clone();
    published.fine[0][0] += 0.05;
    assert!(matches!(reconstruct_joint(&published), Err(Error::InconsistentData(_))));
    let missing = PublishedConditionals { p_a2: None, p_b: None, ..datasets::bundled("covid").unwrap().published().unwrap().clone() };
    assert!(matches!(reconstruct_joint(&missing), Err(Error::InconsistentData(_))));
}

#[test]
fn empty_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert!(matches!(load(&empty, Format::Json), Err(Error::Parse(_))));
    let empty_csv = dir.path().join("empty.csv");
    std::fs::write(&empty_csv, "").unwrap();
    assert!(matches!(load(&empty_csv, Format::Csv), Err(Error::Parse(_)) | Err(Error::Schema(_))));

    let missing_cell = "a1,a2,b,p\nd,s,y,0.25\nd,n,y,0.25\na,s,y,0.25\n";
    assert!(matches!(LabeledTable::parse_csv(missing_cell), Err(Error::Schema(_))));
    let off = "a1,a2,b,p\nd,s,y,0.1\nd,n,y,0.1\na,s,y,0.1\na,n,y,0.1\nd,s,o,0.1\nd,n,o,0.1\na,s,o,0.1\na,n,o,0.1\n";
    assert!(matches!(LabeledTable::parse_csv(off), Err(Error::Normalization(_))));
}

#[test]
fn csv_and_json_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in datasets::BUNDLED {
        let table = datasets::bundled(name).unwrap();
        for format in [Format::Json, Format::Csv] {
            let path = dir.path().join(format!("{name}.{}", if format == Format::Json { "json" } else { "csv" }));
            save(&table, &path, format).unwrap();
            assert_eq!(Format::from_path(&path), format);
            let back = load(&path, format).unwrap();
            assert_eq!(back.labels(), table.labels());
            for i in 0..2 {
                for k in 0..2 {
                    for j in 0..table.b_levels() {
                        assert_eq!(back.value(i, k, j).to_bits(), table.value(i, k, j).to_bits());
                    }
                }
            }
        }
    }
}

fn labels(m: usize) -> Labels {
    Labels {
        a1: ["yes".into(), "no".into()],
        a2: ["treated".into(), "control".into()],
        b: (0..m).map(|j| format!("level {j}")).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn save_load_is_bit_exact(raw in prop::collection::vec(1e-6f64..1.0, 8..=24).prop_filter("multiple of four", |v| v.len() % 4 == 0)) {
        let m = raw.len() / 4;
        let total: f64 = raw.iter().sum();
        let values: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let Ok(table) = LabeledTable::new(labels(m), ValueKind::Probability, values, "random") else {
            return Ok(());
        };
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Json, Format::Csv] {
            let path = dir.path().join("t");
            save(&table, &path, format).unwrap();
            let back = load(&path, format).unwrap();
            for i in 0..2 {
                for k in 0..2 {
                    for j in 0..m {
                        prop_assert_eq!(back.value(i, k, j).to_bits(), table.value(i, k, j).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn from_joint_round_trips(w in prop::array::uniform8(0.001f64..1.0)) {
        let t = JointTable::from_weights(w).unwrap();
        let labelled = LabeledTable::from_joint(&t, labels(2), "joint").unwrap();
        let back = LabeledTable::parse_json(&labelled.to_json_string()).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                for m in 0..2 {
                    prop_assert_eq!(back.value(i, k, m).to_bits(), t.cell(i, k, m).to_bits());
                }
            }
        }
        // to_joint renormalises, which may move the last bit
        for (a, b) in back.to_joint().unwrap().to_flat().iter().zip(t.to_flat()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }
}
