use exknock::harness::io::{read_dataset, write_dataset};
use exknock::harness::{cell_dataset, run_real, run_real_dataset, ExperimentConfig, KnockoffMethod, RealConfig};
use exknock::selection::LambdaRule;
use exknock::{Error, PriorSpec};

fn config(method: KnockoffMethod) -> RealConfig {
    RealConfig {
        prior: PriorSpec::Beta { a: 2.0, b: 2.0 },
        q: 0.2,
        knockoff_method: method,
        m_cat: 1,
        seed: 17,
        plus: true,
        lambda_rule: LambdaRule::default(),
    }
}

#[test]
fn file_round_trip_gives_the_same_selection() {
    let sim = ExperimentConfig {
        p: 12,
        n: 200,
        support_size: 4,
        amplitudes: vec![20.0],
        ..ExperimentConfig::desk_scale()
    };
    let data = cell_dataset(&sim, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&path, &data).unwrap();
    assert_eq!(read_dataset(&path, 1).unwrap(), data);
    for method in [KnockoffMethod::Cik, KnockoffMethod::Gaussian] {
        let from_file = run_real(&path, &config(method)).unwrap();
        assert_eq!(from_file, run_real_dataset(&data, &config(method)).unwrap());
        assert_eq!(from_file.selected.len(), from_file.selected_indices.len());
        for (name, &i) in from_file.selected.iter().zip(&from_file.selected_indices) {
            assert_eq!(name, &data.names[i]);
        }
    }
}

#[test]
fn ingestion_errors_name_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b,y\n0,1,0.5\n1,7,0.1\n").unwrap();
    match run_real(&path, &config(KnockoffMethod::Cik)) {
        Err(Error::Ingestion { row, column, .. }) => assert_eq!((row, column), (2, 2)),
        other => panic!("expected an ingestion error, got {other:?}"),
    }
    assert!(run_real(&dir.path().join("missing.csv"), &config(KnockoffMethod::Cik)).is_err());
}
