use hyperwalk::config::parse_pairs;
use hyperwalk::format::{parse_custom, write_custom};
use hyperwalk::{run_experiment, ExperimentConfig};
use hyperwalk_core::gallery::{Family, TsetlinSpec};

#[test]
fn gallery_walk_survives_file_roundtrip() {
    let f = Family::Tsetlin(TsetlinSpec::new(vec![0.5, 0.3, 0.2]).unwrap());
    let text = write_custom(&f.arrangement().unwrap(), &f.weighted_faces().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tsetlin3.arr");
    std::fs::write(&path, &text).unwrap();

    let run = |family: String| {
        let pairs = parse_pairs(&family).unwrap();
        run_experiment(&ExperimentConfig::from_pairs_with_env(&pairs, None).unwrap()).unwrap()
    };
    let custom = run(format!(
        "family=custom file={} mode=exact t=1..8",
        path.display()
    ));
    let named = run("family=tsetlin weights=0.5,0.3,0.2 mode=exact t=1..8".into());
    assert_eq!(custom.rows, named.rows);
    assert_eq!(custom.column("s_exact"), named.column("s_exact"));
    let (arr, _) = parse_custom(&text).unwrap();
    assert_eq!(arr.chamber_count(), Some(6));
}

#[test]
fn non_separating_file_is_rejected_in_mc() {
    let text = "m=2\n[chambers]\n++\n-+\n+-\n--\n[faces]\n00\n+0\n-0\n0+\n0-\n++\n-+\n+-\n--\n[weights]\n1 1/2\n2 1/2\n";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.arr");
    std::fs::write(&path, text).unwrap();
    let pairs = parse_pairs(&format!(
        "family=custom file={} mode=mc trials=10",
        path.display()
    ))
    .unwrap();
    let cfg = ExperimentConfig::from_pairs_with_env(&pairs, None).unwrap();
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn non_closed_face_list_is_rejected() {
    // "+0" times "0+" is "++", which is missing
    let text = "m=2\n[chambers]\n-+\n[faces]\n00\n+0\n0+\n-+\n[weights]\n1 1\n";
    assert!(parse_custom(text).is_err());
}
