use std::fs;

use qol_core::data::{gen_synthetic, impute, load_csv, load_secom, write_csv};
use qol_core::{ImputePolicy, QolError, SyntheticConfig};

#[test]
fn synthetic_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    let stream = gen_synthetic(&SyntheticConfig::fet_like(23, 10, 300, 7)).unwrap();
    write_csv(&path, &stream).unwrap();
    let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("f0,f1,"));
    assert!(header.ends_with("f22,label"));
    assert_eq!(load_csv(&path, "label").unwrap(), stream);
}

#[test]
fn csv_order_missing_cells_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.csv");
    fs::write(&path, "a,class,b\n1,0,2\n3,1,\n5,2,6\n").unwrap();
    let stream = load_csv(&path, "class").unwrap();
    assert_eq!(stream.len(), 3);
    assert_eq!(stream[0].features, vec![1.0, 2.0]);
    assert!(stream[1].features[1].is_nan());
    assert_eq!(stream.iter().map(|s| s.label).collect::<Vec<_>>(), vec![0, 1, 2]);
    let imputed = impute(stream, ImputePolicy::LastObserved);
    assert_eq!(imputed[1].features, vec![3.0, 2.0]);

    match load_csv(&path, "label") {
        Err(QolError::Data(msg)) => assert!(msg.contains("label")),
        other => panic!("expected missing-column error, got {other:?}"),
    }

    fs::write(&path, "a,label\nx,0\n").unwrap();
    assert!(matches!(load_csv(&path, "label"), Err(QolError::Parse { .. })));
}

#[test]
fn secom_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("secom.data");
    let labels = dir.path().join("secom_labels.data");
    fs::write(&feats, "3030.93 2564 NaN\n3095.78 NaN 2187.7\n").unwrap();
    fs::write(
        &labels,
        "-1 \"19/07/2008 11:55:00\"\n1 \"19/07/2008 12:32:00\"\n",
    )
    .unwrap();
    let stream = load_secom(&feats, &labels, ImputePolicy::LastObserved).unwrap();
    assert_eq!(stream[0].features, vec![3030.93, 2564.0, 0.0]);
    assert_eq!(stream[1].features, vec![3095.78, 2564.0, 2187.7]);
    assert_eq!(stream[1].label, 1);

    assert!(load_secom(dir.path().join("missing"), &labels, ImputePolicy::Zero).is_err());
}
