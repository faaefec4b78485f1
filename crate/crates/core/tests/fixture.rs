use std::path::PathBuf;

use collapsar::data::{fnv1a64, load_dataset, read_csv, write_csv, Manifest};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sample_ctr")
}

#[test]
fn bundled_sample_matches_its_manifest() {
    let d = dir();
    let ds = load_dataset(&d.join("data.csv"), &d.join("schema.toml")).unwrap();
    let manifest = Manifest::load(&d.join("manifest.json")).unwrap();
    assert_eq!(ds.len(), 1000);
    assert_eq!(manifest.rows, 1000);

    let ours = Manifest::describe(&ds);
    assert_eq!(
        ours.field_means.keys().collect::<Vec<_>>(),
        manifest.field_means.keys().collect::<Vec<_>>()
    );
    for (name, m) in &manifest.field_means {
        let got = ours.field_means[name];
        assert!((got - m).abs() < 1e-9, "{name}: {got} vs {m}");
    }
    for (task, r) in &manifest.label_rates {
        assert!((ours.label_rates[task] - r).abs() < 1e-12);
    }

    let bytes = std::fs::read(d.join("data.csv")).unwrap();
    assert_eq!(
        manifest.checksum.as_deref(),
        Some(format!("{:016x}", fnv1a64(&bytes)).as_str())
    );
}

#[test]
fn bundled_sample_survives_a_rewrite() {
    let d = dir();
    let ds = load_dataset(&d.join("data.csv"), &d.join("schema.toml")).unwrap();
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).unwrap();
    let back = read_csv(buf.as_slice(), ds.schema.clone()).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn fnv_reference_vectors() {
    assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
    assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
}
