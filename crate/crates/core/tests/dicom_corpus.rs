use std::fs;
use std::path::PathBuf;

use cxr_core::dicom::{extract_pixels, parse_part10, serialize_part10, DataElement};
use serde_json::Value;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata/dicom")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_elements(name: &str, actual: &[DataElement], expected: &Value) {
    let expected = expected.as_array().unwrap();
    assert_eq!(actual.len(), expected.len(), "{name}: element count");
    for (a, e) in actual.iter().zip(expected) {
        let tag = format!("{:04X}{:04X}", a.tag.group, a.tag.element);
        assert_eq!(tag, e["tag"], "{name}");
        assert_eq!(a.vr.code(), e["vr"], "{name} {tag}");
        assert_eq!(hex(a.bytes()), e["value"], "{name} {tag}");
    }
}

#[test]
fn golden_corpus_matches_listings_and_round_trips() {
    let mut entries: Vec<_> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "dcm"))
        .collect();
    entries.sort();
    assert!(entries.len() >= 20, "corpus has {} files", entries.len());

    let (mut parsed, mut refused, mut bits, mut photometrics) = (0, 0, Vec::new(), Vec::new());
    for path in &entries {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let bytes = fs::read(path).unwrap();
        let listing: Value = serde_json::from_slice(&fs::read(path.with_extension("json")).unwrap()).unwrap();

        match (parse_part10(&bytes), listing.get("error")) {
            (Err(err), Some(kind)) => {
                assert_eq!(err.kind(), kind, "{name}: {err}");
                refused += 1;
            }
            (Ok(obj), None) => {
                check_elements(&name, &obj.meta, &listing["meta"]);
                check_elements(&name, &obj.dataset, &listing["dataset"]);
                assert_eq!(serialize_part10(&obj).unwrap(), bytes, "{name}: byte round trip");
                assert_eq!(parse_part10(&serialize_part10(&obj).unwrap()).unwrap(), obj);

                let pixels = &listing["pixels"];
                match (extract_pixels(&obj), pixels.get("error")) {
                    (Err(err), Some(kind)) => assert_eq!(err.kind(), kind, "{name}: {err}"),
                    (Ok(grid), None) => {
                        assert_eq!(grid.rows(), pixels["rows"].as_u64().unwrap() as usize, "{name}");
                        assert_eq!(grid.cols(), pixels["cols"].as_u64().unwrap() as usize, "{name}");
                        assert_eq!(u64::from(grid.bits_allocated()), pixels["bits_allocated"], "{name}");
                        assert_eq!(grid.photometric().as_str(), pixels["photometric"], "{name}");
                        let samples: Vec<u16> = serde_json::from_value(pixels["samples"].clone()).unwrap();
                        assert_eq!(grid.samples(), samples.as_slice(), "{name}");
                        bits.push(grid.bits_allocated());
                        photometrics.push(grid.photometric());
                    }
                    (got, want) => panic!("{name}: pixels gave {got:?}, listing expects {want:?}"),
                }
                parsed += 1;
            }
            (got, want) => panic!("{name}: parse gave {got:?}, listing expects {want:?}"),
        }
    }
    assert!(parsed > 0 && refused > 0);
    assert!(bits.contains(&8) && bits.contains(&16));
    assert!(photometrics.len() > 1 && photometrics.windows(2).any(|w| w[0] != w[1]));
}
