//! Binary feature cache (`.pclf`).
//!
//! Layout, little-endian: the magic `"PCLF"`, one version byte, then one
//! section per present modality in canonical order, each a modality tag
//! byte, row count u32, column count u32 and `rows * cols` row-major f32
//! values. The file ends after the last section.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{IngestError, ModalityBundle};
use crate::Modality;

pub const CACHE_MAGIC: &[u8; 4] = b"PCLF";
pub const CACHE_VERSION: u8 = 1;

fn cache_err(section: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::Cache { section: section.into(), message: message.into() }
}

pub fn encode_bundle_bytes(bundle: &ModalityBundle) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.push(CACHE_VERSION);
    for m in bundle.present() {
        let a = bundle.get(m).expect("present");
        out.push(m.tag());
        write_matrix_section(&mut out, a.nrows(), a.ncols(), a.iter().copied());
    }
    out
}

pub(crate) fn write_matrix_section(out: &mut Vec<u8>, rows: usize, cols: usize, values: impl Iterator<Item = f32>) {
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Read `rows`, `cols` and the payload of one matrix section.
pub(crate) fn read_matrix_section(bytes: &mut &[u8], section: &str) -> Result<Array2<f32>, IngestError> {
    let take = |bytes: &mut &[u8], n: usize, what: &str| -> Result<Vec<u8>, IngestError> {
        if bytes.len() < n {
            return Err(cache_err(section, format!("truncated {what}: need {n} bytes, {} left", bytes.len())));
        }
        let (head, tail) = bytes.split_at(n);
        *bytes = tail;
        Ok(head.to_vec())
    };
    let dims = take(bytes, 8, "shape")?;
    let rows = u32::from_le_bytes(dims[..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(dims[4..].try_into().unwrap()) as usize;
    let n = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| cache_err(section, "shape overflows"))?;
    let payload = take(bytes, n, "payload")?;
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

pub fn decode_bundle(mut bytes: &[u8]) -> Result<ModalityBundle, IngestError> {
    if bytes.len() < 5 {
        return Err(cache_err("header", "file shorter than the 5-byte header"));
    }
    if &bytes[..4] != CACHE_MAGIC {
        return Err(cache_err("header", format!("bad magic {:?}", &bytes[..4])));
    }
    if bytes[4] != CACHE_VERSION {
        return Err(cache_err("header", format!("unsupported version {}", bytes[4])));
    }
    bytes = &bytes[5..];
    let mut bundle = ModalityBundle::new();
    let mut index = 0;
    while let Some((&tag, rest)) = bytes.split_first() {
        let m = Modality::from_tag(tag).ok_or_else(|| cache_err(format!("section {index}"), format!("unknown modality tag {tag}")))?;
        let section = format!("section {index} ({m})");
        if bundle.contains(m) {
            return Err(cache_err(section, "duplicate modality"));
        }
        bytes = rest;
        let matrix = read_matrix_section(&mut bytes, &section)?;
        bundle.insert(m, matrix).map_err(|e| cache_err(section, e.to_string()))?;
        index += 1;
    }
    Ok(bundle)
}

/// Write a file so readers only ever see the old or the complete new
/// content: write a sibling temp file, then rename over the target.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn cache_bundle(bundle: &ModalityBundle, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    write_atomic(path, &encode_bundle_bytes(bundle)).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

pub fn load_cached(path: impl AsRef<Path>) -> Result<ModalityBundle, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    decode_bundle(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ModalityBundle {
        ModalityBundle::new()
            .with(Modality::Video, Array2::from_shape_fn((3, 2), |(i, j)| i as f32 - j as f32 * 0.5))
            .with(Modality::Text, Array2::zeros((0, 4)))
    }

    #[test]
    fn layout_is_exact() {
        let bytes = encode_bundle_bytes(&ModalityBundle::new().with(Modality::Audio, Array2::from_elem((1, 1), 1.0)));
        assert_eq!(bytes, [b'P', b'C', b'L', b'F', 1, 2, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0x80, 0x3f]);
    }

    #[test]
    fn empty_text_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.pclf");
        cache_bundle(&sample(), &path).unwrap();
        let back = load_cached(&path).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.present().collect::<Vec<_>>(), vec![Modality::Video, Modality::Text]);
        assert_eq!(back.text().unwrap().dim(), (0, 4));
        // no temp file left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_bundle_bytes(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode_bundle(&bytes), Err(IngestError::Cache { section, .. }) if section == "header"));
        let mut bytes = encode_bundle_bytes(&sample());
        bytes[4] = 9;
        assert!(matches!(decode_bundle(&bytes), Err(IngestError::Cache { section, .. }) if section == "header"));
        assert!(decode_bundle(b"PCL").is_err());
    }

    #[test]
    fn truncation_names_the_section() {
        let bytes = encode_bundle_bytes(&sample());
        // cut inside the video payload
        match decode_bundle(&bytes[..5 + 9 + 7]) {
            Err(IngestError::Cache { section, message }) => {
                assert_eq!(section, "section 0 (video)");
                assert!(message.contains("payload"));
            }
            other => panic!("{other:?}"),
        }
        match decode_bundle(&bytes[..bytes.len() - 3]) {
            Err(IngestError::Cache { section, .. }) => assert_eq!(section, "section 1 (text)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_tags() {
        let mut bytes = encode_bundle_bytes(&ModalityBundle::new());
        bytes.extend_from_slice(&[7, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert!(decode_bundle(&bytes).is_err());
        let mut bytes = encode_bundle_bytes(&ModalityBundle::new());
        for _ in 0..2 {
            bytes.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0, 0]);
        }
        assert!(matches!(decode_bundle(&bytes), Err(IngestError::Cache { message, .. }) if message.contains("duplicate")));
    }

    fn matrix() -> impl Strategy<Value = Array2<f32>> {
        (0usize..5, 0usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::num::f32::NORMAL | proptest::num::f32::ZERO | proptest::num::f32::SUBNORMAL, r * c)
                .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(mats in proptest::collection::vec(proptest::option::of(matrix()), 4)) {
            let mut bundle = ModalityBundle::new();
            for (m, a) in Modality::ALL.into_iter().zip(mats) {
                if let Some(a) = a {
                    bundle.insert(m, a).unwrap();
                }
            }
            let back = decode_bundle(&encode_bundle_bytes(&bundle)).unwrap();
            prop_assert_eq!(back.present().collect::<Vec<_>>(), bundle.present().collect::<Vec<_>>());
            for m in bundle.present() {
                let (a, b) = (bundle.get(m).unwrap(), back.get(m).unwrap());
                prop_assert_eq!(a.dim(), b.dim());
                prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
