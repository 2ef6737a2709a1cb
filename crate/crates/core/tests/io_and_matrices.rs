use neurn_kit::archspec::{ArchSpec, ArchSpecError, LayerAlphabet};
use neurn_kit::imageio::{
    read_idx_images, read_idx_labels, read_pgm, write_idx_images, write_idx_labels, write_pgm,
    ImageIoError, LabeledDataset, PgmEncoding,
};
use neurn_kit::neurn::Image;
use neurn_kit::simmat::{
    cosine, difference_matrix, mean_offdiagonal, MatrixKind, SimilarityMatrix,
};
use proptest::prelude::*;

fn byte_image() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
    (1usize..12, 1usize..12)
        .prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(any::<u8>(), w * h)))
}

fn sim_matrix(n: usize) -> impl Strategy<Value = SimilarityMatrix> {
    prop::collection::vec(-1.0f64..=1.0, n * n).prop_map(move |v| {
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            values[i][i] = 1.0;
            for j in (i + 1)..n {
                values[i][j] = v[i * n + j];
                values[j][i] = v[i * n + j];
            }
        }
        let labels = (0..n).map(|i| format!("m{i}")).collect();
        SimilarityMatrix::from_parts(labels, values, MatrixKind::Similarity).unwrap()
    })
}

proptest! {
    #[test]
    fn pgm_round_trip((w, h, bytes) in byte_image(), binary in any::<bool>()) {
        let img = Image::from_u8(w, h, 1, &bytes).unwrap();
        let enc = if binary { PgmEncoding::Binary } else { PgmEncoding::Ascii };
        let encoded = write_pgm(&img, enc).unwrap();
        prop_assert_eq!(read_pgm(&encoded).unwrap(), img.clone());
        prop_assert_eq!(write_pgm(&read_pgm(&encoded).unwrap(), enc).unwrap(), encoded);
    }

    #[test]
    fn idx_round_trip((w, h, bytes) in byte_image(), n in 1usize..5) {
        let imgs: Vec<Image> = (0..n).map(|k| {
            let shifted: Vec<u8> = bytes.iter().map(|b| b.wrapping_add(k as u8)).collect();
            Image::from_u8(w, h, 1, &shifted).unwrap()
        }).collect();
        let encoded = write_idx_images(&imgs).unwrap();
        prop_assert_eq!(&encoded[..4], &[0, 0, 8, 3]);
        prop_assert_eq!(u32::from_be_bytes(encoded[8..12].try_into().unwrap()) as usize, h);
        prop_assert_eq!(u32::from_be_bytes(encoded[12..16].try_into().unwrap()) as usize, w);
        prop_assert_eq!(read_idx_images(&encoded).unwrap(), imgs);
    }

    #[test]
    fn idx_truncation_and_trailing_detected((w, h, bytes) in byte_image()) {
        let img = Image::from_u8(w, h, 1, &bytes).unwrap();
        let mut encoded = write_idx_images(&[img]).unwrap();
        let truncated = &encoded[..encoded.len() - 1];
        let truncated_err = matches!(read_idx_images(truncated), Err(ImageIoError::Truncated { .. }));
        prop_assert!(truncated_err);
        encoded.push(0);
        prop_assert!(matches!(read_idx_images(&encoded), Err(ImageIoError::TrailingBytes(1))));
    }

    #[test]
    fn cosine_scale_invariant(u in prop::collection::vec(0.1f64..100.0, 12), v in prop::collection::vec(0.1f64..100.0, 12), a in 0.01f64..100.0) {
        let scaled: Vec<f64> = u.iter().map(|x| a * x).collect();
        prop_assert!((cosine(&scaled, &v).unwrap() - cosine(&u, &v).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn difference_mean_is_mean_difference(a in sim_matrix(5), b in sim_matrix(5)) {
        let d = difference_matrix(&a, &b).unwrap();
        let lhs = mean_offdiagonal(&d).unwrap();
        let rhs = mean_offdiagonal(&a).unwrap() - mean_offdiagonal(&b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_idempotent(m in sim_matrix(6)) {
        let text = m.to_csv_string();
        let back = SimilarityMatrix::from_csv_str(&text).unwrap();
        prop_assert_eq!(back.to_csv_string(), text);
        prop_assert!(back.is_symmetric(1e-9));
    }

    #[test]
    fn spec_encode_decode_round_trip(codes in prop::collection::vec(0usize..29, 1..60)) {
        let alphabet = LayerAlphabet::bundled();
        let names: Vec<&str> = codes.iter().map(|&i| alphabet.entries()[i].name.as_str()).collect();
        let spec = ArchSpec::from_names("m", &names, &alphabet).unwrap();
        let reparsed = ArchSpec::parse(&spec.to_json(&alphabet), &alphabet).unwrap();
        prop_assert_eq!(&reparsed, &spec);
        prop_assert_eq!(ArchSpec::decode("m", &spec.encode(), &alphabet).unwrap(), spec);
    }

    #[test]
    fn first_unknown_layer_is_reported(prefix in 0usize..20, suffix in 0usize..5) {
        let alphabet = LayerAlphabet::bundled();
        let mut names = vec!["Conv2D"; prefix];
        names.push("NotALayer");
        names.extend(vec!["Bogus"; suffix]);
        match ArchSpec::from_names("m", &names, &alphabet) {
            Err(ArchSpecError::UnknownLayer { name, index }) => {
                prop_assert_eq!(index, prefix);
                prop_assert_eq!(name, "NotALayer");
            }
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn pgm_scales_by_maxval() {
    let img = read_pgm(b"P2\n2 1\n15\n0 15\n").unwrap();
    assert_eq!(img.data(), &[0.0, 1.0]);
    assert!(matches!(
        read_pgm(b"P2\n1 1\n15\n16\n"),
        Err(ImageIoError::SampleTooLarge { .. })
    ));
    assert!(matches!(
        read_pgm(b"P5\n1 1\n65535\n\0\0"),
        Err(ImageIoError::MaxVal(65535))
    ));
}

#[test]
fn labeled_dataset_from_idx() {
    let imgs = vec![Image::filled(2, 2, 1, 0.0).unwrap(); 3];
    let ds = LabeledDataset::from_idx(
        &write_idx_images(&imgs).unwrap(),
        &write_idx_labels(&[1, 2, 3]),
    )
    .unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(
        read_idx_labels(&write_idx_labels(&[7, 9])).unwrap(),
        vec![7, 9]
    );
    let mismatch =
        LabeledDataset::from_idx(&write_idx_images(&imgs).unwrap(), &write_idx_labels(&[1]));
    assert!(matches!(
        mismatch,
        Err(ImageIoError::CountMismatch {
            images: 3,
            labels: 1
        })
    ));
}
