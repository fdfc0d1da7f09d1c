use std::fs;

use hvfwi::helmholtz::{forward_data, AcquisitionGeometry, PmlSpec, SourceSpectrum, VelocityModel2D};
use hvfwi::io::{encode_pgm, export_image, read_gathers, read_grid, write_gathers, write_grid, GatherFile};
use hvfwi::Error;
use proptest::prelude::*;

fn layered() -> VelocityModel2D {
    VelocityModel2D::from_fn(9, 6, 10.0, 12.5, |x, z| 1500.0 + 0.3 * x + 2.0 * z + (x * z).sin()).unwrap()
}

#[test]
fn grid_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    let m = layered();
    write_grid(&path, &m).unwrap();
    let back = read_grid(&path).unwrap();
    assert_eq!(back.n_x, 9);
    assert_eq!(back.n_z, 6);
    assert_eq!(back.d_z.to_bits(), 12.5f64.to_bits());
    for (a, b) in m.velocities().iter().zip(back.velocities()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(fs::metadata(dir.path().join("m.bin")).unwrap().len(), 8 * 54);
}

#[test]
fn shape_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    write_grid(&path, &layered()).unwrap();
    let text = fs::read_to_string(&path).unwrap().replace("6,", "7,");
    fs::write(&path, text).unwrap();
    match read_grid(&path) {
        Err(Error::Format { field, .. }) => assert_eq!(field, "shape"),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn wrong_dtype_and_unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    write_grid(&path, &layered()).unwrap();
    let good = fs::read_to_string(&path).unwrap();
    fs::write(&path, good.replace("\"f64\"", "\"f32\"")).unwrap();
    assert!(matches!(read_grid(&path), Err(Error::Format { field, .. }) if field == "dtype"));
    fs::write(&path, format!("{good}colour = \"red\"\n")).unwrap();
    assert!(matches!(read_grid(&path), Err(Error::Format { field, .. }) if field == "colour"));
}

#[test]
fn missing_payload_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    write_grid(&path, &layered()).unwrap();
    fs::remove_file(dir.path().join("m.bin")).unwrap();
    assert!(matches!(read_grid(&path), Err(Error::Io { .. })));
}

fn small_survey() -> GatherFile {
    let m = VelocityModel2D::constant(21, 17, 20.0, 20.0, 1500.0).unwrap();
    let geometry = AcquisitionGeometry {
        sources: vec![(100.0, 40.0), (300.0, 40.0)],
        receivers: (0..7).map(|i| (40.0 + 50.0 * i as f64, 60.0)).collect(),
        spectrum: SourceSpectrum::Ricker { peak_hz: 6.0 },
    };
    let freqs_hz = vec![4.0, 6.5, 9.0];
    let gathers = forward_data(&m, &geometry, &freqs_hz, PmlSpec::tuned(8, 1500.0, 20.0)).unwrap();
    GatherFile { geometry, freqs_hz, gathers }
}

#[test]
fn gather_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.toml");
    let file = small_survey();
    write_gathers(&path, &file).unwrap();
    assert_eq!(fs::metadata(dir.path().join("d.bin")).unwrap().len(), 16 * 2 * 3 * 7);
    let back = read_gathers(&path).unwrap();
    assert_eq!(back.geometry, file.geometry);
    assert_eq!(back.freqs_hz, file.freqs_hz);
    for (a, b) in file.gathers.iter().zip(&back.gathers) {
        assert_eq!((a.freq_hz, a.source_index), (b.freq_hz, b.source_index));
        for (u, v) in a.data.iter().zip(&b.data) {
            assert_eq!((u.re.to_bits(), u.im.to_bits()), (v.re.to_bits(), v.im.to_bits()));
        }
    }
}

#[test]
fn truncated_gather_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.toml");
    write_gathers(&path, &small_survey()).unwrap();
    let bin = dir.path().join("d.bin");
    let mut bytes = fs::read(&bin).unwrap();
    bytes.truncate(bytes.len() - 16);
    fs::write(&bin, bytes).unwrap();
    assert!(matches!(read_gathers(&path), Err(Error::Format { .. })));
}

fn pixels(bytes: &[u8], n: usize) -> &[u8] {
    &bytes[bytes.len() - n..]
}

#[test]
fn constant_grid_gives_flat_image() {
    let m = VelocityModel2D::constant(5, 4, 1.0, 1.0, 1480.0).unwrap();
    let (bytes, scale) = encode_pgm(&m);
    assert!(bytes.starts_with(b"P5\n5 4\n255\n"));
    let p = pixels(&bytes, 20);
    assert!(p.iter().all(|&v| v == p[0]));
    assert_eq!((scale.min, scale.max), (1480.0, 1480.0));
}

#[test]
fn monotone_grid_gives_monotone_rows() {
    let m = VelocityModel2D::from_fn(40, 3, 1.0, 1.0, |x, z| 1400.0 + 7.0 * x + z).unwrap();
    let (bytes, _) = encode_pgm(&m);
    for row in pixels(&bytes, 120).chunks(40) {
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn exported_scale_reconstructs_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.pgm");
    let m = layered();
    let scale = export_image(&m, &out).unwrap();
    let side: hvfwi::io::ImageScale =
        toml::from_str(&fs::read_to_string(dir.path().join("m.pgm.toml")).unwrap()).unwrap();
    assert_eq!(side, scale);
    let bytes = fs::read(&out).unwrap();
    let range = scale.max - scale.min;
    for (&p, &c) in pixels(&bytes, 54).iter().zip(m.velocities()) {
        assert!((side.value(p) - c).abs() <= range / 255.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn arbitrary_grids_round_trip(n_x in 3usize..12, n_z in 3usize..12, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.toml");
        let m = VelocityModel2D::from_fn(n_x, n_z, 0.7, 1.3, |x, z| {
            1000.0 + ((x * 12.9898 + z * 78.233 + seed as f64).sin() * 43758.5453).fract().abs() * 900.0
        }).unwrap();
        write_grid(&path, &m).unwrap();
        let back = read_grid(&path).unwrap();
        prop_assert_eq!(back.velocities().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            m.velocities().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
