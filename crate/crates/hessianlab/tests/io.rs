use std::fs;

use hessianlab::io::{read_hermitian, read_scalar, sidecar_path, write_hermitian, write_scalar, FieldKind, Sidecar};
use hessianlab::Error;
use hessianlab_core::grid::{complex_hessian, ScalarField, TorusGrid};
use proptest::prelude::*;

fn wavy(grid: TorusGrid) -> ScalarField {
    ScalarField::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0]).sin() * (x[1] + 0.3).cos() - x[2] * x[3])
}

/// Header and payload decoded by hand, independent of the reader.
fn decode_by_hand(bytes: &[u8]) -> (Vec<u32>, Vec<f64>) {
    let words = (0..8).map(|k| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap())).collect();
    let vals = bytes[32..].chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    (words, vals)
}

#[test]
fn scalar_file_layout_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.hlf1");
    let grid = TorusGrid::new(2, 4, 2.5).unwrap();
    let phi = wavy(grid);
    write_scalar(&path, &phi).unwrap();

    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 32 + 8 * 256);
    assert_eq!(&bytes[..4], b"HLF1");
    let (words, vals) = decode_by_hand(&bytes);
    assert_eq!(&words[1..], &[1, 0, 0, 2, 4, 0, 0]);
    assert_eq!(vals, phi.values());

    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(side.kind, FieldKind::Scalar);
    assert_eq!((side.n, side.points_per_axis, side.period, side.values), (2, 4, 2.5, 256));
    assert_eq!(side.axis_order, ["x1", "y1", "x2", "y2"]);

    let back = read_scalar(&path).unwrap();
    assert_eq!(back, phi);
    assert_eq!(back.grid().period(), 2.5);
}

#[test]
fn hermitian_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.hlf1");
    let grid = TorusGrid::new(2, 4, 1.0).unwrap();
    let x = complex_hessian(&wavy(grid));
    write_hermitian(&path, &x).unwrap();
    let (words, vals) = decode_by_hand(&fs::read(&path).unwrap());
    assert_eq!(words[6], 1);
    // (re, im) of the (0, 1) entry at the first point
    let e = x.at(0)[1];
    assert_eq!((vals[2], vals[3]), (e.re, e.im));
    assert_eq!(read_hermitian(&path).unwrap().to_entries(), x.to_entries());
    // kinds are not interchangeable
    assert!(matches!(read_scalar(&path), Err(Error::Format { .. })));
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.hlf1");
    let grid = TorusGrid::new(2, 4, 1.0).unwrap();
    write_scalar(&path, &wavy(grid)).unwrap();
    let good = fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    fs::write(&path, &bad).unwrap();
    assert!(matches!(read_scalar(&path), Err(Error::Format { .. })));

    fs::write(&path, &good[..good.len() - 8]).unwrap();
    assert!(matches!(read_scalar(&path), Err(Error::Format { .. })));

    fs::write(&path, &good[..20]).unwrap();
    assert!(matches!(read_scalar(&path), Err(Error::Format { .. })));

    let mut bad = good.clone();
    bad[20] = 6; // N disagrees with the sidecar
    fs::write(&path, &bad).unwrap();
    assert!(matches!(read_scalar(&path), Err(Error::Format { .. })));

    fs::write(&path, &good).unwrap();
    fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(read_scalar(&path), Err(Error::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scalar_round_trip_is_bit_exact(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO | prop::num::f64::NEGATIVE | prop::num::f64::POSITIVE, 256)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.hlf1");
        let grid = TorusGrid::new(2, 4, 1.0).unwrap();
        let field = ScalarField::new(grid, vals.clone()).unwrap();
        write_scalar(&path, &field).unwrap();
        let back = read_scalar(&path).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.values()), bits(&vals));
    }
}
