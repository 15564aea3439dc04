//! Feature values worked out by hand on tiny inputs.

mod common;

use texturekit::features::{compute_glcm, first_order, haralick_single, Direction, Glcm, HaralickConfig};
use texturekit::Grid;

#[test]
fn two_by_two_glcm_and_all_fourteen_statistics() {
    let g = Grid::from_rows(&[&[0.0, 0.0], &[1.0, 1.0]]);
    let m = compute_glcm(&g, 2, 1, Direction::Deg0).unwrap();
    assert_eq!(m.probabilities(), [0.5, 0.0, 0.0, 0.5]);

    // Marginals (1/2, 1/2), mean 1/2, variance 1/4; sums of indices are 0
    // or 2 with mass 1/2 each; differences are all 0.
    let h = haralick_single(&m, &HaralickConfig::default());
    let expect = [
        0.5,                              // ASM
        0.0,                              // contrast
        1.0,                              // correlation: (1/2 - 1/4) / (1/4)
        0.25,                             // variance
        1.0,                              // inverse difference moment
        1.0,                              // sum average
        1.0,                              // sum variance
        1.0,                              // sum entropy, bits
        1.0,                              // entropy
        0.0,                              // difference variance
        0.0,                              // difference entropy
        -1.0,                             // IMC1: (1 - 2) / 1
        (1.0 - (-2.0f64).exp()).sqrt(),   // IMC2: HXY2 = 2, HXY = 1
        1.0,                              // Q = identity, second eigenvalue 1
    ];
    for (k, (got, want)) in h.iter().zip(expect).enumerate() {
        let got = got.unwrap_or_else(|| panic!("f{} missing", k + 1));
        assert!((got - want).abs() < 1e-9, "f{}: {got} vs {want}", k + 1);
    }
    let oracle = common::haralick_oracle(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
    for k in 0..13 {
        assert!((oracle[k].unwrap() - expect[k]).abs() < 1e-12, "oracle f{}", k + 1);
    }
}

#[test]
fn checkerboard_puts_all_mass_off_diagonal() {
    let g = Grid::from_fn(6, 6, |r, c| ((r + c) % 2) as f64);
    let m = compute_glcm(&g, 2, 1, Direction::Deg0).unwrap();
    assert_eq!(m.probabilities(), [0.0, 0.5, 0.5, 0.0]);
}

#[test]
fn closed_forms_on_point_mass_and_uniform() {
    let n = 5;
    let mut point = vec![0.0; n * n];
    point[2 * n + 2] = 1.0;
    let h = haralick_single(&Glcm::from_probabilities(n, point).unwrap(), &HaralickConfig::default());
    assert_eq!(h[0], Some(1.0));
    assert_eq!(h[8], Some(0.0));
    assert_eq!(h[2], None, "correlation needs spread marginals");

    let uniform = vec![1.0 / (n * n) as f64; n * n];
    let h = haralick_single(&Glcm::from_probabilities(n, uniform).unwrap(), &HaralickConfig::default());
    assert!((h[0].unwrap() - 1.0 / 25.0).abs() < 1e-15);
    assert!((h[8].unwrap() - (25f64).log2()).abs() < 1e-12);
    assert!(h[2].unwrap().abs() < 1e-12);
}

#[test]
fn first_order_closed_forms() {
    assert_eq!(first_order(&Grid::filled(16, 16, 0.5)), [0.5, 0.0, 0.0, 0.0]);
    let half = Grid::from_fn(16, 16, |_, c| if c < 8 { 0.0 } else { 1.0 });
    let [m, s, sk, k] = first_order(&half);
    assert_eq!((m, s), (0.5, 0.5));
    assert!(sk.abs() < 1e-15);
    assert!((k + 2.0).abs() < 1e-12);
}
