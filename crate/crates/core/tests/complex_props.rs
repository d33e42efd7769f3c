//! Property tests for the complex primitives: packing round-trips, band
//! matrix positive semidefiniteness against an independent eigensolver,
//! quadratic-form energy bounds, and shift linearity.

use nalgebra::DMatrix;
use proptest::prelude::*;
use radar_e2e_core::complex::{
    build_band_matrix, build_noise_cov, pack, quad_form, shift_apply, unpack, Complex64,
    FrequencyBand, HermitianMatrix, Waveform,
};

fn waveform_strategy(max_k: usize) -> impl Strategy<Value = Waveform> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=max_k).prop_map(|parts| {
        Waveform::new(
            parts
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .unwrap()
    })
}

fn band_strategy() -> impl Strategy<Value = FrequencyBand> {
    (0.0f64..0.9, 0.01f64..0.5).prop_map(|(lo, width)| {
        let hi = (lo + width).min(1.0);
        FrequencyBand::new(lo, hi, 1.0).unwrap()
    })
}

/// Smallest eigenvalue via the real symmetric embedding [[A, -B], [B, A]] of
/// a Hermitian matrix A + jB; its spectrum is the complex spectrum doubled.
fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    let k = m.dim();
    let embed = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let (br, cr) = (r % k, c % k);
        let e = m.entry(br, cr);
        match (r < k, c < k) {
            (true, true) | (false, false) => e.re,
            (true, false) => -e.im,
            (false, true) => e.im,
        }
    });
    let eig = embed.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn pack_unpack_roundtrip(w in waveform_strategy(8)) {
        let round = unpack(&pack(&w));
        prop_assert_eq!(round, w);
    }

    #[test]
    fn band_matrix_hermitian_and_psd(band in band_strategy()) {
        let k = 8;
        let m = build_band_matrix(&band, k);
        prop_assert!(m.hermitian_defect() <= 1e-14);
        prop_assert!(min_eigenvalue(&m) >= -1e-12);
    }

    #[test]
    fn band_energy_within_total(w in waveform_strategy(8), band in band_strategy()) {
        let m = build_band_matrix(&band, w.len());
        let e = quad_form(&w, &m).unwrap();
        prop_assert!(e >= -1e-12);
        prop_assert!(e <= w.norm_sqr() + 1e-9);
    }

    #[test]
    fn shift_linear_and_norm_nonincreasing(
        a in waveform_strategy(6),
        g in -5i64..=5,
    ) {
        prop_assume!(g.unsigned_abs() < a.len() as u64);
        let b = Waveform::from_fn(a.len(), |i| a.chips()[i] * Complex64::new(0.3, -0.4));
        let sa = shift_apply(&a, g).unwrap();
        let sb = shift_apply(&b, g).unwrap();
        let sum = shift_apply(&a.add(&b), g).unwrap();
        for (lhs, rhs) in sum.chips().iter().zip(sa.add(&sb).chips()) {
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }
        prop_assert!(sa.norm_sqr() <= a.norm_sqr() + 1e-12);
    }

    #[test]
    fn noise_cov_cholesky_reconstructs(rho in 0.0f64..0.95, sigma in 0.1f64..10.0) {
        let m = build_noise_cov(sigma, rho, 8).unwrap();
        let l = m.cholesky().unwrap();
        prop_assert!(l.reconstruction_error(&m) <= 1e-10);
    }
}

#[test]
fn paper_band_pair_trace() {
    // two disjoint unit-weight bands: trace = K * total bandwidth
    let bands = [
        FrequencyBand::new(0.3, 0.35, 1.0).unwrap(),
        FrequencyBand::new(0.5, 0.6, 1.0).unwrap(),
    ];
    let k = 8;
    let omega = radar_e2e_core::complex::build_interference_cov(&bands, k).unwrap();
    assert!((omega.trace() - k as f64 * 0.15).abs() <= 1e-12);
    assert!(min_eigenvalue(&omega) >= -1e-12);
}
