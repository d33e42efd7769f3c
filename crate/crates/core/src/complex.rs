//! Complex vector/matrix primitives shared by all modules: real/complex
//! packing, Hermitian quadratic forms, band and covariance matrices,
//! Cholesky factorization, and energy spectra.
//!
//! All numerics are 64-bit. Matrices are stored dense; the chip counts in
//! play (K <= 64) make structure exploitation pointless.

use crate::error::{Error, Result};
pub use num_complex::Complex64;
use std::f64::consts::PI;

/// Length-K complex chip sequence (a fast-time waveform, received vector,
/// clutter or noise realization).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    chips: Vec<Complex64>,
}

impl Waveform {
    pub fn new(chips: Vec<Complex64>) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::InvalidParameter("waveform must have K >= 1 chips".into()));
        }
        if chips.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("waveform chips must be finite".into()));
        }
        Ok(Waveform { chips })
    }

    pub fn from_fn(k: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Waveform {
            chips: (0..k).map(f).collect(),
        }
    }

    pub fn zeros(k: usize) -> Self {
        Waveform {
            chips: vec![Complex64::new(0.0, 0.0); k],
        }
    }

    /// Standard basis vector e_k (0-indexed).
    pub fn unit(k: usize, index: usize) -> Self {
        let mut w = Waveform::zeros(k);
        w.chips[index] = Complex64::new(1.0, 0.0);
        w
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips(&self) -> &[Complex64] {
        &self.chips
    }

    pub fn chips_mut(&mut self) -> &mut [Complex64] {
        &mut self.chips
    }

    pub fn norm_sqr(&self) -> f64 {
        self.chips.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Hermitian inner product `self^H other`.
    pub fn dot(&self, other: &Waveform) -> Complex64 {
        self.chips
            .iter()
            .zip(&other.chips)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Waveform {
        Waveform {
            chips: self.chips.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Waveform) -> Waveform {
        Waveform {
            chips: self
                .chips
                .iter()
                .zip(&other.chips)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Interleave-free packing: first K reals, then K imaginaries.
    pub fn pack(&self) -> RealPacked {
        pack(self)
    }
}

/// 2K-vector holding the real parts of a waveform followed by its imaginary
/// parts. This is the representation seen by the neural networks and by the
/// waveform-space penalty gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPacked {
    values: Vec<f64>,
}

impl RealPacked {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "packed vector length must be even and nonzero, got {}",
                values.len()
            )));
        }
        Ok(RealPacked { values })
    }

    pub fn zeros(half_len: usize) -> Self {
        RealPacked {
            values: vec![0.0; 2 * half_len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of complex entries represented (K).
    pub fn half_len(&self) -> usize {
        self.values.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn unpack(&self) -> Waveform {
        unpack(self)
    }

    pub fn scale(&self, s: f64) -> RealPacked {
        RealPacked {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &RealPacked) -> RealPacked {
        RealPacked {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn dot(&self, other: &RealPacked) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Split a complex vector into `[Re(y); Im(y)]`.
pub fn pack(w: &Waveform) -> RealPacked {
    let k = w.len();
    let mut values = Vec::with_capacity(2 * k);
    values.extend(w.chips().iter().map(|c| c.re));
    values.extend(w.chips().iter().map(|c| c.im));
    RealPacked { values }
}

/// Inverse of [`pack`].
pub fn unpack(p: &RealPacked) -> Waveform {
    let k = p.half_len();
    Waveform {
        chips: (0..k)
            .map(|i| Complex64::new(p.values[i], p.values[k + i]))
            .collect(),
    }
}

/// One normalized frequency band `[f_low, f_high)` with its interference
/// weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub f_low: f64,
    pub f_high: f64,
    pub weight: f64,
}

impl FrequencyBand {
    pub fn new(f_low: f64, f_high: f64, weight: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&f_low) || !(f_high > 0.0 && f_high <= 1.0) || f_low >= f_high {
            return Err(Error::InvalidParameter(format!(
                "band [{f_low}, {f_high}] must satisfy 0 <= f_low < f_high <= 1"
            )));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "band weight {weight} must be finite and nonnegative"
            )));
        }
        Ok(FrequencyBand { f_low, f_high, weight })
    }

    pub fn width(&self) -> f64 {
        self.f_high - self.f_low
    }
}

/// Dense K x K Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    k: usize,
    data: Vec<Complex64>, // row-major
}

impl HermitianMatrix {
    pub fn zeros(k: usize) -> Self {
        HermitianMatrix {
            k,
            data: vec![Complex64::new(0.0, 0.0); k * k],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            m.data[i * k + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Fill from an entry formula; the formula must itself be Hermitian.
    pub fn from_fn(k: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(k);
        for v in 0..k {
            for h in 0..k {
                m.data[v * k + h] = f(v, h);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Entry at (row v, col h), 0-indexed.
    pub fn entry(&self, v: usize, h: usize) -> Complex64 {
        self.data[v * self.k + h]
    }

    pub fn set(&mut self, v: usize, h: usize, val: Complex64) {
        self.data[v * self.k + h] = val;
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &HermitianMatrix) {
        assert_eq!(self.k, other.k);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Rank-one update `self += c * w w^H`.
    pub fn add_outer(&mut self, c: f64, w: &[Complex64]) {
        assert_eq!(self.k, w.len());
        for v in 0..self.k {
            for h in 0..self.k {
                self.data[v * self.k + h] += c * w[v] * w[h].conj();
            }
        }
    }

    pub fn matvec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.k, y.len());
        (0..self.k)
            .map(|v| {
                (0..self.k)
                    .map(|h| self.data[v * self.k + h] * y[h])
                    .sum()
            })
            .collect()
    }

    /// Real trace (imaginary parts of the diagonal are zero for Hermitian
    /// input).
    pub fn trace(&self) -> f64 {
        (0..self.k).map(|i| self.data[i * self.k + i].re).sum()
    }

    /// Largest deviation from exact Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in 0..self.k {
            for h in 0..self.k {
                let d = (self.entry(v, h) - self.entry(h, v).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Lower-triangular Cholesky factor L with `L L^H = self`.
    ///
    /// Fails with the offending pivot index when the matrix is not positive
    /// definite.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let k = self.k;
        let mut l = vec![Complex64::new(0.0, 0.0); k * k];
        for v in 0..k {
            for h in 0..=v {
                let mut sum = self.entry(v, h);
                for t in 0..h {
                    sum -= l[v * k + t] * l[h * k + t].conj();
                }
                if v == h {
                    let pivot = sum.re;
                    if pivot <= 0.0 || !pivot.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: v, value: pivot });
                    }
                    l[v * k + v] = Complex64::new(pivot.sqrt(), 0.0);
                } else {
                    l[v * k + h] = sum / l[h * k + h];
                }
            }
        }
        Ok(CholeskyFactor { k, data: l })
    }
}

/// Lower-triangular Cholesky factor of a positive definite Hermitian matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    k: usize,
    data: Vec<Complex64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn entry(&self, v: usize, h: usize) -> Complex64 {
        self.data[v * self.k + h]
    }

    /// `L g` — turns a white vector into one with covariance `L L^H`.
    pub fn mul(&self, g: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.k, g.len());
        (0..self.k)
            .map(|v| (0..=v).map(|h| self.data[v * self.k + h] * g[h]).sum())
            .collect()
    }

    /// Forward substitution `L x = b`.
    pub fn solve_lower(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.k, b.len());
        let mut x = vec![Complex64::new(0.0, 0.0); self.k];
        for v in 0..self.k {
            let mut sum = b[v];
            for h in 0..v {
                sum -= self.data[v * self.k + h] * x[h];
            }
            x[v] = sum / self.data[v * self.k + v];
        }
        x
    }

    /// Solve `(L L^H) x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let y = self.solve_lower(b);
        // back substitution with L^H (upper triangular, conjugated)
        let mut x = vec![Complex64::new(0.0, 0.0); self.k];
        for v in (0..self.k).rev() {
            let mut sum = y[v];
            for h in (v + 1)..self.k {
                sum -= self.data[h * self.k + v].conj() * x[h];
            }
            x[v] = sum / self.data[v * self.k + v];
        }
        x
    }

    /// `ln det (L L^H) = 2 * sum ln L_vv`.
    pub fn logdet(&self) -> f64 {
        (0..self.k)
            .map(|v| self.data[v * self.k + v].re.ln())
            .sum::<f64>()
            * 2.0
    }

    /// Largest entry of `|L L^H - M|`.
    pub fn reconstruction_error(&self, m: &HermitianMatrix) -> f64 {
        let mut worst = 0.0f64;
        for v in 0..self.k {
            for h in 0..self.k {
                let mut sum = Complex64::new(0.0, 0.0);
                for t in 0..self.k {
                    sum += self.data[v * self.k + t] * self.data[h * self.k + t].conj();
                }
                worst = worst.max((sum - m.entry(v, h)).norm());
            }
        }
        worst
    }
}

/// Toeplitz noise covariance with entries `sigma_n2 * rho^|v-h|`.
pub fn build_noise_cov(sigma_n2: f64, rho: f64, k: usize) -> Result<HermitianMatrix> {
    if !(sigma_n2 > 0.0) || !sigma_n2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise power {sigma_n2} must be positive"
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "one-lag correlation {rho} must lie in [0, 1)"
        )));
    }
    Ok(HermitianMatrix::from_fn(k, |v, h| {
        Complex64::new(sigma_n2 * rho.powi((v as i32 - h as i32).abs()), 0.0)
    }))
}

/// Band-energy matrix: `y^H M y` is the waveform energy inside the band.
///
/// Diagonal entries equal the bandwidth; off-diagonal entries are
/// `(e^{j2pi f_high d} - e^{j2pi f_low d}) / (j2pi d)` with `d = v - h`.
pub fn build_band_matrix(band: &FrequencyBand, k: usize) -> HermitianMatrix {
    HermitianMatrix::from_fn(k, |v, h| {
        if v == h {
            Complex64::new(band.width(), 0.0)
        } else {
            let d = v as f64 - h as f64;
            let num = (Complex64::i() * 2.0 * PI * band.f_high * d).exp()
                - (Complex64::i() * 2.0 * PI * band.f_low * d).exp();
            num / (Complex64::i() * 2.0 * PI * d)
        }
    })
}

/// Weighted interference covariance `sum_d w_d * band_matrix(d)`.
pub fn build_interference_cov(bands: &[FrequencyBand], k: usize) -> Result<HermitianMatrix> {
    if bands.is_empty() {
        return Err(Error::InvalidParameter(
            "interference covariance needs at least one band".into(),
        ));
    }
    let mut omega = HermitianMatrix::zeros(k);
    for band in bands {
        omega.axpy(band.weight, &build_band_matrix(band, k));
    }
    Ok(omega)
}

/// Hermitian quadratic form `y^H M y`, returned as a real number.
pub fn quad_form(y: &Waveform, m: &HermitianMatrix) -> Result<f64> {
    if y.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: y.len(),
            context: "quad_form",
        });
    }
    let my = m.matvec(y.chips());
    let val: Complex64 = y
        .chips()
        .iter()
        .zip(&my)
        .map(|(a, b)| a.conj() * b)
        .sum();
    // imaginary residue is rounding noise for Hermitian M
    Ok(val.re)
}

/// Energy spectral density `|sum_k y_k e^{-j2pi f k}|^2` on a uniform grid of
/// `n_grid` normalized frequencies in [0, 1).
pub fn esd(y: &Waveform, n_grid: usize) -> Vec<(f64, f64)> {
    assert!(n_grid >= 2, "esd grid must have at least 2 points");
    (0..n_grid)
        .map(|i| {
            let f = i as f64 / n_grid as f64;
            (f, esd_at(y, f))
        })
        .collect()
}

/// ESD at a single normalized frequency.
pub fn esd_at(y: &Waveform, f: f64) -> f64 {
    let sum: Complex64 = y
        .chips()
        .iter()
        .enumerate()
        .map(|(k, c)| c * (-Complex64::i() * 2.0 * PI * f * k as f64).exp())
        .sum();
    sum.norm_sqr()
}

/// CSV serialization of an ESD: header `freq,esd`, or `freq,esd_db` with
/// values `10 log10(esd)` in dB mode.
pub fn esd_csv(points: &[(f64, f64)], db: bool) -> String {
    let mut out = String::new();
    out.push_str(if db { "freq,esd_db\n" } else { "freq,esd\n" });
    for (f, v) in points {
        if db {
            out.push_str(&format!("{},{:.4}\n", f, 10.0 * v.log10()));
        } else {
            out.push_str(&format!("{},{}\n", f, v));
        }
    }
    out
}

/// Apply the range-cell shifting matrix J_g: `out[v] = y[v - g]` where the
/// source index is in range, zero elsewhere.
pub fn shift_apply(y: &Waveform, g: i64) -> Result<Waveform> {
    let k = y.len() as i64;
    if g.abs() >= k {
        return Err(Error::InvalidParameter(format!(
            "shift {g} out of range for K = {k}"
        )));
    }
    Ok(Waveform::from_fn(y.len(), |v| {
        let src = v as i64 - g;
        if (0..k).contains(&src) {
            y.chips()[src as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pack_definition() {
        let w = Waveform::new(vec![c(1.0, 2.0)]).unwrap();
        assert_eq!(w.pack().as_slice(), &[1.0, 2.0]);
        let z = Waveform::zeros(2);
        assert_eq!(z.pack().as_slice(), &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn noise_cov_uncorrelated_is_identity() {
        let m = build_noise_cov(1.0, 0.0, 3).unwrap();
        for v in 0..3 {
            for h in 0..3 {
                let expect = if v == h { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m.entry(v, h).re, expect);
                assert_abs_diff_eq!(m.entry(v, h).im, 0.0);
            }
        }
    }

    #[test]
    fn noise_cov_matches_formula() {
        let m = build_noise_cov(1.0, 0.7, 3).unwrap();
        let expect = [[1.0, 0.7, 0.49], [0.7, 1.0, 0.7], [0.49, 0.7, 1.0]];
        for v in 0..3 {
            for h in 0..3 {
                assert_abs_diff_eq!(m.entry(v, h).re, expect[v][h], epsilon = 1e-15);
            }
        }
        let m2 = build_noise_cov(2.0, 0.5, 2).unwrap();
        assert_abs_diff_eq!(m2.entry(0, 0).re, 2.0);
        assert_abs_diff_eq!(m2.entry(0, 1).re, 1.0);
    }

    #[test]
    fn noise_cov_rejects_rho_one() {
        assert!(build_noise_cov(1.0, 1.0, 3).is_err());
        assert!(build_noise_cov(0.0, 0.5, 3).is_err());
    }

    #[test]
    fn cholesky_diagonal() {
        let mut m = HermitianMatrix::zeros(2);
        m.set(0, 0, c(4.0, 0.0));
        m.set(1, 1, c(9.0, 0.0));
        let l = m.cholesky().unwrap();
        assert_abs_diff_eq!(l.entry(0, 0).re, 2.0);
        assert_abs_diff_eq!(l.entry(1, 1).re, 3.0);
        assert_abs_diff_eq!(l.entry(1, 0).norm(), 0.0);

        let id = HermitianMatrix::identity(3);
        let li = id.cholesky().unwrap();
        assert_abs_diff_eq!(li.reconstruction_error(&id), 0.0);
    }

    #[test]
    fn cholesky_reconstructs_toeplitz() {
        let m = build_noise_cov(1.0, 0.7, 8).unwrap();
        let l = m.cholesky().unwrap();
        assert!(l.reconstruction_error(&m) <= 1e-10);
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let mut m = HermitianMatrix::identity(3);
        m.set(2, 2, c(-1.0, 0.0));
        match m.cholesky() {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn band_matrix_half_band() {
        let band = FrequencyBand::new(0.0, 0.5, 1.0).unwrap();
        let m = build_band_matrix(&band, 2);
        assert_abs_diff_eq!(m.entry(0, 0).re, 0.5);
        assert_abs_diff_eq!(m.entry(1, 1).re, 0.5);
        // entry (row 2, col 1) in 1-based indexing
        assert_abs_diff_eq!(m.entry(1, 0).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.entry(1, 0).im, 1.0 / PI, epsilon = 1e-15);
        assert!(m.hermitian_defect() < 1e-15);
    }

    #[test]
    fn band_matrix_full_band_is_identity() {
        let band = FrequencyBand::new(0.0, 1.0, 1.0).unwrap();
        let m = build_band_matrix(&band, 5);
        for v in 0..5 {
            for h in 0..5 {
                let expect = if v == h { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m.entry(v, h).re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(m.entry(v, h).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interference_cov_is_weighted_sum() {
        let b1 = FrequencyBand::new(0.3, 0.35, 1.0).unwrap();
        let b2 = FrequencyBand::new(0.5, 0.6, 1.0).unwrap();
        let single = build_interference_cov(&[b1], 4).unwrap();
        let direct = build_band_matrix(&b1, 4);
        assert!(single
            .data
            .iter()
            .zip(&direct.data)
            .all(|(a, b)| (a - b).norm() == 0.0));

        let k = 8;
        let omega = build_interference_cov(&[b1, b2], k).unwrap();
        // disjoint bands: diagonal entries are the summed bandwidths
        for v in 0..k {
            assert_abs_diff_eq!(omega.entry(v, v).re, 0.15, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(omega.trace(), k as f64 * 0.15, epsilon = 1e-12);
        assert!(build_interference_cov(&[], 4).is_err());
    }

    #[test]
    fn quad_form_basics() {
        let mut m = HermitianMatrix::zeros(2);
        m.set(0, 0, c(0.5, 0.0));
        m.set(1, 1, c(0.5, 0.0));
        let e1 = Waveform::unit(2, 0);
        assert_abs_diff_eq!(quad_form(&e1, &m).unwrap(), 0.5);

        let y = Waveform::new(vec![c(0.3, -1.2), c(0.4, 2.0), c(-0.7, 0.1)]).unwrap();
        let id = HermitianMatrix::identity(3);
        assert_abs_diff_eq!(quad_form(&y, &id).unwrap(), y.norm_sqr(), epsilon = 1e-14);

        assert!(quad_form(&e1, &id).is_err());
    }

    #[test]
    fn quad_form_matches_band_integration() {
        // trapezoidal integration of the ESD over the band is an independent
        // route to the same energy
        let band = FrequencyBand::new(0.3, 0.35, 1.0).unwrap();
        let k = 8;
        let m = build_band_matrix(&band, k);
        let y = Waveform::from_fn(k, |i| c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
        let n = 1 << 14;
        let h = band.width() / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let f = band.f_low + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * esd_at(&y, f);
        }
        integral *= h;
        let qf = quad_form(&y, &m).unwrap();
        assert!((qf - integral).abs() <= 1e-6, "qf {qf} vs integral {integral}");
    }

    #[test]
    fn esd_impulse_and_coherent_sum() {
        let e1 = Waveform::unit(4, 0);
        for (_, v) in esd(&e1, 64) {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        let k = 8;
        let ones = Waveform::from_fn(k, |_| c(1.0 / (k as f64).sqrt(), 0.0));
        let grid = esd(&ones, 128);
        assert_abs_diff_eq!(grid[0].1, k as f64, epsilon = 1e-12);
    }

    #[test]
    fn esd_parseval() {
        let y = Waveform::new(vec![c(0.8, 0.1), c(-0.2, 0.4), c(0.1, -0.9), c(0.3, 0.2)]).unwrap();
        let grid = esd(&y, 1024);
        let mean: f64 = grid.iter().map(|(_, v)| v).sum::<f64>() / grid.len() as f64;
        assert!((mean - y.norm_sqr()).abs() <= 1e-6);
    }

    #[test]
    fn shift_apply_definition() {
        let y = Waveform::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let same = shift_apply(&y, 0).unwrap();
        assert_eq!(same, y);
        let right = shift_apply(&y, 1).unwrap();
        assert_eq!(
            right.chips(),
            &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]
        );
        let left = shift_apply(&y, -2).unwrap();
        assert_eq!(left.chips(), &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(shift_apply(&y, 3).is_err());
        assert!(shift_apply(&y, -3).is_err());
    }

    #[test]
    fn esd_csv_headers() {
        let y = Waveform::unit(2, 0);
        let lin = esd_csv(&esd(&y, 4), false);
        assert!(lin.starts_with("freq,esd\n"));
        let db = esd_csv(&esd(&y, 4), true);
        assert!(db.starts_with("freq,esd_db\n"));
        assert!(db.lines().nth(1).unwrap().ends_with("0.0000"));
    }
}
