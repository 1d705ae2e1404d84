//! Trigonometric interpolation on the uniform periodic grid `t_k = 2πk/N`.
//!
//! All periodic quantities in the crate (curve samples, coefficient arrays,
//! reparametrizations) are stored as samples on this grid. Derivatives are
//! taken in Fourier space; values between nodes come from the trigonometric
//! interpolant, with the Nyquist mode treated as a pure cosine so that real
//! data interpolates to real values.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::Vector3;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Fourier modes below this fraction of the largest mode may be treated as
/// round-off and dropped before differentiation. Without a cut, a third
/// derivative at N = 512 multiplies FFT round-off by up to (N/2)^3.
pub const NOISE_FLOOR: f64 = 1e-14;

/// The phase `e^{ikt}` is advanced by multiplication and recomputed every this many modes.
const RESYNC: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform nodes `2πk/n`, `k = 0..n`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| node(k, n)).collect()
}

#[inline]
pub fn node(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

/// Signed frequency of DFT bin `k`; the Nyquist bin reports `+n/2`.
#[inline]
pub fn frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Unnormalized forward DFT of real samples.
pub fn forward(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

/// Inverse DFT (normalized by `1/n`) keeping the real part.
pub fn inverse_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spectrum));
    spectrum.into_iter().map(|c| c.re / n as f64).collect()
}

/// Modes within this factor of the round-off plateau count as noise.
const PLATEAU_FACTOR: f64 = 4.0;

/// Number of consecutive sub-threshold frequencies that marks the end of the band.
/// Longer than the gaps between the harmonics of the built-in families.
const EDGE_RUN: usize = 12;

/// Magnitude below which a mode is treated as round-off: a multiple of the
/// largest mode in the upper half of the band, never above [`NOISE_FLOOR`].
/// The maximum rather than a typical value, because round-off of computed
/// quantities is often colored (rising with `m`, or confined to one parity).
fn noise_cut(spectrum: &[Complex64]) -> f64 {
    let n = spectrum.len();
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let plateau = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| frequency(*k, n).abs() > n as f64 / 4.0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    (PLATEAU_FACTOR * plateau).min(NOISE_FLOOR * peak)
}

/// Zeroes the frequencies beyond the band edge, the first run of
/// [`EDGE_RUN`] frequencies below [`noise_cut`], unless they clear
/// [`NOISE_FLOOR`] on their own (sparse spectra with wide gaps). Small modes
/// inside the band are kept, since dropping genuine tail content would be
/// multiplied by `m^order` on differentiation.
fn drop_noise(spectrum: &mut [Complex64]) {
    let n = spectrum.len();
    let half = n / 2;
    let cut = noise_cut(spectrum);
    let floor = NOISE_FLOOR * spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let magnitude = |m: usize| spectrum[m].norm().max(spectrum[(n - m) % n].norm());
    let mut run = 0;
    let mut edge = half + 1;
    for m in 1..=half {
        if magnitude(m) < cut {
            run += 1;
            if run == EDGE_RUN {
                edge = m + 1 - EDGE_RUN;
                break;
            }
        } else {
            run = 0;
        }
    }
    let beyond: Vec<usize> = (edge..=half).filter(|&m| magnitude(m) < floor).collect();
    for m in beyond {
        spectrum[m] = Complex64::new(0.0, 0.0);
        spectrum[(n - m) % n] = Complex64::new(0.0, 0.0);
    }
}

/// `(i m)^order`
fn spectral_factor(m: f64, order: u32) -> Complex64 {
    let mag = m.powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// Derivative of the trigonometric interpolant at the nodes.
///
/// The Nyquist mode is zeroed for odd orders.
pub fn derivative(samples: &[f64], order: u32) -> Vec<f64> {
    if order == 0 {
        return samples.to_vec();
    }
    let n = samples.len();
    let mut spectrum = forward(samples);
    drop_noise(&mut spectrum);
    for (k, c) in spectrum.iter_mut().enumerate() {
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= spectral_factor(frequency(k, n), order);
        }
    }
    inverse_real(spectrum)
}

pub fn split(points: &[Vector3<f64>]) -> [Vec<f64>; 3] {
    [0, 1, 2].map(|i| points.iter().map(|p| p[i]).collect())
}

pub fn join(components: &[Vec<f64>; 3]) -> Vec<Vector3<f64>> {
    (0..components[0].len())
        .map(|k| Vector3::new(components[0][k], components[1][k], components[2][k]))
        .collect()
}

/// Componentwise [`derivative`] of a sampled vector curve.
pub fn derivative_vec(points: &[Vector3<f64>], order: u32) -> Vec<Vector3<f64>> {
    let comps = split(points);
    join(&comps.map(|c| derivative(&c, order)))
}

/// Largest `|m|` whose mode is at least [`NOISE_FLOOR`] times the peak.
pub fn bandwidth(samples: &[f64]) -> usize {
    let n = samples.len();
    let spectrum = forward(samples);
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    spectrum
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= NOISE_FLOOR * peak && peak > 0.0)
        .map(|(k, _)| frequency(k, n).abs() as usize)
        .max()
        .unwrap_or(0)
}

/// Ratio of the largest Fourier mode with `|m| > n/4` to the largest mode overall.
pub fn tail_ratio(samples: &[f64]) -> f64 {
    let n = samples.len();
    let spectrum = forward(samples);
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let tail = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| frequency(*k, n).abs() > n as f64 / 4.0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    tail / peak
}

/// Real trigonometric interpolant of samples on the uniform grid.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    n: usize,
    /// Modes `0..=n/2`, normalized by `1/n`.
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        Self::from_spectrum(samples.len(), forward(samples))
    }

    /// Interpolant with round-off modes removed (see [`NOISE_FLOOR`]).
    pub fn denoised(samples: &[f64]) -> Self {
        let mut spectrum = forward(samples);
        drop_noise(&mut spectrum);
        Self::from_spectrum(samples.len(), spectrum)
    }

    fn from_spectrum(n: usize, spectrum: Vec<Complex64>) -> Self {
        let coeffs = spectrum.into_iter().take(n / 2 + 1).map(|c| c / n as f64).collect();
        Self { n, coeffs }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivative(t, 0)
    }

    /// `order`-th derivative of the interpolant at an arbitrary point.
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        let n = self.n;
        let half = n / 2;
        let mut acc = if order == 0 { self.coeffs[0].re } else { 0.0 };
        let step = Complex64::from_polar(1.0, t);
        let mut rot = step;
        for k in 1..half {
            if k % RESYNC == 0 {
                rot = Complex64::from_polar(1.0, k as f64 * t);
            }
            acc += 2.0 * (self.coeffs[k] * spectral_factor(k as f64, order) * rot).re;
            rot *= step;
        }
        if n % 2 == 0 && half > 0 {
            let m = half as f64;
            acc += match order % 2 {
                1 => 0.0,
                _ => {
                    let sign = if order % 4 == 0 { 1.0 } else { -1.0 };
                    sign * m.powi(order as i32) * self.coeffs[half].re * (m * t).cos()
                }
            };
        } else if half > 0 {
            acc += 2.0 * (self.coeffs[half] * spectral_factor(half as f64, order) * rot).re;
        }
        acc
    }

    /// Value and first derivative in one pass.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        (self.eval(t), self.eval_derivative(t, 1))
    }

    /// Samples of `f(t_k + delta)` at the nodes, by phase rotation of the modes.
    pub fn shifted_samples(&self, delta: f64) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
        spectrum[0] = self.coeffs[0] * n as f64;
        for k in 1..half {
            let c = self.coeffs[k] * Complex64::from_polar(n as f64, k as f64 * delta);
            spectrum[k] = c;
            spectrum[n - k] = c.conj();
        }
        if n % 2 == 0 {
            spectrum[half] = Complex64::new(self.coeffs[half].re * (half as f64 * delta).cos() * n as f64, 0.0);
        }
        inverse_real(spectrum)
    }

    /// Mode `k` (for `k <= n/2`), normalized by `1/n`.
    pub fn mode(&self, k: usize) -> Complex64 {
        self.coeffs[k]
    }
}

/// Interpolant of a sampled vector curve, one channel per coordinate.
#[derive(Debug, Clone)]
pub struct VectorInterpolant {
    channels: [TrigInterpolant; 3],
}

impl VectorInterpolant {
    pub fn new(points: &[Vector3<f64>]) -> Self {
        let comps = split(points);
        Self { channels: [0, 1, 2].map(|i| TrigInterpolant::new(&comps[i])) }
    }

    /// Channels built with [`TrigInterpolant::denoised`].
    pub fn denoised(points: &[Vector3<f64>]) -> Self {
        let comps = split(points);
        Self { channels: [0, 1, 2].map(|i| TrigInterpolant::denoised(&comps[i])) }
    }

    pub fn eval(&self, t: f64) -> Vector3<f64> {
        Vector3::new(self.channels[0].eval(t), self.channels[1].eval(t), self.channels[2].eval(t))
    }

    pub fn eval_derivative(&self, t: f64, order: u32) -> Vector3<f64> {
        Vector3::new(
            self.channels[0].eval_derivative(t, order),
            self.channels[1].eval_derivative(t, order),
            self.channels[2].eval_derivative(t, order),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        nodes(n).into_iter().map(f).collect()
    }

    #[test]
    fn derivative_of_band_limited_signal() {
        let n = 64;
        let f = sample(n, |t| (3.0 * t).sin() + 0.5 * (7.0 * t).cos());
        let d1 = derivative(&f, 1);
        let d3 = derivative(&f, 3);
        for (k, t) in nodes(n).into_iter().enumerate() {
            let e1 = 3.0 * (3.0 * t).cos() - 3.5 * (7.0 * t).sin();
            let e3 = -27.0 * (3.0 * t).cos() + 171.5 * (7.0 * t).sin();
            assert!((d1[k] - e1).abs() < 1e-12);
            assert!((d3[k] - e3).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let f = vec![2.5; 128];
        for order in 1..=3 {
            assert!(derivative(&f, order).iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_and_off_grid_values() {
        let n = 32;
        let f = sample(n, |t| (2.0 * t).cos() + (5.0 * t).sin());
        let p = TrigInterpolant::new(&f);
        for (k, t) in nodes(n).into_iter().enumerate() {
            assert!((p.eval(t) - f[k]).abs() < 1e-14);
        }
        let t = 0.123;
        assert!((p.eval(t) - ((2.0 * t).cos() + (5.0 * t).sin())).abs() < 1e-14);
        assert!((p.eval_derivative(t, 2) - (-4.0 * (2.0 * t).cos() - 25.0 * (5.0 * t).sin())).abs() < 1e-12);
    }

    #[test]
    fn nyquist_mode_interpolates_as_cosine() {
        let n = 16;
        let f = sample(n, |t| (8.0 * t).cos());
        let p = TrigInterpolant::new(&f);
        let t = 0.3;
        assert!((p.eval(t) - (8.0 * t).cos()).abs() < 1e-14);
        assert_eq!(derivative(&f, 1).iter().map(|v| v.abs()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn shift_by_whole_nodes_rotates_samples() {
        let n = 64;
        let f = sample(n, |t| (t.cos() * 0.5).exp());
        let p = TrigInterpolant::new(&f);
        let shifted = p.shifted_samples(node(5, n));
        for k in 0..n {
            assert!((shifted[k] - f[(k + 5) % n]).abs() < 1e-13);
        }
    }

    #[test]
    fn bandwidth_of_trig_polynomial() {
        let f = sample(128, |t| 1.0 + (5.0 * t).cos() - 0.1 * (9.0 * t).sin());
        assert_eq!(bandwidth(&f), 9);
        assert_eq!(bandwidth(&vec![0.0; 16]), 0);
    }

    #[test]
    fn tail_ratio_flags_rough_data() {
        let smooth = sample(128, |t| t.cos());
        assert!(tail_ratio(&smooth) < 1e-14);
        let rough: Vec<f64> = (0..128).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(tail_ratio(&rough) > 0.5);
    }

    #[test]
    fn small_tail_modes_survive_differentiation() {
        // modes of exp(c cos t) decay like I_m(c), reaching 1e-14 of the peak well inside the band
        let n = 256;
        let f = sample(n, |t| (0.5 * t.cos()).exp());
        let d1 = derivative(&f, 1);
        let d3 = derivative(&f, 3);
        for (t, (a, b)) in nodes(n).into_iter().zip(d1.iter().zip(&d3)) {
            let (s, c) = t.sin_cos();
            let e = (0.5 * c).exp();
            assert!((a + 0.5 * s * e).abs() < 1e-14);
            let exact = e * (0.5 * s + 0.75 * s * c - 0.125 * s * s * s);
            assert!((b - exact).abs() < 5e-13, "{}", (b - exact).abs());
        }
    }

    #[test]
    fn rising_noise_on_one_parity_is_removed() {
        let n = 256;
        let f = sample(n, |t| {
            let noise: f64 = (10..n / 2).step_by(2).map(|m| 2e-19 * (m * m) as f64 * (m as f64 * t + 0.3 * m as f64).cos()).sum();
            t.cos() + noise
        });
        let d2 = derivative(&f, 2);
        for (t, d) in nodes(n).into_iter().zip(&d2) {
            assert!((d + t.cos()).abs() < 1e-12, "{}", (d + t.cos()).abs());
        }
    }

    #[test]
    fn isolated_high_mode_is_kept() {
        let n = 64;
        let f = sample(n, |t| t.cos() + 1e-3 * (25.0 * t).sin());
        let d = derivative(&f, 1);
        for (t, v) in nodes(n).into_iter().zip(&d) {
            assert!((v + t.sin() - 0.025 * (25.0 * t).cos()).abs() < 1e-13);
        }
    }
}
