//! Truncated Taylor series at a point, `f(t + h) = Σ c_j h^j`.
//!
//! Used to differentiate the canonical lift through the chain rule instead
//! of spectrally: the lift has branch points wherever `det(g'', g', g)`
//! vanishes in the complex plane, so its Fourier spectrum can decay far more
//! slowly than that of `g` itself.

use nalgebra::Vector3;

/// Coefficients `c_j = f^{(j)}/j!` for `j < K`.
pub type Jet<const K: usize> = [f64; K];
pub type VectorJet<const K: usize> = [Vector3<f64>; K];

/// Jet of a function from its derivatives `f, f', f'', ...`.
pub fn from_derivatives<const K: usize>(derivs: &[Vector3<f64>]) -> VectorJet<K> {
    let mut factorial = 1.0;
    std::array::from_fn(|j| {
        if j > 0 {
            factorial *= j as f64;
        }
        derivs[j] / factorial
    })
}

/// Derivatives `f^{(j)} = j! c_j`.
pub fn to_derivatives<const K: usize>(jet: &VectorJet<K>) -> VectorJet<K> {
    let mut factorial = 1.0;
    std::array::from_fn(|j| {
        if j > 0 {
            factorial *= j as f64;
        }
        jet[j] * factorial
    })
}

/// Jet of `f'` from the jet of `f`; the top coefficient is lost.
pub fn differentiate<const K: usize>(jet: &VectorJet<K>) -> VectorJet<K> {
    std::array::from_fn(|j| if j + 1 < K { jet[j + 1] * (j + 1) as f64 } else { Vector3::zeros() })
}

pub fn scale<const K: usize>(a: &Jet<K>, v: &VectorJet<K>) -> VectorJet<K> {
    std::array::from_fn(|k| (0..=k).fold(Vector3::zeros(), |acc, j| acc + v[k - j] * a[j]))
}

pub fn dot<const K: usize>(a: &VectorJet<K>, b: &VectorJet<K>) -> Jet<K> {
    std::array::from_fn(|k| (0..=k).map(|j| a[j].dot(&b[k - j])).sum())
}

pub fn cross<const K: usize>(a: &VectorJet<K>, b: &VectorJet<K>) -> VectorJet<K> {
    std::array::from_fn(|k| (0..=k).fold(Vector3::zeros(), |acc, j| acc + a[j].cross(&b[k - j])))
}

/// `det(a, b, c)` with the arguments as columns.
pub fn det<const K: usize>(a: &VectorJet<K>, b: &VectorJet<K>, c: &VectorJet<K>) -> Jet<K> {
    dot(a, &cross(b, c))
}

/// `a^p` for `a_0 > 0`, by the standard power recurrence.
pub fn powf<const K: usize>(a: &Jet<K>, p: f64) -> Jet<K> {
    let mut out = [0.0; K];
    out[0] = a[0].powf(p);
    for k in 1..K {
        let sum: f64 = (1..=k).map(|j| (p * j as f64 - (k - j) as f64) * a[j] * out[k - j]).sum();
        out[k] = sum / (k as f64 * a[0]);
    }
    out
}
