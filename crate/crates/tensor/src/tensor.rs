//! Dense row-major tensors and the raw kernels behind the tape ops.

use crate::{Scalar, SplitRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::new(shape.to_vec(), vec![T::ZERO; shape.iter().product()])
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor::new(shape.to_vec(), vec![value; shape.iter().product()])
    }

    pub fn scalar(value: T) -> Self {
        Tensor::new(vec![1], vec![value])
    }

    /// Seeded N(0, std^2) tensor.
    pub fn randn(shape: &[usize], std: f64, rng: &mut SplitRng) -> Self {
        let data = (0..shape.iter().product::<usize>())
            .map(|_| T::from_f64(rng.normal() * std))
            .collect();
        Tensor::new(shape.to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    pub fn scalar_value(&self) -> T {
        assert!(self.is_scalar(), "expected scalar, got {:?}", self.shape);
        self.data[0]
    }

    /// Rows/cols view of a 2D tensor.
    pub fn dims2(&self) -> (usize, usize) {
        assert_eq!(self.shape.len(), 2, "expected 2D tensor, got {:?}", self.shape);
        (self.shape[0], self.shape[1])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor::new(self.shape.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor::new(
            self.shape.clone(),
            self.data.iter().map(|&x| U::from_f64(x.to_f64())).collect(),
        )
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|x| x.is_nan())
    }

    pub fn max_abs_diff(&self, other: &Tensor<T>) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Raw kernels. All take validated shapes; the tape layer owns the checks.
// ---------------------------------------------------------------------------

/// C = A @ B for A [m,k], B [k,n].
pub(crate) fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = a.dims2();
    let (_, n) = b.dims2();
    let mut out = vec![T::ZERO; m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b.data[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// C = A @ B^T for A [m,k], B [n,k].
pub(crate) fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = a.dims2();
    let (n, _) = b.dims2();
    let mut out = vec![T::ZERO; m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b.data[j * k..(j + 1) * k];
            let mut acc = T::ZERO;
            for (&av, &bv) in arow.iter().zip(brow) {
                acc = acc + av * bv;
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::new(vec![m, n], out)
}

/// C = A^T @ B for A [k,m], B [k,n].
pub(crate) fn matmul_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (k, m) = a.dims2();
    let (_, n) = b.dims2();
    let mut out = vec![T::ZERO; m * n];
    for p in 0..k {
        let arow = &a.data[p * m..(p + 1) * m];
        let brow = &b.data[p * n..(p + 1) * n];
        for (i, &av) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

pub(crate) fn zip<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    Tensor::new(
        a.shape.clone(),
        a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    )
}

/// Rows-of-last-axis view: interpret any tensor as [rows, width].
pub(crate) fn last_axis_view<T: Scalar>(t: &Tensor<T>) -> (usize, usize) {
    let width = *t.shape.last().expect("tensor has at least one axis");
    (t.numel() / width, width)
}

pub(crate) fn softmax_last_axis<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (rows, width) = last_axis_view(x);
    let mut out = vec![T::ZERO; x.numel()];
    for r in 0..rows {
        let row = &x.data[r * width..(r + 1) * width];
        let orow = &mut out[r * width..(r + 1) * width];
        let mut m = row[0];
        for &v in row {
            m = m.max(v);
        }
        let mut sum = T::ZERO;
        for (o, &v) in orow.iter_mut().zip(row) {
            *o = (v - m).exp();
            sum = sum + *o;
        }
        for o in orow.iter_mut() {
            *o = *o / sum;
        }
    }
    Tensor::new(x.shape.clone(), out)
}

/// Normalize each last-axis row to zero mean / unit variance (no affine).
/// Returns (normalized, inverse std per row).
pub(crate) fn layer_norm_last_axis<T: Scalar>(x: &Tensor<T>, eps: f64) -> (Tensor<T>, Vec<T>) {
    let (rows, width) = last_axis_view(x);
    let inv_n = T::from_f64(1.0 / width as f64);
    let eps = T::from_f64(eps);
    let mut out = vec![T::ZERO; x.numel()];
    let mut inv_stds = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &x.data[r * width..(r + 1) * width];
        let mut mean = T::ZERO;
        for &v in row {
            mean = mean + v;
        }
        mean = mean * inv_n;
        let mut var = T::ZERO;
        for &v in row {
            let d = v - mean;
            var = var + d * d;
        }
        var = var * inv_n;
        let inv_std = T::ONE / (var + eps).sqrt();
        inv_stds.push(inv_std);
        for (o, &v) in out[r * width..(r + 1) * width].iter_mut().zip(row) {
            *o = (v - mean) * inv_std;
        }
    }
    (Tensor::new(x.shape.clone(), out), inv_stds)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub(crate) fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64(GELU_C);
    let a = T::from_f64(GELU_A);
    let half = T::from_f64(0.5);
    let u = c * (x + a * x * x * x);
    half * x * (T::ONE + u.tanh())
}

pub(crate) fn gelu_derivative<T: Scalar>(x: T) -> T {
    let c = T::from_f64(GELU_C);
    let a = T::from_f64(GELU_A);
    let half = T::from_f64(0.5);
    let three = T::from_f64(3.0);
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let sech2 = T::ONE - t * t;
    half * (T::ONE + t) + half * x * sech2 * c * (T::ONE + three * a * x * x)
}

/// Factorized sinusoidal embedding of a nonnegative position value.
///
/// Half the slots carry sin, half cos, at geometric frequencies spanning
/// 1..10^4 periods; position input is treated as non-differentiable.
pub fn sinusoidal_embedding<T: Scalar>(position: f64, dim: usize) -> Tensor<T> {
    assert!(dim >= 2 && dim % 2 == 0, "embedding dim must be even, got {dim}");
    let half = dim / 2;
    let mut data = Vec::with_capacity(dim);
    for i in 0..half {
        let denom = if half > 1 { (half - 1) as f64 } else { 1.0 };
        let freq = (-(10_000f64.ln()) * i as f64 / denom).exp();
        data.push(T::from_f64((position * freq).sin()));
    }
    for i in 0..half {
        let denom = if half > 1 { (half - 1) as f64 } else { 1.0 };
        let freq = (-(10_000f64.ln()) * i as f64 / denom).exp();
        data.push(T::from_f64((position * freq).cos()));
    }
    Tensor::new(vec![1, dim], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small_known() {
        let a = Tensor::new(vec![2, 3], vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::new(vec![3, 2], vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = matmul(&a, &b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_transposed_variants_agree() {
        let mut rng = SplitRng::new(5);
        let a = Tensor::<f64>::randn(&[4, 3], 1.0, &mut rng);
        let b = Tensor::<f64>::randn(&[3, 5], 1.0, &mut rng);
        let c = matmul(&a, &b);

        let bt = Tensor::new(
            vec![5, 3],
            (0..15)
                .map(|i| b.data()[(i % 3) * 5 + i / 3])
                .collect::<Vec<f64>>(),
        );
        assert!(matmul_nt(&a, &bt).max_abs_diff(&c) < 1e-12);

        let at = Tensor::new(
            vec![3, 4],
            (0..12)
                .map(|i| a.data()[(i % 4) * 3 + i / 4])
                .collect::<Vec<f64>>(),
        );
        assert!(matmul_tn(&at, &b).max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = SplitRng::new(9);
        let x = Tensor::<f64>::randn(&[6, 8], 2.0, &mut rng);
        let y = softmax_last_axis(&x);
        for r in 0..6 {
            let s: f64 = y.data()[r * 8..(r + 1) * 8].iter().sum();
            assert!((s - 1.0).abs() < 1e-6, "row {r} sums to {s}");
        }
    }

    #[test]
    fn layer_norm_moments() {
        let mut rng = SplitRng::new(11);
        let x = Tensor::<f64>::randn(&[5, 16], 3.0, &mut rng);
        let (y, _) = layer_norm_last_axis(&x, 1e-5);
        for r in 0..5 {
            let row = &y.data()[r * 16..(r + 1) * 16];
            let mean: f64 = row.iter().sum::<f64>() / 16.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0;
            assert!(mean.abs() <= 1e-6, "row mean {mean}");
            assert!((var - 1.0).abs() <= 1e-4, "row var {var}");
        }
    }

    #[test]
    fn sinusoidal_embedding_is_bounded_and_deterministic() {
        let e1 = sinusoidal_embedding::<f64>(123.0, 16);
        let e2 = sinusoidal_embedding::<f64>(123.0, 16);
        assert_eq!(e1, e2);
        assert!(e1.data().iter().all(|v| v.abs() <= 1.0));
    }
}
