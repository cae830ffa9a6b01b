//! Dense row-major tensors and the numeric primitives built on them.
//!
//! Everything here is a pure function of its inputs with a fixed evaluation
//! order (matrix products accumulate in ascending inner index), so results
//! are bit-reproducible run to run. Values are 64-bit floats throughout.

use crate::error::{Error, Result};

/// Dense numeric array with an explicit shape.
///
/// `data` is row-major and its length always equals the product of the
/// shape extents. Values are finite unless an operation's contract says
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `data` fills `shape` exactly.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Argument(format!(
                "data length {} does not fill shape {:?} (needs {})",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Self { shape, data })
    }

    /// One-dimensional tensor over `data`.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// Row-major matrix from nested rows. Rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Argument(format!(
                    "ragged rows: expected {} columns, found {}",
                    c,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Tensor::new(vec![r, c], data)
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Element of a rank-2 tensor at `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[row * self.shape[1] + col]
    }

    /// Row `r` of a rank-2 tensor as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let c = self.shape[1];
        &self.data[r * c..(r + 1) * c]
    }

    /// True when the two tensors match in shape and every element is
    /// bit-identical (`f64::to_bits`). Stricter than `==`: distinguishes
    /// `0.0` from `-0.0`.
    pub fn bits_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise difference `self - other`. Shapes must match.
    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::Dimension {
                context: "sub",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Euclidean norm of all elements.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute element, 0 for the empty tensor.
    pub fn linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Matrix product of `a` (m x k) and `b` (k x n).
///
/// Accumulation runs in ascending inner index for every output element, so
/// the result is deterministic down to the last bit.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return Err(Error::Dimension {
            context: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let (m, k) = (a.shape[0], a.shape[1]);
    let n = b.shape[1];
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for kk in 0..k {
            let aik = a.data[i * k + kk];
            let brow = &b.data[kk * n..(kk + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Matrix-vector product of a rank-2 `w` (out x in) and a slice of length in.
pub(crate) fn matvec(w: &Tensor, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.shape.len(), 2);
    debug_assert_eq!(w.shape[1], v.len());
    let (rows, cols) = (w.shape[0], w.shape[1]);
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let wrow = &w.data[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for c in 0..cols {
            acc += wrow[c] * v[c];
        }
        out[r] = acc;
    }
    out
}

/// Transposed matrix-vector product: `w^T d` for `w` (out x in), `d` length out.
pub(crate) fn matvec_transposed(w: &Tensor, d: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.shape.len(), 2);
    debug_assert_eq!(w.shape[0], d.len());
    let (rows, cols) = (w.shape[0], w.shape[1]);
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        let wrow = &w.data[r * cols..(r + 1) * cols];
        let dr = d[r];
        for c in 0..cols {
            out[c] += dr * wrow[c];
        }
    }
    out
}

/// Elementwise sign: -1 for negative, +1 for positive, 0 for exactly zero.
///
/// Zero maps to zero so that a vanished gradient produces no perturbation.
pub fn sign(t: &Tensor) -> Tensor {
    t.map(|v| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Elementwise clamp of every value into `[lo, hi]`.
pub fn clip(t: &Tensor, lo: f64, hi: f64) -> Result<Tensor> {
    if lo > hi {
        return Err(Error::Argument(format!(
            "clip bounds out of order: lo {lo} > hi {hi}"
        )));
    }
    Ok(t.map(|v| v.max(lo).min(hi)))
}

/// `(l2, linf)` norms of the tensor in one pass.
pub fn norms(t: &Tensor) -> (f64, f64) {
    (t.l2_norm(), t.linf_norm())
}

/// Numerically stable softmax: the maximum logit is subtracted before
/// exponentiation.
pub fn softmax(logits: &Tensor) -> Tensor {
    let m = logits.data.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.data.iter().map(|&z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    Tensor {
        shape: logits.shape.clone(),
        data: exps.into_iter().map(|e| e / total).collect(),
    }
}

/// Cross-entropy loss of `logits` against the class index `y`, together
/// with the gradient of the loss with respect to the logits.
///
/// Fused with the max-subtraction trick: `loss = logsumexp(z) - z[y]` and
/// `grad = softmax(z) - onehot(y)`.
pub fn cross_entropy(logits: &Tensor, y: usize) -> Result<(f64, Tensor)> {
    let c = logits.len();
    if y >= c {
        return Err(Error::Argument(format!(
            "class index {y} out of range for {c} classes"
        )));
    }
    let m = logits.data.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.data.iter().map(|&z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() + m - logits.data[y];
    let mut grad: Vec<f64> = exps.into_iter().map(|e| e / total).collect();
    grad[y] -= 1.0;
    Ok((loss, Tensor::from_vec(grad)))
}

/// Central-difference gradient of a scalar function: per coordinate,
/// `(f(x + h e_i) - f(x - h e_i)) / (2h)`.
///
/// This is the independent oracle used to check every analytic gradient in
/// the crate; it never touches the backpropagation path.
pub fn finite_diff_grad(f: impl Fn(&Tensor) -> f64, x: &Tensor, h: f64) -> Tensor {
    assert!(h > 0.0, "finite_diff_grad requires h > 0");
    let mut probe = x.clone();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = probe.data[i];
        probe.data[i] = orig + h;
        let plus = f(&probe);
        probe.data[i] = orig - h;
        let minus = f(&probe);
        probe.data[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Tensor {
        shape: x.shape.clone(),
        data: grad,
    }
}
