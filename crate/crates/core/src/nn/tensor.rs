//! Minimal rank-3 tensor: (batch, channels, length), row-major.

use super::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<S> {
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor3<S> {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        Self { batch, channels, len, data: vec![S::ZERO; batch * channels * len] }
    }

    pub fn from_vec(batch: usize, channels: usize, len: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), batch * channels * len, "shape/data mismatch");
        Self { batch, channels, len, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.len)
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, i: usize) -> usize {
        debug_assert!(b < self.batch && c < self.channels && i < self.len);
        (b * self.channels + c) * self.len + i
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, i: usize) -> S {
        self.data[self.index(b, c, i)]
    }

    #[inline]
    pub fn at_mut(&mut self, b: usize, c: usize, i: usize) -> &mut S {
        let idx = self.index(b, c, i);
        &mut self.data[idx]
    }

    /// One (batch, channel) row.
    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[S] {
        let start = (b * self.channels + c) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [S] {
        let start = (b * self.channels + c) * self.len;
        &mut self.data[start..start + self.len]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite_scalar())
    }

    /// Lossy elementwise cast between storage scalars.
    pub fn cast<T: Scalar>(&self) -> Tensor3<T> {
        Tensor3 {
            batch: self.batch,
            channels: self.channels,
            len: self.len,
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }
}
