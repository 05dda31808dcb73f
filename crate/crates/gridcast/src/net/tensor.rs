//! Dense rank-4 tensors in `(batch, channel, row, col)` layout.

/// Row-major `(n, c, h, w)` tensor of `f64` values.
///
/// The column axis is innermost, so `data[((n*C + c)*H + y)*W + x]` walks
/// columns fastest and a `(n, c, y)` row is one contiguous slice. Row 0 is
/// whatever the producer put there; the network never assumes a compass
/// orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Tensor {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    /// Wraps an existing buffer; `data.len()` must equal `n*c*h*w`.
    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            n * c * h * w,
            "tensor data length {} does not match shape ({n}, {c}, {h}, {w})",
            data.len()
        );
        Tensor { n, c, h, w, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(n < self.n && c < self.c && y < self.h && x < self.w);
        ((n * self.c + c) * self.h + y) * self.w + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(n, c, y, x);
        self.data[i] = v;
    }

    /// Contiguous `(n, c, y)` row.
    #[inline]
    pub fn row(&self, n: usize, c: usize, y: usize) -> &[f64] {
        let start = self.index(n, c, y, 0);
        &self.data[start..start + self.w]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize, c: usize, y: usize) -> &mut [f64] {
        let start = self.index(n, c, y, 0);
        &mut self.data[start..start + self.w]
    }

    /// Contiguous `(n, c)` plane of `h*w` values.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let start = self.index(n, c, 0, 0);
        &self.data[start..start + self.h * self.w]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let start = self.index(n, c, 0, 0);
        let len = self.h * self.w;
        &mut self.data[start..start + len]
    }

    /// Elementwise `self += other`; shapes must match.
    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.dims(), other.dims(), "tensor shape mismatch in add");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// Splits along the channel axis into `(channels 0..at, channels at..)`.
    pub fn split_channels(&self, at: usize) -> (Tensor, Tensor) {
        assert!(at <= self.c, "split point {at} beyond {} channels", self.c);
        let mut head = Tensor::zeros(self.n, at, self.h, self.w);
        let mut tail = Tensor::zeros(self.n, self.c - at, self.h, self.w);
        for n in 0..self.n {
            for c in 0..self.c {
                let src = self.plane(n, c);
                let dst = if c < at {
                    head.plane_mut(n, c)
                } else {
                    tail.plane_mut(n, c - at)
                };
                dst.copy_from_slice(src);
            }
        }
        (head, tail)
    }

    /// Concatenates along the channel axis; batch and spatial dims must match.
    pub fn concat_channels(a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(
            (a.n, a.h, a.w),
            (b.n, b.h, b.w),
            "concat requires matching batch and spatial dims"
        );
        let mut out = Tensor::zeros(a.n, a.c + b.c, a.h, a.w);
        for n in 0..a.n {
            for c in 0..a.c {
                out.plane_mut(n, c).copy_from_slice(a.plane(n, c));
            }
            for c in 0..b.c {
                out.plane_mut(n, a.c + c).copy_from_slice(b.plane(n, c));
            }
        }
        out
    }
}
