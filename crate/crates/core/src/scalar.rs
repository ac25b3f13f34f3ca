//! Scalar abstraction shared by every numeric kernel.
//!
//! Training runs in `f32`; gradient verification runs the same code in `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type of tensors and networks.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Short type name used in diagnostics (`"f32"` / `"f64"`).
    const NAME: &'static str;

    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// `c = alpha * a·b + beta * c` with arbitrary (row, column) strides.
    ///
    /// # Safety
    /// Caller guarantees that every addressed element lies inside the
    /// respective buffer; see [`gemm`] for the checked entry point.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Row-major matrix view description: `rows × cols` with explicit strides.
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl Layout {
    /// Contiguous row-major `rows × cols`.
    pub fn row_major(rows: usize, cols: usize) -> Self {
        Layout { rows, cols, row_stride: cols, col_stride: 1 }
    }

    /// The transpose of a contiguous row-major `rows × cols` buffer, seen as `cols × rows`.
    pub fn transposed(rows: usize, cols: usize) -> Self {
        Layout { rows: cols, cols: rows, row_stride: 1, col_stride: cols }
    }

    fn extent(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride + 1
        }
    }
}

/// Checked `c = alpha * a·b + beta * c`.
///
/// Panics if the layouts disagree or address memory outside the slices.
pub fn gemm<T: Real>(alpha: T, a: &[T], la: Layout, b: &[T], lb: Layout, beta: T, c: &mut [T], lc: Layout) {
    assert_eq!(la.cols, lb.rows, "gemm inner dimension");
    assert_eq!(la.rows, lc.rows, "gemm output rows");
    assert_eq!(lb.cols, lc.cols, "gemm output cols");
    assert!(la.extent() <= a.len() && lb.extent() <= b.len() && lc.extent() <= c.len(), "gemm out of bounds");
    if lc.rows == 0 || lc.cols == 0 {
        return;
    }
    // SAFETY: extents checked above; strides are non-negative.
    unsafe {
        T::gemm_raw(
            la.rows,
            la.cols,
            lb.cols,
            alpha,
            a.as_ptr(),
            la.row_stride as isize,
            la.col_stride as isize,
            b.as_ptr(),
            lb.row_stride as isize,
            lb.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            lc.row_stride as isize,
            lc.col_stride as isize,
        )
    }
}
