//! Safe wrapper over `matrixmultiply::dgemm`.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Strides {
    pub row: usize,
    pub col: usize,
}

impl Strides {
    pub fn row_major(cols: usize) -> Self {
        Self { row: cols, col: 1 }
    }
}

fn max_offset(rows: usize, cols: usize, s: Strides) -> usize {
    (rows - 1) * s.row + (cols - 1) * s.col
}

/// `c = a · b + beta · c` with `a: m×k`, `b: k×n`, `c: m×n` addressed through
/// explicit strides, so transposes are free.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: Strides,
    b: &[f64],
    sb: Strides,
    c: &mut [f64],
    sc: Strides,
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                c[i * sc.row + j * sc.col] *= beta;
            }
        }
        return;
    }
    assert!(max_offset(m, k, sa) < a.len(), "gemm: lhs out of bounds");
    assert!(max_offset(k, n, sb) < b.len(), "gemm: rhs out of bounds");
    assert!(max_offset(m, n, sc) < c.len(), "gemm: output out of bounds");
    // SAFETY: every element addressed by the strides lies inside its slice
    // (checked above), and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.row as isize,
            sa.col as isize,
            b.as_ptr(),
            sb.row as isize,
            sb.col as isize,
            beta,
            c.as_mut_ptr(),
            sc.row as isize,
            sc.col as isize,
        );
    }
}
