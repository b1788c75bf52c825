//! Row-parallel dense kernels.
//!
//! Each output element is accumulated in a fixed order that does not depend
//! on the thread count, so parallel and serial runs agree bit for bit.

use rayon::prelude::*;

use super::Scalar;

const PAR_THRESHOLD: usize = 1 << 16;

fn for_each_row<T: Scalar>(out: &mut [T], n: usize, work: usize, f: impl Fn(usize, &mut [T]) + Sync + Send) {
    if n == 0 {
        return;
    }
    if work >= PAR_THRESHOLD {
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| f(i, row));
    } else {
        out.chunks_mut(n).enumerate().for_each(|(i, row)| f(i, row));
    }
}

/// `out[m×n] = a[m×k] · b[k×n]`
pub fn matmul_into<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for_each_row(out, n, m * k * n, |i, row| {
        row.iter_mut().for_each(|v| *v = T::zero());
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(b_row) {
                *o = *o + av * bv;
            }
        }
    });
}

/// `out[m×n] = a[m×k] · b[n×k]ᵀ`
pub fn matmul_nt_into<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for_each_row(out, n, m * k * n, |i, row| {
        let a_row = &a[i * k..(i + 1) * k];
        for (j, o) in row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            *o = a_row.iter().zip(b_row).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
        }
    });
}

/// `out[m×n] = a[k×m]ᵀ · b[k×n]`
pub fn matmul_tn_into<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for_each_row(out, n, m * k * n, |i, row| {
        row.iter_mut().for_each(|v| *v = T::zero());
        for p in 0..k {
            let av = a[p * m + i];
            if av == T::zero() {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(b_row) {
                *o = *o + av * bv;
            }
        }
    });
}
