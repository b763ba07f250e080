//! The three decoder attention variants in double precision.
//!
//! All three share the causal mask `M` (0 on and below the diagonal, a
//! large negative constant above it) and a row-wise softmax with max
//! subtraction. Matrix products use plain loops over preallocated outputs
//! so the kernels allocate exactly their stated scratch.

use ndarray::{s, Array2, Array3};
use thiserror::Error;

/// Finite stand-in for -inf in additive masks; exp underflows to exact 0
/// past it, so masked slots contribute nothing while max subtraction stays
/// NaN-free.
pub const MASK_NEG: f64 = -1e9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttnError {
    #[error("{what} has shape {got:?}, expected {want:?}")]
    ShapeMismatch {
        what: &'static str,
        got: Vec<usize>,
        want: Vec<usize>,
    },
    #[error("{what} contains NaN or +inf")]
    NonFiniteInput { what: &'static str },
}

/// Upper-triangular additive causal mask: row i attends to columns <= i.
pub fn causal_mask(n: usize) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            m[[i, j]] = MASK_NEG;
        }
    }
    m
}

fn check_finite(what: &'static str, xs: impl Iterator<Item = f64>) -> Result<(), AttnError> {
    for x in xs {
        if x.is_nan() || x == f64::INFINITY {
            return Err(AttnError::NonFiniteInput { what });
        }
    }
    Ok(())
}

fn check_qkv(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &Array2<f64>,
) -> Result<(usize, usize), AttnError> {
    let (n, d_h) = q.dim();
    for (what, x) in [("K", k), ("V", v)] {
        if x.dim() != (n, d_h) {
            return Err(AttnError::ShapeMismatch {
                what,
                got: vec![x.dim().0, x.dim().1],
                want: vec![n, d_h],
            });
        }
    }
    if mask.dim() != (n, n) {
        return Err(AttnError::ShapeMismatch {
            what: "M",
            got: vec![mask.dim().0, mask.dim().1],
            want: vec![n, n],
        });
    }
    check_finite("Q", q.iter().copied())?;
    check_finite("K", k.iter().copied())?;
    check_finite("V", v.iter().copied())?;
    check_finite("M", mask.iter().copied())?;
    Ok((n, d_h))
}

/// `a . b^T` for row-major matrices `(n x m) . (p x m)^T -> n x p`.
pub(crate) fn matmul_nt(a: &Array2<f64>, b: &Array2<f64>, scale: f64) -> Array2<f64> {
    let (n, m) = a.dim();
    let p = b.dim().0;
    let mut out = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let ar = a.row(i);
        let ar = ar.as_slice().expect("row-major");
        for j in 0..p {
            let br = b.row(j);
            let br = br.as_slice().expect("row-major");
            let mut acc = 0.0;
            for t in 0..m {
                acc += ar[t] * br[t];
            }
            out[[i, j]] = acc * scale;
        }
    }
    out
}

/// `a . b` for `(n x m) . (m x p) -> n x p`, accumulated row-wise.
pub(crate) fn matmul_nn(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, m) = a.dim();
    let p = b.dim().1;
    let mut out = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let ar = a.row(i);
        let ar = ar.as_slice().expect("row-major");
        for (t, &a_it) in ar.iter().enumerate().take(m) {
            if a_it == 0.0 {
                continue;
            }
            let br = b.row(t);
            let br = br.as_slice().expect("row-major");
            let or = out.row_mut(i);
            let or = or.into_slice().expect("row-major");
            for u in 0..p {
                or[u] += a_it * br[u];
            }
        }
    }
    out
}

/// Row-wise softmax with max subtraction, in place.
fn softmax_rows(logits: &mut Array2<f64>) {
    let (n, _) = logits.dim();
    for i in 0..n {
        let mut row = logits.row_mut(i);
        let row = row.as_slice_mut().expect("row-major");
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
}

/// Plain masked attention: `softmax(QK^T / sqrt(d_h) + M) V`.
pub fn attn_masked(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    let (_, d_h) = check_qkv(q, k, v, mask)?;
    let mut logits = matmul_nt(q, k, 1.0 / (d_h as f64).sqrt());
    logits += mask;
    softmax_rows(&mut logits);
    Ok(matmul_nn(&logits, v))
}

fn check_bias3(
    what: &'static str,
    d: &Array3<f64>,
    n: usize,
    width: usize,
) -> Result<(), AttnError> {
    if d.dim() != (n, n, width) {
        let (a, b, c) = d.dim();
        return Err(AttnError::ShapeMismatch {
            what,
            got: vec![a, b, c],
            want: vec![n, n, width],
        });
    }
    check_finite(what, d.iter().copied())
}

/// Logits of the additive-positional-encoding variant:
/// `Q(K + D)^T / sqrt(d_h) + M`, with Q, K broadcast row-wise against D.
pub fn additive_logits(
    q: &Array2<f64>,
    k: &Array2<f64>,
    d: &Array3<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    let (n, d_h) = q.dim();
    check_bias3("D", d, n, d_h)?;
    let scale = 1.0 / (d_h as f64).sqrt();
    let mut logits = matmul_nt(q, k, scale);
    for i in 0..n {
        let qr = q.row(i);
        let qr = qr.as_slice().expect("row-major");
        for j in 0..n {
            let dr = d.slice(s![i, j, ..]);
            let dr = dr.to_slice().expect("row-major");
            let mut acc = 0.0;
            for t in 0..d_h {
                acc += qr[t] * dr[t];
            }
            logits[[i, j]] += acc * scale;
        }
    }
    logits += mask;
    Ok(logits)
}

/// Additive-feature attention:
/// `softmax(Q(K + D)^T / sqrt(d_h) + M)(V + D)`;
/// row i of the output is `sum_j p_ij (V_j + D[i][j])`.
pub fn attn_additive_pe(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    d: &Array3<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    let (n, d_h) = check_qkv(q, k, v, mask)?;
    let mut p = additive_logits(q, k, d, mask)?;
    softmax_rows(&mut p);
    let mut out = matmul_nn(&p, v);
    for i in 0..n {
        for j in 0..n {
            let w = p[[i, j]];
            if w == 0.0 {
                continue;
            }
            let dr = d.slice(s![i, j, ..]);
            let dr = dr.to_slice().expect("row-major");
            let mut or = out.row_mut(i);
            let or = or.as_slice_mut().expect("row-major");
            for t in 0..d_h {
                or[t] += w * dr[t];
            }
        }
    }
    Ok(out)
}

/// Logits of the reduced-dimension variant:
/// `QK^T / sqrt(d_h) + (QU) D2^T / sqrt(d_h2) + M`.
pub fn reduced_logits(
    q: &Array2<f64>,
    k: &Array2<f64>,
    u: &Array2<f64>,
    d2: &Array3<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    let (n, d_h) = q.dim();
    if u.dim().0 != d_h {
        return Err(AttnError::ShapeMismatch {
            what: "U",
            got: vec![u.dim().0, u.dim().1],
            want: vec![d_h, u.dim().1],
        });
    }
    let d_h2 = u.dim().1;
    check_finite("U", u.iter().copied())?;
    check_bias3("D2", d2, n, d_h2)?;
    let mut logits = matmul_nt(q, k, 1.0 / (d_h as f64).sqrt());
    let qu = matmul_nn(q, u);
    let scale2 = 1.0 / (d_h2 as f64).sqrt();
    for i in 0..n {
        let qur = qu.row(i);
        let qur = qur.as_slice().expect("row-major");
        for j in 0..n {
            let dr = d2.slice(s![i, j, ..]);
            let dr = dr.to_slice().expect("row-major");
            let mut acc = 0.0;
            for t in 0..d_h2 {
                acc += qur[t] * dr[t];
            }
            logits[[i, j]] += acc * scale2;
        }
    }
    logits += mask;
    Ok(logits)
}

/// Reduced-dimension attention:
/// `softmax(QK^T / sqrt(d_h) + QU D2^T / sqrt(d_h2) + M) V`.
pub fn attn_reduced(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    u: &Array2<f64>,
    d2: &Array3<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    check_qkv(q, k, v, mask)?;
    let mut p = reduced_logits(q, k, u, d2, mask)?;
    softmax_rows(&mut p);
    Ok(matmul_nn(&p, v))
}

/// Softmax probabilities of the reduced variant; shared with the backward
/// pass.
pub(crate) fn reduced_probs(
    q: &Array2<f64>,
    k: &Array2<f64>,
    u: &Array2<f64>,
    d2: &Array3<f64>,
    mask: &Array2<f64>,
) -> Result<Array2<f64>, AttnError> {
    let mut p = reduced_logits(q, k, u, d2, mask)?;
    softmax_rows(&mut p);
    Ok(p)
}
