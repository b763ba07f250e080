//! Analytic reverse-mode gradients for the reduced-dimension attention
//! kernel, making it trainable end to end.

use ndarray::{s, Array2, Array3};

use crate::kernels::{matmul_nn, matmul_nt, reduced_probs, AttnError};

/// Inputs of [`crate::kernels::attn_reduced`], bundled for the backward
/// pass and the finite-difference harness.
#[derive(Debug, Clone)]
pub struct ReducedInputs {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub u: Array2<f64>,
    pub d2: Array3<f64>,
    pub mask: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ReducedGrads {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub u: Array2<f64>,
    pub d2: Array3<f64>,
}

/// Gradients of `attn_reduced` with respect to Q, K, V, U, D2 under the
/// given upstream cotangent (same shape as the output).
pub fn attn_reduced_grad(
    inputs: &ReducedInputs,
    upstream: &Array2<f64>,
) -> Result<ReducedGrads, AttnError> {
    let (n, d_h) = inputs.q.dim();
    if upstream.dim() != (n, d_h) {
        return Err(AttnError::ShapeMismatch {
            what: "upstream",
            got: vec![upstream.dim().0, upstream.dim().1],
            want: vec![n, d_h],
        });
    }
    let d_h2 = inputs.u.dim().1;
    let p = reduced_probs(
        &inputs.q,
        &inputs.k,
        &inputs.u,
        &inputs.d2,
        &inputs.mask,
    )?;

    // Value path is linear: dV = P^T . G.
    let mut p_t = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            p_t[[j, i]] = p[[i, j]];
        }
    }
    let dv = matmul_nn(&p_t, upstream);

    // Softmax backward: dS = P * (dP - rowsum(dP * P)).
    let dp = matmul_nt(upstream, &inputs.v, 1.0);
    let mut ds = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut dot = 0.0;
        for j in 0..n {
            dot += dp[[i, j]] * p[[i, j]];
        }
        for j in 0..n {
            ds[[i, j]] = p[[i, j]] * (dp[[i, j]] - dot);
        }
    }

    // First logit term QK^T / sqrt(d_h).
    let scale = 1.0 / (d_h as f64).sqrt();
    let mut dq = matmul_nn(&ds, &inputs.k);
    dq.mapv_inplace(|x| x * scale);
    let mut ds_t = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            ds_t[[j, i]] = ds[[i, j]];
        }
    }
    let mut dk = matmul_nn(&ds_t, &inputs.q);
    dk.mapv_inplace(|x| x * scale);

    // Second term (QU) D2^T / sqrt(d_h2).
    let scale2 = 1.0 / (d_h2 as f64).sqrt();
    let qu = matmul_nn(&inputs.q, &inputs.u);
    let mut dqu = Array2::<f64>::zeros((n, d_h2));
    let mut dd2 = Array3::<f64>::zeros((n, n, d_h2));
    for i in 0..n {
        for j in 0..n {
            let w = ds[[i, j]] * scale2;
            if w == 0.0 {
                continue;
            }
            let dr = inputs.d2.slice(s![i, j, ..]);
            let dr = dr.to_slice().expect("row-major");
            for t in 0..d_h2 {
                dqu[[i, t]] += w * dr[t];
                dd2[[i, j, t]] = w * qu[[i, t]];
            }
        }
    }
    // dQ += dqu . U^T ; dU = Q^T . dqu.
    let dq2 = matmul_nt(&dqu, &inputs.u, 1.0);
    dq += &dq2;
    let mut q_t = Array2::<f64>::zeros((d_h, n));
    for i in 0..n {
        for t in 0..d_h {
            q_t[[t, i]] = inputs.q[[i, t]];
        }
    }
    let du = matmul_nn(&q_t, &dqu);

    Ok(ReducedGrads {
        q: dq,
        k: dk,
        v: dv,
        u: du,
        d2: dd2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::causal_mask;
    use ndarray::Array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn inputs(rng: &mut ChaCha8Rng, n: usize, d_h: usize, d_h2: usize) -> ReducedInputs {
        ReducedInputs {
            q: Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0)),
            k: Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0)),
            v: Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0)),
            u: Array::from_shape_fn((d_h, d_h2), |_| rng.gen_range(-1.0..1.0)),
            d2: Array::from_shape_fn((n, n, d_h2), |_| rng.gen_range(-1.0..1.0)),
            mask: causal_mask(n),
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ins = inputs(&mut rng, 5, 4, 2);
        let g = attn_reduced_grad(&ins, &Array2::zeros((5, 4))).unwrap();
        assert!(g.q.iter().all(|&x| x == 0.0));
        assert!(g.k.iter().all(|&x| x == 0.0));
        assert!(g.v.iter().all(|&x| x == 0.0));
        assert!(g.u.iter().all(|&x| x == 0.0));
        assert!(g.d2.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn value_gradient_is_probs_transpose_times_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let ins = inputs(&mut rng, 6, 4, 2);
        let upstream = Array::from_shape_fn((6, 4), |_| rng.gen_range(-1.0..1.0));
        let g = attn_reduced_grad(&ins, &upstream).unwrap();
        let p = reduced_probs(&ins.q, &ins.k, &ins.u, &ins.d2, &ins.mask).unwrap();
        for j in 0..6 {
            for t in 0..4 {
                let expect: f64 = (0..6).map(|i| p[[i, j]] * upstream[[i, t]]).sum();
                assert!((g.v[[j, t]] - expect).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn upstream_shape_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ins = inputs(&mut rng, 4, 4, 2);
        assert!(matches!(
            attn_reduced_grad(&ins, &Array2::zeros((3, 4))),
            Err(AttnError::ShapeMismatch { what: "upstream", .. })
        ));
    }
}
