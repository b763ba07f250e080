//! Central-difference verification of the analytic gradients.

use ndarray::Array2;

use crate::grad::{attn_reduced_grad, ReducedInputs};
use crate::kernels::{attn_reduced, AttnError};

/// Worst relative error per parameter tensor:
/// `|analytic - numeric| / max(1, |numeric|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub q: f64,
    pub k: f64,
    pub v: f64,
    pub u: f64,
    pub d2: f64,
}

impl FdReport {
    pub fn max(&self) -> f64 {
        self.q.max(self.k).max(self.v).max(self.u).max(self.d2)
    }
}

fn objective(inputs: &ReducedInputs, upstream: &Array2<f64>) -> Result<f64, AttnError> {
    let out = attn_reduced(
        &inputs.q,
        &inputs.k,
        &inputs.v,
        &inputs.u,
        &inputs.d2,
        &inputs.mask,
    )?;
    Ok(out.iter().zip(upstream.iter()).map(|(a, b)| a * b).sum())
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Compare `attn_reduced_grad` against central differences with step `h`
/// on the scalar objective `<upstream, attn_reduced(inputs)>`.
pub fn fd_check(
    inputs: &ReducedInputs,
    upstream: &Array2<f64>,
    h: f64,
) -> Result<FdReport, AttnError> {
    let grads = attn_reduced_grad(inputs, upstream)?;
    let mut work = inputs.clone();

    let mut check2 = |select: fn(&mut ReducedInputs) -> &mut Array2<f64>,
                      analytic: &Array2<f64>|
     -> Result<f64, AttnError> {
        let mut worst = 0.0f64;
        let len = select(&mut work).len();
        for idx in 0..len {
            let orig = select(&mut work).as_slice().unwrap()[idx];
            select(&mut work).as_slice_mut().unwrap()[idx] = orig + h;
            let up = objective(&work, upstream)?;
            select(&mut work).as_slice_mut().unwrap()[idx] = orig - h;
            let down = objective(&work, upstream)?;
            select(&mut work).as_slice_mut().unwrap()[idx] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(analytic.as_slice().unwrap()[idx], numeric));
        }
        Ok(worst)
    };

    let q_err = check2(|w| &mut w.q, &grads.q)?;
    let k_err = check2(|w| &mut w.k, &grads.k)?;
    let v_err = check2(|w| &mut w.v, &grads.v)?;
    let u_err = check2(|w| &mut w.u, &grads.u)?;

    let mut d2_err = 0.0f64;
    for idx in 0..work.d2.len() {
        let orig = work.d2.as_slice().unwrap()[idx];
        work.d2.as_slice_mut().unwrap()[idx] = orig + h;
        let up = objective(&work, upstream)?;
        work.d2.as_slice_mut().unwrap()[idx] = orig - h;
        let down = objective(&work, upstream)?;
        work.d2.as_slice_mut().unwrap()[idx] = orig;
        let numeric = (up - down) / (2.0 * h);
        d2_err = d2_err.max(rel_err(grads.d2.as_slice().unwrap()[idx], numeric));
    }

    Ok(FdReport {
        q: q_err,
        k: k_err,
        v: v_err,
        u: u_err,
        d2: d2_err,
    })
}
