//! Finite-difference gradient oracle.
//!
//! Central differences with step 1e-5 on every parameter, compared against
//! analytic gradients. This is the test-side route of every dual-route
//! gradient check in the crate; it must stay independent of the backward
//! passes it is checking.

use crate::error::Result;
use crate::nn::matrix::Matrix;
use crate::nn::mlp::{mlp_loss, mlp_loss_backward, LossKind, Mlp};
use crate::nn::params::{Gradients, ParamStore};

pub const FD_STEP: f64 = 1e-5;

/// Worst relative error between `analytic` and central finite differences
/// of `loss` over every element of every parameter in the store.
///
/// `loss` must be a deterministic function of the store (fix any noise
/// before calling). Relative error uses max(|fd|, |analytic|, 1e-6) as the
/// denominator so near-zero gradients do not blow up the ratio.
pub fn finite_diff_max_rel_err(
    store: &mut ParamStore,
    mut loss: impl FnMut(&ParamStore) -> f64,
    analytic: &Gradients,
) -> f64 {
    let names: Vec<String> = store.names().cloned().collect();
    let mut worst: f64 = 0.0;
    for name in names {
        let len = store.get(&name).len();
        for i in 0..len {
            let original = store.get(&name).data[i];
            store.get_mut(&name).data[i] = original + FD_STEP;
            let up = loss(store);
            store.get_mut(&name).data[i] = original - FD_STEP;
            let down = loss(store);
            store.get_mut(&name).data[i] = original;
            let fd = (up - down) / (2.0 * FD_STEP);
            let an = analytic.get(&name).map_or(0.0, |g| g.data[i]);
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Gradient check for a plain MLP + loss head: analytic backward versus the
/// finite-difference oracle. Returns the worst relative error.
pub fn grad_check(
    store: &mut ParamStore,
    mlp: &Mlp,
    input: &Matrix,
    targets: &Matrix,
    kind: LossKind,
) -> Result<f64> {
    let (_, analytic) = mlp_loss_backward(store, mlp, input, targets, kind)?;
    Ok(finite_diff_max_rel_err(
        store,
        |s| mlp_loss(s, mlp, input, targets, kind).expect("loss evaluates"),
        &analytic,
    ))
}
