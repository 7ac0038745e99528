//! Finite-difference gradient verification.

use super::{Scalar, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Parameter elements skipped because an evaluation touched a relu kink.
    pub skipped: usize,
}

/// Central-difference check of analytic gradients.
///
/// `analytic` holds gradient snapshots in parameter-visit order. `visit`
/// walks the net's parameter tensors in that same order; `loss` re-evaluates
/// the scalar loss at the current parameters and reports whether any relu
/// input sat exactly on its kink (such evaluations are excluded: the
/// subgradient choice there is arbitrary). Relative error per element is
/// `|ga - gn| / max(|ga|, |gn|, 1e-12)`.
pub fn grad_check<N, T: Scalar>(
    net: &mut N,
    analytic: &[Tensor<T>],
    visit: impl Fn(&mut N, &mut dyn FnMut(&mut Tensor<T>)),
    loss: impl Fn(&mut N) -> (T, bool),
    eps: f64,
) -> GradCheckReport {
    let e = T::from_f64(eps);
    let mut max_rel_err = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;

    // Adjust element `i` of parameter tensor `j` by `delta`.
    let nudge = |net: &mut N, j: usize, i: usize, delta: T| {
        let mut idx = 0;
        visit(net, &mut |p: &mut Tensor<T>| {
            if idx == j {
                p.data_mut()[i] += delta;
            }
            idx += 1;
        });
    };

    for (j, ga) in analytic.iter().enumerate() {
        for i in 0..ga.len() {
            nudge(net, j, i, e);
            let (l_plus, kink_p) = loss(net);
            nudge(net, j, i, T::ZERO - (e + e));
            let (l_minus, kink_m) = loss(net);
            nudge(net, j, i, e);
            if kink_p || kink_m {
                skipped += 1;
                continue;
            }
            let gn = (l_plus.to_f64() - l_minus.to_f64()) / (2.0 * eps);
            let gav = ga.data()[i].to_f64();
            let denom = gav.abs().max(gn.abs()).max(1e-12);
            let rel = (gav - gn).abs() / denom;
            if rel > max_rel_err {
                max_rel_err = rel;
            }
            checked += 1;
        }
    }

    GradCheckReport {
        max_rel_err,
        checked,
        skipped,
    }
}
