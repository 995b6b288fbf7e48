use super::Parameter;
use crate::error::{Error, Result};

/// Compares analytic gradients against central finite differences.
///
/// `loss` must compute a deterministic scalar and accumulate its gradient into
/// the parameters' `grad` buffers. Returns the largest
/// `|analytic - numeric| / max(1, |numeric|)` over all coordinates.
#[allow(clippy::needless_range_loop)] // perturbs and reads parameter k in place
pub fn grad_check<F>(params: &mut [Parameter], mut loss: F, eps: f64) -> Result<f64>
where
    F: FnMut(&mut [Parameter]) -> Result<f64>,
{
    for p in params.iter_mut() {
        p.zero_grad();
    }
    let base = loss(params)?;
    check_finite(base)?;
    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad.as_slice().to_vec()).collect();

    let mut worst = 0.0_f64;
    for pi in 0..params.len() {
        for k in 0..params[pi].value.len() {
            let original = params[pi].value.as_slice()[k];
            params[pi].value.as_mut_slice()[k] = original + eps;
            let plus = loss(params)?;
            params[pi].value.as_mut_slice()[k] = original - eps;
            let minus = loss(params)?;
            params[pi].value.as_mut_slice()[k] = original;
            check_finite(plus)?;
            check_finite(minus)?;

            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (analytic[pi][k] - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    for p in params.iter_mut() {
        p.zero_grad();
    }
    Ok(worst)
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("grad_check: non-finite loss {v}")))
    }
}
