//! Central-difference verification of tape gradients.

use serde::Serialize;

use crate::error::Result;
use crate::params::ParamStore;
use crate::tape::{Tape, Var};

/// Worst disagreement found in one parameter tensor.
#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    pub max_rel_error: f64,
    pub worst_entry: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares the tape gradient of `loss_fn` against `(f(p+h) - f(p-h)) / 2h`
/// for every entry of every tensor in `params`.
///
/// `loss_fn` receives a fresh tape and the vars of the bound parameters and
/// must return a scalar. It has to be deterministic: any sampling noise must
/// be derived from a fixed seed so the `±h` evaluations see the same draw.
pub fn finite_difference_check<F>(
    params: &ParamStore,
    loss_fn: F,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let evaluate = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let vars = store.bind(&mut tape);
        let loss = loss_fn(&mut tape, &vars)?;
        tape.value(loss).item()
    };

    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let loss = loss_fn(&mut tape, &vars)?;
    let analytic = params.align(&tape.backward(loss)?)?;

    let mut work = params.clone();
    let mut tensors = Vec::with_capacity(params.len());
    for (idx, grad) in analytic.iter().enumerate() {
        let mut check = TensorCheck {
            name: params.name(idx).to_string(),
            entries: grad.len(),
            max_rel_error: 0.0,
            worst_entry: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for k in 0..grad.len() {
            let original = work.get(idx).data()[k];
            work.get_mut(idx).data_mut()[k] = original + h;
            let plus = evaluate(&work)?;
            work.get_mut(idx).data_mut()[k] = original - h;
            let minus = evaluate(&work)?;
            work.get_mut(idx).data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[k];
            let err = relative_error(a, numeric);
            if err > check.max_rel_error || k == 0 {
                check.max_rel_error = err;
                check.worst_entry = k;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        tensors.push(check);
    }
    let passed = tensors.iter().all(|t| t.max_rel_error <= tol);
    Ok(GradCheckReport {
        tensors,
        step: h,
        tolerance: tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn quadratic_form_is_exact() {
        let mut params = ParamStore::new();
        params.push("p", Tensor::row_vector(vec![0.5, -1.5, 3.0, 0.75]));
        let report = finite_difference_check(
            &params,
            |tape, vars| {
                let sq = tape.mul(vars[0], vars[0])?;
                tape.sum(sq)
            },
            1e-5,
            1e-9,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn wrong_gradient_is_caught() {
        // relu at exactly zero: the tape uses the subgradient 0 while the
        // symmetric difference sees slope 1/2.
        let mut params = ParamStore::new();
        params.push("p", Tensor::scalar(0.0));
        let report = finite_difference_check(
            &params,
            |tape, vars| {
                let r = tape.relu(vars[0])?;
                tape.sum(r)
            },
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(!report.passed);
        assert!((report.tensors[0].numeric - 0.5).abs() < 1e-9);
    }
}
