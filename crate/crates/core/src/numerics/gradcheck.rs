//! Central finite-difference oracle for tape gradients.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Max over all entries of `|a − n| / max(|a|, |n|, 1e-8)`.
    pub max_rel_error: f64,
    /// `(parameter index, flat entry index)` of the worst entry.
    pub worst: Option<(usize, usize)>,
    pub analytic: Vec<Tensor>,
    pub numeric: Vec<Tensor>,
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn evaluate<F>(f: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.constant(p)).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out).item()?;
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite function value {v}")));
    }
    Ok(v)
}

/// Compares the tape gradient of scalar `f` with respect to every tensor in
/// `params` against central differences with the given `step`.
pub fn check_gradients<F>(f: F, params: &[Tensor], step: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(step > 0.0) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
    let out = f(&mut tape, &vars)?;
    if !tape.value(out).item()?.is_finite() {
        return Err(Error::Numeric("non-finite function value".into()));
    }
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(params)
        .map(|(v, p)| {
            grads
                .get(*v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(p.rows(), p.cols()))
        })
        .collect();

    let mut work: Vec<Tensor> = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let mut max_rel_error = 0.0;
    let mut worst = None;
    for pi in 0..params.len() {
        let mut num = Tensor::zeros(params[pi].rows(), params[pi].cols());
        for e in 0..params[pi].len() {
            let orig = work[pi].data()[e];
            work[pi].data_mut()[e] = orig + step;
            let plus = evaluate(&f, &work)?;
            work[pi].data_mut()[e] = orig - step;
            let minus = evaluate(&f, &work)?;
            work[pi].data_mut()[e] = orig;
            let d = (plus - minus) / (2.0 * step);
            num.data_mut()[e] = d;
            let err = relative_error(analytic[pi].data()[e], d);
            if err > max_rel_error || worst.is_none() {
                max_rel_error = err;
                worst = Some((pi, e));
            }
        }
        numeric.push(num);
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst,
        analytic,
        numeric,
    })
}

/// Single-input form of [`check_gradients`]; returns the max relative error.
pub fn finite_diff_check<F>(f: F, x: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    check_gradients(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), step).map(|r| r.max_rel_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn quadratic_form_matches() {
        let mut rng = Rng::new(3);
        let a = rng.gaussian_tensor(4, 4, 1.0);
        let x = rng.gaussian_tensor(4, 1, 1.0);
        let err = finite_diff_check(
            |tape, x| {
                let a = tape.constant(&a);
                let ax = tape.matmul(a, x)?;
                let xt = tape.transpose(x);
                tape.matmul(xt, ax)
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let x = Tensor::row_vector(&[1.0, 2.0]);
        let err = finite_diff_check(|tape, _| Ok(tape.constant(&Tensor::scalar(3.0))), &x, 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn softmax_cross_entropy_composite() {
        let mut rng = Rng::new(11);
        let logits = rng.gaussian_tensor(3, 5, 1.0);
        let err = finite_diff_check(
            |tape, z| {
                let lp = tape.log_softmax_rows(z, 0.7)?;
                let picked = tape.pick(lp, &[(0, 1), (1, 4), (2, 0)])?;
                let s = tape.sum(picked);
                Ok(tape.scale(s, -1.0 / 3.0))
            },
            &logits,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn non_finite_is_an_error() {
        let x = Tensor::row_vector(&[1.0]);
        let res = finite_diff_check(|tape, _| Ok(tape.constant(&Tensor::scalar(f64::NAN))), &x, 1e-5);
        assert!(matches!(res, Err(Error::Numeric(_))));
        assert!(finite_diff_check(|_, x| Ok(x), &x, 0.0).is_err());
    }
}
