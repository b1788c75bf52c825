use super::{Tape, Tensor, Var};
use crate::{Error, Result};

pub const DEFAULT_GRAD_CHECK_EPS: f64 = 1e-4;

/// Compares tape gradients of a scalar function against central differences.
///
/// Returns the largest `|analytic − numeric| / max(1, |analytic|, |numeric|)`
/// over all coordinates.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), eps)
}

/// [`grad_check`] over several inputs at once.
pub fn grad_check_many<F>(f: F, inputs: &[Tensor<f64>], eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("grad_check eps {eps}")));
    }
    let eval = |values: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.constant(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        scalar_of(&tape, out)
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| tape.param(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    scalar_of(&tape, out)?;
    tape.backward(out)?;
    let analytic: Vec<Tensor<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, x)| {
            tape.grad(v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(x.shape().to_vec()))
        })
        .collect();

    let mut worst = 0.0f64;
    let mut probe: Vec<Tensor<f64>> = inputs.to_vec();
    for (t, grad) in analytic.iter().enumerate() {
        for i in 0..inputs[t].len() {
            let orig = inputs[t].data()[i];
            probe[t].data_mut()[i] = orig + eps;
            let plus = eval(&probe)?;
            probe[t].data_mut()[i] = orig - eps;
            let minus = eval(&probe)?;
            probe[t].data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            if !numeric.is_finite() {
                return Err(Error::NonFinite("grad_check"));
            }
            let a = grad.data()[i];
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

fn scalar_of(tape: &Tape<f64>, v: Var) -> Result<f64> {
    let t = tape.value(v);
    if t.len() != 1 {
        return Err(Error::shape("grad_check", "function must return a single value"));
    }
    Ok(t.data()[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::new([2], vec![1.0, 2.0]).unwrap();
        let err = grad_check(
            |tape, x| {
                let sq = tape.mul(x, x)?;
                tape.sum(sq)
            },
            &x,
            DEFAULT_GRAD_CHECK_EPS,
        )
        .unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn constant_function() {
        let x = Tensor::new([3], vec![0.3, -1.0, 2.0]).unwrap();
        let err = grad_check(
            |tape, _| Ok(tape.constant(Tensor::scalar(4.0)?)),
            &x,
            DEFAULT_GRAD_CHECK_EPS,
        )
        .unwrap();
        assert!(err < 1e-7);
    }

    #[test]
    fn rejects_bad_eps() {
        let x = Tensor::new([1], vec![1.0]).unwrap();
        assert!(grad_check(|tape, x| tape.sum(x), &x, 0.0).is_err());
    }
}
