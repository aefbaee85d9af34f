use super::{Gradients, ParamStore, Tape, Var};
use crate::error::Result;

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Relative error with a small floor so that near-zero entries are not
/// dominated by round-off.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares backprop gradients of every trainable parameter against central
/// differences of `loss`. `loss` must be deterministic in the store values.
pub fn check_gradients<F>(store: &ParamStore, eps: f64, loss: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let mut grads = Gradients::for_store(store);
    {
        let mut tape = Tape::new(store);
        let l = loss(&mut tape)?;
        tape.backward(l, &mut grads)?;
    }
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(s);
        let l = loss(&mut tape)?;
        Ok(tape.scalar(l))
    };
    let mut probe = store.clone();
    let mut report = GradCheck {
        max_rel_err: 0.0,
        worst: None,
        checked: 0,
    };
    for id in store.ids() {
        let p = store.get(id);
        if !p.trainable {
            continue;
        }
        for i in 0..p.value.len() {
            let orig = p.value.data[i];
            probe.get_mut(id).value.data[i] = orig + eps;
            let up = eval(&probe)?;
            probe.get_mut(id).value.data[i] = orig - eps;
            let down = eval(&probe)?;
            probe.get_mut(id).value.data[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.get(id).map_or(0.0, |g| g[i]);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_err || err.is_nan() {
                report.max_rel_err = err;
                report.worst = Some((p.name.clone(), i));
            }
        }
    }
    Ok(report)
}
