//! Finite-difference gradient verification (64-bit mode).

use crate::{GradMap, NodeId, Result, Tape, Tensor, TensorError};

/// Outcome of a gradient check: the worst relative error and where it was.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
}

fn eval_loss<F>(f: &F, params: &[(String, Tensor<f64>)]) -> f64
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> NodeId,
{
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params
        .iter()
        .map(|(name, value)| tape.param(name.clone(), value.clone()))
        .collect();
    let loss = f(&mut tape, &ids);
    tape.value(loss).scalar_value()
}

/// Compare analytic gradients against central finite differences.
///
/// Relative error per entry is
/// `|analytic - central| / (|central| + 1e-12)`; the max over all entries
/// of all parameters is returned. The function must be deterministic: it is
/// evaluated twice at the base point and any drift is an error.
pub fn check_gradients<F>(
    f: F,
    params: &[(String, Tensor<f64>)],
    step: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> NodeId,
{
    assert!(step > 0.0, "finite-difference step must be positive");

    let first = eval_loss(&f, params);
    let second = eval_loss(&f, params);
    if first.to_bits() != second.to_bits() {
        return Err(TensorError::NonDeterministic { first, second });
    }

    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params
        .iter()
        .map(|(name, value)| tape.param(name.clone(), value.clone()))
        .collect();
    let loss = f(&mut tape, &ids);
    let grads = tape.backward(loss)?;

    max_rel_error_vs_fd(&f, params, &grads, step)
}

/// Finite-difference comparison against externally supplied analytic
/// gradients. Split out so negative tests can corrupt the gradients first.
pub fn max_rel_error_vs_fd<F>(
    f: &F,
    params: &[(String, Tensor<f64>)],
    grads: &GradMap<f64>,
    step: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> NodeId,
{
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
    };
    let mut work: Vec<(String, Tensor<f64>)> = params.to_vec();
    for (pi, (name, _)) in params.iter().enumerate() {
        let analytic = grads
            .get(name)
            .unwrap_or_else(|| panic!("no gradient recorded for {name}"));
        for ei in 0..params[pi].1.numel() {
            let base = params[pi].1.data()[ei];
            work[pi].1.data_mut()[ei] = base + step;
            let plus = eval_loss(f, &work);
            work[pi].1.data_mut()[ei] = base - step;
            let minus = eval_loss(f, &work);
            work[pi].1.data_mut()[ei] = base;

            let central = (plus - minus) / (2.0 * step);
            let rel = (analytic.data()[ei] - central).abs() / (central.abs() + 1e-12);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = name.clone();
                report.worst_index = ei;
            }
        }
    }
    Ok(report)
}
