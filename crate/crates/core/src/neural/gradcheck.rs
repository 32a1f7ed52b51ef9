use super::loss::huber_loss;
use super::lstm::{loss_and_gradients, q_forward, SequenceBatch};
use super::params::{QNetworkParams, TENSOR_NAMES};
use super::NeuralError;

/// Relative errors below this absolute gradient scale are measured against it
/// instead, so that roundoff on vanishing gradients is not reported as error.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// Worst relative error per tensor, in checkpoint order.
    pub per_tensor: [(&'static str, f64); 5],
    pub max_rel_error: f64,
}

fn sequence_loss<S: AsRef<[f64]>>(
    params: &QNetworkParams<f64>,
    sequences: &[&[S]],
    actions: &[usize],
    targets: &[f64],
    delta: f64,
) -> Result<f64, NeuralError> {
    let mut total = 0.0;
    for ((seq, &a), &y) in sequences.iter().zip(actions).zip(targets) {
        let (q, _) = q_forward(seq, params)?;
        total += huber_loss(q[a] - y, delta)?;
    }
    Ok(total / sequences.len() as f64)
}

/// Central finite differences with step `eps` on every parameter, evaluated
/// through the unbatched [`q_forward`], against the batched BPTT gradients.
pub fn gradient_check<S: AsRef<[f64]>>(
    params: &QNetworkParams<f64>,
    sequences: &[&[S]],
    actions: &[usize],
    targets: &[f64],
    delta: f64,
    eps: f64,
) -> Result<GradCheck, NeuralError> {
    let batch = SequenceBatch::new(params.w_ih.ncols(), sequences)?;
    let (_, analytic) = loss_and_gradients(params, &batch, actions, targets, delta)?;
    let mut probe = params.clone();
    let mut per_tensor = [("", 0.0); 5];
    for (k, name) in TENSOR_NAMES.iter().enumerate() {
        let mut worst = 0.0_f64;
        for j in 0..params.tensors()[k].len() {
            let original = probe.tensors()[k][j];
            probe.tensors_mut()[k][j] = original + eps;
            let up = sequence_loss(&probe, sequences, actions, targets, delta)?;
            probe.tensors_mut()[k][j] = original - eps;
            let down = sequence_loss(&probe, sequences, actions, targets, delta)?;
            probe.tensors_mut()[k][j] = original;
            let numeric = (up - down) / (2.0 * eps);
            let exact = analytic.tensors()[k][j];
            let scale = numeric.abs().max(exact.abs()).max(GRADCHECK_FLOOR);
            worst = worst.max((numeric - exact).abs() / scale);
        }
        per_tensor[k] = (name, worst);
    }
    let max_rel_error = per_tensor.iter().map(|t| t.1).fold(0.0, f64::max);
    Ok(GradCheck {
        per_tensor,
        max_rel_error,
    })
}
