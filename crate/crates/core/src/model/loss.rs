use super::{MlpModel, ParamVector};
use crate::error::{Error, Result};

/// Scores are clamped into `[SCORE_CLIP, 1 - SCORE_CLIP]` before logarithms.
pub const SCORE_CLIP: f64 = 1e-12;

/// Mean binary cross-entropy, `-[y ln s + (1 - y) ln(1 - s)]` averaged over the batch.
pub fn bce_loss(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| sample_loss(s, y))
        .sum();
    Ok(total / scores.len() as f64)
}

#[inline]
fn sample_loss(score: f64, label: u8) -> f64 {
    let s = score.clamp(SCORE_CLIP, 1.0 - SCORE_CLIP);
    if label == 1 {
        -s.ln()
    } else {
        -(1.0 - s).ln()
    }
}

fn check_batch(model: &MlpModel, xs: &[&[f64]], ys: &[u8]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if xs.len() != ys.len() {
        return Err(Error::shape(format!(
            "{} samples but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let d = model.arch().input_dim();
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::shape(format!(
            "sample has {} features, model expects {d}",
            bad.len()
        )));
    }
    if let Some(&y) = ys.iter().find(|&&y| y > 1) {
        return Err(Error::shape(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

/// Gradient of the mean cross-entropy with respect to every parameter.
pub fn loss_gradient(model: &MlpModel, xs: &[&[f64]], ys: &[u8]) -> Result<ParamVector> {
    loss_and_gradient(model, xs, ys).map(|(_, g)| g)
}

/// Mean cross-entropy and its gradient in one pass. Samples are accumulated
/// in the order given.
pub fn loss_and_gradient(model: &MlpModel, xs: &[&[f64]], ys: &[u8]) -> Result<(f64, ParamVector)> {
    check_batch(model, xs, ys)?;
    let arch = model.arch();
    let act = arch.activation();
    let p = model.params().as_slice();
    let layers = arch.layers();
    let mut grad = vec![0.0; p.len()];
    let mut loss = 0.0;

    for (x, &y) in xs.iter().zip(ys) {
        let trace = model.trace(x);
        let score = trace.post[layers.len()][0];
        loss += sample_loss(score, y);

        // d(loss)/d(logit) for logistic + cross-entropy.
        let mut delta = vec![score - f64::from(y)];
        for (l, slot) in layers.iter().enumerate().rev() {
            let input = &trace.post[l];
            for (j, &d) in delta.iter().enumerate() {
                let row = slot.weights + j * slot.fan_in;
                for (g, &a) in grad[row..row + slot.fan_in].iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[slot.biases + j] += d;
            }
            if l == 0 {
                break;
            }
            let z_prev = &trace.pre[l - 1];
            delta = (0..slot.fan_in)
                .map(|i| {
                    let back: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(j, &d)| p[slot.weights + j * slot.fan_in + i] * d)
                        .sum();
                    back * act.derivative(z_prev[i], input[i])
                })
                .collect();
        }
    }

    let n = xs.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    Ok((loss / n, ParamVector::new(grad)))
}
