use super::network::{ResidualModel, Trace};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Pre-activations closer than this to zero are pushed away before
/// differencing, so that no probe crosses a rectifier kink.
const KINK_MARGIN: f64 = 1e-3;

/// Weighted squared loss `alpha * (predict(x) - target)^2`.
pub fn sample_loss(model: &ResidualModel, x: &[f64], target: f64, alpha: f64) -> f64 {
    let e = model.forward(x) - target;
    alpha * e * e
}

/// Analytic gradient of [`sample_loss`] in parameter storage order.
pub fn loss_gradient(model: &ResidualModel, x: &[f64], target: f64, alpha: f64) -> Vec<f64> {
    let mut trace = Trace::default();
    let p = model.forward_trace(x, &mut trace);
    let mut grads = model.zeros_like();
    model.backward(x, &trace, 2.0 * alpha * (p - target), &mut grads);
    grads.parameters().copied().collect()
}

/// Shifts biases so that every pre-activation of `x` sits at least
/// `KINK_MARGIN` from zero, keeping its sign.
pub fn nudge_off_kinks(model: &mut ResidualModel, x: &[f64]) {
    let n = model.layers().len();
    for layer in 0..n {
        let mut trace = Trace::default();
        model.forward_trace(x, &mut trace);
        let pre = trace.pre[layer].clone();
        let l = &mut model.layers_mut()[layer];
        for (b, z) in l.biases.iter_mut().zip(pre) {
            if z.abs() < KINK_MARGIN {
                *b += if z >= 0.0 {
                    2.0 * KINK_MARGIN
                } else {
                    -2.0 * KINK_MARGIN
                };
            }
        }
    }
}

/// Largest relative error between analytic and central-difference
/// gradients, `|a - n| / max(|a|, |n|)`, with components where both are
/// below `1e-10` counted as agreeing. The model is nudged off rectifier
/// kinks first.
pub fn gradient_check(model: &ResidualModel, x: &[f64], target: f64, alpha: f64) -> f64 {
    let mut model = model.clone();
    nudge_off_kinks(&mut model, x);
    let analytic = loss_gradient(&model, x, target, alpha);
    let originals: Vec<f64> = model.parameters().copied().collect();
    let mut worst: f64 = 0.0;
    for (i, (&a, &original)) in analytic.iter().zip(&originals).enumerate() {
        set_param(&mut model, i, original + FD_STEP);
        let up = sample_loss(&model, x, target, alpha);
        set_param(&mut model, i, original - FD_STEP);
        let down = sample_loss(&model, x, target, alpha);
        set_param(&mut model, i, original);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = a.abs().max(numeric.abs());
        if scale < 1e-10 {
            continue;
        }
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

fn set_param(model: &mut ResidualModel, index: usize, value: f64) {
    let mut remaining = index;
    for l in model.layers_mut() {
        if remaining < l.weights.len() {
            l.weights[remaining] = value;
            return;
        }
        remaining -= l.weights.len();
        if remaining < l.biases.len() {
            l.biases[remaining] = value;
            return;
        }
        remaining -= l.biases.len();
    }
    panic!("parameter index {index} out of range");
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn active_model(sizes: &[usize], rng: &mut ChaCha8Rng) -> ResidualModel {
        let mut m = ResidualModel::new(sizes, rng);
        m.layers_mut().last_mut().unwrap().biases[0] = 3.0;
        m
    }

    #[test]
    fn random_pairs_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let m = active_model(&[12, 8, 8, 1], &mut rng);
            let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let err = gradient_check(&m, &x, rng.gen_range(0.0..5.0), rng.gen_range(0.1..1.0));
            assert!(err < 1e-4, "{err}");
        }
    }

    #[test]
    fn zero_weight_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = active_model(&[6, 4, 1], &mut rng);
        let g = loss_gradient(&m, &[0.5; 6], 2.0, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_model_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = active_model(&[5, 1], &mut rng);
        let x = [0.1, -0.4, 0.9, 0.2, 1.0];
        assert!(gradient_check(&m, &x, 1.0, 0.7) < 1e-7);
    }

    #[test]
    fn nudge_keeps_signs_and_clears_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut m = active_model(&[4, 3, 1], &mut rng);
        m.layers_mut()[0].biases = vec![0.0; 3];
        let x = [0.0; 4];
        nudge_off_kinks(&mut m, &x);
        let mut trace = Trace::default();
        m.forward_trace(&x, &mut trace);
        assert!(trace.pre.iter().flatten().all(|z| z.abs() >= KINK_MARGIN));
    }
}
