//! Central finite-difference gradient checking.
//!
//! The oracle only ever evaluates forward passes, so it stays independent of
//! the backward implementation it is used to verify. Checks run in `f64`.

/// Central difference of `eval` at `inputs[which][coord]`.
///
/// `eval` must be a pure function of the input data.
pub fn fd_gradient(
    eval: &mut dyn FnMut(&[Vec<f64>]) -> f64,
    inputs: &[Vec<f64>],
    which: usize,
    coord: usize,
    step: f64,
) -> f64 {
    let mut probe = inputs.to_vec();
    probe[which][coord] += step;
    let plus = eval(&probe);
    probe[which][coord] -= 2.0 * step;
    let minus = eval(&probe);
    (plus - minus) / (2.0 * step)
}

/// Relative error between an analytic and a numeric gradient element.
///
/// Elements whose combined magnitude falls below `1e-8` are compared
/// absolutely at that scale instead of relatively.
pub fn grad_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs() + numeric.abs();
    if scale < 1e-8 {
        if diff <= 1e-8 {
            0.0
        } else {
            diff / scale.max(f64::MIN_POSITIVE)
        }
    } else {
        diff / scale
    }
}

/// Worst-case element error over full gradient buffers.
pub fn max_grad_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| grad_error(a, n))
        .fold(0.0, f64::max)
}

/// Check a full input's gradient against central differences.
///
/// Returns the worst relative error over all coordinates of `inputs[which]`.
pub fn check_input_gradient(
    eval: &mut dyn FnMut(&[Vec<f64>]) -> f64,
    inputs: &[Vec<f64>],
    which: usize,
    analytic: &[f64],
    step: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for coord in 0..inputs[which].len() {
        let numeric = fd_gradient(eval, inputs, which, coord, step);
        worst = worst.max(grad_error(analytic[coord], numeric));
    }
    worst
}

/// Like [`check_input_gradient`] but probing only the given coordinates;
/// used on graphs too large for an exhaustive sweep.
pub fn check_sampled_gradient(
    eval: &mut dyn FnMut(&[Vec<f64>]) -> f64,
    inputs: &[Vec<f64>],
    which: usize,
    analytic: &[f64],
    coords: &[usize],
    step: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for &coord in coords {
        let numeric = fd_gradient(eval, inputs, which, coord, step);
        worst = worst.max(grad_error(analytic[coord], numeric));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::graph::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const STEP: f64 = 1e-5;
    const TOL: f64 = 1e-4;

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Build-and-run helper: `build` wires a graph from leaf data and returns
    /// the loss node; gradients of every leaf are then FD-verified.
    fn assert_grads_match(
        build: &dyn Fn(&mut Graph<f64>, &[Vec<f64>]) -> crate::tensor::graph::TensorId,
        inputs: &[Vec<f64>],
    ) {
        let mut eval = |data: &[Vec<f64>]| {
            let mut g = Graph::new();
            let loss = build(&mut g, data);
            g.scalar(loss)
        };

        let mut g = Graph::new();
        let loss = build(&mut g, inputs);
        g.backward(loss).unwrap();

        for which in 0..inputs.len() {
            let analytic = g.grad(crate::tensor::graph::TensorId(which)).unwrap().to_vec();
            let worst = check_input_gradient(&mut eval, inputs, which, &analytic, STEP);
            assert!(worst <= TOL, "leaf {which}: max rel err {worst:.3e} exceeds {TOL:.0e}");
        }
    }

    #[test]
    fn conv2d_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input = random_vec(&mut rng, 2 * 3 * 8 * 8);
        let weight = random_vec(&mut rng, 4 * 3 * 3 * 3);
        let bias = random_vec(&mut rng, 4);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![2, 3, 8, 8], true).unwrap();
            let w = g.leaf(data[1].clone(), vec![4, 3, 3, 3], true).unwrap();
            let b = g.leaf(data[2].clone(), vec![4], true).unwrap();
            let y = g.conv2d(x, w, b, 1, 1).unwrap();
            g.sum_all(y)
        };
        assert_grads_match(&build, &[input, weight, bias]);
    }

    #[test]
    fn strided_conv_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let input = random_vec(&mut rng, 1 * 2 * 9 * 9);
        let weight = random_vec(&mut rng, 3 * 2 * 3 * 3);
        let bias = random_vec(&mut rng, 3);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![1, 2, 9, 9], true).unwrap();
            let w = g.leaf(data[1].clone(), vec![3, 2, 3, 3], true).unwrap();
            let b = g.leaf(data[2].clone(), vec![3], true).unwrap();
            let y = g.conv2d(x, w, b, 2, 1).unwrap();
            g.sum_all(y)
        };
        assert_grads_match(&build, &[input, weight, bias]);
    }

    #[test]
    fn batchnorm_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let input = random_vec(&mut rng, 3 * 2 * 4 * 4);
        let gamma = random_vec(&mut rng, 2);
        let beta = random_vec(&mut rng, 2);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![3, 2, 4, 4], true).unwrap();
            let ga = g.leaf(data[1].clone(), vec![2], true).unwrap();
            let be = g.leaf(data[2].clone(), vec![2], true).unwrap();
            let (y, _, _) = g.batchnorm2d_train(x, ga, be, 1e-5).unwrap();
            // weight the output so the loss is not invariant to normalization
            let w = g.leaf((0..96).map(|i| (i as f64 * 0.13).sin()).collect(), vec![3 * 2 * 4 * 4], false).unwrap();
            let yr = g.reshape(y, vec![3 * 2 * 4 * 4]).unwrap();
            let l = g.smooth_l1_loss(yr, w).unwrap();
            g.sum_all(l)
        };
        assert_grads_match(&build, &[input, gamma, beta]);
    }

    #[test]
    fn maxpool_and_relu_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let input = random_vec(&mut rng, 2 * 2 * 6 * 6);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![2, 2, 6, 6], true).unwrap();
            let r = g.relu(x);
            let p = g.maxpool2d(r, 2, 2).unwrap();
            g.sum_all(p)
        };
        assert_grads_match(&build, &[input]);
    }

    #[test]
    fn linear_and_concat_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let a = random_vec(&mut rng, 3 * 5);
        let b = random_vec(&mut rng, 3 * 3);
        let w = random_vec(&mut rng, 4 * 8);
        let bias = random_vec(&mut rng, 4);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let a = g.leaf(data[0].clone(), vec![3, 5], true).unwrap();
            let b = g.leaf(data[1].clone(), vec![3, 3], true).unwrap();
            let w = g.leaf(data[2].clone(), vec![4, 8], true).unwrap();
            let bias = g.leaf(data[3].clone(), vec![4], true).unwrap();
            let cat = g.concat(a, b, 1).unwrap();
            let y = g.linear(cat, w, bias).unwrap();
            g.sum_all(y)
        };
        assert_grads_match(&build, &[a, b, w, bias]);
    }

    #[test]
    fn softmax_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let input = random_vec(&mut rng, 4 * 6);
        let target = random_vec(&mut rng, 4 * 6);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![4, 6], true).unwrap();
            let t = g.leaf(data[1].clone(), vec![4, 6], true).unwrap();
            let s = g.softmax(x, 1).unwrap();
            g.smooth_l1_loss(s, t).unwrap()
        };
        assert_grads_match(&build, &[input, target]);
    }

    #[test]
    fn composite_chain_matches_end_to_end() {
        // conv -> bn -> relu -> pool -> flatten -> linear -> smooth L1
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let input = random_vec(&mut rng, 2 * 2 * 8 * 8);
        let cw = random_vec(&mut rng, 3 * 2 * 3 * 3);
        let cb = random_vec(&mut rng, 3);
        let gamma = random_vec(&mut rng, 3);
        let beta = random_vec(&mut rng, 3);
        let lw = random_vec(&mut rng, 5 * 48);
        let lb = random_vec(&mut rng, 5);
        let target = random_vec(&mut rng, 2 * 5);
        let build = |g: &mut Graph<f64>, data: &[Vec<f64>]| {
            let x = g.leaf(data[0].clone(), vec![2, 2, 8, 8], true).unwrap();
            let cw = g.leaf(data[1].clone(), vec![3, 2, 3, 3], true).unwrap();
            let cb = g.leaf(data[2].clone(), vec![3], true).unwrap();
            let ga = g.leaf(data[3].clone(), vec![3], true).unwrap();
            let be = g.leaf(data[4].clone(), vec![3], true).unwrap();
            let lw = g.leaf(data[5].clone(), vec![5, 48], true).unwrap();
            let lb = g.leaf(data[6].clone(), vec![5], true).unwrap();
            let t = g.leaf(data[7].clone(), vec![2, 5], true).unwrap();
            let y = g.conv2d(x, cw, cb, 1, 1).unwrap();
            let (y, _, _) = g.batchnorm2d_train(y, ga, be, 1e-5).unwrap();
            let y = g.relu(y);
            let y = g.maxpool2d(y, 2, 2).unwrap();
            let y = g.reshape(y, vec![2, 48]).unwrap();
            let y = g.linear(y, lw, lb).unwrap();
            g.smooth_l1_loss(y, t).unwrap()
        };
        assert_grads_match(&build, &[input, cw, cb, gamma, beta, lw, lb, target]);
    }

    #[test]
    fn tape_replay_reproduces_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let input = random_vec(&mut rng, 2 * 2 * 4 * 4);
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(input, vec![2, 2, 4, 4], true).unwrap();
        let r = g.relu(x);
        let loss = g.sum_all(r);
        g.backward(loss).unwrap();
        let first = g.grad(x).unwrap().to_vec();
        g.zero_all_grads();
        g.backward(loss).unwrap();
        assert_eq!(first, g.grad(x).unwrap());
    }
}
