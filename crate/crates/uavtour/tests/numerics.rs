use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavtour::numerics::{AdamState, NumericsError, Param, Tape, Tensor, Var};

fn mat(rows: usize, cols: usize, data: &[f64]) -> Tensor {
    Tensor::matrix(rows, cols, data.to_vec()).unwrap()
}

#[test]
fn matmul_identity_passes_through() {
    let mut t = Tape::new();
    let i2 = t.leaf(mat(2, 2, &[1.0, 0.0, 0.0, 1.0]));
    let v = t.leaf(mat(2, 1, &[3.0, 4.0]));
    let out = t.matmul(i2, v).unwrap();
    assert_eq!(t.value(out).data(), &[3.0, 4.0]);
    assert_eq!(t.value(out).shape(), &[2, 1]);
}

#[test]
fn matmul_row_times_column_is_dot_product() {
    let mut t = Tape::new();
    let a = t.leaf(mat(1, 2, &[1.0, 2.0]));
    let b = t.leaf(mat(2, 1, &[3.0, 4.0]));
    let out = t.matmul(a, b).unwrap();
    assert_eq!(t.value(out).data(), &[11.0]);
}

#[test]
fn matmul_rejects_mismatched_inner_dims() {
    let mut t = Tape::new();
    let a = t.leaf(mat(2, 3, &[0.0; 6]));
    let b = t.leaf(mat(2, 2, &[0.0; 4]));
    assert!(matches!(
        t.matmul(a, b),
        Err(NumericsError::ShapeMismatch { .. })
    ));
}

#[test]
fn elementwise_values() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![0.0, -1.5, 2.0]));
    let th = t.tanh(x);
    assert_eq!(t.value(th).data()[0], 0.0);
    let r = t.relu(x);
    assert_eq!(t.value(r).data(), &[0.0, 0.0, 2.0]);
}

#[test]
fn sigmoid_gradient_at_zero_is_quarter() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::scalar(0.0));
    let s = t.sigmoid(x);
    t.backward(s).unwrap();
    assert_relative_eq!(t.grad(x)[0], 0.25, max_relative = 1e-12);
}

#[test]
fn softmax_uniform_on_equal_inputs() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![0.0, 0.0]));
    let y = t.softmax(x).unwrap();
    assert_eq!(t.value(y).data(), &[0.5, 0.5]);
}

#[test]
fn softmax_zeroes_masked_entries_exactly() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![
        f64::NEG_INFINITY,
        0.0,
        f64::NEG_INFINITY,
        0.0,
    ]));
    let y = t.softmax(x).unwrap();
    assert_eq!(t.value(y).data(), &[0.0, 0.5, 0.0, 0.5]);
}

#[test]
fn softmax_matches_direct_formula() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![1.0, 2.0, 3.0]));
    let y = t.softmax(x).unwrap();
    let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).sum();
    for (i, &v) in [1.0f64, 2.0, 3.0].iter().enumerate() {
        assert_relative_eq!(t.value(y).data()[i], v.exp() / z, max_relative = 1e-12);
    }
}

#[test]
fn softmax_all_masked_is_an_error() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![f64::NEG_INFINITY; 3]));
    assert!(matches!(t.softmax(x), Err(NumericsError::AllMasked)));
}

#[test]
fn backward_of_sum_is_ones() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![5.0, -2.0, 0.5]));
    let s = t.sum(x);
    t.backward(s).unwrap();
    assert_eq!(t.grad(x), &[1.0, 1.0, 1.0]);
}

#[test]
fn backward_of_sum_of_squares_is_two_x() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![1.0, 2.0]));
    let xx = t.mul(x, x).unwrap();
    let s = t.sum(xx);
    t.backward(s).unwrap();
    assert_eq!(t.grad(x), &[2.0, 4.0]);
}

#[test]
fn backward_twice_accumulates_exactly_double() {
    let build = |t: &mut Tape| -> (Var, Var) {
        let x = t.leaf(Tensor::vector(vec![0.3, -0.7, 1.1]));
        let h = t.tanh(x);
        let hh = t.mul(h, h).unwrap();
        let s = t.sum(hh);
        (x, s)
    };
    let mut once = Tape::new();
    let (x1, s1) = build(&mut once);
    once.backward(s1).unwrap();

    let mut twice = Tape::new();
    let (x2, s2) = build(&mut twice);
    twice.backward(s2).unwrap();
    twice.backward(s2).unwrap();

    for (a, b) in once.grad(x1).iter().zip(twice.grad(x2)) {
        assert_relative_eq!(2.0 * a, *b, max_relative = 1e-15);
    }
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(
        t.backward(x),
        Err(NumericsError::NonScalarLoss { numel: 2 })
    ));
}

#[test]
fn log_at_rejects_zero_probability() {
    let mut t = Tape::new();
    let p = t.leaf(Tensor::vector(vec![0.0, 1.0]));
    assert!(matches!(
        t.log_at(p, 0),
        Err(NumericsError::NonPositiveLog { index: 0, .. })
    ));
}

/// Central finite differences of `f` at `x0` with step `h`.
fn finite_diff(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x0.len());
    let mut x = x0.to_vec();
    for i in 0..x0.len() {
        x[i] = x0[i] + h;
        let fp = f(&x);
        x[i] = x0[i] - h;
        let fm = f(&x);
        x[i] = x0[i];
        out.push((fp - fm) / (2.0 * h));
    }
    out
}

fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

#[test]
fn matmul_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a0: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b0: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w0: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();

    // loss(A, B) = sum(W ⊙ (A·B)) gives non-uniform adjoints on the product.
    let eval = |a_data: &[f64], b_data: &[f64]| -> f64 {
        let mut t = Tape::new();
        let a = t.leaf(mat(4, 3, a_data));
        let b = t.leaf(mat(3, 2, b_data));
        let w = t.leaf(mat(4, 2, &w0));
        let c = t.matmul(a, b).unwrap();
        let wc = t.mul(w, c).unwrap();
        let s = t.sum(wc);
        t.value(s).data()[0]
    };

    let mut t = Tape::new();
    let a = t.leaf(mat(4, 3, &a0));
    let b = t.leaf(mat(3, 2, &b0));
    let w = t.leaf(mat(4, 2, &w0));
    let c = t.matmul(a, b).unwrap();
    let wc = t.mul(w, c).unwrap();
    let s = t.sum(wc);
    t.backward(s).unwrap();

    let fd_a = finite_diff(&|x| eval(x, &b0), &a0, 1e-5);
    let fd_b = finite_diff(&|x| eval(&a0, x), &b0, 1e-5);
    assert!(max_rel_err(t.grad(a), &fd_a) < 1e-6);
    assert!(max_rel_err(t.grad(b), &fd_b) < 1e-6);
}

/// A composite graph touching every op the sequence model uses: matmul,
/// add, scale, tanh, sigmoid, relu, transpose, column, slice_rows, softmax
/// (with one masked entry), and log_at.
fn composite_loss(params: &[f64]) -> f64 {
    let (w_data, x_data) = params.split_at(12);
    let mut t = Tape::new();
    let (_, _, loss) = composite_graph(&mut t, w_data, x_data);
    t.value(loss).data()[0]
}

fn composite_graph(t: &mut Tape, w_data: &[f64], x_data: &[f64]) -> (Var, Var, Var) {
    let w = t.leaf(mat(4, 3, w_data));
    let x = t.leaf(mat(3, 2, x_data));
    let z = t.matmul(w, x).unwrap(); // [4x2]
    let top = t.slice_rows(z, 0, 2).unwrap(); // [2x2]
    let bot = t.slice_rows(z, 2, 2).unwrap(); // [2x2]
    let gate = t.sigmoid(top);
    let cand = t.tanh(bot);
    let mixed = t.mul(gate, cand).unwrap();
    let col = t.column(mixed, 1).unwrap(); // [2x1]
    let row = t.transpose(col).unwrap(); // [1x2]
    let scaled = t.scale(row, 3.0);
    let clipped = t.tanh(scaled);
    let mask = t.leaf(mat(1, 2, &[0.0, f64::NEG_INFINITY]));
    let masked = t.add(clipped, mask).unwrap();
    let probs = t.softmax(masked).unwrap();
    let logp = t.log_at(probs, 0).unwrap();
    let act = t.relu(z);
    let reg = t.sum(act);
    let reg_small = t.scale(reg, 0.1);
    let loss = t.add(logp, reg_small).unwrap();
    (w, x, loss)
}

#[test]
fn composite_graph_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let params: Vec<f64> = (0..18).map(|_| rng.gen_range(-0.9..0.9)).collect();

    let mut t = Tape::new();
    let (w, x, loss) = composite_graph(&mut t, &params[..12], &params[12..]);
    t.backward(loss).unwrap();
    let mut analytic = t.grad(w).to_vec();
    analytic.extend_from_slice(t.grad(x));

    let fd = finite_diff(&composite_loss, &params, 1e-5);
    assert!(
        max_rel_err(&analytic, &fd) < 1e-4,
        "max rel err {}",
        max_rel_err(&analytic, &fd)
    );
}

#[test]
fn adam_leaves_params_unchanged_on_zero_gradient() {
    let mut p = Param::new(Tensor::vector(vec![1.0, -2.0]));
    let mut opt = AdamState::new(1e-4, &[2]);
    opt.step(&mut [&mut p]).unwrap();
    assert_eq!(p.value.data(), &[1.0, -2.0]);
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut p = Param::new(Tensor::scalar(0.0));
    p.accumulate_grad(&[1.0]);
    let mut opt = AdamState::new(1e-4, &[1]);
    opt.step(&mut [&mut p]).unwrap();
    // Bias correction makes m_hat = g and v_hat = g^2 on step one, so the
    // update is lr * g/(|g| + eps) ~= lr.
    assert_relative_eq!(p.value.data()[0], -1e-4, max_relative = 1e-6);
    assert_eq!(p.grad.data(), &[0.0]);
}

#[test]
fn adam_descends_quadratic() {
    let mut p = Param::new(Tensor::scalar(1.0));
    let mut opt = AdamState::new(0.01, &[1]);
    let mut prev = 1.0f64;
    for _ in 0..100 {
        let theta = p.value.data()[0];
        p.accumulate_grad(&[2.0 * theta]);
        opt.step(&mut [&mut p]).unwrap();
        let now = p.value.data()[0].abs();
        assert!(now < prev, "|theta| must shrink: {} -> {}", prev, now);
        prev = now;
    }
}

#[test]
fn adam_rejects_nan_gradients() {
    let mut p = Param::new(Tensor::scalar(1.0));
    p.accumulate_grad(&[f64::NAN]);
    let mut opt = AdamState::new(1e-4, &[1]);
    assert!(matches!(
        opt.step(&mut [&mut p]),
        Err(NumericsError::NonFiniteGradient)
    ));
    assert_eq!(p.value.data(), &[1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn softmax_is_a_probability_vector(xs in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(xs));
        let y = t.softmax(x).unwrap();
        let data = t.value(y).data();
        prop_assert!(data.iter().all(|&p| p >= 0.0));
        let total: f64 = data.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_small_graph_gradient_matches_finite_differences(
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..18).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let mut t = Tape::new();
        let (w, x, loss) = composite_graph(&mut t, &params[..12], &params[12..]);
        t.backward(loss).unwrap();
        let mut analytic = t.grad(w).to_vec();
        analytic.extend_from_slice(t.grad(x));
        let fd = finite_diff(&composite_loss, &params, 1e-5);
        prop_assert!(max_rel_err(&analytic, &fd) < 1e-4);
    }
}
