//! Every differentiable primitive is checked against central finite
//! differences in 64-bit mode, on randomized small shapes.

use v2vforge_tensor::{check_gradients, Axis, NodeId, SplitRng, Tape, Tensor};

const TOL: f64 = 1e-6;
const STEP: f64 = 1e-5;

fn randn(shape: &[usize], rng: &mut SplitRng) -> Tensor<f64> {
    Tensor::randn(shape, 0.7, rng)
}

fn check<F>(name: &str, params: Vec<(String, Tensor<f64>)>, f: F)
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> NodeId,
{
    let report = check_gradients(f, &params, STEP).unwrap();
    assert!(
        report.max_rel_error <= TOL,
        "{name}: rel err {} at {}[{}]",
        report.max_rel_error,
        report.worst_param,
        report.worst_index
    );
}

#[test]
fn matmul_gradients() {
    for seed in 0..4 {
        let mut rng = SplitRng::new(seed);
        let m = 1 + rng.index(5);
        let k = 1 + rng.index(5);
        let n = 1 + rng.index(5);
        let params = vec![
            ("a".to_string(), randn(&[m, k], &mut rng)),
            ("b".to_string(), randn(&[k, n], &mut rng)),
        ];
        let target = randn(&[m, n], &mut rng);
        check("matmul", params, move |tape, ids| {
            let y = tape.matmul(ids[0], ids[1]);
            let t = tape.leaf(target.clone());
            tape.mse(y, t)
        });
    }
}

#[test]
fn elementwise_gradients() {
    let mut rng = SplitRng::new(10);
    let shape = [3, 5];
    let params = vec![
        ("a".to_string(), randn(&shape, &mut rng)),
        ("b".to_string(), randn(&shape, &mut rng)),
    ];
    let target = randn(&shape, &mut rng);
    check("add+mul+sub+scalars", params, move |tape, ids| {
        let s = tape.add(ids[0], ids[1]);
        let p = tape.mul(s, ids[0]);
        let d = tape.sub(p, ids[1]);
        let sc = tape.mul_scalar(d, 0.7);
        let sh = tape.add_scalar(sc, 0.3);
        let t = tape.leaf(target.clone());
        tape.mse(sh, t)
    });
}

#[test]
fn row_broadcast_gradients() {
    let mut rng = SplitRng::new(11);
    let params = vec![
        ("x".to_string(), randn(&[4, 6], &mut rng)),
        ("bias".to_string(), randn(&[1, 6], &mut rng)),
        ("scale".to_string(), randn(&[1, 6], &mut rng)),
    ];
    let target = randn(&[4, 6], &mut rng);
    check("add_row+mul_row", params, move |tape, ids| {
        let y = tape.add_row(ids[0], ids[1]);
        let z = tape.mul_row(y, ids[2]);
        let t = tape.leaf(target.clone());
        tape.mse(z, t)
    });
}

#[test]
fn reshape_transpose_gradients() {
    let mut rng = SplitRng::new(12);
    let params = vec![("x".to_string(), randn(&[3, 4], &mut rng))];
    let target = randn(&[2, 6], &mut rng);
    check("reshape+transpose", params, move |tape, ids| {
        let t1 = tape.transpose(ids[0]);
        let r = tape.reshape(t1, vec![2, 6]);
        let t = tape.leaf(target.clone());
        tape.mse(r, t)
    });
}

#[test]
fn concat_slice_gradients() {
    let mut rng = SplitRng::new(13);
    let params = vec![
        ("a".to_string(), randn(&[2, 4], &mut rng)),
        ("b".to_string(), randn(&[3, 4], &mut rng)),
        ("c".to_string(), randn(&[5, 2], &mut rng)),
    ];
    let target = randn(&[2, 3], &mut rng);
    check("concat+slice both axes", params, move |tape, ids| {
        let cat = tape.concat(&[ids[0], ids[1]], Axis::Rows);
        let wide = tape.concat(&[cat, ids[2]], Axis::Cols);
        let block = tape.slice(wide, Axis::Rows, 1, 2);
        let cols = tape.slice(block, Axis::Cols, 2, 3);
        let t = tape.leaf(target.clone());
        tape.mse(cols, t)
    });
}

#[test]
fn softmax_gradients_and_row_sums() {
    for seed in 0..3 {
        let mut rng = SplitRng::new(100 + seed);
        let rows = 1 + rng.index(4);
        let cols = 2 + rng.index(6);
        let params = vec![("x".to_string(), randn(&[rows, cols], &mut rng))];
        let target = randn(&[rows, cols], &mut rng);

        let mut tape = Tape::new();
        let x = tape.param("x", params[0].1.clone());
        let y = tape.softmax(x);
        for r in 0..rows {
            let sum: f64 = tape.value(y).data()[r * cols..(r + 1) * cols].iter().sum();
            assert!((sum - 1.0).abs() <= 1e-6);
        }

        check("softmax", params, move |tape, ids| {
            let y = tape.softmax(ids[0]);
            let t = tape.leaf(target.clone());
            tape.mse(y, t)
        });
    }
}

#[test]
fn layer_norm_gradients() {
    for seed in 0..3 {
        let mut rng = SplitRng::new(200 + seed);
        let rows = 1 + rng.index(3);
        let cols = 3 + rng.index(8);
        let params = vec![("x".to_string(), randn(&[rows, cols], &mut rng))];
        let target = randn(&[rows, cols], &mut rng);
        check("layer_norm", params, move |tape, ids| {
            let y = tape.layer_norm(ids[0], 1e-5);
            let t = tape.leaf(target.clone());
            tape.mse(y, t)
        });
    }
}

#[test]
fn gelu_gradients() {
    let mut rng = SplitRng::new(14);
    let params = vec![("x".to_string(), randn(&[4, 8], &mut rng))];
    let target = randn(&[4, 8], &mut rng);
    check("gelu", params, move |tape, ids| {
        let y = tape.gelu(ids[0]);
        let t = tape.leaf(target.clone());
        tape.mse(y, t)
    });
}

#[test]
fn mse_direct_gradient() {
    let mut rng = SplitRng::new(15);
    let params = vec![
        ("a".to_string(), randn(&[6], &mut rng)),
        ("b".to_string(), randn(&[6], &mut rng)),
    ];
    check("mse", params, move |tape, ids| tape.mse(ids[0], ids[1]));
}

#[test]
fn composite_random_graphs() {
    // A few deeper mixed graphs over random small shapes.
    for seed in 0..3 {
        let mut rng = SplitRng::new(300 + seed);
        let m = 2 + rng.index(3);
        let k = 2 + rng.index(3);
        let params = vec![
            ("w1".to_string(), randn(&[k, 8], &mut rng)),
            ("b1".to_string(), randn(&[1, 8], &mut rng)),
            ("w2".to_string(), randn(&[8, 4], &mut rng)),
            ("x".to_string(), randn(&[m, k], &mut rng)),
        ];
        let target = randn(&[m, 4], &mut rng);
        check("mlp composite", params, move |tape, ids| {
            let h = tape.matmul(ids[3], ids[0]);
            let h = tape.add_row(h, ids[1]);
            let h = tape.layer_norm(h, 1e-5);
            let h = tape.gelu(h);
            let y = tape.matmul(h, ids[2]);
            let sm = tape.softmax(y);
            let t = tape.leaf(target.clone());
            tape.mse(sm, t)
        });
    }
}
