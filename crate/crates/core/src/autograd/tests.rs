use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::Error;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn sigmoid_of_zero_is_half() {
    let mut g = Graph::new();
    let x = g.constant(Array::vector(vec![0.0, 0.0]));
    let y = g.sigmoid(x).unwrap();
    assert_eq!(g.value(y).data(), &[0.5, 0.5]);
}

#[test]
fn prelu_negative_branch_uses_slope() {
    let mut g = Graph::new();
    let x = g.constant(Array::scalar(-2.0));
    let a = g.constant(Array::scalar(0.25));
    let y = g.prelu(x, a).unwrap();
    assert_eq!(g.value(y).item(), -0.5);
}

#[test]
fn softmax_of_equal_scores_is_uniform() {
    let mut g = Graph::new();
    let x = g.constant(Array::vector(vec![1.0, 1.0, 1.0]));
    let y = g.softmax(x).unwrap();
    assert!(close(g.value(y).data(), &[1.0 / 3.0; 3], 1e-15));
}

#[test]
fn identity_matmul_returns_input() {
    let mut g = Graph::new();
    let i3 = g.constant(Array::identity(3));
    let v = g.constant(Array::vector(vec![0.3, -1.2, 7.0]));
    let y = g.matmul(i3, v).unwrap();
    assert_eq!(g.value(y).data(), &[0.3, -1.2, 7.0]);
}

#[test]
fn shape_mismatch_names_primitive_and_shapes() {
    let mut g = Graph::new();
    let w = g.constant(Array::zeros(&[2, 3]));
    let v = g.constant(Array::vector(vec![1.0, 2.0]));
    match g.matmul(w, v) {
        Err(Error::Shape {
            primitive,
            left,
            right,
        }) => {
            assert_eq!(primitive, "matmul");
            assert_eq!(left, vec![2, 3]);
            assert_eq!(right, vec![2]);
        }
        other => panic!("unexpected {other:?}"),
    }
    let a = g.constant(Array::vector(vec![1.0, 2.0, 3.0]));
    assert!(matches!(g.add(a, v), Err(Error::Shape { primitive: "add", .. })));
}

#[test]
fn sum_of_squares_gradient_is_twice_input() {
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![1.0, 2.0, 3.0]));
    let r = g.sum_of_squares(x).unwrap();
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0, 6.0]);
}

#[test]
fn sigmoid_gradient_at_zero_is_quarter() {
    let mut g = Graph::new();
    let w = g.param(Array::scalar(0.0));
    let r = g.sigmoid(w).unwrap();
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.get(w).unwrap().item(), 0.25);
}

#[test]
fn backward_rejects_non_scalar_root() {
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![1.0, 2.0]));
    let y = g.tanh(x).unwrap();
    assert!(matches!(g.backward(y), Err(Error::NonScalarRoot(s)) if s == vec![2]));
}

#[test]
fn foreign_nodes_are_detached() {
    let mut g1 = Graph::new();
    let mut g2 = Graph::new();
    let x = g1.param(Array::scalar(1.0));
    let y = g2.param(Array::scalar(1.0));
    assert!(matches!(g2.add(x, y), Err(Error::DetachedNode)));
    assert!(matches!(g2.backward(x), Err(Error::DetachedNode)));
}

#[test]
fn backward_accumulates_until_zeroed() {
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![1.0, -2.0]));
    let r = g.sum_of_squares(x).unwrap();
    let first = g.backward(r).unwrap().get(x).unwrap().clone();
    let twice = g.backward(r).unwrap().get(x).unwrap().clone();
    assert_eq!(twice.data(), &[4.0, -8.0]);
    g.zero_gradients();
    let again = g.backward(r).unwrap().get(x).unwrap().clone();
    assert_eq!(again, first);
}

#[test]
fn unreached_parameter_gets_zero_gradient() {
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![1.0, 2.0]));
    let unused = g.param(Array::vector(vec![5.0]));
    let r = g.sum(x).unwrap();
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.get(unused).unwrap().data(), &[0.0]);
}

#[test]
fn dropout_identities_and_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![1.0, 2.0, 3.0]));
    let y = g.dropout(x, 0.0, Mode::Train, &mut rng).unwrap();
    assert_eq!(g.value(y).data(), &[1.0, 2.0, 3.0]);
    let z = g.dropout(x, 0.7, Mode::Eval, &mut rng).unwrap();
    assert_eq!(g.value(z).data(), &[1.0, 2.0, 3.0]);
    assert!(g.dropout(x, 1.0, Mode::Train, &mut rng).is_err());
    assert!(g.dropout(x, -0.1, Mode::Train, &mut rng).is_err());
}

#[test]
fn inverted_dropout_preserves_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Graph::new();
    let x = g.constant(Array::vector(vec![1.0; 100_000]));
    let y = g.dropout(x, 0.4, Mode::Train, &mut rng).unwrap();
    let out = g.value(y).data();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    assert!((0.98..=1.02).contains(&mean), "mean {mean}");
    assert!(out.iter().all(|&v| v == 0.0 || (v - 1.0 / 0.6).abs() < 1e-15));
}

#[test]
fn dropout_gradient_follows_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut g = Graph::new();
    let x = g.param(Array::vector(vec![0.5; 64]));
    let y = g.dropout(x, 0.5, Mode::Train, &mut rng).unwrap();
    let mask: Vec<f64> = g.value(y).data().iter().map(|v| v / 0.5).collect();
    let r = g.sum(y).unwrap();
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), mask.as_slice());
}

// Every primitive against central differences at 20 random points.

fn rand_array(rng: &mut ChaCha8Rng, shape: &[usize]) -> Array {
    let n: usize = shape.iter().product();
    Array::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

/// Builds `sum(w ⊙ prim(inputs))` with a fixed random weighting so every
/// output entry influences the root.
fn check_primitive(prim: Primitive, shapes: &[&[usize]], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let mut inputs: Vec<Array> = shapes.iter().map(|s| rand_array(&mut rng, s)).collect();
        if prim == Primitive::PRelu {
            // keep clear of the kink
            for v in inputs[0].data_mut() {
                if v.abs() < 0.05 {
                    *v += 0.1;
                }
            }
        }
        let probe = {
            let mut g = Graph::new();
            let vs: Vec<Var> = inputs.iter().map(|a| g.constant(a.clone())).collect();
            let y = g.apply(prim.clone(), &vs).unwrap();
            g.value(y).len()
        };
        let weights = Array::vector((0..probe).map(|_| rng.random_range(-1.0..1.0)).collect());
        let p = prim.clone();
        let report = gradient_check(&inputs, 1e-5, move |g, vs| {
            let y = g.apply(p.clone(), vs)?;
            let shape = g.value(y).shape().to_vec();
            let w = g.constant(Array::new(shape, weights.data().to_vec())?);
            let wy = g.mul(y, w)?;
            g.sum(wy)
        })
        .unwrap();
        assert!(
            report.max_relative_error < 1e-4,
            "{} trial {trial}: {report:?}",
            prim.name()
        );
    }
}

#[test]
fn primitives_match_finite_differences() {
    check_primitive(Primitive::MatMul, &[&[3, 4], &[4]], 1);
    check_primitive(Primitive::MatMul, &[&[2, 3], &[3, 2]], 2);
    check_primitive(Primitive::Add, &[&[5], &[5]], 3);
    check_primitive(Primitive::Sub, &[&[5], &[5]], 4);
    check_primitive(Primitive::Mul, &[&[5], &[5]], 5);
    check_primitive(Primitive::Concat, &[&[2], &[3], &[1]], 6);
    check_primitive(Primitive::Sigmoid, &[&[4]], 7);
    check_primitive(Primitive::Tanh, &[&[4]], 8);
    check_primitive(Primitive::PRelu, &[&[6], &[1]], 9);
    check_primitive(Primitive::Softmax, &[&[5]], 10);
    check_primitive(Primitive::Dot, &[&[4], &[4]], 11);
    check_primitive(Primitive::Scale(-1.7), &[&[4]], 12);
    check_primitive(Primitive::ScaleBy, &[&[4], &[1]], 13);
    check_primitive(Primitive::SumOfSquares, &[&[4]], 14);
    check_primitive(Primitive::Sum, &[&[4]], 15);
    check_primitive(Primitive::Slice { start: 1, len: 2 }, &[&[4]], 16);
    check_primitive(Primitive::AddN, &[&[4], &[4], &[4]], 17);
    check_primitive(Primitive::LstmCell, &[&[3], &[3], &[3], &[3], &[3]], 18);
}

#[test]
fn linear_layer_gradient_check_is_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let params = vec![rand_array(&mut rng, &[3, 4]), rand_array(&mut rng, &[3])];
    let x = rand_array(&mut rng, &[4]);
    let report = gradient_check(&params, 1e-5, |g, vs| {
        let xv = g.constant(x.clone());
        let y = g.affine(vs[0], xv, vs[1])?;
        g.sum_of_squares(y)
    })
    .unwrap();
    assert!(report.max_relative_error < 1e-6, "{report:?}");
    assert_eq!(report.entries_checked, 15);
}

#[test]
fn constant_direction_has_zero_gradients() {
    let params = vec![Array::vector(vec![0.3, -0.2]), Array::vector(vec![9.0])];
    let mut g = Graph::new();
    let vs: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let r = g.sum_of_squares(vs[0]).unwrap();
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.get(vs[1]).unwrap().data(), &[0.0]);
    let report = gradient_check(&params, 1e-5, |g, vs| g.sum_of_squares(vs[0])).unwrap();
    assert!(report.max_relative_error < 1e-8);
}

#[test]
fn gradient_check_rejects_non_finite_loss() {
    let params = vec![Array::scalar(1.0)];
    let r = gradient_check(&params, 1e-5, |g, vs| {
        let big = g.scale(vs[0], f64::MAX)?;
        g.scale(big, 10.0)
    });
    assert!(r.is_err());
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(xs in prop::collection::vec(-50.0f64..50.0, 1..40)) {
        let mut g = Graph::new();
        let x = g.constant(Array::vector(xs));
        let y = g.softmax(x).unwrap();
        let v = g.value(y).data();
        prop_assert!(v.iter().all(|&p| p >= 0.0));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backward_is_additive_over_losses(
        xs in prop::collection::vec(-2.0f64..2.0, 4),
        ws in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let grad_of = |which: u8| {
            let mut g = Graph::new();
            let x = g.param(Array::vector(xs.clone()));
            let w = g.constant(Array::vector(ws.clone()));
            let t = g.tanh(x).unwrap();
            let l1 = g.dot(t, w).unwrap();
            let l2 = g.sum_of_squares(x).unwrap();
            let root = match which {
                1 => l1,
                2 => l2,
                _ => g.add(l1, l2).unwrap(),
            };
            g.backward(root).unwrap().get(x).unwrap().clone()
        };
        let (a, b, both) = (grad_of(1), grad_of(2), grad_of(3));
        for k in 0..4 {
            prop_assert!((a.data()[k] + b.data()[k] - both.data()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_leaves_values_untouched(xs in prop::collection::vec(-3.0f64..3.0, 3)) {
        let mut g = Graph::new();
        let x = g.param(Array::vector(xs.clone()));
        let s = g.sigmoid(x).unwrap();
        let r = g.sum_of_squares(s).unwrap();
        let before = g.value(s).clone();
        g.backward(r).unwrap();
        prop_assert_eq!(g.value(x).data(), xs.as_slice());
        prop_assert_eq!(g.value(s), &before);
    }
}
