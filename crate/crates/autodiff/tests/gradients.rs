//! Analytic gradients of every op against central finite differences.

use adequa_autodiff::gradcheck::{central_difference, worst_violation};
use adequa_autodiff::{Result, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIALS: usize = 50;
const STEP: f64 = 1e-5;
const REL: f64 = 1e-4;
const ABS: f64 = 1e-6;

type Build = dyn Fn(&mut Tape, &[Var]) -> Result<Var>;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Scalarize `build`'s output with fixed random weights so every output
/// element receives a distinct upstream gradient.
fn objective(inputs: &[Tensor], weights: &Tensor, build: &Build, record: bool) -> (f64, Option<Vec<Vec<f64>>>) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone(), record).unwrap())
        .collect();
    let out = build(&mut tape, &vars).unwrap();
    let w = tape.constant(weights.clone()).unwrap();
    let weighted = tape.mul(out, w).unwrap();
    let loss = tape.sum(weighted).unwrap();
    let value = tape.item(loss);
    if !record {
        return (value, None);
    }
    let grads = tape.backward(loss).unwrap();
    let g = vars
        .iter()
        .map(|&v| grads.get(v).unwrap().values().to_vec())
        .collect();
    (value, Some(g))
}

fn check(name: &str, inputs: Vec<Tensor>, rng: &mut ChaCha8Rng, build: &Build) -> f64 {
    let out_shape = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone()).unwrap()).collect();
        let out = build(&mut tape, &vars).unwrap();
        tape.value(out).shape().to_vec()
    };
    let weights = random_tensor(rng, &out_shape, -1.0, 1.0);
    let (_, analytic) = objective(&inputs, &weights, build, true);
    let analytic = analytic.unwrap();
    let mut worst: f64 = 0.0;
    for (k, input) in inputs.iter().enumerate() {
        let numeric = central_difference(input.values(), STEP, |x| {
            let mut probe = inputs.clone();
            probe[k] = Tensor::new(input.shape().to_vec(), x.to_vec()).unwrap();
            objective(&probe, &weights, build, false).0
        });
        let v = worst_violation(&analytic[k], &numeric, REL, ABS);
        assert!(v <= 1.0, "{name}: input {k} gradient mismatch (ratio {v})\n a={:?}\n n={numeric:?}", analytic[k]);
        worst = worst.max(v);
    }
    worst
}

fn dim(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=6)
}

fn run(name: &str, seed: u64, mut case: impl FnMut(&mut ChaCha8Rng) -> (Vec<Tensor>, Box<Build>)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..TRIALS {
        let (inputs, build) = case(&mut rng);
        check(name, inputs, &mut rng, build.as_ref());
    }
}

#[test]
fn matmul_gradients() {
    run("matmul", 1, |rng| {
        let (m, k, n) = (dim(rng), dim(rng), dim(rng));
        let a = random_tensor(rng, &[m, k], -2.0, 2.0);
        let b = random_tensor(rng, &[k, n], -2.0, 2.0);
        (vec![a, b], Box::new(|t: &mut Tape, v: &[Var]| t.matmul(v[0], v[1])))
    });
}

#[test]
fn add_sub_mul_gradients() {
    run("add", 2, |rng| {
        let s = [dim(rng), dim(rng)];
        let ins = vec![random_tensor(rng, &s, -2.0, 2.0), random_tensor(rng, &s, -2.0, 2.0)];
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.add(v[0], v[1])))
    });
    run("sub", 3, |rng| {
        let s = [dim(rng), dim(rng)];
        let ins = vec![random_tensor(rng, &s, -2.0, 2.0), random_tensor(rng, &s, -2.0, 2.0)];
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.sub(v[0], v[1])))
    });
    run("mul", 4, |rng| {
        let s = [dim(rng), dim(rng)];
        let ins = vec![random_tensor(rng, &s, -2.0, 2.0), random_tensor(rng, &s, -2.0, 2.0)];
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.mul(v[0], v[1])))
    });
    run("mul-scalar", 5, |rng| {
        let s = [dim(rng), dim(rng)];
        let ins = vec![random_tensor(rng, &[1], -2.0, 2.0), random_tensor(rng, &s, -2.0, 2.0)];
        let flip = rng.gen_bool(0.5);
        (
            ins,
            Box::new(move |t: &mut Tape, v: &[Var]| if flip { t.mul(v[1], v[0]) } else { t.mul(v[0], v[1]) }),
        )
    });
    run("scale", 6, |rng| {
        let s = [dim(rng), dim(rng)];
        let c = rng.gen_range(-3.0..3.0);
        (vec![random_tensor(rng, &s, -2.0, 2.0)], Box::new(move |t: &mut Tape, v: &[Var]| t.scale(v[0], c)))
    });
}

#[test]
fn concat_transpose_gradients() {
    run("concat-rows", 7, |rng| {
        let c = dim(rng);
        let ins: Vec<Tensor> = (0..rng.gen_range(1..4)).map(|_| {
            let r = dim(rng);
            random_tensor(rng, &[r, c], -2.0, 2.0)
        }).collect();
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.concat(v, 0)))
    });
    run("concat-cols", 8, |rng| {
        let r = dim(rng);
        let ins: Vec<Tensor> = (0..rng.gen_range(1..4)).map(|_| {
            let c = dim(rng);
            random_tensor(rng, &[r, c], -2.0, 2.0)
        }).collect();
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.concat(v, 1)))
    });
    run("transpose", 9, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -2.0, 2.0)], Box::new(|t: &mut Tape, v: &[Var]| t.transpose(v[0])))
    });
}

#[test]
fn elementwise_nonlinearity_gradients() {
    run("tanh", 10, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -3.0, 3.0)], Box::new(|t: &mut Tape, v: &[Var]| t.tanh(v[0])))
    });
    run("sigmoid", 11, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -5.0, 5.0)], Box::new(|t: &mut Tape, v: &[Var]| t.sigmoid(v[0])))
    });
    run("log_sigmoid", 12, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -5.0, 5.0)], Box::new(|t: &mut Tape, v: &[Var]| t.log_sigmoid(v[0])))
    });
    run("exp", 13, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -3.0, 3.0)], Box::new(|t: &mut Tape, v: &[Var]| t.exp(v[0])))
    });
    run("log", 14, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, 0.2, 3.0)], Box::new(|t: &mut Tape, v: &[Var]| t.log(v[0])))
    });
}

#[test]
fn softmax_gradients() {
    run("row_softmax", 15, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -4.0, 4.0)], Box::new(|t: &mut Tape, v: &[Var]| t.row_softmax(v[0])))
    });
    run("log_softmax", 16, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -4.0, 4.0)], Box::new(|t: &mut Tape, v: &[Var]| t.log_softmax(v[0])))
    });
}

#[test]
fn gather_gradients() {
    run("embedding_lookup", 17, |rng| {
        let rows = dim(rng);
        let cols = dim(rng);
        let table = random_tensor(rng, &[rows, cols], -2.0, 2.0);
        let idx: Vec<usize> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(0..rows)).collect();
        (vec![table], Box::new(move |t: &mut Tape, v: &[Var]| t.embedding_lookup(v[0], &idx)))
    });
    run("select", 18, |rng| {
        let s = [dim(rng), dim(rng)];
        let n = s[0] * s[1];
        let idx: Vec<usize> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(0..n)).collect();
        (vec![random_tensor(rng, &s, -2.0, 2.0)], Box::new(move |t: &mut Tape, v: &[Var]| t.select(v[0], &idx)))
    });
}

#[test]
fn reduction_gradients() {
    run("sum", 19, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -2.0, 2.0)], Box::new(|t: &mut Tape, v: &[Var]| t.sum(v[0])))
    });
    run("mean", 20, |rng| {
        let s = [dim(rng), dim(rng)];
        (vec![random_tensor(rng, &s, -2.0, 2.0)], Box::new(|t: &mut Tape, v: &[Var]| t.mean(v[0])))
    });
    run("squared_error", 21, |rng| {
        let s = [dim(rng), dim(rng)];
        let ins = vec![random_tensor(rng, &s, -2.0, 2.0), random_tensor(rng, &s, -2.0, 2.0)];
        (ins, Box::new(|t: &mut Tape, v: &[Var]| t.squared_error(v[0], v[1])))
    });
}

#[test]
fn composed_graph_gradients() {
    // A small recurrent-style composition reusing the same weights.
    run("composed", 22, |rng| {
        let h = dim(rng);
        let w = random_tensor(rng, &[h, h], -1.0, 1.0);
        let x = random_tensor(rng, &[1, h], -1.0, 1.0);
        (
            vec![w, x],
            Box::new(|t: &mut Tape, v: &[Var]| {
                let mut s = v[1];
                for _ in 0..3 {
                    let z = t.matmul(s, v[0])?;
                    let a = t.tanh(z)?;
                    s = t.add(a, s)?;
                }
                t.log_softmax(s)
            }),
        )
    });
}
