#![allow(dead_code)]

use usergnn_core::graph::{flip_noise, remove_isolated, sbm_generate, Dataset, Graph, SbmConfig};
use usergnn_core::ndmath::{Tape, Tensor, Var};
use usergnn_core::Result;

pub const FD_STEP: f64 = 1e-6;

/// Relative error with a small absolute floor so exact zeros compare cleanly.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Max relative error between tape gradients and central differences of `f`
/// with respect to every entry of every input.
pub fn grad_check(inputs: &[Tensor], f: impl Fn(&mut Tape, &[Var]) -> Result<Var>) -> f64 {
    let eval = |xs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = f(&mut tape, &vars).unwrap();
        (tape, vars, out)
    };
    let (tape, vars, out) = eval(inputs);
    let grads = tape.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (p, v) in vars.iter().enumerate() {
        let analytic = grads.get_or_zeros(*v, inputs[p].shape());
        for k in 0..inputs[p].data().len() {
            let mut xs = inputs.to_vec();
            xs[p].data_mut()[k] += FD_STEP;
            let (t, _, o) = eval(&xs);
            let up = t.value(o).item().unwrap();
            xs[p].data_mut()[k] -= 2.0 * FD_STEP;
            let (t, _, o) = eval(&xs);
            let down = t.value(o).item().unwrap();
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic.data()[k], numeric));
        }
    }
    worst
}

/// Two triangles joined by one edge, with two-cluster features.
pub fn six_node_fixture() -> Dataset {
    let (g, _) =
        Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
    let x = Tensor::from_rows(&[
        [1.0, 0.2, -0.1],
        [0.9, -0.3, 0.0],
        [1.2, 0.1, 0.3],
        [-0.2, 1.1, 0.4],
        [0.1, 0.8, -0.2],
        [-0.1, 1.3, 0.1],
    ]);
    Dataset::new(g, x, Some(vec![0, 0, 0, 1, 1, 1])).unwrap()
}

/// Three blocks of 40, p_in 0.3, p_out 0.02, 16-dim one-hot features plus unit noise.
pub fn sbm3() -> Dataset {
    sbm_generate(&SbmConfig {
        blocks: vec![40, 40, 40],
        p_in: 0.3,
        p_out: 0.02,
        dim: 16,
        feature_noise: 1.0,
        seed: 7,
    })
    .unwrap()
}

/// `sbm3` with `ratio` flip noise (seed 11) and isolated nodes removed.
pub fn sbm3_noisy(ratio: f64) -> Dataset {
    let ds = sbm3();
    let noisy = ds
        .with_graph(flip_noise(&ds.graph, ratio, 11).unwrap())
        .unwrap();
    remove_isolated(&noisy).unwrap().0
}

/// Two blocks of 60, p_in 0.3, p_out 0.02.
pub fn sbm2() -> Dataset {
    sbm_generate(&SbmConfig {
        blocks: vec![60, 60],
        p_in: 0.3,
        p_out: 0.02,
        dim: 16,
        feature_noise: 1.0,
        seed: 7,
    })
    .unwrap()
}

pub fn random_graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    let e: Vec<_> = edges.iter().map(|&(u, v)| (u % n, v % n)).collect();
    Graph::from_edges(n, &e).unwrap().0
}
