use pcgkit::nn::{check_gradients, Conv1d, Dense, GradCheck, GruCell, Padding, ParamStore, Tape, Tensor, Var};
use pcgkit::tconv::{Activation, TConvLayer, Variant};
use pcgkit::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-6;
pub const TOL: f64 = 1e-5;

fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn projected(tape: &mut Tape, y: Var, proj: &[f64]) -> Result<Var> {
    let r = tape.input(proj.to_vec(), vec![proj.len()])?;
    tape.dot(y, r)
}

fn store_with(rng: &mut ChaCha8Rng, name: &str, shape: Vec<usize>) -> (ParamStore, pcgkit::nn::ParamId) {
    let mut store = ParamStore::new();
    let n = shape.iter().product();
    let id = store.add(name, Tensor::new(randn(rng, n), shape).unwrap()).unwrap();
    (store, id)
}

pub fn conv1d(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut store, x) = store_with(&mut rng, "x", vec![3, 12]);
    let conv = Conv1d::new(&mut store, "c", 3, 2, 5, Padding::Valid, &mut rng)?;
    let same = Conv1d::new(&mut store, "s", 2, 2, 3, Padding::Same, &mut rng)?;
    for id in conv.params().into_iter().chain(same.params()) {
        let p = store.get_mut(id);
        p.value.data = randn(&mut rng, p.value.len());
    }
    let proj = randn(&mut rng, 16);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let y = conv.forward(t, xv)?;
        let y = same.forward(t, y)?;
        projected(t, y, &proj)
    })
}

pub fn dense(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut store, x) = store_with(&mut rng, "x", vec![7]);
    let d = Dense::new(&mut store, "d", 7, 4, &mut rng)?;
    let b = store.get_mut(d.bias);
    b.value.data = randn(&mut rng, 4);
    let proj = randn(&mut rng, 4);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let y = d.forward(t, xv)?;
        projected(t, y, &proj)
    })
}

pub fn relu(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    // keep entries away from the kink
    let data: Vec<f64> = randn(&mut rng, 20)
        .into_iter()
        .map(|v| if v.abs() < 0.05 { v + 0.1f64.copysign(v) } else { v })
        .collect();
    let x = store.add("x", Tensor::new(data, vec![20])?)?;
    let proj = randn(&mut rng, 20);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let y = t.relu(xv);
        projected(t, y, &proj)
    })
}

pub fn max_pool(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (store, x) = store_with(&mut rng, "x", vec![2, 11]);
    let proj = randn(&mut rng, 10);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let y = t.max_pool2(xv)?;
        projected(t, y, &proj)
    })
}

pub fn weighted_softmax_ce(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (store, z) = store_with(&mut rng, "z", vec![3]);
    let weights = [2.0, 0.6061, 1.1765];
    check_gradients(&store, EPS, |t| {
        let zv = t.param(z);
        let terms = (0..3)
            .map(|c| t.softmax_cross_entropy(zv, c, weights[c]))
            .collect::<Result<Vec<_>>>()?;
        t.sum(&terms)
    })
}

/// Both the inference path and a fixed training mask (reseeded per pass).
pub fn dropout(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (store, x) = store_with(&mut rng, "x", vec![30]);
    let proj = randn(&mut rng, 30);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let mut mask_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0);
        let off = t.dropout(xv, 0.5, false, &mut mask_rng)?;
        let on = t.dropout(off, 0.5, true, &mut mask_rng)?;
        projected(t, on, &proj)
    })
}

pub fn gru_cell(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut store, x) = store_with(&mut rng, "x", vec![4]);
    let h0 = store.add("h0", Tensor::new(randn(&mut rng, 3), vec![3])?)?;
    let cell = GruCell::new(&mut store, "g", 4, 3, &mut rng)?;
    for id in cell.b {
        store.get_mut(id).value.data = randn(&mut rng, 3);
    }
    let proj = randn(&mut rng, 3);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let hv = t.param(h0);
        let h = cell.step(t, xv, hv)?;
        projected(t, h, &proj)
    })
}

/// Two stacked cells unrolled over eight steps with a loss on every output.
pub fn gru_bptt(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut store, xs) = store_with(&mut rng, "xs", vec![8, 3]);
    let c1 = GruCell::new(&mut store, "g1", 3, 4, &mut rng)?;
    let c2 = GruCell::new(&mut store, "g2", 4, 3, &mut rng)?;
    let targets: Vec<Vec<f64>> = (0..8).map(|_| randn(&mut rng, 3)).collect();
    check_gradients(&store, EPS, |t| {
        let all = t.param(xs);
        let mut h1 = t.input(vec![0.0; 4], vec![4])?;
        let mut h2 = t.input(vec![0.0; 3], vec![3])?;
        let mut losses = Vec::new();
        let xs_val = t.value(all).to_vec();
        for (step, target) in targets.iter().enumerate() {
            // gather row `step` as a differentiable slice through a selector matrix
            let mut sel = vec![0.0; 3 * 24];
            for j in 0..3 {
                sel[j * 24 + step * 3 + j] = 1.0;
            }
            let s = t.input(sel, vec![3, 24])?;
            let x = t.matvec(s, all, None)?;
            debug_assert_eq!(t.value(x), &xs_val[step * 3..step * 3 + 3]);
            h1 = c1.step(t, x, h1)?;
            h2 = c2.step(t, h1, h2)?;
            losses.push(t.mse(h2, target.clone())?);
        }
        t.sum(&losses)
    })
}

pub fn tconv(seed: u64, variant: Variant) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut store, x) = store_with(&mut rng, "x", vec![1, 25]);
    let layer = TConvLayer::new(&mut store, "t", 7, variant, Activation::Linear, &mut rng)?;
    store.get_mut(layer.bias).value.data = vec![0.3];
    let proj = randn(&mut rng, 25);
    check_gradients(&store, EPS, |t| {
        let xv = t.param(x);
        let y = layer.forward(t, xv)?;
        projected(t, y, &proj)
    })
}

pub fn all(seed: u64) -> Result<Vec<(&'static str, GradCheck)>> {
    Ok(vec![
        ("conv1d", conv1d(seed)?),
        ("dense", dense(seed)?),
        ("relu", relu(seed)?),
        ("max_pool2", max_pool(seed)?),
        ("weighted_softmax_ce", weighted_softmax_ce(seed)?),
        ("dropout", dropout(seed)?),
        ("gru_cell", gru_cell(seed)?),
        ("gru_bptt_8", gru_bptt(seed)?),
        ("tconv", tconv(seed, Variant::Free)?),
        ("lp_tconv", tconv(seed, Variant::LinearPhase)?),
    ])
}
