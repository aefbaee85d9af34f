use rand::Rng;

use super::param::{ParamId, ParamStore, Tensor};
use super::tape::{Padding, Tape, Var};
use crate::error::{PcgError, Result};

/// He-uniform values: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
pub fn he_uniform<R: Rng + ?Sized>(rng: &mut R, shape: Vec<usize>, fan_in: usize) -> Tensor {
    let limit = (6.0 / fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    Tensor {
        data: (0..n).map(|_| rng.random_range(-limit..=limit)).collect(),
        shape,
    }
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, shape: Vec<usize>, limit: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor {
        data: (0..n).map(|_| rng.random_range(-limit..=limit)).collect(),
        shape,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), he_uniform(rng, vec![outputs, inputs], inputs))?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(vec![outputs]))?;
        Ok(Dense {
            weight,
            bias,
            inputs,
            outputs,
        })
    }

    /// Rebinds an existing set of parameters by name.
    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        let weight = lookup(store, &format!("{name}.weight"))?;
        let bias = lookup(store, &format!("{name}.bias"))?;
        let shape = &store.get(weight).value.shape;
        if shape.len() != 2 {
            return Err(PcgError::Shape(format!("{name}.weight must be 2-D")));
        }
        Ok(Dense {
            weight,
            bias,
            inputs: shape[1],
            outputs: shape[0],
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(self.weight);
        let b = tape.param(self.bias);
        tape.matvec(w, x, Some(b))
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }
}

pub fn lookup(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .id(name)
        .ok_or_else(|| PcgError::Parameter(format!("missing parameter `{name}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1d {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub c_in: usize,
    pub c_out: usize,
    pub klen: usize,
    pub padding: Padding,
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        c_in: usize,
        c_out: usize,
        klen: usize,
        padding: Padding,
        rng: &mut R,
    ) -> Result<Self> {
        let kernel = store.add(
            format!("{name}.kernel"),
            he_uniform(rng, vec![c_out, c_in, klen], c_in * klen),
        )?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(vec![c_out]))?;
        Ok(Conv1d {
            kernel,
            bias,
            c_in,
            c_out,
            klen,
            padding,
        })
    }

    pub fn lookup(store: &ParamStore, name: &str, padding: Padding) -> Result<Self> {
        let kernel = lookup(store, &format!("{name}.kernel"))?;
        let bias = lookup(store, &format!("{name}.bias"))?;
        let s = &store.get(kernel).value.shape;
        if s.len() != 3 {
            return Err(PcgError::Shape(format!("{name}.kernel must be 3-D")));
        }
        Ok(Conv1d {
            kernel,
            bias,
            c_out: s[0],
            c_in: s[1],
            klen: s[2],
            padding,
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let k = tape.param(self.kernel);
        let b = tape.param(self.bias);
        tape.conv1d(x, k, Some(b), self.padding)
    }

    pub fn output_len(&self, l_in: usize) -> usize {
        match self.padding {
            Padding::Same => l_in,
            Padding::Valid => l_in + 1 - self.klen,
        }
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.kernel, self.bias]
    }
}

/// Gated recurrent unit:
/// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
/// c = tanh(Wh x + Uh (r * h) + bh), h' = (1 - z) * c + z * h.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    pub w: [ParamId; 3],
    pub u: [ParamId; 3],
    pub b: [ParamId; 3],
    pub inputs: usize,
    pub hidden: usize,
}

const GATES: [&str; 3] = ["z", "r", "h"];

impl GruCell {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let limit = 1.0 / (hidden as f64).sqrt();
        let mut w = [ParamId(0); 3];
        let mut u = [ParamId(0); 3];
        let mut b = [ParamId(0); 3];
        for (g, gate) in GATES.iter().enumerate() {
            w[g] = store.add(format!("{name}.w_{gate}"), uniform(rng, vec![hidden, inputs], limit))?;
            u[g] = store.add(format!("{name}.u_{gate}"), uniform(rng, vec![hidden, hidden], limit))?;
            b[g] = store.add(format!("{name}.b_{gate}"), Tensor::zeros(vec![hidden]))?;
        }
        Ok(GruCell {
            w,
            u,
            b,
            inputs,
            hidden,
        })
    }

    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        let mut w = [ParamId(0); 3];
        let mut u = [ParamId(0); 3];
        let mut b = [ParamId(0); 3];
        for (g, gate) in GATES.iter().enumerate() {
            w[g] = lookup(store, &format!("{name}.w_{gate}"))?;
            u[g] = lookup(store, &format!("{name}.u_{gate}"))?;
            b[g] = lookup(store, &format!("{name}.b_{gate}"))?;
        }
        let s = &store.get(w[0]).value.shape;
        Ok(GruCell {
            w,
            u,
            b,
            inputs: s[1],
            hidden: s[0],
        })
    }

    pub fn step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        if tape.value(x).len() != self.inputs || tape.value(h).len() != self.hidden {
            return Err(PcgError::Shape(format!(
                "GRU cell expects input {} / state {}, got {} / {}",
                self.inputs,
                self.hidden,
                tape.value(x).len(),
                tape.value(h).len()
            )));
        }
        let gate = |tape: &mut Tape, g: usize, state: Var| -> Result<Var> {
            let w = tape.param(self.w[g]);
            let b = tape.param(self.b[g]);
            let wx = tape.matvec(w, x, Some(b))?;
            let u = tape.param(self.u[g]);
            let uh = tape.matvec(u, state, None)?;
            tape.add(wx, uh)
        };
        let z_pre = gate(tape, 0, h)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = gate(tape, 1, h)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let c_pre = gate(tape, 2, rh)?;
        let c = tape.tanh(c_pre);
        let keep = tape.mul(z, h)?;
        let one_minus_z = tape.one_minus(z);
        let update = tape.mul(one_minus_z, c)?;
        tape.add(update, keep)
    }

    pub fn params(&self) -> Vec<ParamId> {
        self.w.iter().chain(&self.u).chain(&self.b).copied().collect()
    }
}
