use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::container::{Descriptor, ModelFile};
use crate::error::{PcgError, Result};
use crate::label::LabelSet;
use crate::nn::{softmax, Conv1d, Dense, ParamStore, Padding, Tape, Var};
use crate::pipeline::band_filters;
use crate::segmentation::CardiacCycle;
use crate::tconv::{init_from_filterbank, Activation, TConvLayer, Variant, DEFAULT_KERNEL_LEN};

pub const BRANCHES: usize = 4;
pub const CONV1_FILTERS: usize = 8;
pub const CONV2_FILTERS: usize = 4;
pub const CONV_KERNEL: usize = 5;
pub const BINARY_HEAD: [usize; 2] = [20, 2];
pub const SEVERITY_HEAD: [usize; 3] = [239, 20, 3];
pub const DEFAULT_DROPOUT: f64 = 0.5;
const KIND: &str = "branch-cnn";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontEnd {
    /// Pre-filtered bands from the static filterbank.
    Static,
    /// Learnable tConv layers applied to the raw cycle.
    TConv(Variant),
}

impl fmt::Display for FrontEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrontEnd::Static => f.write_str("static"),
            FrontEnd::TConv(v) => write!(f, "tconv-{v}"),
        }
    }
}

impl FromStr for FrontEnd {
    type Err = PcgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(FrontEnd::Static),
            _ => match s.strip_prefix("tconv-") {
                Some(v) => Ok(FrontEnd::TConv(v.parse()?)),
                None => Err(PcgError::Parameter(format!("unknown front end `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub front_end: FrontEnd,
    pub cycle_len: usize,
    pub fir_len: usize,
    /// Hidden widths followed by the number of classes.
    pub head: Vec<usize>,
    pub dropout: f64,
}

/// Length after conv(k) valid then pool(2), twice.
fn branch_len(l: usize) -> Option<usize> {
    let a = l.checked_sub(CONV_KERNEL - 1)? / 2;
    let b = a.checked_sub(CONV_KERNEL - 1)? / 2;
    (b > 0).then_some(b)
}

impl Architecture {
    pub fn binary(front_end: FrontEnd, cycle_len: usize) -> Self {
        Architecture {
            front_end,
            cycle_len,
            fir_len: DEFAULT_KERNEL_LEN,
            head: BINARY_HEAD.to_vec(),
            dropout: DEFAULT_DROPOUT,
        }
    }

    pub fn classes(&self) -> usize {
        *self.head.last().unwrap_or(&0)
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::for_classes(self.classes())
            .ok_or_else(|| PcgError::Parameter(format!("no label set with {} classes", self.classes())))
    }

    /// Flattened branch output, 4 x 4 x 622 = 9952 for 2.5 s at 1 kHz.
    pub fn flatten_dim(&self) -> Result<usize> {
        branch_len(self.cycle_len)
            .map(|b| BRANCHES * CONV2_FILTERS * b)
            .ok_or_else(|| PcgError::Shape(format!("cycle length {} too short for the branches", self.cycle_len)))
    }

    pub fn validate(&self) -> Result<()> {
        self.flatten_dim()?;
        self.label_set()?;
        if self.head.iter().any(|&w| w == 0) {
            return Err(PcgError::Parameter("head widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(PcgError::Parameter(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.fir_len % 2 == 0 {
            return Err(PcgError::Parameter("tconv kernel length must be odd".into()));
        }
        Ok(())
    }

    fn describe(&self, d: &mut Descriptor) {
        let head: Vec<String> = self.head.iter().map(|w| w.to_string()).collect();
        d.set("kind", KIND)
            .set("front_end", self.front_end)
            .set("cycle_len", self.cycle_len)
            .set("fir_len", self.fir_len)
            .set("head", head.join(","))
            .set("dropout", self.dropout);
    }

    fn from_descriptor(d: &Descriptor) -> Result<Self> {
        if d.require("kind")? != KIND {
            return Err(PcgError::Parameter(format!("not a branch CNN model: kind={}", d.require("kind")?)));
        }
        let head = d
            .require("head")?
            .split(',')
            .map(|w| w.parse().map_err(|_| PcgError::Parameter(format!("bad head width `{w}`"))))
            .collect::<Result<Vec<usize>>>()?;
        Ok(Architecture {
            front_end: d.require("front_end")?.parse()?,
            cycle_len: d.parse("cycle_len")?,
            fir_len: d.parse("fir_len")?,
            head,
            dropout: d.parse("dropout")?,
        })
    }
}

/// Where the model came from; stored alongside the weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
}

/// Four-branch 1D CNN over one cardiac cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCnn {
    pub arch: Architecture,
    pub store: ParamStore,
    pub meta: TrainingMeta,
    front: Vec<TConvLayer>,
    branches: Vec<[Conv1d; 2]>,
    head: Vec<Dense>,
}

fn head_name(i: usize) -> String {
    format!("head{i}")
}

fn add_head<R: Rng>(store: &mut ParamStore, input: usize, widths: &[usize], rng: &mut R) -> Result<Vec<Dense>> {
    let mut fan_in = input;
    let mut layers = Vec::with_capacity(widths.len());
    for (i, &w) in widths.iter().enumerate() {
        layers.push(Dense::new(store, &head_name(i), fan_in, w, rng)?);
        fan_in = w;
    }
    Ok(layers)
}

impl BranchCnn {
    /// Fresh model. The tConv front end starts from the static band designs.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let front = match arch.front_end {
            FrontEnd::Static => Vec::new(),
            FrontEnd::TConv(variant) => init_from_filterbank(&mut store, "fe", &band_filters(arch.fir_len - 1)?, variant)?,
        };
        let mut branches = Vec::with_capacity(BRANCHES);
        for b in 0..BRANCHES {
            let c1 = Conv1d::new(&mut store, &format!("branch{b}.conv1"), 1, CONV1_FILTERS, CONV_KERNEL, Padding::Valid, &mut rng)?;
            let c2 = Conv1d::new(
                &mut store,
                &format!("branch{b}.conv2"),
                CONV1_FILTERS,
                CONV2_FILTERS,
                CONV_KERNEL,
                Padding::Valid,
                &mut rng,
            )?;
            branches.push([c1, c2]);
        }
        let head = add_head(&mut store, arch.flatten_dim()?, &arch.head, &mut rng)?;
        Ok(BranchCnn {
            arch,
            store,
            meta: TrainingMeta {
                seed,
                ..Default::default()
            },
            front,
            branches,
            head,
        })
    }

    /// Rebinds layers over an existing store, checking every shape.
    pub fn from_store(arch: Architecture, store: ParamStore, meta: TrainingMeta) -> Result<Self> {
        arch.validate()?;
        let front = match arch.front_end {
            FrontEnd::Static => Vec::new(),
            FrontEnd::TConv(variant) => (0..BRANCHES)
                .map(|i| {
                    let l = TConvLayer::lookup(&store, &format!("fe{i}"), Activation::Linear)?;
                    if l.variant != variant {
                        return Err(PcgError::Parameter(format!("fe{i} is not a {variant} layer")));
                    }
                    Ok(l)
                })
                .collect::<Result<_>>()?,
        };
        let mut branches = Vec::with_capacity(BRANCHES);
        let mut flat = 0;
        for b in 0..BRANCHES {
            let c1 = Conv1d::lookup(&store, &format!("branch{b}.conv1"), Padding::Valid)?;
            let c2 = Conv1d::lookup(&store, &format!("branch{b}.conv2"), Padding::Valid)?;
            if c1.c_in != 1 || c2.c_in != c1.c_out || c1.klen > arch.cycle_len {
                return Err(PcgError::Shape(format!("branch{b} layer shapes are inconsistent")));
            }
            let l1 = c1.output_len(arch.cycle_len) / 2;
            if c2.klen > l1 {
                return Err(PcgError::Shape(format!("branch{b} conv2 longer than its input")));
            }
            flat += c2.c_out * (c2.output_len(l1) / 2);
            branches.push([c1, c2]);
        }
        let head = (0..arch.head.len())
            .map(|i| Dense::lookup(&store, &head_name(i)))
            .collect::<Result<Vec<_>>>()?;
        let mut fan_in = flat;
        for (i, (d, &w)) in head.iter().zip(&arch.head).enumerate() {
            if d.inputs != fan_in || d.outputs != w {
                return Err(PcgError::Shape(format!(
                    "head{i} is {}x{}, expected {w}x{fan_in}",
                    d.outputs, d.inputs
                )));
            }
            fan_in = w;
        }
        Ok(BranchCnn {
            arch,
            store,
            meta,
            front,
            branches,
            head,
        })
    }

    pub fn front_end(&self) -> &[TConvLayer] {
        &self.front
    }

    /// Flattened width produced by the actual branch parameters.
    pub fn branch_output_dim(&self) -> usize {
        self.branches
            .iter()
            .map(|[c1, c2]| c2.c_out * (c2.output_len(c1.output_len(self.arch.cycle_len) / 2) / 2))
            .sum()
    }

    /// Names of every parameter up to the flatten layer.
    pub fn body_param_names(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.front.iter().flat_map(|l| l.params()).collect();
        ids.extend(self.branches.iter().flat_map(|[a, b]| a.params().into_iter().chain(b.params())));
        ids.into_iter().map(|id| self.store.get(id).name.clone()).collect()
    }

    pub fn set_body_trainable(&mut self, trainable: bool) {
        for name in self.body_param_names() {
            let id = self.store.id(&name).unwrap();
            self.store.set_trainable(id, trainable);
        }
    }

    fn inputs(&self, tape: &mut Tape, cycle: &CardiacCycle) -> Result<Vec<Var>> {
        let l = self.arch.cycle_len;
        if cycle.raw.len() != l {
            return Err(PcgError::Shape(format!("cycle has {} samples, model expects {l}", cycle.raw.len())));
        }
        match self.arch.front_end {
            FrontEnd::Static => {
                if cycle.bands.len() != BRANCHES || cycle.bands.iter().any(|b| b.len() != l) {
                    return Err(PcgError::Shape(format!("cycle must carry {BRANCHES} bands of {l} samples")));
                }
                cycle.bands.iter().map(|b| tape.input(b.clone(), vec![1, l])).collect()
            }
            FrontEnd::TConv(_) => {
                let x = tape.input(cycle.raw.clone(), vec![1, l])?;
                self.front.iter().map(|f| f.forward(tape, x)).collect()
            }
        }
    }

    /// Logits for one cycle. Dropout is active only when `rng` is given.
    pub fn forward(&self, tape: &mut Tape, cycle: &CardiacCycle, rng: Option<&mut ChaCha8Rng>) -> Result<Var> {
        let bands = self.inputs(tape, cycle)?;
        let mut flat = Vec::with_capacity(BRANCHES);
        for (x, [c1, c2]) in bands.into_iter().zip(&self.branches) {
            let h = c1.forward(tape, x)?;
            let h = tape.relu(h);
            let h = tape.max_pool2(h)?;
            let h = c2.forward(tape, h)?;
            let h = tape.relu(h);
            flat.push(tape.max_pool2(h)?);
        }
        let mut h = tape.concat(&flat);
        let (training, mut rng) = match rng {
            Some(r) => (true, Some(r)),
            None => (false, None),
        };
        let last = self.head.len() - 1;
        for (i, d) in self.head.iter().enumerate() {
            if training {
                h = tape.dropout(h, self.arch.dropout, true, rng.as_deref_mut().unwrap())?;
            }
            h = d.forward(tape, h)?;
            if i < last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Softmax posterior for one cycle (inference mode).
    pub fn cycle_posterior(&self, cycle: &CardiacCycle) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.store);
        let logits = self.forward(&mut tape, cycle, None)?;
        Ok(softmax(tape.value(logits)))
    }

    pub fn to_file(&self) -> ModelFile {
        let mut d = Descriptor::new();
        self.arch.describe(&mut d);
        d.set("seed", self.meta.seed)
            .set("epochs", self.meta.epochs)
            .set("lr", self.meta.lr);
        ModelFile::new(d, self.store.clone())
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let arch = Architecture::from_descriptor(&file.descriptor)?;
        let d = &file.descriptor;
        let meta = TrainingMeta {
            seed: d.parse("seed")?,
            epochs: d.parse("epochs")?,
            lr: d.parse("lr")?,
        };
        BranchCnn::from_store(arch, file.params, meta)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_file().save(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        BranchCnn::from_file(ModelFile::load(path)?)
    }
}

/// Copies everything up to the flatten layer and attaches a freshly
/// initialised head of the given widths (last entry = classes).
pub fn transfer_head(model: &BranchCnn, head: &[usize], freeze_front: bool, seed: u64) -> Result<BranchCnn> {
    let flat = model.arch.flatten_dim()?;
    let actual = model.branch_output_dim();
    if actual != flat {
        return Err(PcgError::Shape(format!(
            "branches flatten to {actual} values but the head expects {flat}"
        )));
    }
    let arch = Architecture {
        head: head.to_vec(),
        ..model.arch.clone()
    };
    arch.validate()?;
    let mut store = ParamStore::new();
    for name in model.body_param_names() {
        let p = model.store.by_name(&name).unwrap();
        let id = store.add(name.clone(), p.value.clone())?;
        store.set_trainable(id, !freeze_front);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    add_head(&mut store, flat, head, &mut rng)?;
    BranchCnn::from_store(
        arch,
        store,
        TrainingMeta {
            seed,
            ..Default::default()
        },
    )
}
