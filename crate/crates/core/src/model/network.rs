//! The recurrent structure-detail network.
//!
//! One cell step super-resolves the current frame from
//! - the previous and current LR frames (or their structure/detail parts),
//! - the previous HR estimates, folded back onto the LR grid by
//!   space-to-depth,
//! - the hidden state, optionally gated by hidden-state adaptation.
//!
//! Each branch is a head convolution, a stack of residual blocks, and a
//! tail convolution followed by depth-to-space. The two branch features are
//! fused into the next hidden state.

use std::sync::Arc;

use rand::Rng;

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::ops::{ConvGeom, ResizePlan};
use crate::tensor::{Element, Shape4, Tensor4};

use super::config::{BlockVariant, InputMode, ModelConfig};
use super::decompose::{decompose, structure_plans};
use super::params::{ConvLayer, ParamSpecs, ParamStore};

const KERNEL: usize = 3;

#[derive(Clone, Debug)]
struct Branch {
    head: ConvLayer,
    tail: ConvLayer,
}

#[derive(Clone, Debug)]
enum Block {
    Single { c1: ConvLayer, c2: ConvLayer },
    Pair { s1: ConvLayer, d1: ConvLayer, s2: ConvLayer, d2: ConvLayer },
}

#[derive(Clone, Debug)]
struct Layout {
    hsa: Option<ConvLayer>,
    branches: Vec<Branch>,
    blocks: Vec<Block>,
    fuse: ConvLayer,
}

fn layout(config: &ModelConfig) -> (Layout, ParamSpecs) {
    let c = config.channels;
    let out = config.hr_feedback_channels();
    let mut specs = ParamSpecs::default();
    let hsa = config
        .hsa
        .then(|| specs.conv("hsa", config.hsa_kernel * config.hsa_kernel, 3, KERNEL));
    let branch_names: &[&str] = if config.is_two_branch() { &["s", "d"] } else { &["i"] };
    let heads: Vec<ConvLayer> = branch_names
        .iter()
        .map(|b| specs.conv(&format!("{b}.head"), c, config.head_in_channels(), KERNEL))
        .collect();
    let blocks = (0..config.blocks)
        .map(|i| {
            let mut conv = |part: &str| specs.conv(&format!("blocks.{i}.{part}"), c, c, KERNEL);
            if config.is_two_branch() {
                Block::Pair {
                    s1: conv("s1"),
                    d1: conv("d1"),
                    s2: conv("s2"),
                    d2: conv("d2"),
                }
            } else {
                Block::Single {
                    c1: conv("c1"),
                    c2: conv("c2"),
                }
            }
        })
        .collect();
    let branches = branch_names
        .iter()
        .zip(heads)
        .map(|(b, head)| Branch {
            head,
            tail: specs.conv(&format!("{b}.tail"), out, c, KERNEL),
        })
        .collect();
    let fuse_in = if config.is_two_branch() { 2 * c } else { c };
    let fuse = specs.conv("fuse", c, fuse_in, KERNEL);
    (
        Layout {
            hsa,
            branches,
            blocks,
            fuse,
        },
        specs,
    )
}

/// Names and shapes of all parameters of a configuration, in store order.
pub fn parameter_shapes(config: &ModelConfig) -> Vec<(String, Shape4)> {
    layout(config).1.specs
}

/// Per-sequence carry between cell steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState<T> {
    /// Previous HR structure estimate, `(n, 3, rH, rW)`.
    pub prev_structure: Tensor4<T>,
    /// Previous HR detail estimate, `(n, 3, rH, rW)`.
    pub prev_detail: Tensor4<T>,
    /// Hidden features at LR resolution, `(n, C, H, W)`.
    pub hidden: Tensor4<T>,
}

impl<T: Element> RecurrentState<T> {
    pub fn zeros(config: &ModelConfig, n: usize, h: usize, w: usize) -> Self {
        let r = config.scale;
        Self {
            prev_structure: Tensor4::zeros([n, 3, h * r, w * r]),
            prev_detail: Tensor4::zeros([n, 3, h * r, w * r]),
            hidden: Tensor4::zeros([n, config.channels, h, w]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellOutput<T> {
    pub structure: Tensor4<T>,
    pub detail: Tensor4<T>,
    /// Always `structure + detail`.
    pub image: Tensor4<T>,
    pub state: RecurrentState<T>,
    /// Post-sigmoid adaptation map, when adaptation is enabled.
    pub hsa_map: Option<Tensor4<T>>,
}

/// Tape handles of a recurrent state.
#[derive(Clone, Copy, Debug)]
pub struct StateVars {
    pub prev_structure: Var,
    pub prev_detail: Var,
    pub hidden: Var,
}

/// Tape handles produced by one cell step.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    pub structure: Var,
    pub detail: Var,
    pub image: Var,
    pub hidden: Var,
    pub hsa_map: Option<Var>,
}

impl StepVars {
    pub fn state(&self) -> StateVars {
        StateVars {
            prev_structure: self.structure,
            prev_detail: self.detail,
            hidden: self.hidden,
        }
    }
}

/// `(previous, current)` frame indices for each step of a `len`-frame
/// sequence. The second frame is mirrored in front of the first, so step 0
/// sees `(1, 0)`; a single frame is its own predecessor.
pub fn step_pairs(len: usize) -> Vec<(usize, usize)> {
    match len {
        0 => Vec::new(),
        1 => vec![(0, 0)],
        _ => std::iter::once((1, 0)).chain((1..len).map(|t| (t - 1, t))).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Rsdn<T> {
    config: ModelConfig,
    layout: Layout,
    params: ParamStore<T>,
}

impl<T: Element> Rsdn<T> {
    pub fn new(config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = layout(&config);
        let params = specs.init(rng);
        Ok(Self { config, layout, params })
    }

    /// Every weight and bias zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = layout(&config);
        let params = specs.zeros();
        Ok(Self { config, layout, params })
    }

    pub fn from_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = layout(&config);
        specs.matches(&params)?;
        Ok(Self { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// Record all parameters on `tape`.
    pub fn bind<'m>(&'m self, tape: &mut Tape<T>, trainable: bool) -> Bound<'m, T> {
        let vars = self
            .params
            .tensors()
            .iter()
            .map(|p| tape.leaf(p.clone(), trainable))
            .collect();
        Bound { model: self, vars }
    }

    /// Use existing tape variables as the parameters, in store order.
    pub fn bind_vars<'m>(&'m self, tape: &Tape<T>, vars: &[Var]) -> Result<Bound<'m, T>> {
        if vars.len() != self.params.len() {
            return Err(Error::Usage(format!("{} variables for {} parameters", vars.len(), self.params.len())));
        }
        for (i, &v) in vars.iter().enumerate() {
            if tape.shape(v) != self.params.get(i).shape() {
                return Err(Error::dim("bind_vars", tape.shape(v), self.params.get(i).shape()));
            }
        }
        Ok(Bound { model: self, vars: vars.to_vec() })
    }

    pub fn zero_state(&self, n: usize, h: usize, w: usize) -> RecurrentState<T> {
        RecurrentState::zeros(&self.config, n, h, w)
    }

    /// One recurrent step on plain tensors.
    pub fn cell_step(&self, prev: &Tensor4<T>, cur: &Tensor4<T>, state: &RecurrentState<T>) -> Result<CellOutput<T>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let sv = StateVars {
            prev_structure: tape.constant(state.prev_structure.clone()),
            prev_detail: tape.constant(state.prev_detail.clone()),
            hidden: tape.constant(state.hidden.clone()),
        };
        let out = bound.step(&mut tape, prev, cur, sv)?;
        let v = |x: Var| tape.value(x).clone();
        Ok(CellOutput {
            structure: v(out.structure),
            detail: v(out.detail),
            image: v(out.image),
            state: RecurrentState {
                prev_structure: v(out.structure),
                prev_detail: v(out.detail),
                hidden: v(out.hidden),
            },
            hsa_map: out.hsa_map.map(v),
        })
    }

    /// Run the whole sequence from a zero state.
    pub fn forward_sequence(&self, frames: &[Tensor4<T>]) -> Result<Vec<CellOutput<T>>> {
        self.forward_sequence_observed(frames, |_, _, _| {})
    }

    /// Like [`forward_sequence`](Self::forward_sequence), reporting the
    /// `(previous, current)` frames fed to each step.
    pub fn forward_sequence_observed(
        &self,
        frames: &[Tensor4<T>],
        mut observe: impl FnMut(usize, &Tensor4<T>, &Tensor4<T>),
    ) -> Result<Vec<CellOutput<T>>> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Argument("cannot run an empty sequence".into()))?
            .shape();
        let mut state = self.zero_state(first.n, first.h, first.w);
        let mut outputs = Vec::with_capacity(frames.len());
        for (t, (p, c)) in step_pairs(frames.len()).into_iter().enumerate() {
            observe(t, &frames[p], &frames[c]);
            let out = self.cell_step(&frames[p], &frames[c], &state)?;
            state = out.state.clone();
            outputs.push(out);
        }
        Ok(outputs)
    }

    /// Hidden-state adaptation on plain tensors: `(adapted hidden, gate map)`.
    pub fn hsa(&self, frame: &Tensor4<T>, hidden: &Tensor4<T>) -> Result<(Tensor4<T>, Tensor4<T>)> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let f = tape.constant(frame.clone());
        let h = tape.constant(hidden.clone());
        let (adapted, map) = bound.hsa(&mut tape, f, h)?;
        Ok((tape.value(adapted).clone(), tape.value(map).clone()))
    }

    /// Residual block `index` on plain tensors. One-stream blocks ignore
    /// `detail` and return `None` for it.
    pub fn sd_block(&self, index: usize, structure: &Tensor4<T>, detail: &Tensor4<T>) -> Result<(Tensor4<T>, Option<Tensor4<T>>)> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let s = tape.constant(structure.clone());
        let d = tape.constant(detail.clone());
        let (s2, d2) = bound.block(&mut tape, index, s, Some(d))?;
        Ok((tape.value(s2).clone(), d2.map(|d2| tape.value(d2).clone())))
    }
}

/// A model whose parameters live on a tape.
pub struct Bound<'m, T> {
    model: &'m Rsdn<T>,
    vars: Vec<Var>,
}

impl<'m, T: Element> Bound<'m, T> {
    /// Tape handle of parameter `i` (store order).
    pub fn param(&self, i: usize) -> Var {
        self.vars[i]
    }

    pub fn params(&self) -> &[Var] {
        &self.vars
    }

    fn conv(&self, tape: &mut Tape<T>, layer: ConvLayer, x: Var) -> Result<Var> {
        tape.conv2d(x, self.vars[layer.weight], Some(self.vars[layer.bias]), ConvGeom::same(KERNEL))
    }

    pub fn zero_state(&self, tape: &mut Tape<T>, n: usize, h: usize, w: usize) -> StateVars {
        let s = self.model.zero_state(n, h, w);
        StateVars {
            prev_structure: tape.constant(s.prev_structure),
            prev_detail: tape.constant(s.prev_detail),
            hidden: tape.constant(s.hidden),
        }
    }

    /// Returns `(adapted hidden, gate map)`.
    pub fn hsa(&self, tape: &mut Tape<T>, frame: Var, hidden: Var) -> Result<(Var, Var)> {
        let layer = self
            .model
            .layout
            .hsa
            .ok_or_else(|| Error::Usage("model was built without hidden-state adaptation".into()))?;
        let (fs, hs) = (tape.shape(frame), tape.shape(hidden));
        if fs.n != hs.n || fs.h != hs.h || fs.w != hs.w {
            return Err(Error::dim("hsa", fs, hs));
        }
        let filters = self.conv(tape, layer, frame)?;
        let filters = tape.relu(filters)?;
        let corr = tape.spatially_variant_filter(hidden, filters, self.model.config.hsa_kernel)?;
        let map = tape.sigmoid(corr)?;
        Ok((tape.mul(map, hidden)?, map))
    }

    /// Residual block `index`.
    pub fn block(&self, tape: &mut Tape<T>, index: usize, s: Var, d: Option<Var>) -> Result<(Var, Option<Var>)> {
        let block = self
            .model
            .layout
            .blocks
            .get(index)
            .ok_or_else(|| Error::Argument(format!("no block {index}")))?
            .clone();
        match block {
            Block::Single { c1, c2 } => {
                let a = self.conv(tape, c1, s)?;
                let a = tape.relu(a)?;
                let r = self.conv(tape, c2, a)?;
                Ok((tape.add(s, r)?, None))
            }
            Block::Pair { s1, d1, s2, d2 } => {
                let d = d.ok_or_else(|| Error::Usage("two-branch block needs a detail input".into()))?;
                if tape.shape(s) != tape.shape(d) {
                    return Err(Error::dim("sd_block", tape.shape(s), tape.shape(d)));
                }
                let a_s = self.conv(tape, s1, s)?;
                let a_s = tape.relu(a_s)?;
                let a_d = self.conv(tape, d1, d)?;
                let a_d = tape.relu(a_d)?;
                let (m_s, m_d) = if self.model.config.variant == BlockVariant::Sd {
                    let m = tape.add(a_s, a_d)?;
                    (m, m)
                } else {
                    (a_s, a_d)
                };
                let r_s = self.conv(tape, s2, m_s)?;
                let r_d = self.conv(tape, d2, m_d)?;
                Ok((tape.add(s, r_s)?, Some(tape.add(d, r_d)?)))
            }
        }
    }

    fn check_step(&self, prev: &Tensor4<T>, cur: &Tensor4<T>, tape: &Tape<T>, state: StateVars) -> Result<()> {
        let cfg = &self.model.config;
        let (ps, cs) = (prev.shape(), cur.shape());
        if ps != cs || cs.c != 3 {
            return Err(Error::dim("cell_step frames", ps, cs));
        }
        let r = cfg.scale;
        let hr = Shape4::new(cs.n, 3, cs.h * r, cs.w * r);
        let hid = Shape4::new(cs.n, cfg.channels, cs.h, cs.w);
        for (what, v, want) in [
            ("previous structure", state.prev_structure, hr),
            ("previous detail", state.prev_detail, hr),
            ("hidden state", state.hidden, hid),
        ] {
            if tape.shape(v) != want {
                return Err(Error::Usage(format!(
                    "{what} has shape {} but the model expects {want}",
                    tape.shape(v)
                )));
            }
        }
        Ok(())
    }

    /// One recurrent step. Frames are data, so they enter the tape as
    /// constants together with their decomposition.
    pub fn step(&self, tape: &mut Tape<T>, prev: &Tensor4<T>, cur: &Tensor4<T>, state: StateVars) -> Result<StepVars> {
        self.check_step(prev, cur, tape, state)?;
        let cfg = &self.model.config;
        let r = cfg.scale;
        let cur_var = tape.constant(cur.clone());

        let (hidden, hsa_map) = if cfg.hsa {
            let (h, m) = self.hsa(tape, cur_var, state.hidden)?;
            (h, Some(m))
        } else {
            (state.hidden, None)
        };

        let layout = &self.model.layout;
        if !cfg.is_two_branch() {
            let prev_var = tape.constant(prev.clone());
            let prev_hr = tape.add(state.prev_structure, state.prev_detail)?;
            let fb = tape.pixel_unshuffle(prev_hr, r)?;
            let x = tape.concat(&[prev_var, cur_var, fb, hidden])?;
            let mut h = self.conv(tape, layout.branches[0].head, x)?;
            for i in 0..cfg.blocks {
                h = self.block(tape, i, h, None)?.0;
            }
            let up = self.conv(tape, layout.branches[0].tail, h)?;
            let raw = tape.pixel_shuffle(up, r)?;
            let hr = tape.shape(raw);
            let (down, upp) = structure_plans(hr.h, hr.w, r)?;
            let structure = self.structure_of(tape, raw, down, upp)?;
            let detail = tape.sub(raw, structure)?;
            let image = tape.add(structure, detail)?;
            let fused = self.conv(tape, layout.fuse, h)?;
            let hidden = tape.relu(fused)?;
            return Ok(StepVars {
                structure,
                detail,
                image,
                hidden,
                hsa_map,
            });
        }

        let (s_prev, d_prev, s_cur, d_cur) = match cfg.input_mode {
            InputMode::StructureDetail => {
                let (sp, dp) = decompose(prev, r)?;
                let (sc, dc) = decompose(cur, r)?;
                (tape.constant(sp), tape.constant(dp), tape.constant(sc), tape.constant(dc))
            }
            InputMode::Image => {
                let p = tape.constant(prev.clone());
                (p, p, cur_var, cur_var)
            }
        };
        let fb_s = tape.pixel_unshuffle(state.prev_structure, r)?;
        let fb_d = tape.pixel_unshuffle(state.prev_detail, r)?;
        let xs = tape.concat(&[s_prev, s_cur, fb_s, hidden])?;
        let xd = tape.concat(&[d_prev, d_cur, fb_d, hidden])?;
        let mut hs = self.conv(tape, layout.branches[0].head, xs)?;
        let mut hd = self.conv(tape, layout.branches[1].head, xd)?;
        for i in 0..cfg.blocks {
            let (s2, d2) = self.block(tape, i, hs, Some(hd))?;
            hs = s2;
            hd = d2.expect("two-branch block returns both streams");
        }
        let ts = self.conv(tape, layout.branches[0].tail, hs)?;
        let td = self.conv(tape, layout.branches[1].tail, hd)?;
        let structure = tape.pixel_shuffle(ts, r)?;
        let detail = tape.pixel_shuffle(td, r)?;
        let image = tape.add(structure, detail)?;
        let both = tape.concat(&[hs, hd])?;
        let fused = self.conv(tape, layout.fuse, both)?;
        let hidden = tape.relu(fused)?;
        Ok(StepVars {
            structure,
            detail,
            image,
            hidden,
            hsa_map,
        })
    }

    fn structure_of(&self, tape: &mut Tape<T>, x: Var, down: Arc<ResizePlan>, up: Arc<ResizePlan>) -> Result<Var> {
        let low = tape.resize(x, down)?;
        tape.resize(low, up)
    }

    /// Unroll over a whole clip of `(n, 3, H, W)` frames from a zero state.
    pub fn unroll(&self, tape: &mut Tape<T>, frames: &[Tensor4<T>]) -> Result<Vec<StepVars>> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Argument("cannot run an empty sequence".into()))?
            .shape();
        let mut state = self.zero_state(tape, first.n, first.h, first.w);
        let mut out = Vec::with_capacity(frames.len());
        for (p, c) in step_pairs(frames.len()) {
            let step = self.step(tape, &frames[p], &frames[c], state)?;
            state = step.state();
            out.push(step);
        }
        Ok(out)
    }
}
