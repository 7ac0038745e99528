//! NAUX / AUXD policy networks, inference-time control, and persistence.
//!
//! Both architectures share one convolutional feature extractor applied to
//! three consecutive frames (one parameter set, applied three times); the
//! concatenated features feed a 50-unit control head with a single linear
//! yaw output. AUXD adds a depth head fed from the last frame's features
//! only. Weight sharing is by construction: the three "branches" are one
//! extractor applied to a stacked batch, so branch gradients sum into the
//! shared storage.

mod train;

pub use train::{bc_train, policy_grad_check, EpochStats, TrainHyper, TrainReport};

use crate::nn::{
    load_model, save_model, Conv2d, Layer, LayerCache, Linear, Scalar, Sequential, Tensor,
};
use crate::render::Frame;
use crate::rng::{derive, SplitMix64};
use crate::sim::{Action, Controller, ObsCtx};
use crate::{Error, Result};

/// Architecture selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Naux,
    Auxd,
}

impl Arch {
    pub fn name(&self) -> &'static str {
        match self {
            Arch::Naux => "naux",
            Arch::Auxd => "auxd",
        }
    }

    pub fn descriptor_tag(&self) -> &'static str {
        match self {
            Arch::Naux => "naux-v1",
            Arch::Auxd => "auxd-v1",
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Arch> {
        match s {
            "naux" => Ok(Arch::Naux),
            "auxd" => Ok(Arch::Auxd),
            other => Err(Error::invalid(format!("unknown architecture '{other}'"))),
        }
    }
}

/// Full architectural description; the defaults are the benchmark baseline.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PolicySpec {
    pub arch: Arch,
    pub input_height: usize,
    pub input_width: usize,
    pub in_channels: usize,
    /// Conv stack output channels; kernel 3, stride 2 throughout.
    pub conv_channels: Vec<usize>,
    /// Control-head hidden units.
    pub hidden: usize,
    /// Depth-head hidden units (AUXD).
    pub depth_hidden: usize,
    pub depth_rows: usize,
    pub depth_cols: usize,
    /// Auxiliary depth loss weight.
    pub beta: f64,
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec {
            arch: Arch::Naux,
            input_height: 110,
            input_width: 148,
            in_channels: 1,
            conv_channels: vec![8, 16, 32, 64],
            hidden: 50,
            depth_hidden: 512,
            depth_rows: 55,
            depth_cols: 74,
            beta: 0.1,
        }
    }
}

pub const FRAME_STACK: usize = 3;
const KERNEL: usize = 3;
const STRIDE: usize = 2;
const PAD: usize = 1;

impl PolicySpec {
    pub fn with_arch(arch: Arch) -> PolicySpec {
        PolicySpec {
            arch,
            ..PolicySpec::default()
        }
    }

    /// A tiny variant of the same topology for gradient checking.
    pub fn downsized(arch: Arch) -> PolicySpec {
        PolicySpec {
            arch,
            input_height: 12,
            input_width: 16,
            in_channels: 1,
            conv_channels: vec![2, 3],
            hidden: 5,
            depth_hidden: 6,
            depth_rows: 4,
            depth_cols: 5,
            beta: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.is_empty() {
            return Err(Error::invalid("conv stack needs at least one layer"));
        }
        if self.input_height == 0 || self.input_width == 0 || self.hidden == 0 {
            return Err(Error::invalid("policy spec dimensions must be positive"));
        }
        let (h, w) = self.feature_hw();
        if h == 0 || w == 0 {
            return Err(Error::invalid(
                "conv stack downsamples the input to nothing",
            ));
        }
        Ok(())
    }

    /// Spatial size after the conv stack.
    pub fn feature_hw(&self) -> (usize, usize) {
        let mut h = self.input_height;
        let mut w = self.input_width;
        for _ in &self.conv_channels {
            h = (h + 2 * PAD).saturating_sub(KERNEL) / STRIDE + 1;
            w = (w + 2 * PAD).saturating_sub(KERNEL) / STRIDE + 1;
        }
        (h, w)
    }

    /// Flattened per-frame feature dimension.
    pub fn feature_dim(&self) -> usize {
        let (h, w) = self.feature_hw();
        self.conv_channels.last().unwrap() * h * w
    }

    pub fn depth_out_dim(&self) -> usize {
        self.depth_rows * self.depth_cols
    }

    /// Architecture descriptor written into saved models.
    pub fn descriptor(&self) -> String {
        format!(
            "{} in={}x{}x{} conv={} hidden={} depth={}x{}x{} beta={}",
            self.arch.descriptor_tag(),
            self.in_channels,
            self.input_height,
            self.input_width,
            self.conv_channels
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.hidden,
            self.depth_hidden,
            self.depth_rows,
            self.depth_cols,
            self.beta,
        )
    }

    /// Parse a descriptor. A bare architecture tag ("naux-v1") yields the
    /// default spec of that architecture.
    pub fn from_descriptor(desc: &str) -> Result<PolicySpec> {
        let mut tokens = desc.split_whitespace();
        let tag = tokens
            .next()
            .ok_or_else(|| Error::Format("empty model descriptor".to_string()))?;
        let arch = match tag {
            "naux-v1" => Arch::Naux,
            "auxd-v1" => Arch::Auxd,
            other => {
                return Err(Error::Format(format!(
                    "unknown architecture descriptor '{other}'"
                )))
            }
        };
        let mut spec = PolicySpec::with_arch(arch);
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad descriptor token '{tok}'")))?;
            match key {
                "in" => {
                    let dims = parse_dims(value, 3)?;
                    spec.in_channels = dims[0];
                    spec.input_height = dims[1];
                    spec.input_width = dims[2];
                }
                "conv" => {
                    spec.conv_channels = value
                        .split(',')
                        .map(|c| {
                            c.parse()
                                .map_err(|_| Error::Format(format!("bad conv channels '{value}'")))
                        })
                        .collect::<Result<_>>()?;
                }
                "hidden" => {
                    spec.hidden = value
                        .parse()
                        .map_err(|_| Error::Format(format!("bad hidden '{value}'")))?;
                }
                "depth" => {
                    let dims = parse_dims(value, 3)?;
                    spec.depth_hidden = dims[0];
                    spec.depth_rows = dims[1];
                    spec.depth_cols = dims[2];
                }
                "beta" => {
                    spec.beta = value
                        .parse()
                        .map_err(|_| Error::Format(format!("bad beta '{value}'")))?;
                }
                other => {
                    return Err(Error::Format(format!(
                        "unknown descriptor field '{other}'"
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_dims(s: &str, n: usize) -> Result<Vec<usize>> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|d| d.parse().map_err(|_| Error::Format(format!("bad dims '{s}'"))))
        .collect::<Result<_>>()?;
    if dims.len() != n {
        return Err(Error::Format(format!("expected {n} dims in '{s}'")));
    }
    Ok(dims)
}

/// A built policy network.
#[derive(Debug, Clone)]
pub struct PolicyNet<T> {
    pub spec: PolicySpec,
    pub extractor: Sequential<T>,
    pub control_head: Sequential<T>,
    pub depth_head: Option<Sequential<T>>,
}

// Init sub-streams per component so NAUX and AUXD built from the same seed
// share identical extractor and control-head parameters.
const INIT_STREAM_EXTRACTOR: u64 = 0xE0;
const INIT_STREAM_CONTROL: u64 = 0xC0;
const INIT_STREAM_DEPTH: u64 = 0xD0;

/// Build a policy with seeded initialization.
pub fn build<T: Scalar>(spec: &PolicySpec, init_seed: u64) -> Result<PolicyNet<T>> {
    spec.validate()?;
    let mut layers = Vec::new();
    let mut in_c = spec.in_channels;
    for &out_c in &spec.conv_channels {
        layers.push(Layer::Conv2d(Conv2d::new(in_c, out_c, KERNEL, STRIDE, PAD)));
        layers.push(Layer::Relu);
        in_c = out_c;
    }
    layers.push(Layer::Flatten);
    let mut extractor = Sequential::new("extractor", layers);
    extractor.init(&mut SplitMix64::new(derive(init_seed, INIT_STREAM_EXTRACTOR)));

    let feat = spec.feature_dim();
    let mut control_head = Sequential::new(
        "control",
        vec![
            Layer::Linear(Linear::new(FRAME_STACK * feat, spec.hidden)),
            Layer::Relu,
            Layer::Linear(Linear::new(spec.hidden, 1)),
        ],
    );
    control_head.init(&mut SplitMix64::new(derive(init_seed, INIT_STREAM_CONTROL)));

    let depth_head = match spec.arch {
        Arch::Naux => None,
        Arch::Auxd => {
            let mut head = Sequential::new(
                "depth",
                vec![
                    Layer::Linear(Linear::new(feat, spec.depth_hidden)),
                    Layer::Relu,
                    Layer::Linear(Linear::new(spec.depth_hidden, spec.depth_out_dim())),
                ],
            );
            head.init(&mut SplitMix64::new(derive(init_seed, INIT_STREAM_DEPTH)));
            Some(head)
        }
    };

    Ok(PolicyNet {
        spec: spec.clone(),
        extractor,
        control_head,
        depth_head,
    })
}

/// Caches of one forward pass, consumed by [`PolicyNet::backward`].
pub struct ForwardPass<T> {
    /// Batch size (number of stacked samples).
    pub batch: usize,
    extractor_caches: Vec<LayerCache<T>>,
    control_caches: Vec<LayerCache<T>>,
    depth_caches: Option<Vec<LayerCache<T>>>,
    /// Extractor output for the whole `(3B)` frame batch.
    feat_shape: Vec<usize>,
    /// Control output `(B, 1)`.
    pub control: Tensor<T>,
    /// Depth output `(B, rows*cols)` when the head exists.
    pub depth: Option<Tensor<T>>,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn any_kink(&self) -> bool {
        Sequential::any_kink(&self.extractor_caches)
            || Sequential::any_kink(&self.control_caches)
            || self
                .depth_caches
                .as_ref()
                .is_some_and(|c| Sequential::any_kink(c))
    }
}

impl<T: Scalar> PolicyNet<T> {
    /// Forward a batch of stacked frames, shaped `(3B, H, W, C)` with frame
    /// order `(t-2, t-1, t)` within each sample.
    pub fn forward(&self, frames: Tensor<T>) -> Result<ForwardPass<T>> {
        let shape = frames.shape().to_vec();
        let shape = shape.as_slice();
        if shape.len() != 4 || shape[0] % FRAME_STACK != 0 {
            return Err(Error::Shape {
                layer: "policy.forward".to_string(),
                expected: format!("(3B, H, W, {})", self.spec.in_channels),
                got: format!("{shape:?}"),
            });
        }
        let batch = shape[0] / FRAME_STACK;
        let (feat, extractor_caches) = self.extractor.forward(frames)?;
        let feat_dim = self.spec.feature_dim();

        let (depth, depth_caches) = match &self.depth_head {
            None => (None, None),
            Some(head) => {
                // Last frame of each stack: rows 3i + 2 of the feature batch.
                let mut last = Tensor::zeros(&[batch, feat_dim]);
                for b in 0..batch {
                    let src = &feat.data()[(b * FRAME_STACK + 2) * feat_dim
                        ..(b * FRAME_STACK + 3) * feat_dim];
                    last.data_mut()[b * feat_dim..(b + 1) * feat_dim].copy_from_slice(src);
                }
                let (out, caches) = head.forward(last)?;
                (Some(out), Some(caches))
            }
        };

        // (3B, F) rows are contiguous, so (B, 3F) is the same buffer.
        let concat = feat.reshaped(&[batch, FRAME_STACK * feat_dim]);
        let (control, control_caches) = self.control_head.forward(concat)?;

        Ok(ForwardPass {
            batch,
            extractor_caches,
            control_caches,
            depth_caches,
            feat_shape: vec![batch * FRAME_STACK, feat_dim],
            control,
            depth,
        })
    }

    /// Backpropagate output gradients; parameter gradients accumulate.
    pub fn backward(
        &mut self,
        pass: &ForwardPass<T>,
        d_control: &Tensor<T>,
        d_depth: Option<&Tensor<T>>,
    ) -> Result<()> {
        let feat_dim = self.spec.feature_dim();
        let d_concat = self
            .control_head
            .backward(d_control.clone(), &pass.control_caches, true)?;
        let mut d_feat = d_concat.reshaped(&[pass.feat_shape[0], feat_dim]);

        if let (Some(head), Some(caches), Some(dd)) =
            (&mut self.depth_head, &pass.depth_caches, d_depth)
        {
            let d_last = head.backward(dd.clone(), caches, true)?;
            for b in 0..pass.batch {
                let dst = &mut d_feat.data_mut()
                    [(b * FRAME_STACK + 2) * feat_dim..(b * FRAME_STACK + 3) * feat_dim];
                for (x, g) in dst.iter_mut().zip(&d_last.data()[b * feat_dim..(b + 1) * feat_dim])
                {
                    *x += *g;
                }
            }
        }

        self.extractor.backward(d_feat, &pass.extractor_caches, false)?;
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.extractor.zero_grads();
        self.control_head.zero_grads();
        if let Some(h) = &mut self.depth_head {
            h.zero_grads();
        }
    }

    /// Visit `(name, param, grad)` in a fixed global order.
    pub fn for_each_param(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>, &mut Tensor<T>)) {
        self.extractor.for_each_param(f);
        self.control_head.for_each_param(f);
        if let Some(h) = &mut self.depth_head {
            h.for_each_param(f);
        }
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.for_each_param(&mut |_, p, _| n += p.len());
        n
    }

    pub fn named_param_list(&mut self) -> Vec<String> {
        let mut names = Vec::new();
        self.for_each_param(&mut |name, _, _| names.push(name));
        names
    }
}

impl PolicyNet<f32> {
    pub fn save(&mut self, path: &std::path::Path) -> Result<()> {
        let descriptor = self.spec.descriptor();
        let mut owned: Vec<(String, Tensor<f32>)> = Vec::new();
        self.for_each_param(&mut |name, p, _| owned.push((name, p.clone())));
        let params: Vec<(String, &Tensor<f32>)> =
            owned.iter().map(|(n, t)| (n.clone(), t)).collect();
        save_model(path, &descriptor, &params)
    }

    pub fn load(path: &std::path::Path) -> Result<PolicyNet<f32>> {
        let saved = load_model(path)?;
        let spec = PolicySpec::from_descriptor(&saved.descriptor)?;
        let mut net = build::<f32>(&spec, 0)?;
        let mut by_name: std::collections::BTreeMap<String, (Vec<usize>, Vec<f32>)> = saved
            .params
            .into_iter()
            .map(|p| (p.name, (p.shape, p.data)))
            .collect();
        let mut missing = Vec::new();
        net.for_each_param(&mut |name, p, _| match by_name.remove(&name) {
            Some((shape, data)) if shape == p.shape() => {
                p.data_mut().copy_from_slice(&data);
            }
            Some((shape, _)) => missing.push(format!("{name} (shape {shape:?})")),
            None => missing.push(name),
        });
        if !missing.is_empty() {
            return Err(Error::Format(format!(
                "model file does not match '{}': problems with {missing:?}",
                net.spec.descriptor()
            )));
        }
        if !by_name.is_empty() {
            return Err(Error::Format(format!(
                "model file has unexpected parameters: {:?}",
                by_name.keys().collect::<Vec<_>>()
            )));
        }
        Ok(net)
    }
}

/// Convert a grayscale frame to network input values: intensities mapped to
/// the centered range `[-0.5, 0.5]` (centering keeps the zero-bias relu
/// stack well conditioned on bright scenes).
pub fn frame_to_rows<T: Scalar>(frame: &Frame, out: &mut [T]) {
    debug_assert_eq!(out.len(), frame.pixels.len());
    for (o, p) in out.iter_mut().zip(&frame.pixels) {
        *o = T::from_f64(*p as f64 / 255.0 - 0.5);
    }
}

impl PolicyNet<f32> {
    /// Single-step action from the three most recent frames (newest first);
    /// missing history at episode start is the first frame repeated. The
    /// depth head, if any, is ignored at inference.
    pub fn act(&self, newest: &Frame, prev: &Frame, prev2: &Frame) -> Result<Action> {
        let (h, w) = (self.spec.input_height, self.spec.input_width);
        if newest.height != h || newest.width != w {
            return Err(Error::Shape {
                layer: "policy.act".to_string(),
                expected: format!("{h}x{w} frame"),
                got: format!("{}x{}", newest.height, newest.width),
            });
        }
        let px = h * w;
        let mut input: Tensor<f32> = Tensor::zeros(&[FRAME_STACK, h, w, 1]);
        // Stacked order (t-2, t-1, t).
        frame_to_rows(prev2, &mut input.data_mut()[0..px]);
        frame_to_rows(prev, &mut input.data_mut()[px..2 * px]);
        frame_to_rows(newest, &mut input.data_mut()[2 * px..3 * px]);
        let pass = self.forward(input)?;
        Ok(Action::new(
            (pass.control.data()[0] as f64).clamp(-1.0, 1.0),
        ))
    }
}

/// Closed-loop controller with frame-history bootstrapping and per-frame
/// feature caching (the shared extractor makes cached features of earlier
/// frames bit-identical to recomputing them).
pub struct PolicyController {
    net: PolicyNet<f32>,
    feat_hist: Vec<Vec<f32>>,
}

impl PolicyController {
    pub fn new(net: PolicyNet<f32>) -> PolicyController {
        PolicyController {
            net,
            feat_hist: Vec::new(),
        }
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.net.spec
    }

    fn features(&self, frame: &Frame) -> Result<Vec<f32>> {
        let (h, w) = (self.net.spec.input_height, self.net.spec.input_width);
        let mut input: Tensor<f32> = Tensor::zeros(&[1, h, w, 1]);
        frame_to_rows(frame, input.data_mut());
        let (feat, _) = self.net.extractor.forward(input)?;
        Ok(feat.data().to_vec())
    }
}

impl Controller for PolicyController {
    fn reset(&mut self) {
        self.feat_hist.clear();
    }

    fn act(&mut self, ctx: &ObsCtx<'_>) -> Action {
        let feat = match self.features(ctx.frame) {
            Ok(f) => f,
            Err(_) => return Action::new(f64::NAN), // surfaces as an episode error
        };
        if self.feat_hist.is_empty() {
            self.feat_hist = vec![feat.clone(), feat.clone()];
        }
        let n = self.feat_hist.len();
        let (f2, f1) = (&self.feat_hist[n - 2], &self.feat_hist[n - 1]);

        let feat_dim = self.net.spec.feature_dim();
        let mut concat: Tensor<f32> = Tensor::zeros(&[1, FRAME_STACK * feat_dim]);
        concat.data_mut()[0..feat_dim].copy_from_slice(f2);
        concat.data_mut()[feat_dim..2 * feat_dim].copy_from_slice(f1);
        concat.data_mut()[2 * feat_dim..].copy_from_slice(&feat);
        let out = match self.net.control_head.forward(concat) {
            Ok((y, _)) => y.data()[0] as f64,
            Err(_) => f64::NAN,
        };

        self.feat_hist.push(feat);
        if self.feat_hist.len() > 2 {
            self.feat_hist.drain(0..self.feat_hist.len() - 2);
        }
        Action::new(out.clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dims_match_the_paper_scale_network() {
        let spec = PolicySpec::default();
        assert_eq!(spec.feature_hw(), (7, 10));
        assert_eq!(spec.feature_dim(), 4480);
        assert_eq!(spec.depth_out_dim(), 4070);
    }

    #[test]
    fn weight_sharing_adds_no_extra_parameters() {
        let spec = PolicySpec::default();
        let mut net = build::<f32>(&spec, 0).unwrap();
        // extractor + control head only, counted once.
        let conv: usize = [(1, 8), (8, 16), (16, 32), (32, 64)]
            .iter()
            .map(|(i, o)| o * (i * 9) + o)
            .sum();
        let control = 50 * (3 * 4480) + 50 + (50 + 1);
        assert_eq!(net.param_count(), conv + control);
    }

    #[test]
    fn auxd_extends_naux_with_identical_control_path() {
        let mut naux = build::<f32>(&PolicySpec::default(), 7).unwrap();
        let mut auxd = build::<f32>(&PolicySpec::with_arch(Arch::Auxd), 7).unwrap();
        let naux_names = naux.named_param_list();
        let auxd_names = auxd.named_param_list();
        assert!(auxd_names.len() > naux_names.len());
        assert!(naux_names.iter().all(|n| auxd_names.contains(n)));
        // Same seed: shared components initialize identically.
        let mut naux_params = std::collections::BTreeMap::new();
        naux.for_each_param(&mut |n, p, _| {
            naux_params.insert(n, p.clone());
        });
        auxd.for_each_param(&mut |n, p, _| {
            if let Some(expect) = naux_params.get(&n) {
                assert_eq!(p, expect, "{n}");
            }
        });
        let depth_params = 512 * 4480 + 512 + 4070 * 512 + 4070;
        assert_eq!(auxd.param_count(), naux.param_count() + depth_params);
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let spec = PolicySpec::with_arch(Arch::Auxd);
        let mut a = build::<f32>(&spec, 42).unwrap();
        let mut b = build::<f32>(&spec, 42).unwrap();
        let mut pa = Vec::new();
        a.for_each_param(&mut |_, p, _| pa.push(p.clone()));
        let mut i = 0;
        b.for_each_param(&mut |_, p, _| {
            assert_eq!(*p, pa[i]);
            i += 1;
        });
    }

    #[test]
    fn descriptor_round_trip() {
        for arch in [Arch::Naux, Arch::Auxd] {
            let spec = PolicySpec::with_arch(arch);
            let desc = spec.descriptor();
            assert!(desc.starts_with(arch.descriptor_tag()));
            let back = PolicySpec::from_descriptor(&desc).unwrap();
            assert_eq!(back, spec);
        }
        // Bare tags load the defaults.
        let bare = PolicySpec::from_descriptor("naux-v1").unwrap();
        assert_eq!(bare, PolicySpec::default());
        assert!(PolicySpec::from_descriptor("resnet-v9").is_err());
    }

    #[test]
    fn save_load_round_trip_preserves_bits() {
        let spec = PolicySpec::downsized(Arch::Auxd);
        let mut net = build::<f32>(&spec, 3).unwrap();
        let path = std::env::temp_dir().join(format!(
            "driftbench-policy-{}.dshc",
            std::process::id()
        ));
        net.save(&path).unwrap();
        let mut back = PolicyNet::load(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back.spec, spec);
        let mut orig = Vec::new();
        net.for_each_param(&mut |_, p, _| orig.push(p.clone()));
        let mut i = 0;
        back.for_each_param(&mut |_, p, _| {
            assert_eq!(p.data().len(), orig[i].data().len());
            for (a, b) in p.data().iter().zip(orig[i].data()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            i += 1;
        });
    }

    #[test]
    fn zero_weight_model_outputs_zero_and_clamps() {
        let spec = PolicySpec::downsized(Arch::Naux);
        let mut net = build::<f32>(&spec, 0).unwrap();
        net.for_each_param(&mut |_, p, _| p.fill(0.0));
        let frame = Frame {
            width: spec.input_width,
            height: spec.input_height,
            pixels: vec![128; spec.input_width * spec.input_height],
        };
        let a = net.act(&frame, &frame, &frame).unwrap();
        assert_eq!(a.yaw_rate, 0.0);

        // Force a large output through the final bias: clamps to 1.
        let mut i = 0;
        net.for_each_param(&mut |name, p, _| {
            if name == "control.2.bias" {
                p.fill(3.7);
                i += 1;
            }
        });
        assert_eq!(i, 1);
        let a = net.act(&frame, &frame, &frame).unwrap();
        assert_eq!(a.yaw_rate, 1.0);
    }

    #[test]
    fn shared_extractor_gradient_equals_sum_of_branch_gradients() {
        // Backprop through the stacked 3-frame batch must equal the sum of
        // three independent single-frame applications.
        let spec = PolicySpec::downsized(Arch::Naux);
        let mut net = build::<f64>(&spec, 5).unwrap();
        let px = spec.input_height * spec.input_width;
        let mut frames: Tensor<f64> =
            Tensor::zeros(&[3, spec.input_height, spec.input_width, 1]);
        let mut rng = SplitMix64::new(8);
        for v in frames.data_mut() {
            *v = rng.next_range(-0.5, 0.5);
        }
        net.zero_grads();
        let pass = net.forward(frames.clone()).unwrap();
        let d_control = Tensor::from_vec(&[1, 1], vec![1.0]);
        net.backward(&pass, &d_control, None).unwrap();
        let mut stacked_grads = Vec::new();
        net.for_each_param(&mut |name, _, g| {
            if name.starts_with("extractor") {
                stacked_grads.push(g.clone());
            }
        });

        // Independent per-frame route: d(concat) chunks pushed through three
        // separate extractor applications.
        let feat_dim = spec.feature_dim();
        let (concat, _) = {
            let (f, _) = net.extractor.forward(frames.clone()).unwrap();
            (f.reshaped(&[1, 3 * feat_dim]), ())
        };
        let (_, ctl_caches) = net.control_head.forward(concat).unwrap();
        let d_concat = net
            .control_head
            .backward(d_control, &ctl_caches, true)
            .unwrap();
        net.extractor.zero_grads();
        for k in 0..3 {
            let one: Tensor<f64> = Tensor::from_vec(
                &[1, spec.input_height, spec.input_width, 1],
                frames.data()[k * px..(k + 1) * px].to_vec(),
            );
            let (_, caches) = net.extractor.forward(one).unwrap();
            let dk = Tensor::from_vec(
                &[1, feat_dim],
                d_concat.data()[k * feat_dim..(k + 1) * feat_dim].to_vec(),
            );
            net.extractor.backward(dk, &caches, false).unwrap();
        }
        let mut branch_grads = Vec::new();
        net.for_each_param(&mut |name, _, g| {
            if name.starts_with("extractor") {
                branch_grads.push(g.clone());
            }
        });
        for (a, b) in stacked_grads.iter().zip(&branch_grads) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn naux_and_auxd_act_identically_with_shared_weights() {
        let naux = build::<f32>(&PolicySpec::downsized(Arch::Naux), 21).unwrap();
        let auxd = build::<f32>(&PolicySpec::downsized(Arch::Auxd), 21).unwrap();
        let spec = &naux.spec;
        let mk = |k: u8| Frame {
            width: spec.input_width,
            height: spec.input_height,
            pixels: (0..spec.input_width * spec.input_height)
                .map(|i| ((i as u32 * 31 + k as u32 * 7) % 256) as u8)
                .collect(),
        };
        let (a, b, c) = (mk(0), mk(1), mk(2));
        let x = naux.act(&a, &b, &c).unwrap();
        let y = auxd.act(&a, &b, &c).unwrap();
        assert_eq!(x.yaw_rate.to_bits(), y.yaw_rate.to_bits());
    }

    use crate::rng::SplitMix64;
}
