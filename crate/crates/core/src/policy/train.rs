//! Behavioral-cloning trainer.

use super::{build, frame_to_rows, Arch, ForwardPass, PolicyNet, PolicySpec, FRAME_STACK};
use crate::data::{stack_frames, Dataset};
use crate::nn::{grad_check, GradCheckReport, OptAlgo, Optimizer, Tensor};
use crate::rng::{derive, shuffle, SplitMix64};
use crate::{Error, Result};

/// Training hyperparameters. Defaults: adam, lr 1e-4, batch 32, 20 epochs.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub algorithm: OptAlgo,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            algorithm: OptAlgo::Adam,
            lr: 1e-4,
            batch_size: 32,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EpochStats {
    /// Mean squared yaw error over the epoch, (rad/s)^2.
    pub control_loss: f64,
    /// Mean per-pixel squared depth error (before the beta weight); 0 for
    /// NAUX.
    pub depth_loss: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainReport {
    pub arch: Arch,
    pub seed: u64,
    pub hyper: TrainHyper,
    pub samples: usize,
    pub epochs: Vec<EpochStats>,
    pub final_control_loss: f64,
    pub final_depth_loss: f64,
    /// Wall time is environment-dependent, so it is reported on stderr but
    /// never serialized: train outputs stay byte-identical across reruns.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Train a policy by behavioral cloning: minimize the squared difference
/// between predicted and expert yaw, plus `beta` times the mean squared
/// depth-target error for AUXD. Shuffling order derives from the train seed;
/// gradient reduction is a fixed-order sum, so results do not depend on
/// available parallelism.
pub fn bc_train(
    net: &mut PolicyNet<f32>,
    data: &Dataset,
    hyper: &TrainHyper,
) -> Result<TrainReport> {
    if data.n_samples() == 0 {
        return Err(Error::invalid("training dataset has no samples"));
    }
    if hyper.batch_size == 0 || hyper.epochs == 0 {
        return Err(Error::invalid("batch size and epochs must be positive"));
    }
    let aux = net.depth_head.is_some() && net.spec.beta != 0.0;
    if net.depth_head.is_some() && !data.with_depth && aux {
        return Err(Error::invalid(
            "AUXD training requires a dataset loaded with depth targets",
        ));
    }

    if aux {
        let depth_dim = net.spec.depth_out_dim();
        for rec in &data.episodes {
            if rec.depths.iter().any(|d| d.data.len() != depth_dim) {
                return Err(Error::Shape {
                    layer: "depth targets".to_string(),
                    expected: format!("{depth_dim} values"),
                    got: "dataset depth frames of different size".to_string(),
                });
            }
        }
    }

    let start = std::time::Instant::now();
    let (h, w) = (net.spec.input_height, net.spec.input_width);
    let px = h * w;
    let depth_dim = net.spec.depth_out_dim();
    let beta = net.spec.beta as f32;
    let mut opt: Optimizer<f32> = Optimizer::new(hyper.algorithm, hyper.lr);
    let mut order: Vec<u32> = (0..data.n_samples() as u32).collect();
    let mut epochs = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        let mut rng = SplitMix64::new(derive(hyper.seed, 0x5448_0000 + epoch as u64));
        shuffle(&mut order, &mut rng);

        let mut control_sum = 0.0f64;
        let mut depth_sum = 0.0f64;
        for (batch_index, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let b = chunk.len();
            let mut frames: Tensor<f32> = Tensor::zeros(&[FRAME_STACK * b, h, w, 1]);
            let mut yaw = vec![0.0f32; b];
            let mut depth_target: Vec<f32> = if aux { vec![0.0; b * depth_dim] } else { Vec::new() };
            for (bi, &s) in chunk.iter().enumerate() {
                let (ep, t) = data.samples[s as usize];
                let record = &data.episodes[ep as usize];
                let (stack, expert_yaw, dtarget) = stack_frames(record, t as usize)?;
                for (k, f) in stack.iter().enumerate() {
                    let off = (bi * FRAME_STACK + k) * px;
                    frame_to_rows(f, &mut frames.data_mut()[off..off + px]);
                }
                yaw[bi] = expert_yaw as f32;
                if aux {
                    let dtarget = dtarget.ok_or_else(|| {
                        Error::invalid("AUXD training sample is missing its depth target")
                    })?;
                    depth_target[bi * depth_dim..(bi + 1) * depth_dim]
                        .copy_from_slice(&dtarget.data);
                }
            }

            net.zero_grads();
            let pass = net.forward(frames)?;
            let (control_loss, d_control) = control_loss_grad(&pass, &yaw);
            let (depth_loss, d_depth) = if aux {
                depth_loss_grad(&pass, &depth_target, depth_dim, beta)
            } else {
                (0.0, None)
            };
            let batch_loss = control_loss + beta as f64 * depth_loss;
            if !batch_loss.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite loss at epoch {epoch} batch {batch_index}"
                )));
            }
            net.backward(&pass, &d_control, d_depth.as_ref())?;
            apply_update(net, &mut opt, epoch, batch_index)?;

            control_sum += control_loss * b as f64;
            depth_sum += depth_loss * b as f64;
        }

        epochs.push(EpochStats {
            control_loss: control_sum / data.n_samples() as f64,
            depth_loss: depth_sum / data.n_samples() as f64,
        });
    }

    let last = *epochs.last().unwrap();
    Ok(TrainReport {
        arch: net.spec.arch,
        seed: hyper.seed,
        hyper: *hyper,
        samples: data.n_samples(),
        epochs,
        final_control_loss: last.control_loss,
        final_depth_loss: last.depth_loss,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Mean squared yaw error and its output gradient.
fn control_loss_grad(pass: &ForwardPass<f32>, yaw: &[f32]) -> (f64, Tensor<f32>) {
    let b = yaw.len();
    let mut d = Tensor::zeros(&[b, 1]);
    let mut loss = 0.0f64;
    for i in 0..b {
        let err = pass.control.data()[i] - yaw[i];
        loss += (err as f64) * (err as f64);
        d.data_mut()[i] = 2.0 * err / b as f32;
    }
    (loss / b as f64, d)
}

/// Mean per-pixel squared depth error (unweighted) and the beta-weighted
/// output gradient.
fn depth_loss_grad(
    pass: &ForwardPass<f32>,
    target: &[f32],
    depth_dim: usize,
    beta: f32,
) -> (f64, Option<Tensor<f32>>) {
    let out = pass.depth.as_ref().expect("depth head output");
    let b = pass.batch;
    let mut d = Tensor::zeros(&[b, depth_dim]);
    let mut loss = 0.0f64;
    let scale = 2.0 * beta / (b as f32 * depth_dim as f32);
    for i in 0..b * depth_dim {
        let err = out.data()[i] - target[i];
        loss += (err as f64) * (err as f64);
        d.data_mut()[i] = scale * err;
    }
    (loss / (b as f64 * depth_dim as f64), Some(d))
}

/// Validate gradients, then apply one optimizer step in fixed parameter
/// order; refuse the step (naming the parameter) on any non-finite value.
fn apply_update(
    net: &mut PolicyNet<f32>,
    opt: &mut Optimizer<f32>,
    epoch: usize,
    batch_index: usize,
) -> Result<()> {
    let mut bad: Option<String> = None;
    net.for_each_param(&mut |name, _, g| {
        if bad.is_none() && !g.all_finite() {
            bad = Some(name);
        }
    });
    if let Some(name) = bad {
        return Err(Error::numeric(format!(
            "non-finite gradient in {name} at epoch {epoch} batch {batch_index}; step refused"
        )));
    }
    opt.begin_step();
    let mut idx = 0;
    let mut bad_param: Option<String> = None;
    net.for_each_param(&mut |name, p, g| {
        opt.update(idx, p, g);
        idx += 1;
        if bad_param.is_none() && !p.all_finite() {
            bad_param = Some(name);
        }
    });
    if let Some(name) = bad_param {
        return Err(Error::numeric(format!(
            "non-finite parameter in {name} after update at epoch {epoch} batch {batch_index}"
        )));
    }
    Ok(())
}

/// Finite-difference check of the full policy graph (downsized spec, f64)
/// against the behavioral-cloning loss.
pub fn policy_grad_check(arch: Arch, eps: f64, seed: u64) -> Result<GradCheckReport> {
    let spec = PolicySpec::downsized(arch);
    let mut net = build::<f64>(&spec, seed)?;
    let mut rng = SplitMix64::new(derive(seed, 0x6763));
    let b = 2usize;
    let mut frames: Tensor<f64> =
        Tensor::zeros(&[FRAME_STACK * b, spec.input_height, spec.input_width, 1]);
    for v in frames.data_mut() {
        *v = rng.next_range(-0.5, 0.5);
    }
    let yaw: Vec<f64> = (0..b).map(|_| rng.next_range(-1.0, 1.0)).collect();
    let depth_dim = spec.depth_out_dim();
    let target: Vec<f64> = (0..b * depth_dim).map(|_| rng.next_range(0.0, 1.0)).collect();
    let beta = spec.beta;

    let loss_of = |net: &mut PolicyNet<f64>| -> (f64, bool) {
        let pass = net.forward(frames.clone()).unwrap();
        let mut loss = 0.0;
        for i in 0..b {
            let err = pass.control.data()[i] - yaw[i];
            loss += err * err;
        }
        loss /= b as f64;
        if let Some(out) = &pass.depth {
            let mut dl = 0.0;
            for i in 0..b * depth_dim {
                let err = out.data()[i] - target[i];
                dl += err * err;
            }
            loss += beta * dl / (b as f64 * depth_dim as f64);
        }
        (loss, pass.any_kink())
    };

    // Analytic gradients via one forward/backward pass.
    net.zero_grads();
    let pass = net.forward(frames.clone())?;
    let mut d_control: Tensor<f64> = Tensor::zeros(&[b, 1]);
    for i in 0..b {
        d_control.data_mut()[i] = 2.0 * (pass.control.data()[i] - yaw[i]) / b as f64;
    }
    let d_depth = pass.depth.as_ref().map(|out| {
        let mut d: Tensor<f64> = Tensor::zeros(&[b, depth_dim]);
        let scale = 2.0 * beta / (b as f64 * depth_dim as f64);
        for i in 0..b * depth_dim {
            d.data_mut()[i] = scale * (out.data()[i] - target[i]);
        }
        d
    });
    net.backward(&pass, &d_control, d_depth.as_ref())?;

    let mut analytic = Vec::new();
    net.for_each_param(&mut |_, _, g| analytic.push(g.clone()));
    Ok(grad_check(
        &mut net,
        &analytic,
        |n, f| n.for_each_param(&mut |_, p, _| f(p)),
        loss_of,
        eps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, EpisodeRecord, RecordManifest};
    use crate::render::{CameraModel, DepthFrame, Frame, DEPTH_COLS, DEPTH_ROWS};
    use crate::sim::{EnvKind, Pose, Termination};

    /// A synthetic episode whose expert yaw is a simple function of frame
    /// brightness, so a small net can fit it.
    fn synthetic_record(spec: &PolicySpec, frames: usize, seed: u64) -> EpisodeRecord {
        let mut rng = SplitMix64::new(seed);
        let (h, w) = (spec.input_height, spec.input_width);
        let mut frs = Vec::with_capacity(frames);
        let mut yaws = Vec::with_capacity(frames);
        for _ in 0..frames {
            let level = rng.next_range(0.1, 0.9);
            let pixels: Vec<u8> = (0..h * w)
                .map(|_| ((level + rng.next_range(-0.05, 0.05)).clamp(0.0, 1.0) * 255.0) as u8)
                .collect();
            frs.push(Frame {
                width: w,
                height: h,
                pixels,
            });
            yaws.push(level * 1.6 - 0.8);
        }
        let n = frs.len();
        EpisodeRecord {
            manifest: RecordManifest {
                env_kind: EnvKind::Canyon,
                seed,
                fps: 20.0,
                frames: n,
                camera: CameraModel {
                    image_width: w,
                    image_height: h,
                    ..CameraModel::default()
                },
                style_pool: "training".to_string(),
                termination: Termination::Success,
                distance_traveled: 0.0,
            },
            frames: frs,
            depths: (0..n)
                .map(|_| DepthFrame {
                    data: vec![1.0; DEPTH_ROWS * DEPTH_COLS],
                })
                .collect(),
            expert_yaw: yaws.clone(),
            applied_yaw: yaws,
            poses: (0..n).map(|_| Pose::origin()).collect(),
        }
    }

    #[test]
    fn policy_graphs_pass_gradient_check() {
        for arch in [Arch::Naux, Arch::Auxd] {
            let report = policy_grad_check(arch, 1e-5, 1).unwrap();
            assert!(
                report.max_rel_err < 1e-4,
                "{arch}: {}",
                report.max_rel_err
            );
            assert!(report.checked > 500, "{arch}: checked {}", report.checked);
            assert!(report.skipped < report.checked / 4, "{arch}: skipped {}", report.skipped);
        }
    }

    #[test]
    fn initial_loss_on_zero_targets_is_mean_square_prediction() {
        let spec = PolicySpec::downsized(Arch::Naux);
        let net = build::<f32>(&spec, 3).unwrap();
        let mut rec = synthetic_record(&spec, 12, 5);
        rec.expert_yaw.iter_mut().for_each(|y| *y = 0.0);
        let data = Dataset::from_records(vec![rec], 1, false);

        // Evaluate the loss by hand over all samples.
        let (h, w) = (spec.input_height, spec.input_width);
        let px = h * w;
        let mut sq = 0.0f64;
        for &(ep, t) in &data.samples {
            let (stack, _, _) = stack_frames(&data.episodes[ep as usize], t as usize).unwrap();
            let mut frames: Tensor<f32> = Tensor::zeros(&[3, h, w, 1]);
            for (k, f) in stack.iter().enumerate() {
                frame_to_rows(f, &mut frames.data_mut()[k * px..(k + 1) * px]);
            }
            let pass = net.forward(frames).unwrap();
            sq += (pass.control.data()[0] as f64).powi(2);
        }
        let expected = sq / data.n_samples() as f64;

        // One "epoch" with a huge batch and zero learning rate measures the
        // same quantity through the trainer.
        let mut net2 = net.clone();
        let report = bc_train(
            &mut net2,
            &data,
            &TrainHyper {
                lr: 0.0,
                batch_size: data.n_samples(),
                epochs: 1,
                ..TrainHyper::default()
            },
        )
        .unwrap();
        assert!(
            (report.final_control_loss - expected).abs() < 1e-9,
            "{} vs {expected}",
            report.final_control_loss
        );
    }

    #[test]
    fn training_halves_the_loss_on_a_small_dataset() {
        let spec = PolicySpec::downsized(Arch::Naux);
        let mut net = build::<f32>(&spec, 1).unwrap();
        let records: Vec<EpisodeRecord> =
            (0..3).map(|k| synthetic_record(&spec, 30, k)).collect();
        let data = Dataset::from_records(records, 1, false);
        // Learning rate scaled up for the tiny test net.
        let hyper = TrainHyper {
            lr: 3e-3,
            epochs: 30,
            ..TrainHyper::default()
        };
        let report = bc_train(&mut net, &data, &hyper).unwrap();
        assert!(
            report.epochs[29].control_loss < 0.5 * report.epochs[0].control_loss,
            "first {} last {}",
            report.epochs[0].control_loss,
            report.epochs[29].control_loss
        );
    }

    #[test]
    fn training_is_deterministic() {
        // Depth head sized to the dataset's 55x74 targets.
        let mut spec = PolicySpec::downsized(Arch::Auxd);
        spec.depth_rows = DEPTH_ROWS;
        spec.depth_cols = DEPTH_COLS;
        let records: Vec<EpisodeRecord> =
            (0..2).map(|k| synthetic_record(&spec, 20, k)).collect();
        let data = Dataset::from_records(records, 1, true);
        let hyper = TrainHyper {
            epochs: 3,
            ..TrainHyper::default()
        };
        let run = || {
            let mut net = build::<f32>(&spec, 9).unwrap();
            let report = bc_train(&mut net, &data, &hyper).unwrap();
            let mut params = Vec::new();
            net.for_each_param(&mut |_, p, _| params.push(p.clone()));
            (params, report.final_control_loss)
        };
        let (pa, la) = run();
        let (pb, lb) = run();
        assert_eq!(la.to_bits(), lb.to_bits());
        for (a, b) in pa.iter().zip(&pb) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn beta_zero_auxd_control_path_matches_naux() {
        let mut naux_spec = PolicySpec::downsized(Arch::Naux);
        naux_spec.beta = 0.0;
        let mut auxd_spec = PolicySpec::downsized(Arch::Auxd);
        auxd_spec.beta = 0.0;
        auxd_spec.depth_rows = DEPTH_ROWS;
        auxd_spec.depth_cols = DEPTH_COLS;
        let records: Vec<EpisodeRecord> =
            (0..2).map(|k| synthetic_record(&naux_spec, 16, k)).collect();
        let data = Dataset::from_records(records, 1, true);
        let hyper = TrainHyper {
            epochs: 2,
            ..TrainHyper::default()
        };

        let mut naux = build::<f32>(&naux_spec, 4).unwrap();
        let mut auxd = build::<f32>(&auxd_spec, 4).unwrap();
        let ra = bc_train(&mut naux, &data, &hyper).unwrap();
        let rb = bc_train(&mut auxd, &data, &hyper).unwrap();
        assert_eq!(
            ra.final_control_loss.to_bits(),
            rb.final_control_loss.to_bits()
        );
        // Control-path parameters stay bitwise identical.
        let mut control_params = std::collections::BTreeMap::new();
        naux.for_each_param(&mut |n, p, _| {
            control_params.insert(n, p.clone());
        });
        auxd.for_each_param(&mut |n, p, _| {
            if let Some(expect) = control_params.get(&n) {
                for (x, y) in p.data().iter().zip(expect.data()) {
                    assert_eq!(x.to_bits(), y.to_bits(), "{n}");
                }
            }
        });
    }
}
