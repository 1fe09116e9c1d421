//! Desk-scale TimeGAN: an embedder/recovery autoencoding pair, a latent
//! generator and next-step supervisor, and a discriminator, trained in
//! three phases (reconstruction, supervised, joint adversarial). A trained
//! model samples fake instances of the class subset it was fitted on, with
//! every output value in (0, 1) via the sigmoid recovery head.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    Adam, AdamConfig, BoundParams, Graph, GruCell, Linear, NodeId, ParamId, ParamSet, Tensor,
};
use crate::error::{Error, Result};
use crate::ingest::MinMaxScaler;
use crate::series::{Dataset, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGanConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub z_dim: usize,
    pub iters_embed: usize,
    pub iters_supervised: usize,
    pub iters_joint: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Weight on the square root of the supervised next-step loss inside
    /// the generator objective.
    pub lambda_sup: f64,
    /// Weight on the batch moment-matching loss.
    pub lambda_moment: f64,
    /// Weight on the unsupervised adversarial term taken on raw generator
    /// latents.
    pub gamma: f64,
    /// The discriminator only updates when its loss exceeds this gate.
    pub disc_threshold: f64,
}

impl Default for TimeGanConfig {
    fn default() -> Self {
        TimeGanConfig {
            hidden_dim: 16,
            num_layers: 1,
            z_dim: 1,
            iters_embed: 500,
            iters_supervised: 500,
            iters_joint: 1000,
            batch_size: 16,
            lr: 1e-3,
            seed: 0,
            lambda_sup: 100.0,
            lambda_moment: 100.0,
            gamma: 1.0,
            disc_threshold: 0.15,
        }
    }
}

impl TimeGanConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0
            || self.num_layers == 0
            || self.z_dim == 0
            || self.batch_size == 0
        {
            return Err(Error::invalid_input(
                "hidden_dim, num_layers, z_dim and batch_size must be positive",
            ));
        }
        if self.lambda_sup < 0.0 || self.lambda_moment < 0.0 || self.gamma < 0.0 {
            return Err(Error::invalid_input("loss weights must be >= 0"));
        }
        Ok(())
    }
}

/// A GRU stack followed by a dense head.
#[derive(Debug, Clone)]
struct SequenceNet {
    cells: Vec<GruCell>,
    head: Linear,
    sigmoid_head: bool,
}

impl SequenceNet {
    fn new(
        params: &mut ParamSet,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        layers: usize,
        out_dim: usize,
        sigmoid_head: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(layers);
        for layer in 0..layers {
            let in_dim = if layer == 0 { input_dim } else { hidden_dim };
            cells.push(GruCell::new(
                params,
                &format!("{prefix}.gru{layer}"),
                in_dim,
                hidden_dim,
                rng,
            )?);
        }
        let head = Linear::new(params, &format!("{prefix}.head"), hidden_dim, out_dim, rng)?;
        Ok(SequenceNet {
            cells,
            head,
            sigmoid_head,
        })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.cells.iter().flat_map(GruCell::param_ids).collect();
        ids.extend(self.head.param_ids());
        ids
    }

    /// Unrolls over `inputs` (one `[B, in_dim]` node per step), producing
    /// one `[B, out_dim]` head output per step.
    fn run(&self, g: &mut Graph, bound: &BoundParams, inputs: &[NodeId], batch: usize) -> Result<Vec<NodeId>> {
        let mut states: Vec<NodeId> = self
            .cells
            .iter()
            .map(|c| c.initial_state(g, batch))
            .collect::<Result<Vec<_>>>()?;
        let mut outputs = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let mut carry = x;
            for (layer, cell) in self.cells.iter().enumerate() {
                let h = cell.step(g, bound, carry, states[layer])?;
                states[layer] = h;
                carry = h;
            }
            let mut out = self.head.apply(g, bound, carry)?;
            if self.sigmoid_head {
                out = g.sigmoid(out);
            }
            outputs.push(out);
        }
        Ok(outputs)
    }
}

/// Per-phase loss traces captured during training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Reconstruction MSE per embedding-phase iteration.
    pub embed: Vec<f64>,
    /// Supervised next-step MSE per supervised-phase iteration.
    pub supervised: Vec<f64>,
    /// Generator loss per joint-phase iteration (last generator step).
    pub joint_generator: Vec<f64>,
    /// Discriminator loss per joint-phase iteration (before gating).
    pub joint_discriminator: Vec<f64>,
}

/// A trained TimeGAN bound to the series length and scaler of its training
/// subset.
pub struct TimeGanModel {
    cfg: TimeGanConfig,
    nets: Nets,
    series_len: usize,
    scaler: MinMaxScaler,
    subset_fingerprint: u64,
    pub training_log: TrainingLog,
}

struct Nets {
    params: ParamSet,
    embedder: SequenceNet,
    recovery: SequenceNet,
    generator: SequenceNet,
    supervisor: SequenceNet,
    discriminator: SequenceNet,
}

fn build_nets(cfg: &TimeGanConfig, rng: &mut ChaCha8Rng) -> Result<Nets> {
    let mut params = ParamSet::new();
    let h = cfg.hidden_dim;
    let embedder = SequenceNet::new(&mut params, "embedder", 1, h, cfg.num_layers, h, true, rng)?;
    let recovery = SequenceNet::new(&mut params, "recovery", h, h, cfg.num_layers, 1, true, rng)?;
    let generator = SequenceNet::new(
        &mut params,
        "generator",
        cfg.z_dim,
        h,
        cfg.num_layers,
        h,
        true,
        rng,
    )?;
    // one layer fewer than the stack, floored at one, as in the reference
    let sup_layers = (cfg.num_layers - 1).max(1);
    let supervisor = SequenceNet::new(&mut params, "supervisor", h, h, sup_layers, h, true, rng)?;
    let discriminator =
        SequenceNet::new(&mut params, "discriminator", h, h, cfg.num_layers, 1, false, rng)?;
    Ok(Nets {
        params,
        embedder,
        recovery,
        generator,
        supervisor,
        discriminator,
    })
}

/// `batch_size` distinct indices when possible, sampled with a seeded
/// partial shuffle.
fn sample_batch(rng: &mut ChaCha8Rng, n: usize, batch_size: usize) -> Vec<usize> {
    if batch_size >= n {
        return (0..n).cycle().take(batch_size).collect();
    }
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..batch_size {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(batch_size);
    indices
}

fn batch_tensor(d: &Dataset, indices: &[usize]) -> Result<Tensor> {
    let n = d.series_length();
    let mut data = Vec::with_capacity(indices.len() * n);
    for &i in indices {
        data.extend_from_slice(d.instances()[i].series.values());
    }
    Tensor::matrix(indices.len(), n, data)
}

fn noise_tensor(rng: &mut ChaCha8Rng, batch: usize, t: usize, z_dim: usize) -> Result<Tensor> {
    let data: Vec<f64> = (0..batch * t * z_dim)
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    Tensor::matrix(batch, t * z_dim, data)
}

/// Splits a `[B, T*dim]` leaf into `T` nodes of `[B, dim]`.
fn per_step_inputs(g: &mut Graph, x: NodeId, t: usize, dim: usize) -> Result<Vec<NodeId>> {
    (0..t).map(|i| g.slice_time(x, i * dim, dim)).collect()
}

/// Mean next-step MSE between a latent sequence and its supervised
/// prediction: `mse(h[t+1], h_hat[t])` averaged over `t`.
fn supervised_loss(g: &mut Graph, h: &[NodeId], h_hat: &[NodeId]) -> Result<NodeId> {
    let steps = h.len() - 1;
    debug_assert!(steps >= 1);
    let mut acc: Option<NodeId> = None;
    for t in 0..steps {
        let l = g.mse_loss(h_hat[t], h[t + 1])?;
        acc = Some(match acc {
            Some(prev) => g.add(prev, l)?,
            None => l,
        });
    }
    Ok(g.scale(acc.expect("at least one step"), 1.0 / steps as f64))
}

fn sqrt_guarded(g: &mut Graph, x: NodeId) -> Result<NodeId> {
    let tiny = g.leaf(Tensor::scalar(1e-12));
    let shifted = g.add(x, tiny)?;
    Ok(g.sqrt(shifted))
}

fn check_finite(value: f64, phase: &str, iteration: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::TrainingDiverged {
            phase: phase.into(),
            iteration,
        })
    }
}

/// Trains a TimeGAN on `subset`, whose values must already lie in `[0, 1]`
/// under `scaler`. Deterministic given `cfg.seed`.
pub fn train_timegan(
    subset: &Dataset,
    scaler: MinMaxScaler,
    cfg: &TimeGanConfig,
) -> Result<TimeGanModel> {
    cfg.validate()?;
    if subset.is_empty() {
        return Err(Error::usage("cannot train a TimeGAN on an empty subset"));
    }
    for inst in subset.instances() {
        if inst.series.values().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::usage(
                "TimeGAN training data must be scaled into [0, 1]",
            ));
        }
    }
    let t_len = subset.series_length();
    if t_len < 2 {
        return Err(Error::usage("TimeGAN needs series of length >= 2"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nets = build_nets(cfg, &mut rng)?;

    let adam_cfg = AdamConfig::with_lr(cfg.lr);
    let mut er_ids = nets.embedder.param_ids();
    er_ids.extend(nets.recovery.param_ids());
    let mut adam_er = Adam::new(adam_cfg, er_ids, &nets.params);
    let mut adam_s = Adam::new(adam_cfg, nets.supervisor.param_ids(), &nets.params);
    let mut gs_ids = nets.generator.param_ids();
    gs_ids.extend(nets.supervisor.param_ids());
    let mut adam_gs = Adam::new(adam_cfg, gs_ids, &nets.params);
    let mut adam_d = Adam::new(adam_cfg, nets.discriminator.param_ids(), &nets.params);

    let mut log = TrainingLog::default();
    let batch = cfg.batch_size;

    // phase 1: embedder + recovery reconstruction
    for iter in 0..cfg.iters_embed {
        let idx = sample_batch(&mut rng, subset.len(), batch);
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &nets.params);
        let x = g.leaf(batch_tensor(subset, &idx)?);
        let xs = per_step_inputs(&mut g, x, t_len, 1)?;
        let h = nets.embedder.run(&mut g, &bound, &xs, idx.len())?;
        let x_tilde_steps = nets.recovery.run(&mut g, &bound, &h, idx.len())?;
        let x_tilde = g.concat_time(&x_tilde_steps)?;
        let recon = g.mse_loss(x_tilde, x)?;
        let loss = {
            let root = sqrt_guarded(&mut g, recon)?;
            g.scale(root, 10.0)
        };
        log.embed
            .push(check_finite(g.value(recon).item()?, "embedding", iter)?);
        g.backward(loss)?;
        adam_er.step(&mut nets.params, &bound.grads(&g))?;
    }

    // phase 2: supervisor on real embeddings
    for iter in 0..cfg.iters_supervised {
        let idx = sample_batch(&mut rng, subset.len(), batch);
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &nets.params);
        let x = g.leaf(batch_tensor(subset, &idx)?);
        let xs = per_step_inputs(&mut g, x, t_len, 1)?;
        let h = nets.embedder.run(&mut g, &bound, &xs, idx.len())?;
        let h_hat = nets.supervisor.run(&mut g, &bound, &h, idx.len())?;
        let loss = supervised_loss(&mut g, &h, &h_hat)?;
        log.supervised
            .push(check_finite(g.value(loss).item()?, "supervised", iter)?);
        g.backward(loss)?;
        adam_s.step(&mut nets.params, &bound.grads(&g))?;
    }

    // phase 3: joint adversarial training
    for iter in 0..cfg.iters_joint {
        // generator (and supervisor), twice per discriminator turn
        let mut last_g_loss = f64::NAN;
        for _ in 0..2 {
            let idx = sample_batch(&mut rng, subset.len(), batch);
            let z_raw = noise_tensor(&mut rng, idx.len(), t_len, cfg.z_dim)?;
            let mut g = Graph::new();
            let bound = BoundParams::bind(&mut g, &nets.params);
            let x = g.leaf(batch_tensor(subset, &idx)?);
            let xs = per_step_inputs(&mut g, x, t_len, 1)?;
            let z = g.leaf(z_raw);
            let zs = per_step_inputs(&mut g, z, t_len, cfg.z_dim)?;

            let h = nets.embedder.run(&mut g, &bound, &xs, idx.len())?;
            let e_hat = nets.generator.run(&mut g, &bound, &zs, idx.len())?;
            let h_hat = nets.supervisor.run(&mut g, &bound, &e_hat, idx.len())?;
            let h_hat_supervise = nets.supervisor.run(&mut g, &bound, &h, idx.len())?;
            let x_hat_steps = nets.recovery.run(&mut g, &bound, &h_hat, idx.len())?;
            let x_hat = g.concat_time(&x_hat_steps)?;

            let y_fake_steps = nets.discriminator.run(&mut g, &bound, &h_hat, idx.len())?;
            let y_fake = g.concat_time(&y_fake_steps)?;
            let y_fake_e_steps = nets.discriminator.run(&mut g, &bound, &e_hat, idx.len())?;
            let y_fake_e = g.concat_time(&y_fake_e_steps)?;

            let ones = g.leaf(Tensor::filled(vec![idx.len(), t_len], 1.0)?);
            let adv = g.bce_loss(y_fake, ones)?;
            let adv_e_raw = g.bce_loss(y_fake_e, ones)?;
            let adv_e = g.scale(adv_e_raw, cfg.gamma);
            let sup_raw = supervised_loss(&mut g, &h, &h_hat_supervise)?;
            let sup_root = sqrt_guarded(&mut g, sup_raw)?;
            let sup = g.scale(sup_root, cfg.lambda_sup);
            let moment_raw = g.moment_loss(x_hat, x)?;
            let moment = g.scale(moment_raw, cfg.lambda_moment);

            let mut loss = g.add(adv, adv_e)?;
            loss = g.add(loss, sup)?;
            loss = g.add(loss, moment)?;
            last_g_loss = check_finite(g.value(loss).item()?, "joint-generator", iter)?;
            g.backward(loss)?;
            adam_gs.step(&mut nets.params, &bound.grads(&g))?;
        }
        log.joint_generator.push(last_g_loss);

        // embedder refresh
        {
            let idx = sample_batch(&mut rng, subset.len(), batch);
            let mut g = Graph::new();
            let bound = BoundParams::bind(&mut g, &nets.params);
            let x = g.leaf(batch_tensor(subset, &idx)?);
            let xs = per_step_inputs(&mut g, x, t_len, 1)?;
            let h = nets.embedder.run(&mut g, &bound, &xs, idx.len())?;
            let x_tilde_steps = nets.recovery.run(&mut g, &bound, &h, idx.len())?;
            let x_tilde = g.concat_time(&x_tilde_steps)?;
            let recon = g.mse_loss(x_tilde, x)?;
            let recon_root = sqrt_guarded(&mut g, recon)?;
            let recon_term = g.scale(recon_root, 10.0);
            let h_hat_supervise = nets.supervisor.run(&mut g, &bound, &h, idx.len())?;
            let sup_raw = supervised_loss(&mut g, &h, &h_hat_supervise)?;
            let sup_term = g.scale(sup_raw, 0.1);
            let loss = g.add(recon_term, sup_term)?;
            check_finite(g.value(loss).item()?, "joint-embedder", iter)?;
            g.backward(loss)?;
            adam_er.step(&mut nets.params, &bound.grads(&g))?;
        }

        // discriminator, gated on its current loss
        {
            let idx = sample_batch(&mut rng, subset.len(), batch);
            let z_raw = noise_tensor(&mut rng, idx.len(), t_len, cfg.z_dim)?;
            let mut g = Graph::new();
            let bound = BoundParams::bind(&mut g, &nets.params);
            let x = g.leaf(batch_tensor(subset, &idx)?);
            let xs = per_step_inputs(&mut g, x, t_len, 1)?;
            let z = g.leaf(z_raw);
            let zs = per_step_inputs(&mut g, z, t_len, cfg.z_dim)?;

            let h = nets.embedder.run(&mut g, &bound, &xs, idx.len())?;
            let e_hat = nets.generator.run(&mut g, &bound, &zs, idx.len())?;
            let h_hat = nets.supervisor.run(&mut g, &bound, &e_hat, idx.len())?;

            let y_real_steps = nets.discriminator.run(&mut g, &bound, &h, idx.len())?;
            let y_real = g.concat_time(&y_real_steps)?;
            let y_fake_steps = nets.discriminator.run(&mut g, &bound, &h_hat, idx.len())?;
            let y_fake = g.concat_time(&y_fake_steps)?;
            let y_fake_e_steps = nets.discriminator.run(&mut g, &bound, &e_hat, idx.len())?;
            let y_fake_e = g.concat_time(&y_fake_e_steps)?;

            let ones = g.leaf(Tensor::filled(vec![idx.len(), t_len], 1.0)?);
            let zeros = g.leaf(Tensor::filled(vec![idx.len(), t_len], 0.0)?);
            let real_term = g.bce_loss(y_real, ones)?;
            let fake_term = g.bce_loss(y_fake, zeros)?;
            let fake_e_raw = g.bce_loss(y_fake_e, zeros)?;
            let fake_e_term = g.scale(fake_e_raw, cfg.gamma);
            let mut loss = g.add(real_term, fake_term)?;
            loss = g.add(loss, fake_e_term)?;
            let d_loss = check_finite(g.value(loss).item()?, "joint-discriminator", iter)?;
            log.joint_discriminator.push(d_loss);
            if d_loss > cfg.disc_threshold {
                g.backward(loss)?;
                adam_d.step(&mut nets.params, &bound.grads(&g))?;
            }
        }
    }

    Ok(TimeGanModel {
        cfg: cfg.clone(),
        nets,
        series_len: t_len,
        scaler,
        subset_fingerprint: subset.fingerprint(),
        training_log: log,
    })
}

impl TimeGanModel {
    pub fn config(&self) -> &TimeGanConfig {
        &self.cfg
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn scaler(&self) -> &MinMaxScaler {
        &self.scaler
    }

    /// Fingerprint of the dataset the model was trained on, for verifying
    /// label exclusion and cache identity.
    pub fn subset_fingerprint(&self) -> u64 {
        self.subset_fingerprint
    }

    /// Untrained model with seeded random parameters; outputs still lie in
    /// (0, 1) through the sigmoid recovery head.
    pub fn untrained(cfg: &TimeGanConfig, series_len: usize, scaler: MinMaxScaler) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let nets = build_nets(cfg, &mut rng)?;
        Ok(TimeGanModel {
            cfg: cfg.clone(),
            nets,
            series_len,
            scaler,
            subset_fingerprint: 0,
            training_log: TrainingLog::default(),
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.nets.params
    }

    /// Samples `m` fake series of length `n` in scaled space: per-timestep
    /// noise uniform in `[0, 1]^z_dim`, pushed through generator,
    /// supervisor and recovery. Deterministic given `seed`.
    pub fn sample_fakes(&self, m: usize, n: usize, seed: u64) -> Result<Vec<TimeSeries>> {
        if n != self.series_len {
            return Err(Error::usage(format!(
                "model was trained on length {}, cannot sample length {n}",
                self.series_len
            )));
        }
        if m == 0 {
            return Err(Error::usage("must sample at least one fake instance"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z_raw = noise_tensor(&mut rng, m, n, self.cfg.z_dim)?;
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &self.nets.params);
        let z = g.leaf(z_raw);
        let zs = per_step_inputs(&mut g, z, n, self.cfg.z_dim)?;
        let e_hat = self.nets.generator.run(&mut g, &bound, &zs, m)?;
        let h_hat = self.nets.supervisor.run(&mut g, &bound, &e_hat, m)?;
        let x_steps = self.nets.recovery.run(&mut g, &bound, &h_hat, m)?;
        let x_hat = g.concat_time(&x_steps)?;
        let data = g.value(x_hat).data();
        (0..m)
            .map(|i| {
                TimeSeries::with_id(
                    data[i * n..(i + 1) * n].to_vec(),
                    Some(format!("fake-{seed}-{i}")),
                )
            })
            .collect()
    }

    /// Samples fakes and maps them back to the original data scale through
    /// the stored scaler.
    pub fn sample_fakes_original_scale(
        &self,
        m: usize,
        n: usize,
        seed: u64,
    ) -> Result<Vec<TimeSeries>> {
        self.sample_fakes(m, n, seed)?
            .iter()
            .map(|f| self.scaler.inverse_transform(f))
            .collect()
    }

    /// Autoencodes a scaled series through embedder and recovery; a probe
    /// of reconstruction quality after phase-1 training.
    pub fn reconstruct(&self, series: &TimeSeries) -> Result<TimeSeries> {
        if series.len() != self.series_len {
            return Err(Error::usage(format!(
                "model was trained on length {}, got {}",
                self.series_len,
                series.len()
            )));
        }
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &self.nets.params);
        let x = g.leaf(Tensor::matrix(1, self.series_len, series.values().to_vec())?);
        let xs = per_step_inputs(&mut g, x, self.series_len, 1)?;
        let h = self.nets.embedder.run(&mut g, &bound, &xs, 1)?;
        let steps = self.nets.recovery.run(&mut g, &bound, &h, 1)?;
        let out = g.concat_time(&steps)?;
        TimeSeries::with_id(
            g.value(out).data().to_vec(),
            series.id().map(str::to_owned),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut with_meta = self.nets.params.clone();
        with_meta.add("meta.hidden_dim", Tensor::scalar(self.cfg.hidden_dim as f64))?;
        with_meta.add("meta.num_layers", Tensor::scalar(self.cfg.num_layers as f64))?;
        with_meta.add("meta.z_dim", Tensor::scalar(self.cfg.z_dim as f64))?;
        with_meta.add("meta.series_len", Tensor::scalar(self.series_len as f64))?;
        with_meta.add("meta.scaler_min", Tensor::scalar(self.scaler.min()))?;
        with_meta.add("meta.scaler_max", Tensor::scalar(self.scaler.max()))?;
        with_meta.add(
            "meta.fingerprint_hi",
            Tensor::scalar((self.subset_fingerprint >> 32) as f64),
        )?;
        with_meta.add(
            "meta.fingerprint_lo",
            Tensor::scalar((self.subset_fingerprint & 0xffff_ffff) as f64),
        )?;
        with_meta.save(path)
    }

    /// Reloads a model saved with [`TimeGanModel::save`]. The training log
    /// is not persisted.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let stored = ParamSet::load(path)?;
        let meta = |name: &str| -> Result<f64> {
            let id = stored
                .id_by_name(name)
                .ok_or_else(|| Error::invalid_input(format!("missing {name} in model file")))?;
            stored.tensor(id).item()
        };
        let cfg = TimeGanConfig {
            hidden_dim: meta("meta.hidden_dim")? as usize,
            num_layers: meta("meta.num_layers")? as usize,
            z_dim: meta("meta.z_dim")? as usize,
            ..TimeGanConfig::default()
        };
        let series_len = meta("meta.series_len")? as usize;
        let scaler = MinMaxScaler::new(meta("meta.scaler_min")?, meta("meta.scaler_max")?)?;
        let fingerprint =
            ((meta("meta.fingerprint_hi")? as u64) << 32) | (meta("meta.fingerprint_lo")? as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut nets = build_nets(&cfg, &mut rng)?;
        nets.params.load_values_from(&stored)?;
        Ok(TimeGanModel {
            cfg,
            nets,
            series_len,
            scaler,
            subset_fingerprint: fingerprint,
            training_log: TrainingLog::default(),
        })
    }
}
