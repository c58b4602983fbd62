//! Deep Q-network for capacity-cell on/off control.
//!
//! Actions: `0` is a no-op, `k` in `1..=9` toggles capacity cell `k`.

mod mlp;
mod replay;

use std::fs;
use std::path::Path;

use rand::Rng;

pub use crate::config::DqnConfig;
use crate::error::DqnError;
use crate::netmodel::{CellId, World};
use crate::ric::{KpmReport, RcAction, RcCommand};
pub use mlp::{Gradients, Layer, Mlp};
pub use replay::{ReplayBuffer, Transition};

pub const FEATURES_PER_CELL: usize = 4;
pub const TIME_FEATURES: usize = 2;

/// Translate a Q-network action index into a control message.
pub fn action_to_control(action: usize) -> RcAction {
    if action == 0 {
        RcAction::noop()
    } else {
        RcAction::new(action as CellId, RcCommand::Toggle)
    }
}

/// Normalisers for the KPM feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEncoder {
    pub n_cells: usize,
    pub ue_total: f64,
    pub cell_capacity_mbps: Vec<f64>,
    pub max_cell_energy_wh: f64,
}

impl StateEncoder {
    pub fn for_world(world: &World) -> Self {
        Self {
            n_cells: world.n_cells(),
            ue_total: world.ues.len() as f64,
            cell_capacity_mbps: (0..world.n_cells() as CellId).map(|c| world.cell_capacity_mbps(c)).collect(),
            max_cell_energy_wh: world.max_cell_energy_wh(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.n_cells * FEATURES_PER_CELL + TIME_FEATURES
    }

    /// Per cell in ascending id: on flag, connected UEs / total UEs,
    /// throughput / peak cell rate, energy / largest cell energy. Then the
    /// hour of day on the unit circle.
    pub fn encode_state(&self, reports: &[KpmReport], hour: u8) -> Result<Vec<f64>, DqnError> {
        let mut out = Vec::with_capacity(self.state_dim());
        for cell in 0..self.n_cells {
            let r = reports
                .iter()
                .rev()
                .find(|r| r.cell_id as usize == cell)
                .ok_or(DqnError::MissingCell(cell as CellId))?;
            out.push(if r.on { 1.0 } else { 0.0 });
            out.push(f64::from(r.connected_ues) / self.ue_total);
            out.push(r.throughput_mbps / self.cell_capacity_mbps[cell]);
            out.push(r.energy_wh / self.max_cell_energy_wh);
        }
        let angle = 2.0 * std::f64::consts::PI * f64::from(hour) / 24.0;
        out.push(angle.sin());
        out.push(angle.cos());
        Ok(out)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice. Always consumes one uniform draw, plus one more
/// when exploring.
pub fn select_action<R: Rng>(q_values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    if u < epsilon {
        rng.gen_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

/// Linear decay from `epsilon_start` to `epsilon_end` over the decay
/// episodes, then flat.
pub fn epsilon_for_episode(cfg: &DqnConfig, episode: u32) -> f64 {
    if cfg.epsilon_decay_episodes == 0 || episode >= cfg.epsilon_decay_episodes {
        return cfg.epsilon_end;
    }
    let f = f64::from(episode) / f64::from(cfg.epsilon_decay_episodes);
    cfg.epsilon_start + f * (cfg.epsilon_end - cfg.epsilon_start)
}

/// Bootstrapped regression targets from the target network.
pub fn td_targets(target_net: &Mlp, batch: &[&Transition], gamma: f64) -> Result<Vec<f64>, DqnError> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                Ok(t.reward)
            } else {
                let q = target_net.forward(&t.next_state)?;
                Ok(t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        })
        .collect()
}

/// One gradient-descent update of `net` on a batch. Returns the loss before
/// the update. The target network is only read.
pub fn train_step(net: &mut Mlp, target_net: &Mlp, batch: &[&Transition], cfg: &DqnConfig, update: u64) -> Result<f64, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::EmptyBatch);
    }
    let targets = td_targets(target_net, batch, cfg.gamma)?;
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let (loss, grads) = net.td_loss_and_gradients(&states, &actions, &targets)?;
    if !loss.is_finite() {
        return Err(DqnError::NonFiniteLoss { loss, update });
    }
    net.apply_sgd(&grads, cfg.learning_rate);
    if !net.all_finite() {
        return Err(DqnError::NonFiniteLoss { loss: f64::NAN, update });
    }
    Ok(loss)
}

pub fn sync_target(net: &Mlp, target_net: &mut Mlp) {
    assert_eq!(net.layer_sizes(), target_net.layer_sizes(), "target shape mismatch");
    target_net.clone_from(net);
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"NTNRICQN";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint: magic, format version, layer count and sizes, then
/// every parameter as little-endian f64 in layer order (weights row-major,
/// then biases).
pub fn checkpoint_bytes(net: &Mlp) -> Vec<u8> {
    let sizes = net.layer_sizes();
    let mut out = Vec::with_capacity(16 + 8 * (sizes.len() + net.param_count()));
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in sizes {
        out.extend_from_slice(&(s as u64).to_le_bytes());
    }
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Mlp, DqnError> {
    let bad = |m: &str| DqnError::Checkpoint(m.to_string());
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], DqnError> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
    if !(2..=64).contains(&n) {
        return Err(bad("implausible layer count"));
    }
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        let s = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        if s == 0 || s > 1 << 20 {
            return Err(bad("implausible layer size"));
        }
        sizes.push(s);
    }
    let mut net = Mlp::zeros(&sizes);
    let mut params = Vec::with_capacity(net.param_count());
    for _ in 0..net.param_count() {
        params.push(f64::from_le_bytes(take(8)?.try_into().expect("8 bytes")));
    }
    if take(1).is_ok() {
        return Err(bad("trailing bytes"));
    }
    net.set_params(&params)?;
    Ok(net)
}

pub fn save_checkpoint(net: &Mlp, path: &Path) -> Result<(), DqnError> {
    fs::write(path, checkpoint_bytes(net))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Mlp, DqnError> {
    checkpoint_from_bytes(&fs::read(path)?)
}
