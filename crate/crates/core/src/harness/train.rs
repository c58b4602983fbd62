//! DQN training loop over consecutive days.

use std::fmt::Write as _;

use rand::SeedableRng;

use crate::config::DqnConfig;
use crate::dqn::{self, Mlp, ReplayBuffer, StateEncoder, Transition};
use crate::error::HarnessError;
use crate::harness::episode::{run_days, state_reports, RunOptions, SUBSCRIBER_ID};
use crate::harness::policy::AlwaysOn;
use crate::netmodel::{step_hour, World, HOURS_PER_DAY};
use crate::rng;
use crate::ric::RicBus;

pub const LEARNING_CURVE_HEADER: &str = "episode,mean_efficiency,epsilon,loss";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub episode: u32,
    /// Daily efficiency of the episode, bits per joule.
    pub mean_efficiency: f64,
    pub epsilon: f64,
    /// Mean loss of the episode's updates (0 when none ran).
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub net: Mlp,
    pub curve: Vec<CurvePoint>,
    /// Always-on efficiency the reward is normalised by.
    pub baseline_efficiency: f64,
    pub updates: u64,
}

pub fn learning_curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from(LEARNING_CURVE_HEADER);
    s.push('\n');
    for p in curve {
        writeln!(s, "{},{:.9},{:.6},{:.9}", p.episode, p.mean_efficiency, p.epsilon, p.loss).expect("write to string");
    }
    s
}

/// Mean daily always-on efficiency over the first `days` days.
pub fn baseline_efficiency(world: &World, days: u32) -> Result<f64, HarnessError> {
    let out = run_days(world, &mut AlwaysOn, RunOptions { first_day: 0, days: days.max(1), warmup_days: 0 })?;
    Ok(out.mean_efficiency())
}

pub fn layer_sizes(encoder: &StateEncoder, n_actions: usize, cfg: &DqnConfig) -> Vec<usize> {
    let mut sizes = vec![encoder.state_dim()];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(n_actions);
    sizes
}

/// Freshly initialised Q-network for a world.
pub fn init_network(world: &World, cfg: &DqnConfig, seed: u64) -> Mlp {
    let encoder = StateEncoder::for_world(world);
    let sizes = layer_sizes(&encoder, world.switchable_ids().len() + 1, cfg);
    Mlp::new(&sizes, &mut rng::stream(seed, "dqn-init", &[]))
}

/// Train for `cfg.episodes` days (day index = episode). The network state
/// carries across midnight but the last hour of each day is stored as
/// terminal, so returns never span days. The reward of an hour is its
/// efficiency divided by the always-on baseline.
pub fn train(world: &World, cfg: &DqnConfig, seed: u64) -> Result<TrainOutput, HarnessError> {
    let encoder = StateEncoder::for_world(world);
    let baseline = baseline_efficiency(world, cfg.baseline_days)?;
    if baseline <= 0.0 {
        return Err(HarnessError::Invalid("always-on baseline efficiency is zero".into()));
    }
    let mut net = init_network(world, cfg, seed);
    let mut target = net.clone();
    let mut replay = ReplayBuffer::new(cfg.replay_capacity, rng::stream(seed, "dqn-replay", &[]));
    let mut explore = rand_chacha::ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, "dqn-explore", &[]));

    let mut bus = RicBus::new(world.switchable_ids());
    let sub = bus.subscribe(SUBSCRIBER_ID, 1)?;
    let mut state = world.initial_state(0);
    let mut obs = encoder.encode_state(&state_reports(&state), 0)?;
    let mut curve = Vec::with_capacity(cfg.episodes as usize);
    let mut steps: u64 = 0;
    let mut updates: u64 = 0;

    for episode in 0..cfg.episodes {
        let day = u64::from(episode);
        let epsilon = dqn::epsilon_for_episode(cfg, episode);
        let (mut bits, mut energy_wh) = (0.0, 0.0);
        let (mut loss_sum, mut loss_n) = (0.0, 0u64);
        for hour in 0..HOURS_PER_DAY {
            bus.set_clock(day, hour);
            let q = net.forward(&obs)?;
            let action = dqn::select_action(&q, epsilon, &mut explore);
            bus.submit_control(dqn::action_to_control(action));
            let pending = bus.take_pending_controls();
            let out = step_hour(world, &state, &pending);
            bus.publish_indications(&out.reports);
            let batch = bus.poll_latest(sub).unwrap_or_else(|| out.reports.clone());
            let next_hour = out.state.hour_of_day;
            let next_obs = encoder.encode_state(&batch, next_hour)?;
            let reward = out.outcome.efficiency_bits_per_j() / baseline;
            bits += out.outcome.bits();
            energy_wh += out.outcome.total_energy_wh();
            replay.push(Transition { state: obs, action, reward, next_state: next_obs.clone(), terminal: hour + 1 == HOURS_PER_DAY });
            obs = next_obs;
            state = out.state;
            steps += 1;

            for _ in 0..cfg.updates_per_step {
                if replay.len() < cfg.batch_size {
                    break;
                }
                let sample = replay.sample(cfg.batch_size);
                let loss = dqn::train_step(&mut net, &target, &sample, cfg, updates)?;
                updates += 1;
                loss_sum += loss;
                loss_n += 1;
            }
            if steps % cfg.target_sync_period == 0 {
                dqn::sync_target(&net, &mut target);
            }
        }
        let mean_efficiency = if energy_wh > 0.0 { bits / (energy_wh * 3600.0) } else { 0.0 };
        let loss = if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 };
        log::debug!("episode {episode}: efficiency {mean_efficiency:.3} epsilon {epsilon:.3} loss {loss:.6}");
        curve.push(CurvePoint { episode, mean_efficiency, epsilon, loss });
    }
    Ok(TrainOutput { net, curve, baseline_efficiency: baseline, updates })
}
