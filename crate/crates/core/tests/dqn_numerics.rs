//! Q-network numerics: finite-difference gradients, forward pass against
//! plain matrix arithmetic, descent, exploration statistics, checkpoints.

use ntn_ric::config::{DqnConfig, SimConfig};
use ntn_ric::dqn::{self, Mlp, Transition};
use ntn_ric::harness;
use ntn_ric::World;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net(sizes: &[usize], r: &mut ChaCha8Rng) -> Mlp {
    let mut net = Mlp::new(sizes, r);
    // non-zero biases so every parameter gets exercised
    for l in &mut net.layers {
        for b in &mut l.biases {
            *b = r.gen_range(-0.5..0.5);
        }
    }
    net
}

fn batch(r: &mut ChaCha8Rng, n: usize, dim: usize, n_actions: usize) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let states = (0..n).map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let actions = (0..n).map(|_| r.gen_range(0..n_actions)).collect();
    let targets = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
    (states, actions, targets)
}

fn loss(net: &Mlp, states: &[Vec<f64>], actions: &[usize], targets: &[f64]) -> f64 {
    let refs: Vec<&[f64]> = states.iter().map(Vec::as_slice).collect();
    net.td_loss_and_gradients(&refs, actions, targets).unwrap().0
}

#[test]
fn gradients_match_central_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let sizes: Vec<usize> = if trial == 0 {
            vec![4, 3, 3, 3, 2]
        } else {
            let depth = r.gen_range(1..=3);
            let mut s = vec![r.gen_range(2..7)];
            s.extend((0..depth).map(|_| r.gen_range(2..7)));
            s.push(r.gen_range(2..5));
            s
        };
        let net = random_net(&sizes, &mut r);
        let n_actions = *sizes.last().unwrap();
        let (states, actions, targets) = batch(&mut r, 5, sizes[0], n_actions);
        let refs: Vec<&[f64]> = states.iter().map(Vec::as_slice).collect();
        let (_, grads) = net.td_loss_and_gradients(&refs, &actions, &targets).unwrap();
        let analytic = grads.flatten();
        let params = net.params();
        let h = 1e-5;
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            let mut p = params.clone();
            p[i] += h;
            plus.set_params(&p).unwrap();
            let mut minus = net.clone();
            p[i] -= 2.0 * h;
            minus.set_params(&p).unwrap();
            let numeric = (loss(&plus, &states, &actions, &targets) - loss(&minus, &states, &actions, &targets)) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel <= 1e-4, "net {sizes:?} param {i}: analytic {a}, numeric {numeric}");
        }
    }
    println!("worst relative gradient error {worst:.3e}");
}

#[test]
fn forward_matches_plain_matrix_arithmetic() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let net = random_net(&[42, 64, 64, 64, 10], &mut r);
    for _ in 0..20 {
        let x: Vec<f64> = (0..42).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut a = x.clone();
        let last = net.layers.len() - 1;
        for (li, l) in net.layers.iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut acc = l.biases[j];
                for k in 0..l.inputs {
                    acc += l.weights[j * l.inputs + k] * a[k];
                }
                *zj = if li == last { acc } else { acc.max(0.0) };
            }
            a = z;
        }
        let q = net.forward(&x).unwrap();
        for (u, v) in q.iter().zip(&a) {
            assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn repeated_updates_reduce_loss_on_a_fixed_batch() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut net = random_net(&[6, 16, 16, 4], &mut r);
    let (states, actions, targets) = batch(&mut r, 32, 6, 4);
    let refs: Vec<&[f64]> = states.iter().map(Vec::as_slice).collect();
    let mut losses = Vec::new();
    for _ in 0..100 {
        let (l, g) = net.td_loss_and_gradients(&refs, &actions, &targets).unwrap();
        losses.push(l);
        net.apply_sgd(&g, 1e-2);
    }
    let rises = losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(rises <= 5, "{rises} non-monotone steps");
    assert!(losses[99] < losses[0]);
}

#[test]
fn train_step_fixed_point_and_target_untouched() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut net = random_net(&[3, 5, 2], &mut r);
    let target = random_net(&[3, 5, 2], &mut r);
    let target_before = target.clone();
    let cfg = DqnConfig { gamma: 0.0, ..DqnConfig::default() };
    let ts: Vec<Transition> = (0..4)
        .map(|i| {
            let s: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let a = i % 2;
            let q = net.forward(&s).unwrap()[a];
            Transition { state: s.clone(), action: a, reward: q, next_state: s, terminal: false }
        })
        .collect();
    let refs: Vec<&Transition> = ts.iter().collect();
    let before = net.clone();
    let l = dqn::train_step(&mut net, &target, &refs, &cfg, 0).unwrap();
    assert!(l <= 1e-24);
    assert!(net.max_param_diff(&before) <= 1e-12);
    assert_eq!(target, target_before);
}

#[test]
fn exploration_is_uniform() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let q = [0.0; 10];
    let mut counts = [0u32; 10];
    let n = 10_000;
    for _ in 0..n {
        counts[dqn::select_action(&q, 1.0, &mut r)] += 1;
    }
    let p = 0.1;
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for (a, &c) in counts.iter().enumerate() {
        assert!((f64::from(c) - mean).abs() <= 3.0 * sd, "action {a}: {c}");
    }
}

#[test]
fn greedy_selection_is_scale_invariant() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let q: Vec<f64> = (0..10).map(|_| r.gen_range(-5.0..5.0)).collect();
        let scaled: Vec<f64> = q.iter().map(|v| v * 3.7).collect();
        assert_eq!(dqn::select_action(&q, 0.0, &mut r), dqn::select_action(&scaled, 0.0, &mut r));
    }
    assert_eq!(dqn::select_action(&[0.0; 10], 0.0, &mut r), 0);
}

#[test]
fn sync_is_exact_and_idempotent() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let net = random_net(&[42, 64, 64, 64, 10], &mut r);
    let mut target = random_net(&[42, 64, 64, 64, 10], &mut r);
    assert!(net.max_param_diff(&target) > 0.0);
    dqn::sync_target(&net, &mut target);
    assert_eq!(net.max_param_diff(&target), 0.0);
    dqn::sync_target(&net, &mut target);
    assert_eq!(net, target);
    let s: Vec<f64> = (0..42).map(|_| r.gen_range(0.0..1.0)).collect();
    assert_eq!(net.forward(&s).unwrap(), target.forward(&s).unwrap());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let net = random_net(&[42, 64, 64, 64, 10], &mut r);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.bin");
    dqn::save_checkpoint(&net, &path).unwrap();
    let back = dqn::load_checkpoint(&path).unwrap();
    assert_eq!(back.layer_sizes(), net.layer_sizes());
    for _ in 0..10 {
        let s: Vec<f64> = (0..42).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = net.forward(&s).unwrap();
        let b = back.forward(&s).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    assert!(dqn::checkpoint_from_bytes(&bytes).is_err());
}

fn short_cfg(episodes: u32) -> DqnConfig {
    DqnConfig { episodes, baseline_days: 1, ..DqnConfig::default() }
}

#[test]
fn zero_episodes_returns_the_initial_network() {
    let w = World::build(&SimConfig::default(), 7).unwrap();
    let out = harness::train(&w, &short_cfg(0), 7).unwrap();
    assert_eq!(out.net, harness::train::init_network(&w, &short_cfg(0), 7));
    assert!(out.curve.is_empty());
}

#[test]
fn training_is_reproducible() {
    let w = World::build(&SimConfig::default(), 3).unwrap();
    let a = harness::train(&w, &short_cfg(6), 11).unwrap();
    let b = harness::train(&w, &short_cfg(6), 11).unwrap();
    assert_eq!(a.net, b.net);
    assert_eq!(a.curve, b.curve);
    assert!(a.updates > 0);
    assert_eq!(harness::learning_curve_csv(&a.curve), harness::learning_curve_csv(&b.curve));
    let c = harness::train(&w, &short_cfg(6), 12).unwrap();
    assert_ne!(a.net, c.net);
}
