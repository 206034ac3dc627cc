mod common;

use common::{asset, brute_distance, scenario};
use multiscope::memory::{check_dropout, loss_memory, update_contact_cloud, CloudSource};
use multiscope::scope::{init_pairs, scope_action, score_opp, score_population, Observation, ScopeContext, WrenchMinima};
use multiscope::sim::{synthesize_observation, Tool};
use multiscope::wrench::Wrench;
use multiscope::{Exec, FilterConfig, LossWeights, MemoryState, Pose2, SensorNoise, Solid};
use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_body(pose: &Pose2, p: &Vector3<f64>) -> Vector3<f64> {
    let (s, c) = pose.theta.sin_cos();
    let (dx, dy, dz) = (p.x - pose.x, p.y, p.z - pose.z);
    Vector3::new(c * dx - s * dz, dy, s * dx + c * dz)
}

fn softmin(costs: &[f64], beta: f64) -> Vec<f64> {
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = costs.iter().map(|c| (-beta * (c - lo)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn wrench_cloud(seed: u64, actions: usize, per_action: usize) -> MemoryState {
    let mesh = asset("wrench");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MemoryState::new();
    for a in 0..actions {
        let sources: Vec<CloudSource> = (0..per_action)
            .map(|_| {
                let t = rng.random_range(0..mesh.triangles().len());
                let [p, q, r] = mesh.triangle(t);
                let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
                let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
                let off = Vector3::new(rng.random_range(-0.004..0.004), rng.random_range(-0.004..0.004), rng.random_range(-0.004..0.004));
                let point = p + (q - p) * u + (r - p) * v + off;
                CloudSource {
                    pose_t: Pose2::identity(),
                    pose_p: Pose2::identity(),
                    contact_t: point,
                    contact_p: point,
                    s_c: rng.random_range(0.0..1.0),
                }
            })
            .collect();
        update_contact_cloud(&mut state, a, &sources, 5.0);
    }
    state
}

#[test]
fn three_pair_update_matches_direct_evaluation() {
    let poses = [
        (Pose2::new(0.01, -0.02, 0.3), Pose2::new(-0.005, 0.0, -0.1)),
        (Pose2::new(0.0, 0.015, -0.4), Pose2::new(0.02, 0.01, 0.2)),
        (Pose2::new(-0.01, 0.0, 0.05), Pose2::new(0.0, -0.01, 0.0)),
    ];
    let contacts = [
        (Vector3::new(0.02, 0.001, 0.11), Vector3::new(0.0, 0.0, 0.03)),
        (Vector3::new(-0.01, 0.004, 0.09), Vector3::new(0.002, -0.001, 0.05)),
        (Vector3::new(0.0, -0.003, 0.12), Vector3::new(-0.003, 0.0, 0.01)),
    ];
    let costs = [0.4, 0.1, 0.25];
    let sources: Vec<CloudSource> = (0..3)
        .map(|i| CloudSource {
            pose_t: poses[i].0,
            pose_p: poses[i].1,
            contact_t: contacts[i].0,
            contact_p: contacts[i].1,
            s_c: costs[i],
        })
        .collect();
    let mut state = MemoryState::new();
    update_contact_cloud(&mut state, 4, &sources, 5.0);
    let w = softmin(&costs, 5.0);
    assert_eq!(state.cloud.tool.len(), 3);
    assert_eq!(state.cloud.probe.len(), 3);
    for i in 0..3 {
        let (t, p) = (&state.cloud.tool[i], &state.cloud.probe[i]);
        assert_eq!((t.action, p.action), (4, 4));
        assert!((t.weight - w[i]).abs() < 1e-12 && (p.weight - w[i]).abs() < 1e-12);
        assert!((t.point_body - to_body(&poses[i].0, &contacts[i].0)).norm() < 1e-12);
        assert!((p.point_body - to_body(&poses[i].1, &contacts[i].1)).norm() < 1e-12);
        assert_eq!(t.point_ee, contacts[i].0);
    }
    assert!(state.seen_actions.contains(&4));
}

#[test]
fn memory_loss_on_the_wrench_matches_brute_force_distances() {
    let mesh = asset("wrench");
    let solid = Solid::new(mesh.clone());
    let state = wrench_cloud(1, 2, 6);
    for pose in [Pose2::identity(), Pose2::new(0.004, -0.003, 0.05), Pose2::new(-0.01, 0.006, -0.2)] {
        let mut expected = 0.0;
        for e in state.cloud.tool.iter().chain(&state.cloud.probe) {
            expected += e.weight * brute_distance(&mesh, &to_body(&pose, &e.point_ee));
        }
        let got = loss_memory(&pose, &pose, &state, &solid, &solid);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn generating_pose_of_surface_points_has_zero_loss() {
    let mesh = asset("wrench");
    let solid = Solid::new(mesh.clone());
    let pose = Pose2::new(0.01, -0.004, 0.3);
    let iso = pose.to_isometry();
    let [a, b, c] = mesh.triangle(17);
    let on_surface = (a + b + c) / 3.0;
    let ee = iso.transform_point(&on_surface.into()).coords;
    let mut state = MemoryState::new();
    let src = CloudSource {
        pose_t: pose,
        pose_p: pose,
        contact_t: ee,
        contact_p: ee,
        s_c: 0.2,
    };
    update_contact_cloud(&mut state, 0, &[src], 5.0);
    assert!(loss_memory(&pose, &pose, &state, &solid, &solid) < 1e-9);
    assert!(loss_memory(&Pose2::new(0.02, 0.0, 0.0), &pose, &state, &solid, &solid) > 0.0);
}

#[test]
fn dropping_an_action_removes_exactly_its_entries() {
    let solid = Solid::new(asset("wrench"));
    let mut state = wrench_cloud(2, 2, 5);
    state.prev_mean_sc = Some(1.0);
    let pose = Pose2::new(0.003, 0.002, 0.1);
    let full = loss_memory(&pose, &pose, &state, &solid, &solid);
    assert!(check_dropout(&mut state, 1, 3.0, 2.0));
    assert_eq!(state.dropped_actions.iter().copied().collect::<Vec<_>>(), vec![0]);
    assert!(state.dropped_actions.is_subset(&state.seen_actions));
    let mut reduced = state.clone();
    reduced.dropped_actions.clear();
    reduced.cloud.tool.retain(|e| e.action == 1);
    reduced.cloud.probe.retain(|e| e.action == 1);
    let after = loss_memory(&pose, &pose, &state, &solid, &solid);
    assert_eq!(after, loss_memory(&pose, &pose, &reduced, &solid, &solid));
    assert!(after < full);
    assert_eq!(state.cloud.tool.len(), 10, "dropped entries are kept for audit");
}

#[test]
fn memory_reverses_a_close_ranking() {
    let solid = Solid::new(asset("wrench"));
    let mut state = MemoryState::new();
    let [a, b, c] = asset("wrench").triangle(40);
    let point = (a + b + c) / 3.0;
    let src = CloudSource {
        pose_t: Pose2::identity(),
        pose_p: Pose2::identity(),
        contact_t: point,
        contact_p: point,
        s_c: 0.0,
    };
    update_contact_cloud(&mut state, 0, &[src], 5.0);
    let pair_a = (Pose2::new(0.01, 0.01, 0.2), 1.000);
    let pair_b = (Pose2::identity(), 1.001);
    let w = LossWeights::default();
    let score = |(pose, s_c): (Pose2, f64), w: &LossWeights| score_opp(s_c, loss_memory(&pose, &pose, &state, &solid, &solid), w);
    let off = LossWeights { eta_m: 0.0, ..w };
    assert!(score(pair_a, &off) < score(pair_b, &off));
    assert!(score(pair_a, &w) > score(pair_b, &w));
    assert_eq!(score(pair_b, &w), pair_b.1);
}

#[test]
fn memory_term_ignores_world_frame_changes() {
    let scn = scenario(Tool::Wrench);
    let cfg = FilterConfig::default();
    let sensor = SensorNoise::default();
    let ctx = ScopeContext {
        tool: &scn.tool_model,
        probe: &scn.probe_model,
        cfg: &cfg,
        sensor: &sensor,
        exec: Exec::Sequential,
        seed: 0,
        record_trace: false,
    };
    let id = Pose2::identity();
    let obs = synthesize_observation(0, &scn.actions[0], &id, &id, &Isometry3::identity(), 0.0, &mut ChaCha8Rng::seed_from_u64(0));
    let pairs = init_pairs(&cfg, false, &mut ChaCha8Rng::seed_from_u64(3));
    let mut memory = MemoryState::new();
    scope_action(&ctx, &obs, &pairs, &mut memory).unwrap();
    assert_eq!(memory.cloud.tool.len(), cfg.n_top);

    let g = Isometry3::from_parts(Translation3::new(-0.4, 0.1, 0.2), UnitQuaternion::from_euler_angles(-0.3, 0.7, 0.2));
    let next = synthesize_observation(1, &scn.actions[1], &id, &id, &Isometry3::identity(), 0.0, &mut ChaCha8Rng::seed_from_u64(0));
    let moved = Observation {
        world_from_tool_ee: g * next.world_from_tool_ee,
        world_from_probe_ee: g * next.world_from_probe_ee,
        ..next
    };
    let probe: Vec<_> = pairs.iter().take(6).cloned().collect();
    let a = score_population(&ctx, &next, 0, &probe, &mut WrenchMinima::default(), &memory).unwrap();
    let b = score_population(&ctx, &moved, 0, &probe, &mut WrenchMinima::default(), &memory).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (x.score.clone().unwrap(), y.score.clone().unwrap());
        assert!(x.terms.memory > 0.0);
        assert_eq!(x.terms.memory, y.terms.memory);
    }
}

#[test]
fn contradicting_action_triggers_dropout() {
    let scn = scenario(Tool::Wrench);
    let cfg = FilterConfig::default();
    let sensor = SensorNoise::default();
    let ctx = ScopeContext {
        tool: &scn.tool_model,
        probe: &scn.probe_model,
        cfg: &cfg,
        sensor: &sensor,
        exec: Exec::Parallel,
        seed: 0,
        record_trace: false,
    };
    let id = Pose2::identity();
    let obs = |a: usize| synthesize_observation(a, &scn.actions[a], &id, &id, &Isometry3::identity(), 0.0, &mut ChaCha8Rng::seed_from_u64(0));
    let mut memory = MemoryState::new();
    let first = scope_action(&ctx, &obs(0), &init_pairs(&cfg, false, &mut ChaCha8Rng::seed_from_u64(7)), &mut memory).unwrap();
    let flip = |w: &Wrench| Wrench::new(-w.force, -w.torque, w.frame);
    let base = obs(1);
    let pulled = Observation {
        gamma_t: flip(&base.gamma_t),
        gamma_p: flip(&base.gamma_p),
        ..base
    };
    let second = scope_action(&ctx, &pulled, &first.pairs, &mut memory).unwrap();
    assert!(second.dropout);
    assert!(memory.dropped_actions.contains(&0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cloud_size_and_non_negative_loss(k in 1usize..5, n_top in 1usize..12, seed in any::<u64>(), x in -0.02..0.02f64, th in -1.0..1.0f64) {
        let state = wrench_cloud(seed, k, n_top);
        prop_assert_eq!(state.cloud.tool.len(), k * n_top);
        prop_assert_eq!(state.cloud.probe.len(), k * n_top);
        for a in 0..k {
            let total: f64 = state.cloud.tool.iter().filter(|e| e.action == a).map(|e| e.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        let solid = Solid::new(asset("wrench"));
        let pose = Pose2::new(x, -x, th);
        prop_assert!(loss_memory(&pose, &pose, &state, &solid, &solid) >= 0.0);
    }
}
