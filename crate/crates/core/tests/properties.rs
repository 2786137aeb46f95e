use aerotorch_core::control::{desired_attitude, AttitudeConstruction};
use aerotorch_core::dynamics::QuadrotorState;
use aerotorch_core::kinematics::Workspace;
use aerotorch_core::sim::{
    run_batch, run_scenario_with, BaseMode, ReferenceShaper, RunOptions, ScalarAccumulator, ScenarioConfig,
    write_csv,
};
use aerotorch_core::spatial::{
    orthonormality_error, reorthonormalize, rot_zyx, skew, unskew, wrap_angle, yaw_of, Mat3, Vec3,
};
use aerotorch_core::task::{
    hovering_setpoint, ignition_check, step_task, FireMode, OperatingReference, TaskMachine, TaskSensors,
    TaskState, TaskTiming, TorchModel, TorchParams,
};
use aerotorch_core::vision::TargetObservation;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn observation(p: Vec3, psi: f64) -> TargetObservation {
    TargetObservation { p_t_body: p, psi_t_body: psi, timestamp: 0.0, valid: true, reprojection_rms: 0.1, visible: 8 }
}

proptest! {
    #[test]
    fn skew_round_trips_and_crosses(a in vec3(10.0), b in vec3(10.0)) {
        let s = skew(&a);
        prop_assert!((s + s.transpose()).norm() == 0.0);
        prop_assert_eq!(unskew(&s).unwrap(), a);
        prop_assert!((s * b - a.cross(&b)).norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn reorthonormalize_projects_onto_so3(
        yaw in -3.1f64..3.1, pitch in -1.5f64..1.5, roll in -3.1f64..3.1,
        noise in proptest::collection::vec(-1e-3f64..1e-3, 9),
    ) {
        let r = rot_zyx(yaw, pitch, roll);
        let perturbed = r.matrix() + Mat3::from_iterator(noise);
        let fixed = reorthonormalize(&perturbed).unwrap();
        prop_assert!(orthonormality_error(fixed.matrix()) < 1e-14);
        prop_assert!((fixed.matrix().determinant() - 1.0).abs() < 1e-14);
        prop_assert!((fixed.matrix() - r.matrix()).norm() < 1e-2);
        let again = reorthonormalize(fixed.matrix()).unwrap();
        prop_assert!((again.matrix() - fixed.matrix()).norm() < 1e-14);
    }

    #[test]
    fn workspace_members_satisfy_every_bound(p in vec3(1.2)) {
        let ws = Workspace::default();
        let mirrored = Vec3::new(p.x, -p.y, p.z);
        prop_assert_eq!(ws.contains(&p), ws.contains(&mirrored));
        if ws.contains(&p) {
            prop_assert!(p.z <= 0.0 && p.z >= -ws.height);
            prop_assert!(p.norm() >= ws.r_min && p.norm() <= ws.r_max);
            prop_assert!(p.y.atan2(p.x).abs() <= 0.5 * ws.yaw_angle);
            prop_assert!(!ws.contains(&(p * (1.01 * ws.r_max / p.norm()))));
            prop_assert!(!ws.contains(&(p * (0.99 * ws.r_min / p.norm()))));
        }
    }

    #[test]
    fn task_machine_only_moves_forward_or_aborts(
        seq in proptest::collection::vec(
            (0.0f64..3.0, any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), 0.0f64..400.0, any::<bool>()),
            1..400,
        ),
    ) {
        let mut m = TaskMachine::new(TaskTiming::default());
        for (k, (alt, ground, valid, inside, lit, temp, done)) in seq.into_iter().enumerate() {
            let sensors = TaskSensors {
                altitude: alt,
                on_ground: ground,
                observation_valid: valid,
                target_in_workspace: inside,
                lit,
                temperature: temp,
                retreat_done: done,
            };
            step_task(&mut m, &sensors, 0.5 * k as f64);
        }
        let history = m.history();
        prop_assert_eq!(history[0].0, TaskState::Idle);
        for pair in history.windows(2) {
            let (from, to) = (pair[0], pair[1]);
            prop_assert!(to.1 >= from.1);
            prop_assert!(from.0.successor() == Some(to.0) || to.0 == TaskState::Aborted, "{:?}", pair);
        }
        prop_assert!(history.iter().filter(|(s, _)| *s == TaskState::Aborted).count() <= 1);
    }

    #[test]
    fn reference_shaper_respects_limits(
        goals in proptest::collection::vec((vec3(20.0), -3.1f64..3.1), 1..20),
        steps in 1usize..60,
    ) {
        let (speed, accel, yaw_rate, dt) = (0.8, 0.5, 0.35, 0.01);
        let mut s = ReferenceShaper::at(Vec3::zeros(), 0.0);
        for (goal, yaw) in goals {
            for _ in 0..steps {
                let before = s;
                s.step(&goal, yaw, 1.0, speed, accel, yaw_rate, dt);
                prop_assert!(s.velocity.norm() <= speed + 1e-12);
                prop_assert!((s.velocity - before.velocity).norm() <= accel * dt + 1e-12);
                prop_assert!((s.acceleration * dt - (s.velocity - before.velocity)).norm() < 1e-12);
                prop_assert!(wrap_angle(s.yaw - before.yaw).abs() <= yaw_rate * dt + 1e-12);
            }
        }
    }

    #[test]
    fn welford_matches_two_pass(xs in proptest::collection::vec(-1e3f64..1e3, 1..300)) {
        let mut acc = ScalarAccumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        let st = acc.stats();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        prop_assert!((st.mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
        prop_assert!((st.std - var.sqrt()).abs() <= 1e-8 * (1.0 + var.sqrt()));
        prop_assert_eq!(st.max_abs, xs.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        prop_assert_eq!(st.samples, xs.len());
    }

    #[test]
    fn desired_attitude_aligns_thrust_and_heading(
        tilt in 0.0f64..1.3, azimuth in -3.1f64..3.1, magnitude in 1.0f64..30.0, psi in -3.1f64..3.1,
    ) {
        let dir = Vec3::new(tilt.sin() * azimuth.cos(), tilt.sin() * azimuth.sin(), tilt.cos());
        let r = desired_attitude(&(dir * magnitude), psi, AttitudeConstruction::ProjectedHeading).unwrap();
        let m = r.matrix();
        prop_assert!(orthonormality_error(m) < 1e-13);
        prop_assert!((m.determinant() - 1.0).abs() < 1e-13);
        prop_assert!((m.column(2) - dir).norm() < 1e-13);
        prop_assert!(wrap_angle(yaw_of(&r) - psi).abs() < 1e-12);
    }

    #[test]
    fn hovering_setpoint_is_translation_equivariant(
        p in vec3(10.0), shift in vec3(10.0), yaw in -3.1f64..3.1,
        p_t in vec3(1.0), psi_t in -1.0f64..1.0,
    ) {
        let reference = OperatingReference { p_t_star: Vec3::new(0.8, 0.0, 0.2), psi_t_star: 0.0, h_off: 0.1 };
        let obs = observation(p_t, psi_t);
        let a = hovering_setpoint(&obs, &QuadrotorState::at_rest(p, yaw), &reference).unwrap();
        let b = hovering_setpoint(&obs, &QuadrotorState::at_rest(p + shift, yaw), &reference).unwrap();
        prop_assert!((b.p_b_d - a.p_b_d - shift).norm() < 1e-12);
        prop_assert!((b.p_end_d - a.p_end_d - shift).norm() < 1e-12);
        prop_assert_eq!(a.psi_d, b.psi_d);
        let ideal = hovering_setpoint(&observation(reference.p_t_star, 0.0), &QuadrotorState::at_rest(p, yaw), &reference).unwrap();
        prop_assert!((ideal.p_b_d - p).norm() < 1e-12);
    }

    #[test]
    fn torch_state_is_monotone(path in proptest::collection::vec(0.0f64..0.06, 1..400), gas in 0.0f64..1.0) {
        let fire = Vec3::new(1.0, 2.0, -3.0);
        let params = TorchParams::default();
        let mut get = TorchModel::new(params, FireMode::GetFire, gas);
        let mut make = TorchModel::new(params, FireMode::MakeFire, gas);
        for d in path {
            let p = fire + Vec3::new(d, 0.0, 0.0);
            let (g, mk) = (ignition_check(&p, &fire, &get, 0.01), ignition_check(&p, &fire, &make, 0.01));
            prop_assert!(g.dwell >= get.dwell && g.gas_level <= get.gas_level);
            prop_assert!(g.lit || !get.lit);
            prop_assert!(mk.lit || !make.lit);
            prop_assert!(mk.dwell <= g.dwell + 1e-15);
            get = g;
            make = mk;
        }
        prop_assert!(make.lit <= get.lit);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn runs_are_deterministic_per_seed(seed in any::<u64>(), floating in any::<bool>()) {
        let base = if floating { BaseMode::Floating } else { BaseMode::Fixed };
        let cfg = ScenarioConfig { seed, base, duration: 40.0, ..ScenarioConfig::default() };
        let options = RunOptions { record_every: 7 };
        let a = run_scenario_with(&cfg, &options).unwrap();
        let b = run_scenario_with(&cfg, &options).unwrap();
        let csv = |records| {
            let mut out = Vec::new();
            write_csv(records, &mut out).unwrap();
            out
        };
        prop_assert!(csv(&a.records) == csv(&b.records));
        prop_assert_eq!(
            serde_json::to_string(&a.metrics).unwrap(),
            serde_json::to_string(&b.metrics).unwrap()
        );
    }
}

#[test]
fn batch_aggregates_equal_per_run_means() {
    let table = run_batch(&ScenarioConfig::default(), 3, 11).unwrap();
    assert_eq!(table.cells.len(), 4);
    for cell in &table.cells {
        assert_eq!(cell.results.len(), 3);
        let seeds: Vec<u64> = cell.results.iter().map(|m| m.seed).collect();
        assert_eq!(seeds, vec![11, 12, 13]);
        let wins: Vec<f64> = cell.results.iter().map(|m| if m.success { 1.0 } else { 0.0 }).collect();
        assert!((cell.success_rate - wins.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        let times: Vec<f64> = cell.results.iter().filter(|m| m.success).filter_map(|m| m.time_to_light).collect();
        match cell.mean_time_to_light {
            Some(t) => assert!((t - times.iter().sum::<f64>() / times.len() as f64).abs() < 1e-12),
            None => assert!(times.is_empty()),
        }
        for m in &cell.results {
            let alone = run_scenario_with(
                &ScenarioConfig { seed: m.seed, base: cell.base, fire: cell.fire, ..ScenarioConfig::default() },
                &RunOptions { record_every: 0 },
            )
            .unwrap();
            assert_eq!(serde_json::to_string(&alone.metrics).unwrap(), serde_json::to_string(m).unwrap());
        }
    }
}

#[test]
fn position_loop_outputs_hold_between_ticks() {
    let cfg = ScenarioConfig { duration: 40.0, ..ScenarioConfig::default() };
    let per_tick = (cfg.rates.physics_hz / cfg.rates.position_hz) as usize;
    let out = run_scenario_with(&cfg, &RunOptions { record_every: 1 }).unwrap();
    let mut phases = std::collections::BTreeSet::new();
    for (i, pair) in out.records.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if (a.pdx, a.pdy, a.pdz, a.psi_d, a.thrust) != (b.pdx, b.pdy, b.pdz, b.psi_d, b.thrust) {
            phases.insert((i + 1) % per_tick);
        }
    }
    assert_eq!(phases.len(), 1, "{phases:?}");
}
