use fuzzrel::plant::{
    add_noise, integrate_step, simulate, simulate_speed_loop, MotorParams, MotorState, PlantModel,
    SimConfig, Signal, SpeedController,
};

fn stored_energy(s: &MotorState, p: &MotorParams) -> f64 {
    0.5 * (p.l_d * s.i_d * s.i_d + p.l_q * s.i_q * s.i_q + p.inertia * s.omega * s.omega)
}

#[test]
fn ideal_current_speed_matches_trapezoid_quadrature() {
    let p = MotorParams::default();
    let (profile, load_torque) = (Signal::sinusoid(10.0, 0.5), 0.5);
    let cfg = SimConfig {
        duration: 2.0,
        ..SimConfig::default()
    };
    let traj = simulate(&profile, &Signal::Constant(load_torque), &p, &cfg).unwrap();

    let accel = |t: f64| (p.phi_f * profile.at(t) - load_torque) / p.inertia;
    let h = 1e-6;
    let per_sample = (cfg.sample_dt / h).round() as usize;
    let mut omega = 0.0;
    let mut worst: f64 = 0.0;
    let peak = traj.omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    for (k, &simulated) in traj.omega.iter().enumerate() {
        worst = worst.max((simulated - omega).abs());
        let t0 = k as f64 * cfg.sample_dt;
        for j in 0..per_sample {
            let a = t0 + j as f64 * h;
            omega += 0.5 * h * (accel(a) + accel(a + h));
        }
    }
    assert!(worst < 1e-6 * peak, "max deviation {worst} vs peak {peak}");
}

#[test]
fn full_dq_tracks_the_ideal_current_model() {
    let p = MotorParams::default();
    let profile = Signal::sinusoid(10.0, 0.5);
    let load = Signal::Constant(0.0);
    let base = SimConfig {
        dt: 1e-5,
        duration: 1.0,
        ..SimConfig::default()
    };
    let ideal = simulate(&profile, &load, &p, &base).unwrap();
    let full = simulate(
        &profile,
        &load,
        &p,
        &SimConfig {
            model: PlantModel::FullDq { current_gain: 1000.0 },
            ..base
        },
    )
    .unwrap();
    let rms = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    };
    let diff = rms(&mut ideal.omega.iter().zip(&full.omega).map(|(a, b)| a - b));
    let scale = rms(&mut ideal.omega.iter().copied());
    assert!(diff < 0.02 * scale, "rms difference {diff} vs rms speed {scale}");
}

#[test]
fn shorted_terminals_dissipate_energy() {
    let p = MotorParams::default();
    let dt = 1e-4;
    let mut s = MotorState {
        i_d: 3.0,
        i_q: -2.0,
        omega: 80.0,
        theta: 0.0,
    };
    let initial = stored_energy(&s, &p);
    let mut previous = initial;
    for _ in 0..20_000 {
        s = integrate_step(&s, 0.0, 0.0, &p, dt).unwrap();
        let e = stored_energy(&s, &p);
        assert!(e <= previous * (1.0 + 1e-9), "energy rose from {previous} to {e}");
        previous = e;
    }
    assert!(previous < 1e-6 * initial);
    assert!(s.omega.abs() < 0.1 && s.i_d.abs() < 0.1 && s.i_q.abs() < 0.1, "{s:?}");
}

#[test]
fn halving_the_step_shrinks_the_error_sixteenfold() {
    let p = MotorParams::default();
    let (amp, freq, horizon) = (5.0, 10.0, 0.25);
    let w = std::f64::consts::TAU * freq;
    let exact = p.phi_f * amp * (1.0 - (w * horizon).cos()) / (w * p.inertia);
    let err = |dt: f64| {
        let cfg = SimConfig {
            dt,
            sample_dt: dt,
            duration: horizon,
            ..SimConfig::default()
        };
        let traj = simulate(&Signal::sinusoid(amp, freq), &Signal::Constant(0.0), &p, &cfg).unwrap();
        (traj.final_state.omega - exact).abs()
    };
    let ratio = err(1e-3) / err(5e-4);
    assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn load_release_speeds_up_the_closed_loop() {
    let p = MotorParams::default();
    let cfg = SimConfig {
        duration: 6.0,
        model: PlantModel::FullDq { current_gain: 100.0 },
        ..SimConfig::default()
    };
    let controller = SpeedController {
        gain: 0.5,
        limit: 10.0,
    };
    let load = Signal::Steps(vec![(0.0, 1.0), (3.0, 0.0)]);
    let traj = simulate_speed_loop(&Signal::Constant(100.0), controller, &load, &p, &cfg).unwrap();
    let at = |t: f64| traj.omega[(t / cfg.sample_dt).round() as usize];
    // Steady state with i_d ~ 0: torque balance phi·i_q = load, the speed
    // controller sets i_q_ref = 0.5·(100 - w), and the current regulator
    // needs i_q_ref - i_q = (R·i_q + w·phi) / Kp.
    let steady = |load: f64| {
        let i_q = load / p.phi_f;
        (0.5 * 100.0 - i_q - p.r_stator * i_q / 100.0) / (0.5 + p.phi_f / 100.0)
    };
    assert!((at(2.9) - steady(1.0)).abs() < 0.05, "{} vs {}", at(2.9), steady(1.0));
    assert!((at(5.9) - steady(0.0)).abs() < 0.05, "{} vs {}", at(5.9), steady(0.0));
    assert!(traj.i_q_ref.iter().all(|i| i.abs() <= 10.0));
}

#[test]
fn noise_is_seeded_and_bounded() {
    let clean = vec![1.0; 1000];
    let a = add_noise(&clean, 0.1, 10.0, 3);
    assert_eq!(a, add_noise(&clean, 0.1, 10.0, 3));
    assert_ne!(a, add_noise(&clean, 0.1, 10.0, 4));
    assert!(a.iter().all(|x| (x - 1.0).abs() <= 1.0));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    assert!((mean - 1.0).abs() < 0.1);
    assert_eq!(add_noise(&clean, 0.0, 10.0, 3), clean);
}

#[test]
fn invalid_configuration_is_rejected() {
    let p = MotorParams::default();
    let zero = Signal::Constant(0.0);
    let misaligned = SimConfig {
        dt: 3e-4,
        ..SimConfig::default()
    };
    assert!(simulate(&zero, &zero, &p, &misaligned).is_err());
    let bad = MotorParams {
        inertia: 0.0,
        ..MotorParams::default()
    };
    assert!(simulate(&zero, &zero, &bad, &SimConfig::default()).is_err());
}
