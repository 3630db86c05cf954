use scribe_core::datasets::glyphs::Glyph;
use scribe_core::sim::arm::forward_kinematics;
use scribe_core::sim::*;

fn plan(g: Glyph) -> StrokePlan {
    g.plan(None, &PlanTiming::default(), &BoardRect::default()).unwrap()
}

fn held_robot(q: [f64; 3], g: f64) -> Robot {
    Robot::new(
        q,
        ArmConfig::default(),
        ObserverConfig {
            g_v: g,
            g_d: g,
            g_r: g,
        },
    )
}

/// Hold the robot at its start pose with a PD acceleration servo under a
/// constant external torque and return the per-step estimates.
fn hold_under_load(robot: &mut Robot, tau_ext: [f64; 3], steps: usize) -> Vec<Measured> {
    let q0 = robot.state.q;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let m = robot.sense();
        let acc: [f64; 3] = std::array::from_fn(|j| 400.0 * (q0[j] - m.q[j]) - 40.0 * m.dq[j]);
        robot.command(&acc);
        robot.advance(&tau_ext).unwrap();
        out.push(m);
    }
    out
}

#[test]
fn episode_length_matches_duration() {
    let p = plan(Glyph::A);
    let ep = run_demonstration(&p, 0, &SimConfig::default()).unwrap();
    let dt = SimConfig::default().arm.dt;
    assert_eq!(ep.len(), (p.duration() / dt).round() as usize);
    assert_eq!(ep.leader.len(), ep.len());
    assert_eq!(ep.ink.len(), ep.len());
}

#[test]
fn leader_and_follower_stay_synchronized() {
    let cfg = SimConfig::default();
    for g in Glyph::ALL {
        let ep = run_demonstration(&plan(g), 1, &cfg).unwrap();
        let settle = (0.5 / cfg.arm.dt) as usize;
        for j in 0..3 {
            let n = (ep.len() - settle) as f64;
            let rms = (ep.leader[settle..]
                .iter()
                .zip(&ep.follower[settle..])
                .map(|(l, f)| (l[j] - f[j]).powi(2))
                .sum::<f64>()
                / n)
                .sqrt();
            assert!(rms < 0.02, "{g} joint {j}: rms {rms}");
        }
    }
}

#[test]
fn pen_forces_balance_during_contact() {
    let ep = run_demonstration(&plan(Glyph::A), 0, &SimConfig::default()).unwrap();
    let contact: Vec<usize> = (0..ep.len()).filter(|&k| ep.ink[k].is_some()).collect();
    assert!(contact.len() > 500);
    let n = contact.len() as f64;
    let lead = contact.iter().map(|&k| ep.leader[k][8]).sum::<f64>() / n;
    let sum = contact.iter().map(|&k| ep.leader[k][8] + ep.follower[k][8]).sum::<f64>() / n;
    // The hand presses down, so the leader pushes its surroundings upward.
    assert!(lead > 1.0, "leader force {lead}");
    assert!(sum.abs() < 0.1 * lead, "force sum {sum} vs {lead}");
}

#[test]
fn hand_tracks_the_plan() {
    let cfg = SimConfig::default();
    let p = plan(Glyph::A);
    let ep = run_demonstration(&p, 0, &cfg).unwrap();
    let sq: f64 = (0..ep.len())
        .map(|k| {
            let sp = p.sample(k as f64 * cfg.arm.dt).unwrap();
            let s = &ep.leader[k];
            let tip = forward_kinematics(&[s[0], s[1], s[2]], &cfg.arm);
            (tip[0] - sp.xy[0]).powi(2) + (tip[1] - sp.xy[1]).powi(2)
        })
        .sum();
    let rms = (sq / ep.len() as f64).sqrt();
    assert!(rms < 0.005, "hand rms {rms}");
}

#[test]
fn ink_only_where_pen_presses() {
    let cfg = SimConfig::default();
    let ep = run_demonstration(&plan(Glyph::B), 2, &cfg).unwrap();
    assert!(ep.ink.iter().any(Option::is_some));
    for (k, ink) in ep.ink.iter().enumerate() {
        if ink.is_some() {
            assert!(ep.follower[k][2] < 0.0, "ink above the board at step {k}");
        }
    }
}

#[test]
fn demonstrations_are_deterministic_and_round_trip() {
    let cfg = SimConfig::default();
    let p = Glyph::Four.plan(Some(9), &PlanTiming::default(), &BoardRect::default()).unwrap();
    let a = run_demonstration(&p, 9, &cfg).unwrap();
    let b = run_demonstration(&p, 9, &cfg).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.bin");
    a.write(&path).unwrap();
    assert_eq!(Episode::read(&path).unwrap(), a);
}

#[test]
fn disturbance_observer_recovers_load() {
    let g = 100.0;
    let mut r = held_robot([0.3, -1.2, 0.0], g);
    let out = hold_under_load(&mut r, [-0.2, 0.0, 0.0], 1000);
    let settled = (5.0 / g / 0.002) as usize;
    assert!(out.len() > settled);
    let dis = r.disturbance_estimate()[0];
    assert!((dis - 0.2).abs() < 0.004, "dob {dis}");
}

#[test]
fn reaction_force_observer_recovers_pen_force() {
    let g = 100.0;
    let mut r = held_robot([0.3, -1.2, 0.0], g);
    // The board pushing back on a pen pressed with 1 N.
    let out = hold_under_load(&mut r, [0.0, 0.0, -1.0], 1000);
    // The held servo rings for a few periods after the load appears.
    let settled = (0.2 / 0.002) as usize;
    for m in &out[settled..] {
        assert!((m.tau[2] - 1.0).abs() < 0.02, "rfo {}", m.tau[2]);
    }
}

#[test]
fn reaction_estimate_is_quiet_in_free_motion() {
    let mut r = held_robot([0.3, -1.2, 0.0], 100.0);
    let cfg = ArmConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..2000 {
        let m = r.sense();
        let t = k as f64 * cfg.dt;
        let acc = [2.0 * (3.0 * t).sin(), -1.5 * (2.0 * t).cos(), 0.05 * (4.0 * t).sin()];
        r.command(&acc);
        r.advance(&[0.0; 3]).unwrap();
        if k > 250 {
            worst = m.tau.iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    assert!(worst < 0.01, "free-motion estimate {worst}");
}

#[test]
fn position_step_converges_without_large_overshoot() {
    let cfg = SimConfig {
        gains: Gains {
            kf: [0.0; 3],
            ..Gains::default()
        },
        ..SimConfig::default()
    };
    let q = [0.3, -1.2, 0.005];
    let mut lq = q;
    lq[0] += 0.1;
    let mut leader = Robot::new(lq, cfg.arm.clone(), cfg.observer.clone());
    let mut follower = Robot::new(q, cfg.arm.clone(), cfg.observer.clone());
    let mut min_err = f64::INFINITY;
    let mut err = 0.0;
    for _ in 0..1500 {
        let ml = leader.sense();
        let mf = follower.sense();
        let (al, af) = bilateral_step(&ml, &mf, &cfg.gains, &cfg.arm.inertia);
        leader.command(&al);
        follower.command(&af);
        leader.advance(&[0.0; 3]).unwrap();
        follower.advance(&[0.0; 3]).unwrap();
        err = leader.state.q[0] - follower.state.q[0];
        min_err = min_err.min(err);
    }
    assert!(err.abs() < 1e-3, "final error {err}");
    assert!(min_err > -0.2 * 0.1, "overshoot {min_err}");
}
