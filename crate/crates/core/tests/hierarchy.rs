use scribe_core::datasets::Glyph;
use scribe_core::hierarchy::*;
use scribe_core::nn::{Arch, ModelKind, NormStats, PolicyParams, PolicyRecord};
use scribe_core::sim::{run_demonstration, BoardRect, PlanTiming, SimConfig};
use scribe_core::FeatureSet;

fn replay(g: Glyph, fs: FeatureSet) -> UpperReplay {
    let plan = g.plan(None, &PlanTiming::default(), &BoardRect::default()).unwrap();
    let ep = run_demonstration(&plan, 0, &SimConfig::default()).unwrap();
    UpperReplay::from_episode(&ep, fs, 10, 10).unwrap()
}

fn net(kind: ModelKind, fs: FeatureSet, seed: u64) -> NetPolicy {
    let arch = Arch { kind, hidden: 16 };
    let params = PolicyParams::init(arch, 9 + fs.dim(), 18, seed).unwrap();
    NetPolicy::new(PolicyRecord::new(params, NormStats::identity(9 + fs.dim(), 18), fs, seed, None))
}

#[test]
fn oracle_policy_tracks_the_replay() {
    let r = replay(Glyph::A, FeatureSet::PosVelTrq);
    let mut stub = OracleStub::new(&r);
    let log = run_autonomous(&mut stub, "oracle", &r, &RolloutConfig::default()).unwrap();
    let got = log.angles();
    let want = r.angles();
    assert_eq!(got.len(), want.len());
    for j in 0..2 {
        let rms = (got.iter().zip(&want).map(|(a, b)| (a[j] - b[j]).powi(2)).sum::<f64>() / got.len() as f64).sqrt();
        assert!(rms < 0.03, "joint {j}: rms {rms}");
    }
    assert!(log.ink.iter().filter(|i| i.is_some()).count() > 1000);
}

#[test]
fn exact_predictions_make_feedback_a_no_op() {
    let r = replay(Glyph::Four, FeatureSet::PosVelTrq);
    let run = |feedback| {
        let cfg = RolloutConfig {
            feedback,
            ..RolloutConfig::default()
        };
        run_autonomous(&mut OracleStub::new(&r), "oracle", &r, &cfg).unwrap()
    };
    let on = run(true);
    let off = run(false);
    assert_eq!(on.nn_input, off.nn_input);
    assert!(on.error.iter().flatten().all(|e| *e == 0.0));
    assert_eq!(on.follower, off.follower);
}

#[test]
fn scheduling_counts() {
    let r = replay(Glyph::A, FeatureSet::Pos);
    let log = run_autonomous(&mut OracleStub::new(&r), "oracle", &r, &RolloutConfig::default()).unwrap();
    let t = r.last();
    assert_eq!(log.nn_steps(), t);
    assert_eq!(log.ink.len(), 10 * t);
    assert_eq!(log.follower.len(), 10 * t + 1);
    assert!(log.error[0].iter().all(|e| *e == 0.0));
    assert!(log.error.iter().all(|e| e.len() == 3));
}

#[test]
fn feedback_error_uses_previous_prediction() {
    let fs = FeatureSet::PosVel;
    let r = replay(Glyph::A, fs);
    let mut p = net(ModelKind::Mlp, fs, 3);
    let cfg = RolloutConfig {
        feedback: true,
        ..RolloutConfig::default()
    };
    let log = run_autonomous(&mut p, "mlp", &r, &cfg).unwrap();
    // Identity statistics: error_k = select(r[k]) − f̂_k with f̂_k from step k − 1.
    for k in 1..log.nn_steps() {
        for j in 0..fs.dim() {
            let want = r.states[k][j] - log.fhat[k - 1][j];
            assert!((log.error[k][j] - want).abs() < 1e-12);
            let ten = r.states[(10 * (k / 10 + 1)).min(r.last())][j];
            assert!((log.upper[k][j] - (ten + want)).abs() < 1e-12);
        }
    }
}

#[test]
fn mlp_is_stateless_and_lstm_is_not() {
    let fs = FeatureSet::PosVelTrq;
    let x = vec![0.1; 18];
    let mut m = net(ModelKind::Mlp, fs, 1);
    let a = m.forward(&x).unwrap();
    assert_eq!(a.len(), 18);
    assert_eq!(m.forward(&x).unwrap(), a);
    let mut l = net(ModelKind::Lstm, fs, 1);
    let a = l.forward(&x).unwrap();
    assert_ne!(l.forward(&x).unwrap(), a);
    l.reset();
    assert_eq!(l.forward(&x).unwrap(), a);
}

#[test]
fn rollouts_are_deterministic_and_round_trip() {
    let fs = FeatureSet::PosVelTrq;
    let r = replay(Glyph::B, fs);
    let cfg = RolloutConfig {
        feedback: true,
        seed: 4,
        ..RolloutConfig::default()
    };
    let a = run_autonomous(&mut net(ModelKind::Lstm, fs, 2), "lstm", &r, &cfg).unwrap();
    let b = run_autonomous(&mut net(ModelKind::Lstm, fs, 2), "lstm", &r, &cfg).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.bin");
    a.write(&path).unwrap();
    assert_eq!(RolloutLog::read(&path).unwrap(), a);
}

#[test]
fn seeds_perturb_the_start_pose_slightly() {
    let r = replay(Glyph::A, FeatureSet::Pos);
    let run = |seed| {
        let cfg = RolloutConfig {
            seed,
            ..RolloutConfig::default()
        };
        run_autonomous(&mut OracleStub::new(&r), "oracle", &r, &cfg).unwrap()
    };
    let (a, b) = (run(1), run(2));
    assert_ne!(a.follower[0], b.follower[0]);
    for log in [a, b] {
        for j in 0..2 {
            assert!((log.follower[0][j] - r.states[0][j]).abs() <= 0.01);
        }
        assert_eq!(log.follower[0][2], r.states[0][2]);
    }
}

#[test]
fn mismatched_feature_set_rejected() {
    let r = replay(Glyph::A, FeatureSet::Pos);
    let mut p = net(ModelKind::Mlp, FeatureSet::PosVel, 0);
    assert!(run_autonomous(&mut p, "mlp", &r, &RolloutConfig::default()).is_err());
}
