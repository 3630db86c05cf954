//! Velocity, disturbance and reaction-force estimation per joint.
//!
//! All three filters are first-order low-passes discretized with the exact
//! exponential `a = exp(−g·dt)`.

use serde::{Deserialize, Serialize};

/// Observer cutoffs in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserverConfig {
    pub g_v: f64,
    pub g_d: f64,
    pub g_r: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            g_v: 100.0,
            g_d: 100.0,
            g_r: 100.0,
        }
    }
}

#[inline]
fn pole(g: f64, dt: f64) -> f64 {
    (-g * dt).exp()
}

/// Filter state of one joint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JointObserver {
    /// Low-passed angle used by the pseudo-differentiator.
    pub angle_lpf: Option<f64>,
    /// Disturbance observer low-pass output.
    pub dob_lpf: f64,
    /// Low-passed velocity used for the friction model in the RFO.
    pub rfo_lpf: f64,
}

/// Band-limited derivative `s·g_v/(s + g_v)`: the angle is low-passed and
/// the per-sample increment of the filtered angle is the velocity estimate.
pub fn pseudo_diff(angle: f64, state: &mut JointObserver, g_v: f64, dt: f64) -> f64 {
    let Some(prev) = state.angle_lpf else {
        state.angle_lpf = Some(angle);
        return 0.0;
    };
    let a = pole(g_v, dt);
    let next = a * prev + (1.0 - a) * angle;
    state.angle_lpf = Some(next);
    (next - prev) / dt
}

/// Disturbance observer
/// `τ̂_dis = LPF_{g_d}(τ_cmd + g_d·J_n·θ̇) − g_d·J_n·θ̇`, where `τ_cmd` is the
/// torque applied over the last period.
pub fn dob_update(
    tau_cmd: f64,
    velocity: f64,
    inertia: f64,
    state: &mut JointObserver,
    g_d: f64,
    dt: f64,
) -> f64 {
    let a = pole(g_d, dt);
    let feed = g_d * inertia * velocity;
    state.dob_lpf = a * state.dob_lpf + (1.0 - a) * (tau_cmd + feed);
    state.dob_lpf - feed
}

/// Reaction force observer: the disturbance estimate minus the modeled
/// viscous friction, with the friction term band-limited like the DOB.
/// The result is the torque the joint exerts on its surroundings.
pub fn rfo_update(
    tau_dis: f64,
    velocity: f64,
    friction: f64,
    state: &mut JointObserver,
    g_r: f64,
    dt: f64,
) -> f64 {
    let a = pole(g_r, dt);
    state.rfo_lpf = a * state.rfo_lpf + (1.0 - a) * velocity;
    tau_dis - friction * state.rfo_lpf
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 0.002;

    #[test]
    fn constant_angle_gives_zero_velocity() {
        let mut s = JointObserver::default();
        for _ in 0..200 {
            let v = pseudo_diff(1.3, &mut s, 100.0, DT);
            assert_eq!(v, 0.0);
        }
        // Step then hold: estimate decays back to zero.
        let mut last = 0.0;
        for _ in 0..400 {
            last = pseudo_diff(1.4, &mut s, 100.0, DT);
        }
        assert!(last.abs() < 1e-12);
    }

    #[test]
    fn ramp_slope_is_recovered() {
        let mut s = JointObserver::default();
        let v = 0.8;
        let settle = (5.0 / 100.0 / DT) as usize;
        let mut est = 0.0;
        for k in 0..=settle + 10 {
            est = pseudo_diff(v * k as f64 * DT, &mut s, 100.0, DT);
        }
        assert!((est - v).abs() / v < 0.01, "estimate {est}");
    }

    #[test]
    fn slow_sinusoid_amplitude() {
        // Amplitude of the estimate over the last period vs the true
        // derivative amplitude A·ω, swept below the cutoff.
        for &w in &[2.0, 5.0, 10.0, 20.0] {
            let mut s = JointObserver::default();
            let period = (2.0 * std::f64::consts::PI / w / DT) as usize;
            let n = 6 * period;
            let mut peak: f64 = 0.0;
            for k in 0..n {
                let e = pseudo_diff((w * k as f64 * DT).sin(), &mut s, 100.0, DT);
                if k >= n - period {
                    peak = peak.max(e.abs());
                }
            }
            assert!((peak / w - 1.0).abs() < 0.05, "ω={w}: ratio {}", peak / w);
        }
    }

    #[test]
    fn zero_inputs_give_zero_estimates() {
        let mut s = JointObserver::default();
        for _ in 0..10 {
            let d = dob_update(0.0, 0.0, 0.01, &mut s, 100.0, DT);
            assert_eq!(d, 0.0);
            assert_eq!(rfo_update(d, 0.0, 0.02, &mut s, 100.0, DT), 0.0);
        }
    }

    fn dob_settling_time(g: f64) -> f64 {
        // A joint held still against a constant command: the estimate is a
        // first-order step response with time constant 1/g.
        let mut s = JointObserver::default();
        let mut k = 0;
        while (dob_update(0.2, 0.0, 0.01, &mut s, g, DT) - 0.2).abs() > 0.2 * 0.02 {
            k += 1;
        }
        k as f64 * DT
    }

    #[test]
    fn doubling_dob_cutoff_halves_settling() {
        let ratio = dob_settling_time(100.0) / dob_settling_time(50.0);
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        // 2 % settling of a first-order lag takes ln(50)/g.
        assert!((dob_settling_time(100.0) - 50f64.ln() / 100.0).abs() <= DT);
    }
}
