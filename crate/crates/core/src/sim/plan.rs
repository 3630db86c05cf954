//! Timed pen plans for the scripted hand.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Axis-aligned writing area in robot coordinates (metres).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoardRect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl BoardRect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x0 + self.width && p[1] >= self.y0 && p[1] <= self.y0 + self.height
    }
}

impl Default for BoardRect {
    /// A 0.12 m square centred on the 0.10 m glyph page.
    fn default() -> Self {
        BoardRect {
            x0: 0.14,
            y0: -0.06,
            width: 0.12,
            height: 0.12,
        }
    }
}

/// One pen-down polyline in board coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<[f64; 2]>,
    /// Pen pressure setpoint in newtons.
    pub pressure: f64,
}

impl Stroke {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Copy with every waypoint moved by up to `±waypoint` per axis and the
    /// pressure scaled by up to `±pressure_frac`.
    pub fn jittered<R: Rng>(&self, rng: &mut R, waypoint: f64, pressure_frac: f64) -> Stroke {
        let points = self
            .points
            .iter()
            .map(|p| {
                [
                    p[0] + rng.random_range(-waypoint..=waypoint),
                    p[1] + rng.random_range(-waypoint..=waypoint),
                ]
            })
            .collect();
        let scale = 1.0 + rng.random_range(-pressure_frac..=pressure_frac);
        Stroke {
            points,
            pressure: self.pressure * scale,
        }
    }
}

/// Durations and speeds used to turn strokes into a timed plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanTiming {
    /// Hover before the first touchdown (s).
    pub lead_in: f64,
    /// Hover after the last lift (s).
    pub lead_out: f64,
    /// Pressure on, position held, before a stroke starts moving (s).
    pub touchdown: f64,
    /// Pressure off, position held, after a stroke (s).
    pub raise: f64,
    pub stroke_speed: f64,
    pub min_stroke_time: f64,
    pub travel_speed: f64,
    pub min_travel_time: f64,
    /// Hover height above the board (m).
    pub lift_height: f64,
}

impl Default for PlanTiming {
    fn default() -> Self {
        PlanTiming {
            lead_in: 0.6,
            lead_out: 0.4,
            touchdown: 0.3,
            raise: 0.15,
            stroke_speed: 0.06,
            min_stroke_time: 0.6,
            travel_speed: 0.15,
            min_travel_time: 0.5,
            lift_height: 0.005,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PenMode {
    /// Hold the pen at the hover height.
    Lift,
    /// Press with this many newtons.
    Press(f64),
}

/// A time interval during which the hand moves along `path` with a
/// minimum-jerk profile in arc length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub path: Vec<[f64; 2]>,
    pub mode: PenMode,
}

/// Hand setpoint at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setpoint {
    pub xy: [f64; 2],
    pub mode: PenMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrokePlan {
    pub id: String,
    pub segments: Vec<Segment>,
    pub lift_height: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn along(path: &[[f64; 2]], frac: f64) -> [f64; 2] {
    let total: f64 = path.windows(2).map(|w| dist(w[0], w[1])).sum();
    if total == 0.0 {
        return path[0];
    }
    let mut left = frac * total;
    for w in path.windows(2) {
        let d = dist(w[0], w[1]);
        if left <= d && d > 0.0 {
            let r = left / d;
            return [w[0][0] + r * (w[1][0] - w[0][0]), w[0][1] + r * (w[1][1] - w[0][1])];
        }
        left -= d;
    }
    *path.last().unwrap()
}

impl StrokePlan {
    /// Lay out `strokes` in time: hover, then for each stroke touchdown,
    /// draw, raise and travel to the next start.
    pub fn build(id: &str, strokes: &[Stroke], timing: &PlanTiming, board: &BoardRect) -> Result<StrokePlan> {
        if strokes.is_empty() {
            return Err(Error::arg("a plan needs at least one stroke"));
        }
        for s in strokes {
            if s.points.is_empty() || !(s.pressure > 0.0) {
                return Err(Error::arg("strokes need points and positive pressure"));
            }
            if let Some(p) = s.points.iter().find(|p| !board.contains(**p)) {
                return Err(Error::arg(format!("stroke point {p:?} lies outside the board")));
            }
        }
        let mut segments = Vec::new();
        let mut t = 0.0;
        let mut push = |t: &mut f64, dur: f64, path: Vec<[f64; 2]>, mode: PenMode| {
            segments.push(Segment {
                t0: *t,
                t1: *t + dur,
                path,
                mode,
            });
            *t += dur;
        };
        let first = strokes[0].points[0];
        push(&mut t, timing.lead_in, vec![first], PenMode::Lift);
        for (i, s) in strokes.iter().enumerate() {
            let start = s.points[0];
            let end = *s.points.last().unwrap();
            let press = PenMode::Press(s.pressure);
            push(&mut t, timing.touchdown, vec![start], press);
            let dur = (s.length() / timing.stroke_speed).max(timing.min_stroke_time);
            push(&mut t, dur, s.points.clone(), press);
            push(&mut t, timing.raise, vec![end], PenMode::Lift);
            if let Some(next) = strokes.get(i + 1) {
                let to = next.points[0];
                let dur = timing.min_travel_time + dist(end, to) / timing.travel_speed;
                push(&mut t, dur, vec![end, to], PenMode::Lift);
            }
        }
        let last = *strokes.last().unwrap().points.last().unwrap();
        push(&mut t, timing.lead_out, vec![last], PenMode::Lift);
        Ok(StrokePlan {
            id: id.to_string(),
            segments,
            lift_height: timing.lift_height,
        })
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    pub fn start(&self) -> [f64; 2] {
        self.segments[0].path[0]
    }

    /// Setpoint at time `t`, or `None` past the end of the plan.
    pub fn sample(&self, t: f64) -> Option<Setpoint> {
        if !(t >= 0.0) || t > self.duration() {
            return None;
        }
        let seg = self.segments.iter().find(|s| t <= s.t1)?;
        let frac = if seg.t1 > seg.t0 {
            min_jerk((t - seg.t0) / (seg.t1 - seg.t0))
        } else {
            1.0
        };
        Some(Setpoint {
            xy: along(&seg.path, frac),
            mode: seg.mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: [f64; 2], b: [f64; 2]) -> Stroke {
        Stroke {
            points: vec![a, b],
            pressure: 1.5,
        }
    }

    fn plan() -> StrokePlan {
        let s = [line([0.16, 0.0], [0.22, 0.0]), line([0.2, -0.03], [0.2, 0.03])];
        StrokePlan::build("t", &s, &PlanTiming::default(), &BoardRect::default()).unwrap()
    }

    #[test]
    fn timestamps_are_monotone_and_contiguous() {
        let p = plan();
        for w in p.segments.windows(2) {
            assert!(w[0].t0 <= w[0].t1);
            assert_eq!(w[0].t1, w[1].t0);
        }
        // lead-in, 2 × (touchdown, draw, raise), travel, lead-out
        assert_eq!(p.segments.len(), 9);
    }

    #[test]
    fn stroke_endpoints_are_hit() {
        let p = plan();
        let draw = &p.segments[2];
        assert_eq!(p.sample(draw.t0).unwrap().xy, [0.16, 0.0]);
        let end = p.sample(draw.t1).unwrap().xy;
        assert!(dist(end, [0.22, 0.0]) < 1e-12);
        assert_eq!(p.sample(draw.t0 + 0.01).unwrap().mode, PenMode::Press(1.5));
    }

    #[test]
    fn draw_duration_follows_speed() {
        let p = plan();
        let draw = &p.segments[2];
        assert!((draw.t1 - draw.t0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beyond_plan_is_none() {
        let p = plan();
        assert!(p.sample(p.duration() + 1e-3).is_none());
        assert!(p.sample(-1e-3).is_none());
    }

    #[test]
    fn out_of_board_points_rejected() {
        let s = [line([0.0, 0.0], [0.2, 0.0])];
        assert!(StrokePlan::build("x", &s, &PlanTiming::default(), &BoardRect::default()).is_err());
    }

    #[test]
    fn jitter_stays_within_bounds() {
        let mut rng = crate::seed::rng(3);
        let s = line([0.2, 0.0], [0.21, 0.01]);
        for _ in 0..100 {
            let j = s.jittered(&mut rng, 0.002, 0.1);
            for (a, b) in j.points.iter().zip(&s.points) {
                assert!((a[0] - b[0]).abs() <= 0.002 && (a[1] - b[1]).abs() <= 0.002);
            }
            assert!((j.pressure / s.pressure - 1.0).abs() <= 0.1 + 1e-12);
        }
    }
}
