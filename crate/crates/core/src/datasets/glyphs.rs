//! Stroke library for the three characters.
//!
//! Glyphs are drawn on a 0.10 m page with `u` to the right and `v` upward.
//! 'A' and '4' stay inside the same band of the page, while the bulges of
//! 'B' reach further right than anything in 'A'.

use crate::error::{Error, Result};
use crate::seed;
use crate::sim::plan::{BoardRect, PlanTiming, Stroke, StrokePlan};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub const PAGE_SIZE: f64 = 0.10;
/// Robot coordinates of the page origin.
pub const PAGE_ORIGIN: [f64; 2] = [0.15, -0.05];
pub const DEFAULT_PRESSURE: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Glyph {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "B")]
    B,
}

impl Glyph {
    pub const ALL: [Glyph; 3] = [Glyph::A, Glyph::Four, Glyph::B];

    pub fn tag(self) -> &'static str {
        match self {
            Glyph::A => "A",
            Glyph::Four => "4",
            Glyph::B => "B",
        }
    }

    /// Strokes in page coordinates.
    pub fn page_strokes(self) -> Vec<Vec<[f64; 2]>> {
        match self {
            Glyph::A => vec![
                vec![[0.02, 0.0], [0.05, 0.09]],
                vec![[0.05, 0.09], [0.08, 0.0]],
                vec![[0.032, 0.035], [0.068, 0.035]],
            ],
            Glyph::Four => vec![
                vec![[0.06, 0.09], [0.02, 0.03], [0.085, 0.03]],
                vec![[0.06, 0.09], [0.06, 0.0]],
            ],
            Glyph::B => {
                let mut bulges = vec![[0.03, 0.09]];
                bulges.extend(arc([0.06, 0.0675], 0.0225, 0.03));
                bulges.push([0.03, 0.045]);
                bulges.extend(arc([0.063, 0.0225], 0.0225, 0.034));
                bulges.push([0.03, 0.0]);
                vec![vec![[0.03, 0.0], [0.03, 0.09]], bulges]
            }
        }
    }

    /// Strokes in robot coordinates at the default pressure.
    pub fn strokes(self) -> Vec<Stroke> {
        self.page_strokes()
            .into_iter()
            .map(|pts| Stroke {
                points: pts.into_iter().map(page_to_board).collect(),
                pressure: DEFAULT_PRESSURE,
            })
            .collect()
    }

    /// Timed plan; `jitter_seed` perturbs waypoints by ±2 mm and pressure by
    /// ±10 %, `None` gives the nominal glyph.
    pub fn plan(self, jitter_seed: Option<u64>, timing: &PlanTiming, board: &BoardRect) -> Result<StrokePlan> {
        let mut strokes = self.strokes();
        let id = match jitter_seed {
            Some(s) => {
                let mut rng = seed::rng(s);
                strokes = strokes.iter().map(|st| st.jittered(&mut rng, 0.002, 0.1)).collect();
                format!("{}-{s:016x}", self.tag())
            }
            None => self.tag().to_string(),
        };
        StrokePlan::build(&id, &strokes, timing, board)
    }
}

/// Half-ellipse bulge right of `centre`, from its top to its bottom.
fn arc(centre: [f64; 2], half_height: f64, reach: f64) -> Vec<[f64; 2]> {
    const N: usize = 8;
    (0..=N)
        .map(|i| {
            let a = PI / 2.0 - PI * i as f64 / N as f64;
            [centre[0] + reach * a.cos(), centre[1] + half_height * a.sin()]
        })
        .collect()
}

pub fn page_to_board(p: [f64; 2]) -> [f64; 2] {
    [PAGE_ORIGIN[0] + p[1], PAGE_ORIGIN[1] + p[0]]
}

impl fmt::Display for Glyph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Glyph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Glyph::A),
            "4" => Ok(Glyph::Four),
            "B" | "b" => Ok(Glyph::B),
            _ => Err(Error::arg(format!("unknown glyph '{s}'"))),
        }
    }
}
