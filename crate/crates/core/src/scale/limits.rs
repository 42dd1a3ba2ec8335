//! Finite/divergent classification of `p_c` and `v_c` at the interval ends.

use serde::Serialize;

use super::ScaleContext;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitTarget {
    ScaleP,
    TestV,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum LimitClassification {
    /// `value` is `+∞` when a limit known to be finite overflows `f64`.
    Finite {
        value: f64,
    },
    Divergent,
    Inconclusive {
        points: Vec<f64>,
        values: Vec<f64>,
    },
}

impl LimitClassification {
    pub fn is_finite(&self) -> bool {
        matches!(self, LimitClassification::Finite { .. })
    }
    pub fn is_divergent(&self) -> bool {
        matches!(self, LimitClassification::Divergent)
    }
    pub fn label(&self) -> &'static str {
        match self {
            LimitClassification::Finite { .. } => "finite",
            LimitClassification::Divergent => "divergent",
            LimitClassification::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSettings {
    /// Magnitudes above this count as divergence.
    pub cap: f64,
    /// Points sampled before the first decision.
    pub steps: usize,
    /// Points sampled before giving up.
    pub max_steps: usize,
    /// Mean increment ratio at or above which growth is non-summable.
    pub divergent_ratio: f64,
    /// Mean increment ratio at or below which increments contract.
    pub finite_ratio: f64,
    /// Largest geometric tail estimate, relative to the value, accepted as
    /// converged.
    pub tail_rel: f64,
    /// Decide built-in families from the exponent of `p'_c`.
    pub closed_form: bool,
}

impl Default for LimitSettings {
    fn default() -> Self {
        Self {
            cap: 1e12,
            steps: 12,
            max_steps: 40,
            divergent_ratio: 0.97,
            finite_ratio: 0.9,
            tail_rel: 0.1,
            closed_form: true,
        }
    }
}

/// Points approaching `boundary` from `c`: halving distances towards a
/// finite boundary, `c ± 2^k` towards an infinite one.
pub(crate) fn approach(c: f64, boundary: f64, n: usize) -> Vec<f64> {
    if boundary.is_finite() {
        let s = c - boundary;
        (1..=n)
            .map(|k| boundary + s * 0.5f64.powi(k as i32))
            .collect()
    } else {
        let dir = boundary.signum();
        (1..=n).map(|k| c + dir * 2f64.powi(k as i32)).collect()
    }
}

/// Decision on the first `values.len()` samples, `None` if undecided.
pub(crate) fn decide(values: &[f64], s: &LimitSettings) -> Option<LimitClassification> {
    if values.iter().any(|v| !v.is_finite() || v.abs() > s.cap) {
        return Some(LimitClassification::Divergent);
    }
    if values.len() < 6 {
        return None;
    }
    let d: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last = *values.last().expect("non-empty");
    if d.iter().rev().take(4).all(|x| *x == 0.0) {
        return Some(LimitClassification::Finite { value: last });
    }
    let ratios: Vec<f64> = d
        .windows(2)
        .rev()
        .take(4)
        .map(|w| {
            if w[0] == 0.0 {
                f64::INFINITY
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean >= s.divergent_ratio {
        return Some(LimitClassification::Divergent);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    if mean <= s.finite_ratio && worst < 1.0 {
        let d_last = *d.last().expect("non-empty");
        let tail = d_last * mean / (1.0 - mean);
        if tail <= s.tail_rel * last.abs() {
            let dir = (last - values[values.len() - 2]).signum();
            return Some(LimitClassification::Finite {
                value: last + dir * tail,
            });
        }
    }
    None
}

fn sample(ctx: &ScaleContext, points: &[f64], target: LimitTarget) -> Result<Vec<f64>, Error> {
    let prof = ctx.profile(points)?;
    Ok(match target {
        LimitTarget::ScaleP => prof.scale,
        LimitTarget::TestV => prof.v,
    })
}

pub(crate) fn classify(ctx: &ScaleContext, side: Side, target: LimitTarget) -> LimitClassification {
    let s = ctx.settings().limits;
    let mut known_finite = false;
    if s.closed_form {
        match ctx.closed_form_divergence(side) {
            Some(true) => return LimitClassification::Divergent,
            Some(false) => known_finite = true,
            None => {}
        }
    }
    let (l, r) = ctx.model().interval();
    let boundary = match side {
        Side::Left => l,
        Side::Right => r,
    };
    let c = ctx.base_point();

    let mut n = s.steps;
    let mut values = Vec::new();
    let mut points = Vec::new();
    while n <= s.max_steps {
        points = approach(c, boundary, n);
        // drop points that have collapsed onto the boundary in floating point
        points.retain(|&x| ctx.model().contains(x));
        values = match sample(ctx, &points, target) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => return LimitClassification::Divergent,
            Err(_) => break,
        };
        for m in s.steps.min(values.len())..=values.len() {
            if let Some(decision) = decide(&values[..m], &s) {
                if known_finite && decision.is_divergent() {
                    break;
                }
                return decision;
            }
        }
        // the samples only supply a value here; far out they are dominated
        // by rounding in the exponent and cost more than they add
        if known_finite || n == s.max_steps {
            break;
        }
        n = (n * 2).min(s.max_steps);
    }
    if known_finite {
        // a finite limit past the f64 range keeps its classification
        if let Some(&last) = values.last() {
            return LimitClassification::Finite { value: last };
        }
    }
    LimitClassification::Inconclusive { points, values }
}
