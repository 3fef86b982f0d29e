//! Bucketing a run's B-count trajectory into the three phases.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::spectral::PhaseParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// `B >= c n`
    I,
    /// `omega <= B < c n`
    II,
    /// `1 <= B < omega`
    III,
    /// `B = 0`
    Done,
}

impl Phase {
    pub fn of(b: usize, cn: f64, omega: usize) -> Phase {
        if b == 0 {
            Phase::Done
        } else if b as f64 >= cn {
            Phase::I
        } else if b >= omega {
            Phase::II
        } else {
            Phase::III
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub rounds: usize,
    /// Median of `B_{t+1}/B_t` over the rounds started in this phase.
    pub median_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseAnnotation {
    /// One tag per trajectory entry.
    pub tags: Vec<Phase>,
    pub phase_1: PhaseStats,
    pub phase_2: PhaseStats,
    pub phase_3: PhaseStats,
}

/// Tags each trajectory entry and summarizes the rounds started in each
/// phase. A run with no rounds gets an empty annotation.
pub fn annotate_phases(trajectory: Option<&[usize]>, n: usize, params: &PhaseParams) -> Result<PhaseAnnotation, HarnessError> {
    let traj = trajectory.ok_or(HarnessError::MissingTrajectory)?;
    if traj.len() <= 1 {
        return Ok(PhaseAnnotation::default());
    }
    let cn = params.c * n as f64;
    let tags: Vec<Phase> = traj.iter().map(|&b| Phase::of(b, cn, params.omega)).collect();
    let mut ratios: [Vec<f64>; 3] = Default::default();
    let mut counts = [0usize; 3];
    for (t, w) in traj.windows(2).enumerate() {
        let slot = match tags[t] {
            Phase::I => 0,
            Phase::II => 1,
            Phase::III => 2,
            Phase::Done => continue,
        };
        counts[slot] += 1;
        ratios[slot].push(w[1] as f64 / w[0] as f64);
    }
    let stats = |i: usize| {
        let r = &ratios[i];
        PhaseStats {
            rounds: counts[i],
            median_ratio: median_f64(r),
            mean_ratio: (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64),
        }
    };
    Ok(PhaseAnnotation { phase_1: stats(0), phase_2: stats(1), phase_3: stats(2), tags })
}

fn median_f64(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, omega: usize) -> PhaseParams {
        PhaseParams { c, alpha: 0.1, gamma: 0.28, omega, nu0_threshold: 2.0, k: 20.0 }
    }

    #[test]
    fn bucketing_example() {
        let traj = [450, 300, 180, 60, 9, 1, 0];
        let a = annotate_phases(Some(&traj), 1000, &params(0.1, 5)).unwrap();
        use Phase::*;
        assert_eq!(a.tags, vec![I, I, I, II, II, III, Done]);
        assert_eq!((a.phase_1.rounds, a.phase_2.rounds, a.phase_3.rounds), (3, 2, 1));
        assert_eq!(a.phase_3.median_ratio, Some(0.0));
        assert!((a.phase_2.median_ratio.unwrap() - (9.0 / 60.0 + 1.0 / 9.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_missing() {
        assert_eq!(annotate_phases(Some(&[0]), 10, &params(0.1, 2)).unwrap(), PhaseAnnotation::default());
        assert!(matches!(annotate_phases(None, 10, &params(0.1, 2)), Err(HarnessError::MissingTrajectory)));
    }
}
