//! Velocity estimation from sampled positions.

use alloc::vec::Vec;

use crate::geometry::Vec2;
use crate::model::{Sample, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VelocityOptions {
    /// Overwrite velocities already present in the input.
    pub recompute: bool,
    /// Odd moving-average window applied to positions before differencing;
    /// `None` or `Some(1)` disables smoothing.
    pub smoothing_window: Option<usize>,
}

fn smoothed_positions(samples: &[Sample], window: usize) -> Vec<Vec2> {
    let half = window / 2;
    let n = samples.len();
    (0..n)
        .map(|i| {
            // Shrink the window symmetrically near the ends.
            let h = half.min(i).min(n - 1 - i);
            let span = &samples[i - h..=i + h];
            let sum = span.iter().fold(Vec2::ZERO, |acc, s| acc + s.pos);
            sum * (1.0 / span.len() as f64)
        })
        .collect()
}

/// Central differences at interior samples, one-sided at the ends.
///
/// A single-sample trajectory is returned unchanged.
pub fn estimate_velocities(traj: &Trajectory, opts: VelocityOptions) -> Trajectory {
    let samples = traj.samples();
    let n = samples.len();
    if n < 2 || (!opts.recompute && traj.has_velocities()) {
        return traj.clone();
    }
    let pos: Vec<Vec2> = match opts.smoothing_window {
        Some(w) if w > 1 => smoothed_positions(samples, w | 1),
        _ => samples.iter().map(|s| s.pos).collect(),
    };
    let diff = |a: usize, b: usize| (pos[b] - pos[a]) * (1.0 / (samples[b].t - samples[a].t));
    let out = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.vel.is_some() && !opts.recompute {
                return *s;
            }
            let v = if i == 0 {
                diff(0, 1)
            } else if i == n - 1 {
                diff(n - 2, n - 1)
            } else {
                diff(i - 1, i + 1)
            };
            Sample { vel: Some(v), ..*s }
        })
        .collect();
    traj.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjectClass, ObjectId};
    use alloc::vec;

    fn traj(pts: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::new(
            ObjectId::from("a"),
            ObjectClass::Car,
            pts.iter().map(|&(t, x, y)| Sample::new(t, x, y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_motion() {
        let t = estimate_velocities(&traj(&[(0.0, 0.0, 0.0), (0.1, 1.0, 0.0), (0.2, 2.0, 0.0)]), Default::default());
        for s in t.samples() {
            let v = s.vel.unwrap();
            assert!((v.x - 10.0).abs() < 1e-9 && v.y.abs() < 1e-12);
        }
    }

    #[test]
    fn stationary() {
        let t = estimate_velocities(&traj(&[(0.0, 3.0, 4.0), (0.1, 3.0, 4.0), (0.2, 3.0, 4.0)]), Default::default());
        assert!(t.samples().iter().all(|s| s.vel == Some(Vec2::ZERO)));
    }

    #[test]
    fn central_difference_exact_on_quadratic() {
        let pts: Vec<_> = (0..20).map(|i| {
            let t = i as f64 * 0.1;
            (t, t * t, 0.0)
        }).collect();
        let t = estimate_velocities(&traj(&pts), Default::default());
        for s in &t.samples()[1..19] {
            assert!((s.vel.unwrap().x - 2.0 * s.t).abs() < 1e-9, "t={}", s.t);
        }
    }

    #[test]
    fn existing_velocities_preserved_unless_forced() {
        let samples = vec![Sample::new(0.0, 0.0, 0.0).with_velocity(7.0, 0.0), Sample::new(0.1, 1.0, 0.0).with_velocity(7.0, 0.0)];
        let t = Trajectory::new(ObjectId::from("a"), ObjectClass::Car, samples).unwrap();
        assert_eq!(estimate_velocities(&t, Default::default()).samples()[0].vel.unwrap().x, 7.0);
        let forced = estimate_velocities(&t, VelocityOptions { recompute: true, smoothing_window: None });
        assert!((forced.samples()[0].vel.unwrap().x - 10.0).abs() < 1e-9);
    }

    #[test]
    fn smoothing_keeps_linear_motion() {
        let pts: Vec<_> = (0..11).map(|i| (i as f64 * 0.1, i as f64, 0.0)).collect();
        let t = estimate_velocities(&traj(&pts), VelocityOptions { recompute: false, smoothing_window: Some(3) });
        for s in t.samples() {
            assert!((s.vel.unwrap().x - 10.0).abs() < 1e-9);
        }
    }
}
