//! Pose-offset calibration from light-touch probes.
//!
//! Probes recorded at the end of a light touch should lie on the skin. A
//! systematic error in the pose chain moves them off it; hill climbing over
//! the six offset components pulls the mean distance back down.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, norm, rotate, scale, Capsule, Vec3};
use crate::rng;
use crate::sensor::{select_contact_probes, ProbeMode, SensorFrame};

pub const MIN_PROBES: usize = 10;
pub const DEFAULT_STEPS: usize = 1000;
const TRANSLATION_STEP_MM: f64 = 0.5;
const ROTATION_STEP_RAD: f64 = 0.01;
const HALVING_PERIOD: usize = 200;

/// Rigid correction `p ↦ R(rotation)·p + translation_mm`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseOffset {
    pub translation_mm: Vec3,
    /// Axis-angle vector, radians.
    pub rotation: Vec3,
}

impl PoseOffset {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        add(rotate(self.rotation, p), self.translation_mm)
    }

    pub fn inverse(&self) -> PoseOffset {
        let rotation = scale(self.rotation, -1.0);
        PoseOffset {
            translation_mm: scale(rotate(rotation, self.translation_mm), -1.0),
            rotation,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if norm(self.rotation) >= std::f64::consts::PI {
            return Err("rotation magnitude must be < π".into());
        }
        Ok(())
    }

    fn component_mut(&mut self, i: usize) -> &mut f64 {
        if i < 3 {
            &mut self.translation_mm[i]
        } else {
            &mut self.rotation[i - 3]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub initial_mean_dist_mm: f64,
    pub final_mean_dist_mm: f64,
    pub steps: usize,
    pub accepted: usize,
    /// Mean |distance| after each step.
    pub trace: Vec<f64>,
}

pub fn surface_distance(point_mm: Vec3, surface: &Capsule) -> f64 {
    surface.signed_distance(point_mm)
}

pub fn mean_abs_distance(probes: &[Vec3], surface: &Capsule, offset: &PoseOffset) -> f64 {
    let sum: f64 = probes
        .iter()
        .map(|p| surface.signed_distance(offset.apply(*p)).abs())
        .sum();
    sum / probes.len() as f64
}

/// Hill-climb the offset that brings `probes` onto `surface`.
///
/// Each step nudges one random component by ±δ and keeps the change only if
/// the mean absolute distance strictly drops. δ starts at 0.5 mm (0.01 rad
/// for rotations) and halves every 200 steps.
pub fn calibrate(
    probes: &[Vec3],
    surface: &Capsule,
    initial: PoseOffset,
    steps: usize,
    seed: u64,
) -> Result<(PoseOffset, CalibrationReport)> {
    if probes.len() < MIN_PROBES {
        return Err(Error::Insufficient(format!(
            "calibration needs at least {MIN_PROBES} probes, got {}",
            probes.len()
        )));
    }
    surface.validate().map_err(Error::Config)?;

    let mut rng = rng::rng(seed);
    let mut best = initial;
    let initial_mean = mean_abs_distance(probes, surface, &best);
    let mut current = initial_mean;
    let mut trace = Vec::with_capacity(steps);
    let mut accepted = 0;

    for step in 0..steps {
        let shrink = 0.5f64.powi((step / HALVING_PERIOD) as i32);
        let component = rng.random_range(0..6);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let delta = if component < 3 {
            TRANSLATION_STEP_MM
        } else {
            ROTATION_STEP_RAD
        } * shrink;

        let mut candidate = best;
        *candidate.component_mut(component) += sign * delta;
        let m = mean_abs_distance(probes, surface, &candidate);
        if m < current {
            best = candidate;
            current = m;
            accepted += 1;
        }
        trace.push(current);
    }

    Ok((
        best,
        CalibrationReport {
            initial_mean_dist_mm: initial_mean,
            final_mean_dist_mm: current,
            steps,
            accepted,
            trace,
        },
    ))
}

/// Light-touch probe positions: the last touching frame of each cycle with
/// force below `force_min_n`. No distance filter, since the offset being
/// estimated is exactly what moves probes away from the skin.
pub fn light_touch_probes(frames: &[SensorFrame], surface: &Capsule, force_min_n: f64) -> Vec<Vec3> {
    select_contact_probes(frames, surface, force_min_n, f64::INFINITY, ProbeMode::LightTouchEnd)
        .into_iter()
        .map(|i| frames[i].position_mm)
        .collect()
}
