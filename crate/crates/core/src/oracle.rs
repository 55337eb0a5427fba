//! Seedable synthetic BioTac surrogate.
//!
//! The surrogate is a stand-in oracle for recorded data: each electrode reads a
//! base level plus a Gaussian-falloff response to the contact force, a linear
//! temperature term and white noise. The tip electrodes (e7–e10) get an extra
//! gain factor for the larger fluid volume under the tip. Pressure follows the
//! force magnitude and the two vibration channels follow its first difference.
//! None of the constants are claims about the physical sensor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::PoseOffset;
use crate::error::{Error, Result};
use crate::geometry::{add, dist_sq, dot, norm, scale, sub, Vec3};
use crate::rng;
use crate::sensor::{ElectrodeLayout, SensorFrame, N_ELECTRODES, RAW_MAX, TIP_ELECTRODES};

/// Position samples arrive every this many 100 Hz ticks (10 Hz tracking).
pub const POSITION_PERIOD_TICKS: u64 = 10;

/// Exponential warm-up of the sensor temperature reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub t0_counts: f64,
    pub t_inf_counts: f64,
    pub tau_ticks: f64,
}

/// `tdc(t) = t_inf − (t_inf − t0)·exp(−t/τ)`.
pub fn temperature_at(tick: u64, drift: &Drift) -> f64 {
    drift.t_inf_counts - (drift.t_inf_counts - drift.t0_counts) * (-(tick as f64) / drift.tau_ticks).exp()
}

/// One press: ramp up to `peak_force_n`, hold, ramp back down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    /// Contact point on the skin surface.
    pub center_mm: Vec3,
    pub peak_force_n: f64,
    pub ramp_ticks: u64,
    pub hold_ticks: u64,
    /// Tangential force per newton of normal force; the normal component is removed.
    #[serde(default)]
    pub shear: Vec3,
}

impl CycleSpec {
    pub fn contact_ticks(&self) -> u64 {
        2 * self.ramp_ticks + self.hold_ticks
    }

    /// Force magnitude `k` ticks into the contact phase.
    fn force_at(&self, k: u64) -> f64 {
        let r = self.ramp_ticks as f64;
        if k < self.ramp_ticks {
            self.peak_force_n * (k + 1) as f64 / (r + 1.0)
        } else if k < self.ramp_ticks + self.hold_ticks {
            self.peak_force_n
        } else {
            let j = k - self.ramp_ticks - self.hold_ticks;
            self.peak_force_n * (self.ramp_ticks - j) as f64 / (r + 1.0)
        }
    }
}

/// Parameters for drawing cycles at generation time instead of listing them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCycles {
    pub count: usize,
    pub peak_force_n: [f64; 2],
    pub ramp_ticks: [u64; 2],
    pub hold_ticks: [u64; 2],
    /// Half-width (radians) of the band around the volar side where contacts land.
    pub max_theta: f64,
    pub max_shear: f64,
}

impl Default for RandomCycles {
    fn default() -> Self {
        RandomCycles {
            count: 20,
            peak_force_n: [0.8, 4.0],
            ramp_ticks: [20, 60],
            hold_ticks: [30, 120],
            max_theta: 1.75,
            max_shear: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    pub duration_ticks: u64,
    pub drift: Drift,
    pub electrode_base: Vec<f64>,
    pub electrode_gain: Vec<f64>,
    pub spatial_sigma_mm: f64,
    pub temp_coupling: Vec<f64>,
    pub noise_std_counts: f64,
    #[serde(default)]
    pub cycles: Vec<CycleSpec>,
    /// Used only when `cycles` is empty.
    #[serde(default)]
    pub random_cycles: Option<RandomCycles>,
    /// Idle ticks (indenter retracted) before each cycle.
    pub gap_ticks: u64,
    pub force_saturation_n: f64,
    pub tip_volume_factor: f64,
    pub pdc_base: f64,
    pub pdc_gain: f64,
    pub pac_base: f64,
    /// Counts per newton of force change between consecutive ticks.
    pub pac_gain: f64,
    pub tac_base: f64,
    /// Indenter travel into the skin per newton.
    pub indentation_mm_per_n: f64,
    /// Hover height above the next contact point between cycles.
    pub retract_mm: f64,
    #[serde(default)]
    pub layout: ElectrodeLayout,
    /// Systematic error applied to recorded positions (a miscalibrated pose chain).
    #[serde(default)]
    pub position_error: PoseOffset,
}

impl OracleConfig {
    /// Default surrogate constants with `n_cycles` random contacts.
    pub fn synthetic(seed: u64, duration_ticks: u64, n_cycles: usize) -> Self {
        let electrode_base = (0..N_ELECTRODES)
            .map(|i| 1500.0 + 50.0 * ((i * 7) % 11) as f64)
            .collect();
        let electrode_gain = (0..N_ELECTRODES).map(|i| 350.0 + 25.0 * ((i * 5) % 7) as f64).collect();
        let temp_coupling = (0..N_ELECTRODES).map(|i| 0.25 + 0.05 * ((i * 3) % 7) as f64).collect();
        OracleConfig {
            seed,
            duration_ticks,
            drift: Drift {
                t0_counts: 1900.0,
                t_inf_counts: 2500.0,
                tau_ticks: (duration_ticks as f64 / 2.0).max(1.0),
            },
            electrode_base,
            electrode_gain,
            spatial_sigma_mm: 4.0,
            temp_coupling,
            noise_std_counts: 3.0,
            cycles: Vec::new(),
            random_cycles: Some(RandomCycles {
                count: n_cycles,
                ..RandomCycles::default()
            }),
            gap_ticks: 40,
            force_saturation_n: 2.5,
            tip_volume_factor: 2.0,
            pdc_base: 1500.0,
            pdc_gain: 120.0,
            pac_base: 2048.0,
            pac_gain: 600.0,
            tac_base: 2100.0,
            indentation_mm_per_n: 0.4,
            retract_mm: 5.0,
            layout: ElectrodeLayout::default_layout(),
            position_error: PoseOffset::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.drift;
        if !(d.tau_ticks > 0.0) {
            return Err(Error::config("drift.tau_ticks must be > 0"));
        }
        if !(d.t0_counts < d.t_inf_counts) {
            return Err(Error::config("drift.t0_counts must be below drift.t_inf_counts"));
        }
        if !(self.spatial_sigma_mm > 0.0) {
            return Err(Error::config("spatial_sigma_mm must be > 0"));
        }
        if !(self.noise_std_counts >= 0.0) {
            return Err(Error::config("noise_std_counts must be >= 0"));
        }
        if !(self.force_saturation_n > 0.0) {
            return Err(Error::config("force_saturation_n must be > 0"));
        }
        for (name, v) in [
            ("electrode_base", &self.electrode_base),
            ("electrode_gain", &self.electrode_gain),
            ("temp_coupling", &self.temp_coupling),
        ] {
            if v.len() != N_ELECTRODES {
                return Err(Error::config(format!(
                    "{name} needs {N_ELECTRODES} entries, got {}",
                    v.len()
                )));
            }
        }
        self.layout.validate().map_err(Error::Config)?;
        let cycles = self.resolved_cycles();
        let needed: u64 = cycles.iter().map(|c| self.gap_ticks + c.contact_ticks()).sum();
        if needed > self.duration_ticks {
            return Err(Error::config(format!(
                "cycles need {needed} ticks but duration_ticks is {}",
                self.duration_ticks
            )));
        }
        Ok(())
    }

    /// Explicit cycles, or the ones drawn from `random_cycles`.
    pub fn resolved_cycles(&self) -> Vec<CycleSpec> {
        if !self.cycles.is_empty() {
            return self.cycles.clone();
        }
        let Some(spec) = &self.random_cycles else {
            return Vec::new();
        };
        let mut rng = rng::sub_rng(self.seed, 1);
        let surface = &self.layout.skin_surface;
        (0..spec.count)
            .map(|_| {
                let center = surface.sample_surface(&mut rng, spec.max_theta);
                let shear = [
                    rng.random_range(-1.0..=1.0) * spec.max_shear,
                    rng.random_range(-1.0..=1.0) * spec.max_shear,
                    rng.random_range(-1.0..=1.0) * spec.max_shear,
                ];
                CycleSpec {
                    center_mm: center,
                    peak_force_n: rng.random_range(spec.peak_force_n[0]..=spec.peak_force_n[1]),
                    ramp_ticks: rng.random_range(spec.ramp_ticks[0]..=spec.ramp_ticks[1]),
                    hold_ticks: rng.random_range(spec.hold_ticks[0]..=spec.hold_ticks[1]),
                    shear,
                }
            })
            .collect()
    }

    fn gain(&self, electrode: usize) -> f64 {
        let g = self.electrode_gain[electrode];
        if TIP_ELECTRODES.contains(&(electrode + 1)) {
            g * self.tip_volume_factor
        } else {
            g
        }
    }
}

/// Indenter state fed to the surrogate at one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactInput {
    pub point_mm: Vec3,
    pub force_n: Vec3,
    /// Force magnitude one tick earlier.
    pub prev_force_n: f64,
    pub tdc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelValues {
    pub electrodes: Vec<f64>,
    pub pdc: f64,
    pub pac0: f64,
    pub pac1: f64,
    pub tac: f64,
}

fn saturate(f: f64, f_sat: f64) -> f64 {
    f / (1.0 + f / f_sat)
}

/// Raw channel values for one tick. Noise draws happen in channel order
/// e1…e19, pdc, pac0, pac1, tac, and are skipped entirely when the noise
/// level is zero.
pub fn surrogate_response<R: Rng + ?Sized>(input: &ContactInput, config: &OracleConfig, rng: &mut R) -> ChannelValues {
    let noise = Normal::new(0.0, config.noise_std_counts.max(0.0)).expect("finite std");
    let mut eps = || {
        if config.noise_std_counts > 0.0 {
            noise.sample(rng)
        } else {
            0.0
        }
    };
    let clamp = |v: f64| v.clamp(0.0, RAW_MAX);

    let f = norm(input.force_n);
    let g = saturate(f, config.force_saturation_n);
    let two_sigma_sq = 2.0 * config.spatial_sigma_mm * config.spatial_sigma_mm;
    let dt = input.tdc - config.drift.t0_counts;

    let electrodes = config
        .layout
        .positions_mm
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let falloff = (-dist_sq(input.point_mm, *p) / two_sigma_sq).exp();
            let v = config.electrode_base[i] + config.gain(i) * g * falloff + config.temp_coupling[i] * dt;
            clamp(v + eps())
        })
        .collect();
    let pdc = clamp(config.pdc_base + config.pdc_gain * f + eps());
    let vibration = config.pac_gain * (f - input.prev_force_n);
    let pac0 = clamp(config.pac_base + vibration + eps());
    let pac1 = clamp(config.pac_base + vibration + eps());
    let tac = clamp(config.tac_base + eps());
    ChannelValues {
        electrodes,
        pdc,
        pac0,
        pac1,
        tac,
    }
}

/// Per-tick ground truth before position sampling and noise.
struct Script {
    cycle_id: Vec<i64>,
    force: Vec<Vec3>,
    contact_point: Vec<Vec3>,
    indenter: Vec<Vec3>,
}

fn script(config: &OracleConfig, cycles: &[CycleSpec]) -> Script {
    let n = config.duration_ticks as usize;
    let surface = &config.layout.skin_surface;
    let mut s = Script {
        cycle_id: Vec::with_capacity(n),
        force: Vec::with_capacity(n),
        contact_point: Vec::with_capacity(n),
        indenter: Vec::with_capacity(n),
    };
    let hover = |c: &CycleSpec| {
        add(
            c.center_mm,
            scale(surface.outward_normal(c.center_mm), config.retract_mm),
        )
    };

    for (k, c) in cycles.iter().enumerate() {
        let normal = surface.outward_normal(c.center_mm);
        let tangential = sub(c.shear, scale(normal, dot(c.shear, normal)));
        for _ in 0..config.gap_ticks {
            s.cycle_id.push(k as i64);
            s.force.push([0.0; 3]);
            s.contact_point.push(c.center_mm);
            s.indenter.push(hover(c));
        }
        for j in 0..c.contact_ticks() {
            let f = c.force_at(j);
            s.cycle_id.push(k as i64);
            // Pressing into the skin is along −normal.
            s.force.push(add(scale(normal, -f), scale(tangential, f)));
            s.contact_point.push(c.center_mm);
            s.indenter
                .push(sub(c.center_mm, scale(normal, config.indentation_mm_per_n * f)));
        }
    }
    // Retracted for the remainder.
    let (last_id, rest_point, rest_pos) = match cycles.last() {
        Some(c) => (cycles.len() as i64 - 1, c.center_mm, hover(c)),
        None => {
            let p = surface.tip_point(0.0, 0.0);
            (0, p, add(p, scale(surface.outward_normal(p), config.retract_mm)))
        }
    };
    while s.force.len() < n {
        s.cycle_id.push(last_id);
        s.force.push([0.0; 3]);
        s.contact_point.push(rest_point);
        s.indenter.push(rest_pos);
    }
    s
}

/// Generate `duration_ticks` frames. Deterministic in `config.seed`.
pub fn generate_dataset(config: &OracleConfig) -> Result<Vec<SensorFrame>> {
    config.validate()?;
    let cycles = config.resolved_cycles();
    let s = script(config, &cycles);
    let mut noise_rng = rng::sub_rng(config.seed, 2);

    let mut frames = Vec::with_capacity(s.force.len());
    let mut prev_f = 0.0;
    for t in 0..s.force.len() {
        let tick = t as u64;
        let tdc = temperature_at(tick, &config.drift);
        let input = ContactInput {
            point_mm: s.contact_point[t],
            force_n: s.force[t],
            prev_force_n: prev_f,
            tdc,
        };
        let ch = surrogate_response(&input, config, &mut noise_rng);
        prev_f = norm(s.force[t]);

        // Sample-and-hold at the tracking rate, seen through the pose error.
        let sampled = (tick / POSITION_PERIOD_TICKS * POSITION_PERIOD_TICKS) as usize;
        let position_mm = config.position_error.apply(s.indenter[sampled]);

        frames.push(SensorFrame {
            tick,
            cycle_id: s.cycle_id[t],
            position_mm,
            force_n: s.force[t],
            tdc,
            tac: ch.tac,
            pdc: ch.pdc,
            pac0: ch.pac0,
            pac1: ch.pac1,
            electrodes: ch.electrodes,
        });
    }
    Ok(frames)
}
