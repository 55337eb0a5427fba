//! BioTac channel conventions, electrode geometry and contact-probe selection.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_sq, norm, Capsule, Vec3};

pub const N_ELECTRODES: usize = 19;

/// Upper end of the 12-bit raw scale.
pub const RAW_MAX: f64 = 4095.0;

/// Electrodes sitting under the fingertip fluid reservoir (1-based).
pub const TIP_ELECTRODES: [usize; 4] = [7, 8, 9, 10];

/// One 100 Hz tick of raw sensor output plus the indenter state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub tick: u64,
    /// Contact cycle label; negative before the first cycle.
    pub cycle_id: i64,
    pub position_mm: Vec3,
    pub force_n: Vec3,
    pub tdc: f64,
    pub tac: f64,
    pub pdc: f64,
    pub pac0: f64,
    pub pac1: f64,
    pub electrodes: Vec<f64>,
}

impl SensorFrame {
    pub fn force_magnitude(&self) -> f64 {
        norm(self.force_n)
    }

    /// The 21 model output channels in [`ChannelSet`] order.
    pub fn targets(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(ChannelSet::LEN);
        out.extend_from_slice(&self.electrodes);
        out.push(self.pdc);
        out.push(self.pac0);
        out
    }

    /// The 23-channel output used when replicating the temperature baseline,
    /// which also regresses pac1 and tac.
    pub fn extended_targets(&self) -> Vec<f64> {
        let mut out = self.targets();
        out.push(self.pac1);
        out.push(self.tac);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameViolation {
    ChannelOutOfRange { channel: String, value: f64 },
    ElectrodeCount(usize),
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameViolation::ChannelOutOfRange { channel, value } => {
                write!(f, "channel out of raw range: {channel} = {value}")
            }
            FrameViolation::ElectrodeCount(n) => {
                write!(f, "electrode count: expected {N_ELECTRODES}, got {n}")
            }
        }
    }
}

/// Check a frame against the raw-scale and cardinality invariants.
///
/// Tick ordering is a dataset property and is checked by [`crate::dataio`].
pub fn validate_frame(frame: &SensorFrame) -> Result<(), FrameViolation> {
    let in_range = |v: f64| (0.0..=RAW_MAX).contains(&v);
    let scalars = [
        ("tdc", frame.tdc),
        ("tac", frame.tac),
        ("pdc", frame.pdc),
        ("pac0", frame.pac0),
        ("pac1", frame.pac1),
    ];
    for (name, v) in scalars {
        if !in_range(v) {
            return Err(FrameViolation::ChannelOutOfRange {
                channel: name.to_string(),
                value: v,
            });
        }
    }
    for (i, &v) in frame.electrodes.iter().enumerate() {
        if !in_range(v) {
            return Err(FrameViolation::ChannelOutOfRange {
                channel: format!("e{}", i + 1),
                value: v,
            });
        }
    }
    if frame.electrodes.len() != N_ELECTRODES {
        return Err(FrameViolation::ElectrodeCount(frame.electrodes.len()));
    }
    Ok(())
}

/// The ordered model output channels: e1…e19, pdc, pac0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelSet;

impl ChannelSet {
    pub const LEN: usize = N_ELECTRODES + 2;
    pub const PDC: usize = N_ELECTRODES;
    pub const PAC0: usize = N_ELECTRODES + 1;

    pub fn names() -> Vec<String> {
        (1..=N_ELECTRODES)
            .map(|i| format!("e{i}"))
            .chain(["pdc".to_string(), "pac0".to_string()])
            .collect()
    }

    /// Indices of the electrode channels within the output vector.
    pub fn electrode_mask() -> Vec<usize> {
        (0..N_ELECTRODES).collect()
    }

    pub fn all() -> Vec<usize> {
        (0..Self::LEN).collect()
    }
}

/// Electrode positions and the skin surface, both in the BioTac frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeLayout {
    pub positions_mm: Vec<Vec3>,
    #[serde(rename = "capsule")]
    pub skin_surface: Capsule,
}

const DEFAULT_LAYOUT_JSON: &str = include_str!("../data/default_layout.json");

impl ElectrodeLayout {
    /// Toolkit-defined layout: six electrodes per side, four on the tip
    /// (e7–e10) and three along the volar midline.
    pub fn default_layout() -> Self {
        serde_json::from_str(DEFAULT_LAYOUT_JSON).expect("bundled layout is valid JSON")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let layout: ElectrodeLayout = serde_json::from_str(&text)?;
        layout.validate().map_err(Error::Config)?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.skin_surface.validate()?;
        if self.positions_mm.len() != N_ELECTRODES {
            return Err(format!(
                "layout must have {N_ELECTRODES} electrode positions, got {}",
                self.positions_mm.len()
            ));
        }
        for (i, p) in self.positions_mm.iter().enumerate() {
            let d = self.skin_surface.signed_distance(*p);
            if !(d.abs() <= 1.0) {
                return Err(format!("electrode e{} is {d:.3} mm from the skin surface", i + 1));
            }
        }
        Ok(())
    }

    /// Position of electrode `id` (1-based).
    pub fn position(&self, id: usize) -> Vec3 {
        self.positions_mm[id - 1]
    }

    /// 1-based index of the electrode closest to `point`; ties go to the lower index.
    pub fn nearest_electrode(&self, point: Vec3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.positions_mm.iter().enumerate() {
            let d = dist_sq(point, *p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best + 1
    }

    /// Count of points per nearest electrode; slot `i` holds electrode `i + 1`.
    pub fn contact_histogram(&self, points: impl IntoIterator<Item = Vec3>) -> [usize; N_ELECTRODES] {
        let mut hist = [0; N_ELECTRODES];
        for p in points {
            hist[self.nearest_electrode(p) - 1] += 1;
        }
        hist
    }
}

impl Default for ElectrodeLayout {
    fn default() -> Self {
        Self::default_layout()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// Last in-contact frame of each cycle, kept if its force is below the threshold.
    LightTouchEnd,
    /// First frame of each cycle whose force exceeds the threshold.
    ContactStart,
}

/// Select probe frames; returns indices into `frames` in ascending order.
///
/// Both modes also require `|surface distance| < dist_max_mm` at the recorded
/// position. Pass `f64::INFINITY` to disable the distance test, as calibration
/// does (its probes are off the surface by construction).
pub fn select_contact_probes(
    frames: &[SensorFrame],
    surface: &Capsule,
    force_min_n: f64,
    dist_max_mm: f64,
    mode: ProbeMode,
) -> Vec<usize> {
    let near = |f: &SensorFrame| surface.signed_distance(f.position_mm).abs() < dist_max_mm;
    match mode {
        ProbeMode::ContactStart => {
            let mut seen = std::collections::BTreeSet::new();
            frames
                .iter()
                .enumerate()
                .filter(|(_, f)| f.force_magnitude() > force_min_n && near(f))
                .filter(|(_, f)| seen.insert(f.cycle_id))
                .map(|(i, _)| i)
                .collect()
        }
        ProbeMode::LightTouchEnd => {
            let mut last_contact: BTreeMap<i64, usize> = BTreeMap::new();
            for (i, f) in frames.iter().enumerate() {
                if f.force_magnitude() > 0.0 {
                    last_contact.insert(f.cycle_id, i);
                }
            }
            let mut picked: Vec<usize> = last_contact
                .into_values()
                .filter(|&i| frames[i].force_magnitude() < force_min_n && near(&frames[i]))
                .collect();
            picked.sort_unstable();
            picked
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{add, rotate};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn blank_frame(tick: u64) -> SensorFrame {
        SensorFrame {
            tick,
            cycle_id: -1,
            position_mm: [0.0; 3],
            force_n: [0.0; 3],
            tdc: 0.0,
            tac: 0.0,
            pdc: 0.0,
            pac0: 0.0,
            pac1: 0.0,
            electrodes: vec![0.0; N_ELECTRODES],
        }
    }

    #[test]
    fn zero_frame_is_valid() {
        assert_eq!(validate_frame(&blank_frame(0)), Ok(()));
    }

    #[test]
    fn raw_range_upper_bound() {
        let mut f = blank_frame(0);
        f.electrodes[4] = 4095.0;
        assert!(validate_frame(&f).is_ok());
        f.electrodes[4] = 4096.0;
        let v = validate_frame(&f).unwrap_err();
        assert!(v.to_string().starts_with("channel out of raw range"), "{v}");
        assert_eq!(
            v,
            FrameViolation::ChannelOutOfRange {
                channel: "e5".into(),
                value: 4096.0
            }
        );
    }

    #[test]
    fn nan_channel_rejected() {
        let mut f = blank_frame(0);
        f.pdc = f64::NAN;
        assert!(validate_frame(&f).is_err());
    }

    #[test]
    fn electrode_cardinality() {
        let mut f = blank_frame(0);
        f.electrodes.pop();
        let v = validate_frame(&f).unwrap_err();
        assert_eq!(v, FrameViolation::ElectrodeCount(18));
        assert!(v.to_string().starts_with("electrode count"));
    }

    #[test]
    fn channel_set_shape() {
        let names = ChannelSet::names();
        assert_eq!(names.len(), 21);
        assert_eq!(names[19], "pdc");
        assert_eq!(names[20], "pac0");
        assert!(!names.iter().any(|n| n == "pac1" || n == "tac"));
        assert_eq!(ChannelSet::electrode_mask().len(), 19);
    }

    #[test]
    fn default_layout_is_valid() {
        let l = ElectrodeLayout::default_layout();
        l.validate().unwrap();
        // Tip electrodes sit beyond the cylinder on the cap.
        for id in TIP_ELECTRODES {
            assert!(l.position(id)[0] > l.skin_surface.p1[0]);
        }
    }

    #[test]
    fn nearest_electrode_identity() {
        let l = ElectrodeLayout::default_layout();
        assert_eq!(l.nearest_electrode(l.position(7)), 7);
        for id in 1..=N_ELECTRODES {
            assert_eq!(l.nearest_electrode(l.position(id)), id);
        }
    }

    #[test]
    fn nearest_electrode_tie_goes_low() {
        let mut tie = ElectrodeLayout::default_layout();
        tie.positions_mm[2] = [1.0, 0.0, 0.0];
        tie.positions_mm[3] = [-1.0, 0.0, 0.0];
        for (i, p) in tie.positions_mm.iter_mut().enumerate() {
            if i != 2 && i != 3 {
                *p = [100.0, 100.0, 100.0];
            }
        }
        assert_eq!(tie.nearest_electrode([0.0, 5.0, 0.0]), 3);
    }

    #[test]
    fn histogram_matches_brute_force() {
        let l = ElectrodeLayout::default_layout();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| l.skin_surface.sample_surface(&mut rng, std::f64::consts::PI))
            .collect();
        let hist = l.contact_histogram(pts.iter().copied());

        // Independent scan: full distance vector, first index of the minimum.
        let mut brute = [0usize; N_ELECTRODES];
        for p in &pts {
            let d: Vec<f64> = l
                .positions_mm
                .iter()
                .map(|e| ((p[0] - e[0]).powi(2) + (p[1] - e[1]).powi(2) + (p[2] - e[2]).powi(2)).sqrt())
                .collect();
            let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let idx = d.iter().position(|&v| v == min).unwrap();
            brute[idx] += 1;
        }
        assert_eq!(hist, brute);
        assert_eq!(hist.iter().sum::<usize>(), 1000);
    }

    fn cycle_frames(forces: &[f64], cycle: i64, pos: Vec3, start_tick: u64) -> Vec<SensorFrame> {
        forces
            .iter()
            .enumerate()
            .map(|(i, &fz)| {
                let mut f = blank_frame(start_tick + i as u64);
                f.cycle_id = cycle;
                f.position_mm = pos;
                f.force_n = [0.0, 0.0, fz];
                f
            })
            .collect()
    }

    #[test]
    fn contact_start_empty_without_force() {
        let l = ElectrodeLayout::default_layout();
        let frames = cycle_frames(&[0.0; 50], 0, l.position(1), 0);
        let p = select_contact_probes(&frames, &l.skin_surface, 0.3, 2.0, ProbeMode::ContactStart);
        assert!(p.is_empty());
    }

    #[test]
    fn contact_start_picks_crossing_tick() {
        let l = ElectrodeLayout::default_layout();
        // Force ramps linearly by 0.01 N per tick from tick 10; first value
        // above 0.3 N is at tick 41 (0.31 N) when the ramp starts at 0.0.
        let forces: Vec<f64> = (0..80)
            .map(|t| if t < 10 { 0.0 } else { (t - 10) as f64 * 0.01 })
            .collect();
        let mut frames = cycle_frames(&forces, 0, l.position(5), 0);
        // Off-surface until tick 42 so the first qualifying frame is 42.
        for f in frames.iter_mut().take(42) {
            f.position_mm = add(l.position(5), [0.0, 0.0, -5.0]);
        }
        let brute: Vec<usize> = (0..frames.len())
            .filter(|&i| {
                frames[i].force_magnitude() > 0.3 && l.skin_surface.signed_distance(frames[i].position_mm).abs() < 2.0
            })
            .take(1)
            .collect();
        let p = select_contact_probes(&frames, &l.skin_surface, 0.3, 2.0, ProbeMode::ContactStart);
        assert_eq!(p, vec![42]);
        assert_eq!(p, brute);
    }

    #[test]
    fn light_touch_end_takes_final_contact_frame() {
        let l = ElectrodeLayout::default_layout();
        let mut forces: Vec<f64> = vec![0.0, 0.5, 1.0, 1.5, 1.0, 0.5, 0.1];
        forces.extend([0.0, 0.0]);
        let frames = cycle_frames(&forces, 3, l.position(2), 0);
        let p = select_contact_probes(&frames, &l.skin_surface, 0.3, f64::INFINITY, ProbeMode::LightTouchEnd);
        assert_eq!(p, vec![6]);
        // A cycle that ends above the threshold contributes nothing.
        let frames = cycle_frames(&[0.0, 1.0, 0.5, 0.0], 1, l.position(2), 0);
        let p = select_contact_probes(&frames, &l.skin_surface, 0.3, f64::INFINITY, ProbeMode::LightTouchEnd);
        assert!(p.is_empty());
    }

    fn random_frames(seed: u64, n: usize) -> Vec<SensorFrame> {
        let l = ElectrodeLayout::default_layout();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut f = blank_frame(i as u64);
                f.cycle_id = (i / 7) as i64;
                f.position_mm = l.skin_surface.sample_surface(&mut rng, 3.0);
                f.position_mm[2] += rng.random_range(-3.0..3.0);
                if rng.random::<bool>() {
                    f.force_n = [0.0, 0.0, rng.random_range(0.0..1.0)];
                }
                f
            })
            .collect()
    }

    proptest! {
        #[test]
        fn probes_are_ordered_subsets(seed in 0u64..500, light in any::<bool>()) {
            let l = ElectrodeLayout::default_layout();
            let frames = random_frames(seed, 120);
            let mode = if light { ProbeMode::LightTouchEnd } else { ProbeMode::ContactStart };
            let p = select_contact_probes(&frames, &l.skin_surface, 0.3, 2.0, mode);
            prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.iter().all(|&i| i < frames.len()));
            if !light {
                let mut cycles: Vec<i64> = p.iter().map(|&i| frames[i].cycle_id).collect();
                let n = cycles.len();
                cycles.dedup();
                prop_assert_eq!(cycles.len(), n);
            }
        }

        #[test]
        fn nearest_is_rigid_invariant(
            r in prop::array::uniform3(-3.0f64..3.0),
            t in prop::array::uniform3(-20.0f64..20.0),
            p in prop::array::uniform3(-15.0f64..30.0),
        ) {
            let l = ElectrodeLayout::default_layout();
            let mut moved = l.clone();
            for q in moved.positions_mm.iter_mut() {
                *q = add(rotate(r, *q), t);
            }
            let before = l.nearest_electrode(p);
            let after = moved.nearest_electrode(add(rotate(r, p), t));
            // Skip near-ties, where rounding in the transform may flip the order.
            let d: Vec<f64> = l.positions_mm.iter().map(|e| crate::geometry::dist(p, *e)).collect();
            let mut sorted = d.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted[1] - sorted[0] > 1e-9);
            prop_assert_eq!(before, after);
        }
    }
}
