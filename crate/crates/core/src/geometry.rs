//! Small fixed-size vector helpers and the capsule skin-surface model.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist_sq(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n == 0.0 {
        a
    } else {
        scale(a, 1.0 / n)
    }
}

/// Rotate `p` by the axis-angle vector `r` (Rodrigues' formula).
pub fn rotate(r: Vec3, p: Vec3) -> Vec3 {
    let theta = norm(r);
    if theta < 1e-300 {
        return p;
    }
    let k = scale(r, 1.0 / theta);
    let (s, c) = theta.sin_cos();
    let kxp = cross(k, p);
    let kdp = dot(k, p);
    [
        p[0] * c + kxp[0] * s + k[0] * kdp * (1.0 - c),
        p[1] * c + kxp[1] * s + k[1] * kdp * (1.0 - c),
        p[2] * c + kxp[2] * s + k[2] * kdp * (1.0 - c),
    ]
}

/// A capsule: every point within `radius_mm` of the segment `p0`–`p1`.
///
/// `p1` is the fingertip end. Only the side wall and the tip cap are treated as
/// touchable skin; the `p0` cap is where the sensor mounts on the finger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub p0: Vec3,
    pub p1: Vec3,
    pub radius_mm: f64,
}

impl Capsule {
    pub fn axis_length(&self) -> f64 {
        dist(self.p0, self.p1)
    }

    /// Closest point to `p` on the axis segment.
    pub fn closest_axis_point(&self, p: Vec3) -> Vec3 {
        let axis = sub(self.p1, self.p0);
        let len_sq = dot(axis, axis);
        if len_sq == 0.0 {
            return self.p0;
        }
        let t = (dot(sub(p, self.p0), axis) / len_sq).clamp(0.0, 1.0);
        add(self.p0, scale(axis, t))
    }

    /// Signed distance to the surface: negative inside, zero on, positive outside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        dist(p, self.closest_axis_point(p)) - self.radius_mm
    }

    /// Outward unit normal at (or the direction from the axis towards) `p`.
    pub fn outward_normal(&self, p: Vec3) -> Vec3 {
        let c = self.closest_axis_point(p);
        let d = sub(p, c);
        if norm(d) == 0.0 {
            self.frame().1
        } else {
            normalize(d)
        }
    }

    /// Orthonormal frame `(axis, volar, lateral)`.
    ///
    /// `volar` points from the axis towards the electrode-bearing side, taken as
    /// the component of −z perpendicular to the axis.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let u = normalize(sub(self.p1, self.p0));
        let mut down = [0.0, 0.0, -1.0];
        if dot(down, u).abs() > 0.99 {
            down = [0.0, 1.0, 0.0];
        }
        let a = normalize(sub(down, scale(u, dot(down, u))));
        let b = cross(u, a);
        (u, a, b)
    }

    /// Point on the side wall at axial offset `s_mm` from `p0` and angle `theta`
    /// (radians) measured from the volar direction towards the lateral one.
    pub fn side_point(&self, s_mm: f64, theta: f64) -> Vec3 {
        let (u, a, b) = self.frame();
        let radial = add(scale(a, theta.cos()), scale(b, theta.sin()));
        add(add(self.p0, scale(u, s_mm)), scale(radial, self.radius_mm))
    }

    /// Point on the tip cap; `phi` is the polar angle from the axis (0 = apex).
    pub fn tip_point(&self, phi: f64, theta: f64) -> Vec3 {
        let (u, a, b) = self.frame();
        let radial = add(scale(a, theta.cos()), scale(b, theta.sin()));
        let dir = add(scale(u, phi.cos()), scale(radial, phi.sin()));
        add(self.p1, scale(dir, self.radius_mm))
    }

    /// Area-weighted random point on the touchable skin within
    /// `max_theta` radians of the volar direction.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R, max_theta: f64) -> Vec3 {
        let len = self.axis_length();
        let side_area = len;
        // Hemisphere area relative to the side wall, both divided by 2πr·(θ-span).
        let cap_area = self.radius_mm;
        let theta = rng.random_range(-max_theta..=max_theta);
        if rng.random::<f64>() * (side_area + cap_area) < side_area {
            self.side_point(rng.random::<f64>() * len, theta)
        } else {
            // Uniform on the hemisphere: cos(phi) uniform in [0, 1].
            let phi = rng.random::<f64>().acos();
            self.tip_point(phi, theta)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = self.p0.iter().chain(self.p1.iter()).all(|v| v.is_finite());
        if !finite {
            return Err("capsule endpoints must be finite".into());
        }
        if !(self.radius_mm > 0.0 && self.radius_mm.is_finite()) {
            return Err(format!("capsule radius must be > 0, got {}", self.radius_mm));
        }
        Ok(())
    }
}
