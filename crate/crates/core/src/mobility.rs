//! Random waypoint and Gauss-Markov mobility in a 2D or 3D bounding box.
//!
//! A box with `z_len == 0` is a planar (MANET/VANET) area; every position then
//! has `z == 0` and the Gauss-Markov pitch is pinned to zero.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        self.dist_sq(Vec3::default()).sqrt()
    }

    pub fn dist_sq(self, other: Vec3) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y + d.z * d.z
    }

    pub fn dist(self, other: Vec3) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Simulation area `[0, x_len] × [0, y_len] × [0, z_len]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_len: f64,
    pub y_len: f64,
    pub z_len: f64,
}

impl BoundingBox {
    pub fn new(x_len: f64, y_len: f64, z_len: f64) -> Result<Self> {
        let b = BoundingBox { x_len, y_len, z_len };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_len.is_finite() && self.x_len > 0.0) {
            return Err(Error::config("x_len", "must be finite and > 0"));
        }
        if !(self.y_len.is_finite() && self.y_len > 0.0) {
            return Err(Error::config("y_len", "must be finite and > 0"));
        }
        if !(self.z_len.is_finite() && self.z_len >= 0.0) {
            return Err(Error::config("z_len", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn is_3d(&self) -> bool {
        self.z_len > 0.0
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0.0..=self.x_len).contains(&p.x)
            && (0.0..=self.y_len).contains(&p.y)
            && (0.0..=self.z_len).contains(&p.z)
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(0.0, self.x_len),
            p.y.clamp(0.0, self.y_len),
            p.z.clamp(0.0, self.z_len),
        )
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let x = rng.random::<f64>() * self.x_len;
        let y = rng.random::<f64>() * self.y_len;
        let z = if self.is_3d() {
            rng.random::<f64>() * self.z_len
        } else {
            0.0
        };
        Vec3::new(x, y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MobilityModel {
    #[serde(rename = "RWP")]
    RandomWaypoint,
    #[serde(rename = "GM")]
    GaussMarkov,
}

impl MobilityModel {
    pub fn label(self) -> &'static str {
        match self {
            MobilityModel::RandomWaypoint => "RWP",
            MobilityModel::GaussMarkov => "GM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    /// m/s
    pub v_min: f64,
    /// m/s
    pub v_max: f64,
    /// RWP pause at each waypoint, seconds.
    pub pause_s: f64,
    /// Gauss-Markov memory, 0 (memoryless) to 1 (straight line).
    pub gm_alpha: f64,
    /// Gauss-Markov asymptotic mean speed, m/s.
    pub gm_mean_speed: f64,
    /// Bound on the Gauss-Markov elevation angle magnitude, radians.
    pub gm_pitch_max: f64,
    pub step_dt: f64,
}

pub const DEFAULT_GM_ALPHA: f64 = 0.85;
pub const DEFAULT_GM_PITCH_MAX: f64 = 0.05;

impl MobilityConfig {
    /// Speed range `[v_min, v_max]` with every other knob at its default:
    /// no RWP pause, α = 0.85, mean speed at mid-range, 0.05 rad pitch bound,
    /// 1 s steps.
    pub fn new(model: MobilityModel, v_min: f64, v_max: f64) -> Self {
        MobilityConfig {
            model,
            v_min,
            v_max,
            pause_s: 0.0,
            gm_alpha: DEFAULT_GM_ALPHA,
            gm_mean_speed: 0.5 * (v_min + v_max),
            gm_pitch_max: DEFAULT_GM_PITCH_MAX,
            step_dt: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_min.is_finite() && self.v_min >= 0.0) {
            return Err(Error::config("v_min_mps", "must be finite and >= 0"));
        }
        if !(self.v_max.is_finite() && self.v_max >= self.v_min) {
            return Err(Error::config(
                "v_min_mps",
                format!("v_min {} exceeds v_max {}", self.v_min, self.v_max),
            ));
        }
        if !(self.pause_s.is_finite() && self.pause_s >= 0.0) {
            return Err(Error::config("pause_s", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.gm_alpha) {
            return Err(Error::config("gm_alpha", "must lie in [0, 1]"));
        }
        if !self.gm_mean_speed.is_finite() {
            return Err(Error::config("gm_mean_speed_mps", "must be finite"));
        }
        if !(self.gm_pitch_max.is_finite() && self.gm_pitch_max >= 0.0) {
            return Err(Error::config("gm_pitch_max_rad", "must be finite and >= 0"));
        }
        if !(self.step_dt.is_finite() && self.step_dt > 0.0) {
            return Err(Error::config("snapshot_dt_s", "must be finite and > 0"));
        }
        Ok(())
    }

    fn draw_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.v_max > self.v_min {
            rng.random_range(self.v_min..=self.v_max)
        } else {
            self.v_min
        }
    }
}

/// Per-node kinematic state plus the memory both models need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityState {
    pub pos: Vec3,
    pub waypoint: Option<Vec3>,
    pub leg_speed: f64,
    pub pause_remaining: f64,
    pub gm_speed: f64,
    pub gm_direction: f64,
    /// Signed elevation angle; the sign flips when the node bounces off a
    /// horizontal face.
    pub gm_pitch: f64,
    pub gm_mean_direction: f64,
    /// Signed mean elevation; magnitude is `gm_pitch_max / 2`.
    pub gm_mean_pitch: f64,
}

impl MobilityState {
    /// A state sitting at `pos` with no model memory.
    pub fn at(pos: Vec3) -> Self {
        MobilityState {
            pos,
            waypoint: None,
            leg_speed: 0.0,
            pause_remaining: 0.0,
            gm_speed: 0.0,
            gm_direction: 0.0,
            gm_pitch: 0.0,
            gm_mean_direction: 0.0,
            gm_mean_pitch: 0.0,
        }
    }
}

/// Fresh state for one node: uniform position, plus a waypoint and leg speed
/// (RWP) or mean speed, uniform heading and uniform pitch magnitude (GM).
pub fn init_state<R: Rng + ?Sized>(
    bbox: &BoundingBox,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> MobilityState {
    let mut s = MobilityState::at(bbox.sample_uniform(rng));
    match cfg.model {
        MobilityModel::RandomWaypoint => {
            s.waypoint = Some(bbox.sample_uniform(rng));
            s.leg_speed = cfg.draw_speed(rng);
        }
        MobilityModel::GaussMarkov => {
            s.gm_speed = cfg.gm_mean_speed.clamp(cfg.v_min, cfg.v_max);
            s.gm_direction = rng.random::<f64>() * TAU;
            s.gm_mean_direction = s.gm_direction;
            if bbox.is_3d() {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s.gm_pitch = sign * rng.random::<f64>() * cfg.gm_pitch_max;
                s.gm_mean_pitch = sign * 0.5 * cfg.gm_pitch_max;
            }
        }
    }
    s
}

/// `n` initial states drawn from one stream.
pub fn init_positions<R: Rng + ?Sized>(
    n: usize,
    bbox: &BoundingBox,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> Result<Vec<MobilityState>> {
    if n == 0 {
        return Err(Error::EmptyScenario);
    }
    Ok((0..n).map(|_| init_state(bbox, cfg, rng)).collect())
}

/// Advances one node by `cfg.step_dt` under whichever model `cfg` selects.
pub fn step<R: Rng + ?Sized>(
    state: &MobilityState,
    cfg: &MobilityConfig,
    bbox: &BoundingBox,
    rng: &mut R,
) -> MobilityState {
    match cfg.model {
        MobilityModel::RandomWaypoint => rwp_step(state, cfg, bbox, rng),
        MobilityModel::GaussMarkov => gm_step(state, cfg, bbox, rng),
    }
}

pub fn rwp_step<R: Rng + ?Sized>(
    state: &MobilityState,
    cfg: &MobilityConfig,
    bbox: &BoundingBox,
    rng: &mut R,
) -> MobilityState {
    let mut s = state.clone();
    if s.pause_remaining > 0.0 {
        s.pause_remaining = (s.pause_remaining - cfg.step_dt).max(0.0);
        return s;
    }
    let target = match s.waypoint {
        Some(w) => w,
        None => bbox.sample_uniform(rng),
    };
    let delta = target - s.pos;
    let remaining = delta.norm();
    let travel = s.leg_speed * cfg.step_dt;
    if travel >= remaining {
        s.pos = target;
        s.pause_remaining = cfg.pause_s;
        s.waypoint = Some(bbox.sample_uniform(rng));
        s.leg_speed = cfg.draw_speed(rng);
    } else {
        s.pos = bbox.clamp(s.pos + delta * (travel / remaining));
        s.waypoint = Some(target);
    }
    s
}

pub fn gm_step<R: Rng + ?Sized>(
    state: &MobilityState,
    cfg: &MobilityConfig,
    bbox: &BoundingBox,
    rng: &mut R,
) -> MobilityState {
    let noise = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    gm_step_with_noise(state, cfg, bbox, noise)
}

/// Gauss-Markov transition with explicit standard-normal draws for the
/// speed, direction and pitch channels.
pub fn gm_step_with_noise(
    state: &MobilityState,
    cfg: &MobilityConfig,
    bbox: &BoundingBox,
    noise: [f64; 3],
) -> MobilityState {
    let a = cfg.gm_alpha;
    let spread = (1.0 - a * a).max(0.0).sqrt();
    let mut s = state.clone();

    s.gm_speed = (a * s.gm_speed + (1.0 - a) * cfg.gm_mean_speed + spread * noise[0])
        .clamp(cfg.v_min, cfg.v_max);
    // Blend on the circle: headings just either side of 0 are close.
    let offset = (s.gm_direction - s.gm_mean_direction + PI).rem_euclid(TAU) - PI;
    s.gm_direction = s.gm_mean_direction + a * offset + spread * noise[1];
    if bbox.is_3d() {
        let magnitude = (a * s.gm_pitch.abs()
            + (1.0 - a) * s.gm_mean_pitch.abs()
            + spread * noise[2])
            .clamp(0.0, cfg.gm_pitch_max);
        s.gm_pitch = magnitude.copysign(s.gm_mean_pitch);
    } else {
        s.gm_pitch = 0.0;
    }

    let (sd, cd) = s.gm_direction.sin_cos();
    let (sp, cp) = s.gm_pitch.sin_cos();
    let v = Vec3::new(s.gm_speed * cd * cp, s.gm_speed * sd * cp, s.gm_speed * sp);
    let mut p = s.pos + v * cfg.step_dt;

    if let Some(x) = reflect(p.x, bbox.x_len) {
        p.x = x;
        s.gm_direction = PI - s.gm_direction;
        s.gm_mean_direction = PI - s.gm_mean_direction;
    }
    if let Some(y) = reflect(p.y, bbox.y_len) {
        p.y = y;
        s.gm_direction = -s.gm_direction;
        s.gm_mean_direction = -s.gm_mean_direction;
    }
    if bbox.is_3d() {
        if let Some(z) = reflect(p.z, bbox.z_len) {
            p.z = z;
            s.gm_pitch = -s.gm_pitch;
            s.gm_mean_pitch = -s.gm_mean_pitch;
        }
    } else {
        p.z = 0.0;
    }
    s.gm_direction = s.gm_direction.rem_euclid(TAU);
    s.gm_mean_direction = s.gm_mean_direction.rem_euclid(TAU);
    // A single mirror suffices unless one step spans more than the box.
    s.pos = bbox.clamp(p);
    s
}

/// Mirror of `c` back into `[0, len]`, or `None` when already inside.
fn reflect(c: f64, len: f64) -> Option<f64> {
    if c < 0.0 {
        Some(-c)
    } else if c > len {
        Some(2.0 * len - c)
    } else {
        None
    }
}
