//! Kinematic stick-figure generator used as a stand-in for recorded video.
//!
//! A posture is a whole-body tilt about the feet plus joint angles for both
//! arms and legs. Scripts sequence postures into idle standing, walking,
//! and falls. Falls are preceded by a fixed-length stagger (lean, arms
//! flung out, knees giving way) and, when the actor gets up, by a
//! fixed-length phase of drawing the knees up, so a forecaster can tell
//! how far away the next transition is. Gaussian pixel noise and random
//! keypoint dropout are applied last.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::VideoAnnotation;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ingest::TrackedSequence;
use crate::skeleton::*;

/// Frames from the first falling frame to the impact frame inclusive
/// (1.26 s at 25 fps).
pub const FALL_FRAMES: usize = 31;
/// Stagger before a fall.
pub const PRECURSOR_FRAMES: usize = 50;
/// Knees drawn up before getting up; part of the lying phase.
pub const RISE_PREP_FRAMES: usize = 60;
pub const RISE_FRAMES: usize = 40;

const MIN_IDLE_BEFORE: usize = 30;
const MAX_IDLE_BEFORE: usize = 60;
const MIN_IDLE_AFTER: usize = 20;
const MAX_IDLE_AFTER: usize = 40;
const MIN_LYING_BEFORE_PREP: usize = 10;

/// Lean reached at the end of the stagger, radians.
const PRECURSOR_TILT: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    UprightIdle,
    Walk,
    FallAndLie,
    FallAndRise,
}

impl MotionKind {
    pub const ALL: [MotionKind; 4] = [
        MotionKind::UprightIdle,
        MotionKind::Walk,
        MotionKind::FallAndLie,
        MotionKind::FallAndRise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionKind::UprightIdle => "upright_idle",
            MotionKind::Walk => "walk",
            MotionKind::FallAndLie => "fall_and_lie",
            MotionKind::FallAndRise => "fall_and_rise",
        }
    }

    pub fn is_fall(self) -> bool {
        matches!(self, MotionKind::FallAndLie | MotionKind::FallAndRise)
    }

    /// Shortest duration the generator accepts for this kind.
    pub fn min_duration(self) -> usize {
        match self {
            MotionKind::UprightIdle | MotionKind::Walk => 1,
            MotionKind::FallAndLie => MIN_IDLE_BEFORE + PRECURSOR_FRAMES + FALL_FRAMES + MIN_LYING_BEFORE_PREP,
            MotionKind::FallAndRise => {
                MIN_IDLE_BEFORE
                    + PRECURSOR_FRAMES
                    + FALL_FRAMES
                    + MIN_LYING_BEFORE_PREP
                    + RISE_PREP_FRAMES
                    + RISE_FRAMES
                    + MIN_IDLE_AFTER
            }
        }
    }
}

impl std::str::FromStr for MotionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MotionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown motion kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    pub kind: MotionKind,
    /// Frames at 25 fps.
    pub duration: usize,
    /// Standard deviation of the pixel noise.
    pub noise_std: f64,
    /// Probability that a keypoint is dropped in a frame.
    pub occlusion_rate: f64,
    pub seed: u64,
    pub source_id: String,
}

impl MotionScript {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.occlusion_rate) {
            return Err(Error::Config(format!(
                "occlusion rate {} outside [0, 1]",
                self.occlusion_rate
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("invalid noise std {}", self.noise_std)));
        }
        if self.duration < self.kind.min_duration() {
            return Err(Error::Config(format!(
                "{} needs at least {} frames, got {}",
                self.kind.as_str(),
                self.kind.min_duration(),
                self.duration
            )));
        }
        Ok(())
    }
}

/// Whole-body tilt plus per-side joint angles, index 0 = right, 1 = left.
/// Limb angles are measured from straight down in the body frame.
#[derive(Debug, Clone, Copy, Default)]
struct Posture {
    tilt: f64,
    shoulder: [f64; 2],
    elbow: [f64; 2],
    hip: [f64; 2],
    knee: [f64; 2],
}

impl Posture {
    fn lerp(&self, other: &Posture, t: f64) -> Posture {
        let l = |a: f64, b: f64| a + (b - a) * t;
        let l2 = |a: [f64; 2], b: [f64; 2]| [l(a[0], b[0]), l(a[1], b[1])];
        Posture {
            tilt: l(self.tilt, other.tilt),
            shoulder: l2(self.shoulder, other.shoulder),
            elbow: l2(self.elbow, other.elbow),
            hip: l2(self.hip, other.hip),
            knee: l2(self.knee, other.knee),
        }
    }
}

// body proportions, in body heights
const THIGH: f64 = 0.245;
const SHIN: f64 = 0.245;
const TORSO: f64 = 0.30;
const UPPER_ARM: f64 = 0.17;
const FOREARM: f64 = 0.15;
const SHOULDER_HALF: f64 = 0.11;
const HIP_HALF: f64 = 0.05;
const HEAD: f64 = 0.10;

fn limb_dir(a: f64) -> (f64, f64) {
    (a.sin(), -a.cos())
}

/// Keypoints in the body frame (y up, feet near the origin), before tilt.
fn body_points(p: &Posture) -> [(f64, f64); NUM_KEYPOINTS] {
    let mut k = [(0.0, 0.0); NUM_KEYPOINTS];
    let hip_y = THIGH + SHIN + 0.04;
    let neck = (0.0, hip_y + TORSO);
    k[NECK] = neck;
    let side = [-1.0, 1.0];
    let shoulders = [R_SHOULDER, L_SHOULDER];
    let elbows = [R_ELBOW, L_ELBOW];
    let wrists = [R_WRIST, L_WRIST];
    let hips = [R_HIP, L_HIP];
    let knees = [R_KNEE, L_KNEE];
    let ankles = [R_ANKLE, L_ANKLE];
    for s in 0..2 {
        let sh = (neck.0 + side[s] * SHOULDER_HALF, neck.1 - 0.02);
        let (ux, uy) = limb_dir(p.shoulder[s]);
        let el = (sh.0 + UPPER_ARM * ux, sh.1 + UPPER_ARM * uy);
        let (fx, fy) = limb_dir(p.shoulder[s] + p.elbow[s]);
        let wr = (el.0 + FOREARM * fx, el.1 + FOREARM * fy);
        k[shoulders[s]] = sh;
        k[elbows[s]] = el;
        k[wrists[s]] = wr;

        let hp = (side[s] * HIP_HALF, hip_y);
        let (tx, ty) = limb_dir(p.hip[s]);
        let kn = (hp.0 + THIGH * tx, hp.1 + THIGH * ty);
        let (sx, sy) = limb_dir(p.hip[s] + p.knee[s]);
        let an = (kn.0 + SHIN * sx, kn.1 + SHIN * sy);
        k[hips[s]] = hp;
        k[knees[s]] = kn;
        k[ankles[s]] = an;
    }
    let nose = (neck.0, neck.1 + HEAD);
    k[NOSE] = nose;
    k[R_EYE] = (nose.0 - 0.025, nose.1 + 0.02);
    k[L_EYE] = (nose.0 + 0.025, nose.1 + 0.02);
    k[R_EAR] = (nose.0 - 0.05, nose.1);
    k[L_EAR] = (nose.0 + 0.05, nose.1);
    k
}

/// Per-sequence body and camera parameters.
struct Actor {
    scale: f64,
    cx: f64,
    ground_y: f64,
    arm_abd: f64,
    elbow: f64,
    leg_abd: f64,
    sway_amp: f64,
    sway_period: f64,
    sway_phase: f64,
    fall_dir: f64,
    lying_tilt: f64,
}

impl Actor {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let fall_dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        Actor {
            scale: 150.0 * rng.random_range(0.7..1.3),
            cx: rng.random_range(100.0..220.0),
            ground_y: rng.random_range(190.0..230.0),
            arm_abd: rng.random_range(0.05..0.25),
            elbow: rng.random_range(0.05..0.3),
            leg_abd: rng.random_range(0.02..0.1),
            sway_amp: rng.random_range(0.01..0.04),
            sway_period: rng.random_range(40.0..100.0),
            sway_phase: rng.random_range(0.0..TAU),
            fall_dir,
            lying_tilt: fall_dir * (FRAC_PI_2 + rng.random_range(-0.05..0.05)),
        }
    }

    fn idle(&self, t: f64) -> Posture {
        let w = TAU * t / self.sway_period + self.sway_phase;
        let arm = self.arm_abd + 0.03 * (0.7 * w).sin();
        Posture {
            tilt: self.sway_amp * w.sin(),
            shoulder: [-arm, arm],
            elbow: [-self.elbow, self.elbow],
            hip: [-self.leg_abd, self.leg_abd],
            knee: [0.02, 0.02],
        }
    }

    /// Stagger before a fall, `u` in `[0, 1)`.
    fn precursor(&self, t: f64, u: f64) -> Posture {
        let base = self.idle(t);
        let arm = self.arm_abd + (1.4 - self.arm_abd) * u;
        Posture {
            tilt: base.tilt * (1.0 - u) + self.fall_dir * PRECURSOR_TILT * u,
            shoulder: [-arm, arm],
            elbow: [-(self.elbow + 0.5 * u), self.elbow + 0.5 * u],
            hip: [-(self.leg_abd + 0.1 * u), self.leg_abd + 0.1 * u],
            knee: [0.02 + 0.5 * u, 0.02 + 0.5 * u],
        }
    }

    /// Falling, `s` in `(0, 1)`; accelerates towards the ground.
    fn falling(&self, s: f64) -> Posture {
        let tilt = self.fall_dir * PRECURSOR_TILT + (self.lying_tilt - self.fall_dir * PRECURSOR_TILT) * s * s;
        let arm = 1.4 + 1.0 * s;
        Posture {
            tilt,
            shoulder: [-arm, arm],
            elbow: [-0.3, 0.3],
            hip: [-(self.leg_abd + 0.1), self.leg_abd + 0.1],
            knee: [0.52 - 0.3 * s, 0.52 - 0.3 * s],
        }
    }

    fn lying(&self, t: f64) -> Posture {
        Posture {
            tilt: self.lying_tilt + 0.01 * (TAU * t / 90.0).sin(),
            shoulder: [-0.12, 0.12],
            elbow: [-0.05, 0.05],
            hip: [-0.05, 0.05],
            knee: [0.05, 0.05],
        }
    }

    /// Knees drawn up while still lying, `v` in `[0, 1)`.
    fn rise_prep(&self, t: f64, v: f64) -> Posture {
        let mut p = self.lying(t);
        let flex = -self.fall_dir * 0.9 * v;
        p.hip = [p.hip[0] + flex, p.hip[1] + flex];
        let bend = 0.05 + 1.25 * v;
        p.knee = [-self.fall_dir * bend, -self.fall_dir * bend];
        p
    }

    /// Getting up, `s` in `(0, 1]`. Starts with arms planted towards the
    /// ground and the torso lifting quickly.
    fn rising(&self, t: f64, s: f64) -> Posture {
        let prep_end = self.rise_prep(t, 1.0);
        let push = Posture {
            tilt: self.lying_tilt,
            shoulder: [-self.fall_dir * 1.4, -self.fall_dir * 1.4],
            elbow: [-self.fall_dir * 0.6, -self.fall_dir * 0.6],
            hip: prep_end.hip,
            knee: prep_end.knee,
        };
        let target = self.idle(t);
        let mut p = push.lerp(&target, s);
        p.tilt = self.lying_tilt * (1.0 - s.sqrt()) + target.tilt * s.sqrt();
        p
    }

    fn walk(&self, t: f64, gait: &Gait) -> Posture {
        let phi = TAU * t / gait.period + gait.phase;
        let leg = gait.leg_swing * phi.sin();
        let arm = gait.arm_swing * phi.sin();
        Posture {
            tilt: gait.dir * 0.06 + 0.01 * (2.0 * phi).sin(),
            shoulder: [-self.arm_abd - arm, self.arm_abd + arm],
            elbow: [-0.2, 0.2],
            hip: [-self.leg_abd + leg, self.leg_abd - leg],
            knee: [0.4 * (1.0 - phi.cos()) / 2.0, 0.4 * (1.0 + phi.cos()) / 2.0],
        }
    }

    fn place(&self, p: &Posture, dx: f64) -> [(f64, f64); NUM_KEYPOINTS] {
        let (s, c) = p.tilt.sin_cos();
        body_points(p).map(|(x, y)| {
            let xr = x * c - y * s;
            let yr = x * s + y * c;
            (self.cx + dx + self.scale * xr, self.ground_y - self.scale * yr)
        })
    }
}

struct Gait {
    period: f64,
    phase: f64,
    leg_swing: f64,
    arm_swing: f64,
    speed: f64,
    dir: f64,
}

#[derive(Clone, Copy)]
enum Phase {
    Idle,
    Walk,
    Precursor(f64),
    Falling(f64),
    Lying,
    RisePrep(f64),
    Rising(f64),
}

fn timeline(script: &MotionScript, rng: &mut ChaCha8Rng) -> Result<(Vec<Phase>, VideoAnnotation)> {
    let n = script.duration;
    let n_frames = n as i64;
    match script.kind {
        MotionKind::UprightIdle => Ok((vec![Phase::Idle; n], VideoAnnotation::no_fall(n_frames))),
        MotionKind::Walk => Ok((vec![Phase::Walk; n], VideoAnnotation::no_fall(n_frames))),
        MotionKind::FallAndLie | MotionKind::FallAndRise => {
            let rise = script.kind == MotionKind::FallAndRise;
            let mut before = rng.random_range(MIN_IDLE_BEFORE..=MAX_IDLE_BEFORE);
            let mut after = if rise {
                rng.random_range(MIN_IDLE_AFTER..=MAX_IDLE_AFTER)
            } else {
                0
            };
            let fixed = PRECURSOR_FRAMES
                + FALL_FRAMES
                + MIN_LYING_BEFORE_PREP
                + if rise { RISE_PREP_FRAMES + RISE_FRAMES } else { 0 };
            // shrink the idle stretches when the script is short
            while before + after + fixed > n {
                if after > MIN_IDLE_AFTER {
                    after -= 1;
                } else if before > MIN_IDLE_BEFORE {
                    before -= 1;
                } else {
                    return Err(Error::Config(format!(
                        "{} needs at least {} frames",
                        script.kind.as_str(),
                        script.kind.min_duration()
                    )));
                }
            }
            let mut phases = Vec::with_capacity(n);
            phases.extend(std::iter::repeat_n(Phase::Idle, before));
            for k in 0..PRECURSOR_FRAMES {
                phases.push(Phase::Precursor(k as f64 / PRECURSOR_FRAMES as f64));
            }
            let s_fs = phases.len() as i64 + 1;
            for k in 0..FALL_FRAMES - 1 {
                phases.push(Phase::Falling((k + 1) as f64 / FALL_FRAMES as f64));
            }
            // impact frame already shows the lying posture
            phases.push(Phase::Lying);
            let s_fe = phases.len() as i64;
            if !rise {
                phases.resize(n, Phase::Lying);
                let ann = VideoAnnotation {
                    s_fs,
                    s_fe,
                    s_gu: n_frames,
                    n_frames,
                };
                return Ok((phases, ann));
            }
            let lying_plain = n - after - RISE_FRAMES - RISE_PREP_FRAMES - phases.len();
            phases.extend(std::iter::repeat_n(Phase::Lying, lying_plain));
            for k in 0..RISE_PREP_FRAMES {
                phases.push(Phase::RisePrep(k as f64 / RISE_PREP_FRAMES as f64));
            }
            let s_gu = phases.len() as i64;
            for k in 0..RISE_FRAMES {
                phases.push(Phase::Rising((k + 1) as f64 / RISE_FRAMES as f64));
            }
            phases.resize(n, Phase::Idle);
            Ok((
                phases,
                VideoAnnotation {
                    s_fs,
                    s_fe,
                    s_gu,
                    n_frames,
                },
            ))
        }
    }
}

/// Generates one tracked sequence (track id 0, frames `1..=duration`) and
/// its fall annotation.
pub fn synth_motion(script: &MotionScript) -> Result<(TrackedSequence, VideoAnnotation)> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let actor = Actor::sample(&mut rng);
    let gait = Gait {
        period: rng.random_range(24.0..32.0),
        phase: rng.random_range(0.0..TAU),
        leg_swing: rng.random_range(0.25..0.4),
        arm_swing: rng.random_range(0.2..0.35),
        speed: rng.random_range(0.5..1.5),
        dir: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
    };
    let (phases, annotation) = timeline(script, &mut rng)?;
    let noise = Normal::new(0.0, script.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;

    let frames = phases
        .iter()
        .enumerate()
        .map(|(k, phase)| {
            let t = k as f64;
            let (posture, dx) = match *phase {
                Phase::Idle => (actor.idle(t), 0.0),
                Phase::Walk => (actor.walk(t, &gait), -gait.dir * gait.speed * t),
                Phase::Precursor(u) => (actor.precursor(t, u), 0.0),
                Phase::Falling(s) => (actor.falling(s), 0.0),
                Phase::Lying => (actor.lying(t), 0.0),
                Phase::RisePrep(v) => (actor.rise_prep(t, v), 0.0),
                Phase::Rising(s) => (actor.rising(t, s), 0.0),
            };
            let mut frame = SkeletonFrame::empty(k as i64 + 1, 0);
            for (kp, (x, y)) in frame.keypoints.iter_mut().zip(actor.place(&posture, dx)) {
                let (nx, ny) = if script.noise_std > 0.0 {
                    (noise.sample(&mut rng), noise.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                let dropped = script.occlusion_rate > 0.0 && rng.random_bool(script.occlusion_rate);
                *kp = if dropped {
                    Keypoint::missing()
                } else {
                    Keypoint::new(x + nx, y + ny)
                };
            }
            frame
        })
        .collect();

    Ok((
        TrackedSequence {
            track_id: 0,
            frames,
            source_id: script.source_id.clone(),
        },
        annotation,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub count: usize,
    pub duration: usize,
    pub noise_std: f64,
    pub occlusion_rate: f64,
    pub seed: u64,
    /// Kinds are assigned round-robin in this order.
    pub kinds: Vec<MotionKind>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            count: 200,
            duration: 300,
            noise_std: 1.0,
            occlusion_rate: 0.02,
            seed: 0,
            kinds: MotionKind::ALL.to_vec(),
        }
    }
}

impl CorpusSpec {
    pub fn scripts(&self) -> Vec<MotionScript> {
        (0..self.count)
            .map(|i| {
                let kind = self.kinds[i % self.kinds.len()];
                MotionScript {
                    kind,
                    duration: self.duration,
                    noise_std: self.noise_std,
                    occlusion_rate: self.occlusion_rate,
                    seed: mix_seed(self.seed, i as u64),
                    source_id: format!("{}-{:04}", kind.as_str(), i),
                }
            })
            .collect()
    }
}

fn mix_seed(seed: u64, i: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (i.wrapping_add(1)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub kind: MotionKind,
    pub sequence: TrackedSequence,
    pub annotation: VideoAnnotation,
}

pub fn synth_corpus(spec: &CorpusSpec, execution: Execution) -> Result<Vec<SynthVideo>> {
    if spec.kinds.is_empty() {
        return Err(Error::Config("corpus needs at least one motion kind".into()));
    }
    exec::map(execution, &spec.scripts(), |script| {
        synth_motion(script).map(|(sequence, annotation)| SynthVideo {
            kind: script.kind,
            sequence,
            annotation,
        })
    })
    .into_iter()
    .collect()
}
