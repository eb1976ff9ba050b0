//! Skeleton data types and the fixed 12-bone body topology.
//!
//! Keypoints follow the 18-point COCO layout as emitted by OpenPose:
//! nose, neck, right arm (shoulder, elbow, wrist), left arm, right leg
//! (hip, knee, ankle), left leg, then eyes and ears.

use serde::{Deserialize, Serialize};

pub const NUM_KEYPOINTS: usize = 18;
pub const NUM_BODY_KEYPOINTS: usize = 13;
pub const NUM_CONNECTIONS: usize = 12;

pub const NOSE: usize = 0;
pub const NECK: usize = 1;
pub const R_SHOULDER: usize = 2;
pub const R_ELBOW: usize = 3;
pub const R_WRIST: usize = 4;
pub const L_SHOULDER: usize = 5;
pub const L_ELBOW: usize = 6;
pub const L_WRIST: usize = 7;
pub const R_HIP: usize = 8;
pub const R_KNEE: usize = 9;
pub const R_ANKLE: usize = 10;
pub const L_HIP: usize = 11;
pub const L_KNEE: usize = 12;
pub const L_ANKLE: usize = 13;
pub const R_EYE: usize = 14;
pub const L_EYE: usize = 15;
pub const R_EAR: usize = 16;
pub const L_EAR: usize = 17;

pub const FACE_KEYPOINTS: [usize; 5] = [NOSE, R_EYE, L_EYE, R_EAR, L_EAR];

pub const BODY_KEYPOINTS: [usize; NUM_BODY_KEYPOINTS] = [
    NECK, R_SHOULDER, R_ELBOW, R_WRIST, L_SHOULDER, L_ELBOW, L_WRIST, R_HIP, R_KNEE, R_ANKLE,
    L_HIP, L_KNEE, L_ANKLE,
];

pub fn is_face_keypoint(index: usize) -> bool {
    FACE_KEYPOINTS.contains(&index)
}

/// A single 2D keypoint in image pixels.
///
/// Undetected keypoints always carry `x = y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub detected: bool,
}

impl Keypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Keypoint {
            x,
            y,
            detected: true,
        }
    }

    pub const fn missing() -> Self {
        Keypoint {
            x: 0.0,
            y: 0.0,
            detected: false,
        }
    }

    /// Builds a keypoint from an OpenPose-style `(x, y, confidence)` triple.
    /// Anything with confidence above zero counts as detected.
    pub fn from_confidence(x: f64, y: f64, confidence: f64) -> Self {
        if confidence > 0.0 {
            Keypoint::new(x, y)
        } else {
            Keypoint::missing()
        }
    }
}

/// One person's skeleton at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame {
    pub keypoints: [Keypoint; NUM_KEYPOINTS],
    pub frame_index: i64,
    pub track_id: i64,
}

impl SkeletonFrame {
    pub fn new(keypoints: [Keypoint; NUM_KEYPOINTS], frame_index: i64, track_id: i64) -> Self {
        SkeletonFrame {
            keypoints,
            frame_index,
            track_id,
        }
    }

    pub fn empty(frame_index: i64, track_id: i64) -> Self {
        SkeletonFrame::new([Keypoint::missing(); NUM_KEYPOINTS], frame_index, track_id)
    }

    /// Axis-aligned extent of all detected keypoints, if any.
    pub fn detected_extent(&self) -> Option<(f64, f64, f64, f64)> {
        let mut it = self.keypoints.iter().filter(|k| k.detected);
        let first = it.next()?;
        Some(it.fold(
            (first.x, first.y, first.x, first.y),
            |(x0, y0, x1, y1), k| (x0.min(k.x), y0.min(k.y), x1.max(k.x), y1.max(k.y)),
        ))
    }
}

/// Ordered bone list. Each entry points from the proximal keypoint to the
/// distal one, so the neck is the root of the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTopology {
    pub connections: [(usize, usize); NUM_CONNECTIONS],
}

const COCO_CONNECTIONS: [(usize, usize); NUM_CONNECTIONS] = [
    (NECK, R_SHOULDER),
    (NECK, L_SHOULDER),
    (R_SHOULDER, R_ELBOW),
    (L_SHOULDER, L_ELBOW),
    (R_ELBOW, R_WRIST),
    (L_ELBOW, L_WRIST),
    (NECK, R_HIP),
    (NECK, L_HIP),
    (R_HIP, R_KNEE),
    (L_HIP, L_KNEE),
    (R_KNEE, R_ANKLE),
    (L_KNEE, L_ANKLE),
];

/// Slot index of the neck→hip bones, used when checking torso orientation.
pub const TORSO_SLOTS: [usize; 2] = [6, 7];

pub fn coco_topology() -> SkeletonTopology {
    SkeletonTopology {
        connections: COCO_CONNECTIONS,
    }
}

/// Number of detected keypoints among the 13 body keypoints.
pub fn detected_body_count(frame: &SkeletonFrame) -> usize {
    BODY_KEYPOINTS
        .iter()
        .filter(|&&i| frame.keypoints[i].detected)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_with(detected: &[usize]) -> SkeletonFrame {
        let mut f = SkeletonFrame::empty(1, 0);
        for &i in detected {
            f.keypoints[i] = Keypoint::new(i as f64, 2.0 * i as f64);
        }
        f
    }

    #[test]
    fn topology_shape() {
        let t = coco_topology();
        assert_eq!(t.connections.len(), 12);
        assert_eq!(t.connections[0], (NECK, R_SHOULDER));
        assert_eq!(t, coco_topology());

        let mut seen = std::collections::HashSet::new();
        for &(from, to) in &t.connections {
            assert!(!is_face_keypoint(from) && !is_face_keypoint(to));
            assert!(BODY_KEYPOINTS.contains(&from) && BODY_KEYPOINTS.contains(&to));
            assert!(seen.insert(to), "to-index {to} repeated");
        }
        // every non-neck body keypoint is reached exactly once
        assert_eq!(seen.len(), 12);
        assert!(!seen.contains(&NECK));
    }

    #[test]
    fn connections_point_away_from_neck() {
        let t = coco_topology();
        // walk from each `to` back to the neck through parents
        let parent = |k: usize| t.connections.iter().find(|c| c.1 == k).map(|c| c.0);
        for &(from, to) in &t.connections {
            let mut path = vec![to];
            let mut cur = to;
            while let Some(p) = parent(cur) {
                path.push(p);
                cur = p;
            }
            assert_eq!(cur, NECK);
            assert!(path.contains(&from));
        }
    }

    #[test]
    fn body_count() {
        let all: Vec<usize> = (0..18).collect();
        assert_eq!(detected_body_count(&frame_with(&all)), 13);
        assert_eq!(detected_body_count(&frame_with(&[])), 0);
        assert_eq!(detected_body_count(&frame_with(&[NOSE, R_EYE, L_EYE])), 0);
    }

    #[test]
    fn body_count_ignores_face() {
        let body = [NECK, R_HIP, L_KNEE];
        let mut with_face = body.to_vec();
        with_face.extend_from_slice(&FACE_KEYPOINTS);
        assert_eq!(
            detected_body_count(&frame_with(&body)),
            detected_body_count(&frame_with(&with_face))
        );
    }

    #[test]
    fn confidence_threshold() {
        assert!(!Keypoint::from_confidence(3.0, 4.0, 0.0).detected);
        assert_eq!(Keypoint::from_confidence(3.0, 4.0, 0.0), Keypoint::missing());
        assert!(Keypoint::from_confidence(3.0, 4.0, 0.01).detected);
    }
}
