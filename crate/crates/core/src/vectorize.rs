//! Skeleton → direction-vector representation.
//!
//! Each bone becomes the unit vector from its proximal to its distal
//! keypoint, which discards absolute position and body scale but keeps
//! orientation. Bones with a missing or coincident endpoint become `(0, 0)`.

use std::io::Write;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TrackedSequence;
use crate::skeleton::{detected_body_count, SkeletonFrame, SkeletonTopology, NUM_CONNECTIONS};

pub const POSE_DIM: usize = NUM_CONNECTIONS * 2;

/// Minimum detected body keypoints for a frame to be classified.
pub const MIN_CLASSIFIABLE_KEYPOINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseVector(pub [f64; POSE_DIM]);

impl PoseVector {
    pub const ZERO: PoseVector = PoseVector([0.0; POSE_DIM]);

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; POSE_DIM] = values.try_into().map_err(|_| {
            Error::InvalidInput(format!(
                "pose vector needs {POSE_DIM} values, got {}",
                values.len()
            ))
        })?;
        Ok(PoseVector(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn bone(&self, slot: usize) -> (f64, f64) {
        (self.0[2 * slot], self.0[2 * slot + 1])
    }

    /// Rescales each bone sub-vector to unit length; sub-vectors with norm
    /// below `min_norm` become `(0, 0)`.
    pub fn renormalized(&self, min_norm: f64) -> PoseVector {
        let mut out = [0.0; POSE_DIM];
        for slot in 0..NUM_CONNECTIONS {
            let (x, y) = self.bone(slot);
            let n = x.hypot(y);
            if n >= min_norm {
                out[2 * slot] = x / n;
                out[2 * slot + 1] = y / n;
            }
        }
        PoseVector(out)
    }
}

impl Index<usize> for PoseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseVectorSequence {
    pub vectors: Vec<PoseVector>,
    pub frame_indices: Vec<i64>,
    /// Detected body keypoints per frame, kept for the unknown-pose rule.
    pub body_counts: Vec<usize>,
    pub track_id: i64,
    pub source_id: String,
}

impl PoseVectorSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn vectorize_frame(frame: &SkeletonFrame, topology: &SkeletonTopology) -> PoseVector {
    let mut out = [0.0; POSE_DIM];
    for (slot, &(l, r)) in topology.connections.iter().enumerate() {
        let from = frame.keypoints[l];
        let to = frame.keypoints[r];
        if !(from.detected && to.detected) {
            continue;
        }
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        let norm = dx.hypot(dy);
        if norm > 0.0 && norm.is_finite() {
            out[2 * slot] = dx / norm;
            out[2 * slot + 1] = dy / norm;
        }
    }
    PoseVector(out)
}

pub fn vectorize_sequence(seq: &TrackedSequence, topology: &SkeletonTopology) -> PoseVectorSequence {
    PoseVectorSequence {
        vectors: seq
            .frames
            .iter()
            .map(|f| vectorize_frame(f, topology))
            .collect(),
        frame_indices: seq.frames.iter().map(|f| f.frame_index).collect(),
        body_counts: seq.frames.iter().map(detected_body_count).collect(),
        track_id: seq.track_id,
        source_id: seq.source_id.clone(),
    }
}

pub fn is_classifiable(frame: &SkeletonFrame) -> bool {
    detected_body_count(frame) >= MIN_CLASSIFIABLE_KEYPOINTS
}

/// Writes a sequence as CSV: `frame_index` followed by the 24 components.
pub fn write_vector_table<W: Write>(seq: &PoseVectorSequence, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["frame_index".to_string()];
    for slot in 0..NUM_CONNECTIONS {
        header.push(format!("x{slot}"));
        header.push(format!("y{slot}"));
    }
    w.write_record(&header)?;
    for (v, idx) in seq.vectors.iter().zip(&seq.frame_indices) {
        let mut row = vec![idx.to_string()];
        row.extend(v.0.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<vector table>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{coco_topology, Keypoint, NECK, NUM_KEYPOINTS, R_SHOULDER, R_WRIST};
    use proptest::prelude::*;

    fn full_frame(coords: &[(f64, f64); NUM_KEYPOINTS]) -> SkeletonFrame {
        let mut f = SkeletonFrame::empty(1, 0);
        for (k, &(x, y)) in f.keypoints.iter_mut().zip(coords) {
            *k = Keypoint::new(x, y);
        }
        f
    }

    fn sample_frame() -> SkeletonFrame {
        let mut c = [(0.0, 0.0); NUM_KEYPOINTS];
        for (i, p) in c.iter_mut().enumerate() {
            *p = (10.0 + 7.0 * i as f64, 5.0 + 3.0 * (i * i % 11) as f64);
        }
        c[NECK] = (0.0, 0.0);
        c[R_SHOULDER] = (3.0, 4.0);
        full_frame(&c)
    }

    #[test]
    fn three_four_five() {
        let v = vectorize_frame(&sample_frame(), &coco_topology());
        assert_eq!(v.bone(0), (0.6, 0.8));
    }

    #[test]
    fn undetected_endpoint_gives_zero() {
        let mut f = sample_frame();
        f.keypoints[R_WRIST] = Keypoint::missing();
        let v = vectorize_frame(&f, &coco_topology());
        // slot 4 is right elbow → right wrist
        assert_eq!(v.bone(4), (0.0, 0.0));
        assert_ne!(v.bone(2), (0.0, 0.0));
    }

    #[test]
    fn coincident_endpoints_give_zero() {
        let mut f = sample_frame();
        f.keypoints[R_SHOULDER] = f.keypoints[NECK];
        let v = vectorize_frame(&f, &coco_topology());
        assert_eq!(v.bone(0), (0.0, 0.0));
    }

    #[test]
    fn sequence_lengths() {
        let topo = coco_topology();
        let mut frames: Vec<SkeletonFrame> = (1..=25)
            .map(|i| {
                let mut f = sample_frame();
                f.frame_index = i;
                f
            })
            .collect();
        frames[10].keypoints[R_WRIST] = Keypoint::missing();
        let seq = TrackedSequence {
            track_id: 2,
            frames,
            source_id: "s".into(),
        };
        let v = vectorize_sequence(&seq, &topo);
        assert_eq!(v.len(), 25);
        assert_eq!(v.frame_indices, (1..=25).collect::<Vec<_>>());
        assert_eq!(v.vectors[10].bone(4), (0.0, 0.0));
        assert_eq!(v.body_counts[10], 12);

        let empty = TrackedSequence {
            track_id: 0,
            frames: vec![],
            source_id: "s".into(),
        };
        assert!(vectorize_sequence(&empty, &topo).is_empty());
    }

    #[test]
    fn classifiable_boundary() {
        let mut f = sample_frame();
        assert!(is_classifiable(&f));
        let body = crate::skeleton::BODY_KEYPOINTS;
        for &k in &body[..5] {
            f.keypoints[k] = Keypoint::missing();
        }
        assert!(is_classifiable(&f)); // 8 left
        f.keypoints[body[5]] = Keypoint::missing();
        assert!(!is_classifiable(&f)); // 7 left
    }

    #[test]
    fn table_dump() {
        let seq = TrackedSequence {
            track_id: 0,
            frames: vec![sample_frame()],
            source_id: "s".into(),
        };
        let mut buf = Vec::new();
        write_vector_table(&vectorize_sequence(&seq, &coco_topology()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 25);
        assert!(lines.next().unwrap().starts_with("1,0.6,0.8,"));
    }

    fn arb_frame() -> impl Strategy<Value = SkeletonFrame> {
        prop::collection::vec((-500.0f64..500.0, -500.0f64..500.0, prop::bool::weighted(0.9)), 18)
            .prop_map(|pts| {
                let mut f = SkeletonFrame::empty(1, 0);
                for (k, (x, y, d)) in f.keypoints.iter_mut().zip(pts) {
                    if d {
                        *k = Keypoint::new(x, y);
                    }
                }
                f
            })
    }

    fn transformed(f: &SkeletonFrame, map: impl Fn(f64, f64) -> (f64, f64)) -> SkeletonFrame {
        let mut g = f.clone();
        for k in g.keypoints.iter_mut().filter(|k| k.detected) {
            let (x, y) = map(k.x, k.y);
            k.x = x;
            k.y = y;
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn translation_invariant(f in arb_frame(), dx in -1e3f64..1e3, dy in -1e3f64..1e3) {
            let topo = coco_topology();
            let a = vectorize_frame(&f, &topo);
            let b = vectorize_frame(&transformed(&f, |x, y| (x + dx, y + dy)), &topo);
            for i in 0..POSE_DIM {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn scale_invariant(f in arb_frame(), s in 0.05f64..20.0, cx in -300.0f64..300.0, cy in -300.0f64..300.0) {
            let topo = coco_topology();
            let a = vectorize_frame(&f, &topo);
            let b = vectorize_frame(&transformed(&f, |x, y| (cx + s * (x - cx), cy + s * (y - cy))), &topo);
            for i in 0..POSE_DIM {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn unit_or_zero_bones(f in arb_frame()) {
            let v = vectorize_frame(&f, &coco_topology());
            for slot in 0..NUM_CONNECTIONS {
                let (x, y) = v.bone(slot);
                let n = x.hypot(y);
                prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-9);
            }
            prop_assert_eq!(v, vectorize_frame(&f.clone(), &coco_topology()));
        }
    }
}
