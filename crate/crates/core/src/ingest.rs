//! Keypoint file parsing, track association and sequence segmentation.
//!
//! Keypoint files are JSON documents:
//!
//! ```json
//! { "source_id": "video01",
//!   "frames": [ { "frame_index": 1,
//!                 "people": [ { "keypoints": [x1, y1, c1, ..., x18, y18, c18],
//!                               "track_id": 0 } ] } ] }
//! ```
//!
//! `source_id` and `track_id` are optional. A confidence of zero marks an
//! undetected keypoint.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{detected_body_count, Keypoint, SkeletonFrame, NUM_KEYPOINTS};

pub const VALUES_PER_PERSON: usize = NUM_KEYPOINTS * 3;

/// Minimum IoU for a detection to continue an existing track.
pub const IOU_THRESHOLD: f64 = 0.3;
/// A track survives this many consecutive frames without a match.
pub const MAX_MISSING_FRAMES: i64 = 10;
/// A run of this many discarded frames splits a sequence.
pub const BREAK_GAP: i64 = 10;
/// Segments shorter than this are dropped.
pub const MIN_SEGMENT_FRAMES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    pub keypoints: [Keypoint; NUM_KEYPOINTS],
    pub track_id: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub frame_index: i64,
    pub people: Vec<Person>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFile {
    pub source_id: Option<String>,
    pub frames: Vec<PoseFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedSequence {
    pub track_id: i64,
    pub frames: Vec<SkeletonFrame>,
    pub source_id: String,
}

impl TrackedSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl DetectionBox {
    pub fn of(frame: &SkeletonFrame) -> Option<Self> {
        frame
            .detected_extent()
            .map(|(x_min, y_min, x_max, y_max)| DetectionBox {
                x_min,
                y_min,
                x_max,
                y_max,
            })
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn iou(&self, other: &DetectionBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = w * h;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Deserialize, Serialize)]
struct RawFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_id: Option<String>,
    frames: Vec<RawFrame>,
}

#[derive(Deserialize, Serialize)]
struct RawFrame {
    frame_index: i64,
    people: Vec<RawPerson>,
}

#[derive(Deserialize, Serialize)]
struct RawPerson {
    keypoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_id: Option<i64>,
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (n, l) in bytes.split(|&b| b == b'\n').enumerate() {
        if n + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

/// Parses a keypoint document. Errors carry the 1-based ordinal of the
/// frame being read and the byte offset of the failure.
pub fn parse_pose_file(bytes: &[u8]) -> Result<PoseFile> {
    let raw: RawFile = serde_json::from_slice(bytes).map_err(|e| {
        let offset = byte_offset(bytes, e.line(), e.column());
        let needle = b"\"frame_index\"";
        let frame = bytes[..offset]
            .windows(needle.len())
            .filter(|w| *w == needle)
            .count();
        Error::Parse {
            frame,
            offset,
            message: e.to_string(),
        }
    })?;

    let mut frames = Vec::with_capacity(raw.frames.len());
    for rf in raw.frames {
        let mut people = Vec::with_capacity(rf.people.len());
        for (n, rp) in rf.people.into_iter().enumerate() {
            if rp.keypoints.len() != VALUES_PER_PERSON {
                return Err(Error::Format {
                    frame_index: rf.frame_index,
                    message: format!(
                        "person {n} has {} values, expected {VALUES_PER_PERSON}",
                        rp.keypoints.len()
                    ),
                });
            }
            let mut keypoints = [Keypoint::missing(); NUM_KEYPOINTS];
            for (k, t) in keypoints.iter_mut().zip(rp.keypoints.chunks_exact(3)) {
                *k = Keypoint::from_confidence(t[0], t[1], t[2]);
            }
            people.push(Person {
                keypoints,
                track_id: rp.track_id,
            });
        }
        frames.push(PoseFrame {
            frame_index: rf.frame_index,
            people,
        });
    }
    Ok(PoseFile {
        source_id: raw.source_id,
        frames,
    })
}

/// Parses a keypoint document into `(frame_index, skeletons)` pairs; the
/// skeletons carry `track_id = -1` until associated.
pub fn parse_pose_frames(bytes: &[u8]) -> Result<Vec<(i64, Vec<SkeletonFrame>)>> {
    Ok(parse_pose_file(bytes)?
        .frames
        .into_iter()
        .map(|f| {
            let idx = f.frame_index;
            let skels = f
                .people
                .into_iter()
                .map(|p| SkeletonFrame::new(p.keypoints, idx, -1))
                .collect();
            (idx, skels)
        })
        .collect())
}

/// Serializes tracked sequences into the keypoint document format, one
/// person entry per track per frame, with explicit track ids.
pub fn write_pose_file(source_id: &str, tracks: &[TrackedSequence]) -> Result<Vec<u8>> {
    let mut by_frame: BTreeMap<i64, Vec<RawPerson>> = BTreeMap::new();
    for t in tracks {
        for f in &t.frames {
            let keypoints = f
                .keypoints
                .iter()
                .flat_map(|k| {
                    if k.detected {
                        [k.x, k.y, 1.0]
                    } else {
                        [0.0, 0.0, 0.0]
                    }
                })
                .collect();
            by_frame.entry(f.frame_index).or_default().push(RawPerson {
                keypoints,
                track_id: Some(t.track_id),
            });
        }
    }
    let raw = RawFile {
        source_id: Some(source_id.to_string()),
        frames: by_frame
            .into_iter()
            .map(|(frame_index, people)| RawFrame {
                frame_index,
                people,
            })
            .collect(),
    };
    Ok(serde_json::to_vec(&raw)?)
}

/// Reads and parses a keypoint file, then builds tracks. The file stem is
/// the source id unless the document names one.
pub fn load_tracks(path: &Path) -> Result<Vec<TrackedSequence>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let file = parse_pose_file(&bytes)?;
    let source_id = file.source_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(tracks_from_file(file, &source_id))
}

/// Uses explicit track ids when every person carries one (and no id
/// repeats within a frame); otherwise falls back to [`associate_tracks`].
pub fn tracks_from_file(file: PoseFile, source_id: &str) -> Vec<TrackedSequence> {
    let all_tagged = file
        .frames
        .iter()
        .flat_map(|f| f.people.iter())
        .all(|p| p.track_id.is_some());
    let unique_per_frame = file.frames.iter().all(|f| {
        let mut ids: Vec<i64> = f.people.iter().filter_map(|p| p.track_id).collect();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    });
    if all_tagged && unique_per_frame {
        let mut tracks: BTreeMap<i64, Vec<SkeletonFrame>> = BTreeMap::new();
        for f in &file.frames {
            for p in &f.people {
                let id = p.track_id.unwrap_or_default();
                tracks
                    .entry(id)
                    .or_default()
                    .push(SkeletonFrame::new(p.keypoints, f.frame_index, id));
            }
        }
        return tracks
            .into_iter()
            .map(|(track_id, mut frames)| {
                frames.sort_by_key(|f| f.frame_index);
                frames.dedup_by_key(|f| f.frame_index);
                TrackedSequence {
                    track_id,
                    frames,
                    source_id: source_id.to_string(),
                }
            })
            .collect();
    }
    let frames = file
        .frames
        .into_iter()
        .map(|f| {
            let idx = f.frame_index;
            (
                idx,
                f.people
                    .into_iter()
                    .map(|p| SkeletonFrame::new(p.keypoints, idx, -1))
                    .collect(),
            )
        })
        .collect();
    associate_tracks(frames, source_id)
}

struct OpenTrack {
    id: i64,
    frames: Vec<SkeletonFrame>,
    last_box: Option<DetectionBox>,
    last_frame: i64,
}

/// Greedy frame-to-frame association by bounding-box IoU of the detected
/// keypoints. Pairs are taken in order of decreasing IoU; pairs under
/// [`IOU_THRESHOLD`] never match, and a track that goes more than
/// [`MAX_MISSING_FRAMES`] frames without a match is closed.
pub fn associate_tracks(
    mut frames: Vec<(i64, Vec<SkeletonFrame>)>,
    source_id: &str,
) -> Vec<TrackedSequence> {
    frames.sort_by_key(|f| f.0);
    let mut tracks: Vec<OpenTrack> = Vec::new();

    for (frame_index, people) in frames {
        let boxes: Vec<Option<DetectionBox>> = people.iter().map(DetectionBox::of).collect();
        let live: Vec<usize> = tracks
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                t.last_box.is_some()
                    && t.last_frame < frame_index
                    && frame_index - t.last_frame - 1 <= MAX_MISSING_FRAMES
            })
            .map(|(i, _)| i)
            .collect();

        let mut pairs = Vec::new();
        for (d, b) in boxes.iter().enumerate() {
            let Some(b) = b else { continue };
            for &t in &live {
                let iou = b.iou(tracks[t].last_box.as_ref().unwrap());
                if iou >= IOU_THRESHOLD {
                    pairs.push((iou, d, t));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut det_track: Vec<Option<usize>> = vec![None; people.len()];
        let mut track_used = vec![false; tracks.len()];
        for (_, d, t) in pairs {
            if det_track[d].is_none() && !track_used[t] {
                det_track[d] = Some(t);
                track_used[t] = true;
            }
        }

        for (d, mut skel) in people.into_iter().enumerate() {
            skel.frame_index = frame_index;
            match det_track[d] {
                Some(t) => {
                    let track = &mut tracks[t];
                    skel.track_id = track.id;
                    track.frames.push(skel);
                    track.last_box = boxes[d];
                    track.last_frame = frame_index;
                }
                None => {
                    let id = tracks.len() as i64;
                    skel.track_id = id;
                    tracks.push(OpenTrack {
                        id,
                        frames: vec![skel],
                        last_box: boxes[d],
                        last_frame: frame_index,
                    });
                }
            }
        }
    }

    tracks
        .into_iter()
        .map(|t| TrackedSequence {
            track_id: t.id,
            frames: t.frames,
            source_id: source_id.to_string(),
        })
        .collect()
}

/// Drops frames with no detected body keypoints, splits wherever
/// [`BREAK_GAP`] or more consecutive frame indices are missing, and keeps
/// segments of at least [`MIN_SEGMENT_FRAMES`] frames.
pub fn segment_sequences(track: &TrackedSequence) -> Vec<TrackedSequence> {
    let mut segments = Vec::new();
    let mut current: Vec<SkeletonFrame> = Vec::new();

    let mut flush = |current: &mut Vec<SkeletonFrame>| {
        if current.len() >= MIN_SEGMENT_FRAMES {
            segments.push(TrackedSequence {
                track_id: track.track_id,
                frames: std::mem::take(current),
                source_id: track.source_id.clone(),
            });
        } else {
            current.clear();
        }
    };

    for frame in track.frames.iter().filter(|f| detected_body_count(f) > 0) {
        if let Some(prev) = current.last() {
            if frame.frame_index - prev.frame_index - 1 >= BREAK_GAP {
                flush(&mut current);
            }
        }
        current.push(frame.clone());
    }
    flush(&mut current);
    segments
}
