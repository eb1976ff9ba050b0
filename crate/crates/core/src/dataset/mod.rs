//! Fall annotations, frame and clip labeling, train/test splitting and the
//! synthetic motion corpus.

mod split;
mod synth;

pub use split::{split, SplitMode, TRAIN_FRACTION};
pub use synth::{
    synth_corpus, synth_motion, CorpusSpec, MotionKind, MotionScript, SynthVideo, FALL_FRAMES,
    PRECURSOR_FRAMES, RISE_FRAMES, RISE_PREP_FRAMES,
};

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassLabel;
use crate::error::{Error, Result};

/// Clip length used for clip-level labels (3 s at 25 fps).
pub const CLIP_LENGTH: i64 = 75;

/// Frame stamps of one video: falling start, falling end and getting up.
/// All three are zero for a video without a fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoAnnotation {
    pub s_fs: i64,
    pub s_fe: i64,
    pub s_gu: i64,
    pub n_frames: i64,
}

impl VideoAnnotation {
    pub fn no_fall(n_frames: i64) -> Self {
        VideoAnnotation {
            s_fs: 0,
            s_fe: 0,
            s_gu: 0,
            n_frames,
        }
    }

    pub fn has_fall(&self) -> bool {
        self.s_fs != 0
    }

    pub fn validate(&self) -> Result<()> {
        let none = self.s_fs == 0 && self.s_fe == 0 && self.s_gu == 0;
        let ordered = 1 <= self.s_fs
            && self.s_fs <= self.s_fe
            && self.s_fe <= self.s_gu
            && self.s_gu <= self.n_frames;
        if self.n_frames < 0 || !(none || ordered) {
            return Err(Error::Annotation(format!(
                "stamps must be all zero or 1 <= S_fs <= S_fe <= S_gu <= n_frames: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationPrinciple {
    /// `[S_fs, S_fe]`: only the act of falling.
    P1,
    /// `[S_fs, S_gu]`: falling and lying.
    P2,
    /// `[S_fe, S_gu]`: already fallen.
    #[default]
    P3,
}

impl AnnotationPrinciple {
    pub fn interval(self, ann: &VideoAnnotation) -> (i64, i64) {
        match self {
            AnnotationPrinciple::P1 => (ann.s_fs, ann.s_fe),
            AnnotationPrinciple::P2 => (ann.s_fs, ann.s_gu),
            AnnotationPrinciple::P3 => (ann.s_fe, ann.s_gu),
        }
    }
}

impl std::str::FromStr for AnnotationPrinciple {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(AnnotationPrinciple::P1),
            "p2" => Ok(AnnotationPrinciple::P2),
            "p3" => Ok(AnnotationPrinciple::P3),
            other => Err(Error::Config(format!("unknown annotation principle {other:?}"))),
        }
    }
}

/// Label of a single frame (1-based index) under `principle`.
pub fn frame_label(ann: &VideoAnnotation, principle: AnnotationPrinciple, frame: i64) -> ClassLabel {
    if !ann.has_fall() {
        return ClassLabel::NoFall;
    }
    let (lo, hi) = principle.interval(ann);
    if lo <= frame && frame <= hi {
        ClassLabel::Fall
    } else {
        ClassLabel::NoFall
    }
}

/// Labels for frames `1..=n_frames`.
pub fn frame_labels(ann: &VideoAnnotation, principle: AnnotationPrinciple) -> Result<Vec<ClassLabel>> {
    ann.validate()?;
    Ok((1..=ann.n_frames)
        .map(|f| frame_label(ann, principle, f))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClipLabel {
    Fall,
    NoFall,
    Excluded,
}

/// Clip `[s_l, s_r]` is a fall clip when it contains the whole falling
/// motion and ends before the actor gets up, a no-fall clip when it lies
/// entirely before the fall or after getting up, and excluded otherwise.
/// The fall test takes precedence in the degenerate case where both hold.
pub fn clip_label(s_l: i64, s_r: i64, ann: &VideoAnnotation) -> Result<ClipLabel> {
    ann.validate()?;
    if s_r - s_l != CLIP_LENGTH {
        return Err(Error::InvalidInput(format!(
            "clip [{s_l}, {s_r}] must span {CLIP_LENGTH} frames"
        )));
    }
    Ok(
        if s_l <= ann.s_fs && ann.s_fe <= s_r && s_r <= ann.s_gu {
            ClipLabel::Fall
        } else if s_r <= ann.s_fs || s_l >= ann.s_gu {
            ClipLabel::NoFall
        } else {
            ClipLabel::Excluded
        },
    )
}

#[derive(Debug, Deserialize, Serialize)]
struct AnnotationRow {
    source_id: String,
    s_fs: i64,
    s_fe: i64,
    s_gu: i64,
    n_frames: i64,
}

/// Reads `source_id,s_fs,s_fe,s_gu,n_frames` records (with header).
pub fn read_annotations<R: Read>(input: R) -> Result<BTreeMap<String, VideoAnnotation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: AnnotationRow = row?;
        let ann = VideoAnnotation {
            s_fs: row.s_fs,
            s_fe: row.s_fe,
            s_gu: row.s_gu,
            n_frames: row.n_frames,
        };
        ann.validate()?;
        out.insert(row.source_id, ann);
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(out: W, anns: &BTreeMap<String, VideoAnnotation>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, a) in anns {
        w.serialize(AnnotationRow {
            source_id: id.clone(),
            s_fs: a.s_fs,
            s_fe: a.s_fe,
            s_gu: a.s_gu,
            n_frames: a.n_frames,
        })?;
    }
    w.flush().map_err(|e| Error::io("<annotations>", e))?;
    Ok(())
}
