use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Whole videos go to one side.
    #[default]
    ByVideo,
    /// Samples are shuffled individually.
    PerSample,
}

/// Seeded train/test split. The train side receives `floor(fraction · n)`
/// samples; in `ByVideo` mode whole groups are added in shuffled order until
/// that count is reached, so the train side may overshoot by part of a group.
pub fn split<T, K>(
    samples: Vec<T>,
    fraction: f64,
    seed: u64,
    mode: SplitMode,
    key: K,
) -> (Vec<T>, Vec<T>)
where
    K: Fn(&T) -> String,
{
    let n = samples.len();
    let target = (fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    match mode {
        SplitMode::PerSample => {
            let mut samples = samples;
            samples.shuffle(&mut rng);
            let test = samples.split_off(target.min(n));
            (samples, test)
        }
        SplitMode::ByVideo => {
            let mut groups: BTreeMap<String, Vec<T>> = BTreeMap::new();
            for s in samples {
                groups.entry(key(&s)).or_default().push(s);
            }
            let mut groups: Vec<Vec<T>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for g in groups {
                if train.len() < target {
                    train.extend(g);
                } else {
                    test.extend(g);
                }
            }
            (train, test)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_videos_seven_three() {
        let samples: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
        for mode in [SplitMode::ByVideo, SplitMode::PerSample] {
            let (tr, te) = split(samples.clone(), TRAIN_FRACTION, 3, mode, |s| s.clone());
            assert_eq!((tr.len(), te.len()), (7, 3));
        }
    }

    #[test]
    fn seeded() {
        let samples: Vec<(String, usize)> = (0..40).map(|i| (format!("v{}", i % 9), i)).collect();
        let a = split(samples.clone(), 0.7, 11, SplitMode::ByVideo, |s| s.0.clone());
        let b = split(samples.clone(), 0.7, 11, SplitMode::ByVideo, |s| s.0.clone());
        assert_eq!(a, b);
        let train_ids: std::collections::HashSet<_> = a.0.iter().map(|s| &s.0).collect();
        assert!(a.1.iter().all(|s| !train_ids.contains(&s.0)));
        assert_eq!(a.0.len() + a.1.len(), 40);
    }

    #[test]
    fn single_video_stays_together() {
        let samples: Vec<(String, usize)> = (0..12).map(|i| ("only".to_string(), i)).collect();
        let (tr, te) = split(samples, 0.7, 1, SplitMode::ByVideo, |s| s.0.clone());
        assert!(tr.is_empty() || te.is_empty());
        assert_eq!(tr.len() + te.len(), 12);
    }
}
