use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::real::Real;

use super::model::Skeleton;

/// Default number of poses in a motion window.
pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_FPS: f64 = 25.0;

fn default_fps() -> f64 {
    DEFAULT_FPS
}

/// Motion file: `{"fps": 25, "frames": [[θ_0...], [θ_1...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub frames: Vec<Vec<f64>>,
}

impl MotionSequence {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if let Some(first) = m.frames.first() {
            if let Some(bad) = m.frames.iter().position(|f| f.len() != first.len()) {
                return Err(Error::InvalidArgument(format!(
                    "motion frame {bad} has {} values, frame 0 has {}",
                    m.frames[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Window of `k` poses ending at frame `f`. Frames before the start of the
    /// sequence repeat frame 0.
    pub fn window<T: Real>(&self, f: usize, k: usize) -> Result<SkeletalMotion<T>> {
        if f >= self.frames.len() {
            return Err(Error::InvalidArgument(format!(
                "frame {f} outside sequence of {} frames",
                self.frames.len()
            )));
        }
        let poses = (0..k.max(1))
            .rev()
            .map(|back| self.frames[f.saturating_sub(back)].iter().map(|&x| T::lit(x)).collect())
            .collect();
        SkeletalMotion::new(poses, f)
    }
}

/// `k` consecutive pose vectors, oldest first; the last one is frame `frame`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletalMotion<T> {
    poses: Vec<Vec<T>>,
    frame: usize,
}

impl<T: Real> SkeletalMotion<T> {
    pub fn new(poses: Vec<Vec<T>>, frame: usize) -> Result<Self> {
        let p = poses.first().ok_or(Error::Empty("motion window"))?.len();
        if let Some(bad) = poses.iter().find(|q| q.len() != p) {
            return Err(Error::dim("pose length in window", p, bad.len()));
        }
        Ok(Self { poses, frame })
    }

    pub fn single(pose: Vec<T>) -> Self {
        Self { poses: vec![pose], frame: 0 }
    }

    pub fn poses(&self) -> &[Vec<T>] {
        &self.poses
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    /// Pose of frame `f` (the newest in the window).
    pub fn current(&self) -> &[T] {
        self.poses.last().expect("window is never empty")
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Window poses concatenated oldest to newest (`k·P` values).
    pub fn flatten(&self) -> Vec<T> {
        self.poses.concat()
    }
}

/// Shifts the root translation of every pose so that frame `f` sits at the
/// origin. Rotational DoFs are untouched.
pub fn normalize_motion<T: Real>(skeleton: &Skeleton, motion: &SkeletalMotion<T>) -> Result<SkeletalMotion<T>> {
    for pose in motion.poses() {
        skeleton.check_pose(pose)?;
    }
    let dofs = skeleton.root_translation_dofs();
    let reference: Vec<T> = dofs.iter().map(|&i| motion.current()[i]).collect();
    let poses = motion
        .poses()
        .iter()
        .map(|pose| {
            let mut p = pose.clone();
            for (&i, &r) in dofs.iter().zip(&reference) {
                p[i] -= r;
            }
            p
        })
        .collect();
    Ok(SkeletalMotion { poses, frame: motion.frame })
}
