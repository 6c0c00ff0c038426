use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::Vec3;
use crate::real::Real;

use super::dualquat::Quat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit<T: Real>(self) -> Vec3<T> {
        match self {
            Axis::X => Vec3::unit_x(),
            Axis::Y => Vec3::unit_y(),
            Axis::Z => Vec3::unit_z(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofKind {
    Rotational,
    Translational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dof {
    pub joint: usize,
    pub axis: Axis,
    #[serde(rename = "type")]
    pub kind: DofKind,
    /// Optional slider range used by interactive front ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

/// Joint with its rest transform relative to the parent joint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    /// `-1` for the root.
    pub parent: i64,
    /// Rest rotation as a unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_rotation")]
    pub rotation: [f64; 4],
    /// Rest offset from the parent joint, in meters.
    #[serde(default)]
    pub translation: [f64; 3],
}

fn identity_rotation() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Joint {
    pub fn parent_index(&self) -> Option<usize> {
        usize::try_from(self.parent).ok()
    }

    pub fn rest_rotation<T: Real>(&self) -> Quat<T> {
        let [w, x, y, z] = self.rotation.map(T::lit);
        Quat::new(w, x, y, z).normalize()
    }

    pub fn rest_translation<T: Real>(&self) -> Vec3<T> {
        let [x, y, z] = self.translation;
        Vec3::from_f64(x, y, z)
    }
}

/// Joint hierarchy plus the map from pose-vector entries to joint axes.
///
/// JSON layout:
/// ```json
/// {"joints": [{"name": "root", "parent": -1, "rotation": [1,0,0,0], "translation": [0,0,0]}],
///  "dofs":   [{"joint": 0, "axis": "x", "type": "translational"}]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joints: Vec<Joint>,
    pub dofs: Vec<Dof>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>, dofs: Vec<Dof>) -> Result<Self> {
        let s = Self { joints, dofs };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let mut roots = 0;
        for (i, j) in self.joints.iter().enumerate() {
            match j.parent {
                -1 => roots += 1,
                p if p >= 0 && (p as usize) < i => {}
                p => {
                    return Err(Error::InvalidSkeleton(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        j.name
                    )))
                }
            }
            let n = j.rotation.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(n > 1e-9) || !n.is_finite() {
                return Err(Error::InvalidSkeleton(format!("joint {i} has a zero rest rotation")));
            }
        }
        if roots != 1 {
            return Err(Error::InvalidSkeleton(format!("expected exactly one root, found {roots}")));
        }
        if self.dofs.is_empty() {
            return Err(Error::InvalidSkeleton("skeleton has no degrees of freedom".into()));
        }
        if let Some((i, d)) = self.dofs.iter().enumerate().find(|(_, d)| d.joint >= self.joints.len()) {
            return Err(Error::InvalidSkeleton(format!("dof {i} references missing joint {}", d.joint)));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    pub fn root(&self) -> usize {
        self.joints.iter().position(|j| j.parent < 0).unwrap_or(0)
    }

    /// Pose-vector indices of the root's translational DoFs.
    pub fn root_translation_dofs(&self) -> Vec<usize> {
        let root = self.root();
        (0..self.dofs.len())
            .filter(|&i| self.dofs[i].joint == root && self.dofs[i].kind == DofKind::Translational)
            .collect()
    }

    /// Root translation encoded in `pose`.
    pub fn root_translation<T: Real>(&self, pose: &[T]) -> Vec3<T> {
        let mut t = Vec3::zero();
        for i in self.root_translation_dofs() {
            t[self.dofs[i].axis.index()] += pose[i];
        }
        t
    }

    pub fn check_pose<T>(&self, pose: &[T]) -> Result<()> {
        if pose.len() != self.dofs.len() {
            return Err(Error::dim("pose length", self.dofs.len(), pose.len()));
        }
        Ok(())
    }
}
