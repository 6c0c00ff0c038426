use crate::error::Result;
use crate::real::Real;

use super::dualquat::{DualQuat, Quat};
use super::model::{DofKind, Skeleton};

/// Per-joint skinning transforms: posed global frame times inverse rest frame.
pub type DualQuaternionSet<T> = Vec<DualQuat<T>>;

/// Joint-local transforms `T(dof translations) · Rest · R(dof_1) · R(dof_2) ⋯`.
///
/// Rotational DoFs are applied in the order they appear in the DoF map;
/// translational DoFs are expressed in the parent frame.
pub fn local_transforms<T: Real>(skeleton: &Skeleton, pose: &[T]) -> Result<Vec<DualQuat<T>>> {
    skeleton.check_pose(pose)?;
    let n = skeleton.joint_count();
    let mut shift = vec![crate::linalg::Vec3::<T>::zero(); n];
    let mut rot = vec![Quat::<T>::identity(); n];
    for (dof, &value) in skeleton.dofs.iter().zip(pose) {
        match dof.kind {
            DofKind::Translational => shift[dof.joint][dof.axis.index()] += value,
            DofKind::Rotational => {
                rot[dof.joint] = rot[dof.joint] * Quat::from_axis_angle(dof.axis.unit(), value);
            }
        }
    }
    Ok(skeleton
        .joints
        .iter()
        .enumerate()
        .map(|(j, joint)| {
            let rest = DualQuat::from_rotation_translation(joint.rest_rotation(), joint.rest_translation());
            DualQuat::from_translation(shift[j]) * rest * DualQuat::from_rotation_translation(rot[j], crate::linalg::Vec3::zero())
        })
        .collect())
}

/// Composes local transforms parent-to-child into world-space joint frames.
pub fn compose_global<T: Real>(skeleton: &Skeleton, local: &[DualQuat<T>]) -> Vec<DualQuat<T>> {
    let mut global: Vec<DualQuat<T>> = Vec::with_capacity(local.len());
    for (j, joint) in skeleton.joints.iter().enumerate() {
        let g = match joint.parent_index() {
            Some(p) => (global[p] * local[j]).normalize(),
            None => local[j],
        };
        global.push(g);
    }
    global
}

pub fn global_transforms<T: Real>(skeleton: &Skeleton, pose: &[T]) -> Result<Vec<DualQuat<T>>> {
    Ok(compose_global(skeleton, &local_transforms(skeleton, pose)?))
}

/// Skinning transforms for `pose`; identity for every joint at the zero pose.
pub fn forward_kinematics<T: Real>(skeleton: &Skeleton, pose: &[T]) -> Result<DualQuaternionSet<T>> {
    let posed = global_transforms(skeleton, pose)?;
    let rest = global_transforms(skeleton, &vec![T::zero(); skeleton.dof_count()])?;
    Ok(posed
        .iter()
        .zip(&rest)
        .map(|(p, r)| (*p * r.inverse()).normalize())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Mat3, Vec3};
    use crate::skeleton::{Axis, Dof, Joint};

    fn chain() -> Skeleton {
        let joint = |name: &str, parent: i64, t: [f64; 3]| Joint {
            name: name.into(),
            parent,
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: t,
        };
        let dof = |joint, axis, kind| Dof { joint, axis, kind, range: None };
        Skeleton::new(
            vec![joint("root", -1, [0.0, 1.0, 0.0]), joint("mid", 0, [1.0, 0.0, 0.0]), joint("tip", 1, [1.0, 0.0, 0.0])],
            vec![
                dof(0, Axis::X, DofKind::Translational),
                dof(0, Axis::Y, DofKind::Translational),
                dof(0, Axis::Z, DofKind::Translational),
                dof(1, Axis::Z, DofKind::Rotational),
                dof(1, Axis::Y, DofKind::Rotational),
            ],
        )
        .unwrap()
    }

    fn assert_unit(dqs: &[DualQuat<f64>]) {
        for q in dqs {
            assert!((q.real.norm() - 1.0).abs() < 1e-9);
            assert!(q.real.dot(q.dual).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_pose_is_identity() {
        let s = chain();
        let fk = forward_kinematics(&s, &[0.0; 5]).unwrap();
        for q in &fk {
            assert!((q.transform_point(Vec3::new(0.3, -0.2, 0.9)) - Vec3::new(0.3, -0.2, 0.9)).norm() < 1e-15);
        }
        assert_unit(&fk);
    }

    #[test]
    fn root_translation_moves_every_joint() {
        let s = chain();
        let t = Vec3::new(0.5, -0.25, 2.0);
        let fk = forward_kinematics(&s, &[t.x, t.y, t.z, 0.0, 0.0]).unwrap();
        let p = Vec3::new(1.0, 2.0, 3.0);
        for q in &fk {
            assert!((q.transform_point(p) - (p + t)).norm() < 1e-14);
        }
    }

    #[test]
    fn quarter_turn_matches_homogeneous_matrices() {
        let s = chain();
        let pose = [0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0];
        let global = global_transforms(&s, &pose).unwrap();
        // 4×4 oracle: root at (0,1,0), mid offset (1,0,0) rotated 90° about z,
        // tip offset (1,0,0) in mid's frame.
        let mul = |a: [[f64; 4]; 4], b: [[f64; 4]; 4]| {
            let mut c = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        let translate = |x: f64, y: f64, z: f64| [[1.0, 0.0, 0.0, x], [0.0, 1.0, 0.0, y], [0.0, 0.0, 1.0, z], [0.0, 0.0, 0.0, 1.0]];
        let rot_z = [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        let m_tip = mul(mul(mul(translate(0.0, 1.0, 0.0), translate(1.0, 0.0, 0.0)), rot_z), translate(1.0, 0.0, 0.0));
        let tip = global[2].translation();
        assert!((tip - Vec3::new(m_tip[0][3], m_tip[1][3], m_tip[2][3])).norm() < 1e-12);
        assert!((tip - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
        let r = global[2].to_rigid().to_mat4();
        for i in 0..4 {
            for j in 0..4 {
                assert!((r[i][j] - m_tip[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_order_follows_dof_map() {
        let s = chain();
        let (a, b) = (0.7, -0.4);
        let global = global_transforms(&s, &[0.0, 0.0, 0.0, a, b]).unwrap();
        let expected = Mat3::<f64>::rotation_z(a) * Mat3::rotation_y(b);
        let got = global[1].to_rigid().rotation;
        for i in 0..3 {
            for j in 0..3 {
                assert!((got.rows[i][j] - expected.rows[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recomposition_from_locals_agrees() {
        let s = chain();
        let pose = [0.1, -0.3, 0.2, 1.3, -0.8];
        let local = local_transforms(&s, &pose).unwrap();
        let rigid: Vec<_> = local.iter().map(|q| q.to_rigid()).collect();
        let tip = rigid[0].compose(&rigid[1]).compose(&rigid[2]);
        let g = global_transforms(&s, &pose).unwrap();
        assert!((g[2].translation() - tip.translation).norm() < 1e-12);
        assert_unit(&forward_kinematics(&s, &pose).unwrap());
    }

    #[test]
    fn wrong_pose_length_is_rejected() {
        assert!(forward_kinematics(&chain(), &[0.0; 3]).is_err());
    }
}
