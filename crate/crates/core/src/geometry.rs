//! Planar poses, a serial revolute arm, and the distance primitives that the
//! cost functions are built from. Everything here is a pure function of its
//! inputs and returns analytic gradients alongside values.

use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Wrap an angle to the half-open interval (-pi, pi].
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r > std::f64::consts::PI {
        r - TWO_PI
    } else {
        r
    }
}

/// A pose in the plane: position in meters, heading in radians.
///
/// `theta` is wrapped to (-pi, pi] by every constructor and operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    #[inline]
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    #[inline]
    pub fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    /// SE(2) composition `self * other`.
    #[inline]
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    /// The pose `p` such that `self * p = identity`.
    #[inline]
    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)
    }

    /// Apply this pose as a transform to a point.
    #[inline]
    pub fn transform(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * p.0 - s * p.1, self.y + s * p.0 + c * p.1)
    }

    #[inline]
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Translational and rotational error between two poses.
///
/// Returns `(trans_err, rot_err)` with `trans_err` the Euclidean distance of
/// the positions and `rot_err` the absolute wrapped angle difference. Both
/// are nonnegative and symmetric in the arguments.
#[inline]
pub fn pose_error(a: &Pose2, b: &Pose2) -> (f64, f64) {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    ((dx * dx + dy * dy).sqrt(), wrap_angle(a.theta - b.theta).abs())
}

/// An oriented rectangle: static obstacle or surface footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub center: Pose2,
    pub half_extents: (f64, f64),
}

impl Box2 {
    pub fn new(center: Pose2, half_extents: (f64, f64)) -> Self {
        assert!(
            half_extents.0 > 0.0 && half_extents.1 > 0.0,
            "box half extents must be positive"
        );
        Self {
            center,
            half_extents,
        }
    }

    /// Axis-aligned box from world-frame lower/upper corners.
    pub fn from_corners(lower: (f64, f64), upper: (f64, f64)) -> Self {
        Box2::new(
            Pose2::new((lower.0 + upper.0) / 2.0, (lower.1 + upper.1) / 2.0, 0.0),
            ((upper.0 - lower.0) / 2.0, (upper.1 - lower.1) / 2.0),
        )
    }

    /// Signed distance from a point to the box boundary (negative inside),
    /// and its gradient with respect to the point.
    ///
    /// The gradient at interior ties and corners uses the subgradient of the
    /// active face; on the satisfied (zero-cost) side of clamps it is zero.
    pub fn signed_distance(&self, p: (f64, f64)) -> (f64, (f64, f64)) {
        // Work in the box frame.
        let inv = self.center.inverse();
        let local = inv.transform(p);
        let qx = local.0.abs() - self.half_extents.0;
        let qy = local.1.abs() - self.half_extents.1;

        let (d, glocal) = if qx > 0.0 || qy > 0.0 {
            // Outside: distance to the nearest face/corner.
            let ox = qx.max(0.0);
            let oy = qy.max(0.0);
            let d = (ox * ox + oy * oy).sqrt();
            let gx = if d > 0.0 { ox / d * local.0.signum() } else { 0.0 };
            let gy = if d > 0.0 { oy / d * local.1.signum() } else { 0.0 };
            (d, (gx, gy))
        } else {
            // Inside: distance to the closest face; gradient along that axis.
            if qx >= qy {
                (qx, (local.0.signum(), 0.0))
            } else {
                (qy, (0.0, local.1.signum()))
            }
        };
        // Rotate the gradient back to the world frame.
        let (s, c) = self.center.theta.sin_cos();
        (d, (c * glocal.0 - s * glocal.1, s * glocal.0 + c * glocal.1))
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.0 * self.half_extents.1
    }
}

/// Hinge penetration cost of a sphere against a box.
///
/// `cost = max(0, radius + activation - signed_distance(center))`, so the
/// cost is zero once the sphere clears the box by the activation margin.
/// Returns the gradient of the cost with respect to the sphere center;
/// it is zero when the hinge is clamped. Descending the returned gradient
/// moves the sphere out of penetration.
pub fn sphere_box_penetration(
    center: (f64, f64),
    radius: f64,
    b: &Box2,
    activation: f64,
) -> (f64, (f64, f64)) {
    debug_assert!(radius > 0.0 && activation >= 0.0);
    let (sd, g) = b.signed_distance(center);
    let cost = radius + activation - sd;
    if cost > 0.0 {
        (cost, (-g.0, -g.1))
    } else {
        (0.0, (0.0, 0.0))
    }
}

/// Euclidean distance of a vector from an axis-aligned interval box.
///
/// Zero inside (and on) the bounds. The gradient is zero wherever the value
/// is within bounds and points along the clamped excess otherwise.
pub fn dist_from_bounds(vals: &[f64], lower: &[f64], upper: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(vals.len(), lower.len(), "dist_from_bounds dimension mismatch");
    assert_eq!(vals.len(), upper.len(), "dist_from_bounds dimension mismatch");
    let mut excess = vec![0.0; vals.len()];
    let mut sq = 0.0;
    for i in 0..vals.len() {
        debug_assert!(lower[i] <= upper[i]);
        let lo = lower[i] - vals[i];
        let hi = vals[i] - upper[i];
        let e = lo.max(hi).max(0.0);
        // Signed excess: negative below the lower bound, positive above.
        excess[i] = if lo > 0.0 && lo >= hi { -e } else if hi > 0.0 { e } else { 0.0 };
        sq += e * e;
    }
    let d = sq.sqrt();
    let grad = if d > 0.0 {
        excess.iter().map(|e| e / d).collect()
    } else {
        vec![0.0; vals.len()]
    };
    (d, grad)
}

/// Sphere approximation of a movable object, in the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSet {
    /// (offset in object frame, radius), all radii positive.
    pub spheres: Vec<((f64, f64), f64)>,
}

impl SphereSet {
    pub fn new(spheres: Vec<((f64, f64), f64)>) -> Self {
        assert!(!spheres.is_empty(), "sphere set must be nonempty");
        assert!(spheres.iter().all(|s| s.1 > 0.0), "sphere radii must be positive");
        Self { spheres }
    }

    pub fn single(radius: f64) -> Self {
        SphereSet::new(vec![((0.0, 0.0), radius)])
    }

    /// Radius of the smallest origin-centered disc containing all spheres.
    pub fn bounding_radius(&self) -> f64 {
        self.spheres
            .iter()
            .map(|((x, y), r)| (x * x + y * y).sqrt() + r)
            .fold(0.0, f64::max)
    }

    /// Sphere centers in the world frame for an object at `pose`.
    pub fn world_centers(&self, pose: &Pose2) -> Vec<((f64, f64), f64)> {
        self.spheres
            .iter()
            .map(|(off, r)| (pose.transform(*off), *r))
            .collect()
    }
}

/// A serial planar revolute arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub base_pose: Pose2,
    pub link_lengths: Vec<f64>,
    pub joint_lower: Vec<f64>,
    pub joint_upper: Vec<f64>,
    /// Per link: (offset along the link from its proximal joint, radius).
    pub collision_spheres: Vec<Vec<(f64, f64)>>,
}

/// Forward-kinematics result: end-effector pose plus the intermediate frames
/// needed by collision checks and Jacobians.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub ee_pose: Pose2,
    /// k+1 points: base position followed by each link's distal endpoint.
    pub joint_positions: Vec<(f64, f64)>,
    /// Cumulative world angle of each link.
    pub link_angles: Vec<f64>,
    /// World-frame collision sphere centers with (link index, radius).
    pub sphere_centers: Vec<((f64, f64), f64, usize)>,
}

impl KinematicChain {
    pub fn new(
        base_pose: Pose2,
        link_lengths: Vec<f64>,
        joint_lower: Vec<f64>,
        joint_upper: Vec<f64>,
        collision_spheres: Vec<Vec<(f64, f64)>>,
    ) -> Self {
        let k = link_lengths.len();
        assert!(k >= 1, "chain needs at least one link");
        assert!(link_lengths.iter().all(|&l| l > 0.0), "link lengths must be positive");
        assert_eq!(joint_lower.len(), k);
        assert_eq!(joint_upper.len(), k);
        assert!(
            joint_lower.iter().zip(&joint_upper).all(|(l, u)| l < u),
            "joint_lower must be below joint_upper"
        );
        assert_eq!(collision_spheres.len(), k);
        assert!(
            collision_spheres.iter().all(|s| !s.is_empty()),
            "every link needs at least one collision sphere"
        );
        Self {
            base_pose,
            link_lengths,
            joint_lower,
            joint_upper,
            collision_spheres,
        }
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Forward kinematics with cumulative joint angles, links tip to tail.
    pub fn forward_kinematics(&self, q: &[f64]) -> FkResult {
        let k = self.dof();
        assert_eq!(q.len(), k, "configuration length mismatch");
        let mut joint_positions = Vec::with_capacity(k + 1);
        let mut link_angles = Vec::with_capacity(k);
        let mut sphere_centers = Vec::new();
        let (mut px, mut py) = self.base_pose.position();
        joint_positions.push((px, py));
        let mut angle = self.base_pose.theta;
        for i in 0..k {
            angle += q[i];
            link_angles.push(angle);
            let (s, c) = angle.sin_cos();
            for &(off, r) in &self.collision_spheres[i] {
                sphere_centers.push(((px + off * c, py + off * s), r, i));
            }
            px += self.link_lengths[i] * c;
            py += self.link_lengths[i] * s;
            joint_positions.push((px, py));
        }
        FkResult {
            ee_pose: Pose2::new(px, py, angle),
            joint_positions,
            link_angles,
            sphere_centers,
        }
    }

    /// Analytic Jacobian of the end-effector pose, 3 rows (x, y, theta) by
    /// k columns, flattened row-major. The theta row is all ones.
    pub fn fk_jacobian(&self, q: &[f64]) -> Vec<f64> {
        let k = self.dof();
        let fk = self.forward_kinematics(q);
        let (ex, ey) = fk.ee_pose.position();
        let mut jac = vec![0.0; 3 * k];
        for j in 0..k {
            let (jx, jy) = fk.joint_positions[j];
            jac[j] = -(ey - jy);
            jac[k + j] = ex - jx;
            jac[2 * k + j] = 1.0;
        }
        jac
    }

    /// Gradient of a world collision-sphere center with respect to joint j:
    /// the center rotates about joint j for j <= its link, else fixed.
    #[inline]
    pub fn sphere_center_jacobian_col(
        center: (f64, f64),
        joint_position: (f64, f64),
    ) -> (f64, f64) {
        (-(center.1 - joint_position.1), center.0 - joint_position.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn test_chain(links: Vec<f64>) -> KinematicChain {
        let k = links.len();
        KinematicChain::new(
            Pose2::identity(),
            links,
            vec![-PI; k],
            vec![PI; k],
            vec![vec![(0.1, 0.03)]; k],
        )
    }

    #[test]
    fn compose_identity_and_translation() {
        let p = Pose2::new(1.0, 2.0, 0.3);
        let r = Pose2::identity().compose(&p);
        assert_abs_diff_eq!(r.x, 1.0);
        assert_abs_diff_eq!(r.y, 2.0);
        assert_abs_diff_eq!(r.theta, 0.3);

        let a = Pose2::new(1.0, 0.0, 0.0);
        let r = a.compose(&a);
        assert_abs_diff_eq!(r.x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.theta, 0.0);
    }

    #[test]
    fn compose_rotates_translation() {
        let a = Pose2::new(0.0, 0.0, PI / 2.0);
        let b = Pose2::new(1.0, 0.0, 0.0);
        let r = a.compose(&b);
        assert_abs_diff_eq!(r.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.theta, PI / 2.0);
    }

    #[test]
    fn compose_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Pose2::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-PI..PI),
            );
            let r = p.compose(&p.inverse());
            assert!(r.x.abs() < 1e-12 && r.y.abs() < 1e-12 && r.theta.abs() < 1e-12);
        }
    }

    #[test]
    fn pose_error_examples() {
        let a = Pose2::new(1.0, 1.0, PI);
        assert_eq!(pose_error(&a, &a), (0.0, 0.0));

        let (t, r) = pose_error(&Pose2::identity(), &Pose2::new(0.3, 0.4, 0.0));
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0);

        // pi and -pi are the same heading.
        let (t, r) = pose_error(&Pose2::new(1.0, 1.0, PI), &Pose2::new(1.0, 1.0, -PI));
        assert_abs_diff_eq!(t, 0.0);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fk_straight_and_bent() {
        let chain = test_chain(vec![1.0, 1.0, 1.0]);
        let fk = chain.forward_kinematics(&[0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(fk.ee_pose.x, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fk.ee_pose.y, 0.0);
        assert_abs_diff_eq!(fk.ee_pose.theta, 0.0);

        let fk = chain.forward_kinematics(&[PI / 2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(fk.ee_pose.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fk.ee_pose.y, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fk.ee_pose.theta, PI / 2.0);

        let fk = chain.forward_kinematics(&[PI / 2.0, -PI / 2.0, 0.0]);
        assert_abs_diff_eq!(fk.ee_pose.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fk.ee_pose.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fk.ee_pose.theta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fk_invariant_to_two_pi_joint_shift() {
        let chain = test_chain(vec![0.5, 0.4]);
        let q = [0.3, -0.7];
        let shifted = [0.3 + TWO_PI, -0.7];
        let a = chain.forward_kinematics(&q);
        let b = chain.forward_kinematics(&shifted);
        assert_abs_diff_eq!(a.ee_pose.x, b.ee_pose.x, epsilon = 1e-12);
        assert_abs_diff_eq!(a.ee_pose.y, b.ee_pose.y, epsilon = 1e-12);
        assert_abs_diff_eq!(
            wrap_angle(a.ee_pose.theta - b.ee_pose.theta),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn jacobian_theta_row_and_single_link() {
        let chain = test_chain(vec![1.0]);
        let jac = chain.fk_jacobian(&[0.0]);
        assert_abs_diff_eq!(jac[0], 0.0);
        assert_abs_diff_eq!(jac[1], 1.0);
        assert_abs_diff_eq!(jac[2], 1.0);

        let chain = test_chain(vec![1.0, 0.7, 0.4]);
        let jac = chain.fk_jacobian(&[0.3, 0.2, -0.5]);
        for j in 0..3 {
            assert_abs_diff_eq!(jac[2 * 3 + j], 1.0);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let chain = test_chain(vec![0.8, 0.6, 0.4]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.5..2.5)).collect();
            let jac = chain.fk_jacobian(&q);
            for j in 0..3 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += h;
                qm[j] -= h;
                let fp = chain.forward_kinematics(&qp);
                let fm = chain.forward_kinematics(&qm);
                let fd = [
                    (fp.ee_pose.x - fm.ee_pose.x) / (2.0 * h),
                    (fp.ee_pose.y - fm.ee_pose.y) / (2.0 * h),
                    wrap_angle(fp.ee_pose.theta - fm.ee_pose.theta) / (2.0 * h),
                ];
                for r in 0..3 {
                    let a = jac[r * 3 + j];
                    let denom = a.abs().max(1.0);
                    assert!(
                        (a - fd[r]).abs() / denom < 1e-5,
                        "row {r} col {j}: analytic {a} vs fd {}",
                        fd[r]
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_box_examples() {
        let b = Box2::from_corners((-0.5, -0.5), (0.5, 0.5));
        let (c, _) = sphere_box_penetration((10.0, 10.0), 0.1, &b, 0.0);
        assert_eq!(c, 0.0);

        // Center exactly on a face: signed distance zero, cost = radius.
        let (c, _) = sphere_box_penetration((0.5, 0.0), 0.1, &b, 0.0);
        assert_abs_diff_eq!(c, 0.1, epsilon = 1e-15);

        // 0.05 outside the +x face: cost 0.05, descent direction is +x.
        let (c, g) = sphere_box_penetration((0.55, 0.0), 0.1, &b, 0.0);
        assert_abs_diff_eq!(c, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(g.0, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.1, 0.0);
    }

    #[test]
    fn sphere_box_descent_reduces_cost() {
        let b = Box2::new(Pose2::new(0.2, -0.1, 0.4), (0.3, 0.2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = (rng.gen_range(-0.8..1.2), rng.gen_range(-1.0..0.8));
            let (c0, g) = sphere_box_penetration(p, 0.08, &b, 0.0);
            if c0 == 0.0 {
                continue;
            }
            let step = 1e-4;
            let p1 = (p.0 - step * g.0, p.1 - step * g.1);
            let (c1, _) = sphere_box_penetration(p1, 0.08, &b, 0.0);
            assert!(c1 <= c0 + 1e-12, "descent increased cost: {c0} -> {c1}");
        }
    }

    #[test]
    fn sphere_box_gradient_matches_fd() {
        let b = Box2::new(Pose2::new(0.1, 0.2, -0.7), (0.25, 0.4));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let p = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (c, g) = sphere_box_penetration(p, 0.1, &b, 0.0);
            // Skip the clamp boundary and the inside-the-box axis ties where
            // the subgradient is a choice.
            let (sd, _) = b.signed_distance(p);
            if (0.1 - sd).abs() < 1e-4 || sd < 0.02 {
                continue;
            }
            let fdx = (sphere_box_penetration((p.0 + h, p.1), 0.1, &b, 0.0).0
                - sphere_box_penetration((p.0 - h, p.1), 0.1, &b, 0.0).0)
                / (2.0 * h);
            let fdy = (sphere_box_penetration((p.0, p.1 + h), 0.1, &b, 0.0).0
                - sphere_box_penetration((p.0, p.1 - h), 0.1, &b, 0.0).0)
                / (2.0 * h);
            let _ = c;
            assert!((g.0 - fdx).abs() / fdx.abs().max(1.0) < 1e-5);
            assert!((g.1 - fdy).abs() / fdy.abs().max(1.0) < 1e-5);
            checked += 1;
        }
    }

    #[test]
    fn dist_from_bounds_examples() {
        let (d, g) = dist_from_bounds(&[0.5], &[0.0], &[1.0]);
        assert_eq!(d, 0.0);
        assert_eq!(g, vec![0.0]);

        let (d, g) = dist_from_bounds(&[4.0, 5.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.8, epsilon = 1e-15);

        // Exactly on the boundary counts as inside.
        let (d, _) = dist_from_bounds(&[1.0], &[0.0], &[1.0]);
        assert_eq!(d, 0.0);

        // Below the lower bound the gradient points down.
        let (d, g) = dist_from_bounds(&[-2.0], &[0.0], &[1.0]);
        assert_abs_diff_eq!(d, 2.0);
        assert_abs_diff_eq!(g[0], -1.0);
    }
}
