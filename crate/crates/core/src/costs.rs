//! Differentiable cost terms: one real-valued function per constraint or
//! plan-cost type, each returning its value and analytic gradients. A term
//! value of zero means the underlying condition holds exactly; hard terms
//! are considered satisfied once the value is within the configured
//! tolerance.

use crate::geometry::{
    dist_from_bounds, sphere_box_penetration, wrap_angle, Box2, KinematicChain, Pose2, SphereSet,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Every cost term the constraint network can emit.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum CostTermKind {
    KinPosition,
    KinRotation,
    GraspValid,
    StablePlaceSupport,
    StablePlaceContain,
    CFreePlace,
    CFreeHold,
    CFreeTraj,
    CFreeTrajHold,
    SelfCollision,
    JointLimits,
    MotionEndpoint,
    TrajLength,
    ObjDist,
    ValidPress,
    ValidStickPress,
}

impl CostTermKind {
    pub const ALL: [CostTermKind; 16] = [
        CostTermKind::KinPosition,
        CostTermKind::KinRotation,
        CostTermKind::GraspValid,
        CostTermKind::StablePlaceSupport,
        CostTermKind::StablePlaceContain,
        CostTermKind::CFreePlace,
        CostTermKind::CFreeHold,
        CostTermKind::CFreeTraj,
        CostTermKind::CFreeTrajHold,
        CostTermKind::SelfCollision,
        CostTermKind::JointLimits,
        CostTermKind::MotionEndpoint,
        CostTermKind::TrajLength,
        CostTermKind::ObjDist,
        CostTermKind::ValidPress,
        CostTermKind::ValidStickPress,
    ];

    /// Plan costs are soft: they shape the objective but never gate
    /// satisfaction.
    pub fn is_plan_cost(self) -> bool {
        matches!(self, CostTermKind::TrajLength | CostTermKind::ObjDist)
    }
}

fn default_weight(kind: CostTermKind) -> f64 {
    match kind {
        CostTermKind::KinRotation => 5.0,
        CostTermKind::StablePlaceSupport | CostTermKind::StablePlaceContain => 2.0,
        CostTermKind::TrajLength => 0.01,
        CostTermKind::ObjDist => 0.025,
        _ => 1.0,
    }
}

fn default_tolerance(kind: CostTermKind) -> f64 {
    match kind {
        CostTermKind::KinPosition => 0.005,
        CostTermKind::KinRotation => 0.05,
        CostTermKind::GraspValid => 1e-6,
        CostTermKind::StablePlaceSupport => 0.01,
        CostTermKind::StablePlaceContain => 0.001,
        CostTermKind::CFreePlace
        | CostTermKind::CFreeHold
        | CostTermKind::CFreeTraj
        | CostTermKind::CFreeTrajHold => 0.001,
        CostTermKind::SelfCollision => 0.0,
        CostTermKind::JointLimits => 0.0,
        CostTermKind::MotionEndpoint => 0.005,
        CostTermKind::ValidPress | CostTermKind::ValidStickPress => 0.001,
        // Plan costs have no satisfaction tolerance; never consulted.
        CostTermKind::TrajLength | CostTermKind::ObjDist => f64::INFINITY,
    }
}

/// Weights, tolerances, and evaluation knobs for the penalty objective.
///
/// Unset entries fall back to the reference defaults: every constraint
/// weight 1.0 except kinematic rotation error (5.0) and stable placement
/// (2.0); tolerances of 1 mm for collisions, 5 mm / 0.05 rad for kinematic
/// errors, 0 for joint limits and self collision, 1 cm for placement
/// support and 1 mm for containment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    #[serde(default)]
    pub weight_overrides: BTreeMap<CostTermKind, f64>,
    #[serde(default)]
    pub tolerance_overrides: BTreeMap<CostTermKind, f64>,
    /// Large negative penalty for constraints with zero satisfying
    /// particles; must be negative.
    pub lambda_penalty: f64,
    /// Activation margin added to every collision hinge, in meters.
    pub collision_activation: f64,
    /// Softmin temperature for the stick-press minimum, in meters.
    pub stick_softmin_temp: f64,
    /// Interpolated collision checks per trajectory segment.
    pub traj_midpoints: usize,
    /// Free knots per trajectory variable (joint trajectory mode).
    pub n_knots: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            weight_overrides: BTreeMap::new(),
            tolerance_overrides: BTreeMap::new(),
            lambda_penalty: -1e6,
            collision_activation: 0.0,
            stick_softmin_temp: 0.01,
            traj_midpoints: 4,
            n_knots: 5,
        }
    }
}

impl CostConfig {
    pub fn weight(&self, kind: CostTermKind) -> f64 {
        *self
            .weight_overrides
            .get(&kind)
            .unwrap_or(&default_weight(kind))
    }

    pub fn tolerance(&self, kind: CostTermKind) -> f64 {
        *self
            .tolerance_overrides
            .get(&kind)
            .unwrap_or(&default_tolerance(kind))
    }

    pub fn set_weight(&mut self, kind: CostTermKind, w: f64) {
        assert!(w > 0.0, "weights must be positive");
        self.weight_overrides.insert(kind, w);
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lambda_penalty >= 0.0 {
            return Err("lambda_penalty must be negative".into());
        }
        for (&k, &w) in &self.weight_overrides {
            if w <= 0.0 {
                return Err(format!("weight for {k:?} must be positive"));
            }
        }
        for (&k, &t) in &self.tolerance_overrides {
            if t < 0.0 {
                return Err(format!("tolerance for {k:?} must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Kinematic pose error of the end effector against a target pose.
#[derive(Debug, Clone)]
pub struct KinCost {
    pub pos_err: f64,
    pub rot_err: f64,
    /// d pos_err / d q
    pub pos_grad_q: Vec<f64>,
    /// d rot_err / d q
    pub rot_grad_q: Vec<f64>,
    /// d pos_err / d (target x, y, theta)
    pub pos_grad_target: [f64; 3],
    /// d rot_err / d (target x, y, theta)
    pub rot_grad_target: [f64; 3],
}

/// Pose error of `forward_kinematics(chain, q)` relative to `target`,
/// with gradients through the analytic Jacobian.
pub fn kin_cost(chain: &KinematicChain, q: &[f64], target: &Pose2) -> KinCost {
    let k = chain.dof();
    assert_eq!(q.len(), k, "configuration length mismatch");
    let fk = chain.forward_kinematics(q);
    let jac = chain.fk_jacobian(q);
    let (ex, ey) = fk.ee_pose.position();
    let dx = ex - target.x;
    let dy = ey - target.y;
    let pos_err = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = if pos_err > 0.0 {
        (dx / pos_err, dy / pos_err)
    } else {
        (0.0, 0.0)
    };
    let dtheta = wrap_angle(fk.ee_pose.theta - target.theta);
    let rot_err = dtheta.abs();
    let s = if dtheta > 0.0 {
        1.0
    } else if dtheta < 0.0 {
        -1.0
    } else {
        0.0
    };

    let mut pos_grad_q = vec![0.0; k];
    let mut rot_grad_q = vec![0.0; k];
    for j in 0..k {
        pos_grad_q[j] = ux * jac[j] + uy * jac[k + j];
        rot_grad_q[j] = s;
    }
    KinCost {
        pos_err,
        rot_err,
        pos_grad_q,
        rot_grad_q,
        pos_grad_target: [-ux, -uy, 0.0],
        rot_grad_target: [0.0, 0.0, -s],
    }
}

/// Hinge cost between two spheres: positive when they overlap within the
/// activation margin. Gradients are with respect to the two centers.
#[inline]
pub fn sphere_pair_hinge(
    c1: (f64, f64),
    r1: f64,
    c2: (f64, f64),
    r2: f64,
    activation: f64,
) -> (f64, (f64, f64), (f64, f64)) {
    let dx = c1.0 - c2.0;
    let dy = c1.1 - c2.1;
    let d = (dx * dx + dy * dy).sqrt();
    let cost = r1 + r2 + activation - d;
    if cost > 0.0 && d > 0.0 {
        let ux = dx / d;
        let uy = dy / d;
        (cost, (-ux, -uy), (ux, uy))
    } else if cost > 0.0 {
        // Coincident centers: fully penetrating, no direction information.
        (cost, (0.0, 0.0), (0.0, 0.0))
    } else {
        (0.0, (0.0, 0.0), (0.0, 0.0))
    }
}

/// Collision cost of a set of world-frame spheres against static boxes and
/// other movable sphere groups.
#[derive(Debug, Clone)]
pub struct CollisionCost {
    pub cost: f64,
    /// d cost / d subject sphere center, per subject sphere.
    pub grad_subject: Vec<(f64, f64)>,
    /// d cost / d other-group sphere center, per group and sphere.
    pub grad_others: Vec<Vec<(f64, f64)>>,
}

/// Sum of sphere-box penetrations of the subject spheres against every
/// obstacle, plus pairwise sphere hinges against every other movable group.
/// Zero iff the subject is collision-free at the activation margin.
pub fn collision_cost(
    subject: &[((f64, f64), f64)],
    obstacles: &[Box2],
    others: &[Vec<((f64, f64), f64)>],
    activation: f64,
) -> CollisionCost {
    let mut cost = 0.0;
    let mut grad_subject = vec![(0.0, 0.0); subject.len()];
    let mut grad_others: Vec<Vec<(f64, f64)>> =
        others.iter().map(|g| vec![(0.0, 0.0); g.len()]).collect();
    for (i, &(c, r)) in subject.iter().enumerate() {
        for b in obstacles {
            let (pc, g) = sphere_box_penetration(c, r, b, activation);
            cost += pc;
            grad_subject[i].0 += g.0;
            grad_subject[i].1 += g.1;
        }
        for (gi, group) in others.iter().enumerate() {
            for (si, &(oc, or)) in group.iter().enumerate() {
                let (pc, g1, g2) = sphere_pair_hinge(c, r, oc, or, activation);
                cost += pc;
                grad_subject[i].0 += g1.0;
                grad_subject[i].1 += g1.1;
                grad_others[gi][si].0 += g2.0;
                grad_others[gi][si].1 += g2.1;
            }
        }
    }
    CollisionCost {
        cost,
        grad_subject,
        grad_others,
    }
}

/// Containment cost of an object placed at `placement` on an oriented
/// rectangular surface: per-sphere distance from the surface rectangle
/// shrunk by the sphere radius, summed. Zero iff fully contained.
/// Returns the gradient with respect to (placement x, y, theta).
pub fn stable_place_cost(
    object: &SphereSet,
    placement: &Pose2,
    surface: &Box2,
) -> (f64, [f64; 3]) {
    let inv = surface.center.inverse();
    let mut cost = 0.0;
    let mut grad = [0.0; 3];
    for &(off, r) in &object.spheres {
        let c = placement.transform(off);
        let local = inv.transform(c);
        let hx = (surface.half_extents.0 - r).max(0.0);
        let hy = (surface.half_extents.1 - r).max(0.0);
        let (d, gl) = dist_from_bounds(&[local.0, local.1], &[-hx, -hy], &[hx, hy]);
        cost += d;
        if d > 0.0 {
            // Rotate the local-frame gradient back to the world frame.
            let (s, cth) = surface.center.theta.sin_cos();
            let gx = cth * gl[0] - s * gl[1];
            let gy = s * gl[0] + cth * gl[1];
            grad[0] += gx;
            grad[1] += gy;
            // Sphere center rotates about the placement origin.
            grad[2] += gx * -(c.1 - placement.y) + gy * (c.0 - placement.x);
        }
    }
    (cost, grad)
}

/// Support cost: the placement origin must lie on the surface rectangle.
pub fn place_support_cost(placement: &Pose2, surface: &Box2) -> (f64, [f64; 3]) {
    let inv = surface.center.inverse();
    let local = inv.transform(placement.position());
    let hx = surface.half_extents.0;
    let hy = surface.half_extents.1;
    let (d, gl) = dist_from_bounds(&[local.0, local.1], &[-hx, -hy], &[hx, hy]);
    let mut grad = [0.0; 3];
    if d > 0.0 {
        let (s, c) = surface.center.theta.sin_cos();
        grad[0] = c * gl[0] - s * gl[1];
        grad[1] = s * gl[0] + c * gl[1];
    }
    (d, grad)
}

/// Distance of a configuration from the joint limits.
pub fn joint_limit_cost(chain: &KinematicChain, q: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(q.len(), chain.dof(), "configuration length mismatch");
    dist_from_bounds(q, &chain.joint_lower, &chain.joint_upper)
}

/// Pairwise hinge cost between collision spheres on non-adjacent links.
pub fn self_collision_cost(
    chain: &KinematicChain,
    q: &[f64],
    activation: f64,
) -> (f64, Vec<f64>) {
    let fk = chain.forward_kinematics(q);
    let mut cost = 0.0;
    let mut grad = vec![0.0; chain.dof()];
    let spheres = &fk.sphere_centers;
    for a in 0..spheres.len() {
        for b in (a + 1)..spheres.len() {
            let (ca, ra, la) = spheres[a];
            let (cb, rb, lb) = spheres[b];
            if la.abs_diff(lb) < 2 {
                continue;
            }
            let (c, g1, g2) = sphere_pair_hinge(ca, ra, cb, rb, activation);
            if c == 0.0 {
                continue;
            }
            cost += c;
            for j in 0..chain.dof() {
                let jp = fk.joint_positions[j];
                if j <= la {
                    let col = KinematicChain::sphere_center_jacobian_col(ca, jp);
                    grad[j] += g1.0 * col.0 + g1.1 * col.1;
                }
                if j <= lb {
                    let col = KinematicChain::sphere_center_jacobian_col(cb, jp);
                    grad[j] += g2.0 * col.0 + g2.1 * col.1;
                }
            }
        }
    }
    (cost, grad)
}

/// Total length of a piecewise-linear joint-space path.
///
/// Returns the gradient with respect to every knot, flattened in knot order.
pub fn traj_length_cost(knots: &[&[f64]]) -> (f64, Vec<f64>) {
    assert!(knots.len() >= 2, "trajectory needs at least two knots");
    let dim = knots[0].len();
    assert!(knots.iter().all(|k| k.len() == dim), "knot dimension mismatch");
    let mut cost = 0.0;
    let mut grad = vec![0.0; knots.len() * dim];
    for i in 0..knots.len() - 1 {
        let mut sq = 0.0;
        for d in 0..dim {
            let diff = knots[i + 1][d] - knots[i][d];
            sq += diff * diff;
        }
        let len = sq.sqrt();
        cost += len;
        if len > 0.0 {
            for d in 0..dim {
                let u = (knots[i + 1][d] - knots[i][d]) / len;
                grad[i * dim + d] -= u;
                grad[(i + 1) * dim + d] += u;
            }
        }
    }
    (cost, grad)
}

/// Sum of Euclidean distances over all unordered pairs of positions.
pub fn obj_dist_cost(positions: &[(f64, f64)]) -> (f64, Vec<(f64, f64)>) {
    assert!(positions.len() >= 2, "need at least two positions");
    let mut cost = 0.0;
    let mut grad = vec![(0.0, 0.0); positions.len()];
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            cost += d;
            if d > 0.0 {
                let ux = dx / d;
                let uy = dy / d;
                grad[i].0 += ux;
                grad[i].1 += uy;
                grad[j].0 -= ux;
                grad[j].1 -= uy;
            }
        }
    }
    (cost, grad)
}

/// Hinge distance from a contact position to a button disc.
#[inline]
fn disc_hinge(p: (f64, f64), center: (f64, f64), radius: f64) -> (f64, (f64, f64)) {
    let dx = p.0 - center.0;
    let dy = p.1 - center.1;
    let d = (dx * dx + dy * dy).sqrt();
    if d > radius && d > 0.0 {
        (d - radius, (dx / d, dy / d))
    } else {
        (0.0, (0.0, 0.0))
    }
}

pub enum PressKind<'a> {
    /// The end-effector contact point is the press pose position.
    Finger,
    /// Any point along the held stick may make the contact.
    Stick(&'a SphereSet),
}

/// Press validity cost.
///
/// Finger: hinge distance from the press position to the button disc.
/// Stick: exact minimum over stick contact points of the hinge distance,
/// with the gradient taken through a softmin for differentiability.
/// Returns the gradient with respect to the press pose (x, y, theta).
pub fn press_cost(
    kind: PressKind,
    press_pose: &Pose2,
    button_center: (f64, f64),
    button_radius: f64,
    softmin_temp: f64,
) -> (f64, [f64; 3]) {
    assert!(button_radius > 0.0, "button radius must be positive");
    match kind {
        PressKind::Finger => {
            let (d, g) = disc_hinge(press_pose.position(), button_center, button_radius);
            (d, [g.0, g.1, 0.0])
        }
        PressKind::Stick(stick) => {
            let centers = stick.world_centers(press_pose);
            let mut dists = Vec::with_capacity(centers.len());
            let mut grads = Vec::with_capacity(centers.len());
            let mut min_d = f64::INFINITY;
            for &(c, _) in &centers {
                let (d, g) = disc_hinge(c, button_center, button_radius);
                min_d = min_d.min(d);
                dists.push(d);
                grads.push((c, g));
            }
            // Softmin weights for the gradient; the value stays the exact min.
            let t = softmin_temp.max(1e-9);
            let mut wsum = 0.0;
            let mut grad = [0.0; 3];
            let weights: Vec<f64> = dists.iter().map(|d| (-(d - min_d) / t).exp()).collect();
            for w in &weights {
                wsum += w;
            }
            for (i, (c, g)) in grads.iter().enumerate() {
                let w = weights[i] / wsum;
                grad[0] += w * g.0;
                grad[1] += w * g.1;
                grad[2] += w * (g.0 * -(c.1 - press_pose.y) + g.1 * (c.0 - press_pose.x));
            }
            (min_d, grad)
        }
    }
}

/// Residual of a grasp pose against the annulus grasp model: the grasp must
/// sit at the standoff distance and face the object center. Zero for every
/// grasp the grasp sampler emits.
pub fn grasp_valid_cost(grasp: &Pose2, standoff: f64) -> f64 {
    let d = (grasp.x * grasp.x + grasp.y * grasp.y).sqrt();
    let radial = (d - standoff).abs();
    let facing = if d > 0.0 {
        wrap_angle(grasp.theta - (grasp.y.atan2(grasp.x) + std::f64::consts::PI)).abs()
    } else {
        0.0
    };
    radial + facing
}
