//! Planar geometric primitives shared by every other module: poses, rigid
//! frame transforms, ray/rectangle entry distance, ray/ray intersection and
//! segment/rectangle occlusion tests.
//!
//! All angles are radians internally; degrees appear only at file-format
//! boundaries. Headings are normalized to `[-pi, pi)`.

use serde::{Deserialize, Serialize};

/// Tolerance below which two heading rays are treated as parallel,
/// compared against `|sin(delta_heading)|`.
pub const PARALLEL_EPS: f64 = 1e-6;

/// Normalizes an angle into `[-pi, pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    /// Both components must be finite; NaN/Inf are caller bugs and rejected here.
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite Vec2 ({x}, {y})");
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 { x: 0.0, y: 0.0 }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// z-component of the cross product of two planar vectors.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Unit vector pointing along `heading` radians from the +x axis.
    pub fn from_heading(heading: f64) -> Vec2 {
        Vec2::new(heading.cos(), heading.sin())
    }

    /// Rotates the vector by `angle` radians counter-clockwise.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar kinematic state: position, heading in `[-pi, pi)`, speed >= 0.
///
/// The same type carries vehicle, pedestrian and bridge samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
}

impl Pose2 {
    pub fn new(position: Vec2, heading: f64, speed: f64) -> Self {
        assert!(heading.is_finite(), "non-finite heading");
        assert!(speed.is_finite() && speed >= 0.0, "speed must be finite and >= 0");
        Pose2 {
            position,
            heading: normalize_angle(heading),
            speed,
        }
    }

    pub fn heading_unit(&self) -> Vec2 {
        Vec2::from_heading(self.heading)
    }
}

/// Rigid map between two planar frames: rotate, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub rotation: f64,
    pub translation: Vec2,
}

impl FrameTransform {
    pub fn new(rotation: f64, translation: Vec2) -> Self {
        assert!(rotation.is_finite(), "non-finite rotation");
        FrameTransform {
            rotation: normalize_angle(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        FrameTransform {
            rotation: 0.0,
            translation: Vec2::zero(),
        }
    }

    /// Maps a pose into the target frame: position rotated then translated,
    /// heading shifted by the frame rotation, speed unchanged.
    pub fn compose(&self, p: &Pose2) -> Pose2 {
        Pose2::new(
            p.position.rotate(self.rotation) + self.translation,
            p.heading + self.rotation,
            p.speed,
        )
    }

    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.rotation) + self.translation
    }

    /// Closed-form rigid inverse: `inverse(t).compose(t.compose(p)) == p`.
    pub fn inverse(&self) -> FrameTransform {
        FrameTransform::new(-self.rotation, -self.translation.rotate(-self.rotation))
    }
}

/// Axis-aligned rectangle in the virtual-world frame, with positive half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Vec2,
    pub half_extent_x: f64,
    pub half_extent_y: f64,
}

impl Rect {
    pub fn new(center: Vec2, half_extent_x: f64, half_extent_y: f64) -> Self {
        assert!(
            half_extent_x.is_finite() && half_extent_x > 0.0,
            "half_extent_x must be finite and > 0"
        );
        assert!(
            half_extent_y.is_finite() && half_extent_y > 0.0,
            "half_extent_y must be finite and > 0"
        );
        Rect {
            center,
            half_extent_x,
            half_extent_y,
        }
    }

    pub fn min_x(&self) -> f64 {
        self.center.x - self.half_extent_x
    }

    pub fn max_x(&self) -> f64 {
        self.center.x + self.half_extent_x
    }

    pub fn min_y(&self) -> f64 {
        self.center.y - self.half_extent_y
    }

    pub fn max_y(&self) -> f64 {
        self.center.y + self.half_extent_y
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min_x() && p.x <= self.max_x() && p.y >= self.min_y() && p.y <= self.max_y()
    }

    /// Distance from a point to the closed rectangle (0 inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let dx = (self.min_x() - p.x).max(0.0).max(p.x - self.max_x());
        let dy = (self.min_y() - p.y).max(0.0).max(p.y - self.max_y());
        dx.hypot(dy)
    }
}

/// Entry distance of a forward ray into a closed rectangle (slab method).
///
/// Returns the smallest `t >= 0` with `origin + t * direction` on or in the
/// rectangle, 0 when the origin is already inside, and `None` when the
/// forward ray never meets the rectangle. `direction` must be unit length.
pub fn ray_rect_entry(origin: Vec2, direction: Vec2, rect: &Rect) -> Option<f64> {
    assert!(
        (direction.norm() - 1.0).abs() <= 1e-9,
        "direction must be unit length"
    );
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.x, direction.x, rect.min_x(), rect.max_x()),
        (origin.y, direction.y, rect.min_y(), rect.max_y()),
    ] {
        if d.abs() < 1e-12 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t_enter = t_enter.max(near);
            t_exit = t_exit.min(far);
        }
    }
    if t_enter > t_exit || t_exit < 0.0 {
        return None;
    }
    Some(t_enter.max(0.0))
}

/// Intersection of two heading rays, used to locate the potential collision
/// point: present only when it lies ahead of both agents.
///
/// Rays with `|sin(delta_heading)| < PARALLEL_EPS` are treated as parallel
/// (no intersection) to avoid numerically explosive far intersections.
pub fn ray_ray_intersect(a: &Pose2, b: &Pose2) -> Option<Vec2> {
    let da = a.heading_unit();
    let db = b.heading_unit();
    let det = da.cross(db); // sin(b.heading - a.heading)
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let ab = b.position - a.position;
    let t_a = ab.cross(db) / det;
    let t_b = ab.cross(da) / det;
    if t_a < 0.0 || t_b < 0.0 {
        return None;
    }
    Some(a.position + da * t_a)
}

/// True iff the closed segment `pq` meets the closed rectangle, including
/// grazing contact and endpoints inside. Used as the line-of-sight occlusion
/// kernel, where grazing counts as blocked.
pub fn segment_intersects_rect(p: Vec2, q: Vec2, rect: &Rect) -> bool {
    let d = q - p;
    let mut t_enter: f64 = 0.0;
    let mut t_exit: f64 = 1.0;
    for (o, dir, lo, hi) in [
        (p.x, d.x, rect.min_x(), rect.max_x()),
        (p.y, d.y, rect.min_y(), rect.max_y()),
    ] {
        if dir.abs() < 1e-12 {
            if o < lo || o > hi {
                return false;
            }
        } else {
            let (a, b) = ((lo - o) / dir, (hi - o) / dir);
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t_enter = t_enter.max(near);
            t_exit = t_exit.min(far);
        }
    }
    t_enter <= t_exit
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rect(cx: f64, cy: f64, hx: f64, hy: f64) -> Rect {
        Rect::new(Vec2::new(cx, cy), hx, hy)
    }

    #[test]
    fn ray_entry_hits_near_face() {
        let r = rect(0.0, 0.0, 3.0, 3.0);
        let t = ray_rect_entry(Vec2::new(-10.0, 0.0), Vec2::new(1.0, 0.0), &r).unwrap();
        assert!((t - 7.0).abs() < 1e-12);
    }

    #[test]
    fn ray_entry_inside_is_zero() {
        let r = rect(0.0, 0.0, 3.0, 3.0);
        let t = ray_rect_entry(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &r).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn ray_entry_misses_above() {
        let r = rect(0.0, 0.0, 3.0, 3.0);
        assert!(ray_rect_entry(Vec2::new(-10.0, 10.0), Vec2::new(1.0, 0.0), &r).is_none());
    }

    #[test]
    fn ray_entry_behind_is_none() {
        let r = rect(0.0, 0.0, 3.0, 3.0);
        assert!(ray_rect_entry(Vec2::new(10.0, 0.0), Vec2::new(1.0, 0.0), &r).is_none());
    }

    /// Brute-force entry distance: march along the ray in fine steps until a
    /// point lands inside the rectangle. Independent of the slab code path.
    fn march_entry(origin: Vec2, direction: Vec2, rect: &Rect, step: f64, max_dist: f64) -> Option<f64> {
        let mut t = 0.0;
        while t <= max_dist {
            if rect.contains(origin + direction * t) {
                return Some(t);
            }
            t += step;
        }
        None
    }

    #[test]
    fn ray_entry_diagonal_matches_marching_oracle() {
        let r = rect(0.0, 0.0, 3.0, 3.0);
        let dir = Vec2::new(1.0 / 2.0_f64.sqrt(), 1.0 / 2.0_f64.sqrt());
        let t = ray_rect_entry(Vec2::new(-10.0, -10.0), dir, &r).unwrap();
        assert!((t - 7.0 * 2.0_f64.sqrt()).abs() < 1e-9, "t = {t}");
        let marched = march_entry(Vec2::new(-10.0, -10.0), dir, &r, 1e-4, 40.0).unwrap();
        assert!((t - marched).abs() <= 2e-4, "analytic {t} vs marched {marched}");
    }

    #[test]
    #[should_panic]
    fn non_finite_vec_rejected() {
        Vec2::new(f64::NAN, 0.0);
    }

    #[test]
    fn ray_ray_perpendicular() {
        let a = Pose2::new(Vec2::new(-20.0, 0.0), 0.0, 1.0);
        let b = Pose2::new(Vec2::new(0.0, 15.0), -FRAC_PI_2, 1.0);
        let p = ray_ray_intersect(&a, &b).unwrap();
        assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9);
    }

    #[test]
    fn ray_ray_parallel_absent() {
        let a = Pose2::new(Vec2::new(-20.0, 0.0), 0.0, 1.0);
        let b = Pose2::new(Vec2::new(5.0, 3.0), 0.0, 1.0);
        assert!(ray_ray_intersect(&a, &b).is_none());
    }

    #[test]
    fn ray_ray_behind_absent() {
        // intersection would be at (0,0), 15 m behind b which heads +y
        let a = Pose2::new(Vec2::new(-20.0, 0.0), 0.0, 1.0);
        let b = Pose2::new(Vec2::new(0.0, 15.0), FRAC_PI_2, 1.0);
        assert!(ray_ray_intersect(&a, &b).is_none());
    }

    #[test]
    fn segment_through_center() {
        let r = rect(0.0, 0.0, 1.0, 1.0);
        assert!(segment_intersects_rect(Vec2::new(-10.0, 0.0), Vec2::new(10.0, 0.0), &r));
    }

    #[test]
    fn segment_above_misses() {
        let r = rect(0.0, 0.0, 1.0, 1.0);
        assert!(!segment_intersects_rect(Vec2::new(-10.0, 5.0), Vec2::new(10.0, 5.0), &r));
    }

    #[test]
    fn segment_endpoint_inside() {
        let r = rect(0.0, 0.0, 1.0, 1.0);
        assert!(segment_intersects_rect(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0), &r));
    }

    #[test]
    fn segment_grazing_edge_counts() {
        // tangent along the top edge y = 1
        let r = rect(0.0, 0.0, 1.0, 1.0);
        assert!(segment_intersects_rect(Vec2::new(-10.0, 1.0), Vec2::new(10.0, 1.0), &r));
    }

    #[test]
    fn segment_short_of_rect_misses() {
        let r = rect(0.0, 0.0, 1.0, 1.0);
        assert!(!segment_intersects_rect(Vec2::new(-10.0, 0.0), Vec2::new(-5.0, 0.0), &r));
    }

    #[test]
    fn compose_identity() {
        let t = FrameTransform::identity();
        let p = Pose2::new(Vec2::new(3.0, -4.0), 1.0, 5.0);
        let q = t.compose(&p);
        assert_eq!(p, q);
    }

    #[test]
    fn compose_quarter_turn() {
        let t = FrameTransform::new(FRAC_PI_2, Vec2::new(100.0, 50.0));
        let p = Pose2::new(Vec2::new(10.0, 0.0), 0.0, 5.0);
        let q = t.compose(&p);
        assert!((q.position.x - 100.0).abs() < 1e-9);
        assert!((q.position.y - 60.0).abs() < 1e-9);
        assert!((q.heading - FRAC_PI_2).abs() < 1e-9);
        assert_eq!(q.speed, 5.0);
    }

    #[test]
    fn inverse_identity() {
        let inv = FrameTransform::identity().inverse();
        assert_eq!(inv.rotation, 0.0);
        assert!(inv.translation.norm() < 1e-12);
    }

    #[test]
    fn inverse_closed_form() {
        let t = FrameTransform::new(FRAC_PI_2, Vec2::new(1.0, 0.0));
        let inv = t.inverse();
        assert!((inv.rotation + FRAC_PI_2).abs() < 1e-12);
        assert!((inv.translation.x - 0.0).abs() < 1e-9);
        assert!((inv.translation.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_round_trips_random_poses() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut max_err: f64 = 0.0;
        for _ in 0..1000 {
            let t = FrameTransform::new(
                rng.gen_range(-PI..PI),
                Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)),
            );
            let p = Pose2::new(
                Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)),
                rng.gen_range(-PI..PI),
                rng.gen_range(0.0..30.0),
            );
            for back in [
                t.inverse().compose(&t.compose(&p)),
                t.compose(&t.inverse().compose(&p)),
            ] {
                max_err = max_err
                    .max(back.position.distance(p.position))
                    .max(normalize_angle(back.heading - p.heading).abs());
            }
        }
        assert!(max_err < 1e-9, "max round-trip error {max_err}");
    }

    proptest! {
        #[test]
        fn entry_point_lies_on_rect_and_none_closer(
            ox in -50.0..50.0f64, oy in -50.0..50.0f64,
            heading in -PI..PI,
            cx in -20.0..20.0f64, cy in -20.0..20.0f64,
            hx in 0.5..8.0f64, hy in 0.5..8.0f64,
        ) {
            let r = rect(cx, cy, hx, hy);
            let o = Vec2::new(ox, oy);
            let dir = Vec2::from_heading(heading);
            if let Some(t) = ray_rect_entry(o, dir, &r) {
                let hit = o + dir * t;
                prop_assert!(r.distance_to_point(hit) <= 1e-9);
                // no strictly closer point along the ray reaches the rect
                let marched = march_entry(o, dir, &r, 1e-4, t + 1.0).unwrap();
                prop_assert!(t - marched <= 2e-4, "analytic {} vs marched {}", t, marched);
            } else {
                prop_assert!(march_entry(o, dir, &r, 1e-3, 250.0).is_none());
            }
        }

        #[test]
        fn entry_is_translation_equivariant(
            ox in -50.0..50.0f64, oy in -50.0..50.0f64,
            heading in -PI..PI,
            cx in -20.0..20.0f64, cy in -20.0..20.0f64,
            hx in 0.5..8.0f64, hy in 0.5..8.0f64,
            sx in -30.0..30.0f64, sy in -30.0..30.0f64,
        ) {
            let dir = Vec2::from_heading(heading);
            let shift = Vec2::new(sx, sy);
            let a = ray_rect_entry(Vec2::new(ox, oy), dir, &rect(cx, cy, hx, hy));
            let b = ray_rect_entry(
                Vec2::new(ox, oy) + shift,
                dir,
                &rect(cx + sx, cy + sy, hx, hy),
            );
            match (a, b) {
                (Some(ta), Some(tb)) => prop_assert!((ta - tb).abs() <= 1e-9),
                (None, None) => {}
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }

        #[test]
        fn ray_ray_symmetric(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64, ah in -PI..PI,
            bx in -50.0..50.0f64, by in -50.0..50.0f64, bh in -PI..PI,
        ) {
            let a = Pose2::new(Vec2::new(ax, ay), ah, 1.0);
            let b = Pose2::new(Vec2::new(bx, by), bh, 1.0);
            match (ray_ray_intersect(&a, &b), ray_ray_intersect(&b, &a)) {
                (Some(p), Some(q)) => prop_assert!(p.distance(q) <= 1e-6 * (1.0 + p.norm())),
                (None, None) => {}
                other => prop_assert!(false, "asymmetric {:?}", other),
            }
        }

        #[test]
        fn compose_preserves_distances(
            rot in -PI..PI, tx in -100.0..100.0f64, ty in -100.0..100.0f64,
            px in -100.0..100.0f64, py in -100.0..100.0f64,
            qx in -100.0..100.0f64, qy in -100.0..100.0f64,
        ) {
            let t = FrameTransform::new(rot, Vec2::new(tx, ty));
            let p = Pose2::new(Vec2::new(px, py), 0.3, 1.0);
            let q = Pose2::new(Vec2::new(qx, qy), -0.7, 2.0);
            let before = p.position.distance(q.position);
            let after = t.compose(&p).position.distance(t.compose(&q).position);
            prop_assert!((before - after).abs() <= 1e-9);
        }

        #[test]
        fn headings_normalized(raw in -100.0..100.0f64, rot in -100.0..100.0f64) {
            let t = FrameTransform::new(rot, Vec2::zero());
            let p = Pose2::new(Vec2::zero(), raw, 0.0);
            let q = t.compose(&p);
            prop_assert!(p.heading >= -PI && p.heading < PI);
            prop_assert!(q.heading >= -PI && q.heading < PI);
        }
    }
}
