//! Planar primitives over complex-number points.
//!
//! Turns and orientations are signed counterclockwise-positive everywhere.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of the plane, stored as `re + i·im`.
pub type Point<T> = Complex<T>;

/// Relative tolerance used to decide that two points coincide.
pub const COINCIDENT_REL: f64 = 1e-12;
/// Relative tolerance of the collinearity test.
pub const COLLINEAR_REL: f64 = 1e-12;
/// Absolute slack granted to the Schmidt length bound.
pub const SCHMIDT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Scalar> Circle<T> {
    /// Signed distance from `p` to the circle, negative inside.
    pub fn signed_distance(&self, p: Point<T>) -> T {
        (p - self.center).norm() - self.radius
    }
}

/// Side of a directed line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[inline]
pub fn point<T: Scalar>(re: f64, im: f64) -> Point<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub fn is_finite<T: Scalar>(p: Point<T>) -> bool {
    p.re.is_finite() && p.im.is_finite()
}

/// 2D cross product `a × b`.
#[inline]
pub fn cross<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    a.re * b.im - a.im * b.re
}

#[inline]
pub fn dot<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    a.re * b.re + a.im * b.im
}

#[inline]
pub fn distance<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    (a - b).norm()
}

fn coincidence_scale<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    T::one().max(a.norm()).max(b.norm())
}

fn coincidence_tol<T: Scalar>() -> T {
    T::lit(COINCIDENT_REL).max(T::epsilon() * T::lit(4.0))
}

/// Whether `a` and `b` coincide up to the relative tolerance.
pub fn coincident<T: Scalar>(a: Point<T>, b: Point<T>) -> bool {
    distance(a, b) <= coincidence_tol::<T>() * coincidence_scale(a, b)
}

/// Scale-invariant collinearity test `|(b−a)×(c−a)| ≤ tol·|b−a|·|c−a|`.
pub fn collinear<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> bool {
    let u = b - a;
    let v = c - a;
    let tol = T::lit(COLLINEAR_REL).max(T::epsilon() * T::lit(4.0));
    cross(u, v).abs() <= tol * u.norm() * v.norm()
}

/// Side of `p` relative to the directed line `a → b`, `None` when on it.
pub fn side_of<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> Option<Side> {
    let c = cross(b - a, p - a);
    if c > T::zero() {
        Some(Side::Left)
    } else if c < T::zero() {
        Some(Side::Right)
    } else {
        None
    }
}

/// Rotates `p` about `center` by `angle` radians counterclockwise.
pub fn rotate<T: Scalar>(p: Point<T>, center: Point<T>, angle: T) -> Point<T> {
    center + (p - center) * Complex::from_polar(T::one(), angle)
}

/// The apex `t` of the equilateral triangle on `a b`, on the requested side of `a → b`.
pub fn third_equilateral_point<T: Scalar>(a: Point<T>, b: Point<T>, side: Side) -> Result<Point<T>> {
    if coincident(a, b) {
        return Err(Error::CoincidentPoints);
    }
    let angle = match side {
        Side::Left => T::FRAC_PI_3(),
        Side::Right => -T::FRAC_PI_3(),
    };
    Ok(rotate(b, a, angle))
}

/// Circle through three non-collinear points.
pub fn circumcircle<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> Result<Circle<T>> {
    if collinear(a, b, c) {
        return Err(Error::CollinearPoints);
    }
    let u = b - a;
    let v = c - a;
    let d = T::lit(2.0) * cross(u, v);
    let uu = u.norm_sqr();
    let vv = v.norm_sqr();
    let offset = Complex::new(v.im * uu - u.im * vv, u.re * vv - v.re * uu) / d;
    let center = a + offset;
    Ok(Circle {
        center,
        radius: offset.norm(),
    })
}

/// Intersections of the line through `a`, `b` with `circle`, as `(t, a + t(b − a))`
/// sorted by the line parameter `t`.
pub fn line_circle_intersections<T: Scalar>(
    a: Point<T>,
    b: Point<T>,
    circle: &Circle<T>,
) -> Result<Vec<(T, Point<T>)>> {
    if coincident(a, b) {
        return Err(Error::CoincidentPoints);
    }
    let d = b - a;
    let f = a - circle.center;
    let qa = d.norm_sqr();
    let qb = T::lit(2.0) * dot(f, d);
    let qc = f.norm_sqr() - circle.radius * circle.radius;
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if disc < T::zero() {
        return Ok(Vec::new());
    }
    let root = disc.sqrt();
    // numerically stable pair of roots
    let q = if qb >= T::zero() {
        -(qb + root) / T::lit(2.0)
    } else {
        -(qb - root) / T::lit(2.0)
    };
    let mut ts = if q == T::zero() {
        vec![T::zero()]
    } else {
        let t1 = q / qa;
        let t2 = qc / q;
        if disc == T::zero() {
            vec![t1]
        } else {
            vec![t1, t2]
        }
    };
    ts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    Ok(ts.into_iter().map(|t| (t, a + d * t)).collect())
}

/// Convex angle `∠a apex b` in `[0, π]`.
pub fn convex_angle<T: Scalar>(apex: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let u = a - apex;
    let v = b - apex;
    cross(u, v).atan2(dot(u, v)).abs()
}

/// Signed turn at `at` when walking `prev → at → next`, in `[−π, π]`.
pub fn turn_angle<T: Scalar>(prev: Point<T>, at: Point<T>, next: Point<T>) -> T {
    let u = at - prev;
    let v = next - at;
    cross(u, v).atan2(dot(u, v))
}

/// `(|ab| + |bc|) / |ac|`.
pub fn reverse_triangle_ratio<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> Result<T> {
    if coincident(a, c) {
        return Err(Error::CoincidentPoints);
    }
    Ok((distance(a, b) + distance(b, c)) / distance(a, c))
}

/// Exterior angle at `b` of triangle `abc`, i.e. `|turn(a, b, c)|`.
pub fn exterior_angle<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    turn_angle(a, b, c).abs()
}

/// Polygonal path with the signed turn stored at each internal vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPath<T> {
    vertices: Vec<Point<T>>,
    turns: Vec<T>,
}

impl<T: Scalar> PolyPath<T> {
    /// Builds a path and computes its turns from the vertices.
    pub fn from_vertices(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParameter(
                "a path needs at least two vertices".into(),
            ));
        }
        if !vertices.iter().all(|&p| is_finite(p)) {
            return Err(Error::InvalidParameter("non-finite path vertex".into()));
        }
        let turns = vertices
            .windows(3)
            .map(|w| turn_angle(w[0], w[1], w[2]))
            .collect();
        Ok(Self { vertices, turns })
    }

    /// Builds a path from vertices and externally supplied turns, checking that
    /// they agree with the geometry to `tol` radians.
    pub fn with_turns(vertices: Vec<Point<T>>, turns: Vec<T>, tol: T) -> Result<Self> {
        let path = Self::from_vertices(vertices)?;
        if turns.len() != path.turns.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} turns, got {}",
                path.turns.len(),
                turns.len()
            )));
        }
        for (i, (&given, &actual)) in turns.iter().zip(&path.turns).enumerate() {
            if (given - actual).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "turn {i} is {given} but the vertices give {actual}"
                )));
            }
        }
        Ok(Self { turns, ..path })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn turns(&self) -> &[T] {
        &self.turns
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn start(&self) -> Point<T> {
        self.vertices[0]
    }

    pub fn end(&self) -> Point<T> {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn length(&self) -> T {
        self.vertices
            .windows(2)
            .fold(T::zero(), |acc, w| acc + distance(w[0], w[1]))
    }

    pub fn endpoint_distance(&self) -> T {
        distance(self.start(), self.end())
    }

    pub fn kappa(&self) -> T {
        path_kappa(self)
    }
}

/// Largest absolute sum of turns over a contiguous window.
pub fn path_kappa<T: Scalar>(path: &PolyPath<T>) -> T {
    max_window_abs_sum(path.turns())
}

pub(crate) fn max_window_abs_sum<T: Scalar>(values: &[T]) -> T {
    // Kadane on both signs
    let mut best = T::zero();
    let mut run_max = T::zero();
    let mut run_min = T::zero();
    for &v in values {
        run_max = v.max(run_max + v);
        run_min = v.min(run_min + v);
        best = best.max(run_max.abs()).max(run_min.abs());
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtReport<T> {
    pub kappa: T,
    pub length_ratio: T,
    pub bound: T,
    pub holds: bool,
}

/// Compares the path's length/chord ratio with `1 / cos(κ/2)`.
pub fn schmidt_bound_check<T: Scalar>(path: &PolyPath<T>) -> Result<SchmidtReport<T>> {
    let kappa = path.kappa();
    if kappa >= T::PI() {
        return Err(Error::KappaTooLarge {
            kappa: kappa.as_f64(),
        });
    }
    if coincident(path.start(), path.end()) {
        return Err(Error::CoincidentEndpoints);
    }
    let length_ratio = path.length() / path.endpoint_distance();
    let bound = (kappa / T::lit(2.0)).cos().recip();
    Ok(SchmidtReport {
        kappa,
        length_ratio,
        bound,
        holds: length_ratio <= bound + T::lit(SCHMIDT_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn p(re: f64, im: f64) -> Point<f64> {
        Complex::new(re, im)
    }

    fn assert_close(a: Point<f64>, b: Point<f64>, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn rotate_examples() {
        assert_close(
            rotate(p(1.0, 0.0), p(0.0, 0.0), FRAC_PI_3),
            p(FRAC_PI_3.cos(), FRAC_PI_3.sin()),
            1e-15,
        );
        assert_eq!(rotate(p(0.3, -2.0), p(0.3, -2.0), 1.2), p(0.3, -2.0));
        assert_close(rotate(p(2.0, 0.0), p(1.0, 0.0), PI), p(0.0, 0.0), 1e-15);
    }

    #[test]
    fn equilateral_examples() {
        let s3 = 3f64.sqrt();
        let a = p(0.0, 0.0);
        assert_close(
            third_equilateral_point(a, p(1.0, 0.0), Side::Left).unwrap(),
            p(0.5, s3 / 2.0),
            1e-15,
        );
        assert_close(
            third_equilateral_point(a, p(1.0, 0.0), Side::Right).unwrap(),
            p(0.5, -s3 / 2.0),
            1e-15,
        );
        // hand solution of |ta| = |tb| = 2 left of the upward segment
        assert_close(
            third_equilateral_point(a, p(0.0, 2.0), Side::Left).unwrap(),
            p(-s3, 1.0),
            1e-15,
        );
        assert_eq!(
            third_equilateral_point(a, p(1e-14, 0.0), Side::Left),
            Err(Error::CoincidentPoints)
        );
    }

    #[test]
    fn circumcircle_examples() {
        let s3 = 3f64.sqrt();
        let c = circumcircle(p(0.0, 0.0), p(1.0, 0.0), p(0.5, s3 / 2.0)).unwrap();
        assert_close(c.center, p(0.5, s3 / 6.0), 1e-15);
        assert_relative_eq!(c.radius, 1.0 / s3, max_relative = 1e-14);

        let c = circumcircle(p(0.0, 0.0), p(2.0, 0.0), p(0.0, 2.0)).unwrap();
        assert_close(c.center, p(1.0, 1.0), 1e-15);
        assert_relative_eq!(c.radius, 2f64.sqrt(), max_relative = 1e-15);

        assert_eq!(
            circumcircle(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 1e-15)),
            Err(Error::CollinearPoints)
        );
    }

    #[test]
    fn line_circle_hits_both_sides() {
        let c = Circle {
            center: p(0.0, 0.0),
            radius: 1.0,
        };
        let hits = line_circle_intersections(p(-2.0, 0.0), p(2.0, 0.0), &c).unwrap();
        assert_eq!(hits.len(), 2);
        assert_close(hits[0].1, p(-1.0, 0.0), 1e-15);
        assert_close(hits[1].1, p(1.0, 0.0), 1e-15);
        assert!(line_circle_intersections(p(-2.0, 3.0), p(2.0, 3.0), &c)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn reverse_triangle_examples() {
        assert_relative_eq!(
            reverse_triangle_ratio(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)).unwrap(),
            1.0
        );
        // exterior angle π/2, bound 1/cos(π/4) attained
        let r = reverse_triangle_ratio(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0)).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), max_relative = 1e-15);
        let theta = exterior_angle(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0));
        assert_relative_eq!(theta, PI / 2.0, max_relative = 1e-15);
        assert!(reverse_triangle_ratio(p(1.0, 1.0), p(0.0, 0.0), p(1.0, 1.0)).is_err());
    }

    fn path_with_turns(turns: &[f64]) -> PolyPath<f64> {
        let mut heading = 0.0;
        let mut v = vec![p(0.0, 0.0), p(1.0, 0.0)];
        for &t in turns {
            heading += t;
            let last = *v.last().unwrap();
            v.push(last + Complex::from_polar(1.0, heading));
        }
        PolyPath::from_vertices(v).unwrap()
    }

    fn brute_kappa(turns: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for i in 0..turns.len() {
            for j in i..turns.len() {
                best = best.max(turns[i..=j].iter().sum::<f64>().abs());
            }
        }
        best
    }

    #[test]
    fn kappa_examples() {
        let e = 0.2;
        assert_relative_eq!(path_with_turns(&[e, -e]).kappa(), e, max_relative = 1e-12);
        assert_relative_eq!(
            path_with_turns(&[0.1, 0.2, -0.05]).kappa(),
            0.3,
            max_relative = 1e-12
        );
        assert_eq!(
            PolyPath::from_vertices(vec![p(0.0, 0.0), p(1.0, 0.0)])
                .unwrap()
                .kappa(),
            0.0
        );
    }

    #[test]
    fn with_turns_rejects_mismatch() {
        let v = vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 1.0)];
        assert!(PolyPath::with_turns(v.clone(), vec![PI / 4.0], 1e-12).is_ok());
        assert!(PolyPath::with_turns(v, vec![0.1], 1e-12).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let straight = PolyPath::from_vertices(vec![p(0.0, 0.0), p(1.0, 0.0), p(3.0, 0.0)]).unwrap();
        let r = schmidt_bound_check(&straight).unwrap();
        assert_relative_eq!(r.length_ratio, 1.0);
        assert_relative_eq!(r.bound, 1.0);
        assert!(r.holds);

        let theta = 0.7;
        let bent = path_with_turns(&[theta]);
        let r = schmidt_bound_check(&bent).unwrap();
        assert!(r.length_ratio <= 1.0 / (theta / 2.0).cos() + 1e-12);
        assert!(r.holds);

        let spiral = path_with_turns(&[1.2, 1.2, 1.2]);
        assert!(matches!(
            schmidt_bound_check(&spiral),
            Err(Error::KappaTooLarge { .. })
        ));
        let closed = PolyPath::from_vertices(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 0.0)]).unwrap();
        assert!(schmidt_bound_check(&closed).is_err());
        let back = PolyPath::from_vertices(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)]).unwrap();
        assert_eq!(schmidt_bound_check(&back), Err(Error::KappaTooLarge { kappa: back.kappa() }));
        let loop_back = PolyPath::from_vertices(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(0.0, 0.0)]);
        assert!(loop_back.is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let t = third_equilateral_point(Complex::new(0.0f32, 0.0), Complex::new(1.0, 0.0), Side::Left)
            .unwrap();
        assert!((t - Complex::new(0.5f32, 0.866_025_4)).norm() < 1e-6);
        let c = circumcircle(Complex::new(0.0f32, 0.0), Complex::new(2.0, 0.0), Complex::new(0.0, 2.0))
            .unwrap();
        assert!((c.center - Complex::new(1.0f32, 1.0)).norm() < 1e-6);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -10.0f64..10.0
    }

    fn pt() -> impl Strategy<Value = Point<f64>> {
        (coord(), coord()).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn rotation_is_an_isometry(a in pt(), b in pt(), c in pt(), theta in -7.0f64..7.0) {
            let d0 = distance(a, b);
            let d1 = distance(rotate(a, c, theta), rotate(b, c, theta));
            prop_assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0));
            let r0 = distance(a, c);
            prop_assert!((distance(rotate(a, c, theta), c) - r0).abs() <= 1e-12 * r0.max(1.0));
        }

        #[test]
        fn equilateral_sides_mirror(a in pt(), b in pt()) {
            prop_assume!(distance(a, b) > 1e-6);
            let l = third_equilateral_point(a, b, Side::Left).unwrap();
            let r = third_equilateral_point(a, b, Side::Right).unwrap();
            let side = distance(a, b);
            prop_assert!((distance(l, a) - side).abs() < 1e-10 * side.max(1.0));
            prop_assert!((distance(l, b) - side).abs() < 1e-10 * side.max(1.0));
            prop_assert_eq!(side_of(a, b, l), Some(Side::Left));
            prop_assert_eq!(side_of(a, b, r), Some(Side::Right));
            let mid = (l + r) * 0.5;
            prop_assert!(cross(b - a, mid - a).abs() <= 1e-10 * side.max(1.0) * side.max(1.0));
        }

        #[test]
        fn circumcircle_is_equidistant(a in pt(), b in pt(), c in pt()) {
            prop_assume!(!collinear(a, b, c));
            let u = b - a;
            let v = c - a;
            prop_assume!(cross(u, v).abs() > 1e-3 * u.norm() * v.norm());
            let circle = circumcircle(a, b, c).unwrap();
            for q in [a, b, c] {
                prop_assert!((distance(q, circle.center) - circle.radius).abs() <= 1e-10 * circle.radius);
            }
        }

        #[test]
        fn reverse_triangle_bound(a in pt(), b in pt(), c in pt()) {
            prop_assume!(distance(a, c) > 1e-6);
            let theta = exterior_angle(a, b, c);
            prop_assume!(theta < PI - 1e-6);
            let r = reverse_triangle_ratio(a, b, c).unwrap();
            prop_assert!(r <= 1.0 / (theta / 2.0).cos() + 1e-12 * r);
        }

        #[test]
        fn kappa_matches_enumeration(turns in prop::collection::vec(-1.0f64..1.0, 0..12)) {
            let k = max_window_abs_sum(&turns);
            prop_assert!((k - brute_kappa(&turns)).abs() < 1e-12);
            prop_assert!(k <= turns.iter().map(|t| t.abs()).sum::<f64>() + 1e-12);
        }

        #[test]
        fn schmidt_holds_on_random_paths(
            turns in prop::collection::vec(-0.4f64..0.4, 1..12),
            lengths in prop::collection::vec(0.05f64..2.0, 13),
        ) {
            let mut heading = 0.0;
            let mut v = vec![p(0.0, 0.0), p(lengths[0], 0.0)];
            for (i, &t) in turns.iter().enumerate() {
                heading += t;
                let last = *v.last().unwrap();
                v.push(last + Complex::from_polar(lengths[i + 1], heading));
            }
            let path = PolyPath::from_vertices(v).unwrap();
            prop_assume!(path.kappa() < PI - 1e-3);
            let report = schmidt_bound_check(&path).unwrap();
            prop_assert!(report.holds, "{report:?}");
        }

        // |xa| ≤ |xb| + |xc| for equilateral abc, equality only on the minor arc bc
        #[test]
        fn equilateral_triangle_inequality(x in pt(), b in pt(), c in pt()) {
            prop_assume!(distance(b, c) > 1e-3);
            let a = third_equilateral_point(b, c, Side::Right).unwrap();
            let lhs = distance(x, a);
            let rhs = distance(x, b) + distance(x, c);
            prop_assert!(lhs <= rhs + 1e-10);
            if rhs - lhs < 1e-9 {
                let circle = circumcircle(a, b, c).unwrap();
                prop_assert!(circle.signed_distance(x).abs() < 1e-6);
                prop_assert!((convex_angle(x, b, c) - 2.0 * PI / 3.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn equilateral_equality_on_minor_arc() {
        let b = p(0.0, 0.0);
        let c = p(1.0, 0.0);
        let a = third_equilateral_point(b, c, Side::Right).unwrap();
        let circle = circumcircle(a, b, c).unwrap();
        // points of the arc bc away from a
        for t in [0.1, 0.3, 0.5, 0.9] {
            let ang_b = (b - circle.center).arg();
            let ang_c = (c - circle.center).arg();
            let mut span = ang_c - ang_b;
            if span < 0.0 {
                span += 2.0 * PI;
            }
            if span > PI {
                span -= 2.0 * PI;
            }
            let x = circle.center + Complex::from_polar(circle.radius, ang_b + t * span);
            let gap = distance(x, b) + distance(x, c) - distance(x, a);
            assert!(gap.abs() < 1e-12, "gap {gap}");
            assert!((convex_angle(x, b, c) - 2.0 * PI / 3.0).abs() < 1e-9);
        }
    }
}
