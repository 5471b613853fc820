//! Embedded trees and the constructions of ε-approximate Steiner trees.
//!
//! All builders except the circle construction put the root terminal at the
//! origin with the root edge leaving along the requested direction (`+x` by
//! default), so the binary family reproduces `p_0 = 0`, `p_1 = 1`.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{convex_angle, distance, is_finite, Point};
use crate::scalar::Scalar;
use crate::topology::{complete_binary_topology, FullTopology, HeapIndex, NodeId, NodeKind};

/// Edges shorter than this make angle measurement undefined.
pub const DEGENERATE_EDGE: f64 = 1e-12;

/// A full topology together with a coordinate for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTree<T> {
    topology: FullTopology,
    positions: Vec<Point<T>>,
}

impl<T: Scalar> EmbeddedTree<T> {
    pub fn new(topology: FullTopology, positions: Vec<Point<T>>) -> Result<Self> {
        if positions.len() != topology.node_count() {
            return Err(Error::InvalidParameter(format!(
                "{} positions for {} nodes",
                positions.len(),
                topology.node_count()
            )));
        }
        if let Some(v) = positions.iter().position(|&p| !is_finite(p)) {
            return Err(Error::InvalidParameter(format!(
                "node {v} has a non-finite position"
            )));
        }
        Ok(Self {
            topology,
            positions,
        })
    }

    pub fn topology(&self) -> &FullTopology {
        &self.topology
    }

    pub fn positions(&self) -> &[Point<T>] {
        &self.positions
    }

    pub fn position(&self, v: NodeId) -> Point<T> {
        self.positions[v]
    }

    pub fn into_parts(self) -> (FullTopology, Vec<Point<T>>) {
        (self.topology, self.positions)
    }

    /// Terminal coordinates keyed by node id.
    pub fn terminal_positions(&self) -> BTreeMap<NodeId, Point<T>> {
        self.topology
            .terminals()
            .map(|t| (t, self.positions[t]))
            .collect()
    }

    /// Length of the edge from `child` to its parent.
    pub fn edge_length(&self, child: NodeId) -> T {
        let p = self
            .topology
            .parent(child)
            .expect("edge_length is keyed by a non-root node");
        distance(self.positions[child], self.positions[p])
    }

    /// `(child, parent, length)` for every edge, in pre-order.
    pub fn edge_lengths(&self) -> Vec<(NodeId, NodeId, T)> {
        self.topology
            .edges()
            .into_iter()
            .map(|(c, p)| (c, p, distance(self.positions[c], self.positions[p])))
            .collect()
    }

    /// Total edge length.
    pub fn length(&self) -> T {
        self.topology
            .edges()
            .into_iter()
            .fold(T::zero(), |acc, (c, p)| {
                acc + distance(self.positions[c], self.positions[p])
            })
    }

    /// Convex angles at a Steiner point between neighbour pairs
    /// `(n0, n1), (n1, n2), (n2, n0)` in adjacency order.
    pub fn steiner_angles(&self, s: NodeId) -> [T; 3] {
        let n = self.topology.neighbors(s);
        let at = self.positions[s];
        let pos = |i: usize| self.positions[n[i]];
        [
            convex_angle(at, pos(0), pos(1)),
            convex_angle(at, pos(1), pos(2)),
            convex_angle(at, pos(2), pos(0)),
        ]
    }

    /// Largest deviation of a Steiner angle from 2π/3.
    pub fn measure_eps(&self) -> Result<T> {
        let tol = T::lit(DEGENERATE_EDGE);
        let mut worst = T::zero();
        for s in self.topology.steiner_points() {
            for &w in self.topology.neighbors(s) {
                let len = distance(self.positions[s], self.positions[w]);
                if len < tol {
                    return Err(Error::DegenerateEdge {
                        node: s,
                        length: len.as_f64(),
                    });
                }
            }
            for a in self.steiner_angles(s) {
                worst = worst.max((a - T::two_thirds_pi()).abs());
            }
        }
        Ok(worst)
    }

    /// Children of a Steiner point ordered counterclockwise starting from the
    /// direction of its parent: `[first, second]`.
    pub fn ccw_children(&self, v: NodeId) -> [NodeId; 2] {
        let parent = self
            .topology
            .parent(v)
            .expect("Steiner points always have a parent");
        self.ccw_after(v, parent)
    }

    /// The two neighbours of Steiner point `v` other than `from`, in
    /// counterclockwise order starting at the direction of `from`.
    pub fn ccw_after(&self, v: NodeId, from: NodeId) -> [NodeId; 2] {
        let others: Vec<NodeId> = self
            .topology
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| w != from)
            .collect();
        debug_assert_eq!(others.len(), 2);
        let at = self.positions[v];
        let base = self.positions[from] - at;
        let ccw = |w: NodeId| {
            let a = ((self.positions[w] - at) * base.conj()).arg();
            if a <= T::zero() {
                a + T::lit(2.0) * T::PI()
            } else {
                a
            }
        };
        if base.norm() == T::zero()
            || (self.positions[others[0]] - at).norm() == T::zero()
            || (self.positions[others[1]] - at).norm() == T::zero()
        {
            return [others[0], others[1]];
        }
        if ccw(others[0]) <= ccw(others[1]) {
            [others[0], others[1]]
        } else {
            [others[1], others[0]]
        }
    }

    /// Replaces node positions, keeping the topology.
    pub fn with_positions(&self, positions: Vec<Point<T>>) -> Result<Self> {
        Self::new(self.topology.clone(), positions)
    }
}

/// Parameters of the binary family `T_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TkParams<T> {
    pub k: u32,
    pub eps: T,
}

impl<T: Scalar> TkParams<T> {
    pub fn new(k: u32, eps: T) -> Result<Self> {
        let p = Self { k, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.k > crate::topology::MAX_BINARY_DEPTH {
            return Err(Error::KTooLarge { k: self.k });
        }
        if !(self.eps >= T::zero() && self.eps < T::FRAC_PI_3()) {
            return Err(Error::EpsOutOfRange {
                eps: self.eps.as_f64(),
                range: "[0, pi/3)",
            });
        }
        Ok(())
    }

    /// `ω = e^{iπ/3}`.
    pub fn omega(&self) -> Point<T> {
        Complex::from_polar(T::one(), T::FRAC_PI_3())
    }

    /// `z = e^{iε}`.
    pub fn z(&self) -> Point<T> {
        Complex::from_polar(T::one(), self.eps)
    }
}

/// `ω^a` for integer `a`, reduced modulo 6.
pub(crate) fn omega_pow<T: Scalar>(a: i32) -> Point<T> {
    let r = a.rem_euclid(6);
    Complex::from_polar(T::one(), T::lit(r as f64) * T::FRAC_PI_3())
}

/// `T_k` from the two-term recurrence on heap indices.
pub fn build_tk_recursive<T: Scalar>(params: TkParams<T>) -> Result<EmbeddedTree<T>> {
    params.validate()?;
    let topology = complete_binary_topology(params.k)?;
    let n = topology.node_count();
    let half = T::lit(0.5);
    let right = params.omega().conj() * params.z() * half;
    let left = params.omega() * params.z() * half;
    let mut p = vec![Complex::new(T::zero(), T::zero()); n];
    p[1] = Complex::new(T::one(), T::zero());
    for i in 1..n / 2 {
        let d = p[i] - p[i / 2];
        p[2 * i] = p[i] + d * right;
        p[2 * i + 1] = p[i] + d * left;
    }
    EmbeddedTree::new(topology, p)
}

/// `T_k` from the explicit sum `p_i = Σ_j ω^{a_j(i)} (z/2)^j`.
pub fn build_tk_closed_form<T: Scalar>(params: TkParams<T>) -> Result<EmbeddedTree<T>> {
    params.validate()?;
    let topology = complete_binary_topology(params.k)?;
    let n = topology.node_count();
    let half_z = params.z() * T::lit(0.5);
    let max_level = params.k as usize + 1;
    let mut half_z_pow = Vec::with_capacity(max_level);
    let mut acc = Complex::new(T::one(), T::zero());
    for _ in 0..max_level {
        half_z_pow.push(acc);
        acc = acc * half_z;
    }
    let omega: Vec<Point<T>> = (0..6).map(omega_pow).collect();
    let mut p = vec![Complex::new(T::zero(), T::zero()); n];
    for (i, slot) in p.iter_mut().enumerate().skip(1) {
        let a = HeapIndex::new(i as u64)?.turn_exponents();
        *slot = a
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |s, (j, &aj)| {
                s + omega[aj.rem_euclid(6) as usize] * half_z_pow[j]
            });
    }
    EmbeddedTree::new(topology, p)
}

/// Signed deviations from 2π/3 of the three angles at a Steiner point,
/// counterclockwise: parent→first child, first→second child, second child→parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleErrors<T> {
    pub parent_first: T,
    pub first_second: T,
    pub second_parent: T,
}

impl<T: Scalar> AngleErrors<T> {
    pub fn zero() -> Self {
        Self {
            parent_first: T::zero(),
            first_second: T::zero(),
            second_parent: T::zero(),
        }
    }

    /// Completes the triple so the three angles sum to 2π.
    pub fn from_two(parent_first: T, first_second: T) -> Self {
        Self {
            parent_first,
            first_second,
            second_parent: -(parent_first + first_second),
        }
    }

    pub fn angles(&self) -> [T; 3] {
        let base = T::two_thirds_pi();
        [
            base + self.parent_first,
            base + self.first_second,
            base + self.second_parent,
        ]
    }

    pub fn max_abs(&self) -> T {
        self.parent_first
            .abs()
            .max(self.first_second.abs())
            .max(self.second_parent.abs())
    }

    fn validate(&self, node: NodeId) -> Result<()> {
        let angles = self.angles();
        let sum = angles[0] + angles[1] + angles[2];
        let two_pi = T::lit(2.0) * T::PI();
        if (sum - two_pi).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return Err(Error::InvalidAngleTriple {
                node,
                reason: format!("angles sum to {sum}, not 2pi"),
            });
        }
        if let Some(a) = angles.iter().find(|&&a| !(a > T::zero() && a < T::PI())) {
            return Err(Error::InvalidAngleTriple {
                node,
                reason: format!("angle {a} outside (0, pi)"),
            });
        }
        Ok(())
    }
}

/// Embeds a topology with prescribed edge lengths (keyed by the child end of
/// each edge) and per-Steiner angle errors. Children are used in the
/// topology's stored order.
pub fn build_from_angle_errors<T: Scalar>(
    topology: &FullTopology,
    root_edge_dir: Point<T>,
    edge_lengths: &BTreeMap<NodeId, T>,
    errors: &BTreeMap<NodeId, AngleErrors<T>>,
) -> Result<EmbeddedTree<T>> {
    let dir_len = root_edge_dir.norm();
    if !(dir_len > T::zero()) || !is_finite(root_edge_dir) {
        return Err(Error::InvalidParameter("root edge direction is zero".into()));
    }
    let length_of = |v: NodeId| -> Result<T> {
        let l = *edge_lengths.get(&v).ok_or_else(|| {
            Error::InvalidParameter(format!("missing length for the edge into node {v}"))
        })?;
        if !(l > T::zero()) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge into node {v} has length {l}"
            )));
        }
        Ok(l)
    };
    let zero = Complex::new(T::zero(), T::zero());
    let mut pos = vec![zero; topology.node_count()];
    let root = topology.root();
    let first = topology.root_child();
    pos[first] = root_edge_dir / dir_len * length_of(first)?;
    for &v in topology.preorder() {
        if !topology.is_steiner(v) {
            continue;
        }
        let e = errors.get(&v).copied().ok_or_else(|| Error::InvalidAngleTriple {
            node: v,
            reason: "no angle errors given".into(),
        })?;
        e.validate(v)?;
        let [a0, a1, _] = e.angles();
        let parent = topology.parent(v).expect("Steiner points have parents");
        let to_parent = pos[parent] - pos[v];
        let to_parent = to_parent / to_parent.norm();
        let kids = topology.children(v);
        let d_first = to_parent * Complex::from_polar(T::one(), a0);
        let d_second = d_first * Complex::from_polar(T::one(), a1);
        pos[kids[0]] = pos[v] + d_first * length_of(kids[0])?;
        pos[kids[1]] = pos[v] + d_second * length_of(kids[1])?;
    }
    debug_assert_eq!(pos[root], zero);
    EmbeddedTree::new(topology.clone(), pos)
}

/// Three-terminal tree: root `t0` (id 0), `t1` (1), `t2` (2), Steiner point `s` (3).
///
/// `e1 = ∠t0 s t1 − 2π/3`, `e2 = ∠t0 s t2 − 2π/3`, `e3 = ∠t1 s t2 − 2π/3`, with
/// `t0, t1, t2` counterclockwise around `s`.
pub fn three_terminal_tree<T: Scalar>(
    e1: T,
    e2: T,
    e3: T,
    root_length: T,
    other_lengths: [T; 2],
) -> Result<EmbeddedTree<T>> {
    use NodeKind::*;
    let topology =
        FullTopology::new(vec![Terminal, Terminal, Terminal, Steiner], vec![vec![3], vec![3], vec![3], vec![0, 1, 2]], 0)?;
    let lengths = BTreeMap::from([(3, root_length), (1, other_lengths[0]), (2, other_lengths[1])]);
    let errors = BTreeMap::from([(
        3,
        AngleErrors {
            parent_first: e1,
            first_second: e3,
            second_parent: e2,
        },
    )]);
    build_from_angle_errors(&topology, Complex::new(T::one(), T::zero()), &lengths, &errors)
}

/// Extremal three-terminal witness: errors `(ε/2, ε/2, −ε)`, root edge `δ`, unit legs.
///
/// The angle between the legs is `2π/3 − ε`, so the shortest tree stays full
/// as `δ → 0`. With the opposite signs that angle exceeds `2π/3` and the
/// shortest tree collapses onto the root terminal.
pub fn witness3<T: Scalar>(eps: T, delta: T) -> Result<EmbeddedTree<T>> {
    check_small_eps(eps)?;
    let half = eps / T::lit(2.0);
    three_terminal_tree(half, half, -eps, delta, [T::one(), T::one()])
}

/// Ids used by the four-terminal constructions.
pub mod quartet_ids {
    use crate::topology::NodeId;
    pub const T1: NodeId = 0;
    pub const T2: NodeId = 1;
    pub const T3: NodeId = 2;
    pub const T4: NodeId = 3;
    pub const S1: NodeId = 4;
    pub const S2: NodeId = 5;
}

/// Four-terminal tree with cherries `(t1, t2)` at `s1` and `(t3, t4)` at `s2`.
///
/// `e1 = ∠t1 s1 t2 − 2π/3`, `e2 = ∠t1 s1 s2 − 2π/3`, `e3 = ∠s1 s2 t4 − 2π/3`,
/// `e4 = ∠t3 s2 t4 − 2π/3`; `s2, t1, t2` are counterclockwise around `s1` and
/// `s1, t4, t3` counterclockwise around `s2`. Rooted at `t2`.
pub fn four_terminal_tree<T: Scalar>(
    errors: [T; 4],
    middle: T,
    outer: [T; 4],
) -> Result<EmbeddedTree<T>> {
    use quartet_ids::*;
    use NodeKind::*;
    let [e1, e2, e3, e4] = errors;
    let mut adjacency = vec![Vec::new(); 6];
    adjacency[T1] = vec![S1];
    adjacency[T2] = vec![S1];
    adjacency[T3] = vec![S2];
    adjacency[T4] = vec![S2];
    adjacency[S1] = vec![T2, S2, T1];
    adjacency[S2] = vec![S1, T4, T3];
    let topology = FullTopology::new(
        vec![Terminal, Terminal, Terminal, Terminal, Steiner, Steiner],
        adjacency,
        T2,
    )?;
    let lengths = BTreeMap::from([
        (T1, outer[0]),
        (S1, outer[1]),
        (T3, outer[2]),
        (T4, outer[3]),
        (S2, middle),
    ]);
    let errors = BTreeMap::from([
        (
            S1,
            AngleErrors {
                parent_first: -(e1 + e2),
                first_second: e2,
                second_parent: e1,
            },
        ),
        (
            S2,
            AngleErrors {
                parent_first: e3,
                first_second: e4,
                second_parent: -(e3 + e4),
            },
        ),
    ]);
    build_from_angle_errors(&topology, Complex::new(T::one(), T::zero()), &lengths, &errors)
}

/// Extremal four-terminal witness: errors `(0, ε, −ε, 0)`, middle edge `δ`, unit outer edges.
///
/// For `ε > π/6` the edges `s1t2` and `s2t4` cross once `δ` is small and the
/// shortest tree for this topology is degenerate.
pub fn witness4<T: Scalar>(eps: T, delta: T) -> Result<EmbeddedTree<T>> {
    check_small_eps(eps)?;
    four_terminal_tree([T::zero(), eps, -eps, T::zero()], delta, [T::one(); 4])
}

fn check_small_eps<T: Scalar>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::FRAC_PI_3()) {
        return Err(Error::EpsOutOfRange {
            eps: eps.as_f64(),
            range: "(0, pi/3)",
        });
    }
    Ok(())
}

/// The doubled concentric-circle tree for large ε.
#[derive(Debug, Clone)]
pub struct CircleConstruction<T> {
    pub tree: EmbeddedTree<T>,
    pub k: u32,
    pub eps: T,
    pub delta: T,
    /// Common centre of the first half's circles.
    pub center: Point<T>,
    /// Centre translated with the second half.
    pub shifted_center: Point<T>,
}

impl<T: Scalar> CircleConstruction<T> {
    /// `r = sin(π/3 − ε/2)`.
    pub fn ratio(&self) -> T {
        (T::FRAC_PI_3() - self.eps / T::lit(2.0)).sin()
    }

    /// Node id of `p_j` (heap index `j`) in the first half, or of `p'_j` in the second.
    pub fn node(&self, j: usize, shifted: bool) -> NodeId {
        circle_node(self.k, j, shifted)
    }

    /// Length of the degenerate comparison tree joining every terminal to its
    /// half's centre and the two centres to each other.
    pub fn star_length(&self) -> T {
        let topo = self.tree.topology();
        let per_half = (1usize << (self.k + 1)) - 1;
        topo.terminals().fold(distance(self.center, self.shifted_center), |acc, t| {
            let c = if t < per_half {
                self.center
            } else {
                self.shifted_center
            };
            acc + distance(self.tree.position(t), c)
        })
    }

    /// `δ + 4cos(π/3 − ε/2)(1 − (2r)^k)/(1 − 2r)`, or `δ + 2√3k` at ε = π/3.
    pub fn predicted_length(&self) -> T {
        let two = T::lit(2.0);
        if self.eps == T::FRAC_PI_3() {
            return self.delta + two * T::lit(3.0).sqrt() * T::lit(self.k as f64);
        }
        let r = self.ratio();
        let c = (T::FRAC_PI_3() - self.eps / two).cos();
        self.delta + T::lit(4.0) * c * (T::one() - (two * r).powi(self.k as i32)) / (T::one() - two * r)
    }

    /// `δ + 2(2r)^k`.
    pub fn predicted_star_length(&self) -> T {
        let two = T::lit(2.0);
        self.delta + two * (two * self.ratio()).powi(self.k as i32)
    }

    /// The three angle values that occur at Steiner points.
    pub fn steiner_angle_values(&self) -> [T; 3] {
        let half = self.eps / T::lit(2.0);
        [
            T::two_thirds_pi() - self.eps,
            T::lit(5.0) * T::PI() / T::lit(6.0) - half,
            T::PI() / T::lit(6.0) + half,
        ]
    }

    /// Analytic ε-certificate: largest deviation of the three angle values from 2π/3.
    pub fn eps_certificate(&self) -> T {
        self.steiner_angle_values()
            .iter()
            .fold(T::zero(), |m, &a| m.max((a - T::two_thirds_pi()).abs()))
    }
}

fn circle_node(k: u32, j: usize, shifted: bool) -> NodeId {
    let per_half = (1usize << (k + 1)) - 1;
    (j - 1) + if shifted { per_half } else { 0 }
}

/// Builds the doubled tangent-circle tree with `2^{k+1}` terminals on a circle
/// of radius `r^k`, `r = sin(π/3 − ε/2)`. The centre sits at the origin and
/// `p_1 = i`; the copy is shifted by `δ` along the tangent at `p_1`. Steiner
/// points may coincide (for example `p_5 = p_6`).
pub fn build_circle_construction<T: Scalar>(k: u32, eps: T, delta: T) -> Result<CircleConstruction<T>> {
    if k == 0 || k > crate::topology::MAX_BINARY_DEPTH - 1 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            crate::topology::MAX_BINARY_DEPTH - 1
        )));
    }
    if !(eps >= T::FRAC_PI_3() && eps < T::lit(2.0) * T::FRAC_PI_3()) {
        return Err(Error::EpsOutOfRange {
            eps: eps.as_f64(),
            range: "[pi/3, 2pi/3)",
        });
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let two = T::lit(2.0);
    let r = (T::FRAC_PI_3() - eps / two).sin();
    let theta = T::FRAC_PI_3() - eps / two;
    let cos_theta = theta.cos();
    let heap_n = 1usize << (k + 1);
    let first_leaf = 1usize << k;
    let zero = Complex::new(T::zero(), T::zero());
    let mut half = vec![zero; heap_n];
    half[1] = Complex::new(T::zero(), T::one());
    for j in 1..first_leaf {
        let pj = half[j];
        // pj lies on circle i-1 of radius r^{i-1}; its tangent length to circle i
        // is r^{i-1} cos θ = |pj| cos θ
        let to_center = -pj / pj.norm();
        let reach = pj.norm() * cos_theta;
        half[2 * j] = pj + to_center * Complex::from_polar(reach, -theta);
        half[2 * j + 1] = pj + to_center * Complex::from_polar(reach, theta);
    }
    let center = zero;
    let shift = Complex::new(T::zero(), T::one()) * half[1] / half[1].norm() * delta;

    let per_half = heap_n - 1;
    let mut kinds = vec![NodeKind::Steiner; 2 * per_half];
    let mut edges = Vec::with_capacity(2 * per_half - 1);
    let mut positions = vec![zero; 2 * per_half];
    for shifted in [false, true] {
        for j in 1..heap_n {
            let id = circle_node(k, j, shifted);
            positions[id] = if shifted { half[j] + shift } else { half[j] };
            if j >= first_leaf {
                kinds[id] = NodeKind::Terminal;
            } else {
                edges.push((id, circle_node(k, 2 * j, shifted)));
                edges.push((id, circle_node(k, 2 * j + 1, shifted)));
            }
        }
    }
    edges.push((circle_node(k, 1, false), circle_node(k, 1, true)));
    let root = circle_node(k, first_leaf, false);
    let topology = FullTopology::from_edges(kinds, &edges, root)?;
    let _ = r;
    Ok(CircleConstruction {
        tree: EmbeddedTree::new(topology, positions)?,
        k,
        eps,
        delta,
        center,
        shifted_center: center + shift,
    })
}

/// Turns terminal `t` into a Steiner point with two new terminals at distance
/// `delta`, all three angles at `t` equal to 2π/3. The first new terminal lies
/// to the left of the direction from `t`'s neighbour to `t`.
pub fn split_terminal<T: Scalar>(tree: &EmbeddedTree<T>, t: NodeId, delta: T) -> Result<EmbeddedTree<T>> {
    let topo = tree.topology();
    if t >= topo.node_count() || !topo.is_terminal(t) {
        return Err(Error::NotATerminal(t));
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let s = topo.neighbors(t)[0];
    let away = tree.position(t) - tree.position(s);
    if away.norm() == T::zero() {
        return Err(Error::DegenerateEdge {
            node: t,
            length: 0.0,
        });
    }
    let u = away / away.norm() * delta;
    let (topology, [t1, t2]) = topo.split_terminal(t)?;
    let mut positions = tree.positions().to_vec();
    let at = tree.position(t);
    positions.push(at + u * Complex::from_polar(T::one(), T::FRAC_PI_3()));
    positions.push(at + u * Complex::from_polar(T::one(), -T::FRAC_PI_3()));
    debug_assert_eq!((t1, t2), (positions.len() - 2, positions.len() - 1));
    EmbeddedTree::new(topology, positions)
}

/// Random full ε-approximate tree on `n` terminals.
///
/// The topology comes from merging the `n − 1` non-root terminals in random
/// order, edge lengths are log-uniform in `[0.1, 1]`, and the angle errors at
/// each Steiner point are uniform in `[−ε, ε]` conditioned on the triple
/// summing to zero with every angle in `(0, π)`.
pub fn random_tree<T: Scalar, R: Rng + ?Sized>(n: usize, eps: T, rng: &mut R) -> Result<EmbeddedTree<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 3")));
    }
    if !(eps >= T::zero()) || !eps.is_finite() {
        return Err(Error::EpsOutOfRange {
            eps: eps.as_f64(),
            range: "[0, inf)",
        });
    }
    let mut kinds = vec![NodeKind::Terminal; n];
    let mut edges = Vec::with_capacity(2 * n - 3);
    let mut clusters: Vec<NodeId> = (1..n).collect();
    while clusters.len() > 1 {
        let x = clusters.swap_remove(rng.gen_range(0..clusters.len()));
        let y = clusters.swap_remove(rng.gen_range(0..clusters.len()));
        let s = kinds.len();
        kinds.push(NodeKind::Steiner);
        edges.push((s, x));
        edges.push((s, y));
        clusters.push(s);
    }
    edges.push((0, clusters[0]));
    // list each Steiner point's parent first so stored child order is (x, y)
    let mut adjacency = vec![Vec::new(); kinds.len()];
    adjacency[0].push(clusters[0]);
    adjacency[clusters[0]].push(0);
    for pair in edges[..edges.len() - 1].chunks(2) {
        let s = pair[0].0;
        for &(_, c) in pair {
            adjacency[c].insert(0, s);
        }
    }
    for pair in edges[..edges.len() - 1].chunks(2) {
        let s = pair[0].0;
        for &(_, c) in pair {
            adjacency[s].push(c);
        }
    }
    let topology = FullTopology::new(kinds, adjacency, 0)?;

    let eps_f = eps.as_f64();
    let third = std::f64::consts::FRAC_PI_3;
    let mut lengths = BTreeMap::new();
    for (child, _) in topology.edges() {
        let l = (rng.gen::<f64>() * 10f64.ln()).exp() / 10.0;
        lengths.insert(child, T::lit(l));
    }
    let mut errors = BTreeMap::new();
    for s in topology.steiner_points() {
        let e = loop {
            let a = if eps_f > 0.0 { rng.gen_range(-eps_f..=eps_f) } else { 0.0 };
            let b = if eps_f > 0.0 { rng.gen_range(-eps_f..=eps_f) } else { 0.0 };
            let c = -(a + b);
            let ok = c.abs() <= eps_f && [a, b, c].iter().all(|&x| x > -2.0 * third && x < third);
            if ok {
                break AngleErrors::from_two(T::lit(a), T::lit(b));
            }
        };
        errors.insert(s, e);
    }
    let heading = rng.gen_range(0.0..std::f64::consts::TAU);
    build_from_angle_errors(
        &topology,
        Complex::from_polar(T::one(), T::lit(heading)),
        &lengths,
        &errors,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn c(re: f64, im: f64) -> Point<f64> {
        Complex::new(re, im)
    }

    fn tk(k: u32, eps: f64) -> EmbeddedTree<f64> {
        build_tk_recursive(TkParams::new(k, eps).unwrap()).unwrap()
    }

    #[test]
    fn tk_first_level() {
        let t = tk(1, 0.0);
        let w = Complex::from_polar(1.0, FRAC_PI_3);
        assert!((t.position(2) - (c(1.0, 0.0) + w.conj() * 0.5)).norm() < 1e-15);
        assert!((t.position(3) - (c(1.0, 0.0) + w * 0.5)).norm() < 1e-15);
    }

    #[test]
    fn tk_length_and_edge_halving() {
        for k in [1, 2, 5, 9] {
            for eps in [0.0, 1e-4, 1e-2, 0.9 / (k * k) as f64] {
                let t = tk(k, eps);
                assert_relative_eq!(t.length(), (k + 1) as f64, max_relative = 1e-9);
                for (child, _, len) in t.edge_lengths() {
                    let h = HeapIndex::new(child as u64).unwrap().level();
                    assert_relative_eq!(len, 0.5f64.powi(h as i32), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn tk_angles_follow_the_pattern() {
        let eps = 0.05;
        let t = tk(4, eps);
        for s in t.topology().steiner_points() {
            // adjacency order is [parent, 2s, 2s+1]
            let [parent_left, left_right, right_parent] = t.steiner_angles(s);
            assert!((left_right - 2.0 * PI / 3.0).abs() < 1e-10);
            assert!((right_parent - (2.0 * PI / 3.0 - eps)).abs() < 1e-10);
            assert!((parent_left - (2.0 * PI / 3.0 + eps)).abs() < 1e-10);
            assert_eq!(t.ccw_children(s), [2 * s, 2 * s + 1]);
        }
        assert!((t.measure_eps().unwrap() - eps).abs() < 1e-10);
    }

    #[test]
    fn closed_form_examples() {
        let eps = 0.05;
        let p = TkParams::new(3, eps).unwrap();
        let closed = build_tk_closed_form(p).unwrap();
        assert_eq!(closed.position(1), c(1.0, 0.0));
        let expect2 = c(1.0, 0.0) + p.omega().conj() * p.z() * 0.5;
        assert!((closed.position(2) - expect2).norm() < 1e-15);
        let rec = build_tk_recursive(p).unwrap();
        for (a, b) in closed.positions().iter().zip(rec.positions()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_recurrence_grid() {
        for k in 1..=12u32 {
            for eps in [0.0, 1e-4, 1e-2, 0.99 / (k * k) as f64] {
                let p = TkParams::new(k, eps).unwrap();
                let a = build_tk_recursive(p).unwrap();
                let b = build_tk_closed_form(p).unwrap();
                let worst = a
                    .positions()
                    .iter()
                    .zip(b.positions())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(worst < 1e-10, "k={k} eps={eps}: {worst}");
            }
        }
    }

    #[test]
    fn tk_rejects_bad_params() {
        assert!(TkParams::new(0, 0.1).is_err());
        assert!(TkParams::new(3, -0.1).is_err());
        assert!(TkParams::new(3, FRAC_PI_3).is_err());
        assert!(TkParams::new(21, 0.0).is_err());
    }

    #[test]
    fn fermat_configuration() {
        let t = three_terminal_tree(0.0, 0.0, 0.0, 1.0, [1.0, 1.0]).unwrap();
        assert!(t.measure_eps().unwrap() < 1e-14);
        assert_eq!(t.position(0), c(0.0, 0.0));
        assert!((t.position(3) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn witness3_length() {
        let t = witness3::<f64>(0.2, 1e-6).unwrap();
        assert_relative_eq!(t.length(), 2.0 + 1e-6, max_relative = 1e-14);
        assert!((t.measure_eps().unwrap() - 0.2).abs() < 1e-12);
        // t0, t1, t2 counterclockwise around s
        assert_eq!(t.ccw_children(3), [1, 2]);
        let s = t.position(3);
        assert!((convex_angle(s, t.position(1), t.position(2)) - (2.0 * PI / 3.0 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn witness4_layout() {
        use quartet_ids::*;
        let eps = 0.3;
        let t = witness4(eps, 1e-3).unwrap();
        assert_relative_eq!(t.length(), 4.0 + 1e-3, max_relative = 1e-14);
        let ang = |apex, a, b| convex_angle(t.position(apex), t.position(a), t.position(b));
        let base = 2.0 * PI / 3.0;
        assert!((ang(S1, T1, T2) - base).abs() < 1e-12);
        assert!((ang(S1, T1, S2) - (base + eps)).abs() < 1e-12);
        assert!((ang(S2, S1, T4) - (base - eps)).abs() < 1e-12);
        assert!((ang(S2, T3, T4) - base).abs() < 1e-12);
        assert_eq!(t.ccw_after(S1, S2), [T1, T2]);
        assert_eq!(t.ccw_after(S2, S1), [T4, T3]);
        assert!((t.measure_eps().unwrap() - eps).abs() < 1e-12);
    }

    #[test]
    fn angle_errors_are_validated() {
        let topo = complete_binary_topology(1).unwrap();
        let lengths = BTreeMap::from([(1, 1.0), (2, 1.0), (3, 1.0)]);
        let bad_sum = BTreeMap::from([(
            1,
            AngleErrors {
                parent_first: 0.1,
                first_second: 0.1,
                second_parent: 0.1,
            },
        )]);
        assert!(matches!(
            build_from_angle_errors(&topo, c(1.0, 0.0), &lengths, &bad_sum),
            Err(Error::InvalidAngleTriple { node: 1, .. })
        ));
        let reflex = BTreeMap::from([(1, AngleErrors::from_two(1.2, -0.6))]);
        assert!(matches!(
            build_from_angle_errors(&topo, c(1.0, 0.0), &lengths, &reflex),
            Err(Error::InvalidAngleTriple { .. })
        ));
        let ok = BTreeMap::from([(1, AngleErrors::from_two(0.1, -0.05))]);
        let t = build_from_angle_errors(&topo, c(0.0, 2.0), &lengths, &ok).unwrap();
        assert!((t.position(1) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((t.measure_eps().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn circle_construction_lengths() {
        for eps in [FRAC_PI_3, FRAC_PI_3 + 0.2, PI / 2.0] {
            for k in 1..=6 {
                let delta = 1e-6;
                let cc = build_circle_construction(k, eps, delta).unwrap();
                assert_eq!(cc.tree.topology().n_terminals(), 1 << (k + 1));
                assert_relative_eq!(cc.tree.length(), cc.predicted_length(), max_relative = 1e-9);
                assert_relative_eq!(cc.star_length(), cc.predicted_star_length(), max_relative = 1e-9);
                let rk = cc.ratio().powi(k as i32);
                for t in cc.tree.topology().terminals() {
                    let centre = if t < (1 << (k + 1)) - 1 { cc.center } else { cc.shifted_center };
                    assert_relative_eq!(distance(cc.tree.position(t), centre), rk, max_relative = 1e-9);
                }
                let values = cc.steiner_angle_values();
                for s in cc.tree.topology().steiner_points() {
                    for a in cc.tree.steiner_angles(s) {
                        assert!(values.iter().any(|v| (v - a).abs() < 1e-9), "angle {a}");
                        assert!(a >= 2.0 * PI / 3.0 - eps - 1e-9 && a <= 2.0 * PI / 3.0 + eps + 1e-9);
                    }
                }
                assert_relative_eq!(cc.eps_certificate(), eps, max_relative = 1e-15);
            }
        }
        let cc = build_circle_construction(1, FRAC_PI_3, 1e-6).unwrap();
        assert_relative_eq!(cc.tree.length(), 1e-6 + 2.0 * 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn circle_construction_has_coincident_steiner_points() {
        let cc = build_circle_construction(3, FRAC_PI_3 + 0.2, 1e-6).unwrap();
        let (p5, p6) = (cc.node(5, false), cc.node(6, false));
        assert!(distance(cc.tree.position(p5), cc.tree.position(p6)) < 1e-12);
    }

    #[test]
    fn circle_construction_rejects_small_eps() {
        assert!(matches!(
            build_circle_construction(2, 0.5, 1e-6),
            Err(Error::EpsOutOfRange { .. })
        ));
        assert!(build_circle_construction(2, 2.0 * FRAC_PI_3, 1e-6).is_err());
        assert!(build_circle_construction(2, 1.2, 0.0).is_err());
    }

    #[test]
    fn split_terminal_examples() {
        let t = tk(3, 0.02);
        let eps = t.measure_eps().unwrap();
        let s = split_terminal(&t, 9, 0.1).unwrap();
        assert_relative_eq!(s.length(), t.length() + 0.2, max_relative = 1e-12);
        for a in s.steiner_angles(9) {
            assert!((a - 2.0 * PI / 3.0).abs() < 1e-10);
        }
        assert!((s.measure_eps().unwrap() - eps).abs() < 1e-10);
        let s2 = split_terminal(&s, 17, 0.05).unwrap();
        assert_relative_eq!(s2.length(), t.length() + 0.2 + 0.1, max_relative = 1e-12);
        assert_eq!(split_terminal(&t, 3, 0.1).unwrap_err(), Error::NotATerminal(3));
        let from_root = split_terminal(&t, 0, 0.1).unwrap();
        assert_eq!(from_root.topology().n_terminals(), t.topology().n_terminals() + 1);
    }

    #[test]
    fn random_trees_are_deterministic_and_certified() {
        let a: EmbeddedTree<f64> = random_tree(8, 0.05, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b: EmbeddedTree<f64> = random_tree(8, 0.05, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.topology().n_terminals(), 8);
        assert!(a.measure_eps().unwrap() <= 0.05 + 1e-10);
    }

    #[test]
    fn single_precision_tk() {
        let t = build_tk_recursive(TkParams::new(4, 0.01f32).unwrap()).unwrap();
        assert!((t.length() - 5.0).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_tree_angles_sum_to_full_turn(seed in 0u64..10_000, n in 3usize..14, frac in 0.0f64..1.0) {
            let eps = frac * (PI / (n as f64 - 2.0)).min(FRAC_PI_3);
            let t: EmbeddedTree<f64> = random_tree(n, eps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for s in t.topology().steiner_points() {
                let a = t.steiner_angles(s);
                prop_assert!((a[0] + a[1] + a[2] - 2.0 * PI).abs() < 1e-9);
            }
            prop_assert!(t.measure_eps().unwrap() <= eps + 1e-10);
        }

        #[test]
        fn split_adds_twice_delta(seed in 0u64..10_000, n in 3usize..12, delta in 1e-3f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t: EmbeddedTree<f64> = random_tree(n, 0.1, &mut rng).unwrap();
            let terms: Vec<_> = t.topology().terminals().collect();
            let pick = terms[rng.gen_range(0..terms.len())];
            let s = split_terminal(&t, pick, delta).unwrap();
            prop_assert!((s.length() - t.length() - 2.0 * delta).abs() < 1e-10);
            prop_assert!((s.measure_eps().unwrap() - t.measure_eps().unwrap()).abs() < 1e-10);
        }
    }
}
