//! Shortest trees for a fixed topology: Melzak's forward and backward passes,
//! the unfolding lower bound, the closed-form solution on `T_k`, and an
//! independent coordinate-descent oracle.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::approx::{build_tk_closed_form, omega_pow, EmbeddedTree, TkParams};
use crate::error::{Error, Result};
use crate::geometry::{
    coincident, convex_angle, cross, distance, dot, third_equilateral_point, Circle, Point, PolyPath, Side,
};
use crate::scalar::Scalar;
use crate::topology::{FullTopology, HeapIndex, NodeId};

/// Margin used when classifying boundary cases of the backward pass.
pub const BOUNDARY_MARGIN: f64 = 1e-10;

/// Record of the forward pass.
#[derive(Debug, Clone)]
pub struct MelzakState<T> {
    topology: FullTopology,
    positions: Vec<Point<T>>,
    quasi: Vec<Point<T>>,
    circles: Vec<Option<Circle<T>>>,
    triangles: Vec<Option<[NodeId; 2]>>,
    order: Vec<NodeId>,
    fallback_side: bool,
}

impl<T: Scalar> MelzakState<T> {
    pub fn topology(&self) -> &FullTopology {
        &self.topology
    }

    /// `q_v`; for terminals this is the terminal itself.
    pub fn quasi_terminal(&self, v: NodeId) -> Point<T> {
        self.quasi[v]
    }

    /// Circle through the three corners of `Δ_v`.
    pub fn circle(&self, v: NodeId) -> Option<Circle<T>> {
        self.circles[v]
    }

    /// Children `[a, b]` of `v` such that `q_v` is the third corner of the
    /// equilateral triangle on `q_a q_b` lying to its right.
    pub fn triangle_children(&self, v: NodeId) -> Option<[NodeId; 2]> {
        self.triangles[v]
    }

    /// Corners `(q_v, q_a, q_b)` of `Δ_v`.
    pub fn triangle(&self, v: NodeId) -> Option<[Point<T>; 3]> {
        self.triangles[v].map(|[a, b]| [self.quasi[v], self.quasi[a], self.quasi[b]])
    }

    /// Steiner points in processing order (leaves upward).
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// True when sides were chosen without an embedded tree.
    pub fn used_fallback_side(&self) -> bool {
        self.fallback_side
    }
}

fn check_terminals<T: Scalar>(
    topology: &FullTopology,
    terminals: &BTreeMap<NodeId, Point<T>>,
) -> Result<Vec<Point<T>>> {
    let nan = Complex::new(T::nan(), T::nan());
    let mut pos = vec![nan; topology.node_count()];
    for (&v, &p) in terminals {
        if v >= topology.node_count() || !topology.is_terminal(v) {
            return Err(Error::NotATerminal(v));
        }
        if !crate::geometry::is_finite(p) {
            return Err(Error::InvalidParameter(format!("terminal {v} is not finite")));
        }
        pos[v] = p;
    }
    if let Some(t) = topology.terminals().find(|t| !terminals.contains_key(t)) {
        return Err(Error::InvalidParameter(format!("no position for terminal {t}")));
    }
    Ok(pos)
}

/// Computes quasi-terminals bottom-up.
///
/// The children of each Steiner point are taken in counterclockwise order
/// after the parent, read from an embedding of the topology, which puts `q_v`
/// on the far side of `q_a q_b` from that embedding's Steiner point. With no
/// `hint` the embedding is obtained by relaxing the tree with the oracle's
/// Fermat-point sweeps.
pub fn forward_pass<T: Scalar>(
    topology: &FullTopology,
    terminals: &BTreeMap<NodeId, Point<T>>,
    hint: Option<&EmbeddedTree<T>>,
) -> Result<MelzakState<T>> {
    let positions = check_terminals(topology, terminals)?;
    let relaxed;
    let embedding = match hint {
        Some(h) => {
            if h.topology().adjacency() != topology.adjacency() || h.topology().kinds() != topology.kinds() {
                return Err(Error::InvalidTopology("hint tree has a different topology".into()));
            }
            h
        }
        None => {
            let (pos, _, _, _) = relax(topology, positions.clone(), None, RELAX_SWEEPS, T::lit(RELAX_TOL));
            relaxed = EmbeddedTree::new(topology.clone(), pos)?;
            &relaxed
        }
    };
    let n = topology.node_count();
    let order: Vec<NodeId> = topology.postorder().filter(|&v| topology.is_steiner(v)).collect();
    let mut quasi = positions.clone();
    let mut circles = vec![None; n];
    let mut triangles = vec![None; n];
    let sqrt3 = T::lit(3.0).sqrt();
    for &v in &order {
        let [a, b] = embedding.ccw_children(v);
        if coincident(quasi[a], quasi[b]) {
            return Err(Error::CoincidentQuasiTerminals(v));
        }
        let q = third_equilateral_point(quasi[a], quasi[b], Side::Right)?;
        quasi[v] = q;
        circles[v] = Some(Circle {
            center: (q + quasi[a] + quasi[b]) / T::lit(3.0),
            radius: distance(quasi[a], quasi[b]) / sqrt3,
        });
        triangles[v] = Some([a, b]);
    }
    Ok(MelzakState {
        topology: topology.clone(),
        positions,
        quasi,
        circles,
        triangles,
        order,
        fallback_side: hint.is_none(),
    })
}

const RELAX_SWEEPS: usize = 2_000;
const RELAX_TOL: f64 = 1e-9;

/// Whether the backward pass produced a full tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    NonDegenerate,
    Degenerate,
}

/// Why a Steiner point failed to land strictly inside its arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degeneracy<T> {
    pub node: NodeId,
    /// Position along `q_v → s_parent`; NaN when `s_parent = q_v`.
    pub lambda: T,
    /// `λ ∈ (0, 1)` with margin.
    pub lambda_ok: bool,
    /// The intersection lies strictly on the minor arc `q_a q_b`.
    pub on_minor_arc: bool,
}

/// Output of the backward pass.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    /// The shortest tree, when non-degenerate.
    pub tree: Option<EmbeddedTree<T>>,
    /// Failed Steiner points, when degenerate.
    pub degeneracies: Vec<Degeneracy<T>>,
    /// Edges whose length the degenerate solution drives to zero.
    pub collapsed_edges: Vec<(NodeId, NodeId)>,
    /// `|t_root − q_c|`: the length of the shortest tree when non-degenerate,
    /// otherwise a lower bound for it.
    pub length: T,
    /// Every node's position from the conjugate formula (terminals unchanged).
    pub raw_positions: Vec<Point<T>>,
    pub used_fallback_side: bool,
}

impl<T: Scalar> SolveResult<T> {
    pub fn is_nondegenerate(&self) -> bool {
        self.status == SolveStatus::NonDegenerate
    }
}

/// Places Steiner points top-down with `s_v = c_v − (q̄_v − c̄_v)(q_v − s_par)/(q̄_v − s̄_par)`.
pub fn backward_pass<T: Scalar>(state: &MelzakState<T>) -> Result<SolveResult<T>> {
    let topo = &state.topology;
    let root = topo.root();
    let root_child = topo.root_child();
    let length = distance(state.positions[root], state.quasi[root_child]);
    let mut s = state.positions.clone();
    let margin = T::lit(BOUNDARY_MARGIN);
    let mut degeneracies = Vec::new();
    let mut collapsed = Vec::new();
    for &v in topo.preorder() {
        if !topo.is_steiner(v) {
            continue;
        }
        let parent = topo.parent(v).expect("Steiner points have parents");
        let sp = s[parent];
        let q = state.quasi[v];
        let circle = state.circles[v].expect("forward pass fills every Steiner circle");
        let c = circle.center;
        let [a, b] = state.triangles[v].expect("forward pass fills every triangle");
        let d = q - sp;
        if d.norm() == T::zero() || !crate::geometry::is_finite(sp) {
            s[v] = q;
            degeneracies.push(Degeneracy {
                node: v,
                lambda: T::nan(),
                lambda_ok: false,
                on_minor_arc: false,
            });
            collapsed.push((v, parent));
            continue;
        }
        let sv = c - (q - c).conj() * d / d.conj();
        let lambda = ((q - sv) / d).re;
        let (qa, qb) = (state.quasi[a], state.quasi[b]);
        let chord = qb - qa;
        let scale = chord.norm_sqr();
        let side_s = cross(chord, sv - qa) / scale;
        let side_q = cross(chord, q - qa) / scale;
        let on_arc = side_s * side_q.signum() < -margin;
        let lambda_ok = lambda > margin && lambda < T::one() - margin;
        if !(on_arc && lambda_ok) {
            degeneracies.push(Degeneracy {
                node: v,
                lambda,
                lambda_ok,
                on_minor_arc: on_arc,
            });
            if !lambda_ok {
                collapsed.push((v, parent));
            } else {
                let near = if distance(sv, qa) <= distance(sv, qb) { a } else { b };
                collapsed.push((v, near));
            }
        }
        s[v] = sv;
    }
    let status = if degeneracies.is_empty() {
        SolveStatus::NonDegenerate
    } else {
        SolveStatus::Degenerate
    };
    let tree = match status {
        SolveStatus::NonDegenerate => Some(EmbeddedTree::new(topo.clone(), s.clone())?),
        SolveStatus::Degenerate => None,
    };
    Ok(SolveResult {
        status,
        tree,
        degeneracies,
        collapsed_edges: collapsed,
        length,
        raw_positions: s,
        used_fallback_side: state.fallback_side,
    })
}

/// Melzak's algorithm from terminals alone (fallback side rule).
pub fn solve<T: Scalar>(topology: &FullTopology, terminals: &BTreeMap<NodeId, Point<T>>) -> Result<SolveResult<T>> {
    if topology.n_terminals() == 2 {
        return solve_pair(topology, terminals);
    }
    backward_pass(&forward_pass(topology, terminals, None)?)
}

/// Melzak's algorithm on the terminals of `tree`, using its embedding to choose sides.
pub fn solve_tree<T: Scalar>(tree: &EmbeddedTree<T>) -> Result<SolveResult<T>> {
    let terminals = tree.terminal_positions();
    if tree.topology().n_terminals() == 2 {
        return solve_pair(tree.topology(), &terminals);
    }
    backward_pass(&forward_pass(tree.topology(), &terminals, Some(tree))?)
}

fn solve_pair<T: Scalar>(topology: &FullTopology, terminals: &BTreeMap<NodeId, Point<T>>) -> Result<SolveResult<T>> {
    let pos = check_terminals(topology, terminals)?;
    Ok(SolveResult {
        status: SolveStatus::NonDegenerate,
        tree: Some(EmbeddedTree::new(topology.clone(), pos.clone())?),
        degeneracies: Vec::new(),
        collapsed_edges: Vec::new(),
        length: distance(pos[0], pos[1]),
        raw_positions: pos,
        used_fallback_side: false,
    })
}

/// Explicit `q_i`, `c_i` and `s_i` on `T_k`, indexed by heap index.
#[derive(Debug, Clone)]
pub struct ClosedFormTk<T> {
    pub p: Vec<Point<T>>,
    /// Defined for `1 ≤ i < 2^{k+1}`.
    pub q: Vec<Point<T>>,
    /// Defined for `1 ≤ i < 2^{k+1}`.
    pub c: Vec<Point<T>>,
    /// Defined for `1 ≤ i < 2^k`.
    pub s: Vec<Point<T>>,
}

/// Evaluates the explicit polynomial expressions for the quasi-terminals,
/// circle centres and Steiner points of `S(T_k)`.
pub fn closed_form_tk<T: Scalar>(params: TkParams<T>) -> Result<ClosedFormTk<T>> {
    let p = build_tk_closed_form(params)?.into_parts().1;
    let k = params.k as usize;
    let z = params.z();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut z_pow = Vec::with_capacity(k + 2);
    let mut acc = one;
    for _ in 0..k + 2 {
        z_pow.push(acc);
        acc = acc * z;
    }
    // partial[m] = Σ_{j<m} z^j
    let mut partial = vec![zero; k + 2];
    for m in 1..k + 2 {
        partial[m] = partial[m - 1] + z_pow[m - 1];
    }
    let half_z = z * T::lit(0.5);
    let n = p.len();
    let mut q = vec![zero; n];
    let mut c = vec![zero; n];
    let mut s = vec![zero; n / 2];
    for i in 1..n {
        let hi = HeapIndex::new(i as u64)?;
        let h = hi.level() as usize;
        let w = omega_pow::<T>(hi.last_exponent());
        // Σ_{j=1}^{k-h} z^j
        let tail = partial[k - h + 1] - one;
        let lead = w * half_z.powi(h as i32);
        q[i] = p[i] + lead * tail;
        c[i] = p[i] + lead * tail * T::lit(0.5);
        if i < n / 2 {
            let scale = T::lit(0.5).powi(h as i32 + 1);
            s[i] = p[i] + w * scale * partial[k - h] * (z_pow[h + 1] - one);
        }
    }
    Ok(ClosedFormTk { p, q, c, s })
}

/// Edge vectors of the branch entered along `from → x`, rotated into the
/// unfolded frame: first `x − from`, then the rest of the branch in
/// pre-order with the counterclockwise-first child's side turned by `+π/3`
/// and the other by `−π/3`.
fn branch_vectors<T: Scalar>(tree: &EmbeddedTree<T>, x: NodeId, from: NodeId) -> Vec<Point<T>> {
    let topo = tree.topology();
    let mut out = Vec::new();
    let mut stack = vec![(x, from, 0i32)];
    while let Some((v, u, r)) = stack.pop() {
        out.push(omega_pow::<T>(r) * (tree.position(v) - tree.position(u)));
        if topo.is_steiner(v) {
            let [a, b] = tree.ccw_after(v, u);
            stack.push((b, v, r - 1));
            stack.push((a, v, r + 1));
        }
    }
    out
}

fn path_from_vectors<T: Scalar>(start: Point<T>, vectors: &[Point<T>]) -> Result<PolyPath<T>> {
    let mut vertices = Vec::with_capacity(vectors.len() + 1);
    let mut at = start;
    vertices.push(at);
    for &d in vectors {
        at = at + d;
        vertices.push(at);
    }
    PolyPath::from_vertices(vertices)
}

/// Unfolds the tree into a path of `2n − 3` edges from terminal `root`.
///
/// The path starts at `root`, has the tree's length, and ends at the
/// quasi-terminal of the root edge, so its endpoint distance is at most
/// the length of the shortest tree with this topology.
pub fn unfold<T: Scalar>(tree: &EmbeddedTree<T>, root: NodeId) -> Result<PolyPath<T>> {
    let topo = tree.topology();
    if root >= topo.node_count() || !topo.is_terminal(root) {
        return Err(Error::NotATerminal(root));
    }
    let first = topo.neighbors(root)[0];
    path_from_vectors(tree.position(root), &branch_vectors(tree, first, root))
}

/// Unfolds both sides of the edge `uv` and joins them through that edge.
pub fn unfold_edge<T: Scalar>(tree: &EmbeddedTree<T>, u: NodeId, v: NodeId) -> Result<PolyPath<T>> {
    let topo = tree.topology();
    if u >= topo.node_count() || !topo.neighbors(u).contains(&v) {
        return Err(Error::InvalidTopology(format!("{u} and {v} are not adjacent")));
    }
    let back = branch_vectors(tree, u, v);
    let mut vectors: Vec<Point<T>> = back[1..].iter().rev().map(|&d| -d).collect();
    let start = back[1..].iter().fold(tree.position(u), |acc, &d| acc + d);
    vectors.extend(branch_vectors(tree, v, u));
    path_from_vectors(start, &vectors)
}

/// Point minimising the sum of distances to `a`, `b`, `c`.
pub fn fermat_point<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> Point<T> {
    let limit = T::two_thirds_pi();
    let pts = [a, b, c];
    for i in 0..3 {
        let (p, q, r) = (pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]);
        if p == q || p == r {
            return p;
        }
        if convex_angle(p, q, r) >= limit {
            return p;
        }
    }
    let third = T::FRAC_PI_3();
    let w = |i: usize| {
        let (p, q, r) = (pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]);
        distance(q, r) / (convex_angle(p, q, r) + third).sin()
    };
    let (wa, wb, wc) = (w(0), w(1), w(2));
    (a * wa + b * wb + c * wc) / (wa + wb + wc)
}

/// Result of the numeric oracle.
#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    pub positions: Vec<Point<T>>,
    pub length: T,
    pub iterations: usize,
}

fn total_length<T: Scalar>(topology: &FullTopology, pos: &[Point<T>]) -> T {
    topology
        .edges()
        .into_iter()
        .fold(T::zero(), |acc, (c, p)| acc + distance(pos[c], pos[p]))
}

/// Sweeps of exact Fermat-point updates. Returns the final positions,
/// length, sweep count and whether the largest move fell below `tol`.
fn relax<T: Scalar>(
    topology: &FullTopology,
    mut pos: Vec<Point<T>>,
    start: Option<&[Point<T>]>,
    max_iter: usize,
    tol: T,
) -> (Vec<Point<T>>, T, usize, T) {
    match start {
        Some(init) => {
            for v in topology.steiner_points() {
                pos[v] = init[v];
            }
        }
        None => {
            for v in topology.steiner_points() {
                let ts = topology.subtree_terminals(v);
                let sum = ts.iter().fold(Complex::new(T::zero(), T::zero()), |s, &t| s + pos[t]);
                pos[v] = sum / T::lit(ts.len() as f64);
            }
        }
    }
    let up: Vec<NodeId> = topology.postorder().filter(|&v| topology.is_steiner(v)).collect();
    let sweep: Vec<NodeId> = up.iter().chain(up.iter().rev()).copied().collect();
    let mut length = total_length(topology, &pos);
    let mut last_move = T::infinity();
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let before = pos.clone();
        for &v in &sweep {
            let n = topology.neighbors(v);
            pos[v] = fermat_point(pos[n[0]], pos[n[1]], pos[n[2]]);
        }
        let mut new_len = total_length(topology, &pos);
        if new_len > length {
            for v in topology.steiner_points() {
                pos[v] = (pos[v] + before[v]) * T::lit(0.5);
            }
            new_len = total_length(topology, &pos);
        }
        last_move = topology
            .steiner_points()
            .map(|v| distance(pos[v], before[v]))
            .fold(T::zero(), T::max);
        length = new_len;
        if last_move < tol {
            break;
        }
    }
    (pos, length, it, last_move)
}

type Block<T> = [T; 3];

fn block_inv<T: Scalar>(b: Block<T>) -> Block<T> {
    let det = b[0] * b[2] - b[1] * b[1];
    [b[2] / det, -b[1] / det, b[0] / det]
}

fn full<T: Scalar>(b: Block<T>) -> [T; 4] {
    [b[0], b[1], b[1], b[2]]
}

fn mat_mul<T: Scalar>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn block_apply<T: Scalar>(b: Block<T>, v: Point<T>) -> Point<T> {
    Complex::new(b[0] * v.re + b[1] * v.im, b[1] * v.re + b[2] * v.im)
}

fn smoothed_length<T: Scalar>(edges: &[(NodeId, NodeId)], pos: &[Point<T>], mu: T) -> T {
    edges.iter().fold(T::zero(), |acc, &(c, p)| {
        acc + ((pos[c] - pos[p]).norm_sqr() + mu * mu).sqrt()
    })
}

/// Damped Newton on `sum sqrt(|e|^2 + mu^2)` for a decreasing sequence of `mu`.
/// The Hessian follows the tree, so each step is a leaves-up elimination.
/// Returns whether the last stage met its stopping rule.
fn newton_polish<T: Scalar>(topology: &FullTopology, pos: &mut [Point<T>], scale: T) -> bool {
    let edges = topology.edges();
    let order: Vec<NodeId> = topology.postorder().filter(|&v| topology.is_steiner(v)).collect();
    let steiner_parent = |v: NodeId| topology.parent(v).filter(|&p| topology.is_steiner(p));
    let n = pos.len();
    let mu_min = scale * T::lit(1e-10).max(T::epsilon() * T::lit(100.0));
    let mut mu = scale * T::lit(1e-2);
    loop {
        let mut converged = false;
        for _ in 0..80 {
            let mut grad = vec![Complex::new(T::zero(), T::zero()); n];
            let mut diag: Vec<Block<T>> = vec![[T::zero(); 3]; n];
            let mut off: Vec<Block<T>> = vec![[T::zero(); 3]; n];
            for &(c, p) in &edges {
                let d = pos[c] - pos[p];
                let r2 = d.norm_sqr() + mu * mu;
                let r = r2.sqrt();
                let r3 = r2 * r;
                let h = [(r2 - d.re * d.re) / r3, -d.re * d.im / r3, (r2 - d.im * d.im) / r3];
                grad[c] = grad[c] + d / r;
                grad[p] = grad[p] - d / r;
                for v in [c, p] {
                    for i in 0..3 {
                        diag[v][i] = diag[v][i] + h[i];
                    }
                }
                off[c] = [-h[0], -h[1], -h[2]];
            }
            let mut rhs: Vec<Point<T>> = grad.iter().map(|&g| -g).collect();
            for &v in &order {
                if let Some(p) = steiner_parent(v) {
                    let m = mat_mul(full(off[v]), full(block_inv(diag[v])));
                    let s = mat_mul(m, full(off[v]));
                    diag[p][0] = diag[p][0] - s[0];
                    diag[p][1] = diag[p][1] - (s[1] + s[2]) * T::lit(0.5);
                    diag[p][2] = diag[p][2] - s[3];
                    let t = Complex::new(m[0] * rhs[v].re + m[1] * rhs[v].im, m[2] * rhs[v].re + m[3] * rhs[v].im);
                    rhs[p] = rhs[p] - t;
                }
            }
            let mut step = vec![Complex::new(T::zero(), T::zero()); n];
            for &v in order.iter().rev() {
                let mut r = rhs[v];
                if let Some(p) = steiner_parent(v) {
                    r = r - block_apply(off[v], step[p]);
                }
                step[v] = block_apply(block_inv(diag[v]), r);
            }
            let slope = order.iter().fold(T::zero(), |acc, &v| acc + dot(grad[v], step[v]));
            if !slope.is_finite() {
                return false;
            }
            if -slope * T::lit(0.5) < scale * T::lit(1e-14).max(T::epsilon()) {
                converged = true;
                break;
            }
            let f0 = smoothed_length(&edges, pos, mu);
            let mut t = T::one();
            let mut trial = pos.to_vec();
            let mut accepted = false;
            for _ in 0..60 {
                for &v in &order {
                    trial[v] = pos[v] + step[v] * t;
                }
                if smoothed_length(&edges, &trial, mu) <= f0 + T::lit(0.25) * t * slope {
                    accepted = true;
                    break;
                }
                t = t * T::lit(0.5);
            }
            if !accepted {
                converged = true;
                break;
            }
            pos.copy_from_slice(&trial);
        }
        if mu <= mu_min {
            return converged;
        }
        mu = (mu * T::lit(0.1)).max(mu_min);
    }
}

/// Minimises total length over Steiner positions. Each Steiner point is moved
/// to the Fermat point of its neighbours, sweeping leaves-up then root-down.
/// Coordinate moves can stall where Steiner points nearly coincide, so the
/// result is then refined by Newton steps on a smoothed length.
///
/// `start` gives initial positions for every node; without it each Steiner
/// point starts at the centroid of its subtree's terminals.
pub fn numeric_oracle<T: Scalar>(
    topology: &FullTopology,
    terminals: &BTreeMap<NodeId, Point<T>>,
    start: Option<&[Point<T>]>,
    max_iter: usize,
    tol: T,
) -> Result<OracleResult<T>> {
    let pos = check_terminals(topology, terminals)?;
    if let Some(init) = start {
        if init.len() != pos.len() || init.iter().any(|&p| !crate::geometry::is_finite(p)) {
            return Err(Error::InvalidParameter("start positions are malformed".into()));
        }
    }
    let (mut positions, mut length, iterations, last_move) = relax(topology, pos, start, max_iter, tol);
    let scale = length / T::lit(topology.edge_count() as f64);
    let mut polished = false;
    if scale > T::zero() && topology.n_steiner() > 0 {
        let mut trial = positions.clone();
        polished = newton_polish(topology, &mut trial, scale);
        let trial_len = total_length(topology, &trial);
        if trial_len < length {
            positions = trial;
            length = trial_len;
        }
    }
    if last_move < tol || polished {
        Ok(OracleResult {
            positions,
            length,
            iterations,
        })
    } else {
        Err(Error::NoConvergence {
            iterations,
            length: length.as_f64(),
            last_move: last_move.as_f64(),
        })
    }
}

/// Oracle with the default tolerance `1e−10` and `10^5` sweeps, started from `tree`.
pub fn oracle_from_tree<T: Scalar>(tree: &EmbeddedTree<T>) -> Result<OracleResult<T>> {
    numeric_oracle(
        tree.topology(),
        &tree.terminal_positions(),
        Some(tree.positions()),
        100_000,
        T::lit(1e-10),
    )
}
