//! Closed-form bounds on the relative excess length of ε-approximate trees,
//! the polynomials controlling degeneracy of `S(T_k)`, and instance reports.

use num_complex::Complex;

use crate::approx::EmbeddedTree;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::melzak::{oracle_from_tree, solve_tree};
use crate::scalar::Scalar;

fn range<T: Scalar>(formula: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::RangeViolation {
            formula,
            detail: detail(),
        })
    }
}

fn check_eps<T: Scalar>(formula: &'static str, eps: T) -> Result<()> {
    range::<T>(formula, eps.is_finite() && eps >= T::zero(), || format!("eps = {eps} must be finite and >= 0"))
}

/// Parameters shared by the bound formulas, with the derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInput<T> {
    pub n: usize,
    pub eps: T,
    pub k: u32,
    /// Diameter of the terminal set.
    pub diameter: T,
}

impl<T: Scalar> BoundInput<T> {
    /// `A = cos(ε/2)/sin(π/3 − ε/2)`.
    pub fn a(&self) -> T {
        terminal_steiner_factor(self.eps)
    }

    /// `B = 1/sin(π/3 − ε/2)`.
    pub fn b(&self) -> T {
        cherry_factor(self.eps)
    }

    /// `r = sin(π/3 − ε/2)`.
    pub fn r(&self) -> T {
        (T::FRAC_PI_3() - self.eps / T::lit(2.0)).sin()
    }

    /// `C = 1/(2r)`.
    pub fn c(&self) -> T {
        T::one() / (T::lit(2.0) * self.r())
    }
}

/// `sec((n−2)ε/2) − 1`, for `n ≥ 3` and `0 ≤ ε < π/(n−2)`.
pub fn ub_plane_small_eps<T: Scalar>(n: usize, eps: T) -> Result<T> {
    const F: &str = "ub_plane_small_eps";
    check_eps(F, eps)?;
    range::<T>(F, n >= 3, || format!("n = {n} < 3"))?;
    let m = T::lit((n - 2) as f64);
    range::<T>(F, eps * m < T::PI(), || format!("eps = {eps} >= pi/{}", n - 2))?;
    Ok(T::one() / (m * eps / T::lit(2.0)).cos() - T::one())
}

/// `2n − 4`, for `0 ≤ ε ≤ π/6`.
pub fn ub_plane_moderate<T: Scalar>(n: usize, eps: T) -> Result<T> {
    const F: &str = "ub_plane_moderate";
    check_eps(F, eps)?;
    range::<T>(F, n >= 2, || format!("n = {n} < 2"))?;
    range::<T>(F, eps <= T::PI() / T::lit(6.0), || format!("eps = {eps} > pi/6"))?;
    Ok(T::lit((2 * n - 4) as f64))
}

/// `B = 1/sin(π/3 − ε/2)`: `|st₁| + |st₂| ≤ B|t₁t₂|` on any cherry.
pub fn cherry_factor<T: Scalar>(eps: T) -> T {
    T::one() / (T::FRAC_PI_3() - eps / T::lit(2.0)).sin()
}

/// `A = cos(ε/2)/sin(π/3 − ε/2)`: `|ts| ≤ A·D` for any terminal `t` and Steiner point `s`.
pub fn terminal_steiner_factor<T: Scalar>(eps: T) -> T {
    (eps / T::lit(2.0)).cos() * cherry_factor(eps)
}

/// `L(T)/D ≤ A^{n−2} + (A^{n−2} − 1)B/(A − 1)`.
pub fn length_over_diameter<T: Scalar>(n: usize, eps: T) -> Result<T> {
    const F: &str = "length_over_diameter";
    check_eps(F, eps)?;
    range::<T>(F, n >= 2, || format!("n = {n} < 2"))?;
    range::<T>(F, eps < T::lit(2.0) * T::FRAC_PI_3(), || format!("eps = {eps} >= 2pi/3"))?;
    let a = terminal_steiner_factor(eps);
    let b = cherry_factor(eps);
    let an = a.powi((n - 2) as i32);
    Ok(an + (an - T::one()) * b / (a - T::one()))
}

/// `A^{n−2} + (A^{n−2} − 1)B/(A − 1) − 1`, for `0 ≤ ε < 2π/3`.
pub fn ub_exponential<T: Scalar>(n: usize, eps: T) -> Result<T> {
    length_over_diameter(n, eps)
        .map(|v| v - T::one())
        .map_err(|e| match e {
            Error::RangeViolation { detail, .. } => Error::RangeViolation {
                formula: "ub_exponential",
                detail,
            },
            other => other,
        })
}

/// `(k+1)sin(ε/2)/sin((k+1)ε/2) − 1`, for `0 ≤ ε < 1/k²`.
pub fn lb_small_eps<T: Scalar>(k: u32, eps: T) -> Result<T> {
    const F: &str = "lb_small_eps";
    check_eps(F, eps)?;
    range::<T>(F, k >= 1, || "k must be at least 1".into())?;
    let kk = T::lit((k as f64) * (k as f64));
    range::<T>(F, eps * kk < T::one(), || format!("eps = {eps} >= 1/k^2"))?;
    if eps == T::zero() {
        return Ok(T::zero());
    }
    let m = T::lit((k + 1) as f64);
    let half = eps / T::lit(2.0);
    Ok(m * half.sin() / (m * half).sin() - T::one())
}

/// `(k² + 2k)ε²/24`, the quadratic minorant of [`lb_small_eps`].
pub fn lb_small_eps_quadratic<T: Scalar>(k: u32, eps: T) -> T {
    let k = k as f64;
    T::lit(k * k + 2.0 * k) * eps * eps / T::lit(24.0)
}

/// Length of `S(T_k)`: `sin((k+1)ε/2)/sin(ε/2)`, or `k+1` at ε = 0.
pub fn tk_solution_length<T: Scalar>(k: u32, eps: T) -> T {
    let m = T::lit((k + 1) as f64);
    if eps == T::zero() {
        return m;
    }
    let half = eps / T::lit(2.0);
    (m * half).sin() / half.sin()
}

fn check_large<T: Scalar>(formula: &'static str, k: u32, eps: T) -> Result<()> {
    range::<T>(formula, k >= 1, || "k must be at least 1".into())?;
    range::<T>(
        formula,
        eps >= T::FRAC_PI_3() && eps < T::lit(2.0) * T::FRAC_PI_3(),
        || format!("eps = {eps} outside [pi/3, 2pi/3)"),
    )
}

/// `√(4C² − 1)(C^k − 1)/(C − 1) − 1` for ε > π/3, `√3k − 1` at ε = π/3.
pub fn lb_large_eps<T: Scalar>(k: u32, eps: T) -> Result<T> {
    check_large("lb_large_eps", k, eps)?;
    let sqrt3 = T::lit(3.0).sqrt();
    if eps == T::FRAC_PI_3() {
        return Ok(sqrt3 * T::lit(k as f64) - T::one());
    }
    let c = BoundInput { n: 0, eps, k, diameter: T::one() }.c();
    let four = T::lit(4.0);
    Ok((four * c * c - T::one()).sqrt() * (c.powi(k as i32) - T::one()) / (c - T::one()) - T::one())
}

/// `√3(C^k − 1)/(C − 1) − 1`, the simpler minorant of [`lb_large_eps`]
/// (`√3k − 1` at ε = π/3).
pub fn lb_large_eps_simple<T: Scalar>(k: u32, eps: T) -> Result<T> {
    check_large("lb_large_eps_simple", k, eps)?;
    let sqrt3 = T::lit(3.0).sqrt();
    if eps == T::FRAC_PI_3() {
        return Ok(sqrt3 * T::lit(k as f64) - T::one());
    }
    let c = BoundInput { n: 0, eps, k, diameter: T::one() }.c();
    Ok(sqrt3 * (c.powi(k as i32) - T::one()) / (c - T::one()) - T::one())
}

/// `(δ + L(T))/(δ + 2(2r)^k) − 1` for the circle construction at a fixed `δ > 0`.
pub fn lb_large_eps_at_delta<T: Scalar>(k: u32, eps: T, delta: T) -> Result<T> {
    check_large("lb_large_eps_at_delta", k, eps)?;
    let two = T::lit(2.0);
    let r = (T::FRAC_PI_3() - eps / two).sin();
    let lt = if eps == T::FRAC_PI_3() {
        two * T::lit(3.0).sqrt() * T::lit(k as f64)
    } else {
        T::lit(4.0) * (T::FRAC_PI_3() - eps / two).cos() * (T::one() - (two * r).powi(k as i32)) / (T::one() - two * r)
    };
    Ok((delta + lt) / (delta + two * (two * r).powi(k as i32)) - T::one())
}

/// `sec(ε/2) − 1`, for `0 ≤ ε < π/3`.
pub fn exact_n3<T: Scalar>(eps: T) -> Result<T> {
    const F: &str = "exact_n3";
    check_eps(F, eps)?;
    range::<T>(F, eps < T::FRAC_PI_3(), || format!("eps = {eps} >= pi/3"))?;
    Ok(T::one() / (eps / T::lit(2.0)).cos() - T::one())
}

/// `sec ε − 1`, for `0 ≤ ε < π/3`.
pub fn exact_n4<T: Scalar>(eps: T) -> Result<T> {
    const F: &str = "exact_n4";
    check_eps(F, eps)?;
    range::<T>(F, eps < T::FRAC_PI_3(), || format!("eps = {eps} >= pi/3"))?;
    Ok(T::one() / eps.cos() - T::one())
}

/// Which of the two edge polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolyKind {
    /// `p_{k,h}`, with the `ω` term (edges to even children).
    P,
    /// `q_{k,h}`, with the `ω⁻¹` term (edges to odd children).
    Q,
}

fn rotation<T: Scalar>(which: PolyKind) -> Point<T> {
    let w = Complex::from_polar(T::one(), T::FRAC_PI_3());
    match which {
        PolyKind::P => w,
        PolyKind::Q => w.conj(),
    }
}

fn geometric_sum<T: Scalar>(z: Point<T>, terms: usize) -> Point<T> {
    let mut s = Complex::new(T::zero(), T::zero());
    let mut p = Complex::new(T::one(), T::zero());
    for _ in 0..terms {
        s = s + p;
        p = p * z;
    }
    s
}

/// `z^h + ½(Σ_{j<k−h} z^j)(z^{h+1} − 1) − w(Σ_{j≤k−h} z^j)(z^h − 1)` with
/// `w = ω` for `P` and `ω⁻¹` for `Q`.
pub fn poly_eval<T: Scalar>(k: u32, h: u32, which: PolyKind, z: Point<T>) -> Point<T> {
    assert!(h >= 1 && h <= k, "need 1 <= h <= k");
    let one = Complex::new(T::one(), T::zero());
    let (k, h) = (k as usize, h as usize);
    let zh = z.powi(h as i32);
    zh + geometric_sum(z, k - h) * (zh * z - one) * T::lit(0.5)
        - rotation::<T>(which) * geometric_sum(z, k - h + 1) * (zh - one)
}

/// `p_{k,h}(z)`.
pub fn poly_p<T: Scalar>(k: u32, h: u32, z: Point<T>) -> Point<T> {
    poly_eval(k, h, PolyKind::P, z)
}

/// `q_{k,h}(z)`.
pub fn poly_q<T: Scalar>(k: u32, h: u32, z: Point<T>) -> Point<T> {
    poly_eval(k, h, PolyKind::Q, z)
}

/// Coefficients of the polynomial in ascending order of degree (length `k + 1`).
pub fn poly_coefficients<T: Scalar>(k: u32, h: u32, which: PolyKind) -> Vec<Point<T>> {
    assert!(h >= 1 && h <= k, "need 1 <= h <= k");
    let (k, h) = (k as usize, h as usize);
    let zero = Complex::new(T::zero(), T::zero());
    let mut c = vec![zero; k + 1];
    c[h] = c[h] + T::one();
    let half = T::lit(0.5);
    // ½ Σ_{j<k−h} (z^{j+h+1} − z^j)
    for j in 0..k - h {
        c[j + h + 1] = c[j + h + 1] + half;
        c[j] = c[j] - half;
    }
    // −w Σ_{j≤k−h} (z^{j+h} − z^j)
    let w = rotation::<T>(which);
    for j in 0..=k - h {
        c[j + h] = c[j + h] - w;
        c[j] = c[j] + w;
    }
    c
}

fn horner<T: Scalar>(coeffs: &[Point<T>], z: Point<T>) -> (Point<T>, Point<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut p = zero;
    let mut dp = zero;
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Number of zeros of the polynomial inside `|z − center| < radius`, by
/// summing argument increments around the circle. `None` if the contour
/// passes too close to a zero to resolve.
pub fn zero_count(coeffs: &[Point<f64>], center: Point<f64>, radius: f64) -> Option<usize> {
    let mut samples = 1024usize;
    while samples <= 1 << 16 {
        let mut total = 0.0;
        let mut prev = horner(coeffs, center + radius).0;
        let mut ok = prev.norm() > 0.0;
        for i in 1..=samples {
            let t = std::f64::consts::TAU * i as f64 / samples as f64;
            let v = horner(coeffs, center + Complex::from_polar(radius, t)).0;
            if v.norm() == 0.0 {
                ok = false;
                break;
            }
            let step = (v / prev).arg();
            if step.abs() > 0.5 {
                ok = false;
                break;
            }
            total += step;
            prev = v;
        }
        if ok {
            let winding = total / std::f64::consts::TAU;
            let rounded = winding.round();
            if (winding - rounded).abs() < 1e-3 && rounded >= 0.0 {
                return Some(rounded as usize);
            }
        }
        samples *= 4;
    }
    None
}

fn newton(coeffs: &[Point<f64>], mut z: Point<f64>) -> Option<Point<f64>> {
    for _ in 0..200 {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = p / dp;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    let (p, _) = horner(coeffs, z);
    (p.norm() < 1e-10).then_some(z)
}

/// Nearest zero to `z = 1` of `p_{k,h}` or `q_{k,h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootProbe {
    pub k: u32,
    pub h: u32,
    pub which: PolyKind,
    pub root: Point<f64>,
    pub min_dist_to_1: f64,
    /// Distinct zeros located by Newton's method.
    pub located: Vec<Point<f64>>,
    /// Radius of the disk about 1 on which the zero count was checked.
    pub scan_radius: f64,
    /// Zero count on that disk, by the argument principle.
    pub count_in_scan: Option<usize>,
    /// The argument principle confirms no zero is closer than `root`.
    pub certified: bool,
    /// `min_dist_to_1 ≥ 1/k² − 1e−12`.
    pub meets_bound: bool,
}

/// Locates the zero of `p_{k,h}` (or `q_{k,h}`) nearest to 1 by Newton's
/// method from 64 seeds on rings `|z − 1| ∈ {0.5, 1, 2, 4}/k²`, and checks
/// with zero counts that none was missed on `|z − 1| ≤ 8/k²` and that the
/// disk strictly inside the nearest one is empty.
pub fn poly_root_probe(k: u32, h: u32, which: PolyKind) -> Result<RootProbe> {
    if k == 0 || k > crate::topology::MAX_BINARY_DEPTH || h == 0 || h > k {
        return Err(Error::InvalidParameter(format!("need 1 <= h <= k <= 20, got k={k} h={h}")));
    }
    let coeffs = poly_coefficients::<f64>(k, h, which);
    let one = Complex::new(1.0, 0.0);
    let unit = 1.0 / (k as f64 * k as f64);
    let mut seeds = Vec::with_capacity(64);
    for ring in [0.5, 1.0, 2.0, 4.0] {
        for j in 0..16 {
            let t = std::f64::consts::TAU * (j as f64 + 0.5) / 16.0;
            seeds.push(one + Complex::from_polar(ring * unit, t));
        }
    }
    let mut located: Vec<Point<f64>> = Vec::new();
    let add = |z: Point<f64>, located: &mut Vec<Point<f64>>| {
        if !located.iter().any(|r| (r - z).norm() < 1e-8) {
            located.push(z);
        }
    };
    for &s in &seeds {
        if let Some(z) = newton(&coeffs, s) {
            add(z, &mut located);
        }
    }
    let scan = 8.0 * unit;
    let count = zero_count(&coeffs, one, scan);
    let inside = |located: &[Point<f64>]| located.iter().filter(|r| (*r - one).norm() < scan).count();
    if count.is_some_and(|c| c > inside(&located)) {
        // a zero was missed: seed densely over the scan disk
        for i in 1..=16 {
            for j in 0..32 {
                let t = std::f64::consts::TAU * (j as f64 + 0.25) / 32.0;
                if let Some(z) = newton(&coeffs, one + Complex::from_polar(scan * i as f64 / 16.0, t)) {
                    add(z, &mut located);
                }
            }
        }
    }
    located.sort_by(|a, b| (a - one).norm().total_cmp(&(b - one).norm()));
    let Some(&root) = located.first() else {
        return Err(Error::NoRootFound { radius: scan });
    };
    let min_dist = (root - one).norm();
    // the contour must keep some distance from the zero found on it
    let inner = [1e-3, 1e-2]
        .iter()
        .find_map(|shrink| zero_count(&coeffs, one, min_dist * (1.0 - shrink)));
    let certified = inner == Some(0) && count.is_some_and(|c| c == inside(&located));
    Ok(RootProbe {
        k,
        h,
        which,
        root,
        min_dist_to_1: min_dist,
        located,
        scan_radius: scan,
        count_in_scan: count,
        certified,
        meets_bound: min_dist >= unit - 1e-12,
    })
}

/// Construction family of an instance, selecting the lower bound that applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family<T> {
    Tk { k: u32 },
    Circle { k: u32, delta: T },
    Witness3,
    Witness4,
    Other,
}

/// A named formula value.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue<T> {
    pub formula: &'static str,
    pub value: T,
}

/// Measured relative excess of one instance next to the bounds that apply to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport<T> {
    pub instance: String,
    pub n: usize,
    pub eps: T,
    pub l_t: T,
    pub l_s: T,
    /// `L_S` came from Melzak's algorithm rather than the oracle.
    pub melzak: bool,
    pub ratio_minus_1: T,
    pub upper: Option<BoundValue<T>>,
    pub lower: Option<BoundValue<T>>,
    pub holds: bool,
}

/// Tolerance used when comparing a measured ratio with a bound.
pub const REPORT_TOL: f64 = 1e-8;

/// Measures `L(T)/L(S(T)) − 1` and compares it with the tightest applicable
/// upper bound and, for constructed families, the matching lower bound.
///
/// `eps` defaults to the measured certificate of `tree`.
pub fn ratio_report<T: Scalar>(
    instance: &str,
    tree: &EmbeddedTree<T>,
    eps: Option<T>,
    family: Family<T>,
) -> Result<RatioReport<T>> {
    let n = tree.topology().n_terminals();
    let eps = match eps {
        Some(e) => e,
        None => tree.measure_eps()?,
    };
    let l_t = tree.length();
    let solved = solve_tree(tree).ok().filter(|r| r.is_nondegenerate());
    let (l_s, melzak) = match solved {
        Some(r) => (r.length, true),
        None => (oracle_from_tree(tree)?.length, false),
    };
    let ratio = l_t / l_s - T::one();
    let upper = [
        ("ub_plane_small_eps", ub_plane_small_eps(n, eps)),
        ("ub_plane_moderate", ub_plane_moderate(n, eps)),
        ("ub_exponential", ub_exponential(n, eps)),
    ]
    .into_iter()
    .filter_map(|(formula, v)| v.ok().map(|value| BoundValue { formula, value }))
    .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
    let lower = match family {
        Family::Tk { k } => lb_small_eps(k, eps).ok().map(|value| BoundValue {
            formula: "lb_small_eps",
            value,
        }),
        Family::Circle { k, delta } => lb_large_eps_at_delta(k, eps, delta).ok().map(|value| BoundValue {
            formula: "lb_large_eps_at_delta",
            value,
        }),
        _ => None,
    };
    let tol = |v: T| T::lit(REPORT_TOL) * v.abs().max(T::one());
    let holds = upper.as_ref().map_or(true, |u| ratio <= u.value + tol(u.value))
        && lower.as_ref().map_or(true, |l| ratio >= l.value - tol(l.value));
    Ok(RatioReport {
        instance: instance.to_string(),
        n,
        eps,
        l_t,
        l_s,
        melzak,
        ratio_minus_1: ratio,
        upper,
        lower,
        holds,
    })
}

/// One evaluated cell of a bound table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub formula: &'static str,
    pub n: Option<usize>,
    pub k: Option<u32>,
    pub eps: f64,
    pub value: Option<f64>,
    pub applicable: bool,
}

/// Parameter grid for [`bound_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    pub ns: Vec<usize>,
    pub ks: Vec<u32>,
    pub eps: Vec<f64>,
}

impl Default for TableGrid {
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};
        Self {
            ns: vec![3, 4, 5, 6, 8, 10, 12, 16],
            ks: (1..=6).collect(),
            eps: vec![0.001, 0.01, 0.05, 0.1, 0.3, 0.5, FRAC_PI_6, 0.9, FRAC_PI_3, FRAC_PI_3 + 0.2, FRAC_PI_2],
        }
    }
}

impl TableGrid {
    pub fn is_empty(&self) -> bool {
        self.eps.is_empty() || (self.ns.is_empty() && self.ks.is_empty())
    }
}

fn row(formula: &'static str, n: Option<usize>, k: Option<u32>, eps: f64, v: Result<f64>) -> TableRow {
    let value = v.ok();
    TableRow {
        formula,
        n,
        k,
        eps,
        applicable: value.is_some(),
        value,
    }
}

/// Evaluates every formula over the grid, in a fixed order: formulas indexed
/// by `n` first, then those indexed by `k`, then the exact small-`n` values.
pub fn bound_table(grid: &TableGrid) -> Vec<TableRow> {
    let mut rows = Vec::new();
    type NFormula = fn(usize, f64) -> Result<f64>;
    let by_n: [(&'static str, NFormula); 3] = [
        ("ub_plane_small_eps", ub_plane_small_eps::<f64>),
        ("ub_plane_moderate", ub_plane_moderate::<f64>),
        ("ub_exponential", ub_exponential::<f64>),
    ];
    for (name, f) in by_n {
        for &n in &grid.ns {
            for &e in &grid.eps {
                rows.push(row(name, Some(n), None, e, f(n, e)));
            }
        }
    }
    for &k in &grid.ks {
        for &e in &grid.eps {
            let n = 1usize.checked_shl(k).map(|p| p + 1);
            rows.push(row("lb_small_eps", n, Some(k), e, lb_small_eps(k, e)));
        }
    }
    for &k in &grid.ks {
        for &e in &grid.eps {
            let n = 1usize.checked_shl(k + 1);
            rows.push(row("lb_large_eps", n, Some(k), e, lb_large_eps(k, e)));
        }
    }
    for &e in &grid.eps {
        rows.push(row("exact_n3", Some(3), None, e, exact_n3(e)));
        rows.push(row("exact_n4", Some(4), None, e, exact_n4(e)));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{build_tk_recursive, random_tree, TkParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, PI};

    #[test]
    fn small_eps_upper_bound() {
        assert_eq!(ub_plane_small_eps(3, 0.0).unwrap(), 0.0);
        let v = ub_plane_small_eps(10, 0.1).unwrap();
        assert!((v - (1.0 / 0.4f64.cos() - 1.0)).abs() < 1e-15);
        assert!(matches!(ub_plane_small_eps(5, 1.1), Err(Error::RangeViolation { .. })));
        assert!(ub_plane_small_eps(2, 0.1).is_err());
        for e in [0.01, 0.2, 0.9] {
            assert_eq!(exact_n3(e).unwrap(), ub_plane_small_eps(3, e).unwrap());
            assert_eq!(exact_n4(e).unwrap(), ub_plane_small_eps(4, e).unwrap());
        }
    }

    #[test]
    fn small_eps_upper_bound_is_quadratic() {
        for n in [3usize, 5, 10, 40] {
            let e = 1e-4;
            let m = (n - 2) as f64;
            let taylor = m * m * e * e / 8.0;
            let r = ub_plane_small_eps(n, e).unwrap() / taylor;
            assert!((r - 1.0).abs() < 0.01, "n={n}: {r}");
        }
    }

    #[test]
    fn moderate_bound() {
        assert_eq!(ub_plane_moderate(3, 0.1).unwrap(), 2.0);
        assert_eq!(ub_plane_moderate(4, PI / 6.0).unwrap(), 4.0);
        assert!(ub_plane_moderate(4, PI / 5.0).is_err());
    }

    #[test]
    fn exponential_bound() {
        assert_eq!(ub_exponential(2, 0.3).unwrap(), 0.0);
        let e = 0.4;
        let a = (e / 2.0f64).cos() / (FRAC_PI_3 - e / 2.0).sin();
        let b = 1.0 / (FRAC_PI_3 - e / 2.0).sin();
        let expect = a.powi(3) + (a.powi(3) - 1.0) * b / (a - 1.0) - 1.0;
        assert!((ub_exponential(5, e).unwrap() - expect).abs() < 1e-12);
        assert!(ub_exponential(5, 2.0 * FRAC_PI_3).is_err());
        assert!((terminal_steiner_factor(e) - a).abs() < 1e-15);
        assert!((cherry_factor(e) - b).abs() < 1e-15);
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(lb_small_eps(3, 0.0).unwrap(), 0.0);
        assert!(lb_small_eps(3, 0.2).is_err());
        let c = 0.5;
        for k in [2u32, 5, 10] {
            let e = c / (k * k) as f64;
            let v = lb_small_eps(k, e).unwrap();
            assert!(v >= lb_small_eps_quadratic(k, e));
            assert!(v > c * e / 24.0);
        }
        let v = lb_large_eps(2, FRAC_PI_3).unwrap();
        assert!((v - (2.0 * 3f64.sqrt() - 1.0)).abs() < 1e-15);
        for k in 1..=6 {
            let near = lb_large_eps(k, FRAC_PI_3 + 1e-7).unwrap();
            let at = lb_large_eps(k, FRAC_PI_3).unwrap();
            assert!((near - at).abs() < 1e-4, "k={k}: {near} vs {at}");
            let e = FRAC_PI_3 + 0.3;
            assert!(lb_large_eps(k, e).unwrap() > lb_large_eps_simple(k, e).unwrap());
        }
        assert!(lb_large_eps(2, 1.0).is_err());
    }

    #[test]
    fn bounds_are_monotone_in_eps() {
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let check = |f: &dyn Fn(f64) -> Result<f64>| {
            let vals: Vec<f64> = grid.iter().filter_map(|&e| f(e).ok()).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        };
        check(&|e| ub_plane_small_eps(6, e));
        check(&|e| ub_plane_moderate(6, e));
        check(&|e| ub_exponential(6, e));
        check(&|e| lb_small_eps(3, e));
        check(&|e| lb_large_eps(3, e));
        check(&|e| exact_n3(e));
        check(&|e| exact_n4(e));
    }

    #[test]
    fn polynomials_at_one() {
        let one = Complex::new(1.0, 0.0);
        for k in 1..=10 {
            for h in 1..=k {
                assert!((poly_p(k, h, one) - one).norm() < 1e-14);
                assert!((poly_q(k, h, one) - one).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn coefficients_match_evaluation() {
        let z = Complex::from_polar(1.1, 0.7);
        for k in 1..=9 {
            for h in 1..=k {
                for which in [PolyKind::P, PolyKind::Q] {
                    let c = poly_coefficients::<f64>(k, h, which);
                    assert_eq!(c.len(), k as usize + 1);
                    let (v, _) = horner(&c, z);
                    assert!((v - poly_eval(k, h, which, z)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn edge_lengths_follow_polynomials() {
        let k = 5;
        let eps = 0.03;
        let t = build_tk_recursive(TkParams::new(k, eps).unwrap()).unwrap();
        let s = crate::melzak::solve_tree(&t).unwrap().tree.unwrap();
        let z = Complex::from_polar(1.0, eps);
        for i in 1usize..(1 << k) {
            for (child, which) in [(2 * i, PolyKind::P), (2 * i + 1, PolyKind::Q)] {
                let h = crate::topology::HeapIndex::new(child as u64).unwrap().level();
                let want = poly_eval(k, h, which, z).norm() / 2f64.powi(h as i32);
                let got = (s.position(child) - s.position(i)).norm();
                assert!((got - want).abs() < 1e-12, "edge {child}");
            }
        }
    }

    #[test]
    fn root_probe_small_cases() {
        // p_{1,1}(z) = z(1 − ω) + ω has its zero at e^{−iπ/3}
        let probe = poly_root_probe(1, 1, PolyKind::P).unwrap();
        assert!((probe.root - Complex::from_polar(1.0, -FRAC_PI_3)).norm() < 1e-12);
        assert!(probe.certified && probe.meets_bound);
        for k in 2..=8 {
            for h in 1..=k {
                for which in [PolyKind::P, PolyKind::Q] {
                    let p = poly_root_probe(k, h, which).unwrap();
                    assert!(p.meets_bound, "k={k} h={h} {which:?}: {}", p.min_dist_to_1);
                    assert!(p.certified, "k={k} h={h} {which:?}");
                }
            }
        }
    }

    #[test]
    fn zero_count_of_known_polynomial() {
        let c = |re: f64| Complex::new(re, 0.0);
        // (z − 0.5)(z − 2) = z² − 2.5z + 1
        let coeffs = vec![c(1.0), c(-2.5), c(1.0)];
        assert_eq!(zero_count(&coeffs, c(0.0), 1.0), Some(1));
        assert_eq!(zero_count(&coeffs, c(0.0), 3.0), Some(2));
        assert_eq!(zero_count(&coeffs, c(0.0), 0.1), Some(0));
    }

    #[test]
    fn tk_ratio_report() {
        for k in [2u32, 4] {
            let eps = 0.05 / (k as f64);
            let t = build_tk_recursive(TkParams::new(k, eps).unwrap()).unwrap();
            let r = ratio_report("tk", &t, None, Family::Tk { k }).unwrap();
            assert!(r.melzak && r.holds);
            assert!((r.ratio_minus_1 - lb_small_eps(k, eps).unwrap()).abs() < 1e-8);
        }
        let t = build_tk_recursive(TkParams::new(3, 0.0f64).unwrap()).unwrap();
        let r = ratio_report("flat", &t, None, Family::Tk { k: 3 }).unwrap();
        assert!(r.ratio_minus_1.abs() < 1e-12);
    }

    #[test]
    fn table_contains_reference_rows() {
        let rows = bound_table(&TableGrid::default());
        let r = rows
            .iter()
            .find(|r| r.formula == "ub_plane_small_eps" && r.n == Some(3) && r.eps == 0.3)
            .unwrap();
        assert_eq!(r.value, Some(1.0 / 0.15f64.cos() - 1.0));
        for k in 1..=6u32 {
            let r = rows
                .iter()
                .find(|r| r.formula == "lb_large_eps" && r.k == Some(k) && r.eps == FRAC_PI_3)
                .unwrap();
            assert_eq!(r.value, Some(3f64.sqrt() * k as f64 - 1.0));
        }
        assert_eq!(rows, bound_table(&TableGrid::default()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cherry_and_diameter_bounds(seed in 0u64..100_000, n in 3usize..12, frac in 0.0f64..1.0) {
            let eps = frac * 2.0 * FRAC_PI_3 * 0.99;
            let t: crate::approx::EmbeddedTree<f64> = random_tree(n, eps.min(FRAC_PI_3 * 0.99), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let eps = t.measure_eps().unwrap();
            let topo = t.topology();
            for ch in crate::topology::cherries(topo) {
                let [a, b] = ch.terminals;
                let s = t.position(ch.steiner);
                let lhs = (s - t.position(a)).norm() + (s - t.position(b)).norm();
                let rhs = cherry_factor(eps) * (t.position(a) - t.position(b)).norm();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12));
            }
            let terms: Vec<_> = topo.terminals().collect();
            let mut d: f64 = 0.0;
            for &a in &terms {
                for &b in &terms {
                    d = d.max((t.position(a) - t.position(b)).norm());
                }
            }
            for &a in &terms {
                for s in topo.steiner_points() {
                    prop_assert!((t.position(a) - t.position(s)).norm() <= terminal_steiner_factor(eps) * d * (1.0 + 1e-12));
                }
            }
            prop_assert!(t.length() <= length_over_diameter(n, eps).unwrap() * d * (1.0 + 1e-12));
        }
    }
}
