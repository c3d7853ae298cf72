//! Open (clamped) B-spline spaces on an interval.
//!
//! Provides knot-vector construction, Cox-de Boor evaluation of the nonzero
//! basis functions and their first derivatives, Greville abscissae, and
//! per-element Gauss-Legendre quadrature rules.

use crate::{Error, Result};

/// Knot vector of an open (clamped) B-spline space.
///
/// End knots carry multiplicity `degree + 1`; interior multiplicities are at
/// most `degree`, so every basis function is at least continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// Nonzero basis values and first derivatives at one point.
///
/// Basis function `first + a` has value `values[a]` and derivative
/// `derivs[a]` for `a` in `0..=degree`; all other basis functions vanish.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub first: usize,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl KnotVector {
    /// Builds a knot vector from raw knots, validating clamping and
    /// multiplicity rules.
    pub fn from_knots(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidParameter(format!(
                "need at least {} knots for degree {}, got {}",
                2 * (degree + 1),
                degree,
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidParameter(
                "knots must be nondecreasing".into(),
            ));
        }
        let m = knots.len() - 1;
        let lo = knots[0];
        let hi = knots[m];
        if knots[degree] != lo || knots[m - degree] != hi {
            return Err(Error::InvalidParameter(format!(
                "end knots must have multiplicity {}",
                degree + 1
            )));
        }
        if knots[degree] >= knots[m - degree] {
            return Err(Error::InvalidParameter("empty knot domain".into()));
        }
        // Interior multiplicity above `degree` would break minimal continuity.
        let interior = &knots[degree + 1..m - degree];
        let mut run = 1usize;
        for w in interior.windows(2) {
            run = if w[0] == w[1] { run + 1 } else { 1 };
            if run > degree {
                return Err(Error::InvalidParameter(format!(
                    "interior knot {} has multiplicity above {}",
                    w[0], degree
                )));
            }
        }
        if !interior.is_empty() && (interior[0] == lo || interior[interior.len() - 1] == hi) {
            return Err(Error::InvalidParameter(format!(
                "end knots must have multiplicity exactly {}",
                degree + 1
            )));
        }
        Ok(Self { degree, knots })
    }

    /// Open uniform knot vector on `[0, 1]` with `n_elements` equal elements
    /// and smoothness `C^continuity` at interior breakpoints.
    ///
    /// The basis dimension is
    /// `n_elements * (degree - continuity) + continuity + 1`.
    pub fn open_uniform(n_elements: usize, degree: usize, continuity: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidParameter(
                "need at least one element".into(),
            ));
        }
        if degree == 0 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        if continuity + 1 > degree {
            return Err(Error::InvalidParameter(format!(
                "continuity {} needs degree above {}",
                continuity, degree
            )));
        }
        let mult = degree - continuity;
        let mut knots = vec![0.0; degree + 1];
        for e in 1..n_elements {
            let x = e as f64 / n_elements as f64;
            knots.extend(std::iter::repeat(x).take(mult));
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Self::from_knots(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Domain endpoints.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[self.degree],
            self.knots[self.knots.len() - 1 - self.degree],
        )
    }

    /// Distinct knot values (element breakpoints), in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for &k in &self.knots[self.degree..self.knots.len() - self.degree] {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints().len() - 1
    }

    /// Index `i` of the knot span `[knots[i], knots[i+1])` containing `x`;
    /// the right domain endpoint maps to the last nonempty span.
    pub fn find_span(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideDomain { x, lo, hi });
        }
        let last = self.knots.len() - self.degree - 2;
        if x >= hi {
            return Ok(last);
        }
        let idx = self.knots.partition_point(|&k| k <= x) - 1;
        Ok(idx.min(last))
    }

    /// Values and first derivatives of the `degree + 1` basis functions that
    /// are nonzero at `x` (Cox-de Boor recurrence).
    pub fn eval_basis(&self, x: f64) -> Result<BasisEval> {
        let p = self.degree;
        let span = self.find_span(x)?;
        let t = &self.knots;

        let mut values = vec![0.0; p + 1];
        values[0] = 1.0;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        // Degree p-1 values, needed for the derivative formula.
        let mut lower = vec![1.0; p];
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
            if j == p - 1 {
                lower.copy_from_slice(&values[..p]);
            }
        }

        // Nonzero degree p-1 functions have indices span-p+1 ..= span.
        let lower_at = |g: isize| -> f64 {
            let lo = span as isize - p as isize + 1;
            if g >= lo && g <= span as isize {
                lower[(g - lo) as usize]
            } else {
                0.0
            }
        };
        let first = span - p;
        let mut derivs = vec![0.0; p + 1];
        for (a, d) in derivs.iter_mut().enumerate() {
            let g = first + a;
            let den1 = t[g + p] - t[g];
            let den2 = t[g + p + 1] - t[g + 1];
            let term1 = if den1 > 0.0 {
                lower_at(g as isize) / den1
            } else {
                0.0
            };
            let term2 = if den2 > 0.0 {
                lower_at(g as isize + 1) / den2
            } else {
                0.0
            };
            *d = p as f64 * (term1 - term2);
        }

        Ok(BasisEval {
            first,
            values,
            derivs,
        })
    }

    /// Greville abscissae: `g_i` is the mean of knots `i+1 ..= i+degree`.
    pub fn greville_points(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.n_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }
}

/// Per-element Gauss-Legendre quadrature over a knot vector's elements,
/// flattened into global point/weight arrays.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub points_per_element: usize,
    pub element_bounds: Vec<f64>,
}

impl QuadratureRule {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }
}

/// Gauss-Legendre rule with `q` points per element of `kv`.
///
/// Exact for polynomials of degree `2q - 1` on each element; `q = degree + 1`
/// integrates all Galerkin matrix entries exactly.
pub fn gauss_rule(q: usize, kv: &KnotVector) -> Result<QuadratureRule> {
    if q == 0 || q > 64 {
        return Err(Error::InvalidParameter(format!(
            "points per element must be in 1..=64, got {}",
            q
        )));
    }
    let (nodes, weights) = gauss_legendre(q);
    let bounds = kv.breakpoints();
    let mut pts = Vec::with_capacity(q * (bounds.len() - 1));
    let mut wts = Vec::with_capacity(pts.capacity());
    for e in bounds.windows(2) {
        let mid = 0.5 * (e[0] + e[1]);
        let half = 0.5 * (e[1] - e[0]);
        for i in 0..q {
            pts.push(mid + half * nodes[i]);
            wts.push(half * weights[i]);
        }
    }
    Ok(QuadratureRule {
        points: pts,
        weights: wts,
        points_per_element: q,
        element_bounds: bounds,
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..(q + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre(q, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_q` and its derivative at `x`.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Basis values and first derivatives tabulated at a list of points.
///
/// Row `a` covers point `points[a]`: basis `first[a] + t` has value
/// `values[a * width + t]` and derivative `derivs[a * width + t]` for
/// `t` in `0..width`.
#[derive(Debug, Clone)]
pub struct AxisEval {
    pub n_points: usize,
    pub n_basis: usize,
    pub width: usize,
    pub first: Vec<usize>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl AxisEval {
    pub fn new(kv: &KnotVector, points: &[f64]) -> Result<Self> {
        let width = kv.degree() + 1;
        let mut first = Vec::with_capacity(points.len());
        let mut values = Vec::with_capacity(points.len() * width);
        let mut derivs = Vec::with_capacity(points.len() * width);
        for &x in points {
            let b = kv.eval_basis(x)?;
            first.push(b.first);
            values.extend_from_slice(&b.values);
            derivs.extend_from_slice(&b.derivs);
        }
        Ok(Self {
            n_points: points.len(),
            n_basis: kv.n_basis(),
            width,
            first,
            values,
            derivs,
        })
    }

    /// Row view of either the value or derivative table.
    pub fn row(&self, a: usize, derivative: bool) -> (usize, &[f64]) {
        let table = if derivative { &self.derivs } else { &self.values };
        (self.first[a], &table[a * self.width..(a + 1) * self.width])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn open_uniform_knots_and_dimension() {
        let kv = KnotVector::open_uniform(2, 1, 0).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        assert_eq!(kv.n_basis(), 3);

        let kv = KnotVector::open_uniform(16, 2, 1).unwrap();
        assert_eq!(kv.n_basis(), 18);
        assert_eq!(kv.n_elements(), 16);

        assert_eq!(KnotVector::open_uniform(4, 1, 0).unwrap().n_basis(), 5);
        assert_eq!(KnotVector::open_uniform(4, 2, 1).unwrap().n_basis(), 6);
        assert_eq!(KnotVector::open_uniform(1, 3, 2).unwrap().n_basis(), 4);
        // C^0 quadratics double each interior knot.
        assert_eq!(KnotVector::open_uniform(4, 2, 0).unwrap().n_basis(), 9);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(KnotVector::open_uniform(0, 1, 0).is_err());
        assert!(KnotVector::open_uniform(4, 0, 0).is_err());
        assert!(KnotVector::open_uniform(4, 2, 2).is_err());
        assert!(KnotVector::from_knots(1, vec![0.0, 0.0, 1.0]).is_err());
        assert!(KnotVector::from_knots(1, vec![0.0, 0.0, 0.5, 0.4, 1.0, 1.0]).is_err());
        // End multiplicity 1 instead of p+1 = 2.
        assert!(KnotVector::from_knots(1, vec![0.0, 0.5, 0.7, 1.0]).is_err());
        // Interior multiplicity 2 above degree 1.
        assert!(KnotVector::from_knots(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_err());
        // General domain is allowed.
        let kv = KnotVector::from_knots(1, vec![0.0, 0.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(kv.domain(), (0.0, 2.0));
    }

    #[test]
    fn eval_basis_linear_hand_values() {
        let kv = KnotVector::open_uniform(2, 1, 0).unwrap();
        let b = kv.eval_basis(0.25).unwrap();
        assert_eq!(b.first, 0);
        approx::assert_abs_diff_eq!(b.values[0], 0.5, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(b.values[1], 0.5, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(b.derivs[0], -2.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(b.derivs[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn eval_basis_at_domain_endpoints() {
        for (n, p, c) in [(2, 1, 0), (4, 2, 1), (3, 3, 2)] {
            let kv = KnotVector::open_uniform(n, p, c).unwrap();
            let b = kv.eval_basis(0.0).unwrap();
            assert_eq!(b.first, 0);
            approx::assert_abs_diff_eq!(b.values[0], 1.0, epsilon = 1e-14);
            for v in &b.values[1..] {
                approx::assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-14);
            }
            let b = kv.eval_basis(1.0).unwrap();
            assert_eq!(b.first + p, kv.n_basis() - 1);
            approx::assert_abs_diff_eq!(b.values[p], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eval_basis_outside_domain_errors() {
        let kv = KnotVector::open_uniform(2, 1, 0).unwrap();
        assert!(matches!(
            kv.eval_basis(-0.1),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(kv.eval_basis(1.1).is_err());
    }

    #[test]
    fn partition_of_unity_and_derivative_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (n, p, c) in [(2, 1, 0), (5, 2, 1), (5, 2, 0), (4, 3, 2), (7, 4, 3)] {
            let kv = KnotVector::open_uniform(n, p, c).unwrap();
            for _ in 0..200 {
                let x: f64 = rng.gen_range(0.0..=1.0);
                let b = kv.eval_basis(x).unwrap();
                let sum: f64 = b.values.iter().sum();
                let dsum: f64 = b.derivs.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-13, "sum {} at x {}", sum, x);
                assert!(dsum.abs() <= 1e-10, "deriv sum {} at x {}", dsum, x);
                assert!(b.values.iter().all(|&v| v >= -1e-14));
            }
        }
    }

    #[test]
    fn basis_support_is_local() {
        let kv = KnotVector::open_uniform(5, 2, 1).unwrap();
        let t = kv.knots();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let b = kv.eval_basis(x).unwrap();
            for (a, &v) in b.values.iter().enumerate() {
                let i = b.first + a;
                if v.abs() > 1e-14 {
                    assert!(t[i] <= x && x <= t[i + kv.degree() + 1]);
                }
            }
        }
    }

    #[test]
    fn greville_hand_values_and_interpolation() {
        let kv = KnotVector::from_knots(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(kv.greville_points(), vec![0.0, 1.0]);

        let kv = KnotVector::open_uniform(2, 1, 0).unwrap();
        assert_eq!(kv.greville_points(), vec![0.0, 0.5, 1.0]);

        let kv = KnotVector::from_knots(2, vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(kv.greville_points(), vec![0.0, 0.25, 0.75, 1.0]);

        // Greville weights reproduce linear functions exactly.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (n, p, c) in [(4, 2, 1), (3, 3, 2), (6, 2, 0)] {
            let kv = KnotVector::open_uniform(n, p, c).unwrap();
            let g = kv.greville_points();
            for _ in 0..50 {
                let x: f64 = rng.gen_range(0.0..=1.0);
                let b = kv.eval_basis(x).unwrap();
                let interp: f64 = b
                    .values
                    .iter()
                    .enumerate()
                    .map(|(a, v)| v * g[b.first + a])
                    .sum();
                assert!((interp - x).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn gauss_rule_hand_values() {
        let kv1 = KnotVector::from_knots(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let r = gauss_rule(1, &kv1).unwrap();
        assert_eq!(r.points, vec![0.5]);
        assert_eq!(r.weights, vec![1.0]);

        let kv = KnotVector::open_uniform(2, 1, 0).unwrap();
        let r = gauss_rule(2, &kv).unwrap();
        assert_eq!(r.n_points(), 4);
        let integral: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x * x)
            .sum();
        approx::assert_abs_diff_eq!(integral, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_rule_polynomial_exactness() {
        let kv = KnotVector::open_uniform(3, 2, 1).unwrap();
        for q in 1..=8usize {
            let r = gauss_rule(q, &kv).unwrap();
            // Exact through degree 2q-1.
            let d = 2 * q - 1;
            let num: f64 = r
                .points
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(d as i32))
                .sum();
            let exact = 1.0 / (d as f64 + 1.0);
            assert!(
                (num - exact).abs() <= 1e-14,
                "q={} degree={} err={}",
                q,
                d,
                (num - exact).abs()
            );
            let total: f64 = r.weights.iter().sum();
            approx::assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
        assert!(gauss_rule(0, &kv).is_err());
    }

    #[test]
    fn axis_eval_matches_pointwise_evaluation() {
        let kv = KnotVector::open_uniform(4, 2, 1).unwrap();
        let pts: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let ae = AxisEval::new(&kv, &pts).unwrap();
        assert_eq!(ae.n_points, 9);
        assert_eq!(ae.width, 3);
        for (a, &x) in pts.iter().enumerate() {
            let b = kv.eval_basis(x).unwrap();
            let (first, vals) = ae.row(a, false);
            assert_eq!(first, b.first);
            assert_eq!(vals, b.values.as_slice());
            let (_, ders) = ae.row(a, true);
            assert_eq!(ders, b.derivs.as_slice());
        }
    }
}
