//! Homogeneous subgroups, complementary couples and their group
//! projections, plus the graph-translation machinery built on them.
//!
//! In exponential coordinates a homogeneous (dilation-invariant) subgroup is
//! a graded, bracket-closed linear subspace. A complementary couple (W, V)
//! factors every group element uniquely as `g = w · v`; the projections are
//! computed layer by layer, because the BCH correction entering layer `s` of
//! a product depends only on layers below `s`.

use crate::algebra::{GradedAlgebra, Point};
use crate::graph::IntrinsicMap;
use crate::metric::Distance;
use crate::rng;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-10;

/// A linear subspace of the group, stored as a per-layer orthonormal basis.
/// Construction never fails on algebraically invalid input (non-graded or
/// not bracket-closed spans); [`HomogeneousSubgroup::validate`] reports
/// those, and couple construction refuses them.
#[derive(Clone, Debug)]
pub struct HomogeneousSubgroup {
    ambient_dim: usize,
    /// Orthonormal basis vectors, each supported on a single layer, ordered
    /// by layer. Spans the sum of the layer projections of the input span —
    /// which equals the input span exactly when that span is graded.
    basis: Vec<Vec<f64>>,
    /// 1-based layer of each basis vector.
    basis_layers: Vec<usize>,
    /// Number of basis vectors per layer.
    layer_counts: Vec<usize>,
    /// Rank of the raw input span.
    input_rank: usize,
    /// Raw input vectors as supplied.
    input: Vec<Vec<f64>>,
    hom_dim: usize,
}

fn svd_orthonormal_columns(cols: &[Vec<f64>], rows: usize) -> (Vec<Vec<f64>>, usize) {
    if cols.is_empty() {
        return (Vec::new(), 0);
    }
    let mat = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
    let svd = mat.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax.max(1e-300)).count();
    let mut out = Vec::with_capacity(rank);
    for c in 0..rank {
        let mut v: Vec<f64> = (0..rows).map(|r| u[(r, c)]).collect();
        // Deterministic sign: largest-magnitude entry positive.
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[lead] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        out.push(v);
    }
    (out, rank)
}

impl HomogeneousSubgroup {
    /// Builds the subgroup from spanning vectors (full ambient coordinates).
    /// Per layer, the span of the layer projections is orthonormalized; the
    /// result equals the input span iff the input span is graded.
    pub fn new(alg: &GradedAlgebra, vectors: &[Vec<f64>]) -> Result<Self> {
        let q = alg.dim();
        for v in vectors {
            if v.len() != q {
                return Err(Error::DimensionMismatch { expected: q, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSubgroup("non-finite basis entry".into()));
            }
        }
        let (_, input_rank) = svd_orthonormal_columns(vectors, q);
        if input_rank == 0 {
            return Err(Error::InvalidSubgroup("zero-dimensional span".into()));
        }
        let mut basis = Vec::new();
        let mut basis_layers = Vec::new();
        let mut layer_counts = vec![0usize; alg.step()];
        for s in 1..=alg.step() {
            let range = alg.layer_range(s);
            let n_s = range.len();
            let blocks: Vec<Vec<f64>> = vectors.iter().map(|v| v[range.clone()].to_vec()).collect();
            let (ortho, rank_s) = svd_orthonormal_columns(&blocks, n_s);
            layer_counts[s - 1] = rank_s;
            for b in ortho {
                let mut full = vec![0.0; q];
                full[range.clone()].copy_from_slice(&b);
                basis.push(full);
                basis_layers.push(s);
            }
        }
        let hom_dim = layer_counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum();
        Ok(HomogeneousSubgroup {
            ambient_dim: q,
            basis,
            basis_layers,
            layer_counts,
            input_rank,
            input: vectors.to_vec(),
            hom_dim,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Topological dimension (of the graded hull).
    pub fn top_dim(&self) -> usize {
        self.basis.len()
    }

    /// Homogeneous (Hausdorff) dimension `M = Σ s · dim(span ∩ V_s)`.
    pub fn hom_dim(&self) -> usize {
        self.hom_dim
    }

    /// Orthonormal basis, layer-ordered; every vector single-layer.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// 1-based layer of the `i`-th (0-based) basis vector.
    pub fn basis_layer(&self, i: usize) -> usize {
        self.basis_layers[i]
    }

    pub fn layer_counts(&self) -> &[usize] {
        &self.layer_counts
    }

    /// `Σ u_i b_i` in ambient coordinates.
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.basis.len());
        let mut out = vec![0.0; self.ambient_dim];
        for (c, b) in u.iter().zip(&self.basis) {
            if *c != 0.0 {
                for (o, x) in out.iter_mut().zip(b) {
                    *o += c * x;
                }
            }
        }
        out
    }

    pub fn embed_point(&self, u: &[f64]) -> Point {
        Point::raw(self.embed(u))
    }

    /// Coefficients of the orthogonal projection of `x` onto the span.
    pub fn coords_of(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| b.iter().zip(x).map(|(bi, xi)| bi * xi).sum()).collect()
    }

    /// Euclidean distance from `x` to the span.
    pub fn off_span_residual(&self, x: &[f64]) -> f64 {
        let proj = self.embed(&self.coords_of(x));
        x.iter().zip(proj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Checks the homogeneous-subgroup axioms: gradedness of the input span,
    /// bracket closure (residual ≤ 1e-9 for validity) and dilation
    /// invariance of the stored span.
    pub fn validate(&self, alg: &GradedAlgebra) -> SubgroupReport {
        let graded = self.top_dim() == self.input_rank;
        let non_graded_vector = if graded {
            None
        } else {
            // First input vector with weight on more than one layer.
            self.input
                .iter()
                .position(|v| {
                    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let mut layers = 0;
                    for s in 1..=alg.step() {
                        let block: f64 =
                            v[alg.layer_range(s)].iter().map(|x| x * x).sum::<f64>().sqrt();
                        if block > 1e-9 * norm.max(1e-300) {
                            layers += 1;
                        }
                    }
                    layers > 1
                })
                .map(|i| i + 1)
        };
        let mut bracket_residual = 0.0f64;
        for (i, bi) in self.basis.iter().enumerate() {
            for bj in &self.basis[i + 1..] {
                let br = alg.bracket(bi, bj).expect("basis vectors have ambient length");
                bracket_residual = bracket_residual.max(self.off_span_residual(&br));
            }
        }
        let mut dilation_residual = 0.0f64;
        for t in [0.5, 2.0] {
            for b in &self.basis {
                let scaled = alg.dilate_unchecked(t, &Point::raw(b.clone()));
                dilation_residual = dilation_residual.max(self.off_span_residual(scaled.coords()));
            }
        }
        SubgroupReport { graded, non_graded_vector, bracket_residual, dilation_residual }
    }
}

/// Validation report for a candidate homogeneous subgroup.
#[derive(Clone, Debug, Serialize)]
pub struct SubgroupReport {
    /// True when the input span decomposes into its layer intersections.
    pub graded: bool,
    /// 1-based index of an input vector mixing layers, when not graded.
    pub non_graded_vector: Option<usize>,
    /// Max Euclidean residual of `[b_i, b_j]` off the span.
    pub bracket_residual: f64,
    /// Max residual of `δ_t b_i` off the span (0 for graded spans).
    pub dilation_residual: f64,
}

impl SubgroupReport {
    pub fn is_valid(&self) -> bool {
        self.graded && self.bracket_residual <= 1e-9 && self.dilation_residual <= 1e-9
    }
}

impl std::fmt::Display for SubgroupReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid homogeneous subgroup")
        } else {
            write!(
                f,
                "invalid subgroup: graded={}{}, bracket residual {:.3e}, dilation residual {:.3e}",
                self.graded,
                self.non_graded_vector
                    .map(|i| format!(" (input vector {i} mixes layers)"))
                    .unwrap_or_default(),
                self.bracket_residual,
                self.dilation_residual
            )
        }
    }
}

/// Per-layer solve data for the factorization `g = w · v`.
#[derive(Clone, Debug)]
struct LayerSolve {
    w_count: usize,
    v_count: usize,
    /// Inverse of the n_s×n_s matrix whose columns are the layer-s blocks of
    /// the W then V basis vectors of this layer.
    inverse: DMatrix<f64>,
}

/// A complementary couple (W, V): per-layer direct sums
/// `V_s = (W ∩ V_s) ⊕ (V ∩ V_s)`, hence unique factorizations `g = w·v`.
#[derive(Clone, Debug)]
pub struct ComplementaryCouple {
    w: HomogeneousSubgroup,
    v: HomogeneousSubgroup,
    layer_table: Vec<(usize, usize)>,
    solves: Vec<LayerSolve>,
}

impl ComplementaryCouple {
    /// Validates both subgroups and the per-layer rank conditions
    /// `m_s + ℓ_s = n_s`, then precomputes the layer solve matrices.
    pub fn new(alg: &GradedAlgebra, w: HomogeneousSubgroup, v: HomogeneousSubgroup) -> Result<Self> {
        for (name, sub) in [("W", &w), ("V", &v)] {
            let report = sub.validate(alg);
            if !report.is_valid() {
                return Err(Error::InvalidCouple(format!("{name} is not a homogeneous subgroup: {report}")));
            }
        }
        if w.top_dim() + v.top_dim() != alg.dim() {
            return Err(Error::InvalidCouple(format!(
                "dimension deficit: dim W + dim V = {} + {} != {}",
                w.top_dim(),
                v.top_dim(),
                alg.dim()
            )));
        }
        let mut layer_table = Vec::new();
        let mut solves = Vec::new();
        for s in 1..=alg.step() {
            let n_s = alg.layer_range(s).len();
            let m_s = w.layer_counts()[s - 1];
            let l_s = v.layer_counts()[s - 1];
            if m_s + l_s != n_s {
                return Err(Error::InvalidCouple(format!(
                    "layer {s} rank condition fails: {m_s} + {l_s} != {n_s}"
                )));
            }
            let range = alg.layer_range(s);
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_s);
            for (i, b) in w.basis().iter().enumerate() {
                if w.basis_layer(i) == s {
                    cols.push(b[range.clone()].to_vec());
                }
            }
            debug_assert_eq!(cols.len(), m_s);
            for (i, b) in v.basis().iter().enumerate() {
                if v.basis_layer(i) == s {
                    cols.push(b[range.clone()].to_vec());
                }
            }
            debug_assert_eq!(cols.len(), n_s);
            let mat = DMatrix::from_fn(n_s, n_s, |r, c| cols[c][r]);
            let inverse = mat
                .try_inverse()
                .ok_or_else(|| Error::InvalidCouple(format!("layer {s} spans overlap (singular split)")))?;
            layer_table.push((m_s, l_s));
            solves.push(LayerSolve { w_count: m_s, v_count: l_s, inverse });
        }
        Ok(ComplementaryCouple { w, v, layer_table, solves })
    }

    pub fn w(&self) -> &HomogeneousSubgroup {
        &self.w
    }

    pub fn v(&self) -> &HomogeneousSubgroup {
        &self.v
    }

    /// Per-layer dimension table `(m_s, ℓ_s)`.
    pub fn layer_table(&self) -> &[(usize, usize)] {
        &self.layer_table
    }

    /// Factors `g = w · v` with `w ∈ W`, `v ∈ V`, layer by layer: at layer
    /// `s` the BCH correction `Q_s` is already determined by lower layers,
    /// so `g_s − Q_s` splits linearly between the two layer spans.
    pub fn project(&self, alg: &GradedAlgebra, g: &Point) -> (Point, Point) {
        let q = alg.dim();
        debug_assert_eq!(g.dim(), q);
        let mut w_coords = vec![0.0; q];
        let mut v_coords = vec![0.0; q];
        let mut w_idx = 0usize; // index into W basis, layer-ordered
        let mut v_idx = 0usize;
        for s in 1..=alg.step() {
            let range = alg.layer_range(s);
            // Layers < s of w, v are final; layers ≥ s are still zero, so the
            // product's layer-s block is exactly w_s + v_s + Q_s with w_s =
            // v_s = 0 here, i.e. the correction alone.
            let prod = alg.multiply(&Point::raw(w_coords.clone()), &Point::raw(v_coords.clone()));
            let rhs = DVector::from_fn(range.len(), |r, _| {
                g.coords()[range.start + r] - prod.coords()[range.start + r]
            });
            let solve = &self.solves[s - 1];
            let coeffs = &solve.inverse * rhs;
            for k in 0..solve.w_count {
                let b = &self.w.basis()[w_idx + k];
                for i in range.clone() {
                    w_coords[i] += coeffs[k] * b[i];
                }
            }
            for k in 0..solve.v_count {
                let b = &self.v.basis()[v_idx + k];
                for i in range.clone() {
                    v_coords[i] += coeffs[solve.w_count + k] * b[i];
                }
            }
            w_idx += solve.w_count;
            v_idx += solve.v_count;
        }
        (Point::raw(w_coords), Point::raw(v_coords))
    }

    /// The W factor of `g = w · v`.
    pub fn project_w(&self, alg: &GradedAlgebra, g: &Point) -> Point {
        self.project(alg, g).0
    }

    /// The V factor of `g = w · v`.
    pub fn project_v(&self, alg: &GradedAlgebra, g: &Point) -> Point {
        self.project(alg, g).1
    }

    /// Restriction of `π_W` to another subgroup `U` (complementary to the
    /// same V): `u ∈ U ↦ π_W(u)`. Its inverse is the reverse restriction.
    pub fn restricted_project(
        &self,
        alg: &GradedAlgebra,
        u_subgroup: &HomogeneousSubgroup,
        u: &Point,
    ) -> Result<Point> {
        let scale = u.norm_euclid().max(1.0);
        if u_subgroup.off_span_residual(u.coords()) > 1e-8 * scale {
            return Err(Error::OutOfDomain);
        }
        Ok(self.project_w(alg, u))
    }

    /// Translation of the W factor: `σ_x(η) = π_W(x · η)` for `η ∈ W`.
    pub fn sigma_translate(&self, alg: &GradedAlgebra, x: &Point, eta: &Point) -> Result<Point> {
        let scale = eta.norm_euclid().max(1.0);
        if self.w.off_span_residual(eta.coords()) > 1e-8 * scale {
            return Err(Error::OutOfDomain);
        }
        Ok(self.project_w(alg, &alg.multiply(x, eta)))
    }
}

/// Translation of an intrinsic map by a group element:
/// `φ_x(η) = (π_V(x⁻¹η))⁻¹ · φ(π_W(x⁻¹η))`, satisfying
/// `x · graph(φ) = graph(φ_x)`.
pub fn translate_map(alg: &GradedAlgebra, phi: &IntrinsicMap, x: &Point) -> IntrinsicMap {
    let x = x.clone();
    let inner = phi.clone();
    let couple = phi.couple().clone();
    let alg_snapshot = alg.clone();
    let name = format!("translate({})", phi.name());
    IntrinsicMap::from_closure(couple.clone(), name, None, move |_alg2, eta| {
        let shifted = alg_snapshot.multiply(&alg_snapshot.inverse(&x), eta);
        let (w_part, v_part) = couple.project(&alg_snapshot, &shifted);
        let value = inner.eval(&alg_snapshot, &w_part)?;
        Ok(alg_snapshot.multiply(&alg_snapshot.inverse(&v_part), &value))
    })
}

/// Result of sampling the intrinsic Lipschitz quotient.
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzEstimate {
    /// Max sampled quotient ‖π_V(Φ(w')⁻¹Φ(w))‖ / ‖π_W(Φ(w')⁻¹Φ(w))‖.
    pub value: f64,
    pub pairs_used: usize,
    /// Pairs dropped because the W part of the difference vanished.
    pub skipped: usize,
}

/// Lower bound on the intrinsic Lipschitz constant of `φ` by sampling pairs
/// in its domain box. Pairs whose projected W-difference vanishes are
/// skipped and counted.
pub fn intrinsic_lipschitz_estimate(
    alg: &GradedAlgebra,
    couple: &ComplementaryCouple,
    phi: &IntrinsicMap,
    d: &Distance,
    n: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    let compiled = d.compiled(alg)?;
    let (lo, hi) = phi
        .sample_box()
        .ok_or_else(|| Error::InvalidParameter("map has no sampling box".into()))?;
    let m = lo.len();
    let mut r = rng::stream(seed, &["lipschitz"]);
    let mut value = 0.0f64;
    let mut skipped = 0usize;
    let mut used = 0usize;
    for _ in 0..n {
        let u1: Vec<f64> = (0..m).map(|i| r.random_range(lo[i]..hi[i])).collect();
        let u2: Vec<f64> = (0..m).map(|i| r.random_range(lo[i]..hi[i])).collect();
        let w1 = couple.w().embed_point(&u1);
        let w2 = couple.w().embed_point(&u2);
        let g1 = phi.graph_point(alg, &w1)?;
        let g2 = phi.graph_point(alg, &w2)?;
        let diff = alg.left_difference(&g2, &g1);
        let (dw, dv) = couple.project(alg, &diff);
        let den = compiled.norm(&dw);
        if den < 1e-12 {
            skipped += 1;
            continue;
        }
        used += 1;
        value = value.max(compiled.norm(&dv) / den);
    }
    Ok(LipschitzEstimate { value, pairs_used: used, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn h1_couple() -> (GradedAlgebra, ComplementaryCouple) {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
        let couple = ComplementaryCouple::new(&alg, w, v).unwrap();
        (alg, couple)
    }

    #[test]
    fn subgroup_validation_cases() {
        let h1 = fixtures::heisenberg1();
        let vertical = HomogeneousSubgroup::new(&h1, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(vertical.validate(&h1).is_valid());
        assert_eq!(vertical.hom_dim(), 3);

        // span(e1, e2) is graded but not bracket-closed: [e1,e2] = e3.
        let plane = HomogeneousSubgroup::new(&h1, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let report = plane.validate(&h1);
        assert!(report.graded);
        assert_abs_diff_eq!(report.bracket_residual, 1.0, epsilon = 1e-12);
        assert!(!report.is_valid());

        // span(e1 + e3) mixes layers 1 and 2.
        let mixed = HomogeneousSubgroup::new(&h1, &[vec![1.0, 0.0, 1.0]]).unwrap();
        let report = mixed.validate(&h1);
        assert!(!report.graded);
        assert_eq!(report.non_graded_vector, Some(1));
    }

    #[test]
    fn couple_validation_and_layer_table() {
        let (_, couple) = h1_couple();
        assert_eq!(couple.layer_table(), &[(1, 1), (1, 0)]);

        let engel = fixtures::engel();
        let w = fixtures::vertical_subgroup("engel", &engel).unwrap();
        let v = fixtures::horizontal_subgroup("engel", &engel).unwrap();
        let couple = ComplementaryCouple::new(&engel, w, v).unwrap();
        assert_eq!(couple.layer_table(), &[(1, 1), (1, 0), (1, 0)]);

        // W = V must be rejected.
        let h1 = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        assert!(ComplementaryCouple::new(&h1, w.clone(), w).is_err());
    }

    #[test]
    fn heisenberg_projection_closed_form() {
        let (alg, couple) = h1_couple();
        let g = alg.point(vec![0.7, -1.3, 0.4]).unwrap();
        let (w, v) = couple.project(&alg, &g);
        // π_V(x,y,t) = (x,0,0); π_W(x,y,t) = (0, y, t + xy/2).
        assert_abs_diff_eq!(v.coords()[0], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(v.coords()[1], 0.0);
        assert_abs_diff_eq!(v.coords()[2], 0.0);
        assert_abs_diff_eq!(w.coords()[1], -1.3, epsilon = 1e-14);
        assert_abs_diff_eq!(w.coords()[2], 0.4 + 0.7 * (-1.3) / 2.0, epsilon = 1e-14);
        // Round trip.
        let back = alg.multiply(&w, &v);
        for (a, b) in back.coords().iter().zip(g.coords()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_fixes_the_factors() {
        let (alg, couple) = h1_couple();
        let w_in = alg.point(vec![0.0, 1.1, -0.6]).unwrap();
        let v_in = alg.point(vec![0.9, 0.0, 0.0]).unwrap();
        let (w, v) = couple.project(&alg, &w_in);
        assert!(alg.left_difference(&w, &w_in).norm_inf() < 1e-12);
        assert!(v.norm_inf() < 1e-12);
        let (w, v) = couple.project(&alg, &v_in);
        assert!(w.norm_inf() < 1e-12);
        assert!(alg.left_difference(&v, &v_in).norm_inf() < 1e-12);
        // Uniqueness: projecting w·v recovers the pair.
        let g = alg.multiply(&w_in, &v_in);
        let (w, v) = couple.project(&alg, &g);
        assert!(alg.left_difference(&w, &w_in).norm_inf() < 1e-10);
        assert!(alg.left_difference(&v, &v_in).norm_inf() < 1e-10);
    }

    #[test]
    fn engel_round_trips() {
        let engel = fixtures::engel();
        let w = fixtures::vertical_subgroup("engel", &engel).unwrap();
        let v = fixtures::horizontal_subgroup("engel", &engel).unwrap();
        let couple = ComplementaryCouple::new(&engel, w, v).unwrap();
        let mut r = crate::rng::stream(7, &["engel-roundtrip"]);
        for _ in 0..200 {
            let g = Point::raw((0..4).map(|_| r.random_range(-2.0..2.0)).collect());
            let (w, v) = couple.project(&engel, &g);
            let back = engel.multiply(&w, &v);
            assert!(engel.left_difference(&back, &g).norm_inf() < 1e-10);
        }
    }

    #[test]
    fn restricted_projection_and_inverse() {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
        let u = HomogeneousSubgroup::new(&alg, &[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let couple_wv = ComplementaryCouple::new(&alg, w.clone(), v.clone()).unwrap();
        let couple_uv = ComplementaryCouple::new(&alg, u.clone(), v).unwrap();

        // u = (a, a, s) ↦ (0, a, s + a²/2).
        let a = 0.8;
        let s = -0.3;
        let p = alg.point(vec![a, a, s]).unwrap();
        let image = couple_wv.restricted_project(&alg, &u, &p).unwrap();
        assert_abs_diff_eq!(image.coords()[0], 0.0);
        assert_abs_diff_eq!(image.coords()[1], a, epsilon = 1e-13);
        assert_abs_diff_eq!(image.coords()[2], s + a * a / 2.0, epsilon = 1e-13);

        // Identity when U = W.
        let eta = alg.point(vec![0.0, 0.4, 0.9]).unwrap();
        let same = couple_wv.restricted_project(&alg, &w, &eta).unwrap();
        assert!(alg.left_difference(&same, &eta).norm_inf() < 1e-12);

        // Round trip through the reverse restriction.
        let back = couple_uv.restricted_project(&alg, &w, &image).unwrap();
        assert!(alg.left_difference(&back, &p).norm_inf() < 1e-10);

        // Points off U are rejected.
        assert!(couple_wv.restricted_project(&alg, &u, &alg.point(vec![1.0, 0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn sigma_translation_inverts() {
        let (alg, couple) = h1_couple();
        let eta = alg.point(vec![0.0, 0.7, -0.2]).unwrap();
        // σ_0 = id.
        let id = couple.sigma_translate(&alg, &alg.zero(), &eta).unwrap();
        assert!(alg.left_difference(&id, &eta).norm_inf() < 1e-12);
        // σ_{x⁻¹} ∘ σ_x = id.
        let mut r = crate::rng::stream(21, &["sigma"]);
        for _ in 0..100 {
            let x = Point::raw((0..3).map(|_| r.random_range(-1.5..1.5)).collect());
            let fwd = couple.sigma_translate(&alg, &x, &eta).unwrap();
            let back = couple.sigma_translate(&alg, &alg.inverse(&x), &fwd).unwrap();
            assert!(alg.left_difference(&back, &eta).norm_inf() < 1e-10);
        }
        // For x = w ∈ W with trivial V part and W normal, σ_w(η) = w·η.
        let w_pt = alg.point(vec![0.0, 0.5, 1.2]).unwrap();
        let lhs = couple.sigma_translate(&alg, &w_pt, &eta).unwrap();
        let rhs = alg.multiply(&w_pt, &eta);
        assert!(alg.left_difference(&lhs, &rhs).norm_inf() < 1e-12);
    }
}
