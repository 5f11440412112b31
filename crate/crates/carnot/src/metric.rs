//! Homogeneous norms and left-invariant distances, cones, distance to a
//! homogeneous subgroup, and the splitting constant of a complementary
//! couple.
//!
//! Two norm families are built in: a weighted layer-max norm
//! `‖x‖ = max_s ε_s |x^{(s)}|^{1/s}` (per-layer Euclidean norms; all weights 1
//! by default) and the Cygan–Korányi gauge on step-2 groups with a
//! one-dimensional center. Both are exactly 1-homogeneous and symmetric by
//! construction; the triangle inequality is *validated by sampling*, never
//! assumed — see [`Distance::validate`].

use crate::algebra::{GradedAlgebra, Point};
use crate::optim;
use crate::rng;
use crate::splitting::HomogeneousSubgroup;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A homogeneous distance specification. The distance between points is
/// always `d(x, y) = ‖x⁻¹y‖`, so left invariance is structural.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distance {
    /// `max_s ε_s |x^{(s)}|^{1/s}` with unit weights. An empty `weights`
    /// list (the default) means all ones; otherwise one weight per layer.
    DInf {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        weights: Vec<f64>,
    },
    /// `(|z|⁴ + 16 t²)^{1/4}` on step-2 groups with 1-dimensional center.
    /// The constant 16 matches the convention in which the center
    /// coordinate of a product carries the correction `(x₁y₂ − x₂y₁)/2`.
    CyganKoranyi,
    /// Same formula as `DInf` but with caller-supplied weights; offered as a
    /// distinct kind so spec files can flag intent. Weights are mandatory.
    CustomHomnorm { weights: Vec<f64> },
}

impl Distance {
    pub fn d_inf() -> Self {
        Distance::DInf { weights: Vec::new() }
    }

    pub fn cygan_koranyi() -> Self {
        Distance::CyganKoranyi
    }

    pub fn weighted(weights: Vec<f64>) -> Self {
        Distance::CustomHomnorm { weights }
    }

    /// Parses CLI-style names: `d_inf`/`dinf`, `cygan_koranyi`/`ck`,
    /// `weighted:w1,w2,…`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "d_inf" | "dinf" | "d-inf" => Ok(Self::d_inf()),
            "cygan_koranyi" | "cygan-koranyi" | "ck" | "koranyi" => Ok(Self::cygan_koranyi()),
            other => {
                if let Some(list) = other.strip_prefix("weighted:") {
                    let weights = list
                        .split(',')
                        .map(|w| w.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::InvalidParameter(format!("bad weight list {list:?}: {e}")))?;
                    Ok(Self::weighted(weights))
                } else {
                    Err(Error::InvalidParameter(format!("unknown distance {other:?}")))
                }
            }
        }
    }

    fn layer_weights(&self, alg: &GradedAlgebra) -> Result<Vec<f64>> {
        let step = alg.step();
        let weights = match self {
            Distance::DInf { weights } if weights.is_empty() => vec![1.0; step],
            Distance::DInf { weights } | Distance::CustomHomnorm { weights } => weights.clone(),
            Distance::CyganKoranyi => return Ok(Vec::new()),
        };
        if weights.len() != step {
            return Err(Error::InvalidParameter(format!(
                "expected {step} layer weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("layer weights must be positive".into()));
        }
        Ok(weights)
    }

    fn check_cygan_shape(alg: &GradedAlgebra) -> Result<()> {
        if alg.step() != 2 || alg.layer_dims()[1] != 1 {
            return Err(Error::InvalidParameter(
                "cygan_koranyi needs a step-2 group with a 1-dimensional center".into(),
            ));
        }
        Ok(())
    }

    /// Cheap precomputation for hot loops; errors early on mismatched specs.
    pub fn compiled<'a>(&self, alg: &'a GradedAlgebra) -> Result<CompiledNorm<'a>> {
        match self {
            Distance::CyganKoranyi => {
                Self::check_cygan_shape(alg)?;
                Ok(CompiledNorm { alg, weights: None })
            }
            _ => Ok(CompiledNorm { alg, weights: Some(self.layer_weights(alg)?) }),
        }
    }

    /// Homogeneous norm `‖x‖ = d(x, 0)`.
    pub fn norm(&self, alg: &GradedAlgebra, x: &Point) -> Result<f64> {
        Ok(self.compiled(alg)?.norm_coords(x.coords()))
    }

    /// `d(x, y) = ‖x⁻¹y‖`.
    pub fn distance(&self, alg: &GradedAlgebra, x: &Point, y: &Point) -> Result<f64> {
        let g = alg.left_difference(x, y);
        self.norm(alg, &g)
    }

    /// Euclidean bound on the layer-`s` block of any point with
    /// `‖x‖ ≤ radius`; used to build sampling boxes around metric balls.
    pub fn coordinate_bound(&self, alg: &GradedAlgebra, layer: usize, radius: f64) -> Result<f64> {
        match self {
            Distance::CyganKoranyi => {
                Self::check_cygan_shape(alg)?;
                Ok(match layer {
                    1 => radius,
                    _ => radius * radius / 4.0,
                })
            }
            _ => {
                let w = self.layer_weights(alg)?;
                Ok((radius / w[layer - 1]).powi(layer as i32))
            }
        }
    }

    /// Distance from `x` to a homogeneous subgroup, by multistart
    /// Nelder–Mead over the subgroup's coordinates (no closed form exists in
    /// general). Default budget: 20 starts, 400 iterations each.
    pub fn dist_to_subgroup(&self, alg: &GradedAlgebra, x: &Point, sub: &HomogeneousSubgroup) -> Result<f64> {
        self.dist_to_subgroup_with(alg, x, sub, 20, 400)
    }

    pub fn dist_to_subgroup_with(
        &self,
        alg: &GradedAlgebra,
        x: &Point,
        sub: &HomogeneousSubgroup,
        starts: usize,
        iters: usize,
    ) -> Result<f64> {
        let compiled = self.compiled(alg)?;
        let norm_x = compiled.norm_coords(x.coords());
        if norm_x == 0.0 {
            return Ok(0.0);
        }
        let m = sub.top_dim();
        // Any minimizer h satisfies ‖h‖ ≤ d(x,h) + ‖x‖ ≤ 2‖x‖, giving
        // per-coordinate search bounds through the layer of each basis vector.
        let bounds: Vec<f64> = (0..m)
            .map(|i| self.coordinate_bound(alg, sub.basis_layer(i), 2.0 * norm_x).map(|b| b * 1.05))
            .collect::<Result<_>>()?;
        let mut objective = |u: &[f64]| -> f64 {
            let h = sub.embed(u);
            let g = alg.multiply(&alg.inverse(x), &Point::raw(h));
            compiled.norm_coords(g.coords())
        };
        let mut start_list: Vec<Vec<f64>> = Vec::with_capacity(starts);
        start_list.push(vec![0.0; m]);
        // Euclidean projection onto the subgroup's span: a good warm start.
        start_list.push(sub.coords_of(x.coords()));
        for i in 0..starts.saturating_sub(2) {
            let h = optim::halton(i, m);
            start_list.push(h.iter().zip(&bounds).map(|(c, b)| (2.0 * c - 1.0) * b).collect());
        }
        let tol = 1e-9 * (1.0 + norm_x);
        let (_, best) = optim::multistart_nelder_mead(&mut objective, &start_list, 0.4, iters, tol);
        Ok(best)
    }

    /// Cone membership: `x` lies in the cone with the given vertex, axis `H`
    /// and opening `α` iff `dist(vertex⁻¹x, H) ≤ α‖vertex⁻¹x‖`.
    pub fn in_cone(&self, alg: &GradedAlgebra, cone: &Cone, x: &Point) -> Result<bool> {
        let y = alg.left_difference(&cone.vertex, x);
        let norm_y = self.norm(alg, &y)?;
        if norm_y == 0.0 {
            return Ok(true);
        }
        let dist = self.dist_to_subgroup(alg, &y, &cone.axis)?;
        Ok(dist <= cone.opening * norm_y)
    }

    /// Estimates the splitting constant
    /// `c₀ = inf { ‖wv‖ : w ∈ W, v ∈ V, ‖w‖ + ‖v‖ = 1 }` by sampling plus a
    /// simplex refinement. The result is an upper bound on the true infimum;
    /// it is strictly positive for genuinely complementary subgroups.
    pub fn estimate_c0(
        &self,
        alg: &GradedAlgebra,
        w_sub: &HomogeneousSubgroup,
        v_sub: &HomogeneousSubgroup,
        n: usize,
        seed: u64,
    ) -> Result<C0Estimate> {
        if w_sub.top_dim() == 0 || v_sub.top_dim() == 0 {
            return Err(Error::InvalidSubgroup("degenerate factor in the couple".into()));
        }
        let compiled = self.compiled(alg)?;
        let m = w_sub.top_dim();
        let l = v_sub.top_dim();

        // Normalized pair from raw coordinates: dilate w to norm a and v to
        // norm 1−a, which parametrizes the constraint surface exactly.
        let make_pair = |wu: &[f64], vu: &[f64], a: f64| -> Option<(Point, Point)> {
            let w_raw = Point::raw(w_sub.embed(wu));
            let v_raw = Point::raw(v_sub.embed(vu));
            let nw = compiled.norm_coords(w_raw.coords());
            let nv = compiled.norm_coords(v_raw.coords());
            if nw < 1e-12 || nv < 1e-12 {
                return None;
            }
            let w = alg.dilate_unchecked(a / nw, &w_raw);
            let v = alg.dilate_unchecked((1.0 - a) / nv, &v_raw);
            Some((w, v))
        };
        let value_of = |w: &Point, v: &Point| -> f64 {
            let p = alg.multiply(w, v);
            compiled.norm_coords(p.coords())
        };

        let mut best_val = f64::INFINITY;
        let mut best_params: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        let mut r = rng::stream(seed, &["c0", "samples"]);
        for _ in 0..n.max(8) {
            let wu: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
            let vu: Vec<f64> = (0..l).map(|_| r.random_range(-1.0..1.0)).collect();
            let a: f64 = r.random_range(0.02..0.98);
            if let Some((w, v)) = make_pair(&wu, &vu, a) {
                let val = value_of(&w, &v);
                if val < best_val {
                    best_val = val;
                    best_params = Some((wu, vu, a));
                }
            }
        }
        let (wu0, vu0, a0) = best_params.ok_or(Error::NonConvergence {
            what: "splitting-constant sampling",
            residual: f64::INFINITY,
        })?;

        // Refine around the best sample; `a` is kept in (0,1) via tanh.
        let mut objective = |params: &[f64]| -> f64 {
            let (wu, rest) = params.split_at(m);
            let (vu, a_raw) = rest.split_at(l);
            let a = 0.5 + 0.5 * a_raw[0].tanh();
            match make_pair(wu, vu, a) {
                Some((w, v)) => value_of(&w, &v),
                None => f64::INFINITY,
            }
        };
        let mut start = wu0.clone();
        start.extend_from_slice(&vu0);
        start.push((2.0 * a0 - 1.0).atanh());
        let (best_x, refined) = optim::nelder_mead(&mut objective, &start, 0.3, 400, 1e-12);

        let (value, params) = if refined < best_val { (refined, best_x) } else { (best_val, start) };
        let (wu, rest) = params.split_at(m);
        let (vu, a_raw) = rest.split_at(l);
        let a = 0.5 + 0.5 * a_raw[0].tanh();
        let (w, v) = make_pair(wu, vu, a).expect("best parameters are nondegenerate");
        Ok(C0Estimate { value, w, v, samples: n })
    }

    /// Samples the metric axioms that are not structural: the triangle
    /// inequality, plus left-invariance / homogeneity / symmetry rounding
    /// residuals. `n = 0` yields an empty report.
    pub fn validate(&self, alg: &GradedAlgebra, n: usize, seed: u64) -> Result<DistanceValidationReport> {
        let compiled = self.compiled(alg)?;
        if n == 0 {
            return Ok(DistanceValidationReport::default());
        }
        let mut r = rng::stream(seed, &["distance-validate"]);
        let q = alg.dim();
        let sample_point = |r: &mut rand_chacha::ChaCha8Rng| -> Point {
            Point::raw((0..q).map(|_| r.random_range(-2.0..2.0)).collect())
        };
        let mut worst_triangle = f64::NEG_INFINITY;
        let mut worst_triple = None;
        let mut left_inv = 0.0f64;
        let mut homog = 0.0f64;
        let mut symm = 0.0f64;
        for _ in 0..n {
            let x = sample_point(&mut r);
            let y = sample_point(&mut r);
            let z = sample_point(&mut r);
            let d = |a: &Point, b: &Point| compiled.norm_coords(alg.left_difference(a, b).coords());
            let viol = d(&x, &z) - d(&x, &y) - d(&y, &z);
            if viol > worst_triangle {
                worst_triangle = viol;
                worst_triple = Some((x.clone(), y.clone(), z.clone()));
            }
            // Left invariance: d(zx, zy) vs d(x, y).
            let zx = alg.multiply(&z, &x);
            let zy = alg.multiply(&z, &y);
            left_inv = left_inv.max((d(&zx, &zy) - d(&x, &y)).abs());
            // Homogeneity: ‖δ_t x‖ = t ‖x‖, relative.
            let t = r.random_range(0.1..3.0);
            let nx = compiled.norm_coords(x.coords());
            let ndx = compiled.norm_coords(alg.dilate_unchecked(t, &x).coords());
            if nx > 0.0 {
                homog = homog.max((ndx - t * nx).abs() / (t * nx));
            }
            symm = symm.max((compiled.norm_coords(alg.inverse(&x).coords()) - nx).abs());
        }
        Ok(DistanceValidationReport {
            samples: n,
            worst_triangle_violation: Some(worst_triangle),
            worst_triple,
            max_left_invariance_residual: Some(left_inv),
            max_homogeneity_residual: Some(homog),
            max_symmetry_residual: Some(symm),
        })
    }
}

/// Precompiled norm evaluator for hot loops (no per-call validation).
pub struct CompiledNorm<'a> {
    alg: &'a GradedAlgebra,
    /// `None` means the Cygan–Korányi gauge.
    weights: Option<Vec<f64>>,
}

impl CompiledNorm<'_> {
    pub fn norm_coords(&self, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => {
                let mut best = 0.0f64;
                for s in 1..=self.alg.step() {
                    let range = self.alg.layer_range(s);
                    let block: f64 = x[range].iter().map(|v| v * v).sum::<f64>().sqrt();
                    best = best.max(w[s - 1] * block.powf(1.0 / s as f64));
                }
                best
            }
            None => {
                let q = x.len();
                let z2: f64 = x[..q - 1].iter().map(|v| v * v).sum();
                let t = x[q - 1];
                (z2 * z2 + 16.0 * t * t).powf(0.25)
            }
        }
    }

    pub fn norm(&self, x: &Point) -> f64 {
        self.norm_coords(x.coords())
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.norm_coords(self.alg.left_difference(x, y).coords())
    }
}

/// A metric cone with vertex, axis subgroup and opening in (0,1):
/// `{y : dist(vertex⁻¹y, axis) ≤ opening · ‖vertex⁻¹y‖}`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub vertex: Point,
    pub axis: HomogeneousSubgroup,
    pub opening: f64,
}

impl Cone {
    pub fn new(vertex: Point, axis: HomogeneousSubgroup, opening: f64) -> Result<Self> {
        if !(opening > 0.0 && opening < 1.0) {
            return Err(Error::InvalidParameter(format!("cone opening must be in (0,1), got {opening}")));
        }
        Ok(Cone { vertex, axis, opening })
    }
}

/// Result of [`Distance::estimate_c0`]: the smallest `‖wv‖` found over the
/// normalized constraint surface, with the minimizing pair.
#[derive(Clone, Debug, Serialize)]
pub struct C0Estimate {
    pub value: f64,
    pub w: Point,
    pub v: Point,
    pub samples: usize,
}

/// Sampled metric-axiom residuals; `None` fields mean an empty run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DistanceValidationReport {
    pub samples: usize,
    /// Max of d(x,z) − d(x,y) − d(y,z); a positive value is a violation.
    pub worst_triangle_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_triple: Option<(Point, Point, Point)>,
    pub max_left_invariance_residual: Option<f64>,
    pub max_homogeneity_residual: Option<f64>,
    pub max_symmetry_residual: Option<f64>,
}

impl DistanceValidationReport {
    /// True when no sampled axiom is violated beyond `tol`.
    pub fn is_metric(&self, tol: f64) -> bool {
        self.worst_triangle_violation.map_or(true, |v| v <= tol)
            && self.max_left_invariance_residual.map_or(true, |v| v <= tol)
            && self.max_homogeneity_residual.map_or(true, |v| v <= tol)
            && self.max_symmetry_residual.map_or(true, |v| v <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layer_max_norm_closed_forms() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::d_inf();
        assert_abs_diff_eq!(d.norm(&h1, &h1.point(vec![1.0, 0.0, 0.0]).unwrap()).unwrap(), 1.0);
        assert_abs_diff_eq!(d.norm(&h1, &h1.zero()).unwrap(), 0.0);
        // ‖(0,0,1)‖ = 1, and dilation by 3 scales the norm by 3.
        let e3 = h1.point(vec![0.0, 0.0, 1.0]).unwrap();
        let n = d.norm(&h1, &e3).unwrap();
        assert_abs_diff_eq!(n, 1.0);
        let scaled = h1.dilate(3.0, &e3).unwrap();
        assert_abs_diff_eq!(d.norm(&h1, &scaled).unwrap(), 3.0 * n, epsilon = 1e-15);
    }

    #[test]
    fn cygan_koranyi_gauge_values_and_shape_guard() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::cygan_koranyi();
        assert_abs_diff_eq!(d.norm(&h1, &h1.point(vec![1.0, 0.0, 0.0]).unwrap()).unwrap(), 1.0);
        // (16 t²)^{1/4} = 2 √|t| at t = 1.
        assert_abs_diff_eq!(d.norm(&h1, &h1.point(vec![0.0, 0.0, 1.0]).unwrap()).unwrap(), 2.0);
        let engel = fixtures::engel();
        assert!(d.norm(&engel, &engel.zero()).is_err());
    }

    #[test]
    fn distance_axioms_hold_by_sampling() {
        let h1 = fixtures::heisenberg1();
        for d in [Distance::d_inf(), Distance::cygan_koranyi()] {
            let report = d.validate(&h1, 4000, 11).unwrap();
            assert!(
                report.is_metric(1e-12),
                "{d:?} violated an axiom: {report:?}"
            );
        }
        let engel = fixtures::engel();
        let report = Distance::d_inf().validate(&engel, 4000, 11).unwrap();
        assert!(report.is_metric(1e-12), "{report:?}");
    }

    #[test]
    fn oversized_vertical_weight_breaks_the_triangle_inequality() {
        let h1 = fixtures::heisenberg1();
        let bad = Distance::weighted(vec![1.0, 100.0]);
        let report = bad.validate(&h1, 2000, 5).unwrap();
        assert!(report.worst_triangle_violation.unwrap() > 1e-6, "{report:?}");
    }

    #[test]
    fn empty_validation_report() {
        let h1 = fixtures::heisenberg1();
        let report = Distance::d_inf().validate(&h1, 0, 0).unwrap();
        assert!(report.worst_triangle_violation.is_none());
        assert!(report.is_metric(1e-12));
    }

    #[test]
    fn distance_is_left_invariant_and_homogeneous() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let x = h1.point(vec![0.3, -0.7, 0.2]).unwrap();
        let y = h1.point(vec![-1.1, 0.4, 0.9]).unwrap();
        let z = h1.point(vec![0.8, 0.8, -0.5]).unwrap();
        assert_abs_diff_eq!(d.distance(&h1, &x, &x).unwrap(), 0.0);
        let base = d.distance(&h1, &x, &y).unwrap();
        let shifted = d.distance(&h1, &h1.multiply(&z, &x), &h1.multiply(&z, &y)).unwrap();
        assert_abs_diff_eq!(base, shifted, epsilon = 1e-12);
        let t = 1.7;
        let scaled = d
            .distance(&h1, &h1.dilate(t, &x).unwrap(), &h1.dilate(t, &y).unwrap())
            .unwrap();
        assert_abs_diff_eq!(scaled, t * base, epsilon = 1e-12);
    }

    #[test]
    fn distance_to_vertical_plane_is_the_horizontal_gap() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        let x = h1.point(vec![1.0, 0.0, 0.0]).unwrap();
        // ‖(−1, y, t − y/2)‖ ≥ 1 with equality at y = t = 0.
        let dist = d.dist_to_subgroup(&h1, &x, &w).unwrap();
        assert_abs_diff_eq!(dist, 1.0, epsilon = 1e-5);
        // A point of the subgroup is at distance ~0.
        let inside = h1.point(vec![0.0, 0.7, -0.4]).unwrap();
        assert!(d.dist_to_subgroup(&h1, &inside, &w).unwrap() < 1e-6);
    }

    #[test]
    fn cone_membership() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        let cone = Cone::new(h1.zero(), w.clone(), 0.5).unwrap();
        // Points of the axis are always inside; the vertex too.
        assert!(d.in_cone(&h1, &cone, &h1.point(vec![0.0, 1.0, 0.3]).unwrap()).unwrap());
        assert!(d.in_cone(&h1, &cone, &h1.zero()).unwrap());
        // A purely horizontal point sits at dist = ‖x‖ from the vertical
        // plane, so it fails any opening below 1.
        assert!(!d.in_cone(&h1, &cone, &h1.point(vec![1.0, 0.0, 0.0]).unwrap()).unwrap());
        assert!(Cone::new(h1.zero(), w, 1.5).is_err());
    }

    #[test]
    fn splitting_constant_is_positive_and_sandwiched() {
        let h1 = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        let v = fixtures::horizontal_subgroup("heisenberg1", &h1).unwrap();
        let est = d.estimate_c0(&h1, &w, &v, 20_000, 17).unwrap();
        assert!(est.value > 0.05, "degenerate estimate {}", est.value);
        assert!(est.value <= 1.0 + 1e-9);
        // Stability across reseeds.
        let est2 = d.estimate_c0(&h1, &w, &v, 20_000, 999).unwrap();
        assert!(
            (est.value - est2.value).abs() <= 0.05 * est.value.max(est2.value),
            "unstable: {} vs {}",
            est.value,
            est2.value
        );
        // Sandwich on random pairs: c₀(‖w‖+‖v‖) ≤ ‖wv‖ ≤ ‖w‖+‖v‖.
        let mut r = crate::rng::stream(3, &["sandwich"]);
        for _ in 0..500 {
            let wu: Vec<f64> = (0..2).map(|_| r.random_range(-1.5..1.5)).collect();
            let vu: Vec<f64> = (0..1).map(|_| r.random_range(-1.5..1.5)).collect();
            let wp = Point::raw(w.embed(&wu));
            let vp = Point::raw(v.embed(&vu));
            let nw = d.norm(&h1, &wp).unwrap();
            let nv = d.norm(&h1, &vp).unwrap();
            let nwv = d.norm(&h1, &h1.multiply(&wp, &vp)).unwrap();
            assert!(nwv <= nw + nv + 1e-12);
            assert!(est.value * (nw + nv) <= nwv + 1e-9, "c0 sandwich failed: {} vs {}", est.value * (nw + nv), nwv);
        }
    }
}
