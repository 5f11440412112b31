//! Intrinsic graphs over a complementary splitting `G = W·V`: maps
//! `φ: W → V`, their graph maps `Φ(w) = w·φ(w)`, intrinsically linear maps
//! and their graph subgroups, numerical intrinsic differentials, projected
//! vector fields with intrinsic partial derivatives, and three independent
//! routes to the intrinsic Jacobian (orienting wedges, explicit minors, and
//! Monte Carlo surface measure).

use crate::algebra::{GradedAlgebra, Point, TangentVector};
use crate::exterior;
use crate::measure::MeasureEstimate;
use crate::metric::Distance;
use crate::optim;
use crate::rng;
use crate::splitting::{translate_map, ComplementaryCouple, HomogeneousSubgroup};
use crate::{Error, Result};
use itertools::Itertools;
use nalgebra::DMatrix;
use rand::Rng;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(&GradedAlgebra, &Point) -> Result<Point> + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A map `φ: A ⊆ W → V` given by an evaluator over ambient points of W,
/// together with an optional axis-aligned sampling box in the intrinsic
/// W-coordinates. Evaluators must be pure; estimators rely on re-evaluation.
#[derive(Clone)]
pub struct IntrinsicMap {
    couple: ComplementaryCouple,
    name: String,
    sample_box: Option<(Vec<f64>, Vec<f64>)>,
    body: Evaluator,
    analytic_grad: Option<GradFn>,
}

impl IntrinsicMap {
    /// Wraps a closure as an intrinsic map. The closure receives ambient
    /// points of W and must return points of V.
    pub fn from_closure(
        couple: ComplementaryCouple,
        name: String,
        sample_box: Option<(Vec<f64>, Vec<f64>)>,
        f: impl Fn(&GradedAlgebra, &Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        IntrinsicMap { couple, name, sample_box, body: Arc::new(f), analytic_grad: None }
    }

    fn with_grad(mut self, g: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.analytic_grad = Some(Arc::new(g));
        self
    }

    pub fn couple(&self) -> &ComplementaryCouple {
        &self.couple
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Domain box in intrinsic W-coordinates, when the map declares one.
    pub fn sample_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.sample_box.clone()
    }

    /// Closed-form intrinsic horizontal gradient `∇^φφ̃` at intrinsic
    /// W-coordinates `w̃`, for maps that carry one (built-in fixtures).
    pub fn analytic_grad(&self, w_tilde: &[f64]) -> Option<DMatrix<f64>> {
        self.analytic_grad.as_ref().map(|g| g(w_tilde))
    }

    /// Evaluates `φ(w)`. The point must lie in W (and inside the sampling
    /// box when the map declares one).
    pub fn eval(&self, alg: &GradedAlgebra, w: &Point) -> Result<Point> {
        let scale = w.norm_euclid().max(1.0);
        if self.couple.w().off_span_residual(w.coords()) > 1e-8 * scale {
            return Err(Error::OutOfDomain);
        }
        if let Some((lo, hi)) = &self.sample_box {
            let wt = self.couple.w().coords_of(w.coords());
            for (i, c) in wt.iter().enumerate() {
                if *c < lo[i] - 1e-9 || *c > hi[i] + 1e-9 {
                    return Err(Error::OutOfDomain);
                }
            }
        }
        (self.body)(alg, w)
    }

    /// Graph map `Φ(w) = w · φ(w)`.
    pub fn graph_point(&self, alg: &GradedAlgebra, w: &Point) -> Result<Point> {
        let value = self.eval(alg, w)?;
        Ok(alg.multiply(w, &value))
    }
}

/// Looks up a built-in map fixture: `zero`, `linear:a` (also `linear(a)`),
/// or `parabola` (first V-coordinate set to minus the square of the first
/// horizontal W-coordinate). All fixtures carry the sampling box `[-4,4]^m`.
pub fn map_by_name(alg: &GradedAlgebra, couple: &ComplementaryCouple, spec: &str) -> Result<IntrinsicMap> {
    let spec = spec.trim();
    let m = couple.w().top_dim();
    let sample_box = Some((vec![-4.0; m], vec![4.0; m]));
    let v = couple.v().clone();
    let w = couple.w().clone();
    let p = v.top_dim();
    let m1 = w.layer_counts()[0];
    let v_horizontal = v.layer_counts()[0] == p;
    let dim = alg.dim();
    if spec == "zero" {
        let map = IntrinsicMap::from_closure(couple.clone(), "zero".into(), sample_box, move |_, _| {
            Ok(Point::zero(dim))
        });
        return Ok(if v_horizontal {
            map.with_grad(move |_| DMatrix::zeros(p, m1))
        } else {
            map
        });
    }
    if spec == "parabola" {
        if m1 == 0 || p == 0 {
            return Err(Error::InvalidParameter("parabola needs a horizontal W direction and a nonempty V".into()));
        }
        let (wc, vc) = (w.clone(), v.clone());
        let map = IntrinsicMap::from_closure(couple.clone(), "parabola".into(), sample_box, move |a, eta| {
            let y = wc.coords_of(eta.coords())[0];
            let mut coords = vec![0.0; a.dim()];
            for (ci, bi) in coords.iter_mut().zip(&vc.basis()[0]) {
                *ci = -y * y * bi;
            }
            a.point(coords)
        });
        return Ok(if v_horizontal {
            map.with_grad(move |wt| {
                let mut g = DMatrix::zeros(p, m1);
                g[(0, 0)] = -2.0 * wt[0];
                g
            })
        } else {
            map
        });
    }
    if let Some(rest) = spec.strip_prefix("linear") {
        let arg = rest
            .trim_start_matches([':', '('])
            .trim_end_matches(')')
            .trim();
        let a: f64 = arg
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse linear coefficient {arg:?}")))?;
        if m1 == 0 || p == 0 {
            return Err(Error::InvalidParameter("linear needs a horizontal W direction and a nonempty V".into()));
        }
        let (wc, vc) = (w.clone(), v.clone());
        let name = format!("linear:{a}");
        let map = IntrinsicMap::from_closure(couple.clone(), name, sample_box, move |alg2, eta| {
            let y = wc.coords_of(eta.coords())[0];
            let mut coords = vec![0.0; alg2.dim()];
            for (ci, bi) in coords.iter_mut().zip(&vc.basis()[0]) {
                *ci = a * y * bi;
            }
            alg2.point(coords)
        });
        return Ok(if v_horizontal {
            map.with_grad(move |_| {
                let mut g = DMatrix::zeros(p, m1);
                g[(0, 0)] = a;
                g
            })
        } else {
            map
        });
    }
    Err(Error::UnknownFixture(spec.to_string()))
}

/// An intrinsically linear map `L: W → V`, represented by its graph
/// subgroup `U = {w·L(w)}` (always) and, when V is horizontal, by the
/// matrix of `L` on the horizontal W-coordinates.
#[derive(Clone)]
pub struct IntrinsicLinearMap {
    couple: ComplementaryCouple,
    graph: HomogeneousSubgroup,
    uv_couple: ComplementaryCouple,
    matrix: Option<DMatrix<f64>>,
}

impl IntrinsicLinearMap {
    /// The zero map; its graph subgroup is W itself.
    pub fn zero(alg: &GradedAlgebra, couple: &ComplementaryCouple) -> Result<Self> {
        Self::from_subgroup(alg, couple, couple.w().clone())
    }

    /// Builds the map with matrix `m` on the horizontal W-coordinates
    /// (requires a horizontal V). `m` may also be given over all W
    /// coordinates, in which case the higher-layer columns must vanish:
    /// a dependence on a layer-s coordinate would scale like `t^s` under
    /// `δ_t` against the layer-1 value, breaking `L(δ_t w) = δ_t L(w)`.
    pub fn from_matrix(alg: &GradedAlgebra, couple: &ComplementaryCouple, m: &DMatrix<f64>) -> Result<Self> {
        let w = couple.w();
        let v = couple.v();
        let p = v.top_dim();
        if v.layer_counts()[0] != p {
            return Err(Error::InvalidParameter("matrix representation requires a horizontal V".into()));
        }
        let m1 = w.layer_counts()[0];
        if m.nrows() != p || (m.ncols() != m1 && m.ncols() != w.top_dim()) {
            return Err(Error::DimensionMismatch { expected: m1, got: m.ncols() });
        }
        if m.ncols() > m1 {
            for j in m1..m.ncols() {
                for i in 0..p {
                    if m[(i, j)].abs() > 1e-12 {
                        return Err(Error::InvalidParameter(
                            "linear map may not depend on higher-layer coordinates".into(),
                        ));
                    }
                }
            }
        }
        let mut vectors = Vec::with_capacity(w.top_dim());
        for (j, b) in w.basis().iter().enumerate() {
            if w.basis_layer(j) == 1 {
                let mut value = vec![0.0; alg.dim()];
                for i in 0..p {
                    for (vc, bc) in value.iter_mut().zip(&v.basis()[i]) {
                        *vc += m[(i, j)] * bc;
                    }
                }
                let gp = alg.multiply(&alg.point(b.clone())?, &alg.point(value)?);
                vectors.push(gp.into_coords());
            } else {
                vectors.push(b.clone());
            }
        }
        let graph = HomogeneousSubgroup::new(alg, &vectors)?;
        Self::assemble(alg, couple, graph)
    }

    /// Builds the map whose graph is the given homogeneous subgroup, which
    /// must be complementary to V and of the same top dimension as W.
    pub fn from_subgroup(alg: &GradedAlgebra, couple: &ComplementaryCouple, graph: HomogeneousSubgroup) -> Result<Self> {
        if graph.top_dim() != couple.w().top_dim() {
            return Err(Error::InvalidSubgroup(format!(
                "graph subgroup has dimension {}, expected {}",
                graph.top_dim(),
                couple.w().top_dim()
            )));
        }
        Self::assemble(alg, couple, graph)
    }

    fn assemble(alg: &GradedAlgebra, couple: &ComplementaryCouple, graph: HomogeneousSubgroup) -> Result<Self> {
        let uv_couple = ComplementaryCouple::new(alg, graph.clone(), couple.v().clone())?;
        let mut out = IntrinsicLinearMap { couple: couple.clone(), graph, uv_couple, matrix: None };
        out.check_homogeneity(alg)?;
        let v = out.couple.v();
        let w = out.couple.w();
        let p = v.top_dim();
        if v.layer_counts()[0] == p {
            let m1 = w.layer_counts()[0];
            let mut m = DMatrix::zeros(p, m1);
            for j in 0..m1 {
                let b = alg.point(w.basis()[j].clone())?;
                let val = out.eval(alg, &b)?;
                let col = v.coords_of(val.coords());
                for i in 0..p {
                    m[(i, j)] = col[i];
                }
            }
            out.matrix = Some(m);
        }
        Ok(out)
    }

    /// `L(δ_t w) = δ_t L(w)` must hold; violations mean the subgroup does
    /// not define a map of the couple.
    fn check_homogeneity(&self, alg: &GradedAlgebra) -> Result<()> {
        let m = self.couple.w().top_dim();
        for i in 0..8 {
            let u: Vec<f64> = optim::halton(i, m).iter().map(|x| 2.0 * x - 1.0).collect();
            let w = self.couple.w().embed_point(&u);
            for t in [0.5, 2.0] {
                let lhs = self.eval(alg, &alg.dilate_unchecked(t, &w))?;
                let rhs = alg.dilate_unchecked(t, &self.eval(alg, &w)?);
                let gap: f64 = lhs
                    .coords()
                    .iter()
                    .zip(rhs.coords())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if gap > 1e-8 * (1.0 + rhs.norm_euclid()) {
                    return Err(Error::InvalidSubgroup(format!(
                        "graph subgroup is not dilation-compatible (residual {gap:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn couple(&self) -> &ComplementaryCouple {
        &self.couple
    }

    /// The graph subgroup `U = {w·L(w) : w ∈ W}`.
    pub fn graph_subgroup(&self) -> &HomogeneousSubgroup {
        &self.graph
    }

    /// Matrix on horizontal W-coordinates (present iff V is horizontal).
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        self.matrix.as_ref()
    }

    /// `L(w) = (π_V(w))⁻¹` for the (U,V) factorization `w = u·v`.
    pub fn eval(&self, alg: &GradedAlgebra, w: &Point) -> Result<Point> {
        let scale = w.norm_euclid().max(1.0);
        if self.couple.w().off_span_residual(w.coords()) > 1e-8 * scale {
            return Err(Error::OutOfDomain);
        }
        let (_, v_part) = self.uv_couple.project(alg, w);
        Ok(alg.inverse(&v_part))
    }

    pub fn graph_point(&self, alg: &GradedAlgebra, w: &Point) -> Result<Point> {
        let value = self.eval(alg, w)?;
        Ok(alg.multiply(w, &value))
    }

    /// Re-wraps the linear map as a general [`IntrinsicMap`] (sampling box
    /// `[-4,4]^m`), carrying its constant gradient when one exists.
    pub fn to_map(&self) -> IntrinsicMap {
        let m = self.couple.w().top_dim();
        let this = self.clone();
        let name = match &self.matrix {
            Some(mat) if mat.len() == 1 => format!("linear:{}", mat[(0, 0)]),
            _ => "linear-map".to_string(),
        };
        let map = IntrinsicMap::from_closure(
            self.couple.clone(),
            name,
            Some((vec![-4.0; m], vec![4.0; m])),
            move |alg, eta| this.eval(alg, eta),
        );
        match self.matrix.clone() {
            Some(mat) => map.with_grad(move |_| mat.clone()),
            None => map,
        }
    }
}

/// Result of the blow-up estimation of an intrinsic differential.
pub struct DifferentialEstimate {
    pub map: IntrinsicLinearMap,
    /// Sup over unit-sphere directions, at the smallest schedule scale, of
    /// `‖L(w)⁻¹ φ_{x⁻¹}(w)‖ / ‖w‖`.
    pub residual: f64,
}

/// Default blow-up schedule `0.1 · 2^{-k}`, `k = 0..=10`.
pub fn default_t_schedule() -> Vec<f64> {
    (0..=10).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

/// Estimates the intrinsic differential of `φ` at `w̄` by translating the
/// graph to the origin and extrapolating `δ_{1/t} φ_{x⁻¹}(δ_t b_j)` to
/// `t → 0` (Richardson, factor 2) along every W basis direction. The limits
/// assemble the graph subgroup of the candidate linear map.
pub fn estimate_intrinsic_differential(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    w_bar: &Point,
    t_schedule: &[f64],
) -> Result<DifferentialEstimate> {
    if t_schedule.len() < 3 {
        return Err(Error::InvalidParameter("blow-up schedule needs at least 3 scales".into()));
    }
    let couple = phi.couple();
    let x = phi.graph_point(alg, w_bar)?;
    let translated = translate_map(alg, phi, &alg.inverse(&x));
    let m = couple.w().top_dim();
    let mut graph_vectors = Vec::with_capacity(m);
    for j in 0..m {
        let b = alg.point(couple.w().basis()[j].clone())?;
        // Richardson table per coordinate; diagonal converges to the limit.
        let mut diag: Vec<Vec<f64>> = Vec::new();
        let mut prev_rows: Vec<Vec<Vec<f64>>> = Vec::new();
        for (k, &t) in t_schedule.iter().enumerate() {
            let value = translated.eval(alg, &alg.dilate(t, &b)?)?;
            let scaled = alg.dilate(1.0 / t, &value)?;
            let mut row = vec![scaled.into_coords()];
            for col in 1..=k {
                let f = 2f64.powi(col as i32);
                let higher: Vec<f64> = row[col - 1]
                    .iter()
                    .zip(&prev_rows[k - 1][col - 1])
                    .map(|(a, b)| (f * a - b) / (f - 1.0))
                    .collect();
                row.push(higher);
            }
            diag.push(row.last().unwrap().clone());
            prev_rows.push(row);
        }
        let last = &diag[diag.len() - 1];
        let tail: f64 = last
            .iter()
            .zip(&diag[diag.len() - 2])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = last.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if tail > 1e-3 * scale {
            return Err(Error::NonConvergence { what: "intrinsic differential", residual: tail });
        }
        let limit = alg.point(last.clone())?;
        graph_vectors.push(alg.multiply(&b, &limit).into_coords());
    }
    let graph = HomogeneousSubgroup::new(alg, &graph_vectors)?;
    let lin = IntrinsicLinearMap::from_subgroup(alg, couple, graph)?;

    // First-order residual at the smallest scale, over sphere directions.
    let norm = Distance::d_inf().compiled(alg)?;
    let t_min = t_schedule.iter().copied().fold(f64::INFINITY, f64::min);
    let mut residual = 0.0f64;
    for i in 0..32 {
        let u: Vec<f64> = optim::halton(i, m).iter().map(|x| 2.0 * x - 1.0).collect();
        let w = couple.w().embed_point(&u);
        let n = norm.norm(&w);
        if n < 1e-9 {
            continue;
        }
        let wt = alg.dilate(t_min / n, &w)?;
        let fv = translated.eval(alg, &wt)?;
        let lv = lin.eval(alg, &wt)?;
        let gap = norm.norm(&alg.left_difference(&lv, &fv));
        residual = residual.max(gap / norm.norm(&wt));
    }
    Ok(DifferentialEstimate { map: lin, residual })
}

/// Sampled sup of `d(L(w), T(w))` over the unit sphere of W, on a
/// deterministic low-discrepancy grid normalized through dilations.
pub fn il_distance(
    alg: &GradedAlgebra,
    a: &IntrinsicLinearMap,
    b: &IntrinsicLinearMap,
    d: &Distance,
    n: usize,
) -> Result<f64> {
    if a.couple().w().basis() != b.couple().w().basis() || a.couple().v().basis() != b.couple().v().basis() {
        return Err(Error::InvalidCouple("maps live over different couples".into()));
    }
    let compiled = d.compiled(alg)?;
    let m = a.couple().w().top_dim();
    let mut sup = 0.0f64;
    for i in 0..n {
        let u: Vec<f64> = optim::halton(i, m).iter().map(|x| 2.0 * x - 1.0).collect();
        let w = a.couple().w().embed_point(&u);
        let nrm = compiled.norm(&w);
        if nrm < 1e-9 {
            continue;
        }
        let w_unit = alg.dilate(1.0 / nrm, &w)?;
        let va = a.eval(alg, &w_unit)?;
        let vb = b.eval(alg, &w_unit)?;
        sup = sup.max(compiled.distance(&va, &vb));
    }
    Ok(sup)
}

fn require_orthogonal_horizontal_v(couple: &ComplementaryCouple) -> Result<()> {
    let v = couple.v();
    if v.layer_counts()[0] != v.top_dim() {
        return Err(Error::InvalidParameter("projected fields require a horizontal V".into()));
    }
    for vb in v.basis() {
        for wb in couple.w().basis() {
            let dot: f64 = vb.iter().zip(wb).map(|(a, b)| a * b).sum();
            if dot.abs() > 1e-10 {
                return Err(Error::InvalidParameter("projected fields require V orthogonal to W".into()));
            }
        }
    }
    Ok(())
}

/// Projected vector field `D^φ_{X_j}(w) = dπ_W|_{Φ(w)}(X_j(Φ(w)))`: the
/// ambient left-invariant field of the `j`-th basis vector (1-based),
/// pushed through the coordinate projection onto W at the graph point.
/// Requires a horizontal V orthogonal to W.
pub fn projected_vector_field(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    j: usize,
    w: &Point,
) -> Result<TangentVector> {
    let couple = phi.couple();
    require_orthogonal_horizontal_v(couple)?;
    if j == 0 || j > alg.dim() {
        return Err(Error::IndexOutOfRange { index: j, dim: alg.dim() });
    }
    let g = phi.graph_point(alg, w)?;
    let dir = alg.basis_point(j)?;
    let curve = |s: f64| -> Vec<f64> {
        let step = Point::raw(dir.coords().iter().map(|d| s * d).collect());
        couple.project_w(alg, &alg.multiply(&g, &step)).into_coords()
    };
    let h = 1e-5;
    let quot = |h: f64| -> Vec<f64> {
        let plus = curve(h);
        let minus = curve(-h);
        plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let coarse = quot(h);
    let fine = quot(h / 2.0);
    let components: Vec<f64> =
        fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    Ok(TangentVector { base: w.clone(), components })
}

/// Intrinsic partial derivative along `D^φ_{X_j}` plus its convergence
/// diagnostics.
pub struct IntrinsicPartial {
    /// Derivative of `φ̃` along the projected-field flow, in V-coordinates.
    pub value: Vec<f64>,
    /// Gap between the last two Richardson diagonal entries.
    pub richardson_tail: f64,
    /// Disagreement with the quotient computed through a detour start point
    /// on the same integral curve (one curve cannot certify all of them;
    /// this reports the spread between two).
    pub perturbed_gap: f64,
}

/// Derivative of `φ̃` at `w̃` along the integral curve of the projected
/// field `D^φ_{X_j}`: RK4 flow plus symmetric difference quotients
/// `(φ̃(γ(s)) − φ̃(γ(−s)))/(2s)` extrapolated over a shrinking s-schedule
/// (Richardson, factor 4).
pub fn intrinsic_partial_derivative(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    j: usize,
    w_tilde: &[f64],
    ode_steps: usize,
) -> Result<IntrinsicPartial> {
    let couple = phi.couple();
    require_orthogonal_horizontal_v(couple)?;
    let w_sub = couple.w().clone();
    let v_sub = couple.v().clone();
    let m = w_sub.top_dim();
    if w_tilde.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: w_tilde.len() });
    }
    let field = |g: &[f64]| -> Result<Vec<f64>> {
        let w = w_sub.embed_point(g);
        let tv = projected_vector_field(alg, phi, j, &w)?;
        Ok(w_sub.coords_of(&tv.components))
    };
    // RK4 from `from` over signed time `s` in `n` fixed steps.
    let flow = |from: &[f64], s: f64, n: usize| -> Result<Vec<f64>> {
        let h = s / n as f64;
        let mut g = from.to_vec();
        for _ in 0..n {
            let k1 = field(&g)?;
            let k2 = field(&axpy(&g, &k1, h / 2.0))?;
            let k3 = field(&axpy(&g, &k2, h / 2.0))?;
            let k4 = field(&axpy(&g, &k3, h))?;
            for i in 0..g.len() {
                g[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Ok(g)
    };
    let s_max = 0.4;
    // Pick a step count for which halving moves the endpoint below 1e-8.
    let mut steps = ode_steps.max(8);
    loop {
        let once = flow(w_tilde, s_max, steps)?;
        let twice = flow(w_tilde, s_max, 2 * steps)?;
        let gap = once.iter().zip(&twice).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap < 1e-8 {
            break;
        }
        steps *= 2;
        if steps > 8 * ode_steps.max(8) {
            return Err(Error::NonConvergence { what: "projected-field flow", residual: gap });
        }
    }
    let phi_tilde = |g: &[f64]| -> Result<Vec<f64>> {
        let value = phi.eval(alg, &w_sub.embed_point(g))?;
        Ok(v_sub.coords_of(value.coords()))
    };
    let quotient = |start: &[f64], offset: f64, s: f64| -> Result<Vec<f64>> {
        let plus = phi_tilde(&flow(start, offset + s, steps)?)?;
        let minus = phi_tilde(&flow(start, offset - s, steps)?)?;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * s)).collect())
    };
    let schedule: Vec<f64> = (0..=6).map(|k| s_max * 0.5f64.powi(k)).collect();
    let mut prev_rows: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut diag: Vec<Vec<f64>> = Vec::new();
    for (k, &s) in schedule.iter().enumerate() {
        let mut row = vec![quotient(w_tilde, 0.0, s)?];
        for col in 1..=k {
            let f = 4f64.powi(col as i32);
            let higher: Vec<f64> = row[col - 1]
                .iter()
                .zip(&prev_rows[k - 1][col - 1])
                .map(|(a, b)| (f * a - b) / (f - 1.0))
                .collect();
            row.push(higher);
        }
        diag.push(row.last().unwrap().clone());
        prev_rows.push(row);
    }
    let value = diag.last().unwrap().clone();
    let richardson_tail = value
        .iter()
        .zip(&diag[diag.len() - 2])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if richardson_tail > 1e-3 * value.iter().map(|v| v.abs()).fold(1.0, f64::max) {
        return Err(Error::NonConvergence { what: "intrinsic partial derivative", residual: richardson_tail });
    }
    // Same curve, reached through a detour start: flow back, then measure
    // the coarsest quotient around the original point from there.
    let detour = flow(w_tilde, -0.1, steps)?;
    let direct = quotient(w_tilde, 0.0, schedule[2])?;
    let via = quotient(&detour, 0.1, schedule[2])?;
    let perturbed_gap = direct.iter().zip(&via).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(IntrinsicPartial { value, richardson_tail, perturbed_gap })
}

fn axpy(x: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Intrinsic Jacobian via orienting units: `JΦ = |V∧W| / |V∧U|` for the
/// graph subgroup U of the linear map.
pub fn jacobian_wedge(couple: &ComplementaryCouple, lin: &IntrinsicLinearMap) -> Result<f64> {
    exterior::wedge_ratio(couple.v(), lin.graph_subgroup(), couple.w())
}

/// Intrinsic Jacobian as a measure ratio: Monte Carlo estimate of the
/// Euclidean surface measure of `Φ(B)` over `vol(B)`, integrating the
/// Euclidean area factor of the coordinate graph map across the box.
pub fn jacobian_measure_mc(
    alg: &GradedAlgebra,
    couple: &ComplementaryCouple,
    lin: &IntrinsicLinearMap,
    lo: &[f64],
    hi: &[f64],
    n: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    let m = couple.w().top_dim();
    if lo.len() != m || hi.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: lo.len() });
    }
    if n == 0 || lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Err(Error::InvalidParameter("need a nondegenerate box and n > 0".into()));
    }
    let graph_coords = |u: &[f64]| -> Result<Vec<f64>> {
        Ok(lin.graph_point(alg, &couple.w().embed_point(u))?.into_coords())
    };
    let mut r = rng::stream(seed, &["jacobian-mc"]);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..n {
        let u: Vec<f64> = (0..m).map(|i| r.random_range(lo[i]..hi[i])).collect();
        let mut df = DMatrix::zeros(alg.dim(), m);
        for i in 0..m {
            let h = 1e-5 * (1.0 + u[i].abs());
            let mut up = u.clone();
            up[i] += h;
            let mut dn = u.clone();
            dn[i] -= h;
            let (fp, fm) = (graph_coords(&up)?, graph_coords(&dn)?);
            for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                df[(row, i)] = (a - b) / (2.0 * h);
            }
        }
        let jac = (df.transpose() * &df).determinant().max(0.0).sqrt();
        sum += jac;
        sum_sq += jac * jac;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok(MeasureEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
        method: "monte_carlo".into(),
    })
}

/// Intrinsic Jacobian from the horizontal gradient matrix:
/// `√(1 + Σ_ℓ Σ (ℓ×ℓ minors)²)`, equal to the Euclidean area factor of the
/// block map `w̃ ↦ (Mw̃, w̃)` by Cauchy–Binet. Minors are enumerated
/// explicitly up to order 6; beyond that the Gram route `det(I + MᵀM)` is
/// used (the two agree and are tested against each other).
pub fn jacobian_minors(grad: &DMatrix<f64>) -> f64 {
    if grad.nrows().min(grad.ncols()) <= 6 {
        minors_sum_explicit(grad).sqrt()
    } else {
        gram_route(grad).sqrt()
    }
}

fn minors_sum_explicit(m: &DMatrix<f64>) -> f64 {
    let (p, k) = (m.nrows(), m.ncols());
    let mut total = 1.0;
    for l in 1..=p.min(k) {
        for rows in (0..p).combinations(l) {
            for cols in (0..k).combinations(l) {
                let sub = DMatrix::from_fn(l, l, |i, j| m[(rows[i], cols[j])]);
                let d = sub.determinant();
                total += d * d;
            }
        }
    }
    total
}

fn gram_route(m: &DMatrix<f64>) -> f64 {
    let k = m.ncols();
    (DMatrix::identity(k, k) + m.transpose() * m).determinant()
}
