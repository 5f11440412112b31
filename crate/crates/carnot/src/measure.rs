//! Measures on intrinsic graphs: slice volumes of subgroups against metric
//! balls, spherical factors, the graph measure `μ(B) = ∫ JΦ dH^m`,
//! Federer-density blow-ups, Pansu differentials with the horizontal and
//! vertical Jacobians, implicit level-set solving, and the end-to-end area
//! check tying them together.
//!
//! Spherical measure itself is never constructed (the Carathéodory infimum
//! over covers is intractable); every statement about it is routed through
//! the density identity `μ(B) = ∫_B s^M dS^M`, i.e. through the ratio of
//! `μ` to the spherical factor of the tangent.

use crate::algebra::{GradedAlgebra, Point};
use crate::exterior::{orienting_unit, Multivector};
use crate::graph::{self, IntrinsicMap};
use crate::metric::Distance;
use crate::optim;
use crate::rng;
use crate::splitting::{ComplementaryCouple, HomogeneousSubgroup};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// A numerical volume/integral estimate with its uncertainty.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Monte Carlo standard error, or a resolution-based error bound for
    /// the grid method.
    pub std_error: f64,
    pub n_samples: usize,
    pub method: String,
}

/// Volume estimation strategy for [`slice_volume`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeMethod {
    MonteCarlo,
    Grid,
}

impl std::str::FromStr for VolumeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "monte_carlo" | "monte-carlo" => Ok(VolumeMethod::MonteCarlo),
            "grid" => Ok(VolumeMethod::Grid),
            other => Err(Error::InvalidParameter(format!("unknown volume method {other:?}"))),
        }
    }
}

/// Axis-aligned coordinate box, used both for regions of the ambient group
/// and for domains in intrinsic coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct CoordBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CoordBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("box must have lo < hi in every coordinate".into()));
        }
        Ok(CoordBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Splits into two halves across the widest axis.
    pub fn halves(&self) -> (CoordBox, CoordBox) {
        let axis = self
            .lo
            .iter()
            .zip(&self.hi)
            .enumerate()
            .max_by(|a, b| (a.1 .1 - a.1 .0).total_cmp(&(b.1 .1 - b.1 .0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut hi1 = self.hi.clone();
        hi1[axis] = mid;
        let mut lo2 = self.lo.clone();
        lo2[axis] = mid;
        (CoordBox { lo: self.lo.clone(), hi: hi1 }, CoordBox { lo: lo2, hi: self.hi.clone() })
    }
}

/// Bounding half-widths, per intrinsic coordinate of `s`, for the slice
/// region `{u : ‖z⁻¹ψ(u)‖ ≤ 1}`: any member has `‖ψ(u)‖ ≤ ‖z‖ + 1`, so the
/// layer-s coordinates are bounded by the norm's coordinate bound at that
/// radius. Grown (capped) if probing suggests the region leaks out, which
/// a genuine homogeneous distance never does.
fn slice_half_widths(
    alg: &GradedAlgebra,
    s: &HomogeneousSubgroup,
    z: &Point,
    d: &Distance,
) -> Result<Vec<f64>> {
    let compiled = d.compiled(alg)?;
    let radius = compiled.norm(z) + 1.0;
    let mut half: Vec<f64> = (0..s.top_dim())
        .map(|i| d.coordinate_bound(alg, s.basis_layer(i), radius).map(|b| b * 1.0000001))
        .collect::<Result<_>>()?;
    let inside = |u: &[f64]| -> bool {
        let p = s.embed_point(u);
        compiled.distance(z, &p) <= 1.0
    };
    for _ in 0..6 {
        // Probe face centers; a hit means the box clips the region.
        let mut leak = false;
        for i in 0..half.len() {
            for sign in [-1.0, 1.0] {
                let mut u = vec![0.0; half.len()];
                u[i] = sign * half[i];
                if inside(&u) {
                    leak = true;
                }
            }
        }
        if !leak {
            return Ok(half);
        }
        for h in &mut half {
            *h *= 1.5;
        }
    }
    Err(Error::InvalidParameter("slice region exceeds every probed bounding box".into()))
}

/// `H^n(S ∩ B_d(z,1))` for a homogeneous subgroup `S`: the Lebesgue volume,
/// in orthonormal S-coordinates, of `{u : ‖z⁻¹ψ(u)‖_d ≤ 1}`.
///
/// The grid method classifies cells by their corners and center and counts
/// half of the unresolved boundary layer, reporting the other half as the
/// error bound; the bound is exact for convex slice regions (all step-2
/// fixtures) and a resolution heuristic otherwise.
pub fn slice_volume(
    alg: &GradedAlgebra,
    s: &HomogeneousSubgroup,
    z: &Point,
    d: &Distance,
    method: VolumeMethod,
    n: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    if s.top_dim() == 0 {
        return Err(Error::InvalidParameter("slice of a zero-dimensional subgroup".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need a positive sample/evaluation budget".into()));
    }
    let compiled = d.compiled(alg)?;
    let half = slice_half_widths(alg, s, z, d)?;
    let inside = |u: &[f64]| -> bool { compiled.distance(z, &s.embed_point(u)) <= 1.0 };
    match method {
        VolumeMethod::MonteCarlo => {
            let vol_box: f64 = half.iter().map(|h| 2.0 * h).product();
            let mut r = rng::stream(seed, &["slice"]);
            let mut hits = 0usize;
            for _ in 0..n {
                let u: Vec<f64> = half.iter().map(|h| r.random_range(-*h..*h)).collect();
                if inside(&u) {
                    hits += 1;
                }
            }
            let p = hits as f64 / n as f64;
            Ok(MeasureEstimate {
                value: vol_box * p,
                std_error: vol_box * (p * (1.0 - p) / n as f64).sqrt(),
                n_samples: n,
                method: "monte_carlo".into(),
            })
        }
        VolumeMethod::Grid => {
            let (value, bound, evals) = grid_volume(&inside, &half, n);
            Ok(MeasureEstimate { value, std_error: bound, n_samples: evals, method: "grid".into() })
        }
    }
}

/// Adaptive-grid volume of `{u ∈ ∏[-half, half] : inside(u)}`. Returns
/// (volume, half-boundary bound, evaluations used).
fn grid_volume(inside: &dyn Fn(&[f64]) -> bool, half: &[f64], budget: usize) -> (f64, f64, usize) {
    let n = half.len();
    let corners = 1usize << n;
    let evals = std::cell::Cell::new(0usize);
    // Classify by corners + center: 0 = in, 1 = out, 2 = boundary.
    let classify = |c: &[f64], h: &[f64]| -> u8 {
        let mut seen_in = false;
        let mut seen_out = false;
        evals.set(evals.get() + corners + 1);
        if inside(c) {
            seen_in = true;
        } else {
            seen_out = true;
        }
        for mask in 0..corners {
            let p: Vec<f64> = (0..n)
                .map(|i| c[i] + if mask >> i & 1 == 1 { h[i] } else { -h[i] })
                .collect();
            if inside(&p) {
                seen_in = true;
            } else {
                seen_out = true;
            }
        }
        match (seen_in, seen_out) {
            (true, false) => 0,
            (false, true) => 1,
            _ => 2,
        }
    };
    // Initial uniform split: 8 cells per axis keeps unit-ball features
    // larger than a cell, making corner classification trustworthy.
    let splits = 8usize;
    let h0: Vec<f64> = half.iter().map(|h| h / splits as f64).collect();
    let mut boundary: Vec<Vec<f64>> = Vec::new();
    let mut value = 0.0f64;
    let mut cell_vol: f64 = h0.iter().map(|h| 2.0 * h).product();
    let mut idx = vec![0usize; n];
    loop {
        let center: Vec<f64> =
            (0..n).map(|i| -half[i] + (2 * idx[i] + 1) as f64 * h0[i]).collect();
        match classify(&center, &h0) {
            0 => value += cell_vol,
            2 => boundary.push(center),
            _ => {}
        }
        // Odometer over the initial grid.
        let mut axis = 0;
        loop {
            if axis == n {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < splits {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == n {
            break;
        }
    }
    let mut h = h0;
    for _depth in 0..10 {
        if boundary.is_empty() {
            break;
        }
        // Whole levels only: a partial refinement would leave cells at
        // mixed resolutions and an understated bound.
        let level_cost = boundary.len() * corners * (corners + 1);
        if evals.get() + level_cost > budget {
            break;
        }
        let child_h: Vec<f64> = h.iter().map(|x| x / 2.0).collect();
        let child_vol = cell_vol / corners as f64;
        let mut next = Vec::with_capacity(boundary.len() * 2);
        for c in &boundary {
            for mask in 0..corners {
                let cc: Vec<f64> = (0..n)
                    .map(|i| c[i] + if mask >> i & 1 == 1 { child_h[i] } else { -child_h[i] })
                    .collect();
                match classify(&cc, &child_h) {
                    0 => value += child_vol,
                    2 => next.push(cc),
                    _ => {}
                }
            }
        }
        boundary = next;
        h = child_h;
        cell_vol = child_vol;
    }
    let unresolved_vol = cell_vol * boundary.len() as f64;
    (value + 0.5 * unresolved_vol, 0.5 * unresolved_vol, evals.get())
}

/// Budget knobs for [`spherical_factor`].
#[derive(Clone, Debug, Serialize)]
pub struct SphericalBudget {
    /// Deterministic low-discrepancy candidates scanned before refinement.
    pub coarse_points: usize,
    /// Nelder–Mead iterations per start.
    pub nm_iters: usize,
    /// Monte Carlo samples per objective evaluation during the search.
    pub search_samples: usize,
    /// Grid evaluation budget for the final value.
    pub final_budget: usize,
}

impl Default for SphericalBudget {
    fn default() -> Self {
        SphericalBudget { coarse_points: 24, nm_iters: 60, search_samples: 4096, final_budget: 200_000 }
    }
}

/// Result of maximizing the slice volume over the closed unit ball.
#[derive(Clone, Debug, Serialize)]
pub struct SphericalFactor {
    pub beta: f64,
    pub argmax: Point,
    /// Slice volume at z = 0 (always a lower bound for beta).
    pub center_value: f64,
    /// Resolution bound of the final grid evaluation.
    pub error_bound: f64,
}

/// `β_d(S) = max_{‖z‖ ≤ 1} H^n(S ∩ B(z,1))`: multistart derivative-free
/// maximization of the slice volume over the closed unit ball, with a final
/// high-accuracy re-evaluation of both the best candidate and the center.
pub fn spherical_factor(
    alg: &GradedAlgebra,
    s: &HomogeneousSubgroup,
    d: &Distance,
    budget: &SphericalBudget,
    seed: u64,
) -> Result<SphericalFactor> {
    let compiled = d.compiled(alg)?;
    let q = alg.dim();
    let clamp = |z: &[f64]| -> Point {
        let p = Point::raw(z.to_vec());
        let n = compiled.norm(&p);
        if n > 1.0 {
            alg.dilate_unchecked(1.0 / n, &p)
        } else {
            p
        }
    };
    // Search objective: fixed-seed Monte Carlo (common random numbers keep
    // the surface deterministic in z, so the simplex can make progress).
    let mut objective = |z: &[f64]| -> f64 {
        let zp = clamp(z);
        match slice_volume(alg, s, &zp, d, VolumeMethod::MonteCarlo, budget.search_samples, seed) {
            Ok(est) => -est.value,
            Err(_) => 0.0,
        }
    };
    let ball_box: Vec<f64> =
        (0..q).map(|i| d.coordinate_bound(alg, alg.layer_of(i), 1.0)).collect::<Result<_>>()?;
    let mut candidates: Vec<Vec<f64>> = vec![vec![0.0; q]];
    for i in 0..budget.coarse_points {
        let h = optim::halton(i, q);
        candidates.push(
            h.iter().zip(&ball_box).map(|(x, b)| (2.0 * x - 1.0) * b).collect(),
        );
    }
    let mut scored: Vec<(f64, Vec<f64>)> =
        candidates.into_iter().map(|z| (objective(&z), z)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (scored[0].0, scored[0].1.clone());
    for (_, start) in scored.iter().take(3) {
        let (z, val) = optim::nelder_mead(&mut objective, start, 0.2, budget.nm_iters, 1e-10);
        if val < best.0 {
            best = (val, z);
        }
    }
    // High-accuracy deterministic re-evaluation kills the selection bias of
    // picking the noisiest-high candidate.
    let argmax = clamp(&best.1);
    let at_best = slice_volume(alg, s, &argmax, d, VolumeMethod::Grid, budget.final_budget, seed)?;
    let at_zero =
        slice_volume(alg, s, &alg.zero(), d, VolumeMethod::Grid, budget.final_budget, seed)?;
    let (beta, winner, bound) = if at_zero.value >= at_best.value {
        (at_zero.value, alg.zero(), at_zero.std_error)
    } else {
        (at_best.value, argmax, at_best.std_error)
    };
    Ok(SphericalFactor { beta, argmax: winner, center_value: at_zero.value, error_bound: bound })
}

/// Intrinsic Jacobian `JΦ(w̃)`: per-point evaluation via the analytic
/// gradient and the minors formula when the map carries one over an
/// orthogonal couple, otherwise via the estimated intrinsic differential
/// and the wedge ratio.
pub fn intrinsic_jacobian_at(alg: &GradedAlgebra, phi: &IntrinsicMap, w_tilde: &[f64]) -> Result<f64> {
    let couple = phi.couple();
    if let Some(g) = phi.analytic_grad(w_tilde) {
        let orthogonal = couple.v().basis().iter().all(|vb| {
            couple
                .w()
                .basis()
                .iter()
                .all(|wb| vb.iter().zip(wb).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-10)
        });
        if orthogonal {
            return Ok(graph::jacobian_minors(&g));
        }
    }
    let w = couple.w().embed_point(w_tilde);
    let est = graph::estimate_intrinsic_differential(alg, phi, &w, &graph::default_t_schedule())?;
    graph::jacobian_wedge(couple, &est.map)
}

/// Graph measure `μ(B) = ∫_{Φ⁻¹(B)} JΦ dH^m`: Monte Carlo over the map's
/// domain box against the Lebesgue (= Haar) measure of W.
pub fn graph_mu(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    region: &CoordBox,
    n: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    if region.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: region.dim() });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n > 0".into()));
    }
    let (lo, hi) = phi
        .sample_box()
        .ok_or_else(|| Error::InvalidParameter("map has no sampling box".into()))?;
    let m = lo.len();
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut r = rng::stream(seed, &["graph-mu"]);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..n {
        let u: Vec<f64> = (0..m).map(|i| r.random_range(lo[i]..hi[i])).collect();
        let w = phi.couple().w().embed_point(&u);
        let g = phi.graph_point(alg, &w)?;
        let val = if region.contains(g.coords()) { intrinsic_jacobian_at(alg, phi, &u)? } else { 0.0 };
        sum += val;
        sum_sq += val * val;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok(MeasureEstimate {
        value: vol * mean,
        std_error: vol * (var / n as f64).sqrt(),
        n_samples: n,
        method: "monte_carlo".into(),
    })
}

/// One scale of a blow-up experiment.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupSample {
    pub t: f64,
    /// Fresh re-evaluation of `μ(B(y,t))/t^M` at the refined best center.
    pub sup_estimate: f64,
    pub std_error: f64,
    pub best_center: Point,
}

/// Federer-density blow-up report.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub point: Point,
    /// Homogeneous dimension of W (the density exponent).
    pub exponent: usize,
    pub per_t: Vec<BlowupSample>,
    /// Linear-in-t extrapolation of the per-t suprema.
    pub extrapolated: f64,
    /// Spherical factor of the tangent subgroup at the point.
    pub tangent_beta: f64,
    pub relative_gap: f64,
    pub centers_per_t: usize,
    pub n_mc: usize,
    pub seed: u64,
}

/// Default blow-up scales `2^{-3} … 2^{-9}`.
pub fn default_blowup_schedule() -> Vec<f64> {
    (3..=9).map(|k| 0.5f64.powi(k)).collect()
}

/// Estimates the spherical Federer density of the graph measure at
/// `x = Φ(ζ)`: for each scale t, the supremum of `μ(B(y,t))/t^M` over
/// centers y with `x ∈ B(y,t)` (sampled, then locally refined, then freshly
/// re-evaluated), extrapolated over the schedule and compared against the
/// spherical factor of the tangent subgroup at ζ.
pub fn federer_density(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    d: &Distance,
    x: &Point,
    t_schedule: &[f64],
    centers_per_t: usize,
    n_mc: usize,
    seed: u64,
) -> Result<BlowupReport> {
    if t_schedule.windows(2).any(|w| w[1] >= w[0]) || t_schedule.is_empty() {
        return Err(Error::InvalidParameter("t-schedule must be strictly decreasing".into()));
    }
    if centers_per_t == 0 || n_mc == 0 {
        return Err(Error::InvalidParameter("budgets must be positive".into()));
    }
    let couple = phi.couple();
    let compiled = d.compiled(alg)?;
    let zeta = couple.project_w(alg, x);
    let on_graph = phi.graph_point(alg, &zeta)?;
    if compiled.distance(&on_graph, x) > 1e-8 {
        return Err(Error::InvalidParameter("blow-up point is not on the graph".into()));
    }
    let m = couple.w().top_dim();
    let exponent = couple.w().hom_dim();

    // Frame box: the region Φ⁻¹(B(y,t)) pulled to u-coordinates through
    // w(u) = π_W(y · δ_t ψ(u)) is contained in the coordinate range of
    // π_W over the unit ball, since π_W commutes with dilations. Sphere
    // samples bound that range; the margin covers the sampling gap.
    let mut frame_half = vec![1e-6f64; m];
    for i in 0..64 {
        let u: Vec<f64> = optim::halton(i, alg.dim()).iter().map(|x| 2.0 * x - 1.0).collect();
        let p = Point::raw(u);
        let n = compiled.norm(&p);
        if n < 1e-9 {
            continue;
        }
        let unit = alg.dilate_unchecked(1.0 / n, &p);
        let wt = couple.w().coords_of(couple.project_w(alg, &unit).coords());
        for (h, c) in frame_half.iter_mut().zip(&wt) {
            *h = h.max(c.abs());
        }
    }
    for h in &mut frame_half {
        *h *= 1.5;
    }
    let frame_vol: f64 = frame_half.iter().map(|h| 2.0 * h).product();

    // Common random numbers: one fixed sample cloud reused for every
    // (t, center) evaluation, a second independent cloud for the fresh
    // re-evaluations at the selected centers.
    let draw_cloud = |label: &str, count: usize| -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, &["federer", label]);
        (0..count)
            .map(|_| frame_half.iter().map(|h| r.random_range(-*h..*h)).collect())
            .collect()
    };
    let search_cloud = draw_cloud("search", n_mc);
    let fresh_cloud = draw_cloud("fresh", 2 * n_mc);

    // μ(B(y,t))/t^M over a sample cloud in frame coordinates.
    let center_eval = |t: f64, h: &Point, cloud: &[Vec<f64>]| -> Result<(f64, f64)> {
        let y = alg.multiply(x, &alg.dilate_unchecked(t, h));
        let frame = |u: &[f64]| -> Result<Vec<f64>> {
            let p = alg.dilate_unchecked(t, &Point::raw(couple.w().embed(u)));
            let proj = couple.project_w(alg, &alg.multiply(&y, &p));
            Ok(couple.w().coords_of(proj.coords()))
        };
        let frame_det = |u: &[f64]| -> Result<f64> {
            let mut df = DMatrix::zeros(m, m);
            for i in 0..m {
                let hstep = 1e-3 * frame_half[i];
                let mut up = u.to_vec();
                up[i] += hstep;
                let mut dn = u.to_vec();
                dn[i] -= hstep;
                let (fp, fm) = (frame(&up)?, frame(&dn)?);
                for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                    df[(row, i)] = (a - b) / (2.0 * hstep);
                }
            }
            Ok(df.determinant().abs())
        };
        // σ_y preserves the Haar measure of a normal W, so the frame
        // Jacobian is constant (= t^M); probe twice and only fall back to
        // per-sample determinants if the probes disagree.
        let det0 = frame_det(&vec![0.0; m])?;
        let probe: Vec<f64> = frame_half.iter().map(|h| 0.5 * h).collect();
        let det1 = frame_det(&probe)?;
        let constant_det = (det0 - det1).abs() <= 1e-6 * det0.max(det1);
        let t_m = t.powi(exponent as i32);
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for u in cloud {
            let wt = frame(u)?;
            let w = couple.w().embed_point(&wt);
            let g = phi.graph_point(alg, &w)?;
            let mut val = 0.0;
            if compiled.distance(&y, &g) <= t {
                let det = if constant_det { det0 } else { frame_det(u)? };
                val = intrinsic_jacobian_at(alg, phi, &wt)? * det / t_m;
            }
            sum += val;
            sum_sq += val * val;
        }
        let n = cloud.len() as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok((frame_vol * mean, frame_vol * (var / n).sqrt()))
    };

    // Center sampling: y = x·δ_t(h) with h Haar-uniform in the unit ball
    // keeps x ∈ B(y,t) for every ‖h‖ ≤ 1.
    let ball_box: Vec<f64> =
        (0..alg.dim()).map(|i| d.coordinate_bound(alg, alg.layer_of(i), 1.0)).collect::<Result<_>>()?;
    let sample_ball = |r: &mut rand_chacha::ChaCha8Rng| -> Point {
        for _ in 0..10_000 {
            let c: Vec<f64> = ball_box.iter().map(|b| r.random_range(-*b..*b)).collect();
            let p = Point::raw(c);
            if compiled.norm(&p) <= 1.0 {
                return p;
            }
        }
        Point::zero(alg.dim())
    };

    let mut per_t = Vec::with_capacity(t_schedule.len());
    for (ti, &t) in t_schedule.iter().enumerate() {
        let mut r = rng::indexed_stream(seed, &["federer", "centers"], ti as u64);
        let centers: Vec<Point> = (0..centers_per_t).map(|_| sample_ball(&mut r)).collect();
        // Independent cells: evaluations share the fixed sample cloud, so
        // the values (and hence the report) do not depend on scheduling.
        let values: Vec<f64> = centers
            .par_iter()
            .map(|h| center_eval(t, h, &search_cloud).map(|(v, _)| v))
            .collect::<Result<_>>()?;
        let best_idx = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let best = (values[best_idx], centers[best_idx].clone());
        // Local refinement of the best center, still on the search cloud.
        let mut nm_obj = |z: &[f64]| -> f64 {
            let mut h = Point::raw(z.to_vec());
            let n = compiled.norm(&h);
            if n > 1.0 {
                h = alg.dilate_unchecked(1.0 / n, &h);
            }
            match center_eval(t, &h, &search_cloud) {
                Ok((v, _)) => -v,
                Err(_) => 0.0,
            }
        };
        let (refined, neg_val) =
            optim::nelder_mead(&mut nm_obj, best.1.coords(), 0.15, 40, 1e-9);
        let mut h_best = Point::raw(refined);
        let nb = compiled.norm(&h_best);
        if nb > 1.0 {
            h_best = alg.dilate_unchecked(1.0 / nb, &h_best);
        }
        if -neg_val < best.0 {
            h_best = best.1.clone();
        }
        // Fresh cloud at the selected center: the reported supremum is an
        // unbiased estimate, not the winner of a noise lottery.
        let (sup, se) = center_eval(t, &h_best, &fresh_cloud)?;
        let y = alg.multiply(x, &alg.dilate_unchecked(t, &h_best));
        per_t.push(BlowupSample { t, sup_estimate: sup, std_error: se, best_center: y });
    }

    // Linear-in-t extrapolation over the last few scales.
    let tail = per_t.len().min(4);
    let pts = &per_t[per_t.len() - tail..];
    let extrapolated = if tail == 1 {
        pts[0].sup_estimate
    } else {
        let (mut st, mut sv, mut stt, mut stv) = (0.0, 0.0, 0.0, 0.0);
        for p in pts {
            st += p.t;
            sv += p.sup_estimate;
            stt += p.t * p.t;
            stv += p.t * p.sup_estimate;
        }
        let k = tail as f64;
        let denom = k * stt - st * st;
        if denom.abs() < 1e-30 {
            sv / k
        } else {
            (sv * stt - st * stv) / denom
        }
    };

    // Tangent subgroup at ζ and its spherical factor.
    let zeta_coords = couple.w().coords_of(zeta.coords());
    let tangent = match phi.analytic_grad(&zeta_coords) {
        Some(g) => graph::IntrinsicLinearMap::from_matrix(alg, couple, &g)?,
        None => graph::estimate_intrinsic_differential(alg, phi, &zeta, &graph::default_t_schedule())?.map,
    };
    let beta = spherical_factor(
        alg,
        tangent.graph_subgroup(),
        d,
        &SphericalBudget::default(),
        seed ^ 0x5f3759df,
    )?;
    let relative_gap = (extrapolated - beta.beta).abs() / beta.beta.max(1e-12);
    Ok(BlowupReport {
        point: x.clone(),
        exponent,
        per_t,
        extrapolated,
        tangent_beta: beta.beta,
        relative_gap,
        centers_per_t,
        n_mc,
        seed,
    })
}

/// A smooth map from the ambient group into a target homogeneous group
/// (abelian `R^p` in all fixtures), given by an evaluator.
#[derive(Clone)]
pub struct SmoothMap {
    name: String,
    target: GradedAlgebra,
    body: Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>,
}

impl SmoothMap {
    pub fn new(
        name: String,
        target: GradedAlgebra,
        f: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap { name, target, body: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn target(&self) -> &GradedAlgebra {
        &self.target
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        (self.body)(x)
    }
}

/// Scalar map fixtures with values in abelian R: `coord:j` (the j-th
/// exponential coordinate, 1-based) and `x-plus-ysq` (x₁ + x₂²).
pub fn scalar_map_by_name(alg: &GradedAlgebra, spec: &str) -> Result<SmoothMap> {
    let spec_norm = spec.trim().to_ascii_lowercase();
    let line = GradedAlgebra::new(vec![1], &[])?;
    if let Some(j) = spec_norm.strip_prefix("coord:") {
        let j: usize = j
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad coordinate index {j:?}")))?;
        if j == 0 || j > alg.dim() {
            return Err(Error::IndexOutOfRange { index: j, dim: alg.dim() });
        }
        return Ok(SmoothMap::new(format!("coord:{j}"), line, move |x| {
            Ok(Point::raw(vec![x.coords()[j - 1]]))
        }));
    }
    if spec_norm == "x-plus-ysq" || spec_norm == "x+y^2" {
        if alg.dim() < 2 {
            return Err(Error::InvalidParameter("x-plus-ysq needs two coordinates".into()));
        }
        return Ok(SmoothMap::new("x-plus-ysq".into(), line, move |x| {
            Ok(Point::raw(vec![x.coords()[0] + x.coords()[1] * x.coords()[1]]))
        }));
    }
    Err(Error::UnknownFixture(spec.to_string()))
}

/// Pansu differential with its structural residuals.
#[derive(Clone, Debug, Serialize)]
pub struct PansuDifferential {
    /// dim(M) × dim(G) matrix acting on exponential coordinates.
    pub matrix: Vec<Vec<f64>>,
    /// Sup over sampled pairs of ‖L(uw) − L(u)·L(w)‖.
    pub homomorphism_residual: f64,
    /// Sup over samples of ‖L(δ₂ g) − δ₂ L(g)‖.
    pub homogeneity_residual: f64,
}

impl PansuDifferential {
    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.matrix.len(), self.matrix[0].len(), |i, j| self.matrix[i][j])
    }

    fn apply(&self, coords: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(coords).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// h-differential of `f` at `x`: columns are the limits of
/// `δ^M_{1/t}(f(x)⁻¹ · f(x·δ_t e_j))`, Richardson-extrapolated over the
/// schedule. Columns in layers ≥ 2 vanish in the limit whenever the first
/// layer does not feed them, which the residuals make checkable.
pub fn pansu_differential(
    alg: &GradedAlgebra,
    f: &SmoothMap,
    x: &Point,
    t_schedule: &[f64],
) -> Result<PansuDifferential> {
    if t_schedule.len() < 3 {
        return Err(Error::InvalidParameter("schedule needs at least 3 scales".into()));
    }
    let target = f.target();
    let fx_inv = target.inverse(&f.eval(x)?);
    let p = target.dim();
    let q = alg.dim();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(q);
    for j in 1..=q {
        let e = alg.basis_point(j)?;
        let mut prev_rows: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut diag: Vec<Vec<f64>> = Vec::new();
        for (k, &t) in t_schedule.iter().enumerate() {
            let shifted = alg.multiply(x, &alg.dilate(t, &e)?);
            let delta = target.multiply(&fx_inv, &f.eval(&shifted)?);
            let scaled = target.dilate(1.0 / t, &delta)?;
            let mut row = vec![scaled.into_coords()];
            for col in 1..=k {
                let fpow = 2f64.powi(col as i32);
                let higher: Vec<f64> = row[col - 1]
                    .iter()
                    .zip(&prev_rows[k - 1][col - 1])
                    .map(|(a, b)| (fpow * a - b) / (fpow - 1.0))
                    .collect();
                row.push(higher);
            }
            diag.push(row.last().unwrap().clone());
            prev_rows.push(row);
        }
        let last = diag.last().unwrap().clone();
        let tail: f64 = last
            .iter()
            .zip(&diag[diag.len() - 2])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if tail > 1e-3 * last.iter().map(|v| v.abs()).fold(1.0, f64::max) {
            return Err(Error::NonConvergence { what: "Pansu differential", residual: tail });
        }
        cols.push(last);
    }
    let matrix: Vec<Vec<f64>> = (0..p).map(|i| (0..q).map(|j| cols[j][i]).collect()).collect();
    let pd = PansuDifferential { matrix, homomorphism_residual: 0.0, homogeneity_residual: 0.0 };

    let mut hom = 0.0f64;
    let mut scal = 0.0f64;
    for i in 0..16 {
        let a: Vec<f64> = optim::halton(2 * i, q).iter().map(|x| 2.0 * x - 1.0).collect();
        let b: Vec<f64> = optim::halton(2 * i + 1, q).iter().map(|x| 2.0 * x - 1.0).collect();
        let (pa, pb) = (Point::raw(a), Point::raw(b));
        let lhs = pd.apply(alg.multiply(&pa, &pb).coords());
        let rhs = target
            .multiply(&Point::raw(pd.apply(pa.coords())), &Point::raw(pd.apply(pb.coords())));
        hom = hom.max(
            lhs.iter().zip(rhs.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        );
        let lhs2 = pd.apply(alg.dilate(2.0, &pa)?.coords());
        let rhs2 = target.dilate(2.0, &Point::raw(pd.apply(pa.coords())))?;
        scal = scal.max(
            lhs2.iter().zip(rhs2.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        );
    }
    Ok(PansuDifferential { homomorphism_residual: hom, homogeneity_residual: scal, ..pd })
}

/// Horizontal and V-restricted Jacobians of a Pansu matrix: `J_H` is the
/// norm of the wedge of the horizontal rows, `J_V` the norm of the wedge of
/// their orthogonal projections onto V.
pub fn jacobians_jh_jv(
    alg: &GradedAlgebra,
    pansu_matrix: &DMatrix<f64>,
    v: &HomogeneousSubgroup,
) -> Result<(f64, f64)> {
    let p = pansu_matrix.nrows();
    if p > v.top_dim() {
        return Err(Error::InvalidParameter(format!(
            "{p} rows cannot project onto a {}-dimensional V",
            v.top_dim()
        )));
    }
    let n1 = alg.layer_dims()[0];
    if pansu_matrix.ncols() != alg.dim() && pansu_matrix.ncols() != n1 {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: pansu_matrix.ncols() });
    }
    let q = alg.dim();
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut r = vec![0.0; q];
            for j in 0..n1 {
                r[j] = pansu_matrix[(i, j)];
            }
            r
        })
        .collect();
    let mut wedge_h: Option<Multivector> = None;
    let mut wedge_v: Option<Multivector> = None;
    for r in &rows {
        let proj: Vec<f64> = {
            let mut acc = vec![0.0; q];
            for b in v.basis() {
                let dot: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
                for (ai, bi) in acc.iter_mut().zip(b) {
                    *ai += dot * bi;
                }
            }
            acc
        };
        let mh = Multivector::from_vector(r);
        let mv = Multivector::from_vector(&proj);
        wedge_h = Some(match wedge_h {
            None => mh,
            Some(acc) => acc.wedge(&mh)?,
        });
        wedge_v = Some(match wedge_v {
            None => mv,
            Some(acc) => acc.wedge(&mv)?,
        });
    }
    Ok((wedge_h.map(|w| w.norm()).unwrap_or(0.0), wedge_v.map(|w| w.norm()).unwrap_or(0.0)))
}

/// Solves `f(w·v) = 0` for `v ∈ V` by damped Newton over the intrinsic
/// V-coordinates, the linear model being the V-restricted differential by
/// central differences. Returns `φ(w) ∈ V` with `‖f(w·φ(w))‖ ≤ 1e-10`.
pub fn solve_implicit(
    alg: &GradedAlgebra,
    f: &SmoothMap,
    couple: &ComplementaryCouple,
    w: &Point,
    max_iter: usize,
) -> Result<Point> {
    let p = couple.v().top_dim();
    if f.target().dim() != p {
        return Err(Error::DimensionMismatch { expected: p, got: f.target().dim() });
    }
    let eval = |c: &[f64]| -> Result<Vec<f64>> {
        let v = couple.v().embed_point(c);
        Ok(f.eval(&alg.multiply(w, &v))?.into_coords())
    };
    let norm2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut c = vec![0.0; p];
    let mut res = norm2(&eval(&c)?);
    for _ in 0..max_iter {
        if res <= 1e-10 {
            return Ok(couple.v().embed_point(&c));
        }
        let fx = eval(&c)?;
        let mut jac = DMatrix::zeros(p, p);
        for i in 0..p {
            let h = 1e-6 * (1.0 + c[i].abs());
            let mut up = c.clone();
            up[i] += h;
            let mut dn = c.clone();
            dn[i] -= h;
            let (fp, fm) = (eval(&up)?, eval(&dn)?);
            for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                jac[(row, i)] = (a - b) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(p, fx.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::Singular("vertical differential in the implicit solve"))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 64.0 {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            let trial_res = norm2(&eval(&trial)?);
            if trial_res < res {
                c = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            lambda /= 2.0;
        }
        if !accepted {
            return Err(Error::NonConvergence { what: "implicit Newton", residual: res });
        }
    }
    if res <= 1e-10 {
        Ok(couple.v().embed_point(&c))
    } else {
        Err(Error::NonConvergence { what: "implicit Newton", residual: res })
    }
}

/// Level-set Jacobian ratio `|V∧W| · J_H f / J_V f` at a point of the level
/// set; equals the intrinsic Jacobian of the implicit parametrization.
pub fn level_set_jacobian_ratio(
    alg: &GradedAlgebra,
    f: &SmoothMap,
    v: &HomogeneousSubgroup,
    w: &HomogeneousSubgroup,
    x: &Point,
) -> Result<f64> {
    let pd = pansu_differential(alg, f, x, &graph::default_t_schedule())?;
    let (jh, jv) = jacobians_jh_jv(alg, &pd.as_matrix(), v)?;
    if jv < 1e-12 {
        return Err(Error::Singular("vanishing vertical Jacobian"));
    }
    let vw = orienting_unit(v)?.wedge(&orienting_unit(w)?)?.norm();
    Ok(vw * jh / jv)
}

/// Budgets for [`area_check`].
#[derive(Clone, Debug, Serialize)]
pub struct AreaBudget {
    pub n_mu: usize,
    pub federer_points: usize,
    pub t_schedule: Vec<f64>,
    pub centers_per_t: usize,
    pub n_mc: usize,
    pub tangent_samples: usize,
    pub spherical: SphericalBudget,
}

impl Default for AreaBudget {
    fn default() -> Self {
        AreaBudget {
            n_mu: 20_000,
            federer_points: 2,
            t_schedule: default_blowup_schedule(),
            centers_per_t: 64,
            n_mc: 2000,
            tangent_samples: 5,
            spherical: SphericalBudget::default(),
        }
    }
}

/// Composite area-formula report.
#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub region: CoordBox,
    /// `μ(region) = ∫ JΦ dH^m` over the preimage.
    pub mu: MeasureEstimate,
    pub mu_halves: Vec<MeasureEstimate>,
    /// |μ(B₁) + μ(B₂) − μ(B)| against its combined standard error.
    pub additivity_gap: f64,
    pub additivity_se: f64,
    pub federer: Vec<BlowupReport>,
    /// Spherical factors of sampled tangent subgroups over the region.
    pub tangent_betas: Vec<f64>,
    pub beta_mean: f64,
    /// Relative spread of the sampled factors.
    pub beta_spread: f64,
    /// True when the spread is within 2%: the distance is then empirically
    /// rotationally symmetric over the sampled tangents and μ/β̄ estimates
    /// the spherical measure of the region directly.
    pub rotationally_symmetric: bool,
    pub implied_spherical: Option<f64>,
    pub implied_spherical_halves: Option<Vec<f64>>,
    pub seed: u64,
}

/// End-to-end check of the area identity over a coordinate region: the
/// graph measure, Federer densities at sampled points, and the rotational
/// shortcut μ/β̄ with additivity across sub-regions.
pub fn area_check(
    alg: &GradedAlgebra,
    phi: &IntrinsicMap,
    d: &Distance,
    region: &CoordBox,
    budget: &AreaBudget,
    seed: u64,
) -> Result<AreaReport> {
    let couple = phi.couple();
    let mu = graph_mu(alg, phi, region, budget.n_mu, seed)?;
    let (b1, b2) = region.halves();
    let mu1 = graph_mu(alg, phi, &b1, budget.n_mu, seed ^ 1)?;
    let mu2 = graph_mu(alg, phi, &b2, budget.n_mu, seed ^ 2)?;
    let additivity_gap = (mu1.value + mu2.value - mu.value).abs();
    let additivity_se =
        (mu.std_error.powi(2) + mu1.std_error.powi(2) + mu2.std_error.powi(2)).sqrt();

    // Deterministic scan for domain points whose graph lands in the region.
    let (lo, hi) = phi
        .sample_box()
        .ok_or_else(|| Error::InvalidParameter("map has no sampling box".into()))?;
    let m = lo.len();
    let mut inside_points: Vec<Vec<f64>> = Vec::new();
    for i in 0..4096 {
        if inside_points.len() >= budget.federer_points.max(budget.tangent_samples) {
            break;
        }
        let h = optim::halton(i, m);
        let u: Vec<f64> =
            h.iter().enumerate().map(|(k, x)| lo[k] + x * (hi[k] - lo[k])).collect();
        let w = couple.w().embed_point(&u);
        let g = phi.graph_point(alg, &w)?;
        if region.contains(g.coords()) {
            inside_points.push(u);
        }
    }

    let mut federer = Vec::new();
    for u in inside_points.iter().take(budget.federer_points) {
        let w = couple.w().embed_point(u);
        let x = phi.graph_point(alg, &w)?;
        federer.push(federer_density(
            alg,
            phi,
            d,
            &x,
            &budget.t_schedule,
            budget.centers_per_t,
            budget.n_mc,
            seed,
        )?);
    }

    let mut tangent_betas = Vec::new();
    for (k, u) in inside_points.iter().take(budget.tangent_samples).enumerate() {
        let tangent = match phi.analytic_grad(u) {
            Some(g) => graph::IntrinsicLinearMap::from_matrix(alg, couple, &g)?,
            None => {
                let w = couple.w().embed_point(u);
                graph::estimate_intrinsic_differential(alg, phi, &w, &graph::default_t_schedule())?
                    .map
            }
        };
        let sf = spherical_factor(
            alg,
            tangent.graph_subgroup(),
            d,
            &budget.spherical,
            seed.wrapping_add(k as u64),
        )?;
        tangent_betas.push(sf.beta);
    }
    let beta_mean = if tangent_betas.is_empty() {
        0.0
    } else {
        tangent_betas.iter().sum::<f64>() / tangent_betas.len() as f64
    };
    let beta_spread = if beta_mean > 0.0 {
        tangent_betas
            .iter()
            .map(|b| (b - beta_mean).abs())
            .fold(0.0, f64::max)
            / beta_mean
    } else {
        0.0
    };
    let rotationally_symmetric = !tangent_betas.is_empty() && beta_spread <= 0.02;
    let (implied_spherical, implied_spherical_halves) = if rotationally_symmetric {
        (
            Some(mu.value / beta_mean),
            Some(vec![mu1.value / beta_mean, mu2.value / beta_mean]),
        )
    } else {
        (None, None)
    };
    Ok(AreaReport {
        region: region.clone(),
        mu,
        mu_halves: vec![mu1, mu2],
        additivity_gap,
        additivity_se,
        federer,
        tangent_betas,
        beta_mean,
        beta_spread,
        rotationally_symmetric,
        implied_spherical,
        implied_spherical_halves,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::map_by_name;
    use approx::assert_abs_diff_eq;

    fn h1_couple() -> (GradedAlgebra, ComplementaryCouple) {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
        let couple = ComplementaryCouple::new(&alg, w, v).unwrap();
        (alg, couple)
    }

    #[test]
    fn slice_volume_closed_forms() {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let d = Distance::d_inf();
        // |y| ≤ 1, |τ| ≤ 1 → area 4.
        let grid = slice_volume(&alg, &w, &alg.zero(), &d, VolumeMethod::Grid, 150_000, 0).unwrap();
        assert!((grid.value - 4.0).abs() <= grid.std_error + 1e-9, "grid {} ± {}", grid.value, grid.std_error);
        assert!(grid.std_error < 0.05);
        let mc = slice_volume(&alg, &w, &alg.zero(), &d, VolumeMethod::MonteCarlo, 60_000, 1).unwrap();
        assert!((mc.value - 4.0).abs() <= 3.0 * mc.std_error + grid.std_error);
        // Ball separation: ‖z‖ > 2 leaves an empty slice.
        let far = alg.point(vec![2.5, 0.0, 0.0]).unwrap();
        let empty = slice_volume(&alg, &w, &far, &d, VolumeMethod::MonteCarlo, 5_000, 2).unwrap();
        assert_abs_diff_eq!(empty.value, 0.0);
        assert_abs_diff_eq!(empty.std_error, 0.0);
    }

    #[test]
    fn cygan_koranyi_vertical_slice() {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let d = Distance::cygan_koranyi();
        // Area of {y⁴ + 16τ² ≤ 1} = ∫₀¹ √(1−y⁴) dy ≈ 0.874019.
        let grid = slice_volume(&alg, &w, &alg.zero(), &d, VolumeMethod::Grid, 200_000, 0).unwrap();
        assert!((grid.value - 0.874019).abs() <= grid.std_error + 2e-3, "got {}", grid.value);
    }

    #[test]
    fn spherical_factor_vertical_plane() {
        let alg = fixtures::heisenberg1();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let d = Distance::d_inf();
        let sf = spherical_factor(&alg, &w, &d, &SphericalBudget::default(), 42).unwrap();
        // The whole center-plateau attains 4.
        assert!((sf.beta - 4.0).abs() < 0.05, "beta {}", sf.beta);
        assert!(sf.beta + 1e-9 >= sf.center_value);
        // Center optimality for the convex ball (value form).
        let at_argmax =
            slice_volume(&alg, &w, &sf.argmax, &d, VolumeMethod::Grid, 150_000, 0).unwrap();
        assert!(at_argmax.value <= sf.center_value * (1.0 + 1e-3) + at_argmax.std_error);

        // Invariance under re-basing of the same subspace.
        let rebased =
            HomogeneousSubgroup::new(&alg, &[vec![0.0, 2.0, 3.0], vec![0.0, 0.0, -1.0]]).unwrap();
        let sf2 = spherical_factor(&alg, &rebased, &d, &SphericalBudget::default(), 42).unwrap();
        assert_abs_diff_eq!(sf.beta, sf2.beta, epsilon = 1e-6);
    }

    #[test]
    fn rotational_family_has_flat_spherical_factor() {
        // Graph tangents span((a,1,0),(0,0,1)): the layer-1 part of the
        // d_inf ball is a Euclidean disc, so β is slope-independent.
        let alg = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let budget = SphericalBudget {
            coarse_points: 12,
            nm_iters: 30,
            search_samples: 2048,
            final_budget: 80_000,
        };
        let mut betas = Vec::new();
        for a in [0.0, 0.7, -1.3, 2.0, 4.0] {
            let u = HomogeneousSubgroup::new(&alg, &[vec![a, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
            betas.push(spherical_factor(&alg, &u, &d, &budget, 5).unwrap().beta);
        }
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        for b in &betas {
            assert!((b - mean).abs() / mean <= 0.02, "betas {betas:?}");
        }
    }

    #[test]
    fn graph_mu_boxes() {
        let (alg, couple) = h1_couple();
        let zero = map_by_name(&alg, &couple, "zero").unwrap();
        let region = CoordBox::new(vec![-0.5; 3], vec![0.5; 3]).unwrap();
        let est = graph_mu(&alg, &zero, &region, 30_000, 3).unwrap();
        assert!((est.value - 1.0).abs() <= 2.0 * est.std_error + 0.01, "{} ± {}", est.value, est.std_error);

        // Disjoint region.
        let far = CoordBox::new(vec![5.0, -1.0, -1.0], vec![6.0, 1.0, 1.0]).unwrap();
        let est = graph_mu(&alg, &zero, &far, 2_000, 3).unwrap();
        assert_abs_diff_eq!(est.value, 0.0);

        // Additivity over disjoint halves.
        let (r1, r2) = region.halves();
        let e1 = graph_mu(&alg, &zero, &r1, 30_000, 4).unwrap();
        let e2 = graph_mu(&alg, &zero, &r2, 30_000, 5).unwrap();
        let gap = (e1.value + e2.value - est_total(&alg, &zero, &region)).abs();
        let se = (e1.std_error.powi(2) + e2.std_error.powi(2)).sqrt();
        assert!(gap <= 3.0 * se + 0.02, "gap {gap} se {se}");
    }

    fn est_total(alg: &GradedAlgebra, phi: &IntrinsicMap, region: &CoordBox) -> f64 {
        graph_mu(alg, phi, region, 30_000, 6).unwrap().value
    }

    #[test]
    fn federer_density_flat_graphs() {
        let (alg, couple) = h1_couple();
        let d = Distance::d_inf();
        let schedule: Vec<f64> = (3..=6).map(|k| 0.5f64.powi(k)).collect();
        // φ ≡ 0: μ(B(y,t))/t³ is exactly t-independent and sups to β(W) = 4.
        let zero = map_by_name(&alg, &couple, "zero").unwrap();
        let x = alg.zero();
        let report = federer_density(&alg, &zero, &d, &x, &schedule, 24, 900, 11).unwrap();
        assert!(report.relative_gap < 0.10, "gap {} (density {} vs beta {})", report.relative_gap, report.extrapolated, report.tangent_beta);
        assert_eq!(report.exponent, 3);

        // linear:1 at a generic graph point: tangent is the tilted plane,
        // whose β under d_inf is again 4 by rotational symmetry.
        let lin = map_by_name(&alg, &couple, "linear:1").unwrap();
        let w = alg.point(vec![0.0, 0.5, 0.2]).unwrap();
        let x = lin.graph_point(&alg, &w).unwrap();
        let report = federer_density(&alg, &lin, &d, &x, &schedule, 24, 900, 12).unwrap();
        assert!(report.relative_gap < 0.10, "gap {} (density {} vs beta {})", report.relative_gap, report.extrapolated, report.tangent_beta);

        // Off-graph points are rejected.
        let off = alg.point(vec![3.0, 0.0, 0.0]).unwrap();
        assert!(federer_density(&alg, &lin, &d, &off, &schedule, 8, 100, 1).is_err());
    }

    #[test]
    fn pansu_differential_closed_forms() {
        let alg = fixtures::heisenberg1();
        let sched = graph::default_t_schedule();
        let f = scalar_map_by_name(&alg, "coord:1").unwrap();
        let x = alg.point(vec![0.3, -0.7, 0.2]).unwrap();
        let pd = pansu_differential(&alg, &f, &x, &sched).unwrap();
        assert_abs_diff_eq!(pd.matrix[0][0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(pd.matrix[0][1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(pd.matrix[0][2], 0.0, epsilon = 1e-8);
        assert!(pd.homomorphism_residual < 1e-8);

        // f = x + y² at y = 1: gradient (1, 2, 0) — the vertical column
        // dies under the dilation scaling.
        let f = scalar_map_by_name(&alg, "x-plus-ysq").unwrap();
        let x = alg.point(vec![0.4, 1.0, -0.3]).unwrap();
        let pd = pansu_differential(&alg, &f, &x, &sched).unwrap();
        assert_abs_diff_eq!(pd.matrix[0][0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(pd.matrix[0][1], 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(pd.matrix[0][2], 0.0, epsilon = 1e-7);

        // An h-homomorphism is its own differential, exactly.
        let line = GradedAlgebra::new(vec![1], &[]).unwrap();
        let hom = SmoothMap::new("hom".into(), line, |p| {
            Ok(Point::raw(vec![0.7 * p.coords()[0] - 0.3 * p.coords()[1]]))
        });
        let pd = pansu_differential(&alg, &hom, &x, &sched).unwrap();
        assert_abs_diff_eq!(pd.matrix[0][0], 0.7, epsilon = 1e-8);
        assert_abs_diff_eq!(pd.matrix[0][1], -0.3, epsilon = 1e-8);
        assert!(pd.homomorphism_residual < 1e-8 && pd.homogeneity_residual < 1e-8);
    }

    #[test]
    fn horizontal_and_vertical_jacobians() {
        let alg = fixtures::heisenberg1();
        let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
        let rows = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let (jh, jv) = jacobians_jh_jv(&alg, &rows, &v).unwrap();
        assert_abs_diff_eq!(jh, 1.0);
        assert_abs_diff_eq!(jv, 1.0);

        let rows = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 0.0]);
        let (jh, jv) = jacobians_jh_jv(&alg, &rows, &v).unwrap();
        assert_abs_diff_eq!(jh, 5.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(jv, 1.0, epsilon = 1e-12);

        // Rows orthogonal to V: no vertical Jacobian.
        let rows = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]);
        let (_, jv) = jacobians_jh_jv(&alg, &rows, &v).unwrap();
        assert_abs_diff_eq!(jv, 0.0);
    }

    #[test]
    fn implicit_solve_parametrizes_level_sets() {
        let (alg, couple) = h1_couple();
        let f = scalar_map_by_name(&alg, "coord:1").unwrap();
        let w = alg.point(vec![0.0, 0.8, -0.1]).unwrap();
        let phi = solve_implicit(&alg, &f, &couple, &w, 50).unwrap();
        assert_abs_diff_eq!(phi.norm_euclid(), 0.0, epsilon = 1e-10);

        let f = scalar_map_by_name(&alg, "x-plus-ysq").unwrap();
        for y in [-1.5, -0.5, 0.4, 1.0, 2.0] {
            let w = alg.point(vec![0.0, y, 0.3]).unwrap();
            let phi = solve_implicit(&alg, &f, &couple, &w, 50).unwrap();
            assert_abs_diff_eq!(phi.coords()[0], -y * y, epsilon = 1e-9);
            // Forward check on the graph point.
            let g = alg.multiply(&w, &phi);
            assert!(f.eval(&g).unwrap().coords()[0].abs() <= 1e-10);
        }
    }

    #[test]
    fn level_set_ratio_equals_minors_route() {
        let alg = fixtures::heisenberg1();
        let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
        let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let f = scalar_map_by_name(&alg, "x-plus-ysq").unwrap();
        // Point on {x + y² = 0} at y = 1.
        let x = alg.point(vec![-1.0, 1.0, 0.4]).unwrap();
        let ratio = level_set_jacobian_ratio(&alg, &f, &v, &w, &x).unwrap();
        let minors = graph::jacobian_minors(&DMatrix::from_row_slice(1, 2, &[-2.0, 0.0]));
        assert_abs_diff_eq!(ratio, 5.0f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(ratio, minors, epsilon = 1e-6);

        // Scaling f leaves the ratio unchanged.
        let line = GradedAlgebra::new(vec![1], &[]).unwrap();
        let scaled = SmoothMap::new("3f".into(), line, {
            let f = f.clone();
            move |p| {
                let v = f.eval(p)?;
                Ok(Point::raw(vec![3.0 * v.coords()[0]]))
            }
        });
        let ratio2 = level_set_jacobian_ratio(&alg, &scaled, &v, &w, &x).unwrap();
        assert_abs_diff_eq!(ratio, ratio2, epsilon = 1e-6);

        let f1 = scalar_map_by_name(&alg, "coord:1").unwrap();
        let x0 = alg.point(vec![0.0, 0.3, 0.0]).unwrap();
        assert_abs_diff_eq!(
            level_set_jacobian_ratio(&alg, &f1, &v, &w, &x0).unwrap(),
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn area_check_zero_map_pipeline() {
        let (alg, couple) = h1_couple();
        let zero = map_by_name(&alg, &couple, "zero").unwrap();
        let d = Distance::d_inf();
        let region = CoordBox::new(vec![-0.5; 3], vec![0.5; 3]).unwrap();
        let budget = AreaBudget {
            n_mu: 12_000,
            federer_points: 1,
            t_schedule: (3..=5).map(|k| 0.5f64.powi(k)).collect(),
            centers_per_t: 16,
            n_mc: 600,
            tangent_samples: 3,
            spherical: SphericalBudget {
                coarse_points: 10,
                nm_iters: 25,
                search_samples: 2048,
                final_budget: 60_000,
            },
        };
        let report = area_check(&alg, &zero, &d, &region, &budget, 21).unwrap();
        assert!(report.rotationally_symmetric);
        assert!(report.additivity_gap <= 3.0 * report.additivity_se + 0.02);
        let implied = report.implied_spherical.unwrap();
        // Tautological wiring identity: implied · β̄ = μ.
        assert_abs_diff_eq!(implied * report.beta_mean, report.mu.value, epsilon = 1e-9);
        assert_eq!(report.federer.len(), 1);
        assert!(report.federer[0].relative_gap < 0.15);
    }
}
