//! Graded Lie algebra arithmetic: brackets from structure constants, the
//! truncated BCH group law, dilations, layer projections and left-invariant
//! vector fields.
//!
//! A [`GradedAlgebra`] is fixed by its layer dimensions `(n_1, …, n_ι)` and a
//! sparse table of structure constants `[e_i, e_j] = Σ_k c_{ij}^k e_k` over a
//! graded basis. Group elements are [`Point`]s in exponential coordinates of
//! the first kind, multiplied through the BCH polynomial truncated at the
//! step, which is exact for nilpotent groups of step ≤ 6.

use crate::bch::{BchTerm, BCH_TERMS, MAX_STEP};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A group element (equivalently, a Lie algebra element) in exponential
/// coordinates over the graded basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Point { coords: vec![0.0; dim] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean norm of the coordinate vector.
    pub fn norm_euclid(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A tangent vector attached to a base point, in ambient coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

/// One sparse structure-constant entry `[e_i, e_j] = … + c · e_k`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: f64,
}

/// A violation found by [`GradedAlgebra::validate`]. Indices are 1-based.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// `c_{ij}^k != -c_{ji}^k`.
    Antisymmetry { i: usize, j: usize, k: usize, lhs: f64, rhs: f64 },
    /// Jacobi residual on the basis triple exceeds 1e-12.
    Jacobi { i: usize, j: usize, k: usize, residual: f64 },
    /// Nonzero `c_{ij}^k` with `layer(k) != layer(i) + layer(j)`.
    Grading { i: usize, j: usize, k: usize, coeff: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Antisymmetry { i, j, k, lhs, rhs } => {
                write!(f, "antisymmetry at ({i},{j},{k}): c_ij^k = {lhs}, c_ji^k = {rhs}")
            }
            Violation::Jacobi { i, j, k, residual } => {
                write!(f, "Jacobi residual {residual:e} on basis triple ({i},{j},{k})")
            }
            Violation::Grading { i, j, k, coeff } => {
                write!(f, "grading: [e{i},e{j}] has component {coeff} on e{k} outside layer(i)+layer(j)")
            }
        }
    }
}

/// Result of checking the graded-Lie-algebra axioms. Violations are report
/// entries, not failures.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid graded Lie algebra")
        } else {
            writeln!(f, "{} violation(s):", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
            Ok(())
        }
    }
}

const JACOBI_TOL: f64 = 1e-12;

/// A graded nilpotent Lie algebra, identified with its simply connected group
/// through exponential coordinates of the first kind.
#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    layer_dims: Vec<usize>,
    /// Cumulative offsets: `offsets[s] = h_s = n_1 + … + n_s`, `offsets[0] = 0`.
    offsets: Vec<usize>,
    dim: usize,
    step: usize,
    hom_dim: usize,
    /// 1-based layer of each (0-based) basis index.
    layer_of: Vec<usize>,
    /// Sparse structure constants: `c[i * dim + j]` lists `(k, c_{ij}^k)`, 0-based.
    c: Vec<Vec<(usize, f64)>>,
    /// Entries exactly as supplied (before antisymmetric completion), 1-based.
    given: Vec<BracketEntry>,
    /// Number of table terms with word length ≤ step.
    bch_cutoff: usize,
}

impl GradedAlgebra {
    /// Builds the algebra from layer dimensions and sparse structure
    /// constants (1-based indices). Entries `(j, i, k)` not explicitly
    /// supplied are completed antisymmetrically from `(i, j, k)`.
    ///
    /// Errors on malformed input: empty or zero layers, step above 6,
    /// out-of-range indices, diagonal entries `[e_i, e_i] != 0`, or duplicate
    /// `(i, j, k)` keys. Axioms (antisymmetry of explicitly supplied pairs,
    /// Jacobi, grading) are *not* enforced here; [`Self::validate`] reports
    /// them.
    pub fn new(layer_dims: Vec<usize>, brackets: &[BracketEntry]) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(Error::InvalidAlgebra("layer dimensions must be positive".into()));
        }
        let step = layer_dims.len();
        if step > MAX_STEP {
            return Err(Error::UnsupportedStep(step));
        }
        let dim: usize = layer_dims.iter().sum();
        let mut offsets = vec![0usize; step + 1];
        for s in 1..=step {
            offsets[s] = offsets[s - 1] + layer_dims[s - 1];
        }
        let mut layer_of = vec![0usize; dim];
        for s in 1..=step {
            for idx in offsets[s - 1]..offsets[s] {
                layer_of[idx] = s;
            }
        }

        let mut table: HashMap<(usize, usize, usize), f64> = HashMap::new();
        for &BracketEntry { i, j, k, c } in brackets {
            for idx in [i, j, k] {
                if idx == 0 || idx > dim {
                    return Err(Error::IndexOutOfRange { index: idx, dim });
                }
            }
            if i == j && c != 0.0 {
                return Err(Error::InvalidAlgebra(format!("[e{i},e{i}] must vanish, got {c}")));
            }
            if table.insert((i, j, k), c).is_some() {
                return Err(Error::InvalidAlgebra(format!("duplicate entry for ({i},{j},{k})")));
            }
        }
        // Antisymmetric completion of pairs the caller left implicit.
        let explicit: Vec<_> = table.keys().copied().collect();
        for (i, j, k) in explicit {
            let c = table[&(i, j, k)];
            table.entry((j, i, k)).or_insert(-c);
        }

        let mut c = vec![Vec::new(); dim * dim];
        for (&(i, j, k), &v) in &table {
            if v != 0.0 {
                c[(i - 1) * dim + (j - 1)].push((k - 1, v));
            }
        }
        for list in &mut c {
            list.sort_by_key(|&(k, _)| k);
        }

        let hom_dim = layer_dims.iter().enumerate().map(|(i, n)| (i + 1) * n).sum();
        let bch_cutoff = BCH_TERMS.iter().take_while(|t| t.word.len() <= step).count();
        Ok(GradedAlgebra {
            layer_dims,
            offsets,
            dim,
            step,
            hom_dim,
            layer_of,
            c,
            given: brackets.to_vec(),
            bch_cutoff,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Homogeneous (Hausdorff) dimension `Q = Σ i · n_i`.
    pub fn hom_dim(&self) -> usize {
        self.hom_dim
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Cumulative offsets `h_0 = 0, h_1, …, h_ι = q`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// 1-based layer of a 0-based basis index.
    pub fn layer_of(&self, idx: usize) -> usize {
        self.layer_of[idx]
    }

    /// Coordinate range of layer `s` (1-based).
    pub fn layer_range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s - 1]..self.offsets[s]
    }

    /// Wraps coordinates as a [`Point`], checking length and finiteness.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: coords.len() });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Point::raw(coords))
    }

    pub fn zero(&self) -> Point {
        Point::zero(self.dim)
    }

    /// `i`-th basis vector as a point (1-based).
    pub fn basis_point(&self, i: usize) -> Result<Point> {
        if i == 0 || i > self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        let mut v = vec![0.0; self.dim];
        v[i - 1] = 1.0;
        Ok(Point::raw(v))
    }

    /// Checks antisymmetry, the Jacobi identity (tolerance 1e-12 on all basis
    /// triples) and the grading axiom `[V_a, V_b] ⊆ V_{a+b}`.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let q = self.dim;
        // Antisymmetry, driven off the supplied entries so that an explicit
        // inconsistent pair is reported at its own indices.
        let mut seen = std::collections::HashSet::new();
        for &BracketEntry { i, j, k, .. } in &self.given {
            let key = (i.min(j), i.max(j), k);
            if !seen.insert(key) {
                continue;
            }
            let lhs = self.constant(i, j, k);
            let rhs = self.constant(j, i, k);
            if (lhs + rhs).abs() > 1e-15 {
                violations.push(Violation::Antisymmetry { i, j, k, lhs, rhs });
            }
        }
        // Grading.
        for i in 1..=q {
            for j in 1..=q {
                for &(k0, v) in &self.c[(i - 1) * q + (j - 1)] {
                    let target = self.layer_of[i - 1] + self.layer_of[j - 1];
                    if self.layer_of[k0] != target {
                        violations.push(Violation::Grading { i, j, k: k0 + 1, coeff: v });
                    }
                }
            }
        }
        // Jacobi on all basis triples.
        let basis: Vec<Vec<f64>> = (0..q)
            .map(|i| {
                let mut v = vec![0.0; q];
                v[i] = 1.0;
                v
            })
            .collect();
        for i in 0..q {
            for j in (i + 1)..q {
                for k in (j + 1)..q {
                    let ab = self.bracket_vec(&basis[i], &basis[j]);
                    let bc = self.bracket_vec(&basis[j], &basis[k]);
                    let ca = self.bracket_vec(&basis[k], &basis[i]);
                    let mut r = self.bracket_vec(&ab, &basis[k]);
                    for (rr, v) in r.iter_mut().zip(self.bracket_vec(&bc, &basis[i])) {
                        *rr += v;
                    }
                    for (rr, v) in r.iter_mut().zip(self.bracket_vec(&ca, &basis[j])) {
                        *rr += v;
                    }
                    let residual = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if residual > JACOBI_TOL {
                        violations.push(Violation::Jacobi { i: i + 1, j: j + 1, k: k + 1, residual });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// `c_{ij}^k` with 1-based indices.
    fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i - 1) * self.dim + (j - 1)]
            .iter()
            .find(|&&(k0, _)| k0 == k - 1)
            .map_or(0.0, |&(_, v)| v)
    }

    fn bracket_vec(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let q = self.dim;
        let mut r = vec![0.0; q];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.c[i * q..(i + 1) * q];
            for (j, &yj) in y.iter().enumerate() {
                if yj == 0.0 {
                    continue;
                }
                for &(k, v) in &row[j] {
                    r[k] += xi * yj * v;
                }
            }
        }
        r
    }

    /// Lie bracket `[x, y]` through the structure constants.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        Ok(self.bracket_vec(x, y))
    }

    /// Evaluates one left-normed BCH bracket word on the pair `(v, w)`.
    fn word_value(&self, term: &BchTerm, v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        let args = [v, w];
        let mut acc = args[term.word[0] as usize].to_vec();
        for &l in &term.word[1..] {
            acc = self.bracket_vec(&acc, args[l as usize]);
            if acc.iter().all(|&x| x == 0.0) {
                return None;
            }
        }
        Some(acc)
    }

    /// Group multiplication `v · w` by the BCH polynomial truncated at the
    /// step. Exact (up to rounding) for this algebra's nilpotency class.
    pub fn multiply(&self, v: &Point, w: &Point) -> Point {
        debug_assert_eq!(v.dim(), self.dim);
        debug_assert_eq!(w.dim(), self.dim);
        let mut z: Vec<f64> = v.coords.iter().zip(&w.coords).map(|(a, b)| a + b).collect();
        for term in &BCH_TERMS[..self.bch_cutoff] {
            if let Some(val) = self.word_value(term, &v.coords, &w.coords) {
                let coeff = term.num as f64 / term.den as f64;
                for (zi, vi) in z.iter_mut().zip(val) {
                    *zi += coeff * vi;
                }
            }
        }
        Point::raw(z)
    }

    /// Group inverse; in exponential coordinates of the first kind this is
    /// coordinate negation.
    pub fn inverse(&self, x: &Point) -> Point {
        Point::raw(x.coords.iter().map(|v| -v).collect())
    }

    /// `x⁻¹ · y`.
    pub fn left_difference(&self, x: &Point, y: &Point) -> Point {
        self.multiply(&self.inverse(x), y)
    }

    /// Dilation `δ_t`: layer `i` scales by `t^i`. Requires `t > 0`.
    pub fn dilate(&self, t: f64, x: &Point) -> Result<Point> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {t}")));
        }
        Ok(self.dilate_unchecked(t, x))
    }

    pub(crate) fn dilate_unchecked(&self, t: f64, x: &Point) -> Point {
        let mut r = x.coords.clone();
        for s in 1..=self.step {
            let f = t.powi(s as i32);
            for idx in self.layer_range(s) {
                r[idx] *= f;
            }
        }
        Point::raw(r)
    }

    /// Layer projection `p̄_j`: keeps layers `1..=j`, zeroes the rest.
    pub fn layer_project(&self, j: usize, x: &Point) -> Result<Point> {
        if j == 0 || j > self.step {
            return Err(Error::LayerOutOfRange { index: j, step: self.step });
        }
        let mut r = x.coords.clone();
        for idx in self.offsets[j]..self.dim {
            r[idx] = 0.0;
        }
        Ok(Point::raw(r))
    }

    /// Left-invariant vector field through direction `b` at the identity:
    /// `X_b(g) = d/ds|₀ g · (s b)`, computed exactly by differentiating the
    /// BCH polynomial (only bracket words linear in the second slot survive).
    pub fn left_invariant_extension(&self, b: &[f64], g: &Point) -> Result<TangentVector> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: b.len() });
        }
        let mut components = b.to_vec();
        for term in &BCH_TERMS[..self.bch_cutoff] {
            if term.word.iter().filter(|&&l| l == 1).count() != 1 {
                continue;
            }
            if let Some(val) = self.word_value(term, &g.coords, b) {
                let coeff = term.num as f64 / term.den as f64;
                for (ci, vi) in components.iter_mut().zip(val) {
                    *ci += coeff * vi;
                }
            }
        }
        Ok(TangentVector { base: g.clone(), components })
    }

    /// Left-invariant field of the `j`-th basis vector (1-based): `X_j(0) = e_j`.
    pub fn left_invariant_field(&self, j: usize, g: &Point) -> Result<TangentVector> {
        let e = self.basis_point(j)?;
        self.left_invariant_extension(e.coords(), g)
    }
}
