//! Multivector algebra over the fixed ambient scalar product: wedge
//! products, orienting unit multivectors of subspaces, the Hodge star, and
//! the wedge ratios behind every Jacobian in the library.
//!
//! Coefficients are stored densely per strictly increasing index tuple; the
//! ambient dimension stays small (desk scale), so clarity wins over sparse
//! compression.

use crate::splitting::HomogeneousSubgroup;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// A k-vector over R^q: a map from strictly increasing 0-based index tuples
/// to coefficients. The ambient basis is orthonormal, so
/// `‖η‖² = Σ coeff²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    ambient_dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<u8>, f64>,
}

/// Sign of the permutation sorting `indices` (which must have no
/// duplicates), via inversion count.
fn permutation_sign(indices: &[u8]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..indices.len() {
        for j in (i + 1)..indices.len() {
            if indices[i] > indices[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Multivector {
    pub fn zero(ambient_dim: usize, degree: usize) -> Self {
        Multivector { ambient_dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn scalar(ambient_dim: usize, value: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if value != 0.0 {
            coeffs.insert(Vec::new(), value);
        }
        Multivector { ambient_dim, degree: 0, coeffs }
    }

    /// Degree-1 multivector from an ambient coordinate vector.
    pub fn from_vector(coords: &[f64]) -> Self {
        let mut coeffs = BTreeMap::new();
        for (i, &c) in coords.iter().enumerate() {
            if c != 0.0 {
                coeffs.insert(vec![i as u8], c);
            }
        }
        Multivector { ambient_dim: coords.len(), degree: 1, coeffs }
    }

    /// `i`-th basis vector (1-based) as a 1-vector.
    pub fn basis_vector(ambient_dim: usize, i: usize) -> Result<Self> {
        if i == 0 || i > ambient_dim {
            return Err(Error::IndexOutOfRange { index: i, dim: ambient_dim });
        }
        let mut coords = vec![0.0; ambient_dim];
        coords[i - 1] = 1.0;
        Ok(Self::from_vector(&coords))
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient on a strictly increasing 1-based index tuple.
    pub fn coeff(&self, indices: &[usize]) -> f64 {
        let key: Vec<u8> = indices.iter().map(|&i| (i - 1) as u8).collect();
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    /// Iterates (1-based increasing tuple, coefficient) pairs.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs.iter().map(|(k, &v)| (k.iter().map(|&i| i as usize + 1).collect(), v))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, v)| (k.clone(), v * factor)).collect();
        Multivector { ambient_dim: self.ambient_dim, degree: self.degree, coeffs }
    }

    pub fn add(&self, other: &Multivector) -> Result<Self> {
        if self.ambient_dim != other.ambient_dim || self.degree != other.degree {
            return Err(Error::DimensionMismatch { expected: self.degree, got: other.degree });
        }
        let mut coeffs = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            let entry = coeffs.entry(k.clone()).or_insert(0.0);
            *entry += v;
            if *entry == 0.0 {
                coeffs.remove(k);
            }
        }
        Ok(Multivector { ambient_dim: self.ambient_dim, degree: self.degree, coeffs })
    }

    /// Scalar product against another multivector of the same degree.
    pub fn inner(&self, other: &Multivector) -> f64 {
        self.coeffs
            .iter()
            .filter_map(|(k, v)| other.coeffs.get(k).map(|w| v * w))
            .sum()
    }

    /// Graded-anticommutative wedge product. Errors when the degrees sum
    /// beyond the ambient dimension.
    pub fn wedge(&self, other: &Multivector) -> Result<Multivector> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, got: other.ambient_dim });
        }
        let degree = self.degree + other.degree;
        if degree > self.ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "wedge degree {degree} exceeds ambient dimension {}",
                self.ambient_dim
            )));
        }
        let mut coeffs: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (ka, va) in &self.coeffs {
            for (kb, vb) in &other.coeffs {
                if ka.iter().any(|i| kb.contains(i)) {
                    continue;
                }
                let mut merged: Vec<u8> = ka.iter().chain(kb.iter()).copied().collect();
                let sign = permutation_sign(&merged);
                merged.sort_unstable();
                let entry = coeffs.entry(merged).or_insert(0.0);
                *entry += sign * va * vb;
            }
        }
        coeffs.retain(|_, v| *v != 0.0);
        Ok(Multivector { ambient_dim: self.ambient_dim, degree, coeffs })
    }

    /// Hodge star with respect to a unit orientation q-vector `e`:
    /// the unique (q−k)-vector with `ξ ∧ ∗η = ⟨ξ, η⟩ e` for all k-vectors ξ.
    pub fn hodge_star(&self, orientation: &Multivector) -> Result<Multivector> {
        let q = self.ambient_dim;
        if orientation.ambient_dim != q
            || orientation.degree != q
            || (orientation.norm() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidParameter("orientation must be a unit top-degree vector".into()));
        }
        let or_sign = orientation.coeffs.values().next().copied().unwrap_or(0.0);
        let mut coeffs: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (k, &v) in &self.coeffs {
            let complement: Vec<u8> = (0..q as u8).filter(|i| !k.contains(i)).collect();
            // e_K ∧ e_{K^c} = sign · e_{1..q}; then ∗e_K = sign·or_sign·e_{K^c}
            // satisfies e_K ∧ ∗e_K = ⟨e_K, e_K⟩ e.
            let concat: Vec<u8> = k.iter().chain(complement.iter()).copied().collect();
            let sign = permutation_sign(&concat);
            let entry = coeffs.entry(complement).or_insert(0.0);
            *entry += sign * or_sign * v;
        }
        coeffs.retain(|_, v| *v != 0.0);
        Ok(Multivector { ambient_dim: q, degree: q - self.degree, coeffs })
    }
}

/// Wedge of an orthonormalized basis of the span of `vectors`: a unit simple
/// multivector, unique up to sign. The sign is canonicalized so the
/// lexicographically first nonzero coefficient is positive.
pub fn orienting_unit_of_span(vectors: &[Vec<f64>]) -> Result<Multivector> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("empty span has no orienting unit".into()));
    }
    let q = vectors[0].len();
    // Gram–Schmidt with reorthogonalization; drops dependent vectors.
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.len() != q {
            return Err(Error::DimensionMismatch { expected: q, got: v.len() });
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &ortho {
                let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= dot * bi;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            for x in &mut w {
                *x /= norm;
            }
            ortho.push(w);
        }
    }
    if ortho.is_empty() {
        return Err(Error::InvalidParameter("span is numerically zero-dimensional".into()));
    }
    let mut unit = Multivector::from_vector(&ortho[0]);
    for b in &ortho[1..] {
        unit = unit.wedge(&Multivector::from_vector(b))?;
    }
    canonicalize_sign(&mut unit);
    Ok(unit)
}

/// Orienting unit multivector of a homogeneous subgroup (its stored basis is
/// already orthonormal).
pub fn orienting_unit(sub: &HomogeneousSubgroup) -> Result<Multivector> {
    orienting_unit_of_span(sub.basis())
}

fn canonicalize_sign(m: &mut Multivector) {
    if let Some((_, &first)) = m.coeffs.iter().next() {
        if first < 0.0 {
            for v in m.coeffs.values_mut() {
                *v = -*v;
            }
        }
    }
}

/// The factor `|V∧U| / |V∧W|` carried by the restricted projection
/// `π_{W,U}`: it rescales the (q−p)-dimensional Hausdorff measure of Borel
/// sets of U into measures of their W-images.
pub fn wedge_ratio(
    v: &HomogeneousSubgroup,
    w: &HomogeneousSubgroup,
    u: &HomogeneousSubgroup,
) -> Result<f64> {
    let v_unit = orienting_unit(v)?;
    let w_unit = orienting_unit(w)?;
    let u_unit = orienting_unit(u)?;
    let denom = v_unit.wedge(&w_unit)?.norm();
    if denom < 1e-12 {
        return Err(Error::InvalidCouple("|V∧W| vanishes: subgroups are not complementary".into()));
    }
    Ok(v_unit.wedge(&u_unit)?.norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_mv(q: usize, k: usize, r: &mut rand_chacha::ChaCha8Rng) -> Multivector {
        // Dense random k-vector built from wedges of random 1-vectors plus a sum.
        let mut out = Multivector::zero(q, k);
        for _ in 0..3 {
            let mut term = Multivector::scalar(q, r.random_range(-1.0..1.0));
            for _ in 0..k {
                let coords: Vec<f64> = (0..q).map(|_| r.random_range(-1.0..1.0)).collect();
                term = term.wedge(&Multivector::from_vector(&coords)).unwrap();
            }
            out = out.add(&term).unwrap();
        }
        out
    }

    #[test]
    fn wedge_basics() {
        let e1 = Multivector::basis_vector(3, 1).unwrap();
        let e2 = Multivector::basis_vector(3, 2).unwrap();
        let w = e1.wedge(&e2).unwrap();
        assert_abs_diff_eq!(w.coeff(&[1, 2]), 1.0);
        assert_abs_diff_eq!(e1.wedge(&e1).unwrap().norm(), 0.0);
        // (e1 + e2) ∧ e2 = e1∧e2.
        let sum = e1.add(&e2).unwrap();
        let w2 = sum.wedge(&e2).unwrap();
        assert_eq!(w2, w);
        // Anticommutativity of 1-vectors.
        let w3 = e2.wedge(&e1).unwrap();
        assert_abs_diff_eq!(w3.coeff(&[1, 2]), -1.0);
        // Degree overflow errors.
        assert!(w.wedge(&w).is_err());
    }

    #[test]
    fn wedge_is_associative_and_multilinear() {
        let mut r = crate::rng::stream(5, &["exterior"]);
        for _ in 0..50 {
            let q = 5;
            let a: Vec<f64> = (0..q).map(|_| r.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..q).map(|_| r.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..q).map(|_| r.random_range(-1.0..1.0)).collect();
            let (ma, mb, mc) = (
                Multivector::from_vector(&a),
                Multivector::from_vector(&b),
                Multivector::from_vector(&c),
            );
            let left = ma.wedge(&mb).unwrap().wedge(&mc).unwrap();
            let right = ma.wedge(&mb.wedge(&mc).unwrap()).unwrap();
            for (k, v) in left.terms() {
                assert_abs_diff_eq!(v, right.coeff(&k), epsilon = 1e-12);
            }
            // Bilinearity in the first slot.
            let s = r.random_range(-2.0..2.0);
            let scaled = ma.scale(s).add(&mb).unwrap().wedge(&mc).unwrap();
            let expanded = ma.wedge(&mc).unwrap().scale(s).add(&mb.wedge(&mc).unwrap()).unwrap();
            for (k, v) in scaled.terms() {
                assert_abs_diff_eq!(v, expanded.coeff(&k), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn orienting_units_of_fixture_subspaces() {
        let h1 = fixtures::heisenberg1();
        let v = fixtures::horizontal_subgroup("heisenberg1", &h1).unwrap();
        let unit = orienting_unit(&v).unwrap();
        assert_abs_diff_eq!(unit.coeff(&[1]), 1.0);

        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        let unit = orienting_unit(&w).unwrap();
        assert_abs_diff_eq!(unit.coeff(&[2, 3]), 1.0);

        // U = span((1,1,0)/√2, e3): ±(e1∧e3 + e2∧e3)/√2.
        let unit = orienting_unit_of_span(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(unit.coeff(&[1, 3]), r, epsilon = 1e-12);
        assert_abs_diff_eq!(unit.coeff(&[2, 3]), r, epsilon = 1e-12);
        assert_abs_diff_eq!(unit.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orienting_unit_is_unit_norm_on_random_spans() {
        let mut r = crate::rng::stream(9, &["orient"]);
        for _ in 0..40 {
            let vectors: Vec<Vec<f64>> =
                (0..3).map(|_| (0..5).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
            let unit = orienting_unit_of_span(&vectors).unwrap();
            assert_abs_diff_eq!(unit.norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn hodge_star_identities() {
        let q = 3;
        let e = orienting_unit_of_span(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let e1 = Multivector::basis_vector(q, 1).unwrap();
        let star = e1.hodge_star(&e).unwrap();
        assert_abs_diff_eq!(star.coeff(&[2, 3]), 1.0);

        let mut r = crate::rng::stream(2, &["hodge"]);
        for k in 1..q {
            for _ in 0..30 {
                let eta = random_mv(q, k, &mut r);
                let star = eta.hodge_star(&e).unwrap();
                // Isometry.
                assert_abs_diff_eq!(star.norm(), eta.norm(), epsilon = 1e-12);
                // Defining identity against random ξ of the same degree.
                let xi = random_mv(q, k, &mut r);
                let lhs = xi.wedge(&star).unwrap();
                let expected = xi.inner(&eta);
                assert_abs_diff_eq!(lhs.coeff(&[1, 2, 3]), expected, epsilon = 1e-12);
                // Double star: ∗∗η = (−1)^{k(q−k)} η.
                let twice = star.hodge_star(&e).unwrap();
                let sign = if (k * (q - k)) % 2 == 0 { 1.0 } else { -1.0 };
                for (key, v) in eta.terms() {
                    assert_abs_diff_eq!(twice.coeff(&key), sign * v, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn wedge_ratio_closed_form() {
        let h1 = fixtures::heisenberg1();
        let v = fixtures::horizontal_subgroup("heisenberg1", &h1).unwrap();
        let w = fixtures::vertical_subgroup("heisenberg1", &h1).unwrap();
        // U = W gives 1.
        assert_abs_diff_eq!(wedge_ratio(&v, &w, &w).unwrap(), 1.0, epsilon = 1e-12);
        for a in [0.0, 0.5, 1.0, 2.0, -3.0] {
            let u = HomogeneousSubgroup::new(&h1, &[vec![a, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
            let ratio = wedge_ratio(&v, &w, &u).unwrap();
            assert_abs_diff_eq!(ratio, 1.0 / (1.0 + a * a).sqrt(), epsilon = 1e-12);
            // Reciprocal symmetry.
            let inv = wedge_ratio(&v, &u, &w).unwrap();
            assert_abs_diff_eq!(ratio * inv, 1.0, epsilon = 1e-12);
        }
        // |V∧W| = 0 must be flagged.
        let parallel = HomogeneousSubgroup::new(&h1, &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(wedge_ratio(&v, &w, &parallel).is_ok());
        assert!(wedge_ratio(&v, &parallel, &w).is_err());
    }
}
