//! Built-in example groups and splittings used by tests, benchmarks and the
//! command line: first and second Heisenberg groups and the Engel group,
//! each with its standard vertical/horizontal complementary couple.

use crate::algebra::{BracketEntry, GradedAlgebra};
use crate::splitting::HomogeneousSubgroup;
use crate::{Error, Result};

fn entry(i: usize, j: usize, k: usize, c: f64) -> BracketEntry {
    BracketEntry { i, j, k, c }
}

/// First Heisenberg group: layers (2, 1), `[e1, e2] = e3`.
pub fn heisenberg1() -> GradedAlgebra {
    GradedAlgebra::new(vec![2, 1], &[entry(1, 2, 3, 1.0)]).expect("static fixture")
}

/// Second Heisenberg group: layers (4, 1), `[e1, e2] = [e3, e4] = e5`.
pub fn heisenberg2() -> GradedAlgebra {
    GradedAlgebra::new(vec![4, 1], &[entry(1, 2, 5, 1.0), entry(3, 4, 5, 1.0)]).expect("static fixture")
}

/// Engel group: layers (2, 1, 1), `[e1, e2] = e3`, `[e1, e3] = e4`.
pub fn engel() -> GradedAlgebra {
    GradedAlgebra::new(vec![2, 1, 1], &[entry(1, 2, 3, 1.0), entry(1, 3, 4, 1.0)]).expect("static fixture")
}

/// Algebra fixture by name: `heisenberg1`, `heisenberg2`, `engel`.
pub fn algebra_by_name(name: &str) -> Result<GradedAlgebra> {
    match name {
        "heisenberg1" | "h1" => Ok(heisenberg1()),
        "heisenberg2" | "h2" => Ok(heisenberg2()),
        "engel" => Ok(engel()),
        other => Err(Error::UnknownFixture(other.into())),
    }
}

fn span(alg: &GradedAlgebra, indices: &[usize]) -> HomogeneousSubgroup {
    let dim = alg.dim();
    let vectors: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| {
            let mut v = vec![0.0; dim];
            v[i - 1] = 1.0;
            v
        })
        .collect();
    HomogeneousSubgroup::new(alg, &vectors).expect("static fixture")
}

/// Standard vertical subgroup of a fixture: the normal factor `W` of the
/// vertical/horizontal couple.
pub fn vertical_subgroup(name: &str, alg: &GradedAlgebra) -> Result<HomogeneousSubgroup> {
    match name {
        "heisenberg1" | "h1" => Ok(span(alg, &[2, 3])),
        "heisenberg2" | "h2" => Ok(span(alg, &[2, 4, 5])),
        "engel" => Ok(span(alg, &[2, 3, 4])),
        other => Err(Error::UnknownFixture(other.into())),
    }
}

/// Standard horizontal complement `V` of [`vertical_subgroup`].
pub fn horizontal_subgroup(name: &str, alg: &GradedAlgebra) -> Result<HomogeneousSubgroup> {
    match name {
        "heisenberg1" | "h1" | "engel" => Ok(span(alg, &[1])),
        "heisenberg2" | "h2" => Ok(span(alg, &[1, 3])),
        other => Err(Error::UnknownFixture(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shapes() {
        let h1 = heisenberg1();
        assert_eq!(h1.dim(), 3);
        assert_eq!(h1.hom_dim(), 4);
        let h2 = heisenberg2();
        assert_eq!(h2.dim(), 5);
        assert_eq!(h2.hom_dim(), 6);
        let engel = engel();
        assert_eq!(engel.dim(), 4);
        assert_eq!(engel.step(), 3);
        assert_eq!(engel.hom_dim(), 7);
    }

    #[test]
    fn unknown_fixture_errors() {
        assert!(algebra_by_name("octonions").is_err());
    }
}
