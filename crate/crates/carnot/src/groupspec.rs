//! Group specification files and fixture resolution.
//!
//! A group spec is a JSON document with `layers: [n1, …]` and
//! `brackets: [{i, j, k, c}, …]` (1-based indices into the graded basis),
//! optionally a `distance: {kind, …}` and named `subgroups` given as lists
//! of ambient basis vectors. The built-in fixtures `heisenberg1`,
//! `heisenberg2` and `engel` are addressable by name instead of a path and
//! carry the standard `vertical`/`horizontal` subgroups.

use crate::algebra::{BracketEntry, GradedAlgebra};
use crate::fixtures;
use crate::metric::Distance;
use crate::splitting::{ComplementaryCouple, HomogeneousSubgroup};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpecFile {
    #[serde(default)]
    pub name: Option<String>,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketEntry>,
    #[serde(default)]
    pub distance: Option<Distance>,
    #[serde(default)]
    pub subgroups: BTreeMap<String, Vec<Vec<f64>>>,
}

impl GroupSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_algebra(&self) -> Result<GradedAlgebra> {
        GradedAlgebra::new(self.layers.clone(), &self.brackets)
    }
}

/// A group spec with everything constructed: the algebra, the distance
/// (d_inf unless the spec says otherwise) and all named subgroups.
#[derive(Clone, Debug)]
pub struct ResolvedGroup {
    pub name: String,
    pub algebra: GradedAlgebra,
    pub distance: Distance,
    pub subgroups: BTreeMap<String, HomogeneousSubgroup>,
}

impl ResolvedGroup {
    pub fn subgroup(&self, name: &str) -> Result<&HomogeneousSubgroup> {
        self.subgroups.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.subgroups.keys().map(|s| s.as_str()).collect();
            Error::UnknownFixture(format!(
                "subgroup {name:?} (available: {})",
                known.join(", ")
            ))
        })
    }

    pub fn couple(&self, w: &str, v: &str) -> Result<ComplementaryCouple> {
        ComplementaryCouple::new(&self.algebra, self.subgroup(w)?.clone(), self.subgroup(v)?.clone())
    }
}

/// Resolves a fixture name or a spec-file path.
pub fn resolve(name_or_path: &str) -> Result<ResolvedGroup> {
    if let Ok(alg) = fixtures::algebra_by_name(name_or_path) {
        let mut subgroups = BTreeMap::new();
        subgroups.insert("vertical".to_string(), fixtures::vertical_subgroup(name_or_path, &alg)?);
        subgroups
            .insert("horizontal".to_string(), fixtures::horizontal_subgroup(name_or_path, &alg)?);
        return Ok(ResolvedGroup {
            name: name_or_path.to_string(),
            algebra: alg,
            distance: Distance::d_inf(),
            subgroups,
        });
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::UnknownFixture(format!(
            "{name_or_path:?} is neither a built-in group nor an existing file"
        )));
    }
    let spec = GroupSpecFile::load(path)?;
    let algebra = spec.to_algebra()?;
    let mut subgroups = BTreeMap::new();
    for (name, vectors) in &spec.subgroups {
        let sub = HomogeneousSubgroup::new(&algebra, vectors)?;
        subgroups.insert(name.clone(), sub);
    }
    Ok(ResolvedGroup {
        name: spec
            .name
            .clone()
            .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned()),
        algebra,
        distance: spec.distance.clone().unwrap_or_else(Distance::d_inf),
        subgroups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const H1_JSON: &str = r#"{
        "name": "h1-from-file",
        "layers": [2, 1],
        "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}],
        "distance": {"kind": "cygan_koranyi"},
        "subgroups": {"wall": [[0, 1, 0], [0, 0, 1]]}
    }"#;

    #[test]
    fn file_spec_reproduces_fixture_arithmetic() {
        let spec = GroupSpecFile::parse(H1_JSON).unwrap();
        let alg = spec.to_algebra().unwrap();
        let fixture = fixtures::heisenberg1();
        let x = alg.point(vec![1.0, 2.0, 0.0]).unwrap();
        let y = alg.point(vec![-0.5, 1.0, 3.0]).unwrap();
        let a = alg.multiply(&x, &y);
        let b = fixture.multiply(&x, &y);
        for (u, v) in a.coords().iter().zip(b.coords()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn resolution_paths() {
        let g = resolve("heisenberg1").unwrap();
        assert_eq!(g.algebra.dim(), 3);
        assert!(g.subgroup("vertical").is_ok());
        assert!(g.subgroup("sideways").is_err());
        let couple = g.couple("vertical", "horizontal").unwrap();
        assert_eq!(couple.w().top_dim(), 2);

        assert!(resolve("no-such-group-or-file").is_err());

        let dir = std::env::temp_dir().join("carnot-groupspec-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("h1.json");
        std::fs::write(&path, H1_JSON).unwrap();
        let g = resolve(path.to_str().unwrap()).unwrap();
        assert_eq!(g.name, "h1-from-file");
        assert_eq!(g.distance, Distance::cygan_koranyi());
        assert_eq!(g.subgroup("wall").unwrap().top_dim(), 2);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = GroupSpecFile::parse("{\"layers\": [2, 1").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line") && msg.contains("column"), "got {msg}");
    }
}
