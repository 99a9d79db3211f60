//! JSON documents for elements, functionals, maps, families and cone maps.
//!
//! Complex scalars are `[re, im]`, matrices are row-major arrays of rows.
//! Parse failures report the line and column from the JSON reader; shape
//! failures name the offending field.

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element};
use crate::cpmaps::{map_from_kraus, SuperOperator};
use crate::duality::Functional;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub blocks: Vec<usize>,
}

impl AlgebraDoc {
    pub fn of(a: &Algebra) -> Self {
        Self {
            blocks: a.blocks().to_vec(),
        }
    }

    pub fn to_algebra(&self, field: &str) -> Result<Algebra> {
        Algebra::new(&self.blocks).map_err(|e| Error::Parse(format!("{field}: {e}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementDoc {
    pub algebra: AlgebraDoc,
    pub data: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Superoperator,
    Kraus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapDoc {
    pub domain: AlgebraDoc,
    pub codomain: AlgebraDoc,
    pub repr: Repr,
    /// One matrix for `superoperator`, a list of matrices for `kraus`.
    pub data: serde_json::Value,
}

/// A family file: either the family of a concrete map or a seeded builtin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyDoc {
    FamilyOf {
        family_of: MapDoc,
        #[serde(default)]
        truncation: Option<usize>,
    },
    Builtin {
        builtin: String,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        truncation: Option<usize>,
    },
}

/// A cone-map file: the cone map induced by a concrete map, or a seeded builtin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConeDoc {
    ConeOf {
        cone_of: MapDoc,
    },
    Builtin {
        builtin: String,
        #[serde(default)]
        seed: u64,
    },
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, field: &str) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(Error::Parse(format!(
            "{field}: row {i} has {} entries, expected {c}",
            row.len()
        )));
    }
    Ok(CMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn parse_value<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn to_pretty<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize") + "\n"
}

impl ElementDoc {
    pub fn of(x: &Element) -> Self {
        Self {
            algebra: AlgebraDoc::of(x.algebra()),
            data: x.blocks().iter().map(matrix_to_json).collect(),
            role: None,
        }
    }

    pub fn to_element(&self) -> Result<Element> {
        let algebra = self.algebra.to_algebra("algebra")?;
        if self.data.len() != algebra.num_blocks() {
            return Err(Error::Parse(format!(
                "data: {} blocks given, algebra {algebra} has {}",
                self.data.len(),
                algebra.num_blocks()
            )));
        }
        let blocks = self
            .data
            .iter()
            .enumerate()
            .map(|(b, m)| matrix_from_json(m, &format!("data[{b}]")))
            .collect::<Result<Vec<_>>>()?;
        Element::new(algebra, blocks).map_err(|e| Error::Parse(format!("data: {e}")))
    }
}

pub fn element_to_json(x: &Element) -> String {
    to_pretty(&ElementDoc::of(x))
}

pub fn parse_element(text: &str) -> Result<Element> {
    parse_value::<ElementDoc>(text)?.to_element()
}

pub fn functional_to_json(phi: &Functional) -> String {
    let mut doc = ElementDoc::of(phi.density());
    doc.role = Some("functional".into());
    to_pretty(&doc)
}

/// Accepts a functional document; a missing `role` is read as a density.
pub fn parse_functional(text: &str) -> Result<Functional> {
    let doc: ElementDoc = parse_value(text)?;
    match doc.role.as_deref() {
        None | Some("functional") => Ok(Functional::from_density(doc.to_element()?)),
        Some(other) => Err(Error::Parse(format!("role: expected \"functional\", got {other:?}"))),
    }
}

impl MapDoc {
    pub fn superoperator(f: &SuperOperator) -> Self {
        Self {
            domain: AlgebraDoc::of(f.domain()),
            codomain: AlgebraDoc::of(f.codomain()),
            repr: Repr::Superoperator,
            data: serde_json::to_value(matrix_to_json(f.matrix())).expect("matrices serialize"),
        }
    }

    pub fn kraus(domain: &Algebra, codomain: &Algebra, ops: &[CMatrix]) -> Self {
        let mats: Vec<JsonMatrix> = ops.iter().map(matrix_to_json).collect();
        Self {
            domain: AlgebraDoc::of(domain),
            codomain: AlgebraDoc::of(codomain),
            repr: Repr::Kraus,
            data: serde_json::to_value(mats).expect("matrices serialize"),
        }
    }

    pub fn to_map(&self) -> Result<SuperOperator> {
        let domain = self.domain.to_algebra("domain")?;
        let codomain = self.codomain.to_algebra("codomain")?;
        match self.repr {
            Repr::Superoperator => {
                let rows: JsonMatrix = serde_json::from_value(self.data.clone())
                    .map_err(|e| Error::Parse(format!("data: {e}")))?;
                let m = matrix_from_json(&rows, "data")?;
                SuperOperator::new(domain, codomain, m).map_err(|e| Error::Parse(format!("data: {e}")))
            }
            Repr::Kraus => {
                let mats: Vec<JsonMatrix> = serde_json::from_value(self.data.clone())
                    .map_err(|e| Error::Parse(format!("data: {e}")))?;
                let ops = mats
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix_from_json(m, &format!("data[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                map_from_kraus(&domain, &codomain, &ops).map_err(|e| Error::Parse(format!("data: {e}")))
            }
        }
    }
}

pub fn map_to_json(f: &SuperOperator) -> String {
    to_pretty(&MapDoc::superoperator(f))
}

pub fn kraus_to_json(domain: &Algebra, codomain: &Algebra, ops: &[CMatrix]) -> String {
    to_pretty(&MapDoc::kraus(domain, codomain, ops))
}

pub fn parse_map(text: &str) -> Result<SuperOperator> {
    parse_value::<MapDoc>(text)?.to_map()
}

pub fn parse_family(text: &str) -> Result<FamilyDoc> {
    parse_value(text)
}

pub fn parse_cone(text: &str) -> Result<ConeDoc> {
    parse_value(text)
}

pub fn family_to_json(doc: &FamilyDoc) -> String {
    to_pretty(doc)
}

pub fn cone_to_json(doc: &ConeDoc) -> String {
    to_pretty(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{kraus_decomposition, transpose_map};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn element_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = sample::element(&mut rng, &Algebra::new(&[2, 1]).unwrap());
        assert_eq!(parse_element(&element_to_json(&x)).unwrap(), x);
    }

    #[test]
    fn element_field_names() {
        let text = r#"{"algebra": {"blocks": [1, 1]}, "data": [[[[1, 0]]], [[[0, -2]]]]}"#;
        let x = parse_element(text).unwrap();
        assert_eq!(x.block(1)[(0, 0)], C64::new(0.0, -2.0));
        let v: serde_json::Value = serde_json::from_str(&element_to_json(&x)).unwrap();
        assert!(v.get("algebra").unwrap().get("blocks").is_some());
        assert!(v.get("data").is_some());
    }

    #[test]
    fn malformed_documents() {
        let truncated = r#"{"algebra": {"blocks": [2]}, "data": [[[1,0],"#;
        match parse_element(truncated) {
            Err(Error::Parse(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let ragged = r#"{"algebra": {"blocks": [2]}, "data": [[[[1,0],[0,0]], [[1,0]]]]}"#;
        assert!(matches!(parse_element(ragged), Err(Error::Parse(m)) if m.contains("data[0]")));
        let wrong_count = r#"{"algebra": {"blocks": [1, 1]}, "data": [[[[1,0]]]]}"#;
        assert!(parse_element(wrong_count).is_err());
        let zero_block = r#"{"algebra": {"blocks": [0]}, "data": [[]]}"#;
        assert!(matches!(parse_element(zero_block), Err(Error::Parse(m)) if m.starts_with("algebra")));
    }

    #[test]
    fn map_round_trips() {
        let t = transpose_map(2).unwrap();
        assert_eq!(parse_map(&map_to_json(&t)).unwrap(), t);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (Algebra::new(&[2]).unwrap(), Algebra::new(&[1, 1]).unwrap());
        let f = sample::cp_map(&mut rng, &a, &b, 2);
        let ops = kraus_decomposition(&f, 1e-9).unwrap();
        let back = parse_map(&kraus_to_json(&a, &b, &ops)).unwrap();
        assert!(back.distance(&f).unwrap() < 1e-10);
    }

    #[test]
    fn functional_documents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = sample::positive_element(&mut rng, &Algebra::matrix(2));
        let phi = Functional::from_density(rho);
        let text = functional_to_json(&phi);
        assert!(text.contains("\"role\": \"functional\""));
        assert_eq!(parse_functional(&text).unwrap(), phi);
        assert!(parse_functional(&text.replace("functional", "state")).is_err());
    }

    #[test]
    fn family_and_cone_documents() {
        let f = transpose_map(2).unwrap();
        let doc = FamilyDoc::FamilyOf {
            family_of: MapDoc::superoperator(&f),
            truncation: Some(3),
        };
        match parse_family(&family_to_json(&doc)).unwrap() {
            FamilyDoc::FamilyOf { family_of, truncation } => {
                assert_eq!(truncation, Some(3));
                assert_eq!(family_of.to_map().unwrap(), f);
            }
            other => panic!("{other:?}"),
        }
        match parse_family(r#"{"builtin": "twist-transpose", "seed": 4}"#).unwrap() {
            FamilyDoc::Builtin { builtin, seed, truncation } => {
                assert_eq!((builtin.as_str(), seed, truncation), ("twist-transpose", 4, None));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_cone(r#"{"builtin": "frobenius"}"#).unwrap(), ConeDoc::Builtin { seed: 0, .. }));
        let cone = ConeDoc::ConeOf { cone_of: MapDoc::superoperator(&f) };
        assert!(matches!(parse_cone(&cone_to_json(&cone)).unwrap(), ConeDoc::ConeOf { .. }));
    }
}
