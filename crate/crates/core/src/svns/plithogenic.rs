//! Minimal plithogenic structure: the 5-tuple extending scalar neutrosophic
//! evaluations with per-attribute-value memberships and a symmetric
//! contradiction function that vanishes on the diagonal.

use std::collections::BTreeMap;

use super::{SvnsError, Triplet};

/// Aggregator used to recover a scalar triplet from the per-attribute
/// memberships of one element. All variants preserve unit-interval closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    /// Component-wise arithmetic mean.
    #[default]
    Mean,
    /// Component-wise minimum.
    Min,
    /// Component-wise maximum.
    Max,
}

/// The 5-tuple (elements, dominant attribute value, attribute values,
/// membership, contradiction).
///
/// Invariants enforced at construction: the membership map is total over
/// elements × attribute values, the contradiction function is symmetric
/// with zero diagonal, and the dominant attribute is one of the attribute
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct PlithogenicStructure {
    elements: Vec<String>,
    dominant: String,
    attribute_values: Vec<String>,
    membership: BTreeMap<(String, String), Triplet>,
    contradiction: BTreeMap<(String, String), f64>,
}

impl PlithogenicStructure {
    pub fn new(
        elements: Vec<String>,
        dominant: String,
        attribute_values: Vec<String>,
        membership: BTreeMap<(String, String), Triplet>,
        contradiction: BTreeMap<(String, String), f64>,
    ) -> Result<Self, SvnsError> {
        for (idx, v) in attribute_values.iter().enumerate() {
            if attribute_values[..idx].contains(v) {
                return Err(SvnsError::DuplicateAttributeValue(v.clone()));
            }
        }
        if !attribute_values.contains(&dominant) {
            return Err(SvnsError::UnknownDominant(dominant));
        }
        for e in &elements {
            for v in &attribute_values {
                if !membership.contains_key(&(e.clone(), v.clone())) {
                    return Err(SvnsError::MembershipIncomplete {
                        element: e.clone(),
                        attribute_value: v.clone(),
                    });
                }
            }
        }
        let mut canonical = BTreeMap::new();
        for ((a, b), value) in contradiction {
            if !(0.0..=1.0).contains(&value) {
                return Err(SvnsError::ContradictionOutOfRange { a, b, value });
            }
            if a == b && value != 0.0 {
                return Err(SvnsError::ContradictionDiagonal { v: a, value });
            }
            // Unordered pairs share one canonical key, which makes the
            // symmetry requirement hold by construction.
            let key = if a <= b { (a, b) } else { (b, a) };
            canonical.insert(key, value);
        }
        Ok(Self {
            elements,
            dominant,
            attribute_values,
            membership,
            contradiction: canonical,
        })
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn dominant(&self) -> &str {
        &self.dominant
    }

    pub fn attribute_values(&self) -> &[String] {
        &self.attribute_values
    }

    pub fn membership(&self, element: &str, attribute_value: &str) -> Option<&Triplet> {
        self.membership
            .get(&(element.to_string(), attribute_value.to_string()))
    }

    /// Contradiction degree of an unordered pair; 0 on the diagonal and for
    /// pairs never assigned a degree.
    pub fn contradiction(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.contradiction.get(&key).copied().unwrap_or(0.0)
    }

    /// Scalar triplet for one element: the element's memberships aggregated
    /// over the attribute values with the component-wise arithmetic mean.
    pub fn marginal(&self, element: &str) -> Result<Triplet, SvnsError> {
        self.marginal_with(element, Aggregator::Mean)
    }

    pub fn marginal_with(
        &self,
        element: &str,
        aggregator: Aggregator,
    ) -> Result<Triplet, SvnsError> {
        if !self.elements.iter().any(|e| e == element) {
            return Err(SvnsError::UnknownElement(element.to_string()));
        }
        let triplets: Vec<&Triplet> = self
            .attribute_values
            .iter()
            .map(|v| {
                self.membership
                    .get(&(element.to_string(), v.clone()))
                    .expect("membership totality checked at construction")
            })
            .collect();
        let combine = |pick: fn(&Triplet) -> f64| -> f64 {
            let values: Vec<f64> = triplets.iter().map(|t| pick(t)).collect();
            match aggregator {
                Aggregator::Mean => super::mean(&values),
                Aggregator::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
                Aggregator::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        };
        Triplet::new(
            combine(Triplet::t),
            combine(Triplet::i),
            combine(Triplet::f),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn structure(memberships: &[(&str, &str, (f64, f64, f64))]) -> PlithogenicStructure {
        let mut elements: Vec<String> = Vec::new();
        let mut values: Vec<String> = Vec::new();
        let mut map = BTreeMap::new();
        for (e, v, (t, i, f)) in memberships {
            if !elements.contains(&e.to_string()) {
                elements.push(e.to_string());
            }
            if !values.contains(&v.to_string()) {
                values.push(v.to_string());
            }
            map.insert(
                (e.to_string(), v.to_string()),
                Triplet::new(*t, *i, *f).unwrap(),
            );
        }
        let dominant = values[0].clone();
        PlithogenicStructure::new(elements, dominant, values, map, BTreeMap::new()).unwrap()
    }

    #[test]
    fn marginal_of_single_value_is_identity() {
        let p = structure(&[("s", "v", (0.3, 0.6, 0.1))]);
        assert_eq!(
            p.marginal("s").unwrap(),
            Triplet::new(0.3, 0.6, 0.1).unwrap()
        );
    }

    #[test]
    fn marginal_averages_componentwise() {
        let p = structure(&[("s", "a", (1.0, 1.0, 1.0)), ("s", "b", (0.0, 0.0, 0.0))]);
        assert_eq!(
            p.marginal("s").unwrap(),
            Triplet::new(0.5, 0.5, 0.5).unwrap()
        );

        let p = structure(&[
            ("s", "a", (0.2, 0.0, 0.0)),
            ("s", "b", (0.4, 0.0, 0.0)),
            ("s", "c", (0.9, 0.0, 0.0)),
        ]);
        let m = p.marginal("s").unwrap();
        assert!((m.t() - 0.5).abs() < 1e-12, "t = {}", m.t());
    }

    #[test]
    fn marginal_unknown_element_errors() {
        let p = structure(&[("s", "v", (0.3, 0.6, 0.1))]);
        assert_eq!(
            p.marginal("missing"),
            Err(SvnsError::UnknownElement("missing".into()))
        );
    }

    #[test]
    fn min_max_aggregators() {
        let p = structure(&[("s", "a", (0.2, 0.9, 0.5)), ("s", "b", (0.6, 0.1, 0.5))]);
        assert_eq!(
            p.marginal_with("s", Aggregator::Min).unwrap(),
            Triplet::new(0.2, 0.1, 0.5).unwrap()
        );
        assert_eq!(
            p.marginal_with("s", Aggregator::Max).unwrap(),
            Triplet::new(0.6, 0.9, 0.5).unwrap()
        );
    }

    #[test]
    fn contradiction_symmetry_and_diagonal() {
        let mut membership = BTreeMap::new();
        membership.insert(
            ("s".to_string(), "a".to_string()),
            Triplet::new(0.1, 0.2, 0.3).unwrap(),
        );
        membership.insert(
            ("s".to_string(), "b".to_string()),
            Triplet::new(0.4, 0.5, 0.6).unwrap(),
        );
        let mut contradiction = BTreeMap::new();
        contradiction.insert(("b".to_string(), "a".to_string()), 0.7);
        let p = PlithogenicStructure::new(
            vec!["s".into()],
            "a".into(),
            vec!["a".into(), "b".into()],
            membership.clone(),
            contradiction,
        )
        .unwrap();
        assert_eq!(p.contradiction("a", "b"), 0.7);
        assert_eq!(p.contradiction("b", "a"), 0.7);
        assert_eq!(p.contradiction("a", "a"), 0.0);

        let mut bad = BTreeMap::new();
        bad.insert(("a".to_string(), "a".to_string()), 0.2);
        assert!(matches!(
            PlithogenicStructure::new(
                vec!["s".into()],
                "a".into(),
                vec!["a".into(), "b".into()],
                membership.clone(),
                bad,
            ),
            Err(SvnsError::ContradictionDiagonal { .. })
        ));

        let mut incomplete = membership;
        incomplete.remove(&("s".to_string(), "b".to_string()));
        assert!(matches!(
            PlithogenicStructure::new(
                vec!["s".into()],
                "a".into(),
                vec!["a".into(), "b".into()],
                incomplete,
                BTreeMap::new(),
            ),
            Err(SvnsError::MembershipIncomplete { .. })
        ));
    }
}
