use std::collections::BTreeMap;

use crate::{Error, Result};

/// Mapping from an external benchmark's label names to ordinals, ordered
/// from least to most truthful.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelScheme {
    /// Refutes → 0, NotEnoughInfo → 1, Supports → 2.
    Fever,
    /// Major-inaccurate → 0, Minor-inaccurate → 1, Accurate → 2.
    SelfCheckGpt,
    Custom(BTreeMap<String, u32>),
}

impl LabelScheme {
    /// Label names in ordinal order.
    pub fn ordered_names(&self) -> Vec<String> {
        match self {
            LabelScheme::Fever => vec!["Refutes".into(), "NotEnoughInfo".into(), "Supports".into()],
            LabelScheme::SelfCheckGpt => vec!["Major-inaccurate".into(), "Minor-inaccurate".into(), "Accurate".into()],
            LabelScheme::Custom(map) => {
                let mut pairs: Vec<_> = map.iter().collect();
                pairs.sort_by_key(|(name, &v)| (v, (*name).clone()));
                pairs.into_iter().map(|(k, _)| k.clone()).collect()
            }
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            LabelScheme::Fever | LabelScheme::SelfCheckGpt => 3,
            LabelScheme::Custom(map) => map.values().max().map_or(0, |&m| m as usize + 1),
        }
    }
}

// "NOT ENOUGH INFO", "not_enough_info" and "NotEnoughInfo" all normalize alike.
fn normalize(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

pub fn remap_label(raw: &str, scheme: &LabelScheme) -> Result<u32> {
    let key = normalize(raw);
    let found = match scheme {
        LabelScheme::Fever => match key.as_str() {
            "refutes" => Some(0),
            "notenoughinfo" => Some(1),
            "supports" => Some(2),
            _ => None,
        },
        LabelScheme::SelfCheckGpt => match key.as_str() {
            "majorinaccurate" => Some(0),
            "minorinaccurate" => Some(1),
            "accurate" => Some(2),
            _ => None,
        },
        LabelScheme::Custom(map) => map
            .get(raw)
            .copied()
            .or_else(|| map.iter().find(|(k, _)| normalize(k) == key).map(|(_, &v)| v)),
    };
    found.ok_or_else(|| Error::Data(format!("unknown label {raw:?} for scheme")))
}

pub fn remap_labels<S: AsRef<str>>(raw: &[S], scheme: &LabelScheme) -> Result<Vec<u32>> {
    raw.iter().map(|r| remap_label(r.as_ref(), scheme)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_examples() {
        assert_eq!(remap_label("Supports", &LabelScheme::Fever).unwrap(), 2);
        assert_eq!(remap_label("NOT ENOUGH INFO", &LabelScheme::Fever).unwrap(), 1);
        assert_eq!(remap_label("REFUTES", &LabelScheme::Fever).unwrap(), 0);
        assert_eq!(remap_label("Accurate", &LabelScheme::SelfCheckGpt).unwrap(), 2);
        assert_eq!(remap_label("minor_inaccurate", &LabelScheme::SelfCheckGpt).unwrap(), 1);
        assert_eq!(remap_label("major_inaccurate", &LabelScheme::SelfCheckGpt).unwrap(), 0);
        assert!(remap_label("Maybe", &LabelScheme::Fever).is_err());
        assert!(remap_labels(&["Accurate", "bogus"], &LabelScheme::SelfCheckGpt).is_err());
    }

    #[test]
    fn custom_map() {
        let scheme = LabelScheme::Custom([("lie".to_string(), 0), ("truth".to_string(), 1)].into());
        assert_eq!(remap_labels(&["truth", "lie"], &scheme).unwrap(), vec![1, 0]);
        assert_eq!(scheme.num_classes(), 2);
        assert_eq!(scheme.ordered_names(), vec!["lie", "truth"]);
    }

    #[test]
    fn ordering_is_monotone_in_truthfulness() {
        for scheme in [LabelScheme::Fever, LabelScheme::SelfCheckGpt] {
            let names = scheme.ordered_names();
            let ords = remap_labels(&names, &scheme).unwrap();
            assert!(ords.windows(2).all(|w| w[0] < w[1]), "{scheme:?}");
        }
    }
}
