use serde::{Deserialize, Serialize};

use crate::corpus::Metadata;
use crate::{Error, Result};

/// A metadata predicate. Term filters compare a string field exactly; range
/// filters bound a numeric field inclusively on either or both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Filter {
    Term {
        field: String,
        value: String,
    },
    Range {
        field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gte: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lte: Option<f64>,
    },
}

impl Filter {
    pub fn term(field: impl Into<String>, value: impl Into<String>) -> Self {
        Filter::Term {
            field: field.into(),
            value: value.into(),
        }
    }

    pub fn range(field: impl Into<String>, gte: Option<f64>, lte: Option<f64>) -> Self {
        Filter::Range {
            field: field.into(),
            gte,
            lte,
        }
    }

    pub fn field(&self) -> &str {
        match self {
            Filter::Term { field, .. } | Filter::Range { field, .. } => field,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.field().is_empty() {
            return Err(Error::InvalidParameter("filter field name is empty".into()));
        }
        if let Filter::Range { field, gte, lte } = self {
            match (gte, lte) {
                (None, None) => {
                    return Err(Error::InvalidParameter(format!(
                        "range filter on `{field}` needs gte or lte"
                    )))
                }
                (Some(lo), Some(hi)) if lo > hi => {
                    return Err(Error::InvalidParameter(format!(
                        "range filter on `{field}` has gte {lo} > lte {hi}"
                    )))
                }
                _ => {}
            }
            if gte.iter().chain(lte).any(|b| !b.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "range filter on `{field}` has a non-finite bound"
                )));
            }
        }
        Ok(())
    }

    /// An absent field fails the filter.
    pub fn matches(&self, metadata: &Metadata) -> bool {
        match self {
            Filter::Term { field, value } => metadata.string_fields.get(field) == Some(value),
            Filter::Range { field, gte, lte } => match metadata.numeric_fields.get(field) {
                Some(&v) => gte.is_none_or(|lo| v >= lo) && lte.is_none_or(|hi| v <= hi),
                None => false,
            },
        }
    }
}

/// True iff `metadata` passes every filter.
pub fn apply_filters(metadata: &Metadata, filters: &[Filter]) -> bool {
    filters.iter().all(|f| f.matches(metadata))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_and_range() {
        let blue = Metadata::default().with_string("color", "blue");
        assert!(apply_filters(&blue, &[Filter::term("color", "blue")]));
        assert!(!apply_filters(&blue, &[Filter::term("color", "Blue")]));

        let priced = Metadata::default().with_number("price", 100.0);
        assert!(apply_filters(&priced, &[Filter::range("price", Some(100.0), Some(200.0))]));
        assert!(apply_filters(&priced, &[Filter::range("price", None, Some(100.0))]));
        assert!(!apply_filters(&priced, &[Filter::range("price", Some(100.5), None)]));

        assert!(!apply_filters(&Metadata::default(), &[Filter::term("color", "blue")]));
        assert!(apply_filters(&Metadata::default(), &[]));
    }

    #[test]
    fn validation() {
        assert!(Filter::range("p", None, None).validate().is_err());
        assert!(Filter::range("p", Some(2.0), Some(1.0)).validate().is_err());
        assert!(Filter::range("p", Some(1.0), Some(1.0)).validate().is_ok());
        assert!(Filter::term("", "x").validate().is_err());
    }

    #[test]
    fn wire_form_is_strict() {
        let f: Filter = serde_json::from_str(r#"{"type":"range","field":"price","gte":1}"#).unwrap();
        assert_eq!(f, Filter::range("price", Some(1.0), None));
        assert!(serde_json::from_str::<Filter>(r#"{"type":"term","field":"c","value":"x","boost":2}"#).is_err());
        assert!(serde_json::from_str::<Filter>(r#"{"type":"prefix","field":"c"}"#).is_err());
    }
}
