//! Built-in parameter catalogs, embedded in parameter-file grammar.

use alloc::string::{String, ToString};

use super::{parse_param_file, ParameterSpace};

/// Names accepted by [`builtin_catalog`].
pub const CATALOG_NAMES: [&str; 2] = ["listing1-14", "table2-27"];

const LISTING1_14: &str = include_str!("../../data/listing1-14.params");
const TABLE2_27: &str = include_str!("../../data/table2-27.params");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog {0:?} (known: listing1-14, table2-27)")]
    UnknownCatalog(String),
}

/// Raw parameter-file text of a built-in catalog.
pub fn catalog_text(name: &str) -> Option<&'static str> {
    match name {
        "listing1-14" => Some(LISTING1_14),
        "table2-27" => Some(TABLE2_27),
        _ => None,
    }
}

pub fn builtin_catalog(name: &str) -> Result<ParameterSpace, CatalogError> {
    let text = catalog_text(name).ok_or_else(|| CatalogError::UnknownCatalog(name.to_string()))?;
    Ok(parse_param_file(text).expect("embedded catalog parses"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::{Target, ValueKind};

    #[test]
    fn sizes() {
        assert_eq!(builtin_catalog("listing1-14").unwrap().len(), 14);
        assert_eq!(builtin_catalog("table2-27").unwrap().len(), 27);
        assert_eq!(
            builtin_catalog("nope"),
            Err(CatalogError::UnknownCatalog("nope".into()))
        );
    }

    #[test]
    fn table2_extends_listing1() {
        let l = builtin_catalog("listing1-14").unwrap();
        let t = builtin_catalog("table2-27").unwrap();
        for spec in &l {
            let i = t.position(&spec.key()).unwrap();
            assert_eq!(t.specs()[i], *spec);
        }
        let txq = t.position("eno2.txqueuelen").unwrap();
        assert_eq!(t.specs()[txq].target(), &Target::InterfaceTxqueuelen("eno2".into()));
        assert_eq!(t.specs()[txq].kind(), &ValueKind::IntRange { min: 1000, max: 10000 });
        let fin = t.position("net.ipv4.tcp_fin_timeout").unwrap();
        assert_eq!(t.specs()[fin].kind(), &ValueKind::IntRange { min: 15, max: 60 });
    }
}
