//! Instance files and the bundled scenarios.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wotlab::costs::{CostConfig, SharedCost};
use wotlab::dual::DualClass;
use wotlab::measures::DiscreteMeasure;
use wotlab::orders::{ConeSpec, Order};
use wotlab::{Error, Result};

/// Scenario files shipped with the binary, by name.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("strassen_feasible", include_str!("../scenarios/strassen_feasible.json")),
    ("kr_1d", include_str!("../scenarios/kr_1d.json")),
    ("converse_gap", include_str!("../scenarios/converse_gap.json")),
    ("brenier_strassen", include_str!("../scenarios/brenier_strassen.json")),
    ("monopolist", include_str!("../scenarios/monopolist.json")),
    ("icx_projection", include_str!("../scenarios/icx_projection.json")),
    ("martingale_benamou_brenier", include_str!("../scenarios/martingale_benamou_brenier.json")),
    ("identical_marginals", include_str!("../scenarios/identical_marginals.json")),
];

/// A measure given inline or as a path (relative to the instance file).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    Path(String),
    Inline(DiscreteMeasure),
}

/// `"cx"`, `"icx"` or `{"cone": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSpec {
    Cx,
    Icx,
    Cone(ConeSpec),
}

impl ClassSpec {
    pub fn order(&self) -> Order {
        match self {
            ClassSpec::Cx => Order::Convex,
            ClassSpec::Icx => Order::IncreasingConvex,
            ClassSpec::Cone(c) => Order::Cone(c.clone()),
        }
    }

    pub fn dual_class(&self) -> DualClass {
        match self {
            ClassSpec::Cx => DualClass::Convex,
            ClassSpec::Icx => DualClass::Icx,
            ClassSpec::Cone(c) => DualClass::Cone(c.clone()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceOptions {
    pub tol: Option<f64>,
    pub grid_refine: Option<usize>,
    pub seed: Option<u64>,
    /// Defaults to true; false allows a dual over a class the cost is not
    /// monotone in (the gap is then the result).
    pub enforce_class: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub schema: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub mu: MeasureSource,
    pub nu: MeasureSource,
    pub cost: CostConfig,
    #[serde(default = "default_class")]
    pub class: ClassSpec,
    #[serde(default)]
    pub options: InstanceOptions,
}

fn default_class() -> ClassSpec {
    ClassSpec::Cx
}

/// A loaded instance with its measures resolved.
pub struct Instance {
    pub spec: InstanceSpec,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

impl Instance {
    pub fn cost(&self) -> Result<SharedCost> {
        self.spec.cost.build(self.mu.dim())
    }
}

/// Reads `arg` as a file, or failing that as a bundled scenario name (with or
/// without the `.json` suffix).
pub fn load_instance(arg: &str) -> Result<Instance> {
    let path = Path::new(arg);
    let (text, base) = if path.exists() {
        (std::fs::read_to_string(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default())
    } else {
        let name = arg.rsplit('/').next().unwrap_or(arg).trim_end_matches(".json");
        let text = SCENARIOS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| Error::Usage(format!("{arg}: no such file or bundled scenario")))?;
        (text, PathBuf::new())
    };
    let spec: InstanceSpec = serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{arg}: {e}")))?;
    if let Some(s) = &spec.schema {
        if s != wotlab::verify::SCHEMA {
            return Err(Error::Usage(format!("{arg}: unsupported schema {s:?}")));
        }
    }
    let mu = resolve(&spec.mu, &base)?;
    let nu = resolve(&spec.nu, &base)?;
    Ok(Instance { spec, mu, nu })
}

fn resolve(src: &MeasureSource, base: &Path) -> Result<DiscreteMeasure> {
    match src {
        MeasureSource::Inline(m) => Ok(m.clone()),
        MeasureSource::Path(p) => load_measure(&base.join(p).to_string_lossy()),
    }
}

/// A measure from a file path or inline JSON text.
pub fn load_measure(arg: &str) -> Result<DiscreteMeasure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Usage(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{arg}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_build() {
        for (name, _) in SCENARIOS {
            let inst = load_instance(name).unwrap();
            inst.cost().unwrap();
            assert_eq!(inst.spec.name.as_deref(), Some(*name));
        }
        assert!(load_instance("no_such_scenario").is_err());
    }

    #[test]
    fn class_spec_json() {
        let c: ClassSpec = serde_json::from_str(r#""icx""#).unwrap();
        assert_eq!(c.order(), Order::IncreasingConvex);
        let c: ClassSpec = serde_json::from_str(r#"{"cone": {"family": "convex1d"}}"#).unwrap();
        assert!(matches!(c, ClassSpec::Cone(_)));
    }
}
