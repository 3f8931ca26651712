use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Map between the natural scale and the unconstrained estimation scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

impl Transform {
    pub fn to_estimation(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log => v.ln(),
            Transform::Logit => (v / (1.0 - v)).ln(),
        }
    }

    pub fn to_natural(self, e: f64) -> f64 {
        match self {
            Transform::Identity => e,
            Transform::Log => e.exp(),
            Transform::Logit => 1.0 / (1.0 + (-e).exp()),
        }
    }

    pub fn admits(self, v: f64) -> bool {
        match self {
            Transform::Identity => v.is_finite(),
            Transform::Log => v.is_finite() && v > 0.0,
            Transform::Logit => v > 0.0 && v < 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Log => "log",
            Transform::Logit => "logit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" | "" => Ok(Transform::Identity),
            "log" => Ok(Transform::Log),
            "logit" => Ok(Transform::Logit),
            other => Err(Error::input(format!("unknown transform `{other}`"))),
        }
    }
}

/// Whether a parameter applies to every unit or belongs to one unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    Shared,
    Unit(usize),
}

impl Scope {
    pub fn to_label(self) -> String {
        match self {
            Scope::Shared => "shared".to_string(),
            Scope::Unit(u) => format!("unit:{u}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "shared" {
            return Ok(Scope::Shared);
        }
        s.strip_prefix("unit:")
            .and_then(|u| u.parse().ok())
            .map(Scope::Unit)
            .ok_or_else(|| Error::input(format!("bad scope `{s}`")))
    }
}

/// A parameter slot declared by a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDef {
    pub name: String,
    pub transform: Transform,
    pub scope: Scope,
    pub lower: f64,
    pub upper: f64,
}

impl ParamDef {
    pub fn new(name: impl Into<String>, transform: Transform) -> Self {
        Self {
            name: name.into(),
            transform,
            scope: Scope::Shared,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn real(name: impl Into<String>) -> Self {
        Self::new(name, Transform::Identity)
    }

    /// Identity scale, but must be >= 0 (fixed rates that may be zero).
    pub fn nonneg(name: impl Into<String>) -> Self {
        Self {
            lower: 0.0,
            ..Self::new(name, Transform::Identity)
        }
    }

    /// Estimated on the log scale by default; zero is admitted only when a
    /// parameter set declares the identity transform.
    pub fn positive(name: impl Into<String>) -> Self {
        Self {
            lower: 0.0,
            ..Self::new(name, Transform::Log)
        }
    }

    pub fn fraction(name: impl Into<String>) -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
            ..Self::new(name, Transform::Logit)
        }
    }

    pub fn for_unit(mut self, unit: usize) -> Self {
        self.scope = Scope::Unit(unit);
        self
    }

    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// Check `v` against the declared bounds.
    pub fn check(&self, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::param(&self.name, format!("value {v} is not finite")));
        }
        if v < self.lower || v > self.upper {
            return Err(Error::param(
                &self.name,
                format!("value {v} outside [{}, {}]", self.lower, self.upper),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub value: f64,
    pub transform: Transform,
    pub scope: Scope,
}

/// Named natural-scale parameter values with transform and scope metadata.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    entries: Vec<ParamEntry>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a set holding `values` in the order of `defs`.
    pub fn from_defs(defs: &[ParamDef], values: &[f64]) -> Self {
        assert_eq!(defs.len(), values.len());
        Self {
            entries: defs
                .iter()
                .zip(values)
                .map(|(d, &v)| ParamEntry {
                    name: d.name.clone(),
                    value: v,
                    transform: d.transform,
                    scope: d.scope,
                })
                .collect(),
        }
    }

    pub fn insert(&mut self, name: &str, value: f64, transform: Transform, scope: Scope) {
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                e.value = value;
                e.transform = transform;
                e.scope = scope;
            }
            None => self.entries.push(ParamEntry {
                name: name.to_string(),
                value,
                transform,
                scope,
            }),
        }
    }

    /// Set `name`, keeping existing metadata; new entries are identity-scale
    /// and shared.
    pub fn with(mut self, name: &str, value: f64) -> Self {
        if self.set(name, value).is_err() {
            self.insert(name, value, Transform::Identity, Scope::Shared);
        }
        self
    }

    pub fn with_transform(mut self, name: &str, transform: Transform) -> Self {
        if let Some(e) = self.entries.iter_mut().find(|e| e.name == name) {
            e.transform = transform;
        }
        self
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    /// Overwrite an existing value; unknown names are an error.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                e.value = value;
                Ok(())
            }
            None => Err(Error::UnknownParameter(name.to_string())),
        }
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolve the set against a model's declared parameters, returning the
    /// natural-scale values in declaration order. Values must lie in the
    /// domain of their entry's transform and within the declared bounds.
    pub fn bind(&self, defs: &[ParamDef]) -> Result<Vec<f64>> {
        for e in &self.entries {
            if !defs.iter().any(|d| d.name == e.name) {
                return Err(Error::UnknownParameter(e.name.clone()));
            }
        }
        defs.iter()
            .map(|d| {
                let e = self
                    .entry(&d.name)
                    .ok_or_else(|| Error::MissingParameter(d.name.clone()))?;
                if !e.transform.admits(e.value) {
                    return Err(Error::param(
                        &d.name,
                        format!("value {} outside the domain of the {} transform", e.value, e.transform.as_str()),
                    ));
                }
                d.check(e.value)?;
                Ok(e.value)
            })
            .collect()
    }

    /// Transforms of `defs` in declaration order, as recorded in this set.
    pub fn transforms(&self, defs: &[ParamDef]) -> Result<Vec<Transform>> {
        defs.iter()
            .map(|d| {
                self.entry(&d.name)
                    .map(|e| e.transform)
                    .ok_or_else(|| Error::MissingParameter(d.name.clone()))
            })
            .collect()
    }
}

/// Read-only parameter access for process and measurement code.
///
/// Values are natural-scale and laid out in a model's declaration order. A
/// view either holds one row used by every unit, or one row per block with a
/// unit-to-row map (block filtering keeps a separate copy per block).
#[derive(Clone, Copy, Debug)]
pub struct ParamView<'a> {
    rows: &'a [f64],
    width: usize,
    unit_row: Option<&'a [usize]>,
}

impl<'a> ParamView<'a> {
    pub fn uniform(values: &'a [f64]) -> Self {
        Self {
            rows: values,
            width: values.len(),
            unit_row: None,
        }
    }

    pub fn blocked(rows: &'a [f64], width: usize, unit_row: &'a [usize]) -> Self {
        Self {
            rows,
            width,
            unit_row: Some(unit_row),
        }
    }

    #[inline]
    pub fn get(&self, idx: usize, unit: usize) -> f64 {
        let row = match self.unit_row {
            Some(map) => map[unit],
            None => 0,
        };
        self.rows[row * self.width + idx]
    }

    /// Row used by unit 0; convenient for single-unit models.
    #[inline]
    pub fn shared(&self, idx: usize) -> f64 {
        self.get(idx, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bind_checks_presence_and_domain() {
        let defs = vec![ParamDef::positive("beta"), ParamDef::fraction("rho")];
        let ok = ParameterSet::from_defs(&defs, &[2.0, 0.5]);
        assert_eq!(ok.bind(&defs).unwrap(), vec![2.0, 0.5]);

        let missing = ParameterSet::from_defs(&defs[..1], &[2.0]);
        assert!(matches!(missing.bind(&defs), Err(Error::MissingParameter(n)) if n == "rho"));

        let bad = ok.clone().with("beta", -1.0);
        assert!(matches!(bad.bind(&defs), Err(Error::InvalidParameter { .. })));
        let zero = ok.clone().with("beta", 0.0);
        assert!(zero.bind(&defs).is_err());
        assert!(zero.with_transform("beta", Transform::Identity).bind(&defs).is_ok());

        let extra = ok.clone().with("gamma", 1.0);
        assert!(matches!(extra.bind(&defs), Err(Error::UnknownParameter(_))));
    }

    #[test]
    fn nonneg_rejects_negative() {
        assert!(ParamDef::nonneg("mu").check(0.0).is_ok());
        assert!(ParamDef::nonneg("mu").check(-1e-9).is_err());
    }

    #[test]
    fn blocked_view_routes_units() {
        let rows = [1.0, 2.0, 10.0, 20.0];
        let map = [0, 1, 1];
        let v = ParamView::blocked(&rows, 2, &map);
        assert_eq!(v.get(1, 0), 2.0);
        assert_eq!(v.get(0, 2), 10.0);
    }

    proptest! {
        #[test]
        fn transforms_round_trip(x in 1e-6f64..(1.0 - 1e-6)) {
            for t in [Transform::Identity, Transform::Log, Transform::Logit] {
                let back = t.to_natural(t.to_estimation(x));
                prop_assert!((back - x).abs() <= 1e-12);
            }
        }
    }
}
