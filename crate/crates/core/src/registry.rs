//! Object pool, named relations between objects, and scalar parameters.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Action,
    Material,
    Composition,
    Scene,
    Symbol,
    Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDef {
    pub kind: ObjectKind,
    #[serde(default)]
    pub attributes: BTreeMap<String, f64>,
}

impl ObjectDef {
    pub fn new(kind: ObjectKind) -> Self {
        Self {
            kind,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.attributes.insert(name.to_string(), value);
        self
    }

    pub fn attr(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ValueOp {
    Add,
    Equal,
    Sub,
}

pub fn value_op(a: f64, op: ValueOp, b: f64) -> f64 {
    match op {
        ValueOp::Add => a + b,
        ValueOp::Equal => b,
        ValueOp::Sub => a - b,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    objects: BTreeMap<String, ObjectDef>,
    relations: BTreeSet<(String, String, String)>,
    parameters: BTreeMap<String, f64>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_object(&mut self, name: &str, def: ObjectDef) -> &mut Self {
        self.objects.insert(name.to_string(), def);
        self
    }

    pub fn object(&self, name: &str) -> Option<&ObjectDef> {
        self.objects.get(name)
    }

    pub fn objects_of(&self, kind: ObjectKind) -> impl Iterator<Item = (&str, &ObjectDef)> {
        self.objects
            .iter()
            .filter(move |(_, d)| d.kind == kind)
            .map(|(n, d)| (n.as_str(), d))
    }

    pub fn register_relation(&mut self, from: &str, rel: &str, to: &str) -> Result<&mut Self> {
        for end in [from, to] {
            if !self.objects.contains_key(end) {
                return Err(Error::UnknownObject(end.to_string()));
            }
        }
        self.relations
            .insert((from.to_string(), rel.to_string(), to.to_string()));
        Ok(self)
    }

    pub fn has_relation(&self, from: &str, rel: &str, to: &str) -> bool {
        self.relations
            .contains(&(from.to_string(), rel.to_string(), to.to_string()))
    }

    /// Targets of `rel` from `from`, in name order.
    pub fn related(&self, from: &str, rel: &str) -> Vec<&str> {
        self.relations
            .iter()
            .filter(|(f, r, _)| f == from && r == rel)
            .map(|(_, _, t)| t.as_str())
            .collect()
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.relations
            .iter()
            .map(|(f, r, t)| (f.as_str(), r.as_str(), t.as_str()))
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> &mut Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    /// Applies `op` to an object's attribute in place, creating it at 0 if absent.
    pub fn apply_op(&mut self, name: &str, attr: &str, op: ValueOp, value: f64) -> Result<f64> {
        let def = self
            .objects
            .get_mut(name)
            .ok_or_else(|| Error::UnknownObject(name.to_string()))?;
        let slot = def.attributes.entry(attr.to_string()).or_insert(0.0);
        *slot = value_op(*slot, op, value);
        Ok(*slot)
    }

    /// Every relation endpoint names a registered object.
    pub fn is_closed(&self) -> bool {
        self.relations
            .iter()
            .all(|(f, _, t)| self.objects.contains_key(f) && self.objects.contains_key(t))
    }
}
