//! Pass/fail bookkeeping shared by the verification routines.

use serde::Serialize;

/// Outcome of one inequality checked over a set of sample points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub name: String,
    pub passed: bool,
    pub points: u64,
    pub witness: Option<String>,
    pub value: Option<String>,
}

impl Finding {
    pub fn single(name: impl Into<String>, passed: bool, value: impl Into<String>) -> Self {
        Finding { name: name.into(), passed, points: 1, witness: None, value: Some(value.into()) }
    }
}

/// Accumulates sample outcomes and keeps the first failing point as a witness.
pub struct Tally {
    name: String,
    points: u64,
    witness: Option<String>,
    value: Option<String>,
}

impl Tally {
    pub fn new(name: impl Into<String>) -> Self {
        Tally { name: name.into(), points: 0, witness: None, value: None }
    }

    pub fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.points += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    pub fn with_value(mut self, v: impl Into<String>) -> Self {
        self.value = Some(v.into());
        self
    }

    pub fn finish(self) -> Finding {
        Finding { passed: self.witness.is_none(), name: self.name, points: self.points, witness: self.witness, value: self.value }
    }
}
