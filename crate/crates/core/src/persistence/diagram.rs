use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// One persistence pair. Values are diameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    /// Rank of the creating simplex among simplices of dimension `dim`.
    pub birth_simplex: usize,
    /// Rank of the destroying simplex among simplices of dimension `dim + 1`.
    pub death_simplex: Option<usize>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Diameter,
    Radius,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Diameter => "diameter",
            Units::Radius => "radius",
        }
    }

    fn scale(self) -> f64 {
        match self {
            Units::Diameter => 1.0,
            Units::Radius => 0.5,
        }
    }
}

/// Persistence pairs grouped by homology dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    dims: Vec<Vec<PersistencePair>>,
    zero_persistence_retained: bool,
}

impl PersistenceDiagram {
    pub fn new(max_dim: usize, zero_persistence_retained: bool) -> Self {
        PersistenceDiagram {
            dims: vec![Vec::new(); max_dim + 1],
            zero_persistence_retained,
        }
    }

    pub fn push(&mut self, pair: PersistencePair) {
        if pair.dim >= self.dims.len() {
            self.dims.resize(pair.dim + 1, Vec::new());
        }
        self.dims[pair.dim].push(pair);
    }

    pub fn extend(&mut self, pairs: impl IntoIterator<Item = PersistencePair>) {
        for p in pairs {
            self.push(p);
        }
    }

    pub fn zero_persistence_retained(&self) -> bool {
        self.zero_persistence_retained
    }

    /// Highest homology dimension with a slot in the diagram.
    pub fn max_dim(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn pairs(&self, k: usize) -> &[PersistencePair] {
        self.dims.get(k).map_or(&[], |v| v.as_slice())
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = &PersistencePair> {
        self.dims.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Finite (birth, death) points of dimension k.
    pub fn finite(&self, k: usize) -> Vec<(f64, f64)> {
        self.pairs(k)
            .iter()
            .filter(|p| !p.is_essential())
            .map(|p| (p.birth, p.death))
            .collect()
    }

    pub fn essential(&self, k: usize) -> Vec<f64> {
        self.pairs(k)
            .iter()
            .filter(|p| p.is_essential())
            .map(|p| p.birth)
            .collect()
    }

    /// Copy restricted to homology dimensions up to `max_dim`.
    pub fn truncated(&self, max_dim: usize) -> Self {
        PersistenceDiagram {
            dims: self.dims.iter().take(max_dim + 1).cloned().collect(),
            zero_persistence_retained: self.zero_persistence_retained,
        }
    }

    /// Copy without pairs of zero persistence.
    pub fn without_zero_persistence(&self) -> Self {
        PersistenceDiagram {
            dims: self
                .dims
                .iter()
                .map(|v| v.iter().filter(|p| p.death > p.birth).copied().collect())
                .collect(),
            zero_persistence_retained: false,
        }
    }

    /// Number of zero-persistence pairs in dimension k.
    pub fn zero_persistence_count(&self, k: usize) -> usize {
        self.pairs(k).iter().filter(|p| p.death == p.birth).count()
    }

    /// Sorted (dim, birth, death) triples, for multiset comparisons.
    pub fn value_multiset(&self) -> Vec<(usize, f64, f64)> {
        let mut v: Vec<(usize, f64, f64)> = self.all_pairs().map(|p| (p.dim, p.birth, p.death)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        v
    }

    /// Sorts each dimension by (birth, death, birth simplex).
    pub fn normalize(&mut self) {
        for v in self.dims.iter_mut() {
            v.sort_by(|a, b| {
                a.birth
                    .total_cmp(&b.birth)
                    .then(a.death.total_cmp(&b.death))
                    .then(a.birth_simplex.cmp(&b.birth_simplex))
            });
        }
    }

    pub fn to_json(&self, units: Units) -> Value {
        let s = units.scale();
        let num = |x: f64| -> Value {
            if x == f64::INFINITY {
                Value::from("inf")
            } else {
                json!(x * s)
            }
        };
        let mut dims = serde_json::Map::new();
        let mut essential = Vec::new();
        for (k, pairs) in self.dims.iter().enumerate() {
            let pts: Vec<Value> = pairs.iter().map(|p| json!([num(p.birth), num(p.death)])).collect();
            dims.insert(k.to_string(), Value::Array(pts));
            for p in pairs.iter().filter(|p| p.is_essential()) {
                essential.push(json!([k, num(p.birth)]));
            }
        }
        json!({ "dims": dims, "units": units.as_str(), "essential": essential })
    }

    /// Reads the JSON form; values are returned in diameter units.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        let bad = |m: &str| Error::Input(format!("diagram JSON: {m}"));
        let scale = match v.get("units").and_then(Value::as_str).unwrap_or("diameter") {
            "diameter" => 1.0,
            "radius" => 2.0,
            other => return Err(bad(&format!("unknown units {other:?}"))),
        };
        let dims = v.get("dims").and_then(Value::as_object).ok_or_else(|| bad("missing \"dims\""))?;
        let parse_num = |x: &Value| -> Result<f64> {
            match x {
                Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                Value::Number(n) => n.as_f64().map(|f| f * scale).ok_or_else(|| bad("bad number")),
                _ => Err(bad("expected a number or \"inf\"")),
            }
        };
        let mut sorted: BTreeMap<usize, &Vec<Value>> = BTreeMap::new();
        for (key, pts) in dims {
            let k: usize = key.parse().map_err(|_| bad(&format!("bad dimension key {key:?}")))?;
            sorted.insert(k, pts.as_array().ok_or_else(|| bad("dimension entry is not a list"))?);
        }
        let max_dim = sorted.keys().next_back().copied().unwrap_or(0);
        let mut out = PersistenceDiagram::new(max_dim, false);
        for (k, pts) in sorted {
            for (i, p) in pts.iter().enumerate() {
                let arr = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("pair is not [birth, death]"))?;
                let (birth, death) = (parse_num(&arr[0])?, parse_num(&arr[1])?);
                if !(birth <= death) {
                    return Err(bad(&format!("pair with birth {birth} after death {death}")));
                }
                if death == birth {
                    out.zero_persistence_retained = true;
                }
                out.push(PersistencePair {
                    dim: k,
                    birth,
                    death,
                    birth_simplex: i,
                    death_simplex: None,
                });
            }
        }
        Ok(out)
    }
}
