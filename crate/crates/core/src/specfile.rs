//! Model description files.
//!
//! ```toml
//! customers = ["1", "2"]
//! servers = ["A", "B"]
//! edges = [["1", "A"], ["1", "B"], ["2", "B"]]
//!
//! [lambda]
//! 1 = 0.5
//! 2 = 0.5
//!
//! [mu]
//! A = { a = 0.0, b = 0.5 }   # 0.5·rho
//! B = { a = 1.0, b = -0.5 }
//!
//! [sweep]
//! parameter = "rho"
//! start = 0.1
//! stop = 0.9
//! step = 0.1                 # or: grid = [0.25, 0.5]
//! ```
//!
//! Probability entries are either plain numbers or linear bindings
//! `a + b·parameter`; bindings require a `[sweep]` table.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::error::Error;
use crate::model::{ArrivalModel, ClassSet, CompatibilityGraph, Model};

/// Sweep grid points are rounded to this resolution so that
/// `start + j·step` lands on the decimal values users expect.
pub const GRID_RESOLUTION: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("line {line}: `{field}`: {message}")]
    Invalid {
        line: usize,
        field: String,
        message: String,
    },
    #[error("`{field}`: {message}")]
    Missing { field: String, message: String },
    #[error(transparent)]
    Model(#[from] Error),
}

/// A probability: either fixed or `a + b·parameter`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Fixed(f64),
    Linear { a: f64, b: f64 },
}

impl Entry {
    pub fn at(&self, parameter: Option<f64>) -> Option<f64> {
        match *self {
            Entry::Fixed(v) => Some(v),
            Entry::Linear { a, b } => parameter.map(|p| a + b * p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: String,
    pub grid: Vec<f64>,
}

/// A validated model description. Probabilities are stored in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub customers: Vec<String>,
    pub servers: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub lambda: Vec<Entry>,
    pub mu: Vec<Entry>,
    pub sweep: Option<Sweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    customers: Spanned<Vec<Spanned<String>>>,
    servers: Spanned<Vec<Spanned<String>>>,
    edges: Vec<Spanned<(Spanned<String>, Spanned<String>)>>,
    lambda: Spanned<BTreeMap<Spanned<String>, Entry>>,
    mu: Spanned<BTreeMap<Spanned<String>, Entry>>,
    sweep: Option<Spanned<RawSweep>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    grid: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, span: Range<usize>) -> usize {
        self.0[..span.start.min(self.0.len())].matches('\n').count() + 1
    }

    fn invalid(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> SpecError {
        SpecError::Invalid {
            line: self.at(span),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl ModelSpec {
    pub fn parse(source: &str) -> Result<Self, SpecError> {
        let raw: RawSpec = toml::from_str(source)?;
        let lines = Lines(source);

        let customers = unique_names(&raw.customers, "customers", &lines)?;
        let servers = unique_names(&raw.servers, "servers", &lines)?;
        let customer_index = index_of(&customers);
        let server_index = index_of(&servers);

        let mut edges = Vec::with_capacity(raw.edges.len());
        for edge in &raw.edges {
            let (c, s) = edge.get_ref();
            if !customer_index.contains_key(c.get_ref().as_str()) {
                return Err(lines.invalid(
                    c.span(),
                    "edges",
                    format!("unknown customer class {:?}", c.get_ref()),
                ));
            }
            if !server_index.contains_key(s.get_ref().as_str()) {
                return Err(lines.invalid(
                    s.span(),
                    "edges",
                    format!("unknown server class {:?}", s.get_ref()),
                ));
            }
            edges.push((c.get_ref().clone(), s.get_ref().clone()));
        }

        let lambda = probability_map(&raw.lambda, "lambda", &customers, &lines)?;
        let mu = probability_map(&raw.mu, "mu", &servers, &lines)?;

        let sweep = match &raw.sweep {
            None => None,
            Some(s) => Some(sweep_grid(s, &lines)?),
        };
        let linear = lambda
            .iter()
            .chain(&mu)
            .any(|e| matches!(e, Entry::Linear { .. }));
        if linear && sweep.is_none() {
            return Err(SpecError::Missing {
                field: "sweep".into(),
                message: "linear probability entries need a [sweep] table".into(),
            });
        }

        let spec = ModelSpec {
            customers,
            servers,
            edges,
            lambda,
            mu,
            sweep,
        };
        spec.graph()?;
        Ok(spec)
    }

    pub fn is_parametric(&self) -> bool {
        self.lambda
            .iter()
            .chain(&self.mu)
            .any(|e| matches!(e, Entry::Linear { .. }))
    }

    pub fn graph(&self) -> Result<CompatibilityGraph, Error> {
        let ci = index_of(&self.customers);
        let si = index_of(&self.servers);
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|(c, s)| (ci[c.as_str()], si[s.as_str()]))
            .collect();
        CompatibilityGraph::new(self.customers.len(), self.servers.len(), edges)
    }

    /// The model at the given parameter value. Required exactly when some
    /// entry is linear.
    pub fn model_at(&self, parameter: Option<f64>) -> Result<Model, SpecError> {
        let eval = |entries: &[Entry], field: &str| -> Result<Vec<f64>, SpecError> {
            entries
                .iter()
                .map(|e| {
                    e.at(parameter).ok_or_else(|| SpecError::Missing {
                        field: field.to_string(),
                        message: "entry depends on the sweep parameter; give a parameter value"
                            .into(),
                    })
                })
                .collect()
        };
        let lambda = eval(&self.lambda, "lambda")?;
        let mu = eval(&self.mu, "mu")?;
        let arrivals = ArrivalModel::new(lambda, mu)?;
        Ok(Model::new(self.graph()?, arrivals)?)
    }

    /// `{2,A}` style rendering with class names.
    pub fn set_name(&self, set: ClassSet) -> String {
        let names: Vec<&str> = set
            .customers()
            .map(|i| self.customers[i].as_str())
            .chain(set.servers().map(|k| self.servers[k].as_str()))
            .collect();
        format!("{{{}}}", names.join(","))
    }

    /// A canonical rendering that parses back to an equal spec.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        let list = |names: &[String]| {
            names
                .iter()
                .map(|n| quote(n))
                .collect::<Vec<_>>()
                .join(", ")
        };
        writeln!(out, "customers = [{}]", list(&self.customers)).unwrap();
        writeln!(out, "servers = [{}]", list(&self.servers)).unwrap();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|(c, s)| format!("[{}, {}]", quote(c), quote(s)))
            .collect();
        writeln!(out, "edges = [{}]", edges.join(", ")).unwrap();
        for (table, names, entries) in [
            ("lambda", &self.customers, &self.lambda),
            ("mu", &self.servers, &self.mu),
        ] {
            writeln!(out, "\n[{table}]").unwrap();
            for (name, entry) in names.iter().zip(entries) {
                match entry {
                    Entry::Fixed(v) => writeln!(out, "{} = {v:?}", quote(name)),
                    Entry::Linear { a, b } => {
                        writeln!(out, "{} = {{ a = {a:?}, b = {b:?} }}", quote(name))
                    }
                }
                .unwrap();
            }
        }
        if let Some(sweep) = &self.sweep {
            let grid: Vec<String> = sweep.grid.iter().map(|v| format!("{v:?}")).collect();
            writeln!(
                out,
                "\n[sweep]\nparameter = {}\ngrid = [{}]",
                quote(&sweep.parameter),
                grid.join(", ")
            )
            .unwrap();
        }
        out
    }
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names
        .iter()
        .enumerate()
        .map(|(p, n)| (n.as_str(), p))
        .collect()
}

fn unique_names(
    raw: &Spanned<Vec<Spanned<String>>>,
    field: &str,
    lines: &Lines,
) -> Result<Vec<String>, SpecError> {
    if raw.get_ref().is_empty() {
        return Err(lines.invalid(raw.span(), field, "at least one class is required"));
    }
    let mut seen = HashMap::new();
    for name in raw.get_ref() {
        if seen.insert(name.get_ref().as_str(), ()).is_some() {
            return Err(lines.invalid(
                name.span(),
                field,
                format!("duplicate class name {:?}", name.get_ref()),
            ));
        }
    }
    Ok(raw.get_ref().iter().map(|n| n.get_ref().clone()).collect())
}

fn probability_map(
    raw: &Spanned<BTreeMap<Spanned<String>, Entry>>,
    field: &str,
    names: &[String],
    lines: &Lines,
) -> Result<Vec<Entry>, SpecError> {
    let index = index_of(names);
    let mut entries = vec![None; names.len()];
    for (name, entry) in raw.get_ref() {
        match index.get(name.get_ref().as_str()) {
            Some(&p) => entries[p] = Some(*entry),
            None => {
                return Err(lines.invalid(
                    name.span(),
                    field,
                    format!("unknown class {:?}", name.get_ref()),
                ))
            }
        }
    }
    names
        .iter()
        .zip(entries)
        .map(|(name, e)| {
            e.ok_or_else(|| {
                lines.invalid(raw.span(), field, format!("no entry for class {name:?}"))
            })
        })
        .collect()
}

fn sweep_grid(raw: &Spanned<RawSweep>, lines: &Lines) -> Result<Sweep, SpecError> {
    let s = raw.get_ref();
    let grid = match (&s.grid, s.start, s.stop, s.step) {
        (Some(grid), None, None, None) => grid.clone(),
        (None, Some(start), Some(stop), Some(step)) => {
            if step.is_nan() || step <= 0.0 || stop.is_nan() || stop < start {
                return Err(lines.invalid(raw.span(), "sweep", "need step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n)
                .map(|j| round_to_grid(start + j as f64 * step))
                .collect()
        }
        _ => {
            return Err(lines.invalid(
                raw.span(),
                "sweep",
                "give either `grid` or all of `start`, `stop`, `step`",
            ))
        }
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(lines.invalid(raw.span(), "sweep", "grid must be non-empty and finite"));
    }
    Ok(Sweep {
        parameter: s.parameter.clone(),
        grid,
    })
}

fn round_to_grid(x: f64) -> f64 {
    (x / GRID_RESOLUTION).round() * GRID_RESOLUTION
}
