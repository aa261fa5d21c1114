use crate::distributions::ChiProductSpec;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub test: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub d: usize,
    pub l: usize,
    pub sigmas: Option<Vec<f64>>,
    pub n: usize,
    pub seed: u64,
}

/// Result of one seeded experiment. Re-running it with `parameters`
/// reproduces every statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub parameters: Parameters,
    /// The chi product law the sample is compared against, if any.
    pub law: Option<ChiProductSpec>,
    pub statistics: Vec<Statistic>,
    pub p_values: Vec<PValue>,
    pub notes: Vec<String>,
    /// Wall-clock time; left empty when reproducible output is required.
    pub runtime_seconds: Option<f64>,
}

impl VerificationReport {
    pub fn new(experiment: impl Into<String>, parameters: Parameters) -> Self {
        Self { experiment: experiment.into(), parameters, law: None, statistics: Vec::new(), p_values: Vec::new(), notes: Vec::new(), runtime_seconds: None }
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, relation: Relation, threshold: f64) {
        let pass = relation.holds(value, threshold);
        self.statistics.push(Statistic { name: name.into(), value, threshold, relation, pass });
    }

    /// Records a p-value and checks it against `threshold`.
    pub fn check_p(&mut self, test: impl Into<String>, p: f64, threshold: f64) {
        let test = test.into();
        self.p_values.push(PValue { test: test.clone(), p });
        self.check(format!("{test} p-value"), p, Relation::AtLeast, threshold);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.statistics.iter().all(|s| s.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Statistic> {
        self.statistics.iter().filter(|s| !s.pass)
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.parameters;
        writeln!(f, "experiment: {}", self.experiment)?;
        write!(f, "parameters: d={} l={} n={} seed={}", p.d, p.l, p.n, p.seed)?;
        if let Some(s) = &p.sigmas {
            write!(f, " sigmas={s:?}")?;
        }
        writeln!(f)?;
        if let Some(law) = &self.law {
            writeln!(f, "law: {} * chi{:?}", law.coefficient(), law.dofs())?;
        }
        let width = self.statistics.iter().map(|s| s.name.len()).max().unwrap_or(4).max(9);
        writeln!(f, "{:<width$}  {:>14}  {:>14}  result", "statistic", "value", "threshold")?;
        for s in &self.statistics {
            let verdict = if s.pass { "pass" } else { "FAIL" };
            writeln!(f, "{:<width$}  {:>14.6e}  {} {:>11.4e}  {verdict}", s.name, s.value, s.relation.symbol(), s.threshold)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        if let Some(t) = self.runtime_seconds {
            writeln!(f, "runtime: {t:.3} s")?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}
