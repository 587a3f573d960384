//! Ensemble statistics, verdicts and report serialization.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::Record;
use crate::config::{Format, RunConfig};

/// Mean and standard error of the finite values, with their count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let n = v.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count: 0 };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, stderr, count: n }
    }
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fraction of `values` satisfying `pred`, counting non-finite values as failures.
pub fn fraction(values: impl IntoIterator<Item = f64>, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut hit, mut n) = (0usize, 0usize);
    for v in values {
        n += 1;
        if v.is_finite() && pred(v) {
            hit += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

/// One pass/fail check. `rule` states the comparison and the tolerance used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub rule: String,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, bound: f64, rule: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound, rule: rule.into(), pass: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64, rule: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound, rule: rule.into(), pass: value >= bound }
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {} ({} = {:.6e}, bound {:.6e})",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.rule,
            self.value,
            self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub mean: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub count: BTreeMap<String, usize>,
}

impl Ensemble {
    /// Statistics of every named scalar, reduced in index order.
    pub fn of<R: Record>(records: &[R]) -> Self {
        let mut cols: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for r in records {
            for (k, v) in r.scalars() {
                cols.entry(k).or_default().push(v);
            }
        }
        let mut e = Self { mean: BTreeMap::new(), stderr: BTreeMap::new(), count: BTreeMap::new() };
        for (k, v) in cols {
            let s = Summary::of(v);
            e.mean.insert(k.into(), s.mean);
            e.stderr.insert(k.into(), s.stderr);
            e.count.insert(k.into(), s.count);
        }
        e
    }

    pub fn mean(&self, k: &str) -> f64 {
        self.mean.get(k).copied().unwrap_or(f64::NAN)
    }

    pub fn stderr(&self, k: &str) -> f64 {
        self.stderr.get(k).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport<R: Record> {
    pub command: String,
    pub config: RunConfig,
    pub per_path: Vec<R>,
    pub ensemble: Ensemble,
    /// None when the closed form is infinite.
    pub closed_form_alpha: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl<R: Record> EnsembleReport<R> {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(R::csv_header(self.config.d)).expect("in-memory write");
                for r in &self.per_path {
                    w.write_record(r.csv_row()).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
            }
        }
    }
}

/// Pretty JSON with non-finite numbers turned into null.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}
