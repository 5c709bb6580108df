//! Cell-level scoring of predicted spans against gold spans.
//!
//! Each masked cell compares a predicted label set with a gold label set.
//! Accuracy counts cells whose sets match exactly (two empty sets match).
//! Precision, recall and F1 are micro-averaged over `(cell, label)` instances,
//! with per-class and static/dynamic breakdowns kept as raw counts so that
//! reports aggregate by summation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;
use core::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::SpanTargets;
use crate::taxonomy::{Kind, Taxonomy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("prediction has {pred} spans, gold has {gold}")]
    SpanCountMismatch { pred: usize, gold: usize },
    #[error("nothing to aggregate")]
    EmptyInput,
}

/// True-positive, false-positive and false-negative totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Ratio with the zero-denominator rule: `1.0` when the opposite error count
/// is also zero, otherwise `0.0`.
fn ratio(hits: u64, misses: u64, opposite: u64) -> f64 {
    match hits + misses {
        0 if opposite == 0 => 1.0,
        0 => 0.0,
        den => hits as f64 / den as f64,
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.fp, self.fn_)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.fn_, self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    /// Gold instances.
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
            support: self.support(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Scored cells.
    pub cells: u64,
    /// Cells whose predicted set equals the gold set.
    pub exact: u64,
    pub total: Counts,
    pub per_class: BTreeMap<String, Counts>,
    pub dynamic: Counts,
    #[serde(rename = "static")]
    pub static_: Counts,
}

impl MetricsReport {
    pub fn accuracy(&self) -> f64 {
        if self.cells == 0 {
            1.0
        } else {
            self.exact as f64 / self.cells as f64
        }
    }

    pub fn precision(&self) -> f64 {
        self.total.precision()
    }

    pub fn recall(&self) -> f64 {
        self.total.recall()
    }

    pub fn f1(&self) -> f64 {
        self.total.f1()
    }

    /// Macro average over classes with at least one gold or predicted instance.
    pub fn macro_prf(&self) -> Prf {
        let n = self.per_class.len();
        if n == 0 {
            return self.total.prf();
        }
        let (p, r, f) = self.per_class.values().fold((0.0, 0.0, 0.0), |(p, r, f), c| {
            (p + c.precision(), r + c.recall(), f + c.f1())
        });
        Prf {
            precision: p / n as f64,
            recall: r / n as f64,
            f1: f / n as f64,
            support: self.total.support(),
        }
    }

    fn merge(&mut self, other: &MetricsReport) {
        self.cells += other.cells;
        self.exact += other.exact;
        self.total += other.total;
        self.dynamic += other.dynamic;
        self.static_ += other.static_;
        for (label, counts) in &other.per_class {
            *self.per_class.entry(label.clone()).or_default() += *counts;
        }
    }
}

/// Renders the fixed-key report with three decimals.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cells: {}", self.cells)?;
        writeln!(f, "accuracy: {:.3}", self.accuracy())?;
        writeln!(f, "precision: {:.3}", self.precision())?;
        writeln!(f, "recall: {:.3}", self.recall())?;
        writeln!(f, "f1: {:.3}", self.f1())?;
        writeln!(f, "counts: tp={} fp={} fn={}", self.total.tp, self.total.fp, self.total.fn_)?;
        for (name, c) in [("dynamic", &self.dynamic), ("static", &self.static_)] {
            writeln!(
                f,
                "{name}: precision={:.3} recall={:.3} f1={:.3} support={}",
                c.precision(),
                c.recall(),
                c.f1(),
                c.support()
            )?;
        }
        let m = self.macro_prf();
        writeln!(f, "macro: precision={:.3} recall={:.3} f1={:.3}", m.precision, m.recall, m.f1)?;
        writeln!(f, "per_class:")?;
        for (label, c) in &self.per_class {
            writeln!(
                f,
                "  {label}: precision={:.3} recall={:.3} f1={:.3} support={}",
                c.precision(),
                c.recall(),
                c.f1(),
                c.support()
            )?;
        }
        Ok(())
    }
}

/// Scores predicted spans against gold spans, cell by cell.
pub fn score(
    pred: &SpanTargets,
    gold: &SpanTargets,
    taxonomy: &Taxonomy,
) -> Result<MetricsReport, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::SpanCountMismatch { pred: pred.len(), gold: gold.len() });
    }
    let mut report = MetricsReport::default();
    for (p, g) in pred.spans.iter().zip(&gold.spans) {
        report.cells += 1;
        if p == g {
            report.exact += 1;
        }
        let mut tally = |id, counts: Counts| {
            report.total += counts;
            match taxonomy.kind(id) {
                Kind::Dynamic => report.dynamic += counts,
                Kind::Static => report.static_ += counts,
            }
            *report.per_class.entry(taxonomy.name(id).to_string()).or_default() += counts;
        };
        for id in p.iter() {
            if g.contains(id) {
                tally(id, Counts { tp: 1, ..Counts::default() });
            } else {
                tally(id, Counts { fp: 1, ..Counts::default() });
            }
        }
        for id in g.iter().filter(|id| !p.contains(*id)) {
            tally(id, Counts { fn_: 1, ..Counts::default() });
        }
    }
    Ok(report)
}

/// Sums counts across reports and recomputes every ratio from the sums.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport, MetricsError> {
    let (first, rest) = reports.split_first().ok_or(MetricsError::EmptyInput)?;
    let mut total = first.clone();
    for r in rest {
        total.merge(r);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::LabelSet;
    use alloc::vec::Vec;

    fn spans(t: &Taxonomy, cells: &[&[&str]]) -> SpanTargets {
        SpanTargets::new(
            cells
                .iter()
                .map(|c| c.iter().map(|l| t.id(l).unwrap()).collect::<LabelSet>())
                .collect(),
        )
    }

    #[test]
    fn perfect_prediction() {
        let t = Taxonomy::default();
        let g = spans(&t, &[&["car"]]);
        let r = score(&g, &g, &t).unwrap();
        assert_eq!((r.accuracy(), r.precision(), r.recall(), r.f1()), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn worked_example() {
        let t = Taxonomy::default();
        let gold = spans(&t, &[&["car"], &[], &["walkway", "lane"]]);
        let pred = spans(&t, &[&["car"], &["car"], &["walkway"]]);
        let r = score(&pred, &gold, &t).unwrap();
        assert_eq!(r.accuracy(), 1.0 / 3.0);
        assert_eq!(r.total, Counts { tp: 2, fp: 1, fn_: 1 });
        assert_eq!(r.precision(), 2.0 / 3.0);
        assert_eq!(r.recall(), 2.0 / 3.0);
        assert!((r.f1() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_class["car"], Counts { tp: 1, fp: 1, fn_: 0 });
        assert_eq!(r.static_, Counts { tp: 1, fp: 0, fn_: 1 });
        assert_eq!(r.dynamic.support() + r.static_.support(), r.total.support());
    }

    #[test]
    fn all_empty_is_perfect() {
        let t = Taxonomy::default();
        let g = spans(&t, &[&[], &[]]);
        let r = score(&g, &g, &t).unwrap();
        assert_eq!((r.accuracy(), r.precision(), r.recall(), r.f1()), (1.0, 1.0, 1.0, 1.0));
        // predicting nothing when something was there
        let gold = spans(&t, &[&["car"]]);
        let r = score(&spans(&t, &[&[]]), &gold, &t).unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn span_count_mismatch() {
        let t = Taxonomy::default();
        let err = score(&spans(&t, &[&[]]), &spans(&t, &[&[], &[]]), &t);
        assert_eq!(err, Err(MetricsError::SpanCountMismatch { pred: 1, gold: 2 }));
    }

    #[test]
    fn aggregate_hand_count() {
        let a = MetricsReport { total: Counts { tp: 1, fp: 0, fn_: 1 }, ..Default::default() };
        let b = MetricsReport { total: Counts { tp: 1, fp: 1, fn_: 0 }, ..Default::default() };
        let r = aggregate(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(r.precision(), 2.0 / 3.0);
        assert_eq!(r.recall(), 2.0 / 3.0);
        assert_eq!(aggregate(&[b.clone(), a.clone()]).unwrap(), r);
        assert_eq!(aggregate(core::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(aggregate(&[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn report_text_has_fixed_keys() {
        let t = Taxonomy::default();
        let g = spans(&t, &[&["car", "lane"]]);
        let text = score(&g, &g, &t).unwrap().to_string();
        let keys: Vec<&str> = text.lines().filter_map(|l| l.split(':').next()).collect();
        for key in ["accuracy", "precision", "recall", "f1", "dynamic", "static", "per_class"] {
            assert!(keys.contains(&key), "{key} missing from {text}");
        }
        assert!(text.contains("accuracy: 1.000"));
    }
}
