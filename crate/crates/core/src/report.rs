//! Records produced by the verification routines.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// `lhs <= rhs`; passes when every margin `rhs / lhs` is at least `1 - slack`.
    Inequality,
    /// `lhs == rhs`; passes when every gap `|lhs - rhs|` is at most `slack`.
    Identity,
}

/// One evaluated `(t, z)` pair. Sides are kept in log form so that powers
/// and exponentials of large exponents stay representable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateEntry {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub log_lhs: f64,
    pub log_rhs: f64,
    /// `rhs / lhs`.
    pub margin: f64,
    /// `|log_lhs - log_rhs|`.
    pub gap: f64,
    /// Largest Cauchy certificate among the pathwise integrals used, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy: Option<f64>,
}

impl EstimateEntry {
    pub fn new(t: f64, x: f64, y: f64, log_lhs: f64, log_rhs: f64) -> Self {
        Self { t, x, y, log_lhs, log_rhs, margin: (log_rhs - log_lhs).exp(), gap: (log_lhs - log_rhs).abs(), cauchy: None }
    }

    pub fn with_cauchy(mut self, c: Option<f64>) -> Self {
        self.cauchy = c;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub kind: ReportKind,
    pub slack: f64,
    pub entries: Vec<EstimateEntry>,
    pub min_margin: f64,
    pub max_gap: f64,
    pub pass: bool,
    /// Set when a hypothesis of the estimate fails and the check is skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gated: Option<String>,
    /// Named scalar pieces (integrals, constants) for the last entry or the whole run.
    pub terms: BTreeMap<String, f64>,
    /// Identity reports: gap per partition level, coarsest first.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub level_gaps: Vec<f64>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, kind: ReportKind, slack: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            slack,
            entries: Vec::new(),
            min_margin: f64::INFINITY,
            max_gap: 0.0,
            pass: true,
            gated: None,
            terms: BTreeMap::new(),
            level_gaps: Vec::new(),
        }
    }

    pub fn gated(name: impl Into<String>, kind: ReportKind, slack: f64, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name, kind, slack);
        r.gated = Some(reason.into());
        r.pass = false;
        r
    }

    pub fn push(&mut self, e: EstimateEntry) {
        self.min_margin = self.min_margin.min(e.margin);
        self.max_gap = self.max_gap.max(e.gap);
        self.entries.push(e);
        self.update_pass();
    }

    pub fn term(&mut self, key: &str, v: f64) {
        self.terms.insert(key.to_string(), v);
    }

    fn update_pass(&mut self) {
        if self.gated.is_some() {
            self.pass = false;
            return;
        }
        let finite = self.entries.iter().all(|e| e.log_lhs.is_finite() && e.log_rhs.is_finite());
        self.pass = finite
            && match self.kind {
                ReportKind::Inequality => self.min_margin >= 1.0 - self.slack,
                ReportKind::Identity => self.max_gap <= self.slack,
            };
    }

    pub fn extend(&mut self, other: EstimateReport) {
        for e in other.entries {
            self.push(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequality_pass_flag_follows_margin() {
        let mut r = EstimateReport::new("x", ReportKind::Inequality, 1e-3);
        r.push(EstimateEntry::new(1.0, 0.0, 1.0, 0.0, 0.5));
        assert!(r.pass);
        r.push(EstimateEntry::new(1.0, 0.0, 1.0, 0.0, -0.01));
        assert!(!r.pass);
        assert!((r.min_margin - (-0.01f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn identity_pass_flag_follows_gap() {
        let mut r = EstimateReport::new("x", ReportKind::Identity, 1e-4);
        r.push(EstimateEntry::new(1.0, 0.0, 1.0, 0.3, 0.30005));
        assert!(r.pass);
        r.push(EstimateEntry::new(1.0, 0.0, 1.0, 0.3, 0.31));
        assert!(!r.pass);
    }

    #[test]
    fn gated_report_never_passes() {
        let r = EstimateReport::gated("k", ReportKind::Inequality, 0.05, "kappa-hat >= 2");
        assert!(!r.pass);
    }
}
