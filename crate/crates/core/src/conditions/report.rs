use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Overall outcome of a condition check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HoldsEstimated,
    InconclusiveGrowth,
    ViolatedWitness,
    DivergentTerm,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::HoldsEstimated => "holds_estimated",
            Verdict::InconclusiveGrowth => "inconclusive_growth",
            Verdict::ViolatedWitness => "violated_witness",
            Verdict::DivergentTerm => "divergent_term",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Finite,
    Divergent,
    Violated,
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Smallest constant that makes the condition hold here.
    Finite(f64),
    /// A functional in the condition is infinite.
    Divergent(String),
    /// The condition fails for every constant.
    Violated(String),
}

impl Outcome {
    /// The more demanding of two outcomes.
    pub fn worst(self, other: Outcome) -> Outcome {
        match (self, other) {
            (d @ Outcome::Divergent(_), _) | (_, d @ Outcome::Divergent(_)) => d,
            (v @ Outcome::Violated(_), _) | (_, v @ Outcome::Violated(_)) => v,
            (Outcome::Finite(a), Outcome::Finite(b)) => Outcome::Finite(a.max(b)),
        }
    }
}

mod json_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub coords: Vec<f64>,
    #[serde(with = "json_float")]
    pub constant: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub coords: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub points: usize,
    #[serde(with = "json_float")]
    pub best_constant: f64,
    pub argmax: Vec<f64>,
}

/// Names of the grid axes and their values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: String,
    pub grid: GridAxes,
    pub constants: Vec<PointResult>,
    #[serde(with = "json_float")]
    pub best_constant: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub refinement_history: Vec<RefinementStep>,
    pub notes: Vec<String>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub sub_reports: Vec<ConditionReport>,
}

/// Relative growth below which an edge value counts as settled.
const GROWTH_EPS: f64 = 1e-6;

impl ConditionReport {
    /// Report with a fixed verdict and no grid, for trivially decided cases.
    pub fn trivial(id: impl Into<String>, verdict: Verdict, best_constant: f64, note: impl Into<String>) -> Self {
        Self {
            condition_id: id.into(),
            grid: GridAxes::default(),
            constants: Vec::new(),
            best_constant,
            verdict,
            witnesses: Vec::new(),
            refinement_history: Vec::new(),
            notes: vec![note.into()],
            metrics: BTreeMap::new(),
            sub_reports: Vec::new(),
        }
    }

    /// Builds a report from outcomes on a tensor grid (row-major, last axis fastest).
    pub fn from_grid(id: impl Into<String>, axes: GridAxes, outcomes: Vec<Outcome>) -> Self {
        let dims: Vec<usize> = axes.values.iter().map(Vec::len).collect();
        assert_eq!(dims.iter().product::<usize>(), outcomes.len(), "outcome count must match the grid");
        let coords_of = |flat: usize| -> Vec<usize> {
            let mut idx = vec![0; dims.len()];
            let mut r = flat;
            for d in (0..dims.len()).rev() {
                idx[d] = r % dims[d];
                r /= dims[d];
            }
            idx
        };
        let point = |idx: &[usize]| -> Vec<f64> { idx.iter().zip(&axes.values).map(|(i, v)| v[*i]).collect() };
        let mut constants = Vec::with_capacity(outcomes.len());
        let mut witnesses = Vec::new();
        let mut verdict = Verdict::HoldsEstimated;
        for (flat, o) in outcomes.iter().enumerate() {
            let c = point(&coords_of(flat));
            let (value, status) = match o {
                Outcome::Finite(v) => (*v, PointStatus::Finite),
                Outcome::Divergent(why) => {
                    if verdict < Verdict::DivergentTerm {
                        witnesses.clear();
                    }
                    verdict = Verdict::DivergentTerm;
                    if witnesses.is_empty() {
                        witnesses.push(Witness { coords: c.clone(), detail: why.clone() });
                    }
                    (f64::INFINITY, PointStatus::Divergent)
                }
                Outcome::Violated(why) => {
                    if verdict < Verdict::ViolatedWitness {
                        verdict = Verdict::ViolatedWitness;
                        witnesses.clear();
                    }
                    if verdict == Verdict::ViolatedWitness && witnesses.is_empty() {
                        witnesses.push(Witness { coords: c.clone(), detail: why.clone() });
                    }
                    (f64::INFINITY, PointStatus::Violated)
                }
            };
            constants.push(PointResult { coords: c, constant: value, status });
        }
        let sup_over = |keep: &dyn Fn(&[usize]) -> bool| -> (usize, f64, Option<usize>) {
            let mut best = (0usize, f64::NEG_INFINITY, None);
            for flat in 0..outcomes.len() {
                let idx = coords_of(flat);
                if !keep(&idx) {
                    continue;
                }
                best.0 += 1;
                let v = constants[flat].constant;
                if v > best.1 {
                    best.1 = v;
                    best.2 = Some(flat);
                }
            }
            best
        };
        let coarse = sup_over(&|idx: &[usize]| idx.iter().all(|i| i % 2 == 0));
        let full = sup_over(&|_: &[usize]| true);
        let mut history = Vec::new();
        for (n, v, arg) in [coarse, full] {
            if n > 0 {
                history.push(RefinementStep {
                    points: n,
                    best_constant: v.max(0.0),
                    argmax: arg.map(|f| constants[f].coords.clone()).unwrap_or_default(),
                });
            }
        }
        let best_constant = full.1.max(0.0);
        let mut notes = Vec::new();
        let mut metrics = BTreeMap::new();
        if verdict == Verdict::HoldsEstimated {
            if let Some(arg) = full.2 {
                let idx = coords_of(arg);
                let edge = classify_edge(&idx, &dims, &|i: &[usize]| {
                    let mut flat = 0;
                    for d in 0..dims.len() {
                        flat = flat * dims[d] + i[d];
                    }
                    constants[flat].constant
                });
                match edge {
                    Edge::Settled => {}
                    Edge::Converging(limit) => {
                        notes.push(format!("supremum at the grid edge; extrapolated limit {limit:e}"));
                        metrics.insert("extrapolated_sup".to_string(), limit);
                    }
                    Edge::Growing(axis) => {
                        verdict = Verdict::InconclusiveGrowth;
                        witnesses.push(Witness {
                            coords: constants[arg].coords.clone(),
                            detail: format!("supremum at the edge of the {} grid and still growing", axes.names[axis]),
                        });
                    }
                }
            }
        }
        if constants.is_empty() {
            notes.push("empty grid".into());
        }
        Self {
            condition_id: id.into(),
            grid: axes,
            constants,
            best_constant,
            verdict,
            witnesses,
            refinement_history: history,
            notes,
            metrics,
            sub_reports: Vec::new(),
        }
    }

    /// Parent report whose verdict is the worst of its children.
    pub fn combine(id: impl Into<String>, children: Vec<ConditionReport>) -> Self {
        let verdict = children.iter().map(|c| c.verdict).max().unwrap_or(Verdict::HoldsEstimated);
        let best_constant = children.iter().map(|c| c.best_constant).fold(0.0, f64::max);
        let witnesses = children
            .iter()
            .filter(|c| c.verdict == verdict)
            .flat_map(|c| {
                c.witnesses.iter().map(move |w| Witness {
                    coords: w.coords.clone(),
                    detail: format!("{}: {}", c.condition_id, w.detail),
                })
            })
            .collect();
        Self {
            condition_id: id.into(),
            grid: GridAxes::default(),
            constants: Vec::new(),
            best_constant,
            verdict,
            witnesses,
            refinement_history: Vec::new(),
            notes: Vec::new(),
            metrics: BTreeMap::new(),
            sub_reports: children,
        }
    }

    /// Whether the constant `c` meets every evaluated grid point, here and
    /// in all sub-reports.
    pub fn holds_with(&self, c: f64) -> bool {
        self.constants.iter().all(|p| p.status == PointStatus::Finite && p.constant <= c)
            && self.sub_reports.iter().all(|s| s.holds_with(c))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_metric(mut self, name: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(name.into(), value);
        self
    }

    /// Looks up a sub-report by id, searching depth-first.
    pub fn find(&self, id: &str) -> Option<&ConditionReport> {
        if self.condition_id == id {
            return Some(self);
        }
        self.sub_reports.iter().find_map(|s| s.find(id))
    }

    /// Flat CSV, one row per grid point of this report and its sub-reports.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition_id,coords,constant,status\n");
        self.write_rows(&mut out);
        out
    }

    fn write_rows(&self, out: &mut String) {
        for p in &self.constants {
            let coords: Vec<String> = p.coords.iter().map(|c| format!("{c:e}")).collect();
            let status = match p.status {
                PointStatus::Finite => "finite",
                PointStatus::Divergent => "divergent",
                PointStatus::Violated => "violated",
            };
            let _ = writeln!(out, "{},{},{:e},{}", self.condition_id, coords.join(";"), p.constant, status);
        }
        for s in &self.sub_reports {
            s.write_rows(out);
        }
    }
}

enum Edge {
    Settled,
    /// At the edge with log-increments decaying geometrically towards a limit.
    Converging(f64),
    /// At the edge and growing without visible deceleration along this axis.
    Growing(usize),
}

/// Classifies a maximum at `idx` against the grid edges.
///
/// Outward log-increments `r₁` (edge) and `r₂` (next inward) with ratio
/// `ρ = r₁/r₂ < 0.9` are treated as a convergent geometric series with
/// limit `v·exp(r₁ρ/(1-ρ))`; otherwise the growth counts as unbounded.
fn classify_edge(idx: &[usize], dims: &[usize], value: &dyn Fn(&[usize]) -> f64) -> Edge {
    let mut state = Edge::Settled;
    for d in 0..dims.len() {
        if dims[d] < 3 {
            continue;
        }
        let inward: i64 = if idx[d] == 0 {
            1
        } else if idx[d] == dims[d] - 1 {
            -1
        } else {
            continue;
        };
        let at = |k: i64| {
            let mut j = idx.to_vec();
            j[d] = (idx[d] as i64 + inward * k) as usize;
            value(&j)
        };
        let (v0, v1, v2) = (at(0), at(1), at(2));
        if !(v1 > 0.0) {
            if v0 > 0.0 {
                return Edge::Growing(d);
            }
            continue;
        }
        let r1 = (v0 / v1).ln();
        if r1 <= GROWTH_EPS {
            continue;
        }
        let r2 = if v2 > 0.0 { (v1 / v2).ln() } else { f64::INFINITY };
        let rho = if r2 > 0.0 { r1 / r2 } else { f64::INFINITY };
        if rho >= 0.9 {
            return Edge::Growing(d);
        }
        let limit = v0 * (r1 * rho / (1.0 - rho)).exp();
        if let Edge::Converging(l) = state {
            state = Edge::Converging(l.max(limit));
        } else {
            state = Edge::Converging(limit);
        }
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes(x: Vec<f64>) -> GridAxes {
        GridAxes { names: vec!["x".into()], values: vec![x] }
    }

    #[test]
    fn verdicts_from_outcomes() {
        let r = ConditionReport::from_grid("flat", axes(vec![1.0, 2.0, 3.0]), vec![Outcome::Finite(1.0); 3]);
        assert_eq!(r.verdict, Verdict::HoldsEstimated);
        assert_eq!(r.best_constant, 1.0);
        // Power growth on a log grid: constant log-increments.
        let grow: Vec<Outcome> = (0..5).map(|i| Outcome::Finite(2f64.powi(i))).collect();
        let r = ConditionReport::from_grid("grow", axes(vec![1.0, 2.0, 3.0, 4.0, 5.0]), grow);
        assert_eq!(r.verdict, Verdict::InconclusiveGrowth);
        // Logarithmic growth: increments decay too slowly to converge.
        let slow: Vec<Outcome> = (20..30).map(|i| Outcome::Finite(i as f64)).collect();
        let r = ConditionReport::from_grid("slow", axes((20..30).map(f64::from).collect()), slow);
        assert_eq!(r.verdict, Verdict::InconclusiveGrowth);
        let mixed = vec![Outcome::Finite(1.0), Outcome::Violated("v".into()), Outcome::Divergent("d".into())];
        let r = ConditionReport::from_grid("mixed", axes(vec![1.0, 2.0, 3.0]), mixed);
        assert_eq!(r.verdict, Verdict::DivergentTerm);
        assert_eq!(r.witnesses[0].coords, vec![3.0]);
        let v = vec![Outcome::Finite(1.0), Outcome::Violated("v".into())];
        let r = ConditionReport::from_grid("v", axes(vec![1.0, 2.0]), v);
        assert_eq!(r.verdict, Verdict::ViolatedWitness);
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn settling_edge_is_not_growth() {
        // 2 - 2^{-k}: increments halve, so the sup converges to 2.
        let vals: Vec<Outcome> = (0..10).map(|k| Outcome::Finite(2.0 - 0.5f64.powi(k))).collect();
        let r = ConditionReport::from_grid("settle", axes((0..10).map(f64::from).collect()), vals);
        assert_eq!(r.verdict, Verdict::HoldsEstimated);
        assert!((r.metrics["extrapolated_sup"] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn refinement_history_and_json() {
        let vals: Vec<Outcome> = [1.0, 3.0, 2.0, 1.0, 0.5].iter().map(|v| Outcome::Finite(*v)).collect();
        let r = ConditionReport::from_grid("h", axes(vec![1.0, 2.0, 3.0, 4.0, 5.0]), vals);
        assert_eq!(r.refinement_history.len(), 2);
        assert_eq!(r.refinement_history[0].best_constant, 2.0);
        assert_eq!(r.refinement_history[1].best_constant, 3.0);
        assert_eq!(r.refinement_history[1].argmax, vec![2.0]);
        let d = ConditionReport::from_grid("d", axes(vec![1.0]), vec![Outcome::Divergent("x".into())]);
        let json = serde_json::to_string(&d).unwrap();
        let back: ConditionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.constants[0].constant, f64::INFINITY);
        assert!(d.to_csv().contains("divergent"));
    }
}
