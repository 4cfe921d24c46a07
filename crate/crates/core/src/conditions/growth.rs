use super::report::{ConditionReport, GridAxes, PointResult, PointStatus, Verdict, Witness};

/// Checks `K(x, y) ≤ K(x, z) + K(z, y)` on triples `(y, z, x)` with `y < z < x`.
///
/// The per-triple constant is the normalized excess
/// `(K(x,y) - K(x,z) - K(z,y)) / scale`, which is `≤ 1e-12` when the triple passes.
pub fn check_growth(id: &str, k: &dyn Fn(f64, f64) -> f64, triples: &[(f64, f64, f64)]) -> ConditionReport {
    let mut constants = Vec::with_capacity(triples.len());
    let mut worst: Option<(f64, usize)> = None;
    let mut notes = Vec::new();
    for (i, &(y, z, x)) in triples.iter().enumerate() {
        if !(y < z && z < x) {
            notes.push(format!("triple {i} is not ordered; skipped"));
            continue;
        }
        let lhs = k(x, y);
        let rhs = k(x, z) + k(z, y);
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let excess = (lhs - rhs) / scale;
        let violated = excess > 1e-12;
        constants.push(PointResult {
            coords: vec![y, z, x],
            constant: excess,
            status: if violated { PointStatus::Violated } else { PointStatus::Finite },
        });
        if violated && worst.map_or(true, |(w, _)| excess > w) {
            worst = Some((excess, constants.len() - 1));
        }
    }
    let (verdict, witnesses) = match worst {
        Some((e, j)) => (
            Verdict::ViolatedWitness,
            vec![Witness {
                coords: constants[j].coords.clone(),
                detail: format!("K(x,y) exceeds K(x,z)+K(z,y) by relative {e:e}"),
            }],
        ),
        None => (Verdict::HoldsEstimated, Vec::new()),
    };
    let best = constants.iter().map(|p| p.constant).fold(f64::NEG_INFINITY, f64::max);
    let mut report = ConditionReport::trivial(id, verdict, best.max(0.0), format!("{} triples", constants.len()));
    report.grid = GridAxes {
        names: vec!["y".into(), "z".into(), "x".into()],
        values: Vec::new(),
    };
    report.constants = constants;
    report.witnesses = witnesses;
    report.notes.extend(notes);
    report
}

/// All ordered triples from every `stride`-th point of `grid`.
pub fn grid_triples(grid: &[f64], stride: usize) -> Vec<(f64, f64, f64)> {
    let pts: Vec<f64> = grid.iter().step_by(stride.max(1)).copied().collect();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for l in j + 1..pts.len() {
                out.push((pts[i], pts[j], pts[l]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let sq = |x: f64, y: f64| (x - y) * (x - y);
        let r = check_growth("sq", &sq, &[(1.0, 2.0, 3.0)]);
        assert_eq!(r.verdict, Verdict::ViolatedWitness);
        assert_eq!(r.witnesses[0].coords, vec![1.0, 2.0, 3.0]);
        let hardy = |x: f64, y: f64| if y < x { 1.0 } else { 0.0 };
        let triples = grid_triples(&crate::scalar::log_grid(1e-2, 1e2, 13), 1);
        assert_eq!(triples.len(), 286);
        assert_eq!(check_growth("hardy", &hardy, &triples).verdict, Verdict::HoldsEstimated);
        let k = |x: f64, y: f64| (-(x + y)).exp();
        assert_eq!(check_growth("exp", &k, &triples).verdict, Verdict::HoldsEstimated);
    }
}
