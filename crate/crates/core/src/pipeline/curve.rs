use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPoint {
    /// Threshold (or penalty level for a LASSO path).
    pub s: f64,
    pub tpp: f64,
    pub fdp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    /// Ordered by increasing `s`, hence non-increasing TPP.
    pub points: Vec<EmpiricalPoint>,
    pub mse: f64,
}

/// TPP and FDP of a selected set, with `0/0 = 0`.
pub fn tpp_fdp(selected: impl Iterator<Item = bool>, beta_true: &DVector<f64>) -> (f64, f64) {
    let (mut tp, mut fp) = (0usize, 0usize);
    for (sel, b) in selected.zip(beta_true.iter()) {
        if sel {
            if *b != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let signals = beta_true.iter().filter(|b| **b != 0.0).count();
    let tpp = if signals == 0 { 0.0 } else { tp as f64 / signals as f64 };
    let fdp = if tp + fp == 0 { 0.0 } else { fp as f64 / (tp + fp) as f64 };
    (tpp, fdp)
}

/// Hard-thresholding `estimate` at every `s ∈ {0} ∪ {|estimate_i|} ∪ {∞}`.
///
/// Consecutive thresholds that select the same set are merged into the
/// smallest one.
pub fn empirical_curve(estimate: &DVector<f64>, beta_true: &DVector<f64>) -> EmpiricalCurve {
    assert_eq!(estimate.len(), beta_true.len(), "estimate and truth must have equal length");
    let p = estimate.len();
    let mse = (estimate - beta_true).norm_squared() / p as f64;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| estimate[b].abs().total_cmp(&estimate[a].abs()));
    let signals = beta_true.iter().filter(|b| **b != 0.0).count();
    let rates = |tp: usize, fp: usize| {
        let tpp = if signals == 0 { 0.0 } else { tp as f64 / signals as f64 };
        let fdp = if tp + fp == 0 { 0.0 } else { fp as f64 / (tp + fp) as f64 };
        (tpp, fdp)
    };
    // Walk thresholds from large to small, adding coordinates whose |estimate|
    // exceeds the current level.
    let mut thresholds: Vec<f64> = order.iter().map(|&i| estimate[i].abs()).collect();
    thresholds.push(0.0);
    thresholds.dedup();
    let mut points = vec![EmpiricalPoint { s: f64::INFINITY, tpp: 0.0, fdp: 0.0 }];
    let (mut tp, mut fp, mut k) = (0, 0, 0);
    for &s in &thresholds {
        while k < p && estimate[order[k]].abs() > s {
            if beta_true[order[k]] != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let (tpp, fdp) = rates(tp, fp);
        let last = points.last_mut().expect("non-empty");
        if last.tpp == tpp && last.fdp == fdp {
            last.s = s;
        } else {
            points.push(EmpiricalPoint { s, tpp, fdp });
        }
    }
    points.reverse();
    EmpiricalCurve { points, mse }
}

impl EmpiricalCurve {
    /// Curve from explicit `(s, tpp, fdp)` points such as a LASSO path.
    pub fn from_points(mut points: Vec<EmpiricalPoint>, mse: f64) -> Self {
        points.sort_by(|a, b| a.s.total_cmp(&b.s));
        Self { points, mse }
    }

    pub fn max_tpp(&self) -> f64 {
        self.points.iter().map(|p| p.tpp).fold(0.0, f64::max)
    }

    /// FDP at TPP `zeta`, interpolating linearly in TPP between the lowest
    /// FDPs attained at neighbouring TPP levels. `None` past the largest TPP.
    pub fn fdp_at(&self, zeta: f64) -> Option<f64> {
        let mut levels: Vec<(f64, f64)> = Vec::new();
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.tpp, p.fdp)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for (t, f) in pts {
            match levels.last() {
                Some(&(lt, _)) if lt == t => {}
                _ => levels.push((t, f)),
            }
        }
        let first = levels.first()?;
        if zeta <= first.0 {
            return (zeta == first.0 || first.0 == 0.0).then_some(first.1);
        }
        for w in levels.windows(2) {
            let ((t0, f0), (t1, f1)) = (w[0], w[1]);
            if zeta <= t1 {
                return Some(f0 + (f1 - f0) * (zeta - t0) / (t1 - t0));
            }
        }
        None
    }
}
