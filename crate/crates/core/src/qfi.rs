//! From a binned fidelity distribution to a functional-information curve.
//!
//! The probability of each fidelity is modelled with a piecewise-constant
//! regression tree over the non-empty bins, floored, mapped to bits with
//! `-log2`, and finally smoothed with a ridge-penalized cubic B-spline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::BinnedDistribution;

/// `-log2 p`.
pub fn information_bits(p: f64) -> f64 {
    -p.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub grid_points: usize,
    pub n_knots: usize,
    pub ridge_lambda: f64,
}

impl Default for QfiParams {
    fn default() -> Self {
        QfiParams { max_depth: 8, min_leaf: 2, grid_points: 1001, n_knots: 25, ridge_lambda: 1e-3 }
    }
}

impl QfiParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points must be at least 2"));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::invalid(format!("ridge_lambda must be non-negative, got {}", self.ridge_lambda)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64, samples: usize },
    Split { threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

/// CART regression tree on a single feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    root: TreeNode,
    max_depth: usize,
    min_leaf: usize,
    r2: f64,
}

impl RegressionTree {
    /// Fits on `(x, y)` pairs by greedy squared-error splitting. Ties in the
    /// split score go to the smaller threshold.
    pub fn fit(points: &[(f64, f64)], max_depth: usize, min_leaf: usize) -> Result<RegressionTree> {
        if points.is_empty() {
            return Err(Error::InsufficientData("regression tree needs at least one point".into()));
        }
        if min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("regression inputs must be finite"));
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let root = grow(&sorted, 0, max_depth, min_leaf);
        let mut tree = RegressionTree { root, max_depth, min_leaf, r2: 0.0 };
        tree.r2 = tree.r2_score(points);
        Ok(tree)
    }

    pub fn predict(&self, x: f64) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { threshold, left, right } => node = if x <= *threshold { left } else { right },
            }
        }
    }

    /// Coefficient of determination on the given points (1 for a
    /// zero-variance target fitted exactly).
    pub fn r2_score(&self, points: &[(f64, f64)]) -> f64 {
        let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
        let ss_res: f64 = points.iter().map(|p| (p.1 - self.predict(p.0)).powi(2)).sum();
        if ss_tot == 0.0 {
            if ss_res == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - ss_res / ss_tot
        }
    }

    /// Training R².
    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn n_leaves(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }

    pub fn thresholds(&self) -> Vec<f64> {
        fn walk(n: &TreeNode, out: &mut Vec<f64>) {
            if let TreeNode::Split { threshold, left, right } = n {
                walk(left, out);
                out.push(*threshold);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

fn grow(points: &[(f64, f64)], depth: usize, max_depth: usize, min_leaf: usize) -> TreeNode {
    let n = points.len();
    if points.iter().all(|p| p.1 == points[0].1) {
        return TreeNode::Leaf { value: points[0].1, samples: n };
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let leaf = TreeNode::Leaf { value: mean, samples: n };
    if depth >= max_depth || n < 2 * min_leaf {
        return leaf;
    }
    // Centre targets so prefix-sum SSEs do not cancel catastrophically.
    let centred: Vec<f64> = points.iter().map(|p| p.1 - mean).collect();
    let parent_sse: f64 = centred.iter().map(|y| y * y).sum();
    if parent_sse <= 0.0 {
        return leaf;
    }
    let total_sum: f64 = centred.iter().sum();
    let total_sq = parent_sse;
    let mut best: Option<(f64, usize, f64)> = None;
    let (mut ls, mut lq) = (0.0, 0.0);
    for i in 0..n - 1 {
        ls += centred[i];
        lq += centred[i] * centred[i];
        let nl = i + 1;
        let nr = n - nl;
        if nl < min_leaf || nr < min_leaf || points[i].0 == points[i + 1].0 {
            continue;
        }
        let rs = total_sum - ls;
        let rq = total_sq - lq;
        let sse = (lq - ls * ls / nl as f64) + (rq - rs * rs / nr as f64);
        if best.is_none_or(|(b, _, _)| sse < b) {
            best = Some((sse, nl, 0.5 * (points[i].0 + points[i + 1].0)));
        }
    }
    match best {
        Some((sse, split, threshold)) if sse < parent_sse * (1.0 - 1e-12) => TreeNode::Split {
            threshold,
            left: Box::new(grow(&points[..split], depth + 1, max_depth, min_leaf)),
            right: Box::new(grow(&points[split..], depth + 1, max_depth, min_leaf)),
        },
        _ => leaf,
    }
}

/// Fits the probability model on every bin, `(mean_fidelity → probability)`.
/// Empty bins enter at their midpoint with probability zero, so fidelity
/// ranges the ensemble never reached are modelled as rare rather than
/// extrapolated from their neighbours.
pub fn fit_tree(bins: &BinnedDistribution, max_depth: usize, min_leaf: usize) -> Result<RegressionTree> {
    let occupied = bins.non_empty().count();
    if occupied < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 non-empty bins, got {occupied}")));
    }
    let points: Vec<(f64, f64)> = bins.bins.iter().map(|b| (b.mean_fidelity, b.probability)).collect();
    RegressionTree::fit(&points, max_depth, min_leaf)
}

/// `-log2(max(p̂(f), p_floor))`.
pub fn qfi_point(tree: &RegressionTree, f: f64, p_floor: f64) -> f64 {
    information_bits(tree.predict(f).max(p_floor))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiThresholdResult {
    pub threshold: f64,
    pub tail_probability: f64,
    pub information_bits: f64,
}

impl QfiThresholdResult {
    fn from_tail(threshold: f64, tail: f64, p_floor: f64) -> QfiThresholdResult {
        let tail_probability = tail.max(p_floor).min(1.0);
        QfiThresholdResult { threshold, tail_probability, information_bits: information_bits(tail_probability) }
    }
}

/// Threshold form on raw fidelities: tail `#{f ≥ T}/N`, floored at `1/(N+1)`.
pub fn qfi_threshold(fidelities: &[f64], threshold: f64) -> Result<QfiThresholdResult> {
    if fidelities.is_empty() {
        return Err(Error::InsufficientData("no fidelities".into()));
    }
    let n = fidelities.len();
    let hits = fidelities.iter().filter(|&&f| f >= threshold).count();
    Ok(QfiThresholdResult::from_tail(threshold, hits as f64 / n as f64, 1.0 / (n as f64 + 1.0)))
}

/// Threshold form on a histogram: the tail is the mass of bins whose lower
/// edge is at least `T`, so it is exact when `T` falls on a bin edge.
pub fn qfi_threshold_binned(bins: &BinnedDistribution, threshold: f64) -> QfiThresholdResult {
    let hits: u64 = bins.bins.iter().filter(|b| b.lo >= threshold - 1e-12).map(|b| b.count).sum();
    QfiThresholdResult::from_tail(threshold, hits as f64 / bins.total as f64, 1.0 / (bins.total as f64 + 1.0))
}

/// Clamped cubic B-spline basis with uniform interior knots on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct BSplineBasis {
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BSplineBasis {
    pub const DEGREE: usize = 3;

    pub fn new(lo: f64, hi: f64, n_interior: usize) -> BSplineBasis {
        assert!(hi > lo, "empty spline domain");
        let mut knots = vec![lo; Self::DEGREE + 1];
        let step = (hi - lo) / (n_interior + 1) as f64;
        knots.extend((1..=n_interior).map(|i| lo + step * i as f64));
        knots.extend(std::iter::repeat_n(hi, Self::DEGREE + 1));
        BSplineBasis { knots, lo, hi }
    }

    pub fn len(&self) -> usize {
        self.knots.len() - Self::DEGREE - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of all basis functions at `x` (Cox–de Boor).
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let k = &self.knots;
        let x = x.clamp(self.lo, self.hi);
        let m = self.len();
        // Span index: last knot interval [k[s], k[s+1]) containing x, with the
        // right end folded into the final non-degenerate interval.
        let span = if x >= self.hi { m - 1 } else { (Self::DEGREE..m).rev().find(|&s| k[s] <= x).unwrap_or(Self::DEGREE) };
        let mut n = vec![0.0; Self::DEGREE + 1];
        n[0] = 1.0;
        let mut left = [0.0; Self::DEGREE + 1];
        let mut right = [0.0; Self::DEGREE + 1];
        for j in 1..=Self::DEGREE {
            left[j] = x - k[span + 1 - j];
            right[j] = k[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        let mut out = vec![0.0; m];
        for (j, v) in n.into_iter().enumerate() {
            out[span - Self::DEGREE + j] = v;
        }
        out
    }
}

fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !d.is_finite() || d <= 0.0 {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

/// Ridge-penalized least-squares cubic spline: minimises
/// `‖y - c - Bβ‖² + λ‖β‖²` over the coefficients `β` and an unpenalized
/// intercept `c`, and returns the fitted values on the input grid.
///
/// The intercept is handled by centring the design columns and the targets.
/// If the penalized normal equations are not positive definite the solve is
/// retried once with `λ` raised tenfold (at least 1e-8).
pub fn fit_spline_smooth(grid: &[f64], values: &[f64], n_knots: usize, ridge_lambda: f64) -> Result<Vec<f64>> {
    if grid.len() != values.len() {
        return Err(Error::invalid(format!("grid has {} points, values {}", grid.len(), values.len())));
    }
    if grid.len() < 2 {
        return Err(Error::InsufficientData("spline smoothing needs at least 2 points".into()));
    }
    if grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::invalid("grid must be strictly ascending"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    if ridge_lambda.is_nan() || ridge_lambda < 0.0 {
        return Err(Error::invalid(format!("ridge_lambda must be non-negative, got {ridge_lambda}")));
    }
    let basis = BSplineBasis::new(grid[0], grid[grid.len() - 1], n_knots);
    let m = basis.len();
    let n = grid.len() as f64;
    let rows: Vec<Vec<f64>> = grid.iter().map(|&x| basis.eval(x)).collect();
    let y_mean = values.iter().sum::<f64>() / n;
    let mut col_mean = vec![0.0; m];
    for row in &rows {
        for (c, &b) in col_mean.iter_mut().zip(row) {
            *c += b / n;
        }
    }
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (row, &y) in rows.iter().zip(values) {
        let yc = y - y_mean;
        let centred: Vec<f64> = row.iter().zip(&col_mean).map(|(b, c)| b - c).collect();
        for (i, &bi) in centred.iter().enumerate() {
            rhs[i] += bi * yc;
            for (j, &bj) in centred.iter().enumerate().skip(i) {
                gram[i * m + j] += bi * bj;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[i * m + j] = gram[j * m + i];
        }
    }
    let solve = |lambda: f64| {
        let mut a = gram.clone();
        for i in 0..m {
            a[i * m + i] += lambda;
        }
        cholesky_solve(&a, &rhs, m)
    };
    let coef = match solve(ridge_lambda) {
        Some(c) => c,
        None => solve((ridge_lambda * 10.0).max(1e-8))
            .ok_or_else(|| Error::NumericalFailure("spline normal equations are singular".into()))?,
    };
    let offset = y_mean - col_mean.iter().zip(&coef).map(|(c, b)| c * b).sum::<f64>();
    Ok(rows.iter().map(|row| offset + row.iter().zip(&coef).map(|(b, c)| b * c).sum::<f64>()).collect())
}

/// Fit diagnostics and settings stored alongside a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveInfo {
    #[serde(default)]
    pub n_qubits: Option<usize>,
    pub total: u64,
    pub n_bins: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub grid_points: usize,
    pub n_knots: usize,
    pub ridge_lambda: f64,
    pub tree_r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiCurve {
    pub grid: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub qfi_raw: Vec<f64>,
    pub qfi_smooth: Vec<f64>,
    pub p_floor: f64,
    pub params: CurveInfo,
}

impl QfiCurve {
    /// Checks the structural invariants of a loaded or built curve.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || self.p_hat.len() != n || self.qfi_raw.len() != n || self.qfi_smooth.len() != n {
            return Err(Error::invalid("curve arrays must share a length of at least 2"));
        }
        if self.grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::invalid("curve grid must be strictly ascending"));
        }
        if self.p_floor.is_nan() || self.p_floor <= 0.0 {
            return Err(Error::invalid("curve p_floor must be positive"));
        }
        if self.qfi_raw.iter().chain(&self.qfi_smooth).chain(&self.p_hat).any(|v| !v.is_finite()) {
            return Err(Error::invalid("curve values must be finite"));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.params.n_qubits
    }

    fn interpolate(&self, values: &[f64], f: f64) -> f64 {
        let g = &self.grid;
        let f = f.clamp(g[0], g[g.len() - 1]);
        let hi = g.partition_point(|&x| x < f).clamp(1, g.len() - 1);
        let lo = hi - 1;
        let t = (f - g[lo]) / (g[hi] - g[lo]);
        values[lo] + t * (values[hi] - values[lo])
    }

    /// Smoothed information at fidelity `f`, linear between grid points.
    pub fn smooth_at(&self, f: f64) -> f64 {
        self.interpolate(&self.qfi_smooth, f)
    }

    pub fn raw_at(&self, f: f64) -> f64 {
        self.interpolate(&self.qfi_raw, f)
    }

    pub fn max_smooth(&self) -> f64 {
        self.qfi_smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid point with the largest smoothed value (first on ties).
    pub fn argmax_smooth(&self) -> f64 {
        let mut best = 0;
        for (i, &v) in self.qfi_smooth.iter().enumerate() {
            if v > self.qfi_smooth[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curve serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<QfiCurve> {
        let curve: QfiCurve = serde_json::from_str(s)?;
        curve.validate()?;
        Ok(curve)
    }
}

/// Tree fit → grid evaluation → floor at `1/(total+1)` → `-log2` → spline.
pub fn build_qfi_curve(bins: &BinnedDistribution, params: &QfiParams, n_qubits: Option<usize>) -> Result<QfiCurve> {
    params.validate()?;
    let tree = fit_tree(bins, params.max_depth, params.min_leaf)?;
    let p_floor = 1.0 / (bins.total as f64 + 1.0);
    let last = params.grid_points - 1;
    let grid: Vec<f64> = (0..params.grid_points).map(|i| i as f64 / last as f64).collect();
    let p_hat: Vec<f64> = grid.iter().map(|&f| tree.predict(f).max(p_floor)).collect();
    let qfi_raw: Vec<f64> = p_hat.iter().map(|&p| information_bits(p)).collect();
    let qfi_smooth = fit_spline_smooth(&grid, &qfi_raw, params.n_knots, params.ridge_lambda)?;
    let curve = QfiCurve {
        grid,
        p_hat,
        qfi_raw,
        qfi_smooth,
        p_floor,
        params: CurveInfo {
            n_qubits,
            total: bins.total,
            n_bins: bins.n_bins,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            grid_points: params.grid_points,
            n_knots: params.n_knots,
            ridge_lambda: params.ridge_lambda,
            tree_r2: tree.r2(),
        },
    };
    curve.validate()?;
    Ok(curve)
}
