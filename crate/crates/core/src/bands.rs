//! Pointwise and simultaneous confidence bands from centered bootstrap draws.

use serde::{Deserialize, Serialize};

use crate::bootstrap::CenteredDraws;
use crate::error::{invalid, Error, Result};
use crate::series::{EvalGrid, TrendCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub grid: EvalGrid,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    /// Pointwise level used for a simultaneous band.
    pub alpha_s: Option<f64>,
    pub valid: Vec<bool>,
}

impl Band {
    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// `lower[i] <= value <= upper[i]`, false at invalid points.
    pub fn contains(&self, i: usize, value: f64) -> bool {
        self.valid[i] && self.lower[i] <= value && value <= self.upper[i]
    }
}

/// Rank `⌈αB⌉` (one based), with products within rounding of an integer
/// treated as that integer.
pub fn quantile_rank(alpha: f64, b: usize) -> usize {
    let x = alpha * b as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (k.max(1.0) as usize).min(b)
}

/// `inf{u : F_B(u) >= α}` of an ascending sample, i.e. order statistic `⌈αB⌉`.
pub fn empirical_quantile(sorted_draws: &[f64], alpha: f64) -> Result<f64> {
    if sorted_draws.is_empty() {
        return invalid("no draws to take a quantile of");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("quantile level {alpha} must lie in (0, 1]"));
    }
    Ok(sorted_draws[quantile_rank(alpha, sorted_draws.len()) - 1])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        invalid(format!("alpha {alpha} must lie in (0, 1)"))
    }
}

fn check_aligned(draws: &CenteredDraws, m_hat: &TrendCurve) -> Result<()> {
    if draws.grid != m_hat.grid {
        return invalid("draws and trend estimate are on different grids");
    }
    Ok(())
}

/// `[m̂ - q̂_{1-α/2}, m̂ - q̂_{α/2}]` at every grid point.
pub fn pointwise_band(draws: &CenteredDraws, m_hat: &TrendCurve, alpha: f64) -> Result<Band> {
    check_alpha(alpha)?;
    check_aligned(draws, m_hat)?;
    let w = draws.width();
    let mut lower = vec![f64::NAN; w];
    let mut upper = vec![f64::NAN; w];
    let mut valid = vec![false; w];
    for j in 0..w {
        if !(draws.valid[j] && m_hat.valid[j]) {
            continue;
        }
        let col = draws.sorted_column(j);
        let lo_q = empirical_quantile(&col, alpha / 2.0)?;
        let hi_q = empirical_quantile(&col, 1.0 - alpha / 2.0)?;
        lower[j] = m_hat.estimate[j] - hi_q;
        upper[j] = m_hat.estimate[j] - lo_q;
        valid[j] = true;
    }
    Ok(Band {
        grid: draws.grid.clone(),
        center: m_hat.estimate.clone(),
        lower,
        upper,
        alpha,
        alpha_s: None,
        valid,
    })
}

/// Outcome of the search for the pointwise level of a simultaneous band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousSearch {
    /// Grid indices actually used (valid points of the requested subset).
    pub indices: Vec<usize>,
    /// `fractions[j - 1]` is the share of replicates inside the band at `α_p = j / B`.
    pub fractions: Vec<f64>,
    /// Selected multiple `j` of `1 / B`.
    pub level: usize,
    pub alpha_s: f64,
    pub coverage: f64,
}

/// Searches `α_p ∈ {1/B, …, ⌊αB⌋/B}` for the level whose pointwise bands
/// jointly contain a share of the draws closest to `1 - α`. Ties go to the
/// largest `α_p`.
pub fn simultaneous_search(draws: &CenteredDraws, alpha: f64, subset: &[usize]) -> Result<SimultaneousSearch> {
    check_alpha(alpha)?;
    if subset.is_empty() {
        return invalid("simultaneous band needs a non-empty subset");
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= draws.width()) {
        return invalid(format!("subset index {i} outside the grid"));
    }
    let indices: Vec<usize> = subset.iter().copied().filter(|&i| draws.valid[i]).collect();
    if indices.len() < subset.len() {
        log::warn!(
            "dropping {} invalid grid point(s) from the simultaneous set",
            subset.len() - indices.len()
        );
    }
    if indices.is_empty() {
        return Err(Error::NoBand);
    }
    let b = draws.replications;
    let max_level = {
        let x = alpha * b as f64;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.max(1.0) { r as usize } else { x.floor() as usize }
    };
    if max_level == 0 {
        return invalid(format!("alpha {alpha} is below the resolution 1/B = {}", 1.0 / b as f64));
    }

    // Replicate `r` lies inside the level-j band at point τ iff
    // ⌈j/2⌉ <= #{x <= d} and #{x < d} <= B - 1 - ⌊j/2⌋, i.e.
    // j <= min(2 #{x <= d}, 2 (B - 1 - #{x < d}) + 1).
    let mut reach = vec![usize::MAX; b];
    for &j in &indices {
        let col = draws.sorted_column(j);
        for (r, slot) in reach.iter_mut().enumerate() {
            let d = draws.get(r, j);
            let le = col.partition_point(|&x| x <= d);
            let lt = col.partition_point(|&x| x < d);
            let lim = (2 * le).min(2 * (b - 1 - lt) + 1);
            *slot = (*slot).min(lim);
        }
    }
    let mut counts = vec![0usize; max_level + 2];
    for &r in &reach {
        counts[r.min(max_level + 1)] += 1;
    }
    // fraction(j) = #{r : reach_r >= j} / B
    let mut fractions = vec![0.0; max_level];
    let mut at_least = counts[max_level + 1];
    for j in (1..=max_level).rev() {
        at_least += counts[j];
        fractions[j - 1] = at_least as f64 / b as f64;
    }
    let target = 1.0 - alpha;
    let mut level = 1;
    let mut best = f64::INFINITY;
    for j in 1..=max_level {
        let gap = (fractions[j - 1] - target).abs();
        if gap <= best {
            best = gap;
            level = j;
        }
    }
    Ok(SimultaneousSearch {
        indices,
        coverage: fractions[level - 1],
        fractions,
        level,
        alpha_s: level as f64 / b as f64,
    })
}

/// Band over `subset` (grid indices) whose joint coverage of the draws is
/// closest to `1 - α`. The returned band lives on the valid subset points.
pub fn simultaneous_band(draws: &CenteredDraws, m_hat: &TrendCurve, alpha: f64, subset: &[usize]) -> Result<Band> {
    check_aligned(draws, m_hat)?;
    let search = simultaneous_search(draws, alpha, subset)?;
    band_at_level(draws, m_hat, alpha, &search)
}

/// Quantile-reflected band at the level chosen by `search`.
pub fn band_at_level(
    draws: &CenteredDraws,
    m_hat: &TrendCurve,
    alpha: f64,
    search: &SimultaneousSearch,
) -> Result<Band> {
    check_aligned(draws, m_hat)?;
    let b = draws.replications;
    let lo_rank = search.level.div_ceil(2);
    let hi_rank = b - search.level / 2;
    let mut center = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut valid = Vec::new();
    for &j in &search.indices {
        let col = draws.sorted_column(j);
        let m = m_hat.estimate[j];
        let ok = m_hat.valid[j];
        center.push(m);
        lower.push(if ok { m - col[hi_rank - 1] } else { f64::NAN });
        upper.push(if ok { m - col[lo_rank - 1] } else { f64::NAN });
        valid.push(ok);
    }
    Ok(Band {
        grid: draws.grid.subset(&search.indices)?,
        center,
        lower,
        upper,
        alpha,
        alpha_s: Some(search.alpha_s),
        valid,
    })
}

/// `U_i(h) = {i/5 - h + j/100 : j = 0..⌊200h⌋}` for `i = 1..4`.
pub fn neighbourhood(i: usize, h: f64) -> Vec<f64> {
    // floor(200 h) with a guard for products like 200 * 0.06 = 11.999…
    let steps = (200.0 * h + 1e-9).floor() as usize;
    (0..=steps).map(|j| i as f64 / 5.0 - h + j as f64 / 100.0).collect()
}

fn union_sorted(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    pts
}

/// `(G_sub, G)` with `G_sub = U_1 ∪ U_4` and `G = U_1 ∪ … ∪ U_4`.
pub fn build_eval_sets(h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(h > 0.0 && h < 0.2) {
        return invalid(format!("bandwidth {h} must lie in (0, 0.2) for the evaluation sets"));
    }
    let g_sub = union_sorted([neighbourhood(1, h), neighbourhood(4, h)].concat());
    let g = union_sorted((1..=4).flat_map(|i| neighbourhood(i, h)).collect());
    Ok((g_sub, g))
}

/// `G` as a grid plus the positions of `G_sub` inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSets {
    pub grid: EvalGrid,
    pub sub_indices: Vec<usize>,
}

impl EvalSets {
    pub fn for_bandwidth(h: f64) -> Result<Self> {
        let (sub, all) = build_eval_sets(h)?;
        let grid = EvalGrid::new(all)?;
        let sub_indices = grid.locate(&sub, 1e-9)?;
        Ok(Self { grid, sub_indices })
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.grid.len()).collect()
    }
}
