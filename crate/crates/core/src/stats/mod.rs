//! Rank tests, multiple-comparison correction and box-plot summaries.

mod special;

use serde::{Deserialize, Serialize};

pub use special::{chi_square_sf, gamma_q, ln_gamma, normal_sf};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Largest per-group size for which the exact Mann-Whitney distribution is
/// enumerated (tie-free samples only).
pub const EXACT_MAX_N: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!("group `{label}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("group `{label}` has non-finite values")));
        }
        Ok(Self { label, values })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_value: f64,
    pub corrected_p: Option<f64>,
    pub alpha: f64,
    pub significant: bool,
}

impl TestResult {
    fn new(test_name: &str, statistic: f64, df: Option<f64>, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test_name: test_name.to_string(),
            statistic,
            df,
            p_value,
            corrected_p: None,
            alpha: DEFAULT_ALPHA,
            significant: p_value < DEFAULT_ALPHA,
        }
    }

    pub fn with_correction(mut self, corrected: f64) -> Self {
        self.corrected_p = Some(corrected);
        self.significant = corrected < self.alpha;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranks {
    /// 1-based average ranks in input order.
    pub ranks: Vec<f64>,
    /// Sizes of groups of tied values (only groups larger than one).
    pub tie_groups: Vec<usize>,
}

impl Ranks {
    /// `Σ (t³ - t)` over tie groups.
    pub fn tie_sum(&self) -> f64 {
        self.tie_groups.iter().map(|&t| (t as f64).powi(3) - t as f64).sum()
    }
}

pub fn rank_with_ties(pooled: &[f64]) -> Ranks {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        if j - i > 1 {
            tie_groups.push(j - i);
        }
        i = j;
    }
    Ranks { ranks, tie_groups }
}

/// Kruskal-Wallis H with tie correction; p from χ²(k - 1).
pub fn kruskal_wallis(groups: &[SampleGroup]) -> Result<TestResult> {
    let groups: Vec<&SampleGroup> = groups.iter().filter(|g| !g.values.is_empty()).collect();
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(
            "kruskal_wallis needs at least two groups".into(),
        ));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let n = pooled.len() as f64;
    if pooled.len() < 3 {
        return Err(Error::InvalidArgument(
            "kruskal_wallis needs at least 3 observations".into(),
        ));
    }
    let df = (groups.len() - 1) as f64;
    let ranks = rank_with_ties(&pooled);
    let correction = 1.0 - ranks.tie_sum() / (n.powi(3) - n);
    if correction <= 0.0 {
        // every observation tied
        return Ok(TestResult::new("kruskal_wallis", 0.0, Some(df), 1.0));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    let centre = (n + 1.0) / 2.0;
    for g in &groups {
        let k = g.values.len();
        let mean_rank = ranks.ranks[offset..offset + k].iter().sum::<f64>() / k as f64;
        sum += k as f64 * (mean_rank - centre).powi(2);
        offset += k;
    }
    let h = 12.0 / (n * (n + 1.0)) * sum / correction;
    Ok(TestResult::new("kruskal_wallis", h, Some(df), chi_square_sf(h, df)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    /// Exact enumeration when both groups have at most [`EXACT_MAX_N`]
    /// values and there are no ties; otherwise the normal approximation with
    /// continuity correction.
    Auto,
    Exact,
    Normal {
        continuity: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub u_a: f64,
    pub u_b: f64,
    /// Standardized statistic for the normal approximation.
    pub z: Option<f64>,
    pub exact: bool,
    pub result: TestResult,
}

/// `U_a = Σ_ij [a_i > b_j] + ½[a_i = b_j]`, computed from pooled ranks.
fn u_statistic(a: &[f64], b: &[f64]) -> (f64, Ranks) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = rank_with_ties(&pooled);
    let na = a.len() as f64;
    let rank_sum: f64 = ranks.ranks[..a.len()].iter().sum();
    (rank_sum - na * (na + 1.0) / 2.0, ranks)
}

/// Two-sided exact p-value, enumerating all `C(N, n_a)` rank assignments.
pub fn mann_whitney_exact_p(n_a: usize, n_b: usize, u: f64) -> Result<f64> {
    let n = n_a + n_b;
    if n > 30 {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration over {n} values is too large"
        )));
    }
    let u_min = u.min((n_a * n_b) as f64 - u);
    let offset = (n_a * (n_a + 1) / 2) as f64;
    let mut total = 0u64;
    let mut extreme = 0u64;
    for subset in 0u32..(1u32 << n) {
        if subset.count_ones() as usize != n_a {
            continue;
        }
        let rank_sum: u32 = (0..n as u32).filter(|r| subset & (1 << r) != 0).map(|r| r + 1).sum();
        total += 1;
        if rank_sum as f64 - offset <= u_min + 1e-9 {
            extreme += 1;
        }
    }
    Ok((2.0 * extreme as f64 / total as f64).min(1.0))
}

pub fn mann_whitney_u(a: &SampleGroup, b: &SampleGroup) -> Result<MannWhitney> {
    mann_whitney_u_with(a, b, MwuMethod::Auto)
}

pub fn mann_whitney_u_with(a: &SampleGroup, b: &SampleGroup, method: MwuMethod) -> Result<MannWhitney> {
    let (na, nb) = (a.values.len(), b.values.len());
    if na == 0 || nb == 0 {
        return Err(Error::InvalidArgument(
            "mann_whitney_u needs two non-empty groups".into(),
        ));
    }
    let (u_a, ranks) = u_statistic(&a.values, &b.values);
    let u_b = (na * nb) as f64 - u_a;
    let statistic = u_a.min(u_b);
    let tie_free = ranks.tie_groups.is_empty();

    let exact = match method {
        MwuMethod::Exact if !tie_free => {
            return Err(Error::InvalidArgument(
                "exact Mann-Whitney requires tie-free samples".into(),
            ))
        }
        MwuMethod::Exact => true,
        MwuMethod::Auto => tie_free && na <= EXACT_MAX_N && nb <= EXACT_MAX_N,
        MwuMethod::Normal { .. } => false,
    };
    if exact {
        let p = mann_whitney_exact_p(na, nb, u_a)?;
        return Ok(MannWhitney {
            u_a,
            u_b,
            z: None,
            exact: true,
            result: TestResult::new("mann_whitney_u", statistic, None, p),
        });
    }

    let continuity = !matches!(method, MwuMethod::Normal { continuity: false });
    let n = (na + nb) as f64;
    let nn = (na * nb) as f64;
    let mean = nn / 2.0;
    let var = nn / 12.0 * ((n + 1.0) - ranks.tie_sum() / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney {
            u_a,
            u_b,
            z: Some(0.0),
            exact: false,
            result: TestResult::new("mann_whitney_u", statistic, None, 1.0),
        });
    }
    let cc = if continuity { 0.5 } else { 0.0 };
    let z = ((u_a - mean).abs() - cc).max(0.0) / var.sqrt();
    let p = (2.0 * normal_sf(z)).min(1.0);
    Ok(MannWhitney {
        u_a,
        u_b,
        z: Some(z),
        exact: false,
        result: TestResult::new("mann_whitney_u", statistic, None, p),
    })
}

/// `min(1, m·p)` for each p-value.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() {
        return Err(Error::InvalidArgument(format!(
            "bonferroni: m = {m} is smaller than the {} p-values",
            p_values.len()
        )));
    }
    p_values
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok((m as f64 * p).min(1.0))
            } else {
                Err(Error::InvalidArgument(format!("p-value {p} outside [0, 1]")))
            }
        })
        .collect()
}

/// Omnibus plus corrected pairwise comparisons for one set of groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub omnibus: TestResult,
    pub pairwise: Vec<PairwiseResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub first: String,
    pub second: String,
    pub result: TestResult,
}

/// Kruskal-Wallis over all groups, then Mann-Whitney U on each listed pair
/// with Bonferroni correction over the number of pairs.
pub fn compare_groups(groups: &[SampleGroup], pairs: &[(usize, usize)]) -> Result<StatReport> {
    let omnibus = kruskal_wallis(groups)?;
    let raw: Vec<MannWhitney> = pairs
        .iter()
        .map(|&(i, j)| mann_whitney_u(&groups[i], &groups[j]))
        .collect::<Result<_>>()?;
    let corrected = bonferroni(&raw.iter().map(|r| r.result.p_value).collect::<Vec<_>>(), pairs.len())?;
    let pairwise = pairs
        .iter()
        .zip(raw)
        .zip(corrected)
        .map(|((&(i, j), r), c)| PairwiseResult {
            first: groups[i].label.clone(),
            second: groups[j].label.clone(),
            result: r.result.with_correction(c),
        })
        .collect();
    Ok(StatReport { omnibus, pairwise })
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear interpolation at position `q·(n-1)` of the sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median of a non-empty slice (NaN when empty).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    quantile_sorted(&sorted(values), 0.5)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Tukey box-plot summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outlier_count: usize,
}

/// Quartiles by linear interpolation; whiskers reach the most extreme data
/// points inside `[q1 - 1.5·IQR, q3 + 1.5·IQR]`.
pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("box_stats of empty data".into()));
    }
    let s = sorted(values);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| (lo_fence..=hi_fence).contains(v))
        .collect();
    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_low: inside.first().copied().unwrap_or(median),
        whisker_high: inside.last().copied().unwrap_or(median),
        outlier_count: s.len() - inside.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(label: &str, v: &[f64]) -> SampleGroup {
        SampleGroup::new(label, v.to_vec()).unwrap()
    }

    #[test]
    fn ranks_examples() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]).ranks, vec![1.0, 2.0, 3.0]);
        let r = rank_with_ties(&[5.0, 5.0, 7.0]);
        assert_eq!(r.ranks, vec![1.5, 1.5, 3.0]);
        assert_eq!(r.tie_groups, vec![2]);
        assert_eq!(rank_with_ties(&[2.0; 4]).ranks, vec![2.5; 4]);
    }

    #[test]
    fn kruskal_wallis_hand_value() {
        let r = kruskal_wallis(&[g("a", &[1.0, 2.0]), g("b", &[3.0, 4.0]), g("c", &[5.0, 6.0])]).unwrap();
        assert!((r.statistic - 32.0 / 7.0).abs() < 1e-12);
        assert!((r.p_value - (-16.0f64 / 7.0).exp()).abs() < 1e-12);
        assert_eq!(r.df, Some(2.0));
    }

    #[test]
    fn kruskal_wallis_exchangeable_groups() {
        let r = kruskal_wallis(&[
            g("a", &[1.0, 2.0, 3.0]),
            g("b", &[1.0, 2.0, 3.0]),
            g("c", &[1.0, 2.0, 3.0]),
        ])
        .unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(!r.significant);
    }

    #[test]
    fn kruskal_wallis_all_tied() {
        let r = kruskal_wallis(&[g("a", &[4.0, 4.0]), g("b", &[4.0])]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn mann_whitney_exact_small() {
        let r = mann_whitney_u(&g("a", &[1.0, 2.0, 3.0]), &g("b", &[4.0, 5.0, 6.0])).unwrap();
        assert!(r.exact);
        assert_eq!(r.result.statistic, 0.0);
        assert!((r.result.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&g("a", &v), &g("b", &v)).unwrap();
        assert_eq!((r.u_a, r.u_b), (8.0, 8.0));
        assert!(r.result.p_value > 0.9);
        let flat = mann_whitney_u(&g("a", &[3.0; 10]), &g("b", &[3.0; 12])).unwrap();
        assert_eq!(flat.result.p_value, 1.0);
    }

    #[test]
    fn mann_whitney_exact_requires_no_ties() {
        assert!(mann_whitney_u_with(&g("a", &[1.0, 1.0]), &g("b", &[2.0]), MwuMethod::Exact).is_err());
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(&[0.03], 2).unwrap(), vec![0.06]);
        assert_eq!(bonferroni(&[0.7], 2).unwrap(), vec![1.0]);
        assert_eq!(bonferroni(&[0.0004, 0.02], 2).unwrap(), vec![0.0008, 0.04]);
        assert!(bonferroni(&[0.1, 0.2, 0.3], 2).is_err());
    }

    #[test]
    fn box_stats_examples() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.median, b.q1, b.q3), (3.0, 2.0, 4.0));
        assert_eq!((b.whisker_low, b.whisker_high, b.outlier_count), (1.0, 4.0, 1));
        let one = box_stats(&[5.0]).unwrap();
        assert_eq!(
            [one.median, one.q1, one.q3, one.whisker_low, one.whisker_high],
            [5.0; 5]
        );
        assert_eq!(one.outlier_count, 0);
        let sym = box_stats(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!((sym.median, sym.q1, sym.q3), (0.0, -1.0, 1.0));
    }

    #[test]
    fn compare_groups_applies_bonferroni() {
        let a = g("mlp", &(0..30).map(|i| i as f64 + 10.0).collect::<Vec<_>>());
        let b = g("gcn", &(0..30).map(|i| i as f64 * 0.5).collect::<Vec<_>>());
        let c = g("gat", &(0..30).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        let rep = compare_groups(&[a.clone(), b.clone(), c], &[(0, 1), (1, 2)]).unwrap();
        let raw = mann_whitney_u(&a, &b).unwrap().result.p_value;
        assert_eq!(rep.pairwise[0].result.corrected_p, Some((2.0 * raw).min(1.0)));
        assert_eq!(rep.pairwise[0].first, "mlp");
    }
}
