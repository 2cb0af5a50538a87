//! Thin-slice rating aggregation and inter-rater reliability.
//!
//! Raw ratings arrive as multiple naive raters' labels in {0, 1, 2} per
//! 10-second slice. Producing ground truth runs three post-processing steps:
//! rushed raters are dropped by a rating-time filter, the most reliable rater
//! subset per HIT is selected by exhaustive ICC comparison, and a single
//! label per slice is picked by inverse-frequency bias correction so that
//! raters who overuse a label count for less when they use it.
//!
//! Reliability statistics: ICC(2,1) (two-way random effects, absolute
//! agreement, single measure) and nominal-metric Krippendorff's alpha.
//! Machine-annotation audits compare pre-annotated labels against
//! human-corrected ones.

use std::collections::BTreeMap;

use thiserror::Error;

/// Raters whose mean rating time falls this many standard deviations below
/// the corpus mean are treated as not having engaged with the task.
pub const RATER_TIME_SD_CUTOFF: f64 = 1.5;

/// Floor applied to marginal label frequencies before inverting.
pub const BIAS_FREQ_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("rating corpus is empty")]
    EmptyCorpus,
    #[error("need at least 2 raters, found {0}")]
    TooFewRaters(usize),
    #[error("ICC undefined: no variance between items or between raters")]
    DegenerateInput,
    #[error("ICC needs at least 2 items and 2 raters with no missing cells")]
    MalformedMatrix,
    #[error("no rater subset had 2 or more complete items to evaluate")]
    NotEnoughItems,
    #[error("no pairable values for Krippendorff's alpha")]
    InsufficientPairs,
    #[error("no profile for rater '{0}'")]
    MissingProfile(String),
    #[error("label sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not binary")]
    NotBinary(u8),
    #[error("label {0} outside {{0, 1, 2}}")]
    InvalidLabel(u8),
    #[error("rating time must be positive, got {0}")]
    InvalidRatingTime(f64),
    #[error("rating set must contain at least one rating")]
    EmptyRatingSet,
}

/// One rater's label for one slice, with the wall-clock time they spent.
#[derive(Debug, Clone, PartialEq)]
pub struct Rating {
    pub rater_id: String,
    pub label: u8,
    pub rating_time_s: f64,
}

/// All ratings for one slice of one HIT.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSet {
    hit_id: String,
    slice_index: usize,
    ratings: Vec<Rating>,
}

impl RatingSet {
    pub fn new(hit_id: String, slice_index: usize, ratings: Vec<Rating>) -> Result<Self, AnnotationError> {
        if ratings.is_empty() {
            return Err(AnnotationError::EmptyRatingSet);
        }
        for r in &ratings {
            if r.label > 2 {
                return Err(AnnotationError::InvalidLabel(r.label));
            }
            if !(r.rating_time_s > 0.0) {
                return Err(AnnotationError::InvalidRatingTime(r.rating_time_s));
            }
        }
        Ok(Self {
            hit_id,
            slice_index,
            ratings,
        })
    }

    pub fn hit_id(&self) -> &str {
        &self.hit_id
    }

    pub fn slice_index(&self) -> usize {
        self.slice_index
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    fn label_of(&self, rater_id: &str) -> Option<u8> {
        self.ratings
            .iter()
            .find(|r| r.rater_id == rater_id)
            .map(|r| r.label)
    }
}

/// Marginal label usage and mean rating time for one rater.
#[derive(Debug, Clone, PartialEq)]
pub struct RaterProfile {
    pub rater_id: String,
    /// Fraction of this rater's ratings using label 0, 1, 2. Sums to 1.
    pub label_frequency: [f64; 3],
    pub mean_rating_time_s: f64,
}

impl RaterProfile {
    /// Build profiles for every rater appearing in `sets`.
    pub fn build(sets: &[RatingSet]) -> Vec<RaterProfile> {
        let mut counts: BTreeMap<&str, ([u64; 3], f64, u64)> = BTreeMap::new();
        for set in sets {
            for r in set.ratings() {
                let entry = counts.entry(&r.rater_id).or_default();
                entry.0[r.label as usize] += 1;
                entry.1 += r.rating_time_s;
                entry.2 += 1;
            }
        }
        counts
            .into_iter()
            .map(|(rater_id, (labels, time_sum, n))| {
                let n = n as f64;
                RaterProfile {
                    rater_id: rater_id.to_string(),
                    label_frequency: [
                        labels[0] as f64 / n,
                        labels[1] as f64 / n,
                        labels[2] as f64 / n,
                    ],
                    mean_rating_time_s: time_sum / n,
                }
            })
            .collect()
    }
}

/// Outcome of exhaustive rater-subset reliability selection for one HIT.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityReport {
    pub hit_id: String,
    /// ICC(2,1) of the chosen subset over this HIT's item block.
    pub icc: f64,
    /// Rater ids of the winning subset, sorted.
    pub chosen_subset: Vec<String>,
    /// Nominal Krippendorff's alpha of the chosen subset on the same block.
    pub alpha: f64,
}

/// Confusion counts from auditing machine annotations against human ones.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditStats {
    /// 100 × fraction of labels the human pass left unchanged.
    pub percent_unchanged: f64,
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// FP/FN ratio; `inf` when FN = 0 with FP > 0, `None` when both are 0.
    pub fp_fn_ratio: Option<f64>,
}

/// Drop raters whose mean rating time is more than 1.5 corpus standard
/// deviations below the corpus mean of per-rater mean times.
///
/// The filter never empties a set: if every rater of a set would be removed,
/// the slowest of them is kept. The standard deviation is the population SD
/// over per-rater means.
pub fn filter_raters(sets: &[RatingSet]) -> Result<Vec<RatingSet>, AnnotationError> {
    if sets.is_empty() {
        return Err(AnnotationError::EmptyCorpus);
    }
    let profiles = RaterProfile::build(sets);
    let mean_times: BTreeMap<&str, f64> = profiles
        .iter()
        .map(|p| (p.rater_id.as_str(), p.mean_rating_time_s))
        .collect();
    let n = mean_times.len() as f64;
    let mean = mean_times.values().sum::<f64>() / n;
    let var = mean_times.values().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean - RATER_TIME_SD_CUTOFF * var.sqrt();

    let keep = |rater: &str| mean_times[rater] >= threshold;
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        let mut kept: Vec<Rating> = set
            .ratings()
            .iter()
            .filter(|r| keep(&r.rater_id))
            .cloned()
            .collect();
        if kept.is_empty() {
            // Floor rule: keep the slowest rater of this set rather than
            // dropping the slice entirely.
            let slowest = set
                .ratings()
                .iter()
                .max_by(|a, b| {
                    mean_times[a.rater_id.as_str()]
                        .total_cmp(&mean_times[b.rater_id.as_str()])
                })
                .expect("rating sets are nonempty");
            kept = set
                .ratings()
                .iter()
                .filter(|r| r.rater_id == slowest.rater_id)
                .cloned()
                .collect();
        }
        out.push(RatingSet::new(
            set.hit_id().to_string(),
            set.slice_index(),
            kept,
        )?);
    }
    Ok(out)
}

/// ICC(2,1): two-way random effects, absolute agreement, single measure.
///
/// `matrix` is items × raters with no missing cells. Computed from the ANOVA
/// mean squares
/// `(MS_R − MS_E) / (MS_R + (k−1)·MS_E + (k/n)·(MS_C − MS_E))`.
/// Exact unanimity across raters returns 1.0 when items vary; a matrix with
/// neither item nor rater variance (or a vanishing denominator) is
/// undefined and reported as [`AnnotationError::DegenerateInput`].
pub fn icc(matrix: &[Vec<f64>]) -> Result<f64, AnnotationError> {
    let n = matrix.len();
    if n < 2 {
        return Err(AnnotationError::MalformedMatrix);
    }
    let k = matrix[0].len();
    if k < 2 || matrix.iter().any(|row| row.len() != k) {
        return Err(AnnotationError::MalformedMatrix);
    }

    let rows_vary = matrix.windows(2).any(|w| w[0] != w[1]);
    if matrix.iter().all(|row| row.iter().all(|v| *v == row[0])) {
        // Every rater reproduces the item value exactly: the estimator's
        // limit is 1 whenever items vary at all.
        return if rows_vary {
            Ok(1.0)
        } else {
            Err(AnnotationError::DegenerateInput)
        };
    }

    let nf = n as f64;
    let kf = k as f64;
    let grand = matrix.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = matrix.iter().map(|row| row.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| matrix.iter().map(|row| row[j]).sum::<f64>() / nf)
        .collect();

    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_total = matrix
        .iter()
        .flatten()
        .map(|v| (v - grand).powi(2))
        .sum::<f64>();
    let ss_err = (ss_total - ss_rows - ss_cols).max(0.0);

    let ms_r = ss_rows / (nf - 1.0);
    let ms_c = ss_cols / (kf - 1.0);
    let ms_e = ss_err / ((nf - 1.0) * (kf - 1.0));

    let denom = ms_r + (kf - 1.0) * ms_e + kf / nf * (ms_c - ms_e);
    let value = (ms_r - ms_e) / denom;
    if denom == 0.0 || !value.is_finite() {
        return Err(AnnotationError::DegenerateInput);
    }
    Ok(value)
}

/// Exhaustively evaluate every rater subset of size ≥ 2 over one HIT's item
/// block and return the subset with the highest ICC.
///
/// `block` holds all rating sets sharing a HIT. For each candidate subset,
/// only items rated by every member count; subsets with fewer than two such
/// items, or with a degenerate ICC, are skipped. Ties prefer the larger
/// subset, then the lexicographically smallest rater-id list.
pub fn select_subset(block: &[RatingSet]) -> Result<ReliabilityReport, AnnotationError> {
    if block.is_empty() {
        return Err(AnnotationError::EmptyCorpus);
    }
    let hit_id = block[0].hit_id().to_string();
    let mut raters: Vec<String> = block
        .iter()
        .flat_map(|s| s.ratings().iter().map(|r| r.rater_id.clone()))
        .collect();
    raters.sort();
    raters.dedup();
    let k = raters.len();
    if k < 2 {
        return Err(AnnotationError::TooFewRaters(k));
    }

    let mut best: Option<(f64, Vec<String>)> = None;
    for mask in 1u32..(1 << k) {
        if mask.count_ones() < 2 {
            continue;
        }
        let subset: Vec<&String> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &raters[i]).collect();
        let mut matrix = Vec::new();
        for set in block {
            let row: Option<Vec<f64>> = subset
                .iter()
                .map(|rater| set.label_of(rater).map(f64::from))
                .collect();
            if let Some(row) = row {
                matrix.push(row);
            }
        }
        if matrix.len() < 2 {
            continue;
        }
        let Ok(value) = icc(&matrix) else { continue };
        let candidate: Vec<String> = subset.into_iter().cloned().collect();
        let better = match &best {
            None => true,
            Some((best_icc, best_subset)) => {
                value > *best_icc
                    || (value == *best_icc
                        && (candidate.len() > best_subset.len()
                            || (candidate.len() == best_subset.len() && candidate < *best_subset)))
            }
        };
        if better {
            best = Some((value, candidate));
        }
    }

    let (icc_value, chosen) = best.ok_or(AnnotationError::NotEnoughItems)?;
    let labels: Vec<Vec<Option<u8>>> = block
        .iter()
        .map(|set| chosen.iter().map(|r| set.label_of(r)).collect())
        .collect();
    let alpha = krippendorff_alpha(&labels).unwrap_or(1.0);
    Ok(ReliabilityReport {
        hit_id,
        icc: icc_value,
        chosen_subset: chosen,
        alpha,
    })
}

/// Pick one label for a slice, weighting each rating by the inverse of its
/// rater's marginal frequency for that label.
///
/// A rater who hands out a label constantly contributes little weight when
/// using it; a rare label from them counts for a lot. Ties break toward the
/// higher label.
pub fn bias_corrected_label(
    set: &RatingSet,
    profiles: &[RaterProfile],
) -> Result<u8, AnnotationError> {
    let by_id: BTreeMap<&str, &RaterProfile> =
        profiles.iter().map(|p| (p.rater_id.as_str(), p)).collect();
    let mut weight = [0.0f64; 3];
    for r in set.ratings() {
        let profile = by_id
            .get(r.rater_id.as_str())
            .ok_or_else(|| AnnotationError::MissingProfile(r.rater_id.clone()))?;
        let freq = profile.label_frequency[r.label as usize].max(BIAS_FREQ_EPSILON);
        weight[r.label as usize] += 1.0 / freq;
    }
    // Scan from label 2 down so equal weights resolve to the higher label.
    let mut winner = 2u8;
    for label in (0..3).rev() {
        if weight[label] > weight[winner as usize] {
            winner = label as u8;
        }
    }
    Ok(winner)
}

/// Nominal-metric Krippendorff's alpha with missing cells allowed.
///
/// `items` is items × raters; `None` marks a missing rating. Implemented via
/// the coincidence matrix over all within-item ordered pairs. Unanimity
/// returns 1.0 even when only one category appears in the data.
pub fn krippendorff_alpha(items: &[Vec<Option<u8>>]) -> Result<f64, AnnotationError> {
    let mut coincidence = [[0.0f64; 3]; 3];
    let mut n_pairable = 0.0f64;
    for item in items {
        let values: Vec<u8> = item.iter().flatten().copied().collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        if let Some(&bad) = values.iter().find(|v| **v > 2) {
            return Err(AnnotationError::InvalidLabel(bad));
        }
        n_pairable += m as f64;
        let w = 1.0 / (m as f64 - 1.0);
        for (i, &a) in values.iter().enumerate() {
            for (j, &b) in values.iter().enumerate() {
                if i != j {
                    coincidence[a as usize][b as usize] += w;
                }
            }
        }
    }
    if n_pairable == 0.0 {
        return Err(AnnotationError::InsufficientPairs);
    }

    let margins: Vec<f64> = (0..3).map(|c| coincidence[c].iter().sum()).collect();
    let observed: f64 = (0..3)
        .flat_map(|c| (0..3).map(move |k| (c, k)))
        .filter(|(c, k)| c != k)
        .map(|(c, k)| coincidence[c][k])
        .sum();
    let expected: f64 = (0..3)
        .flat_map(|c| (0..3).map(move |k| (c, k)))
        .filter(|(c, k)| c != k)
        .map(|(c, k)| margins[c] * margins[k])
        .sum::<f64>()
        / (n_pairable - 1.0);

    if observed == 0.0 {
        return Ok(1.0);
    }
    if expected == 0.0 {
        return Err(AnnotationError::InsufficientPairs);
    }
    Ok(1.0 - observed / expected)
}

/// Compare machine-annotated binary labels against human-corrected ones.
pub fn audit_machine_labels(machine: &[u8], human: &[u8]) -> Result<AuditStats, AnnotationError> {
    if machine.len() != human.len() {
        return Err(AnnotationError::LengthMismatch(machine.len(), human.len()));
    }
    if machine.is_empty() {
        return Err(AnnotationError::EmptyCorpus);
    }
    if let Some(&bad) = machine.iter().chain(human).find(|l| **l > 1) {
        return Err(AnnotationError::NotBinary(bad));
    }
    let mut stats = AuditStats {
        percent_unchanged: 0.0,
        true_positives: 0,
        true_negatives: 0,
        false_positives: 0,
        false_negatives: 0,
        fp_fn_ratio: None,
    };
    for (&m, &h) in machine.iter().zip(human) {
        match (m, h) {
            (1, 1) => stats.true_positives += 1,
            (0, 0) => stats.true_negatives += 1,
            (1, 0) => stats.false_positives += 1,
            (0, 1) => stats.false_negatives += 1,
            _ => unreachable!("labels validated as binary"),
        }
    }
    let agree = stats.true_positives + stats.true_negatives;
    stats.percent_unchanged = 100.0 * agree as f64 / machine.len() as f64;
    stats.fp_fn_ratio = match (stats.false_positives, stats.false_negatives) {
        (0, 0) => None,
        (fp, 0) => Some(if fp > 0 { f64::INFINITY } else { 0.0 }),
        (fp, fnn) => Some(fp as f64 / fnn as f64),
    };
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rating(rater: &str, label: u8, time: f64) -> Rating {
        Rating {
            rater_id: rater.into(),
            label,
            rating_time_s: time,
        }
    }

    fn set(hit: &str, slice: usize, ratings: Vec<Rating>) -> RatingSet {
        RatingSet::new(hit.into(), slice, ratings).unwrap()
    }

    /// ANOVA mean squares computed the long way: explicit residuals
    /// `e_ij = x_ij − row_i − col_j + grand` instead of the sum-of-squares
    /// subtraction identity.
    fn icc_oracle(matrix: &[Vec<f64>]) -> f64 {
        let n = matrix.len() as f64;
        let k = matrix[0].len() as f64;
        let grand = matrix.iter().flatten().sum::<f64>() / (n * k);
        let row: Vec<f64> = matrix.iter().map(|r| r.iter().sum::<f64>() / k).collect();
        let col: Vec<f64> = (0..matrix[0].len())
            .map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let mut ss_e = 0.0;
        for (i, r) in matrix.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                ss_e += (x - row[i] - col[j] + grand).powi(2);
            }
        }
        let ms_r = row.iter().map(|m| k * (m - grand).powi(2)).sum::<f64>() / (n - 1.0);
        let ms_c = col.iter().map(|m| n * (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
        let ms_e = ss_e / ((n - 1.0) * (k - 1.0));
        (ms_r - ms_e) / (ms_r + (k - 1.0) * ms_e + k / n * (ms_c - ms_e))
    }

    #[test]
    fn filter_removes_rushed_rater() {
        // Per-rater means {A: 30, B: 29, C: 31, D: 2}: corpus mean 23,
        // population SD √147.5 ≈ 12.14, threshold ≈ 4.78, so only D falls below.
        let sets = vec![
            set(
                "h1",
                0,
                vec![
                    rating("A", 1, 30.0),
                    rating("B", 1, 29.0),
                    rating("C", 0, 31.0),
                    rating("D", 2, 2.0),
                ],
            ),
            set(
                "h1",
                1,
                vec![
                    rating("A", 0, 30.0),
                    rating("B", 2, 29.0),
                    rating("C", 1, 31.0),
                    rating("D", 2, 2.0),
                ],
            ),
        ];
        let filtered = filter_raters(&sets).unwrap();
        for s in &filtered {
            assert_eq!(s.ratings().len(), 3);
            assert!(s.ratings().iter().all(|r| r.rater_id != "D"));
        }
    }

    #[test]
    fn filter_keeps_everyone_on_equal_times() {
        let sets = vec![set(
            "h1",
            0,
            vec![rating("A", 1, 20.0), rating("B", 0, 20.0), rating("C", 2, 20.0)],
        )];
        let filtered = filter_raters(&sets).unwrap();
        assert_eq!(filtered[0].ratings().len(), 3);
    }

    #[test]
    fn filter_retains_single_rater() {
        let sets = vec![set("h1", 0, vec![rating("A", 1, 5.0)])];
        let filtered = filter_raters(&sets).unwrap();
        assert_eq!(filtered[0].ratings().len(), 1);
    }

    #[test]
    fn filter_floor_rule_keeps_slowest() {
        // Set 1 is rated only by fast raters; the floor rule must keep the
        // slower of the two rather than emptying the set.
        let sets = vec![
            set("h1", 0, vec![rating("D", 1, 2.0), rating("E", 0, 3.0)]),
            set(
                "h1",
                1,
                vec![
                    rating("A", 1, 40.0),
                    rating("B", 1, 41.0),
                    rating("C", 0, 39.0),
                ],
            ),
        ];
        let filtered = filter_raters(&sets).unwrap();
        assert_eq!(filtered[0].ratings().len(), 1);
        assert_eq!(filtered[0].ratings()[0].rater_id, "E");
    }

    #[test]
    fn filter_rejects_empty_corpus() {
        assert!(matches!(
            filter_raters(&[]),
            Err(AnnotationError::EmptyCorpus)
        ));
    }

    #[test]
    fn icc_perfect_agreement_is_exactly_one() {
        let m = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(icc(&m).unwrap(), 1.0);
    }

    #[test]
    fn icc_2x2_antisymmetric_is_degenerate() {
        // [[1,2],[2,1]] has zero between-item and zero between-rater
        // variance, so both the implementation and the definitional ANOVA
        // route agree the estimate is undefined (denominator 0).
        let m = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(icc(&m), Err(AnnotationError::DegenerateInput)));
        let n = 2.0;
        let k = 2.0;
        let ms_r = 0.0;
        let ms_c = 0.0;
        let ms_e = 1.0;
        assert_eq!(ms_r + (k - 1.0) * ms_e + k / n * (ms_c - ms_e), 0.0);
    }

    #[test]
    fn icc_matches_definitional_anova() {
        let m = vec![
            vec![9.0, 2.0, 5.0, 8.0],
            vec![6.0, 1.0, 3.0, 2.0],
            vec![8.0, 4.0, 6.0, 8.0],
            vec![7.0, 1.0, 2.0, 6.0],
            vec![10.0, 5.0, 6.0, 9.0],
            vec![6.0, 2.0, 4.0, 7.0],
        ];
        assert_abs_diff_eq!(icc(&m).unwrap(), icc_oracle(&m), epsilon = 1e-12);
    }

    #[test]
    fn icc_constant_matrix_is_degenerate() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(icc(&m), Err(AnnotationError::DegenerateInput)));
    }

    #[test]
    fn subset_selection_finds_agreeing_pair() {
        // A and B agree perfectly across items; C is noise.
        let block = vec![
            set("h1", 0, vec![rating("A", 0, 20.0), rating("B", 0, 21.0), rating("C", 2, 22.0)]),
            set("h1", 1, vec![rating("A", 1, 20.0), rating("B", 1, 21.0), rating("C", 0, 22.0)]),
            set("h1", 2, vec![rating("A", 2, 20.0), rating("B", 2, 21.0), rating("C", 0, 22.0)]),
            set("h1", 3, vec![rating("A", 1, 20.0), rating("B", 1, 21.0), rating("C", 2, 22.0)]),
        ];
        let report = select_subset(&block).unwrap();
        assert_eq!(report.chosen_subset, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(report.icc, 1.0);
        assert_eq!(report.alpha, 1.0);
    }

    #[test]
    fn subset_selection_tie_breaks_to_full_set() {
        let block = vec![
            set("h1", 0, vec![rating("A", 0, 20.0), rating("B", 0, 21.0), rating("C", 0, 22.0)]),
            set("h1", 1, vec![rating("A", 2, 20.0), rating("B", 2, 21.0), rating("C", 2, 22.0)]),
        ];
        let report = select_subset(&block).unwrap();
        assert_eq!(report.chosen_subset.len(), 3);
        assert_eq!(report.icc, 1.0);
    }

    #[test]
    fn subset_count_for_four_raters() {
        // Sizes 2, 3, 4 of a 4-rater pool: 6 + 4 + 1 = 11 candidate subsets.
        let k = 4u32;
        let count = (1u32..(1 << k)).filter(|m| m.count_ones() >= 2).count();
        assert_eq!(count, 11);
    }

    #[test]
    fn subset_selection_needs_two_raters() {
        let block = vec![set("h1", 0, vec![rating("A", 1, 20.0)])];
        assert!(matches!(
            select_subset(&block),
            Err(AnnotationError::TooFewRaters(1))
        ));
    }

    #[test]
    fn bias_correction_weights_rare_labels_up() {
        // A uses label 0 with frequency 0.8 (weight 1.25); B uses label 2
        // with frequency 0.2 (weight 5.0) — label 2 wins.
        let profiles = vec![
            RaterProfile {
                rater_id: "A".into(),
                label_frequency: [0.8, 0.1, 0.1],
                mean_rating_time_s: 20.0,
            },
            RaterProfile {
                rater_id: "B".into(),
                label_frequency: [0.4, 0.4, 0.2],
                mean_rating_time_s: 20.0,
            },
        ];
        let s = set("h1", 0, vec![rating("A", 0, 20.0), rating("B", 2, 20.0)]);
        assert_eq!(bias_corrected_label(&s, &profiles).unwrap(), 2);
    }

    #[test]
    fn bias_correction_unanimous() {
        let profiles = vec![
            RaterProfile {
                rater_id: "A".into(),
                label_frequency: [0.5, 0.3, 0.2],
                mean_rating_time_s: 20.0,
            },
            RaterProfile {
                rater_id: "B".into(),
                label_frequency: [0.2, 0.6, 0.2],
                mean_rating_time_s: 20.0,
            },
        ];
        let s = set("h1", 0, vec![rating("A", 1, 20.0), rating("B", 1, 20.0)]);
        assert_eq!(bias_corrected_label(&s, &profiles).unwrap(), 1);
    }

    #[test]
    fn bias_correction_single_rating() {
        let profiles = vec![RaterProfile {
            rater_id: "A".into(),
            label_frequency: [0.9, 0.05, 0.05],
            mean_rating_time_s: 20.0,
        }];
        let s = set("h1", 0, vec![rating("A", 0, 20.0)]);
        assert_eq!(bias_corrected_label(&s, &profiles).unwrap(), 0);
    }

    #[test]
    fn bias_correction_missing_profile_errors() {
        let s = set("h1", 0, vec![rating("Z", 1, 20.0)]);
        assert!(matches!(
            bias_corrected_label(&s, &[]),
            Err(AnnotationError::MissingProfile(_))
        ));
    }

    #[test]
    fn alpha_perfect_agreement() {
        let items = vec![
            vec![Some(0), Some(0), Some(0)],
            vec![Some(1), Some(1), Some(1)],
            vec![Some(2), Some(2), Some(2)],
        ];
        assert_eq!(krippendorff_alpha(&items).unwrap(), 1.0);
    }

    #[test]
    fn alpha_total_disagreement_is_negative() {
        // Two raters, binary labels, balanced margins, disagreeing on every
        // item: for u units, α = 1 − 2(2u−1)/(2u) ⋅ ... < 0.
        let items: Vec<Vec<Option<u8>>> = (0..10).map(|_| vec![Some(0), Some(1)]).collect();
        let alpha = krippendorff_alpha(&items).unwrap();
        assert!(alpha < 0.0, "alpha = {alpha}");
        // Definitional oracle: D_o = 1, D_e = (2·n0·n1)/(n(n−1)) with n = 20.
        let d_e = 2.0 * 10.0 * 10.0 / (20.0 * 19.0);
        assert_abs_diff_eq!(alpha, 1.0 - 1.0 / d_e, epsilon = 1e-12);
    }

    #[test]
    fn alpha_handles_missing_cells() {
        let items = vec![
            vec![Some(0), Some(0), None],
            vec![Some(1), None, Some(1)],
            vec![None, Some(2), Some(2)],
            vec![Some(0), Some(1), Some(0)],
        ];
        let alpha = krippendorff_alpha(&items).unwrap();
        assert!(alpha <= 1.0);
    }

    #[test]
    fn alpha_needs_pairable_values() {
        let items = vec![vec![Some(0), None], vec![None, Some(1)]];
        assert!(matches!(
            krippendorff_alpha(&items),
            Err(AnnotationError::InsufficientPairs)
        ));
    }

    #[test]
    fn audit_identical_labels() {
        let stats = audit_machine_labels(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(stats.percent_unchanged, 100.0);
        assert_eq!(stats.false_positives, 0);
        assert_eq!(stats.false_negatives, 0);
        assert_eq!(stats.fp_fn_ratio, None);
    }

    #[test]
    fn audit_mixed_counts() {
        let stats = audit_machine_labels(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(stats.percent_unchanged, 50.0);
        assert_eq!(stats.false_positives, 1);
        assert_eq!(stats.false_negatives, 1);
        assert_eq!(stats.fp_fn_ratio, Some(1.0));
    }

    #[test]
    fn audit_infinite_ratio_marker() {
        let stats = audit_machine_labels(&[1, 1], &[0, 1]).unwrap();
        assert_eq!(stats.fp_fn_ratio, Some(f64::INFINITY));
    }

    #[test]
    fn audit_length_mismatch() {
        assert!(matches!(
            audit_machine_labels(&[1], &[1, 0]),
            Err(AnnotationError::LengthMismatch(1, 2))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (2usize..6, 2usize..5).prop_flat_map(|(n, k)| {
                proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, k), n)
            })
        }

        proptest! {
            #[test]
            fn icc_is_shift_invariant(m in small_matrix(), shift in -10.0f64..10.0) {
                let shifted: Vec<Vec<f64>> =
                    m.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
                match (icc(&m), icc(&shifted)) {
                    (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}"),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "divergent outcomes: {a:?} vs {b:?}"),
                }
            }

            #[test]
            fn alpha_is_rater_permutation_invariant(
                items in proptest::collection::vec(
                    proptest::collection::vec(proptest::option::of(0u8..=2), 3), 2..8)
            ) {
                let permuted: Vec<Vec<Option<u8>>> = items
                    .iter()
                    .map(|row| vec![row[2], row[0], row[1]])
                    .collect();
                match (krippendorff_alpha(&items), krippendorff_alpha(&permuted)) {
                    (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-10),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "divergent outcomes: {a:?} vs {b:?}"),
                }
            }

            // With uniform label frequencies the inverse weights are equal,
            // so the pick reduces to a majority vote (higher label on ties).
            #[test]
            fn bias_correction_reduces_to_majority(labels in proptest::collection::vec(0u8..=2, 1..9)) {
                let raters: Vec<String> = (0..labels.len()).map(|i| format!("r{i}")).collect();
                let profiles: Vec<RaterProfile> = raters
                    .iter()
                    .map(|id| RaterProfile {
                        rater_id: id.clone(),
                        label_frequency: [1.0 / 3.0; 3],
                        mean_rating_time_s: 10.0,
                    })
                    .collect();
                let ratings: Vec<Rating> = labels
                    .iter()
                    .zip(&raters)
                    .map(|(l, id)| Rating { rater_id: id.clone(), label: *l, rating_time_s: 10.0 })
                    .collect();
                let s = RatingSet::new("h".into(), 0, ratings).unwrap();
                let picked = bias_corrected_label(&s, &profiles).unwrap();

                let mut counts = [0usize; 3];
                for l in &labels {
                    counts[*l as usize] += 1;
                }
                let mut majority = 2;
                for label in (0..3).rev() {
                    if counts[label] > counts[majority] {
                        majority = label;
                    }
                }
                prop_assert_eq!(picked, majority as u8);
            }
        }
    }
}
