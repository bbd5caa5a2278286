use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::ingest::Gender;

use super::FeatureTable;

/// Features in descending order of F-score; ties keep catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRanking {
    pub entries: Vec<(String, f64)>,
}

impl AnovaRanking {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One-way ANOVA F statistic for two groups: between-group mean square over
/// within-group mean square.
///
/// A constant feature scores 0. A feature that varies only between groups
/// (zero within-group variance) scores `f64::INFINITY`.
pub fn anova_f(group_a: &[f64], group_b: &[f64]) -> f64 {
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let n = na + nb;
    let all = group_a.iter().chain(group_b);
    let (lo, hi) = all
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo == hi {
        return 0.0;
    }
    let grand = all.sum::<f64>() / n;
    let ma = group_a.iter().sum::<f64>() / na;
    let mb = group_b.iter().sum::<f64>() / nb;
    let ss_between = na * (ma - grand).powi(2) + nb * (mb - grand).powi(2);
    let ss_within: f64 =
        group_a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() + group_b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
    let ms_between = ss_between / 1.0;
    let ms_within = ss_within / (n - 2.0);
    if ms_within == 0.0 {
        return if ms_between == 0.0 { 0.0 } else { f64::INFINITY };
    }
    ms_between / ms_within
}

/// Ranks every feature of the table by its two-group F-score.
pub fn anova_rank(table: &FeatureTable) -> Result<AnovaRanking> {
    let labels = table.labels();
    let n_f = labels.iter().filter(|&&g| g == Gender::Female).count();
    let n_m = labels.len() - n_f;
    if n_f < 2 || n_m < 2 {
        return Err(GazeError::InsufficientData(format!(
            "ANOVA needs at least two members per class, got {n_f} female / {n_m} male"
        )));
    }
    let mut entries: Vec<(String, f64)> = (0..table.n_features())
        .map(|j| {
            let (mut a, mut b) = (Vec::with_capacity(n_f), Vec::with_capacity(n_m));
            for r in &table.rows {
                match r.label {
                    Gender::Female => a.push(r.values[j]),
                    Gender::Male => b.push(r.values[j]),
                }
            }
            (table.names[j].clone(), anova_f(&a, &b))
        })
        .collect();
    // stable: equal scores keep table (catalog) order
    entries.sort_by(|x, y| y.1.total_cmp(&x.1));
    Ok(AnovaRanking { entries })
}

/// The first `k` names of a ranking.
pub fn select_top_k(ranking: &AnovaRanking, k: usize) -> Result<Vec<String>> {
    if k == 0 || k > ranking.len() {
        return Err(GazeError::InvalidConfig(format!(
            "k = {k} features requested from a catalog of {}",
            ranking.len()
        )));
    }
    Ok(ranking.entries[..k].iter().map(|(n, _)| n.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Channel, FeatureRow};
    use approx::assert_relative_eq;

    #[test]
    fn hand_computed_f() {
        assert_relative_eq!(anova_f(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 13.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_feature_scores_zero() {
        assert_eq!(anova_f(&[0.1; 5], &[0.1; 4]), 0.0);
    }

    #[test]
    fn perfectly_separated_constant_groups() {
        assert_eq!(anova_f(&[1.0; 3], &[2.0; 3]), f64::INFINITY);
    }

    fn table(cols: Vec<Vec<f64>>, labels: &[Gender]) -> FeatureTable {
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &g)| FeatureRow {
                participant_id: format!("p{i}"),
                label: g,
                values: cols.iter().map(|c| c[i]).collect(),
            })
            .collect();
        FeatureTable::new(Channel::Fixation, names, rows).unwrap()
    }

    #[test]
    fn ranking_descends_with_stable_ties() {
        use Gender::*;
        let labels = [Female, Female, Female, Male, Male, Male];
        let t = table(
            vec![
                vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                vec![1.0, 2.0, 3.0, 1.5, 2.5, 3.5],
            ],
            &labels,
        );
        let r = anova_rank(&t).unwrap();
        let names: Vec<&str> = r.names().collect();
        assert_eq!(names, vec!["f1", "f3", "f0", "f2"]);
        assert_eq!(select_top_k(&r, 2).unwrap(), vec!["f1".to_string(), "f3".to_string()]);
        assert_eq!(select_top_k(&r, 4).unwrap().len(), 4);
        assert!(select_top_k(&r, 5).is_err());
    }

    #[test]
    fn single_member_class_rejected() {
        use Gender::*;
        let t = table(vec![vec![1.0, 2.0, 3.0]], &[Female, Male, Male]);
        assert!(anova_rank(&t).is_err());
    }

    proptest::proptest! {
        #[test]
        fn affine_invariance(
            a in proptest::collection::vec(-50.0f64..50.0, 2..20),
            b in proptest::collection::vec(-50.0f64..50.0, 2..20),
            scale in proptest::prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            shift in -100.0f64..100.0,
        ) {
            let f = anova_f(&a, &b);
            let ta: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let tb: Vec<f64> = b.iter().map(|v| scale * v + shift).collect();
            let g = anova_f(&ta, &tb);
            proptest::prop_assert!((f - g).abs() <= 1e-9 * f.abs().max(1.0), "{} vs {}", f, g);
        }
    }
}
