//! Random forest of Gini-split decision trees with bootstrap rows and a
//! random feature subset per split, tuned by grid search.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::rng::{derive_seed, stream_rng};

use super::cv::{complement, stratified_folds};
use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_depth == Some(0) {
            return Err(GazeError::InvalidConfig(format!("invalid forest parameters {self:?}")));
        }
        Ok(())
    }
}

/// Candidate values per hyper-parameter; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_leaf: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_trees: vec![100, 300],
            max_depth: vec![Some(3), Some(5), None],
            min_leaf: vec![1, 5],
        }
    }
}

impl GridSpec {
    pub fn single(params: RfParams) -> Self {
        GridSpec {
            n_trees: vec![params.n_trees],
            max_depth: vec![params.max_depth],
            min_leaf: vec![params.min_leaf],
        }
    }

    /// Grid points in order: trees, then depth, then leaf size.
    pub fn points(&self) -> Result<Vec<RfParams>> {
        if self.n_trees.is_empty() || self.max_depth.is_empty() || self.min_leaf.is_empty() {
            return Err(GazeError::InvalidConfig(
                "every grid entry needs at least one candidate".into(),
            ));
        }
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_leaf in &self.min_leaf {
                    let p = RfParams {
                        n_trees,
                        max_depth,
                        min_leaf,
                    };
                    p.validate()?;
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class fractions indexed (negative, positive); they sum to 1.
    Leaf { fractions: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { fractions } => return fractions[1],
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { fractions } => Some(fractions),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub feature_names: Vec<String>,
    pub params: RfParams,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

impl RfModel {
    /// Mean positive-class fraction over trees.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: RfParams,
    mtry: usize,
    nodes: Vec<Node>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let pos = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf {
            fractions: [1.0 - pos, pos],
        });
        self.nodes.len() - 1
    }

    /// Best split of `rows` on `feature`: (weighted child impurity, threshold).
    fn best_split_on(&self, rows: &[usize], feature: usize, buf: &mut Vec<(f64, f64)>) -> Option<(f64, f64)> {
        buf.clear();
        buf.extend(rows.iter().map(|&r| (self.x[r][feature], self.y[r])));
        buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = buf.len();
        let total_pos: f64 = buf.iter().map(|p| p.1).sum();
        let min_leaf = self.params.min_leaf;
        let mut left_pos = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            left_pos += buf[i].1;
            let nl = i + 1;
            if buf[i].0 == buf[i + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (nl, nr) = (nl as f64, (n - nl) as f64);
            let imp = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n as f64;
            if best.is_none_or(|(b, _)| imp < b) {
                best = Some((imp, 0.5 * (buf[i].0 + buf[i + 1].0)));
            }
        }
        best
    }

    fn grow<R: Rng>(&mut self, rows: &[usize], depth: usize, rng: &mut R) -> usize {
        let pos: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let n = rows.len();
        let pure = pos == 0.0 || pos == n as f64;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || n < 2 * self.params.min_leaf {
            return self.leaf(rows);
        }

        let d = self.x[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);
        let mut buf = Vec::with_capacity(n);
        let mut best: Option<(f64, usize, f64)> = None;
        // keep drawing features past mtry until some valid split exists
        for (k, &f) in features.iter().enumerate() {
            if k >= self.mtry && best.is_some() {
                break;
            }
            if let Some((imp, thr)) = self.best_split_on(rows, f, &mut buf) {
                if best.is_none_or(|(b, _, _)| imp < b) {
                    best = Some((imp, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(rows);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][feature] <= threshold);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { fractions: [0.0, 0.0] });
        let left = self.grow(&left_rows, depth + 1, rng);
        let right = self.grow(&right_rows, depth + 1, rng);
        self.nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

fn build_tree(x: &[Vec<f64>], y: &[f64], params: RfParams, seed: u64) -> Tree {
    let mut rng = stream_rng(seed, 0);
    let n = x.len();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let d = x[0].len();
    let mut b = Builder {
        x,
        y,
        params,
        mtry: ((d as f64).sqrt().round() as usize).clamp(1, d),
        nodes: Vec::new(),
    };
    b.grow(&rows, 0, &mut rng);
    Tree { nodes: b.nodes }
}

/// Fits a forest with fixed hyper-parameters. Tree `i` uses a seed derived
/// from `(seed, i)`, so results do not depend on thread scheduling.
pub fn fit_forest(data: &Dataset, params: RfParams, seed: u64) -> Result<RfModel> {
    params.validate()?;
    data.check_trainable()?;
    let y = data.targets();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| build_tree(&data.x, &y, params, derive_seed(seed, i as u64)))
        .collect();
    Ok(RfModel {
        feature_names: data.names.clone(),
        params,
        seed,
        trees,
    })
}

/// Cross-validated accuracy of one grid point on the given folds.
fn cv_accuracy(data: &Dataset, folds: &[Vec<usize>], params: RfParams, seed: u64) -> Result<f64> {
    let mut correct = 0usize;
    for (f, held) in folds.iter().enumerate() {
        let train = data.subset(&complement(data.len(), held));
        let model = fit_forest(&train, params, derive_seed(seed, f as u64))?;
        correct += held
            .iter()
            .filter(|&&i| (model.predict_proba(&data.x[i]) >= 0.5) == (data.y[i].target() == 1.0))
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Grid search scored by stratified k-fold accuracy on `data` alone, then a
/// refit on all of `data` with the best grid point (first one on ties).
pub fn train_rf(data: &Dataset, grid: &GridSpec, cv_folds: usize, seed: u64) -> Result<RfModel> {
    data.check_trainable()?;
    let points = grid.points()?;
    let best = if points.len() == 1 {
        points[0]
    } else {
        let mut rng = stream_rng(seed, 0x6772_6964);
        let folds = stratified_folds(&data.y, cv_folds, &mut rng)?;
        let scores: Vec<f64> = points
            .par_iter()
            .enumerate()
            .map(|(g, &p)| cv_accuracy(data, &folds, p, derive_seed(seed, 1000 + g as u64)))
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (g, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = g;
            }
        }
        points[best]
    };
    fit_forest(data, best, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Gender;
    use rand::SeedableRng;

    fn xor_data(n: usize, seed: u64) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            x.push(vec![a, b]);
            y.push(if (a > 0.0) == (b > 0.0) {
                Gender::Female
            } else {
                Gender::Male
            });
        }
        Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap()
    }

    #[test]
    fn xor_is_learned() {
        let ds = xor_data(200, 1);
        let m = fit_forest(
            &ds,
            RfParams {
                n_trees: 100,
                max_depth: None,
                min_leaf: 1,
            },
            4,
        )
        .unwrap();
        let acc =
            ds.x.iter()
                .zip(&ds.y)
                .filter(|(x, y)| Gender::from_probability(m.predict_proba(x)) == **y)
                .count() as f64
                / 200.0;
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn same_seed_same_predictions() {
        let ds = xor_data(80, 2);
        let grid = GridSpec {
            n_trees: vec![10, 20],
            max_depth: vec![Some(2), None],
            min_leaf: vec![1],
        };
        let a = train_rf(&ds, &grid, 5, 11).unwrap();
        let b = train_rf(&ds, &grid, 5, 11).unwrap();
        let probe = xor_data(30, 99);
        for x in &probe.x {
            assert_eq!(a.predict_proba(x), b.predict_proba(x));
        }
    }

    #[test]
    fn leaves_are_distributions() {
        let ds = xor_data(60, 3);
        let m = fit_forest(
            &ds,
            RfParams {
                n_trees: 5,
                max_depth: Some(4),
                min_leaf: 2,
            },
            0,
        )
        .unwrap();
        for t in &m.trees {
            for f in t.leaves() {
                assert!((f[0] + f[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_forest() {
        let m = RfModel {
            feature_names: vec!["a".into()],
            params: RfParams {
                n_trees: 1,
                max_depth: Some(1),
                min_leaf: 1,
            },
            seed: 0,
            trees: vec![Tree {
                nodes: vec![Node::Leaf {
                    fractions: [0.25, 0.75],
                }],
            }],
        };
        assert_eq!(m.predict_proba(&[-5.0]), 0.75);
        assert_eq!(m.predict_proba(&[5.0]), 0.75);
    }

    #[test]
    fn removing_a_tree_moves_probability_by_at_most_its_share() {
        let ds = xor_data(60, 4);
        let m = fit_forest(
            &ds,
            RfParams {
                n_trees: 25,
                max_depth: Some(3),
                min_leaf: 1,
            },
            8,
        )
        .unwrap();
        let t = m.trees.len() as f64;
        for x in &ds.x {
            let p = m.predict_proba(x);
            let mut reduced = m.clone();
            let removed = reduced.trees.pop().unwrap();
            let q = reduced.predict_proba(x);
            // each tree contributes p_t / T to the mean
            assert!(removed.predict_proba(x) / t <= 1.0 / t);
            assert!((p - q).abs() <= 1.0 / (t - 1.0) + 1e-12);
        }
    }

    #[test]
    fn invalid_grid_rejected() {
        let grid = GridSpec {
            n_trees: vec![],
            ..GridSpec::default()
        };
        assert!(grid.points().is_err());
        let grid = GridSpec {
            min_leaf: vec![0],
            ..GridSpec::default()
        };
        assert!(grid.points().is_err());
        assert_eq!(GridSpec::default().points().unwrap().len(), 12);
    }
}
