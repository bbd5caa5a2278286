use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{GazeError, Result};
use crate::ingest::Gender;

/// Stratified k-fold assignment: returns the held-out indices of each fold.
///
/// Each class is shuffled and dealt round-robin over the folds. The fold
/// count is reduced to the smaller class size when necessary so that every
/// fold holds at least one member of each class.
pub fn stratified_folds<R: Rng + ?Sized>(labels: &[Gender], k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let mut female: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Gender::Female).collect();
    let mut male: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Gender::Male).collect();
    let smallest = female.len().min(male.len());
    if smallest < 2 || k < 2 {
        return Err(GazeError::InsufficientData(format!(
            "cannot build {k} stratified folds from {} female / {} male samples",
            female.len(),
            male.len()
        )));
    }
    let k = k.min(smallest);
    female.shuffle(rng);
    male.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in female.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    for (i, idx) in male.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Indices not in `held_out`, ascending.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in held_out {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}
