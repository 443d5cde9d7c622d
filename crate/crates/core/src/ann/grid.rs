use alloc::vec::Vec;

use rand::Rng as _;

use crate::seed;

/// One (learning rate, momentum) setting of the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperCell {
    pub learning_rate: f64,
    pub momentum: f64,
}

/// ε-greedy average-reward controller over a grid of training settings.
///
/// Each cell's value estimate is the running mean of the rewards it has
/// received.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    cells: Vec<HyperCell>,
    values: Vec<f64>,
    visits: Vec<u64>,
    epsilon: f64,
}

impl Default for HyperGrid {
    /// lr ∈ {0.01, 0.05, 0.1, 0.5} × momentum ∈ {0, 0.5, 0.9}, ε = 0.1.
    fn default() -> Self {
        let mut cells = Vec::with_capacity(12);
        for lr in [0.01, 0.05, 0.1, 0.5] {
            for momentum in [0.0, 0.5, 0.9] {
                cells.push(HyperCell { learning_rate: lr, momentum });
            }
        }
        Self::new(cells, 0.1).expect("default grid is valid")
    }
}

impl HyperGrid {
    /// Returns `None` if the grid is empty, ε is outside [0, 1], or a cell has
    /// a non-positive learning rate or momentum outside [0, 1).
    pub fn new(cells: Vec<HyperCell>, epsilon: f64) -> Option<Self> {
        let valid_cell =
            |c: &HyperCell| c.learning_rate > 0.0 && c.learning_rate.is_finite() && (0.0..1.0).contains(&c.momentum);
        if cells.is_empty() || !(0.0..=1.0).contains(&epsilon) || !cells.iter().all(valid_cell) {
            return None;
        }
        let n = cells.len();
        Some(Self { cells, values: alloc::vec![0.0; n], visits: alloc::vec![0; n], epsilon })
    }

    /// Restores a grid with its learned statistics.
    pub fn with_state(cells: Vec<HyperCell>, epsilon: f64, values: Vec<f64>, visits: Vec<u64>) -> Option<Self> {
        let mut g = Self::new(cells, epsilon)?;
        if values.len() != g.cells.len() || visits.len() != g.cells.len() {
            return None;
        }
        g.values = values;
        g.visits = visits;
        Some(g)
    }

    pub fn cells(&self) -> &[HyperCell] {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// With probability 1 − ε the best-valued cell (lowest index on ties),
    /// otherwise a uniformly random one.
    pub fn select(&self, selector_seed: u64) -> usize {
        let mut rng = seed::rng(selector_seed);
        let explore: f64 = rng.random();
        if explore < self.epsilon {
            return rng.random_range(0..self.cells.len());
        }
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Sample-average update of `cell`'s value estimate.
    pub fn update(&mut self, cell: usize, reward: f64) {
        self.visits[cell] += 1;
        self.values[cell] += (reward - self.values[cell]) / self.visits[cell] as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cells(n: usize) -> Vec<HyperCell> {
        (0..n).map(|i| HyperCell { learning_rate: 0.1 * (i + 1) as f64, momentum: 0.0 }).collect()
    }

    #[test]
    fn single_cell_always_zero() {
        let g = HyperGrid::new(cells(1), 1.0).unwrap();
        assert!((0..50).all(|s| g.select(s) == 0));
    }

    #[test]
    fn greedy_picks_best() {
        let g = HyperGrid::with_state(cells(2), 0.0, vec![0.1, 0.9], vec![1, 1]).unwrap();
        assert!((0..50).all(|s| g.select(s) == 1));
    }

    #[test]
    fn greedy_ties_to_lowest() {
        let g = HyperGrid::new(cells(4), 0.0).unwrap();
        assert!((0..50).all(|s| g.select(s) == 0));
    }

    #[test]
    fn explores_with_full_epsilon() {
        let g = HyperGrid::new(cells(4), 1.0).unwrap();
        let picks: alloc::collections::BTreeSet<usize> = (0..200).map(|s| g.select(s)).collect();
        assert_eq!(picks.len(), 4);
        assert_eq!(g.select(17), g.select(17));
    }

    #[test]
    fn running_mean() {
        let mut g = HyperGrid::new(cells(3), 0.1).unwrap();
        g.update(1, 0.7);
        assert_eq!(g.values()[1], 0.7);
        let mut g = HyperGrid::new(cells(3), 0.1).unwrap();
        g.update(2, 1.0);
        g.update(2, 0.0);
        assert_eq!(g.values()[2], 0.5);
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(g.visits(), &[0, 0, 2]);
    }

    #[test]
    fn default_grid() {
        let g = HyperGrid::default();
        assert_eq!(g.len(), 12);
        assert_eq!(g.epsilon(), 0.1);
        assert_eq!(g.cells()[0], HyperCell { learning_rate: 0.01, momentum: 0.0 });
        assert_eq!(g.cells()[11], HyperCell { learning_rate: 0.5, momentum: 0.9 });
    }

    #[test]
    fn rejects_invalid() {
        assert!(HyperGrid::new(vec![], 0.1).is_none());
        assert!(HyperGrid::new(cells(1), 1.5).is_none());
        assert!(HyperGrid::new(vec![HyperCell { learning_rate: 0.1, momentum: 1.0 }], 0.1).is_none());
        assert!(HyperGrid::new(vec![HyperCell { learning_rate: 0.0, momentum: 0.0 }], 0.1).is_none());
    }
}
