//! Non-dominated filtering under (fewer errors, larger dataset).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub algorithm: String,
    /// Mislabelled rows; may be a median, hence real-valued.
    pub errors: f64,
    pub dataset_size: f64,
}

impl ParetoPoint {
    pub fn new(algorithm: impl Into<String>, errors: f64, dataset_size: f64) -> Self {
        Self { algorithm: algorithm.into(), errors, dataset_size }
    }

    pub fn dominates(&self, q: &ParetoPoint) -> bool {
        self.errors <= q.errors
            && self.dataset_size >= q.dataset_size
            && (self.errors < q.errors || self.dataset_size > q.dataset_size)
    }
}

/// Points not dominated by any other, in input order. Duplicates are kept.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // sweep by size descending, then errors ascending
    order.sort_by(|&a, &b| {
        points[b]
            .dataset_size
            .total_cmp(&points[a].dataset_size)
            .then(points[a].errors.total_cmp(&points[b].errors))
    });
    let mut keep = vec![false; points.len()];
    let mut best_errors = f64::INFINITY;
    let mut k = 0;
    while k < order.len() {
        // a group of equal size: only its minimum-error members can survive
        let size = points[order[k]].dataset_size;
        let group_min = points[order[k]].errors;
        let mut j = k;
        while j < order.len() && points[order[j]].dataset_size == size {
            let i = order[j];
            if points[i].errors == group_min && group_min < best_errors {
                keep[i] = true;
            }
            j += 1;
        }
        best_errors = best_errors.min(group_min);
        k = j;
    }
    points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p.clone()).collect()
}
