//! Exhaustive per-hour search over capacity-cell on/off patterns.

use crate::netmodel::{evaluate_hour, CellId, HourOutcome, NetworkState, World, COVERAGE_CELL_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct HourOptimum {
    /// Switchable cell ids, in the order of `pattern`.
    pub switchable: Vec<CellId>,
    pub pattern: Vec<bool>,
    pub efficiency_bits_per_j: f64,
    pub outcome: HourOutcome,
}

/// Best efficiency achievable in the upcoming hour of `state` over every
/// on/off pattern of the switchable cells, with the coverage cell on.
/// Ties go to the pattern that is smallest in lexicographic order (lowest
/// cell id first, off before on).
pub fn exhaustive_hour_optimum(world: &World, state: &NetworkState) -> HourOptimum {
    let switchable = world.switchable_ids();
    let k = switchable.len();
    assert!(k < 24, "too many switchable cells for exhaustive search");
    let demands = world.demands(state.day_index, state.hour_of_day);
    let mut best: Option<(u32, f64, HourOutcome)> = None;
    let mut on = vec![false; world.n_cells()];
    for mask in 0..(1u32 << k) {
        on.iter_mut().for_each(|v| *v = false);
        on[COVERAGE_CELL_ID as usize] = true;
        // bit (k-1-i) drives switchable[i], so increasing masks enumerate
        // patterns in lexicographic order
        for (i, &c) in switchable.iter().enumerate() {
            on[c as usize] = mask >> (k - 1 - i) & 1 == 1;
        }
        let outcome = evaluate_hour(world, &state.assignment, &on, &demands);
        let eff = outcome.efficiency_bits_per_j();
        if best.as_ref().is_none_or(|(_, b, _)| eff > *b) {
            best = Some((mask, eff, outcome));
        }
    }
    let (mask, eff, outcome) = best.expect("at least one pattern");
    HourOptimum {
        pattern: (0..k).map(|i| mask >> (k - 1 - i) & 1 == 1).collect(),
        switchable,
        efficiency_bits_per_j: eff,
        outcome,
    }
}
