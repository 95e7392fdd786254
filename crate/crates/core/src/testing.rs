use crate::model::{Allocation, PreferenceProfile};

/// Five agents, preferences as one-based room numbers:
/// 1: 4 3 2 1 5, 2: 3 4 1 2 5, 3: 1 2 3 4 5, 4: 1 5 3 2 4, 5: 2 3 4 5 1.
pub fn example_profile() -> PreferenceProfile {
    let rows = [
        [4, 3, 2, 1, 5],
        [3, 4, 1, 2, 5],
        [1, 2, 3, 4, 5],
        [1, 5, 3, 2, 4],
        [2, 3, 4, 5, 1],
    ];
    PreferenceProfile::new(
        rows.iter()
            .map(|r| r.iter().map(|&x: &usize| x - 1).collect())
            .collect(),
    )
    .unwrap()
}

pub fn one_based(rooms: &[usize]) -> Allocation {
    Allocation::new(rooms.iter().map(|r| r - 1).collect()).unwrap()
}
