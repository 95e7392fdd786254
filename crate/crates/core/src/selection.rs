//! Choosing one allocation from an enumerated frontier by a welfare or envy
//! criterion. All scores are "lower is better".

use std::fmt;
use std::str::FromStr;

use crate::enumerator::Frontier;
use crate::error::{Error, Result};
use crate::model::{Allocation, PreferenceProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Sum of 1-based ranks received.
    Utilitarian,
    /// Worst 1-based rank received.
    Egalitarian,
    /// Ordered pairs `(i, j)` where `i` prefers `j`'s room to her own.
    MinEnvyPairs,
    /// Agents envying at least one other agent.
    MinEnviousAgents,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Utilitarian,
        Criterion::Egalitarian,
        Criterion::MinEnvyPairs,
        Criterion::MinEnviousAgents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Utilitarian => "utilitarian",
            Criterion::Egalitarian => "egalitarian",
            Criterion::MinEnvyPairs => "envy-pairs",
            Criterion::MinEnviousAgents => "envious-agents",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown criterion `{s}` (expected one of: utilitarian, egalitarian, envy-pairs, envious-agents)"
                )
            })
    }
}

fn envies<'a>(
    profile: &'a PreferenceProfile,
    alloc: &'a Allocation,
    i: usize,
) -> impl Iterator<Item = usize> + 'a {
    let own = alloc.room_of(i);
    let assign = alloc.assign();
    (0..assign.len()).filter(move |&j| j != i && profile.prefers(i, assign[j], own))
}

/// Score of `alloc` under `criterion`. Sizes must match.
pub fn score(profile: &PreferenceProfile, alloc: &Allocation, criterion: Criterion) -> Result<u64> {
    let n = profile.n();
    if alloc.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: alloc.n(),
        });
    }
    let ranks = (0..n).map(|i| 1 + profile.rank_of(i, alloc.room_of(i)) as u64);
    Ok(match criterion {
        Criterion::Utilitarian => ranks.sum(),
        Criterion::Egalitarian => ranks.max().unwrap_or(0),
        Criterion::MinEnvyPairs => (0..n)
            .map(|i| envies(profile, alloc, i).count() as u64)
            .sum(),
        Criterion::MinEnviousAgents => (0..n)
            .filter(|&i| envies(profile, alloc, i).next().is_some())
            .count() as u64,
    })
}

/// Minimum-score frontier member; ties go to the lexicographically smallest.
pub fn select_best(
    profile: &PreferenceProfile,
    frontier: &Frontier,
    criterion: Criterion,
) -> Result<Allocation> {
    let mut best: Option<(u64, &Allocation)> = None;
    for member in &frontier.members {
        let s = score(profile, member, criterion)?;
        best = match best {
            Some((bs, ba)) if (bs, ba) <= (s, member) => Some((bs, ba)),
            _ => Some((s, member)),
        };
    }
    best.map(|(_, a)| a.clone()).ok_or(Error::EmptyFrontier)
}
