//! Domain types: preference profiles, allocations, inverse-search tags, and
//! the lexicographic (Lehmer code) ranking of allocations.
//!
//! Indices are zero-based everywhere in this crate. Text formats and the CLI
//! convert to one-based room numbers at the boundary.

use std::fmt;

use crate::error::{Error, Result};

pub type AgentId = usize;
pub type RoomId = usize;

/// Largest `n` for which the full set of `n!` allocations may be materialized.
pub const MAX_SCAN_N: usize = 12;

/// Largest `n` whose factorial fits in a `u64`.
pub const MAX_RANK_N: usize = 20;

const FACTORIALS: [u64; MAX_RANK_N + 1] = {
    let mut table = [1u64; MAX_RANK_N + 1];
    let mut i = 1;
    while i <= MAX_RANK_N {
        table[i] = table[i - 1] * i as u64;
        i += 1;
    }
    table
};

/// `n!`, or `None` when it overflows a `u64`.
pub fn factorial(n: usize) -> Option<u64> {
    FACTORIALS.get(n).copied()
}

/// Strict, complete ordinal preferences of `n` agents over `n` rooms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreferenceProfile {
    n: usize,
    prefs: Vec<Vec<RoomId>>,
    inverse_rank: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    /// Builds a profile from zero-based rankings, most preferred first.
    pub fn new(prefs: Vec<Vec<RoomId>>) -> Result<Self> {
        let n = prefs.len();
        if n == 0 {
            return Err(Error::EmptyProfile);
        }
        let mut inverse_rank = vec![vec![usize::MAX; n]; n];
        for (agent, ranking) in prefs.iter().enumerate() {
            if ranking.len() != n {
                return Err(Error::WrongLength {
                    agent,
                    expected: n,
                    found: ranking.len(),
                });
            }
            for (pos, &room) in ranking.iter().enumerate() {
                if room >= n {
                    return Err(Error::OutOfRange {
                        value: room as i64,
                        n,
                    });
                }
                if inverse_rank[agent][room] != usize::MAX {
                    return Err(Error::DuplicateEntry { agent, room });
                }
                inverse_rank[agent][room] = pos;
            }
        }
        Ok(Self {
            n,
            prefs,
            inverse_rank,
        })
    }

    /// Every agent ranks the rooms identically, `0 ≻ 1 ≻ … ≻ n-1`.
    pub fn identical(n: usize) -> Result<Self> {
        Self::new(vec![(0..n).collect(); n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ranking(&self, agent: AgentId) -> &[RoomId] {
        &self.prefs[agent]
    }

    pub fn rankings(&self) -> &[Vec<RoomId>] {
        &self.prefs
    }

    /// Position of `room` in `agent`'s ranking, 0 being the top.
    #[inline]
    pub fn rank_of(&self, agent: AgentId, room: RoomId) -> usize {
        self.inverse_rank[agent][room]
    }

    /// Whether `agent` strictly prefers room `a` to room `b`.
    #[inline]
    pub fn prefers(&self, agent: AgentId, a: RoomId, b: RoomId) -> bool {
        self.inverse_rank[agent][a] < self.inverse_rank[agent][b]
    }
}

/// Validates raw rankings (zero-based, possibly negative from upstream
/// one-based conversion) into a [`PreferenceProfile`].
pub fn validate_profile(raw: &[Vec<i64>]) -> Result<PreferenceProfile> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    let mut prefs = Vec::with_capacity(n);
    for (agent, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(Error::WrongLength {
                agent,
                expected: n,
                found: row.len(),
            });
        }
        let mut ranking = Vec::with_capacity(n);
        for &value in row {
            if value < 0 || value as u64 >= n as u64 {
                return Err(Error::OutOfRange { value, n });
            }
            ranking.push(value as usize);
        }
        prefs.push(ranking);
    }
    PreferenceProfile::new(prefs)
}

/// A bijection between agents and rooms, stored agent → room.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    assign: Vec<RoomId>,
}

impl Allocation {
    pub fn new(assign: Vec<RoomId>) -> Result<Self> {
        let n = assign.len();
        let mut seen = vec![false; n];
        for &room in &assign {
            if room >= n {
                return Err(Error::OutOfRange {
                    value: room as i64,
                    n,
                });
            }
            if std::mem::replace(&mut seen[room], true) {
                return Err(Error::NotBijection { room });
            }
        }
        Ok(Self { assign })
    }

    /// Caller guarantees `assign` is a permutation of `0..assign.len()`.
    pub(crate) fn from_vec_unchecked(assign: Vec<RoomId>) -> Self {
        debug_assert!(Allocation::new(assign.clone()).is_ok());
        Self { assign }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            assign: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn assign(&self) -> &[RoomId] {
        &self.assign
    }

    #[inline]
    pub fn room_of(&self, agent: AgentId) -> RoomId {
        self.assign[agent]
    }

    /// The room → agent view.
    pub fn owners(&self) -> Vec<AgentId> {
        let mut owner = vec![0; self.assign.len()];
        for (agent, &room) in self.assign.iter().enumerate() {
            owner[room] = agent;
        }
        owner
    }

    pub fn into_vec(self) -> Vec<RoomId> {
        self.assign
    }
}

impl fmt::Display for Allocation {
    /// One-based room numbers separated by spaces, e.g. `4 3 2 1 5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, room) in self.assign.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", room + 1)?;
        }
        Ok(())
    }
}

/// Lexicographic index of an allocation among all `n!` permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AllocationRank(pub u64);

/// Lehmer-code rank of a permutation slice. Requires `perm.len() <= 20`.
#[inline]
pub fn rank_slice(perm: &[RoomId]) -> u64 {
    let n = perm.len();
    assert!(n <= MAX_RANK_N, "cannot rank permutations of length {n}");
    let mut seen: u32 = 0;
    let mut rank = 0u64;
    for (i, &x) in perm.iter().enumerate() {
        let smaller_used = (seen & ((1u32 << x) - 1)).count_ones() as u64;
        rank += (x as u64 - smaller_used) * FACTORIALS[n - 1 - i];
        seen |= 1 << x;
    }
    rank
}

/// Inverse of [`rank_slice`]; writes the permutation into `out`.
#[inline]
pub(crate) fn unrank_into(mut rank: u64, out: &mut [RoomId]) {
    let n = out.len();
    let mut unused: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for (i, slot) in out.iter_mut().enumerate() {
        let f = FACTORIALS[n - 1 - i];
        let mut digit = (rank / f) as u32;
        rank %= f;
        // select the digit-th unused element
        let mut bits = unused;
        while digit > 0 {
            bits &= bits - 1;
            digit -= 1;
        }
        let x = bits.trailing_zeros();
        *slot = x as usize;
        unused &= !(1 << x);
    }
}

/// Advances `perm` to its lexicographic successor; returns `false` (leaving
/// `perm` sorted ascending) once the last permutation has been passed.
pub fn next_permutation<T: Ord>(perm: &mut [T]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        perm.reverse();
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

pub fn rank_allocation(alloc: &Allocation) -> AllocationRank {
    AllocationRank(rank_slice(&alloc.assign))
}

pub fn unrank_allocation(rank: AllocationRank, n: usize) -> Result<Allocation> {
    let total = factorial(n).ok_or(Error::InstanceTooLarge { n, max: MAX_RANK_N })?;
    if rank.0 >= total {
        return Err(Error::RankOutOfRange { rank: rank.0, n });
    }
    let mut assign = vec![0; n];
    unrank_into(rank.0, &mut assign);
    Ok(Allocation { assign })
}

/// Per-room state during inverse search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Tag {
    /// Not yet active.
    Unmarked = -1,
    /// Top remaining choice of its holder; may be shuffled.
    Circle = 0,
    /// Fixed in position.
    Square = 1,
}

impl Tag {
    pub fn code(self) -> i8 {
        self as i8
    }
}

/// An allocation together with one tag per agent position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaggedState {
    pub alloc: Allocation,
    pub tags: Vec<Tag>,
}

impl TaggedState {
    pub fn new(alloc: Allocation, tags: Vec<Tag>) -> Result<Self> {
        if tags.len() != alloc.n() {
            return Err(Error::SizeMismatch {
                expected: alloc.n(),
                found: tags.len(),
            });
        }
        Ok(Self { alloc, tags })
    }

    pub fn unmarked(alloc: Allocation) -> Self {
        let tags = vec![Tag::Unmarked; alloc.n()];
        Self { alloc, tags }
    }

    pub fn is_terminal(&self) -> bool {
        self.tags.iter().all(|&t| t == Tag::Square)
    }

    pub fn fixed_rooms(&self) -> Vec<RoomId> {
        self.tags
            .iter()
            .zip(self.alloc.assign())
            .filter(|(&t, _)| t == Tag::Square)
            .map(|(_, &r)| r)
            .collect()
    }

    /// Every circled room is its holder's top choice among non-square rooms.
    pub fn satisfies_circle_condition(&self, profile: &PreferenceProfile) -> bool {
        let n = self.alloc.n();
        let mut fixed = vec![false; n];
        for r in self.fixed_rooms() {
            fixed[r] = true;
        }
        self.tags.iter().enumerate().all(|(agent, &tag)| {
            tag != Tag::Circle
                || profile
                    .ranking(agent)
                    .iter()
                    .find(|&&r| !fixed[r])
                    .is_some_and(|&top| top == self.alloc.room_of(agent))
        })
    }
}
