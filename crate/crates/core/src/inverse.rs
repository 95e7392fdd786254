//! Inverse TTC: recover every endowment that TTC maps to a given Pareto
//! optimal allocation.
//!
//! The search runs over tagged states. A room is *circled* when it is its
//! holder's top choice among rooms not yet fixed, and *squared* once it is
//! fixed as part of the endowment being rebuilt. Starting from the PO
//! allocation, each step either permutes the circled rooms (rooms that moved
//! become squares) or squares a single circle in place; `dressup` then
//! re-derives the circles. States whose tags are all squares are endowments
//! in the preimage.
//!
//! Reading a path forward, the rooms squared together in one step are exactly
//! the rooms one batch of TTC cycles hands out, so every terminal state maps
//! back to the source allocation, and every TTC run that reaches the source
//! can be replayed as such a path.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::model::{Allocation, PreferenceProfile, RoomId, Tag, TaggedState};
use crate::ttc::is_po_fixedpoint;

/// Largest `n` the packed state encoding supports.
pub const MAX_INVERSE_N: usize = 16;

/// Canonical encoding of a tagged state.
///
/// Bits `0..64` hold the rooms, four bits per position; bits `64..80` mark
/// squared positions, `80..96` circled positions, and `96..112` the rooms held
/// by squares (a function of the rest, stored so it need not be recomputed).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(u128);

impl StateKey {
    #[inline]
    fn from_parts(rooms: u64, squares: u16, circles: u16, fixed: u16) -> Self {
        StateKey(
            rooms as u128
                | (squares as u128) << 64
                | (circles as u128) << 80
                | (fixed as u128) << 96,
        )
    }

    #[inline]
    fn rooms(self) -> u64 {
        self.0 as u64
    }

    #[inline]
    fn squares(self) -> u16 {
        (self.0 >> 64) as u16
    }

    #[inline]
    fn circles(self) -> u16 {
        (self.0 >> 80) as u16
    }

    #[inline]
    fn fixed(self) -> u16 {
        (self.0 >> 96) as u16
    }

    fn pack(rooms: &[u8], tags: &[Tag]) -> Self {
        let (mut packed, mut squares, mut circles, mut fixed) = (0u64, 0u16, 0u16, 0u16);
        for (i, (&r, &t)) in rooms.iter().zip(tags).enumerate() {
            packed |= (r as u64) << (4 * i);
            match t {
                Tag::Square => {
                    squares |= 1 << i;
                    fixed |= 1 << r;
                }
                Tag::Circle => circles |= 1 << i,
                Tag::Unmarked => {}
            }
        }
        Self::from_parts(packed, squares, circles, fixed)
    }

    pub fn of(state: &TaggedState) -> Result<Self> {
        let n = state.alloc.n();
        if n > MAX_INVERSE_N {
            return Err(Error::InstanceTooLarge {
                n,
                max: MAX_INVERSE_N,
            });
        }
        let rooms: Vec<u8> = state.alloc.assign().iter().map(|&r| r as u8).collect();
        Ok(Self::pack(&rooms, &state.tags))
    }

    /// Little-endian bytes of the packed key.
    pub fn to_bytes(self) -> [u8; 16] {
        self.0.to_le_bytes()
    }
}

#[inline]
fn room_at(rooms: u64, i: usize) -> u8 {
    (rooms >> (4 * i)) as u8 & 0x0f
}

/// All endowments that TTC maps to `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preimage {
    pub source: Allocation,
    /// Sorted lexicographically.
    pub members: Vec<Allocation>,
    pub states_visited: u64,
}

/// Members found by one `devour` run and the number of states expanded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DevourOutcome {
    pub members: Vec<Allocation>,
    pub states_visited: u64,
}

/// Reusable breadth-first search over tagged states for one profile.
///
/// A position that is not squared has never moved, so it still holds its
/// start room. Its circle test therefore only asks whether every room its
/// holder ranks above that start room is fixed, which is one mask check
/// against `above`, computed once per search.
#[derive(Debug)]
pub struct InverseSearch {
    n: usize,
    ranks: Vec<[u8; MAX_INVERSE_N]>,
    above: [u16; MAX_INVERSE_N],
    queue: VecDeque<StateKey>,
    visited: FxHashSet<StateKey>,
}

impl InverseSearch {
    pub fn new(profile: &PreferenceProfile) -> Result<Self> {
        let n = profile.n();
        if n > MAX_INVERSE_N {
            return Err(Error::InstanceTooLarge {
                n,
                max: MAX_INVERSE_N,
            });
        }
        let ranks = (0..n)
            .map(|a| {
                let mut row = [0u8; MAX_INVERSE_N];
                for (r, slot) in row[..n].iter_mut().enumerate() {
                    *slot = profile.rank_of(a, r) as u8;
                }
                row
            })
            .collect();
        Ok(Self {
            n,
            ranks,
            above: [0; MAX_INVERSE_N],
            queue: VecDeque::new(),
            visited: FxHashSet::default(),
        })
    }

    fn set_start(&mut self, rooms: &[u8]) {
        for (i, &own) in rooms.iter().enumerate() {
            let row = &self.ranks[i];
            self.above[i] = (0..self.n)
                .filter(|&r| row[r] < row[own as usize])
                .fold(0, |m, r| m | 1 << r);
        }
    }

    /// Circles among the positions in `open` (none squared) given `fixed`.
    #[inline]
    fn circles_in(&self, mut open: u16, fixed: u16) -> u16 {
        let mut circles = 0;
        while open != 0 {
            let i = open.trailing_zeros() as usize;
            open &= open - 1;
            if self.above[i] & !fixed == 0 {
                circles |= 1 << i;
            }
        }
        circles
    }

    #[inline]
    fn push(&mut self, key: StateKey) {
        if self.visited.insert(key) {
            self.queue.push_back(key);
        }
    }

    /// Breadth-first search from `start`; calls `sink` with the rooms of
    /// every terminal state. Returns the number of states expanded.
    ///
    /// Non-square positions of `start` must hold the rooms `set_start` saw.
    fn search(&mut self, start: StateKey, mut sink: impl FnMut(&[u8])) -> Result<u64> {
        let n = self.n;
        let all: u16 = if n == 16 { u16::MAX } else { (1 << n) - 1 };
        self.queue.clear();
        self.visited.clear();
        self.push(start);

        let mut found = [0u8; MAX_INVERSE_N];
        let mut pos = [0usize; MAX_INVERSE_N];
        let mut orig = [0u8; MAX_INVERSE_N];
        let mut shuffled = [0u8; MAX_INVERSE_N];
        let mut heap = [0usize; MAX_INVERSE_N];
        let mut expanded = 0u64;

        while let Some(key) = self.queue.pop_front() {
            expanded += 1;
            let (rooms, squares, circles, fixed) =
                (key.rooms(), key.squares(), key.circles(), key.fixed());

            if squares == all {
                for (i, slot) in found[..n].iter_mut().enumerate() {
                    *slot = room_at(rooms, i);
                }
                sink(&found[..n]);
                continue;
            }
            if circles == 0 {
                return Err(Error::StuckState);
            }

            let mut c = 0;
            let mut m = circles;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                pos[c] = i;
                orig[c] = room_at(rooms, i);
                c += 1;
            }
            // Positions that may gain a circle once more rooms are fixed.
            let unmarked = all & !squares & !circles;

            // Every non-identity permutation of the circled rooms (Heap's
            // algorithm); positions whose room changed become squares.
            shuffled[..c].copy_from_slice(&orig[..c]);
            heap[..c].fill(0);
            let mut k = 1;
            loop {
                while k < c && heap[k] >= k {
                    heap[k] = 0;
                    k += 1;
                }
                if k >= c {
                    break;
                }
                if k % 2 == 0 {
                    shuffled.swap(0, k);
                } else {
                    shuffled.swap(heap[k], k);
                }
                heap[k] += 1;
                k = 1;

                let (mut next, mut moved, mut moved_rooms) = (rooms, 0u16, 0u16);
                for j in 0..c {
                    if shuffled[j] != orig[j] {
                        let shift = 4 * pos[j];
                        next = next & !(0x0f << shift) | (shuffled[j] as u64) << shift;
                        moved |= 1 << pos[j];
                        moved_rooms |= 1 << shuffled[j];
                    }
                }
                let fixed = fixed | moved_rooms;
                let kept = circles & !moved;
                let next_circles = kept | self.circles_in(unmarked, fixed);
                self.push(StateKey::from_parts(
                    next,
                    squares | moved,
                    next_circles,
                    fixed,
                ));
            }

            // Square one circle in place.
            for j in 0..c {
                let bit = 1u16 << pos[j];
                let fixed = fixed | 1 << orig[j];
                let next_circles = (circles & !bit) | self.circles_in(unmarked, fixed);
                self.push(StateKey::from_parts(
                    rooms,
                    squares | bit,
                    next_circles,
                    fixed,
                ));
            }
        }
        debug_assert!(expanded as usize <= self.visited.len());
        Ok(expanded)
    }

    /// Enumerates the preimage of the PO allocation `po` (zero-based rooms),
    /// calling `sink` once per member. Returns the number of states expanded.
    ///
    /// `po` must be a TTC fixed point; this is not re-checked here.
    pub fn preimage_of(&mut self, po: &[RoomId], sink: impl FnMut(&[u8])) -> Result<u64> {
        let n = self.n;
        let mut rooms = [0u8; MAX_INVERSE_N];
        let mut packed = 0u64;
        for (i, &r) in po.iter().enumerate() {
            rooms[i] = r as u8;
            packed |= (r as u64) << (4 * i);
        }
        self.set_start(&rooms[..n]);
        let all: u16 = if n == 16 { u16::MAX } else { (1 << n) - 1 };
        let circles = self.circles_in(all, 0);
        self.search(StateKey::from_parts(packed, 0, circles, 0), sink)
    }
}

/// Refreshes tags: squares stay; any other position is circled iff its room
/// is the holder's top choice once the `fixed` rooms are filtered out.
///
/// `fixed` must be exactly the set of rooms whose tag is [`Tag::Square`].
pub fn dressup(
    alloc: &Allocation,
    tags: &[Tag],
    profile: &PreferenceProfile,
    fixed: &[RoomId],
) -> Result<Vec<Tag>> {
    let n = profile.n();
    if alloc.n() != n || tags.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: if alloc.n() != n {
                alloc.n()
            } else {
                tags.len()
            },
        });
    }
    let mut is_fixed = vec![false; n];
    for &r in fixed {
        if r >= n {
            return Err(Error::OutOfRange { value: r as i64, n });
        }
        is_fixed[r] = true;
    }
    for (i, &t) in tags.iter().enumerate() {
        if (t == Tag::Square) != is_fixed[alloc.room_of(i)] {
            return Err(Error::InconsistentFixedSet { position: i });
        }
    }

    Ok(tags
        .iter()
        .enumerate()
        .map(|(agent, &t)| {
            if t == Tag::Square {
                return Tag::Square;
            }
            let top = profile
                .ranking(agent)
                .iter()
                .copied()
                .find(|&r| !is_fixed[r]);
            if top == Some(alloc.room_of(agent)) {
                Tag::Circle
            } else {
                Tag::Unmarked
            }
        })
        .collect())
}

/// Breadth-first enumeration of every endowment reachable from `start`.
///
/// `start` must satisfy the circle condition (as produced by [`dressup`]).
/// Members are returned in discovery order.
pub fn devour(start: &TaggedState, profile: &PreferenceProfile) -> Result<DevourOutcome> {
    let n = profile.n();
    if start.alloc.n() != n || start.tags.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: start.alloc.n(),
        });
    }
    if !start.satisfies_circle_condition(profile) {
        return Err(Error::InvalidStartState);
    }
    let mut search = InverseSearch::new(profile)?;
    let rooms: Vec<u8> = start.alloc.assign().iter().map(|&r| r as u8).collect();
    search.set_start(&rooms);
    let mut members = Vec::new();
    let states_visited = search.search(StateKey::pack(&rooms, &start.tags), |found| {
        members.push(Allocation::from_vec_unchecked(
            found.iter().map(|&r| r as RoomId).collect(),
        ));
    })?;
    Ok(DevourOutcome {
        members,
        states_visited,
    })
}

/// The preimage of a Pareto-optimal allocation under TTC.
pub fn invttc(profile: &PreferenceProfile, po: &Allocation) -> Result<Preimage> {
    if !is_po_fixedpoint(profile, po)? {
        return Err(Error::NotParetoOptimal);
    }
    let start = initial_state(profile, po)?;
    let DevourOutcome {
        mut members,
        states_visited,
    } = devour(&start, profile)?;
    members.sort_unstable();
    Ok(Preimage {
        source: po.clone(),
        members,
        states_visited,
    })
}

/// All rooms unmarked, then one `dressup` pass with nothing fixed.
pub fn initial_state(profile: &PreferenceProfile, po: &Allocation) -> Result<TaggedState> {
    let unmarked = TaggedState::unmarked(po.clone());
    let tags = dressup(&unmarked.alloc, &unmarked.tags, profile, &[])?;
    TaggedState::new(po.clone(), tags)
}

/// Decodes a key back into a tagged state of size `n`.
pub fn decode_state(key: StateKey, n: usize) -> Result<TaggedState> {
    if n > MAX_INVERSE_N {
        return Err(Error::InstanceTooLarge {
            n,
            max: MAX_INVERSE_N,
        });
    }
    let tags = (0..n)
        .map(|i| {
            if key.squares() & 1 << i != 0 {
                Tag::Square
            } else if key.circles() & 1 << i != 0 {
                Tag::Circle
            } else {
                Tag::Unmarked
            }
        })
        .collect();
    let alloc = Allocation::new((0..n).map(|i| room_at(key.rooms(), i) as RoomId).collect())?;
    TaggedState::new(alloc, tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::next_permutation;
    use crate::testing::{example_profile, one_based};
    use crate::ttc::ttc_outcome;

    /// Forward oracle: every endowment whose TTC outcome is `target`.
    fn brute_preimage(profile: &PreferenceProfile, target: &Allocation) -> Vec<Allocation> {
        let mut perm: Vec<usize> = (0..profile.n()).collect();
        let mut out = Vec::new();
        loop {
            let e = Allocation::new(perm.clone()).unwrap();
            if ttc_outcome(profile, &e).unwrap() == *target {
                out.push(e);
            }
            if !next_permutation(&mut perm) {
                return out;
            }
        }
    }

    #[test]
    fn dressup_circles_r4_r3_r1_on_worked_example() {
        let p = example_profile();
        let sigma = one_based(&[4, 3, 2, 1, 5]);
        let tags = dressup(&sigma, &[Tag::Unmarked; 5], &p, &[]).unwrap();
        use Tag::*;
        assert_eq!(tags, vec![Circle, Circle, Unmarked, Circle, Unmarked]);
    }

    #[test]
    fn dressup_fixing_r1_circles_r2_for_agent_3() {
        let p = example_profile();
        let sigma = one_based(&[4, 3, 2, 1, 5]);
        use Tag::*;
        let tags = [Circle, Circle, Unmarked, Square, Unmarked];
        let out = dressup(&sigma, &tags, &p, &[0]).unwrap();
        assert_eq!(out[2], Circle);
        assert_eq!(out[3], Square);
        assert_eq!(out[4], Unmarked);
    }

    #[test]
    fn dressup_all_square_unchanged_and_inconsistent_fixed_set() {
        let p = example_profile();
        let sigma = one_based(&[4, 3, 2, 1, 5]);
        let all = [Tag::Square; 5];
        assert_eq!(
            dressup(&sigma, &all, &p, &[0, 1, 2, 3, 4]).unwrap(),
            all.to_vec()
        );
        assert!(matches!(
            dressup(&sigma, &all, &p, &[0, 1]),
            Err(Error::InconsistentFixedSet { .. })
        ));
        assert!(matches!(
            dressup(&sigma, &[Tag::Unmarked; 5], &p, &[3]),
            Err(Error::InconsistentFixedSet { position: 0 })
        ));
    }

    #[test]
    fn devour_terminal_start_yields_itself() {
        let p = example_profile();
        let a = one_based(&[2, 1, 3, 5, 4]);
        let start = TaggedState::new(a.clone(), vec![Tag::Square; 5]).unwrap();
        let out = devour(&start, &p).unwrap();
        assert_eq!(out.members, vec![a]);
        assert_eq!(out.states_visited, 1);
    }

    #[test]
    fn example_preimage_has_twelve_members_matching_brute_force() {
        let p = example_profile();
        let sigma = one_based(&[4, 3, 2, 1, 5]);
        let pre = invttc(&p, &sigma).unwrap();
        assert_eq!(pre.members.len(), 12);
        assert_eq!(pre.members, brute_preimage(&p, &sigma));
        assert!(pre.members.contains(&sigma));
        assert!(pre.members.contains(&one_based(&[3, 4, 2, 1, 5])));
    }

    #[test]
    fn opposed_two_agents() {
        let p = PreferenceProfile::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let pre = invttc(&p, &Allocation::identity(2)).unwrap();
        assert_eq!(
            pre.members,
            vec![
                Allocation::identity(2),
                Allocation::new(vec![1, 0]).unwrap()
            ]
        );
    }

    #[test]
    fn identical_preferences_give_singletons() {
        let p = PreferenceProfile::identical(4).unwrap();
        let a = Allocation::new(vec![2, 0, 3, 1]).unwrap();
        assert_eq!(invttc(&p, &a).unwrap().members, vec![a]);
        let single = PreferenceProfile::new(vec![vec![0]]).unwrap();
        assert_eq!(
            invttc(&single, &Allocation::identity(1)).unwrap().members,
            vec![Allocation::identity(1)]
        );
    }

    #[test]
    fn invttc_rejects_non_po() {
        let p = PreferenceProfile::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(matches!(
            invttc(&p, &Allocation::new(vec![1, 0]).unwrap()),
            Err(Error::NotParetoOptimal)
        ));
    }

    #[test]
    fn mask_circle_rule_matches_dressup() {
        use crate::instances::{random_profile, SplitMix64};
        let mut rng = SplitMix64::new(5);
        for seed in 0..200 {
            let n = 2 + (seed as usize % 6);
            let p = random_profile(n, seed).unwrap();
            let mut e: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut e);
            let po = ttc_outcome(&p, &Allocation::new(e).unwrap()).unwrap();
            let start: Vec<u8> = po.assign().iter().map(|&r| r as u8).collect();
            let mut search = InverseSearch::new(&p).unwrap();
            search.set_start(&start);

            // square a random subset and shuffle rooms within it
            let squares = rng.below(1 << n) as u16;
            let sq: Vec<usize> = (0..n).filter(|&i| squares & 1 << i != 0).collect();
            let mut held: Vec<usize> = sq.iter().map(|&i| po.room_of(i)).collect();
            rng.shuffle(&mut held);
            let mut assign = po.assign().to_vec();
            for (&i, &r) in sq.iter().zip(&held) {
                assign[i] = r;
            }
            let alloc = Allocation::new(assign).unwrap();
            let tags: Vec<Tag> = (0..n)
                .map(|i| {
                    if squares & 1 << i != 0 {
                        Tag::Square
                    } else {
                        Tag::Unmarked
                    }
                })
                .collect();
            let fixed_mask = held.iter().fold(0u16, |m, &r| m | 1 << r);
            let all = ((1u32 << n) - 1) as u16;
            let circles = search.circles_in(all & !squares, fixed_mask);

            let expect = dressup(&alloc, &tags, &p, &held).unwrap();
            for (i, &t) in expect.iter().enumerate() {
                assert_eq!(t == Tag::Circle, circles & 1 << i != 0, "seed {seed}");
            }
        }
    }

    #[test]
    fn state_key_round_trips() {
        let s = TaggedState::new(
            one_based(&[4, 3, 2, 1, 5]),
            vec![
                Tag::Circle,
                Tag::Square,
                Tag::Unmarked,
                Tag::Circle,
                Tag::Square,
            ],
        )
        .unwrap();
        let key = StateKey::of(&s).unwrap();
        assert_eq!(decode_state(key, 5).unwrap(), s);
        assert_ne!(
            key,
            StateKey::of(&TaggedState::unmarked(s.alloc.clone())).unwrap()
        );
    }
}
