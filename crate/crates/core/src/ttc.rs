//! Forward Top Trading Cycles and two Pareto-optimality checks.
//!
//! Each agent keeps a cursor into her ranking that only moves forward past
//! removed rooms, so a whole run costs O(n²) pointer advances.

use crate::error::{Error, Result};
use crate::model::{next_permutation, AgentId, Allocation, PreferenceProfile, RoomId};

/// Largest `n` accepted by [`is_po_bruteforce`].
pub const MAX_BRUTE_PO_N: usize = 8;

/// One executed trading cycle: `(agent, room received)` pairs in pointer order.
pub type Cycle = Vec<(AgentId, RoomId)>;

/// Cycle structure of a TTC run, round by round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TtcTrace {
    pub rounds: Vec<Vec<Cycle>>,
}

impl TtcTrace {
    /// True when every executed cycle is an agent keeping her own room.
    pub fn only_self_cycles(&self, endowment: &Allocation) -> bool {
        self.rounds
            .iter()
            .flatten()
            .all(|c| c.len() == 1 && endowment.room_of(c[0].0) == c[0].1)
    }

    pub fn cycles(&self) -> impl Iterator<Item = &Cycle> {
        self.rounds.iter().flatten()
    }
}

/// Reusable scratch buffers for repeated TTC runs on one profile size.
#[derive(Debug, Default)]
pub struct TtcEngine {
    cursor: Vec<usize>,
    owner: Vec<AgentId>,
    room_gone: Vec<bool>,
    agent_gone: Vec<bool>,
    active: Vec<AgentId>,
    top: Vec<RoomId>,
    next: Vec<AgentId>,
    stamp: Vec<u32>,
    cycle_agents: Vec<AgentId>,
}

impl TtcEngine {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        self.cursor.clear();
        self.cursor.resize(n, 0);
        self.owner.resize(n, 0);
        self.room_gone.clear();
        self.room_gone.resize(n, false);
        self.agent_gone.clear();
        self.agent_gone.resize(n, false);
        self.active.clear();
        self.active.extend(0..n);
        self.top.resize(n, 0);
        self.next.resize(n, 0);
        self.stamp.clear();
        self.stamp.resize(n, 0);
    }

    /// Runs TTC from `endowment`, writing each agent's final room into `out`.
    ///
    /// Inputs are assumed valid: `endowment` is a permutation of `0..n` and
    /// `out.len() == n`.
    pub fn run(
        &mut self,
        profile: &PreferenceProfile,
        endowment: &[RoomId],
        out: &mut [RoomId],
        mut trace: Option<&mut TtcTrace>,
    ) {
        let n = profile.n();
        debug_assert_eq!(endowment.len(), n);
        debug_assert_eq!(out.len(), n);
        self.reset(n);
        for (agent, &room) in endowment.iter().enumerate() {
            self.owner[room] = agent;
        }

        let mut walk_id = 0u32;
        while !self.active.is_empty() {
            for &a in &self.active {
                let ranking = profile.ranking(a);
                let mut c = self.cursor[a];
                while self.room_gone[ranking[c]] {
                    c += 1;
                }
                self.cursor[a] = c;
                self.top[a] = ranking[c];
                self.next[a] = self.owner[ranking[c]];
            }

            // Every remaining agent has out-degree one, so each walk ends in a
            // cycle; a cycle is new iff the walk closes on its own stamp.
            self.cycle_agents.clear();
            let mut round: Vec<Cycle> = Vec::new();
            for &start in &self.active {
                if self.stamp[start] != 0 {
                    continue;
                }
                walk_id += 1;
                let mut x = start;
                while self.stamp[x] == 0 {
                    self.stamp[x] = walk_id;
                    x = self.next[x];
                }
                if self.stamp[x] == walk_id {
                    let first = self.cycle_agents.len();
                    let mut y = x;
                    loop {
                        self.cycle_agents.push(y);
                        y = self.next[y];
                        if y == x {
                            break;
                        }
                    }
                    if trace.is_some() {
                        round.push(
                            self.cycle_agents[first..]
                                .iter()
                                .map(|&a| (a, self.top[a]))
                                .collect(),
                        );
                    }
                }
            }

            for &a in &self.cycle_agents {
                out[a] = self.top[a];
                self.room_gone[self.top[a]] = true;
                self.agent_gone[a] = true;
            }
            let (gone, stamp) = (&self.agent_gone, &mut self.stamp);
            self.active.retain(|&a| {
                stamp[a] = 0;
                !gone[a]
            });
            if let Some(t) = trace.as_deref_mut() {
                t.rounds.push(round);
            }
        }
    }
}

fn check_sizes(profile: &PreferenceProfile, alloc: &Allocation) -> Result<()> {
    if profile.n() != alloc.n() {
        return Err(Error::SizeMismatch {
            expected: profile.n(),
            found: alloc.n(),
        });
    }
    Ok(())
}

/// TTC outcome from `endowment`, with the per-round cycle trace.
pub fn forward_ttc(
    profile: &PreferenceProfile,
    endowment: &Allocation,
) -> Result<(Allocation, TtcTrace)> {
    check_sizes(profile, endowment)?;
    let mut out = vec![0; profile.n()];
    let mut trace = TtcTrace::default();
    TtcEngine::new().run(profile, endowment.assign(), &mut out, Some(&mut trace));
    Ok((Allocation::from_vec_unchecked(out), trace))
}

/// TTC outcome without a trace.
pub fn ttc_outcome(profile: &PreferenceProfile, endowment: &Allocation) -> Result<Allocation> {
    check_sizes(profile, endowment)?;
    let mut out = vec![0; profile.n()];
    TtcEngine::new().run(profile, endowment.assign(), &mut out, None);
    Ok(Allocation::from_vec_unchecked(out))
}

/// Pareto optimality as a TTC fixed point: running TTC from `alloc` trades
/// nothing.
pub fn is_po_fixedpoint(profile: &PreferenceProfile, alloc: &Allocation) -> Result<bool> {
    let (outcome, trace) = forward_ttc(profile, alloc)?;
    debug_assert_eq!(outcome == *alloc, trace.only_self_cycles(alloc));
    Ok(trace.only_self_cycles(alloc))
}

/// Pareto optimality by scanning all `n!` allocations for a dominating one.
pub fn is_po_bruteforce(profile: &PreferenceProfile, alloc: &Allocation) -> Result<bool> {
    check_sizes(profile, alloc)?;
    let n = profile.n();
    if n > MAX_BRUTE_PO_N {
        return Err(Error::InstanceTooLarge {
            n,
            max: MAX_BRUTE_PO_N,
        });
    }
    let current: Vec<usize> = (0..n)
        .map(|a| profile.rank_of(a, alloc.room_of(a)))
        .collect();
    let mut other: Vec<RoomId> = (0..n).collect();
    loop {
        let mut weakly_better = true;
        let mut strictly = false;
        for a in 0..n {
            let r = profile.rank_of(a, other[a]);
            if r > current[a] {
                weakly_better = false;
                break;
            }
            strictly |= r < current[a];
        }
        if weakly_better && strictly {
            return Ok(false);
        }
        if !next_permutation(&mut other) {
            return Ok(true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::example_profile;

    fn alloc(one_based: &[usize]) -> Allocation {
        Allocation::new(one_based.iter().map(|r| r - 1).collect()).unwrap()
    }

    #[test]
    fn example_endowment_trace() {
        let p = example_profile();
        let (out, trace) = forward_ttc(&p, &alloc(&[3, 4, 2, 1, 5])).unwrap();
        assert_eq!(out, alloc(&[4, 3, 2, 1, 5]));
        // round 1: 1 -> r4 -> 2 -> r3 -> 1, and 4 keeps r1
        assert_eq!(trace.rounds.len(), 3);
        assert_eq!(trace.rounds[0], vec![vec![(0, 3), (1, 2)], vec![(3, 0)]]);
        assert_eq!(trace.rounds[1], vec![vec![(2, 1)]]);
        assert_eq!(trace.rounds[2], vec![vec![(4, 4)]]);
    }

    #[test]
    fn everyone_holding_top_is_fixed_point() {
        let q = PreferenceProfile::new(vec![vec![1, 0, 2], vec![2, 1, 0], vec![0, 2, 1]]).unwrap();
        let tops = Allocation::new(vec![1, 2, 0]).unwrap();
        let (out, trace) = forward_ttc(&q, &tops).unwrap();
        assert_eq!(out, tops);
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.rounds[0].len(), 3);
        assert!(trace.only_self_cycles(&tops));
    }

    #[test]
    fn two_agent_swap() {
        let p = PreferenceProfile::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let (out, trace) = forward_ttc(&p, &Allocation::identity(2)).unwrap();
        assert_eq!(out.assign(), &[1, 0]);
        assert_eq!(trace.rounds, vec![vec![vec![(0, 1), (1, 0)]]]);
    }

    #[test]
    fn po_checks_on_small_cases() {
        let p = example_profile();
        let sigma = alloc(&[4, 3, 2, 1, 5]);
        assert!(is_po_fixedpoint(&p, &sigma).unwrap());
        assert!(is_po_bruteforce(&p, &sigma).unwrap());

        let opposed = PreferenceProfile::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let tops = Allocation::identity(2);
        let bottoms = Allocation::new(vec![1, 0]).unwrap();
        assert!(is_po_fixedpoint(&opposed, &tops).unwrap());
        assert!(is_po_bruteforce(&opposed, &tops).unwrap());
        assert!(!is_po_fixedpoint(&opposed, &bottoms).unwrap());
        assert!(!is_po_bruteforce(&opposed, &bottoms).unwrap());

        let single = PreferenceProfile::new(vec![vec![0]]).unwrap();
        assert!(is_po_bruteforce(&single, &Allocation::identity(1)).unwrap());
    }

    #[test]
    fn identical_preferences_every_allocation_is_po() {
        let p = PreferenceProfile::identical(4).unwrap();
        let mut perm: Vec<usize> = (0..4).collect();
        loop {
            let a = Allocation::new(perm.clone()).unwrap();
            assert!(is_po_bruteforce(&p, &a).unwrap());
            assert!(is_po_fixedpoint(&p, &a).unwrap());
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }

    #[test]
    fn guards() {
        let p = PreferenceProfile::identical(9).unwrap();
        assert!(matches!(
            is_po_bruteforce(&p, &Allocation::identity(9)),
            Err(Error::InstanceTooLarge { n: 9, max: 8 })
        ));
        assert!(matches!(
            forward_ttc(&p, &Allocation::identity(3)),
            Err(Error::SizeMismatch {
                expected: 9,
                found: 3
            })
        ));
    }
}
