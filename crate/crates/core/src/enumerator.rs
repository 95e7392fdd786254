//! Pareto frontier enumeration: the inverse-TTC driver (ITEA), the
//! exhaustive forward baseline, and the partition check over their classes.

use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::inverse::{InverseSearch, Preimage};
use crate::model::{
    factorial, next_permutation, rank_slice, unrank_into, Allocation, PreferenceProfile, RoomId,
    MAX_SCAN_N,
};
use crate::ttc::TtcEngine;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub ttc_calls: u64,
    pub states_visited: u64,
    pub allocations_scanned: u64,
    pub wall_time: Duration,
}

/// The distinct Pareto-optimal allocations of a profile.
#[derive(Clone, Debug)]
pub struct Frontier {
    pub n: usize,
    /// Sorted lexicographically, pairwise distinct.
    pub members: Vec<Allocation>,
    /// When present, `classes[k].source == members[k]`.
    pub classes: Option<Vec<Preimage>>,
    pub stats: EnumStats,
}

impl Frontier {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn class_sizes(&self) -> Option<Vec<usize>> {
        self.classes
            .as_ref()
            .map(|cs| cs.iter().map(|c| c.members.len()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    /// Materialize every equivalence class alongside the frontier.
    pub keep_classes: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self { keep_classes: true }
    }
}

/// Bit table over allocation ranks `0..n!`.
#[derive(Debug)]
struct ScanSet {
    words: Vec<u64>,
    first_word: usize,
}

impl ScanSet {
    fn full(len: u64) -> Self {
        let full_words = (len / 64) as usize;
        let tail = len % 64;
        let mut words = vec![u64::MAX; full_words];
        if tail > 0 {
            words.push((1u64 << tail) - 1);
        }
        Self {
            words,
            first_word: 0,
        }
    }

    /// Smallest remaining rank.
    fn lowest(&mut self) -> Option<u64> {
        while self.first_word < self.words.len() {
            let w = self.words[self.first_word];
            if w != 0 {
                return Some(self.first_word as u64 * 64 + w.trailing_zeros() as u64);
            }
            self.first_word += 1;
        }
        None
    }

    /// Clears `rank`; returns whether it was present.
    #[inline]
    fn remove(&mut self, rank: u64) -> bool {
        let word = &mut self.words[(rank / 64) as usize];
        let bit = 1u64 << (rank % 64);
        let present = *word & bit != 0;
        *word &= !bit;
        present
    }

    #[inline]
    fn contains(&self, rank: u64) -> bool {
        self.words[(rank / 64) as usize] & (1u64 << (rank % 64)) != 0
    }
}

fn scan_size(n: usize) -> Result<u64> {
    if n > MAX_SCAN_N {
        return Err(Error::InstanceTooLarge { n, max: MAX_SCAN_N });
    }
    Ok(factorial(n).expect("n <= MAX_SCAN_N"))
}

#[inline]
fn rank_bytes(perm: &[u8], scratch: &mut [RoomId]) -> u64 {
    for (s, &r) in scratch.iter_mut().zip(perm) {
        *s = r as RoomId;
    }
    rank_slice(scratch)
}

fn sorted_frontier(
    n: usize,
    mut found: Vec<(Allocation, Option<Preimage>)>,
    stats: EnumStats,
    keep_classes: bool,
) -> Frontier {
    found.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (members, classes): (Vec<_>, Vec<_>) = found.into_iter().unzip();
    Frontier {
        n,
        members,
        classes: keep_classes.then(|| classes.into_iter().flatten().collect()),
        stats,
    }
}

/// Inverse-TTC enumeration with classes kept.
pub fn itea(profile: &PreferenceProfile) -> Result<Frontier> {
    itea_with(profile, EnumOptions::default())
}

/// Inverse-TTC enumeration.
///
/// Repeatedly takes the smallest rank still in the scan set, runs TTC from
/// that endowment, inverts the outcome, and clears the whole preimage from
/// the scan set. Each pick therefore yields a new PO allocation, and TTC runs
/// exactly once per frontier member.
pub fn itea_with(profile: &PreferenceProfile, opts: EnumOptions) -> Result<Frontier> {
    let start = Instant::now();
    let n = profile.n();
    let total = scan_size(n)?;
    let mut scan = ScanSet::full(total);
    let mut engine = TtcEngine::new();
    let mut search = InverseSearch::new(profile)?;
    let mut stats = EnumStats::default();

    let mut endowment = vec![0; n];
    let mut outcome = vec![0; n];
    let mut scratch = vec![0; n];
    let mut seen: FxHashSet<Vec<RoomId>> = FxHashSet::default();
    let mut found = Vec::new();

    while let Some(pick) = scan.lowest() {
        unrank_into(pick, &mut endowment);
        engine.run(profile, &endowment, &mut outcome, None);
        stats.ttc_calls += 1;
        if !seen.insert(outcome.clone()) {
            return Err(Error::ClassOverlap);
        }

        let mut overlap = false;
        let mut removed = 0u64;
        let mut members = Vec::new();
        let visited = search.preimage_of(&outcome, |rooms| {
            let rank = rank_bytes(rooms, &mut scratch);
            overlap |= !scan.remove(rank);
            removed += 1;
            if opts.keep_classes {
                members.push(Allocation::from_vec_unchecked(
                    rooms.iter().map(|&r| r as RoomId).collect(),
                ));
            }
        })?;
        if overlap {
            return Err(Error::ClassOverlap);
        }
        if scan.contains(pick) {
            return Err(Error::IncompletePreimage);
        }
        stats.states_visited += visited;
        stats.allocations_scanned += removed;

        let source = Allocation::from_vec_unchecked(outcome.clone());
        let class = opts.keep_classes.then(|| {
            members.sort_unstable();
            Preimage {
                source: source.clone(),
                members,
                states_visited: visited,
            }
        });
        found.push((source, class));
    }

    stats.wall_time = start.elapsed();
    Ok(sorted_frontier(n, found, stats, opts.keep_classes))
}

/// Exhaustive enumeration with classes kept.
pub fn brute_force_frontier(profile: &PreferenceProfile) -> Result<Frontier> {
    brute_force_frontier_with(profile, EnumOptions::default())
}

/// Runs TTC from every one of the `n!` endowments and groups them by outcome.
pub fn brute_force_frontier_with(
    profile: &PreferenceProfile,
    opts: EnumOptions,
) -> Result<Frontier> {
    let start = Instant::now();
    let n = profile.n();
    scan_size(n)?;
    let mut engine = TtcEngine::new();
    let mut stats = EnumStats::default();

    let mut endowment: Vec<RoomId> = (0..n).collect();
    let mut outcome = vec![0; n];
    let mut classes: FxHashMap<Vec<RoomId>, Vec<Allocation>> = FxHashMap::default();
    let mut distinct: FxHashSet<Vec<RoomId>> = FxHashSet::default();
    loop {
        engine.run(profile, &endowment, &mut outcome, None);
        stats.ttc_calls += 1;
        if opts.keep_classes {
            // endowments arrive in lexicographic order, so classes stay sorted
            let e = Allocation::from_vec_unchecked(endowment.clone());
            match classes.get_mut(outcome.as_slice()) {
                Some(class) => class.push(e),
                None => {
                    classes.insert(outcome.clone(), vec![e]);
                }
            }
        } else if !distinct.contains(outcome.as_slice()) {
            distinct.insert(outcome.clone());
        }
        if !next_permutation(&mut endowment) {
            break;
        }
    }
    stats.allocations_scanned = stats.ttc_calls;

    let found: Vec<(Allocation, Option<Preimage>)> = if opts.keep_classes {
        classes
            .into_iter()
            .map(|(po, members)| {
                let source = Allocation::from_vec_unchecked(po);
                let class = Preimage {
                    source: source.clone(),
                    members,
                    states_visited: 0,
                };
                (source, Some(class))
            })
            .collect()
    } else {
        distinct
            .into_iter()
            .map(|po| (Allocation::from_vec_unchecked(po), None))
            .collect()
    };
    stats.wall_time = start.elapsed();
    Ok(sorted_frontier(n, found, stats, opts.keep_classes))
}

/// Whether the frontier's classes are pairwise disjoint, line up with its
/// members, and together cover all `n!` allocations.
pub fn verify_partition(frontier: &Frontier, n: usize) -> Result<bool> {
    let classes = frontier.classes.as_ref().ok_or(Error::MissingClasses)?;
    let total = scan_size(n)?;
    if classes.len() != frontier.members.len()
        || classes
            .iter()
            .zip(&frontier.members)
            .any(|(c, m)| c.source != *m)
    {
        return Ok(false);
    }
    let mut unseen = ScanSet::full(total);
    let mut covered = 0u64;
    for member in classes.iter().flat_map(|c| &c.members) {
        if member.n() != n || !unseen.remove(rank_slice(member.assign())) {
            return Ok(false);
        }
        covered += 1;
    }
    Ok(covered == total)
}
