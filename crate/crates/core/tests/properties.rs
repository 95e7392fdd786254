use proptest::prelude::*;

use ttc_frontier::model::MAX_SCAN_N;
use ttc_frontier::{
    brute_force_frontier, forward_ttc, is_po_fixedpoint, itea, random_profile, rank_allocation,
    select_best, ttc_outcome, unrank_allocation, verify_partition, Allocation, AllocationRank,
    Criterion, Frontier,
};

fn permutation(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_n).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

proptest! {
    #[test]
    fn rank_round_trips(perm in permutation(MAX_SCAN_N)) {
        let n = perm.len();
        let a = Allocation::new(perm).unwrap();
        let rank = rank_allocation(&a);
        prop_assert!(rank.0 < factorial(n));
        prop_assert_eq!(unrank_allocation(rank, n).unwrap(), a);
    }

    #[test]
    fn unrank_round_trips(n in 1usize..=MAX_SCAN_N, x in any::<u64>()) {
        let rank = AllocationRank(x % factorial(n));
        prop_assert_eq!(rank_allocation(&unrank_allocation(rank, n).unwrap()), rank);
    }

    #[test]
    fn ttc_is_idempotent_and_individually_rational(
        seed in any::<u64>(),
        perm in permutation(8),
    ) {
        let n = perm.len();
        let p = random_profile(n, seed).unwrap();
        let e = Allocation::new(perm).unwrap();
        let (out, _) = forward_ttc(&p, &e).unwrap();
        for i in 0..n {
            prop_assert!(p.rank_of(i, out.room_of(i)) <= p.rank_of(i, e.room_of(i)));
        }
        prop_assert!(is_po_fixedpoint(&p, &out).unwrap());
        let (again, trace) = forward_ttc(&p, &out).unwrap();
        prop_assert_eq!(&again, &out);
        prop_assert!(trace.only_self_cycles(&out));
    }

    #[test]
    fn itea_is_complete_and_sound(n in 1usize..=6, seed in any::<u64>()) {
        let p = random_profile(n, seed).unwrap();
        let f = itea(&p).unwrap();
        prop_assert_eq!(&f.members, &brute_force_frontier(&p).unwrap().members);
        prop_assert!(verify_partition(&f, n).unwrap());
        for class in f.classes.as_ref().unwrap() {
            for e in &class.members {
                prop_assert_eq!(&ttc_outcome(&p, e).unwrap(), &class.source);
            }
        }
    }

    #[test]
    fn selection_ignores_member_order(n in 2usize..=6, seed in any::<u64>(), shuffle in any::<u64>()) {
        let p = random_profile(n, seed).unwrap();
        let f = itea(&p).unwrap();
        let mut members = f.members.clone();
        let k = members.len();
        members.rotate_left((shuffle % k as u64) as usize);
        members.reverse();
        let reordered = Frontier { members, classes: None, ..f.clone() };
        for c in Criterion::ALL {
            prop_assert_eq!(select_best(&p, &f, c).unwrap(), select_best(&p, &reordered, c).unwrap());
        }
    }
}
