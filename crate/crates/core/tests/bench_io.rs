use std::collections::BTreeMap;

use ttc_frontier::bench::{
    emit_csv, read_csv, run_benchmark, summarize, BenchConfig, Method, CSV_HEADER,
};

fn small_config() -> BenchConfig {
    BenchConfig {
        n_min: 3,
        n_max: 5,
        instances_per_n: 6,
        base_seed: 11,
        workers: 2,
        ..BenchConfig::default()
    }
}

#[test]
fn csv_round_trip_and_summary_means() {
    let records = run_benchmark(&small_config()).unwrap();
    assert_eq!(records.len(), 3 * 6 * 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    emit_csv(&records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let back = read_csv(&path).unwrap();
    assert_eq!(back, records);

    // recompute the per-(n, method) means straight from the CSV rows
    let mut sums: BTreeMap<(usize, String), (u64, u64, u64)> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = sums
            .entry((f[0].parse().unwrap(), f[3].to_string()))
            .or_default();
        e.0 += 1;
        e.1 += f[7].parse::<u64>().unwrap();
        e.2 += f[4].parse::<u64>().unwrap();
    }
    let summary = summarize(&back).unwrap();
    assert_eq!(summary.rows.len(), sums.len());
    for ((n, method), (count, time, size)) in sums {
        let row = summary.row(n, method.parse::<Method>().unwrap()).unwrap();
        assert_eq!(row.count as u64, count);
        assert_eq!(row.mean_us, time as f64 / count as f64);
        assert_eq!(row.mean_frontier, size as f64 / count as f64);
    }
}

#[test]
fn records_are_deterministic_apart_from_time() {
    let strip = |mut rs: Vec<ttc_frontier::bench::BenchRecord>| {
        rs.iter_mut().for_each(|r| r.wall_time_us = 0);
        rs
    };
    let a = strip(run_benchmark(&small_config()).unwrap());
    let b = strip(
        run_benchmark(&BenchConfig {
            workers: 1,
            ..small_config()
        })
        .unwrap(),
    );
    assert_eq!(a, b);
    for r in &a {
        match r.method {
            Method::Itea => assert_eq!(r.ttc_calls, r.frontier_size),
            Method::Brute => assert_eq!(r.ttc_calls, (1..=r.n as u64).product::<u64>()),
        }
    }
}

#[test]
fn empty_run_still_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_csv(&[], &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap().trim_end(),
        CSV_HEADER.join(",")
    );
    assert!(read_csv(&path).unwrap().is_empty());
    assert!(summarize(&[]).is_err());
}
