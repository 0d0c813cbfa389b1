//! The shipped acceptance suite, re-checked criterion by criterion.
//!
//! The suite configs carry their own tolerances; the checks here recompute
//! every criterion from the emitted metrics and tables against tolerances
//! pinned in this file, so loosening a config cannot turn a criterion green.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ctgauss::batch::{run_suite, SuiteReport};
use ctgauss::exit;
use ctgauss::ResultRecord;
use ctgauss_core::mi::duncan_mi;
use ctgauss_core::OuParams;

/// Criteria that fail at desk scale; see the decisions ledger.
const KNOWN_RED: &[u32] = &[10, 11];

const BANDWIDTHS: [f64; 5] = [1.0, 10.0, 100.0, 1e3, 1e4];
const DUNCAN_A10_TOL: f64 = 1e-6;
const DUNCAN_A1E4_TOL: f64 = 5e-5;
const MONOTONE_SLACK: f64 = 1e-9;
const SAMPLING_REL_TOL: f64 = 0.01;
const FEEDBACK_REL_TOL: f64 = 0.005;
const DERIVATIVE_REL_TOL: f64 = 1e-3;
const DERIVATIVE_STEP: f64 = 1e-3;
const JOINT_TOL: f64 = 2e-3;
const PER_USER_TOL: f64 = 1e-3;
const CHAIN_TOL: f64 = 1e-9;
const SAME_REGION: f64 = 1e-12;
const LIMIT_FRACTION: f64 = 1e-3;
const AXIS_GAP_TOL: f64 = 1e-9;
const OVER_CAPACITY_MIN: f64 = 0.5;
const TYPICAL_MIN: f64 = 0.8;
const IC_REL_TOL: f64 = 0.1;
const COMPOSITE_Z: f64 = 3.0;
const HALVING_TOL: f64 = 1e-9;

fn suite_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../acceptance/acceptance.json")
}

struct Outcome {
    passed: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { passed: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(note.into());
        }
    }

    fn at_most(&mut self, what: &str, value: f64, tol: f64) {
        self.check(value <= tol, format!("{what} = {value:.3e} > {tol:.1e}"));
    }
}

type Check = fn(&Records) -> Outcome;

struct Records<'a>(BTreeMap<&'a str, &'a ResultRecord>);

impl<'a> Records<'a> {
    fn get(&self, id: &str) -> &'a ResultRecord {
        self.0.get(id).unwrap_or_else(|| panic!("suite produced no record `{id}`"))
    }
}

fn metric(r: &ResultRecord, name: &str) -> f64 {
    r.metric(name).unwrap_or_else(|| panic!("{}: no metric `{name}`", r.id))
}

fn column(r: &ResultRecord, name: &str) -> Vec<f64> {
    r.table.as_ref().and_then(|t| t.column(name)).unwrap_or_else(|| panic!("{}: no column `{name}`", r.id))
}

fn verdict_passed(r: &ResultRecord, name: &str) -> bool {
    r.verdict(name).map(|v| v.passed).unwrap_or(false)
}

fn max_rise(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn bandwidth_limit(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c01-bandwidth-limit");
    let (ps, ws, cs) = (column(r, "P"), column(r, "W"), column(r, "capacity"));
    for p in [1.0, 2.0] {
        let rows: Vec<(f64, f64)> =
            ps.iter().zip(ws.iter().zip(&cs)).filter(|(q, _)| **q == p).map(|(_, (w, c))| (*w, *c)).collect();
        o.check(rows.iter().map(|x| x.0).eq(BANDWIDTHS), format!("P={p}: bandwidth grid"));
        o.check(rows.windows(2).all(|w| w[1].1 > w[0].1), format!("P={p}: not strictly increasing"));
        for &(w, c) in &rows {
            o.check(p / 2.0 - p * p / (8.0 * w) <= c && c <= p / 2.0, format!("P={p}, W={w}: sandwich"));
        }
        let (w, c) = *rows.last().unwrap();
        o.at_most(&format!("P={p} gap at W={w}"), p / 2.0 - c, p * p / (8.0 * 1e4));
    }
    o
}

fn duncan_rate(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c02-duncan-rate");
    let closed = (120f64.sqrt() - 10.0) / 2.0;
    o.at_most("|rate(a=10) - closed form|", (metric(r, "rate[0]") - closed).abs(), DUNCAN_A10_TOL);
    o.check(column(r, "a") == [10.0, 1e4], "rates are not (10, 1e4)");
    o.at_most("|rate(a=1e4) - 1/2|", (metric(r, "rate[1]") - 0.5).abs(), DUNCAN_A1E4_TOL);
    o
}

fn sampling_convergence(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c03-sampling-convergence");
    let k = column(r, "k");
    o.check(k == (1..=10).map(f64::from).collect::<Vec<_>>(), "levels are not 1..=10");
    let mi = column(r, "sampled_mi");
    o.at_most("largest drop", mi.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max), MONOTONE_SLACK);
    let d = metric(r, "duncan_mi");
    o.at_most("relative gap at k=10", (d - mi.last().unwrap()).abs() / d, SAMPLING_REL_TOL);
    o
}

fn feedback(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c04-feedback-mi");
    let (k, mi) = (column(r, "k"), column(r, "mi"));
    o.check(k.last() == Some(&12.0), "last level is not 12");
    o.at_most("largest drop", mi.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max), MONOTONE_SLACK);
    o.at_most("relative gap to 1/2", (mi.last().unwrap() - 0.5).abs() / 0.5, FEEDBACK_REL_TOL);
    o
}

fn snr_monotonicity(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c05-snr-monotonicity");
    o.check(column(r, "snr") == [0.25, 0.5, 1.0, 2.0, 4.0, 8.0], "snr grid");
    o.at_most("largest rise of I/snr", max_rise(&column(r, "mi_over_snr")).max(0.0), MONOTONE_SLACK);
    let p = OuParams::new(1.0, 1.0).unwrap();
    let mi = |s: f64| duncan_mi(&p, s, 4.0).unwrap().value;
    let central = (mi(1.0 + DERIVATIVE_STEP) - mi(1.0 - DERIVATIVE_STEP)) / (2.0 * DERIVATIVE_STEP);
    let d = metric(r, "derivative[1]");
    o.at_most("relative derivative gap at snr=1", (d - central).abs() / central.abs(), DERIVATIVE_REL_TOL);
    o.check(verdict_passed(r, "derivative"), "derivative verdict");
    o
}

fn quartet(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c06-mac-exact-mi");
    o.at_most("|joint - 1|", (metric(r, "joint_rate") - 1.0).abs(), JOINT_TOL);
    for name in ["first_given_second_rate", "second_given_first_rate", "first_rate", "second_rate"] {
        o.at_most(&format!("|{name} - 1/2|"), (metric(r, name) - 0.5).abs(), PER_USER_TOL);
    }
    o.at_most("chain-rule gap", metric(r, "chain_rule_gap").abs(), CHAIN_TOL);
    o
}

fn regions(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    for id in ["c07-region-mac", "c07-region-mac-block", "c07-region-ic", "c07-region-bc"] {
        let r = rs.get(id);
        o.at_most(&format!("{id} golden distance"), metric(r, "golden_distance"), SAME_REGION);
        o.check(verdict_passed(r, "golden"), format!("{id}: golden"));
        let members: Vec<_> = r.verdicts.iter().filter(|v| v.name.starts_with("membership")).collect();
        o.check(!members.is_empty() && members.iter().all(|v| v.passed), format!("{id}: membership"));
    }
    o.check(verdict_passed(rs.get("c07-region-ic"), "cross_gain_invariance"), "cross-gain invariance");
    let ratio = metric(rs.get("c07-region-mac-block"), "scale") / metric(rs.get("c07-region-mac"), "scale");
    o.at_most("|block scale ratio - 3|", (ratio - 3.0).abs(), SAME_REGION);
    o
}

fn region_limits(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    for id in ["c08-limit-mac", "c08-limit-ic", "c08-limit-bc"] {
        let r = rs.get(id);
        o.check(column(r, "W") == BANDWIDTHS, format!("{id}: bandwidth grid"));
        o.check(column(r, "inner_in_outer").iter().all(|v| *v == 1.0), format!("{id}: inner not within outer"));
        for c in ["hausdorff_inner", "hausdorff_outer"] {
            let d = column(r, c);
            o.at_most(&format!("{id} {c} rise"), max_rise(&d).max(0.0), SAME_REGION);
            o.at_most(&format!("{id} {c} at W=1e4"), *d.last().unwrap(), LIMIT_FRACTION * metric(r, "scale"));
        }
    }
    let gap = metric(rs.get("c08-limit-mac"), "axis_gap");
    o.at_most("|axis gap - (1 - ln 2)|", (gap - (1.0 - 2f64.ln())).abs(), AXIS_GAP_TOL);
    o
}

fn mac_trend(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c09-mac-trials");
    let e: Vec<f64> = [4, 8, 16].iter().map(|t| metric(r, &format!("error_rate[T={t}]"))).collect();
    o.check(e.windows(2).all(|w| w[1] < w[0]), format!("error rates {e:?} not strictly decreasing"));
    let over = metric(r, "over_capacity_error_rate");
    o.check(over >= OVER_CAPACITY_MIN, format!("over-capacity error rate {over} < {OVER_CAPACITY_MIN}"));
    o
}

fn stability(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let r = rs.get("c10-typicality");
    let (short, long) = (metric(r, "fraction[T=4]"), metric(r, "fraction[T=32]"));
    o.check(long > short, format!("fraction {short} at T=4 vs {long} at T=32"));
    o.check(long > TYPICAL_MIN, format!("fraction {long} at T=32 not above {TYPICAL_MIN}"));
    o
}

fn ic_bc(rs: &Records) -> Outcome {
    let mut o = Outcome::new();
    let ic = rs.get("c11-ic-treat-as-noise");
    // direct gains 1 and powers 2, so a_ii²Pᵢ/2 = 1
    for i in 0..2 {
        let rate = metric(ic, &format!("rate[{i}]"));
        o.at_most(&format!("IC user {i} relative gap"), (rate - 1.0).abs(), IC_REL_TOL);
    }
    let bc = rs.get("c11-bc-superposition");
    let z = (metric(bc, "composite_power") - metric(bc, "composite_power_expected")).abs()
        / metric(bc, "composite_power_se");
    o.at_most("composite power deviation in SE", z, COMPOSITE_Z);
    o.check(verdict_passed(bc, "power_sharing_trend"), "power-sharing trend");
    for u in 0..2 {
        let ts = metric(bc, &format!("time_shared_mi[{u}]"));
        let gap = (ts - 0.5 * metric(bc, &format!("independent_blocks_mi[{u}]")))
            .abs()
            .max((ts - metric(bc, &format!("standalone_mi[{u}]"))).abs());
        o.at_most(&format!("BC user {u} halving"), gap, HALVING_TOL);
    }
    o
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run(out: &Path) -> SuiteReport {
    run_suite(&suite_path(), out, false).expect("suite runs")
}

#[test]
fn acceptance_suite() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let report = run(d1.path());
    for e in &report.entries {
        assert!(e.result.is_ok(), "{}: {}", e.config.display(), e.result.as_ref().err().unwrap());
    }
    let records = Records(report.records().map(|r| (r.id.as_str(), r)).collect());

    let checks: [(u32, &str, Check); 11] = [
        (1, "bandwidth limit", bandwidth_limit),
        (2, "Duncan long-run rate", duncan_rate),
        (3, "sampled MI convergence", sampling_convergence),
        (4, "feedback MI", feedback),
        (5, "I/snr monotone and derivative", snr_monotonicity),
        (6, "two-user exact MI", quartet),
        (7, "region fixtures", regions),
        (8, "band-limited regions", region_limits),
        (9, "MAC error trend", mac_trend),
        (10, "information stability", stability),
        (11, "IC and BC probes", ic_bc),
    ];
    let mut failed = BTreeSet::new();
    for (n, name, check) in checks {
        let mut o = check(&records);
        // every record in the criterion must also agree with its own verdicts
        for e in report.entries.iter().filter(|e| e.criterion == Some(n)) {
            let r = e.result.as_ref().unwrap();
            for v in r.verdicts.iter().filter(|v| !v.passed) {
                o.check(false, format!("{}: verdict {} ({})", r.id, v.name, v.value));
            }
        }
        let seconds: f64 = report
            .entries
            .iter()
            .filter(|e| e.criterion == Some(n))
            .filter_map(|e| e.result.as_ref().ok())
            .map(|r| r.wall_clock_seconds)
            .sum();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {name} [{seconds:.2}s] {}", o.notes.join("; "));
        if !o.passed {
            failed.insert(n);
        }
    }

    let report2 = run(d2.path());
    let (a, b) = (files(d1.path()), files(d2.path()));
    let identical = a == b && !a.is_empty();
    println!("criterion 12 {} byte-identical reruns [{} files]", if identical { "PASS" } else { "FAIL" }, a.len());
    if !identical {
        failed.insert(12);
    }

    let expected_exit = if failed.is_empty() { exit::SUCCESS } else { exit::TOLERANCE };
    assert_eq!(report.exit_code(), expected_exit);
    assert_eq!(report2.exit_code(), expected_exit);
    let known: BTreeSet<u32> = KNOWN_RED.iter().copied().collect();
    assert_eq!(failed, known, "failing criteria differ from the documented known-red set");
}
