//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treeprod::closure::{all_reduced_words, probe_embedding, search_membership, verify_certificate, SearchBudget};
use treeprod::eqsystems::{integer_rank, ExponentMatrix};
use treeprod::presentation::{strictly_staggered, validate_staggered, TreeProduct, ValidateOptions};
use treeprod::testgen::{
    check_kernel_structure, check_minimal_tree_invariance, check_rewrite, oracle_power_membership, oracle_proper_power,
    oracle_rank, random_kernel_relator, random_leaf_case, random_relator, random_tree_product, random_word,
};
use treeprod::words::{free_reduce, is_proper_power, power_membership, Gen, Word};

const CERTIFICATE_TIME_LIMIT: Duration = Duration::from_secs(60);
const PROBE_TIME_LIMIT: Duration = Duration::from_secs(600);
const PROBE_MAX_STATES: usize = 200_000;
const REWRITE_CASES: usize = 1000;
const MAX_TREE_SIZE: usize = 4;
const INVARIANCE_FIXTURES: usize = 20;
const CONJUGATORS_PER_FIXTURE: usize = 200;
const KERNEL_FIXTURES: usize = 100;
const ORACLE_INSTANCES: usize = 500;
const DETERMINISM_RUNS: usize = 3;

type Outcome = Result<String, String>;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(name: &str) -> Result<TreeProduct, String> {
    let text = std::fs::read_to_string(fixtures_dir().join(name)).map_err(|e| e.to_string())?;
    TreeProduct::parse(&text).map_err(|e| e.to_string())
}

fn word(tp: &TreeProduct, s: &str) -> Result<Word, String> {
    tp.parse_word(s).map_err(|e| e.to_string())
}

fn counterexample_certificate() -> Outcome {
    let tp = load("example12-asfreeproduct.tp")?;
    if !tp.validate_with(ValidateOptions { allow_nonmaximal: true }).is_empty() {
        return Err("relaxed encoding does not validate".into());
    }
    let (r, target) = (word(&tp, "a c^-1 b^-1")?, word(&tp, "d^2")?);
    let start = Instant::now();
    let budget = SearchBudget::new(4, 6, 1_000_000).map_err(|e| e.to_string())?;
    let out = search_membership(&tp, &r, &target, budget).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let cert = out.certificate().ok_or("no certificate within budget")?;
    if !verify_certificate(&tp, cert).map_err(|e| e.to_string())? {
        return Err("certificate rejected by the verifier".into());
    }
    if cert.factors.len() != 2 {
        return Err(format!("certificate has {} factors, expected 2", cert.factors.len()));
    }
    if elapsed > CERTIFICATE_TIME_LIMIT {
        return Err(format!("search took {elapsed:.1?}"));
    }
    Ok(format!("2 factors, verified, {elapsed:.1?}"))
}

fn genus_two_probe() -> Outcome {
    let tp = load("genus2.tp")?;
    let r = word(&tp, "a c")?;
    let budget = SearchBudget::new(3, 5, PROBE_MAX_STATES).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut samples = 0;
    for tag in ["A", "B"] {
        let sel = tp.parse_selection(tag).map_err(|e| e.to_string())?;
        let gens: Vec<Gen> = sel.iter().flat_map(|v| tp.vertex(v).gens.clone()).collect();
        let words = all_reduced_words(&tp, &gens, 3);
        let report = probe_embedding(&tp, &sel, &r, budget, &words).map_err(|e| e.to_string())?;
        if report.refused.is_some() || !report.kills.is_empty() {
            return Err(format!("subtree {tag}: {}", report.serialize(&tp)));
        }
        samples += report.samples;
    }
    let elapsed = start.elapsed();
    if elapsed > PROBE_TIME_LIMIT {
        return Err(format!("probe took {elapsed:.1?}"));
    }
    Ok(format!("{samples} samples, zero kills (one-sided), {elapsed:.1?}"))
}

fn rewrite_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1);
    let mut measured = 0;
    for i in 0..REWRITE_CASES {
        let size = rng.gen_range(2..=MAX_TREE_SIZE);
        let with_h = rng.gen_bool(0.5);
        let case = random_leaf_case(&mut rng, size, with_h);
        let r = random_kernel_relator(&mut rng, &case, 12);
        let ell = rng.gen_range(-3..=3);
        let check = check_rewrite(&case, &r, ell).map_err(|e| format!("case {i}: {e}"))?;
        measured += usize::from(check.measure_checked);
    }
    Ok(format!("{REWRITE_CASES}/{REWRITE_CASES} cases, measure decrease checked on {measured}"))
}

fn minimal_tree_uniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa2);
    for _ in 0..INVARIANCE_FIXTURES {
        let size = rng.gen_range(2..=MAX_TREE_SIZE);
        let tp = random_tree_product(&mut rng, size, true);
        let r = random_relator(&mut rng, &tp, 10);
        let all: Vec<Gen> = (0..tp.alphabet().len() as Gen).collect();
        let us: Vec<Word> = (0..CONJUGATORS_PER_FIXTURE)
            .map(|_| {
                let len = rng.gen_range(0..=10);
                random_word(&mut rng, &all, len)
            })
            .collect();
        check_minimal_tree_invariance(&tp, &r, &us)?;
    }
    Ok(format!("{INVARIANCE_FIXTURES} fixtures x {CONJUGATORS_PER_FIXTURE} conjugators"))
}

fn kernel_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa3);
    let mut slices = 0;
    for _ in 0..KERNEL_FIXTURES {
        let size = rng.gen_range(2..=MAX_TREE_SIZE);
        let case = random_leaf_case(&mut rng, size, true);
        let lo = rng.gen_range(-4..=0);
        let hi = lo + rng.gen_range(0..=4);
        let words: Vec<Word> = (0..10).map(|_| random_kernel_relator(&mut rng, &case, 10)).collect();
        slices += check_kernel_structure(&case, (lo, hi), &words)?;
    }
    Ok(format!("{KERNEL_FIXTURES} fixtures, {slices} slices"))
}

fn staggering_fixture() -> Outcome {
    let tp = load("staggered.tp")?;
    if !tp.validate().is_empty() {
        return Err(format!("{:?}", tp.validate()));
    }
    let x = tp.vertex_index("X").map_err(|e| e.to_string())?;
    let words: Vec<Word> = tp.edge_words_at(x).into_iter().map(|(_, w)| w.clone()).collect();
    let y = |g: Gen| tp.generator(g).y_index;
    let rep = validate_staggered(y, &words).map_err(|e| e.to_string())?;
    let expected = vec![(0, 3), (2, 5), (3, 6)];
    if !rep.staggered || rep.bounds != expected {
        return Err(format!("table {:?}", rep.bounds));
    }
    // every table entry moved onto the same-column entry of a neighbouring row
    let mut collisions = 0;
    for row in 0..expected.len() {
        for nb in [row.wrapping_sub(1), row + 1].into_iter().filter(|&n| n < expected.len()) {
            for col in 0..2 {
                let mut t = expected.clone();
                let v = if col == 0 { expected[nb].0 } else { expected[nb].1 };
                if col == 0 { t[row].0 = v } else { t[row].1 = v }
                if strictly_staggered(&t) {
                    return Err(format!("perturbed table {t:?} accepted"));
                }
                collisions += 1;
            }
        }
    }
    // one generator's index moved by one: the validator must match the table oracle
    let mut rejected = 0;
    for g in words.iter().flat_map(|w| w.letters().iter().map(|l| l.gen())).collect::<std::collections::BTreeSet<_>>() {
        for d in [-1, 1] {
            let shifted = |h: Gen| y(h).map(|i| if h == g { i + d } else { i });
            let rep = validate_staggered(shifted, &words).map_err(|e| e.to_string())?;
            let bounds: Vec<(i64, i64)> = words
                .iter()
                .map(|w| {
                    let ys: Vec<i64> = w.letters().iter().filter_map(|l| shifted(l.gen())).collect();
                    (*ys.iter().min().expect("indexed"), *ys.iter().max().expect("indexed"))
                })
                .collect();
            if rep.bounds != bounds || rep.staggered != strictly_staggered(&bounds) {
                return Err(format!("index shift of {} by {d} misjudged", tp.alphabet().name(g)));
            }
            rejected += usize::from(!rep.staggered);
        }
    }
    Ok(format!("table (0,3),(2,5),(3,6); {collisions} table collisions rejected; {rejected} index shifts break the order"))
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa7);
    let gens: Vec<Gen> = vec![0, 1, 2];
    for i in 0..ORACLE_INSTANCES {
        let base_len = rng.gen_range(1..=4);
        let base = random_word(&mut rng, &gens, base_len);
        let p = is_proper_power(&base).map_err(|e| e.to_string())?.root;
        let w = if rng.gen_bool(0.5) {
            let k = rng.gen_range(-4..=4);
            free_reduce(p.pow(k).letters())
        } else {
            let len = rng.gen_range(0..=20);
            random_word(&mut rng, &gens, len)
        };
        if power_membership(&w, &p).map_err(|e| e.to_string())? != oracle_power_membership(&w, &p) {
            return Err(format!("power_membership disagrees on instance {i}"));
        }
        let root_len = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let u = random_word(&mut rng, &gens, root_len);
        let pw = free_reduce(u.pow(k).letters());
        if !pw.is_empty() {
            let found = is_proper_power(&pw).map_err(|e| e.to_string())?;
            if found.k != oracle_proper_power(&pw) || free_reduce(found.root.pow(found.k).letters()) != pw {
                return Err(format!("is_proper_power disagrees on instance {i}"));
            }
        }
        let (rows, cols) = (rng.gen_range(1..=4), rng.gen_range(1..=5));
        let entries: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let m = ExponentMatrix::from_rows(entries.clone(), cols).map_err(|e| e.to_string())?;
        if integer_rank(&m) != oracle_rank(&entries) {
            return Err(format!("integer_rank disagrees on instance {i}"));
        }
    }
    Ok(format!("{ORACLE_INSTANCES} instances each, full agreement"))
}

fn cli_corpus() -> Vec<Vec<String>> {
    let f = |n: &str| fixtures_dir().join(n).display().to_string();
    let cmds: Vec<Vec<&str>> = vec![
        vec!["validate", "genus2.tp"],
        vec!["validate", "example12.tp"],
        vec!["validate", "abab.tp"],
        vec!["validate", "path3.tp"],
        vec!["validate", "star.tp"],
        vec!["validate", "staggered.tp"],
        vec!["sigma", "genus2.tp"],
        vec!["sigma", "star.tp"],
        vec!["--format", "structured", "sigma", "path3.tp"],
        vec!["contract", "genus2.tp", "--word", "c a c^-1 d a^-1"],
        vec!["contract", "path3.tp", "--word", "a h f k"],
        vec!["prepare", "genus2.tp", "--leaf", "A", "--word", "a c"],
        vec!["prepare", "abab.tp", "--leaf", "A", "--word", "a c h"],
        vec!["kernel", "abab.tp", "--leaf", "A", "--gen", "a", "--window", "-1..1"],
        vec!["alg1", "abab.tp", "--leaf", "A", "--gen", "a", "--word", "c h a d k a^-1", "--ell", "2"],
        vec!["alg1", "genus2.tp", "--leaf", "A", "--gen", "b", "--word", "b c b^-1 d"],
        vec!["measure", "genus2.tp", "--word", "a c"],
        vec!["expmatrix", "genus2.tp", "--eq", "x^2 a y^-1", "--eq", "y x", "--vars", "x,y"],
        vec![
            "--allow-nonmaximal", "closure", "example12-asfreeproduct.tp", "--relator", "a c^-1 b^-1", "--target", "d d",
            "--max-factors", "2", "--max-conj-len", "3",
        ],
        vec!["closure", "genus2.tp", "--relator", "a c", "--target", "a", "--max-factors", "2", "--max-conj-len", "2"],
        vec!["probe", "genus2.tp", "--subtree", "A", "--relator", "a c", "--sample-len", "2"],
        vec!["--allow-nonmaximal", "probe", "example12-asfreeproduct.tp", "--subtree", "B", "--relator", "a c^-1 b^-1",
            "--sample-len", "1", "--max-factors", "1", "--max-conj-len", "1"],
    ];
    cmds.into_iter()
        .map(|c| c.into_iter().map(|a| if a.ends_with(".tp") { f(a) } else { a.to_string() }).collect())
        .collect()
}

type CliOutput = (Vec<u8>, Vec<u8>, Option<i32>);

fn run_cli(bin: &Path, args: &[String]) -> Result<CliOutput, String> {
    let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.stdout, out.stderr, out.status.code()))
}

fn determinism() -> Outcome {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_treeprod"));
    let corpus = cli_corpus();
    for args in &corpus {
        let first = run_cli(&bin, args)?;
        if first.2 == Some(2) {
            return Err(format!("usage error for {args:?}: {}", String::from_utf8_lossy(&first.1)));
        }
        for _ in 1..DETERMINISM_RUNS {
            if run_cli(&bin, args)? != first {
                return Err(format!("output differs between runs for {args:?}"));
            }
        }
    }
    Ok(format!("{} invocations x {DETERMINISM_RUNS} runs byte-identical", corpus.len()))
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("counterexample certificate", counterexample_certificate),
        ("genus-2 embedding probe", genus_two_probe),
        ("kernel rewrite property suite", rewrite_suite),
        ("minimal-tree uniqueness", minimal_tree_uniqueness),
        ("kernel structure", kernel_structure),
        ("staggering fixtures", staggering_fixture),
        ("oracle equivalences", oracle_equivalences),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
