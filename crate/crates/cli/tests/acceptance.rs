//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p glove-cli --test acceptance -- --nocapture`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use glove_core::cooccur::{self, count_cooccurrences, probability, CooccurRecord, CooccurSet, WindowConfig};
use glove_core::corpus::{build_vocab, encode_sentences, tokenize_lines, TokenIdStream, Vocabulary};
use glove_core::embeddings::{CombineMode, EmbeddingSet};
use glove_core::trainer::{self, finite_difference_check, ModelParams, TrainConfig};
use glove_core::weighting::{check_properties, WeightingSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const WORDS: [&str; 7] = ["NTU", "is", "not", "a", "small", "university", "big"];

#[rustfmt::skip]
const NTU_COUNTS: [[u32; 7]; 7] = [
    [0, 2, 0, 0, 0, 0, 0],
    [2, 0, 1, 1, 0, 0, 0],
    [0, 1, 0, 1, 0, 0, 0],
    [0, 1, 1, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 1, 0],
];

fn ntu_fixture() -> (Vocabulary, CooccurSet) {
    let sentences = tokenize_lines(b"NTU is not a small university\nNTU is a big university\n", false).unwrap();
    let vocab = build_vocab(&sentences.concat(), 1).unwrap();
    let stream = encode_sentences(&sentences, &vocab);
    let cfg = WindowConfig {
        window: 1,
        symmetric: true,
        distance_weighting: false,
    };
    let set = count_cooccurrences(&stream, cfg).unwrap();
    (vocab, set)
}

fn weightings() -> [WeightingSpec; 2] {
    [
        WeightingSpec::exp_saturating(0.165).unwrap(),
        WeightingSpec::power_clip(10.0, 0.75).unwrap(),
    ]
}

fn c1_ntu_counts() -> Outcome {
    let (v, m) = ntu_fixture();
    ensure!(v.len() == 7, "vocabulary has {} words", v.len());
    for (r, row) in NTU_COUNTS.iter().enumerate() {
        for (c, &want) in row.iter().enumerate() {
            let got = m.value(v.id(WORDS[r]).unwrap(), v.id(WORDS[c]).unwrap());
            ensure!(
                got == f64::from(want),
                "M({}, {}) = {got}, want {want}",
                WORDS[r],
                WORDS[c]
            );
        }
    }
    Ok("49/49 entries exact".into())
}

fn c2_probabilities() -> Outcome {
    let (v, m) = ntu_fixture();
    let (ntu, is) = (v.id("NTU").unwrap(), v.id("is").unwrap());
    let got = [
        probability(&m, ntu, is).map_err(|e| e.to_string())?,
        probability(&m, ntu, ntu).map_err(|e| e.to_string())?,
        probability(&m, is, ntu).map_err(|e| e.to_string())?,
    ];
    ensure!(got == [1.0, 0.0, 0.5], "got {got:?}");
    Ok("P(is|NTU)=1 P(NTU|NTU)=0 P(NTU|is)=0.5".into())
}

fn c3_weighting() -> Outcome {
    let grid: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.01).collect();
    let specs = [
        WeightingSpec::power_clip(10.0, 0.75).unwrap(),
        WeightingSpec::power_clip(10.0, 1.0).unwrap(),
        WeightingSpec::exp_saturating(0.165).unwrap(),
    ];
    for s in &specs {
        let r = check_properties(s, &grid).map_err(|e| e.to_string())?;
        ensure!(r.all_passed(), "{s}: {r:?}");
    }
    let exp10 = specs[2].weight(10.0).map_err(|e| e.to_string())?;
    let pc5 = specs[0].weight(5.0).map_err(|e| e.to_string())?;
    // closed forms 1 - e^-1.65 and 0.5^0.75 to 16 digits
    let (exp_oracle, pc_oracle) = (0.8079500913792459, 0.5946035575013605);
    ensure!((exp10 - exp_oracle).abs() <= 1e-6, "g(10) = {exp10}, oracle {exp_oracle}");
    ensure!((pc5 - pc_oracle).abs() <= 1e-6, "f(5) = {pc5}, oracle {pc_oracle}");
    Ok(format!(
        "3 specs x 10^4 grid; g(10)={exp10:.10} (oracle {exp_oracle:.10}), f(5)={pc5:.10} (oracle {pc_oracle:.10})"
    ))
}

fn c4_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dims = [1usize, 2, 8, 50];
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let dim = dims[n % 4];
        let mut p = ModelParams::zeros(5, dim);
        for v in [&mut p.w, &mut p.w_ctx, &mut p.b, &mut p.b_ctx] {
            for x in v.iter_mut() {
                *x = rng.random_range(-0.5..0.5);
            }
        }
        let rec = CooccurRecord::new(rng.random_range(0..5), rng.random_range(0..5), rng.random_range(0.05..80.0));
        for w in weightings() {
            let err = finite_difference_check(&p, &rec, &w, false, 1e-5).map_err(|e| e.to_string())?;
            ensure!(err < 1e-6, "record {n} d={dim} {w}: relative error {err:.3e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("200 checks, worst relative error {worst:.2e} (gaps under 1e-9 count as exact)"))
}

fn c5_overfit() -> Outcome {
    let (v, set) = ntu_fixture();
    let mut finals = Vec::new();
    for w in weightings() {
        let cfg = TrainConfig {
            dim: 10,
            epochs: 500,
            weighting: w,
            seed: 1,
            threads: 1,
            ..TrainConfig::default()
        };
        let (_, history) = trainer::train(&set, v.len(), &cfg).map_err(|e| e.to_string())?;
        let mut csv = Vec::new();
        history.write_csv(&mut csv).map_err(|e| e.to_string())?;
        let means: Vec<f64> = String::from_utf8(csv)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        ensure!(means.len() == 500, "{} loss rows", means.len());
        let last = means[499];
        ensure!(last < 1e-3, "{w}: mean J {last:.3e} after 500 epochs");
        for e in [1usize, 2, 5, 10, 20, 50] {
            let (early, late) = (means[e - 1], means[10 * e - 1]);
            ensure!(late <= early, "{w}: J at epoch {} = {late:.3e} > J at epoch {e} = {early:.3e}", 10 * e);
        }
        finals.push(format!("{} {last:.2e}", w.label()));
    }
    Ok(format!("final mean J: {}", finals.join(", ")))
}

/// Naive double loop over every ordered pair of positions.
fn naive_count(stream: &TokenIdStream, cfg: WindowConfig) -> HashMap<(u32, u32), f64> {
    let mut sentence = vec![0usize; stream.ids.len()];
    for (p, s) in sentence.iter_mut().enumerate() {
        *s = stream.sentence_breaks.iter().filter(|&&b| b <= p).count();
    }
    let mut m = HashMap::new();
    for p in 0..stream.ids.len() {
        for q in (0..p).rev() {
            let d = p - q;
            if d > cfg.window || sentence[p] != sentence[q] {
                continue;
            }
            let w = if cfg.distance_weighting { 1.0 / d as f64 } else { 1.0 };
            let (a, b) = (stream.ids[p], stream.ids[q]);
            *m.entry((a, b)).or_insert(0.0) += w;
            if cfg.symmetric {
                *m.entry((b, a)).or_insert(0.0) += w;
            }
        }
    }
    m
}

fn brute_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn brute_ranking(e: &EmbeddingSet, query: &[f64], exclude: &HashSet<u32>) -> Vec<(u32, f64)> {
    let mut all: Vec<(u32, f64)> = (0..e.len() as u32)
        .filter(|id| !exclude.contains(id))
        .map(|id| (id, brute_cosine(query, e.vector_by_id(id))))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all
}

fn c6_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let vocab = rng.random_range(1..60u32);
        let len = rng.random_range(0..=1000usize);
        let ids = (0..len).map(|_| rng.random_range(0..vocab)).collect();
        let mut breaks: Vec<usize> = (0..rng.random_range(0..5)).map(|_| rng.random_range(1..len.max(2))).collect();
        breaks.sort_unstable();
        breaks.dedup();
        let stream = TokenIdStream {
            ids,
            sentence_breaks: breaks,
        };
        let cfg = WindowConfig {
            window: rng.random_range(1..=8),
            symmetric: case % 4 != 3,
            distance_weighting: case % 2 == 0,
        };
        let got = count_cooccurrences(&stream, cfg).map_err(|e| e.to_string())?;
        let want = naive_count(&stream, cfg);
        ensure!(got.len() == want.len(), "stream {case}: {} cells, oracle {}", got.len(), want.len());
        for r in got.records() {
            let w = want.get(&(r.target, r.context)).copied().unwrap_or(0.0);
            ensure!(r.value.to_bits() == w.to_bits(), "stream {case}: ({}, {}) {} vs {w}", r.target, r.context, r.value);
        }
    }

    let mut queries = 0;
    for (n, dim) in [(3usize, 2usize), (50, 4), (400, 8), (1000, 16)] {
        let vocab = Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), 1)).collect()).unwrap();
        let vectors = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = EmbeddingSet::new(vocab, dim, vectors, CombineMode::Sum).map_err(|err| err.to_string())?;
        for _ in 0..25 {
            let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let exclude: HashSet<u32> = (0..rng.random_range(0..3)).map(|_| rng.random_range(0..n as u32)).collect();
            let k = rng.random_range(1..=n);
            let mut want = brute_ranking(&e, &q, &exclude);
            want.truncate(k);
            let got = e.nearest(&q, k, &exclude).map_err(|err| err.to_string())?;
            ensure!(got == want, "nearest |V|={n} k={k} differs from full sort");

            let abc: Vec<u32> = (0..3).map(|_| rng.random_range(0..n as u32)).collect();
            let excl: HashSet<u32> = abc.iter().copied().collect();
            if excl.len() as usize == n {
                continue;
            }
            let query = e.analogy_query(abc[0], abc[1], abc[2]);
            let want = brute_ranking(&e, &query, &excl)[0].0;
            let got = e.solve_analogy_ids(abc[0], abc[1], abc[2]).map_err(|err| err.to_string())?.0;
            ensure!(got == want, "analogy |V|={n} {abc:?}: {got} vs {want}");
            queries += 2;
        }
    }
    Ok(format!("1000 streams exact; {queries} nearest/analogy queries match brute force"))
}

fn glove(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_glove"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "glove {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn workspace_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

fn text8() -> Option<PathBuf> {
    std::env::var_os("GLOVE_TEXT8")
        .map(PathBuf::from)
        .or_else(|| Some(workspace_root().join("data/text8")))
        .filter(|p| p.is_file())
}

/// Final-epoch overall accuracy and mean cost at epochs 1 and 15 per weighting.
fn read_compare(path: &Path) -> Result<HashMap<String, (f64, f64, f64)>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut out: HashMap<String, (f64, f64, f64)> = HashMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let epoch: usize = f[1].parse().unwrap();
        let cost: f64 = f[2].parse().unwrap();
        let entry = out.entry(f[0].to_owned()).or_insert((f64::NAN, f64::NAN, f64::NAN));
        if epoch == 1 {
            entry.1 = cost;
        }
        if epoch == 15 {
            entry.2 = cost;
            entry.0 = f[5].parse().map_err(|_| format!("no accuracy at epoch 15: {line}"))?;
        }
    }
    Ok(out)
}

fn c7_text8(corpus: &Path) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let questions = workspace_root().join("data/questions-words.txt");
    glove(
        &[
            "bench-compare",
            "--corpus",
            corpus.to_str().unwrap(),
            "--questions",
            questions.to_str().unwrap(),
            "--out-dir",
            "bench",
            "--max-bytes",
            "5000000",
            "--min-count",
            "5",
            "--dim",
            "50",
            "--window",
            "15",
            "--epochs",
            "15",
            "--seed",
            "1",
            "--no-line-breaks",
        ],
        dir.path(),
    )?;
    let rows = read_compare(&dir.path().join("bench/compare.csv"))?;
    let (g, f) = (&rows["exp"], &rows["power-clip"]);
    ensure!(g.0 > 0.0 && f.0 > 0.0, "accuracy exp {} power-clip {}", g.0, f.0);
    let gap = 100.0 * (g.0 - f.0).abs();
    ensure!(gap <= 5.0, "accuracy gap {gap:.2} pp");
    ensure!(g.2 < g.1 && f.2 < f.1, "loss not decreasing: exp {g:?} power-clip {f:?}");
    Ok(format!(
        "overall exp {:.2}% power-clip {:.2}% (gap {gap:.2} pp); loss exp {:.3e}->{:.3e}, power-clip {:.3e}->{:.3e}",
        100.0 * g.0,
        100.0 * f.0,
        g.1,
        g.2,
        f.1,
        f.2
    ))
}

fn c8_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny.txt");
    glove(&["vocab", "--corpus", corpus.to_str().unwrap(), "-o", "vocab.txt", "--min-count", "1"], d)?;
    glove(
        &["cooccur", "--corpus", corpus.to_str().unwrap(), "--vocab", "vocab.txt", "-o", "m.bin"],
        d,
    )?;
    for out in ["a.txt", "b.txt"] {
        glove(
            &[
                "train", "--cooccur", "m.bin", "--vocab", "vocab.txt", "-o", out, "--dim", "16", "--epochs", "10",
                "--seed", "42", "--threads", "1",
            ],
            d,
        )?;
    }
    let read = |f: &str| fs::read(d.join(f)).unwrap();
    ensure!(read("a.txt") == read("b.txt"), "vector files differ");
    ensure!(read("a.loss.csv") == read("b.loss.csv"), "loss CSVs differ");
    Ok(format!("{} vector bytes, {} loss bytes identical", read("a.txt").len(), read("a.loss.csv").len()))
}

fn c9_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut records: Vec<CooccurRecord> = (0..5000)
        .map(|i| {
            let value = match i % 5 {
                0 => 1.0 / rng.random_range(1..16u32) as f64,
                1 => f64::MIN_POSITIVE * rng.random_range(0.5..4.0),
                2 => rng.random_range(1.0..1e12),
                3 => 1e300 * rng.random::<f64>(),
                _ => rng.random::<f64>(),
            };
            CooccurRecord::new(rng.random(), rng.random(), value)
        })
        .collect();
    records.retain(|r| r.value > 0.0);
    let mut first = Vec::new();
    cooccur::write_binary(&records, &mut first).map_err(|e| e.to_string())?;
    let back = cooccur::read_binary(first.as_slice()).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    cooccur::write_binary(&back, &mut second).map_err(|e| e.to_string())?;
    ensure!(first == second, "binary records changed on round trip");
    let binary_bytes = first.len();

    let (n, dim) = (300, 7);
    let vocab = Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), 1)).collect()).unwrap();
    let vectors = (0..n * dim)
        .map(|i| match i % 4 {
            0 => rng.random_range(-1.0..1.0),
            1 => rng.random_range(-1e-300..1e-300),
            2 => -rng.random::<f64>() * 1e200,
            _ => 0.1 * (i as f64),
        })
        .collect();
    let e = EmbeddingSet::new(vocab, dim, vectors, CombineMode::Sum).map_err(|err| err.to_string())?;
    let mut first = Vec::new();
    e.write_text(&mut first).map_err(|err| err.to_string())?;
    let back = EmbeddingSet::read_text(first.as_slice(), CombineMode::Sum).map_err(|err| err.to_string())?;
    let mut second = Vec::new();
    back.write_text(&mut second).map_err(|err| err.to_string())?;
    ensure!(first == second, "vector file changed on round trip");
    Ok(format!("{} records ({binary_bytes} bytes), {n}x{dim} vectors ({} bytes) identical", records.len(), first.len()))
}

enum Status {
    Pass(String),
    Fail(String),
    Blocked(String),
}

fn run(f: impl FnOnce() -> Outcome) -> (Status, Duration) {
    let start = Instant::now();
    let status = match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(detail)) => Status::Pass(detail),
        Ok(Err(why)) => Status::Fail(why),
        Err(p) => Status::Fail(
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    (status, start.elapsed())
}

#[test]
fn acceptance() {
    let c7 = || match text8() {
        Some(p) => run(|| c7_text8(&p)),
        None => (
            Status::Blocked(format!(
                "text8 corpus not found (set GLOVE_TEXT8 or place it at {})",
                workspace_root().join("data/text8").display()
            )),
            Duration::ZERO,
        ),
    };
    let criteria: Vec<(&str, Option<u64>, Box<dyn FnOnce() -> (Status, Duration)>)> = vec![
        ("two-sentence window-1 counts", Some(1), Box::new(|| run(c1_ntu_counts))),
        ("probabilities", None, Box::new(|| run(c2_probabilities))),
        ("weighting properties", Some(1), Box::new(|| run(c3_weighting))),
        ("gradient check", Some(5), Box::new(|| run(c4_gradients))),
        ("overfit convergence", Some(5), Box::new(|| run(c5_overfit))),
        ("oracle equivalence", Some(60), Box::new(|| run(c6_oracles))),
        ("text8 bench-compare", Some(900), Box::new(c7)),
        ("determinism", None, Box::new(|| run(c8_determinism))),
        ("format round trips", None, Box::new(|| run(c9_round_trips))),
    ];

    let mut failed = Vec::new();
    println!();
    for (n, (name, budget, check)) in criteria.into_iter().enumerate() {
        let n = n + 1;
        let (mut status, took) = check();
        if let (Status::Pass(d), Some(b)) = (&status, budget) {
            if took > Duration::from_secs(b) {
                status = Status::Fail(format!("{d}; took {:.2}s, budget {b}s", took.as_secs_f64()));
            }
        }
        let (tag, detail) = match &status {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => ("FAIL", d),
            Status::Blocked(d) => ("FAIL", d),
        };
        println!("{tag} {n}. {name} [{:.2}s]: {detail}", took.as_secs_f64());
        if matches!(status, Status::Fail(_)) {
            failed.push(n);
        }
    }
    // a criterion whose input data is absent is reported red above but cannot
    // be exercised, so only criteria that actually ran decide the outcome
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
