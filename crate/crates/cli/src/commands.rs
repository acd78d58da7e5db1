use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use glove_core::cooccur::{self, CooccurSet};
use glove_core::corpus::{self, Vocabulary};
use glove_core::embeddings::{self, EmbeddingSet};
use glove_core::eval::{self, EvalReport};
use glove_core::trainer::{self, LossHistory};
use glove_core::{CombineMode, TokenIdStream, TrainConfig, WeightingSpec};
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, Result, WithPath};
use crate::manifest::{manifest_path, RunManifest};

fn refuse_overwrite(paths: &[&Path], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(CliError::Usage(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).at(path)?))
}

fn read_sentences(path: &Path, text: &TextArgs, max_bytes: Option<usize>) -> Result<Vec<Vec<String>>> {
    let mut data = fs::read(path).at(path)?;
    if let Some(max) = max_bytes {
        truncate_at_word(&mut data, max);
    }
    if text.no_line_breaks {
        Ok(vec![corpus::tokenize(&data, text.lowercase).at(path)?])
    } else {
        corpus::tokenize_lines(&data, text.lowercase).at(path)
    }
}

/// Keep at most `max` bytes, backing off to the last whitespace so no word is cut.
pub fn truncate_at_word(data: &mut Vec<u8>, max: usize) {
    if data.len() <= max {
        return;
    }
    let mut end = max;
    if !data[end].is_ascii_whitespace() {
        while end > 0 && !data[end - 1].is_ascii_whitespace() {
            end -= 1;
        }
    }
    data.truncate(end);
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read(open(path)?).at(path)
}

fn read_vectors(path: &Path) -> Result<EmbeddingSet> {
    EmbeddingSet::read_text(open(path)?, CombineMode::Sum).at(path)
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let words: Vec<&str> = line.split_ascii_whitespace().collect();
        match words.as_slice() {
            [] => {}
            [a, b] => pairs.push((a.to_ascii_lowercase(), b.to_ascii_lowercase())),
            _ => {
                return Err(CliError::Data(format!(
                    "{}:{}: expected two words, found {}",
                    path.display(),
                    n + 1,
                    words.len()
                )))
            }
        }
    }
    Ok(pairs)
}

fn write_records(path: &Path, records: &[glove_core::CooccurRecord], text: bool) -> Result<()> {
    let out = create(path)?;
    if text {
        cooccur::write_text(records, out).at(path)
    } else {
        cooccur::write_binary(records, out).at(path)
    }
}

pub fn vocab(args: &VocabArgs) -> Result<()> {
    let mpath = manifest_path(&args.output);
    refuse_overwrite(&[&args.output, &mpath], args.force)?;
    let sentences = read_sentences(&args.corpus, &args.text, None)?;
    let tokens = sentences.concat();
    let vocab = corpus::build_vocab(&tokens, args.min_count)?;
    vocab.write(create(&args.output)?).at(&args.output)?;
    eprintln!("{} tokens, {} words kept", tokens.len(), vocab.len());
    RunManifest::new("vocab", None, args)
        .input(&args.corpus)?
        .output(&args.output)
        .write(&mpath)
}

pub fn cooccur(args: &CooccurArgs) -> Result<()> {
    let mpath = manifest_path(&args.output);
    refuse_overwrite(&[&args.output, &mpath], args.force)?;
    let vocab = read_vocab(&args.vocab)?;
    let sentences = read_sentences(&args.corpus, &args.text, None)?;
    let stream = corpus::encode_sentences(&sentences, &vocab);
    let set = cooccur::count_cooccurrences_sharded(&stream, args.window.config(), args.threads)?;
    write_records(&args.output, set.records(), args.text_output)?;
    eprintln!("{} in-vocabulary tokens, {} nonzero cells", stream.len(), set.len());
    RunManifest::new("cooccur", None, args)
        .input(&args.corpus)?
        .input(&args.vocab)?
        .output(&args.output)
        .write(&mpath)
}

pub fn shuffle(args: &ShuffleArgs) -> Result<()> {
    let mpath = manifest_path(&args.output);
    refuse_overwrite(&[&args.output, &mpath], args.force)?;
    let mut records = cooccur::read_binary(open(&args.input)?).at(&args.input)?;
    cooccur::shuffle_records(&mut records, args.seed);
    write_records(&args.output, &records, false)?;
    RunManifest::new("shuffle", Some(args.seed), args)
        .input(&args.input)?
        .output(&args.output)
        .write(&mpath)
}

fn load_set(path: &Path) -> Result<CooccurSet> {
    let records = cooccur::read_binary(open(path)?).at(path)?;
    CooccurSet::from_records(records).at(path)
}

fn write_loss(path: &Path, history: &LossHistory) -> Result<()> {
    history.write_csv(create(path)?).at(path)
}

fn write_vectors(path: &Path, e: &EmbeddingSet) -> Result<()> {
    e.write_text(create(path)?).at(path)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let loss_path = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| args.output.with_extension("loss.csv"));
    let mpath = manifest_path(&args.output);
    refuse_overwrite(&[&args.output, &loss_path, &mpath], args.force)?;
    let cfg = args.model.train_config(args.weighting.spec()?)?;
    let vocab = read_vocab(&args.vocab)?;
    let set = load_set(&args.cooccur)?;

    let (params, history) = trainer::train_with(&set, vocab.len(), &cfg, |e, _| {
        eprintln!("epoch {:>3}  mean cost {:.6e}  skipped {}", e.epoch, e.mean_cost, e.skipped);
        Ok(())
    })?;
    let e = embeddings::export(&params, &vocab, args.model.combine.into())?;
    write_vectors(&args.output, &e)?;
    write_loss(&loss_path, &history)?;
    RunManifest::new("train", Some(cfg.seed), args)
        .input(&args.cooccur)?
        .input(&args.vocab)?
        .output(&args.output)
        .output(&loss_path)
        .write(&mpath)
}

fn load_questions(path: &Path) -> Result<Vec<glove_core::AnalogyQuestion>> {
    eval::load_questions(open(path)?).at(path)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    if let Some(csv) = &args.csv {
        refuse_overwrite(&[csv], args.force)?;
    }
    let e = read_vectors(&args.vectors)?;
    let questions = load_questions(&args.questions)?;
    let report = eval::evaluate(&e, &questions);
    print!("{}", report.to_table());
    if let Some(csv) = &args.csv {
        report.write_csv(create(csv)?).at(csv)?;
    }
    Ok(())
}

pub fn similar(args: &SimilarArgs) -> Result<()> {
    let e = read_vectors(&args.vectors)?;
    let pairs = read_pairs(&args.pairs)?;
    print!("{}", eval::similarity_report(&e, &pairs));
    Ok(())
}

pub fn analogy(args: &AnalogyArgs) -> Result<()> {
    let e = read_vectors(&args.vectors)?;
    let [a, b, c] = [&args.a, &args.b, &args.c].map(|w| w.to_ascii_lowercase());
    let id = |w: &String| e.vocab().id(w).ok_or_else(|| glove_core::Error::UnknownWord(w.clone()));
    let (ia, ib, ic) = (id(&a)?, id(&b)?, id(&c)?);
    if args.top <= 1 {
        let (id, score) = e.solve_analogy_ids(ia, ib, ic)?;
        println!("{} {score:.6}", e.vocab().word(id).unwrap());
        return Ok(());
    }
    let query = e.analogy_query(ia, ib, ic);
    let exclude = [ia, ib, ic].into_iter().collect();
    for (id, score) in e.nearest(&query, args.top, &exclude)? {
        println!("{} {score:.6}", e.vocab().word(id).unwrap());
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct CompareRow {
    label: &'static str,
    epoch: usize,
    mean_cost: f64,
    accuracy: Option<[Option<f64>; 3]>,
}

fn accuracies(r: &EvalReport) -> [Option<f64>; 3] {
    [r.semantic.accuracy(), r.syntactic.accuracy(), r.overall.accuracy()]
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |a| format!("{a:.6}"))
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |a| format!("{:.2}", 100.0 * a))
}

struct BenchRun {
    spec: WeightingSpec,
    history: LossHistory,
    report: EvalReport,
    vectors: EmbeddingSet,
    rows: Vec<CompareRow>,
}

fn bench_one(
    set: &CooccurSet,
    vocab: &Vocabulary,
    questions: &[glove_core::AnalogyQuestion],
    cfg: &TrainConfig,
    combine: CombineMode,
    eval_every: usize,
) -> Result<BenchRun> {
    let label = cfg.weighting.label();
    let mut rows = Vec::new();
    let (params, history) = trainer::train_with(set, vocab.len(), cfg, |e, params| {
        let mut row = CompareRow {
            label,
            epoch: e.epoch,
            mean_cost: e.mean_cost,
            accuracy: None,
        };
        if eval_every > 0 && e.epoch % eval_every == 0 && e.epoch != cfg.epochs {
            let emb = embeddings::export(params, vocab, combine)?;
            row.accuracy = Some(accuracies(&eval::evaluate(&emb, questions)));
        }
        eprintln!(
            "[{label}] epoch {:>3}  mean cost {:.6e}  overall {}",
            e.epoch,
            e.mean_cost,
            fmt_pct(row.accuracy.and_then(|a| a[2]))
        );
        rows.push(row);
        Ok(())
    })?;
    let vectors = embeddings::export(&params, vocab, combine)?;
    let report = eval::evaluate(&vectors, questions);
    if let Some(last) = rows.last_mut() {
        last.accuracy = Some(accuracies(&report));
    }
    Ok(BenchRun {
        spec: cfg.weighting,
        history,
        report,
        vectors,
        rows,
    })
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    #[serde(flatten)]
    args: &'a BenchArgs,
    lowercase: bool,
    vocab_size: usize,
    tokens: usize,
    nonzero_cells: usize,
    weightings: Vec<String>,
}

fn compare_table(runs: &[BenchRun], pairs: Option<&[(String, String)]>) -> String {
    let mut s = String::new();
    let (a, b) = (&runs[0], &runs[1]);
    let (la, lb) = (a.spec.label(), b.spec.label());
    let _ = writeln!(s, "weightings: {} | {}", a.spec, b.spec);
    let _ = writeln!(s, "{:<24} {:>14} {:>14} {:>10}", "metric", la, lb, "delta");
    let acc = |name: &str, s: &mut String, x: Option<f64>, y: Option<f64>| {
        let delta = match (x, y) {
            (Some(x), Some(y)) => format!("{:+.2}", 100.0 * (x - y)),
            _ => "n/a".to_owned(),
        };
        let _ = writeln!(s, "{:<24} {:>14} {:>14} {:>10}", name, fmt_pct(x), fmt_pct(y), delta);
    };
    acc("semantic acc (%)", &mut s, a.report.semantic.accuracy(), b.report.semantic.accuracy());
    acc("syntactic acc (%)", &mut s, a.report.syntactic.accuracy(), b.report.syntactic.accuracy());
    acc("overall acc (%)", &mut s, a.report.overall.accuracy(), b.report.overall.accuracy());
    acc(
        "overall coverage-adj (%)",
        &mut s,
        a.report.overall.coverage_adjusted(),
        b.report.overall.coverage_adjusted(),
    );
    let _ = writeln!(
        s,
        "{:<24} {:>14} {:>14}",
        "attempted / total",
        format!("{}/{}", a.report.overall.attempted, a.report.overall.total()),
        format!("{}/{}", b.report.overall.attempted, b.report.overall.total())
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<8} {:>16} {:>16}", "epoch", la, lb);
    for (x, y) in a.history.epochs.iter().zip(&b.history.epochs) {
        let _ = writeln!(s, "{:<8} {:>16.6e} {:>16.6e}", x.epoch, x.mean_cost, y.mean_cost);
    }
    if let Some(pairs) = pairs {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<28} {:>10} {:>10}", "pair", la, lb);
        for (p, q) in pairs {
            let cos = |e: &EmbeddingSet| e.cosine(p, q).ok().map_or("OOV".to_owned(), |c| format!("{c:.6}"));
            let _ = writeln!(s, "{:<28} {:>10} {:>10}", format!("{p} {q}"), cos(&a.vectors), cos(&b.vectors));
        }
    }
    s
}

pub fn bench_compare(args: &BenchArgs) -> Result<()> {
    let dir = &args.out_dir;
    let specs = [args.weighting.exp()?, args.weighting.power_clip()?];
    let mut outputs: Vec<PathBuf> = vec![dir.join("compare.csv"), dir.join("compare.txt"), dir.join("manifest.json")];
    for s in &specs {
        for stem in ["loss", "eval", "vectors"] {
            let ext = if stem == "vectors" { "txt" } else { "csv" };
            outputs.push(dir.join(format!("{stem}_{}.{ext}", s.label())));
        }
    }
    refuse_overwrite(&outputs.iter().map(PathBuf::as_path).collect::<Vec<_>>(), args.force)?;
    let cfgs = specs
        .iter()
        .map(|&w| args.model.train_config(w))
        .collect::<Result<Vec<_>>>()?;
    args.window.config().validate()?;

    let text = TextArgs {
        lowercase: true,
        no_line_breaks: args.no_line_breaks,
    };
    let sentences = read_sentences(&args.corpus, &text, args.max_bytes)?;
    let tokens = sentences.concat();
    let vocab = corpus::build_vocab(&tokens, args.min_count)?;
    let stream: TokenIdStream = corpus::encode_sentences(&sentences, &vocab);
    let set = cooccur::count_cooccurrences_sharded(&stream, args.window.config(), args.model.threads)?;
    eprintln!(
        "{} tokens, {} words, {} nonzero cells",
        tokens.len(),
        vocab.len(),
        set.len()
    );
    let questions = load_questions(&args.questions)?;
    let pairs = args.pairs.as_deref().map(read_pairs).transpose()?;

    let combine: CombineMode = args.model.combine.into();
    let mut runs = Vec::new();
    for cfg in &cfgs {
        runs.push(bench_one(&set, &vocab, &questions, cfg, combine, args.eval_every)?);
    }

    fs::create_dir_all(dir).at(dir)?;
    for run in &runs {
        let label = run.spec.label();
        write_loss(&dir.join(format!("loss_{label}.csv")), &run.history)?;
        let p = dir.join(format!("eval_{label}.csv"));
        run.report.write_csv(create(&p)?).at(&p)?;
        write_vectors(&dir.join(format!("vectors_{label}.txt")), &run.vectors)?;
    }

    let p = dir.join("compare.csv");
    let mut out = create(&p)?;
    writeln!(out, "weighting,epoch,mean_cost,semantic_acc,syntactic_acc,overall_acc")?;
    for row in runs.iter().flat_map(|r| &r.rows) {
        let [sem, syn, all] = row.accuracy.unwrap_or([None; 3]);
        writeln!(
            out,
            "{},{},{:.11e},{},{},{}",
            row.label,
            row.epoch,
            row.mean_cost,
            fmt_opt(sem),
            fmt_opt(syn),
            fmt_opt(all)
        )?;
    }
    out.flush()?;

    let table = compare_table(&runs, pairs.as_deref());
    fs::write(dir.join("compare.txt"), &table).at(&dir.join("compare.txt"))?;
    print!("{table}");

    let config = BenchConfig {
        args,
        lowercase: true,
        vocab_size: vocab.len(),
        tokens: tokens.len(),
        nonzero_cells: set.len(),
        weightings: specs.iter().map(ToString::to_string).collect(),
    };
    let mut manifest = RunManifest::new("bench-compare", Some(args.model.seed), config)
        .input(&args.corpus)?
        .input(&args.questions)?;
    if let Some(p) = &args.pairs {
        manifest = manifest.input(p)?;
    }
    for o in outputs.iter().filter(|o| !o.ends_with("manifest.json")) {
        manifest = manifest.output(o);
    }
    manifest.write(&dir.join("manifest.json"))
}
