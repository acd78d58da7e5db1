//! Analogy accuracy and similarity tables.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuestionKind {
    Semantic,
    Syntactic,
}

impl QuestionKind {
    /// Sections named `gram*` are syntactic.
    pub fn from_section(name: &str) -> Self {
        if name.starts_with("gram") {
            QuestionKind::Syntactic
        } else {
            QuestionKind::Semantic
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionKind::Semantic => "semantic",
            QuestionKind::Syntactic => "syntactic",
        }
    }
}

/// "a is to b as c is to expected".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
    pub category: String,
    pub kind: QuestionKind,
}

/// Parse the `: section` / `a b c d` question format, lowercasing words.
pub fn load_questions<R: BufRead>(input: R) -> Result<Vec<AnalogyQuestion>> {
    let mut out = Vec::new();
    let mut section: Option<String> = None;
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix(':') {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(n + 1, "empty section name"));
            }
            section = Some(name.to_owned());
            continue;
        }
        let Some(category) = &section else {
            return Err(Error::parse(n + 1, "question before any `: section` header"));
        };
        let words: Vec<String> = trimmed
            .split_ascii_whitespace()
            .map(|w| w.to_ascii_lowercase())
            .collect();
        let [a, b, c, expected] = <[String; 4]>::try_from(words).map_err(|w| {
            Error::parse(n + 1, format!("expected 4 words, found {}", w.len()))
        })?;
        out.push(AnalogyQuestion {
            a,
            b,
            c,
            expected,
            category: category.clone(),
            kind: QuestionKind::from_section(category),
        });
    }
    Ok(out)
}

/// Counts for one category or rollup.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub attempted: usize,
    pub correct: usize,
    pub skipped_oov: usize,
}

impl Tally {
    /// `correct / attempted`, `None` when nothing was attempted.
    pub fn accuracy(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.correct as f64 / self.attempted as f64)
    }

    /// `correct / (attempted + skipped)`, counting skipped questions as wrong.
    pub fn coverage_adjusted(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.correct as f64 / total as f64)
    }

    pub fn total(&self) -> usize {
        self.attempted + self.skipped_oov
    }

    fn add(&mut self, other: &Tally) {
        self.attempted += other.attempted;
        self.correct += other.correct;
        self.skipped_oov += other.skipped_oov;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryResult {
    pub category: String,
    pub kind: QuestionKind,
    pub tally: Tally,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    /// In order of first appearance.
    pub categories: Vec<CategoryResult>,
    pub semantic: Tally,
    pub syntactic: Tally,
    pub overall: Tally,
}

fn fmt_acc(acc: Option<f64>) -> String {
    acc.map_or_else(|| "NA".to_owned(), |a| format!("{a:.6}"))
}

fn fmt_pct(acc: Option<f64>) -> String {
    acc.map_or_else(|| "n/a".to_owned(), |a| format!("{:.2}%", 100.0 * a))
}

impl EvalReport {
    /// `category,kind,attempted,correct,skipped,accuracy`, categories first,
    /// then `semantic`, `syntactic` and `overall` rollups with kind `total`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "category,kind,attempted,correct,skipped,accuracy")?;
        let rows = self
            .categories
            .iter()
            .map(|c| (c.category.as_str(), c.kind.as_str(), &c.tally))
            .chain([
                ("semantic", "total", &self.semantic),
                ("syntactic", "total", &self.syntactic),
                ("overall", "total", &self.overall),
            ]);
        for (name, kind, t) in rows {
            writeln!(
                out,
                "{name},{kind},{},{},{},{}",
                t.attempted,
                t.correct,
                t.skipped_oov,
                fmt_acc(t.accuracy())
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Human-readable table grouped as semantic, syntactic, overall.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<32} {:>9} {:>8} {:>8} {:>9} {:>10}",
            "category", "attempted", "correct", "skipped", "accuracy", "coverage"
        );
        let row = |s: &mut String, name: &str, t: &Tally| {
            let _ = writeln!(
                s,
                "{:<32} {:>9} {:>8} {:>8} {:>9} {:>10}",
                name,
                t.attempted,
                t.correct,
                t.skipped_oov,
                fmt_pct(t.accuracy()),
                fmt_pct(t.coverage_adjusted())
            );
        };
        for kind in [QuestionKind::Semantic, QuestionKind::Syntactic] {
            for c in self.categories.iter().filter(|c| c.kind == kind) {
                row(&mut s, &format!("  {}", c.category), &c.tally);
            }
            let total = match kind {
                QuestionKind::Semantic => &self.semantic,
                QuestionKind::Syntactic => &self.syntactic,
            };
            row(&mut s, kind.as_str(), total);
        }
        row(&mut s, "overall", &self.overall);
        s
    }
}

/// Outcome of a single question.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    SkippedOov,
    Correct,
    Wrong,
}

/// Answer one question with 3CosAdd.
pub fn answer(e: &EmbeddingSet, q: &AnalogyQuestion) -> Answer {
    let vocab = e.vocab();
    let ids = (vocab.id(&q.a), vocab.id(&q.b), vocab.id(&q.c), vocab.id(&q.expected));
    let (Some(a), Some(b), Some(c), Some(expected)) = ids else {
        return Answer::SkippedOov;
    };
    match e.solve_analogy_ids(a, b, c) {
        Ok((got, _)) if got == expected => Answer::Correct,
        _ => Answer::Wrong,
    }
}

/// Aggregate per-question answers (in question order) into a report.
pub fn tally(questions: &[AnalogyQuestion], answers: &[Answer]) -> EvalReport {
    let mut report = EvalReport::default();
    for (q, ans) in questions.iter().zip(answers) {
        let pos = match report.categories.iter().position(|c| c.category == q.category) {
            Some(p) => p,
            None => {
                report.categories.push(CategoryResult {
                    category: q.category.clone(),
                    kind: q.kind,
                    tally: Tally::default(),
                });
                report.categories.len() - 1
            }
        };
        let t = &mut report.categories[pos].tally;
        match ans {
            Answer::SkippedOov => t.skipped_oov += 1,
            Answer::Correct => {
                t.attempted += 1;
                t.correct += 1;
            }
            Answer::Wrong => t.attempted += 1,
        }
    }
    for c in &report.categories {
        match c.kind {
            QuestionKind::Semantic => report.semantic.add(&c.tally),
            QuestionKind::Syntactic => report.syntactic.add(&c.tally),
        }
        report.overall.add(&c.tally);
    }
    report
}

/// Answer every question (in parallel) and tally by category.
pub fn evaluate(e: &EmbeddingSet, questions: &[AnalogyQuestion]) -> EvalReport {
    let answers: Vec<Answer> = questions.par_iter().map(|q| answer(e, q)).collect();
    tally(questions, &answers)
}

/// One line per pair: `a b cosine` to 6 decimals, or `a b OOV`.
pub fn similarity_report<S: AsRef<str>>(e: &EmbeddingSet, pairs: &[(S, S)]) -> String {
    let mut s = String::new();
    for (a, b) in pairs {
        let (a, b) = (a.as_ref(), b.as_ref());
        let _ = match e.cosine(a, b) {
            Ok(c) => writeln!(s, "{a} {b} {c:.6}"),
            Err(_) => writeln!(s, "{a} {b} OOV"),
        };
    }
    s
}
