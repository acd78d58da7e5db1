//! Trained vector store: cosine similarity, nearest neighbours and 3CosAdd
//! analogies.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::trainer::ModelParams;

/// How word and context vectors are combined on export.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CombineMode {
    TargetOnly,
    #[default]
    Sum,
    Concat,
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target" | "target-only" => Ok(CombineMode::TargetOnly),
            "sum" => Ok(CombineMode::Sum),
            "concat" => Ok(CombineMode::Concat),
            other => Err(Error::Config(format!("unknown combine mode {other:?}"))),
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineMode::TargetOnly => "target-only",
            CombineMode::Sum => "sum",
            CombineMode::Concat => "concat",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    vocab: Vocabulary,
    dim: usize,
    /// Row-major, unnormalized.
    vectors: Vec<f64>,
    norms: Vec<f64>,
    combine_mode: CombineMode,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity with the norm of `b` supplied; `None` for zero vectors.
#[inline]
fn cosine_with_norms(a: &[f64], a_norm: f64, b: &[f64], b_norm: f64) -> Option<f64> {
    if a_norm == 0.0 || b_norm == 0.0 {
        return None;
    }
    Some(dot(a, b) / (a_norm * b_norm))
}

/// Plain cosine similarity of two vectors; `None` if either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    cosine_with_norms(a, norm(a), b, norm(b))
}

/// Descending score, then ascending id.
fn rank(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

impl EmbeddingSet {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f64>, combine_mode: CombineMode) -> Result<Self> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(Error::Config(format!(
                "expected {} x {dim} values, got {}",
                vocab.len(),
                vectors.len()
            )));
        }
        if let Some(n) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite value in vector of {:?}",
                vocab.word((n / dim) as u32).unwrap_or("?")
            )));
        }
        let norms = vectors.chunks_exact(dim).map(norm).collect();
        Ok(EmbeddingSet {
            vocab,
            dim,
            vectors,
            norms,
            combine_mode,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn combine_mode(&self) -> CombineMode {
        self.combine_mode
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector_by_id(&self, id: u32) -> &[f64] {
        let i = id as usize;
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Result<&[f64]> {
        self.id(word).map(|id| self.vector_by_id(id))
    }

    fn id(&self, word: &str) -> Result<u32> {
        self.vocab
            .id(word)
            .ok_or_else(|| Error::UnknownWord(word.to_owned()))
    }

    /// Words whose vectors are entirely zero.
    pub fn zero_rows(&self) -> Vec<&str> {
        self.norms
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0.0)
            .filter_map(|(i, _)| self.vocab.word(i as u32))
            .collect()
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.id(a)?, self.id(b)?);
        let (va, vb) = (self.vector_by_id(ia), self.vector_by_id(ib));
        let (na, nb) = (self.norms[ia as usize], self.norms[ib as usize]);
        if na == 0.0 {
            return Err(Error::DegenerateVector(a.to_owned()));
        }
        if nb == 0.0 {
            return Err(Error::DegenerateVector(b.to_owned()));
        }
        Ok(dot(va, vb) / (na * nb))
    }

    /// Top `k` words by cosine to `query`, skipping `exclude` and zero rows.
    /// Fewer than `k` are returned when not enough candidates remain.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: &HashSet<u32>) -> Result<Vec<(u32, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if query.len() != self.dim {
            return Err(Error::Config(format!(
                "query has dimension {}, expected {}",
                query.len(),
                self.dim
            )));
        }
        let q_norm = norm(query);
        let mut scored: Vec<(u32, f64)> = (0..self.len() as u32)
            .filter(|id| !exclude.contains(id))
            .filter_map(|id| {
                cosine_with_norms(query, q_norm, self.vector_by_id(id), self.norms[id as usize])
                    .map(|c| (id, c))
            })
            .collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(rank);
        Ok(scored)
    }

    /// Like [`nearest`](Self::nearest) with word keys.
    pub fn nearest_words(&self, query: &[f64], k: usize, exclude: &[&str]) -> Result<Vec<(&str, f64)>> {
        let exclude: HashSet<u32> = exclude.iter().filter_map(|w| self.vocab.id(w)).collect();
        Ok(self
            .nearest(query, k, &exclude)?
            .into_iter()
            .map(|(id, c)| (self.vocab.word(id).unwrap(), c))
            .collect())
    }

    /// `v_b - v_a + v_c`.
    pub fn analogy_query(&self, a: u32, b: u32, c: u32) -> Vec<f64> {
        let (va, vb, vc) = (self.vector_by_id(a), self.vector_by_id(b), self.vector_by_id(c));
        (0..self.dim).map(|k| vb[k] - va[k] + vc[k]).collect()
    }

    /// 3CosAdd over ids: best candidate other than `a`, `b`, `c`.
    pub fn solve_analogy_ids(&self, a: u32, b: u32, c: u32) -> Result<(u32, f64)> {
        let query = self.analogy_query(a, b, c);
        let q_norm = norm(&query);
        let mut best: Option<(u32, f64)> = None;
        for id in 0..self.len() as u32 {
            if id == a || id == b || id == c {
                continue;
            }
            let Some(score) =
                cosine_with_norms(&query, q_norm, self.vector_by_id(id), self.norms[id as usize])
            else {
                continue;
            };
            // strict comparison keeps the lowest id on ties
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((id, score));
            }
        }
        best.ok_or(Error::NoCandidate)
    }

    /// "a is to b as c is to ?"
    pub fn solve_analogy(&self, a: &str, b: &str, c: &str) -> Result<&str> {
        let (ia, ib, ic) = (self.id(a)?, self.id(b)?, self.id(c)?);
        let (id, _) = self.solve_analogy_ids(ia, ib, ic)?;
        Ok(self.vocab.word(id).unwrap())
    }

    /// `word v1 ... vd` lines in vocabulary order, shortest round-trip decimals.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for (id, (word, _)) in self.vocab.entries().iter().enumerate() {
            line.clear();
            line.push_str(word);
            for v in self.vector_by_id(id as u32) {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Load a vector file; the dimension comes from the first line and
    /// every later line must match it. Ids follow line order and counts are
    /// not stored, so each word gets count 1.
    pub fn read_text<R: BufRead>(input: R, combine_mode: CombineMode) -> Result<Self> {
        let mut entries = Vec::new();
        let mut vectors = Vec::new();
        let mut dim = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let mut parts = line.split(' ');
            let word = parts.next().filter(|w| !w.is_empty()).ok_or_else(|| Error::parse(n + 1, "missing word"))?;
            let before = vectors.len();
            for p in parts {
                let v: f64 = p
                    .parse()
                    .map_err(|e| Error::parse(n + 1, format!("bad value {p:?}: {e}")))?;
                vectors.push(v);
            }
            let got = vectors.len() - before;
            match dim {
                None if got == 0 => return Err(Error::parse(n + 1, "no vector values")),
                None => dim = Some(got),
                Some(d) if d != got => {
                    return Err(Error::parse(n + 1, format!("ragged row: {got} values, expected {d}")))
                }
                _ => {}
            }
            entries.push((word.to_owned(), 1));
        }
        let dim = dim.ok_or_else(|| Error::parse(0, "empty vector file"))?;
        let vocab = Vocabulary::from_entries(entries)?;
        EmbeddingSet::new(vocab, dim, vectors, combine_mode)
    }
}

/// Combine trained parameters into an embedding set.
pub fn export(params: &ModelParams, vocab: &Vocabulary, mode: CombineMode) -> Result<EmbeddingSet> {
    if params.vocab_size != vocab.len() {
        return Err(Error::Config(format!(
            "parameters cover {} words but vocabulary has {}",
            params.vocab_size,
            vocab.len()
        )));
    }
    let d = params.dim;
    let (dim, vectors) = match mode {
        CombineMode::TargetOnly => (d, params.w.clone()),
        CombineMode::Sum => (d, params.w.iter().zip(&params.w_ctx).map(|(a, b)| a + b).collect()),
        CombineMode::Concat => {
            let mut out = Vec::with_capacity(2 * params.w.len());
            for (w, c) in params.w.chunks_exact(d).zip(params.w_ctx.chunks_exact(d)) {
                out.extend_from_slice(w);
                out.extend_from_slice(c);
            }
            (2 * d, out)
        }
    };
    EmbeddingSet::new(vocab.clone(), dim, vectors, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_entries(words.iter().map(|w| (w.to_string(), 1)).collect()).unwrap()
    }

    fn set(words: &[&str], rows: &[&[f64]]) -> EmbeddingSet {
        let dim = rows[0].len();
        EmbeddingSet::new(vocab(words), dim, rows.concat(), CombineMode::Sum).unwrap()
    }

    fn random_set(n: usize, dim: usize, seed: u64) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let v = Vocabulary::from_entries(words.into_iter().map(|w| (w, 1)).collect()).unwrap();
        let vectors = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        EmbeddingSet::new(v, dim, vectors, CombineMode::Sum).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let e = set(&["a", "b", "x", "y", "z"], &[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0; 3]]);
        assert!((e.cosine("a", "b").unwrap() - 0.974_631_846_197_076_3).abs() < 1e-15);
        assert!((e.cosine("a", "a").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(e.cosine("x", "y").unwrap(), 0.0);
        assert!(matches!(e.cosine("a", "nope"), Err(Error::UnknownWord(_))));
        assert!(matches!(e.cosine("z", "a"), Err(Error::DegenerateVector(w)) if w == "z"));
        assert_eq!(e.zero_rows(), vec!["z"]);
    }

    #[test]
    fn export_modes() {
        let v = vocab(&["a", "b"]);
        let mut p = ModelParams::zeros(2, 2);
        p.w = vec![1.0, 2.0, 3.0, 4.0];
        let e = export(&p, &v, CombineMode::Sum).unwrap();
        assert_eq!(e.vector("b").unwrap(), &[3.0, 4.0]);
        p.w_ctx = vec![0.5, 0.5, -1.0, 0.0];
        let e = export(&p, &v, CombineMode::Sum).unwrap();
        assert_eq!(e.vector("a").unwrap(), &[1.5, 2.5]);
        assert_eq!(e.vector("b").unwrap(), &[2.0, 4.0]);
        let e = export(&p, &v, CombineMode::Concat).unwrap();
        assert_eq!(e.dim(), 4);
        assert_eq!(e.vector("b").unwrap(), &[3.0, 4.0, -1.0, 0.0]);
        let e = export(&p, &v, CombineMode::TargetOnly).unwrap();
        assert_eq!(e.vector("a").unwrap(), &[1.0, 2.0]);
        assert!(export(&p, &vocab(&["a"]), CombineMode::Sum).is_err());
    }

    #[test]
    fn nearest_excludes_and_completes() {
        let e = random_set(30, 5, 1);
        let q = e.vector("w3").unwrap().to_vec();
        let top = e.nearest_words(&q, 1, &["w3"]).unwrap();
        assert_ne!(top[0].0, "w3");
        let all = e.nearest(&q, 30, &HashSet::new()).unwrap();
        let mut ids: Vec<u32> = all.iter().map(|&(id, _)| id).collect();
        assert_eq!(ids[0], 3);
        ids.sort();
        assert_eq!(ids, (0..30).collect::<Vec<_>>());
        assert_eq!(e.nearest(&q, 100, &HashSet::from([1, 2])).unwrap().len(), 28);
        assert!(e.nearest(&q, 0, &HashSet::new()).is_err());
    }

    #[test]
    fn nearest_breaks_ties_by_id() {
        let e = set(&["a", "b", "c"], &[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0]]);
        let got = e.nearest(&[1.0, 0.0], 2, &HashSet::new()).unwrap();
        assert_eq!(got.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn analogy_forced_by_exclusion() {
        let e = set(&["a", "b", "c", "d"], &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(e.solve_analogy("a", "b", "c").unwrap(), "d");
        assert!(matches!(e.solve_analogy("a", "b", "q"), Err(Error::UnknownWord(_))));
        let three = set(&["a", "b", "c"], &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(three.solve_analogy("a", "b", "c"), Err(Error::NoCandidate)));
    }

    #[test]
    fn analogy_a_b_a_returns_closest_to_b() {
        // query = v_b; a and b excluded
        let e = set(
            &["a", "b", "near", "mid", "far"],
            &[&[1.0, 0.0], &[0.0, 1.0], &[0.1, 1.0], &[1.0, 1.0], &[1.0, -1.0]],
        );
        assert_eq!(e.solve_analogy("a", "b", "a").unwrap(), "near");
    }

    #[test]
    fn vector_text_format() {
        let e = set(&["a", "b"], &[&[0.1, -2.0], &[1e-7, 3.0]]);
        let mut buf = Vec::new();
        e.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a 0.1 -2\nb 0.0000001 3\n");
        let back = EmbeddingSet::read_text(&buf[..], CombineMode::Sum).unwrap();
        assert_eq!(back.vector("b").unwrap(), e.vector("b").unwrap());
        assert!(matches!(
            EmbeddingSet::read_text(&b"a 1 2\nb 1\n"[..], CombineMode::Sum),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(EmbeddingSet::read_text(&b""[..], CombineMode::Sum).is_err());
        assert!(EmbeddingSet::read_text(&b"a x\n"[..], CombineMode::Sum).is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 4),
            b in prop::collection::vec(-10.0f64..10.0, 4),
            s in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
            let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
            prop_assert!((cosine_similarity(&scaled, &b).unwrap() - ab).abs() < 1e-12);
        }

        #[test]
        fn analogy_never_returns_inputs(seed in any::<u64>(), a in 0u32..12, b in 0u32..12, c in 0u32..12) {
            let e = random_set(12, 3, seed);
            let (got, _) = e.solve_analogy_ids(a, b, c).unwrap();
            prop_assert!(got != a && got != b && got != c);
        }

        #[test]
        fn vector_file_roundtrip(seed in any::<u64>()) {
            let e = random_set(7, 3, seed);
            let mut first = Vec::new();
            e.write_text(&mut first).unwrap();
            let back = EmbeddingSet::read_text(&first[..], CombineMode::Sum).unwrap();
            let mut second = Vec::new();
            back.write_text(&mut second).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
