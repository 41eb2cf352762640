//! Corpus ingestion: tokenization, vocabulary construction and encoding.
//!
//! A corpus file holds one sentence per line; a line equal to the document
//! delimiter (default `===`) separates documents. Token ids are dense, with
//! three reserved ids at the front of every [`Vocabulary`].

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

pub const DEFAULT_DELIMITER: &str = "===";

pub const UNK: &str = "<unk>";
pub const SENT_BEGIN: &str = "<s>";
pub const SENT_END: &str = "</s>";

pub type TokenId = u32;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "jr", "sr", "st", "inc", "co", "corp", "ltd", "vs", "etc", "gen", "gov",
    "sen", "rep", "prof", "messrs", "mt", "ft", "jan", "feb", "aug", "sept", "oct", "nov", "dec",
];

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn keeps_period(stem: &str) -> bool {
    let mut chars = stem.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => c.is_alphabetic(),
        (Some(_), Some(_)) => ABBREVIATIONS.contains(&stem) || stem.contains('.'),
        _ => false,
    }
}

/// Lowercases `line` and splits it into tokens.
///
/// Leading and trailing punctuation is split off one character at a time,
/// except that a period stays attached to single letters (`c.`), to known
/// abbreviations (`mr.`) and to words with an internal period (`u.s.`).
pub fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let chunk = chunk.to_lowercase();
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        while start < chars.len() && is_punct(chars[start]) {
            out.push(chars[start].to_string());
            start += 1;
        }
        if start == chars.len() {
            continue;
        }
        let mut end = chars.len();
        while end > start && is_punct(chars[end - 1]) {
            end -= 1;
        }
        let stem: String = chars[start..end].iter().collect();
        let mut trailing = &chars[end..];
        if trailing.first() == Some(&'.') && keeps_period(&stem) {
            out.push(format!("{stem}."));
            trailing = &trailing[1..];
        } else {
            out.push(stem);
        }
        out.extend(trailing.iter().map(|c| c.to_string()));
    }
    out
}

/// Closed vocabulary. Ids `0..3` are the reserved unknown, sentence-begin
/// and sentence-end tokens; the remaining ids follow frequency rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: FxHashMap<String, TokenId>,
}

impl Vocabulary {
    pub const UNK_ID: TokenId = 0;
    pub const SENT_BEGIN_ID: TokenId = 1;
    pub const SENT_END_ID: TokenId = 2;
    pub const NUM_RESERVED: usize = 3;

    /// Builds a vocabulary from ranked words. Reserved strings and duplicates
    /// in `ranked` are skipped.
    pub fn from_ranked<I, S>(ranked: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            words: Vec::new(),
            index: FxHashMap::default(),
        };
        for w in [UNK, SENT_BEGIN, SENT_END] {
            vocab.push(w.to_string());
        }
        for w in ranked {
            let w = w.into();
            if !vocab.index.contains_key(&w) {
                vocab.push(w);
            }
        }
        vocab
    }

    fn push(&mut self, w: String) {
        let id = self.words.len() as TokenId;
        self.index.insert(w.clone(), id);
        self.words.push(w);
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn unk_id(&self) -> TokenId {
        Self::UNK_ID
    }

    pub fn sent_begin_id(&self) -> TokenId {
        Self::SENT_BEGIN_ID
    }

    pub fn sent_end_id(&self) -> TokenId {
        Self::SENT_END_ID
    }

    /// Id of `word`, or the unknown id for out-of-vocabulary strings.
    pub fn id(&self, word: &str) -> TokenId {
        self.index.get(word).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn get(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: TokenId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn is_reserved(&self, id: TokenId) -> bool {
        (id as usize) < Self::NUM_RESERVED
    }

    pub fn check(&self, id: TokenId) -> Result<()> {
        if (id as usize) < self.words.len() {
            Ok(())
        } else {
            Err(Error::InvalidToken {
                id,
                size: self.words.len(),
            })
        }
    }

    /// Writes the vocabulary file: a header line naming the reserved tokens,
    /// then one word per line in id order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#reserved\t{UNK}\t{SENT_BEGIN}\t{SENT_END}")?;
        for w in &self.words[Self::NUM_RESERVED..] {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::format(1, "missing header"))??;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields != ["#reserved", UNK, SENT_BEGIN, SENT_END] {
            return Err(Error::format(1, format!("bad vocabulary header {header:?}")));
        }
        let mut words = Vec::new();
        let mut seen = FxHashMap::default();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.is_empty() || line.contains(char::is_whitespace) {
                return Err(Error::format(lineno, "vocabulary entries must be single tokens"));
            }
            if [UNK, SENT_BEGIN, SENT_END].contains(&line.as_str())
                || seen.insert(line.clone(), ()).is_some()
            {
                return Err(Error::format(lineno, format!("duplicate word {line:?}")));
            }
            words.push(line);
        }
        Ok(Vocabulary::from_ranked(words))
    }
}

/// Keeps the `max_size - 3` most frequent words; ties are broken
/// lexicographically.
pub fn build_vocabulary<'a, I>(tokens: I, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    if max_size < Vocabulary::NUM_RESERVED + 1 {
        return Err(Error::invalid(format!("vocabulary size {max_size} < 4")));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in tokens {
        if t != UNK && t != SENT_BEGIN && t != SENT_END {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - Vocabulary::NUM_RESERVED);
    Ok(Vocabulary::from_ranked(ranked.into_iter().map(|(w, _)| w)))
}

fn check_spans(n_sentences: usize, doc_spans: &[(usize, usize)]) -> Result<()> {
    let mut next = 0;
    for &(first, last) in doc_spans {
        if first != next || last < first {
            return Err(Error::invalid(format!(
                "document spans do not partition the corpus at ({first}, {last})"
            )));
        }
        next = last + 1;
    }
    if next != n_sentences {
        return Err(Error::invalid("document spans do not cover the corpus"));
    }
    Ok(())
}

fn spans_from_lengths(lengths: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for len in lengths {
        if len > 0 {
            spans.push((start, start + len - 1));
            start += len;
        }
    }
    spans
}

/// Tokenized sentences before encoding, grouped into documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceCorpus {
    sentences: Vec<Vec<String>>,
    doc_spans: Vec<(usize, usize)>,
}

impl SurfaceCorpus {
    pub fn from_documents(docs: Vec<Vec<Vec<String>>>) -> Result<Self> {
        let doc_spans = spans_from_lengths(docs.iter().map(Vec::len));
        let sentences: Vec<Vec<String>> = docs.into_iter().flatten().collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(i) = sentences.iter().position(Vec::is_empty) {
            return Err(Error::EmptySentence(i));
        }
        Ok(SurfaceCorpus {
            sentences,
            doc_spans,
        })
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn doc_spans(&self) -> &[(usize, usize)] {
        &self.doc_spans
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    /// Writes the corpus file format: one sentence per line, tokens joined by
    /// single spaces, delimiter lines between documents.
    pub fn write<W: Write>(&self, mut out: W, delimiter: &str) -> Result<()> {
        for (d, &(first, last)) in self.doc_spans.iter().enumerate() {
            if d > 0 {
                writeln!(out, "{delimiter}")?;
            }
            for s in &self.sentences[first..=last] {
                writeln!(out, "{}", s.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Reads one sentence per line; lines equal to `delimiter` close the current
/// document. Blank lines are skipped and empty documents are dropped.
pub fn load_corpus<R: BufRead>(input: R, delimiter: &str) -> Result<SurfaceCorpus> {
    let mut docs: Vec<Vec<Vec<String>>> = vec![Vec::new()];
    for line in input.lines() {
        let line = line?;
        if line.trim() == delimiter {
            if !docs.last().is_some_and(Vec::is_empty) {
                docs.push(Vec::new());
            }
            continue;
        }
        let tokens = tokenize(&line);
        if !tokens.is_empty() {
            docs.last_mut().expect("non-empty").push(tokens);
        }
    }
    SurfaceCorpus::from_documents(docs)
}

/// Encoded corpus: sentences of token ids plus reference document spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Vec<TokenId>>,
    doc_spans: Vec<(usize, usize)>,
    n_words: usize,
}

impl Corpus {
    pub fn new(sentences: Vec<Vec<TokenId>>, doc_spans: Vec<(usize, usize)>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(i) = sentences.iter().position(Vec::is_empty) {
            return Err(Error::EmptySentence(i));
        }
        check_spans(sentences.len(), &doc_spans)?;
        let n_words = sentences.iter().map(Vec::len).sum();
        Ok(Corpus {
            sentences,
            doc_spans,
            n_words,
        })
    }

    pub fn from_documents(docs: Vec<Vec<Vec<TokenId>>>) -> Result<Self> {
        let doc_spans = spans_from_lengths(docs.iter().map(Vec::len));
        Corpus::new(docs.into_iter().flatten().collect(), doc_spans)
    }

    pub fn sentences(&self) -> &[Vec<TokenId>] {
        &self.sentences
    }

    pub fn doc_spans(&self) -> &[(usize, usize)] {
        &self.doc_spans
    }

    pub fn n_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_docs(&self) -> usize {
        self.doc_spans.len()
    }

    pub fn documents(&self) -> impl Iterator<Item = &[Vec<TokenId>]> {
        self.doc_spans
            .iter()
            .map(|&(first, last)| &self.sentences[first..=last])
    }

    /// Sub-corpus made of documents `docs` (document indices).
    pub fn slice_docs(&self, docs: std::ops::Range<usize>) -> Result<Corpus> {
        let picked: Vec<Vec<Vec<TokenId>>> = self.doc_spans[docs]
            .iter()
            .map(|&(first, last)| self.sentences[first..=last].to_vec())
            .collect();
        Corpus::from_documents(picked)
    }

    /// Leading documents holding at most `max_words` words (at least one).
    pub fn truncate_words(&self, max_words: usize) -> Corpus {
        let mut words = 0;
        let mut n_docs = 0;
        for doc in self.documents() {
            let len: usize = doc.iter().map(Vec::len).sum();
            if n_docs > 0 && words + len > max_words {
                break;
            }
            words += len;
            n_docs += 1;
        }
        self.slice_docs(0..n_docs).expect("non-empty prefix")
    }

    pub fn reference_segmentation(&self) -> Segmentation {
        let boundaries = self.doc_spans[1..].iter().map(|&(first, _)| first).collect();
        Segmentation {
            n_sentences: self.sentences.len(),
            boundaries,
        }
    }

    pub fn check_ids(&self, vocab: &Vocabulary) -> Result<()> {
        self.sentences.iter().flatten().try_for_each(|&id| vocab.check(id))
    }
}

pub fn encode(surface: &SurfaceCorpus, vocab: &Vocabulary) -> Corpus {
    let sentences = surface
        .sentences
        .iter()
        .map(|s| s.iter().map(|w| vocab.id(w)).collect())
        .collect();
    Corpus::new(sentences, surface.doc_spans.clone()).expect("surface corpus is well-formed")
}

pub fn decode(corpus: &Corpus, vocab: &Vocabulary) -> Result<SurfaceCorpus> {
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(|&id| {
                    vocab.word(id).map(str::to_string).ok_or(Error::InvalidToken {
                        id,
                        size: vocab.len(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceCorpus {
        sentences,
        doc_spans: corpus.doc_spans.clone(),
    })
}

/// Document boundaries over an `n_sentences` text. Gap `g` separates
/// sentence `g - 1` from sentence `g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    n_sentences: usize,
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(n_sentences: usize, mut boundaries: Vec<usize>) -> Result<Self> {
        if n_sentences == 0 {
            return Err(Error::invalid("segmentation over zero sentences"));
        }
        boundaries.sort_unstable();
        if boundaries.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate boundary"));
        }
        if let Some(&g) = boundaries.iter().find(|&&g| g == 0 || g >= n_sentences) {
            return Err(Error::invalid(format!(
                "boundary {g} outside 1..{n_sentences}"
            )));
        }
        Ok(Segmentation {
            n_sentences,
            boundaries,
        })
    }

    pub fn none(n_sentences: usize) -> Self {
        Segmentation {
            n_sentences,
            boundaries: Vec::new(),
        }
    }

    pub fn all(n_sentences: usize) -> Self {
        Segmentation {
            n_sentences,
            boundaries: (1..n_sentences).collect(),
        }
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn doc_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn is_boundary(&self, gap: usize) -> bool {
        self.boundaries.binary_search(&gap).is_ok()
    }

    /// For each sentence, the index of the last sentence of its document.
    pub fn doc_ends(&self) -> Vec<usize> {
        let mut ends = Vec::with_capacity(self.n_sentences);
        let mut start = 0;
        for &b in self.boundaries.iter().chain(std::iter::once(&self.n_sentences)) {
            ends.extend(std::iter::repeat_n(b - 1, b - start));
            start = b;
        }
        ends
    }

    pub fn same_document(&self, i: usize, j: usize) -> bool {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        // any boundary g with lo < g <= hi separates them
        let k = self.boundaries.partition_point(|&g| g <= lo);
        self.boundaries.get(k).is_none_or(|&g| g > hi)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# n_sentences\t{}", self.n_sentences)?;
        for g in &self.boundaries {
            writeln!(out, "{g}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut n = None;
        let mut boundaries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("n_sentences") {
                    let v = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::format(i + 1, "bad n_sentences header"))?;
                    n = Some(v);
                }
                continue;
            }
            let g: usize = line
                .parse()
                .map_err(|_| Error::format(i + 1, format!("bad gap index {line:?}")))?;
            boundaries.push(g);
        }
        let n = n.ok_or_else(|| Error::format(1, "missing n_sentences header"))?;
        Segmentation::new(n, boundaries)
    }
}
