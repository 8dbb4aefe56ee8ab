//! Text formats: tree files, corpora, vocabularies, merge lists and gold
//! segmentations. All formats are UTF-8 and line oriented.
//!
//! Trees use the bracket grammar `TREE := CHAR | "(" TREE " " TREE ")"`,
//! with `\(`, `\)` and `\\` escaping bracket and backslash leaves.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result, TreeViolation};
use crate::tree::{validate_tree, ParseNode};
use crate::vocab::Vocabulary;

/// One line of a trees file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRecord {
    pub word: String,
    pub tree: ParseNode,
}

impl TreeRecord {
    /// Validates `tree` against `word` before wrapping them.
    pub fn new(word: impl Into<String>, tree: ParseNode) -> Result<Self, TreeViolation> {
        let word = word.into();
        validate_tree(&tree, &word)?;
        Ok(TreeRecord { word, tree })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub word_freq: HashMap<String, u64>,
    pub sentences: usize,
    pub total_words: u64,
}

impl CorpusStats {
    pub fn add_word(&mut self, word: &str, count: u64) {
        *self.word_freq.entry(word.to_owned()).or_insert(0) += count;
        self.total_words += count;
    }

    /// Words sorted lexicographically with their counts.
    pub fn sorted_words(&self) -> Vec<(&str, u64)> {
        let mut words: Vec<_> = self.word_freq.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        words.sort_unstable();
        words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegmentation {
    pub word: String,
    pub morphs: Vec<String>,
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

/// Iterates over the lines of `reader`, checking UTF-8 and reporting the
/// absolute byte offset of the first invalid sequence.
fn for_each_line<R: BufRead>(
    mut reader: R,
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut offset = 0usize;
    let mut lineno = 0usize;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(io_err(path))?;
        if n == 0 {
            return Ok(());
        }
        lineno += 1;
        let text = std::str::from_utf8(&buf).map_err(|e| Error::InvalidUtf8 {
            path: path.to_owned(),
            offset: offset + e.valid_up_to(),
        })?;
        f(lineno, text.trim_end_matches(['\n', '\r']))?;
        offset += n;
    }
}

// ---------------------------------------------------------------------------
// Trees

struct TreeParser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    next_index: usize,
    line: usize,
}

impl TreeParser<'_> {
    fn node(&mut self) -> Result<ParseNode> {
        match self.chars.next() {
            Some('(') => {
                let left = self.node()?;
                match self.chars.next() {
                    Some(' ') => {}
                    Some(')') => {
                        return Err(Error::InvalidTree {
                            line: self.line,
                            violation: TreeViolation::NonBinary { span: left.span() },
                        })
                    }
                    other => return Err(malformed(self.line, format!("expected ' ' after subtree, found {other:?}"))),
                }
                let right = self.node()?;
                match self.chars.next() {
                    Some(')') => Ok(ParseNode::join(left, right)),
                    Some(' ') => Err(Error::InvalidTree {
                        line: self.line,
                        violation: TreeViolation::NonBinary {
                            span: (left.i, right.j),
                        },
                    }),
                    other => Err(malformed(self.line, format!("expected ')', found {other:?}"))),
                }
            }
            Some('\\') => match self.chars.next() {
                Some(c @ ('(' | ')' | '\\')) => Ok(self.leaf(c)),
                other => Err(malformed(self.line, format!("invalid escape {other:?}"))),
            },
            Some(c) if c == ')' || c.is_whitespace() => {
                Err(malformed(self.line, format!("unexpected {c:?} in tree")))
            }
            Some(c) => Ok(self.leaf(c)),
            None => Err(malformed(self.line, "unexpected end of tree")),
        }
    }

    fn leaf(&mut self, c: char) -> ParseNode {
        let node = ParseNode::leaf(self.next_index, c);
        self.next_index += 1;
        node
    }
}

/// Parses a bracketed tree expression without a word to check against.
pub fn parse_tree_expr(expr: &str) -> Result<ParseNode> {
    parse_tree_expr_at(expr, 1)
}

fn parse_tree_expr_at(expr: &str, line: usize) -> Result<ParseNode> {
    let mut parser = TreeParser {
        chars: expr.chars().peekable(),
        next_index: 0,
        line,
    };
    let node = parser.node()?;
    if let Some(c) = parser.chars.next() {
        return Err(malformed(line, format!("trailing input starting at {c:?}")));
    }
    Ok(node)
}

pub fn parse_tree_record(line: &str) -> Result<TreeRecord> {
    parse_tree_record_at(line, 1)
}

fn parse_tree_record_at(line: &str, lineno: usize) -> Result<TreeRecord> {
    let (word, expr) = line
        .split_once('\t')
        .ok_or_else(|| malformed(lineno, "missing tab separator"))?;
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(malformed(lineno, format!("invalid word {word:?}")));
    }
    let tree = parse_tree_expr_at(expr, lineno)?;
    validate_tree(&tree, word).map_err(|violation| Error::InvalidTree {
        line: lineno,
        violation,
    })?;
    Ok(TreeRecord {
        word: word.to_owned(),
        tree,
    })
}

/// Bracketed form of a tree, without the word column.
pub fn tree_expr(node: &ParseNode) -> String {
    let mut out = String::with_capacity(node.token.len() * 3);
    write_expr(node, &mut out);
    out
}

fn write_expr(node: &ParseNode, out: &mut String) {
    match node.children() {
        Some((l, r)) => {
            out.push('(');
            write_expr(l, out);
            out.push(' ');
            write_expr(r, out);
            out.push(')');
        }
        None => {
            for c in node.token.chars() {
                if matches!(c, '(' | ')' | '\\') {
                    out.push('\\');
                }
                out.push(c);
            }
        }
    }
}

pub fn serialize_tree(rec: &TreeRecord) -> String {
    format!("{}\t{}", rec.word, tree_expr(&rec.tree))
}

pub fn read_trees<R: BufRead>(reader: R, path: &Path) -> Result<Vec<TreeRecord>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |n, line| {
        if !line.trim().is_empty() {
            out.push(parse_tree_record_at(line, n)?);
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn load_trees(path: &Path) -> Result<Vec<TreeRecord>> {
    read_trees(open(path)?, path)
}

pub fn write_trees<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a TreeRecord>,
) -> io::Result<()> {
    for rec in records {
        writeln!(out, "{}", serialize_tree(rec))?;
    }
    Ok(())
}

/// Word-indexed collection of trees.
#[derive(Debug, Clone, Default)]
pub struct TreeBank {
    trees: HashMap<String, ParseNode>,
}

impl TreeBank {
    /// Identical duplicates are merged; conflicting ones are rejected.
    pub fn from_records(records: impl IntoIterator<Item = TreeRecord>) -> Result<Self> {
        let mut trees = HashMap::new();
        for rec in records {
            match trees.get(&rec.word) {
                Some(existing) if *existing != rec.tree => return Err(Error::DuplicateWord(rec.word)),
                Some(_) => {}
                None => {
                    trees.insert(rec.word, rec.tree);
                }
            }
        }
        Ok(TreeBank { trees })
    }

    pub fn get(&self, word: &str) -> Option<&ParseNode> {
        self.trees.get(word)
    }

    pub fn insert(&mut self, word: String, tree: ParseNode) {
        self.trees.insert(word, tree);
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParseNode)> {
        self.trees.iter().map(|(w, t)| (w.as_str(), t))
    }
}

// ---------------------------------------------------------------------------
// Corpus

pub fn read_corpus<R: BufRead>(reader: R, path: &Path, lowercase: bool) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for_each_line(reader, path, |_, line| {
        let line = if lowercase {
            std::borrow::Cow::Owned(line.to_lowercase())
        } else {
            std::borrow::Cow::Borrowed(line)
        };
        let mut any = false;
        for word in line.split_whitespace() {
            stats.add_word(word, 1);
            any = true;
        }
        if any {
            stats.sentences += 1;
        }
        Ok(())
    })?;
    Ok(stats)
}

pub fn load_corpus(path: &Path, lowercase: bool) -> Result<CorpusStats> {
    read_corpus(open(path)?, path, lowercase)
}

/// Reads sentences as word lists, skipping blank lines.
pub fn read_sentences<R: BufRead>(reader: R, path: &Path, lowercase: bool) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |_, line| {
        let line = if lowercase { line.to_lowercase() } else { line.to_owned() };
        let words: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !words.is_empty() {
            out.push(words);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Reads a tokenized corpus: one sentence per line, tokens separated by
/// whitespace. Blank lines are kept as empty sentences.
pub fn read_token_stream<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |_, line| {
        out.push(line.split_whitespace().map(str::to_owned).collect());
        Ok(())
    })?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gold segmentations

pub fn parse_gold_line(line: &str, lineno: usize) -> Result<GoldSegmentation> {
    let (word, analyses) = line
        .split_once('\t')
        .ok_or_else(|| malformed(lineno, "missing tab separator"))?;
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(malformed(lineno, format!("invalid word {word:?}")));
    }
    // Only the first of several comma-separated analyses is used.
    let first = analyses.split(',').next().unwrap_or("");
    let morphs: Vec<String> = first.split_whitespace().map(str::to_owned).collect();
    if morphs.is_empty() {
        return Err(malformed(lineno, "no morphs"));
    }
    if morphs.concat() != word {
        return Err(Error::ConcatMismatch {
            line: lineno,
            word: word.to_owned(),
            morphs,
        });
    }
    Ok(GoldSegmentation {
        word: word.to_owned(),
        morphs,
    })
}

pub fn read_gold<R: BufRead>(reader: R, path: &Path) -> Result<Vec<GoldSegmentation>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |n, line| {
        if !line.trim().is_empty() {
            out.push(parse_gold_line(line, n)?);
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldSegmentation>> {
    read_gold(open(path)?, path)
}

pub fn write_segmentations<'a, W: Write>(
    mut out: W,
    segs: impl IntoIterator<Item = (&'a str, &'a [String])>,
) -> io::Result<()> {
    for (word, tokens) in segs {
        writeln!(out, "{}\t{}", word, tokens.join(" "))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Vocabulary and merge files

pub fn read_vocabulary<R: BufRead>(reader: R, path: &Path) -> Result<Vocabulary> {
    let mut vocab = Vocabulary::new();
    for_each_line(reader, path, |n, line| {
        if line.is_empty() {
            return Ok(());
        }
        let (token, count) = line
            .rsplit_once('\t')
            .ok_or_else(|| malformed(n, "expected token<TAB>count"))?;
        if token.is_empty() {
            return Err(malformed(n, "empty token"));
        }
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| malformed(n, format!("bad count {count:?}")))?;
        if vocab.contains(token) {
            return Err(malformed(n, format!("duplicate token {token:?}")));
        }
        vocab.add(token, count);
        Ok(())
    })?;
    Ok(vocab)
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    read_vocabulary(open(path)?, path)
}

pub fn write_vocabulary<W: Write>(mut out: W, vocab: &Vocabulary) -> io::Result<()> {
    for (token, count) in vocab.sorted_entries() {
        writeln!(out, "{token}\t{count}")?;
    }
    Ok(())
}

pub fn read_merges<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |n, line| {
        if line.is_empty() {
            return Ok(());
        }
        let (l, r) = line
            .split_once('\t')
            .ok_or_else(|| malformed(n, "expected left<TAB>right"))?;
        if l.is_empty() || r.is_empty() {
            return Err(malformed(n, "empty merge component"));
        }
        out.push((l.to_owned(), r.to_owned()));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_merges<W: Write>(mut out: W, merges: &[(String, String)]) -> io::Result<()> {
    for (l, r) in merges {
        writeln!(out, "{l}\t{r}")?;
    }
    Ok(())
}
