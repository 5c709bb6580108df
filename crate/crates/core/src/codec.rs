//! Token grammar for serialized scene pairs and masked-span targets.
//!
//! ```text
//! pair    := meta <scene_start> scene <scene_start> scene
//! meta    := <country> WORD <dist> NUMBER <orientation_diff> NUMBER
//! scene   := row (<row_sep> row)*
//! row     := cell (<col_sep> cell)*
//! cell    := <empty> | SENTINEL | concept (<concept_sep> concept)*
//! concept := WORD+            (longest match against the taxonomy)
//! targets := SENTINEL span SENTINEL span ... SENTINEL
//! ```
//!
//! Tokens are separated by single spaces in text form. Multi-word labels
//! occupy one word token per word.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::geometry::normalize_diff;
use crate::grid::{CellIndex, GridSpec};
use crate::raster::{AreaMatrix, LabelSet};
use crate::scene::PairMeta;
use crate::taxonomy::Taxonomy;

/// Size of the sentinel vocabulary: `<extra_id_0>` to `<extra_id_99>`.
pub const MAX_SENTINELS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Special {
    Country,
    Dist,
    OrientationDiff,
    SceneStart,
    ColSep,
    RowSep,
    ConceptSep,
    Empty,
}

impl Special {
    pub const ALL: [Special; 8] = [
        Special::Country,
        Special::Dist,
        Special::OrientationDiff,
        Special::SceneStart,
        Special::ColSep,
        Special::RowSep,
        Special::ConceptSep,
        Special::Empty,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Special::Country => "<country>",
            Special::Dist => "<dist>",
            Special::OrientationDiff => "<orientation_diff>",
            Special::SceneStart => "<scene_start>",
            Special::ColSep => "<col_sep>",
            Special::RowSep => "<row_sep>",
            Special::ConceptSep => "<concept_sep>",
            Special::Empty => "<empty>",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Special(Special),
    /// `<extra_id_n>`, `n < 100`.
    Sentinel(u8),
    Word(String),
}

impl Token {
    pub fn word(w: impl Into<String>) -> Self {
        Token::Word(w.into())
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, Token::Sentinel(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Special(s) => f.write_str(s.as_str()),
            Token::Sentinel(n) => write!(f, "<extra_id_{n}>"),
            Token::Word(w) => f.write_str(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("token {position}: expected {expected}, found {found}")]
    Grammar { position: usize, expected: String, found: String },
    #[error("scene {scene}, row {row}: expected {expected} columns, found {actual}")]
    ColumnCount { scene: usize, row: usize, expected: usize, actual: usize },
    #[error("scene {scene}: expected {expected} rows, found {actual}")]
    RowCount { scene: usize, expected: usize, actual: usize },
    #[error("target sequence does not start with <extra_id_0>")]
    NoSentinels,
    #[error("{count} spans exceed the sentinel vocabulary")]
    TooManySpans { count: usize },
    #[error("expected span count {0} outside 1..=99")]
    InvalidSpanCount(usize),
    #[error("country code {0:?} is not a single plain word")]
    InvalidCountry(String),
    #[error("matrices of a pair must share one grid")]
    GridMismatch,
}

fn grammar(position: usize, expected: impl Into<String>, found: Option<&Token>) -> CodecError {
    CodecError::Grammar {
        position,
        expected: expected.into(),
        found: found.map_or_else(|| "end of input".to_string(), |t| format!("`{t}`")),
    }
}

/// Ordered token list; displays as single-space separated text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<Token>);

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }

    pub fn as_slice(&self) -> &[Token] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Token> + '_ {
        self.0.iter()
    }

    pub fn count_special(&self, special: Special) -> usize {
        self.0.iter().filter(|t| **t == Token::Special(special)).count()
    }

    pub fn sentinel_count(&self) -> usize {
        self.0.iter().filter(|t| t.is_sentinel()).count()
    }

    pub fn sentinels(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().filter_map(|t| match t {
            Token::Sentinel(n) => Some(*n),
            _ => None,
        })
    }

    /// Splits whitespace-separated text into tokens. Words wrapped in angle
    /// brackets must be a known special token or a sentinel.
    pub fn parse_text(text: &str) -> Result<Self, CodecError> {
        text.split_whitespace()
            .enumerate()
            .map(|(position, word)| lex_word(position, word))
            .collect::<Result<Vec<_>, _>>()
            .map(TokenSequence)
    }
}

fn lex_word(position: usize, word: &str) -> Result<Token, CodecError> {
    if !(word.starts_with('<') && word.ends_with('>') && word.len() > 2) {
        return Ok(Token::Word(word.to_string()));
    }
    if let Some(special) = Special::ALL.iter().find(|s| s.as_str() == word) {
        return Ok(Token::Special(*special));
    }
    let sentinel = word
        .strip_prefix("<extra_id_")
        .and_then(|rest| rest.strip_suffix('>'))
        .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|digits| digits.parse::<usize>().ok())
        .filter(|&n| n < MAX_SENTINELS);
    match sentinel {
        Some(n) => Ok(Token::Sentinel(n as u8)),
        None => Err(CodecError::Grammar {
            position,
            expected: "a special token or <extra_id_0>..<extra_id_99>".into(),
            found: format!("`{word}`"),
        }),
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{token}")?;
        }
        Ok(())
    }
}

impl FromStr for TokenSequence {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TokenSequence::parse_text(s)
    }
}

impl From<Vec<Token>> for TokenSequence {
    fn from(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }
}

/// Distance with exactly one decimal.
pub fn format_dist(dist_m: f64) -> String {
    format!("{dist_m:.1}")
}

/// Orientation change rounded to whole degrees, kept in `(-180, 180]`.
pub fn round_orientation(deg: f64) -> i64 {
    let r = libm::round(normalize_diff(deg)) as i64;
    if r <= -180 {
        r + 360
    } else {
        r
    }
}

pub fn parse_number(word: &str) -> Option<f64> {
    word.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Which scene of a pair a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairSide {
    Current,
    Next,
}

/// How a cell is written during serialization.
#[derive(Debug, Clone, Copy)]
pub enum CellSlot<'a> {
    Labels(&'a LabelSet),
    Sentinel(u8),
    Empty,
}

/// One decoded scene; masked cells are empty in `matrix` and listed in `masked`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedScene {
    pub matrix: AreaMatrix,
    /// Masked cells in order of appearance, with their sentinel index.
    pub masked: Vec<(CellIndex, u8)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPair {
    pub meta: PairMeta,
    pub current: DecodedScene,
    pub next: DecodedScene,
}

/// Per-cell contents of a target sequence; span `i` belongs to `<extra_id_i>`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanTargets {
    pub spans: Vec<LabelSet>,
}

impl SpanTargets {
    pub fn new(spans: Vec<LabelSet>) -> Self {
        SpanTargets { spans }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpanFlags {
    /// No sentinel for this span was found; the span is empty.
    pub missing: bool,
    /// Unknown words or stray tokens inside the span were dropped.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTargets {
    pub targets: SpanTargets,
    pub flags: Vec<SpanFlags>,
    /// Set when the final sentinel or any span sentinel was missing.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

/// Serializer and parser bound to a taxonomy, which supplies label words.
#[derive(Debug, Clone, Copy)]
pub struct SceneCodec<'t> {
    taxonomy: &'t Taxonomy,
}

impl<'t> SceneCodec<'t> {
    pub fn new(taxonomy: &'t Taxonomy) -> Self {
        SceneCodec { taxonomy }
    }

    pub fn taxonomy(&self) -> &'t Taxonomy {
        self.taxonomy
    }

    /// Appends a cell's labels joined by `<concept_sep>`, or `<empty>`.
    pub fn push_labels(&self, out: &mut Vec<Token>, labels: &LabelSet) {
        if labels.is_empty() {
            out.push(Token::Special(Special::Empty));
            return;
        }
        for (i, id) in labels.iter().enumerate() {
            if i > 0 {
                out.push(Token::Special(Special::ConceptSep));
            }
            out.extend(self.taxonomy.name(id).split(' ').map(Token::word));
        }
    }

    fn push_scene<'m>(
        &self,
        out: &mut Vec<Token>,
        matrix: &'m AreaMatrix,
        mut slot: impl FnMut(CellIndex, &'m LabelSet) -> CellSlot<'m>,
    ) {
        let grid = matrix.grid();
        for (cell, labels) in matrix.iter() {
            if cell.col > 1 {
                out.push(Token::Special(Special::ColSep));
            } else if cell.row > 1 {
                out.push(Token::Special(Special::RowSep));
            }
            debug_assert!(grid.contains(cell));
            match slot(cell, labels) {
                CellSlot::Labels(set) => self.push_labels(out, set),
                CellSlot::Sentinel(n) => out.push(Token::Sentinel(n)),
                CellSlot::Empty => out.push(Token::Special(Special::Empty)),
            }
        }
    }

    /// Row-major cells from `(1, 1)`; columns split by `<col_sep>`, rows by `<row_sep>`.
    pub fn serialize_matrix(&self, matrix: &AreaMatrix) -> TokenSequence {
        let mut out = Vec::new();
        self.push_scene(&mut out, matrix, |_, labels| CellSlot::Labels(labels));
        TokenSequence(out)
    }

    pub fn serialize_pair(
        &self,
        current: &AreaMatrix,
        next: &AreaMatrix,
        meta: &PairMeta,
    ) -> Result<TokenSequence, CodecError> {
        self.serialize_pair_with(current, next, meta, |_, _, labels| CellSlot::Labels(labels))
    }

    /// Like [`SceneCodec::serialize_pair`], letting `slot` replace any cell.
    pub fn serialize_pair_with<'m>(
        &self,
        current: &'m AreaMatrix,
        next: &'m AreaMatrix,
        meta: &PairMeta,
        mut slot: impl FnMut(PairSide, CellIndex, &'m LabelSet) -> CellSlot<'m>,
    ) -> Result<TokenSequence, CodecError> {
        if current.grid() != next.grid() {
            return Err(CodecError::GridMismatch);
        }
        let country_ok = !meta.country.is_empty()
            && !meta.country.chars().any(char::is_whitespace)
            && !meta.country.starts_with('<');
        if !country_ok {
            return Err(CodecError::InvalidCountry(meta.country.clone()));
        }
        let mut out = vec![
            Token::Special(Special::Country),
            Token::word(meta.country.as_str()),
            Token::Special(Special::Dist),
            Token::Word(format_dist(meta.dist_m)),
            Token::Special(Special::OrientationDiff),
            Token::Word(round_orientation(meta.orientation_diff_deg).to_string()),
            Token::Special(Special::SceneStart),
        ];
        self.push_scene(&mut out, current, |cell, labels| slot(PairSide::Current, cell, labels));
        out.push(Token::Special(Special::SceneStart));
        self.push_scene(&mut out, next, |cell, labels| slot(PairSide::Next, cell, labels));
        Ok(TokenSequence(out))
    }

    /// Inverse of [`SceneCodec::serialize_pair`]. Sentinels are accepted in
    /// cell positions and reported as masked cells.
    pub fn parse_sequence(
        &self,
        tokens: &TokenSequence,
        grid: &GridSpec,
    ) -> Result<DecodedPair, CodecError> {
        let mut cur = Cursor { tokens: tokens.as_slice(), pos: 0 };
        cur.expect(Special::Country)?;
        let country = cur.word("country code")?.to_string();
        cur.expect(Special::Dist)?;
        let dist_m = cur.number("distance", |v| v >= 0.0)?;
        cur.expect(Special::OrientationDiff)?;
        let orientation = cur.number("orientation difference", |_| true)?;
        cur.expect(Special::SceneStart)?;
        let current = self.parse_scene(&mut cur, grid, 1)?;
        cur.expect(Special::SceneStart)?;
        let next = self.parse_scene(&mut cur, grid, 2)?;
        if let Some(extra) = cur.peek() {
            return Err(grammar(cur.pos, "end of input", Some(extra)));
        }
        Ok(DecodedPair {
            meta: PairMeta { country, dist_m, orientation_diff_deg: normalize_diff(orientation) },
            current,
            next,
        })
    }

    fn parse_scene(
        &self,
        cur: &mut Cursor<'_>,
        grid: &GridSpec,
        scene: usize,
    ) -> Result<DecodedScene, CodecError> {
        let mut rows: Vec<Vec<Slot>> = vec![Vec::new()];
        loop {
            let slot = self.parse_cell(cur)?;
            rows.last_mut().expect("at least one row").push(slot);
            match cur.peek() {
                Some(Token::Special(Special::ColSep)) => cur.pos += 1,
                Some(Token::Special(Special::RowSep)) => {
                    cur.pos += 1;
                    rows.push(Vec::new());
                }
                None | Some(Token::Special(Special::SceneStart)) => break,
                other => {
                    return Err(grammar(cur.pos, "<col_sep>, <row_sep> or end of scene", other))
                }
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.cols {
                return Err(CodecError::ColumnCount {
                    scene,
                    row: i + 1,
                    expected: grid.cols,
                    actual: row.len(),
                });
            }
        }
        if rows.len() != grid.rows {
            return Err(CodecError::RowCount { scene, expected: grid.rows, actual: rows.len() });
        }
        let mut cells = Vec::with_capacity(grid.cell_count());
        let mut masked = Vec::new();
        for (cell, slot) in grid.cells().zip(rows.into_iter().flatten()) {
            match slot {
                Slot::Labels(set) => cells.push(set),
                Slot::Masked(n) => {
                    masked.push((cell, n));
                    cells.push(LabelSet::new());
                }
            }
        }
        let matrix = AreaMatrix::from_cells(*grid, cells).expect("shape checked above");
        Ok(DecodedScene { matrix, masked })
    }

    fn parse_cell(&self, cur: &mut Cursor<'_>) -> Result<Slot, CodecError> {
        match cur.peek() {
            Some(Token::Special(Special::Empty)) => {
                cur.pos += 1;
                Ok(Slot::Labels(LabelSet::new()))
            }
            Some(Token::Sentinel(n)) => {
                let n = *n;
                cur.pos += 1;
                Ok(Slot::Masked(n))
            }
            Some(Token::Word(_)) => {
                let mut set = LabelSet::new();
                loop {
                    let start = cur.pos;
                    let mut words = Vec::new();
                    while let Some(Token::Word(w)) = cur.peek() {
                        words.push(w.as_str());
                        cur.pos += 1;
                    }
                    if words.is_empty() {
                        return Err(grammar(cur.pos, "a label", cur.peek()));
                    }
                    self.segment(&words, |offset| {
                        Err(grammar(
                            start + offset,
                            "a taxonomy label",
                            Some(&Token::word(words[offset])),
                        ))
                    }, &mut set)?;
                    if cur.peek() == Some(&Token::Special(Special::ConceptSep)) {
                        cur.pos += 1;
                    } else {
                        return Ok(Slot::Labels(set));
                    }
                }
            }
            other => Err(grammar(cur.pos, "a cell", other)),
        }
    }

    /// Greedy longest-match segmentation of `words` into labels. `unknown` is
    /// called with the offset of each word no label starts with.
    fn segment(
        &self,
        words: &[&str],
        mut unknown: impl FnMut(usize) -> Result<(), CodecError>,
        set: &mut LabelSet,
    ) -> Result<(), CodecError> {
        let mut i = 0;
        while i < words.len() {
            match self.taxonomy.longest_match(&words[i..]) {
                Some((id, n)) => {
                    set.insert(id);
                    i += n;
                }
                None => {
                    unknown(i)?;
                    i += 1;
                }
            }
        }
        Ok(())
    }

    /// `<extra_id_0> span0 <extra_id_1> span1 ... <extra_id_k>`; the final
    /// sentinel carries no content and empty spans render as `<empty>`.
    pub fn render_targets(&self, targets: &SpanTargets) -> Result<TokenSequence, CodecError> {
        if targets.len() >= MAX_SENTINELS {
            return Err(CodecError::TooManySpans { count: targets.len() });
        }
        let mut out = Vec::new();
        for (i, span) in targets.spans.iter().enumerate() {
            out.push(Token::Sentinel(i as u8));
            self.push_labels(&mut out, span);
        }
        out.push(Token::Sentinel(targets.len() as u8));
        Ok(TokenSequence(out))
    }

    /// Reads `expected_count` spans back from a target sequence.
    ///
    /// Lenient mode accepts imperfect model output: content after the final
    /// sentinel is ignored, spans whose sentinel never appears come back empty
    /// and flagged, and unknown words or stray tokens are dropped with a flag.
    /// Strict mode rejects all of those with a positioned grammar error.
    pub fn parse_targets(
        &self,
        tokens: &TokenSequence,
        expected_count: usize,
        mode: ParseMode,
    ) -> Result<ParsedTargets, CodecError> {
        if !(1..MAX_SENTINELS).contains(&expected_count) {
            return Err(CodecError::InvalidSpanCount(expected_count));
        }
        let toks = tokens.as_slice();
        if toks.first() != Some(&Token::Sentinel(0)) {
            return Err(CodecError::NoSentinels);
        }
        let strict = mode == ParseMode::Strict;
        let mut spans = vec![LabelSet::new(); expected_count];
        let mut flags = vec![SpanFlags { missing: true, dropped: false }; expected_count];
        flags[0].missing = false;
        let mut current = 0usize;
        let mut content_start = 1usize;
        let mut skipping = false;
        let mut final_seen = false;
        let mut pos = 1;
        loop {
            let token = toks.get(pos);
            if matches!(token, Some(t) if !t.is_sentinel()) {
                pos += 1;
                continue;
            }
            if !skipping {
                let (set, dropped) =
                    self.parse_span(&toks[content_start..pos], content_start, token, strict)?;
                spans[current] = set;
                flags[current].dropped |= dropped;
            }
            skipping = false;
            let Some(Token::Sentinel(n)) = token else { break };
            let n = *n as usize;
            if strict && n != current + 1 {
                return Err(grammar(pos, format!("<extra_id_{}>", current + 1), token));
            }
            if n >= expected_count {
                final_seen = true;
                if strict && pos + 1 != toks.len() {
                    return Err(grammar(pos + 1, "end of input", toks.get(pos + 1)));
                }
                break;
            }
            if n <= current {
                // repeated or backwards sentinel: what follows it is noise
                flags[current].dropped = true;
                skipping = true;
            } else {
                current = n;
                flags[n].missing = false;
                content_start = pos + 1;
            }
            pos += 1;
        }
        if strict && !final_seen {
            return Err(grammar(toks.len(), format!("<extra_id_{expected_count}>"), None));
        }
        let truncated = !final_seen || flags.iter().any(|f| f.missing);
        Ok(ParsedTargets { targets: SpanTargets { spans }, flags, truncated })
    }

    /// Parses one span body; `after` is the token that ended it. Returns the
    /// labels and whether anything was dropped.
    fn parse_span(
        &self,
        body: &[Token],
        offset: usize,
        after: Option<&Token>,
        strict: bool,
    ) -> Result<(LabelSet, bool), CodecError> {
        let mut set = LabelSet::new();
        if body == [Token::Special(Special::Empty)] {
            return Ok((set, false));
        }
        let mut dropped = false;
        let mut groups: Vec<(usize, Vec<&str>)> = Vec::new();
        let mut group: Vec<&str> = Vec::new();
        let mut group_start = offset;
        for (i, token) in body.iter().enumerate() {
            match token {
                Token::Word(w) => {
                    if group.is_empty() {
                        group_start = offset + i;
                    }
                    group.push(w);
                }
                Token::Special(Special::ConceptSep) if !(strict && group.is_empty()) => {
                    groups.push((group_start, core::mem::take(&mut group)));
                }
                other => {
                    if strict {
                        return Err(grammar(offset + i, "a label", Some(other)));
                    }
                    dropped = true;
                    groups.push((group_start, core::mem::take(&mut group)));
                }
            }
        }
        if strict && group.is_empty() {
            let expected = if body.is_empty() { "<empty> or a label" } else { "a label" };
            return Err(grammar(offset + body.len(), expected, after));
        }
        groups.push((group_start, group));
        for (start, words) in &groups {
            self.segment(
                words,
                |k| {
                    if strict {
                        Err(grammar(start + k, "a taxonomy label", Some(&Token::word(words[k]))))
                    } else {
                        dropped = true;
                        Ok(())
                    }
                },
                &mut set,
            )?;
        }
        Ok((set, dropped))
    }
}

enum Slot {
    Labels(LabelSet),
    Masked(u8),
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, special: Special) -> Result<(), CodecError> {
        match self.peek() {
            Some(Token::Special(s)) if *s == special => {
                self.pos += 1;
                Ok(())
            }
            other => Err(grammar(self.pos, special.as_str(), other)),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, CodecError> {
        match self.peek() {
            Some(Token::Word(w)) => {
                self.pos += 1;
                Ok(w)
            }
            other => Err(grammar(self.pos, what, other)),
        }
    }

    fn number(&mut self, what: &str, valid: impl Fn(f64) -> bool) -> Result<f64, CodecError> {
        let pos = self.pos;
        let word = self.word(what)?;
        parse_number(word)
            .filter(|v| valid(*v))
            .ok_or_else(|| grammar(pos, what, Some(&Token::word(word))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tax() -> Taxonomy {
        Taxonomy::default()
    }

    fn set(t: &Taxonomy, labels: &[&str]) -> LabelSet {
        labels.iter().map(|l| t.id(l).unwrap()).collect()
    }

    fn grid(rows: usize, cols: usize) -> GridSpec {
        GridSpec {
            rows,
            cols,
            cell_h: 1.0,
            cell_w: 1.0,
            front_m: rows as f64,
            rear_m: 0.0,
            left_m: 0.0,
            right_m: cols as f64,
        }
    }

    fn matrix(t: &Taxonomy, g: GridSpec, cells: &[&[&str]]) -> AreaMatrix {
        AreaMatrix::from_cells(g, cells.iter().map(|c| set(t, c)).collect()).unwrap()
    }

    fn text(seq: &TokenSequence) -> String {
        seq.to_string()
    }

    #[test]
    fn serialize_small_matrices() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let m = matrix(&t, grid(1, 2), &[&["lane"], &[]]);
        assert_eq!(text(&c.serialize_matrix(&m)), "lane <col_sep> <empty>");
        let m = matrix(&t, grid(2, 1), &[&["lane"], &["walkway"]]);
        assert_eq!(text(&c.serialize_matrix(&m)), "lane <row_sep> walkway");
        let m = matrix(&t, grid(1, 1), &[&["car", "lane"]]);
        assert_eq!(text(&c.serialize_matrix(&m)), "lane <concept_sep> car");
    }

    #[test]
    fn meta_prefix_formatting() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let m = matrix(&t, grid(1, 1), &[&[]]);
        let meta = PairMeta { country: "US".into(), dist_m: 4.8, orientation_diff_deg: 0.0 };
        let s = text(&c.serialize_pair(&m, &m, &meta).unwrap());
        assert!(s.starts_with("<country> US <dist> 4.8 <orientation_diff> 0 <scene_start> "));
        let meta = PairMeta { country: "SG".into(), dist_m: 0.0, orientation_diff_deg: -0.3 };
        let s = text(&c.serialize_pair(&m, &m, &meta).unwrap());
        assert_eq!(s, "<country> SG <dist> 0.0 <orientation_diff> 0 <scene_start> <empty> <scene_start> <empty>");
    }

    #[test]
    fn orientation_rounding_stays_in_range() {
        assert_eq!(round_orientation(-179.6), 180);
        assert_eq!(round_orientation(179.6), 180);
        assert_eq!(round_orientation(-20.4), -20);
        assert_eq!(round_orientation(370.0), 10);
    }

    #[test]
    fn paper_prefix_parses() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let g = grid(1, 3);
        let seq: TokenSequence = "<country> US <dist> 4.8 <orientation_diff> 0 <scene_start> \
             lane <col_sep> lane <concept_sep> car <col_sep> pedestrian crossing <scene_start> \
             <empty> <col_sep> intersection <col_sep> turn stop area"
            .parse()
            .unwrap();
        let pair = c.parse_sequence(&seq, &g).unwrap();
        assert_eq!(pair.meta, PairMeta { country: "US".into(), dist_m: 4.8, orientation_diff_deg: 0.0 });
        assert_eq!(pair.current.matrix.get(CellIndex::new(1, 2)).names(&t), ["lane", "car"]);
        assert_eq!(pair.current.matrix.get(CellIndex::new(1, 3)).names(&t), ["pedestrian crossing"]);
        assert_eq!(pair.next.matrix.get(CellIndex::new(1, 3)).names(&t), ["turn stop area"]);
    }

    #[test]
    fn missing_col_sep_is_shape_error() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let seq: TokenSequence =
            "<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> lane car <col_sep> lane \
             <row_sep> lane <col_sep> lane <col_sep> lane <scene_start> <empty> <col_sep> <empty> \
             <col_sep> <empty> <row_sep> <empty> <col_sep> <empty> <col_sep> <empty>"
                .parse()
                .unwrap();
        let err = c.parse_sequence(&seq, &grid(2, 3)).unwrap_err();
        assert_eq!(err, CodecError::ColumnCount { scene: 1, row: 1, expected: 3, actual: 2 });
        assert_eq!(err.to_string(), "scene 1, row 1: expected 3 columns, found 2");
    }

    #[test]
    fn grammar_errors_carry_positions() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let g = grid(1, 1);
        let parse = |s: &str| c.parse_sequence(&s.parse().unwrap(), &g);
        assert!(matches!(parse("<dist> 1.0"), Err(CodecError::Grammar { position: 0, .. })));
        assert!(matches!(
            parse("<country> US <dist> -1.0 <orientation_diff> 0 <scene_start> <empty> <scene_start> <empty>"),
            Err(CodecError::Grammar { position: 3, .. })
        ));
        assert!(matches!(
            parse("<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> hovercraft <scene_start> <empty>"),
            Err(CodecError::Grammar { position: 7, .. })
        ));
        assert!(matches!(
            parse("<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> <empty> <empty> <scene_start> <empty>"),
            Err(CodecError::Grammar { position: 8, .. })
        ));
        assert!(matches!(
            parse("<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> <empty> <scene_start> <empty> car"),
            Err(CodecError::Grammar { position: 10, .. })
        ));
        assert!(matches!(
            parse("<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> <empty> <scene_start>"),
            Err(CodecError::Grammar { position: 9, .. })
        ));
        assert!(matches!(
            TokenSequence::parse_text("car <extra_id_100>"),
            Err(CodecError::Grammar { position: 1, .. })
        ));
        assert!(matches!(TokenSequence::parse_text("<bogus>"), Err(CodecError::Grammar { .. })));
    }

    #[test]
    fn sentinels_surface_as_masked_cells() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let seq: TokenSequence = "<country> US <dist> 1.0 <orientation_diff> 0 <scene_start> \
             lane <col_sep> <extra_id_0> <scene_start> <extra_id_1> <col_sep> car"
            .parse()
            .unwrap();
        let pair = c.parse_sequence(&seq, &grid(1, 2)).unwrap();
        assert_eq!(pair.current.masked, [(CellIndex::new(1, 2), 0)]);
        assert_eq!(pair.next.masked, [(CellIndex::new(1, 1), 1)]);
        assert!(pair.current.matrix.get(CellIndex::new(1, 2)).is_empty());
    }

    #[test]
    fn render_target_examples() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let spans = SpanTargets::new(vec![set(&t, &["pedestrian crossing"]), set(&t, &["intersection"])]);
        assert_eq!(
            text(&c.render_targets(&spans).unwrap()),
            "<extra_id_0> pedestrian crossing <extra_id_1> intersection <extra_id_2>"
        );
        let spans = SpanTargets::new(vec![LabelSet::new()]);
        assert_eq!(text(&c.render_targets(&spans).unwrap()), "<extra_id_0> <empty> <extra_id_1>");
        let too_many = SpanTargets::new(vec![LabelSet::new(); 100]);
        assert_eq!(c.render_targets(&too_many), Err(CodecError::TooManySpans { count: 100 }));
    }

    #[test]
    fn lenient_target_parsing() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let parse = |s: &str, n: usize| c.parse_targets(&s.parse().unwrap(), n, ParseMode::Lenient);

        let p = parse("<extra_id_0> car", 2).unwrap();
        assert_eq!(p.targets.spans, [set(&t, &["car"]), LabelSet::new()]);
        assert!(p.truncated);
        assert!(p.flags[1].missing && !p.flags[0].missing);

        let p = parse("<extra_id_0> car <extra_id_1> lane <extra_id_2> bus rigid whatever", 2).unwrap();
        assert_eq!(p.targets.spans, [set(&t, &["car"]), set(&t, &["lane"])]);
        assert!(!p.truncated);

        let p = parse("<extra_id_0> car flying <concept_sep> walkway <extra_id_1> <empty> <extra_id_2>", 2)
            .unwrap();
        assert_eq!(p.targets.spans, [set(&t, &["car", "walkway"]), LabelSet::new()]);
        assert!(p.flags[0].dropped && !p.flags[1].dropped);

        // skipped sentinel and a repeated one
        let p = parse("<extra_id_0> car <extra_id_2> lane <extra_id_2> adult <extra_id_3>", 3).unwrap();
        assert_eq!(p.targets.spans, [set(&t, &["car"]), LabelSet::new(), set(&t, &["lane"])]);
        assert!(p.flags[1].missing && p.flags[2].dropped);

        // labels run together without separators
        let p = parse("<extra_id_0> lane walkway <extra_id_1>", 1).unwrap();
        assert_eq!(p.targets.spans, [set(&t, &["lane", "walkway"])]);

        assert_eq!(parse("car <extra_id_0>", 1), Err(CodecError::NoSentinels));
        assert_eq!(parse("<extra_id_0>", 0), Err(CodecError::InvalidSpanCount(0)));
    }

    #[test]
    fn strict_target_parsing() {
        let t = tax();
        let c = SceneCodec::new(&t);
        let parse = |s: &str, n: usize| c.parse_targets(&s.parse().unwrap(), n, ParseMode::Strict);
        let ok = parse("<extra_id_0> lane <concept_sep> car <extra_id_1> <empty> <extra_id_2>", 2).unwrap();
        assert_eq!(ok.targets.spans, [set(&t, &["lane", "car"]), LabelSet::new()]);
        assert!(!ok.truncated);
        assert!(matches!(parse("<extra_id_0> car", 2), Err(CodecError::Grammar { position: 2, .. })));
        assert!(matches!(
            parse("<extra_id_0> car <extra_id_1> junk <extra_id_2>", 2),
            Err(CodecError::Grammar { position: 3, .. })
        ));
        assert!(matches!(
            parse("<extra_id_0> car <extra_id_1> lane <extra_id_2> more", 2),
            Err(CodecError::Grammar { position: 5, .. })
        ));
        assert!(matches!(
            parse("<extra_id_0> <extra_id_1> lane <extra_id_2>", 2),
            Err(CodecError::Grammar { position: 1, .. })
        ));
    }
}
