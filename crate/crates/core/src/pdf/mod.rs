//! Story to PDF rendering.
//!
//! Output is an uncompressed PDF 1.4 file using the built-in Helvetica font
//! with WinAnsi encoding, laid out with a greedy word wrap against a fixed
//! width table. Identical inputs always produce identical bytes.

pub mod font;
mod writer;

use thiserror::Error;

use crate::catalog::Catalog;
use crate::story::Story;

#[derive(Debug, Clone, PartialEq)]
pub struct PdfLayout {
    pub page_width: f64,
    pub page_height: f64,
    pub margin: f64,
    pub title_font_size: f64,
    pub heading_font_size: f64,
    pub body_font_size: f64,
    /// Line advance as a multiple of the font size.
    pub line_height: f64,
}

impl Default for PdfLayout {
    fn default() -> Self {
        PdfLayout {
            page_width: 595.0,
            page_height: 842.0,
            margin: 56.0,
            title_font_size: 20.0,
            heading_font_size: 13.0,
            body_font_size: 11.0,
            line_height: 1.4,
        }
    }
}

impl PdfLayout {
    pub fn text_width(&self) -> f64 {
        self.page_width - 2.0 * self.margin
    }

    pub fn text_height(&self) -> f64 {
        self.page_height - 2.0 * self.margin
    }

    pub fn advance(&self, size: f64) -> f64 {
        size * self.line_height
    }

    /// Body lines that fit on an otherwise empty page.
    pub fn body_lines_per_page(&self) -> usize {
        (self.text_height() / self.advance(self.body_font_size)).floor() as usize
    }

    fn check(&self) -> Result<(), PdfError> {
        let sizes = [self.title_font_size, self.heading_font_size, self.body_font_size];
        let usable = |v: f64, min: f64| v.is_finite() && v >= min;
        if sizes.iter().any(|&s| !usable(s, f64::MIN_POSITIVE)) || !usable(self.line_height, 1.0) {
            return Err(PdfError::Layout("font sizes and line height must be positive".into()));
        }
        let tallest = sizes.iter().copied().fold(0.0, f64::max) * self.line_height;
        if !usable(self.text_width(), f64::MIN_POSITIVE) || self.text_height() < tallest {
            return Err(PdfError::Layout(format!(
                "no text fits: text area {:.2} x {:.2} pt",
                self.text_width(),
                self.text_height()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdfError {
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("layout error: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Title,
    Situation,
    Characters,
    Heading,
    Body,
}

/// One positioned line of WinAnsi-encoded text.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedLine {
    pub kind: LineKind,
    pub x: f64,
    pub baseline: f64,
    pub size: f64,
    pub width: f64,
    pub text: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaidOutStory {
    pub pages: Vec<Vec<PlacedLine>>,
    /// Characters that have no WinAnsi glyph and were drawn as "?".
    pub replaced_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderReport {
    pub pages: usize,
    pub replaced_chars: usize,
}

pub fn render_pdf(story: &Story, catalog: &Catalog, layout: &PdfLayout) -> Result<Vec<u8>, PdfError> {
    render_pdf_with_report(story, catalog, layout).map(|(bytes, _)| bytes)
}

pub fn render_pdf_with_report(
    story: &Story,
    catalog: &Catalog,
    layout: &PdfLayout,
) -> Result<(Vec<u8>, RenderReport), PdfError> {
    let laid_out = layout_story(story, catalog, layout)?;
    let (title, _) = encode(&story.title);
    let bytes = writer::write_document(&laid_out.pages, layout, &title);
    let report = RenderReport { pages: laid_out.pages.len(), replaced_chars: laid_out.replaced_chars };
    Ok((bytes, report))
}

/// Resolves catalog references and places every line on its page.
pub fn layout_story(story: &Story, catalog: &Catalog, layout: &PdfLayout) -> Result<LaidOutStory, PdfError> {
    layout.check()?;

    let situation = catalog
        .situation(story.situation_id)
        .ok_or_else(|| PdfError::UnresolvedReference(format!("situation {}", story.situation_id)))?;
    let names = story
        .character_ids
        .iter()
        .map(|&id| {
            catalog
                .character(id)
                .map(|c| c.name.as_str())
                .ok_or_else(|| PdfError::UnresolvedReference(format!("character {id}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sections = story
        .fragments
        .iter()
        .map(|f| {
            catalog
                .function(f.function_id)
                .map(|card| (card.title.as_str(), f.text.as_str()))
                .ok_or_else(|| PdfError::UnresolvedReference(format!("function {}", f.function_id)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut flow = Flow::new(layout);
    flow.paragraph(&story.title, LineKind::Title, layout.title_font_size)?;
    flow.gap(layout.advance(layout.body_font_size) * 0.5);
    flow.paragraph(&situation.title, LineKind::Situation, layout.heading_font_size)?;
    flow.paragraph(&names.join(", "), LineKind::Characters, layout.body_font_size)?;
    for (heading, text) in sections {
        flow.gap(layout.advance(layout.body_font_size) * 0.5);
        flow.paragraph(heading, LineKind::Heading, layout.heading_font_size)?;
        for para in text.split('\n') {
            flow.paragraph(para, LineKind::Body, layout.body_font_size)?;
        }
    }
    Ok(flow.finish())
}

/// Encodes to WinAnsi, replacing unsupported characters with "?".
fn encode(text: &str) -> (Vec<u8>, usize) {
    let mut replaced = 0;
    let bytes = text
        .chars()
        .map(|c| match c {
            '\t' | '\r' => b' ',
            c => font::encode_char(c).unwrap_or_else(|| {
                replaced += 1;
                b'?'
            }),
        })
        .collect();
    (bytes, replaced)
}

struct Flow<'a> {
    layout: &'a PdfLayout,
    pages: Vec<Vec<PlacedLine>>,
    /// Top of the next line, in page coordinates.
    cursor_y: f64,
    replaced: usize,
}

impl<'a> Flow<'a> {
    fn new(layout: &'a PdfLayout) -> Self {
        Flow { layout, pages: vec![Vec::new()], cursor_y: layout.page_height - layout.margin, replaced: 0 }
    }

    fn top(&self) -> f64 {
        self.layout.page_height - self.layout.margin
    }

    fn gap(&mut self, amount: f64) {
        if self.cursor_y < self.top() {
            self.cursor_y -= amount;
        }
    }

    fn paragraph(&mut self, text: &str, kind: LineKind, size: f64) -> Result<(), PdfError> {
        let (encoded, replaced) = encode(text);
        self.replaced += replaced;
        for line in wrap(&encoded, size, self.layout.text_width())? {
            self.place(line, kind, size);
        }
        Ok(())
    }

    fn place(&mut self, text: Vec<u8>, kind: LineKind, size: f64) {
        let advance = self.layout.advance(size);
        if self.cursor_y - advance < self.layout.margin - 1e-9 {
            self.pages.push(Vec::new());
            self.cursor_y = self.top();
        }
        let width = font::text_width(&text, size);
        self.pages.last_mut().expect("at least one page").push(PlacedLine {
            kind,
            x: self.layout.margin,
            baseline: self.cursor_y - size,
            size,
            width,
            text,
        });
        self.cursor_y -= advance;
    }

    fn finish(self) -> LaidOutStory {
        LaidOutStory { pages: self.pages, replaced_chars: self.replaced }
    }
}

/// Greedy word wrap. Words wider than the line are broken between glyphs.
/// Blank input yields no lines.
fn wrap(encoded: &[u8], size: f64, max_width: f64) -> Result<Vec<Vec<u8>>, PdfError> {
    let space = font::text_width(b" ", size);
    let mut lines = Vec::new();
    let mut current: Vec<u8> = Vec::new();
    let mut current_width = 0.0;

    for word in encoded.split(|&b| b == b' ').filter(|w| !w.is_empty()) {
        let word_width = font::text_width(word, size);
        if !current.is_empty() && current_width + space + word_width <= max_width {
            current.push(b' ');
            current.extend_from_slice(word);
            current_width += space + word_width;
            continue;
        }
        if !current.is_empty() {
            lines.push(std::mem::take(&mut current));
            current_width = 0.0;
        }
        if word_width <= max_width {
            current.extend_from_slice(word);
            current_width = word_width;
            continue;
        }
        for &b in word {
            let w = font::text_width(&[b], size);
            if w > max_width {
                return Err(PdfError::Layout(format!("glyph wider than the text area at {size} pt")));
            }
            if current_width + w > max_width {
                lines.push(std::mem::take(&mut current));
                current_width = 0.0;
            }
            current.push(b);
            current_width += w;
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::StoryFragment;
    use chrono::{TimeZone, Utc};

    fn story(fragments: Vec<(u32, &str)>) -> Story {
        Story {
            id: "6f1c2a56-2b7e-4d43-9d1a-0c4b8f7e3a21".into(),
            title: "Wonderful Story".into(),
            situation_id: 1,
            character_ids: vec![1, 3],
            fragments: fragments
                .into_iter()
                .map(|(function_id, text)| StoryFragment { function_id, text: text.into() })
                .collect(),
            created_at: Utc.with_ymd_and_hms(2024, 1, 31, 10, 0, 0).unwrap(),
            finalized: true,
        }
    }

    #[test]
    fn framing_and_determinism() {
        let c = Catalog::builtin();
        let s = story(vec![(1, "Había una vez (un príncipe)"), (3, "a\\b"), (10, "x"), (19, "fin")]);
        let a = render_pdf(&s, &c, &PdfLayout::default()).unwrap();
        let b = render_pdf(&s, &c, &PdfLayout::default()).unwrap();
        assert!(a.starts_with(b"%PDF-1.4"));
        assert!(a.ends_with(b"%%EOF"));
        assert_eq!(a, b);
    }

    #[test]
    fn empty_story_is_one_page_with_header_lines() {
        let c = Catalog::builtin();
        let laid = layout_story(&story(vec![]), &c, &PdfLayout::default()).unwrap();
        assert_eq!(laid.pages.len(), 1);
        let kinds: Vec<LineKind> = laid.pages[0].iter().map(|l| l.kind).collect();
        assert_eq!(kinds, [LineKind::Title, LineKind::Situation, LineKind::Characters]);
        assert_eq!(laid.pages[0][2].text, b"prince, donkey");
    }

    #[test]
    fn unresolved_references() {
        let c = Catalog::builtin();
        let mut s = story(vec![]);
        s.character_ids = vec![1, 99];
        assert_eq!(
            render_pdf(&s, &c, &PdfLayout::default()),
            Err(PdfError::UnresolvedReference("character 99".into()))
        );
        let mut s = story(vec![]);
        s.situation_id = 42;
        assert!(matches!(render_pdf(&s, &c, &PdfLayout::default()), Err(PdfError::UnresolvedReference(_))));
    }

    #[test]
    fn zero_area_page_is_layout_error() {
        let c = Catalog::builtin();
        let layout = PdfLayout { margin: 300.0, ..PdfLayout::default() };
        assert!(matches!(render_pdf(&story(vec![]), &c, &layout), Err(PdfError::Layout(_))));
    }

    #[test]
    fn unsupported_chars_are_counted() {
        let c = Catalog::builtin();
        let (_, report) =
            render_pdf_with_report(&story(vec![(2, "dragón 龍 and 🐉")]), &c, &PdfLayout::default()).unwrap();
        assert_eq!(report.replaced_chars, 2);
        assert_eq!(report.pages, 1);
    }

    #[test]
    fn wrap_respects_width() {
        let text = encode("the quick brown fox jumps over the lazy dog ").0.repeat(20);
        let lines = wrap(&text, 11.0, 200.0).unwrap();
        assert!(lines.len() > 1);
        for l in &lines {
            assert!(font::text_width(l, 11.0) <= 200.0);
        }
        let long_word = vec![b'W'; 100];
        let lines = wrap(&long_word, 11.0, 100.0).unwrap();
        assert_eq!(lines.iter().map(Vec::len).sum::<usize>(), 100);
        assert!(wrap(b"   ", 11.0, 100.0).unwrap().is_empty());
    }

    #[test]
    fn lines_stay_inside_margins() {
        let c = Catalog::builtin();
        let long = "palabra ".repeat(400);
        let frags: Vec<(u32, &str)> = (1..=31).map(|id| (id, long.as_str())).collect();
        let layout = PdfLayout::default();
        let laid = layout_story(&story(frags), &c, &layout).unwrap();
        assert!(laid.pages.len() > 5);
        for line in laid.pages.iter().flatten() {
            assert!(line.x >= layout.margin);
            assert!(line.x + line.width <= layout.page_width - layout.margin + 1e-9);
            assert!(line.baseline + line.size <= layout.page_height - layout.margin + 1e-9);
            assert!(line.baseline + line.size - layout.advance(line.size) >= layout.margin - 1e-9);
        }
    }
}
