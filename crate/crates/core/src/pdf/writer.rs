use std::fmt::Write as _;
use std::io::Write as _;

use super::font::BASE_FONT;
use super::{PdfLayout, PlacedLine};

const CATALOG_ID: usize = 1;
const PAGES_ID: usize = 2;
const FONT_ID: usize = 3;
const INFO_ID: usize = 4;
const FIRST_PAGE_ID: usize = 5;

/// Serializes laid-out pages. Object numbering: catalog, page tree, font,
/// info, then a (page, content stream) pair per page.
pub(super) fn write_document(pages: &[Vec<PlacedLine>], layout: &PdfLayout, title: &[u8]) -> Vec<u8> {
    let mut objects: Vec<Vec<u8>> = Vec::with_capacity(FIRST_PAGE_ID - 1 + 2 * pages.len());

    let kids: Vec<String> = (0..pages.len()).map(|i| format!("{} 0 R", page_id(i))).collect();
    objects.push(format!("<< /Type /Catalog /Pages {PAGES_ID} 0 R >>").into_bytes());
    objects.push(format!("<< /Type /Pages /Kids [{}] /Count {} >>", kids.join(" "), pages.len()).into_bytes());
    objects.push(
        format!("<< /Type /Font /Subtype /Type1 /BaseFont /{BASE_FONT} /Encoding /WinAnsiEncoding >>")
            .into_bytes(),
    );
    let mut info = b"<< /Title ".to_vec();
    push_string(&mut info, title);
    info.extend_from_slice(b" /Producer (cuentoterapp) >>");
    objects.push(info);

    for (i, lines) in pages.iter().enumerate() {
        objects.push(
            format!(
                "<< /Type /Page /Parent {PAGES_ID} 0 R /MediaBox [0 0 {} {}] \
                 /Resources << /Font << /F1 {FONT_ID} 0 R >> >> /Contents {} 0 R >>",
                num(layout.page_width),
                num(layout.page_height),
                page_id(i) + 1
            )
            .into_bytes(),
        );
        let content = content_stream(lines);
        let mut stream = format!("<< /Length {} >>\nstream\n", content.len()).into_bytes();
        stream.extend_from_slice(&content);
        stream.extend_from_slice(b"\nendstream");
        objects.push(stream);
    }

    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(b"%PDF-1.4\n%\xE2\xE3\xCF\xD3\n");
    let mut offsets = Vec::with_capacity(objects.len());
    for (i, body) in objects.iter().enumerate() {
        offsets.push(out.len());
        writeln!(out, "{} 0 obj", i + 1).unwrap();
        out.extend_from_slice(body);
        out.extend_from_slice(b"\nendobj\n");
    }

    let xref_at = out.len();
    write!(out, "xref\n0 {}\n0000000000 65535 f \n", objects.len() + 1).unwrap();
    for off in offsets {
        writeln!(out, "{off:010} 00000 n ").unwrap();
    }
    write!(
        out,
        "trailer\n<< /Size {} /Root {CATALOG_ID} 0 R /Info {INFO_ID} 0 R >>\nstartxref\n{xref_at}\n%%EOF",
        objects.len() + 1
    )
    .unwrap();
    out
}

fn page_id(index: usize) -> usize {
    FIRST_PAGE_ID + 2 * index
}

fn content_stream(lines: &[PlacedLine]) -> Vec<u8> {
    let mut out = Vec::new();
    for line in lines {
        let mut head = String::new();
        write!(head, "BT /F1 {} Tf {} {} Td ", num(line.size), num(line.x), num(line.baseline)).unwrap();
        out.extend_from_slice(head.as_bytes());
        push_string(&mut out, &line.text);
        out.extend_from_slice(b" Tj ET\n");
    }
    out
}

/// Literal string with `(`, `)` and `\` escaped; bytes outside printable
/// ASCII as octal escapes.
fn push_string(out: &mut Vec<u8>, text: &[u8]) {
    out.push(b'(');
    for &b in text {
        match b {
            b'(' | b')' | b'\\' => {
                out.push(b'\\');
                out.push(b);
            }
            0x20..=0x7E => out.push(b),
            _ => out.extend_from_slice(format!("\\{b:03o}").as_bytes()),
        }
    }
    out.push(b')');
}

/// Fixed-point number with at most two decimals, trailing zeros trimmed.
fn num(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}
