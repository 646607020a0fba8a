//! Plain-text token dumps: a `#` header naming the stream and token-table
//! version, then one `value id position` triple per line.

use std::fmt::Write as _;

use super::{TokenError, TokenTriple};

pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Primitive,
    Constraint,
}

impl StreamKind {
    fn name(self) -> &'static str {
        match self {
            Self::Primitive => "primitive",
            Self::Constraint => "constraint",
        }
    }
}

pub fn write_dump(stream: StreamKind, tokens: &[TokenTriple]) -> String {
    let mut out = format!("# sketchforge-tokens v{DUMP_VERSION} stream={}\n", stream.name());
    for t in tokens {
        let _ = writeln!(out, "{} {} {}", t.value, t.id, t.position);
    }
    out
}

/// Parses a dump; the header is optional, blank lines are skipped.
pub fn read_dump(text: &str) -> Result<(Option<StreamKind>, Vec<TokenTriple>), TokenError> {
    let mut stream = None;
    let mut tokens = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if header.contains("stream=primitive") {
                stream = Some(StreamKind::Primitive);
            } else if header.contains("stream=constraint") {
                stream = Some(StreamKind::Constraint);
            }
            continue;
        }
        let nums: Vec<u32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| TokenError::malformed(tokens.len(), format!("line {}: not an integer triple", ln + 1)))?;
        match nums[..] {
            [value, id, position] => tokens.push(TokenTriple { value, id, position }),
            _ => return Err(TokenError::malformed(tokens.len(), format!("line {}: expected 3 fields", ln + 1))),
        }
    }
    Ok((stream, tokens))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_format() {
        let toks = [TokenTriple::start(), TokenTriple::new(5, 1, 1), TokenTriple::stop()];
        let text = write_dump(StreamKind::Primitive, &toks);
        assert_eq!(text, "# sketchforge-tokens v1 stream=primitive\n1 0 0\n5 1 1\n2 0 0\n");
        let (kind, back) = read_dump(&text).unwrap();
        assert_eq!(kind, Some(StreamKind::Primitive));
        assert_eq!(back, toks);
        assert!(read_dump("1 2\n").is_err());
        assert!(read_dump("a b c\n").is_err());
    }
}
