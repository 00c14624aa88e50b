use thiserror::Error;

use super::{Entry, Pda};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no rows found")]
    Empty,
    #[error("invalid token {text:?} at row {row}, token {token} (line {line})")]
    InvalidToken { row: usize, token: usize, line: usize, text: String },
    #[error("row {row} (line {line}) has {found} tokens, expected {expected}")]
    Ragged { row: usize, line: usize, expected: usize, found: usize },
}

/// Parses whitespace-separated rows of `*` and positive integers. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_pda(text: &str) -> Result<Vec<Vec<Entry>>, ParseError> {
    let mut grid: Vec<Vec<Entry>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = grid.len() + 1;
        let entries = trimmed
            .split_whitespace()
            .enumerate()
            .map(|(i, tok)| parse_token(tok).ok_or_else(|| ParseError::InvalidToken {
                row,
                token: i + 1,
                line: line_no + 1,
                text: tok.to_string(),
            }))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = grid.first() {
            if first.len() != entries.len() {
                return Err(ParseError::Ragged {
                    row,
                    line: line_no + 1,
                    expected: first.len(),
                    found: entries.len(),
                });
            }
        }
        grid.push(entries);
    }
    if grid.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(grid)
}

fn parse_token(tok: &str) -> Option<Entry> {
    if tok == "*" {
        return Some(Entry::Star);
    }
    if !tok.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match tok.parse::<usize>() {
        Ok(0) | Err(_) => None,
        Ok(s) => Some(Entry::Int(s)),
    }
}

/// One line per row, entries separated by single spaces.
pub fn serialize_pda(pda: &Pda) -> String {
    let mut out = String::new();
    for line in pda.grid() {
        let tokens: Vec<String> = line.iter().map(Entry::to_string).collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pda::{generate_mn_pda, validate};
    use proptest::prelude::*;

    const P1: &str = "# P1\n*  * * 1 2\n* 1 2 * *\n\n1 * 3 * 4\n2 3 * 4 *\n";

    #[test]
    fn two_by_two() {
        let grid = parse_pda("* 1\n1 *").unwrap();
        assert_eq!(validate(grid).unwrap().params(), (2, 2, 1, 1));
    }

    #[test]
    fn p1_round_trip_normalises_whitespace() {
        let p = validate(parse_pda(P1).unwrap()).unwrap();
        assert_eq!(serialize_pda(&p), "* * * 1 2\n* 1 2 * *\n1 * 3 * 4\n2 3 * 4 *\n");
        assert_eq!(validate(parse_pda(&serialize_pda(&p)).unwrap()).unwrap(), p);
    }

    #[test]
    fn invalid_token_position() {
        assert_eq!(
            parse_pda("* x"),
            Err(ParseError::InvalidToken { row: 1, token: 2, line: 1, text: "x".into() })
        );
        assert!(matches!(parse_pda("* 0"), Err(ParseError::InvalidToken { token: 2, .. })));
        assert!(matches!(parse_pda("* -1"), Err(ParseError::InvalidToken { .. })));
    }

    #[test]
    fn ragged_and_empty() {
        assert!(matches!(parse_pda("* 1\n1"), Err(ParseError::Ragged { row: 2, .. })));
        assert_eq!(parse_pda(""), Err(ParseError::Empty));
        assert_eq!(parse_pda("# only a comment\n\n"), Err(ParseError::Empty));
    }

    proptest! {
        #[test]
        fn generated_arrays_round_trip(k in 2usize..=6, t in 1usize..6) {
            prop_assume!(t < k);
            let p = generate_mn_pda(k, t).unwrap();
            let back = validate(parse_pda(&serialize_pda(&p)).unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
