use std::fmt;

use num_bigint::BigInt;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    DoubleSlash,
    Pow,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Shl,
    Shr,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Int(v) => return write!(f, "{v}"),
            Token::Plus => "+",
            Token::Minus => "-",
            Token::Star => "*",
            Token::Slash => "/",
            Token::DoubleSlash => "//",
            Token::Pow => "**",
            Token::Lt => "<",
            Token::Gt => ">",
            Token::Le => "<=",
            Token::Ge => ">=",
            Token::EqEq => "==",
            Token::Ne => "!=",
            Token::Shl => "<<",
            Token::Shr => ">>",
            Token::LParen => "(",
            Token::RParen => ")",
        };
        f.write_str(s)
    }
}

/// Maximal-munch tokenizer. Multi-digit literals may not start with `0`, and
/// `=`/`!` are only legal as the first character of a two-character operator.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let next = bytes.get(i + 1).copied();
        let (token, width) = match c {
            b'0'..=b'9' => {
                let start = i;
                let mut end = i;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                if c == b'0' && end - start > 1 {
                    return Err(ParseError::new(start, "leading zero in integer literal"));
                }
                let value = BigInt::parse_bytes(&bytes[start..end], 10).expect("ascii digits");
                (Token::Int(value), end - start)
            }
            b'+' => (Token::Plus, 1),
            b'-' => (Token::Minus, 1),
            b'(' => (Token::LParen, 1),
            b')' => (Token::RParen, 1),
            b'*' => match next {
                Some(b'*') => (Token::Pow, 2),
                _ => (Token::Star, 1),
            },
            b'/' => match next {
                Some(b'/') => (Token::DoubleSlash, 2),
                _ => (Token::Slash, 1),
            },
            b'<' => match next {
                Some(b'<') => (Token::Shl, 2),
                Some(b'=') => (Token::Le, 2),
                _ => (Token::Lt, 1),
            },
            b'>' => match next {
                Some(b'>') => (Token::Shr, 2),
                Some(b'=') => (Token::Ge, 2),
                _ => (Token::Gt, 1),
            },
            b'=' => match next {
                Some(b'=') => (Token::EqEq, 2),
                _ => return Err(ParseError::new(i, "lone '='")),
            },
            b'!' => match next {
                Some(b'=') => (Token::Ne, 2),
                _ => return Err(ParseError::new(i, "lone '!'")),
            },
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(i, format!("unexpected character {ch:?}")));
            }
        };
        tokens.push(token);
        i += width;
    }
    Ok(tokens)
}
