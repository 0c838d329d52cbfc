use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::SyntaxError;
use crate::ast::Loc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `int_syntax` is false when the literal has a `.` or `/`.
    Number { value: BigRational, int_syntax: bool },
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Comma,
    Colon,
    Semi,
    Dot,
    Bang,
    Star,
    Amp,
    Plus,
    Bar,
    FatArrow,
    Lolli,
    Eq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { value, .. } => format!("number `{value}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Plus => "+",
            Tok::Bar => "|",
            Tok::FatArrow => "=>",
            Tok::Lolli => "-o",
            Tok::Eq => "=",
            Tok::Ident(_) => "identifier",
            Tok::Number { .. } => "number",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            out.push(Token { tok: Tok::Ident(s), loc });
            continue;
        }
        let negative_number = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_number {
            let tok = lex_number(&chars, &mut i).map_err(|m| SyntaxError::lex(loc, m))?;
            col += (i - start) as u32;
            out.push(Token { tok, loc });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "=>" => (Tok::FatArrow, 2),
            "-o" => (Tok::Lolli, 2),
            _ => {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    '!' => Tok::Bang,
                    '*' => Tok::Star,
                    '&' => Tok::Amp,
                    '+' => Tok::Plus,
                    '|' => Tok::Bar,
                    '=' => Tok::Eq,
                    _ => return Err(SyntaxError::lex(loc, format!("unexpected character `{c}`"))),
                };
                (t, 1)
            }
        };
        i += len;
        col += len as u32;
        out.push(Token { tok, loc });
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    Ok(out)
}

fn digits(chars: &[char], i: &mut usize) -> String {
    let start = *i;
    while *i < chars.len() && chars[*i].is_ascii_digit() {
        *i += 1;
    }
    chars[start..*i].iter().collect()
}

fn lex_number(chars: &[char], i: &mut usize) -> Result<Tok, String> {
    let negative = chars[*i] == '-';
    if negative {
        *i += 1;
    }
    let whole = digits(chars, i);
    let mut value = BigRational::from_integer(whole.parse::<BigInt>().map_err(|e| e.to_string())?);
    let mut int_syntax = true;
    if *i + 1 < chars.len() && chars[*i] == '.' && chars[*i + 1].is_ascii_digit() {
        *i += 1;
        let frac = digits(chars, i);
        let num: BigInt = frac.parse().map_err(|e: num_bigint::ParseBigIntError| e.to_string())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        value += BigRational::new(num, den);
        int_syntax = false;
    }
    if *i + 1 < chars.len() && chars[*i] == '/' && chars[*i + 1].is_ascii_digit() {
        *i += 1;
        let den_s = digits(chars, i);
        let den: BigInt = den_s.parse().map_err(|e: num_bigint::ParseBigIntError| e.to_string())?;
        if den.is_zero() {
            return Err("zero denominator in numeric literal".into());
        }
        value /= BigRational::from_integer(den);
        int_syntax = false;
    }
    if negative {
        value = -value;
    }
    debug_assert!(!value.denom().is_zero() && value.denom() >= &BigInt::one());
    Ok(Tok::Number { value, int_syntax })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lollipop_versus_negative_number() {
        assert_eq!(toks("-o")[0], Tok::Lolli);
        assert!(matches!(&toks("-3")[0], Tok::Number { int_syntax: true, .. }));
    }

    #[test]
    fn numeric_forms() {
        match &toks("0.25")[0] {
            Tok::Number { value, int_syntax } => {
                assert_eq!(value, &BigRational::new(1.into(), 4.into()));
                assert!(!int_syntax);
            }
            t => panic!("{t:?}"),
        }
        match &toks("1/3")[0] {
            Tok::Number { value, .. } => assert_eq!(value, &BigRational::new(1.into(), 3.into())),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn comments_and_positions() {
        let ts = lex("// hi\n  x").unwrap();
        assert_eq!(ts[0].loc, Loc::new(2, 3));
    }

    #[test]
    fn primes_in_identifiers() {
        assert_eq!(toks("i'2")[0], Tok::Ident("i'2".into()));
    }
}
