use super::ast::Loc;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    // keywords
    Class,
    Opaque,
    If,
    Else,
    While,
    Return,
    Assert,
    New,
    Null,
    True,
    False,
    This,
    Void,
    IntTy,
    BoolTy,
    StringTy,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Class => "class",
            Tok::Opaque => "opaque",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Assert => "assert",
            Tok::New => "new",
            Tok::Null => "null",
            Tok::True => "true",
            Tok::False => "false",
            Tok::This => "this",
            Tok::Void => "void",
            Tok::IntTy => "int",
            Tok::BoolTy => "bool",
            Tok::StringTy => "String",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "class" => Tok::Class,
        "opaque" => Tok::Opaque,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "return" => Tok::Return,
        "assert" => Tok::Assert,
        "new" => Tok::New,
        "null" => Tok::Null,
        "true" => Tok::True,
        "false" => Tok::False,
        "this" => Tok::This,
        "void" => Tok::Void,
        "int" => Tok::IntTy,
        "bool" => Tok::BoolTy,
        "String" => Tok::StringTy,
        _ => return None,
    })
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = source.chars().collect();
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
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let tok = keyword(&word).unwrap_or(Tok::Ident(word));
            out.push(Token { tok, loc });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let n = digits
                .parse::<i64>()
                .map_err(|_| ParseError::new(loc, format!("integer literal `{digits}` out of range")))?;
            out.push(Token { tok: Tok::Int(n), loc });
            continue;
        }
        if c == '"' {
            i += 1;
            col += 1;
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(ParseError::new(loc, "unterminated string literal"));
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => {
                                return Err(ParseError::new(
                                    Loc::new(line, col),
                                    "unknown escape sequence",
                                ))
                            }
                        };
                        text.push(esc);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(text), loc });
            continue;
        }

        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::NotEq, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            ('=', _) => (Tok::Assign, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('%', _) => (Tok::Percent, 1),
            ('!', _) => (Tok::Bang, 1),
            _ => return Err(ParseError::new(loc, format!("unexpected character `{c}`"))),
        };
        out.push(Token { tok, loc });
        i += width;
        col += width as u32;
    }

    out.push(Token { tok: Tok::Eof, loc: Loc::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn comments_and_whitespace_are_skipped() {
        assert_eq!(
            kinds("a // comment\n  == b"),
            vec![Tok::Ident("a".into()), Tok::EqEq, Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn locations_are_one_based() {
        let toks = tokenize("x\n  y").unwrap();
        assert_eq!(toks[0].loc, Loc::new(1, 1));
        assert_eq!(toks[1].loc, Loc::new(2, 3));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a\"b""#), vec![Tok::Str("a\"b".into()), Tok::Eof]);
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn integer_overflow_is_rejected() {
        assert!(tokenize("99999999999999999999").is_err());
    }
}
