use super::error::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
    Eq,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Fun,
    Case,
    Of,
    Let,
    In,
    End,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(v) => format!("number {v}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Fun => "`fun`".into(),
            Tok::Case => "`case`".into(),
            Tok::Of => "`of`".into(),
            Tok::Let => "`let`".into(),
            Tok::In => "`in`".into(),
            Tok::End => "`end`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let (tl, tc) = (line, col);
        let err = |msg: String| DslError::Syntax { line: tl, col: tc, msg };

        // (* comment *), possibly nested
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err("unterminated comment".into()));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }

        let tok = if c.is_ascii_digit() || (c == '~' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut text = String::new();
            if c == '~' {
                text.push('-');
                bump!();
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                text.push(chars[i]);
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                text.push('.');
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'E' || chars[i] == 'e') {
                text.push('e');
                bump!();
                if i < chars.len() && chars[i] == '~' {
                    text.push('-');
                    bump!();
                }
                if i >= chars.len() || !chars[i].is_ascii_digit() {
                    return Err(err("malformed exponent".into()));
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    bump!();
                }
            }
            let v: f64 = text
                .parse()
                .map_err(|_| err(format!("malformed number `{text}`")))?;
            Tok::Num(v)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                s.push(chars[i]);
                bump!();
            }
            match s.as_str() {
                "fun" => Tok::Fun,
                "case" => Tok::Case,
                "of" => Tok::Of,
                "let" => Tok::Let,
                "in" => Tok::In,
                "end" => Tok::End,
                _ => Tok::Ident(s),
            }
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '=' => {
                    if chars.get(i + 1) == Some(&'>') {
                        bump!();
                        Tok::Arrow
                    } else {
                        Tok::Eq
                    }
                }
                other => return Err(err(format!("unexpected character `{other}`"))),
            };
            bump!();
            t
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
