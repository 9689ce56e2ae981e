use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// `%name`, `%atom`
    Directive(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Hole,
    Comma,
    Slash,
    Arrow,
    Star,
    Turnstile,
    Step,
    Subtype,
    Lt,
    Gt,
    JoinOp,
    MeetOp,
    Eq,
    Colon,
    Defines,
    Bar,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Directive(s) => return write!(f, "`%{s}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Hole => "`[.]`",
            Tok::Comma => "`,`",
            Tok::Slash => "`/`",
            Tok::Arrow => "`->`",
            Tok::Star => "`*`",
            Tok::Turnstile => "`|-`",
            Tok::Step => "`-->`",
            Tok::Subtype => "`<:`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::JoinOp => "`\\/`",
            Tok::MeetOp => "`/\\`",
            Tok::Eq => "`=`",
            Tok::Colon => "`:`",
            Tok::Defines => "`::=`",
            Tok::Bar => "`|`",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based column.
    pub column: usize,
    /// Whitespace (or line start) precedes the token.
    pub spaced: bool,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Tokenize one line (comments already stripped). On failure returns the
/// column of the offending character.
pub(crate) fn tokenize(line: &str, first_column: usize) -> Result<Vec<Token>, (usize, char)> {
    const SYMBOLS: &[(&str, Tok)] = &[
        ("::=", Tok::Defines),
        ("-->", Tok::Step),
        ("[.]", Tok::Hole),
        ("->", Tok::Arrow),
        ("|-", Tok::Turnstile),
        ("<:", Tok::Subtype),
        ("\\/", Tok::JoinOp),
        ("/\\", Tok::MeetOp),
        ("(", Tok::LParen),
        (")", Tok::RParen),
        ("[", Tok::LBrack),
        ("]", Tok::RBrack),
        (",", Tok::Comma),
        ("/", Tok::Slash),
        ("*", Tok::Star),
        ("<", Tok::Lt),
        (">", Tok::Gt),
        ("=", Tok::Eq),
        (":", Tok::Colon),
        ("|", Tok::Bar),
    ];
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut spaced = true;
    'outer: while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            spaced = true;
            i += 1;
            continue;
        }
        let column = first_column + i;
        if is_ident_start(c) || (c == '%' && chars.get(i + 1).is_some_and(|&d| is_ident_start(d))) {
            let start = if c == '%' { i + 1 } else { i };
            let mut j = start + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = if c == '%' { Tok::Directive(word) } else { Tok::Ident(word) };
            out.push(Token { tok, column, spaced });
            spaced = false;
            i = j;
            continue;
        }
        for (text, tok) in SYMBOLS {
            let n = text.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(text.chars()) {
                out.push(Token { tok: tok.clone(), column, spaced });
                spaced = false;
                i += n;
                continue 'outer;
            }
        }
        return Err((column, c));
    }
    Ok(out)
}
