use std::net::Ipv4Addr;

use thiserror::Error;

use super::ast::{Action, Condition, Field, Metric, Op, PolicyRule, Value};
use crate::simcore::{Ipv4Net, Role};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected character '{0}'")]
    BadChar(char),
    #[error("unterminated argument list")]
    UnterminatedArgs,
    #[error("invalid argument '{0}'")]
    BadArgument(String),
    #[error("DSCP {0} out of range")]
    DscpOutOfRange(String),
    #[error("invalid byte value '{0}'")]
    BadByte(String),
    #[error("invalid address '{0}'")]
    BadAddress(String),
    #[error("invalid number '{0}'")]
    BadNumber(String),
    #[error("CIDR value cannot be used with relational operator {0}")]
    CidrWithRelational(Op),
    #[error("QUEUE priority must be between 1 and 255")]
    BadQueuePriority,
    #[error("POLICE rate must be positive")]
    ZeroRate,
    #[error("target {0} set twice")]
    DuplicateTarget(Role),
    #[error("action {action} is enforced at {needed}, not {target}")]
    TargetMismatch { action: String, needed: Role, target: Role },
    #[error("duplicate rule id '{0}'")]
    DuplicateId(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Op(Op),
    Colon,
    At,
    Assign,
    Percent,
    Args(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Op(op) => format!("'{op}'"),
            Tok::Colon => "':'".into(),
            Tok::At => "'@'".into(),
            Tok::Assign => "'='".into(),
            Tok::Percent => "'%'".into(),
            Tok::Args(a) => format!("'({a})'"),
            Tok::Eof => "end of rule".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | '/')
}

fn lex(text: &str, first_line: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, first_line, 1);
    let err = |line, col, kind| ParseError { line, col, kind };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let (tok, len) = match two.as_str() {
            "==" => (Tok::Op(Op::Eq), 2),
            "!=" => (Tok::Op(Op::Ne), 2),
            "<=" => (Tok::Op(Op::Le), 2),
            ">=" => (Tok::Op(Op::Ge), 2),
            _ => match c {
                '<' => (Tok::Op(Op::Lt), 1),
                '>' => (Tok::Op(Op::Gt), 1),
                '=' => (Tok::Assign, 1),
                ':' => (Tok::Colon, 1),
                '@' => (Tok::At, 1),
                '%' => (Tok::Percent, 1),
                '(' => {
                    let mut j = i + 1;
                    let mut arg = String::new();
                    while j < chars.len() && chars[j] != ')' {
                        if chars[j] == '\n' || chars[j] == '(' {
                            return Err(err(tl, tc, ParseErrorKind::UnterminatedArgs));
                        }
                        if !chars[j].is_whitespace() {
                            arg.push(chars[j]);
                        }
                        j += 1;
                    }
                    if j == chars.len() {
                        return Err(err(tl, tc, ParseErrorKind::UnterminatedArgs));
                    }
                    (Tok::Args(arg), j + 1 - i)
                }
                c if is_word_char(c) => {
                    let mut j = i;
                    while j < chars.len() && is_word_char(chars[j]) {
                        j += 1;
                    }
                    (Tok::Word(chars[i..j].iter().collect()), j - i)
                }
                c => return Err(err(tl, tc, ParseErrorKind::BadChar(c))),
            },
        };
        out.push(Token { tok, line: tl, col: tc });
        i += len;
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        Self::error_at(
            t,
            ParseErrorKind::Unexpected {
                expected: expected.to_string(),
                found: t.tok.describe(),
            },
        )
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    fn word(&mut self, expected: &str) -> Result<(String, Token), ParseError> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let w = w.clone();
                Ok((w, self.bump()))
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn integer<T: std::str::FromStr>(&mut self, expected: &str) -> Result<(T, Token), ParseError> {
        let (w, t) = self.word(expected)?;
        w.parse::<T>()
            .map(|v| (v, t.clone()))
            .map_err(|_| Self::error_at(&t, ParseErrorKind::BadNumber(w)))
    }

    fn rule(&mut self) -> Result<PolicyRule, ParseError> {
        let mut id = String::new();
        if let (Tok::Word(w), Tok::Colon) = (self.peek_at(0), self.peek_at(1)) {
            id = w.clone();
            self.bump();
            self.bump();
        }
        let mut target: Option<(Role, Token)> = None;
        let mut priority = 0u16;
        while matches!(self.peek().tok, Tok::At) {
            self.bump();
            let (w, t) = self.word("'edge', 'core' or 'priority'")?;
            let role = match w.to_ascii_lowercase().as_str() {
                "edge" => Role::Edge,
                "core" => Role::Core,
                "priority" => {
                    if !matches!(self.peek().tok, Tok::Assign) {
                        return Err(self.unexpected("'='"));
                    }
                    self.bump();
                    let (p, t) = self.integer::<u16>("rule priority")?;
                    if p == u16::MAX {
                        return Err(Self::error_at(&t, ParseErrorKind::BadNumber(p.to_string())));
                    }
                    priority = p;
                    continue;
                }
                _ => {
                    return Err(Self::error_at(
                        &t,
                        ParseErrorKind::Unexpected {
                            expected: "'edge', 'core' or 'priority'".into(),
                            found: format!("'{w}'"),
                        },
                    ))
                }
            };
            if target.is_some() {
                return Err(Self::error_at(&t, ParseErrorKind::DuplicateTarget(role)));
            }
            target = Some((role, t));
        }
        self.expect_keyword("if")?;
        let mut conditions = vec![self.condition()?];
        while self.eat_keyword("and") {
            conditions.push(self.condition()?);
        }
        let mut actions = Vec::new();
        let mut action_toks = Vec::new();
        loop {
            if matches!(self.peek().tok, Tok::Eof) && !actions.is_empty() {
                break;
            }
            action_toks.push(self.peek().clone());
            actions.push(self.action()?);
        }
        let target = self.resolve_target(target.map(|t| t.0), &actions, &action_toks)?;
        Ok(PolicyRule {
            id,
            target,
            conditions,
            actions,
            priority,
        })
    }

    fn resolve_target(&self, annotated: Option<Role>, actions: &[Action], toks: &[Token]) -> Result<Role, ParseError> {
        let mut target = annotated;
        for (a, t) in actions.iter().zip(toks) {
            let Some(needed) = a.enforced_at() else {
                continue;
            };
            match target {
                None => target = Some(needed),
                Some(tr) if tr != needed => {
                    return Err(Self::error_at(
                        t,
                        ParseErrorKind::TargetMismatch {
                            action: a.to_string(),
                            needed,
                            target: tr,
                        },
                    ))
                }
                _ => {}
            }
        }
        Ok(target.unwrap_or(Role::Edge))
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let (name, t) = self.word("condition field")?;
        let lhs = match name.to_ascii_lowercase().as_str() {
            "src.ip" => Field::SrcIp,
            "dst.ip" => Field::DstIp,
            "dscp" => Field::Dscp,
            "tos" => Field::Tos,
            m @ ("link.util" | "link.bw" | "probe.loss" | "probe.delay") => {
                let at = self.peek().clone();
                let Tok::Args(arg) = at.tok.clone() else {
                    return Err(self.unexpected("'(' argument list"));
                };
                self.bump();
                if arg.is_empty() || !valid_metric_arg(m, &arg) {
                    return Err(Self::error_at(&at, ParseErrorKind::BadArgument(arg)));
                }
                Field::Metric(match m {
                    "link.util" => Metric::LinkUtil(arg),
                    "link.bw" => Metric::LinkBw(arg),
                    "probe.loss" => Metric::ProbeLoss(arg),
                    _ => Metric::ProbeDelay(arg),
                })
            }
            _ => {
                return Err(Self::error_at(
                    &t,
                    ParseErrorKind::Unexpected {
                        expected: "condition field".into(),
                        found: format!("'{name}'"),
                    },
                ))
            }
        };
        let op = match self.peek().tok {
            Tok::Op(op) => {
                self.bump();
                op
            }
            _ => return Err(self.unexpected("comparison operator")),
        };
        let (text, vt) = self.word("value")?;
        let rhs = match &lhs {
            Field::SrcIp | Field::DstIp => {
                if op.is_relational() {
                    return Err(Self::error_at(&vt, ParseErrorKind::CidrWithRelational(op)));
                }
                Value::Net(
                    parse_prefix(&text).ok_or_else(|| Self::error_at(&vt, ParseErrorKind::BadAddress(text.clone())))?,
                )
            }
            Field::Dscp => {
                let v = parse_byte_value(&text)
                    .ok_or_else(|| Self::error_at(&vt, ParseErrorKind::BadByte(text.clone())))?;
                if v > 63 {
                    return Err(Self::error_at(&vt, ParseErrorKind::DscpOutOfRange(text)));
                }
                Value::Byte(v as u8)
            }
            Field::Tos => {
                let v = parse_byte_value(&text)
                    .filter(|v| *v <= 255)
                    .ok_or_else(|| Self::error_at(&vt, ParseErrorKind::BadByte(text.clone())))?;
                Value::Byte(v as u8)
            }
            Field::Metric(m) => {
                let x = text
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Self::error_at(&vt, ParseErrorKind::BadNumber(text.clone())))?;
                if matches!(self.peek().tok, Tok::Percent) && matches!(m, Metric::LinkUtil(_) | Metric::ProbeLoss(_)) {
                    self.bump();
                }
                // -0 would render as "-0" and still compare equal; keep it canonical
                Value::Number(if x == 0.0 { 0.0 } else { x })
            }
        };
        Ok(Condition { lhs, op, rhs })
    }

    fn action(&mut self) -> Result<Action, ParseError> {
        let (verb, t) = self.word("action (MARK, QUEUE, POLICE, ADMIT or DENY)")?;
        match verb.to_ascii_lowercase().as_str() {
            "mark" => {
                self.eat_keyword("packets");
                self.eat_keyword("with");
                self.expect_keyword("dscp")?;
                self.optional_eq();
                let (text, vt) = self.word("DSCP value")?;
                let v = parse_byte_value(&text)
                    .ok_or_else(|| Self::error_at(&vt, ParseErrorKind::BadByte(text.clone())))?;
                if v > 63 {
                    return Err(Self::error_at(&vt, ParseErrorKind::DscpOutOfRange(text)));
                }
                Ok(Action::Mark { dscp: v as u8 })
            }
            "queue" => {
                self.eat_keyword("packets");
                self.eat_keyword("with");
                self.expect_keyword("priority")?;
                self.optional_eq();
                let (text, vt) = self.word("queue priority")?;
                match text.parse::<u8>() {
                    Ok(p) if p >= 1 => Ok(Action::Queue { priority: p }),
                    _ => Err(Self::error_at(&vt, ParseErrorKind::BadQueuePriority)),
                }
            }
            "police" => {
                self.eat_keyword("packets");
                self.eat_keyword("with");
                self.expect_keyword("rate")?;
                let (rate_bps, rt) = self.integer::<u64>("rate in bit/s")?;
                if rate_bps == 0 {
                    return Err(Self::error_at(&rt, ParseErrorKind::ZeroRate));
                }
                self.expect_keyword("burst")?;
                let (burst_bytes, _) = self.integer::<u64>("burst in bytes")?;
                Ok(Action::Police { rate_bps, burst_bytes })
            }
            "admit" => Ok(Action::Admit),
            "deny" => Ok(Action::Deny),
            _ => Err(Self::error_at(
                &t,
                ParseErrorKind::Unexpected {
                    expected: "action (MARK, QUEUE, POLICE, ADMIT or DENY)".into(),
                    found: format!("'{verb}'"),
                },
            )),
        }
    }

    fn optional_eq(&mut self) {
        if matches!(self.peek().tok, Tok::Op(Op::Eq)) {
            self.bump();
        }
    }
}

fn valid_metric_arg(metric: &str, arg: &str) -> bool {
    if metric.starts_with("link") {
        matches!(arg.split_once(':'), Some((n, i)) if !n.is_empty() && !i.is_empty())
    } else {
        matches!(arg.split_once("->"), Some((a, b)) if !a.is_empty() && !b.is_empty())
    }
}

/// `a.b.c.d`, `a.b.c.d/len` or `a.b.c.X` (the enclosing /24).
pub fn parse_prefix(text: &str) -> Option<Ipv4Net> {
    if let Some(head) = text.strip_suffix(".X").or_else(|| text.strip_suffix(".x")) {
        let addr: Ipv4Addr = format!("{head}.0").parse().ok()?;
        return Ipv4Net::new(addr, 24).ok();
    }
    text.parse().ok()
}

/// Hex (`0x2e`) or decimal byte-sized value.
fn parse_byte_value(text: &str) -> Option<u32> {
    let lower = text.to_ascii_lowercase();
    match lower.strip_prefix("0x") {
        Some(hex) if !hex.is_empty() && hex.len() <= 4 => u32::from_str_radix(hex, 16).ok(),
        Some(_) => None,
        None if !lower.is_empty() && lower.len() <= 4 => lower.parse().ok(),
        None => None,
    }
}

fn parse_at(text: &str, first_line: usize) -> Result<PolicyRule, ParseError> {
    let toks = lex(text, first_line)?;
    let mut p = Parser { toks, pos: 0 };
    let rule = p.rule()?;
    if !matches!(p.peek().tok, Tok::Eof) {
        return Err(p.unexpected("end of rule"));
    }
    Ok(rule)
}

pub fn parse_rule(text: &str) -> Result<PolicyRule, ParseError> {
    parse_at(text, 1)
}

/// Parses a policy file: one rule per line, `#` comments, blank lines
/// ignored. Unlabelled rules get the id `rule{n}` (1-based rule index).
pub fn parse_policy_file(text: &str) -> Result<Vec<PolicyRule>, ParseError> {
    let mut rules: Vec<PolicyRule> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let code = line.split('#').next().unwrap_or("");
        if code.trim().is_empty() {
            continue;
        }
        let mut rule = parse_at(code, i + 1)?;
        if rule.id.is_empty() {
            rule.id = format!("rule{}", rules.len() + 1);
        }
        if rules.iter().any(|r| r.id == rule.id) {
            return Err(ParseError {
                line: i + 1,
                col: 1,
                kind: ParseErrorKind::DuplicateId(rule.id),
            });
        }
        rules.push(rule);
    }
    Ok(rules)
}
