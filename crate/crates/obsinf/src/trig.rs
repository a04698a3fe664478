//! Text form of trigonometric observables.
//!
//! ```text
//! observable := term (';' term)*
//! term       := amp ('@' mode (',' mode)*)?
//!             | (amp '*')? named '(' site ')'
//! named      := cos_q | sin_q | cos_p | sin_p
//! amp        := real | '(' real ',' real ')'
//! mode       := site ':' '(' int ',' int ')'
//! ```
//!
//! A mode `x:(m,n)` stands for `exp(i (m q_x + n p_x))`; a term without
//! modes is a constant. `0.5 @ 1:(1,0); 0.5 @ 1:(-1,0)` is `cos q₁`, as is
//! `cos_q(1)`.

use num_complex::Complex64;
use obsinf_core::classical::{Frequency, TrigObservable};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn error(&self, msg: &str) -> String {
        format!("{msg} at offset {}", self.pos)
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid number '{text}' at offset {start}"))
    }

    fn integer(&mut self) -> Result<i64, String> {
        let v = self.number()?;
        if v.fract() != 0.0 || v.abs() > 1e15 {
            return Err(self.error("expected an integer"));
        }
        Ok(v as i64)
    }

    fn site(&mut self) -> Result<usize, String> {
        let v = self.integer()?;
        if v < 1 {
            return Err(self.error("sites are numbered from 1"));
        }
        Ok(v as usize)
    }

    fn amp(&mut self) -> Result<Complex64, String> {
        if self.eat('(') {
            let re = self.number()?;
            self.expect(',')?;
            let im = self.number()?;
            self.expect(')')?;
            Ok(Complex64::new(re, im))
        } else {
            Ok(Complex64::new(self.number()?, 0.0))
        }
    }
}

fn named(name: &str, site: usize) -> Option<TrigObservable> {
    let f = match name {
        "cos_q" => TrigObservable::cos_q(site),
        "sin_q" => TrigObservable::sin_q(site),
        "cos_p" => TrigObservable::cos_p(site),
        "sin_p" => TrigObservable::sin_p(site),
        _ => return None,
    };
    f.ok()
}

fn term(cur: &mut Cursor) -> Result<TrigObservable, String> {
    cur.skip_ws();
    let starts_named = cur.peek().is_some_and(|c| c.is_ascii_alphabetic());
    let amp = if starts_named { Complex64::new(1.0, 0.0) } else { cur.amp()? };
    if starts_named || cur.eat('*') {
        let name = cur.word();
        cur.expect('(')?;
        let site = cur.site()?;
        cur.expect(')')?;
        let f = named(name, site).ok_or_else(|| format!("unknown function '{name}'"))?;
        return Ok(f.scaled(amp));
    }
    let mut modes = Vec::new();
    if cur.eat('@') {
        loop {
            let site = cur.site()?;
            cur.expect(':')?;
            cur.expect('(')?;
            let m = cur.integer()?;
            cur.expect(',')?;
            let n = cur.integer()?;
            cur.expect(')')?;
            modes.push((site, m, n));
            if !cur.eat(',') {
                break;
            }
        }
    }
    let k = Frequency::new(modes).map_err(|e| e.to_string())?;
    Ok(TrigObservable::from_terms([(k, amp)]))
}

pub fn parse_trig(src: &str) -> Result<TrigObservable, String> {
    let mut cur = Cursor { src, pos: 0 };
    let mut f = TrigObservable::zero();
    loop {
        f = f.add(&term(&mut cur)?);
        if !cur.eat(';') {
            break;
        }
    }
    cur.skip_ws();
    if cur.pos != src.len() {
        return Err(cur.error("unexpected trailing input"));
    }
    Ok(f)
}

/// Inverse of [`parse_trig`] in canonical term order; zero prints as `0`.
pub fn format_trig(f: &TrigObservable) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let terms: Vec<String> = f
        .coefficients()
        .iter()
        .map(|(k, c)| {
            let amp = if c.im == 0.0 { format!("{}", c.re) } else { format!("({},{})", c.re, c.im) };
            if k.is_zero() {
                amp
            } else {
                let modes: Vec<String> = k.modes().iter().map(|md| format!("{}:({},{})", md.site, md.m, md.n)).collect();
                format!("{amp} @ {}", modes.join(", "))
            }
        })
        .collect();
    terms.join("; ")
}
