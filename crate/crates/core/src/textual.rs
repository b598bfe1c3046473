// SPDX-License-Identifier: Apache-2.0

//! Helpers for the one-line `kind:key=value,...` spec syntax. Offsets are
//! tracked so parse errors can point at the offending byte.

use crate::error::{Error, Result};

pub(crate) fn err(input: &str, position: usize, message: impl Into<String>) -> Error {
    Error::Parse { input: input.to_string(), position, message: message.into() }
}

/// Splits `kind:rest`. A bare `kind` yields an empty rest.
pub(crate) fn split_kind(s: &str, offset: usize) -> Result<(&str, &str, usize)> {
    match s.find(':') {
        Some(i) => Ok((s[..i].trim(), &s[i + 1..], offset + i + 1)),
        None if !s.is_empty() => Ok((s.trim(), "", offset + s.len())),
        None => Err(err(s, offset, "empty spec")),
    }
}

/// Splits on commas that are not nested inside `[...]`.
pub(crate) fn split_top(s: &str, offset: usize) -> Result<Vec<(&str, usize)>> {
    let mut out = Vec::new();
    if s.trim().is_empty() {
        return Ok(out);
    }
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(err(s, offset + i, "unbalanced `]`"));
                }
            }
            ',' if depth == 0 => {
                out.push((&s[start..i], offset + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(err(s, offset + s.len(), "unbalanced `[`"));
    }
    out.push((&s[start..], offset + start));
    Ok(out)
}

/// Strips one pair of enclosing brackets, if present.
pub(crate) fn unbracket(s: &str, offset: usize) -> (&str, usize) {
    let t = s.trim();
    let lead = s.len() - s.trim_start().len();
    if t.starts_with('[') && t.ends_with(']') && t.len() >= 2 {
        (&t[1..t.len() - 1], offset + lead + 1)
    } else {
        (t, offset + lead)
    }
}

pub(crate) fn number(s: &str, offset: usize) -> Result<f64> {
    let t = s.trim();
    let lead = s.len() - s.trim_start().len();
    let v = match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t.parse::<f64>(),
    };
    v.map_err(|_| err(s, offset + lead, format!("expected a number, found `{t}`")))
}

/// `key=value` arguments of one spec level. A key named `base` swallows the
/// remainder of the string so nested specs need no brackets.
pub(crate) struct Args<'a> {
    input: &'a str,
    offset: usize,
    pairs: Vec<(&'a str, &'a str, usize)>,
}

impl<'a> Args<'a> {
    pub(crate) fn parse(s: &'a str, offset: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut rest = s;
        let mut rest_off = offset;
        while !rest.trim().is_empty() {
            let eq = rest.find('=').ok_or_else(|| err(s, rest_off, "expected key=value"))?;
            let key = rest[..eq].trim();
            let after = &rest[eq + 1..];
            let val_off = rest_off + eq + 1;
            if key == "base" {
                pairs.push((key, after, val_off));
                break;
            }
            let mut depth = 0i32;
            let mut end = after.len();
            for (i, ch) in after.char_indices() {
                match ch {
                    '[' => depth += 1,
                    ']' => depth -= 1,
                    ',' if depth == 0 => {
                        end = i;
                        break;
                    }
                    _ => {}
                }
            }
            pairs.push((key, &after[..end], val_off));
            if end == after.len() {
                break;
            }
            rest = &after[end + 1..];
            rest_off = val_off + end + 1;
        }
        Ok(Args { input: s, offset, pairs })
    }

    pub(crate) fn raw(&self, key: &str) -> Option<(&'a str, usize)> {
        self.pairs.iter().find(|p| p.0 == key).map(|p| (p.1, p.2))
    }

    pub(crate) fn get(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|(v, off)| number(v, off)).transpose()
    }

    pub(crate) fn require(&self, key: &str) -> Result<f64> {
        self.get(key)?.ok_or_else(|| err(self.input, self.offset, format!("missing `{key}`")))
    }

    /// Rejects keys outside `allowed`.
    pub(crate) fn finish(&self, allowed: &[&str]) -> Result<()> {
        for (k, _, off) in &self.pairs {
            if !allowed.contains(k) {
                return Err(err(self.input, off.saturating_sub(k.len() + 1), format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}
