//! Line-of-code counting and the design-effort ratios.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentStyle {
    /// `--` line comments.
    Vhdl,
    /// `//` line and `/* */` block comments.
    Tydi,
}

/// Counts lines that hold something other than whitespace and comments.
pub fn loc_count(text: &str, style: CommentStyle) -> usize {
    let mut in_block = false;
    let mut count = 0;
    for line in text.lines() {
        let mut code = false;
        let mut in_str = false;
        let b = line.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i];
            let next = b.get(i + 1).copied();
            if in_block {
                if c == b'*' && next == Some(b'/') {
                    in_block = false;
                    i += 2;
                } else {
                    i += 1;
                }
                continue;
            }
            if in_str {
                code = true;
                if c == b'\\' && style == CommentStyle::Tydi {
                    i += 2;
                    continue;
                }
                if c == b'"' {
                    in_str = false;
                }
                i += 1;
                continue;
            }
            match (style, c, next) {
                (CommentStyle::Vhdl, b'-', Some(b'-')) | (CommentStyle::Tydi, b'/', Some(b'/')) => break,
                (CommentStyle::Tydi, b'/', Some(b'*')) => {
                    in_block = true;
                    i += 2;
                    continue;
                }
                (_, b'"', _) => {
                    in_str = true;
                    code = true;
                }
                (_, c, _) if !c.is_ascii_whitespace() => code = true,
                _ => {}
            }
            i += 1;
        }
        if code {
            count += 1;
        }
    }
    count
}

/// A non-negative ratio rounded half-up to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ratio2 {
    pub hundredths: u64,
}

impl Ratio2 {
    /// `num / den` rounded half-up to 0.01, computed exactly; `None` when
    /// `den` is 0.
    pub fn new(num: u64, den: u64) -> Option<Ratio2> {
        if den == 0 {
            return None;
        }
        let (num, den) = (num as u128, den as u128);
        let h = (200 * num + den) / (2 * den);
        Some(Ratio2 { hundredths: h as u64 })
    }

    pub fn as_f64(self) -> f64 {
        self.hundredths as f64 / 100.0
    }
}

impl fmt::Display for Ratio2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.hundredths / 100, self.hundredths % 100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocReport {
    pub query: u64,
    pub fletcher: u64,
    pub stdlib: u64,
    pub total: u64,
    pub vhdl: u64,
    pub r_q: Ratio2,
    pub r_a: Ratio2,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocError {
    #[error("query logic has 0 lines of code; R_q is undefined")]
    EmptyQuery,
}

/// `LoC_a = q + f + s`, `R_q = vhdl / q`, `R_a = vhdl / LoC_a`.
pub fn loc_metrics(query: u64, fletcher: u64, stdlib: u64, vhdl: u64) -> Result<LocReport, LocError> {
    let total = query + fletcher + stdlib;
    let r_q = Ratio2::new(vhdl, query).ok_or(LocError::EmptyQuery)?;
    let r_a = Ratio2::new(vhdl, total).ok_or(LocError::EmptyQuery)?;
    Ok(LocReport {
        query,
        fletcher,
        stdlib,
        total,
        vhdl,
        r_q,
        r_a,
    })
}

impl fmt::Display for LocReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LoC_q    {}", self.query)?;
        writeln!(f, "LoC_f    {}", self.fletcher)?;
        writeln!(f, "LoC_s    {}", self.stdlib)?;
        writeln!(f, "LoC_a    {}", self.total)?;
        writeln!(f, "LoC_vhdl {}", self.vhdl)?;
        writeln!(f, "R_q      {}", self.r_q)?;
        write!(f, "R_a      {}", self.r_a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting() {
        assert_eq!(loc_count("", CommentStyle::Vhdl), 0);
        let v = "-- a\n-- b\n\n  -- c\nentity x is\nend entity x; -- trailing\n";
        assert_eq!(loc_count(v, CommentStyle::Vhdl), 2);
        let t = "// a\n/* b\n c */\ntype X = Bit(8); /* d */\n/* e */ type Y = X;\nstring s = \"//\";\n";
        assert_eq!(loc_count(t, CommentStyle::Tydi), 3);
    }

    #[test]
    fn ratios() {
        let r = loc_metrics(284, 166, 151, 7547).unwrap();
        assert_eq!(r.total, 601);
        assert_eq!(r.r_q.to_string(), "26.57");
        assert_eq!(r.r_a.to_string(), "12.56");
        assert_eq!(Ratio2::new(1, 8).unwrap().to_string(), "0.13");
        assert_eq!(Ratio2::new(1, 200).unwrap().to_string(), "0.01");
        assert_eq!(loc_metrics(0, 1, 1, 5), Err(LocError::EmptyQuery));
    }
}
