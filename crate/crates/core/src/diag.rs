//! Source locations and structured diagnostics.

use std::cmp::Ordering;
use std::fmt;

/// Opaque identifier of a loaded source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FileId(pub u32);

/// A location in a source file. Lines and columns are 1-based, the length
/// is counted in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: FileId,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(file: FileId, line: u32, column: u32, length: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourceSpan {
            file,
            line,
            column,
            length,
        }
    }

    /// Span covering `self` up to the end of `other`, when both sit on the
    /// same line. Otherwise `self` is returned unchanged.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        if self.file == other.file && self.line == other.line && other.column >= self.column {
            SourceSpan {
                length: other.column + other.length - self.column,
                ..self
            }
        } else {
            self
        }
    }
}

impl Default for SourceSpan {
    fn default() -> Self {
        SourceSpan {
            file: FileId(0),
            line: 1,
            column: 1,
            length: 0,
        }
    }
}

/// A single loaded source file.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

/// All source files participating in one compilation.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<String>, text: impl Into<String>) -> FileId {
        let id = FileId(self.files.len() as u32);
        self.files.push(SourceFile {
            path: path.into(),
            text: text.into(),
        });
        id
    }

    pub fn get(&self, id: FileId) -> &SourceFile {
        &self.files[id.0 as usize]
    }

    pub fn path(&self, id: FileId) -> &str {
        self.files
            .get(id.0 as usize)
            .map(|f| f.path.as_str())
            .unwrap_or("<unknown>")
    }

    pub fn find(&self, path: &str) -> Option<FileId> {
        self.files
            .iter()
            .position(|f| f.path == path)
            .map(|i| FileId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = FileId> {
        (0..self.files.len() as u32).map(FileId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// Stable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    /// Syntax error.
    E001,
    /// Unresolved name, import cycle, or index out of bounds.
    E002,
    /// Type mismatch or direction error on a connection.
    E003,
    /// Port not used exactly once.
    E004,
    /// Clock-domain mismatch.
    E005,
    /// Incompatible stream complexity.
    E006,
    /// Compile-time assertion failed.
    E007,
    /// Duplicate binding in one scope.
    E008,
    /// Template arity, kind, or recursion error.
    E009,
    /// Expression evaluation error.
    E010,
    /// Bit-width error.
    E011,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Option<SourceSpan>,
    pub related: Vec<SourceSpan>,
}

impl Diagnostic {
    pub fn error(code: Code, message: impl Into<String>, span: impl Into<Option<SourceSpan>>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span: span.into(),
            related: Vec::new(),
        }
    }

    pub fn with_related(mut self, span: SourceSpan) -> Self {
        self.related.push(span);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Renders `<file>:<line>:<col>: <severity>[<code>]: <message>`.
    pub fn render(&self, sources: &SourceMap) -> String {
        match self.span {
            Some(span) => format!(
                "{}:{}:{}: {}[{}]: {}",
                sources.path(span.file),
                span.line,
                span.column,
                self.severity,
                self.code,
                self.message
            ),
            None => format!("<design>:0:0: {}[{}]: {}", self.severity, self.code, self.message),
        }
    }

    fn sort_key(&self) -> (Option<(FileId, u32, u32)>, Code, &str) {
        (
            self.span.map(|s| (s.file, s.line, s.column)),
            self.code,
            self.message.as_str(),
        )
    }
}

/// Sorts diagnostics by (file, line, column, code, message) and removes exact
/// duplicates.
pub fn sort_diagnostics(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| match a.sort_key().cmp(&b.sort_key()) {
        Ordering::Equal => a.severity.cmp(&b.severity),
        o => o,
    });
    diags.dedup();
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_format() {
        let mut sm = SourceMap::new();
        let f = sm.add("a.td", "type X = Bit(0);");
        let d = Diagnostic::error(Code::E011, "bit width must be at least 1", SourceSpan::new(f, 3, 14, 1));
        assert_eq!(d.render(&sm), "a.td:3:14: error[E011]: bit width must be at least 1");
    }

    #[test]
    fn sorting_is_stable_and_dedups() {
        let s = |l, c| Some(SourceSpan::new(FileId(0), l, c, 1));
        let mut v = vec![
            Diagnostic::error(Code::E004, "b", s(2, 1)),
            Diagnostic::error(Code::E003, "a", s(1, 5)),
            Diagnostic::error(Code::E004, "b", s(2, 1)),
        ];
        sort_diagnostics(&mut v);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].code, Code::E003);
    }
}
