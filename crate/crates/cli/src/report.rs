use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Suite {
    pub name: String,
    pub status: Status,
    pub checks: usize,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
}

impl Suite {
    pub fn from_failures(name: &str, checks: usize, detail: String, witnesses: Vec<String>) -> Self {
        let status = if witnesses.is_empty() { Status::Pass } else { Status::Fail };
        Suite { name: name.into(), status, checks, detail, witnesses }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Suite { name: name.into(), status: Status::Skipped, checks: 0, detail: detail.into(), witnesses: Vec::new() }
    }
}

/// A titled table of strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: &str, headers: &[&str]) -> Self {
        Table { title: title.into(), headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Left-aligned columns separated by two spaces.
    pub fn render(&self) -> String {
        let cols = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate().take(cols) {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let fmt_row = |cells: &[String]| {
            let mut line = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if i + 1 == cells.len() {
                    line.push_str(cell);
                } else {
                    let pad = widths[i] - cell.chars().count();
                    line.push_str(cell);
                    line.push_str(&" ".repeat(pad + 2));
                }
            }
            line
        };
        let mut out = format!("{}\n{}\n", self.title, fmt_row(&self.headers));
        for row in &self.rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub prime: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<Suite>,
}

impl Report {
    pub fn new(command: &str, prime: u32, seed: u64) -> Self {
        Report { command: command.into(), prime, seed, summary: Vec::new(), tables: Vec::new(), suites: Vec::new() }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.status != Status::Fail)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => self.render_text(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command  {}\nprime    {}\nseed     {}", self.command, self.prime, self.seed);
        if !self.summary.is_empty() {
            let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            out.push('\n');
            for (k, v) in &self.summary {
                let _ = writeln!(out, "{k:width$}  {v}");
            }
        }
        for t in &self.tables {
            out.push('\n');
            out.push_str(&t.render());
        }
        if !self.suites.is_empty() {
            let mut t = Table::new("suites", &["suite", "status", "checks", "detail"]);
            for s in &self.suites {
                t.push(vec![s.name.clone(), s.status.label().into(), s.checks.to_string(), s.detail.clone()]);
            }
            out.push('\n');
            out.push_str(&t.render());
            for s in self.suites.iter().filter(|s| !s.witnesses.is_empty()) {
                let _ = writeln!(out, "\n{} witnesses", s.name);
                for w in &s.witnesses {
                    let _ = writeln!(out, "  {w}");
                }
            }
        }
        out
    }
}
