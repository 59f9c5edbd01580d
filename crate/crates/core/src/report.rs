//! Verdicts and deterministic text reports.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Conjunction: any failure dominates, then any inconclusive part.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Holds,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Header (query, bounds, verdict), body (evidence), footnotes (caveats),
/// plus named text attachments such as trace files. Rendering depends on
/// nothing but these fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub query: String,
    pub bounds: Vec<(String, String)>,
    pub verdict: Verdict,
    pub qualifier: Option<String>,
    pub body: Vec<String>,
    pub notes: Vec<String>,
    pub attachments: Vec<(String, String)>,
}

impl CheckReport {
    pub fn new(query: impl Into<String>) -> CheckReport {
        CheckReport {
            query: query.into(),
            bounds: Vec::new(),
            verdict: Verdict::Holds,
            qualifier: None,
            body: Vec::new(),
            notes: Vec::new(),
            attachments: Vec::new(),
        }
    }

    pub fn bound(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.bounds.push((k.to_string(), v.to_string()));
        self
    }

    pub fn fail(&mut self, line: impl Into<String>) {
        self.verdict = Verdict::Fails;
        self.body.push(line.into());
    }

    pub fn line(&mut self, line: impl Into<String>) {
        self.body.push(line.into());
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn attach(&mut self, name: impl Into<String>, content: impl Into<String>) {
        self.attachments.push((name.into(), content.into()));
    }

    /// Folds a sub-report in, keeping its evidence under a prefix.
    pub fn absorb(&mut self, sub: &CheckReport) {
        self.verdict = self.verdict.and(sub.verdict);
        self.body
            .push(format!("[{}] {}", sub.query, sub.verdict_text()));
        self.body.extend(sub.body.iter().map(|l| format!("  {l}")));
        for n in &sub.notes {
            if !self.notes.contains(n) {
                self.notes.push(n.clone());
            }
        }
        self.attachments.extend(sub.attachments.iter().cloned());
    }

    pub fn verdict_text(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{} ({q})", self.verdict),
            None => self.verdict.to_string(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("query: {}\n", self.query));
        if !self.bounds.is_empty() {
            let b: Vec<String> = self
                .bounds
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            s.push_str(&format!("bounds: {}\n", b.join(" ")));
        }
        s.push_str(&format!("verdict: {}\n", self.verdict_text()));
        if !self.body.is_empty() {
            s.push('\n');
            for l in &self.body {
                s.push_str(l);
                s.push('\n');
            }
        }
        if !self.notes.is_empty() {
            s.push('\n');
            for (i, n) in self.notes.iter().enumerate() {
                s.push_str(&format!("[{}] {n}\n", i + 1));
            }
        }
        for (name, content) in &self.attachments {
            s.push_str(&format!("\n--- {name}\n{content}"));
            if !content.ends_with('\n') {
                s.push('\n');
            }
        }
        s
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_conjunction() {
        use Verdict::*;
        assert_eq!(Holds.and(Holds), Holds);
        assert_eq!(Holds.and(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.and(Fails), Fails);
        assert_eq!(Fails.and(Holds), Fails);
    }

    #[test]
    fn rendering_is_plain() {
        let mut r = CheckReport::new("demo");
        r.bound("max_sigma", 3);
        r.fail("witness");
        r.note("caveat");
        assert_eq!(
            r.render(),
            "query: demo\nbounds: max_sigma=3\nverdict: fails\n\nwitness\n\n[1] caveat\n"
        );
    }
}
