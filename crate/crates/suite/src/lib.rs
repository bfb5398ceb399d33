//! Reporting helpers for the acceptance target: one line per criterion and
//! a process exit status that reflects every result.

use std::time::{Duration, Instant};

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({}) [{:.1} s]",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Accumulates outcomes and prints each as it completes.
#[derive(Debug, Default)]
pub struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    /// Runs `check`, which returns pass/fail and a short measurement summary.
    /// A panic inside `check` counts as a failure.
    pub fn run(&mut self, id: u8, title: &'static str, check: impl FnOnce() -> (bool, String)) {
        let start = Instant::now();
        let (pass, detail) = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let o = Outcome { id, title, pass, detail, elapsed: start.elapsed() };
        println!("{}", o.line());
        self.outcomes.push(o);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failed(&self) -> Vec<u8> {
        self.outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect()
    }
}
